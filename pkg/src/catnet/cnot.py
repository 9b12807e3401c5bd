"""CNOT accounting, family ordering, and the constructive protocols.

Moving between consecutive families costs one CNOT for every qubit that
enters or leaves the entangled support; sign flips inside the support are
single-qubit X gates and cost nothing.  All CNOTs are controlled by the
pivot qubit (the *anchor*), which every admissible family contains.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from catnet import kernels
from catnet.core import (
    SCHEDULE_TOL,
    FunctionCoefficients,
    GateSequence,
    ProtocolSchedule,
    StateFamily,
    cnot,
    normalize,
    xgate,
)
from catnet.errors import DimensionMismatch, GreedyFailure, PivotNotInSupport, TooManyFamilies
from catnet.solver import NON_ECHOED, random_vertex_schedule

BRUTE_MAX = 10
HELD_KARP_MAX = 20


@dataclass(frozen=True)
class CostBreakdown:
    prep: int
    intermediate: int
    measurement: int

    @property
    def total(self) -> int:
        return self.prep + self.intermediate + self.measurement


@dataclass(frozen=True)
class GreedyTrace:
    steps: tuple[tuple[tuple[int, ...], float], ...]  # (active set, elapsed fraction after step)
    residual: np.ndarray


def transition_cost(a: StateFamily, b: StateFamily) -> int:
    if a.d != b.d:
        raise DimensionMismatch("families have different dimensions")
    return len(a.support ^ b.support)


def protocol_cost(
    s: ProtocolSchedule, include_prep: bool = True, include_meas: bool = True
) -> CostBreakdown:
    fams = s.families
    inter = sum(transition_cost(a, b) for a, b in zip(fams, fams[1:]))
    prep = fams[0].weight - 1 if include_prep else 0
    meas = fams[-1].weight - 1 if include_meas else 0
    return CostBreakdown(prep, inter, meas)


def _ordering_inputs(s: ProtocolSchedule, include_prep: bool, include_meas: bool):
    fams = s.families
    n = len(fams)
    dist = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = transition_cost(fams[i], fams[j])
    w = np.array([f.weight - 1 for f in fams], dtype=np.int64)
    start = w if include_prep else np.zeros(n, dtype=np.int64)
    end = w if include_meas else np.zeros(n, dtype=np.int64)
    return dist, start, end


def optimal_ordering(
    s: ProtocolSchedule,
    method: str = "held_karp",
    include_prep: bool = False,
    include_meas: bool = False,
) -> ProtocolSchedule:
    """Reorder families to minimize CNOTs (an open-path TSP on support distances).

    By default only intermediate gates count; the flags add the preparation
    and measurement blocks to the objective.
    """
    method = method.replace("-", "_")
    n = len(s)
    limit = {"brute": BRUTE_MAX, "held_karp": HELD_KARP_MAX}.get(method)
    if limit is None:
        raise ValueError(f"unknown ordering method {method!r}")
    if n > limit:
        raise TooManyFamilies(f"{n} families exceed the {method} limit of {limit}")
    if n <= 1:
        return s
    dist, start, end = _ordering_inputs(s, include_prep, include_meas)
    solve = kernels.brute_order if method == "brute" else kernels.held_karp_order
    _, order = solve(dist, start, end)
    return s.reordered(order)


def _sorted_nonzero(fc: FunctionCoefficients) -> list[int]:
    return sorted(fc.nonzero, key=lambda j: (-abs(fc.alpha[j]), j))


def disentangling_protocol(fc: FunctionCoefficients | Sequence[float]) -> ProtocolSchedule:
    """Nested supports, shrinking from the full support down to the pivot alone."""
    if not isinstance(fc, FunctionCoefficients):
        fc = normalize(fc)
    order = _sorted_nonzero(fc)
    a = np.abs(fc.alpha_prime[order])
    m = len(order)
    signs = fc.signs
    fams, p = [], []
    for n in range(m):
        size = m - n
        tau = [0] * fc.d
        for j in order[:size]:
            tau[j] = int(signs[j])
        nxt = a[size] if size < m else 0.0
        fams.append(StateFamily(tuple(tau)))
        p.append(a[size - 1] - nxt)
    return ProtocolSchedule(fc, tuple(fams), p)


def echoing_protocol(fc: FunctionCoefficients | Sequence[float]) -> ProtocolSchedule:
    """Full-weight families; the n-th flips the n - 1 smallest-magnitude qubits."""
    if not isinstance(fc, FunctionCoefficients):
        fc = normalize(fc)
    order = _sorted_nonzero(fc)
    a = np.abs(fc.alpha_prime[order])
    m = len(order)
    signs = fc.signs
    fams, p = [], []
    for n in range(m):
        flipped = set(order[m - n :]) if n else set()
        tau = [0] * fc.d
        for j in order:
            tau[j] = -int(signs[j]) if j in flipped else int(signs[j])
        fams.append(StateFamily(tuple(tau)))
        p.append((1.0 + a[m - 1]) / 2 if n == 0 else (a[m - n - 1] - a[m - n]) / 2)
    return ProtocolSchedule(fc, tuple(fams), p)


def greedy_protocol(
    fc: FunctionCoefficients | Sequence[float],
) -> tuple[ProtocolSchedule, GreedyTrace]:
    """Build up each qubit's full sensitivity in order of increasing |alpha_j|.

    The active set always holds ``L`` plus the ``k - |L|`` smallest unfinished
    requirements.  Each step lasts until the smallest active requirement is
    met; that qubit is disentangled for good and the next-smallest unstarted
    qubit joins.  The protocol ends when the pivot's time runs out, which can
    leave requirements unmet: then :class:`GreedyFailure` is raised.
    """
    if not isinstance(fc, FunctionCoefficients):
        fc = normalize(fc)
    k = fc.k
    r = np.abs(fc.alpha) / fc.inf_norm
    signs = fc.signs
    pinned = list(fc.L)
    queue = sorted((j for j in fc.nonzero if j not in fc.L), key=lambda j: (r[j], j))
    active = set(pinned)
    while queue and len(active) < k:
        active.add(queue.pop(0))

    fams, p, steps = [], [], []
    elapsed = 0.0
    while True:
        dur = min(r[j] for j in active)
        tau = [0] * fc.d
        for j in active:
            tau[j] = int(signs[j])
        fams.append(StateFamily(tuple(tau)))
        p.append(dur)
        for j in active:
            r[j] -= dur
        elapsed += dur
        steps.append((tuple(sorted(active)), elapsed))
        if r[fc.pivot] <= 1e-12:
            r[list(active)] = np.maximum(r[list(active)], 0.0)
            for j in pinned:
                r[j] = 0.0
            break
        done = [j for j in active if r[j] <= 1e-12 and j not in pinned]
        for j in done:
            r[j] = 0.0
            active.discard(j)
        while queue and len(active) < k:
            active.add(queue.pop(0))

    trace = GreedyTrace(tuple(steps), r.copy())
    if np.max(r) > SCHEDULE_TOL:
        worst = int(np.argmax(r))
        raise GreedyFailure(
            f"pivot time exhausted with qubit {worst} short by {r[worst]:.3g}",
            residuals=r.copy(),
            trace=trace,
        )
    p = np.array(p)
    return ProtocolSchedule(fc, tuple(fams), p / p.sum()), trace


def compile_gates(s: ProtocolSchedule) -> GateSequence:
    """X/CNOT realization of a schedule, anchored on the pivot qubit."""
    anchor = s.fc.pivot
    for f in s.families:
        if f.tau[anchor] != 1:
            raise PivotNotInSupport(f"family {f.tau} does not contain the anchor with sign +1")

    def entangle(j, v):
        return [cnot(anchor, j)] + ([xgate(j)] if v == -1 else [])

    def disentangle(j, v):
        return ([xgate(j)] if v == -1 else []) + [cnot(anchor, j)]

    first, last = s.families[0], s.families[-1]
    prep = [cnot(anchor, j) for j in sorted(first.support - {anchor})]
    prep += [xgate(j) for j in sorted(first.support) if first.tau[j] == -1]

    transitions = []
    for a, b in zip(s.families, s.families[1:]):
        block = []
        for j in sorted(a.support - b.support):
            block += disentangle(j, a.tau[j])
        for j in sorted(b.support - a.support):
            block += entangle(j, b.tau[j])
        for j in sorted(a.support & b.support):
            if a.tau[j] != b.tau[j]:
                block.append(xgate(j))
        transitions.append(tuple(block))

    meas = []
    for j in sorted(last.support - {anchor}):
        meas += disentangle(j, last.tau[j])
    return GateSequence(s.d, anchor, tuple(prep), tuple(transitions), tuple(meas))


# --- Figure-1 style benchmark ----------------------------------------------------

BENCH_COLUMNS = ("d", "instance", "seed", "method", "cnot_intermediate", "cnot_total", "failed")


def instance_seed(seed: int, d: int, instance: int) -> int:
    return (int(seed) ^ (d * 2**40 + instance)) & (2**64 - 1)


def random_instance(d: int, seed: int) -> FunctionCoefficients:
    """Uniform (0, 1) coefficients with the first forced to 1 (the pivot)."""
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, 1.0, d)
    alpha[0] = 1.0
    return normalize(alpha)


def _order_for_bench(s: ProtocolSchedule) -> ProtocolSchedule:
    return optimal_ordering(s, "brute" if len(s) <= BRUTE_MAX else "held_karp")


def _bench_one(args):
    d, instance, seed, greedy_retries = args
    iseed = instance_seed(seed, d, instance)
    fc = random_instance(d, iseed)
    rows = []
    s = _order_for_bench(random_vertex_schedule(fc, fc.k, NON_ECHOED, seed=iseed))
    c = protocol_cost(s)
    rows.append(dict(d=d, instance=instance, seed=iseed, method="random_vertex",
                     cnot_intermediate=c.intermediate, cnot_total=c.total, failed=False))
    # failed greedy draws are replaced by fresh instances, up to greedy_retries times
    for attempt in range(greedy_retries + 1):
        gseed = iseed if attempt == 0 else iseed ^ attempt
        gfc = fc if attempt == 0 else random_instance(d, gseed)
        try:
            g, _ = greedy_protocol(gfc)
        except GreedyFailure:
            continue
        c = protocol_cost(_order_for_bench(g))
        rows.append(dict(d=d, instance=instance, seed=gseed, method="greedy",
                         cnot_intermediate=c.intermediate, cnot_total=c.total, failed=False))
        return rows
    rows.append(dict(d=d, instance=instance, seed=iseed, method="greedy",
                     cnot_intermediate=None, cnot_total=None, failed=True))
    return rows


def cnot_benchmark(
    d_min: int = 3,
    d_max: int = 10,
    instances: int = 20,
    seed: int = 0,
    workers: int = 1,
    greedy_retries: int = 0,
) -> list[dict]:
    """Intermediate CNOT costs of random-vertex and greedy protocols, both optimally ordered.

    With ``greedy_retries > 0`` an instance on which greedy fails is redrawn
    (seed ``instance_seed ^ attempt``) so the greedy rows describe
    non-failing instances; the row's ``seed`` column records the draw used.

    Rows come back ordered by (d, instance, method) regardless of ``workers``.
    """
    if not 1 <= d_min <= d_max:
        raise ValueError("need 1 <= d_min <= d_max")
    jobs = [(d, i, seed, greedy_retries) for d in range(d_min, d_max + 1) for i in range(instances)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_bench_one, jobs))
    else:
        results = [_bench_one(j) for j in jobs]
    return [row for rows in results for row in rows]


def bench_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        out = dict(row)
        out["failed"] = "true" if row["failed"] else "false"
        for key in ("cnot_intermediate", "cnot_total"):
            if out[key] is None:
                out[key] = ""
        w.writerow(out)
    return buf.getvalue()


def fit_exponents(rows: list[dict]) -> dict[str, float]:
    """Slope of log(mean intermediate cost) against log(d), per method (failures skipped)."""
    out = {}
    for method in sorted({r["method"] for r in rows}):
        by_d: dict[int, list[int]] = {}
        for r in rows:
            if r["method"] == method and not r["failed"]:
                by_d.setdefault(r["d"], []).append(r["cnot_intermediate"])
        ds = sorted(d for d, v in by_d.items() if np.mean(v) > 0)
        if len(ds) < 2:
            out[method] = math.nan
            continue
        means = [np.mean(by_d[d]) for d in ds]
        out[method] = float(np.polyfit(np.log(ds), np.log(means), 1)[0])
    return out
