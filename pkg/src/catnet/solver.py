"""Feasibility of ``T^(k) p = alpha', p >= 0`` and its Farkas alternative.

Columns of ``T^(k)`` are admissible families: the rows in ``L`` are pinned to
``sgn(alpha_j)/sgn(alpha_pivot)``, qubits with ``alpha_j = 0`` are never used,
and at most ``k`` qubits are entangled.  In ``non_echoed`` mode each free
entry is further restricted to ``{0, sgn(alpha'_j)}``.

Small instances materialize every column.  Past ``cap`` columns the
restricted master problem is grown by column generation, using
:func:`pricing_oracle` to find the column with the most negative ``tau . y``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from catnet.core import (
    SCHEDULE_TOL,
    FunctionCoefficients,
    ProtocolSchedule,
    StateFamily,
    family_matrix,
    minimum_entanglement_k,
    normalize,
)
from catnet.errors import DimensionMismatch, Infeasible, TooLarge
from catnet.simplex import solve_lp

GENERAL = "general"
NON_ECHOED = "non_echoed"
MODES = (GENERAL, NON_ECHOED)
DEFAULT_CAP = 10**6


def _check_mode(mode: str) -> str:
    mode = mode.replace("-", "_")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


def _free_indices(fc: FunctionCoefficients, pinned: Sequence[int]) -> list[int]:
    pinned = set(pinned)
    return [j for j in range(fc.d) if j not in pinned and fc.alpha[j] != 0]


def _active_rows(fc: FunctionCoefficients) -> list[int]:
    """Rows of the system not already implied by admissibility (pivot row = sum(p) = 1)."""
    return [fc.pivot] + _free_indices(fc, fc.L)


@dataclass(frozen=True)
class ColumnSet:
    columns: tuple[StateFamily, ...]
    mode: str
    k_cap: int

    def __len__(self):
        return len(self.columns)

    def matrix(self) -> np.ndarray:
        return family_matrix(self.columns)


def count_families(fc: FunctionCoefficients, k: int, mode: str = GENERAL) -> int:
    mode = _check_mode(mode)
    budget = k - len(fc.L)
    if budget < 0:
        return 0
    m = len(_free_indices(fc, fc.L))
    per = 2 if mode == GENERAL else 1
    return sum(math.comb(m, w) * per**w for w in range(min(budget, m) + 1))


def enumerate_families(
    fc: FunctionCoefficients, k: int, mode: str = GENERAL, cap: int = DEFAULT_CAP
) -> ColumnSet:
    """Every admissible family of weight <= k.

    Free entries cycle through (1, -1, 0) in general mode and
    (sgn alpha'_j, 0) in non-echoed mode, first free index slowest.
    """
    mode = _check_mode(mode)
    n = count_families(fc, k, mode)
    if n > cap:
        raise TooLarge(f"{n} admissible families exceed the cap of {cap}")
    signs = fc.signs
    base = [0] * fc.d
    for j in fc.L:
        base[j] = int(signs[j])
    free = _free_indices(fc, fc.L)
    budget = k - len(fc.L)
    cols: list[StateFamily] = []
    if budget >= 0:
        choices = [(1, -1, 0) if mode == GENERAL else (int(signs[j]), 0) for j in free]
        for combo in itertools.product(*choices):
            if sum(1 for v in combo if v) > budget:
                continue
            tau = list(base)
            for j, v in zip(free, combo):
                tau[j] = v
            cols.append(StateFamily(tuple(tau)))
    return ColumnSet(tuple(cols), mode, k)


def pricing_oracle(
    y: Sequence[float],
    k: int,
    mode: str,
    fc: FunctionCoefficients,
    pinned: Sequence[int] | None = None,
) -> StateFamily | None:
    """Admissible family minimizing ``tau . y`` (ties to the smallest index).

    ``pinned`` defaults to ``fc.L``; passing ``(fc.pivot,)`` prices over the
    larger set in which only the pivot row is fixed.  Returns ``None`` when
    the cap ``k`` cannot even hold the pinned qubits.
    """
    mode = _check_mode(mode)
    y = np.asarray(y, dtype=float)
    if y.shape != (fc.d,):
        raise DimensionMismatch(f"y has shape {y.shape}, expected ({fc.d},)")
    pinned = tuple(fc.L if pinned is None else pinned)
    budget = k - len(pinned)
    if budget < 0:
        return None
    signs = fc.signs
    tau = [0] * fc.d
    for j in pinned:
        tau[j] = int(signs[j])
    gains = []
    for j in _free_indices(fc, pinned):
        if mode == GENERAL:
            if y[j] != 0:
                gains.append((-abs(y[j]), j, -int(np.sign(y[j]))))
        elif signs[j] * y[j] < 0:
            gains.append((-abs(y[j]), j, int(signs[j])))
    gains.sort()
    for _, j, v in gains[:budget]:
        tau[j] = v
    return StateFamily(tuple(tau))


def _schedule_from_solution(fc, columns, x, total_time=1.0) -> ProtocolSchedule:
    x = np.where(x > 0, x, 0.0)
    return ProtocolSchedule(fc, tuple(columns), x / x.sum(), total_time)


def solve_columns(
    columns: "ColumnSet | Sequence[StateFamily]",
    fc: FunctionCoefficients,
    objective: Sequence[float] | None = None,
) -> np.ndarray:
    """Full-length fraction vector over ``columns`` (zeros kept); raises Infeasible."""
    if isinstance(columns, ColumnSet):
        columns = columns.columns
    if not columns:
        raise Infeasible("no admissible families", phase1_value=1.0)
    rows = _active_rows(fc)
    T = family_matrix(columns)
    res = solve_lp(T[rows], fc.alpha_prime[rows], objective)
    if not res.feasible:
        raise Infeasible(
            f"system has no nonnegative solution (phase-1 value {res.phase1_value:.3g})",
            phase1_value=res.phase1_value,
        )
    x = res.x
    resid = np.max(np.abs(T @ x - fc.alpha_prime))
    if resid > SCHEDULE_TOL:
        raise Infeasible(f"solution residual {resid:.3g} exceeds tolerance", phase1_value=resid)
    return x


def solve_schedule(
    cs: ColumnSet,
    fc: FunctionCoefficients,
    objective: Sequence[float] | None = None,
    total_time: float = 1.0,
) -> ProtocolSchedule:
    x = solve_columns(cs.columns, fc, objective)
    return _schedule_from_solution(fc, cs.columns, x, total_time)


def _ladder_columns(fc: FunctionCoefficients, k: int, mode: str) -> list[StateFamily]:
    """Nested-support starting columns (the disentangling ladder, capped at weight k)."""
    signs = fc.signs
    free = sorted(_free_indices(fc, fc.L), key=lambda j: (-abs(fc.alpha[j]), j))
    budget = k - len(fc.L)
    cols = []
    for w in range(0, min(budget, len(free)) + 1):
        tau = [0] * fc.d
        for j in (*fc.L, *free[:w]):
            tau[j] = int(signs[j])
        cols.append(StateFamily(tuple(tau)))
    return cols


def solve_by_column_generation(
    fc: FunctionCoefficients, k: int, mode: str = GENERAL, max_rounds: int = 100_000
) -> ProtocolSchedule:
    mode = _check_mode(mode)
    if k < len(fc.L):
        raise Infeasible("cap k cannot hold every maximal coefficient", phase1_value=1.0)
    rows = _active_rows(fc)
    b = fc.alpha_prime[rows]
    cols = _ladder_columns(fc, k, mode)
    seen = {c.tau for c in cols}
    for _ in range(max_rounds):
        T = family_matrix(cols)
        res = solve_lp(T[rows], b)
        if res.feasible:
            return _schedule_from_solution(fc, cols, res.x)
        y = np.zeros(fc.d)
        y[rows] = -res.phase1_duals
        tau = pricing_oracle(y, k, mode, fc)
        if tau is None or tau.as_array() @ y >= -1e-12 or tau.tau in seen:
            raise Infeasible(
                f"no improving column (phase-1 value {res.phase1_value:.3g})",
                phase1_value=res.phase1_value,
            )
        cols.append(tau)
        seen.add(tau.tau)
    raise RuntimeError("column generation did not converge")


def random_vertex_schedule(
    fc: FunctionCoefficients, k: int, mode: str = NON_ECHOED, seed: int = 0, cap: int = DEFAULT_CAP
) -> ProtocolSchedule:
    """Vertex of System A(k) minimizing a seeded uniform-random cost over the columns."""
    cs = enumerate_families(fc, k, mode, cap)
    rng = np.random.default_rng(seed)
    cost = rng.random(len(cs))
    return solve_schedule(cs, fc, objective=cost)


@dataclass(frozen=True)
class FarkasCertificate:
    """y with ``tau . y >= 0`` for every admissible column and ``alpha' . y < 0``."""

    y: np.ndarray
    k: int
    mode: str

    def check(self, fc: FunctionCoefficients, tol: float = 1e-9) -> bool:
        """Exact check through the pricing oracle (it returns the minimizing column)."""
        if fc.alpha_prime @ self.y > -1e-6:
            return False
        tau = pricing_oracle(self.y, self.k, self.mode, fc, pinned=(fc.pivot,))
        return tau is None or tau.as_array() @ self.y >= -tol


def farkas_certificate(
    fc: FunctionCoefficients, k: int, mode: str = GENERAL, max_rounds: int = 10_000
) -> FarkasCertificate | None:
    """Minimum-l1 ``y`` solving System B(k), or ``None`` when System A(k) is feasible.

    Cutting-plane search: solve ``min ||y||_1`` s.t. ``alpha'.y = -1`` and
    ``tau.y >= 0`` over the rows found so far, then ask the pricing oracle for
    the most violated family.  Families are priced with only the pivot row
    pinned, so the returned ``y`` also certifies infeasibility against that
    larger family set; both sets share the same feasibility threshold.
    """
    mode = _check_mode(mode)
    d = fc.d
    ap = fc.alpha_prime
    pinned = (fc.pivot,)
    rows: list[np.ndarray] = []
    first = pricing_oracle(np.zeros(d), k, mode, fc, pinned=pinned)
    if first is not None:
        rows.append(first.as_array())
    seen = {tuple(r) for r in rows}
    for _ in range(max_rounds):
        R = len(rows)
        # variables: y+ (d), y- (d), slack s (R)
        A = np.zeros((1 + R, 2 * d + R))
        b = np.zeros(1 + R)
        A[0, :d], A[0, d : 2 * d], b[0] = ap, -ap, -1.0
        for r, tau in enumerate(rows):
            A[1 + r, :d], A[1 + r, d : 2 * d] = tau, -tau
            A[1 + r, 2 * d + r] = -1.0
        c = np.concatenate([np.ones(2 * d), np.zeros(R)])
        res = solve_lp(A, b, c)
        if not res.feasible:
            return None
        y = res.x[:d] - res.x[d : 2 * d]
        tau = pricing_oracle(y, k, mode, fc, pinned=pinned)
        if tau is None or tau.as_array() @ y >= -1e-12:
            return FarkasCertificate(y, k, mode)
        key = tau.tau
        if key in seen:
            # numerically stalled: accept only if the violation is negligible
            if tau.as_array() @ y >= -SCHEDULE_TOL:
                return FarkasCertificate(y, k, mode)
            raise RuntimeError("cutting-plane search stalled")
        rows.append(tau.as_array())
        seen.add(key)
    raise RuntimeError("cutting-plane search did not converge")


def design_protocol(
    fc: FunctionCoefficients | Sequence[float],
    non_echoed: bool = True,
    k: int | None = None,
    objective: Sequence[float] | None = None,
    cap: int = DEFAULT_CAP,
    total_time: float = 1.0,
) -> ProtocolSchedule:
    """Optimal schedule using at most k-partite families (k defaults to the minimum).

    Raises :class:`Infeasible` (with ``certificate`` set) when the caller
    forces ``k`` below the minimum entanglement.
    """
    if not isinstance(fc, FunctionCoefficients):
        fc = normalize(fc)
    k = minimum_entanglement_k(fc) if k is None else int(k)
    mode = NON_ECHOED if non_echoed else GENERAL
    try:
        if count_families(fc, k, mode) <= cap:
            cs = enumerate_families(fc, k, mode, cap)
            s = solve_schedule(cs, fc, objective, total_time)
        else:
            if objective is not None:
                raise TooLarge("a custom objective needs the full column set; raise cap")
            s = solve_by_column_generation(fc, k, mode).with_total_time(total_time)
    except Infeasible as exc:
        exc.certificate = farkas_certificate(fc, k, mode)
        raise
    return s
