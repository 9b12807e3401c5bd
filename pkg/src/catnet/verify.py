"""Independent checks that a schedule is optimal.

Three routes to the quantum Fisher information matrix are provided:
:func:`catnet.core.analytic_qfim` (closed form), :func:`qfim_generator_sum`
(exact expectation values of the time-integrated generators) and
:func:`qfim_finite_difference` (numerical derivatives of the simulated
state).  Qubit ``j`` is bit ``j`` of the basis-state index (little-endian).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from catnet.core import (
    FunctionCoefficients,
    Gate,
    GateSequence,
    ProtocolSchedule,
    QFIMatrix,
)
from catnet.errors import DimensionMismatch, DimensionTooLarge, SingularJacobian
from catnet.simplex import solve_lp

STATEVECTOR_MAX_D = 14
FD_MAX_D = 12


def _check_dim(d: int, limit: int):
    if d > limit:
        raise DimensionTooLarge(f"d={d} exceeds the dense-simulation limit of {limit}")


def _basis(d: int) -> np.ndarray:
    return np.arange(1 << d, dtype=np.int64)


def _gate_map(g: Gate, x: np.ndarray) -> np.ndarray:
    """Image of basis labels ``x`` under a permutation gate."""
    if g.kind == "X":
        return x ^ (1 << g.target)
    return x ^ (((x >> g.control) & 1) << g.target)


def apply_gates(state: np.ndarray, gates: Iterable[Gate]) -> np.ndarray:
    x = _basis(int(np.log2(state.size)))
    for g in gates:
        # permutation gates are involutions: new[x] = old[g(x)]
        state = state[_gate_map(g, x)]
    return state


def _zvalues(d: int) -> np.ndarray:
    """z[j, x] = +1 if bit j of x is 0 else -1."""
    x = _basis(d)
    return 1 - 2 * ((x[None, :] >> np.arange(d)[:, None]) & 1)


def _evolve_diag(state, zvals, theta, duration):
    energy = 0.5 * (np.asarray(theta) @ zvals)
    return state * np.exp(-1j * duration * energy)


def initial_state(d: int, anchor: int) -> np.ndarray:
    """Anchor in (|0> + |1>)/sqrt(2), every other qubit in |0>."""
    psi = np.zeros(1 << d, dtype=complex)
    psi[0] = psi[1 << anchor] = 1 / np.sqrt(2)
    return psi


def _segments(gates: GateSequence, s: ProtocolSchedule):
    if len(gates.transitions) != len(s) - 1 or gates.d != s.d:
        raise DimensionMismatch("gate sequence does not match the schedule")


def statevector_evolve(
    gates: GateSequence,
    s: ProtocolSchedule,
    theta: Sequence[float],
    t: float | None = None,
    *,
    measure: bool = True,
) -> np.ndarray:
    """Dense simulation of the whole protocol (prep, segments, transitions, measurement)."""
    _check_dim(s.d, STATEVECTOR_MAX_D)
    _segments(gates, s)
    t = s.total_time if t is None else t
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (s.d,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, expected ({s.d},)")
    z = _zvalues(s.d)
    psi = apply_gates(initial_state(s.d, gates.anchor), gates.prep)
    for n, pn in enumerate(s.p):
        psi = _evolve_diag(psi, z, theta, pn * t)
        if n < len(gates.transitions):
            psi = apply_gates(psi, gates.transitions[n])
    if measure:
        psi = apply_gates(psi, gates.measurement)
    return psi


def states_at(
    gates: GateSequence,
    s: ProtocolSchedule,
    theta: Sequence[float],
    times: Sequence[float],
    t: float | None = None,
    psi0: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Probe states at the requested times.

    At a segment boundary both the state before and after the transition
    gates are returned, so the list can be longer than ``times``.
    """
    _check_dim(s.d, STATEVECTOR_MAX_D)
    t = s.total_time if t is None else t
    theta = np.asarray(theta, dtype=float)
    z = _zvalues(s.d)
    psi = apply_gates(initial_state(s.d, gates.anchor), gates.prep) if psi0 is None else psi0
    bounds = np.concatenate([[0.0], np.cumsum(s.p) * t])
    out = []
    for time in sorted(times):
        n = int(np.searchsorted(bounds, time, side="right") - 1)
        n = min(max(n, 0), len(s) - 1)
        cur = psi.copy()
        for m in range(n):
            cur = _evolve_diag(cur, z, theta, s.p[m] * t)
            if m < len(gates.transitions):
                cur = apply_gates(cur, gates.transitions[m])
        cur = _evolve_diag(cur, z, theta, time - bounds[n])
        out.append(cur)
        if n < len(gates.transitions) and np.isclose(time, bounds[n + 1]):
            out.append(apply_gates(cur, gates.transitions[n]))
    return out


def qfim_generator_sum(
    s: ProtocolSchedule, t: float | None = None, gates: GateSequence | None = None
) -> QFIMatrix:
    """Exact QFIM from the integrated generators H_i = -sum_n p_n t W_n^+ g_i W_n.

    W_n is the product of the permutation gates applied before segment n.
    Diagonal evolutions commute with the diagonal g_i, so H_i is diagonal in
    the computational basis and the expectations reduce to weighted sums.
    """
    from catnet.cnot import compile_gates

    _check_dim(s.d, STATEVECTOR_MAX_D)
    gates = compile_gates(s) if gates is None else gates
    _segments(gates, s)
    t = s.total_time if t is None else t
    d = s.d
    psi0 = apply_gates(initial_state(d, gates.anchor), gates.prep)
    prob = np.abs(psi0) ** 2
    x = _basis(d)
    image = x.copy()
    H = np.zeros((d, x.size))
    for n, pn in enumerate(s.p):
        z = 1 - 2 * ((image[None, :] >> np.arange(d)[:, None]) & 1)
        H -= pn * t * 0.5 * z
        if n < len(gates.transitions):
            for g in gates.transitions[n]:
                image = _gate_map(g, image)
    mean = H @ prob
    second = (H * prob) @ H.T
    return QFIMatrix(4.0 * (second - np.outer(mean, mean)))


def qfim_finite_difference(
    gates: GateSequence,
    s: ProtocolSchedule,
    theta: Sequence[float],
    t: float | None = None,
    h: float = 1e-4,
) -> QFIMatrix:
    """F_ij = 4 Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>] by central differences."""
    _check_dim(s.d, FD_MAX_D)
    theta = np.asarray(theta, dtype=float)
    psi = statevector_evolve(gates, s, theta, t)
    derivs = []
    for i in range(s.d):
        e = np.zeros(s.d)
        e[i] = h
        plus = statevector_evolve(gates, s, theta + e, t)
        minus = statevector_evolve(gates, s, theta - e, t)
        derivs.append((plus - minus) / (2 * h))
    D = np.array(derivs)
    overlap = D.conj() @ psi
    G = D.conj() @ D.T - np.outer(overlap, overlap.conj())
    F = 4.0 * G.real
    return QFIMatrix(0.5 * (F + F.T))


@dataclass(frozen=True)
class SaturabilityReport:
    row_residuals: np.ndarray
    lam: np.ndarray
    passed: bool
    tolerance: float

    @property
    def max_residual(self) -> float:
        return float(np.max(self.row_residuals))


def _lambda_minimax(F, fc, t):
    """lambda on the |L|-simplex minimizing max_j |sum_i s_i F_ji lambda_i - alpha'_j t^2|."""
    L = list(fc.L)
    s = np.array([np.sign(fc.alpha_pivot) / np.sign(fc.alpha[i]) for i in L])
    A = F[:, L] * s[None, :]
    b = fc.alpha_prime * t * t
    d, nl = A.shape
    # variables: lambda (nl), eps, u (d), v (d)
    rows = np.zeros((2 * d + 1, nl + 1 + 2 * d))
    rhs = np.zeros(2 * d + 1)
    rows[:d, :nl], rows[:d, nl], rows[:d, nl + 1 : nl + 1 + d], rhs[:d] = A, -1.0, np.eye(d), b
    rows[d : 2 * d, :nl], rows[d : 2 * d, nl] = -A, -1.0
    rows[d : 2 * d, nl + 1 + d :], rhs[d : 2 * d] = np.eye(d), -b
    rows[2 * d, :nl], rhs[2 * d] = 1.0, 1.0
    c = np.zeros(rows.shape[1])
    c[nl] = 1.0
    res = solve_lp(rows, rhs, c)
    lam_L = res.x[:nl]
    lam = np.zeros(fc.d)
    lam[L] = lam_L / lam_L.sum()
    return lam, np.abs(A @ lam[L] - b)


def check_saturability(
    F: QFIMatrix | np.ndarray, fc: FunctionCoefficients, t: float = 1.0, tol: float = 1e-8
) -> SaturabilityReport:
    """Row condition on the QFIM, generalized with lambda weights when |L| > 1."""
    F = np.asarray(F, dtype=float)
    if F.shape != (fc.d, fc.d):
        raise DimensionMismatch("QFIM shape does not match alpha")
    if len(fc.L) == 1:
        lam = np.zeros(fc.d)
        lam[fc.pivot] = 1.0
        resid = np.abs(F[fc.pivot] - fc.alpha_prime * t * t)
    else:
        lam, resid = _lambda_minimax(F, fc, t)
    return SaturabilityReport(resid, lam, bool(np.max(resid) <= tol), tol)


@dataclass(frozen=True)
class BasisTransform:
    beta: np.ndarray
    J_inverse: np.ndarray
    J: np.ndarray


def basis_transform(fc: FunctionCoefficients, lam: Sequence[float]) -> BasisTransform:
    """Jacobian for theta -> (q, q_2, ..., q_d) whose first dual column is beta.

    beta_i = lambda_i sgn(alpha_i) / |alpha_pivot|.  J^-1 has alpha as its first
    row; the other rows are e_j - (beta_j / beta_m) e_m for j != m, where m is
    the pivot (or the first index of L with positive weight).  They span the
    complement orthogonal to beta, so J's first column is beta; with all
    weight on the pivot they are plain unit vectors.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < -1e-12) or abs(lam.sum() - 1) > 1e-9:
        raise ValueError("lambda must lie on the probability simplex")
    if any(lam[i] > 1e-12 for i in range(fc.d) if i not in fc.L):
        raise ValueError("lambda must vanish outside L")
    beta = lam * np.sign(fc.alpha) / abs(fc.alpha_pivot)
    m = fc.pivot if lam[fc.pivot] > 1e-12 else next(i for i in fc.L if lam[i] > 1e-12)
    Jinv = np.zeros((fc.d, fc.d))
    Jinv[0] = fc.alpha
    r = 1
    for j in range(fc.d):
        if j == m:
            continue
        Jinv[r, j] = 1.0
        Jinv[r, m] = -beta[j] / beta[m]
        r += 1
    if abs(np.linalg.det(Jinv)) < 1e-14:
        raise SingularJacobian("basis completion is singular")
    return BasisTransform(beta, Jinv, np.linalg.inv(Jinv))


def transform_to_q_basis(
    F: QFIMatrix | np.ndarray,
    fc: FunctionCoefficients,
    lam: Sequence[float],
    t: float = 1.0,
    tol: float = 1e-8,
) -> tuple[QFIMatrix, dict[str, bool]]:
    F = np.asarray(F, dtype=float)
    bt = basis_transform(fc, lam)
    Fq = bt.J.T @ F @ bt.J
    f11_ok = abs(Fq[0, 0] - t * t / fc.alpha_pivot**2) <= tol
    offdiag = np.abs(Fq[0, 1:])
    offdiag_ok = bool(offdiag.size == 0 or offdiag.max() <= tol * t * t)
    return QFIMatrix(0.5 * (Fq + Fq.T)), {"f11_ok": bool(f11_ok), "offdiag_ok": offdiag_ok}


def is_cat_like(psi: np.ndarray, fc: FunctionCoefficients, tol: float = 1e-9) -> bool:
    """Exactly two basis amplitudes of modulus 1/sqrt(2), unbiased on every qubit in L."""
    mags = np.abs(psi)
    big = np.flatnonzero(mags > tol)
    if big.size != 2 or np.any(np.abs(mags[big] - 1 / np.sqrt(2)) > tol):
        return False
    z = _zvalues(fc.d)
    prob = mags**2
    return all(abs(z[i] @ prob) <= tol for i in fc.L)


def check_probe_form(
    gates: GateSequence,
    s: ProtocolSchedule,
    theta: Sequence[float],
    sample_times: Sequence[float] | None = None,
    t: float | None = None,
    psi0: np.ndarray | None = None,
) -> bool:
    """Lemma-1 probe structure at the sampled times (default: every segment boundary)."""
    t = s.total_time if t is None else t
    if sample_times is None:
        sample_times = np.concatenate([[0.0], np.cumsum(s.p) * t])
    states = states_at(gates, s, theta, sample_times, t, psi0=psi0)
    return all(is_cat_like(psi, s.fc) for psi in states)


def probabilistic_bound(N_bar: int, t: float = 1.0) -> float:
    """Stationary value t^2 / N^2 of sum p_n t_n^2 on the two simplices (time-independent protocols)."""
    if N_bar < 1:
        raise ValueError("N_bar must be at least 1")
    return t * t / N_bar**2


def probabilistic_objective(p: np.ndarray, tn: np.ndarray) -> np.ndarray:
    """sum_n p_n t_n^2 for rows of allocations."""
    return np.sum(np.asarray(p) * np.asarray(tn) ** 2, axis=-1)


def sample_allocations(N_bar: int, t: float, samples: int, rng: np.random.Generator):
    """Uniform samples of (p, t_n) from the simplices sum p = 1 and sum t_n = t."""
    p = rng.dirichlet(np.ones(N_bar), size=samples)
    tn = t * rng.dirichlet(np.ones(N_bar), size=samples)
    return p, tn


def verify_report(
    s: ProtocolSchedule,
    t: float | None = None,
    method: str = "analytic",
    tol: float = 1e-8,
    theta: Sequence[float] | None = None,
) -> dict:
    """Saturability, q-basis and probe-form checks bundled as the verify report document."""
    from catnet.cnot import compile_gates
    from catnet.core import analytic_qfim

    t = s.total_time if t is None else t
    methods = ["analytic", "generator", "fd"] if method == "all" else [method]
    gates = compile_gates(s)
    if theta is None:
        theta = np.random.default_rng(0).uniform(-1, 1, s.d)
    qfims = {}
    for m in methods:
        if m == "analytic":
            qfims[m] = np.asarray(analytic_qfim(s, t))
        elif m == "generator":
            qfims[m] = np.asarray(qfim_generator_sum(s, t, gates))
        elif m == "fd":
            qfims[m] = np.asarray(qfim_finite_difference(gates, s, theta, t))
        else:
            raise ValueError(f"unknown method {m!r}")
    F = qfims[methods[0]]
    rep = check_saturability(F, s.fc, t, tol)
    _, cond = transform_to_q_basis(F, s.fc, rep.lam, t, tol)
    agree = True
    if len(qfims) > 1:
        scale = max(1.0, float(np.max(np.abs(F))))
        agree = all(np.max(np.abs(G - F)) <= 1e-6 * scale for G in qfims.values())
    probe_ok = check_probe_form(gates, s, theta, t=t) if s.d <= STATEVECTOR_MAX_D else None
    passed = bool(rep.passed and cond["f11_ok"] and cond["offdiag_ok"] and agree)
    return {
        "passed": passed,
        "row_residuals": [float(v) for v in rep.row_residuals],
        "lambda": [float(v) for v in rep.lam],
        "f11_ok": cond["f11_ok"],
        "offdiag_ok": cond["offdiag_ok"],
        "qfim": [[float(v) for v in row] for row in F],
        "method": method,
        "methods_agree": agree,
        "probe_form_ok": probe_ok,
        "t": t,
        "tolerance": tol,
    }
