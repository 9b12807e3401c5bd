"""Robust phase estimation of q from the single-qubit phase state.

Stage ``j`` runs the protocol for ``M_j = 2**(j-1)`` time units ``delta_t``,
measuring ``nu_j`` times in the x basis and ``nu_j`` times in the y basis.
The stage phases are unwrapped coarse to fine by :func:`combine_stages`.

The prior interval of q is mapped onto the guarded phase window
``[pi/3, 5pi/3)`` rather than the full circle: the combination rule uses a
plain (non-circular) distance, and a truth sitting at the edge of
``[0, 2pi)`` would otherwise be unwrapped to the wrong side about half the
time.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from catnet import kernels
from catnet.core import FunctionCoefficients, ProtocolSchedule
from catnet.errors import PriorViolation

BOUND_CONSTANT = 24.26 * math.pi
PHASE_OFFSET = math.pi / 3
PHASE_SPAN = 4 * math.pi / 3
CSV_COLUMNS = ["K", "t_total", "trials", "mse", "bound", "slope_window"]
SLOPE_WINDOW = 3


def default_nu(K: int) -> list[int]:
    return [2 + 3 * (K - j) for j in range(1, K + 1)]


@dataclass(frozen=True)
class RPEConfig:
    """Stage schedule and prior.

    ``q`` is assumed to lie in ``[q_min, q_min + q_range]``.  ``delta_t`` is
    chosen so that the prior fills :data:`PHASE_SPAN` of phase at ``M = 1``.
    """

    K: int
    nu: tuple[int, ...]
    delta_t: float
    q_range: float
    q_min: float
    alpha_pivot: float

    def __post_init__(self):
        if self.K < 1 or len(self.nu) != self.K:
            raise ValueError("need K >= 1 and one nu per stage")
        if any(int(n) != n or n < 1 for n in self.nu):
            raise ValueError("nu entries must be positive integers")
        if self.delta_t <= 0 or self.q_range <= 0:
            raise ValueError("delta_t and q_range must be positive")

    @classmethod
    def from_prior(
        cls,
        fc: FunctionCoefficients,
        K: int,
        q_range: float,
        q_min: float | None = None,
        nu: Sequence[int] | None = None,
    ) -> "RPEConfig":
        q_min = -q_range / 2 if q_min is None else q_min
        nu = tuple(int(n) for n in (default_nu(K) if nu is None else nu))
        delta_t = PHASE_SPAN * abs(fc.alpha_pivot) / q_range
        return cls(K, nu, delta_t, float(q_range), float(q_min), float(fc.alpha_pivot))

    @property
    def M(self) -> np.ndarray:
        return 2 ** np.arange(self.K, dtype=np.int64)

    @property
    def total_time(self) -> float:
        return 2.0 * self.delta_t * float(np.dot(self.nu, self.M))

    @property
    def r_low(self) -> float:
        """Lower end of q / alpha_pivot over the prior."""
        if self.alpha_pivot > 0:
            return self.q_min / self.alpha_pivot
        return (self.q_min + self.q_range) / self.alpha_pivot

    def in_prior(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.q_min) + self.q_range)
        return (q >= self.q_min - tol) & (q <= self.q_min + self.q_range + tol)

    def phase_of(self, q) -> np.ndarray:
        """Phi in [pi/3, 5pi/3] for q in the prior."""
        return PHASE_OFFSET + (np.asarray(q, dtype=float) / self.alpha_pivot - self.r_low) * self.delta_t

    def q_of(self, Phi) -> np.ndarray:
        q = self.alpha_pivot * (self.r_low + (np.asarray(Phi, dtype=float) - PHASE_OFFSET) / self.delta_t)
        return np.clip(q, self.q_min, self.q_min + self.q_range)

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "M": [int(m) for m in self.M],
            "nu": list(self.nu),
            "delta_t": self.delta_t,
            "q_range": self.q_range,
            "q_min": self.q_min,
            "alpha_pivot": self.alpha_pivot,
            "phase_offset": PHASE_OFFSET,
            "total_time": self.total_time,
        }


@dataclass
class RPEResult:
    q_hat: float
    stage_estimates: list[float]
    trials: int
    mse: float
    bound: float
    extra: dict = field(default_factory=dict)


def heisenberg_bound(inf_norm: float, t: float) -> float:
    return (BOUND_CONSTANT * inf_norm / t) ** 2


def stage_probabilities(Phi: float, M: int) -> tuple[float, float]:
    """Zero-outcome probabilities of the x and y measurements after phase M*Phi."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return (1 + math.cos(M * Phi)) / 2, (1 + math.sin(M * Phi)) / 2


def estimate_from_frequencies(f0x, f0y):
    """atan2(2 f0y - 1, 2 f0x - 1) mapped into [0, 2 pi)."""
    return np.mod(np.arctan2(2 * np.asarray(f0y) - 1, 2 * np.asarray(f0x) - 1), 2 * np.pi)


def stage_sample(Phi: float, M: int, nu: int, rng: np.random.Generator) -> float:
    if nu < 1:
        raise ValueError("nu must be >= 1")
    px, py = stage_probabilities(Phi, M)
    fx = rng.binomial(nu, px) / nu
    fy = rng.binomial(nu, py) / nu
    return float(estimate_from_frequencies(fx, fy))


def combine_stages(phi_tildes: Sequence[float], M: Sequence[int]) -> float:
    """Coarse-to-fine unwrapping; returns the final-stage estimate of Phi."""
    phi = np.asarray(phi_tildes, dtype=float)
    M = np.asarray(M, dtype=np.int64)
    if phi.shape != M.shape or phi.ndim != 1 or phi.size == 0:
        raise ValueError("phi_tildes and M must be non-empty with equal length")
    return float(kernels.combine_stages_batch(phi[None, :], M)[0])


def _running_estimates(phi: np.ndarray, M: np.ndarray) -> list[float]:
    return [combine_stages(phi[: j + 1], M[: j + 1]) for j in range(len(M))]


def _sample_stages(Phi: float, config: RPEConfig, rng: np.random.Generator) -> np.ndarray:
    M = config.M
    nu = np.asarray(config.nu)
    px = (1 + np.cos(M * Phi)) / 2
    py = (1 + np.sin(M * Phi)) / 2
    fx = rng.binomial(nu, px) / nu
    fy = rng.binomial(nu, py) / nu
    return estimate_from_frequencies(fx, fy)


def _check_prior(q, config):
    if not np.all(config.in_prior(q)):
        raise PriorViolation(
            f"q={q} lies outside the prior [{config.q_min}, {config.q_min + config.q_range}]"
        )


def rpe_run(
    q_true: float, fc: FunctionCoefficients, config: RPEConfig, rng: np.random.Generator
) -> RPEResult:
    """One estimation run using the exact stage outcome probabilities."""
    _check_prior(q_true, config)
    phi = _sample_stages(float(config.phase_of(q_true)), config, rng)
    Phi_hat = combine_stages(phi, config.M)
    q_hat = float(config.q_of(Phi_hat))
    return RPEResult(
        q_hat=q_hat,
        stage_estimates=_running_estimates(phi, config.M),
        trials=1,
        mse=(q_hat - q_true) ** 2,
        bound=heisenberg_bound(fc.inf_norm, config.total_time),
    )


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent counter-based stream per trial, so results ignore how trials are split."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def run_trials(
    q_true: float | None, fc: FunctionCoefficients, config: RPEConfig, trials: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """(q_true, q_hat) arrays over trials; q_true None draws q uniformly from the prior."""
    if q_true is not None:
        _check_prior(q_true, config)
    qs = np.empty(trials)
    phis = np.empty((trials, config.K))
    for i in range(trials):
        rng = trial_rng(seed, i)
        q = config.q_min + config.q_range * rng.random() if q_true is None else q_true
        qs[i] = q
        phis[i] = _sample_stages(float(config.phase_of(q)), config, rng)
    q_hat = config.q_of(kernels.combine_stages_batch(phis, config.M))
    return qs, q_hat


@dataclass
class MSECurve:
    rows: list[dict]
    slope: float
    configs: list[RPEConfig]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: ("" if r[k] is None else repr(r[k]) if isinstance(r[k], float) else r[k])
                        for k in CSV_COLUMNS})
        return buf.getvalue()

    @property
    def all_within_bound(self) -> bool:
        return all(r["mse"] <= r["bound"] for r in self.rows)


def loglog_slope(t, mse) -> float:
    t, mse = np.asarray(t, dtype=float), np.asarray(mse, dtype=float)
    if t.size < 2 or np.any(mse <= 0):
        return math.nan
    return float(np.polyfit(np.log(t), np.log(mse), 1)[0])


def mse_benchmark(
    q_true: float | None,
    fc: FunctionCoefficients,
    K_list: Sequence[int],
    trials: int,
    seed: int,
    q_range: float = 1.0,
    q_min: float | None = None,
    nu: Sequence[int] | None = None,
) -> MSECurve:
    """Empirical MSE of q against total time, one row per stage count K.

    ``slope_window`` is the log-log slope over the last :data:`SLOPE_WINDOW`
    rows up to this one (empty for the first row); ``MSECurve.slope`` is the
    fit over all rows.  A custom ``nu`` applies only when its length matches K.
    """
    rows, configs = [], []
    for K in K_list:
        cfg = RPEConfig.from_prior(fc, K, q_range, q_min, nu if nu is not None and len(nu) == K else None)
        qs, q_hat = run_trials(q_true, fc, cfg, trials, seed)
        mse = float(np.sum((q_hat - qs) ** 2) / trials)
        rows.append({"K": K, "t_total": cfg.total_time, "trials": trials, "mse": mse,
                     "bound": heisenberg_bound(fc.inf_norm, cfg.total_time)})
        configs.append(cfg)
    for i, r in enumerate(rows):
        win = rows[max(0, i - SLOPE_WINDOW + 1) : i + 1]
        r["slope_window"] = loglog_slope([w["t_total"] for w in win], [w["mse"] for w in win]) if len(win) > 1 else None
    slope = loglog_slope([r["t_total"] for r in rows], [r["mse"] for r in rows])
    return MSECurve(rows, slope, configs)


def statevector_stage_probabilities(
    s: ProtocolSchedule, q: float, config: RPEConfig, M: int
) -> tuple[float, float]:
    """Stage probabilities from a dense simulation of the compiled protocol.

    The protocol runs for ``M * delta_t`` with theta = q alpha / |alpha|^2
    (so alpha . theta = q); the known phase offset is then applied to the
    anchor qubit before the x and y measurements.
    """
    from catnet.cnot import compile_gates
    from catnet.verify import statevector_evolve

    fc = s.fc
    gates = compile_gates(s)
    theta = q * fc.alpha / float(fc.alpha @ fc.alpha)
    psi = statevector_evolve(gates, s, theta, M * config.delta_t)
    a0, a1 = psi[0], psi[1 << gates.anchor]
    a1 = a1 * np.exp(1j * M * (PHASE_OFFSET - config.r_low * config.delta_t))
    plus = abs(a0 + a1) ** 2 / 2
    plus_i = abs(a0 - 1j * a1) ** 2 / 2
    return float(plus), float(plus_i)
