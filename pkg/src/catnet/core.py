"""Domain types and closed-form formulas shared by every other module.

Conventions
-----------
* Qubits are indexed from 0.  The *pivot* is the smallest index attaining
  ``max |alpha_i|``; ``L`` holds every index attaining it.
* ``alpha_prime = alpha / alpha[pivot]`` uses the signed pivot entry, so
  ``alpha_prime[pivot] == 1`` even when ``alpha[pivot] < 0``.
* A family ``tau`` in {-1, 0, +1}^d labels the cat-like state
  ``(|tau> + e^{i phi} |-tau>) / sqrt(2)``; its weight is the number of
  qubits it entangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from catnet.errors import AllZero, DimensionMismatch

SCHEDULE_TOL = 1e-9
# fractions at or below this are treated as unused families
DROP_TOL = 1e-12
# relative tolerance for deciding membership of the max-magnitude set L
TIE_RTOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FunctionCoefficients:
    """Weights of the target function q(theta) = alpha . theta."""

    alpha: np.ndarray
    pivot: int
    L: tuple[int, ...]
    one_norm: float
    inf_norm: float
    k: int

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def ratio(self) -> float:
        """``||alpha||_1 / ||alpha||_inf``, the average-entanglement lower bound."""
        return self.one_norm / self.inf_norm

    @property
    def alpha_pivot(self) -> float:
        return float(self.alpha[self.pivot])

    @property
    def alpha_prime(self) -> np.ndarray:
        return self.alpha / self.alpha[self.pivot]

    @property
    def signs(self) -> np.ndarray:
        """sgn(alpha_j) / sgn(alpha_pivot) as integers (0 where alpha_j = 0)."""
        return np.sign(self.alpha_prime).astype(int)

    @property
    def nonzero(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.alpha))

    def restrict(self, indices: Sequence[int]) -> "FunctionCoefficients":
        return normalize(self.alpha[list(indices)])


def minimum_entanglement_k(fc: FunctionCoefficients | Sequence[float]) -> int:
    """Smallest k with k - 1 < ||alpha||_1/||alpha||_inf <= k.

    An exact-integer ratio is kept (the upper inequality is inclusive); the
    comparison absorbs floating noise of ``SCHEDULE_TOL`` before the ceiling.
    """
    if not isinstance(fc, FunctionCoefficients):
        fc = normalize(fc)
    return max(1, math.ceil(fc.ratio - SCHEDULE_TOL))


def normalize(alpha: Iterable[float]) -> FunctionCoefficients:
    a = np.asarray(list(alpha) if not isinstance(alpha, np.ndarray) else alpha, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise DimensionMismatch("alpha must be a non-empty vector")
    if not np.all(np.isfinite(a)):
        raise ValueError("alpha entries must be finite")
    mags = np.abs(a)
    inf_norm = float(mags.max())
    if inf_norm == 0.0:
        raise AllZero("every coefficient is zero")
    in_L = mags >= inf_norm * (1.0 - TIE_RTOL)
    L = tuple(int(i) for i in np.flatnonzero(in_L))
    one_norm = float(mags.sum())
    fc = FunctionCoefficients(
        alpha=_readonly(a),
        pivot=L[0],
        L=L,
        one_norm=one_norm,
        inf_norm=inf_norm,
        k=1,
    )
    object.__setattr__(fc, "k", minimum_entanglement_k(fc))
    return fc


@dataclass(frozen=True)
class StateFamily:
    tau: tuple[int, ...]

    def __post_init__(self):
        tau = tuple(int(v) for v in self.tau)
        if any(v not in (-1, 0, 1) for v in tau):
            raise ValueError(f"tau entries must be -1, 0 or 1: {self.tau}")
        object.__setattr__(self, "tau", tau)

    @property
    def d(self) -> int:
        return len(self.tau)

    @property
    def weight(self) -> int:
        return sum(1 for v in self.tau if v)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(j for j, v in enumerate(self.tau) if v)

    def as_array(self) -> np.ndarray:
        return np.array(self.tau, dtype=float)

    def admissible_for(self, fc: FunctionCoefficients) -> bool:
        """L-rows pinned to sgn(alpha_j)/sgn(alpha_pivot); zero-coefficient qubits unused."""
        if self.d != fc.d:
            return False
        s = fc.signs
        if any(self.tau[j] != s[j] for j in fc.L):
            return False
        return all(self.tau[j] == 0 for j in range(fc.d) if s[j] == 0)


def family_matrix(families: Sequence[StateFamily]) -> np.ndarray:
    """d x N matrix T whose columns are the tau vectors."""
    if not families:
        raise ValueError("no families")
    return np.array([f.tau for f in families], dtype=float).T


@dataclass(frozen=True)
class ProtocolSchedule:
    """Ordered families with the fraction of total time spent in each.

    Families with a fraction ``<= DROP_TOL`` are dropped on construction.  With
    ``strict=True`` (the default) the fractions must sum to one; verification
    tooling loads hand-edited protocols with ``strict=False``.
    """

    fc: FunctionCoefficients
    families: tuple[StateFamily, ...]
    p: np.ndarray
    total_time: float = 1.0
    strict: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        fams = tuple(f if isinstance(f, StateFamily) else StateFamily(f) for f in self.families)
        p = np.asarray(self.p, dtype=float).ravel()
        if len(fams) != len(p):
            raise DimensionMismatch("families and p differ in length")
        if np.any(~np.isfinite(p)) or np.any(p < -DROP_TOL):
            raise ValueError("time fractions must be finite and nonnegative")
        for f in fams:
            if f.d != self.fc.d:
                raise DimensionMismatch(f"family {f.tau} has wrong dimension for d={self.fc.d}")
        keep = p > DROP_TOL
        fams = tuple(f for f, kp in zip(fams, keep) if kp)
        p = p[keep]
        if not fams:
            raise ValueError("schedule has no family with positive time")
        if self.strict and abs(p.sum() - 1.0) > SCHEDULE_TOL:
            raise ValueError(f"time fractions sum to {p.sum()!r}, expected 1")
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")
        object.__setattr__(self, "families", fams)
        object.__setattr__(self, "p", _readonly(p))
        object.__setattr__(self, "total_time", float(self.total_time))

    def __len__(self) -> int:
        return len(self.families)

    @property
    def d(self) -> int:
        return self.fc.d

    @property
    def T(self) -> np.ndarray:
        return family_matrix(self.families)

    @property
    def sensitivity(self) -> np.ndarray:
        """c = T p, the accumulated sensitivity of the branch phase to each theta_j."""
        return self.T @ self.p

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.sensitivity - self.fc.alpha_prime)))

    @property
    def optimal(self) -> bool:
        return abs(self.p.sum() - 1.0) <= SCHEDULE_TOL and self.residual < SCHEDULE_TOL

    @property
    def non_echoed(self) -> bool:
        return is_non_echoed(self, self.fc)

    @property
    def max_weight(self) -> int:
        return max(f.weight for f in self.families)

    def reordered(self, order: Sequence[int]) -> "ProtocolSchedule":
        order = list(order)
        if sorted(order) != list(range(len(self))):
            raise ValueError("order must be a permutation of the family indices")
        return ProtocolSchedule(
            self.fc,
            tuple(self.families[i] for i in order),
            self.p[order],
            self.total_time,
            strict=self.strict,
        )

    def with_total_time(self, t: float) -> "ProtocolSchedule":
        return ProtocolSchedule(self.fc, self.families, self.p, t, strict=self.strict)


def average_entanglement(s: ProtocolSchedule) -> float:
    w = np.array([f.weight for f in s.families], dtype=float)
    return float(w @ s.p)


def is_non_echoed(s: ProtocolSchedule, fc: FunctionCoefficients) -> bool:
    signs = fc.signs
    for f in s.families:
        for j, v in enumerate(f.tau):
            if v != 0 and v != signs[j]:
                return False
    return True


def branch_phase(s: ProtocolSchedule, theta: Sequence[float], t: float) -> float:
    """Relative phase accumulated between the two branches: t (T p) . theta."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (s.d,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, expected ({s.d},)")
    return float(t * (s.sensitivity @ theta))


@dataclass(frozen=True)
class QFIMatrix:
    """Quantum Fisher information matrix, in units of t^2 when t is explicit."""

    entries: np.ndarray

    def __post_init__(self):
        F = np.array(self.entries, dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise DimensionMismatch("QFIM must be square")
        scale = max(1.0, float(np.max(np.abs(F))) if F.size else 1.0)
        if np.max(np.abs(F - F.T), initial=0.0) > 1e-10 * scale:
            raise ValueError("QFIM is not symmetric")
        F = 0.5 * (F + F.T)
        if F.size and np.linalg.eigvalsh(F)[0] < -1e-8 * scale:
            raise ValueError("QFIM is not positive semidefinite")
        object.__setattr__(self, "entries", _readonly(F))

    @property
    def d(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def analytic_qfim(s: ProtocolSchedule, t: float | None = None) -> QFIMatrix:
    """F = t^2 c c^T with c = T p (two-branch pure-state closed form)."""
    t = s.total_time if t is None else t
    c = s.sensitivity
    return QFIMatrix(t * t * np.outer(c, c))


class Gate(NamedTuple):
    kind: str  # "CNOT" or "X"
    target: int
    control: int | None = None

    def __str__(self):
        if self.kind == "CNOT":
            return f"CNOT({self.control}->{self.target})"
        return f"X({self.target})"


def cnot(control: int, target: int) -> Gate:
    if control == target:
        raise ValueError("CNOT control and target must differ")
    return Gate("CNOT", target, control)


def xgate(target: int) -> Gate:
    return Gate("X", target)


@dataclass(frozen=True)
class GateSequence:
    """Gates realizing a schedule, grouped by where they act in the protocol.

    ``prep`` builds the first probe from |0...0> with the anchor already in
    (|0> + |1>)/sqrt(2); ``transitions[n]`` maps family n to family n + 1;
    ``measurement`` disentangles everything except the anchor.
    """

    d: int
    anchor: int
    prep: tuple[Gate, ...]
    transitions: tuple[tuple[Gate, ...], ...]
    measurement: tuple[Gate, ...]

    @staticmethod
    def count_cnots(gates: Iterable[Gate]) -> int:
        return sum(1 for g in gates if g.kind == "CNOT")

    @property
    def blocks(self) -> list[tuple[Gate, ...]]:
        return [self.prep, *self.transitions, self.measurement]

    def __iter__(self):
        for block in self.blocks:
            yield from block


# --- protocol JSON -----------------------------------------------------------


def schedule_to_json(s: ProtocolSchedule) -> dict:
    """Canonical protocol document; floats keep their shortest round-trip repr."""
    return {
        "alpha": [float(a) for a in s.fc.alpha],
        "pivot": s.fc.pivot,
        "k": s.fc.k,
        "families": [list(f.tau) for f in s.families],
        "p": [float(x) for x in s.p],
        "total_time": s.total_time,
        "flags": {"optimal": bool(s.optimal), "non_echoed": bool(s.non_echoed)},
    }


def schedule_from_json(doc: dict, strict: bool = True) -> ProtocolSchedule:
    for key in ("alpha", "families", "p"):
        if key not in doc:
            raise ValueError(f"protocol document missing {key!r}")
    fc = normalize(doc["alpha"])
    if "pivot" in doc and int(doc["pivot"]) != fc.pivot:
        raise ValueError(f"pivot {doc['pivot']} disagrees with alpha (expected {fc.pivot})")
    fams = tuple(StateFamily(tuple(f)) for f in doc["families"])
    return ProtocolSchedule(fc, fams, doc["p"], float(doc.get("total_time", 1.0)), strict=strict)
