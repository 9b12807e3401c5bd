"""Two-phase dense-tableau simplex for ``A x = b, x >= 0``.

Bland's smallest-index rule is used in both phases, so the method cannot
cycle and its output is a deterministic function of the input.  The problems
solved here have a handful of rows, so clarity wins over speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    phase1_value: float
    # phase-1 duals in the caller's row order; a Farkas ray when infeasible
    phase1_duals: np.ndarray
    basis: list[int]
    iterations: int

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


class _Tableau:
    def __init__(self, A, b, n_struct):
        m, n = A.shape
        self.m = m
        self.n = n
        self.n_struct = n_struct
        # rows: [A | b]
        self.T = np.hstack([A, b[:, None]])
        self.basis = list(range(n - m, n))
        self.iterations = 0

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.abs(col) > 0
        if nz.any():
            T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = j
        self.iterations += 1

    def reduced_costs(self, c):
        cb = c[self.basis]
        return c - cb @ self.T[:, :-1]

    def run(self, c, allowed, max_iter):
        """Minimize c.x over the current feasible basis; returns "optimal" or "unbounded"."""
        T = self.T
        for _ in range(max_iter):
            rc = self.reduced_costs(c)
            cand = np.flatnonzero((rc < -PIVOT_TOL) & allowed)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0])
            col = T[:, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return "unbounded"
            ratios = np.maximum(T[rows, -1], 0.0) / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-15 * max(1.0, best)]
            # Bland: among tied rows leave the basic variable with smallest index
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j)
        raise RuntimeError("simplex iteration limit reached")


def solve_lp(A, b, c=None, *, feas_tol=FEAS_TOL, max_iter=100_000) -> LPResult:
    """Find a basic feasible solution of ``A x = b, x >= 0``; minimize ``c.x`` if given.

    Phase 1 minimizes the sum of artificial variables.  A positive optimum
    (``> feas_tol``) means infeasible; the phase-1 duals ``u`` then satisfy
    ``A^T u <= 0`` and ``b.u > 0``.
    """
    A = np.array(A, dtype=float, ndmin=2)
    b = np.array(b, dtype=float).ravel()
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError("b has wrong length")
    flip = np.where(b < 0, -1.0, 1.0)
    A1 = A * flip[:, None]
    b1 = b * flip

    tab = _Tableau(np.hstack([A1, np.eye(m)]), b1, n)
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    tab.run(c1, allowed, max_iter)

    w = float(c1[tab.basis] @ tab.T[:, -1])
    art = slice(n, n + m)
    duals = (c1[tab.basis] @ tab.T[:, art]) * flip
    if w > feas_tol:
        return LPResult("infeasible", None, np.inf, w, duals, list(tab.basis), tab.iterations)

    # drive zero-level artificials out of the basis; drop rows that are redundant
    r = 0
    while r < tab.m:
        if tab.basis[r] >= n:
            row = tab.T[r, :n]
            cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if cand.size:
                tab.pivot(r, int(cand[0]))
            else:
                tab.T = np.delete(tab.T, r, axis=0)
                del tab.basis[r]
                tab.m -= 1
                continue
        r += 1
    tab.T[:, -1] = np.maximum(tab.T[:, -1], 0.0)

    objective = 0.0
    if c is not None:
        c2 = np.concatenate([np.asarray(c, dtype=float).ravel(), np.zeros(m)])
        if c2.shape != (n + m,):
            raise ValueError("c has wrong length")
        allowed = np.zeros(n + m, dtype=bool)
        allowed[:n] = True
        status = tab.run(c2, allowed, max_iter)
        if status == "unbounded":
            return LPResult("unbounded", None, -np.inf, w, duals, list(tab.basis), tab.iterations)
    x = np.zeros(n + m)
    x[tab.basis] = tab.T[:, -1]
    x = x[:n]
    if c is not None:
        objective = float(np.asarray(c, dtype=float) @ x)
    return LPResult("optimal", x, objective, w, duals, [j for j in tab.basis if j < n], tab.iterations)
