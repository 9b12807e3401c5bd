"""Pure-Python/numpy kernels, used when the compiled extension is unavailable.

``brute_order`` and ``held_karp_order`` solve the open-path ordering problem:
given integer transition costs ``dist[i, j]`` plus per-node ``start`` and
``end`` costs, find the permutation minimizing
``start[p0] + sum dist[p_i, p_i+1] + end[p_last]``.  Both return
``(cost, permutation)``.

* ``brute_order`` is a depth-first search in lexicographic order that prunes
  partial paths already at least as costly as the best found, so it returns
  the lexicographically first optimal permutation.
* ``held_karp_order`` is the subset dynamic program; it backtracks through
  the smallest-index predecessor and the smallest-index final node.

``combine_stages_batch`` combines robust-phase-estimation stage phases row by
row; the candidate nearest the previous estimate is chosen in closed form.
"""

import numpy as np

_INF = 1 << 30


def brute_order(dist, start, end):
    D = np.asarray(dist, dtype=np.int64).tolist()
    S = [int(v) for v in start]
    E = [int(v) for v in end]
    n = len(S)
    if n == 0:
        return 0, []
    best = [float("inf"), list(range(n))]
    used = [False] * n
    path = [0] * n

    def dfs(depth, last, partial):
        if depth == n:
            c = partial + E[last]
            if c < best[0]:
                best[0] = c
                best[1] = path[:]
            return
        row = D[last]
        for i in range(n):
            if used[i]:
                continue
            c = partial + row[i]
            if c >= best[0]:
                continue
            used[i] = True
            path[depth] = i
            dfs(depth + 1, i, c)
            used[i] = False

    for i in range(n):
        if S[i] >= best[0]:
            continue
        used[i] = True
        path[0] = i
        dfs(1, i, S[i])
        used[i] = False
    return int(best[0]), best[1]


def held_karp_order(dist, start, end):
    D = np.asarray(dist, dtype=np.int32)
    S = np.asarray(start, dtype=np.int32)
    E = np.asarray(end, dtype=np.int32)
    n = len(S)
    if n == 0:
        return 0, []
    size = 1 << n
    dp = np.full((size, n), _INF, dtype=np.int32)
    for j in range(n):
        dp[1 << j, j] = S[j]
    masks = np.arange(size, dtype=np.int64)
    pop = np.zeros(size, dtype=np.int64)
    for j in range(n):
        pop += (masks >> j) & 1
    for s in range(1, n):
        layer = masks[pop == s]
        for j in range(n):
            src = layer[((layer >> j) & 1) == 0]
            if src.size == 0:
                continue
            cand = (dp[src] + D[:, j][None, :]).min(axis=1)
            dp[src | (1 << j), j] = cand
    full = size - 1
    totals = dp[full] + E
    last = int(np.argmin(totals))
    total = int(totals[last])
    order = [last]
    mask, j = full, last
    while mask != (1 << j):
        prev = mask ^ (1 << j)
        target = dp[mask, j]
        for i in range(n):
            if (prev >> i) & 1 and dp[prev, i] + D[i, j] == target:
                break
        order.append(i)
        mask, j = prev, i
    order.reverse()
    return total, order


def combine_stages_batch(phi_tilde, M):
    P = np.atleast_2d(np.asarray(phi_tilde, dtype=float))
    M = np.asarray(M, dtype=np.int64)
    est = P[:, 0].copy()
    two_pi = 2.0 * np.pi
    for j in range(1, P.shape[1]):
        m = M[j]
        x = (m * est - P[:, j]) / two_pi
        # nearest integer, halves rounded down (ties go to the smaller n)
        n = np.ceil(x - 0.5)
        n = np.clip(n, 0, m - 1)
        est = (P[:, j] + two_pi * n) / m
    return est
