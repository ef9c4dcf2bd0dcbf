"""Rectangular min-cost assignment (Hungarian method, shortest augmenting paths).

Costs are exact integers.  To pick the lexicographically smallest matching
among all optimal ones, each cost is scaled and perturbed by a base-``(n+1)``
tail that is tiny relative to one unit of true cost; Python integers keep
this exact.
"""

from __future__ import annotations

import itertools

INF = float("inf")


def hungarian(cost):
    """Return ``(row_to_col, total)`` minimizing ``sum cost[i][row_to_col[i]]``.

    ``cost`` is an ``n x n`` list of integers (square).  O(n^3).
    """
    n = len(cost)
    if n == 0:
        return [], 0
    # potentials u (rows), v (cols); p[j] = row matched to column j (1-based)
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [None] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta, j1 = None, 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                if minv[j] is None or cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if delta is None or minv[j] < delta:
                    delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = [0] * n
    for j in range(1, n + 1):
        row_to_col[p[j] - 1] = j - 1
    return row_to_col, sum(cost[i][row_to_col[i]] for i in range(n))


def lex_min_assignment(cost):
    """Optimal assignment that is lexicographically smallest in ``row_to_col``.

    Entry ``(i, j)`` gets the perturbation ``j * (n+1)**(n-1-i)`` on top of
    ``cost * S`` with ``S`` larger than any sum of perturbations, so the
    perturbed optimum is optimal for ``cost`` and, among those, lexicographically
    smallest.
    """
    n = len(cost)
    if n == 0:
        return [], 0
    base = n + 1
    S = base ** n
    big = [[int(cost[i][j]) * S + j * base ** (n - 1 - i) for j in range(n)] for i in range(n)]
    assign, _ = hungarian(big)
    return assign, sum(int(cost[i][assign[i]]) for i in range(n))


def brute_force_assignment(cost):
    """Exhaustive optimum over all permutations (tests and tiny instances)."""
    n = len(cost)
    best = None
    for perm in itertools.permutations(range(n)):
        total = sum(cost[i][perm[i]] for i in range(n))
        if best is None or total < best[1]:
            best = (list(perm), total)
    return best if best is not None else ([], 0)
