"""Dense two-phase tableau simplex for the small LPs used by curvelab.

Problems have the form::

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

Pivoting uses Dantzig's rule with lowest-index tie breaking and falls back to
Bland's rule after a run of degenerate pivots, so cycling cannot occur.  The
final basic solution is recomputed from the original constraint matrix, which
keeps witnesses accurate to roughly machine precision on these small dense
instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LpInfeasible, LpUnbounded, SolverFailure

PIVOT_TOL = 1e-11
OPT_TOL = 1e-10
FEAS_TOL = 1e-9
DEGENERATE_RUN = 30


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    fun: float
    nit: int
    basis: tuple


def _pivot(T, basis, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])
    basis[r] = j


def _iterate(T, basis, allowed, max_iter, nit):
    """Run simplex pivots on tableau ``T`` until optimal.

    ``allowed`` is the number of leading columns that may enter the basis.
    Returns the updated iteration count.
    """
    degenerate = 0
    last_obj = T[-1, -1]
    m = T.shape[0] - 1
    while True:
        rc = T[-1, :allowed]
        if degenerate < DEGENERATE_RUN:
            j = int(np.argmin(rc))
            if rc[j] >= -OPT_TOL:
                return nit
        else:
            neg = np.nonzero(rc < -OPT_TOL)[0]
            if neg.size == 0:
                return nit
            j = int(neg[0])
        col = T[:m, j]
        pos = np.nonzero(col > PIVOT_TOL)[0]
        if pos.size == 0:
            raise LpUnbounded("objective unbounded below")
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
        # lowest basis index among tied rows (Bland)
        r = int(ties[np.argmin(np.asarray(basis)[ties])])
        _pivot(T, basis, r, j)
        nit += 1
        if nit > max_iter:
            raise SolverFailure(f"simplex exceeded {max_iter} iterations")
        obj = T[-1, -1]
        if abs(obj - last_obj) <= 1e-14 * max(1.0, abs(obj)):
            degenerate += 1
        else:
            degenerate = 0
        last_obj = obj


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, *, max_iter=50_000):
    """Minimize ``c @ x`` over ``x >= 0`` subject to the given constraints.

    Raises
    ------
    LpInfeasible
        If phase one ends with positive artificial mass.
    LpUnbounded
        If the objective decreases without bound.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # standard form rows: [A | slack] x = b with b >= 0
    A = np.zeros((m, n + m_ub))
    b = np.concatenate([b_ub, b_eq])
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    flip = b < 0
    A[flip] *= -1.0
    b = np.where(flip, -b, b)

    needs_art = np.ones(m, dtype=bool)
    needs_art[:m_ub] = flip[:m_ub]
    art_rows = np.nonzero(needs_art)[0]
    n_std = n + m_ub
    n_art = art_rows.size

    T = np.zeros((m + 1, n_std + n_art + 1))
    T[:m, :n_std] = A
    T[:m, -1] = b
    basis = [n + i for i in range(m_ub)] + [0] * m_eq
    for k, r in enumerate(art_rows):
        T[r, n_std + k] = 1.0
        basis[r] = n_std + k

    nit = 0
    if n_art:
        T[-1, :] = -T[art_rows].sum(axis=0)
        T[-1, n_std:n_std + n_art] = 0.0
        nit = _iterate(T, basis, n_std + n_art, max_iter, nit)
        if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            raise LpInfeasible("phase one ended with positive infeasibility")
        # drive zero-level artificials out of the basis, drop redundant rows
        keep = []
        for r in range(m):
            if basis[r] >= n_std:
                row = T[r, :n_std]
                cand = np.nonzero(np.abs(row) > 1e-9)[0]
                if cand.size == 0:
                    continue
                _pivot(T, basis, r, int(cand[0]))
            keep.append(r)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        T = np.hstack([T[:, :n_std], T[:, -1:]])
        A = A[keep]
        b = b[keep]

    c_std = np.concatenate([c, np.zeros(m_ub)])
    cb = c_std[basis]
    T[-1, :n_std] = c_std - cb @ T[:-1, :n_std]
    T[-1, -1] = -cb @ T[:-1, -1]
    nit = _iterate(T, basis, n_std, max_iter, nit)

    x_std = np.zeros(n_std)
    if basis:
        B = A[:, basis]
        try:
            xb = np.linalg.solve(B, b)
        except np.linalg.LinAlgError:
            xb = T[:-1, -1].copy()
        if np.any(xb < -1e-7) or not np.all(np.isfinite(xb)):
            xb = T[:-1, -1].copy()
        x_std[basis] = np.maximum(xb, 0.0)
    x = x_std[:n]
    return LPResult(x=x, fun=float(c @ x), nit=nit, basis=tuple(basis))
