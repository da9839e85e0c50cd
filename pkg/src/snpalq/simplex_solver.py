"""Simplex-constrained least squares.

Solves min_h ||x - A h||_2 over the feasible set

    Delta^q = {h in R^q : h >= 0, sum(h) <= 1},

which is the per-pixel subproblem of the greedy extraction loop. Three
entry points:

* :func:`project_to_delta` -- Euclidean projection onto Delta^q.
* :func:`solve_nnls_delta` -- accelerated projected gradient solver.
* :func:`solve_nnls_delta_oracle` -- exact active-set enumeration, for
  small q only; used as an independent reference in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

__all__ = [
    "SolverConfig",
    "project_to_delta",
    "project_columns_to_delta",
    "solve_nnls_delta",
    "solve_nnls_delta_batch",
    "solve_nnls_delta_oracle",
]


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and scheme options for the projected-gradient solver.

    max_iters: hard iteration cap.
    rel_tol: stop a column once its iterate change drops below
        rel_tol * (1 + ||h||).
    restart: adaptive (gradient-scheme) restart of the momentum sequence.
    """

    max_iters: int = 500
    rel_tol: float = 1e-9
    restart: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")


def _project_columns_to_unit_simplex(V):
    """Project each column of V onto {u >= 0, sum(u) = 1} (sort-threshold)."""
    q, n = V.shape
    U = -np.sort(-V, axis=0)  # descending per column
    css = np.cumsum(U, axis=0) - 1.0
    ks = np.arange(1, q + 1, dtype=float)[:, None]
    positive = U - css / ks > 0.0
    # last index (largest k) where the threshold condition still holds
    k_star = q - 1 - np.argmax(positive[::-1], axis=0)
    lam = css[k_star, np.arange(n)] / (k_star + 1.0)
    return np.maximum(V - lam[None, :], 0.0)


def project_columns_to_delta(V):
    """Euclidean projection of every column of V onto Delta^q."""
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise ValueError("expected a 2-D array of column vectors")
    U = np.maximum(V, 0.0)
    over = U.sum(axis=0) > 1.0
    if np.any(over):
        U[:, over] = _project_columns_to_unit_simplex(V[:, over])
    return U


def project_to_delta(v):
    """Euclidean projection of a vector onto Delta^q.

    Clips at zero; if the clipped vector sums to more than one, falls
    through to the sort-and-threshold projection onto the unit simplex
    (the optimum then lies on the sum(h) = 1 face).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a 1-D vector of length >= 1")
    return project_columns_to_delta(v[:, None])[:, 0]


def _largest_gram_eigenvalue(A, iters=50, tol=1e-10):
    """Largest eigenvalue of A^T A by power iteration (no factorization)."""
    q = A.shape[1]
    # ramp start: never orthogonal to the leading eigenvector in practice
    v = 1.0 + np.arange(q, dtype=float) / max(q, 1)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        lam_new = float(v @ w)
        v = w / nw
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1.0):
            lam = lam_new
            break
        lam = lam_new
    return lam


def solve_nnls_delta_batch(A, X, cfg=None, H0=None):
    """Solve min ||x_j - A h_j|| over Delta^q for every column x_j of X.

    Accelerated projected gradient with constant step 1/L (L from power
    iteration on A^T A), per-column Nesterov momentum and optional
    per-column adaptive restart. Columns are frozen independently once
    their iterate change falls below the tolerance, so the result per
    column matches a stand-alone single-vector solve. A final exact
    least-squares refinement on each column's detected support snaps
    near-converged iterates onto their KKT point.

    When ``H0`` (feasible warm start, q x n) is given, a final safeguard
    keeps the warm start wherever it beats the iterate, so the returned
    objective never exceeds the starting one.

    Returns (H, R) with H the q x n coefficients and R = X - A @ H.
    """
    if cfg is None:
        cfg = SolverConfig()
    A = np.asarray(A, dtype=float)
    X = np.asarray(X, dtype=float)
    if A.ndim != 2 or X.ndim != 2:
        raise ValueError("A and X must be 2-D arrays")
    m, q = A.shape
    if q < 1:
        raise ValueError("A must have at least one column")
    if X.shape[0] != m:
        raise ValueError(f"row mismatch: A has {m} rows, X has {X.shape[0]}")
    n = X.shape[1]

    if H0 is None:
        H = np.zeros((q, n))
    else:
        H = np.array(H0, dtype=float, copy=True)
        if H.shape != (q, n):
            raise ValueError(f"H0 must have shape {(q, n)}, got {H.shape}")
        H = project_columns_to_delta(H)  # exact no-op on feasible starts

    L = _largest_gram_eigenvalue(A)
    if L <= 0.0:  # A is identically zero; objective does not depend on h
        return H, X - A @ H
    step = 1.0 / L

    H_start = H.copy()
    start_obj = np.linalg.norm(X - A @ H, axis=0)

    # compacted working set: converged columns leave it for good (their
    # trajectories are independent, so freezing matches a per-column stop)
    idx = np.arange(n)
    Yw = H.copy()
    Hp = H.copy()
    tw = np.ones(n)
    Bw = A.T @ X

    for _ in range(cfg.max_iters):
        if idx.size == 0:
            break
        G = A.T @ (A @ Yw)
        G -= Bw
        G *= -step
        G += Yw
        Hn = project_columns_to_delta(G)
        dH = Hn - Hp

        t_new = (1.0 + np.sqrt(1.0 + 4.0 * tw**2)) / 2.0
        if cfg.restart:
            oscillating = np.einsum("ij,ij->j", Yw - Hn, dH) > 0.0
            t_new[oscillating] = 1.0
        beta = (tw - 1.0) / t_new

        Yw = Hn + beta[None, :] * dH
        tw = t_new

        change = np.einsum("ij,ij->j", dH, dH)
        scale = 1.0 + np.sqrt(np.einsum("ij,ij->j", Hn, Hn))
        converged = change <= (cfg.rel_tol * scale) ** 2
        Hp = Hn
        if np.any(converged):
            H[:, idx[converged]] = Hn[:, converged]
            keep = ~converged
            idx = idx[keep]
            Yw = Yw[:, keep]
            Hp = Hp[:, keep]
            tw = tw[keep]
            Bw = Bw[:, keep]
    if idx.size:
        H[:, idx] = Hp

    _polish_batch(A, X, H)

    # keep the better of {start, final} per column
    R = X - A @ H
    end_obj = np.linalg.norm(R, axis=0)
    worse = end_obj > start_obj
    if np.any(worse):
        H[:, worse] = H_start[:, worse]
        R[:, worse] = X[:, worse] - A @ H_start[:, worse]
    return H, R


def _face_candidate(As, x):
    """Least squares on the support with sum(h) = 1 enforced (KKT system)."""
    k = As.shape[1]
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = 2.0 * (As.T @ As)
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.concatenate([2.0 * (As.T @ x), [1.0]])
    try:
        return np.linalg.solve(M, rhs)[:k]
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(M, rhs, rcond=None)[0][:k]


def _polish_batch(A, X, H):
    """Refine each column in place with one exact solve on its support.

    The projected-gradient loop localizes the active set quickly but can
    crawl along flat directions; a single least-squares solve restricted
    to the detected support (with and without the sum face) snaps the
    iterate onto the exact KKT point. Candidates are only accepted when
    feasible and strictly better.
    """
    q, n = H.shape
    obj = np.linalg.norm(X - A @ H, axis=0)
    for j in range(n):
        S = np.flatnonzero(H[:, j] > 0.0)
        if S.size == 0:
            continue
        As = A[:, S]
        x = X[:, j]
        best_obj = obj[j]
        best = None
        interior = np.linalg.lstsq(As, x, rcond=None)[0]
        face = _face_candidate(As, x)
        for hs in (interior, face):
            if np.any(hs < -1e-12) or hs.sum() > 1.0 + 1e-12:
                continue
            hs = np.maximum(hs, 0.0)
            s = hs.sum()
            if s > 1.0:
                hs /= s
            cand_obj = float(np.linalg.norm(x - As @ hs))
            if cand_obj < best_obj:
                best_obj = cand_obj
                best = hs
        if best is not None:
            H[:, j] = 0.0
            H[S, j] = best


def solve_nnls_delta(A, x, cfg=None, h0=None):
    """Simplex-constrained least-squares fit of a single vector.

    Returns (h, residual) with h in Delta^q and residual = x - A h. The
    returned objective never exceeds the objective at the starting point
    (h = 0 when no warm start is given).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D vector")
    H0 = None if h0 is None else np.asarray(h0, dtype=float)[:, None]
    H, R = solve_nnls_delta_batch(A, x[:, None], cfg, H0)
    return H[:, 0], R[:, 0]


def _candidate(best, h, obj, obj_tol):
    """Keep the candidate with the smaller objective; break ties by ||h||."""
    h_best, obj_best = best
    if obj < obj_best - obj_tol:
        return h, obj
    if obj <= obj_best + obj_tol and np.linalg.norm(h) < np.linalg.norm(h_best):
        return h, obj
    return best


def solve_nnls_delta_oracle(A, x):
    """Exact minimizer of ||x - A h|| over Delta^q by active-set enumeration.

    Every support set S gets two KKT candidates: the unconstrained least
    squares fit on the columns in S (sum constraint slack) and the
    equality-constrained fit with sum(h) = 1 (sum constraint tight).
    Feasible candidates are compared on the objective, ties broken by the
    smaller coefficient norm. Combinatorial: limited to q <= 12.
    """
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    if A.ndim != 2 or x.ndim != 1 or A.shape[0] != x.size:
        raise ValueError("A must be m x q and x of length m")
    q = A.shape[1]
    if q > 12:
        raise ValueError(f"oracle enumeration is limited to q <= 12 (got q={q})")

    feas_tol = 1e-12
    obj_tol = 1e-12 * (1.0 + float(x @ x))
    best = (np.zeros(q), float(np.linalg.norm(x)))

    for k in range(1, q + 1):
        for support in combinations(range(q), k):
            S = list(support)
            As = A[:, S]

            # sum constraint inactive: plain least squares on the support
            hs = np.linalg.lstsq(As, x, rcond=None)[0]
            if np.all(hs >= -feas_tol) and hs.sum() <= 1.0 + feas_tol:
                h = np.zeros(q)
                h[S] = np.maximum(hs, 0.0)
                obj = float(np.linalg.norm(x - A @ h))
                best = _candidate(best, h, obj, obj_tol)

            # sum constraint active: KKT system of the equality-constrained fit
            hs = _face_candidate(As, x)
            if np.all(hs >= -feas_tol):
                h = np.zeros(q)
                h[S] = np.maximum(hs, 0.0)
                s = h.sum()
                if s > 1.0:  # renormalize the clipped tail back onto the face
                    h /= s
                obj = float(np.linalg.norm(x - A @ h))
                best = _candidate(best, h, obj, obj_tol)

    return best[0]
