"""Greedy endmember extraction.

Three variants of the same outer loop, differing in how all pixels are
re-expressed after each selection:

* SPA: orthogonal deflation against the span of the selected pixels.
* SNPA: per-pixel simplex-constrained fit over the selected pixels.
* SNPALQ: per-pixel simplex-constrained fit over the selected pixels
  *and their pairwise products*, which cancels second-order mixing terms
  as soon as both factors have been extracted.

Selection is always the residual column of largest l2 norm, ties broken
by the smallest pixel index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lq_model import (
    expand_lq_subset,
    lq_dictionary_size,
    validate_spectra,
)
from .simplex_solver import SolverConfig, solve_nnls_delta_batch

__all__ = [
    "ExtractionResult",
    "spa_extract",
    "snpa_extract",
    "snpalq_extract",
    "recover_abundances",
]

# residual columns below this fraction of the largest input norm are
# numerically dead and excluded from the argmax
DEAD_COLUMN_REL_TOL = 1e-12


@dataclass(frozen=True)
class ExtractionResult:
    """Outcome of one greedy extraction run.

    indices: selected pixel indices (0-based), in extraction order.
    residual_norms: max column residual norm after each iteration.
    algorithm: "spa", "snpa" or "snpalq".
    pixel_residual_norms: per-iteration, per-pixel residual norms
        (iterations x pixels); row t is the state after selection t+1.
    dead_selections: iterations (0-based) at which every unselected
        column was numerically dead and the selection was arbitrary.
    """

    indices: np.ndarray
    residual_norms: np.ndarray
    algorithm: str
    pixel_residual_norms: np.ndarray
    dead_selections: tuple

    @property
    def r(self):
        return len(self.indices)


def _check_extraction_input(X, r):
    X = validate_spectra(X)
    n = X.shape[1]
    if not 1 <= r <= n:
        raise ValueError(f"r must lie in [1, {n}], got {r}")
    norms = np.linalg.norm(X, axis=0)
    max_norm = float(norms.max())
    if max_norm == 0.0:
        raise ValueError("cannot extract from an all-zero matrix: no nonzero column")
    return X, norms, max_norm


def _select(norms, selected_mask, dead_tol):
    """Largest-norm live column; smallest unselected index if all are dead."""
    live = (norms > dead_tol) & ~selected_mask
    if np.any(live):
        candidates = np.where(live)[0]
        return int(candidates[np.argmax(norms[candidates])]), False
    return int(np.where(~selected_mask)[0][0]), True


def _pad_warm_start(H_prev, t, n, lq):
    """Re-index the previous coefficients into the grown dictionary.

    Growing the selection from t to t+1 pixels inserts the new linear
    column at position t and appends the new cross products at the end
    (the pair order enumerates existing pairs first), so old linear
    coefficients keep their positions and old pair coefficients shift up
    by one.
    """
    if lq:
        q_new = lq_dictionary_size(t + 1)
    else:
        q_new = t + 1
    H0 = np.zeros((q_new, n))
    if H_prev is not None and t > 0:
        H0[:t] = H_prev[:t]
        if lq:
            n_old_pairs = t * (t - 1) // 2
            H0[t + 1 : t + 1 + n_old_pairs] = H_prev[t : t + n_old_pairs]
    return H0


def _hull_extract(X, r, cfg, lq, tag):
    X, norms, max_norm = _check_extraction_input(X, r)
    if cfg is None:
        cfg = SolverConfig()
    n = X.shape[1]
    dead_tol = DEAD_COLUMN_REL_TOL * max_norm

    K = []
    selected = np.zeros(n, dtype=bool)
    dead = []
    H_prev = None
    pixel_norms = np.empty((r, n))

    for t in range(r):
        p, was_dead = _select(norms, selected, dead_tol)
        if was_dead:
            dead.append(t)
        K.append(p)
        selected[p] = True

        A = expand_lq_subset(X, K) if lq else X[:, K]
        H0 = _pad_warm_start(H_prev, t, n, lq)
        H0[:, p] = 0.0
        H0[t, p] = 1.0  # the fresh pixel sits exactly on its own hull vertex

        H_prev, R = solve_nnls_delta_batch(A, X, cfg, H0)
        norms = np.linalg.norm(R, axis=0)
        pixel_norms[t] = norms

    return ExtractionResult(
        indices=np.array(K, dtype=int),
        residual_norms=pixel_norms.max(axis=1),
        algorithm=tag,
        pixel_residual_norms=pixel_norms,
        dead_selections=tuple(dead),
    )


def snpalq_extract(X, r, cfg=None):
    """Greedy extraction with simplex projections onto the selected pixels
    and their pairwise products."""
    return _hull_extract(X, r, cfg, lq=True, tag="snpalq")


def snpa_extract(X, r, cfg=None):
    """Greedy extraction with simplex projections onto the selected pixels."""
    return _hull_extract(X, r, cfg, lq=False, tag="snpa")


def spa_extract(X, r):
    """Greedy extraction with orthogonal deflation.

    After each selection the residual columns are projected onto the
    orthogonal complement of the selected pixel's residual direction;
    the running basis is re-orthogonalized in two passes for stability.
    """
    X, norms, max_norm = _check_extraction_input(X, r)
    m, n = X.shape
    dead_tol = DEAD_COLUMN_REL_TOL * max_norm

    K = []
    selected = np.zeros(n, dtype=bool)
    dead = []
    R = X.copy()
    U = np.zeros((m, r))
    pixel_norms = np.empty((r, n))

    for t in range(r):
        p, was_dead = _select(norms, selected, dead_tol)
        if was_dead:
            dead.append(t)
        K.append(p)
        selected[p] = True

        u = R[:, p].copy()
        for _ in range(2):
            if t > 0:
                u -= U[:, :t] @ (U[:, :t].T @ u)
        nu = np.linalg.norm(u)
        if nu > 0.0:
            u /= nu
            U[:, t] = u
            R -= np.outer(u, u @ R)
        norms = np.linalg.norm(R, axis=0)
        pixel_norms[t] = norms

    return ExtractionResult(
        indices=np.array(K, dtype=int),
        residual_norms=pixel_norms.max(axis=1),
        algorithm="spa",
        pixel_residual_norms=pixel_norms,
        dead_selections=tuple(dead),
    )


def recover_abundances(X, K, lq=True, cfg=None, max_columns=2000):
    """Final per-pixel coefficient fit against the selected pixels.

    With ``lq`` the dictionary is the LQ expansion of X[:, K] (q =
    |K|(|K|+1)/2 rows), otherwise X[:, K] itself (|K| rows). Dictionaries
    wider than ``max_columns`` are rejected.
    """
    X = validate_spectra(X)
    K = np.asarray(list(K), dtype=int)
    if K.size == 0:
        raise ValueError("K must contain at least one index")
    n = X.shape[1]
    if K.min() < 0 or K.max() >= n:
        raise ValueError(f"pixel indices must lie in [0, {n - 1}]")
    if len(set(K.tolist())) != K.size:
        raise ValueError("pixel indices must be distinct")
    q = lq_dictionary_size(K.size) if lq else K.size
    if q > max_columns:
        raise ValueError(
            f"dictionary would have {q} columns, above the cap of {max_columns}"
        )
    A = expand_lq_subset(X, K) if lq else X[:, K]
    H, _ = solve_nnls_delta_batch(A, X, cfg)
    return H
