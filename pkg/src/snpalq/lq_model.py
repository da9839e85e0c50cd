"""Linear-quadratic mixing model.

A scene of n pixels over m bands mixes r endmembers (columns of W)
linearly plus pairwise Hadamard products of endmembers ("virtual"
endmembers). The expanded dictionary stacks the r endmembers followed by
the r(r-1)/2 cross products, giving q = r(r+1)/2 columns; per-pixel
coefficients live in Delta^q (nonnegative, summing to at most one).

Synthetic scenes are near-separable: every endmember appears as a pure
pixel, while virtual endmembers need not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simplex_solver import SolverConfig, solve_nnls_delta

__all__ = [
    "EPS_FEAS",
    "LqScene",
    "lq_pairs",
    "lq_dictionary_size",
    "expand_lq",
    "expand_lq_subset",
    "generate_scene",
    "validate_separability",
    "validate_spectra",
    "validate_endmembers",
    "validate_abundances",
]

# slack allowed on the sum-to-at-most-one abundance constraint
EPS_FEAS = 1e-9


def validate_spectra(X):
    """Check an m x n pixel matrix: 2-D, nonempty, entrywise >= 0."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("spectral matrix must be 2-D with at least one band and one pixel")
    if not np.all(X >= 0):
        raise ValueError("spectral matrix must be entrywise nonnegative")
    return X


def validate_endmembers(W):
    """Check an m x r endmember matrix: nonnegative, no all-zero column."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
        raise ValueError("endmember matrix must be 2-D with at least one column")
    if not np.all(W >= 0):
        raise ValueError("endmember matrix must be entrywise nonnegative")
    if np.any(np.all(W == 0, axis=0)):
        raise ValueError("endmember matrix must not contain an all-zero column")
    return W


def validate_abundances(H):
    """Check a q x n coefficient matrix against the Delta constraints."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2:
        raise ValueError("abundance matrix must be 2-D")
    if not np.all(H >= 0):
        raise ValueError("abundances must be nonnegative")
    if np.any(H.sum(axis=0) > 1.0 + EPS_FEAS):
        raise ValueError("abundance columns must sum to at most one")
    return H


def lq_dictionary_size(r):
    """Number of dictionary columns for r endmembers: r linear + r(r-1)/2 products."""
    return r * (r + 1) // 2


def lq_pairs(r):
    """Cross-product column order: (j, i) pairs, i = 1..r-1, j < i (0-based)."""
    return [(j, i) for i in range(1, r) for j in range(i)]


def _expand(M):
    m, r = M.shape
    cols = [M]
    for i in range(1, r):
        cols.append(M[:, :i] * M[:, i : i + 1])
    return np.concatenate(cols, axis=1)


def expand_lq(W):
    """Expanded dictionary of W: its columns followed by all cross products.

    Column contract: columns 0..r-1 are the columns of W in order; column
    r + s is w_j * w_i (elementwise) for the s-th pair of
    :func:`lq_pairs`. Self-products are excluded, so the result has
    r(r+1)/2 columns.
    """
    W = validate_endmembers(W)
    return _expand(W)


def expand_lq_subset(X, K):
    """Expanded dictionary of the pixel columns X[:, K], in the order of K.

    Equals ``expand_lq(X[:, K])`` for valid selections; an empty K yields
    an m x 0 dictionary.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    K = np.asarray(K, dtype=int)
    if K.ndim != 1:
        K = K.reshape(-1)
    n = X.shape[1]
    if K.size and (K.min() < 0 or K.max() >= n):
        raise ValueError(f"pixel indices must lie in [0, {n - 1}]")
    if len(set(K.tolist())) != K.size:
        raise ValueError("pixel indices must be distinct")
    return _expand(X[:, K])


@dataclass(frozen=True)
class LqScene:
    """A synthetic near-separable scene and its ground truth.

    X: m x n observed pixels (dictionary times H, plus optional clipped
       Gaussian noise).
    W: m x r endmembers.
    H: q x n coefficients, q = r(r+1)/2; the columns at
       pure_pixel_indices are the canonical unit vectors e_1..e_r.
    pure_pixel_indices: 0-based pixel index of each endmember's pure pixel.
    permutation: column permutation applied to the [identity | mixed]
       block layout; pure_pixel_indices equals its first r entries.
    """

    X: np.ndarray
    W: np.ndarray
    H: np.ndarray
    pure_pixel_indices: np.ndarray
    permutation: np.ndarray
    noise_sigma: float
    alpha: float
    seed: int

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def r(self):
        return self.W.shape[1]


def generate_scene(W, n, alpha=0.5, noise_sigma=0.0, seed=0):
    """Generate an r-LQ near-separable scene with pure pixels for each endmember.

    The r pure columns (identity block) and n - r mixed columns drawn from
    a flat Dirichlet(alpha, ..., alpha) over all q = r(r+1)/2 dictionary
    coefficients are scattered over pixel slots by a uniformly random
    permutation. Gaussian noise of standard deviation ``noise_sigma`` is
    added afterwards and the result clipped at zero. All randomness is a
    deterministic function of ``seed``; draws happen in the fixed order
    mixed coefficients, permutation, noise.
    """
    W = validate_endmembers(W)
    m, r = W.shape
    if n < r:
        raise ValueError(f"need at least r={r} pixels, got n={n}")
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")

    rng = np.random.default_rng(seed)
    q = lq_dictionary_size(r)

    # Dirichlet via normalized Gamma(alpha, 1) draws
    gammas = rng.gamma(alpha, 1.0, size=(q, n - r))
    H_mixed = gammas / gammas.sum(axis=0, keepdims=True) if n > r else gammas

    permutation = rng.permutation(n)
    H = np.zeros((q, n))
    H[np.arange(r), permutation[:r]] = 1.0
    H[:, permutation[r:]] = H_mixed
    pure = permutation[:r].copy()

    X = _expand(W) @ H
    if noise_sigma > 0:
        X = X + rng.normal(0.0, noise_sigma, size=(m, n))
        X = np.maximum(X, 0.0)

    return LqScene(
        X=X,
        W=W.copy(),
        H=H,
        pure_pixel_indices=pure,
        permutation=permutation,
        noise_sigma=float(noise_sigma),
        alpha=float(alpha),
        seed=int(seed),
    )


def validate_separability(W, tol=1e-6, cfg=None):
    """Report endmembers lying in the hull of the others and their products.

    For each k, fits w_k over Delta by the expanded dictionary of W with
    every column involving w_k removed (i.e. the expansion of W without
    its k-th column). Endmember k violates separability when the fit
    residual is at most ``tol * ||w_k||``. Returns the 0-based indices of
    the violators.
    """
    W = validate_endmembers(W)
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if cfg is None:
        cfg = SolverConfig(max_iters=2000, rel_tol=1e-12)
    r = W.shape[1]
    if r == 1:
        return []
    violators = []
    for k in range(r):
        D = _expand(np.delete(W, k, axis=1))
        _, res = solve_nnls_delta(D, W[:, k], cfg)
        if np.linalg.norm(res) <= tol * np.linalg.norm(W[:, k]):
            violators.append(k)
    return violators
