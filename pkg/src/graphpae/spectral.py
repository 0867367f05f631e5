"""Normalized Laplacian, top-K eigenpairs, relative-distance encodings, and
frequency-magnitude analysis of corrupted graphs."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ArgumentError, NumericalError, ParseError
from .graph import Graph

CACHE_MAGIC = b"PAES"
CACHE_VERSION = 1

# dense LAPACK below this size; Lanczos (ARPACK) above
DENSE_CUTOFF = 2000


@dataclass(frozen=True)
class SpectralBasis:
    """K algebraically smallest eigenpairs of the normalized Laplacian,
    eigenvalues ascending, one eigenvector per column."""

    eigenvalues: np.ndarray  # (K,)
    eigenvectors: np.ndarray  # (N, K)

    @property
    def k(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def n(self) -> int:
        return int(self.eigenvectors.shape[0])


def adjacency(g: Graph) -> sp.csr_matrix:
    dst, src = g.edge_endpoints()
    data = np.ones(dst.shape[0])
    return sp.csr_matrix((data, (dst, src)), shape=(g.num_nodes, g.num_nodes))


def normalized_laplacian(g: Graph, dense: bool | None = None):
    """L = I - D^{-1/2} A D^{-1/2}; isolated nodes get an identity row."""
    n = g.num_nodes
    deg = g.degrees()
    inv_sqrt = np.zeros(n)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    a = adjacency(g)
    d_half = sp.diags(inv_sqrt)
    lap = sp.identity(n, format="csr") - d_half @ a @ d_half
    if dense is None:
        dense = n <= DENSE_CUTOFF
    if dense:
        lap = np.asarray(lap.todense())
        return 0.5 * (lap + lap.T)
    return lap.tocsr()


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: the entry of largest absolute value in
    each column is made positive (ties resolved by lowest index)."""
    out = vectors.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            out[:, k] = -col
    return out


def topk_eigenpairs(lap, k: int, seed: int = 0) -> SpectralBasis:
    """K algebraically smallest eigenpairs, ascending, sign-fixed.

    Dense symmetric solve for small operators; Lanczos (shift-invert-free
    ARPACK) for large sparse ones.
    """
    n = lap.shape[0]
    if not (1 <= k <= n):
        raise ArgumentError(f"K={k} outside [1, N={n}]")
    is_dense = isinstance(lap, np.ndarray)
    if is_dense or n <= DENSE_CUTOFF or k > n - 2:
        mat = lap if is_dense else np.asarray(lap.todense())
        vals, vecs = np.linalg.eigh(mat)
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        try:
            vals, vecs = spla.eigsh(lap, k=k, which="SA", v0=v0, maxiter=50 * n)
        except spla.ArpackNoConvergence as exc:
            raise NumericalError(f"Lanczos did not converge: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    residual = _max_residual(lap, vals, vecs)
    if residual > 1e-6:
        raise NumericalError(f"eigenpair residual {residual:.2e} exceeds 1e-6")
    return SpectralBasis(np.ascontiguousarray(vals), np.ascontiguousarray(fix_signs(vecs)))


def _max_residual(lap, vals, vecs):
    lv = lap @ vecs
    return float(np.max(np.linalg.norm(lv - vecs * vals[None, :], axis=0)))


def relative_distances(basis: SpectralBasis, g: Graph) -> np.ndarray:
    """Per stored edge (i, j): ||U_i - U_j||_2. Returns (E,) aligned with the
    CSR edge order; symmetric and invariant to eigenvector sign flips."""
    return distances_from_positions(basis.eigenvectors, g)


def distances_from_positions(positions: np.ndarray, g: Graph) -> np.ndarray:
    dst, src = g.edge_endpoints()
    diff = positions[dst] - positions[src]
    return np.linalg.norm(diff, axis=1)


def offset_positions(basis: SpectralBasis, masked: np.ndarray, noise_scale: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. U(-noise_scale, noise_scale) noise to the eigenvector rows of
    the masked nodes. Returns the perturbed position matrix (norms and
    orthogonality deliberately not re-enforced)."""
    if noise_scale < 0:
        raise ArgumentError("noise scale must be nonnegative")
    out = basis.eigenvectors.copy()
    masked = np.asarray(masked, dtype=np.int64)
    if masked.size and noise_scale > 0:
        delta = rng.uniform(-noise_scale, noise_scale, size=(masked.size, basis.k))
        out[masked] += delta
    return out


# ---------------------------------------------------------------------------
# frequency-magnitude analysis


def spectral_coefficients(vectors: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Feature-averaged spectral coefficients: row i is the mean over feature
    dimensions of (U^T X)[i]."""
    return (vectors.T @ features).mean(axis=1)


def band_magnitudes(eigenvalues: np.ndarray, coeffs: np.ndarray, bands):
    """Mean coefficient per frequency band [f1, f2]; empty bands are skipped.

    Returns a list of (f1, f2, mean) tuples.
    """
    out = []
    for f1, f2 in bands:
        if f1 > f2:
            raise ArgumentError(f"band ({f1}, {f2}) has f1 > f2")
        mask = (eigenvalues >= f1) & (eigenvalues <= f2)
        if not np.any(mask):
            continue
        out.append((f1, f2, float(coeffs[mask].mean())))
    return out


def band_abs_diff(eigenvalues, coeffs_a, coeffs_b, bands):
    """Mean |per-index coefficient difference| within each band."""
    out = []
    for f1, f2 in bands:
        if f1 > f2:
            raise ArgumentError(f"band ({f1}, {f2}) has f1 > f2")
        mask = (eigenvalues >= f1) & (eigenvalues <= f2)
        if not np.any(mask):
            continue
        out.append((f1, f2, float(np.abs(coeffs_a[mask] - coeffs_b[mask]).mean())))
    return out


def default_bands(width=0.1, lo=0.0, hi=2.0):
    edges = np.arange(lo, hi + 1e-9, width)
    return list(zip(edges[:-1], edges[1:]))


# ---------------------------------------------------------------------------
# basis cache


def save_basis(basis: SpectralBasis, path):
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<H", CACHE_VERSION))
        fh.write(struct.pack("<QQ", basis.n, basis.k))
        fh.write(np.ascontiguousarray(basis.eigenvalues, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.eigenvectors, dtype="<f8").tobytes())


def load_basis(path) -> SpectralBasis:
    with open(path, "rb") as fh:
        if fh.read(4) != CACHE_MAGIC:
            raise ParseError(f"{path}: bad magic")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != CACHE_VERSION:
            raise ParseError(f"{path}: unsupported version {version}")
        n, k = struct.unpack("<QQ", fh.read(16))
        vals = np.frombuffer(fh.read(8 * k), dtype="<f8").copy()
        vecs = np.frombuffer(fh.read(8 * n * k), dtype="<f8").reshape(n, k).copy()
    return SpectralBasis(vals, vecs)
