"""Small dense-matrix helpers shared across the package.

Everything works on complex ndarrays; Hermitian inputs are symmetrized
before eigendecompositions so round-off never flips a branch.
"""

from __future__ import annotations

import numpy as np


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    return m


def herm(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A*)/2."""
    return (a + a.conj().T) / 2.0


def opnorm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def min_eig(a: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part."""
    if a.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(herm(a))[0])


def psd_tolerance(a: np.ndarray, base: float = 1e-9) -> float:
    """Scale-relative PSD acceptance threshold: base * (1 + ||A||)."""
    return base * (1.0 + opnorm(a))


def eigh_desc(a: np.ndarray):
    """Hermitian eigendecomposition with eigenvalues in descending order."""
    w, v = np.linalg.eigh(herm(a))
    return w[::-1], v[:, ::-1]


def psd_sqrt(a: np.ndarray, rank_tol: float = 1e-12):
    """PSD square root with eigenvalue clipping.

    Eigenvalues below ``rank_tol * max(lambda_max, 1)`` are treated as zero
    (they are round-off from differences of products).  Returns
    ``(root, rank, range_basis, min_eig)`` where ``range_basis`` has the
    ``rank`` leading eigenvectors as columns.
    """
    w, v = eigh_desc(a)
    lam_min = float(w[-1]) if w.size else 0.0
    cut = rank_tol * max(float(w[0]) if w.size else 0.0, 1.0)
    kept = w > cut
    rank = int(np.count_nonzero(kept))
    w_clipped = np.where(w > 0.0, w, 0.0)
    root = (v * np.sqrt(w_clipped)) @ v.conj().T
    return herm(root), rank, v[:, :rank], lam_min


def clip_psd(a: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (eigenvalue clipping)."""
    w, v = np.linalg.eigh(herm(a))
    w = np.where(w > 0.0, w, 0.0)
    return herm((v * w) @ v.conj().T)


def snap_partial_isometry(u: np.ndarray, cut: float = 0.5) -> np.ndarray:
    """Nearest partial isometry: singular values above ``cut`` go to 1, rest to 0."""
    if u.size == 0:
        return u
    a, s, bh = np.linalg.svd(u, full_matrices=False)
    keep = s > cut
    return a[:, keep] @ bh[keep, :]


def snap_unitary(u: np.ndarray) -> np.ndarray:
    """Nearest unitary (polar factor) of a square matrix."""
    a, _, bh = np.linalg.svd(u)
    return a @ bh


def block_diag(blocks) -> np.ndarray:
    """Complex block diagonal of a list of matrices."""
    blocks = [as_matrix(b) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out
