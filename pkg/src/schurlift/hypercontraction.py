"""Hereditary calculus for commuting tuples.

Covers the completely positive map of a tuple, binomial and polydisc
hereditary operators, defect data with PSD square roots, purity
diagnostics, truncated geometric operator sums, and the coefficients of
the canonical dilation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotConverged, NotHypercontraction
from .kernels import (
    BALL,
    KernelSpec,
    MultiIndex,
    indices_up_to,
    inverse_kernel_coeffs,
    series_coeff,
)
from .linalg import as_matrix, herm, min_eig, opnorm, psd_sqrt, psd_tolerance
from .model_space import TupleOperator

#: Base factor for the scale-relative PSD acceptance threshold.
PSD_BASE_TOL = 1e-9


def cp_map(t: TupleOperator, a: np.ndarray) -> np.ndarray:
    """The completely positive map ``A -> sum_i T_i A T_i*``."""
    a = as_matrix(a)
    if a.shape != (t.dim, t.dim):
        raise DimensionMismatch(f"operand shape {a.shape} does not match tuple dimension {t.dim}")
    out = np.zeros_like(a)
    for m in t.mats:
        out += m @ a @ m.conj().T
    return out


def hereditary_applied(t: TupleOperator, power: int, a: np.ndarray) -> np.ndarray:
    """Binomial expansion of ``(1 - sigma_T)^power`` applied to ``A``."""
    if power < 0:
        raise ValueError(f"power must be nonnegative, got {power}")
    a = as_matrix(a)
    out = np.zeros_like(a)
    term = a
    for j in range(power + 1):
        coeff = math.comb(power, j)
        out = out + ((-1.0) ** j) * coeff * term
        if j < power:
            term = cp_map(t, term)
    return herm(out)


def hereditary_ball(t: TupleOperator, power: int) -> np.ndarray:
    """``(1 - sigma_T)^power`` applied to the identity."""
    return hereditary_applied(t, power, np.eye(t.dim, dtype=complex))


def tuple_monomial(t: TupleOperator, k: MultiIndex) -> np.ndarray:
    """``T^k = prod_i T_i^{k_i}`` (order immaterial for commuting tuples)."""
    out = np.eye(t.dim, dtype=complex)
    for m, e in zip(t.mats, k):
        for _ in range(int(e)):
            out = out @ m
    return out


def hereditary_polydisc(t: TupleOperator, gamma) -> np.ndarray:
    """Inverse-kernel hereditary operator ``sum_{k<=gamma} c_k T^k (T^k)*``."""
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != t.n:
        raise DimensionMismatch(f"weight vector {gamma} does not match tuple length {t.n}")
    coeffs = inverse_kernel_coeffs(gamma)
    out = np.zeros((t.dim, t.dim), dtype=complex)
    for k, c in coeffs.items():
        mono = tuple_monomial(t, k)
        out += c * (mono @ mono.conj().T)
    return herm(out)


@dataclass
class DefectData:
    """Hereditary positivity operator, its PSD square root, and their range."""

    defect_square: np.ndarray
    defect: np.ndarray
    range_dim: int
    range_basis: np.ndarray
    min_eig: float

    @property
    def coord_map(self) -> np.ndarray:
        """Coordinates of ``D h`` in an orthonormal basis of the range."""
        return self.range_basis.conj().T @ self.defect


def defect(t: TupleOperator, spec: KernelSpec) -> DefectData:
    """Defect data of the tuple for the spec's geometry.

    Raises ``NotHypercontraction`` when the hereditary operator fails the
    scale-relative PSD test; eigenvalues inside the tolerance band below
    zero are clipped before taking the square root.
    """
    if spec.n != t.n:
        raise DimensionMismatch(f"spec dimension {spec.n} does not match tuple length {t.n}")
    if spec.geometry == BALL:
        square = hereditary_ball(t, spec.m)
    else:
        square = hereditary_polydisc(t, spec.gamma)
    lam_min = min_eig(square)
    if lam_min < -psd_tolerance(square, PSD_BASE_TOL):
        raise NotHypercontraction(lam_min)
    root, rank, basis, _ = psd_sqrt(square)
    return DefectData(
        defect_square=square,
        defect=root,
        range_dim=rank,
        range_basis=basis,
        min_eig=lam_min,
    )


@dataclass
class PurityReport:
    pure: bool
    conclusive: bool
    decay: list[float]


def purity_check(
    t: TupleOperator, spec: KernelSpec, *, tol: float = 1e-12, max_iter: int = 200
) -> PurityReport:
    """Iterate decay test for purity.

    Ball geometry iterates the completely positive map on the identity;
    the polydisc tracks per-coordinate power decay.  Hitting the
    iteration cap is reported as inconclusive rather than raised.
    """
    decay: list[float] = []
    if spec.geometry == BALL:
        current = np.eye(t.dim, dtype=complex)
        for _ in range(max_iter):
            current = cp_map(t, current)
            norm = opnorm(current)
            decay.append(norm)
            if norm < tol:
                return PurityReport(pure=True, conclusive=True, decay=decay)
        return PurityReport(pure=False, conclusive=False, decay=decay)
    powers = [np.eye(t.dim, dtype=complex) for _ in range(t.n)]
    for _ in range(max_iter):
        powers = [p @ m for p, m in zip(powers, t.mats)]
        norm = max(opnorm(p) for p in powers)
        decay.append(norm)
        if norm < tol:
            return PurityReport(pure=True, conclusive=True, decay=decay)
    return PurityReport(pure=False, conclusive=False, decay=decay)


def is_pure(t: TupleOperator, spec: KernelSpec, margin: float = 1e-10) -> bool:
    """Spectral-radius purity gate.

    Equivalent to iterate decay on finite matrices but immune to slow
    transients near the boundary: the ball uses the spectral radius of the
    completely positive map itself, the polydisc the per-coordinate radii.
    """
    if spec.geometry == BALL:
        mat = np.zeros((t.dim * t.dim, t.dim * t.dim), dtype=complex)
        for m in t.mats:
            mat += np.kron(m.conj(), m)
        radius = max(abs(np.linalg.eigvals(mat)))
    else:
        radius = max(max(abs(np.linalg.eigvals(m))) for m in t.mats)
    return bool(radius < 1.0 - margin)


def _geometric_sum(m: np.ndarray, a: np.ndarray, order: int) -> np.ndarray:
    """``sum_{k<order} M^k A (M^k)*``."""
    acc = a.copy()
    term = a
    for _ in range(1, order):
        term = m @ term @ m.conj().T
        acc += term
    return acc


def sigma_sum(
    t: TupleOperator,
    a: np.ndarray,
    order: int | None = None,
    skip: int | None = None,
    *,
    tol: float = 1e-12,
    max_order: int = 500,
) -> np.ndarray:
    """Product of per-coordinate geometric operator sums.

    With ``order`` given, returns the exact partial sum at that
    truncation (``order=1`` is the operand itself).  With ``order=None``
    the truncation grows until the increment drops below ``tol``;
    ``NotConverged`` is raised at the ``max_order`` cap.  ``skip`` drops
    one coordinate from the product, realizing the sum over the reduced
    tuple.
    """
    a = as_matrix(a)
    if a.shape != (t.dim, t.dim):
        raise DimensionMismatch(f"operand shape {a.shape} does not match tuple dimension {t.dim}")
    coords = [i for i in range(t.n) if i != skip]

    def partial(n: int) -> np.ndarray:
        out = a
        for i in coords:
            out = _geometric_sum(t.mats[i], out, n)
        return out

    if order is not None:
        if order < 1:
            raise ValueError(f"truncation order must be >= 1, got {order}")
        return herm(partial(order))

    prev = partial(1)
    for n in range(2, max_order + 1):
        cur = partial(n)
        inc = opnorm(cur - prev)
        if inc < tol:
            return herm(cur)
        prev = cur
    raise NotConverged(
        f"geometric operator sum did not converge within {max_order} terms", increment=inc
    )


def dilation_coefficients(
    t: TupleOperator, spec: KernelSpec, h: np.ndarray, degree: int
) -> dict[MultiIndex, np.ndarray]:
    """Series coefficients of the canonical dilation of ``h`` up to ``|k| <= degree``.

    The coefficient at ``k`` is ``rho(k) D T^{*k} h`` where ``D`` is the
    defect; the weighted squares ``||coef||^2 / rho(k)`` accumulate to
    ``||h||^2`` for pure tuples.
    """
    d = defect(t, spec)
    h = np.asarray(h, dtype=complex).reshape(-1)
    if h.size != t.dim:
        raise DimensionMismatch(f"vector length {h.size} does not match tuple dimension {t.dim}")
    adjoints = t.adjoints()
    coeffs: dict[MultiIndex, np.ndarray] = {}
    vec_cache: dict[MultiIndex, np.ndarray] = {(0,) * t.n: h}
    for k in indices_up_to(t.n, degree):
        if k not in vec_cache:
            i = next(idx for idx, e in enumerate(k) if e > 0)
            prev = list(k)
            prev[i] -= 1
            vec_cache[k] = adjoints[i] @ vec_cache[tuple(prev)]
        coeffs[k] = series_coeff(spec, k) * (d.defect @ vec_cache[k])
    return coeffs
