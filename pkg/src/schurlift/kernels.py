"""Reproducing kernels on the unit ball and unit polydisc.

Two families are supported: ``(1 - <z,w>)^{-m}`` on the ball (integer
weight ``m >= 1``) and ``prod_i (1 - z_i conj(w_i))^{-gamma_i}`` on the
polydisc (integer weight vector ``gamma``).  Alongside the closed forms
this module exposes the power-series coefficient sequences and the
finitely supported coefficients of the inverse-kernel polynomial, which
drive the hereditary functional calculus downstream.

Coefficients are always accumulated as floating-point products of small
ratios, never as raw factorials, so orders up to ~60 stay exact to
double precision without overflow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, DomainViolation

MultiIndex = tuple[int, ...]

#: Strict-interior margin: a point is accepted only if its boundary gap
#: exceeds this.  The transfer-function resolvent degenerates at the
#: boundary, so exact-boundary points are rejected.
DOMAIN_MARGIN = 1e-12

BALL = "ball"
POLYDISC = "polydisc"


@dataclass(frozen=True)
class KernelSpec:
    """Selects the geometry, its weight and the coefficient-space dimension.

    ``geometry`` is ``"ball"`` (weight ``m``) or ``"polydisc"`` (weight
    vector ``gamma`` of length ``n``).  ``d_coeff`` is the dimension of
    the coefficient space the kernel is tensored with.
    """

    geometry: str
    n: int
    m: int | None = None
    gamma: tuple[int, ...] | None = None
    d_coeff: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {self.n}")
        if self.d_coeff < 1:
            raise ValueError(f"coefficient dimension must be >= 1, got {self.d_coeff}")
        if self.geometry == BALL:
            if self.m is None or self.m < 1:
                raise ValueError(f"ball weight must be a positive integer, got {self.m}")
        elif self.geometry == POLYDISC:
            if self.gamma is None or len(self.gamma) != self.n:
                raise ValueError("polydisc weight vector must have one entry per variable")
            if any(g < 1 for g in self.gamma):
                raise ValueError(f"polydisc weights must be positive integers, got {self.gamma}")
        else:
            raise ValueError(f"unknown geometry {self.geometry!r}")

    @classmethod
    def ball(cls, m: int, n: int, d_coeff: int = 1) -> "KernelSpec":
        return cls(geometry=BALL, n=n, m=int(m), d_coeff=d_coeff)

    @classmethod
    def polydisc(cls, gamma, d_coeff: int = 1) -> "KernelSpec":
        gamma = tuple(int(g) for g in gamma)
        return cls(geometry=POLYDISC, n=len(gamma), gamma=gamma, d_coeff=d_coeff)

    def with_coeff_dim(self, d_coeff: int) -> "KernelSpec":
        return KernelSpec(self.geometry, self.n, self.m, self.gamma, d_coeff)

    def boundary_gap(self, z) -> float:
        """Distance-like gap to the boundary: positive strictly inside."""
        z = np.asarray(z, dtype=complex).reshape(-1)
        if z.size != self.n:
            raise DimensionMismatch(f"point has {z.size} coordinates, spec expects {self.n}")
        if self.geometry == BALL:
            return 1.0 - float(np.sum(np.abs(z) ** 2))
        return 1.0 - float(np.max(np.abs(z) ** 2))

    def contains(self, z) -> bool:
        return self.boundary_gap(z) > DOMAIN_MARGIN

    def require_interior(self, z) -> None:
        gap = self.boundary_gap(z)
        if gap <= DOMAIN_MARGIN:
            raise DomainViolation(
                f"point {np.asarray(z)} is not strictly inside the {self.geometry} "
                f"(boundary gap {gap:.3e})"
            )


def _check_index(k, n: int | None = None) -> MultiIndex:
    k = tuple(int(e) for e in k)
    if any(e < 0 for e in k):
        raise ValueError(f"multi-index entries must be nonnegative, got {k}")
    if n is not None and len(k) != n:
        raise DimensionMismatch(f"multi-index {k} has length {len(k)}, expected {n}")
    return k


def ball_coeff(m: int, k) -> float:
    """Series coefficient of the ball kernel at multi-index ``k``.

    Equals ``(m + |k| - 1)! / (k! (m-1)!)``, accumulated as a product of
    ratios ``(m + t - 1) / j`` so no factorial is ever materialized.
    """
    if m < 1:
        raise ValueError(f"ball weight must be >= 1, got {m}")
    k = _check_index(k)
    value = 1.0
    total = 0
    for entry in k:
        for j in range(1, entry + 1):
            total += 1
            value *= (m + total - 1) / j
    return value


def polydisc_coeff(gamma, k) -> float:
    """Series coefficient of the polydisc kernel: a product of one-variable
    binomials ``C(gamma_i + k_i - 1, k_i)``."""
    gamma = tuple(int(g) for g in gamma)
    if any(g < 1 for g in gamma):
        raise ValueError(f"polydisc weights must be >= 1, got {gamma}")
    k = _check_index(k, len(gamma))
    value = 1.0
    for g, entry in zip(gamma, k):
        for j in range(1, entry + 1):
            value *= (g + j - 1) / j
    return value


def series_coeff(spec: KernelSpec, k) -> float:
    """Series coefficient of the spec's kernel at multi-index ``k``."""
    if spec.geometry == BALL:
        return ball_coeff(spec.m, _check_index(k, spec.n))
    return polydisc_coeff(spec.gamma, k)


def kernel_eval(spec: KernelSpec, z, w) -> complex:
    """Scalar kernel value ``K(z, w)``; both points must be strictly interior."""
    spec.require_interior(z)
    spec.require_interior(w)
    z = np.asarray(z, dtype=complex).reshape(-1)
    w = np.asarray(w, dtype=complex).reshape(-1)
    if spec.geometry == BALL:
        pairing = complex(np.sum(z * w.conj()))
        return (1.0 - pairing) ** (-spec.m)
    value = 1.0 + 0.0j
    for zi, wi, g in zip(z, w, spec.gamma):
        value *= (1.0 - zi * wi.conjugate()) ** (-g)
    return value


def inverse_kernel_coeffs(gamma) -> dict[MultiIndex, float]:
    """Coefficients of the inverse-kernel polynomial on the polydisc.

    Expanding ``prod_i (1 - x_i)^{gamma_i}`` gives the finitely supported
    map ``k -> (-1)^{|k|} prod_i C(gamma_i, k_i)`` on the box ``k <= gamma``.
    Convolving it against the kernel's own series yields the delta at 0,
    which is the contract tests rely on.
    """
    gamma = tuple(int(g) for g in gamma)
    if any(g < 1 for g in gamma):
        raise ValueError(f"polydisc weights must be >= 1, got {gamma}")
    coeffs: dict[MultiIndex, float] = {}
    for k in box_indices(gamma):
        value = 1.0
        for g, entry in zip(gamma, k):
            value *= math.comb(g, entry)
        if sum(k) % 2:
            value = -value
        coeffs[k] = value
    return coeffs


def indices_of_degree(n: int, total: int) -> list[MultiIndex]:
    """All multi-indices of length ``n`` with ``|k| = total``, lexicographic."""
    if n == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in indices_of_degree(n - 1, total - first):
            out.append((first,) + rest)
    return out


def indices_up_to(n: int, degree: int) -> list[MultiIndex]:
    """All multi-indices with ``|k| <= degree`` in graded lexicographic order."""
    out: list[MultiIndex] = []
    for total in range(degree + 1):
        out.extend(indices_of_degree(n, total))
    return out


def box_indices(gamma) -> list[MultiIndex]:
    """All multi-indices ``k <= gamma`` componentwise."""
    ranges = [range(int(g) + 1) for g in gamma]
    return [tuple(k) for k in itertools.product(*ranges)]


def monomial(z, k) -> complex:
    """``z^k = prod z_i^{k_i}``."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    k = _check_index(k, z.size)
    value = 1.0 + 0.0j
    for zi, e in zip(z, k):
        if e:
            value *= zi**e
    return value
