"""Transfer-function evaluation and Schur-class certificates.

The transfer function of the adjoint of a colligation is evaluated by a
direct resolvent solve (never an explicit inverse), the lifting series
is summed by an operator recursion that is linear in the truncation
order, and Schur-class membership of emitted functions is certified by
sampling the Pick-type kernel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, NearSingularResolvent
from .colligation import BALL_ROW, Colligation
from .hypercontraction import cp_map
from .linalg import as_matrix, herm, opnorm
from .model_space import TupleOperator

#: Points where the resolvent condition number exceeds this are rejected.
COND_LIMIT = 1e12

DOMAIN_MARGIN = 1e-12


@dataclass
class TransferFunction:
    """Pointwise evaluator ``z -> A* + C* (I - Z D*)^{-1} Z B*``.

    ``d_in`` is the dimension the function acts on (the colligation's
    output defect block) and ``d_out`` the dimension it maps into (the
    input defect block); for a contractive colligation every interior
    value is a contraction.
    """

    colligation: Colligation
    cond_limit: float = COND_LIMIT
    d_in: int = field(init=False)
    d_out: int = field(init=False)

    def __post_init__(self):
        self.d_in = self.colligation.out_defect_dim
        self.d_out = self.colligation.in_defect_dim

    @property
    def geometry(self) -> str:
        return self.colligation.geometry

    @property
    def n(self) -> int:
        return len(self.colligation.in_state_dims)

    def _check_interior(self, z: np.ndarray) -> None:
        if self.geometry == BALL_ROW:
            gap = 1.0 - float(np.sum(np.abs(z) ** 2))
        else:
            gap = 1.0 - float(np.max(np.abs(z) ** 2))
        if gap <= DOMAIN_MARGIN:
            raise DomainViolation(f"evaluation point {z} is not strictly interior")

    def eval(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex).reshape(-1)
        if z.size != self.n:
            raise DomainViolation(
                f"point has {z.size} coordinates, transfer function expects {self.n}"
            )
        self._check_interior(z)
        coll = self.colligation
        a_adj = coll.block_a.conj().T
        state_dim = sum(coll.in_state_dims)
        if state_dim == 0:
            return a_adj.copy()
        if self.geometry == BALL_ROW:
            d_blocks = coll.d_blocks()
            b_blocks = coll.b_blocks()
            zd = sum(z[i] * d_blocks[i].conj().T for i in range(self.n))
            zb = sum(z[i] * b_blocks[i].conj().T for i in range(self.n))
        else:
            weights = np.concatenate(
                [np.full(d, z[i]) for i, d in enumerate(coll.in_state_dims)]
            )
            zd = weights[:, None] * coll.block_d.conj().T
            zb = weights[:, None] * coll.block_b.conj().T
        resolvent = np.eye(zd.shape[0], dtype=complex) - zd
        if np.linalg.cond(resolvent) >= self.cond_limit:
            raise NearSingularResolvent(f"resolvent nearly singular at {z}")
        return a_adj + coll.block_c.conj().T @ np.linalg.solve(resolvent, zb)

    __call__ = eval


def transfer_function(coll: Colligation) -> TransferFunction:
    return TransferFunction(coll)


def series_partial_lift(
    coll: Colligation, s: TupleOperator, order: int
) -> tuple[np.ndarray, float]:
    """Partial sum of the lifting series through word length ``order - 1``.

    Returns the partial sum (approximating the coupled defect target the
    colligation was built from) and the a-priori tail bound
    ``||Delta|| * ||sigma_S^{order+1}(I)||^{1/2}``.  The word sum over all
    length-``i`` products collapses to ``i`` applications of the map
    ``Y -> sum_l D_l Y S_l*``, so cost is linear in ``order``.
    """
    if coll.geometry != BALL_ROW:
        raise ValueError("the lifting series is defined for ball colligations")
    if order < 1:
        raise ValueError(f"truncation order must be >= 1, got {order}")
    if coll.in_map is None:
        raise ValueError("colligation lacks its construction maps")
    in_map = coll.in_map
    adjoints = s.adjoints()
    b_blocks = coll.b_blocks()
    d_blocks = coll.d_blocks()

    partial = coll.block_a @ in_map
    word = coll.block_c @ in_map
    for _ in range(order):
        layer = np.zeros_like(partial)
        for j in range(s.n):
            layer += b_blocks[j] @ word @ adjoints[j]
        partial = partial + layer
        nxt = np.zeros_like(word)
        for l in range(s.n):
            nxt += d_blocks[l] @ word @ adjoints[l]
        word = nxt

    tail = np.eye(s.dim, dtype=complex)
    for _ in range(order + 1):
        tail = cp_map(s, tail)
    bound = float(np.sqrt(max(opnorm(tail), 0.0)))
    if coll.delta_norm is not None:
        bound *= coll.delta_norm
    return partial, bound


@dataclass
class CertificateResult:
    min_eig: float
    passed: bool
    sample_count: int


def schur_agler_certificate_ball(phi_eval, samples, tol: float) -> CertificateResult:
    """Minimum eigenvalue of the sampled Pick-type kernel matrix.

    Assembles ``(I - phi(u_a) phi(u_b)*) / (1 - <u_a, u_b>)`` blockwise
    over the samples; nonnegativity (within ``tol``) certifies membership
    in the Schur class on the samples.
    """
    points = [np.asarray(u, dtype=complex).reshape(-1) for u in samples]
    values = [as_matrix(phi_eval(u)) for u in points]
    if not values:
        raise ValueError("at least one sample point is required")
    d = values[0].shape[0]
    m = len(points)
    mat = np.zeros((m * d, m * d), dtype=complex)
    eye = np.eye(d, dtype=complex)
    for a in range(m):
        for b in range(m):
            pairing = complex(np.sum(points[a] * points[b].conj()))
            block = (eye - values[a] @ values[b].conj().T) / (1.0 - pairing)
            mat[a * d : (a + 1) * d, b * d : (b + 1) * d] = block
    lam = float(np.linalg.eigvalsh(herm(mat))[0])
    return CertificateResult(min_eig=lam, passed=lam >= -tol, sample_count=m)


@dataclass(frozen=True)
class GridSpec:
    """Deterministic polar grid: ``radii`` magnitudes times ``angles`` phases
    per coordinate, scaled to keep the product points strictly interior."""

    radii: int = 5
    angles: int = 8
    radius: float = 0.9

    def __post_init__(self):
        if self.radii < 1 or self.angles < 1:
            raise ValueError("grid needs at least one radius and one angle")
        if not 0.0 < self.radius < 1.0:
            raise ValueError(f"grid radius must lie in (0, 1), got {self.radius}")


def grid_points(grid: GridSpec, geometry: str, n: int) -> list[tuple[complex, ...]]:
    """Full product grid over the coordinates, in deterministic order.

    On the ball the per-axis radius is shrunk by ``sqrt(n)`` so every
    product point stays inside the unit sphere.
    """
    on_ball = geometry in (BALL_ROW, "ball")
    scale = grid.radius / np.sqrt(n) if on_ball else grid.radius
    axis_values = []
    for t in range(grid.radii):
        r = scale * (t + 1) / grid.radii
        for a in range(grid.angles):
            theta = 2.0 * np.pi * a / grid.angles
            axis_values.append(r * np.exp(1j * theta))
    return [tuple(p) for p in itertools.product(axis_values, repeat=n)]


@dataclass
class ScanResult:
    max_norm: float
    rows: list[tuple[tuple[complex, ...], float]]


def sup_norm_scan(phi_eval, points) -> ScanResult:
    """Operator norm of the function over the points, plus per-point rows."""
    rows = []
    max_norm = 0.0
    for z in points:
        z = tuple(np.asarray(z, dtype=complex).reshape(-1))
        norm = opnorm(as_matrix(phi_eval(z)))
        rows.append((z, norm))
        max_norm = max(max_norm, norm)
    return ScanResult(max_norm=max_norm, rows=rows)


def write_scan_csv(result: ScanResult, n: int, stream) -> None:
    """CSV rows ``re(z1),im(z1),...,re(zn),im(zn),opnorm`` at 17 significant digits."""
    header = ",".join(
        itertools.chain.from_iterable((f"re(z{i+1})", f"im(z{i+1})") for i in range(n))
    )
    stream.write(header + ",opnorm\n")
    for z, norm in result.rows:
        parts = []
        for zi in z:
            parts.append(f"{zi.real:.17g}")
            parts.append(f"{zi.imag:.17g}")
        parts.append(f"{norm:.17g}")
        stream.write(",".join(parts) + "\n")
