"""Lifting pipeline on the ball.

Positivity check, colligation lift with verification, the interpolation
front end over kernel spans, the dilation route from a higher weight to
a lower one with its composite lift, and the factorization certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .colligation import Colligation, build_ball_colligation
from .errors import (
    DimensionMismatch,
    IllConditioned,
    NotContraction,
    NotIntertwining,
    NotPositive,
    NotPure,
)
from .hypercontraction import (
    cp_map,
    defect,
    hereditary_applied,
    is_pure,
    DefectData,
)
from .kernels import KernelSpec, kernel_eval
from .linalg import as_matrix, herm, min_eig, opnorm, psd_tolerance
from .model_space import (
    KernelSubspace,
    TupleOperator,
    build_subspace,
    model_tuple,
    multiplier_adjoint_action,
    np_target_operator,
)
from .transfer import (
    CertificateResult,
    TransferFunction,
    series_partial_lift,
    transfer_function,
)

INTERTWINE_TOL = 1e-10
CONTRACTION_SLACK = 1e-10

#: Cap on the series order used for the built-in lift verification.
SERIES_ORDER_CAP = 60


@dataclass
class PositivityReport:
    min_eig: float
    matrix: np.ndarray


def check_positivity(s: TupleOperator, x: np.ndarray, m: int) -> PositivityReport:
    """Assemble ``(1 - sigma_S)^{m-1}(I - X X*)`` and report its bottom eigenvalue.

    A negative eigenvalue is data for the caller, not an error.
    """
    x = as_matrix(x)
    if x.shape[0] != s.dim:
        raise DimensionMismatch(
            f"intertwiner has {x.shape[0]} rows, tuple dimension is {s.dim}"
        )
    gap = hereditary_applied(s, m - 1, np.eye(s.dim, dtype=complex) - x @ x.conj().T)
    return PositivityReport(min_eig=min_eig(gap), matrix=gap)


@dataclass
class LiftCertificate:
    delta_min_eig: float
    generating_residual: float
    verify_residual: float
    series_residual: float | None = None
    series_order: int | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class LiftResult:
    phi: TransferFunction
    certificate: LiftCertificate
    colligation: Colligation


@dataclass
class Infeasible:
    """Certificate of an unsolvable instance: which test failed and how badly."""

    which: str
    pick_min_eig: float
    pick_matrix: np.ndarray
    delta_min_eig: float | None = None


def _check_contraction(x: np.ndarray) -> float:
    norm = opnorm(x)
    if norm > 1.0 + CONTRACTION_SLACK:
        raise NotContraction(norm)
    return norm


def _check_intertwining(t: TupleOperator, s: TupleOperator, x: np.ndarray) -> float:
    worst = 0.0
    for ti, si in zip(t.mats, s.mats):
        resid = opnorm(x @ ti - si @ x)
        scale = 1.0 + opnorm(x) * (opnorm(ti) + opnorm(si))
        worst = max(worst, resid / scale)
    if worst > INTERTWINE_TOL:
        raise NotIntertwining(worst)
    return worst


def lift_ball(
    t: TupleOperator,
    s: TupleOperator,
    x: np.ndarray,
    m: int,
    *,
    in_map: np.ndarray | None = None,
    out_map: np.ndarray | None = None,
    defect_t: DefectData | None = None,
) -> LiftResult:
    """Lift the intertwiner ``x`` to a transfer function.

    On positivity success the colligation is built and the lift is
    verified through the operator-identity series: the partial sums must
    reproduce the coupled defect target.  ``in_map``/``out_map`` override
    the defect coordinates (kernel spans pass evaluation at the origin so
    the emitted function acts between their coefficient spaces).
    """
    x = as_matrix(x)
    spec = KernelSpec.ball(m, t.n)
    if t.n != s.n:
        raise DimensionMismatch("tuples must have the same length")
    _check_contraction(x)
    _check_intertwining(t, s, x)
    if not is_pure(t, spec) or not is_pure(s, spec):
        raise NotPure("both tuples must be pure for the canonical dilation")
    if defect_t is None:
        defect_t = defect(t, spec)
    defect(s, spec)  # raises NotHypercontraction if S fails the hereditary test

    coll = build_ball_colligation(
        s, x, defect_t, m, in_map=in_map, out_map=out_map
    )
    phi = transfer_function(coll)

    # Pick the truncation from the a-priori tail bound, then sum once.
    delta_norm = coll.delta_norm if coll.delta_norm is not None else 1.0
    order = 1
    tail = cp_map(s, cp_map(s, np.eye(s.dim, dtype=complex)))
    while delta_norm * np.sqrt(max(opnorm(tail), 0.0)) > 1e-12 and order < SERIES_ORDER_CAP:
        order += 1
        tail = cp_map(s, tail)
    partial, _ = series_partial_lift(coll, s, order)
    series_residual = opnorm(partial - coll.out_target)

    cert = LiftCertificate(
        delta_min_eig=float(coll.delta_min_eig),
        generating_residual=coll.generating_residual,
        verify_residual=series_residual,
        series_residual=series_residual,
        series_order=order,
    )
    return LiftResult(phi=phi, certificate=cert, colligation=coll)


def verify_lift(
    phi_eval, space: KernelSubspace, x: np.ndarray, domain: KernelSubspace | None = None
) -> float:
    """Residual of the lift identity on the kernel basis:
    ``|| X* - (compressed multiplier adjoint) ||``."""
    x = as_matrix(x)
    action = multiplier_adjoint_action(space, phi_eval, domain)
    return opnorm(x.conj().T - action)


def target_pick_matrix(spec: KernelSpec, nodes, targets) -> np.ndarray:
    """Block matrix ``[(I - W_a W_b*) K(z_a, z_b)]`` for the spec's kernel."""
    mats = [as_matrix(w) for w in targets]
    d = mats[0].shape[0]
    eye = np.eye(d, dtype=complex)
    r = len(nodes)
    out = np.zeros((r * d, r * d), dtype=complex)
    for a in range(r):
        for b in range(r):
            block = kernel_eval(spec, nodes[a], nodes[b]) * (
                eye - mats[a] @ mats[b].conj().T
            )
            out[a * d : (a + 1) * d, b * d : (b + 1) * d] = block
    return herm(out)


@dataclass
class NpSolveExtras:
    q_domain: KernelSubspace
    q_codomain: KernelSubspace
    x: np.ndarray


def np_solve(
    spec: KernelSpec,
    nodes,
    targets,
    *,
    d_target: int | None = None,
    psd_base_tol: float = 1e-9,
) -> LiftResult | Infeasible:
    """Interpolation front end over kernel spans on the ball.

    Builds the two spans, the interpolation operator, and runs the lift;
    infeasibility carries the failing matrix (the weight-``m`` block
    matrix for contractivity, the weight-one matrix with the positivity
    gap eigenvalue otherwise).  On success the returned certificate's
    ``verify_residual`` is the kernel-basis residual of the lift identity
    and the extras carry the node-level data.
    """
    if spec.geometry != "ball":
        raise ValueError("np_solve expects a ball kernel spec")
    targets = [as_matrix(w) for w in targets]
    if d_target is None:
        d_target = targets[0].shape[0]
    q1 = build_subspace(spec, nodes)
    q2 = build_subspace(spec.with_coeff_dim(d_target), nodes)
    t = model_tuple(q1)
    s = model_tuple(q2)
    x = np_target_operator(q1, targets, q2)

    pick_m = target_pick_matrix(spec, q1.nodes, targets)
    pick_m_min = min_eig(pick_m)
    if pick_m_min < -psd_tolerance(pick_m, psd_base_tol):
        return Infeasible(
            which="contractivity", pick_min_eig=pick_m_min, pick_matrix=pick_m
        )

    pos = check_positivity(s, x, spec.m)
    pick_1 = target_pick_matrix(
        KernelSpec.ball(1, spec.n, spec.d_coeff), q1.nodes, targets
    )
    pick_1_min = min_eig(pick_1)
    if pos.min_eig < -psd_tolerance(pos.matrix, psd_base_tol):
        return Infeasible(
            which="positivity-gap",
            pick_min_eig=pick_1_min,
            pick_matrix=pick_1,
            delta_min_eig=pos.min_eig,
        )

    result = lift_ball(
        t,
        s,
        x,
        spec.m,
        in_map=q2.coeff_map_at_zero(),
        out_map=q1.coeff_map_at_zero(),
    )
    result.certificate.verify_residual = verify_lift(result.phi, q2, x, q1)
    result.certificate.extras.update(
        {
            "pick_weight_m_min_eig": pick_m_min,
            "pick_weight_1_min_eig": pick_1_min,
            "np": NpSolveExtras(q_domain=q1, q_codomain=q2, x=x),
        }
    )
    return result


@dataclass
class Dilation:
    """Finite realization of the weight-lowering dilation on a kernel span."""

    coeff_space: KernelSubspace
    tuple: TupleOperator
    isometry: np.ndarray
    isometry_residual: float
    coeff_map: np.ndarray
    image_gram: np.ndarray
    image_ortho: np.ndarray
    image_ortho_inv: np.ndarray


def dilate_p_to_m(q2: KernelSubspace, m: int) -> Dilation:
    """Identify the weight-``p`` span with a span inside a weight-``m`` space.

    The kernel at weight ``p`` factors as the weight-``m`` kernel times
    the weight-``p-m`` kernel, so each basis vector maps to the
    weight-``m`` kernel vector at the same node whose coefficient is the
    corresponding weight-``p-m`` kernel vector.  Gram matrices match, the
    map is an isometry, and the compressed shifts transport with the same
    diagonal adjoint action.
    """
    p = q2.spec.m
    n = q2.spec.n
    if p is None or q2.spec.geometry != "ball":
        raise ValueError("dilation expects a ball kernel span")
    if p <= m:
        raise ValueError(f"dilation requires p > m, got p={p}, m={m}")
    d = q2.spec.d_coeff
    coeff_space = build_subspace(KernelSpec.ball(p - m, n, d), q2.nodes)
    f_dim = coeff_space.dim

    # Coefficient vectors of the image basis, one column per span vector.
    c_mat = coeff_space.ortho_factor_inv  # (f, f): column a = coords of basis vector a
    spec_m = KernelSpec.ball(m, n, 1)
    node_of = [a // d for a in range(f_dim)]
    gram = np.zeros((f_dim, f_dim), dtype=complex)
    for a in range(f_dim):
        for b in range(f_dim):
            gram[a, b] = kernel_eval(
                spec_m, q2.nodes[node_of[a]], q2.nodes[node_of[b]]
            ) * complex(np.vdot(c_mat[:, a], c_mat[:, b]))
    gram = herm(gram)
    w, v = np.linalg.eigh(gram)
    if w[0] < 1e-10 * w[-1]:
        raise IllConditioned(
            f"image Gram nearly singular: min eig {w[0]:.3e}",
            min_eig=float(w[0]),
            max_eig=float(w[-1]),
        )
    ortho = v * (w**-0.5)
    ortho_inv = (v * (w**0.5)).conj().T

    mats = []
    for i in range(n):
        diag = np.array([q2.nodes[j][i].conjugate() for j in node_of])
        adj = ortho_inv @ (diag[:, None] * ortho)
        mats.append(adj.conj().T)
    s_prime = TupleOperator(tuple(mats))

    iso = ortho_inv @ q2.ortho_factor
    residual = opnorm(iso.conj().T @ iso - np.eye(q2.dim))
    coeff_map = c_mat @ ortho  # evaluation of the image at the origin
    return Dilation(
        coeff_space=coeff_space,
        tuple=s_prime,
        isometry=iso,
        isometry_residual=residual,
        coeff_map=coeff_map,
        image_gram=gram,
        image_ortho=ortho,
        image_ortho_inv=ortho_inv,
    )


@dataclass
class CoisometricFactor:
    """Evaluation rule of the adjoint dilation: value of the coefficient
    function at the point."""

    coeff_space: KernelSubspace

    def __call__(self, w) -> np.ndarray:
        return self.coeff_space.eval_map(w)


@dataclass
class CompositeInterpolant:
    factor_out: CoisometricFactor
    factor_in: TransferFunction

    def __call__(self, w) -> np.ndarray:
        return self.factor_out(w) @ self.factor_in(w)


@dataclass
class CompositeLift:
    phi1: TransferFunction
    phi2: CoisometricFactor
    composite: CompositeInterpolant
    inner: LiftResult
    dilation: Dilation
    verify_residual: float
    positivity_min_eigs: tuple[float, float]


def lift_p_gt_m(q1: KernelSubspace, q2: KernelSubspace, x: np.ndarray) -> CompositeLift:
    """Composite lift from a weight-``m`` span into a weight-``p`` span, p > m.

    The intertwiner is pushed through the dilation, lifted at weight
    ``m``, and composed with the co-isometric evaluation factor.  The
    positivity gap eigenvalue is computed on both sides of the dilation;
    agreement is part of the returned certificate.
    """
    m = q1.spec.m
    x = as_matrix(x)
    s = model_tuple(q2)
    t = model_tuple(q1)
    _check_contraction(x)
    _check_intertwining(t, s, x)

    pos = check_positivity(s, x, m)
    if pos.min_eig < -psd_tolerance(pos.matrix):
        raise NotPositive(pos.min_eig, context="positivity gap on the higher-weight span")

    dil = dilate_p_to_m(q2, m)
    x_tilde = dil.isometry @ x
    pos_tilde = check_positivity(dil.tuple, x_tilde, m)

    inner = lift_ball(
        t,
        dil.tuple,
        x_tilde,
        m,
        in_map=dil.coeff_map,
        out_map=q1.coeff_map_at_zero(),
    )
    phi2 = CoisometricFactor(dil.coeff_space)
    composite = CompositeInterpolant(factor_out=phi2, factor_in=inner.phi)
    residual = verify_lift(composite, q2, x, q1)
    return CompositeLift(
        phi1=inner.phi,
        phi2=phi2,
        composite=composite,
        inner=inner,
        dilation=dil,
        verify_residual=residual,
        positivity_min_eigs=(pos.min_eig, pos_tilde.min_eig),
    )


def factorization_criterion(
    phi_eval, m: int, p: int, samples, tol: float, n: int | None = None
) -> CertificateResult:
    """Sampled kernel test for factorization through the Schur class.

    Assembles ``K_{p-m+1}(u_a, u_b) I - K_1(u_a, u_b) phi(u_a) phi(u_b)*``
    over the samples; nonnegativity within ``tol`` passes.
    """
    points = [np.asarray(u, dtype=complex).reshape(-1) for u in samples]
    if not points:
        raise ValueError("at least one sample point is required")
    if n is None:
        n = points[0].size
    values = [as_matrix(phi_eval(u)) for u in points]
    d = values[0].shape[0]
    eye = np.eye(d, dtype=complex)
    spec_high = KernelSpec.ball(p - m + 1, n, 1)
    spec_one = KernelSpec.ball(1, n, 1)
    count = len(points)
    mat = np.zeros((count * d, count * d), dtype=complex)
    for a in range(count):
        for b in range(count):
            block = kernel_eval(spec_high, points[a], points[b]) * eye - kernel_eval(
                spec_one, points[a], points[b]
            ) * (values[a] @ values[b].conj().T)
            mat[a * d : (a + 1) * d, b * d : (b + 1) * d] = block
    lam = float(np.linalg.eigvalsh(herm(mat))[0])
    return CertificateResult(min_eig=lam, passed=lam >= -tol, sample_count=count)
