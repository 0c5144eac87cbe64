"""Lifting pipeline on the polydisc.

Feasibility of the summand decomposition of ``I - X X*`` under the
transformed positivity constraints, the induced state operators, the
colligation lift, and the power-series diagnostics of the internal
identities.

The existence theory behind the decomposition is non-constructive; here
feasibility is decided numerically by Dykstra's alternating projections
between an affine subspace (the decomposition equation plus auxiliary
variables pinned to the transformed operators) and a product of PSD
cones.  Failure to converge is reported as inconclusive and is
explicitly *not* an infeasibility certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colligation import Colligation, build_polydisc_colligation
from .errors import DimensionMismatch, NotPositive, NotPure
from .hypercontraction import defect, is_pure, DefectData
from .kernels import KernelSpec, indices_up_to, series_coeff
from .linalg import as_matrix, clip_psd, herm, min_eig, opnorm, psd_sqrt, psd_tolerance
from .lifting_ball import (
    LiftCertificate,
    LiftResult,
    Infeasible,
    _check_contraction,
    _check_intertwining,
    target_pick_matrix,
    verify_lift,
)
from .model_space import (
    TupleOperator,
    build_subspace,
    model_tuple,
    np_target_operator,
)
from .transfer import transfer_function


def conjugation_power(mat: np.ndarray, a: np.ndarray, power: int, subtract: bool) -> np.ndarray:
    """Apply ``(1 - C_M)^power`` (or ``C_M^power`` when not subtracting)."""
    out = a
    for _ in range(power):
        if subtract:
            out = out - mat @ out @ mat.conj().T
        else:
            out = mat @ out @ mat.conj().T
    return out


def transformed_positivity(s: TupleOperator, gamma, i: int, a: np.ndarray) -> np.ndarray:
    """``prod_{j != i} (1 - C_{S_j})^{gamma_j} (1 - C_{S_i})^{gamma_i - 1}`` applied to ``a``."""
    gamma = tuple(int(g) for g in gamma)
    out = as_matrix(a)
    for j in range(s.n):
        power = gamma[j] if j != i else gamma[j] - 1
        out = conjugation_power(s.mats[j], out, power, subtract=True)
    return herm(out)


def _transformed_adjoint(s: TupleOperator, gamma, i: int, a: np.ndarray) -> np.ndarray:
    """Adjoint of the transformed-positivity map (conjugations swap to adjoints)."""
    gamma = tuple(int(g) for g in gamma)
    out = as_matrix(a)
    for j in range(s.n):
        power = gamma[j] if j != i else gamma[j] - 1
        for _ in range(power):
            out = out - s.mats[j].conj().T @ out @ s.mats[j]
    return herm(out)


def hereditary_product(s: TupleOperator, gamma, a: np.ndarray) -> np.ndarray:
    """``prod_j (1 - C_{S_j})^{gamma_j}`` applied to ``a``."""
    out = as_matrix(a)
    for j, g in enumerate(gamma):
        out = conjugation_power(s.mats[j], out, int(g), subtract=True)
    return herm(out)


@dataclass
class AglerDecomposition:
    summands: tuple[np.ndarray, ...]
    reconstruction_residual: float
    cone_min_eigs: tuple[float, ...]
    summand_min_eigs: tuple[float, ...]
    iterations: int

    def to_json_dict(self) -> dict:
        return {
            "summands": [
                [[[float(v.real), float(v.imag)] for v in row] for row in g]
                for g in self.summands
            ],
            "reconstruction_residual": self.reconstruction_residual,
            "cone_min_eigs": list(self.cone_min_eigs),
            "summand_min_eigs": list(self.summand_min_eigs),
            "iterations": self.iterations,
        }


@dataclass
class Inconclusive:
    """Iteration cap reached; carries the best iterate and its residuals."""

    iterations: int
    residuals: dict
    best: tuple[np.ndarray, ...]


# --- Hermitian <-> real vector parametrization (Frobenius-isometric) ---


def _herm_basis_indices(q: int):
    diag = [(i, i) for i in range(q)]
    off = [(i, j) for i in range(q) for j in range(i + 1, q)]
    return diag, off


def _herm_to_vec(a: np.ndarray) -> np.ndarray:
    q = a.shape[0]
    diag, off = _herm_basis_indices(q)
    parts = [np.array([a[i, i].real for i, _ in diag])]
    if off:
        sqrt2 = np.sqrt(2.0)
        parts.append(np.array([a[i, j].real * sqrt2 for i, j in off]))
        parts.append(np.array([a[i, j].imag * sqrt2 for i, j in off]))
    return np.concatenate(parts)


def _vec_to_herm(v: np.ndarray, q: int) -> np.ndarray:
    diag, off = _herm_basis_indices(q)
    a = np.zeros((q, q), dtype=complex)
    for idx, (i, _) in enumerate(diag):
        a[i, i] = v[idx]
    if off:
        sqrt2 = np.sqrt(2.0)
        base = len(diag)
        for idx, (i, j) in enumerate(off):
            re = v[base + idx] / sqrt2
            im = v[base + len(off) + idx] / sqrt2
            a[i, j] = re + 1j * im
            a[j, i] = re - 1j * im
    return a


class _AffineProjector:
    """Orthogonal projector onto the affine set

    ``sum_i G_i = R`` and ``H_i = L_i(G_i)`` for all ``i``,

    over the variables ``(G_1..G_n, H_1..H_n)`` in the Frobenius-isometric
    real parametrization.  The constraint matrix is assembled once; each
    projection is a pair of matrix-vector products.
    """

    def __init__(self, s: TupleOperator, gamma, r_target: np.ndarray):
        self.q = s.dim
        self.n = s.n
        q_real = self.q * self.q
        self.q_real = q_real
        basis_vecs = np.eye(q_real)

        transform_mats = []
        for i in range(self.n):
            cols = np.empty((q_real, q_real))
            for b in range(q_real):
                elem = _vec_to_herm(basis_vecs[:, b], self.q)
                cols[:, b] = _herm_to_vec(transformed_positivity(s, gamma, i, elem))
            transform_mats.append(cols)

        n_vars = 2 * self.n * q_real
        n_rows = (self.n + 1) * q_real
        a = np.zeros((n_rows, n_vars))
        for i in range(self.n):
            a[:q_real, i * q_real : (i + 1) * q_real] = np.eye(q_real)
        for i in range(self.n):
            row0 = (1 + i) * q_real
            a[row0 : row0 + q_real, i * q_real : (i + 1) * q_real] = -transform_mats[i]
            col0 = (self.n + i) * q_real
            a[row0 : row0 + q_real, col0 : col0 + q_real] = np.eye(q_real)
        self.a = a
        b = np.zeros(n_rows)
        b[:q_real] = _herm_to_vec(r_target)
        self.b = b
        gram = a @ a.T
        self.solve = np.linalg.inv(gram)

    def project(self, v: np.ndarray) -> np.ndarray:
        resid = self.a @ v - self.b
        return v - self.a.T @ (self.solve @ resid)

    def constraint_residual(self, v: np.ndarray) -> float:
        return float(np.max(np.abs(self.a @ v - self.b)))


def agler_feasibility(
    s: TupleOperator,
    x: np.ndarray,
    gamma,
    *,
    tol: float = 1e-8,
    max_iter: int = 10000,
    initial=None,
) -> AglerDecomposition | Inconclusive:
    """Search for PSD summands of ``I - X X*`` with transformed positivity.

    Success requires the reconstruction residual and every eigenvalue
    violation to fall within ``tol``.  ``initial`` warm-starts the
    iteration from known summands.  For a single variable the summand is
    forced and the answer is immediate.

    The iteration actually targets a right-hand side shrunk by a tiny
    multiple of the identity and adds the slack back evenly afterwards:
    the transformed map sends the identity to a strictly positive
    operator on model spaces, so the returned summands have strictly PSD
    transforms and the downstream square roots never need clipping.
    """
    x = as_matrix(x)
    gamma = tuple(int(g) for g in gamma)
    q = s.dim
    if len(gamma) != s.n:
        raise DimensionMismatch(f"weight vector {gamma} does not match tuple length {s.n}")
    r_target = herm(np.eye(q, dtype=complex) - x @ x.conj().T)

    def summarize(gs, iterations, floor=-tol):
        recon = opnorm(sum(gs) - r_target)
        cone = tuple(min_eig(transformed_positivity(s, gamma, i, gs[i])) for i in range(s.n))
        own = tuple(min_eig(g) for g in gs)
        ok = recon <= tol and all(e >= floor for e in cone) and all(e >= floor for e in own)
        if ok:
            return AglerDecomposition(
                summands=tuple(herm(g) for g in gs),
                reconstruction_residual=recon,
                cone_min_eigs=cone,
                summand_min_eigs=own,
                iterations=iterations,
            )
        return None

    if s.n == 1:
        gs = [r_target]
        found = summarize(gs, 1)
        if found is not None:
            return found
        return Inconclusive(
            iterations=1,
            residuals={
                "reconstruction": 0.0,
                "cone_min_eigs": [min_eig(transformed_positivity(s, gamma, 0, r_target))],
                "summand_min_eigs": [min_eig(r_target)],
            },
            best=(r_target,),
        )

    # Slack that survives the iteration's eigenvalue tolerance: the cone
    # floor of the identity tells how much headroom evenly added slack buys.
    # The shrunk right-hand side must itself stay PSD, so boundary cases
    # (an isometric intertwiner direction) fall back to no slack.
    cone_floor = min(
        min_eig(transformed_positivity(s, gamma, i, np.eye(q, dtype=complex)))
        for i in range(s.n)
    )
    r_floor = min_eig(r_target)
    if cone_floor > 10.0 * tol and r_floor > 10.0 * tol:
        slack = min(
            4.0 * s.n * tol / cone_floor,
            r_floor / 2.0,
            1e-6 * (1.0 + opnorm(r_target)),
        )
    else:
        slack = 0.0
    r_inner = r_target - slack * np.eye(q, dtype=complex)
    pad = (slack / s.n) * np.eye(q, dtype=complex)

    projector = _AffineProjector(s, gamma, r_inner)
    q_real = projector.q_real
    if initial is not None:
        gs = [herm(as_matrix(g)) - pad for g in initial]
    else:
        gs = [r_inner / s.n for _ in range(s.n)]
    hs = [transformed_positivity(s, gamma, i, gs[i]) for i in range(s.n)]
    v = np.concatenate([_herm_to_vec(g) for g in gs] + [_herm_to_vec(h) for h in hs])
    correction = np.zeros_like(v)

    def unpack(vec):
        gs_out = [
            _vec_to_herm(vec[i * q_real : (i + 1) * q_real], q) for i in range(s.n)
        ]
        hs_out = [
            _vec_to_herm(vec[(s.n + i) * q_real : (s.n + i + 1) * q_real], q)
            for i in range(s.n)
        ]
        return gs_out, hs_out

    last = None
    for it in range(1, max_iter + 1):
        y = projector.project(v)
        w = y + correction
        gs_w, hs_w = unpack(w)
        clipped = [clip_psd(g) for g in gs_w] + [clip_psd(h) for h in hs_w]
        v_new = np.concatenate([_herm_to_vec(c) for c in clipped])
        correction = w - v_new
        v = v_new

        if it % 10 == 0 or it == max_iter:
            gs_y, _ = unpack(projector.project(v))
            # With slack active, insist on strict interiority so the state
            # operator square roots downstream never clip an eigenvalue.
            floor = tol if slack > 0.0 else -tol
            found = summarize([g + pad for g in gs_y], it, floor=floor)
            if found is not None:
                return found
            last = gs_y

    if last is None:
        last, _ = unpack(projector.project(v))
    padded = [g + pad for g in last]
    recon = opnorm(sum(padded) - r_target)
    cone = [min_eig(transformed_positivity(s, gamma, i, padded[i])) for i in range(s.n)]
    own = [min_eig(g) for g in padded]
    return Inconclusive(
        iterations=max_iter,
        residuals={
            "reconstruction": recon,
            "cone_min_eigs": cone,
            "summand_min_eigs": own,
        },
        best=tuple(herm(g) for g in padded),
    )


def f_operators(s: TupleOperator, gamma, dec: AglerDecomposition) -> list[np.ndarray]:
    """PSD square roots of the transformed summands; these are the state
    operators entering the colligation."""
    ops = []
    for i, g in enumerate(dec.summands):
        square = transformed_positivity(s, gamma, i, g)
        lam = min_eig(square)
        if lam < -psd_tolerance(square):
            raise NotPositive(lam, context=f"transformed summand {i}")
        root, _, _, _ = psd_sqrt(square)
        ops.append(root)
    return ops


def lift_polydisc(
    t: TupleOperator,
    s: TupleOperator,
    x: np.ndarray,
    gamma,
    dec: AglerDecomposition,
    *,
    in_map: np.ndarray | None = None,
    out_map: np.ndarray | None = None,
    defect_t: DefectData | None = None,
    balance_tol: float = 1e-8,
) -> LiftResult:
    """Build the polydisc colligation from the decomposition and lift.

    The certificate's ``verify_residual`` starts as the generating
    residual; interpolation front ends overwrite it with the kernel-basis
    residual of the lift identity.
    """
    x = as_matrix(x)
    gamma = tuple(int(g) for g in gamma)
    spec = KernelSpec.polydisc(gamma)
    _check_contraction(x)
    _check_intertwining(t, s, x)
    if not is_pure(t, spec) or not is_pure(s, spec):
        raise NotPure("both tuples must be pure for the canonical dilation")
    if defect_t is None:
        defect_t = defect(t, spec)
    defect(s, spec)

    ops = f_operators(s, gamma, dec)
    coll = build_polydisc_colligation(
        s,
        x,
        defect_t,
        gamma,
        ops,
        in_map=in_map,
        out_map=out_map,
        balance_tol=balance_tol,
    )
    phi = transfer_function(coll)
    cert = LiftCertificate(
        delta_min_eig=min(dec.cone_min_eigs),
        generating_residual=coll.generating_residual,
        verify_residual=coll.generating_residual,
        extras={"state_operators": ops},
    )
    return LiftResult(phi=phi, certificate=cert, colligation=coll)


def hereditary_difference_residual(
    t: TupleOperator, s: TupleOperator, x: np.ndarray, gamma
) -> float:
    """Residual of the identity relating the coupled defects to the
    hereditary product of ``I - X X*`` (exact under intertwining)."""
    x = as_matrix(x)
    d_s = defect(s, KernelSpec.polydisc(gamma)).defect_square
    d_t = defect(t, KernelSpec.polydisc(gamma)).defect_square
    lhs = d_s - x @ d_t @ x.conj().T
    rhs = hereditary_product(s, gamma, np.eye(s.dim, dtype=complex) - x @ x.conj().T)
    return opnorm(lhs - rhs)


def np_solve_polydisc(
    spec: KernelSpec,
    nodes,
    targets,
    *,
    d_target: int | None = None,
    psd_base_tol: float = 1e-9,
    feasibility_tol: float = 1e-10,
    max_iter: int = 10000,
    balance_tol: float = 1e-8,
) -> LiftResult | Infeasible | Inconclusive:
    """Interpolation front end over polydisc kernel spans."""
    if spec.geometry != "polydisc":
        raise ValueError("np_solve_polydisc expects a polydisc kernel spec")
    targets = [as_matrix(w) for w in targets]
    if d_target is None:
        d_target = targets[0].shape[0]
    q1 = build_subspace(spec, nodes)
    q2 = build_subspace(spec.with_coeff_dim(d_target), nodes)
    t = model_tuple(q1)
    s = model_tuple(q2)
    x = np_target_operator(q1, targets, q2)

    pick = target_pick_matrix(spec, q1.nodes, targets)
    pick_min = min_eig(pick)
    if pick_min < -psd_tolerance(pick, psd_base_tol):
        return Infeasible(which="contractivity", pick_min_eig=pick_min, pick_matrix=pick)

    dec = agler_feasibility(s, x, spec.gamma, tol=feasibility_tol, max_iter=max_iter)
    if isinstance(dec, Inconclusive):
        return dec

    result = lift_polydisc(
        t,
        s,
        x,
        spec.gamma,
        dec,
        in_map=q2.coeff_map_at_zero(),
        out_map=q1.coeff_map_at_zero(),
        balance_tol=balance_tol,
    )
    result.certificate.verify_residual = verify_lift(result.phi, q2, x, q1)
    result.certificate.extras.update(
        {
            "pick_min_eig": pick_min,
            "decomposition": dec,
            "hereditary_difference_residual": hereditary_difference_residual(
                t, s, x, spec.gamma
            ),
            "np": {"q_domain": q1, "q_codomain": q2, "x": x},
        }
    )
    return result


@dataclass
class PsiDiagnostics:
    gamma_norms: tuple[float, ...]
    embed_residual: float
    psi_norm: float
    degree: int


def psi_gamma_diagnostics(
    coll: Colligation, s: TupleOperator, gamma, degree: int
) -> PsiDiagnostics:
    """Power-series diagnostics of the internal lift identities.

    The resolvent column of the colligation adjoint is expanded to the
    given degree by the multi-degree coefficient recursion, then paired
    back through the dilation coefficients of ``s``.  Reported are the
    per-block residuals against the state coordinate maps (these decay
    geometrically in the degree when the lift is correct), the recursion
    residual of the structural identity ``Psi = embed C* + sum_j
    shift_j Psi_j D_j*`` (exact per degree), and the operator norm of
    the truncated row (a contraction up to truncation).
    """
    if coll.in_map is None or coll.state_coord_maps is None:
        raise ValueError("colligation lacks its construction maps")
    gamma = tuple(int(g) for g in gamma)
    n = len(coll.in_state_dims)
    if len(gamma) != n:
        raise DimensionMismatch(f"weight vector {gamma} does not match the state blocks")
    spec = KernelSpec.polydisc(gamma)
    state_dim = sum(coll.in_state_dims)
    d_adj = coll.block_d.conj().T
    c_adj = coll.block_c.conj().T  # coefficient space <- state space

    # Row selectors per state block.
    masks = []
    start = 0
    for dim in coll.in_state_dims:
        mask = np.zeros(state_dim)
        mask[start : start + dim] = 1.0
        masks.append(mask)
        start += dim
    jd = [m[:, None] * d_adj for m in masks]

    order = indices_up_to(n, degree)
    resolvent: dict = {}
    coeffs: dict = {}
    s_pow: dict = {(0,) * n: np.eye(s.dim, dtype=complex)}
    in_adj = coll.in_map.conj().T

    paired = np.zeros((s.dim, state_dim), dtype=complex)
    psi_gram = np.zeros((state_dim, state_dim), dtype=complex)
    embed_residual = 0.0
    for k in order:
        if sum(k) == 0:
            resolvent[k] = np.eye(state_dim, dtype=complex)
        else:
            acc = np.zeros((state_dim, state_dim), dtype=complex)
            for i in range(n):
                if k[i] > 0:
                    prev = list(k)
                    prev[i] -= 1
                    acc += jd[i] @ resolvent[tuple(prev)]
            resolvent[k] = acc
            i = next(idx for idx, e in enumerate(k) if e > 0)
            prev = list(k)
            prev[i] -= 1
            s_pow[k] = s.mats[i] @ s_pow[tuple(prev)]
        a_k = c_adj @ resolvent[k]
        coeffs[k] = a_k
        paired += s_pow[k] @ in_adj @ a_k
        psi_gram += (a_k.conj().T @ a_k) / series_coeff(spec, k)
        if sum(k) > 0:
            rhs = np.zeros_like(a_k)
            for j in range(n):
                if k[j] > 0:
                    prev = list(k)
                    prev[j] -= 1
                    rhs += coeffs[tuple(prev)] @ jd[j]
            embed_residual = max(embed_residual, opnorm(a_k - rhs))

    gamma_norms = []
    start = 0
    for i, dim in enumerate(coll.in_state_dims):
        block = paired[:, start : start + dim]
        gamma_norms.append(opnorm(coll.state_coord_maps[i].conj().T - block))
        start += dim
    psi_norm = float(np.sqrt(max(opnorm(psi_gram), 0.0)))
    return PsiDiagnostics(
        gamma_norms=tuple(gamma_norms),
        embed_residual=embed_residual,
        psi_norm=psi_norm,
        degree=degree,
    )
