import numpy as np
import pytest

from schurlift import (
    Infeasible,
    KernelSpec,
    LiftResult,
    build_subspace,
    check_positivity,
    dilate_p_to_m,
    factorization_criterion,
    lift_ball,
    lift_p_gt_m,
    model_tuple,
    np_solve,
    np_target_operator,
    verify_lift,
)
from schurlift.errors import NotContraction, NotIntertwining, NotPositive
from schurlift.hypercontraction import cp_map, defect
from schurlift.kernels import kernel_eval
from schurlift.lifting_ball import target_pick_matrix
from schurlift.linalg import herm, min_eig, opnorm

from conftest import (
    random_ball_nodes,
    random_contraction,
    random_interior_points,
    scaled_targets,
)


def test_check_positivity_weight_one_is_defect_of_contraction():
    rng = np.random.default_rng(0)
    x = random_contraction(rng, 4, 4, norm_cap=0.9)
    spec = KernelSpec.ball(1, 2)
    nodes = random_ball_nodes(rng, 2, 2)
    s = model_tuple(build_subspace(spec.with_coeff_dim(2), nodes))
    report = check_positivity(s, x, 1)
    assert report.min_eig >= -1e-12
    assert opnorm(report.matrix - (np.eye(4) - x @ x.conj().T)) < 1e-12


def test_check_positivity_zero_intertwiner():
    rng = np.random.default_rng(1)
    spec = KernelSpec.ball(3, 2)
    s = model_tuple(build_subspace(spec, random_ball_nodes(rng, 3, 2)))
    x = np.zeros((3, 3), dtype=complex)
    report = check_positivity(s, x, 3)
    d = defect(s, KernelSpec.ball(2, 2))
    assert opnorm(report.matrix - d.defect_square) < 1e-12


def test_check_positivity_sign_matches_pick_matrix():
    # the operator's form on the kernel basis is the weight-one block matrix
    rng = np.random.default_rng(2)
    spec = KernelSpec.ball(2, 1)
    nodes = random_ball_nodes(rng, 2, 1, radius=0.8, min_sep=0.1)
    space = build_subspace(spec, nodes)
    s = model_tuple(space)
    for scale in (0.3, 0.8, 0.97):
        targets = [np.array([[scale]]), np.array([[-scale]])]
        x = np_target_operator(space, targets, space)
        if opnorm(x) > 1:
            continue
        report = check_positivity(s, x, 2)
        pick = target_pick_matrix(KernelSpec.ball(1, 1), nodes, targets)
        assert (report.min_eig >= -1e-10) == (min_eig(pick) >= -1e-10)


def test_lift_identity_intertwiner():
    rng = np.random.default_rng(3)
    spec = KernelSpec.ball(2, 2)
    space = build_subspace(spec, random_ball_nodes(rng, 3, 2))
    s = model_tuple(space)
    x = np.eye(space.dim, dtype=complex)
    res = lift_ball(s, s, x, 2)
    assert res.certificate.verify_residual <= 1e-10
    # the transfer function is the constant adjoint corner
    z = (0.1, 0.2j)
    assert np.allclose(res.phi(z), res.colligation.block_a.conj().T)


def test_lift_rejects_expansive_and_nonintertwining():
    rng = np.random.default_rng(4)
    spec = KernelSpec.ball(1, 1)
    space = build_subspace(spec, random_ball_nodes(rng, 2, 1))
    s = model_tuple(space)
    with pytest.raises(NotContraction):
        lift_ball(s, s, 1.5 * np.eye(space.dim), 1)
    skew = np.array([[0.0, 0.5], [0.0, 0.0]], dtype=complex)
    with pytest.raises(NotIntertwining):
        lift_ball(s, s, skew, 1)


def test_lift_not_positive_reports_eigenvalue():
    rng = np.random.default_rng(5)
    spec = KernelSpec.ball(2, 1)
    nodes = random_ball_nodes(rng, 2, 1, radius=0.85, min_sep=0.08)
    space = build_subspace(spec, nodes)
    s = model_tuple(space)
    found = False
    for scale in np.linspace(0.5, 0.99, 25):
        targets = [np.array([[scale]]), np.array([[-scale]])]
        x = np_target_operator(space, targets, space)
        report = check_positivity(s, x, 2)
        if opnorm(x) <= 1 and report.min_eig < -1e-3:
            found = True
            with pytest.raises(NotPositive) as err:
                lift_ball(s, s, x, 2)
            assert err.value.min_eig == pytest.approx(report.min_eig, abs=1e-10)
            break
    assert found


def test_np_solve_single_node_any_weight():
    for m in (1, 2, 3):
        spec = KernelSpec.ball(m, 1)
        res = np_solve(spec, [(0.3,)], [np.array([[0.7j]])])
        assert isinstance(res, LiftResult)
        assert abs(res.phi((0.3,))[0, 0] - 0.7j) < 1e-10


def test_np_solve_constant_targets():
    rng = np.random.default_rng(6)
    spec = KernelSpec.ball(2, 2)
    nodes = random_ball_nodes(rng, 3, 2)
    c = 0.4 - 0.3j
    res = np_solve(spec, nodes, [np.array([[c]])] * 3)
    assert isinstance(res, LiftResult)
    for z in nodes:
        assert abs(res.phi(z)[0, 0] - c) < 1e-9


def test_np_solve_infeasible_two_node():
    spec = KernelSpec.ball(1, 1)
    nodes = [(0.0,), (0.1,)]
    targets = [np.array([[0.0]]), np.array([[0.9]])]
    res = np_solve(spec, nodes, targets)
    assert isinstance(res, Infeasible)
    assert res.pick_min_eig < -1e-6


def test_np_solve_matrix_targets():
    rng = np.random.default_rng(7)
    spec = KernelSpec.ball(2, 2, d_coeff=2)
    nodes = random_ball_nodes(rng, 3, 2)
    targets = scaled_targets(rng, spec, nodes, d_out=2)
    res = np_solve(spec, nodes, targets, d_target=2)
    assert isinstance(res, LiftResult)
    for z, w in zip(nodes, targets):
        assert opnorm(res.phi(z) - w) < 1e-8
    assert res.certificate.verify_residual <= 1e-8


def test_np_solve_invariant_under_unitary_conjugation():
    rng = np.random.default_rng(8)
    spec = KernelSpec.ball(2, 2, d_coeff=2)
    nodes = random_ball_nodes(rng, 3, 2)
    targets = scaled_targets(rng, spec, nodes, d_out=2)
    ginibre = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    v, _ = np.linalg.qr(ginibre)
    rotated = [v @ w @ v.conj().T for w in targets]
    p1a = target_pick_matrix(spec, nodes, targets)
    p1b = target_pick_matrix(spec, nodes, rotated)
    assert min_eig(p1a) == pytest.approx(min_eig(p1b), abs=1e-10)
    one = KernelSpec.ball(1, 2, d_coeff=2)
    assert min_eig(target_pick_matrix(one, nodes, targets)) == pytest.approx(
        min_eig(target_pick_matrix(one, nodes, rotated)), abs=1e-10
    )


def test_verify_lift_detects_perturbation():
    rng = np.random.default_rng(9)
    spec = KernelSpec.ball(1, 2)
    nodes = random_ball_nodes(rng, 3, 2)
    targets = scaled_targets(rng, spec, nodes)
    res = np_solve(spec, nodes, targets)
    extras = res.certificate.extras["np"]
    q1, q2, x = extras.q_domain, extras.q_codomain, extras.x
    assert verify_lift(res.phi, q2, x, q1) <= 1e-10

    bad_node = nodes[0]

    def perturbed(z):
        value = res.phi(z)
        if np.allclose(np.asarray(z), np.asarray(bad_node)):
            return value + 0.1
        return value

    assert verify_lift(perturbed, q2, x, q1) >= 0.05


def test_verify_lift_zero_case():
    rng = np.random.default_rng(10)
    spec = KernelSpec.ball(1, 1)
    space = build_subspace(spec, random_ball_nodes(rng, 2, 1))
    x = np.zeros((space.dim, space.dim), dtype=complex)
    assert verify_lift(lambda z: np.zeros((1, 1)), space, x, space) == 0.0


def test_m_one_lift_always_exists():
    # weight one: the positivity gap is automatic for contractions
    rng = np.random.default_rng(11)
    spec = KernelSpec.ball(1, 2)
    for _ in range(10):
        nodes = random_ball_nodes(rng, 3, 2)
        space1 = build_subspace(spec, nodes)
        space2 = build_subspace(spec, nodes)
        targets = scaled_targets(rng, spec, nodes)
        x = np_target_operator(space1, targets, space2)
        pos = check_positivity(model_tuple(space2), x, 1)
        assert pos.min_eig >= -1e-10


def test_dilation_gram_preservation():
    rng = np.random.default_rng(12)
    p, m, n = 3, 1, 2
    nodes = random_ball_nodes(rng, 3, n)
    q2 = build_subspace(KernelSpec.ball(p, n), nodes)
    dil = dilate_p_to_m(q2, m)
    # brute-force oracle: the image Gram is the product of the two kernels
    spec_m = KernelSpec.ball(m, n)
    spec_rest = KernelSpec.ball(p - m, n)
    for a, za in enumerate(nodes):
        for b, zb in enumerate(nodes):
            expected = kernel_eval(spec_m, za, zb) * kernel_eval(spec_rest, za, zb)
            assert dil.image_gram[a, b] == pytest.approx(expected, rel=1e-12)
    assert dil.isometry_residual <= 1e-10


def test_dilation_rejects_equal_weights():
    rng = np.random.default_rng(13)
    q2 = build_subspace(KernelSpec.ball(2, 1), random_ball_nodes(rng, 2, 1))
    with pytest.raises(ValueError):
        dilate_p_to_m(q2, 2)


def test_dilation_single_node_transport():
    z = (0.4 - 0.1j,)
    q2 = build_subspace(KernelSpec.ball(3, 1), [z])
    dil = dilate_p_to_m(q2, 1)
    assert dil.tuple[0].shape == (1, 1)
    assert dil.tuple[0][0, 0] == pytest.approx(z[0])


def test_dilation_intertwines_adjoints():
    rng = np.random.default_rng(14)
    nodes = random_ball_nodes(rng, 3, 2)
    q2 = build_subspace(KernelSpec.ball(3, 2), nodes)
    s = model_tuple(q2)
    dil = dilate_p_to_m(q2, 1)
    for i in range(2):
        lhs = dil.isometry @ s[i].conj().T
        rhs = dil.tuple[i].conj().T @ dil.isometry
        assert opnorm(lhs - rhs) <= 1e-10


def test_lift_p_gt_m_zero_intertwiner():
    rng = np.random.default_rng(15)
    nodes = random_ball_nodes(rng, 2, 1)
    q1 = build_subspace(KernelSpec.ball(1, 1), nodes)
    q2 = build_subspace(KernelSpec.ball(2, 1), nodes)
    x = np.zeros((q2.dim, q1.dim), dtype=complex)
    comp = lift_p_gt_m(q1, q2, x)
    assert comp.verify_residual <= 1e-10
    for z in nodes:
        assert opnorm(comp.composite(z)) <= 1e-10


def test_lift_p_gt_m_positivity_eigenvalues_agree():
    rng = np.random.default_rng(16)
    nodes = random_ball_nodes(rng, 3, 2)
    q1 = build_subspace(KernelSpec.ball(1, 2), nodes)
    q2 = build_subspace(KernelSpec.ball(3, 2), nodes)
    targets = scaled_targets(rng, KernelSpec.ball(3, 2), nodes, weight_one=False)
    x = np_target_operator(q1, targets, q2)
    comp = lift_p_gt_m(q1, q2, x)
    a, b = comp.positivity_min_eigs
    assert abs(a - b) <= 1e-10
    assert comp.dilation.isometry_residual <= 1e-10
    assert comp.verify_residual <= 1e-6
    for z, w in zip(nodes, targets):
        assert opnorm(comp.composite(z) - w) <= 1e-6


def test_factorization_criterion_cases():
    rng = np.random.default_rng(17)
    samples = random_interior_points(rng, 30, 2, radius=0.8)
    zero = factorization_criterion(lambda z: np.zeros((1, 1)), 1, 3, samples, tol=1e-9, n=2)
    assert zero.passed
    # constant unitary at p = m: the sampled matrix vanishes identically
    unit = factorization_criterion(lambda z: np.eye(1), 2, 2, samples, tol=1e-9, n=2)
    assert unit.passed and abs(unit.min_eig) <= 1e-9
    # constant one with room: dominated by the higher-weight kernel
    one = factorization_criterion(lambda z: np.eye(1), 1, 3, samples, tol=1e-9, n=2)
    assert one.passed


def test_factorization_criterion_on_composite():
    rng = np.random.default_rng(18)
    nodes = random_ball_nodes(rng, 2, 2)
    q1 = build_subspace(KernelSpec.ball(1, 2), nodes)
    q2 = build_subspace(KernelSpec.ball(2, 2), nodes)
    targets = scaled_targets(rng, KernelSpec.ball(2, 2), nodes, weight_one=False)
    x = np_target_operator(q1, targets, q2)
    comp = lift_p_gt_m(q1, q2, x)
    samples = random_interior_points(rng, 40, 2, radius=0.85)
    crit = factorization_criterion(comp.composite, 1, 2, samples, tol=1e-7, n=2)
    assert crit.passed
