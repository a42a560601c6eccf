import numpy as np
import pytest

from minimax2 import problems
from minimax2.errors import DimensionMismatch, SingularYYBlock
from minimax2.oracle import (
    DerivedConstants,
    MinimaxProblem,
    OracleEval,
    assemble_reduced_hessian,
    build_oracle_eval,
    sample_concavity,
    symmetrize,
    validate_derivatives,
)


def fd_hessian(f, x, h=1e-4):
    n = len(x)
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            xpp, xpm, xmp, xmm = (x.copy() for _ in range(4))
            xpp[i] += h; xpp[j] += h
            xpm[i] += h; xpm[j] -= h
            xmp[i] -= h; xmp[j] += h
            xmm[i] -= h; xmm[j] -= h
            H[i, j] = H[j, i] = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4 * h * h)
    return H


def test_reduced_hessian_scalar_bilinear(bilinear_1d):
    H = assemble_reduced_hessian(bilinear_1d, np.array([0.3]), np.array([-1.0]))
    assert H.shape == (1, 1)
    assert H[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_reduced_hessian_zero_coupling():
    prob = problems.quadratic_problem(
        np.zeros((2, 2)), np.zeros((2, 3)), np.eye(3)
    )
    H = assemble_reduced_hessian(prob, np.zeros(2), np.ones(3))
    assert np.allclose(H, 0.0)


def test_reduced_hessian_matches_fd_of_primal():
    rng = np.random.default_rng(42)
    for _ in range(5):
        n, m = 3, 2
        prob = problems.random_quadratic(int(rng.integers(10**6)), n, m, convex=False)
        x = rng.standard_normal(n)
        y = prob.closed_form_y_star(x)
        H = assemble_reduced_hessian(prob, x, y)
        H_fd = fd_hessian(prob.closed_form_P, x)
        scale = 1.0 + np.linalg.norm(H_fd, 2)
        assert np.linalg.norm(H - H_fd, 2) <= 1e-4 * scale
        assert np.allclose(H, prob.closed_form_hess_P(x), atol=1e-10)


def test_grad_at_maximizer_matches_fd_of_primal():
    rng = np.random.default_rng(3)
    prob = problems.random_quadratic(11, 4, 3, convex=False)
    x = rng.standard_normal(4)
    y = prob.closed_form_y_star(x)
    g = prob.grad_x(x, y)
    h = 1e-6
    g_fd = np.zeros(4)
    for i in range(4):
        xp, xm = x.copy(), x.copy()
        xp[i] += h; xm[i] -= h
        g_fd[i] = (prob.closed_form_P(xp) - prob.closed_form_P(xm)) / (2 * h)
    assert np.linalg.norm(g - g_fd) <= 1e-5 * (1 + np.linalg.norm(g_fd))


def test_reduced_hessian_output_is_exactly_symmetric():
    rng = np.random.default_rng(5)
    prob = problems.random_quadratic(8, 5, 4, convex=False)
    H = assemble_reduced_hessian(prob, rng.standard_normal(5), rng.standard_normal(4))
    assert np.array_equal(H, H.T)


def test_singular_yy_block_raises():
    prob = problems.quadratic_problem(np.eye(2), np.zeros((2, 2)), np.eye(2))
    # Sabotage the yy block to be singular.
    prob.hess_yy = lambda x, y: np.zeros((2, 2))
    with pytest.raises(SingularYYBlock):
        assemble_reduced_hessian(prob, np.zeros(2), np.zeros(2))


def test_dimension_mismatch():
    prob = problems.quadratic_problem(np.eye(2), np.zeros((2, 2)), np.eye(2))
    with pytest.raises(DimensionMismatch):
        assemble_reduced_hessian(prob, np.zeros(3), np.zeros(2))


def test_derived_constants():
    prob = problems.quadratic_problem(
        np.array([[0.0]]), np.array([[1.0]]), np.array([[1.0]]), rho=2.0
    )
    consts = DerivedConstants.from_problem(prob)
    kappa = prob.ell / prob.mu
    assert consts.L1 == pytest.approx((kappa + 1) * prob.ell)
    assert consts.L_H == pytest.approx(2.0 * (1 + kappa) ** 2)
    assert consts.L2 == pytest.approx(consts.L_H * (1 + kappa))


def test_oracle_eval_symmetrizes():
    ev = OracleEval(
        g=np.zeros(2), H=np.array([[1.0, 2.0], [0.0, 1.0]]), eps1=0.0, eps2=0.0,
        inner_iters=0,
    )
    assert np.array_equal(ev.H, ev.H.T)


def test_validate_derivatives_quadratic_exact():
    prob = problems.random_quadratic(1, 3, 2, convex=False)
    z = np.random.default_rng(0).standard_normal(5)
    report = validate_derivatives(prob, z, step=1e-6 * (1 + np.linalg.norm(z)))
    assert report.max_error() <= 1e-6


def test_validate_derivatives_saddle_chain_interior(saddle_problem, saddle_params):
    rng = np.random.default_rng(1)
    x = rng.uniform(0.1 * saddle_params.tau, 0.9 * saddle_params.tau, saddle_params.n)
    z = np.concatenate([x, rng.standard_normal(saddle_params.m)])
    report = validate_derivatives(saddle_problem, z, step=1e-5)
    assert report.max_error() <= 1e-4


def test_validate_derivatives_flags_corruption():
    prob = problems.quadratic_problem(
        np.array([[0.0]]), np.array([[0.1]]), np.array([[1.0]])
    )
    clean_grad = prob.grad_x
    prob.grad_x = lambda x, y: clean_grad(x, y) + np.array([1.0])
    report = validate_derivatives(prob, np.array([0.1, 0.2]), step=1e-6)
    assert report.grad_x >= 0.5


def test_sample_concavity_flags_violation():
    good = problems.random_quadratic(0, 2, 2)
    assert sample_concavity(good, np.random.default_rng(0)) <= 1e-10
    bad = problems.quadratic_problem(np.eye(2), np.zeros((2, 2)), 2.0 * np.eye(2))
    bad.hess_yy = lambda x, y: -0.5 * np.eye(2)  # weaker concavity than declared mu
    assert sample_concavity(bad, np.random.default_rng(0)) > 0.0


def test_build_oracle_eval_bundles_metadata(bilinear_1d):
    ev = build_oracle_eval(
        bilinear_1d, np.array([1.0]), np.array([1.0]), eps1=1e-3, eps2=1e-2,
        inner_iters=7,
    )
    assert ev.inner_iters == 7
    assert ev.g[0] == pytest.approx(1.0)
    assert ev.H[0, 0] == pytest.approx(1.0)


def test_symmetrize_is_projection():
    rng = np.random.default_rng(9)
    M = rng.standard_normal((4, 4))
    S = symmetrize(M)
    assert np.array_equal(S, S.T)
    assert np.array_equal(symmetrize(S), S)
