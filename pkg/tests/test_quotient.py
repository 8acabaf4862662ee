import numpy as np
import pytest

from symid.errors import HorizontalSolveError
from symid.manifold import (
    OrthogonalMatrix,
    SystemTriple,
    TangentTriple,
    group_action,
    metric,
    norm,
    random_tangent,
    random_triple,
    tangent_action,
)
from symid.quotient import (
    build_beta,
    horizontal_project,
    horizontal_residual,
    solve_skew,
    vertical_vector,
)


def rand_skew(rng, n):
    x = rng.standard_normal((n, n))
    return 0.5 * (x - x.T)


def kronecker_oracle(theta, beta):
    """Full n^2 x n^2 representation of the skew operator, solved on the
    skew subspace: the independent cross-check for solve_skew."""
    n = theta.n
    a = theta.A
    ai = np.linalg.inv(a)
    s = theta.B @ theta.B.T + theta.C.T @ theta.C
    eye = np.eye(n)
    k0 = np.kron(ai, a) + np.kron(a, ai) - 2.0 * np.eye(n * n)
    k1 = np.kron(eye, s) + np.kron(s, eye)
    k = k1 + 2.0 * k0
    # Columns of Z embed the orthonormal skew basis into vec-space.
    rows, cols = np.triu_indices(n, k=1)
    z = np.zeros((n * n, rows.size))
    for col in range(rows.size):
        e = np.zeros((n, n))
        e[rows[col], cols[col]] = 1.0 / np.sqrt(2.0)
        e[cols[col], rows[col]] = -1.0 / np.sqrt(2.0)
        z[:, col] = e.reshape(-1, order="F")
    coeff = np.linalg.solve(z.T @ k @ z, -z.T @ beta.reshape(-1, order="F"))
    return (z @ coeff).reshape((n, n), order="F")


class TestBuildBeta:
    def test_zero_tangent(self):
        rng = np.random.default_rng(0)
        th = random_triple(rng, 3, 1, 2)
        beta = build_beta(th, TangentTriple.zero(th))
        assert np.array_equal(beta, np.zeros((3, 3)))

    def test_symmetric_a_at_identity(self):
        rng = np.random.default_rng(1)
        th = SystemTriple(np.eye(3), np.zeros((3, 1)), np.zeros((1, 3)))
        a = 0.5 * (lambda x: x + x.T)(rng.standard_normal((3, 3)))
        eta = TangentTriple(a, np.zeros((3, 1)), np.zeros((1, 3)))
        assert np.allclose(build_beta(th, eta), 0.0, atol=1e-14)

    def test_hand_expansion(self):
        th = SystemTriple(np.eye(2), np.array([[1.0], [0.0]]), np.zeros((1, 2)))
        eta = TangentTriple(np.zeros((2, 2)), np.array([[0.0], [1.0]]), np.zeros((1, 2)))
        beta = build_beta(th, eta)
        assert np.allclose(beta, [[0.0, -1.0], [1.0, 0.0]])

    def test_exactly_skew(self):
        rng = np.random.default_rng(2)
        th = random_triple(rng, 4, 2, 2)
        beta = build_beta(th, random_tangent(rng, th))
        assert np.array_equal(beta, -beta.T)


class TestSolveSkew:
    def test_n1_trivial(self):
        th = SystemTriple([[2.0]], [[1.0]], [[1.0]])
        rep = solve_skew(th, np.zeros((1, 1)))
        assert rep.X == pytest.approx(0.0)
        assert rep.residual_norm == 0.0

    def test_homogeneous_unique_zero(self):
        rng = np.random.default_rng(3)
        th = random_triple(rng, 3, 1, 1)
        rep = solve_skew(th, np.zeros((3, 3)))
        assert np.allclose(rep.X, 0.0, atol=1e-14)

    def test_kronecker_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            th = random_triple(rng, 3, 2, 2)
            beta = rand_skew(rng, 3)
            rep = solve_skew(th, beta)
            assert rep.residual_norm <= 1e-10
            assert np.allclose(rep.X, kronecker_oracle(th, beta), atol=1e-9)
            assert np.linalg.norm(rep.X + rep.X.T) <= 1e-12

    def test_singular_operator_fires(self):
        # A = I with B = C = 0 violates the solvability assumption: the
        # repeated eigenvalue shares its whole eigenspace with ker B^T, ker C.
        th = SystemTriple(np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)))
        with pytest.raises(HorizontalSolveError):
            solve_skew(th, rand_skew(np.random.default_rng(5), 2))

    def test_simple_eigenvalues_nonsingular(self):
        rng = np.random.default_rng(6)
        th = SystemTriple(np.diag([0.5, 1.0, 2.0]), np.zeros((3, 1)), np.zeros((1, 3)))
        rep = solve_skew(th, rand_skew(rng, 3))
        assert np.isfinite(rep.operator_condition)
        assert rep.operator_condition < 1e12


class TestHorizontalProject:
    def test_horizontal_input_unchanged(self):
        rng = np.random.default_rng(7)
        th = random_triple(rng, 3, 2, 1)
        eta = horizontal_project(th, random_tangent(rng, th))
        again = horizontal_project(th, eta)
        assert np.allclose(again.xi_A, eta.xi_A, atol=1e-10)
        assert np.allclose(again.xi_B, eta.xi_B, atol=1e-10)
        assert np.allclose(again.xi_C, eta.xi_C, atol=1e-10)

    def test_vertical_annihilated(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            th = random_triple(rng, 3, 2, 2)
            v = vertical_vector(th, rand_skew(rng, 3))
            out = horizontal_project(th, v)
            assert norm(th, out) <= 1e-9 * max(1.0, norm(th, v))

    def test_output_is_horizontal(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            th = random_triple(rng, 4, 1, 2)
            eta = random_tangent(rng, th)
            out = horizontal_project(th, eta)
            assert horizontal_residual(th, out) <= 1e-9 * max(1.0, norm(th, eta))

    def test_orthogonal_decomposition(self):
        rng = np.random.default_rng(10)
        th = random_triple(rng, 3, 2, 1)
        eta = random_tangent(rng, th)
        proj = horizontal_project(th, eta)
        resid = eta - proj
        inner = metric(th, resid, proj)
        assert abs(inner) <= 1e-9 * metric(th, eta, eta)

    def test_linearity(self):
        rng = np.random.default_rng(11)
        th = random_triple(rng, 3, 1, 1)
        eta = random_tangent(rng, th)
        ze = random_tangent(rng, th)
        lhs = horizontal_project(th, 2.5 * eta + ze)
        rhs = 2.5 * horizontal_project(th, eta) + horizontal_project(th, ze)
        assert np.allclose(lhs.xi_A, rhs.xi_A, atol=1e-9)
        assert np.allclose(lhs.xi_B, rhs.xi_B, atol=1e-9)
        assert np.allclose(lhs.xi_C, rhs.xi_C, atol=1e-9)

    def test_vertical_horizontal_complementarity(self):
        rng = np.random.default_rng(12)
        th = random_triple(rng, 3, 2, 2)
        v = vertical_vector(th, rand_skew(rng, 3))
        hz = horizontal_project(th, random_tangent(rng, th))
        assert abs(metric(th, v, hz)) <= 1e-9 * norm(th, v) * norm(th, hz)

    def test_equivariance_under_group_action(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            th = random_triple(rng, 3, 2, 2)
            eta = random_tangent(rng, th)
            eta = eta * (1.0 / norm(th, eta))
            u = OrthogonalMatrix.random(rng, 3)
            th_u = group_action(u, th)
            lhs = horizontal_project(th_u, tangent_action(u, th, eta))
            rhs = tangent_action(u, th, horizontal_project(th, eta))
            diff = lhs - rhs
            assert norm(th_u, diff) <= 1e-8

    def test_report_exposed(self):
        rng = np.random.default_rng(14)
        th = random_triple(rng, 3, 1, 1)
        out, rep = horizontal_project(th, random_tangent(rng, th), return_report=True)
        assert rep.residual_norm <= 1e-10
        assert rep.operator_condition >= 1.0
