import numpy as np
import pytest

import symid
from symid.manifold import (
    SystemTriple,
    TangentTriple,
    TripleKind,
    metric,
    norm,
    random_tangent,
)
from symid.model import IODataset, objective, output_dderiv, simulate
from symid.optimize import (
    ArmijoConfig,
    OptConfig,
    armijo_step,
    dai_yuan_beta,
    run,
    run_gn_baseline,
    _rgrad,
)
from symid.quotient import horizontal_residual


def benchmark_instance(seed, n=3, m=1, p=1, K=200, sigma=0.1):
    rng = np.random.default_rng(seed)
    sys, _, _ = symid.random_benchmark_system(n, m, p, rng, mean_degree=2)
    theta_true = symid.discretize(sys)
    data, _ = symid.generate_dataset(theta_true, K, 100.0, sigma, rng, 0.1)
    theta0 = symid.initial_point(data, n, rng)
    return theta_true, data, theta0


class TestConfigs:
    def test_variant_validation(self):
        with pytest.raises(ValueError):
            OptConfig(variant="CG9")

    def test_armijo_validation(self):
        with pytest.raises(ValueError):
            ArmijoConfig(c1=0.0)
        with pytest.raises(ValueError):
            ArmijoConfig(shrink=1.0)

    def test_hybrid_switch_bound(self):
        with pytest.raises(ValueError):
            OptConfig(variant="HYBRID", max_iters=10, hybrid_switch=12)
        OptConfig(variant="CG1", max_iters=10, hybrid_switch=12)  # irrelevant

    def test_beta_rule_validation(self):
        with pytest.raises(ValueError):
            OptConfig(beta_rule="fletcher")


class TestArmijo:
    def test_descent_guarantee(self):
        _, data, theta0 = benchmark_instance(0)
        f0, _ = objective(theta0, data)
        g = _rgrad(theta0, data)
        eta = -1.0 * g * (1.0 / norm(theta0, g))
        slope = metric(theta0, g, eta)
        t, theta_new, f_new, bt, ok = armijo_step(
            theta0, eta, f0, slope, data, ArmijoConfig()
        )
        assert ok
        assert f_new < f0

    def test_sufficient_decrease_recheck(self):
        # re-evaluate the accepted point independently against the inequality
        _, data, theta0 = benchmark_instance(1)
        f0, _ = objective(theta0, data)
        g = _rgrad(theta0, data)
        eta = -1.0 * g * (1.0 / norm(theta0, g))
        slope = metric(theta0, g, eta)
        cfg = ArmijoConfig()
        t, theta_new, f_new, _, ok = armijo_step(theta0, eta, f0, slope, data, cfg)
        assert ok
        f_check, _ = objective(theta_new, data)
        assert f_check <= f0 + cfg.c1 * t * slope + 1e-12 * abs(f0)

    def test_stationary_start_terminates(self):
        # noise-free data generated by the initial point itself
        rng = np.random.default_rng(2)
        sys, _, _ = symid.random_benchmark_system(3, 1, 1, rng, mean_degree=2)
        theta = symid.discretize(sys)
        data, _ = symid.generate_dataset(theta, 100, 100.0, 0.0, rng, 0.1)
        trace = run(theta, data, OptConfig(variant="CG1"))
        assert trace.reason == "stationary_start"
        assert len(trace.records) == 1
        assert trace.theta_final is theta


class TestDaiYuan:
    def test_zero_gradient(self):
        _, data, theta0 = benchmark_instance(3)
        g0 = TangentTriple.zero(theta0)
        eta = random_tangent(np.random.default_rng(0), theta0)
        assert dai_yuan_beta(theta0, g0, eta, theta0, eta, eta) == 0.0

    def test_formula_reevaluation(self):
        rng = np.random.default_rng(4)
        _, data, theta0 = benchmark_instance(4)
        theta1 = symid.exp_map(theta0, random_tangent(rng, theta0, scale=0.05))
        g0 = _rgrad(theta0, data)
        g1 = _rgrad(theta1, data)
        eta = -1.0 * g0
        transported = symid.parallel_transport(theta0, theta1, eta)
        got = dai_yuan_beta(theta1, g1, transported, theta0, g0, eta)
        want = metric(theta1, g1, g1) / (
            metric(theta1, g1, transported) - metric(theta0, g0, eta)
        )
        assert got == pytest.approx(want, rel=1e-14)


class TestRunVariants:
    @pytest.mark.parametrize("variant", ["CG1", "CG2", "SD", "HYBRID"])
    def test_monotone_descent(self, variant):
        _, data, theta0 = benchmark_instance(5)
        cfg = OptConfig(variant=variant, max_iters=10, hybrid_switch=5)
        trace = run(theta0, data, cfg)
        f = trace.f_history
        assert (np.diff(f) <= 1e-12 * np.maximum(1.0, f[:-1])).all()
        assert trace.theta_final.kind is TripleKind.SPD

    def test_cg3_monotone_on_diagonal_space(self):
        rng = np.random.default_rng(6)
        sys, _, _ = symid.random_benchmark_system(3, 1, 1, rng, mean_degree=2)
        theta_true = symid.discretize(sys)
        data, _ = symid.generate_dataset(theta_true, 200, 100.0, 0.1, rng, 0.1)
        A, B, C = symid.subspace_estimate(data, 3)
        theta0 = symid.repair_diag(A, B, C, rng)
        trace = run(theta0, data, OptConfig(variant="CG3", max_iters=10))
        f = trace.f_history
        assert (np.diff(f) <= 1e-12 * np.maximum(1.0, f[:-1])).all()
        assert trace.theta_final.kind is TripleKind.DIAG_POS

    def test_kind_mismatch_raises(self):
        _, data, theta0 = benchmark_instance(7)
        with pytest.raises(ValueError):
            run(theta0, data, OptConfig(variant="CG3"))

    def test_iterates_stay_on_manifold(self):
        _, data, theta0 = benchmark_instance(8)
        trace = run(theta0, data, OptConfig(variant="CG1", max_iters=8),
                    keep_iterates=True)
        for th in trace.iterates:
            w = np.linalg.eigvalsh(th.A)
            assert w[0] > 0
            assert np.array_equal(th.A, th.A.T)

    def test_exact_recovery_noise_free(self):
        rng = np.random.default_rng(9)
        sys, _, _ = symid.random_benchmark_system(3, 1, 1, rng, mean_degree=2)
        theta_true = symid.discretize(sys)
        data, _ = symid.generate_dataset(theta_true, 400, 100.0, 0.0, rng, 0.1)
        theta0 = symid.initial_point(
            data, 3, rng, cfg=symid.SubspaceConfig(weighting="balanced")
        )
        trace = run(theta0, data, OptConfig(variant="CG1", max_iters=200))
        assert trace.f_final <= 1e-8 * trace.records[0].f

    def test_cg2_transported_direction_is_horizontal(self):
        # the projected old direction satisfies the horizontal condition
        _, data, theta0 = benchmark_instance(10)
        g = _rgrad(theta0, data)
        eta = -1.0 * g * (1.0 / norm(theta0, g))
        theta1 = symid.exp_map(theta0, 0.05 * eta)
        from symid.quotient import horizontal_project

        proj = horizontal_project(theta1, eta)
        assert horizontal_residual(theta1, proj) <= 1e-8

    def test_remark2_sd_equals_zero_beta_cg(self):
        # SD, CG1 with beta forced to zero, and CG2 with beta forced to zero
        # must produce bitwise-identical trajectories: the transport enters
        # only through a term multiplied by zero.
        _, data, theta0 = benchmark_instance(11)
        t_sd = run(theta0, data, OptConfig(variant="SD", max_iters=8))
        t_c1 = run(theta0, data, OptConfig(variant="CG1", max_iters=8, beta_rule="zero"))
        t_c2 = run(theta0, data, OptConfig(variant="CG2", max_iters=8, beta_rule="zero"))
        assert np.array_equal(t_sd.f_history, t_c1.f_history)
        assert np.array_equal(t_sd.f_history, t_c2.f_history)
        assert np.array_equal(t_sd.theta_final.A, t_c1.theta_final.A)
        assert np.array_equal(t_sd.theta_final.A, t_c2.theta_final.A)
        assert np.array_equal(t_sd.theta_final.B, t_c2.theta_final.B)

    def test_sd_bitwise_deterministic(self):
        _, data, theta0 = benchmark_instance(12)
        t1 = run(theta0, data, OptConfig(variant="SD", max_iters=6))
        t2 = run(theta0, data, OptConfig(variant="SD", max_iters=6))
        assert np.array_equal(t1.f_history, t2.f_history)
        assert np.array_equal(t1.theta_final.A, t2.theta_final.A)

    def test_trace_length_bound(self):
        _, data, theta0 = benchmark_instance(13)
        cfg = OptConfig(variant="CG1", max_iters=5)
        trace = run(theta0, data, cfg)
        assert len(trace.records) <= cfg.max_iters + 1
        assert np.isfinite(trace.f_history).all()

    def test_trace_export(self, tmp_path):
        import json

        _, data, theta0 = benchmark_instance(14)
        trace = run(theta0, data, OptConfig(variant="CG2", max_iters=4))
        trace.to_csv(tmp_path / "trace.csv")
        trace.to_json(tmp_path / "trace.json")
        rows = (tmp_path / "trace.csv").read_text().strip().split("\n")
        assert len(rows) == len(trace.records) + 1
        summary = json.loads((tmp_path / "trace.json").read_text())
        assert summary["variant"] == "CG2"
        assert summary["f_final"] == trace.f_final


class TestGaussNewtonBaseline:
    def test_zero_residual_fixed_point(self):
        rng = np.random.default_rng(15)
        sys, _, _ = symid.random_benchmark_system(3, 1, 1, rng, mean_degree=2)
        theta = symid.discretize(sys)
        data, _ = symid.generate_dataset(theta, 100, 100.0, 0.0, rng, 0.1)
        trace = run_gn_baseline(theta, data, OptConfig(variant="GN", max_iters=3))
        assert trace.reason == "zero_residual"
        a, b, c = trace.gn_final
        assert np.allclose(a, theta.A)

    def test_jacobian_matches_output_dderiv(self):
        from symid.optimize import _gn_jacobian

        _, data, theta0 = benchmark_instance(16, n=3, m=2, p=2, K=30)
        x, _ = simulate(theta0, data.u)
        jac = _gn_jacobian(theta0.A, theta0.B, theta0.C, x, data.u)
        n, m, p = 3, 2, 2
        rng = np.random.default_rng(0)
        for _ in range(5):
            block = rng.integers(3)
            i = rng.integers((n, n, p)[block])
            j = rng.integers((n, m, n)[block])
            xi_a = np.zeros((n, n)); xi_b = np.zeros((n, m)); xi_c = np.zeros((p, n))
            if block == 0:
                xi_a[i, j] = 1.0
                col = j * n + i
            elif block == 1:
                xi_b[i, j] = 1.0
                col = n * n + j * n + i
            else:
                xi_c[i, j] = 1.0
                col = n * n + n * m + j * p + i
            dy = output_dderiv(theta0, xi_a, xi_b, xi_c, data)
            assert np.allclose(jac[:, col], -dy.ravel(), atol=1e-12)

    def test_one_step_linear_subproblem(self):
        # with A and B frozen the residual is linear in C: one GN step lands
        # on the least-squares optimum
        rng = np.random.default_rng(17)
        sys, _, _ = symid.random_benchmark_system(3, 1, 2, rng, mean_degree=2)
        theta = symid.discretize(sys)
        data, _ = symid.generate_dataset(theta, 120, 100.0, 0.3, rng, 0.1)
        start = SystemTriple(theta.A, theta.B, np.zeros((2, 3)))
        trace = run_gn_baseline(start, data, OptConfig(variant="GN", max_iters=1),
                                blocks=("C",))
        _, _, c_got = trace.gn_final
        x, _ = simulate(theta, data.u)
        c_want, *_ = np.linalg.lstsq(x[1:], data.y[1:], rcond=None)
        assert np.allclose(c_got, c_want.T, atol=1e-8)

    def test_symmetry_departure_on_noisy_data(self):
        _, data, theta0 = benchmark_instance(18, K=150, sigma=0.3)
        trace = run_gn_baseline(theta0, data, OptConfig(variant="GN", max_iters=10))
        defects = [r.symmetry_defect for r in trace.records]
        assert defects[0] == 0.0
        assert max(defects[1:]) > 0.0

    def test_damping_flagged_when_underdetermined(self):
        # SISO with K*p < n(n+m+p): J^T J is rank-deficient by construction
        _, data, theta0 = benchmark_instance(19, n=3, K=12, sigma=0.2)
        trace = run_gn_baseline(theta0, data, OptConfig(variant="GN", max_iters=2))
        assert any("damped" in r.flags for r in trace.records)
