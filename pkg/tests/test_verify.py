"""Explicit constants and inequality checks against closed-form oracles."""

import math

import numpy as np
import pytest

from harnack_lab import (
    DiffusionSpec,
    IndicatorBoxDrift,
    KrylovParams,
    MollifiedIndicatorDrift,
    SpaceTimeFunction,
    TestFunction,
    TimeGrid,
    Verdict,
    ZeroDrift,
    beta_constant,
    check_girsanov_consistency,
    check_harnack,
    check_krylov,
    check_shift_harnack,
    check_shift_log_harnack,
    check_variance_gradient,
    check_weight_moment_bound,
    harnack_admissible,
    harnack_factor,
)

Z1 = ZeroDrift(dim_d=1, p_exponent=4, q_exponent=4)
EYE1 = DiffusionSpec.identity(1, 1.01)
GRID = TimeGrid(1.0, 16)
N = 50000
PASSING = (Verdict.HOLDS, Verdict.HOLDS_WITHIN_CI)


class TestConstants:
    def test_beta_plugins(self):
        assert beta_constant(1.0, 0.0, 1.0, 7.0) == pytest.approx(1.0)
        assert beta_constant(2.0, math.sqrt(3.0), 2.0, 1.0) == pytest.approx(7.0)

    def test_beta_limit_zero_k(self):
        assert beta_constant(2.0, 0.0, 1.5, 100.0) == pytest.approx(0.75)

    def test_beta_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            beta_constant(0.0, 1.0, 1.0, 1.0)

    def test_admissibility_plugins(self):
        ok, thr = harnack_admissible([0.4], [0.0], 2.0, 1.0)
        assert thr == pytest.approx(1.0 / 6.0)
        assert ok  # 0.16 < 1/6
        ok, thr = harnack_admissible([0.0], [0.0], 3.0, 2.0)
        assert ok and thr == pytest.approx(0.25)

    def test_factor_one_at_zero_displacement(self):
        assert harnack_factor(0.0, 2.0, 5.0) == 1.0

    def test_factor_increasing_and_divergent(self):
        thr = 1.0 / 6.0  # p = 2, beta = 1
        vals = [harnack_factor(s, 2.0, 1.0) for s in (0.0, 0.5 * thr, 0.9 * thr)]
        assert vals[0] < vals[1] < vals[2]
        assert harnack_factor(thr, 2.0, 1.0) == math.inf


class TestHarnackCheck:
    def test_constant_function_holds(self):
        rep = check_harnack(TestFunction.constant(1.0), Z1, EYE1, [0.0], [0.1],
                            2.0, 1.0, 500, kappa=1.0, grid=GRID, seed=0)
        assert rep.lhs == pytest.approx(1.0)
        assert rep.rhs >= 1.0
        assert rep.verdict == Verdict.HOLDS

    def test_gaussian_oracle(self):
        # zero drift: beta = delta / T; both sides have Gaussian mgf closed forms
        p, dist, u = 2.0, 0.3, 0.5
        beta = 1.01
        factor = harnack_factor(dist ** 2, p, beta)
        lhs_oracle = math.exp(u * 0.0 + u * u / 2.0) ** p  # start y = 0
        rhs_oracle = math.exp(p * u * dist + (p * u) ** 2 / 2.0) * factor
        assert lhs_oracle <= rhs_oracle
        rep = check_harnack(TestFunction.exponential([u]), Z1, EYE1, [dist],
                            [0.0], p, 1.0, N, kappa=1.0, grid=GRID, seed=1)
        assert rep.verdict in PASSING
        assert rep.lhs == pytest.approx(lhs_oracle, rel=0.05)
        assert rep.rhs == pytest.approx(rhs_oracle, rel=0.05)

    def test_not_admissible_without_mc(self):
        rep = check_harnack(TestFunction.constant(1.0), Z1, EYE1, [5.0], [0.0],
                            2.0, 1.0, 10, kappa=1.0, grid=GRID, seed=0)
        assert rep.verdict == Verdict.NOT_ADMISSIBLE
        assert not rep.admissible
        assert math.isnan(rep.lhs)

    def test_rejects_signed_function(self):
        with pytest.raises(ValueError):
            check_harnack(TestFunction.coordinate(0), Z1, EYE1, [0.0], [0.1],
                          2.0, 1.0, 10, kappa=1.0, grid=GRID)

    def test_rejects_drift_without_modulus(self):
        sharp = IndicatorBoxDrift(
            dim_d=1, p_exponent=4, q_exponent=8,
            amplitude=(1.0,), corner_low=(0.0,), corner_high=(1.0,),
        )
        with pytest.raises(ValueError):
            check_harnack(TestFunction.constant(1.0), sharp, EYE1, [0.0], [0.1],
                          2.0, 1.0, 10, kappa=1.0, grid=GRID)


class TestWeightMomentCheck:
    def test_identity_coupling_equality(self):
        rep = check_weight_moment_bound(Z1, EYE1, [0.3], [0.3], 2.0, 1.0,
                                        kappa=1.0, n_samples=500, grid=GRID, seed=0)
        assert rep.lhs == pytest.approx(1.0)
        assert rep.rhs == pytest.approx(1.0)
        assert rep.verdict in PASSING

    def test_lognormal_oracle(self):
        # (E R^2)^2 = e^{2 |x-y|^2 / T} = e^{0.18} vs 1 / (1 - 6 beta 0.09)
        rep = check_weight_moment_bound(Z1, EYE1, [0.3], [0.0], 2.0, 1.0,
                                        kappa=1.0, n_samples=N, grid=GRID, seed=2)
        assert rep.lhs == pytest.approx(math.exp(0.18), rel=0.05)
        assert rep.rhs == pytest.approx(1.0 / (1.0 - 6.0 * 1.01 * 0.09))
        assert rep.verdict in PASSING

    def test_not_admissible(self):
        rep = check_weight_moment_bound(Z1, EYE1, [5.0], [0.0], 2.0, 1.0,
                                        kappa=1.0, n_samples=10, grid=GRID, seed=0)
        assert rep.verdict == Verdict.NOT_ADMISSIBLE


class TestGirsanovConsistency:
    def test_identity_coupling_exact(self):
        rep = check_girsanov_consistency(TestFunction.square(0), Z1, EYE1,
                                         [0.2], [0.2], 1.0, 2000, GRID, seed=3)
        assert abs(rep.margin) < 1e-12
        assert rep.verdict in PASSING

    def test_gaussian_mean_agreement(self):
        rep = check_girsanov_consistency(TestFunction.coordinate(0), Z1, EYE1,
                                         [0.0], [0.4], 1.0, N, GRID, seed=4)
        assert rep.verdict in PASSING
        assert rep.rhs == pytest.approx(0.4, abs=0.05)


class TestShiftLogHarnack:
    def test_zero_shift_variant_ii_is_jensen(self):
        rep = check_shift_log_harnack(TestFunction.exponential([1.0]), "ii",
                                      Z1, EYE1, [0.0], [0.0], 1.0, kappa=1.0,
                                      n_samples=5000, grid=GRID, seed=5)
        assert rep.constant_used["additive_constant"] == 0.0
        assert rep.margin >= -1e-12

    def test_gaussian_oracle_variant_ii(self):
        # LHS = E X_T = x; RHS = log E e^{X_T + y} + delta y^2 = x + y + 1/2 + ...
        x, y = 0.2, 0.5
        rep = check_shift_log_harnack(TestFunction.exponential([1.0]), "ii",
                                      Z1, EYE1, [x], [y], 1.0, kappa=1.0,
                                      n_samples=N, grid=GRID, seed=6)
        assert rep.lhs == pytest.approx(x, abs=0.05)
        assert rep.rhs == pytest.approx(x + y + 0.5 + 1.01 * y * y, abs=0.05)
        assert rep.verdict in PASSING

    def test_variant_i_uses_drift_norm(self):
        molli = MollifiedIndicatorDrift(
            dim_d=1, p_exponent=4, q_exponent=8,
            amplitude=(1.0,), corner_low=(0.0,), corner_high=(1.0,), width=0.1,
        )
        rep = check_shift_log_harnack(TestFunction.exponential([0.5]), "i",
                                      molli, EYE1, [0.5], [0.1], 1.0, kappa=1.0,
                                      n_samples=5000, grid=TimeGrid(1.0, 64), seed=7)
        assert rep.constant_used["b_lqp_norm"] > 0
        assert rep.verdict in PASSING

    def test_unknown_variant_rejected(self):
        with pytest.raises(ValueError):
            check_shift_log_harnack(TestFunction.constant(1.0), "iii", Z1, EYE1,
                                    [0.0], [0.1], 1.0, 1.0, 10, GRID)


class TestShiftPowerHarnack:
    def test_constant_function(self):
        rep = check_shift_harnack(TestFunction.constant(1.0), "ii", 2.0, Z1,
                                  EYE1, [0.0], [0.1], 1.0, kappa=1.0,
                                  n_samples=500, grid=GRID, seed=8)
        assert rep.lhs == pytest.approx(1.0)
        assert rep.rhs >= 1.0
        assert rep.verdict in PASSING

    def test_zero_shift_variant_ii_is_jensen(self):
        rep = check_shift_harnack(TestFunction.exponential([0.5]), "ii", 2.0,
                                  Z1, EYE1, [0.0], [0.0], 1.0, kappa=1.0,
                                  n_samples=5000, grid=GRID, seed=9)
        assert rep.constant_used["factor"] == 1.0
        assert rep.margin >= -1e-12

    def test_gaussian_oracle_variant_ii(self):
        u, y, p = 0.4, 0.2, 2.0
        rep = check_shift_harnack(TestFunction.exponential([u]), "ii", p, Z1,
                                  EYE1, [0.0], [y], 1.0, kappa=1.0,
                                  n_samples=N, grid=GRID, seed=10)
        lhs_oracle = math.exp(u * u / 2.0) ** p
        rhs_oracle = math.exp(p * u * y + (p * u) ** 2 / 2.0) * rep.constant_used["factor"]
        assert rep.lhs == pytest.approx(lhs_oracle, rel=0.05)
        assert rep.rhs == pytest.approx(rhs_oracle, rel=0.05)
        assert rep.verdict in PASSING

    def test_variant_i_records_khasminskii_gamma(self):
        molli = MollifiedIndicatorDrift(
            dim_d=1, p_exponent=4, q_exponent=8,
            amplitude=(1.0,), corner_low=(0.0,), corner_high=(1.0,), width=0.1,
        )
        rep = check_shift_harnack(TestFunction.exponential([0.3]), "i", 2.0,
                                  molli, EYE1, [0.5], [0.05], 1.0, kappa=1.0,
                                  n_samples=5000, grid=TimeGrid(1.0, 64), seed=11)
        assert rep.constant_used["gamma_khasminskii"] >= 1.0
        assert rep.constant_used["gamma"] >= 1.0
        assert rep.verdict in PASSING

    def test_not_admissible_variant_ii(self):
        rep = check_shift_harnack(TestFunction.constant(1.0), "ii", 2.0, Z1,
                                  EYE1, [0.0], [5.0], 1.0, kappa=1.0,
                                  n_samples=10, grid=GRID, seed=0)
        assert rep.verdict == Verdict.NOT_ADMISSIBLE


class TestKrylovCheck:
    def test_zero_function(self):
        params = KrylovParams(alpha=2.0, beta=2.0, kappa=1.0, lam=1.0, dim_d=1)
        f = SpaceTimeFunction.box(0.0, 1.0, [-1.0], [1.0], height=0.0)
        rep = check_krylov(f, Z1, EYE1, [0.0], 1.0, params, 200, GRID, seed=0)
        assert rep.lhs == 0.0
        assert rep.rhs == 0.0
        assert rep.verdict == Verdict.HOLDS

    def test_held_out_box_with_generous_kappa(self):
        params = KrylovParams(alpha=2.0, beta=2.0, kappa=1.0, lam=1.0, dim_d=1)
        f = SpaceTimeFunction.box(0.0, 1.0, [-0.75], [0.75])
        rep = check_krylov(f, Z1, EYE1, [0.0], 1.0, params, 5000, GRID, seed=1)
        assert rep.verdict in PASSING


class TestVarianceGradient:
    def test_constant_function(self):
        rep = check_variance_gradient(TestFunction.constant(1.0), Z1, EYE1,
                                      [0.0], [1.0], 1.0, kappa=1.0,
                                      n_samples=500, grid=GRID, seed=0)
        assert rep.lhs == 0.0
        assert rep.rhs == pytest.approx(0.0, abs=1e-20)

    def test_zero_drift_analytic_margin(self):
        # coordinate function: LHS = 1, RHS = 2 (delta / T) Var X_T = 2 delta
        rep = check_variance_gradient(TestFunction.coordinate(0), Z1, EYE1,
                                      [0.0], [1.0], 1.0, kappa=1.0,
                                      n_samples=N, grid=GRID, seed=1)
        assert rep.lhs == pytest.approx(1.0, abs=0.05)
        assert rep.rhs == pytest.approx(2.02, abs=0.1)
        assert rep.verdict in PASSING

    def test_homogeneous_in_function_scale(self):
        f = TestFunction.smooth_bump([0.0], radius=2.0)
        scaled = TestFunction.smooth_bump([0.0], radius=2.0, height=3.0)
        args = (Z1, EYE1, [0.0], [1.0], 1.0)
        a = check_variance_gradient(f, *args, kappa=1.0, n_samples=5000,
                                    grid=GRID, seed=2)
        b = check_variance_gradient(scaled, *args, kappa=1.0, n_samples=5000,
                                    grid=GRID, seed=2)
        assert b.lhs == pytest.approx(9.0 * a.lhs, rel=1e-9)
        assert b.rhs == pytest.approx(9.0 * a.rhs, rel=1e-9)
        assert b.verdict == a.verdict

    def test_requires_gradient(self):
        with pytest.raises(ValueError):
            check_variance_gradient(TestFunction.indicator_box([0.0], [1.0]),
                                    Z1, EYE1, [0.0], [1.0], 1.0, 1.0, 10, GRID)


class TestReportSerialization:
    def test_to_dict_round_trips_fields(self):
        rep = check_harnack(TestFunction.constant(1.0), Z1, EYE1, [0.0], [0.1],
                            2.0, 1.0, 100, kappa=1.0, grid=GRID, seed=0)
        d = rep.to_dict()
        assert d["name"] == "Harnack"
        assert d["verdict"] == rep.verdict
        assert isinstance(d["constants"]["beta"], float)
