"""Linear-bridge couplings and Girsanov weight accumulation."""

import numpy as np
import pytest

from harnack_lab import (
    CouplingKind,
    DiffusionSpec,
    DimensionMismatchError,
    MollifiedIndicatorDrift,
    TimeGrid,
    ZeroDrift,
    harnack_coupling,
    shift_coupling,
    weight,
)
from harnack_lab.coupling import coupled_terminals

Z1 = ZeroDrift(dim_d=1, p_exponent=2, q_exponent=2)
EYE1 = DiffusionSpec.identity(1, 1.01)
GRID = TimeGrid(1.0, 64)
MOLLI = MollifiedIndicatorDrift(
    dim_d=1, p_exponent=4, q_exponent=8,
    amplitude=(1.0,), corner_low=(0.0,), corner_high=(1.0,), width=0.1,
)


class TestBridgeIdentities:
    def test_harnack_bridge_exact(self):
        x, y = np.array([0.5]), np.array([0.2])
        sample = harnack_coupling(MOLLI, EYE1, x, y, GRID, 3, seed=1)
        expected = ((GRID.nodes - GRID.T) / GRID.T)[:, None] * (x - y)
        dev = np.abs(sample.partner - sample.base.states - expected).max()
        assert dev <= 1e-12
        # endpoints meet: X_T = Y_T
        np.testing.assert_allclose(sample.partner[-1], sample.base.states[-1])

    def test_shift_bridge_exact(self):
        x, y = np.array([0.5]), np.array([0.3])
        sample = shift_coupling(MOLLI, EYE1, x, y, GRID, 3, seed=1)
        expected = (GRID.nodes / GRID.T)[:, None] * y
        dev = np.abs(sample.partner - sample.base.states - expected).max()
        assert dev <= 1e-12
        # terminal displacement is exactly y
        np.testing.assert_allclose(
            sample.partner[-1] - sample.base.states[-1], y, atol=1e-15
        )

    def test_identity_coupling_has_unit_weight(self):
        x = np.array([0.4])
        sample = harnack_coupling(MOLLI, EYE1, x, x, GRID, 0, seed=1)
        assert np.abs(sample.phi).max() == 0.0
        assert sample.log_weight == 0.0
        assert weight(sample) == 1.0

    def test_zero_shift_has_unit_weight(self):
        x = np.array([0.4])
        sample = shift_coupling(MOLLI, EYE1, x, np.zeros(1), GRID, 0, seed=1)
        assert sample.log_weight == 0.0


class TestZeroDriftWeights:
    def test_phi_constant(self):
        x, y = np.array([1.0]), np.array([0.0])
        sample = harnack_coupling(Z1, EYE1, x, y, GRID, 2, seed=5)
        np.testing.assert_allclose(sample.phi, 1.0, atol=1e-15)

    def test_phi_sq_integral_exact(self):
        # constant integrand |x - y|^2 / T^2 integrated over [0, T]
        x, y = np.array([1.0]), np.array([0.4])
        sample = harnack_coupling(Z1, EYE1, x, y, GRID, 2, seed=5)
        assert sample.phi_sq_integral == pytest.approx(0.36, abs=1e-12)

    def test_log_weight_closed_form(self):
        # log R = -<(x-y)/T, W_T> - |x-y|^2 / (2T)
        x, y = np.array([0.8]), np.array([0.0])
        sample = harnack_coupling(Z1, EYE1, x, y, GRID, 6, seed=5)
        w_T = sample.base.increments.sum()
        expected = -0.8 * w_T - 0.32
        assert sample.log_weight == pytest.approx(expected, abs=1e-12)

    def test_weight_positive(self):
        for sid in range(10):
            sample = shift_coupling(Z1, EYE1, np.zeros(1), np.ones(1), GRID, sid, 0)
            assert weight(sample) > 0.0


class TestCoupledTerminals:
    @pytest.mark.parametrize("kind", [CouplingKind.HARNACK, CouplingKind.SHIFT])
    def test_batch_matches_single_samples(self, kind):
        x, y = np.array([0.5]), np.array([0.25])
        ids = np.arange(6)
        batch = coupled_terminals(kind, MOLLI, EYE1, x, y, GRID, ids, seed=9)
        single = (
            harnack_coupling if kind is CouplingKind.HARNACK else shift_coupling
        )
        for i in ids:
            sample = single(MOLLI, EYE1, x, y, GRID, i, seed=9)
            np.testing.assert_allclose(
                batch["x_T"][i], sample.base.states[-1], atol=1e-12
            )
            assert batch["log_weight"][i] == pytest.approx(
                sample.log_weight, abs=1e-10
            )
            assert batch["phi_sq_integral"][i] == pytest.approx(
                sample.phi_sq_integral, abs=1e-10
            )
        assert np.all(batch["diverged_step"] == -1)

    def test_weight_is_martingale_zero_drift(self):
        ids = np.arange(20000)
        batch = coupled_terminals(
            CouplingKind.HARNACK, Z1, EYE1, np.array([0.3]), np.zeros(1),
            TimeGrid(1.0, 16), ids, seed=11,
        )
        w = np.exp(batch["log_weight"])
        stderr = w.std(ddof=1) / np.sqrt(len(w))
        assert abs(w.mean() - 1.0) < 3.0 * stderr

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            coupled_terminals(
                CouplingKind.HARNACK, Z1, EYE1, np.zeros(2), np.zeros(2),
                GRID, np.arange(2), seed=0,
            )
