"""Brownian increment streams and Euler-Maruyama integration."""

import numpy as np
import pytest

from harnack_lab import (
    DiffusionSpec,
    DivergedPathError,
    LipschitzDrift,
    TimeGrid,
    ZeroDrift,
    brownian_increments,
    brownian_increments_batch,
    simulate_path,
)
from harnack_lab._rng import stream_normals
from harnack_lab.paths import occupation_sums, terminal_states

Z1 = ZeroDrift(dim_d=1, p_exponent=2, q_exponent=2)
EYE1 = DiffusionSpec.identity(1, 1.01)


class TestStreamNormals:
    def test_deterministic(self):
        a = stream_normals(42, [0, 1, 5], 16)
        b = stream_normals(42, [0, 1, 5], 16)
        np.testing.assert_array_equal(a, b)

    def test_batch_layout_independent(self):
        batched = stream_normals(42, [3, 9], 32)
        np.testing.assert_array_equal(batched[0], stream_normals(42, [3], 32)[0])
        np.testing.assert_array_equal(batched[1], stream_normals(42, [9], 32)[0])

    def test_prefix_stable(self):
        long = stream_normals(42, [7], 64)[0]
        short = stream_normals(42, [7], 20)[0]
        np.testing.assert_array_equal(long[:20], short)

    def test_seed_changes_output(self):
        assert not np.array_equal(
            stream_normals(1, [0], 16), stream_normals(2, [0], 16)
        )


class TestTimeGrid:
    def test_nodes_and_spacing(self):
        grid = TimeGrid(2.0, 4)
        assert grid.h == pytest.approx(0.5)
        np.testing.assert_allclose(grid.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            TimeGrid(0.0, 4)
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0)


class TestBrownianIncrements:
    def test_determinism(self):
        grid = TimeGrid(1.0, 8)
        np.testing.assert_array_equal(
            brownian_increments(3, grid, 2, seed=1),
            brownian_increments(3, grid, 2, seed=1),
        )

    def test_batch_matches_single(self):
        grid = TimeGrid(1.0, 16)
        batch = brownian_increments_batch([2, 11], grid, 2, seed=5)
        np.testing.assert_array_equal(batch[0], brownian_increments(2, grid, 2, 5))
        np.testing.assert_array_equal(batch[1], brownian_increments(11, grid, 2, 5))

    def test_moments(self):
        # 10^6 increments with h = 1: CLT bound 4 / sqrt(N) on the mean,
        # 1% chi-square concentration on the variance at h = 0.25
        grid = TimeGrid(100.0, 100)
        dw = brownian_increments_batch(np.arange(10000), grid, 1, seed=9)
        assert abs(dw.mean()) < 4e-3
        grid_q = TimeGrid(25.0, 100)
        dw_q = brownian_increments_batch(np.arange(10000), grid_q, 1, seed=9)
        assert dw_q.var() == pytest.approx(0.25, rel=0.01)


class TestSimulatePath:
    def test_zero_drift_is_summed_increments(self):
        grid = TimeGrid(1.0, 32)
        sp = simulate_path(Z1, EYE1, np.array([0.7]), grid, stream_id=4, seed=2)
        expected = 0.7 + np.concatenate([[0.0], np.cumsum(sp.increments[:, 0])])
        np.testing.assert_allclose(sp.states[:, 0], expected, atol=1e-14)
        assert sp.states[0, 0] == 0.7

    def test_shapes(self):
        grid = TimeGrid(1.0, 8)
        sp = simulate_path(Z1, EYE1, np.array([0.0]), grid, 0, 0)
        assert sp.states.shape == (9, 1)
        assert sp.increments.shape == (8, 1)

    def test_diverged_path_raises_with_step(self):
        hot = LipschitzDrift(
            dim_d=1, p_exponent=2, q_exponent=2, linear=((1e160,),), offset=(0.0,)
        )
        with pytest.raises(DivergedPathError) as err:
            simulate_path(hot, EYE1, np.array([1e160]), TimeGrid(1.0, 8), 0, 0)
        assert err.value.step >= 0

    def test_terminal_states_match_single_paths(self):
        grid = TimeGrid(1.0, 16)
        ids = np.arange(5)
        x_T, diverged = terminal_states(Z1, EYE1, np.array([0.2]), grid, ids, seed=3)
        assert np.all(diverged == -1)
        for i in ids:
            sp = simulate_path(Z1, EYE1, np.array([0.2]), grid, i, seed=3)
            np.testing.assert_allclose(x_T[i], sp.states[-1], atol=1e-14)

    def test_streams_are_independent(self):
        grid = TimeGrid(1.0, 4)
        x_T, _ = terminal_states(
            Z1, EYE1, np.array([0.0]), grid, np.arange(20000), seed=1
        )
        a, b = x_T[:10000, 0], x_T[10000:, 0]
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 4.0 / np.sqrt(10000)

    def test_refined_grid_keeps_terminal_law(self):
        # Zero drift: Var X_T = T at any step count, within MC tolerance
        ids = np.arange(20000)
        coarse, _ = terminal_states(Z1, EYE1, np.zeros(1), TimeGrid(1.0, 64), ids, 7)
        fine, _ = terminal_states(Z1, EYE1, np.zeros(1), TimeGrid(1.0, 128), ids, 7)
        assert coarse.var() == pytest.approx(1.0, rel=0.03)
        assert fine.var() == pytest.approx(1.0, rel=0.03)


class TestOccupationSums:
    def test_constant_integrand_is_exact(self):
        grid = TimeGrid(2.0, 32)
        sums, diverged = occupation_sums(
            Z1, EYE1, np.zeros(1), grid, np.arange(8), seed=0,
            fs=[lambda t, x: np.ones(x.shape[0])],
        )
        assert np.all(diverged == -1)
        np.testing.assert_allclose(sums[:, 0], 2.0, atol=1e-12)
