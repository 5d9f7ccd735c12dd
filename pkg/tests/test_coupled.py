"""Tests for the coupled construction of the N-dimensional walk."""

import numpy as np
import pytest
from scipy.stats import chi2

from ruinlab import harness, walk


def test_one_dimensional_coupling_is_identity():
    rng = walk.stream(21, 0)
    for _ in range(50):
        s = walk.sample_coupled(1, 2, 30, rng)
        assert s.exit_time == s.coord_exit_times[0]
        assert s.running_max == s.coord_running_maxima[0]


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_pathwise_coupling_inequalities(dim):
    rng = walk.stream(22, dim)
    for _ in range(2_500):
        s = walk.sample_coupled(dim, 3, 60, rng)
        assert s.exit_time <= sum(s.coord_exit_times) - (dim - 1)
        assert s.running_max <= max(s.coord_running_maxima)
        assert 1 <= s.running_max <= 60


def test_exit_inequality_at_small_radius():
    rng = walk.stream(23, 0)
    for _ in range(500):
        s = walk.sample_coupled(2, 2, 10, rng)
        assert s.exit_time <= s.coord_exit_times[0] + s.coord_exit_times[1] - 1


def test_running_max_dominated_by_coordinate_maxima():
    rng = walk.stream(24, 0)
    for _ in range(300):
        s = walk.sample_coupled(3, 3, 50, rng)
        assert s.running_max <= max(s.coord_running_maxima)


def test_coupled_marginal_one_step_law():
    # increments produced through the coupled construction are uniform over
    # the 2N moves (chi-square at alpha = 0.001, 1e6 steps), just like
    # direct simulation
    n = 1_000_000
    for dim, seed in ((2, 31), (3, 32)):
        codes = walk.coupled_direction_codes(dim, n, walk.stream(seed, 0))
        counts = np.bincount(codes, minlength=2 * dim)
        expected = n / (2.0 * dim)
        stat = float(((counts - expected) ** 2 / expected).sum())
        assert stat < chi2.ppf(0.999, 2 * dim - 1)


def test_coupled_exit_mean_matches_direct_simulation():
    # the coupled realization must reproduce the walk's exit-time law
    rng = walk.stream(33, 0)
    coupled = np.array([walk.sample_coupled(2, 1, 2, rng).exit_time
                        for _ in range(4_000)], dtype=float)
    direct = walk.batch_estimate("exit_moment", 2, 1, 1, 20_000, seed=34)
    se = float(coupled.std(ddof=1) / np.sqrt(coupled.size))
    assert abs(coupled.mean() - direct.mean) < 3.0 * np.hypot(se, direct.std_error)


def test_audit_counts_zero_for_correct_sampler():
    assert harness.run_coupling_audit(2, 2, 20, 500, seed=41) == 0
    assert harness.run_coupling_audit(1, 1, 5, 200, seed=42) == 0


def test_audit_negative_control():
    def corrupted(dim, radius, horizon, rng):
        s = walk.sample_coupled(dim, radius, horizon, rng)
        return walk.CoupledSample(
            exit_time=sum(s.coord_exit_times) - (dim - 1) + 1,
            coord_exit_times=s.coord_exit_times,
            running_max=s.running_max,
            coord_running_maxima=s.coord_running_maxima,
        )

    assert harness.run_coupling_audit(3, 2, 10, 50, seed=43, sampler=corrupted) == 50


def test_sample_coupled_validation():
    rng = walk.stream(0, 0)
    with pytest.raises(ValueError):
        walk.sample_coupled(0, 1, 1, rng)
    with pytest.raises(ValueError):
        walk.sample_coupled(1, 0, 1, rng)
    with pytest.raises(ValueError):
        walk.sample_coupled(1, 1, 0, rng)
