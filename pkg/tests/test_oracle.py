"""Tests for the exact absorbing-chain computations."""

import itertools

import numpy as np
import pytest

from ruinlab import laws, oracle, walk


def brute_force_expected_exit(dim, radius):
    """Dense linear solve over the full grid, as an independent oracle."""
    side = 2 * radius + 1
    states = list(itertools.product(range(-radius, radius + 1), repeat=dim))
    index = {z: i for i, z in enumerate(states)}
    a = np.eye(len(states))
    for z, i in index.items():
        for ax in range(dim):
            for s in (-1, 1):
                zn = list(z)
                zn[ax] += s
                j = index.get(tuple(zn))
                if j is not None:
                    a[i, j] -= 1.0 / (2 * dim)
    h = np.linalg.solve(a, np.ones(len(states)))
    return float(h[index[(0,) * dim]])


def test_one_dimensional_expected_exit_closed_form():
    for r in range(1, 65):
        assert oracle.expected_exit_exact(1, r) == pytest.approx((r + 1) ** 2, abs=1e-10)


def test_two_dimensional_hand_solved_value():
    # 9-state system solved by symmetry classes: centre 4.5, edge 3.5, corner 2.75
    assert oracle.expected_exit_exact(2, 1) == pytest.approx(4.5, abs=1e-12)


@pytest.mark.parametrize("dim,radius", [(2, 2), (2, 3), (3, 1)])
def test_matrix_free_solve_matches_dense_solve(dim, radius):
    assert oracle.expected_exit_exact(dim, radius) == pytest.approx(
        brute_force_expected_exit(dim, radius), abs=1e-10)


def test_two_dimensional_value_against_monte_carlo():
    est = walk.batch_estimate("exit_moment", 2, 1, 1, 50_000, seed=314)
    assert abs(est.mean - 4.5) <= 3.0 * est.std_error


def test_survival_small_values():
    table = oracle.exit_survival(1, 1)
    assert table.probs[0] == 1.0
    assert table.probs[1] == 1.0
    assert table.probs[2] == pytest.approx(0.5, abs=1e-15)
    assert table.probs[4] == pytest.approx(0.25, abs=1e-15)
    assert np.all(np.diff(table.probs) <= 0.0)
    assert table.tail_bound >= 0.0


@pytest.mark.parametrize("radius", [1, 2])
def test_survival_parity_structure(radius):
    # exit can only happen on steps with the parity of radius+1, so the
    # survival curve is flat across the other parity
    pr = oracle.exit_survival(1, radius, 1e-10).probs
    if (radius + 1) % 2 == 0:
        assert np.allclose(pr[0:-1:2], pr[1::2], atol=0.0)
    else:
        assert np.allclose(pr[1:-1:2], pr[2::2], atol=0.0)


def test_exit_moment_from_survival():
    m1 = oracle.exit_moment_exact(1, 1, 1)
    assert abs(m1.value - 4.0) <= m1.error_bound + 1e-12
    # P(T = 2k) = 2^-k gives E[T^2] = 4 * sum k^2 2^-k = 24
    m2 = oracle.exit_moment_exact(1, 1, 2)
    assert abs(m2.value - 24.0) <= m2.error_bound + 1e-9
    assert m2.error_bound < 1e-8


def test_exit_moment_scaled_trend_toward_limit():
    limit = laws.exit_moment_limit(2, 1)
    gap4 = abs(oracle.exit_moment_exact(2, 4, 1).value / 16.0 - limit)
    gap8 = abs(oracle.exit_moment_exact(2, 8, 1).value / 64.0 - limit)
    assert gap8 < gap4
    assert gap8 / limit < 0.27  # within a few tens of percent and closing


def test_exit_moment_matches_linear_solve():
    for dim, radius in ((1, 5), (2, 2)):
        m = oracle.exit_moment_exact(dim, radius, 1)
        direct = oracle.expected_exit_exact(dim, radius)
        assert abs(m.value - direct) <= m.error_bound + 1e-10


def test_max_cdf_exact_values():
    assert oracle.max_cdf_exact(1, 2, 2) == 1.0  # m >= t
    assert oracle.max_cdf_exact(1, 2, 5) == 1.0
    assert oracle.max_cdf_exact(1, 2, 1) == pytest.approx(0.5, abs=1e-15)
    # P(M_3 <= 1) in one dimension: survive radius-1 ball for 3 steps
    assert oracle.max_cdf_exact(1, 3, 1) == pytest.approx(0.5, abs=1e-15)


def test_max_cdf_exact_matches_path_enumeration():
    # enumerate all 2^t sign paths in one dimension
    t = 8
    for m in (1, 2, 3):
        count = 0
        for bits in itertools.product((-1, 1), repeat=t):
            path = np.cumsum(bits)
            if np.abs(path).max() <= m:
                count += 1
        assert oracle.max_cdf_exact(1, t, m) == pytest.approx(count / 2 ** t, abs=1e-12)


def test_max_moment_exact_hand_value():
    # two steps in one dimension: M is 1 or 2 with probability 1/2 each
    assert oracle.max_moment_exact(1, 2, 1) == pytest.approx(1.5, abs=1e-12)
    assert oracle.max_moment_exact(1, 2, 2) == pytest.approx(2.5, abs=1e-12)


def test_tau_distribution():
    pmf1 = oracle.tau_distribution_1d(1)
    assert pmf1[1] == 1.0
    pmf2 = oracle.tau_distribution_1d(2)
    assert pmf2[2] == pytest.approx(0.5, abs=1e-15)
    assert pmf2[4] == pytest.approx(0.25, abs=1e-15)
    assert pmf2[3] == 0.0
    # geometric thereafter: each later even mass halves
    assert pmf2[6] == pytest.approx(0.125, abs=1e-15)
    assert pmf2.sum() == pytest.approx(1.0, abs=1e-12)


def test_tau_distribution_generating_function():
    pmf = oracle.tau_distribution_1d(2)
    z = 0.9
    val = float(np.dot(pmf, z ** np.arange(pmf.size)))
    assert abs(val - laws.gen_fn_tau(z, 2)) < 1e-10


def test_state_space_guard():
    with pytest.raises(oracle.StateSpaceError):
        oracle.AbsorbingChainSpec(3, 200)
    with pytest.raises(oracle.StateSpaceError):
        oracle.expected_exit_exact(4, 30)


def test_survival_tol_validation():
    with pytest.raises(ValueError):
        oracle.exit_survival(1, 1, tol=0.0)
    with pytest.raises(ValueError):
        oracle.exit_moment_exact(1, 1, 0)
