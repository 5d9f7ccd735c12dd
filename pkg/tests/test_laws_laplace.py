"""Tests for Laplace transforms, generating functions, passage density."""

import math

import numpy as np
import pytest

from ruinlab import laws


def test_laplace_exit_golden():
    # sech(1) at theta = 1/2
    assert laws.laplace_exit(0.5) == pytest.approx(0.6480542736, abs=1e-10)


def test_laplace_transforms_tend_to_one():
    assert laws.laplace_exit(1e-12) == pytest.approx(1.0, abs=1e-5)
    assert laws.laplace_passage(1e-12) == pytest.approx(1.0, abs=1e-5)


def test_laplace_passage_exact_point():
    assert laws.laplace_passage(2.0) == pytest.approx(math.exp(-2.0), rel=1e-15)


def test_positive_theta_required():
    for fn in (laws.laplace_exit, laws.laplace_passage,
               laws.sech_series_theta, laws.sech_series_geometric):
        with pytest.raises(ValueError):
            fn(0.0)


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
def test_partial_fraction_series_high_accuracy(theta):
    cfg = laws.SeriesConfig(abs_tol=1e-8, max_terms=60_000_000)
    assert abs(laws.sech_series_theta(theta, cfg) - laws.laplace_exit(theta)) < 1e-8


def test_partial_fraction_series_budgeted():
    cfg = laws.SeriesConfig(abs_tol=1e-4, max_terms=10_000)
    assert abs(laws.sech_series_theta(1.0, cfg) - laws.laplace_exit(1.0)) < 1e-4


def test_partial_fraction_series_exhausts_budget():
    with pytest.raises(laws.SeriesConvergenceError):
        laws.sech_series_theta(1.0, laws.SeriesConfig(abs_tol=1e-14, max_terms=10_000))


def test_geometric_series_matches_closed_form():
    for theta in (0.3, 1.0, 5.0):
        assert abs(laws.sech_series_geometric(theta) - laws.laplace_exit(theta)) < 1e-13


def test_geometric_series_two_term_tail_bound():
    # partial sum error is bounded by the first omitted term 2*exp(-5*sqrt(2))
    theta = 1.0
    root = math.sqrt(2.0 * theta)
    two_terms = 2.0 * (math.exp(-root) - math.exp(-3.0 * root))
    assert abs(two_terms - laws.laplace_exit(theta)) <= 2.0 * math.exp(-5.0 * root)


def test_series_tend_to_one_for_small_theta():
    cfg = laws.SeriesConfig(abs_tol=1e-10, max_terms=3_000_000)
    assert laws.sech_series_geometric(1e-4, cfg) == pytest.approx(1.0, abs=0.05)
    loose = laws.SeriesConfig(abs_tol=1e-3, max_terms=3_000_000)
    assert laws.sech_series_theta(1e-4, loose) == pytest.approx(1.0, abs=0.05)


def test_gf_kernel_values_and_identity():
    assert laws.gf_kernel(0.6) == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert laws.gf_kernel(1.0 - 1e-8) > 0.999
    for z in np.arange(1, 10) / 10.0:
        k = laws.gf_kernel(z)
        assert k + 1.0 / k == pytest.approx(2.0 / z, abs=1e-12)
        assert 0.0 < k < 1.0


def test_gf_kernel_domain():
    for z in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            laws.gf_kernel(z)
    with pytest.raises(ValueError):
        laws.gen_fn_tau(0.5, 0)


def test_unit_level_passage_gfs():
    for z in np.arange(1, 10) / 10.0:
        assert laws.gen_fn_tau(z, 1) == pytest.approx(z, abs=1e-12)
    assert laws.gen_fn_sigma(0.6, 1) == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_gen_fn_tau_near_one():
    # passage times are a.s. finite, so E z^tau -> 1 as z -> 1
    assert laws.gen_fn_tau(1.0 - 1e-8, 2) > 0.999


def test_laplace_limit_of_generating_functions():
    for theta in (0.5, 1.0, 2.0):
        sig_errs = [abs(laws.gen_fn_sigma(math.exp(-theta / b ** 2), b)
                        - laws.laplace_passage(theta)) for b in (50, 100, 200, 400)]
        tau_errs = [abs(laws.gen_fn_tau(math.exp(-theta / b ** 2), b)
                        - laws.laplace_exit(theta)) for b in (50, 100, 200, 400)]
        assert all(b < a for a, b in zip(sig_errs, sig_errs[1:]))
        assert all(b < a for a, b in zip(tau_errs, tau_errs[1:]))
        assert sig_errs[-1] < 1e-2 and tau_errs[-1] < 1e-2


def test_passage_density_basics():
    assert laws.passage_density(1e-6) == 0.0
    assert laws.passage_density(1e-300) == 0.0
    vals = laws.passage_density(np.logspace(-2, 3, 50))
    assert np.all(vals >= 0.0)


def test_passage_density_mode_at_one_third():
    t0 = 1.0 / 3.0
    f0 = laws.passage_density(t0)
    assert f0 > laws.passage_density(t0 - 1e-3)
    assert f0 > laws.passage_density(t0 + 1e-3)
    # centred difference of log-density vanishes at the mode
    eps = 1e-6
    slope = (math.log(laws.passage_density(t0 + eps))
             - math.log(laws.passage_density(t0 - eps))) / (2 * eps)
    assert abs(slope) < 1e-5


def test_passage_density_normalization():
    # split at t=1 and map the heavy tail through u = 1/sqrt(t), under
    # which the integrand becomes twice the standard normal density
    head = laws.adaptive_gauss_legendre(laws.passage_density, 0.0, 1.0)
    tail = laws.adaptive_gauss_legendre(
        lambda u: laws.passage_density(1.0 / u ** 2) * 2.0 / u ** 3, 0.0, 1.0)
    assert head + tail == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("theta", [0.5, 1.0, 4.0])
def test_passage_density_laplace_transform(theta):
    upper = max(10.0, 45.0 / theta)  # truncated tail is below exp(-45)
    val = laws.adaptive_gauss_legendre(
        lambda t: np.exp(-theta * t) * laws.passage_density(t), 0.0, upper)
    assert abs(val - laws.laplace_passage(theta)) < 1e-6
