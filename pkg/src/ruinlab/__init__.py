"""ruinlab: exit times and running maxima of the simple walk on Z^N.

Three engines cross-check each other: Monte Carlo sampling (:mod:`walk`),
exact absorbing-chain computation at small scale (:mod:`oracle`), and
analytic series/quadrature evaluation of the limit laws (:mod:`laws`).
:mod:`harness` wires them into reproducible experiments.
"""

from .laws import (
    KPLimit,
    QuadratureConfig,
    QuadratureError,
    SeriesConfig,
    SeriesConvergenceError,
    exit_cdf,
    exit_moment_1d_closed,
    exit_moment_limit,
    gen_fn_sigma,
    gen_fn_tau,
    gf_kernel,
    h,
    h_reflection,
    h_theta,
    kp_expected_limit,
    laplace_exit,
    laplace_passage,
    max_cdf,
    max_cdf_horizon,
    max_moment_limit,
    passage_density,
    sech_series_geometric,
    sech_series_theta,
)
from .oracle import (
    AbsorbingChainSpec,
    ExactMoment,
    SolverConvergenceError,
    StateSpaceError,
    SurvivalTable,
    exit_moment_exact,
    exit_survival,
    expected_exit_exact,
    max_cdf_exact,
    max_moment_exact,
    tau_distribution_1d,
)
from .walk import (
    CoupledSample,
    MomentEstimate,
    StepBudgetError,
    WalkState,
    batch_estimate,
    sample_coupled,
    sample_exit_time,
    sample_running_max,
    step,
    stream,
)
from .harness import (
    ConvergenceRow,
    ExperimentPlan,
    IdentityCheck,
    run_coupling_audit,
    run_exit_converge,
    run_identities,
    run_max_converge,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
