"""Area spectral efficiency and energy-minimal planning for Poisson ZF MU-MIMO networks."""

from .numerics import (
    BisectionSpec,
    BracketError,
    ConvergenceError,
    DomainError,
    QuadratureSpec,
    bisect,
    incomplete_beta,
    integrate_semi_infinite,
    lower_incomplete_gamma,
)
from .rate_model import (
    NetworkConfig,
    RateResult,
    ase_exact,
    ase_lower_bound,
    d_k_rate_lb_dK,
    d_mean_rate_exact_dM,
    d_rate_lb_dM,
    mean_rate_exact,
    mean_rate_lower_bound,
    mean_rate_result,
)
from .ase_optimizer import (
    LoadingSolution,
    ase_at_optimal_loading,
    gain_derivative,
    gain_function,
    optimal_k_exact,
    optimal_k_lower_bound,
    optimal_user_fraction,
)
from .energy_planner import (
    BUILTIN_PROFILES,
    BsPowerProfile,
    PlanningMethod,
    PlanningProblem,
    PlanningSolution,
    bs_energy,
    dbm_to_watts,
    energy_efficiency,
    network_energy,
    optimal_m_given_k,
    plan_baseline,
    plan_optimal,
    plan_suboptimal,
    required_density,
    suboptimal_k_given_m,
    suboptimal_m_given_k,
)
from .mc_sim import (
    GammaApproxReport,
    SimulationConfig,
    SimulationResult,
    estimate_mean_rate,
    sample_ppp,
    simulate_typical_user,
    trial_rng,
    validate_gamma_approx,
    zf_precoder,
)

__version__ = "0.1.0"
