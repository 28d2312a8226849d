"""Tail bounds for the l1 deviation between empirical and true distributions."""
from .binomial import MadTriple, g_function, log_binomial_pmf, mad_bounds, mad_bruteforce, mad_exact, mad_small_p
from .bounds import (
    BoundResult,
    PlanningError,
    PlanResult,
    best_bound,
    crude_bound,
    devroye_bound,
    dkw_bound,
    finite_k_bound,
    general_bound,
    linf_bound,
    mcdiarmid_centered,
    mean_lower_bound,
    nu_bound,
    plan_n,
)
from .distributions import (
    Distribution,
    Finite,
    FunctionalValue,
    Geometric,
    Poisson,
    SlowRate,
    TruncationCertificate,
    Zipf,
    a_n,
    b_n,
    construct_slow_rate,
    from_dict,
    from_json,
    l1_distance,
    nu,
    scheffe_sup,
    truncate,
    uniform,
)
from .montecarlo import (
    SampleCounts,
    SimulationSummary,
    draw,
    estimate,
    j_n,
    ks_stat,
    linf_stat,
    lipschitz_check,
    verify_bounds,
)

__version__ = "0.1.0"
