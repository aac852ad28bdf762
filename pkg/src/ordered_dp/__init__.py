"""
ordered_dp: abstract dynamic programs on finite ordered value spaces.

Models expose policy operators ``T_sigma`` and a greedy selector; the
solvers (VFI, Howard and optimistic policy iteration) work for every model
family: discounted MDPs, risk-sensitive and quantile programs, nonlinear
discounting, and the affine data-valuation problem.
"""
from .algorithms import (
    FixedPointResult,
    IterationControl,
    SolveResult,
    TimingRow,
    howard_policy_iteration,
    optimistic_policy_iteration,
    policy_evaluation,
    run_timing_comparison,
    successive_approximation,
    value_function_iteration,
)
from .core import (
    ActionValueProgram,
    DynamicProgram,
    FiniteMDP,
    MarkovStructure,
    StateActionSpace,
    apply_bellman,
    apply_policy_operator,
    greedy_policy,
    pointwise_le,
)
from .data_valuation import (
    DataValuationModel,
    DriftCheck,
    ProfitTechnology,
    apply_K,
    check_drift,
    load_model_json,
    model_from_dict,
    model_to_dict,
    solve_data_valuation,
    static_profit,
)
from .errors import (
    ContractError,
    ConvergenceError,
    DivergenceError,
    DPError,
    EnumerationSizeError,
    FeasibilityError,
    NumericalDomainError,
    ParameterError,
    StabilityAssumptionError,
    StructureError,
)
from .markov import (
    Ar1Spec,
    DriftReport,
    StochasticMatrix,
    discount_drift_check,
    stationary_distribution,
    tauchen,
)
from .nonlinear_discount import (
    DiscountMap,
    NonlinearDiscountModel,
    affine_discount,
    capped_linear_discount,
    check_discount_assumptions,
    compute_nd_upper_bound,
    linear_discount,
    nd_action_value,
    power_discount,
    sqrt_tail_discount,
)
from .oracle import (
    OptimalityReport,
    PropertyReport,
    brute_force_optimality,
    check_concavity,
    check_lower_perimeter,
    check_order_preserving,
    enumerate_policies,
    estimate_contraction_modulus,
)
from .quantile import QuantileModel, greedy_from_q, q_bellman, q_policy_operator, quantile
from .risk_sensitive import (
    CONTINUE,
    EXIT,
    FirmExitModel,
    FirmExitParams,
    RiskSensitiveModel,
    build_firm_exit_model,
    compute_upper_bound_b,
    continuation_values,
    entropic_ce,
    exit_threshold,
    rs_action_value,
)

__version__ = "0.1.0"
