"""Exact dynamic programming for discrete-time, finite-horizon optimal switching
with signed switching costs on scenario trees."""

__version__ = "0.1.0"

from .tree import (
    Node,
    ScenarioTree,
    StoppingRule,
    Violation,
    conditional_expectation,
    expectation_field,
    path_measure,
    validate_stopping_rule,
    validate_tree,
)
from .model import (
    InvalidModelError,
    SwitchingModel,
    forbid_switch_cost,
    scale_model,
    shift_rewards,
    validate_model,
)
from .snell import (
    ProcessField,
    check_stopped_martingale,
    expected_stopped_value,
    optimal_stopping_time,
    snell_envelope,
)
from .strategy import (
    InadmissibleStrategyError,
    Strategy,
    canonicalize,
    check_admissibility,
    evaluate,
    evaluate_raw,
    negate_for_minimization,
    strategy_from_events,
)
from .solver import (
    EquivalenceReport,
    ValueField,
    backward_induction_explicit,
    backward_induction_implicit,
    equivalence_report,
    extract_strategy,
)
from .oracle import (
    BudgetExceededError,
    EnumerationBudget,
    enumerate_optimum,
    enumerate_stopping_optimum,
    mixed_mode_snell_check,
)
from .generators import GeneratorSpec, gen_instance
