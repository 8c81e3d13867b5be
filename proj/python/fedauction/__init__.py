"""Online reverse-auction incentive mechanism for budgeted federated learning."""

from ._fedauction import (
    Bid,
    ConfigError,
    GroupOrder,
    Outcome,
    TaskConfig,
    WorkerProfile,
    check_budget_feasibility,
    check_individual_rationality,
    cost_density,
    first_step_selection,
    generate_quality_population,
    generate_uniform_population,
    get_payment_density_threshold,
    run_mechanism,
    run_online_auction,
    run_property_suite,
    run_scenario_csv,
    run_table1_csv,
    sample_budget_at,
    truthful_bids,
)

__all__ = [
    "Bid",
    "ConfigError",
    "GroupOrder",
    "Outcome",
    "TaskConfig",
    "WorkerProfile",
    "check_budget_feasibility",
    "check_individual_rationality",
    "cost_density",
    "first_step_selection",
    "generate_quality_population",
    "generate_uniform_population",
    "get_payment_density_threshold",
    "run_mechanism",
    "run_online_auction",
    "run_property_suite",
    "run_scenario_csv",
    "run_table1_csv",
    "sample_budget_at",
    "truthful_bids",
]
