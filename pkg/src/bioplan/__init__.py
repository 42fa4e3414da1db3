"""Risk-adjusted capacity expansion planning for multi-product biomass plants."""

from .analysis import (
    FrontierPoint,
    SensitivityResult,
    SolverFailure,
    discrete_cvar,
    evaluate_dispatch,
    min_viable_price,
    risk_frontier,
    solve_case,
    value_at_risk,
)
from .capex import (
    CapexCurve,
    PiecewiseApprox,
    annuity_coefficient,
    build_breakpoints_domain_uniform,
    build_breakpoints_range_uniform,
    expansion_cost,
    max_rel_error,
    piecewise_eval,
    total_capital_cost,
)
from .caseio import (
    CaseFile,
    CaseLoadError,
    CaseValidationError,
    Overrides,
    ScenarioSet,
    apply_overrides,
    ingest_price_csv,
    load_case,
    render_report,
    save_case,
    write_report,
)
from .model import (
    Facility,
    Plant,
    Process,
    Product,
    RiskConfig,
    ValidationReport,
    index_processes,
    validate_facility,
)
from .program import (
    MilpModel,
    ModelIndex,
    build_extensive_form,
    build_second_stage_lp,
    phi_coefficients,
    slice_scenario,
)
from .results import DispatchEvaluation, PlanSolution, PlantPlan, RiskReport
from .solver import (
    MilpSolution,
    SolverOptions,
    export_mps,
    import_solution,
    solve_lp,
    solve_reference_milp,
)

__version__ = "0.1.0"
