"""Dispatch evaluation, risk metrics, break-even search, and risk frontiers.

The tail-average risk measure is computed here by sorting (the definitional
route), independently of the linearized rows inside the MILP; the two must
agree at any optimum, which the test suite exercises. Plans returned by
``solve_case`` always re-evaluate the per-scenario dispatch at the chosen
capacities so reported metrics never inherit solver slack from scenarios
whose cost coefficient happens to be zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import capex as cx
from .caseio import CaseFile, Overrides, apply_overrides
from .model import Facility, RiskConfig, index_processes
from .program import (
    ModelIndex,
    build_extensive_form,
    build_second_stage_lp,
    capex_curve,
    phi_coefficients,
    slice_scenario,
)
from .results import (
    DispatchEvaluation,
    PlanSolution,
    PlantPlan,
    ProcessSummary,
    ProductSummary,
    RiskReport,
)
from .caseio import ScenarioSet
from .solver import MilpSolution, SolverOptions, solve_lp, solve_reference_milp


class SolverFailure(RuntimeError):
    def __init__(self, status: str, message: str = ""):
        super().__init__(message or f"solver returned status '{status}'")
        self.status = status


def discrete_cvar(
    values: Sequence[float], probabilities: Sequence[float], alpha: float
) -> float:
    """Tail average of the worst (1 - alpha) probability mass of ``values``.

    Computed by sorting: the optimal threshold of the minimization form is
    the alpha-quantile, so the result is
    z* + sum(p * max(v - z*, 0)) / (1 - alpha). At alpha = 0 this is the mean.
    """
    z = value_at_risk(values, probabilities, alpha)
    excess = math.fsum(
        p * max(v - z, 0.0) for v, p in zip(values, probabilities)
    )
    return z + excess / (1.0 - alpha)


def value_at_risk(
    values: Sequence[float], probabilities: Sequence[float], alpha: float
) -> float:
    """Smallest value whose cumulative probability reaches ``alpha``."""
    values = np.asarray(values, dtype=float)
    probabilities = np.asarray(probabilities, dtype=float)
    if values.shape != probabilities.shape:
        raise ValueError("values and probabilities differ in length")
    if np.any(probabilities < 0):
        raise ValueError("probabilities must be non-negative")
    total = math.fsum(probabilities)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {total}, expected 1")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"tail level must be in [0, 1), got {alpha}")
    order = np.argsort(values, kind="stable")
    cum = 0.0
    for k in order:
        cum += probabilities[k]
        if cum >= alpha - 1e-12:
            return float(values[k])
    return float(values[order[-1]])


def risk_report(
    scenario_costs: Sequence[float],
    probabilities: Sequence[float],
    alpha: float,
    annualized_capex: float = 0.0,
) -> RiskReport:
    q = np.asarray(scenario_costs, dtype=float)
    p = np.asarray(probabilities, dtype=float)
    mean = math.fsum(q * p)
    z = value_at_risk(q, p, alpha)
    cvar = discrete_cvar(q, p, alpha)
    net = -q - annualized_capex
    loss = math.fsum(p[net < 0.0])
    return RiskReport(
        alpha=alpha,
        mean_cost=mean,
        value_at_risk=z,
        cvar=cvar,
        min_net_revenue=float(net.min()),
        max_net_revenue=float(net.max()),
        loss_probability=float(min(max(loss, 0.0), 1.0)),
        scenario_costs=tuple(float(v) for v in q),
        annualized_capex=annualized_capex,
    )


def evaluate_dispatch(
    facility: Facility,
    capacities: Mapping[str, float],
    scenarios: ScenarioSet,
    annualized_capex: float = 0.0,
    alpha: float = 0.9,
    options: SolverOptions | None = None,
) -> DispatchEvaluation:
    """Solve every scenario's dispatch LP independently at fixed capacities.

    Capacities are in base product units. Per-scenario LP failures are
    recorded, not raised; risk metrics are only meaningful when there are
    none.
    """
    options = options or SolverOptions()
    idx = index_processes(facility)
    n = scenarios.count
    probs = scenarios.probabilities
    costs: list[float] = []
    failures: list[tuple[int, str]] = []
    levels: dict[str, list[float]] = {j.id: [] for j in facility.processes}
    sales: dict[str, list[float]] = {i.id: [] for i in facility.products}
    disposal: dict[str, list[float]] = {i.id: [] for i in facility.products}

    for w in range(n):
        sl = slice_scenario(facility, scenarios, w)
        model, index = build_second_stage_lp(facility, capacities, sl)
        sol = solve_lp(model, options)
        if sol.status != "optimal":
            failures.append((w, sol.status))
            costs.append(math.nan)
            for j in facility.processes:
                levels[j.id].append(math.nan)
            for i in facility.products:
                sales[i.id].append(math.nan)
                disposal[i.id].append(math.nan)
            continue
        costs.append(sol.objective)
        lvl = {j.id: sol.value(index.levels[(j.id, 0)]) for j in facility.processes}
        for j in facility.processes:
            levels[j.id].append(lvl[j.id])
        for prod in facility.products:
            sold = sol.value(index.sales[(prod.id, 0)])
            produced = math.fsum(
                facility.processes_by_id[j].outputs[prod.id] * lvl[j]
                for j in idx.producers[prod.id]
            )
            consumed = math.fsum(
                facility.processes_by_id[j].inputs[prod.id] * lvl[j]
                for j in idx.consumers[prod.id]
            )
            slack = sl.availabilities[prod.id] + produced - consumed - sold
            sales[prod.id].append(sold)
            disposal[prod.id].append(max(0.0, slack))

    def wmean(series: Sequence[float]) -> float:
        return math.fsum(v * p for v, p in zip(series, probs))

    process_summaries = tuple(
        ProcessSummary(
            process_id=j.id,
            mean_level=wmean(levels[j.id]),
            mean_reference_input=wmean(levels[j.id]) * j.inputs[j.reference_product],
        )
        for j in facility.processes
    )
    product_summaries = []
    for prod in facility.products:
        avail = math.fsum(
            scenarios.availability(prod, w) * probs[w] for w in range(n)
        )
        produced = math.fsum(
            facility.processes_by_id[j].outputs[prod.id] * wmean(levels[j])
            for j in idx.producers[prod.id]
        )
        consumed = math.fsum(
            facility.processes_by_id[j].inputs[prod.id] * wmean(levels[j])
            for j in idx.consumers[prod.id]
        )
        product_summaries.append(
            ProductSummary(
                product_id=prod.id,
                unit=prod.unit,
                mean_available=avail,
                mean_produced=produced,
                mean_consumed=consumed,
                mean_sold=wmean(sales[prod.id]),
                mean_disposed=wmean(disposal[prod.id]),
            )
        )

    if failures:
        risk = RiskReport(
            alpha=alpha, mean_cost=math.nan, value_at_risk=math.nan, cvar=math.nan,
            min_net_revenue=math.nan, max_net_revenue=math.nan,
            loss_probability=math.nan,
            scenario_costs=tuple(costs), annualized_capex=annualized_capex,
        )
    else:
        risk = risk_report(costs, probs, alpha, annualized_capex)

    return DispatchEvaluation(
        scenario_costs=tuple(costs),
        probabilities=probs,
        levels={k: tuple(v) for k, v in levels.items()},
        sales={k: tuple(v) for k, v in sales.items()},
        disposal={k: tuple(v) for k, v in disposal.items()},
        process_summaries=process_summaries,
        product_summaries=tuple(product_summaries),
        risk=risk,
        failures=tuple(failures),
    )


def solve_case(
    case: CaseFile,
    risk: RiskConfig | None = None,
    segments: int | None = None,
    options: SolverOptions | None = None,
) -> PlanSolution:
    """Build the extensive form, solve it, and re-evaluate the plan.

    The reported objective decomposition (capex annuity, expected cost, tail
    average) is recomputed from the independent per-scenario dispatch at the
    optimal capacities, which coincides with the solver objective at any
    exact optimum.
    """
    risk = risk if risk is not None else case.risk
    if options is None:
        options = SolverOptions.from_mapping(case.solver_options)
    model, index = build_extensive_form(case, risk=risk, segments=segments)
    sol = solve_reference_milp(model, index, options)
    if sol.status != "optimal":
        raise SolverFailure(sol.status)

    facility = case.facility
    phi = index.phi
    capacities = {block.plant_id: sol.value(block.c) for block in index.plants}
    capex_by_plant = {block.plant_id: sol.value(block.b) for block in index.plants}
    capex_annuity = math.fsum(
        phi[k] * capex_by_plant[k] for k in capex_by_plant
    )

    dispatch = evaluate_dispatch(
        facility, capacities, case.scenarios,
        annualized_capex=capex_annuity, alpha=risk.alpha, options=options,
    )
    if dispatch.failures:
        raise SolverFailure("numerical", "dispatch re-evaluation failed")

    expected = dispatch.risk.mean_cost
    cvar = dispatch.risk.cvar
    objective = capex_annuity + risk.lam * cvar + (1.0 - risk.lam) * expected

    plants = []
    for block in index.plants:
        plant = facility.plants_by_id[block.plant_id]
        curve = capex_curve(plant)
        existing_cost = cx.total_capital_cost(curve, plant.initial_capacity_base)
        b = capex_by_plant[block.plant_id]
        plants.append(
            PlantPlan(
                plant_id=plant.id,
                name=plant.name,
                capacity_unit=plant.capacity_unit,
                capacity_unit_scale=plant.capacity_unit_scale,
                existing_capacity_base=plant.initial_capacity_base,
                capacity_base=capacities[block.plant_id],
                expansion_base=sol.value(block.y),
                capital_cost=b,
                annualized_capital_cost=phi[block.plant_id] * b,
                segment=sol.active_segments.get(block.plant_id),
                existing_capital_cost=existing_cost,
            )
        )

    return PlanSolution(
        status="optimal",
        objective=objective,
        capex_annuity=capex_annuity,
        expected_cost=expected,
        cvar_cost=cvar,
        lam=risk.lam,
        alpha=risk.alpha,
        plants=tuple(plants),
        dispatch=dispatch,
    )


@dataclass(frozen=True)
class SensitivityResult:
    target_product: str
    target_plant: str
    viability_price: float
    bracket: tuple[float, float]
    trace: tuple[tuple[float, bool], ...]
    viable_plan: PlanSolution


def _sales_potential(facility: Facility, product_id: str) -> float:
    """Upper bound on mean sold volume: availability plus maximal production."""
    idx = index_processes(facility)
    prod = facility.products_by_id[product_id]
    total = prod.initial_availability
    for j in idx.producers[product_id]:
        proc = facility.processes_by_id[j]
        plant = facility.plants_by_id[proc.plant_id]
        level_ub = plant.max_capacity_base / proc.inputs[proc.reference_product]
        total += proc.outputs[product_id] * level_ub
    return total


def min_viable_price(
    case: CaseFile,
    target_product: str,
    target_plant: str,
    bracket: tuple[float, float],
    tol: float,
    risk: RiskConfig | None = None,
    segments: int | None = None,
    options: SolverOptions | None = None,
) -> SensitivityResult:
    """Bisect for the lowest constant price making the target route viable.

    Viability at a candidate price: the optimal plan expands the target
    plant beyond a sliver of its reference capacity, or sells a non-trivial
    share of the target product's potential volume. The trace is checked for
    predicate monotonicity; a violation raises instead of returning a bogus
    threshold.
    """
    lo, hi = bracket
    if not lo < hi:
        raise ValueError(f"invalid bracket ({lo}, {hi})")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    facility = case.facility
    if target_product not in facility.products_by_id:
        raise ValueError(f"unknown product '{target_product}'")
    plant = facility.plants_by_id.get(target_plant)
    if plant is None:
        raise ValueError(f"unknown plant '{target_plant}'")
    cap_floor = 1e-6 * plant.reference_capacity_base
    sold_floor = 1e-6 * _sales_potential(facility, target_product)

    def probe(price: float) -> tuple[bool, PlanSolution]:
        probed = apply_overrides(case, Overrides(price_overrides={target_product: price}))
        plan = solve_case(probed, risk=risk, segments=segments, options=options)
        expansion = next(
            p.expansion_base for p in plan.plants if p.plant_id == target_plant
        )
        sold = next(
            s.mean_sold for s in plan.dispatch.product_summaries
            if s.product_id == target_product
        )
        return expansion > cap_floor or sold > sold_floor, plan

    trace: list[tuple[float, bool]] = []
    lo_viable, _ = probe(lo)
    hi_viable, hi_plan = probe(hi)
    trace.append((lo, lo_viable))
    trace.append((hi, hi_viable))
    if lo_viable or not hi_viable:
        raise ValueError(
            f"invalid bracket: viability is {lo_viable} at {lo} and "
            f"{hi_viable} at {hi}; need False at the low end, True at the high end"
        )

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        viable, plan = probe(mid)
        trace.append((mid, viable))
        if viable:
            hi, hi_plan = mid, plan
        else:
            lo = mid

    ordered = sorted(trace)
    flags = [v for _, v in ordered]
    if any(a and not b for a, b in zip(flags, flags[1:])):
        raise RuntimeError(
            "viability predicate is not monotone over the probed prices; "
            f"trace: {ordered}"
        )
    return SensitivityResult(
        target_product=target_product,
        target_plant=target_plant,
        viability_price=hi,
        bracket=(lo, hi),
        trace=tuple(trace),
        viable_plan=hi_plan,
    )


@dataclass(frozen=True)
class FrontierPoint:
    lam: float
    expected_total_cost: float
    cvar_total_cost: float
    loss_probability: float
    plan: PlanSolution


def risk_frontier(
    case: CaseFile,
    lambda_grid: Sequence[float],
    alpha: float | None = None,
    segments: int | None = None,
    options: SolverOptions | None = None,
) -> tuple[FrontierPoint, ...]:
    """Solve the plan across risk weights and report capex-inclusive costs.

    Along increasing lambda the scalarization guarantees a non-increasing
    capex-inclusive tail cost and a non-decreasing capex-inclusive expected
    cost; both are asserted on every run (ties allowed within tolerance).
    """
    lams = sorted(float(l) for l in lambda_grid)
    if any(not 0.0 <= l <= 1.0 for l in lams):
        raise ValueError("risk weights must lie in [0, 1]")
    a = alpha if alpha is not None else case.risk.alpha
    points = []
    for lam in lams:
        plan = solve_case(
            case, risk=RiskConfig(lam=lam, alpha=a), segments=segments, options=options
        )
        points.append(
            FrontierPoint(
                lam=lam,
                expected_total_cost=plan.expected_total_cost,
                cvar_total_cost=plan.cvar_total_cost,
                loss_probability=plan.dispatch.risk.loss_probability,
                plan=plan,
            )
        )
    scale = max(1.0, max(abs(p.expected_total_cost) for p in points),
                max(abs(p.cvar_total_cost) for p in points))
    slack = 1e-6 * scale
    for a_pt, b_pt in zip(points, points[1:]):
        if b_pt.cvar_total_cost > a_pt.cvar_total_cost + slack:
            raise RuntimeError(
                f"tail cost rose along the frontier: {a_pt.lam} -> {b_pt.lam}"
            )
        if b_pt.expected_total_cost < a_pt.expected_total_cost - slack:
            raise RuntimeError(
                f"expected cost fell along the frontier: {a_pt.lam} -> {b_pt.lam}"
            )
    return tuple(points)


def frontier_csv(points: Sequence[FrontierPoint]) -> str:
    lines = ["lambda,expected_total_cost_mm,cvar_total_cost_mm,loss_probability"]
    for p in points:
        lines.append(
            f"{p.lam!r},{p.expected_total_cost * 1e-6!r},"
            f"{p.cvar_total_cost * 1e-6!r},{p.loss_probability!r}"
        )
    return "\n".join(lines) + "\n"
