"""Result containers shared by the dispatch evaluator, solver, and reporter."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping


@dataclass(frozen=True)
class RiskReport:
    """Distributional summary of per-scenario net operating costs Q.

    ``value_at_risk`` is the alpha-quantile of Q (the optimal split point of
    the tail-average formulation); ``cvar`` the average of the worst
    (1 - alpha) tail. Net revenue is -Q minus the annualized capital charge
    supplied by the caller.
    """

    alpha: float
    mean_cost: float
    value_at_risk: float
    cvar: float
    min_net_revenue: float
    max_net_revenue: float
    loss_probability: float
    scenario_costs: tuple[float, ...]
    annualized_capex: float = 0.0


@dataclass(frozen=True)
class PlantPlan:
    plant_id: str
    name: str
    capacity_unit: str
    capacity_unit_scale: float
    existing_capacity_base: float
    capacity_base: float
    expansion_base: float
    capital_cost: float
    annualized_capital_cost: float
    segment: int | None
    existing_capital_cost: float

    @property
    def capacity_units(self) -> float:
        return self.capacity_base / self.capacity_unit_scale

    @property
    def expansion_units(self) -> float:
        return self.expansion_base / self.capacity_unit_scale


@dataclass(frozen=True)
class ProcessSummary:
    process_id: str
    mean_level: float
    mean_reference_input: float


@dataclass(frozen=True)
class ProductSummary:
    product_id: str
    unit: str
    mean_available: float
    mean_produced: float
    mean_consumed: float
    mean_sold: float
    mean_disposed: float


@dataclass(frozen=True)
class DispatchEvaluation:
    """Per-scenario second-stage optima for fixed capacities."""

    scenario_costs: tuple[float, ...]
    probabilities: tuple[float, ...]
    levels: Mapping[str, tuple[float, ...]]
    sales: Mapping[str, tuple[float, ...]]
    disposal: Mapping[str, tuple[float, ...]]
    process_summaries: tuple[ProcessSummary, ...]
    product_summaries: tuple[ProductSummary, ...]
    risk: RiskReport
    failures: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class PlanSolution:
    """A solved expansion plan plus the dispatch it implies."""

    status: str
    objective: float
    capex_annuity: float
    expected_cost: float
    cvar_cost: float
    lam: float
    alpha: float
    plants: tuple[PlantPlan, ...]
    dispatch: DispatchEvaluation

    @property
    def expected_total_cost(self) -> float:
        """Capex annuity plus expected operating cost (capex-inclusive)."""
        return self.capex_annuity + self.expected_cost

    @property
    def cvar_total_cost(self) -> float:
        """Capex annuity plus operating-cost CVaR (capex-inclusive)."""
        return self.capex_annuity + self.cvar_cost


def plan_to_dict(plan: PlanSolution) -> dict:
    """JSON-ready form of a plan, loadable again with ``plan_from_dict``."""
    d = plan.dispatch
    return {
        "status": plan.status,
        "objective": plan.objective,
        "capex_annuity": plan.capex_annuity,
        "expected_cost": plan.expected_cost,
        "cvar_cost": plan.cvar_cost,
        "lambda": plan.lam,
        "alpha": plan.alpha,
        "plants": [
            {
                "plant_id": p.plant_id,
                "name": p.name,
                "capacity_unit": p.capacity_unit,
                "capacity_unit_scale": p.capacity_unit_scale,
                "existing_capacity_base": p.existing_capacity_base,
                "capacity_base": p.capacity_base,
                "expansion_base": p.expansion_base,
                "capital_cost": p.capital_cost,
                "annualized_capital_cost": p.annualized_capital_cost,
                "segment": p.segment,
                "existing_capital_cost": p.existing_capital_cost,
            }
            for p in plan.plants
        ],
        "dispatch": {
            "scenario_costs": list(d.scenario_costs),
            "probabilities": list(d.probabilities),
            "levels": {k: list(v) for k, v in sorted(d.levels.items())},
            "sales": {k: list(v) for k, v in sorted(d.sales.items())},
            "disposal": {k: list(v) for k, v in sorted(d.disposal.items())},
            "processes": [
                {
                    "process_id": s.process_id,
                    "mean_level": s.mean_level,
                    "mean_reference_input": s.mean_reference_input,
                }
                for s in d.process_summaries
            ],
            "products": [
                {
                    "product_id": s.product_id,
                    "unit": s.unit,
                    "mean_available": s.mean_available,
                    "mean_produced": s.mean_produced,
                    "mean_consumed": s.mean_consumed,
                    "mean_sold": s.mean_sold,
                    "mean_disposed": s.mean_disposed,
                }
                for s in d.product_summaries
            ],
            "risk": {
                "alpha": d.risk.alpha,
                "mean_cost": d.risk.mean_cost,
                "value_at_risk": d.risk.value_at_risk,
                "cvar": d.risk.cvar,
                "min_net_revenue": d.risk.min_net_revenue,
                "max_net_revenue": d.risk.max_net_revenue,
                "loss_probability": d.risk.loss_probability,
                "scenario_costs": list(d.risk.scenario_costs),
                "annualized_capex": d.risk.annualized_capex,
            },
            "failures": [list(f) for f in d.failures],
        },
    }


def plan_from_dict(doc: dict) -> PlanSolution:
    d = doc["dispatch"]
    risk = d["risk"]
    dispatch = DispatchEvaluation(
        scenario_costs=tuple(d["scenario_costs"]),
        probabilities=tuple(d["probabilities"]),
        levels={k: tuple(v) for k, v in d["levels"].items()},
        sales={k: tuple(v) for k, v in d["sales"].items()},
        disposal={k: tuple(v) for k, v in d["disposal"].items()},
        process_summaries=tuple(
            ProcessSummary(
                process_id=s["process_id"],
                mean_level=s["mean_level"],
                mean_reference_input=s["mean_reference_input"],
            )
            for s in d["processes"]
        ),
        product_summaries=tuple(
            ProductSummary(
                product_id=s["product_id"],
                unit=s["unit"],
                mean_available=s["mean_available"],
                mean_produced=s["mean_produced"],
                mean_consumed=s["mean_consumed"],
                mean_sold=s["mean_sold"],
                mean_disposed=s["mean_disposed"],
            )
            for s in d["products"]
        ),
        risk=RiskReport(
            alpha=risk["alpha"],
            mean_cost=risk["mean_cost"],
            value_at_risk=risk["value_at_risk"],
            cvar=risk["cvar"],
            min_net_revenue=risk["min_net_revenue"],
            max_net_revenue=risk["max_net_revenue"],
            loss_probability=risk["loss_probability"],
            scenario_costs=tuple(risk["scenario_costs"]),
            annualized_capex=risk["annualized_capex"],
        ),
        failures=tuple((int(w), str(s)) for w, s in d.get("failures", [])),
    )
    return PlanSolution(
        status=doc["status"],
        objective=doc["objective"],
        capex_annuity=doc["capex_annuity"],
        expected_cost=doc["expected_cost"],
        cvar_cost=doc["cvar_cost"],
        lam=doc["lambda"],
        alpha=doc["alpha"],
        plants=tuple(
            PlantPlan(
                plant_id=p["plant_id"],
                name=p["name"],
                capacity_unit=p["capacity_unit"],
                capacity_unit_scale=p["capacity_unit_scale"],
                existing_capacity_base=p["existing_capacity_base"],
                capacity_base=p["capacity_base"],
                expansion_base=p["expansion_base"],
                capital_cost=p["capital_cost"],
                annualized_capital_cost=p["annualized_capital_cost"],
                segment=p["segment"],
                existing_capital_cost=p["existing_capital_cost"],
            )
            for p in doc["plants"]
        ),
        dispatch=dispatch,
    )
