"""Solver-agnostic MILP assembly for the planning problem.

Two builders live here. ``build_second_stage_lp`` emits the dispatch LP for
one scenario with flow variables substituted out (production level and sales
only), which keeps per-scenario evaluations small. ``build_extensive_form``
emits the full scenario-based MILP: first-stage expansion variables with the
piecewise capital-cost membership rows, explicit flow variables per scenario,
and the tail-risk linearization rows coupling scenarios through the shared
threshold variable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import capex as cx
from .caseio import CaseFile, ScenarioSet
from .model import Facility, RiskConfig, index_processes

INF = math.inf

LESS = "<="
GREATER = ">="
EQUAL = "="


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    binary: bool = False


@dataclass
class Constraint:
    name: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float


class MilpModel:
    """Linear program container: variables with bounds, rows, min objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}

    def add_variable(self, name: str, lb: float, ub: float, binary: bool = False) -> int:
        if binary and not (lb >= 0.0 and ub <= 1.0):
            raise ValueError(f"binary variable '{name}' must have bounds within [0, 1]")
        if lb > ub:
            raise ValueError(f"variable '{name}' has empty bound interval [{lb}, {ub}]")
        self.variables.append(Variable(name, float(lb), float(ub), binary))
        return len(self.variables) - 1

    def add_constraint(
        self, name: str, coeffs: Sequence[tuple[int, float]], sense: str, rhs: float
    ) -> int:
        if sense not in (LESS, GREATER, EQUAL):
            raise ValueError(f"bad constraint sense '{sense}'")
        n = len(self.variables)
        for var, _ in coeffs:
            if not 0 <= var < n:
                raise ValueError(f"constraint '{name}' references unknown variable {var}")
        self.constraints.append(
            Constraint(name, tuple((int(v), float(c)) for v, c in coeffs), sense, float(rhs))
        )
        return len(self.constraints) - 1

    def set_objective_coeff(self, var: int, coeff: float) -> None:
        if not 0 <= var < len(self.variables):
            raise ValueError(f"objective references unknown variable {var}")
        if coeff == 0.0:
            self.objective.pop(var, None)
        else:
            self.objective[var] = float(coeff)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    @property
    def binary_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.variables) if v.binary)

    def objective_value(self, values: Sequence[float]) -> float:
        return math.fsum(values[i] * c for i, c in self.objective.items())


@dataclass(frozen=True)
class PlantBlock:
    """Index entry tying one plant's first-stage variables together."""

    plant_id: str
    y: int
    c: int
    b: int
    eta: tuple[int, ...]
    w: tuple[int, ...]
    breakpoints: tuple[tuple[float, float], ...]
    existing_capacity: float
    max_capacity: float

    @property
    def greenfield(self) -> bool:
        return self.existing_capacity == 0.0

    @property
    def segments(self) -> int:
        return len(self.eta)


@dataclass
class ModelIndex:
    """Map from semantic decision keys to model variable ids."""

    plants: tuple[PlantBlock, ...] = ()
    levels: dict = field(default_factory=dict)        # (process, scenario) -> var
    flows_in: dict = field(default_factory=dict)      # (process, product, scenario)
    flows_out: dict = field(default_factory=dict)
    sales: dict = field(default_factory=dict)         # (product, scenario) -> var
    scenario_cost: dict = field(default_factory=dict)  # scenario -> Q var
    shortfall: dict = field(default_factory=dict)      # scenario -> delta var
    tail_threshold: int | None = None                  # z var
    scenario_count: int = 1
    probabilities: tuple[float, ...] = (1.0,)
    lam: float = 0.0
    alpha: float = 0.9
    phi: Mapping[str, float] = field(default_factory=dict)

    def all_variable_ids(self) -> list[int]:
        ids: list[int] = []
        for block in self.plants:
            ids.extend([block.y, block.c, block.b])
            ids.extend(block.eta)
            ids.extend(block.w)
        if self.tail_threshold is not None:
            ids.append(self.tail_threshold)
        for mapping in (self.levels, self.flows_in, self.flows_out, self.sales,
                        self.scenario_cost, self.shortfall):
            ids.extend(mapping.values())
        return ids


@dataclass(frozen=True)
class ScenarioSlice:
    """Resolved prices and availabilities for one scenario."""

    prices: Mapping[str, float]
    availabilities: Mapping[str, float]


def slice_scenario(facility: Facility, scenarios: ScenarioSet, w: int) -> ScenarioSlice:
    prices = {p.id: scenarios.price(p, w) for p in facility.products}
    avails = {p.id: scenarios.availability(p, w) for p in facility.products}
    return ScenarioSlice(prices, avails)


def phi_coefficients(facility: Facility) -> dict[str, float]:
    """Annuity coefficient per plant from its lifetime and discount rate."""
    return {
        k.id: cx.annuity_coefficient(k.discount_rate, k.lifetime_years)
        for k in facility.plants
    }


def capex_curve(plant) -> cx.CapexCurve:
    return cx.CapexCurve(
        reference_cost=plant.reference_capex,
        reference_capacity=plant.reference_capacity_base,
        exponent=plant.scale_exponent,
        existing_capacity=plant.initial_capacity_base,
        max_capacity=plant.max_capacity_base,
    )


_SAN = re.compile(r"[^A-Za-z0-9_.]+")


def _san(name: str) -> str:
    return _SAN.sub("_", name)[:200]


def _level_bound(proc, plant) -> float:
    theta_ref = proc.inputs[proc.reference_product]
    return plant.max_capacity_base / theta_ref


def build_second_stage_lp(
    facility: Facility,
    capacities: Mapping[str, float],
    scenario: ScenarioSlice,
) -> tuple[MilpModel, ModelIndex]:
    """Dispatch LP for fixed capacities and one scenario (flows substituted).

    Variables are production levels and sales; flow quantities follow from
    the fixed proportions and are recovered after solving. Sales of
    non-sellable products are pinned at zero.
    """
    idx = index_processes(facility)
    plants_by_id = facility.plants_by_id
    model = MilpModel("dispatch")
    index = ModelIndex(scenario_count=1, probabilities=(1.0,))

    for plant in facility.plants:
        c_k = capacities.get(plant.id, plant.initial_capacity_base)
        if c_k < plant.initial_capacity_base * (1 - 1e-9):
            raise ValueError(
                f"capacity {c_k} for plant '{plant.id}' below existing "
                f"{plant.initial_capacity_base}"
            )

    for prod in facility.products:
        if prod.sellable:
            price = scenario.prices.get(prod.id)
            if price is None or not math.isfinite(price):
                raise ValueError(f"missing price for sellable product '{prod.id}'")

    level_ub: dict[str, float] = {}
    for proc in facility.processes:
        plant = plants_by_id[proc.plant_id]
        c_k = capacities.get(plant.id, plant.initial_capacity_base)
        theta_ref = proc.inputs[proc.reference_product]
        level_ub[proc.id] = c_k / theta_ref
        var = model.add_variable(f"l__{_san(proc.id)}", 0.0, level_ub[proc.id])
        index.levels[(proc.id, 0)] = var

    for prod in facility.products:
        supply = scenario.availabilities[prod.id] + sum(
            facility.processes_by_id[j].outputs[prod.id] * level_ub[j]
            for j in idx.producers[prod.id]
        )
        ub = supply if prod.sellable else 0.0
        var = model.add_variable(f"v__{_san(prod.id)}", 0.0, max(0.0, ub))
        index.sales[(prod.id, 0)] = var

    for prod in facility.products:
        coeffs = [(index.sales[(prod.id, 0)], 1.0)]
        for j in idx.consumers[prod.id]:
            proc = facility.processes_by_id[j]
            coeffs.append((index.levels[(j, 0)], proc.inputs[prod.id]))
        for j in idx.producers[prod.id]:
            proc = facility.processes_by_id[j]
            coeffs.append((index.levels[(j, 0)], -proc.outputs[prod.id]))
        model.add_constraint(
            f"bal__{_san(prod.id)}", coeffs, LESS, scenario.availabilities[prod.id]
        )

    for plant in facility.plants:
        procs = idx.by_plant[plant.id]
        if not procs:
            continue
        coeffs = []
        for j in procs:
            proc = facility.processes_by_id[j]
            coeffs.append((index.levels[(j, 0)], proc.inputs[proc.reference_product]))
        c_k = capacities.get(plant.id, plant.initial_capacity_base)
        model.add_constraint(f"cap__{_san(plant.id)}", coeffs, LESS, c_k)

    for proc in facility.processes:
        theta_ref = proc.inputs[proc.reference_product]
        model.set_objective_coeff(
            index.levels[(proc.id, 0)], proc.opex_per_ref_unit * theta_ref
        )
    for prod in facility.products:
        if prod.sellable:
            price = scenario.prices[prod.id]
            if price != 0.0:
                model.set_objective_coeff(index.sales[(prod.id, 0)], -price)

    return model, index


def build_extensive_form(
    case: CaseFile,
    risk: RiskConfig | None = None,
    segments: int | None = None,
) -> tuple[MilpModel, ModelIndex]:
    """Assemble the scenario-based expansion MILP.

    First-stage rows: capacity linkage c = C0 + y and, per plant, membership
    of (c, b) in the piecewise set via binary segment selectors eta and the
    exact product linearization w = eta * gamma (0 <= w <= eta). Second-stage
    rows are replicated per scenario around the shared capacities, with the
    scenario cost variable Q defined by an equality and the tail rows
    z + delta >= Q feeding the risk term of the objective.
    """
    facility = case.facility
    scenarios = case.scenarios
    risk = risk if risk is not None else case.risk
    m_segments = segments if segments is not None else case.piecewise_segments
    if m_segments < 1:
        raise ValueError("need at least one piecewise segment")

    idx = index_processes(facility)
    plants_by_id = facility.plants_by_id
    phi = phi_coefficients(facility)
    n_scen = scenarios.count
    probs = scenarios.probabilities

    model = MilpModel("expansion")
    index = ModelIndex(
        scenario_count=n_scen,
        probabilities=probs,
        lam=risk.lam,
        alpha=risk.alpha,
        phi=phi,
    )

    # First-stage variables.
    blocks: list[PlantBlock] = []
    for plant in facility.plants:
        curve = capex_curve(plant)
        approx = cx.build_breakpoints_range_uniform(curve, m_segments)
        c0 = plant.initial_capacity_base
        cmax = plant.max_capacity_base
        span = approx.costs[-1] if approx.segments else 0.0
        y = model.add_variable(f"y__{_san(plant.id)}", 0.0, cmax - c0)
        c = model.add_variable(f"c__{_san(plant.id)}", c0, cmax)
        b = model.add_variable(f"b__{_san(plant.id)}", 0.0, float(span))
        eta = tuple(
            model.add_variable(f"eta__{_san(plant.id)}__p{p}", 0.0, 1.0, binary=True)
            for p in range(1, approx.segments + 1)
        )
        w = tuple(
            model.add_variable(f"w__{_san(plant.id)}__p{p}", 0.0, 1.0)
            for p in range(1, approx.segments + 1)
        )
        blocks.append(
            PlantBlock(
                plant_id=plant.id, y=y, c=c, b=b, eta=eta, w=w,
                breakpoints=approx.breakpoints,
                existing_capacity=c0, max_capacity=cmax,
            )
        )
    index.plants = tuple(blocks)

    z = model.add_variable("z", -INF, INF)
    index.tail_threshold = z

    # Level bounds reuse the largest buildable capacity per plant.
    level_ub: dict[str, float] = {}
    for proc in facility.processes:
        plant = plants_by_id[proc.plant_id]
        level_ub[proc.id] = _level_bound(proc, plant)

    sale_ub: dict[tuple[str, int], float] = {}
    q_bounds: list[tuple[float, float]] = []
    for wdx in range(n_scen):
        sl = slice_scenario(facility, scenarios, wdx)
        qhi = 0.0
        qlo = 0.0
        for proc in facility.processes:
            charge = proc.opex_per_ref_unit * proc.inputs[proc.reference_product]
            term = charge * level_ub[proc.id]
            qhi += max(term, 0.0)
            qlo += min(term, 0.0)
        for prod in facility.products:
            supply = sl.availabilities[prod.id] + sum(
                facility.processes_by_id[j].outputs[prod.id] * level_ub[j]
                for j in idx.producers[prod.id]
            )
            ub = supply if prod.sellable else 0.0
            sale_ub[(prod.id, wdx)] = max(0.0, ub)
            if prod.sellable:
                qlo -= sl.prices[prod.id] * sale_ub[(prod.id, wdx)]
        q_bounds.append((qlo, qhi))

    span_q = max(0.0, max(hi for _, hi in q_bounds) - min(lo for lo, _ in q_bounds))

    for wdx in range(n_scen):
        sl = slice_scenario(facility, scenarios, wdx)
        for prod in facility.products:
            if prod.sellable and not math.isfinite(sl.prices[prod.id]):
                raise ValueError(f"missing price for sellable product '{prod.id}'")
        for proc in facility.processes:
            index.levels[(proc.id, wdx)] = model.add_variable(
                f"l__{_san(proc.id)}__s{wdx}", 0.0, level_ub[proc.id]
            )
        for proc in facility.processes:
            for pid, theta in proc.inputs.items():
                index.flows_in[(proc.id, pid, wdx)] = model.add_variable(
                    f"fin__{_san(proc.id)}__{_san(pid)}__s{wdx}",
                    0.0, theta * level_ub[proc.id],
                )
            for pid, theta in proc.outputs.items():
                index.flows_out[(proc.id, pid, wdx)] = model.add_variable(
                    f"fout__{_san(proc.id)}__{_san(pid)}__s{wdx}",
                    0.0, theta * level_ub[proc.id],
                )
        for prod in facility.products:
            index.sales[(prod.id, wdx)] = model.add_variable(
                f"v__{_san(prod.id)}__s{wdx}", 0.0, sale_ub[(prod.id, wdx)]
            )
        qlo, qhi = q_bounds[wdx]
        index.scenario_cost[wdx] = model.add_variable(
            f"q__s{wdx}", min(qlo, 0.0), max(qhi, 0.0)
        )
        index.shortfall[wdx] = model.add_variable(f"delta__s{wdx}", 0.0, span_q)

    # First-stage rows.
    for block in blocks:
        model.add_constraint(
            f"link__{_san(block.plant_id)}",
            [(block.c, 1.0), (block.y, -1.0)],
            EQUAL,
            block.existing_capacity,
        )
        if not block.eta:
            continue
        cs = [p[0] for p in block.breakpoints]
        bs = [p[1] for p in block.breakpoints]
        c_coeffs: list[tuple[int, float]] = [(block.c, 1.0)]
        b_coeffs: list[tuple[int, float]] = [(block.b, 1.0)]
        for p in range(block.segments):
            c_coeffs.append((block.w[p], -(cs[p] - cs[p + 1])))
            c_coeffs.append((block.eta[p], -cs[p + 1]))
            b_coeffs.append((block.w[p], -(bs[p] - bs[p + 1])))
            b_coeffs.append((block.eta[p], -bs[p + 1]))
        model.add_constraint(f"pw_c__{_san(block.plant_id)}", c_coeffs, EQUAL, 0.0)
        model.add_constraint(f"pw_b__{_san(block.plant_id)}", b_coeffs, EQUAL, 0.0)
        for p in range(block.segments):
            model.add_constraint(
                f"wle__{_san(block.plant_id)}__p{p + 1}",
                [(block.w[p], 1.0), (block.eta[p], -1.0)],
                LESS,
                0.0,
            )
        model.add_constraint(
            f"pick__{_san(block.plant_id)}",
            [(e, 1.0) for e in block.eta],
            LESS,
            1.0,
        )

    # Second-stage rows, scenario-major.
    block_by_plant = {b.plant_id: b for b in blocks}
    for wdx in range(n_scen):
        sl = slice_scenario(facility, scenarios, wdx)
        for proc in facility.processes:
            lvar = index.levels[(proc.id, wdx)]
            for pid, theta in proc.inputs.items():
                model.add_constraint(
                    f"fin__{_san(proc.id)}__{_san(pid)}__s{wdx}",
                    [(index.flows_in[(proc.id, pid, wdx)], 1.0), (lvar, -theta)],
                    EQUAL,
                    0.0,
                )
            for pid, theta in proc.outputs.items():
                model.add_constraint(
                    f"fout__{_san(proc.id)}__{_san(pid)}__s{wdx}",
                    [(index.flows_out[(proc.id, pid, wdx)], 1.0), (lvar, -theta)],
                    EQUAL,
                    0.0,
                )
        for prod in facility.products:
            coeffs = [(index.sales[(prod.id, wdx)], 1.0)]
            for j in idx.consumers[prod.id]:
                coeffs.append((index.flows_in[(j, prod.id, wdx)], 1.0))
            for j in idx.producers[prod.id]:
                coeffs.append((index.flows_out[(j, prod.id, wdx)], -1.0))
            model.add_constraint(
                f"bal__{_san(prod.id)}__s{wdx}", coeffs, LESS,
                sl.availabilities[prod.id],
            )
        for plant in facility.plants:
            procs = idx.by_plant[plant.id]
            if not procs:
                continue
            coeffs = [
                (index.flows_in[(j, facility.processes_by_id[j].reference_product, wdx)], 1.0)
                for j in procs
            ]
            coeffs.append((block_by_plant[plant.id].c, -1.0))
            model.add_constraint(f"cap__{_san(plant.id)}__s{wdx}", coeffs, LESS, 0.0)
        q_coeffs: list[tuple[int, float]] = [(index.scenario_cost[wdx], 1.0)]
        for proc in facility.processes:
            q_coeffs.append(
                (index.flows_in[(proc.id, proc.reference_product, wdx)],
                 -proc.opex_per_ref_unit)
            )
        for prod in facility.products:
            if prod.sellable and sl.prices[prod.id] != 0.0:
                q_coeffs.append((index.sales[(prod.id, wdx)], sl.prices[prod.id]))
        model.add_constraint(f"qdef__s{wdx}", q_coeffs, EQUAL, 0.0)
        model.add_constraint(
            f"tail__s{wdx}",
            [(z, 1.0), (index.shortfall[wdx], 1.0), (index.scenario_cost[wdx], -1.0)],
            GREATER,
            0.0,
        )

    # Objective: annualized capex + risk-weighted operating cost.
    for block in blocks:
        model.set_objective_coeff(block.b, phi[block.plant_id])
    model.set_objective_coeff(z, risk.lam)
    tail_scale = risk.lam / (1.0 - risk.alpha)
    for wdx in range(n_scen):
        model.set_objective_coeff(index.shortfall[wdx], tail_scale * probs[wdx])
        model.set_objective_coeff(index.scenario_cost[wdx], (1.0 - risk.lam) * probs[wdx])

    return model, index
