"""Case file loading/saving, price-series ingestion, overrides, and reports.

A case file is a single UTF-8 JSON document with top-level keys
{products, processes, plants, scenarios, risk, piecewise_segments, solver}.
Scenario price series may be inlined or referenced as a CSV path relative to
the case file. Unknown keys are rejected at every level.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .model import Facility, Plant, Process, Product, RiskConfig, validate_facility
from .results import PlanSolution

DEFAULT_SCALE_EXPONENT = 0.7
DEFAULT_SEGMENTS = 8

ALLOWED_SOLVER_KEYS = {
    "feasibility_tolerance",
    "optimality_tolerance",
    "max_enumeration",
    "parallelism",
    "lp_kernel",
}


class CaseLoadError(ValueError):
    """Malformed case file: bad JSON, unknown keys, or unreadable series."""


class CaseValidationError(ValueError):
    """Structurally inconsistent case (carries the validation report)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OverrideError(ValueError):
    """Override targets an unknown id or an out-of-range value."""


@dataclass(frozen=True)
class ScenarioSet:
    """Per-scenario prices and availabilities with a probability vector.

    Products absent from the maps take their Product constants (base price,
    initial availability) in every scenario.
    """

    count: int
    probabilities: tuple[float, ...]
    prices: Mapping[str, tuple[float, ...]]
    availabilities: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        object.__setattr__(self, "probabilities", tuple(self.probabilities))
        object.__setattr__(
            self, "prices", _freeze_series(self.prices, self.count, "price")
        )
        object.__setattr__(
            self,
            "availabilities",
            _freeze_series(self.availabilities, self.count, "availability"),
        )
        if self.count < 1:
            raise ValueError("scenario set needs at least one scenario")
        if len(self.probabilities) != self.count:
            raise ValueError("probability vector length differs from scenario count")
        if any(p < 0 for p in self.probabilities):
            raise ValueError("probabilities must be non-negative")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    def has_price_series(self, product_id: str) -> bool:
        return product_id in self.prices

    def price(self, product: Product, scenario: int) -> float:
        series = self.prices.get(product.id)
        return series[scenario] if series is not None else product.base_price

    def availability(self, product: Product, scenario: int) -> float:
        series = self.availabilities.get(product.id)
        return series[scenario] if series is not None else product.initial_availability

    def mean_price(self, product: Product) -> float:
        return math.fsum(
            self.probabilities[w] * self.price(product, w) for w in range(self.count)
        )

    def mean_scenario(self, facility: Facility) -> "ScenarioSet":
        """Collapse to one deterministic scenario at probability-weighted means."""
        prices = {
            pid: (self.mean_price(facility.products_by_id[pid]),)
            for pid in self.prices
            if pid in facility.products_by_id
        }
        avails = {
            pid: (
                math.fsum(
                    self.probabilities[w] * series[w] for w in range(self.count)
                ),
            )
            for pid, series in self.availabilities.items()
        }
        return ScenarioSet(1, (1.0,), prices, avails)

    def reduce(self, n: int) -> "ScenarioSet":
        """Keep the first ``n`` scenarios, renormalizing probabilities."""
        if not 1 <= n <= self.count:
            raise ValueError(f"cannot reduce {self.count} scenarios to {n}")
        weight = math.fsum(self.probabilities[:n])
        if weight <= 0:
            raise ValueError("leading scenarios carry zero probability")
        probs = [p / weight for p in self.probabilities[:n]]
        probs[-1] = 1.0 - math.fsum(probs[:-1])
        return ScenarioSet(
            n,
            tuple(probs),
            {pid: s[:n] for pid, s in self.prices.items()},
            {pid: s[:n] for pid, s in self.availabilities.items()},
        )


def _freeze_series(
    series: Mapping[str, Sequence[float]], count: int, kind: str
) -> Mapping[str, tuple[float, ...]]:
    out = {}
    for pid, values in series.items():
        vec = tuple(float(v) for v in values)
        if len(vec) != count:
            raise ValueError(
                f"{kind} series for '{pid}' has {len(vec)} entries, expected {count}"
            )
        if any(v < 0 for v in vec):
            raise ValueError(f"{kind} series for '{pid}' has negative entries")
        out[pid] = vec
    return MappingProxyType(out)


def equal_probabilities(count: int) -> tuple[float, ...]:
    """Equal weights 1/count with the rounding residue folded into the last."""
    base = 1.0 / count
    probs = [base] * count
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    return tuple(probs)


def constant_scenarios() -> ScenarioSet:
    """One deterministic scenario; every product keeps its constants."""
    return ScenarioSet(1, (1.0,), {}, {})


@dataclass(frozen=True)
class Overrides:
    """Study-level adjustments applied to a copy of a case.

    Fixed capacities are expressed in the plant's capacity unit and pin
    initial = max = value, so the plan carries no expansion and no new
    capital charge for that plant. Output scales multiply process output
    proportions.
    """

    fixed_capacities: Mapping[str, float] = MappingProxyType({})
    price_overrides: Mapping[str, float] = MappingProxyType({})
    process_output_scale: Mapping[tuple[str, str], float] = MappingProxyType({})


@dataclass(frozen=True)
class CaseFile:
    facility: Facility
    scenarios: ScenarioSet
    risk: RiskConfig
    piecewise_segments: int
    solver_options: Mapping[str, object]

    def __post_init__(self):
        object.__setattr__(
            self, "solver_options", MappingProxyType(dict(self.solver_options))
        )
        if self.piecewise_segments < 1:
            raise ValueError("piecewise_segments must be at least 1")


def load_case(path: str | Path) -> CaseFile:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CaseLoadError(f"cannot parse case file {path}: {exc}") from exc
    return parse_case(raw, base_dir=path.parent)


def parse_case(raw: object, base_dir: Path | None = None) -> CaseFile:
    if not isinstance(raw, dict):
        raise CaseLoadError("case document must be a JSON object")
    _reject_unknown(
        raw,
        {"products", "processes", "plants", "scenarios", "risk",
         "piecewise_segments", "solver"},
        "case",
    )
    products = tuple(_parse_product(p) for p in _req_list(raw, "products"))
    processes = tuple(_parse_process(p) for p in _req_list(raw, "processes"))
    plants = tuple(_parse_plant(p) for p in _req_list(raw, "plants"))
    facility = Facility(products, processes, plants)

    scenarios = _parse_scenarios(raw.get("scenarios"), base_dir)

    risk_raw = raw.get("risk", {})
    if not isinstance(risk_raw, dict):
        raise CaseLoadError("'risk' must be an object")
    _reject_unknown(risk_raw, {"lambda", "alpha"}, "risk")
    try:
        risk = RiskConfig(
            lam=float(risk_raw.get("lambda", 0.0)),
            alpha=float(risk_raw.get("alpha", 0.9)),
        )
    except ValueError as exc:
        raise CaseValidationError(str(exc)) from exc

    segments = raw.get("piecewise_segments", DEFAULT_SEGMENTS)
    if not isinstance(segments, int) or segments < 1:
        raise CaseLoadError("'piecewise_segments' must be a positive integer")

    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise CaseLoadError("'solver' must be an object")
    _reject_unknown(solver, ALLOWED_SOLVER_KEYS, "solver")

    report = validate_facility(facility, scenarios)
    if not report.ok:
        raise CaseValidationError(
            "case failed validation: " + "; ".join(report.errors), report=report
        )
    if not products:
        raise CaseValidationError("case has an empty products list")
    for pid in list(scenarios.prices) + list(scenarios.availabilities):
        if pid not in facility.products_by_id:
            raise CaseValidationError(f"scenario series references unknown product '{pid}'")

    return CaseFile(facility, scenarios, risk, segments, solver)


def save_case(case: CaseFile, path: str | Path) -> None:
    """Write a case back to JSON with scenario series inlined."""
    doc = {
        "products": [
            {
                "id": p.id, "name": p.name, "unit": p.unit, "sellable": p.sellable,
                "base_price": p.base_price,
                "initial_availability": p.initial_availability,
            }
            for p in case.facility.products
        ],
        "processes": [
            {
                "id": p.id, "plant_id": p.plant_id,
                "opex_per_ref_unit": p.opex_per_ref_unit,
                "reference_product": p.reference_product,
                "inputs": dict(p.inputs), "outputs": dict(p.outputs),
            }
            for p in case.facility.processes
        ],
        "plants": [
            {
                "id": p.id, "name": p.name, "capacity_unit": p.capacity_unit,
                "initial_capacity": p.initial_capacity,
                "capacity_unit_scale": p.capacity_unit_scale,
                "reference_capex_mm": p.reference_capex_mm,
                "reference_capacity": p.reference_capacity,
                "scale_exponent": p.scale_exponent,
                "lifetime_years": p.lifetime_years,
                "discount_rate": p.discount_rate,
                "max_capacity": p.max_capacity,
            }
            for p in case.facility.plants
        ],
        "scenarios": {
            "count": case.scenarios.count,
            "probabilities": list(case.scenarios.probabilities),
            "prices": {k: list(v) for k, v in sorted(case.scenarios.prices.items())},
            "availabilities": {
                k: list(v) for k, v in sorted(case.scenarios.availabilities.items())
            },
        },
        "risk": {"lambda": case.risk.lam, "alpha": case.risk.alpha},
        "piecewise_segments": case.piecewise_segments,
        "solver": dict(case.solver_options),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _req_list(raw: dict, key: str) -> list:
    value = raw.get(key)
    if not isinstance(value, list):
        raise CaseLoadError(f"'{key}' must be a list")
    return value


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise CaseLoadError(f"unknown keys in {where}: {sorted(unknown)}")


def _parse_product(raw: object) -> Product:
    if not isinstance(raw, dict):
        raise CaseLoadError("product entries must be objects")
    _reject_unknown(
        raw,
        {"id", "name", "unit", "sellable", "base_price", "initial_availability"},
        "product",
    )
    try:
        return Product(
            id=str(raw["id"]),
            name=str(raw.get("name", raw["id"])),
            unit=str(raw.get("unit", "")),
            sellable=bool(raw.get("sellable", False)),
            base_price=float(raw.get("base_price", 0.0)),
            initial_availability=float(raw.get("initial_availability", 0.0)),
        )
    except KeyError as exc:
        raise CaseLoadError(f"product missing required key {exc}") from exc


def _parse_process(raw: object) -> Process:
    if not isinstance(raw, dict):
        raise CaseLoadError("process entries must be objects")
    _reject_unknown(
        raw,
        {"id", "plant_id", "opex_per_ref_unit", "reference_product",
         "inputs", "outputs"},
        "process",
    )
    try:
        inputs = raw["inputs"]
        outputs = raw.get("outputs", {})
        if not isinstance(inputs, dict) or not isinstance(outputs, dict):
            raise CaseLoadError("process inputs/outputs must be objects")
        return Process(
            id=str(raw["id"]),
            plant_id=str(raw["plant_id"]),
            opex_per_ref_unit=float(raw["opex_per_ref_unit"]),
            reference_product=str(raw["reference_product"]),
            inputs={str(k): float(v) for k, v in inputs.items()},
            outputs={str(k): float(v) for k, v in outputs.items()},
        )
    except KeyError as exc:
        raise CaseLoadError(f"process missing required key {exc}") from exc


def _parse_plant(raw: object) -> Plant:
    if not isinstance(raw, dict):
        raise CaseLoadError("plant entries must be objects")
    _reject_unknown(
        raw,
        {"id", "name", "capacity_unit", "initial_capacity", "capacity_unit_scale",
         "reference_capex_mm", "reference_capacity", "scale_exponent",
         "lifetime_years", "discount_rate", "max_capacity"},
        "plant",
    )
    try:
        return Plant(
            id=str(raw["id"]),
            name=str(raw.get("name", raw["id"])),
            capacity_unit=str(raw.get("capacity_unit", "")),
            initial_capacity=float(raw["initial_capacity"]),
            capacity_unit_scale=float(raw.get("capacity_unit_scale", 1.0)),
            reference_capex_mm=float(raw["reference_capex_mm"]),
            reference_capacity=float(raw["reference_capacity"]),
            scale_exponent=float(raw.get("scale_exponent", DEFAULT_SCALE_EXPONENT)),
            lifetime_years=int(raw["lifetime_years"]),
            discount_rate=float(raw["discount_rate"]),
            max_capacity=float(raw["max_capacity"]),
        )
    except KeyError as exc:
        raise CaseLoadError(f"plant missing required key {exc}") from exc


def _parse_scenarios(raw: object, base_dir: Path | None) -> ScenarioSet:
    if raw is None:
        return constant_scenarios()
    if not isinstance(raw, dict):
        raise CaseLoadError("'scenarios' must be an object")
    if "prices_csv" in raw:
        _reject_unknown(raw, {"prices_csv", "availabilities"}, "scenarios")
        csv_path = Path(raw["prices_csv"])
        if base_dir is not None and not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        try:
            text = csv_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise CaseLoadError(f"cannot read price CSV {csv_path}: {exc}") from exc
        base = ingest_price_csv(io.StringIO(text))
        avail_raw = raw.get("availabilities", {})
        if not isinstance(avail_raw, dict):
            raise CaseLoadError("'availabilities' must be an object")
        avails = {
            str(pid): tuple(float(v) for v in values)
            for pid, values in avail_raw.items()
        }
        return ScenarioSet(base.count, base.probabilities, base.prices, avails)

    _reject_unknown(raw, {"count", "probabilities", "prices", "availabilities"},
                    "scenarios")
    prices = raw.get("prices", {})
    avails = raw.get("availabilities", {})
    if not isinstance(prices, dict) or not isinstance(avails, dict):
        raise CaseLoadError("scenario prices/availabilities must be objects")
    lengths = [len(v) for v in prices.values()] + [len(v) for v in avails.values()]
    count = raw.get("count", lengths[0] if lengths else 1)
    if not isinstance(count, int) or count < 1:
        raise CaseLoadError("scenario 'count' must be a positive integer")
    probs = raw.get("probabilities")
    if probs is None:
        probs = equal_probabilities(count)
    try:
        return ScenarioSet(
            count,
            tuple(float(p) for p in probs),
            {str(k): tuple(float(x) for x in v) for k, v in prices.items()},
            {str(k): tuple(float(x) for x in v) for k, v in avails.items()},
        )
    except ValueError as exc:
        raise CaseLoadError(f"bad scenario data: {exc}") from exc


def ingest_price_csv(source, product_ids: Sequence[str] | None = None) -> ScenarioSet:
    """Turn a historical price table into equally weighted joint scenarios.

    One CSV row is one joint scenario across all listed products, which
    preserves the observed co-movement of prices. The header row names the
    product ids; ``product_ids`` optionally restricts and validates the
    columns ingested.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    else:
        rows = list(csv.reader(source))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise CaseLoadError("price CSV is empty")
    header = [cell.strip() for cell in rows[0]]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise CaseLoadError(f"duplicate product columns in price CSV: {dupes}")
    if product_ids is not None:
        missing = [p for p in product_ids if p not in header]
        if missing:
            raise CaseLoadError(f"price CSV lacks columns for {missing}")
        keep = [header.index(p) for p in product_ids]
        names = list(product_ids)
    else:
        keep = list(range(len(header)))
        names = header
    body = rows[1:]
    if not body:
        raise CaseLoadError("price CSV has a header but no observations")
    series: dict[str, list[float]] = {name: [] for name in names}
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CaseLoadError(f"price CSV row {lineno} has {len(row)} cells, "
                                f"expected {len(header)}")
        for name, col in zip(names, keep):
            cell = row[col].strip()
            try:
                value = float(cell)
            except ValueError:
                raise CaseLoadError(
                    f"non-numeric cell '{cell}' in price CSV row {lineno}, "
                    f"column '{name}'"
                ) from None
            series[name].append(value)
    count = len(body)
    return ScenarioSet(
        count,
        equal_probabilities(count),
        {name: tuple(values) for name, values in series.items()},
        {},
    )


def apply_overrides(case: CaseFile, overrides: Overrides) -> CaseFile:
    """Return a new case with overrides applied; the input case is unchanged."""
    plants_by_id = case.facility.plants_by_id
    processes_by_id = case.facility.processes_by_id
    products_by_id = case.facility.products_by_id

    for pid, value in overrides.fixed_capacities.items():
        plant = plants_by_id.get(pid)
        if plant is None:
            raise OverrideError(f"unknown plant '{pid}' in fixed capacities")
        if not plant.initial_capacity <= value <= plant.max_capacity:
            raise OverrideError(
                f"fixed capacity {value} for plant '{pid}' outside "
                f"[{plant.initial_capacity}, {plant.max_capacity}]"
            )
    for pid in overrides.price_overrides:
        if pid not in products_by_id:
            raise OverrideError(f"unknown product '{pid}' in price overrides")
        if overrides.price_overrides[pid] < 0:
            raise OverrideError(f"negative price override for '{pid}'")
    for (jid, pid), factor in overrides.process_output_scale.items():
        proc = processes_by_id.get(jid)
        if proc is None:
            raise OverrideError(f"unknown process '{jid}' in output scales")
        if pid not in proc.outputs:
            raise OverrideError(f"process '{jid}' does not output '{pid}'")
        if factor <= 0:
            raise OverrideError(f"output scale for ('{jid}', '{pid}') must be positive")

    plants = tuple(
        replace(
            p,
            initial_capacity=overrides.fixed_capacities[p.id],
            max_capacity=overrides.fixed_capacities[p.id],
        )
        if p.id in overrides.fixed_capacities
        else p
        for p in case.facility.plants
    )
    products = tuple(
        replace(p, base_price=overrides.price_overrides[p.id])
        if p.id in overrides.price_overrides
        else p
        for p in case.facility.products
    )
    processes = []
    for proc in case.facility.processes:
        scales = {
            pid: f for (jid, pid), f in overrides.process_output_scale.items()
            if jid == proc.id
        }
        if scales:
            outputs = {
                pid: theta * scales.get(pid, 1.0) for pid, theta in proc.outputs.items()
            }
            proc = replace(proc, outputs=outputs)
        processes.append(proc)

    # A constant price override supersedes any per-scenario series.
    prices = {
        pid: series
        for pid, series in case.scenarios.prices.items()
        if pid not in overrides.price_overrides
    }
    scenarios = ScenarioSet(
        case.scenarios.count,
        case.scenarios.probabilities,
        prices,
        case.scenarios.availabilities,
    )
    facility = Facility(products, tuple(processes), plants)
    return CaseFile(
        facility, scenarios, case.risk, case.piecewise_segments, case.solver_options
    )


def render_report(solution: PlanSolution) -> tuple[dict, str]:
    """Build the machine-readable report dict and its text rendering.

    Both carry identical numbers; money is reported in MM$ while the engine
    computes in $. Output depends only on the solution, so repeated renders
    are byte-identical.
    """
    mm = 1e-6
    doc = {
        "status": solution.status,
        "objective": {
            "total": solution.objective * mm,
            "capex_annuity": solution.capex_annuity * mm,
            "expected_cost": solution.expected_cost * mm,
            "cvar_cost": solution.cvar_cost * mm,
            "expected_total_cost": solution.expected_total_cost * mm,
            "cvar_total_cost": solution.cvar_total_cost * mm,
            "lambda": solution.lam,
            "alpha": solution.alpha,
            "currency": "MM$",
        },
        "plan": [
            {
                "plant": p.plant_id,
                "name": p.name,
                "capacity_unit": p.capacity_unit,
                "capacity": p.capacity_units,
                "expansion": p.expansion_units,
                "capital_cost_mm": p.capital_cost * mm,
                "annualized_capital_cost_mm": p.annualized_capital_cost * mm,
                "segment": p.segment,
                "existing_capital_cost_mm": p.existing_capital_cost * mm,
            }
            for p in solution.plants
        ],
        "risk": {
            "alpha": solution.dispatch.risk.alpha,
            "mean_cost_mm": solution.dispatch.risk.mean_cost * mm,
            "value_at_risk_mm": solution.dispatch.risk.value_at_risk * mm,
            "cvar_mm": solution.dispatch.risk.cvar * mm,
            "min_net_revenue_mm": solution.dispatch.risk.min_net_revenue * mm,
            "max_net_revenue_mm": solution.dispatch.risk.max_net_revenue * mm,
            "loss_probability": solution.dispatch.risk.loss_probability,
            "annualized_capex_mm": solution.dispatch.risk.annualized_capex * mm,
        },
        "scenario_costs_mm": [q * mm for q in solution.dispatch.scenario_costs],
        "processes": [
            {
                "process": s.process_id,
                "mean_level": s.mean_level,
                "mean_reference_input": s.mean_reference_input,
            }
            for s in solution.dispatch.process_summaries
        ],
        "products": [
            {
                "product": s.product_id,
                "unit": s.unit,
                "mean_available": s.mean_available,
                "mean_produced": s.mean_produced,
                "mean_consumed": s.mean_consumed,
                "mean_sold": s.mean_sold,
                "mean_disposed": s.mean_disposed,
            }
            for s in solution.dispatch.product_summaries
        ],
    }
    return doc, _render_text(doc)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _render_text(doc: dict) -> str:
    lines: list[str] = []
    obj = doc["objective"]
    lines.append("INVESTMENT PLAN REPORT")
    lines.append("======================")
    lines.append(f"status: {doc['status']}")
    lines.append("")
    lines.append("Objective decomposition (MM$, minimize):")
    lines.append(f"  total                 {_fmt(obj['total'])}")
    lines.append(f"  capex annuity         {_fmt(obj['capex_annuity'])}")
    lines.append(f"  expected cost E[Q]    {_fmt(obj['expected_cost'])}")
    lines.append(f"  CVaR[Q] (alpha={_fmt(obj['alpha'])}) {_fmt(obj['cvar_cost'])}")
    lines.append(f"  lambda                {_fmt(obj['lambda'])}")
    lines.append("")
    lines.append("Plants:")
    for p in doc["plan"]:
        lines.append(
            f"  {p['plant']}: capacity {_fmt(p['capacity'])} {p['capacity_unit']}"
            f", expansion {_fmt(p['expansion'])}"
            f", capital cost {_fmt(p['capital_cost_mm'])} MM$"
            f", annualized {_fmt(p['annualized_capital_cost_mm'])} MM$"
            + (f", segment {p['segment']}" if p["segment"] is not None else "")
        )
        if p["existing_capital_cost_mm"]:
            lines.append(
                f"    existing capacity capital cost "
                f"{_fmt(p['existing_capital_cost_mm'])} MM$ (not charged)"
            )
    lines.append("")
    risk = doc["risk"]
    lines.append("Risk metrics over scenarios:")
    lines.append(f"  mean net cost         {_fmt(risk['mean_cost_mm'])} MM$")
    lines.append(f"  VaR                   {_fmt(risk['value_at_risk_mm'])} MM$")
    lines.append(f"  CVaR                  {_fmt(risk['cvar_mm'])} MM$")
    lines.append(f"  net revenue range     [{_fmt(risk['min_net_revenue_mm'])}, "
                 f"{_fmt(risk['max_net_revenue_mm'])}] MM$")
    lines.append(f"  loss probability      {_fmt(risk['loss_probability'])}")
    lines.append(f"  annualized capex      {_fmt(risk['annualized_capex_mm'])} MM$")
    lines.append("")
    lines.append("Mean process levels:")
    for s in doc["processes"]:
        lines.append(
            f"  {s['process']}: level {_fmt(s['mean_level'])}"
            f", reference input {_fmt(s['mean_reference_input'])}"
        )
    lines.append("")
    lines.append("Mean product balance:")
    for s in doc["products"]:
        lines.append(
            f"  {s['product']} [{s['unit']}]: available {_fmt(s['mean_available'])}"
            f", produced {_fmt(s['mean_produced'])}"
            f", consumed {_fmt(s['mean_consumed'])}"
            f", sold {_fmt(s['mean_sold'])}"
            f", disposed {_fmt(s['mean_disposed'])}"
        )
    lines.append("")
    return "\n".join(lines)


def write_report(solution: PlanSolution, path: str | Path) -> dict:
    """Write ``<path>.json`` and ``<path>.txt``; returns the report dict."""
    doc, text = render_report(solution)
    stem = Path(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    stem.with_suffix(".txt").write_text(text, encoding="utf-8")
    return doc
