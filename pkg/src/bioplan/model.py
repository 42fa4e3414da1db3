"""Production-chain data model: products, processes, plants, and validation.

A facility is a directed conversion network. Processes consume and produce
products in fixed proportions per unit of "production level"; every process
belongs to exactly one plant, whose capacity is measured in units of the
process's designated reference input product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping


def _frozen_map(d: Mapping[str, float]) -> Mapping[str, float]:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class Product:
    id: str
    name: str = ""
    unit: str = ""
    sellable: bool = False
    base_price: float = 0.0
    initial_availability: float = 0.0


@dataclass(frozen=True)
class Process:
    """A conversion step with fixed input/output proportions.

    ``inputs`` and ``outputs`` map product ids to quantities consumed or
    produced per unit of production level. ``reference_product`` must be one
    of the inputs; it is the basis for both the plant capacity charge and the
    operating cost ``opex_per_ref_unit``.
    """

    id: str
    plant_id: str
    opex_per_ref_unit: float
    reference_product: str
    inputs: Mapping[str, float]
    outputs: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "inputs", _frozen_map(self.inputs))
        object.__setattr__(self, "outputs", _frozen_map(self.outputs))


@dataclass(frozen=True)
class Plant:
    """A production unit hosting one or more processes.

    Capacities are stored in the case file's capacity unit;
    ``capacity_unit_scale`` converts them to base product units (e.g. a
    "kt" capacity uses scale 1e3 for a product measured in tonnes).
    Capital costs are stored in MM$; the engine computes in $.
    """

    id: str
    name: str = ""
    capacity_unit: str = ""
    initial_capacity: float = 0.0
    capacity_unit_scale: float = 1.0
    reference_capex_mm: float = 0.0
    reference_capacity: float = 1.0
    scale_exponent: float = 0.7
    lifetime_years: int = 20
    discount_rate: float = 0.10
    max_capacity: float = 0.0

    @property
    def initial_capacity_base(self) -> float:
        return self.initial_capacity * self.capacity_unit_scale

    @property
    def max_capacity_base(self) -> float:
        return self.max_capacity * self.capacity_unit_scale

    @property
    def reference_capacity_base(self) -> float:
        return self.reference_capacity * self.capacity_unit_scale

    @property
    def reference_capex(self) -> float:
        """Reference CAPEX in $ (engine units)."""
        return self.reference_capex_mm * 1e6


@dataclass(frozen=True)
class RiskConfig:
    """Risk-aversion weight and CVaR tail level for the planning objective."""

    lam: float = 0.0
    alpha: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"risk weight must be in [0, 1], got {self.lam}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"CVaR level must be in [0, 1), got {self.alpha}")


@dataclass(frozen=True)
class FacilityIndex:
    """Derived cross-index tables for a facility.

    ``by_plant`` partitions process ids by plant; ``consumers``/``producers``
    map each product id to the processes that consume/produce it.
    """

    by_plant: Mapping[str, tuple[str, ...]]
    consumers: Mapping[str, tuple[str, ...]]
    producers: Mapping[str, tuple[str, ...]]


@dataclass(frozen=True)
class Facility:
    products: tuple[Product, ...]
    processes: tuple[Process, ...]
    plants: tuple[Plant, ...]

    def __post_init__(self):
        object.__setattr__(self, "products", tuple(self.products))
        object.__setattr__(self, "processes", tuple(self.processes))
        object.__setattr__(self, "plants", tuple(self.plants))

    @property
    def products_by_id(self) -> dict[str, Product]:
        return {p.id: p for p in self.products}

    @property
    def processes_by_id(self) -> dict[str, Process]:
        return {p.id: p for p in self.processes}

    @property
    def plants_by_id(self) -> dict[str, Plant]:
        return {p.id: p for p in self.plants}


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def index_processes(facility: Facility) -> FacilityIndex:
    """Build the plant/consumer/producer cross-index tables.

    Membership follows the process input/output maps exactly: process j is a
    consumer of product i iff i is a key of j.inputs, and a producer iff i is
    a key of j.outputs.
    """
    by_plant: dict[str, list[str]] = {k.id: [] for k in facility.plants}
    consumers: dict[str, list[str]] = {p.id: [] for p in facility.products}
    producers: dict[str, list[str]] = {p.id: [] for p in facility.products}
    for proc in facility.processes:
        if proc.plant_id in by_plant:
            by_plant[proc.plant_id].append(proc.id)
        for pid in proc.inputs:
            if pid in consumers:
                consumers[pid].append(proc.id)
        for pid in proc.outputs:
            if pid in producers:
                producers[pid].append(proc.id)
    return FacilityIndex(
        by_plant=_freeze_lists(by_plant),
        consumers=_freeze_lists(consumers),
        producers=_freeze_lists(producers),
    )


def _freeze_lists(d: dict[str, list[str]]) -> Mapping[str, tuple[str, ...]]:
    return MappingProxyType({k: tuple(v) for k, v in d.items()})


def validate_facility(facility: Facility, scenarios=None) -> ValidationReport:
    """Check structural consistency; findings are data, not exceptions.

    Returns zero errors iff all type invariants hold. Warnings flag suspect
    but legal data: plants whose processes use reference products with
    different units (capacity comparability) and sellable products priced at
    zero in every scenario.
    """
    errors: list[str] = []
    warnings: list[str] = []

    product_ids = _check_unique((p.id for p in facility.products), "product", errors)
    _check_unique((p.id for p in facility.processes), "process", errors)
    plant_ids = _check_unique((p.id for p in facility.plants), "plant", errors)

    for prod in facility.products:
        if prod.initial_availability < 0:
            errors.append(f"product '{prod.id}': negative initial availability")
        if prod.base_price < 0:
            errors.append(f"product '{prod.id}': negative base price")

    for proc in facility.processes:
        if proc.plant_id not in plant_ids:
            errors.append(f"process '{proc.id}': unknown plant '{proc.plant_id}'")
        for pid in list(proc.inputs) + list(proc.outputs):
            if pid not in product_ids:
                errors.append(f"process '{proc.id}': unknown product '{pid}'")
        if proc.reference_product not in proc.inputs:
            errors.append(
                f"process '{proc.id}': reference product '{proc.reference_product}' "
                "must be an input"
            )
        overlap = set(proc.inputs) & set(proc.outputs)
        if overlap:
            errors.append(
                f"process '{proc.id}': products {sorted(overlap)} appear as both "
                "input and output"
            )
        for pid, theta in list(proc.inputs.items()) + list(proc.outputs.items()):
            if theta <= 0:
                errors.append(
                    f"process '{proc.id}': proportion for '{pid}' must be positive"
                )
        if not proc.inputs:
            errors.append(f"process '{proc.id}': no inputs")

    for plant in facility.plants:
        if plant.reference_capacity <= 0:
            errors.append(f"plant '{plant.id}': reference capacity must be positive")
        if plant.reference_capex_mm < 0:
            errors.append(f"plant '{plant.id}': negative reference CAPEX")
        if not 0.0 < plant.scale_exponent <= 1.0:
            errors.append(f"plant '{plant.id}': scale exponent must be in (0, 1]")
        if plant.initial_capacity < 0:
            errors.append(f"plant '{plant.id}': negative initial capacity")
        if plant.max_capacity < plant.initial_capacity:
            errors.append(f"plant '{plant.id}': max capacity below initial capacity")
        if plant.capacity_unit_scale <= 0:
            errors.append(f"plant '{plant.id}': capacity unit scale must be positive")
        if plant.lifetime_years < 1:
            errors.append(f"plant '{plant.id}': lifetime must be at least one year")
        if plant.discount_rate <= 0:
            errors.append(f"plant '{plant.id}': discount rate must be positive")

    # Capacity comparability: all reference products of a plant's processes
    # should share one unit, otherwise the capacity sum mixes units.
    products_by_id = facility.products_by_id
    idx = index_processes(facility)
    processes_by_id = facility.processes_by_id
    for plant in facility.plants:
        units = set()
        for jid in idx.by_plant.get(plant.id, ()):
            ref = processes_by_id[jid].reference_product
            if ref in products_by_id:
                units.add(products_by_id[ref].unit)
        if len(units) > 1:
            warnings.append(
                f"plant '{plant.id}': reference products use differing units "
                f"{sorted(units)}; capacity totals mix units"
            )

    for prod in facility.products:
        if prod.sellable and prod.base_price == 0.0:
            priced = scenarios is not None and scenarios.has_price_series(prod.id)
            if not priced:
                warnings.append(
                    f"sellable product '{prod.id}' has zero price in all scenarios"
                )

    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


def _check_unique(ids, kind: str, errors: list[str]) -> set[str]:
    seen: set[str] = set()
    for i in ids:
        if i in seen:
            errors.append(f"duplicate {kind} id '{i}'")
        seen.add(i)
    return seen
