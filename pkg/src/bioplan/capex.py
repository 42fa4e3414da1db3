"""Power-law capacity-cost scaling, annuitization, and piecewise breakpoints.

Total capital cost grows as g(c) = B_ref * (c / C_ref)**sigma with
sigma in (0, 1], so unit cost falls with size. The net cost of expanding an
existing capacity C0 to C0 + y is g(C0 + y) - g(C0). For the MILP encoding,
the net-cost curve over [C0, c_max] is sampled into M+1 breakpoints; the
range-uniform strategy spaces them equally in cost and inverts g in closed
form, which concentrates points where the curve bends most.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CapexCurve:
    reference_cost: float
    reference_capacity: float
    exponent: float
    existing_capacity: float
    max_capacity: float

    def __post_init__(self):
        if self.reference_capacity <= 0:
            raise ValueError("reference capacity must be positive")
        if not 0.0 < self.exponent <= 1.0:
            raise ValueError("scale exponent must be in (0, 1]")
        if self.reference_cost < 0:
            raise ValueError("reference cost must be non-negative")
        if not 0.0 <= self.existing_capacity <= self.max_capacity:
            raise ValueError("need 0 <= existing capacity <= max capacity")


@dataclass(frozen=True)
class PiecewiseApprox:
    """Ordered (capacity, net expansion cost) pairs; first point is (C0, 0)."""

    breakpoints: tuple[tuple[float, float], ...]

    @property
    def segments(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def capacities(self) -> np.ndarray:
        return np.array([c for c, _ in self.breakpoints])

    @property
    def costs(self) -> np.ndarray:
        return np.array([b for _, b in self.breakpoints])


def total_capital_cost(curve: CapexCurve, c_total: float) -> float:
    """Evaluate g(c) = B_ref * (c / C_ref)**sigma; g(0) = 0."""
    if c_total < 0:
        raise ValueError("capacity must be non-negative")
    if c_total == 0.0:
        return 0.0
    return curve.reference_cost * (c_total / curve.reference_capacity) ** curve.exponent


def expansion_cost(curve: CapexCurve, expansion: float) -> float:
    """Net cost of adding ``expansion`` on top of the existing capacity."""
    if expansion < 0:
        raise ValueError("expansion must be non-negative")
    room = curve.max_capacity - curve.existing_capacity
    if expansion > room * (1 + 1e-12) + 1e-12:
        raise ValueError(f"expansion {expansion} exceeds domain headroom {room}")
    c0 = curve.existing_capacity
    return total_capital_cost(curve, c0 + expansion) - total_capital_cost(curve, c0)


def annuity_coefficient(rate: float, years: int) -> float:
    """Factor turning a lump sum into equal annual payments over ``years``.

    phi = R / (1 - (1+R)**-N); a stream of phi for N years discounted at R
    has present value 1.
    """
    if rate <= 0:
        raise ValueError("discount rate must be positive")
    if years < 1:
        raise ValueError("lifetime must be at least one year")
    return rate / (1.0 - (1.0 + rate) ** (-years))


def invert_total_cost(curve: CapexCurve, cost: float) -> float:
    """Closed-form inverse of g: the capacity whose total cost is ``cost``."""
    if curve.reference_cost == 0.0:
        raise ValueError("cost curve is identically zero; inverse undefined")
    return curve.reference_capacity * (cost / curve.reference_cost) ** (
        1.0 / curve.exponent
    )


def build_breakpoints_range_uniform(curve: CapexCurve, segments: int) -> PiecewiseApprox:
    """Breakpoints equally spaced in net cost between (C0, 0) and c_max.

    Capacities are recovered by inverting g in closed form. A degenerate
    domain (c_max == C0) collapses to the single no-build point.
    """
    _check_segments(segments)
    c0 = curve.existing_capacity
    if curve.max_capacity == c0:
        return PiecewiseApprox(((c0, 0.0),))
    g0 = total_capital_cost(curve, c0)
    g_top = total_capital_cost(curve, curve.max_capacity)
    span = g_top - g0
    if span <= 0.0:
        # B_ref == 0: cost curve flat at zero, fall back to capacity spacing
        return build_breakpoints_domain_uniform(curve, segments)
    points = [(c0, 0.0)]
    for p in range(1, segments):
        b = span * p / segments
        points.append((invert_total_cost(curve, g0 + b), b))
    points.append((curve.max_capacity, span))
    return PiecewiseApprox(tuple(points))


def build_breakpoints_domain_uniform(curve: CapexCurve, segments: int) -> PiecewiseApprox:
    """Breakpoints equally spaced in capacity (for accuracy comparisons)."""
    _check_segments(segments)
    c0 = curve.existing_capacity
    if curve.max_capacity == c0:
        return PiecewiseApprox(((c0, 0.0),))
    g0 = total_capital_cost(curve, c0)
    points = []
    for p in range(segments + 1):
        c = c0 + (curve.max_capacity - c0) * p / segments
        points.append((c, total_capital_cost(curve, c) - g0))
    points[0] = (c0, 0.0)
    return PiecewiseApprox(tuple(points))


def _check_segments(segments: int) -> None:
    if segments < 1:
        raise ValueError("need at least one segment")


def piecewise_eval(approx: PiecewiseApprox, c: float) -> float:
    """Interpolate the net expansion cost at capacity ``c``.

    Exact at breakpoints; between them the secant lies on or below the true
    concave curve. Only used for error measurement, never inside the MILP.
    """
    cs = approx.capacities
    bs = approx.costs
    lo, hi = cs[0], cs[-1]
    if c < lo - 1e-9 * max(1.0, abs(lo)) or c > hi + 1e-9 * max(1.0, abs(hi)):
        raise ValueError(f"capacity {c} outside approximation domain [{lo}, {hi}]")
    return float(np.interp(c, cs, bs))


def max_rel_error(approx: PiecewiseApprox, curve: CapexCurve, grid_size: int) -> float:
    """Worst-case interpolation error on a uniform capacity grid.

    The error at each grid point is |interpolated - exact| net expansion
    cost, measured relative to the exact total capital cost g(c); the
    epsilon floor guards the division when C0 = 0 and c is near zero.
    """
    if grid_size < 2:
        raise ValueError("grid size must be at least 2")
    eps = 1e-12
    cs = approx.capacities
    grid = np.linspace(cs[0], cs[-1], grid_size)
    g0 = total_capital_cost(curve, curve.existing_capacity)
    worst = 0.0
    for c in grid:
        exact_total = total_capital_cost(curve, float(c))
        approx_net = piecewise_eval(approx, float(c))
        err = abs(approx_net - (exact_total - g0)) / max(exact_total, eps)
        worst = max(worst, err)
    return worst
