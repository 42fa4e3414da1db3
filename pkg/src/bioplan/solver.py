"""Reference solver for the planning MILP, plus MPS export and import.

The MILP's only binaries are the per-plant segment selectors with an
at-most-one row, so enumerating one segment choice per plant and solving the
residual LP is exact. The enumeration skips choices that provably cannot
beat the incumbent (a capex lower bound per choice plus a global operating
lower bound from one capex-free LP); this never changes the reported
optimum or tie-break, only the work done. Desk-scale LPs run on the bundled
dense simplex; larger ones are routed to scipy's HiGHS backend behind the
same contract.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.optimize
import scipy.sparse

from .program import MilpModel, ModelIndex
from .simplex import solve_dense_lp

# Tableau-cell threshold below which the bundled dense kernel is used.
_DENSE_CELL_LIMIT = 2_500_000

# Ties in objective value within this relative window are broken by the
# lexicographically smallest segment-choice vector.
_TIE_REL = 1e-9


@dataclass(frozen=True)
class SolverOptions:
    feasibility_tolerance: float = 1e-7
    optimality_tolerance: float = 1e-7
    max_enumeration: int = 1_000_000
    parallelism: int = 1
    lp_kernel: str = "auto"  # auto | builtin | highs

    def __post_init__(self):
        if self.feasibility_tolerance <= 0 or self.optimality_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_enumeration < 1:
            raise ValueError("enumeration cap must be at least 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if self.lp_kernel not in ("auto", "builtin", "highs"):
            raise ValueError(f"unknown LP kernel '{self.lp_kernel}'")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, object], **overrides) -> "SolverOptions":
        merged = {str(k): v for k, v in raw.items()}
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(
            feasibility_tolerance=float(merged.get("feasibility_tolerance", 1e-7)),
            optimality_tolerance=float(merged.get("optimality_tolerance", 1e-7)),
            max_enumeration=int(merged.get("max_enumeration", 1_000_000)),
            parallelism=int(merged.get("parallelism", 1)),
            lp_kernel=str(merged.get("lp_kernel", "auto")),
        )


@dataclass(frozen=True)
class MilpSolution:
    status: str  # optimal | infeasible | unbounded | cap_exceeded | numerical
    objective: float | None = None
    values: tuple[float, ...] | None = None
    active_segments: Mapping[str, int | None] = field(
        default_factory=lambda: MappingProxyType({})
    )

    def __post_init__(self):
        object.__setattr__(
            self, "active_segments", MappingProxyType(dict(self.active_segments))
        )

    def value(self, var: int) -> float:
        if self.values is None:
            raise ValueError(f"no solution values (status {self.status})")
        return self.values[var]


class _Arrays:
    """Matrix view of a MilpModel, shared across repeated bound-fixed solves."""

    def __init__(self, model: MilpModel):
        self.model = model
        n = model.n_variables
        m = model.n_constraints
        self.n, self.m = n, m
        self.c = np.zeros(n)
        for var, coef in model.objective.items():
            self.c[var] = coef
        self.lb = np.array([v.lb for v in model.variables])
        self.ub = np.array([v.ub for v in model.variables])
        self.senses = [con.sense for con in model.constraints]
        self.rhs = np.array([con.rhs for con in model.constraints])
        rows, cols, vals = [], [], []
        for i, con in enumerate(model.constraints):
            for var, coef in con.coeffs:
                rows.append(i)
                cols.append(var)
                vals.append(coef)
        self._coo = (np.array(rows, dtype=np.int64),
                     np.array(cols, dtype=np.int64),
                     np.array(vals))
        self._dense: np.ndarray | None = None
        self._csr = None

    def dense(self) -> np.ndarray:
        if self._dense is None:
            A = np.zeros((self.m, self.n))
            r, c, v = self._coo
            A[r, c] = v  # coefficients are unique per (row, var) by construction
            self._dense = A
        return self._dense

    def csr(self):
        if self._csr is None:
            r, c, v = self._coo
            self._csr = scipy.sparse.csr_matrix(
                (v, (r, c)), shape=(self.m, self.n)
            )
        return self._csr

    def tableau_cells(self) -> int:
        return self.m * (self.n + 2 * self.m)


def audit_solution(arrays: _Arrays, x: np.ndarray, feas_tol: float):
    """Independent residual check; returns (ok, worst violation, culprit)."""
    worst = 0.0
    culprit = ""
    lhs = arrays.csr() @ x
    for i, sense in enumerate(arrays.senses):
        rhs = arrays.rhs[i]
        if sense == "<=":
            viol = lhs[i] - rhs
        elif sense == ">=":
            viol = rhs - lhs[i]
        else:
            viol = abs(lhs[i] - rhs)
        if viol > feas_tol * (1.0 + abs(rhs)) and viol > worst:
            worst = viol
            culprit = arrays.model.constraints[i].name
    below = arrays.lb - x
    above = x - arrays.ub
    bviol = np.maximum(below, above)
    allowed = feas_tol * (1.0 + np.abs(x))
    bad = np.nonzero(bviol > allowed)[0]
    for j in bad:
        if bviol[j] > worst:
            worst = float(bviol[j])
            culprit = f"bounds of {arrays.model.variables[j].name}"
    return culprit == "", worst, culprit


def _solve_arrays(
    arrays: _Arrays,
    options: SolverOptions,
    lb: np.ndarray | None = None,
    ub: np.ndarray | None = None,
    cost: np.ndarray | None = None,
):
    """Solve the continuous problem with optional bound/objective overrides."""
    lb = arrays.lb if lb is None else lb
    ub = arrays.ub if ub is None else ub
    cost = arrays.c if cost is None else cost
    kernel = options.lp_kernel
    if kernel == "auto":
        kernel = "builtin" if arrays.tableau_cells() <= _DENSE_CELL_LIMIT else "highs"

    if kernel == "builtin":
        res = solve_dense_lp(
            arrays.dense(), arrays.senses, arrays.rhs, cost, lb, ub,
            feas_tol=options.feasibility_tolerance,
            opt_tol=options.optimality_tolerance,
        )
        return res.status, res.x, res.objective

    A = arrays.csr()
    le_rows = [i for i, s in enumerate(arrays.senses) if s == "<="]
    ge_rows = [i for i, s in enumerate(arrays.senses) if s == ">="]
    eq_rows = [i for i, s in enumerate(arrays.senses) if s == "="]
    A_ub = b_ub = A_eq = b_eq = None
    if le_rows or ge_rows:
        parts = []
        rhs_parts = []
        if le_rows:
            parts.append(A[le_rows, :])
            rhs_parts.append(arrays.rhs[le_rows])
        if ge_rows:
            parts.append(-A[ge_rows, :])
            rhs_parts.append(-arrays.rhs[ge_rows])
        A_ub = scipy.sparse.vstack(parts, format="csr")
        b_ub = np.concatenate(rhs_parts)
    if eq_rows:
        A_eq = A[eq_rows, :]
        b_eq = arrays.rhs[eq_rows]
    res = scipy.optimize.linprog(
        cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=list(zip(lb, ub)), method="highs",
    )
    if res.status == 0:
        return "optimal", np.clip(res.x, lb, ub), float(cost @ np.clip(res.x, lb, ub))
    if res.status == 2:
        return "infeasible", None, None
    if res.status == 3:
        return "unbounded", None, None
    return "numerical", None, None


def solve_lp(model: MilpModel, options: SolverOptions | None = None) -> MilpSolution:
    """Solve a continuous model to a basic optimum (or certify why not)."""
    if model.binary_indices:
        raise ValueError("model has binary variables; use solve_reference_milp")
    options = options or SolverOptions()
    arrays = _Arrays(model)
    status, x, obj = _solve_arrays(arrays, options)
    if status != "optimal":
        return MilpSolution(status)
    ok, worst, culprit = audit_solution(arrays, x, options.feasibility_tolerance * 10)
    if not ok:
        return MilpSolution("numerical")
    return MilpSolution("optimal", float(obj), tuple(float(v) for v in x))


def _choice_lists(index: ModelIndex) -> list[tuple[int, list[int]]]:
    """Per plant (by position) the enumerable segment choices.

    The all-zero "none" choice is never enumerated: for a greenfield plant it
    is contained in segment 1 (which reaches capacity zero at cost zero), and
    for an existing plant it contradicts c >= C0. Reported solutions are
    canonicalized back to the all-zero form when a greenfield plant ends at
    zero capacity.
    """
    out = []
    for pos, block in enumerate(index.plants):
        if block.eta:
            out.append((pos, list(range(1, block.segments + 1))))
    return out


def _capex_floor(index: ModelIndex, c: np.ndarray) -> dict[int, list[float]]:
    """Objective-weighted left-endpoint cost per (plant position, choice)."""
    floors: dict[int, list[float]] = {}
    for pos, block in enumerate(index.plants):
        if block.eta:
            phi = c[block.b]
            floors[pos] = [phi * block.breakpoints[p - 1][1]
                           for p in range(1, block.segments + 1)]
    return floors


def solve_reference_milp(
    model: MilpModel, index: ModelIndex, options: SolverOptions | None = None
) -> MilpSolution:
    """Exact optimum by per-plant segment enumeration over residual LPs.

    Requires the model's binaries to be exactly the segment selectors in
    ``index``. Returns ``cap_exceeded`` when the number of segment-choice
    combinations is beyond the configured cap. Ties within 1e-9 relative
    objective go to the lexicographically smallest segment-choice vector.
    """
    options = options or SolverOptions()
    arrays = _Arrays(model)
    indexed_eta = {e for block in index.plants for e in block.eta}
    if set(model.binary_indices) != indexed_eta:
        raise ValueError("model binaries must be exactly the indexed segment selectors")

    choices = _choice_lists(index)
    count = 1
    for _, opts in choices:
        count *= len(opts)
        if count > options.max_enumeration:
            return MilpSolution("cap_exceeded")

    # Capex-free relaxation: one LP whose value lower-bounds the operating
    # part of every combination (capacities relaxed to their maxima).
    relaxed_cost = arrays.c.copy()
    for block in index.plants:
        relaxed_cost[block.b] = 0.0
    status, _, ops_lb = _solve_arrays(arrays, options, cost=relaxed_cost)
    if status == "infeasible":
        return MilpSolution("infeasible")
    if status != "optimal":
        ops_lb = -math.inf  # pruning disabled, enumeration still exact

    floors = _capex_floor(index, arrays.c)
    shared_best = [math.inf]

    def run_chunk(combos: Iterable[tuple[int, ...]]):
        """Solve a lex-ordered slice of choice vectors with local pruning."""
        local_best = math.inf
        candidates: list[tuple[float, tuple[int, ...], np.ndarray]] = []
        lb = arrays.lb.copy()
        ub = arrays.ub.copy()
        for combo in combos:
            incumbent = min(local_best, shared_best[0])
            bound = ops_lb
            for (pos, _), p in zip(choices, combo):
                bound += floors[pos][p - 1]
            if bound > incumbent + _TIE_REL * max(1.0, abs(incumbent)):
                continue
            for (pos, _), p in zip(choices, combo):
                block = index.plants[pos]
                for q, e in enumerate(block.eta, start=1):
                    lb[e] = 1.0 if q == p else 0.0
                    ub[e] = lb[e]
            st, x, obj = _solve_arrays(arrays, options, lb=lb, ub=ub)
            if st != "optimal":
                continue
            window = _TIE_REL * max(1.0, abs(min(local_best, obj)))
            if obj < local_best - window:
                local_best = obj
                shared_best[0] = min(shared_best[0], obj)
                candidates = [(obj, combo, x)]
            elif obj <= local_best + window:
                candidates.append((obj, combo, x))
        return candidates

    workers = min(options.parallelism, count)
    if workers == 1:
        candidates = run_chunk(_product([opts for _, opts in choices]))
    else:
        all_combos = list(_product([opts for _, opts in choices]))
        chunk_size = (len(all_combos) + workers - 1) // workers
        chunks = [all_combos[i:i + chunk_size]
                  for i in range(0, len(all_combos), chunk_size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, chunks))
        candidates = [cand for part in results for cand in part]

    if not candidates:
        return MilpSolution("infeasible")

    best_obj = min(obj for obj, _, _ in candidates)
    window = _TIE_REL * max(1.0, abs(best_obj))
    winner = min(
        (combo, obj, x) for obj, combo, x in candidates if obj <= best_obj + window
    )
    combo, obj, x = winner

    x = x.copy()
    segments: dict[str, int | None] = {}
    combo_by_pos = {pos: p for (pos, _), p in zip(choices, combo)}
    for pos, block in enumerate(index.plants):
        if not block.eta:
            segments[block.plant_id] = None
            continue
        p = combo_by_pos[pos]
        for q, (e, wvar) in enumerate(zip(block.eta, block.w), start=1):
            x[e] = 1.0 if q == p else 0.0
            if q != p:
                x[wvar] = 0.0
        cap_scale = max(1.0, block.max_capacity)
        if block.greenfield and x[block.c] <= 1e-9 * cap_scale:
            # Zero build: report the canonical all-zero selector form.
            for e in block.eta:
                x[e] = 0.0
            for wvar in block.w:
                x[wvar] = 0.0
            x[block.c] = 0.0
            x[block.y] = 0.0
            x[block.b] = 0.0
            segments[block.plant_id] = None
        else:
            segments[block.plant_id] = p

    ok, worst, culprit = audit_solution(arrays, x, options.feasibility_tolerance * 10)
    if not ok:
        return MilpSolution("numerical")
    objective = model.objective_value(x)
    return MilpSolution(
        "optimal", float(objective), tuple(float(v) for v in x), segments
    )


def _product(option_lists: list[list[int]]) -> Iterator[tuple[int, ...]]:
    if not option_lists:
        yield ()
        return
    head, *tail = option_lists
    for h in head:
        for rest in _product(tail):
            yield (h, *rest)


# ---------------------------------------------------------------------------
# MPS export / solution import


def export_mps(model: MilpModel, path: str | Path) -> None:
    """Write the model in MPS format (one entry per line, exact floats).

    Binaries are wrapped in INTORG/INTEND markers; every variable carries an
    explicit objective entry so the column set round-trips exactly. The free
    tail-threshold variable is emitted with an FR bound.
    """
    names = [v.name for v in model.variables]
    if len(set(names)) != len(names):
        raise ValueError("duplicate variable names")
    row_names = [c.name for c in model.constraints]
    if len(set(row_names)) != len(row_names):
        raise ValueError("duplicate constraint names")
    width = max(
        [len(n) for n in names + row_names + ["OBJ", "RHS", "BND", "'MARKER'"]]
    ) + 2

    def pad(s: str) -> str:
        return s.ljust(width)

    sense_tag = {"<=": "L", ">=": "G", "=": "E"}
    by_var: dict[int, list[tuple[str, float]]] = {i: [] for i in range(model.n_variables)}
    for con in model.constraints:
        for var, coef in con.coeffs:
            by_var[var].append((con.name, coef))

    lines = [f"NAME          {model.name}"]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    for con in model.constraints:
        lines.append(f" {sense_tag[con.sense]}  {con.name}")
    lines.append("COLUMNS")
    marker = 0
    in_int = False
    for j, var in enumerate(model.variables):
        if var.binary and not in_int:
            lines.append(f"    {pad(f'M{marker}')}{pad(chr(39) + 'MARKER' + chr(39))}"
                         f"'INTORG'")
            marker += 1
            in_int = True
        elif not var.binary and in_int:
            lines.append(f"    {pad(f'M{marker}')}{pad(chr(39) + 'MARKER' + chr(39))}"
                         f"'INTEND'")
            marker += 1
            in_int = False
        lines.append(f"    {pad(var.name)}{pad('OBJ')}{model.objective.get(j, 0.0)!r}")
        for row_name, coef in by_var[j]:
            lines.append(f"    {pad(var.name)}{pad(row_name)}{coef!r}")
    if in_int:
        lines.append(f"    {pad(f'M{marker}')}{pad(chr(39) + 'MARKER' + chr(39))}"
                     f"'INTEND'")
    lines.append("RHS")
    for con in model.constraints:
        lines.append(f"    {pad('RHS')}{pad(con.name)}{con.rhs!r}")
    lines.append("RANGES")
    lines.append("BOUNDS")
    for var in model.variables:
        lo_fin = math.isfinite(var.lb)
        hi_fin = math.isfinite(var.ub)
        if not lo_fin and not hi_fin:
            lines.append(f" FR {pad('BND')}{pad(var.name)}")
            continue
        if lo_fin:
            lines.append(f" LO {pad('BND')}{pad(var.name)}{var.lb!r}")
        else:
            lines.append(f" MI {pad('BND')}{pad(var.name)}")
        if hi_fin:
            lines.append(f" UP {pad('BND')}{pad(var.name)}{var.ub!r}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_solution(
    path: str | Path,
    model: MilpModel,
    index: ModelIndex,
    options: SolverOptions | None = None,
) -> MilpSolution:
    """Read a "name value" bridge file and re-verify it against the model.

    Unlisted variables default to zero (clamped into bounds); any residual
    beyond the feasibility tolerance rejects the file, naming the worst row.
    """
    options = options or SolverOptions()
    text = Path(path).read_text(encoding="utf-8")
    by_name = {v.name: i for i, v in enumerate(model.variables)}
    x = np.clip(np.zeros(model.n_variables),
                np.array([v.lb for v in model.variables]),
                np.array([v.ub for v in model.variables]))
    seen = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'name value', got '{raw}'")
        name, value = parts
        if name not in by_name:
            raise ValueError(f"line {lineno}: unknown variable '{name}'")
        try:
            x[by_name[name]] = float(value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad numeric value '{value}'") from None
        seen += 1
    if seen == 0:
        raise ValueError(f"solution file {path} contains no variable values")

    arrays = _Arrays(model)
    ok, worst, culprit = audit_solution(arrays, x, options.feasibility_tolerance)
    if not ok:
        raise ValueError(
            f"imported solution violates '{culprit}' by {worst:.3e} "
            f"(tolerance {options.feasibility_tolerance:.1e})"
        )
    for j in model.binary_indices:
        if abs(x[j] - round(x[j])) > 1e-9:
            raise ValueError(
                f"binary variable '{model.variables[j].name}' has fractional "
                f"value {x[j]!r}"
            )

    segments: dict[str, int | None] = {}
    for block in index.plants:
        active = [q for q, e in enumerate(block.eta, start=1) if x[e] > 0.5]
        segments[block.plant_id] = active[0] if active else None
    objective = model.objective_value(x)
    return MilpSolution(
        "optimal", float(objective), tuple(float(v) for v in x), segments
    )
