"""Exact discrete optimizers for panel geometry under minimal controls.

Covers the square-matrix synthesis, the minimal-key hierarchy (sum of
branching factors subject to a product capacity), the two-stage address
plan, the compression scale, constraint-filtered panel choice, and the
information-field autonomy linter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .core import (
    SCALE_FAMILIES,
    PanelFamily,
    PanelSpec,
    PlantState,
    UnitRef,
)
from .errors import ConfigError, InfeasibleError, LayoutError


# ---------------------------------------------------------------------------
# Compression coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompressionProfile:
    """Signal and command compression ratios of a bound panel."""

    k_sig: float
    k_cmd: float


def compression_profile(
    spec: PanelSpec, n_units: int, n_commands: Optional[int] = None
) -> CompressionProfile:
    """Signal and command compression of ``spec`` bound to ``n_units``.

    Indicator cells beyond the bound unit count (spare cells of a fixed
    grid) do not count as signal capacity.
    """
    if n_units < 1:
        raise ConfigError("profile needs at least one unit")
    if n_commands is None:
        n_commands = 2 * n_units if spec.two_state else n_units
    indicators = min(spec.indicator_count(n_units), n_units)
    controls = spec.control_count(n_units)
    if indicators < 1 or controls < 1:
        raise ConfigError(f"panel '{spec.spec_id}' has no indicators or controls")
    return CompressionProfile(k_sig=n_units / indicators, k_cmd=n_commands / controls)


# ---------------------------------------------------------------------------
# Matrix synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixGeometry:
    select_count: int
    command_count: int
    capacity: int
    total_controls: int
    two_state: bool = True

    @property
    def command_pairs(self) -> int:
        return self.command_count // 2 if self.two_state else self.command_count


def _min_command_buttons(n_units: int, s: int, two_state: bool) -> int:
    per_select = math.ceil(n_units / s)
    return 2 * per_select if two_state else per_select


def synthesize_matrix(
    n_units: int, two_state: bool = True, fixed_select: Optional[int] = None
) -> MatrixGeometry:
    """Minimal-control matrix geometry: minimize s + b with s*(b/2) >= N.

    Ties go to the most square layout (minimal |s - b|), then to fewer
    selectors. ``fixed_select`` solves the constrained variant where the
    selector count is imposed by the plant's system structure.
    """
    if n_units < 1:
        raise ConfigError("matrix synthesis needs at least one unit")
    if fixed_select is not None:
        if fixed_select < 1:
            raise ConfigError("selector count must be positive")
        b = _min_command_buttons(n_units, fixed_select, two_state)
        pairs = b // 2 if two_state else b
        return MatrixGeometry(fixed_select, b, fixed_select * pairs, fixed_select + b, two_state)

    best: Optional[tuple[int, int, int, int, int]] = None
    for s in range(1, n_units + 1):
        b = _min_command_buttons(n_units, s, two_state)
        key = (s + b, abs(s - b), s, b)
        if best is None or key < best[:4]:
            pairs = b // 2 if two_state else b
            best = key + (s * pairs,)
    assert best is not None
    total, _, s, b, capacity = best
    return MatrixGeometry(s, b, capacity, total, two_state)


def matrix_minimum_oracle(n_units: int, two_state: bool = True) -> int:
    """Independent exhaustive search over all (s, b) pairs up to 2N."""
    best = None
    b_step = 2 if two_state else 1
    for s in range(1, 2 * n_units + 1):
        for b in range(b_step, 2 * n_units + 1, b_step):
            pairs = b // 2 if two_state else b
            if s * pairs >= n_units:
                if best is None or s + b < best:
                    best = s + b
                break
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Hierarchical synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HierarchyPlan:
    branching: tuple[int, ...]
    cost_model: str = "per_stage_keys"  # per_stage_keys | shared_keypad

    @property
    def stages(self) -> int:
        return len(self.branching)

    @property
    def total_keys(self) -> int:
        return sum(self.branching)

    @property
    def capacity(self) -> int:
        return math.prod(self.branching) if self.branching else 1

    @property
    def cost(self) -> int:
        if self.cost_model == "shared_keypad":
            return max(self.branching) if self.branching else 0
        return self.total_keys


# Factors >= 6 never appear in a key-minimal plan (splitting f into
# (2, ceil(f/2)) strictly reduces the sum), so the unconstrained search
# only needs branches 2..5.
_UNCONSTRAINED_FACTORS = (2, 3, 4, 5)


@lru_cache(maxsize=None)
def _best_plan(m: int) -> tuple[int, int, tuple[int, ...]]:
    """(total keys, stages, branching) minimizing that tuple, capacity >= m."""
    if m <= 1:
        return (0, 0, ())
    best: Optional[tuple[int, int, tuple[int, ...]]] = None
    for b in _UNCONSTRAINED_FACTORS:
        rest = _best_plan(math.ceil(m / b))
        cand = (b + rest[0], 1 + rest[1], (b,) + rest[2])
        if best is None or cand < best:
            best = cand
    return best


def _best_plan_constrained(m: int, budget: int) -> Optional[tuple[int, int, tuple[int, ...]]]:
    if m <= 1:
        return (0, 0, ())
    if budget <= 0:
        return None
    best: Optional[tuple[int, int, tuple[int, ...]]] = None
    for b in range(2, m + 1):
        rest = _best_plan_constrained(math.ceil(m / b), budget - 1)
        if rest is None:
            continue
        cand = (b + rest[0], 1 + rest[1], (b,) + rest[2])
        if best is None or cand < best:
            best = cand
    return best


def synthesize_hierarchy(
    n_units: int,
    max_stages: Optional[int] = None,
    shared_keypad: bool = False,
) -> HierarchyPlan:
    """Minimal-key hierarchy: minimize sum(b_i) with prod(b_i) >= N.

    Ties break toward fewer stages, then the lexicographically smallest
    branching list. ``shared_keypad`` switches the cost to the largest
    stage (one physically reused keypad), minimizing (max b_i, stages,
    total keys) instead.
    """
    if n_units < 1:
        raise ConfigError("hierarchy synthesis needs at least one unit")
    if n_units == 1:
        return HierarchyPlan((), "shared_keypad" if shared_keypad else "per_stage_keys")
    if max_stages is not None and max_stages < 1:
        raise InfeasibleError(f"{n_units} units cannot be reached in {max_stages} stages")

    if shared_keypad:
        return _synthesize_shared(n_units, max_stages)

    if max_stages is None:
        total, _, branching = _best_plan(n_units)
        assert math.prod(branching) >= n_units and sum(branching) == total
        return HierarchyPlan(branching)
    result = _best_plan_constrained(n_units, max_stages)
    if result is None:
        raise InfeasibleError(f"{n_units} units cannot be reached in {max_stages} stages")
    return HierarchyPlan(result[2])


def _synthesize_shared(n_units: int, max_stages: Optional[int]) -> HierarchyPlan:
    limit = max_stages if max_stages is not None else max(1, math.ceil(math.log2(n_units)))
    keypad = None
    for m in range(2, n_units + 1):
        if m**limit >= n_units:
            keypad = m
            break
    if keypad is None:
        raise InfeasibleError(f"{n_units} units cannot be reached in {limit} stages")
    stages = 1
    while keypad**stages < n_units:
        stages += 1
    # Cheapest key total within the keypad bound, then lex-smallest.
    best: Optional[tuple[int, tuple[int, ...]]] = None

    def walk(remaining: int, depth: int, acc: tuple[int, ...]) -> None:
        nonlocal best
        if remaining <= 1:
            cand = (sum(acc), acc)
            if best is None or cand < best:
                best = cand
            return
        if depth == 0:
            return
        for b in range(2, keypad + 1):
            walk(math.ceil(remaining / b), depth - 1, acc + (b,))

    walk(n_units, stages, ())
    assert best is not None
    return HierarchyPlan(best[1], "shared_keypad")


def hierarchy_minimum_oracle(n_units: int) -> int:
    """Independent minimum-key oracle via maximal products per key budget.

    max_product(T) is the largest product of parts >= 2 with part sum <= T;
    the answer is the smallest T whose максимум reaches N.
    """
    if n_units <= 1:
        return 0
    max_product = [1, 1]
    t = 1
    while max_product[t] < n_units:
        t += 1
        best = max_product[t - 1]
        for b in range(2, t + 1):
            best = max(best, b * max_product[t - b])
        max_product.append(best)
    return t


def hierarchy_min_stages_oracle(n_units: int, key_budget: int) -> int:
    """Fewest stages achieving capacity N within the key budget.

    For a fixed stage count the capacity is maximized by near-equal
    factors, so each count is checked in closed form.
    """
    if n_units <= 1:
        return 0
    for k in range(1, key_budget // 2 + 1):
        base, extra = divmod(key_budget, k)
        if base < 2:
            break
        product = (base + 1) ** extra * base ** (k - extra)
        if product >= n_units:
            return k
    raise InfeasibleError(f"budget {key_budget} cannot cover {n_units} units")


# ---------------------------------------------------------------------------
# Address synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AddressPlan:
    screen_rows: int
    screen_cols: int
    screen_count: int
    keypad_size: int
    edge_keypads: bool = False

    @property
    def cells_per_screen(self) -> int:
        return self.screen_rows * self.screen_cols


def synthesize_address(n_units: int, screen: str = "3x3") -> AddressPlan:
    """Two-stage address plan: pick a screen, then a cell within it.

    The default is the recommended 3x3 screen with a nine-key keypad; the
    "10x10" variant is the flat single-screen field with keypads along
    perpendicular edges.
    """
    if n_units < 1:
        raise ConfigError("address synthesis needs at least one unit")
    if screen == "3x3":
        return AddressPlan(3, 3, math.ceil(n_units / 9), 9)
    if screen == "10x10":
        return AddressPlan(10, 10, math.ceil(n_units / 100), 10, edge_keypads=True)
    raise ConfigError(f"unknown screen variant '{screen}'")


# ---------------------------------------------------------------------------
# The compression scale
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleEntry:
    spec: PanelSpec
    profile: CompressionProfile


def representative_spec(family: PanelFamily, n_units: int) -> PanelSpec:
    """One representative panel of the family sized for ``n_units``."""
    if family is PanelFamily.SINGLE_CHANNEL:
        return PanelSpec("scale-single", family, "single-channel panel")
    if family is PanelFamily.MULTI_CHANNEL:
        return PanelSpec("scale-multi", family, "multi-channel panel")
    if family is PanelFamily.MATRIX_MATRIX or family is PanelFamily.MATRIX_EXPANDED:
        geom = synthesize_matrix(n_units)
        tag = "mm" if family is PanelFamily.MATRIX_MATRIX else "m"
        return PanelSpec(
            f"scale-{tag}",
            family,
            f"matrix panel {geom.select_count}x{geom.command_count}",
            select_count=geom.select_count,
            command_count=geom.command_count,
        )
    if family is PanelFamily.HIERARCHICAL:
        plan = synthesize_hierarchy(n_units)
        branching = plan.branching if plan.branching else (2,)
        return PanelSpec(
            "scale-hier",
            family,
            "hierarchical panel",
            branching=branching,
            keypad_size=max(branching),
        )
    if family is PanelFamily.ADDRESS_PANEL:
        plan = synthesize_address(n_units)
        return PanelSpec(
            "scale-addr",
            family,
            "address panel",
            screen_rows=plan.screen_rows,
            screen_cols=plan.screen_cols,
            screen_count=plan.screen_count,
            keypad_size=plan.keypad_size,
            edge_keypads=plan.edge_keypads,
        )
    raise ConfigError(f"{family} has no scale representative")


def enumerate_scale(n_units: int) -> list[ScaleEntry]:
    """One spec per family, ordered by decreasing signal compression."""
    if n_units < 1:
        raise ConfigError("scale needs at least one unit")
    entries = []
    for rank, family in enumerate(SCALE_FAMILIES):
        spec = representative_spec(family, n_units)
        profile = compression_profile(spec, n_units)
        entries.append((profile.k_sig, profile.k_cmd, -rank, ScaleEntry(spec, profile)))
    entries.sort(key=lambda item: (-item[0], -item[1], item[2]))
    return [item[3] for item in entries]


# ---------------------------------------------------------------------------
# Constraint-filtered choice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PanelConstraints:
    max_controls: Optional[int] = None
    max_indicators: Optional[int] = None
    max_task_time: Optional[float] = None
    g_load_serviceable: bool = False


@dataclass(frozen=True)
class SynthesisResult:
    spec: PanelSpec
    profile: CompressionProfile
    total_controls: int
    total_indicators: int
    est_task_time: float
    violations: tuple[str, ...] = ()


@dataclass(frozen=True)
class ChoiceReport:
    feasible: tuple[SynthesisResult, ...]
    rejected: tuple[SynthesisResult, ...]

    @property
    def no_feasible_panel(self) -> bool:
        return not self.feasible


def choose_panel(n_units: int, constraints: PanelConstraints) -> ChoiceReport:
    """Filter the scale by constraints; rank by controls, then task time."""
    from .simulate import SetUnit, TimeModelParams, estimate_time

    params = TimeModelParams()
    reference_task = SetUnit(UnitRef(0, 0), True)
    feasible: list[SynthesisResult] = []
    rejected: list[SynthesisResult] = []
    for entry in enumerate_scale(n_units):
        spec = entry.spec
        controls = spec.control_count(n_units)
        indicators = spec.indicator_count(n_units)
        est = estimate_time(spec, reference_task, params, n_units)
        violations = []
        if constraints.max_controls is not None and controls > constraints.max_controls:
            violations.append(f"controls {controls} > max {constraints.max_controls}")
        if constraints.max_indicators is not None and indicators > constraints.max_indicators:
            violations.append(f"indicators {indicators} > max {constraints.max_indicators}")
        if constraints.max_task_time is not None and est > constraints.max_task_time:
            violations.append(f"task time {est:.2f}s > max {constraints.max_task_time}s")
        if constraints.g_load_serviceable and spec.family is PanelFamily.MULTI_CHANNEL:
            violations.append("multi-channel panels are unserviceable under g-load")
        result = SynthesisResult(
            spec, entry.profile, controls, indicators, est, tuple(violations)
        )
        (rejected if violations else feasible).append(result)
    feasible.sort(key=lambda r: (r.total_controls, r.est_task_time))
    return ChoiceReport(tuple(feasible), tuple(rejected))


# ---------------------------------------------------------------------------
# Autonomy lint
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionGroup:
    """Units participating in one task/function, controlled from one row."""

    function_id: str
    units: frozenset[UnitRef]
    control_row: int


@dataclass(frozen=True)
class LintViolation:
    kind: str  # split_system | missing_duplicate
    subject: str
    description: str
    cells: tuple[UnitRef, ...]


@dataclass(frozen=True)
class LintReport:
    violations: tuple[LintViolation, ...]

    @property
    def clean(self) -> bool:
        return not self.violations


def lint_autonomy(
    plant: PlantState,
    rows: Sequence[Iterable[UnitRef]],
    functions: Sequence[FunctionGroup] = (),
) -> LintReport:
    """Check an information-field layout against the autonomy principle.

    Without functions, every system's units must share one row. With
    functions, rows address tasks instead, and any unit serving several
    functions must be displayed in every row from which it is controlled.
    """
    row_sets = [frozenset(row) for row in rows]
    known = set(plant.all_units())
    for i, row in enumerate(row_sets):
        unknown = row - known
        if unknown:
            raise LayoutError(f"row {i} references unknown units: {sorted(unknown)}")
    placed = set().union(*row_sets) if row_sets else set()
    missing = known - placed
    if missing:
        raise LayoutError(f"layout does not cover units: {sorted(missing)[:4]}")

    violations: list[LintViolation] = []
    if functions:
        for f in functions:
            if not (0 <= f.control_row < len(row_sets)):
                raise LayoutError(f"function '{f.function_id}' controls from unknown row {f.control_row}")
        ownership: dict[UnitRef, list[FunctionGroup]] = {}
        for f in functions:
            for unit in f.units:
                if unit not in known:
                    raise LayoutError(f"function '{f.function_id}' references unknown unit {unit}")
                ownership.setdefault(unit, []).append(f)
        for unit, owners in sorted(ownership.items()):
            if len(owners) < 2:
                continue
            for f in owners:
                if unit not in row_sets[f.control_row]:
                    violations.append(
                        LintViolation(
                            "missing_duplicate",
                            f.function_id,
                            f"unit {plant.unit_label(unit)} is controlled from row "
                            f"{f.control_row} (function '{f.function_id}') but not displayed there",
                            (unit,),
                        )
                    )
    else:
        for system in plant.systems:
            unit_rows = {
                i
                for i, row in enumerate(row_sets)
                for unit in row
                if unit.system_id == system.system_id
            }
            if len(unit_rows) > 1:
                offending = tuple(
                    unit
                    for i in sorted(unit_rows)
                    for unit in sorted(row_sets[i])
                    if unit.system_id == system.system_id
                )
                violations.append(
                    LintViolation(
                        "split_system",
                        system.label,
                        f"system {system.label} units span rows {sorted(unit_rows)}",
                        offending,
                    )
                )
    return LintReport(tuple(violations))
