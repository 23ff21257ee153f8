"""Factors, sliding-level tables and planning matrices.

A sliding-level design has one *parent* factor and one *slid* factor whose
actual settings depend on the parent's level.  The slid factor only has
symbolic levels (e.g. ``low``/``median``/``high``); the numbers behind them
live in a :class:`SlidingSpec` lookup table keyed by parent level label.

All containers are frozen dataclasses holding tuples, so a resolved
:class:`SlidingDesign` can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import MissingSlidingEntry, UnknownLevelLabel, ValidationError

QUANTITATIVE = "quantitative"
QUALITATIVE = "qualitative"
FREE, PARENT, SLID = "free", "parent", "slid"

_GEOMETRY_TOL = 1e-9


@dataclass(frozen=True)
class FactorSpec:
    """Metadata for one experimental factor.

    ``settings`` holds the actual numeric value of each symbolic level and
    is only present for quantitative factors that do not slide.  ``unit``
    is free text and never enters a computation.
    """

    name: str
    kind: str
    role: str
    levels: tuple[str, ...]
    settings: tuple[float, ...] | None = None
    parent: str | None = None
    unit: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(str(v) for v in self.levels))
        if self.settings is not None:
            object.__setattr__(self, "settings", tuple(float(v) for v in self.settings))
        if self.kind not in (QUANTITATIVE, QUALITATIVE):
            raise ValidationError(f"factor {self.name!r}: kind must be quantitative or qualitative, got {self.kind!r}")
        if self.role not in (FREE, PARENT, SLID):
            raise ValidationError(f"factor {self.name!r}: role must be free, parent or slid, got {self.role!r}")
        if not self.levels:
            raise ValidationError(f"factor {self.name!r}: needs at least one level")
        if len(set(self.levels)) != len(self.levels):
            raise ValidationError(f"factor {self.name!r}: level labels must be distinct")
        if self.role == SLID:
            if self.settings is not None:
                raise ValidationError(
                    f"factor {self.name!r}: a slid factor carries no unconditional settings"
                )
            if not self.parent:
                raise ValidationError(f"factor {self.name!r}: a slid factor must name its parent")
            return
        if self.parent is not None:
            raise ValidationError(f"factor {self.name!r}: only slid factors name a parent")
        if self.kind == QUALITATIVE:
            if self.settings is not None:
                raise ValidationError(f"factor {self.name!r}: qualitative factors have no numeric settings")
            return
        if self.settings is None:
            raise ValidationError(f"factor {self.name!r}: quantitative non-slid factor needs settings")
        if len(self.settings) != len(self.levels):
            raise ValidationError(
                f"factor {self.name!r}: {len(self.settings)} settings for {len(self.levels)} levels"
            )
        _check_increasing(self.settings, f"factor {self.name!r} settings")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def is_quantitative(self) -> bool:
        return self.kind == QUANTITATIVE

    def level_index(self, label: str) -> int:
        try:
            return self.levels.index(label)
        except ValueError:
            raise UnknownLevelLabel(f"factor {self.name!r} has no level {label!r}") from None


@dataclass(frozen=True)
class SlidingSpec:
    """Parent level label -> actual slid settings, one per slid level.

    The optional geometry describes the table as functions of the coded
    parent value ``x``: center ``s + t*x`` and half-width ``r``.  It is an
    annotation; the table is authoritative and the two are cross-checked
    when the design is resolved.
    """

    parent: str
    slid: str
    table: Mapping[str, tuple[float, ...]]
    center: tuple[float, float] | None = None
    half_width: float | None = None

    def __post_init__(self):
        table = {str(k): tuple(float(v) for v in vals) for k, vals in dict(self.table).items()}
        object.__setattr__(self, "table", table)
        for label, vals in table.items():
            _check_increasing(vals, f"sliding table {self.slid!r} at {self.parent}={label}")
        if self.center is not None:
            if len(self.center) != 2:
                raise ValidationError("sliding center must be an (intercept, slope) pair")
            object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.half_width is not None:
            r = float(self.half_width)
            if not r > 0:
                raise ValidationError(f"sliding half-width must be positive, got {r}")
            object.__setattr__(self, "half_width", r)
        if (self.center is None) != (self.half_width is None):
            raise ValidationError("sliding geometry needs both center (s, t) and half-width r")

    @property
    def has_geometry(self) -> bool:
        return self.center is not None

    def midpoint(self, parent_label: str) -> float:
        vals = self.table[parent_label]
        return 0.5 * (vals[0] + vals[-1])

    def half_range(self, parent_label: str) -> float:
        vals = self.table[parent_label]
        return 0.5 * (vals[-1] - vals[0])


@dataclass(frozen=True)
class PlanningMatrix:
    """Run-by-factor table of symbolic level labels."""

    runs: int
    columns: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        cols = {str(k): tuple(str(v) for v in col) for k, col in dict(self.columns).items()}
        object.__setattr__(self, "columns", cols)
        for name, col in cols.items():
            if len(col) != self.runs:
                raise ValidationError(f"column {name!r} has {len(col)} entries, expected {self.runs} runs")

    @classmethod
    def from_rows(cls, names: Sequence[str], rows: Iterable[Sequence[str]]) -> "PlanningMatrix":
        rows = [tuple(r) for r in rows]
        cols = {n: tuple(r[j] for r in rows) for j, n in enumerate(names)}
        return cls(runs=len(rows), columns=cols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def level_counts(self, name: str) -> dict[str, int]:
        counts: dict[str, int] = {}
        for label in self.columns[name]:
            counts[label] = counts.get(label, 0) + 1
        return counts


@dataclass(frozen=True)
class SlidingDesign:
    """A planning matrix with every quantitative factor resolved to numbers.

    Build instances with :func:`resolve_settings`; it enforces the
    invariants that the rest of the package relies on.
    """

    planning: PlanningMatrix
    factors: tuple[FactorSpec, ...]
    sliding: tuple[SlidingSpec, ...] = ()
    actual: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    @property
    def runs(self) -> int:
        return self.planning.runs

    def factor(self, name: str) -> FactorSpec:
        for f in self.factors:
            if f.name == name:
                return f
        raise ValidationError(f"design has no factor {name!r}")

    def labels(self, name: str) -> tuple[str, ...]:
        return self.planning.columns[name]

    def level_indices(self, name: str) -> np.ndarray:
        f = self.factor(name)
        return np.array([f.level_index(lab) for lab in self.labels(name)], dtype=int)

    def actual_array(self, name: str) -> np.ndarray:
        if name not in self.actual:
            raise ValidationError(f"factor {name!r} has no numeric settings")
        return np.asarray(self.actual[name], dtype=float)

    def sliding_for(self, slid: str) -> SlidingSpec:
        for s in self.sliding:
            if s.slid == slid:
                return s
        raise ValidationError(f"no sliding table for factor {slid!r}")

    def pair(self) -> tuple[FactorSpec, FactorSpec, SlidingSpec]:
        """Return ``(parent, slid, sliding spec)`` for the single slid factor."""
        if len(self.sliding) != 1:
            raise ValidationError(
                f"expected exactly one slid factor, design has {len(self.sliding)}"
            )
        spec = self.sliding[0]
        return self.factor(spec.parent), self.factor(spec.slid), spec

    def free_factors(self) -> list[FactorSpec]:
        return [f for f in self.factors if f.role == FREE]


def _check_increasing(values: Sequence[float], what: str) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValidationError(f"{what}: non-finite value {v}")
    for a, b in zip(values, values[1:]):
        if not b > a:
            raise ValidationError(f"{what} must be strictly increasing, got {tuple(values)}")


def coded_parent_values(parent: FactorSpec) -> dict[str, float]:
    """Proportional coding of each parent level (lowest -> -1, highest -> +1)."""
    from .coding import proportional_code

    if not parent.is_quantitative:
        raise ValidationError(f"parent {parent.name!r} is qualitative; it has no coded values")
    return {lab: proportional_code(parent.settings, v) for lab, v in zip(parent.levels, parent.settings)}


def _check_sliding(spec: SlidingSpec, parent: FactorSpec, slid: FactorSpec) -> None:
    if slid.parent != spec.parent:
        raise ValidationError(
            f"slid factor {slid.name!r} names parent {slid.parent!r} but its table uses {spec.parent!r}"
        )
    for label in parent.levels:
        if label not in spec.table:
            raise MissingSlidingEntry(
                f"sliding table for {slid.name!r} has no entry for {parent.name}={label!r}"
            )
        n = len(spec.table[label])
        if n < slid.n_levels:
            raise MissingSlidingEntry(
                f"sliding table for {slid.name!r} at {parent.name}={label!r} lists {n} settings; "
                f"slid levels {slid.levels} need {slid.n_levels}"
            )
        if n > slid.n_levels:
            raise ValidationError(
                f"sliding table for {slid.name!r} at {parent.name}={label!r} lists {n} settings "
                f"for {slid.n_levels} slid levels"
            )
    extra = set(spec.table) - set(parent.levels)
    if extra:
        raise UnknownLevelLabel(f"sliding table for {slid.name!r} has unknown parent levels {sorted(extra)}")
    if spec.has_geometry:
        coded = coded_parent_values(parent)
        s, t = spec.center
        for label, x in coded.items():
            mid, half = spec.midpoint(label), spec.half_range(label)
            scale = max(1.0, abs(mid))
            if abs(mid - (s + t * x)) > _GEOMETRY_TOL * scale:
                raise ValidationError(
                    f"sliding geometry inconsistent with table at {parent.name}={label!r}: "
                    f"midpoint {mid} != s + t*x = {s + t * x}"
                )
            if abs(half - spec.half_width) > _GEOMETRY_TOL * scale:
                raise ValidationError(
                    f"sliding geometry inconsistent with table at {parent.name}={label!r}: "
                    f"half-range {half} != r = {spec.half_width}"
                )


def resolve_settings(
    planning: PlanningMatrix,
    factors: Sequence[FactorSpec],
    sliding: Sequence[SlidingSpec] = (),
) -> SlidingDesign:
    """Validate a planning matrix and look up every run's actual settings.

    Raises
    ------
    MissingSlidingEntry
        A parent level or slid level has no entry in the sliding table.
    UnknownLevelLabel
        A planning label is not among the factor's declared levels.
    """
    factors = tuple(factors)
    sliding = tuple(sliding)
    by_name = {f.name: f for f in factors}
    if len(by_name) != len(factors):
        raise ValidationError("duplicate factor names in factor specs")
    if set(by_name) != set(planning.columns):
        raise ValidationError(
            f"planning columns {sorted(planning.columns)} do not match factor specs {sorted(by_name)}"
        )
    for name, col in planning.columns.items():
        levels = set(by_name[name].levels)
        for i, lab in enumerate(col):
            if lab not in levels:
                raise UnknownLevelLabel(f"run {i + 1}: factor {name!r} has no level {lab!r}")

    spec_by_slid = {}
    for spec in sliding:
        if spec.slid in spec_by_slid:
            raise ValidationError(f"two sliding tables for factor {spec.slid!r}")
        if spec.slid not in by_name or spec.parent not in by_name:
            raise ValidationError(f"sliding table refers to unknown factors {spec.parent!r}/{spec.slid!r}")
        spec_by_slid[spec.slid] = spec
    for f in factors:
        if f.role == SLID:
            if f.name not in spec_by_slid:
                raise MissingSlidingEntry(f"slid factor {f.name!r} has no sliding table")
            parent = by_name.get(f.parent)
            if parent is None:
                raise ValidationError(f"slid factor {f.name!r} names unknown parent {f.parent!r}")
            if parent.role != PARENT:
                raise ValidationError(f"factor {parent.name!r} is slid on but its role is {parent.role!r}")
            _check_sliding(spec_by_slid[f.name], parent, f)
    for spec in sliding:
        if by_name[spec.slid].role != SLID:
            raise ValidationError(f"factor {spec.slid!r} has a sliding table but role {by_name[spec.slid].role!r}")

    actual: dict[str, tuple[float, ...]] = {}
    for name, col in planning.columns.items():
        f = by_name[name]
        if not f.is_quantitative:
            continue
        if f.role == SLID:
            spec = spec_by_slid[name]
            parent_col = planning.columns[f.parent]
            actual[name] = tuple(
                spec.table[p][f.levels.index(lab)] for p, lab in zip(parent_col, col)
            )
        else:
            lookup = dict(zip(f.levels, f.settings))
            actual[name] = tuple(lookup[lab] for lab in col)
    return SlidingDesign(planning=planning, factors=factors, sliding=sliding, actual=actual)


def replace_sliding(design: SlidingDesign, spec: SlidingSpec) -> SlidingDesign:
    """Re-resolve ``design`` with a different table for the same slid factor."""
    others = [s for s in design.sliding if s.slid != spec.slid]
    return resolve_settings(design.planning, design.factors, [*others, spec])


# --------------------------------------------------------------------------
# Bundled welding experiment (18-run OA(18, 2^1 3^7) with a collapsed H)
# --------------------------------------------------------------------------

_WELDING_ROWS = [
    ("2", "low", "6", "10", "15", "50", "85", "3/8"),
    ("2", "low", "12", "18", "20", "55", "90", "1/4"),
    ("2", "low", "18", "26", "25", "60", "95", "3/8"),
    ("2", "median", "6", "10", "20", "55", "95", "3/8"),
    ("2", "median", "12", "18", "25", "60", "85", "3/8"),
    ("2", "median", "18", "26", "15", "50", "90", "1/4"),
    ("2", "high", "6", "18", "15", "60", "90", "3/8"),
    ("2", "high", "12", "26", "20", "50", "95", "3/8"),
    ("2", "high", "18", "10", "25", "55", "85", "1/4"),
    ("4", "low", "6", "26", "25", "55", "90", "3/8"),
    ("4", "low", "12", "10", "15", "60", "95", "1/4"),
    ("4", "low", "18", "18", "20", "50", "85", "3/8"),
    ("4", "median", "6", "18", "25", "50", "95", "1/4"),
    ("4", "median", "12", "26", "15", "55", "85", "3/8"),
    ("4", "median", "18", "10", "20", "60", "90", "3/8"),
    ("4", "high", "6", "26", "20", "60", "85", "1/4"),
    ("4", "high", "12", "10", "25", "50", "90", "3/8"),
    ("4", "high", "18", "18", "15", "55", "95", "3/8"),
]

WELDING_FACTOR_NAMES = {
    "A": "pulse rate",
    "B": "weld time",
    "C": "cool time",
    "D": "hold time",
    "E": "squeeze time",
    "F": "air pressure",
    "G": "current percentage",
    "H": "tip size",
}


def _three_level(name: str, values: tuple[int, int, int]) -> FactorSpec:
    return FactorSpec(name, QUANTITATIVE, FREE, tuple(str(v) for v in values), values)


def build_welding_fixture() -> SlidingDesign:
    """The spot-welding experiment: pulse rate A with weld time B slid on it.

    Runs are in standard order of the 18-run array.  Weld time settings
    are 32/36/40 at pulse rate 2 and 18/22/26 at pulse rate 4; the center
    line is ``29 - 7*x_A`` with half-width 4 in terms of coded pulse rate.
    """
    planning = PlanningMatrix.from_rows(tuple(WELDING_FACTOR_NAMES), _WELDING_ROWS)
    factors = (
        FactorSpec("A", QUANTITATIVE, PARENT, ("2", "4"), (2, 4)),
        FactorSpec("B", QUANTITATIVE, SLID, ("low", "median", "high"), parent="A"),
        _three_level("C", (6, 12, 18)),
        _three_level("D", (10, 18, 26)),
        _three_level("E", (15, 20, 25)),
        _three_level("F", (50, 55, 60)),
        _three_level("G", (85, 90, 95)),
        FactorSpec("H", QUANTITATIVE, FREE, ("1/4", "3/8"), (0.25, 0.375)),
    )
    sliding = (
        SlidingSpec("A", "B", {"2": (32, 36, 40), "4": (18, 22, 26)}, center=(29.0, -7.0), half_width=4.0),
    )
    return resolve_settings(planning, factors, sliding)
