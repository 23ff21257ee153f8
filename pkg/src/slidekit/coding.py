"""Model matrices under the three codings of a sliding-level design.

* RCRS (re-centering and re-scaling): the slid factor is coded from its
  symbolic level as if it did not slide.
* NEM (nested effects): the slid factor's contrasts are defined separately
  within each parent level and are zero elsewhere.
* RSM (response surface): every quantitative factor is proportionally
  coded over its full range of actual settings, and the model is a
  polynomial in the coded values.

Free factors (C, D, ... in the welding experiment) may be appended as
linear-quadratic covariates under any scheme.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

from .design import FactorSpec, SlidingDesign
from .errors import (
    DegenerateRange,
    OutOfRange,
    UnsupportedDegree,
    UnsupportedLevelCount,
    ValidationError,
)

RCRS, NEM, RSM = "RCRS", "NEM", "RSM"
INTERCEPT = "Intercept"
MAX_DEGREE = 3

_LINEAR = {2: (-1, 1), 3: (-1, 0, 1)}
_QUADRATIC = {3: (1, -2, 1)}


@dataclass(frozen=True, eq=False)
class ModelMatrix:
    """Runs x terms coded matrix tagged with its coding scheme."""

    scheme: str
    terms: tuple[str, ...]
    values: np.ndarray
    intercept_included: bool = True

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise ValidationError("model matrix values must be two-dimensional")
        terms = tuple(self.terms)
        if values.shape[1] != len(terms):
            raise ValidationError(f"{values.shape[1]} columns but {len(terms)} term labels")
        if len(set(terms)) != len(terms):
            dup = sorted({t for t in terms if terms.count(t) > 1})
            raise ValidationError(f"duplicate term labels: {dup}")
        if not np.all(np.isfinite(values)):
            raise ValidationError("model matrix contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "terms", terms)

    @property
    def n_runs(self) -> int:
        return self.values.shape[0]

    def column(self, term: str) -> np.ndarray:
        try:
            return self.values[:, self.terms.index(term)]
        except ValueError:
            raise ValidationError(f"model matrix has no term {term!r}") from None

    def select(self, terms: Sequence[str]) -> "ModelMatrix":
        idx = [self.terms.index(t) for t in terms]
        return ModelMatrix(self.scheme, tuple(terms), self.values[:, idx], INTERCEPT in terms)

    def drop_intercept(self) -> "ModelMatrix":
        return self.select([t for t in self.terms if t != INTERCEPT])

    def append(self, terms: Sequence[str], columns) -> "ModelMatrix":
        cols = np.asarray(columns, dtype=float).reshape(self.n_runs, -1)
        return ModelMatrix(
            self.scheme, self.terms + tuple(terms), np.hstack([self.values, cols]), self.intercept_included
        )


# --------------------------------------------------------------------------
# primitive codings
# --------------------------------------------------------------------------


def lq_contrasts(n_levels: int, level_index: int) -> tuple[int, int | None]:
    """Linear and quadratic contrast values of one level.

    Two levels code as -1, +1; three levels as (-1, 0, 1) linear and
    (1, -2, 1) quadratic.  The quadratic entry is ``None`` for two levels.
    """
    if n_levels not in _LINEAR:
        raise UnsupportedLevelCount(f"linear-quadratic contrasts need 2 or 3 levels, got {n_levels}")
    if not 0 <= level_index < n_levels:
        raise ValidationError(f"level index {level_index} out of range for {n_levels} levels")
    quad = _QUADRATIC.get(n_levels)
    return _LINEAR[n_levels][level_index], (quad[level_index] if quad else None)


def slid_contrasts(n_levels: int, level_index: int) -> tuple[int, int | None]:
    """Contrasts for the conditional levels of a slid factor.

    Identical to :func:`lq_contrasts` except that a two-level slid factor
    codes its conditional low/high levels as (+1, -1).
    """
    lin, quad = lq_contrasts(n_levels, level_index)
    if n_levels == 2:
        lin = -lin
    return lin, quad


def _is_exact(x) -> bool:
    return isinstance(x, Rational)


def proportional_code(settings: Iterable, value):
    """Code ``value`` so the smallest setting maps to -1 and the largest to +1.

    Exact rational output when every input is an ``int`` or ``Fraction``.
    """
    settings = list(settings)
    if not settings:
        raise DegenerateRange("no settings to code against")
    lo, hi = min(settings), max(settings)
    if not hi > lo:
        raise DegenerateRange(f"cannot code a factor whose settings span a single value ({lo})")
    slack = 1e-12 * (hi - lo) if not _is_exact(value) else 0
    if value < lo - slack or value > hi + slack:
        raise OutOfRange(f"value {value} outside the setting range [{lo}, {hi}]")
    if _is_exact(value) and all(_is_exact(s) for s in settings):
        return Fraction(-1) + Fraction(2) * (Fraction(value) - lo) / (Fraction(hi) - lo)
    return -1.0 + 2.0 * (float(value) - lo) / (float(hi) - lo)


@dataclass(frozen=True)
class Coder:
    """Affine map between actual settings and coded [-1, 1] values."""

    low: float
    high: float

    @classmethod
    def from_values(cls, values) -> "Coder":
        values = np.asarray(values, dtype=float)
        lo, hi = float(values.min()), float(values.max())
        if not hi > lo:
            raise DegenerateRange(f"cannot code a factor whose settings span a single value ({lo})")
        return cls(lo, hi)

    def to_coded(self, x):
        return -1.0 + 2.0 * (np.asarray(x, dtype=float) - self.low) / (self.high - self.low)

    def to_actual(self, c):
        return self.low + (np.asarray(c, dtype=float) + 1.0) * 0.5 * (self.high - self.low)


def coder_for(design: SlidingDesign, name: str) -> Coder:
    """Global proportional coder for a quantitative factor of ``design``."""
    return Coder.from_values(design.actual_array(name))


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _lq_columns(f: FactorSpec, idx: np.ndarray, contrasts=lq_contrasts):
    if f.n_levels not in _LINEAR:
        raise UnsupportedLevelCount(
            f"factor {f.name!r} has {f.n_levels} levels; only 2 or 3 are supported"
        )
    table = [contrasts(f.n_levels, i) for i in range(f.n_levels)]
    cols = {f"{f.name}_l": np.array([table[i][0] for i in idx], dtype=float)}
    if f.n_levels == 3:
        cols[f"{f.name}_q"] = np.array([table[i][1] for i in idx], dtype=float)
    return cols


def covariate_columns(design: SlidingDesign, mode: str = "none") -> dict[str, np.ndarray]:
    """Contrast columns for the free (non-sliding, non-parent) factors.

    ``mode`` is ``"none"``, ``"linear"`` (linear contrasts only) or
    ``"lq"`` (linear and quadratic).
    """
    if mode not in ("none", "linear", "lq"):
        raise ValidationError(f"covariates must be none, linear or lq, got {mode!r}")
    out: dict[str, np.ndarray] = {}
    if mode == "none":
        return out
    for f in design.free_factors():
        cols = _lq_columns(f, design.level_indices(f.name))
        if mode == "linear":
            cols = {k: v for k, v in cols.items() if k.endswith("_l")}
        out.update(cols)
    return out


def _assemble(scheme, columns: dict[str, np.ndarray], runs: int, intercept: bool, covariates: dict) -> ModelMatrix:
    terms, cols = [], []
    if intercept:
        terms.append(INTERCEPT)
        cols.append(np.ones(runs))
    for k, v in {**columns, **covariates}.items():
        terms.append(k)
        cols.append(v)
    values = np.column_stack(cols) if cols else np.empty((runs, 0))
    return ModelMatrix(scheme, tuple(terms), values, intercept)


def _slid_pair(design: SlidingDesign):
    parent, slid, spec = design.pair()
    if slid.n_levels not in _LINEAR:
        raise UnsupportedLevelCount(f"slid factor {slid.name!r} has {slid.n_levels} levels; need 2 or 3")
    return parent, slid, spec


# --------------------------------------------------------------------------
# RCRS
# --------------------------------------------------------------------------


def code_rcrs(
    design: SlidingDesign,
    interactions: str = "full",
    covariates: str = "none",
    intercept: bool = True,
) -> ModelMatrix:
    """Re-centering and re-scaling coding.

    The slid factor is coded from its symbolic level; actual settings are
    ignored.  ``interactions`` selects the parent-by-slid products:
    ``"full"`` (every parent contrast times every slid contrast),
    ``"linear"`` (linear-by-linear only) or ``"none"``.
    """
    if interactions not in ("full", "linear", "none"):
        raise ValidationError(f"interactions must be full, linear or none, got {interactions!r}")
    parent, slid, _ = _slid_pair(design)
    a_cols = _lq_columns(parent, design.level_indices(parent.name))
    b_cols = _lq_columns(slid, design.level_indices(slid.name), contrasts=slid_contrasts)
    cols = {**a_cols, **b_cols}
    if interactions != "none":
        for ak, av in a_cols.items():
            for bk, bv in b_cols.items():
                if interactions == "linear" and not (ak.endswith("_l") and bk.endswith("_l")):
                    continue
                cols[f"{ak}*{bk}"] = av * bv
    return _assemble(RCRS, cols, design.runs, intercept, covariate_columns(design, covariates))


# --------------------------------------------------------------------------
# NEM
# --------------------------------------------------------------------------


def nested_label(slid: str, kind: str, parent: str, level_number: int) -> str:
    return f"{slid}_{kind}|{parent}_{level_number}"


def _conditional_columns(design: SlidingDesign, parent: FactorSpec, slid: FactorSpec) -> dict[str, np.ndarray]:
    p_idx = design.level_indices(parent.name)
    b_cols = _lq_columns(slid, design.level_indices(slid.name), contrasts=slid_contrasts)
    cols = {}
    for i in range(parent.n_levels):
        on = (p_idx == i).astype(float)
        for bk, bv in b_cols.items():
            kind = bk.rsplit("_", 1)[1]
            cols[nested_label(slid.name, kind, parent.name, i + 1)] = bv * on + 0.0
    return cols


def code_nem(design: SlidingDesign, covariates: str = "none", intercept: bool = True) -> ModelMatrix:
    """Nested-effects coding for a quantitative parent.

    Parent main effects use linear(-quadratic) contrasts; the slid
    factor's contrasts are repeated once per parent level and zeroed on
    runs at other parent levels.
    """
    parent, slid, _ = _slid_pair(design)
    if not parent.is_quantitative:
        raise ValidationError(f"parent {parent.name!r} is qualitative; use code_nem_qualitative")
    cols = _lq_columns(parent, design.level_indices(parent.name))
    cols.update(_conditional_columns(design, parent, slid))
    return _assemble(NEM, cols, design.runs, intercept, covariate_columns(design, covariates))


def code_nem_qualitative(
    design: SlidingDesign,
    baseline_level: str | None = None,
    covariates: str = "none",
    intercept: bool = True,
) -> ModelMatrix:
    """Nested-effects coding with qualitative parent contrasts.

    For each non-baseline level ``j`` the column ``A_{b,j}`` is +1 on runs
    at the baseline ``b``, -1 on runs at ``j`` and 0 elsewhere.  Under a
    balanced design its least-squares coefficient is half the difference
    between the level-``b`` and level-``j`` mean responses.
    """
    parent, slid, _ = _slid_pair(design)
    if parent.n_levels < 2:
        raise ValidationError(f"parent {parent.name!r} needs at least two levels")
    base = parent.levels[0] if baseline_level is None else str(baseline_level)
    b = parent.level_index(base)
    p_idx = design.level_indices(parent.name)
    cols = {}
    for j in range(parent.n_levels):
        if j == b:
            continue
        cols[f"{parent.name}_{{{b + 1},{j + 1}}}"] = (p_idx == b).astype(float) - (p_idx == j).astype(float)
    cols.update(_conditional_columns(design, parent, slid))
    return _assemble(NEM, cols, design.runs, intercept, covariate_columns(design, covariates))


# --------------------------------------------------------------------------
# RSM
# --------------------------------------------------------------------------

Monomial = tuple[tuple[str, int], ...]

_TERM_RE = re.compile(r"^x_(?P<name>.+?)(?:\^(?P<power>\d+))?$")


def monomial_label(mono: Monomial) -> str:
    if not mono:
        return INTERCEPT
    return "*".join(f"x_{n}" if p == 1 else f"x_{n}^{p}" for n, p in mono)


def parse_monomial(term, order: Sequence[str]) -> Monomial:
    """Canonical monomial from a label (``"x_A*x_B^2"``) or a name->power map."""
    if isinstance(term, str):
        powers: dict[str, int] = {}
        for part in term.split("*"):
            m = _TERM_RE.match(part.strip())
            if not m:
                raise ValidationError(f"cannot parse term {term!r}")
            name = m["name"]
            powers[name] = powers.get(name, 0) + int(m["power"] or 1)
    elif isinstance(term, Mapping):
        powers = {str(k): int(v) for k, v in term.items()}
    else:
        powers = {str(k): int(v) for k, v in term}
    for name, p in powers.items():
        if name not in order:
            raise ValidationError(f"term {term!r} refers to unknown factor {name!r}")
        if p < 0:
            raise UnsupportedDegree(f"negative exponent in term {term!r}")
        if p > MAX_DEGREE:
            raise UnsupportedDegree(f"exponent {p} on {name!r} exceeds the supported maximum {MAX_DEGREE}")
    return tuple((n, powers[n]) for n in order if powers.get(n, 0) > 0)


def rsm_term_set(design: SlidingDesign, kind: str = "saturated") -> list[Monomial]:
    """Default monomials in the parent and slid factor.

    ``"saturated"`` takes every ``x_A^i x_B^j`` with ``i`` below the number
    of parent levels and ``j`` below the number of slid levels (the same
    capacity as the nested-effects model).  ``"second_order"`` keeps the
    subset of total degree at most two.
    """
    parent, slid, _ = design.pair()
    if kind not in ("saturated", "second_order"):
        raise ValidationError(f"unknown term set {kind!r}")
    pairs = [
        (i, j)
        for i in range(parent.n_levels)
        for j in range(slid.n_levels)
        if (i, j) != (0, 0) and (kind == "saturated" or i + j <= 2)
    ]
    # main effects of the parent, then of the slid factor, then products
    pairs.sort(key=lambda ij: (ij[0] > 0 and ij[1] > 0, ij[0] == 0, ij[1], ij[0]))
    return [tuple((n, p) for n, p in ((parent.name, i), (slid.name, j)) if p) for i, j in pairs]


def code_rsm(
    design: SlidingDesign,
    term_set=None,
    covariates: str = "none",
    intercept: bool = True,
) -> ModelMatrix:
    """Polynomial model matrix in proportionally coded factors.

    ``term_set`` is a list of monomials (labels such as ``"x_A*x_B^2"`` or
    name->power mappings), or one of the presets ``"saturated"`` /
    ``"second_order"``.  The default is the saturated set, which for the
    welding design is ``x_A, x_B, x_B^2, x_A*x_B, x_A*x_B^2``.
    """
    order = [f.name for f in design.factors]
    if term_set is None or isinstance(term_set, str):
        monos = rsm_term_set(design, term_set or "saturated")
    else:
        monos = [parse_monomial(t, order) for t in term_set]
    coded: dict[str, np.ndarray] = {}
    cols: dict[str, np.ndarray] = {}
    for mono in monos:
        if not mono:
            raise ValidationError("the constant term is controlled by the intercept flag")
        col = np.ones(design.runs)
        for name, p in mono:
            f = design.factor(name)
            if not f.is_quantitative:
                raise ValidationError(f"RSM terms need quantitative factors; {name!r} is qualitative")
            if name not in coded:
                coded[name] = coder_for(design, name).to_coded(design.actual_array(name))
            col = col * coded[name] ** p
        label = monomial_label(mono)
        if label in cols:
            raise ValidationError(f"duplicate term {label!r} in term set")
        cols[label] = col
    return _assemble(RSM, cols, design.runs, intercept, covariate_columns(design, covariates))


def code(design: SlidingDesign, scheme: str, covariates: str = "none", intercept: bool = True, **kw) -> ModelMatrix:
    """Dispatch on a scheme name (case-insensitive)."""
    s = scheme.upper()
    if s == RCRS:
        return code_rcrs(design, covariates=covariates, intercept=intercept, **kw)
    if s == NEM:
        parent, _, _ = design.pair()
        if parent.is_quantitative:
            return code_nem(design, covariates=covariates, intercept=intercept)
        return code_nem_qualitative(design, covariates=covariates, intercept=intercept, **kw)
    if s == RSM:
        return code_rsm(design, covariates=covariates, intercept=intercept, **kw)
    raise ValidationError(f"unknown scheme {scheme!r}; expected rcrs, nem or rsm")
