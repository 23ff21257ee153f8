"""Synthetic benchmarks for the three modeling strategies.

Ground truths follow the additive family

    E(y) = g1(a) + g2((b - c_B(a)) / r_B)

in *actual* factor units ``a`` (parent) and ``b`` (slid), with an affine
center ``c_B(a) = s + t*a`` and constant half-width ``r_B``.  A sliding
table is *matched* to a surface when, at every parent level, its midpoint
is ``c_B(a)`` and its half-range is ``r_B``; RCRS interactions then vanish.

Every replication draws from its own generator, spawned from the master
seed, so results do not depend on execution order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .coding import code_nem, code_rcrs, code_rsm, rsm_term_set
from .design import (
    PARENT,
    QUANTITATIVE,
    SLID,
    FactorSpec,
    PlanningMatrix,
    SlidingDesign,
    SlidingSpec,
    build_welding_fixture,
    replace_sliding,
    resolve_settings,
)
from .errors import SlideKitError, UnsupportedDegree, ValidationError, ZeroResidualDf
from .linear_model import ols_fit
from .region import Zone, build_region, classify, rcrs_predictor
from .translation import nem_model_from_coefficients, nem_to_rsm, rsm_model_from_fit

MAX_SURFACE_DEGREE = 3
STRATEGIES = ("rcrs", "hybrid_rsm", "direct_rsm")
_SLID_LABELS = {2: ("low", "high"), 3: ("low", "median", "high")}


def _poly(coefs: Sequence[float], x):
    out = np.zeros_like(np.asarray(x, dtype=float))
    for c in reversed(coefs):
        out = out * x + c
    return out


@dataclass(frozen=True)
class AdditiveSurface:
    """``g1(a) + g2((b - (s + t a)) / r)`` with polynomial g1, g2.

    ``g1`` and ``g2`` are coefficient lists in ascending powers.
    """

    g1: tuple[float, ...] = (0.0,)
    g2: tuple[float, ...] = (0.0,)
    center: tuple[float, float] = (0.0, 0.0)
    half_width: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "g1", tuple(float(c) for c in self.g1) or (0.0,))
        object.__setattr__(self, "g2", tuple(float(c) for c in self.g2) or (0.0,))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.half_width > 0:
            raise ValidationError(f"surface half-width must be positive, got {self.half_width}")
        for name in ("g1", "g2"):
            if len(getattr(self, name)) - 1 > MAX_SURFACE_DEGREE:
                raise UnsupportedDegree(f"{name} degree exceeds {MAX_SURFACE_DEGREE}")

    def c_b(self, a):
        s, t = self.center
        return s + t * np.asarray(a, dtype=float)

    def z(self, a, b):
        return (np.asarray(b, dtype=float) - self.c_b(a)) / self.half_width

    def __call__(self, a, b):
        return _poly(self.g1, np.asarray(a, dtype=float)) + _poly(self.g2, self.z(a, b))


def eval_surface(surface, a, b):
    return surface(a, b)


@dataclass(frozen=True)
class PolynomialSurface:
    """``sum c_ij a^i b^j`` in actual units; keys are ``(i, j)`` pairs."""

    coefficients: Mapping[tuple[int, int], float]

    def __call__(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        out = np.zeros(np.broadcast(a, b).shape)
        for (i, j), c in self.coefficients.items():
            out = out + c * a**i * b**j
        return out


# --------------------------------------------------------------------------
# design builders
# --------------------------------------------------------------------------


def _label(v: float) -> str:
    return f"{v:g}"


def grid_design(
    parent_settings: Sequence[float],
    table: Mapping[str, Sequence[float]],
    replicates: int = 1,
    center: tuple[float, float] | None = None,
    half_width: float | None = None,
) -> SlidingDesign:
    """Full parent x slid factorial, replicated, with parent ``A`` and slid ``B``.

    ``table`` is keyed by parent label (``f"{setting:g}"``).
    """
    settings = tuple(float(v) for v in parent_settings)
    labels = tuple(_label(v) for v in settings)
    n_slid = {len(v) for v in table.values()}
    if len(n_slid) != 1 or next(iter(n_slid)) not in _SLID_LABELS:
        raise ValidationError("every parent level needs the same number (2 or 3) of slid settings")
    slid_labels = _SLID_LABELS[n_slid.pop()]
    rows = [(p, s) for _ in range(replicates) for p in labels for s in slid_labels]
    planning = PlanningMatrix.from_rows(("A", "B"), rows)
    factors = (
        FactorSpec("A", QUANTITATIVE, PARENT, labels, settings),
        FactorSpec("B", QUANTITATIVE, SLID, slid_labels, parent="A"),
    )
    spec = SlidingSpec("A", "B", table, center=center, half_width=half_width)
    return resolve_settings(planning, factors, (spec,))


def matched_table(
    surface: AdditiveSurface,
    parent_settings: Sequence[float],
    n_slid: int = 3,
    center_shift: Mapping[str, float] | None = None,
) -> dict[str, tuple[float, ...]]:
    """Sliding table centered on ``c_B`` with half-range ``r_B``.

    ``center_shift`` moves the center at selected parent labels, which
    mis-specifies the sliding and lets interactions survive.
    """
    shift = dict(center_shift or {})
    offsets = np.linspace(-1.0, 1.0, n_slid) * surface.half_width
    out = {}
    for a in parent_settings:
        lab = _label(float(a))
        c = float(surface.c_b(a)) + shift.pop(lab, 0.0)
        out[lab] = tuple(float(c + o) for o in offsets)
    if shift:
        raise ValidationError(f"center shift names unknown parent levels {sorted(shift)}")
    return out


def _geometry_for(surface: AdditiveSurface, parent_settings: Sequence[float]) -> tuple[tuple[float, float], float]:
    # center as a function of the coded parent value
    lo, hi = min(parent_settings), max(parent_settings)
    s, t = surface.center
    return (s + t * (lo + hi) / 2, t * (hi - lo) / 2), surface.half_width


def matched_design(
    surface: AdditiveSurface,
    parent_settings: Sequence[float] = (-1.0, 0.0, 1.0),
    n_slid: int = 3,
    replicates: int = 1,
    center_shift: Mapping[str, float] | None = None,
) -> SlidingDesign:
    """Grid design whose sliding follows the surface's center and half-width.

    Unshifted designs carry the matching ``(s, t, r)`` geometry annotation.
    """
    table = matched_table(surface, parent_settings, n_slid, center_shift)
    if center_shift:
        return grid_design(parent_settings, table, replicates)
    center, r = _geometry_for(surface, parent_settings)
    return grid_design(parent_settings, table, replicates, center=center, half_width=r)


def welding_matched(surface: AdditiveSurface, center_shift: Mapping[str, float] | None = None) -> SlidingDesign:
    """The welding plan with its weld-time table replaced by a matched one."""
    base = build_welding_fixture()
    parent, _, _ = base.pair()
    table = matched_table(surface, parent.settings, 3, None)
    table = {lab: table[_label(v)] for lab, v in zip(parent.levels, parent.settings)}
    for lab, delta in (center_shift or {}).items():
        if lab not in table:
            raise ValidationError(f"center shift names unknown parent level {lab!r}")
        table[lab] = tuple(v + delta for v in table[lab])
    if center_shift:
        spec = SlidingSpec("A", "B", table)
    else:
        center, r = _geometry_for(surface, parent.settings)
        spec = SlidingSpec("A", "B", table, center=center, half_width=r)
    return replace_sliding(base, spec)


def surface_response(surface, design: SlidingDesign) -> np.ndarray:
    parent, slid, _ = design.pair()
    return np.asarray(surface(design.actual_array(parent.name), design.actual_array(slid.name)), dtype=float)


# --------------------------------------------------------------------------
# interaction elimination
# --------------------------------------------------------------------------


def is_matched(surface: AdditiveSurface, design: SlidingDesign, tol: float = 1e-9) -> bool:
    parent, _, spec = design.pair()
    for label, a in zip(parent.levels, parent.settings):
        scale = max(1.0, abs(spec.midpoint(label)))
        if abs(spec.midpoint(label) - float(surface.c_b(a))) > tol * scale:
            return False
        if abs(spec.half_range(label) - surface.half_width) > tol * scale:
            return False
    return True


@dataclass(frozen=True)
class EliminationReport:
    matched: bool
    interactions: Mapping[str, float]
    tol: float

    @property
    def max_interaction(self) -> float:
        return max((abs(v) for v in self.interactions.values()), default=0.0)

    @property
    def eliminated(self) -> bool:
        return self.max_interaction <= self.tol

    @property
    def passed(self) -> bool:
        """Matched designs must eliminate the interaction; others are only reported."""
        return self.eliminated or not self.matched


def _fit_quiet(matrix, y):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroResidualDf)
        return ols_fit(matrix, y)


def elimination_check(surface: AdditiveSurface, design: SlidingDesign, tol: float = 1e-9) -> EliminationReport:
    """Fit the full RCRS model to noiseless surface data and collect interactions."""
    fit = _fit_quiet(code_rcrs(design, interactions="full"), surface_response(surface, design))
    inter = {t: fit.coefficient(t) for t in fit.terms if "*" in t}
    return EliminationReport(is_matched(surface, design), inter, tol)


@dataclass(frozen=True)
class ParityReport:
    rcrs_no_interaction: float
    rsm_with_interaction: float
    rsm_without_interaction: float


def r_squared_parity(surface, design: SlidingDesign) -> ParityReport:
    """R^2 of RCRS main effects vs. second-order RSM with and without ``x_A*x_B``."""
    parent, slid, _ = design.pair()
    y = surface_response(surface, design)
    rcrs = _fit_quiet(code_rcrs(design, interactions="none"), y)
    terms = rsm_term_set(design, "second_order")
    with_int = _fit_quiet(code_rsm(design, terms), y)
    product = ((parent.name, 1), (slid.name, 1))
    without = _fit_quiet(code_rsm(design, [m for m in terms if m != product]), y)
    return ParityReport(rcrs.r_squared, with_int.r_squared, without.r_squared)


# --------------------------------------------------------------------------
# strategy comparison
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StrategySummary:
    rmse: tuple[float, ...]
    rmse_extrapolation: tuple[float, ...]
    r_squared: tuple[float, ...]
    max_interaction: tuple[float, ...]
    n_failed: int = 0

    @staticmethod
    def _mean(v):
        v = [x for x in v if math.isfinite(x)]
        return float(np.mean(v)) if v else math.nan

    @property
    def rmse_mean(self) -> float:
        return self._mean(self.rmse)

    @property
    def rmse_se(self) -> float:
        v = [x for x in self.rmse if math.isfinite(x)]
        if len(v) < 2:
            return math.nan
        return float(np.std(v, ddof=1) / math.sqrt(len(v)))

    def to_dict(self) -> dict:
        return _clean(
            {
                "rmse_mean": self.rmse_mean,
                "rmse_se": self.rmse_se,
                "rmse_extrapolation_mean": self._mean(self.rmse_extrapolation),
                "r_squared_mean": self._mean(self.r_squared),
                "max_interaction_mean": self._mean(self.max_interaction),
                "n_failed": self.n_failed,
                "rmse": list(self.rmse),
            }
        )


@dataclass(frozen=True)
class SimReport:
    seed: int
    reps: int
    noise_sd: float
    grid_n: int
    n_grid_inside: int
    n_grid_band: int
    strategies: Mapping[str, StrategySummary] = field(default_factory=dict)
    config: Mapping = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "reps": self.reps,
            "noise_sd": self.noise_sd,
            "grid_n": self.grid_n,
            "n_grid_inside": self.n_grid_inside,
            "n_grid_band": self.n_grid_band,
            "strategies": {k: v.to_dict() for k, v in self.strategies.items()},
            "config": dict(self.config),
        }


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _rmse(pred: np.ndarray, truth: np.ndarray) -> float:
    ok = np.isfinite(pred)
    if not ok.any():
        return math.nan
    return float(np.sqrt(np.mean((pred[ok] - truth[ok]) ** 2)))


def _rsm_max_interaction(model) -> float:
    return max((abs(v) for (i, j), v in model.coefficients.items() if i and j), default=0.0)


def evaluation_grid(design: SlidingDesign, grid_n: int):
    """Coded grid over the modeling square, split into R_E and the band."""
    if grid_n < 2:
        raise ValidationError("grid_n must be at least 2")
    region = build_region(design)
    g = np.linspace(-1.0, 1.0, grid_n)
    xa, xb = np.meshgrid(g, g, indexing="ij")
    xa, xb = xa.ravel(), xb.ravel()
    zones = np.array([classify(region, a, b) for a, b in zip(xa, xb)])
    inside = zones == Zone.INSIDE_RE
    band = zones == Zone.EXTRAPOLATION_BAND
    return region, xa, xb, inside, band


def run_comparison(
    surface,
    design: SlidingDesign,
    noise_sd: float,
    reps: int,
    seed: int,
    grid_n: int = 21,
    rsm_terms="saturated",
    rcrs_interactions: str = "full",
) -> SimReport:
    """Monte Carlo comparison of RCRS, hybrid RSM and direct RSM predictions.

    RMSE is measured against the true mean on grid points inside the
    experimental region (extrapolation-band RMSE is reported separately).
    RCRS predicts off the parent levels only when the sliding table
    carries ``(s, t, r)`` geometry.
    """
    if reps < 1:
        raise ValidationError("reps must be at least 1")
    if noise_sd < 0:
        raise ValidationError("noise_sd must be non-negative")
    parent, slid, _ = design.pair()
    region, xa, xb, inside, band = evaluation_grid(design, grid_n)
    a_act, b_act = region.to_actual(xa, xb)
    truth = np.asarray(surface(a_act, b_act), dtype=float)
    mean_y = surface_response(surface, design)
    rcrs_matrix = code_rcrs(design, interactions=rcrs_interactions)
    rsm_matrix = code_rsm(design, rsm_terms)
    nem_matrix = code_nem(design)

    streams = np.random.SeedSequence(seed).spawn(reps)
    acc = {k: {"rmse": [], "band": [], "r2": [], "inter": [], "failed": 0} for k in STRATEGIES}

    def record(name, pred, r2, inter):
        acc[name]["rmse"].append(_rmse(pred[inside], truth[inside]))
        acc[name]["band"].append(_rmse(pred[band], truth[band]) if band.any() else math.nan)
        acc[name]["r2"].append(r2)
        acc[name]["inter"].append(inter)

    for ss in streams:
        rng = np.random.default_rng(ss)
        y = mean_y + noise_sd * rng.standard_normal(design.runs)
        try:
            fit = _fit_quiet(rcrs_matrix, y)
            pred = rcrs_predictor(fit, design)(xa, xb)
            inter = max((abs(c) for t, c in fit.as_dict().items() if "*" in t), default=0.0)
            record("rcrs", pred, fit.r_squared, inter)
        except (SlideKitError, np.linalg.LinAlgError):
            acc["rcrs"]["failed"] += 1
        try:
            nem_fit = _fit_quiet(nem_matrix, y)
            model = nem_to_rsm(nem_model_from_coefficients(design, nem_fit.as_dict()), parent.name, slid.name)
            record("hybrid_rsm", model.evaluate(xa, xb), nem_fit.r_squared, _rsm_max_interaction(model))
        except (SlideKitError, np.linalg.LinAlgError):
            acc["hybrid_rsm"]["failed"] += 1
        try:
            fit = _fit_quiet(rsm_matrix, y)
            model = rsm_model_from_fit(fit, parent.name, slid.name)
            record("direct_rsm", model.evaluate(xa, xb), fit.r_squared, _rsm_max_interaction(model))
        except (SlideKitError, np.linalg.LinAlgError):
            acc["direct_rsm"]["failed"] += 1

    strategies = {
        k: StrategySummary(tuple(v["rmse"]), tuple(v["band"]), tuple(v["r2"]), tuple(v["inter"]), v["failed"])
        for k, v in acc.items()
    }
    return SimReport(
        seed=int(seed),
        reps=int(reps),
        noise_sd=float(noise_sd),
        grid_n=int(grid_n),
        n_grid_inside=int(inside.sum()),
        n_grid_band=int(band.sum()),
        strategies=strategies,
    )


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def surface_from_config(cfg: Mapping):
    kind = cfg.get("type", "additive")
    if kind == "additive":
        return AdditiveSurface(
            g1=tuple(cfg.get("g1", (0.0,))),
            g2=tuple(cfg.get("g2", (0.0,))),
            center=tuple(cfg.get("center", (0.0, 0.0))),
            half_width=float(cfg.get("half_width", 1.0)),
        )
    if kind == "polynomial":
        return PolynomialSurface({(int(c["i"]), int(c["j"])): float(c["value"]) for c in cfg["coefficients"]})
    raise ValidationError(f"unknown surface type {kind!r}")


def design_from_config(cfg, surface) -> SlidingDesign:
    if cfg is None or cfg == "welding":
        return build_welding_fixture()
    if not isinstance(cfg, Mapping):
        raise ValidationError(f"cannot interpret design config {cfg!r}")
    shift = cfg.get("center_shift")
    if cfg.get("base") == "welding":
        if cfg.get("table", "fixture") == "fixture":
            return build_welding_fixture()
        return welding_matched(surface, shift)
    settings = cfg.get("parent_settings", (-1.0, 0.0, 1.0))
    table = cfg.get("table", "matched")
    if table == "matched":
        if not isinstance(surface, AdditiveSurface):
            raise ValidationError("a matched table needs an additive surface")
        return matched_design(surface, settings, int(cfg.get("slid_levels", 3)), int(cfg.get("replicates", 1)), shift)
    geometry = cfg.get("geometry") or {}
    return grid_design(
        settings,
        table,
        int(cfg.get("replicates", 1)),
        center=tuple(geometry["center"]) if "center" in geometry else None,
        half_width=geometry.get("half_width"),
    )


def comparison_from_config(config: Mapping, seed: int | None = None, reps: int | None = None) -> SimReport:
    """Run :func:`run_comparison` from a JSON-style configuration mapping."""
    try:
        surface = surface_from_config(config["surface"])
    except KeyError as exc:
        raise ValidationError(f"simulation config lacks {exc}") from exc
    design = design_from_config(config.get("design"), surface)
    seed = int(config.get("seed", 0) if seed is None else seed)
    reps = int(config.get("reps", 100) if reps is None else reps)
    report = run_comparison(
        surface,
        design,
        noise_sd=float(config.get("noise_sd", 1.0)),
        reps=reps,
        seed=seed,
        grid_n=int(config.get("grid_n", 21)),
        rsm_terms=config.get("rsm_terms", "saturated"),
        rcrs_interactions=config.get("rcrs_interactions", "full"),
    )
    return SimReport(**{**report.__dict__, "config": dict(config)})
