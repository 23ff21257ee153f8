"""Experimental region geometry and prediction.

The adequate experimental region ``R_E`` is drawn in coded ``(x_A, x_B)``
space: at each parent level its cross-section is the coded range of slid
settings, and between adjacent parent levels the boundaries are straight
lines.  The modeling region ``R_M`` is the square ``[-1, 1]^2``.
Predictions inside ``R_M`` but outside ``R_E`` are extrapolations; they are
flagged, not refused.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .coding import INTERCEPT, Coder, coder_for
from .design import SlidingDesign, SlidingSpec, replace_sliding
from .errors import DegenerateRange, OffDesignParentLevel, ValidationError
from .linear_model import FitResult
from .translation import NemModel, RsmModel

BOUNDARY_TOL = 1e-9


class Zone(str, enum.Enum):
    INSIDE_RE = "InsideRE"
    EXTRAPOLATION_BAND = "ExtrapolationBand"
    OUTSIDE_RM = "OutsideRM"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Region:
    vertices: tuple[tuple[float, float], ...]
    parent: str
    slid: str
    parent_coder: Coder
    slid_coder: Coder
    rm_cube: tuple[tuple[float, float], tuple[float, float]] = ((-1.0, 1.0), (-1.0, 1.0))

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def cube_fraction(self) -> float:
        """Share of the modeling square covered by the experimental region."""
        (a0, a1), (b0, b1) = self.rm_cube
        return self.area / ((a1 - a0) * (b1 - b0))

    def to_coded(self, a, b):
        return self.parent_coder.to_coded(a), self.slid_coder.to_coded(b)

    def to_actual(self, x_a, x_b):
        return self.parent_coder.to_actual(x_a), self.slid_coder.to_actual(x_b)


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def build_region(design: SlidingDesign, parent: str | None = None, slid: str | None = None) -> Region:
    """Polygon of the experimental region in coded units.

    Without explicit factor names the design's parent/slid pair is used;
    for a design without sliding any two quantitative factors may be named.
    """
    if parent is None or slid is None:
        p, s, _ = design.pair()
        parent, slid = parent or p.name, slid or s.name
    a_coder, b_coder = coder_for(design, parent), coder_for(design, slid)
    xa = a_coder.to_coded(design.actual_array(parent))
    xb = b_coder.to_coded(design.actual_array(slid))
    levels = np.unique(xa)
    if levels.size < 2:
        raise ValidationError(f"region needs at least two levels of {parent!r}")
    lower = [(float(x), float(xb[xa == x].min())) for x in levels]
    upper = [(float(x), float(xb[xa == x].max())) for x in levels[::-1]]
    verts = []
    for v in lower + upper:
        if not verts or (abs(v[0] - verts[-1][0]) > 0 or abs(v[1] - verts[-1][1]) > 0):
            verts.append(v)
    if len(verts) > 1 and verts[0] == verts[-1]:
        verts.pop()
    return Region(tuple(verts), parent, slid, a_coder, b_coder)


def _on_segment(p, a, b, tol) -> bool:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return (px - ax) ** 2 + (py - ay) ** 2 <= tol * tol
    u = min(1.0, max(0.0, ((px - ax) * dx + (py - ay) * dy) / seg2))
    cx, cy = ax + u * dx, ay + u * dy
    return (px - cx) ** 2 + (py - cy) ** 2 <= tol * tol


def point_in_polygon(point, vertices, tol: float = BOUNDARY_TOL) -> bool:
    """Crossing-number test; points within ``tol`` of an edge count as inside."""
    n = len(vertices)
    for k in range(n):
        if _on_segment(point, vertices[k], vertices[(k + 1) % n], tol):
            return True
    px, py = point
    inside = False
    for k in range(n):
        (x0, y0), (x1, y1) = vertices[k], vertices[(k + 1) % n]
        if (y0 <= py) != (y1 <= py):
            x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < x_cross:
                inside = not inside
    return inside


def classify(region: Region, x_a: float, x_b: float) -> Zone:
    """Zone of a coded point: inside ``R_E``, in ``R_M`` only, or outside ``R_M``."""
    (a0, a1), (b0, b1) = region.rm_cube
    if not (a0 - BOUNDARY_TOL <= x_a <= a1 + BOUNDARY_TOL and b0 - BOUNDARY_TOL <= x_b <= b1 + BOUNDARY_TOL):
        return Zone.OUTSIDE_RM
    if point_in_polygon((x_a, x_b), region.vertices):
        return Zone.INSIDE_RE
    return Zone.EXTRAPOLATION_BAND


@dataclass(frozen=True)
class Prediction:
    value: float
    zone: Zone


def predict_rsm(model: RsmModel, region: Region, x_a: float, x_b: float) -> Prediction:
    """Evaluate the polynomial at a coded point and report its zone."""
    return Prediction(float(model.evaluate(x_a, x_b)), classify(region, x_a, x_b))


def predict_nem(model: NemModel, x_a: float, x_b: float) -> float:
    """Conditional quadratic at a parent level of the design.

    Raises
    ------
    OffDesignParentLevel
        ``x_a`` is not one of the model's parent levels.  Nested effects
        carry no information between the levels that were run.
    """
    k = model.level_index(x_a)
    if k is None:
        raise OffDesignParentLevel(
            f"x_A = {x_a} is not a parent level of the nested-effects model "
            f"(levels {model.parent_levels}); use an RSM translation to predict there"
        )
    return model.alpha[k] + model.beta[k] * x_b + model.gamma[k] * x_b * x_b


def rcrs_predictor(fit: FitResult, design: SlidingDesign):
    """Vectorized predictor for an RCRS fit at coded ``(x_A, x_B)`` points.

    Contrasts are extended continuously: a coded parent value maps to its
    symbolic position in [-1, 1] and the slid value to
    ``z = (B - center(x_A)) / half_width``; then ``linear = pos`` and
    ``quadratic = 3 pos^2 - 2``.  Off the parent levels this needs the
    sliding geometry; without it those points predict NaN.  Covariate
    terms are held at zero.
    """
    parent, slid, spec = design.pair()
    a_coder, b_coder = coder_for(design, parent.name), coder_for(design, slid.name)
    a_levels = a_coder.to_coded(np.asarray(parent.settings))
    a_pos = np.linspace(-1.0, 1.0, parent.n_levels)
    b_pos = np.linspace(-1.0, 1.0, slid.n_levels)
    coefs = fit.as_dict()
    a, b = parent.name, slid.name

    def predict(x_a, x_b):
        x_a = np.atleast_1d(np.asarray(x_a, dtype=float))
        x_b = np.atleast_1d(np.asarray(x_b, dtype=float))
        x_a, x_b = np.broadcast_arrays(x_a, x_b)
        b_act = b_coder.to_actual(x_b)
        z = np.full(x_a.shape, np.nan)
        if spec.has_geometry:
            s, t = spec.center
            z = (b_act - (s + t * x_a)) / spec.half_width
        else:
            for lev, label in zip(a_levels, parent.levels):
                at = np.abs(x_a - lev) <= 1e-12
                if at.any():
                    z[at] = np.interp(b_act[at], spec.table[label], b_pos)
        pa = np.interp(x_a, a_levels, a_pos)
        basis = {
            f"{a}_l": pa,
            f"{a}_q": 3 * pa**2 - 2,
            f"{b}_l": -z if slid.n_levels == 2 else z,
            f"{b}_q": 3 * z**2 - 2,
        }
        out = np.zeros(x_a.shape)
        for term, c in coefs.items():
            if term == INTERCEPT:
                out = out + c
                continue
            col = np.ones(x_a.shape)
            for part in term.split("*"):
                if part not in basis:
                    col = None
                    break
                col = col * basis[part]
            if col is not None:
                out = out + c * col
        return out

    return predict


@dataclass(frozen=True)
class ProductDiagnostics:
    corr_before: float
    corr_after: float
    cube_fraction_before: float
    cube_fraction_after: float


def _abs_corr(design: SlidingDesign, a: str, b: str) -> float:
    xa = coder_for(design, a).to_coded(design.actual_array(a))
    xb = coder_for(design, b).to_coded(design.actual_array(b))
    return abs(float(np.corrcoef(xa, xb)[0, 1]))


def product_transform(design: SlidingDesign) -> tuple[SlidingDesign, ProductDiagnostics]:
    """Replace slid settings by ``parent setting * slid setting``.

    The transformed region is usually closer to a rectangle, which lowers
    the correlation between the coded parent and slid columns.
    """
    parent, slid, spec = design.pair()
    if not (parent.is_quantitative and slid.is_quantitative):
        raise ValidationError("product transform needs quantitative parent and slid factors")
    table = {
        label: tuple(setting * v for v in spec.table[label])
        for label, setting in zip(parent.levels, parent.settings)
    }
    values = [v for row in table.values() for v in row]
    if max(values) == min(values):
        raise DegenerateRange("transformed slid settings collapse to a single value")
    try:
        new = replace_sliding(design, SlidingSpec(spec.parent, spec.slid, table))
    except ValidationError as exc:
        raise ValidationError(f"product transform yields an invalid sliding table: {exc}") from exc
    diag = ProductDiagnostics(
        corr_before=_abs_corr(design, parent.name, slid.name),
        corr_after=_abs_corr(new, parent.name, slid.name),
        cube_fraction_before=build_region(design).cube_fraction,
        cube_fraction_after=build_region(new).cube_fraction,
    )
    return new, diag
