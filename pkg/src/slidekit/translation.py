"""Coefficient algebra connecting the RCRS, nested-effects and RSM models.

Notation: ``x_A`` is the coded parent factor, ``x_B`` the proportionally
coded slid factor.  An :class:`RsmModel` stores ``lambda_ij`` for the
monomial ``x_A^i * x_B^j``.  A :class:`NemModel` stores, for each parent
level, the conditional quadratic ``alpha + beta*x_B + gamma*x_B^2``.  Both
describe the same surface when ``alpha``, ``beta`` and ``gamma`` are read
as polynomials in ``x_A``::

    alpha(x_A) = l00 + l10 x_A + l20 x_A^2
    beta(x_A)  = l01 + l11 x_A + l21 x_A^2
    gamma(x_A) = l02 + l12 x_A + l22 x_A^2
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .coding import INTERCEPT, coder_for, code_nem, lq_contrasts, slid_contrasts, nested_label
from .design import SlidingDesign
from .errors import DuplicateParentLevel, NumericalError, ValidationError, ZeroResidualDf
from .linear_model import FitResult, ols_fit

_LEVEL_TOL = 1e-12


@dataclass(frozen=True)
class RsmModel:
    """Polynomial surface ``sum lambda_ij x_A^i x_B^j`` in coded units.

    Missing keys are zero.
    """

    coefficients: Mapping[tuple[int, int], float] = field(default_factory=dict)
    parent: str = "A"
    slid: str = "B"

    def __post_init__(self):
        coefs = {}
        for key, v in dict(self.coefficients).items():
            i, j = (int(k) for k in key)
            if i < 0 or j < 0:
                raise ValidationError(f"negative exponent in RSM key {key}")
            v = float(v)
            if not math.isfinite(v):
                raise ValidationError(f"non-finite RSM coefficient at {key}")
            coefs[(i, j)] = v
        object.__setattr__(self, "coefficients", dict(sorted(coefs.items(), key=lambda kv: (kv[0][1], kv[0][0]))))

    def get(self, i: int, j: int) -> float:
        return self.coefficients.get((i, j), 0.0)

    def evaluate(self, x_a, x_b):
        x_a = np.asarray(x_a, dtype=float)
        x_b = np.asarray(x_b, dtype=float)
        out = np.zeros(np.broadcast(x_a, x_b).shape)
        for (i, j), lam in self.coefficients.items():
            out = out + lam * x_a**i * x_b**j
        return out if out.ndim else float(out)

    def label(self, i: int, j: int) -> str:
        parts = [f"x_{n}" if p == 1 else f"x_{n}^{p}" for n, p in ((self.parent, i), (self.slid, j)) if p]
        return "*".join(parts) or INTERCEPT

    def to_dict(self) -> dict:
        return {
            "parent": self.parent,
            "slid": self.slid,
            "coefficients": [
                {"i": i, "j": j, "term": self.label(i, j), "value": v} for (i, j), v in self.coefficients.items()
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RsmModel":
        try:
            coefs = {(int(c["i"]), int(c["j"])): float(c["value"]) for c in d["coefficients"]}
            return cls(coefs, d.get("parent", "A"), d.get("slid", "B"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed RSM model: {exc}") from exc


@dataclass(frozen=True)
class NemModel:
    """Per-parent-level conditional quadratics in the coded slid factor."""

    parent_levels: tuple[float, ...]
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: tuple[float, ...]

    def __post_init__(self):
        for name in ("parent_levels", "alpha", "beta", "gamma"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        n = len(self.parent_levels)
        if not (len(self.alpha) == len(self.beta) == len(self.gamma) == n):
            raise ValidationError("NEM model needs one (alpha, beta, gamma) triple per parent level")
        levels = sorted(self.parent_levels)
        for a, b in zip(levels, levels[1:]):
            if abs(a - b) <= _LEVEL_TOL:
                raise DuplicateParentLevel(f"parent level {a} listed twice")

    def level_index(self, x_a: float) -> int | None:
        for k, lev in enumerate(self.parent_levels):
            if abs(lev - x_a) <= _LEVEL_TOL:
                return k
        return None


@dataclass(frozen=True)
class RcrsModel:
    """Quadratic RCRS model in ``z = (x_B - (s + t x_A)) / r``."""

    eta0: float = 0.0
    eta1: float = 0.0
    eta11: float = 0.0
    eta2: float = 0.0
    eta22: float = 0.0
    eta12: float = 0.0
    s: float = 0.0
    t: float = 0.0
    r: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValidationError(f"RCRS half-width r must be positive, got {self.r}")

    def evaluate(self, x_a, x_b):
        x_a = np.asarray(x_a, dtype=float)
        z = (np.asarray(x_b, dtype=float) - (self.s + self.t * x_a)) / self.r
        return (
            self.eta0 + self.eta1 * x_a + self.eta11 * x_a**2
            + self.eta2 * z + self.eta22 * z**2 + self.eta12 * x_a * z
        )


# --------------------------------------------------------------------------
# RSM <-> NEM
# --------------------------------------------------------------------------


def rsm_to_nem(model: RsmModel, parent_levels: Sequence[float]) -> NemModel:
    """Evaluate the conditional coefficients at each parent level."""
    if any(j > 2 for (_, j) in model.coefficients):
        raise ValidationError("RSM terms of degree > 2 in the slid factor have no NEM counterpart")
    levels = [float(x) for x in parent_levels]
    triples = {0: [], 1: [], 2: []}
    for x in levels:
        for j in triples:
            triples[j].append(sum(v * x**i for (i, jj), v in model.coefficients.items() if jj == j))
    return NemModel(tuple(levels), tuple(triples[0]), tuple(triples[1]), tuple(triples[2]))


def _interpolate(levels: Sequence[float], values: Sequence[float]) -> list[float]:
    """Coefficients (ascending powers) of the interpolating polynomial."""
    xs = list(levels)
    if len(xs) == 1:
        return [values[0]]
    if len(xs) == 2:
        (x0, x1), (v0, v1) = xs, values
        slope = (v1 - v0) / (x1 - x0)
        return [v0 - slope * x0, slope]
    if len(xs) == 3 and sorted(xs) == [-1.0, 0.0, 1.0]:
        v = dict(zip(xs, values))
        return [v[0.0], (v[1.0] - v[-1.0]) / 2, (v[1.0] + v[-1.0] - 2 * v[0.0]) / 2]
    V = np.vander(np.asarray(xs, dtype=float), increasing=True)
    return list(np.linalg.solve(V, np.asarray(values, dtype=float)))


def nem_to_rsm(model: NemModel, parent: str = "A", slid: str = "B") -> RsmModel:
    """Interpolate alpha, beta, gamma through the parent levels.

    Two levels give affine functions of ``x_A``, three give quadratics.
    Exact zeros are omitted from the result.
    """
    n = len(model.parent_levels)
    if n not in (2, 3):
        raise ValidationError(f"NEM to RSM translation needs 2 or 3 parent levels, got {n}")
    coefs = {}
    for j, vals in enumerate((model.alpha, model.beta, model.gamma)):
        for i, c in enumerate(_interpolate(model.parent_levels, vals)):
            if c != 0.0:
                coefs[(i, j)] = float(c)
    return RsmModel(coefs, parent, slid)


@dataclass(frozen=True)
class ConstraintReport:
    gamma_spread: float
    beta_curvature: float
    tol: float

    @property
    def gamma_constant(self) -> bool:
        return self.gamma_spread <= self.tol

    @property
    def beta_linear(self) -> bool:
        return self.beta_curvature <= self.tol

    @property
    def representable(self) -> bool:
        """True when the six-term second-order RSM model reproduces the NEM."""
        return self.gamma_constant and self.beta_linear


def check_second_order_constraints(model: NemModel, tol: float = 1e-12) -> ConstraintReport:
    """Check the constraints a second-order RSM model places on a NEM.

    Needs parent levels -1, 0, 1: the gammas must coincide and the betas
    must be linear in ``x_A``.
    """
    pos = {}
    for want in (-1.0, 0.0, 1.0):
        k = model.level_index(want)
        if k is None or len(model.parent_levels) != 3:
            raise ValidationError("constraint check needs exactly the parent levels -1, 0, 1")
        pos[want] = k
    g = model.gamma
    spread = max(abs(a - b) for a in g for b in g)
    b = model.beta
    curvature = abs(b[pos[1.0]] + b[pos[-1.0]] - 2 * b[pos[0.0]]) / 2
    return ConstraintReport(spread, curvature, tol)


# --------------------------------------------------------------------------
# hybrid strategy
# --------------------------------------------------------------------------


def nem_model_from_coefficients(design: SlidingDesign, coefficients: Mapping[str, float]) -> NemModel:
    """Rewrite fitted nested-effects coefficients in the coded-``x_B`` basis.

    Within parent level ``i`` the fitted values at the slid levels are
    ``const_i + b_l L_k + b_q Q_k``; the conditional quadratic through the
    coded slid settings at that level reproduces them exactly.
    """
    parent, slid, spec = design.pair()
    if not parent.is_quantitative:
        raise ValidationError("RSM translation needs a quantitative parent factor")
    coefs = dict(coefficients)
    for k, v in coefs.items():
        if v is None or not math.isfinite(float(v)):
            raise NumericalError(f"coefficient {k!r} is undefined; the fit was rank deficient")

    def need(term):
        if term not in coefs:
            raise ValidationError(f"nested-effects fit lacks term {term!r}")
        return float(coefs[term])

    mu = need(INTERCEPT)
    a_l = need(f"{parent.name}_l")
    a_q = need(f"{parent.name}_q") if parent.n_levels == 3 else 0.0
    a_coder = coder_for(design, parent.name)
    b_coder = coder_for(design, slid.name)
    levels, alphas, betas, gammas = [], [], [], []
    for i, (label, setting) in enumerate(zip(parent.levels, parent.settings)):
        lin_a, quad_a = lq_contrasts(parent.n_levels, i)
        const = mu + a_l * lin_a + a_q * (quad_a or 0)
        b_l = need(nested_label(slid.name, "l", parent.name, i + 1))
        b_q = need(nested_label(slid.name, "q", parent.name, i + 1)) if slid.n_levels == 3 else 0.0
        x = b_coder.to_coded(np.asarray(spec.table[label]))
        y = []
        for k in range(slid.n_levels):
            lin_b, quad_b = slid_contrasts(slid.n_levels, k)
            y.append(const + b_l * lin_b + b_q * (quad_b or 0))
        poly = np.linalg.solve(np.vander(x, increasing=True), np.asarray(y))
        poly = list(poly) + [0.0] * (3 - len(poly))
        levels.append(float(a_coder.to_coded(setting)))
        alphas.append(poly[0])
        betas.append(poly[1])
        gammas.append(poly[2])
    return NemModel(tuple(levels), tuple(alphas), tuple(betas), tuple(gammas))


def hybrid_fit(design: SlidingDesign, response, covariates: str = "none") -> RsmModel:
    """Fit the nested-effects model, then translate it to an RSM surface.

    Covariate columns (free factors) are fitted but not carried into the
    surface; it describes the response at their average coded level.
    """
    matrix = code_nem(design, covariates=covariates)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroResidualDf)
        fit = ols_fit(matrix, response)
    parent, slid, _ = design.pair()
    return nem_to_rsm(nem_model_from_coefficients(design, fit.as_dict()), parent.name, slid.name)


_MONO = re.compile(r"^x_(?P<name>[^*^]+)(?:\^(?P<p>\d+))?$")


def rsm_model_from_fit(fit: FitResult | Mapping[str, float], parent: str = "A", slid: str = "B") -> RsmModel:
    """Collect the parent/slid monomials of a direct RSM fit.

    Terms not of the form ``x_*`` (covariate contrasts) are skipped;
    monomials in other factors are rejected.
    """
    coefs = fit.as_dict() if isinstance(fit, FitResult) else dict(fit)
    out = {}
    for term, value in coefs.items():
        if term == INTERCEPT:
            out[(0, 0)] = value
            continue
        if not term.startswith("x_"):
            continue
        powers = {parent: 0, slid: 0}
        for part in term.split("*"):
            m = _MONO.match(part)
            if not m or m["name"] not in powers:
                raise ValidationError(f"term {term!r} is not a monomial in {parent} and {slid}")
            powers[m["name"]] += int(m["p"] or 1)
        out[(powers[parent], powers[slid])] = value
    return RsmModel(out, parent, slid)


# --------------------------------------------------------------------------
# RCRS -> RSM
# --------------------------------------------------------------------------


def rcrs_expand(model: RcrsModel) -> RsmModel:
    """Expand the RCRS quadratic into ordinary monomials of ``x_A``, ``x_B``.

    Valid for an affine center ``s + t x_A`` and constant half-width ``r``.
    """
    e0, e1, e11, e2, e22, e12 = model.eta0, model.eta1, model.eta11, model.eta2, model.eta22, model.eta12
    s, t, r = model.s, model.t, model.r
    r2 = r * r
    return RsmModel(
        {
            (0, 0): e0 + (s * s / r2) * e22 - (s / r) * e2,
            (1, 0): e1 - (t / r) * e2 - (s / r) * e12 + (2 * s * t / r2) * e22,
            (2, 0): e11 + (t * t / r2) * e22 - (t / r) * e12,
            (0, 1): e2 / r - (2 * s / r2) * e22,
            (0, 2): e22 / r2,
            (1, 1): e12 / r - (2 * t / r2) * e22,
        }
    )


def coded_geometry(design: SlidingDesign) -> tuple[float, float, float]:
    """Sliding geometry ``(s, t, r)`` re-expressed in coded slid units."""
    _, slid, spec = design.pair()
    if not spec.has_geometry:
        raise ValidationError(f"sliding table for {slid.name!r} carries no (s, t, r) geometry")
    c = coder_for(design, slid.name)
    span = c.high - c.low
    s, t = spec.center
    return float(c.to_coded(s)), 2.0 * t / span, 2.0 * spec.half_width / span


def rcrs_model_from_fit(fit: FitResult | Mapping[str, float], design: SlidingDesign) -> RcrsModel:
    """Translate an RCRS contrast fit into an :class:`RcrsModel`.

    Requires equally spaced parent levels, three equally spaced slid
    levels, sliding geometry, and no terms beyond the linear-by-linear
    interaction.  Uses ``A_l = x_A``, ``A_q = 3 x_A^2 - 2`` and likewise
    ``B_q = 3 z^2 - 2``.
    """
    parent, slid, spec = design.pair()
    coefs = fit.as_dict() if isinstance(fit, FitResult) else dict(fit)
    if slid.n_levels != 3:
        raise ValidationError("RCRS translation needs a three-level slid factor")
    coded = coder_for(design, parent.name).to_coded(np.asarray(parent.settings))
    expected = np.linspace(-1, 1, parent.n_levels)
    if not np.allclose(coded, expected, atol=1e-12):
        raise ValidationError("RCRS translation needs equally spaced parent levels")
    for vals in spec.table.values():
        if abs((vals[1] - vals[0]) - (vals[2] - vals[1])) > 1e-9 * max(1.0, abs(vals[2])):
            raise ValidationError("RCRS translation needs equally spaced slid levels")
    a, b = parent.name, slid.name
    allowed = {INTERCEPT, f"{a}_l", f"{a}_q", f"{b}_l", f"{b}_q", f"{a}_l*{b}_l"}
    extra = [k for k in coefs if k not in allowed and not k.startswith(tuple(f.name + "_" for f in design.free_factors()))]
    if extra:
        raise ValidationError(f"terms {extra} have no counterpart in the quadratic RCRS model")
    g = lambda k: float(coefs.get(k, 0.0))  # noqa: E731
    s, t, r = coded_geometry(design)
    return RcrsModel(
        eta0=g(INTERCEPT) - 2 * g(f"{a}_q") - 2 * g(f"{b}_q"),
        eta1=g(f"{a}_l"),
        eta11=3 * g(f"{a}_q"),
        eta2=g(f"{b}_l"),
        eta22=3 * g(f"{b}_q"),
        eta12=g(f"{a}_l*{b}_l"),
        s=s,
        t=t,
        r=r,
    )


# --------------------------------------------------------------------------
# RCRS vs NEM identities (two-level parent)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


@dataclass(frozen=True)
class IdentityReport:
    checks: tuple[IdentityCheck, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.residual <= self.tol for c in self.checks)

    @property
    def max_residual(self) -> float:
        return max((c.residual for c in self.checks), default=0.0)


def rcrs_nem_identity_check(
    fit_rcrs: FitResult | Mapping[str, float],
    fit_nem: FitResult | Mapping[str, float],
    tol: float = 1e-9,
    parent: str = "A",
    slid: str = "B",
) -> IdentityReport:
    """Verify how RCRS effects average and difference the nested effects.

    With ``A_l = +1`` at the second parent level::

        B_l      = (B_l|A_1 + B_l|A_2) / 2
        A_l*B_l  = (B_l|A_2 - B_l|A_1) / 2

    and likewise for the quadratic effects; the ``A_l`` effects coincide.
    """
    rc = fit_rcrs.as_dict() if isinstance(fit_rcrs, FitResult) else dict(fit_rcrs)
    ne = fit_nem.as_dict() if isinstance(fit_nem, FitResult) else dict(fit_nem)
    a, b = parent, slid
    checks = [IdentityCheck(f"{a}_l", rc[f"{a}_l"], ne[f"{a}_l"])]
    for kind in ("l", "q"):
        n1, n2 = nested_label(b, kind, a, 1), nested_label(b, kind, a, 2)
        if f"{b}_{kind}" not in rc and n1 not in ne:
            continue
        checks.append(IdentityCheck(f"{b}_{kind}", rc[f"{b}_{kind}"], (ne[n1] + ne[n2]) / 2))
        checks.append(IdentityCheck(f"{a}_l*{b}_{kind}", rc[f"{a}_l*{b}_{kind}"], (ne[n2] - ne[n1]) / 2))
    return IdentityReport(tuple(checks), tol)
