"""Modeling and analysis of experiments with sliding levels."""

__version__ = "0.1.0"

from .coding import ModelMatrix, code, code_nem, code_nem_qualitative, code_rcrs, code_rsm, proportional_code
from .design import FactorSpec, PlanningMatrix, SlidingDesign, SlidingSpec, build_welding_fixture, resolve_settings
from .errors import (
    DegenerateRange,
    DuplicateParentLevel,
    MissingSlidingEntry,
    NumericalError,
    OffDesignParentLevel,
    OutOfRange,
    ParseError,
    RankDeficient,
    SlideKitError,
    UnknownLevelLabel,
    UnsupportedDegree,
    UnsupportedLevelCount,
    ValidationError,
    ZeroResidualDf,
)
from .io import load_design, save_design
from .linear_model import FitResult, estimate_correlations, ols_fit, span_equal
from .region import Zone, build_region, classify, predict_nem, predict_rsm, product_transform
from .simulate import SimReport, AdditiveSurface, run_comparison
from .translation import (
    NemModel,
    RcrsModel,
    RsmModel,
    hybrid_fit,
    nem_to_rsm,
    rcrs_expand,
    rcrs_nem_identity_check,
    rsm_to_nem,
)

__all__ = [name for name in dir() if not name.startswith("_")]
