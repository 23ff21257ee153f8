import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slidekit.design import build_welding_fixture
from slidekit.errors import OffDesignParentLevel
from slidekit.linear_model import ols_fit
from slidekit.coding import code_rcrs
from slidekit.region import (
    Zone,
    build_region,
    classify,
    point_in_polygon,
    polygon_area,
    predict_nem,
    predict_rsm,
    product_transform,
    rcrs_predictor,
)
from slidekit.translation import NemModel, RsmModel, hybrid_fit

WELDING_REGION = build_region(build_welding_fixture())
WELDING_VERTICES = ((-1.0, 3 / 11), (1.0, -1.0), (1.0, -3 / 11), (-1.0, 1.0))


def welding_cross_section(x_a):
    # lower edge (-1, 3/11) -> (1, -1), upper edge (-1, 1) -> (1, -3/11)
    u = (x_a + 1) / 2
    return 3 / 11 + u * (-1 - 3 / 11), 1 + u * (-3 / 11 - 1)


def test_welding_vertices(welding):
    region = build_region(welding)
    assert np.allclose(region.vertices, WELDING_VERTICES, atol=1e-15)
    assert region.area == pytest.approx(16 / 11)
    assert region.cube_fraction == pytest.approx(4 / 11)


def test_polygon_area_square():
    assert polygon_area([(0, 0), (2, 0), (2, 2), (0, 2)]) == 4.0


@pytest.mark.parametrize(
    "point, zone",
    [
        ((0.0, 0.0), Zone.INSIDE_RE),
        ((0.0, 0.9), Zone.EXTRAPOLATION_BAND),
        ((-1.0, 3 / 11), Zone.INSIDE_RE),
        ((-1.0, 0.0), Zone.EXTRAPOLATION_BAND),
        ((1.0, -1.0), Zone.INSIDE_RE),
        ((1.2, 0.0), Zone.OUTSIDE_RM),
        ((0.0, -1.5), Zone.OUTSIDE_RM),
    ],
)
def test_classify_examples(welding, point, zone):
    assert classify(build_region(welding), *point) is zone


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_classify_matches_cross_section(x_a, x_b):
    lo, hi = welding_cross_section(x_a)
    if min(abs(x_b - lo), abs(x_b - hi)) < 1e-6:
        return
    want = Zone.INSIDE_RE if lo < x_b < hi else Zone.EXTRAPOLATION_BAND
    assert classify(WELDING_REGION, x_a, x_b) is want


def test_point_in_polygon_boundary():
    square = [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert point_in_polygon((1.0, 0.5), square)
    assert point_in_polygon((0.5, 0.5), square)
    assert not point_in_polygon((1.1, 0.5), square)


def test_predict_nem_refuses_off_level():
    model = NemModel((-1.0, 1.0), (1.0, 2.0), (0.5, 0.5), (0.0, 0.0))
    assert predict_nem(model, 1.0, 0.5) == pytest.approx(2.25)
    with pytest.raises(OffDesignParentLevel):
        predict_nem(model, 0.5, 0.0)


def test_predict_rsm_between_levels(welding, rng):
    model = hybrid_fit(welding, rng.normal(size=18))
    region = build_region(welding)
    pred = predict_rsm(model, region, 0.5, 0.0)
    assert math.isfinite(pred.value)
    lo, hi = welding_cross_section(0.5)
    assert pred.zone is (Zone.INSIDE_RE if lo <= 0.0 <= hi else Zone.EXTRAPOLATION_BAND)
    assert predict_rsm(RsmModel({(0, 0): 3.0}), region, 0.0, 0.9).zone is Zone.EXTRAPOLATION_BAND


def test_rcrs_predictor_reproduces_fitted_values(welding, rng):
    y = rng.normal(size=18)
    fit = ols_fit(code_rcrs(welding), y)
    region = build_region(welding)
    xa, xb = region.to_coded(welding.actual_array("A"), welding.actual_array("B"))
    assert np.allclose(rcrs_predictor(fit, welding)(xa, xb), fit.fitted_values, atol=1e-10)


def test_product_transform(welding):
    new, diag = product_transform(welding)
    assert diag.corr_before == pytest.approx(0.906, abs=1e-3)
    assert diag.corr_after == pytest.approx(0.612, abs=1e-3)
    assert diag.cube_fraction_before == pytest.approx(4 / 11)
    assert diag.cube_fraction_after == pytest.approx(0.6)
    spec = new.sliding_for("B")
    assert spec.table == {"2": (64.0, 72.0, 80.0), "4": (72.0, 88.0, 104.0)}


def test_product_transform_correlation_oracle(welding):
    a = welding.actual_array("A")
    b = welding.actual_array("B")
    assert abs(np.corrcoef(a, b)[0, 1]) == pytest.approx(0.90622, abs=1e-5)
    assert abs(np.corrcoef(a, a * b)[0, 1]) == pytest.approx(0.61237, abs=1e-5)
