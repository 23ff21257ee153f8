import numpy as np
import pytest

from slidekit.coding import code_nem, code_rcrs, code_rsm
from slidekit.errors import DuplicateParentLevel, NumericalError, ValidationError
from slidekit.linear_model import ols_fit
from slidekit.simulate import grid_design
from slidekit.translation import (
    NemModel,
    RcrsModel,
    RsmModel,
    check_second_order_constraints,
    coded_geometry,
    hybrid_fit,
    nem_model_from_coefficients,
    nem_to_rsm,
    rcrs_expand,
    rcrs_model_from_fit,
    rcrs_nem_identity_check,
    rsm_model_from_fit,
    rsm_to_nem,
)

LEVELS = (-1.0, 0.0, 1.0)
FULL_KEYS = [(i, j) for j in range(3) for i in range(3)]
SECOND_ORDER_KEYS = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)]


def random_rsm(rng, keys):
    return RsmModel({k: rng.normal() for k in keys})


def three_by_three():
    return grid_design(
        (1.0, 2.0, 3.0),
        {"1": (10.0, 12.0, 14.0), "2": (8.0, 10.0, 12.0), "3": (6.0, 8.0, 10.0)},
        center=(10.0, -2.0),
        half_width=2.0,
    )


def test_rsm_to_nem_hand_example():
    lam = {(0, 0): 1.0, (1, 0): 2.0, (2, 0): 3.0, (0, 1): 4.0, (1, 1): 5.0, (2, 2): 6.0}
    nem = rsm_to_nem(RsmModel(lam), LEVELS)
    # alpha(x) = 1 + 2x + 3x^2, beta(x) = 4 + 5x, gamma(x) = 6x^2
    assert nem.alpha == (2.0, 1.0, 6.0)
    assert nem.beta == (-1.0, 4.0, 9.0)
    assert nem.gamma == (6.0, 0.0, 6.0)


def test_nem_to_rsm_hand_example():
    nem = NemModel(LEVELS, alpha=(2.0, 1.0, 6.0), beta=(-1.0, 4.0, 9.0), gamma=(6.0, 0.0, 6.0))
    rsm = nem_to_rsm(nem)
    assert rsm.coefficients == {(0, 0): 1.0, (1, 0): 2.0, (2, 0): 3.0, (0, 1): 4.0, (1, 1): 5.0, (2, 2): 6.0}


def test_round_trip_random(rng):
    worst = 0.0
    for _ in range(200):
        model = random_rsm(rng, FULL_KEYS)
        back = nem_to_rsm(rsm_to_nem(model, LEVELS))
        worst = max(worst, max(abs(back.get(*k) - model.get(*k)) for k in FULL_KEYS))
    assert worst <= 1e-12


def test_two_level_translation_is_affine():
    nem = NemModel((-1.0, 1.0), alpha=(1.0, 3.0), beta=(0.0, 2.0), gamma=(5.0, 5.0))
    rsm = nem_to_rsm(nem)
    assert rsm.coefficients == {(0, 0): 2.0, (1, 0): 1.0, (0, 1): 1.0, (1, 1): 1.0, (0, 2): 5.0}


def test_duplicate_parent_levels():
    with pytest.raises(DuplicateParentLevel):
        NemModel((0.0, 0.0, 1.0), (1, 2, 3), (1, 2, 3), (1, 2, 3))


def test_constraints_hold_for_second_order(rng):
    for _ in range(50):
        report = check_second_order_constraints(rsm_to_nem(random_rsm(rng, SECOND_ORDER_KEYS), LEVELS))
        assert report.gamma_spread == 0.0
        assert report.representable


@pytest.mark.parametrize("extra", [(2, 1), (1, 2), (2, 2)])
def test_constraints_fail_when_perturbed(rng, extra):
    lam = random_rsm(rng, SECOND_ORDER_KEYS).coefficients
    lam[extra] = 0.05
    report = check_second_order_constraints(rsm_to_nem(RsmModel(lam), LEVELS))
    assert not report.representable


def test_expand_identity_geometry():
    eta = dict(eta0=1.5, eta1=-2.0, eta11=0.25, eta2=3.0, eta22=-0.75, eta12=4.0)
    rsm = rcrs_expand(RcrsModel(**eta, s=0.0, t=0.0, r=1.0))
    keys = {"eta0": (0, 0), "eta1": (1, 0), "eta11": (2, 0), "eta2": (0, 1), "eta22": (0, 2), "eta12": (1, 1)}
    assert {k: rsm.get(*ij) for k, ij in keys.items()} == eta


def test_expand_hand_example():
    rsm = rcrs_expand(RcrsModel(eta2=1.0, eta22=1.0, s=1.0, t=2.0, r=2.0))
    # z = (x_B - 1 - 2 x_A) / 2;  z + z^2 expanded by hand
    assert rsm.get(0, 0) == pytest.approx(-0.25)
    assert rsm.get(1, 0) == pytest.approx(0.0)
    assert rsm.get(2, 0) == pytest.approx(1.0)
    assert rsm.get(0, 1) == pytest.approx(0.0)
    assert rsm.get(0, 2) == pytest.approx(0.25)
    assert rsm.get(1, 1) == pytest.approx(-1.0)


def test_expand_matches_least_squares_oracle(rng):
    for _ in range(20):
        model = RcrsModel(*rng.normal(size=6), s=rng.normal(), t=rng.normal(), r=rng.uniform(0.3, 3))
        xa, xb = rng.uniform(-1, 1, (2, 40))
        basis = np.column_stack([xa**i * xb**j for i, j in SECOND_ORDER_KEYS])
        oracle, *_ = np.linalg.lstsq(basis, model.evaluate(xa, xb), rcond=None)
        expanded = rcrs_expand(model)
        assert np.allclose([expanded.get(*k) for k in SECOND_ORDER_KEYS], oracle, atol=1e-9)


def test_expand_is_linear_in_eta(rng):
    geo = dict(s=0.3, t=-0.7, r=1.4)
    e1, e2 = rng.normal(size=6), rng.normal(size=6)
    a = rcrs_expand(RcrsModel(*e1, **geo))
    b = rcrs_expand(RcrsModel(*e2, **geo))
    c = rcrs_expand(RcrsModel(*(2 * e1 - 3 * e2), **geo))
    for k in SECOND_ORDER_KEYS:
        assert c.get(*k) == pytest.approx(2 * a.get(*k) - 3 * b.get(*k), abs=1e-12)


def test_rcrs_rejects_nonpositive_r():
    with pytest.raises(ValidationError):
        RcrsModel(r=0.0)


def test_hybrid_equals_direct_saturated_rsm(rng):
    design = three_by_three()
    grid = np.linspace(-1, 1, 11)
    xa, xb = np.meshgrid(grid, grid)
    for _ in range(20):
        y = rng.normal(size=9)
        hybrid = hybrid_fit(design, y)
        with pytest.warns(Warning):
            direct = rsm_model_from_fit(ols_fit(code_rsm(design), y))
        assert np.max(np.abs(hybrid.evaluate(xa, xb) - direct.evaluate(xa, xb))) <= 1e-8


def test_identities_on_random_responses(welding, rng):
    rc, ne = code_rcrs(welding, covariates="lq"), code_nem(welding, covariates="lq")
    for _ in range(100):
        y = rng.normal(scale=50, size=18)
        report = rcrs_nem_identity_check(ols_fit(rc, y), ols_fit(ne, y))
        assert len(report.checks) == 5
        assert report.passed, report.max_residual


def test_identities_on_two_decimal_values():
    rcrs = {"A_l": -81.04, "B_l": 78.96, "B_q": -34.79, "A_l*B_l": -102.71, "A_l*B_q": -6.88}
    nem = {"A_l": -81.04, "B_l|A_1": 181.67, "B_q|A_1": -27.92, "B_l|A_2": -23.75, "B_q|A_2": -41.67}
    report = rcrs_nem_identity_check(rcrs, nem, tol=0.005 + 1e-9)
    assert report.passed
    assert report.max_residual == pytest.approx(0.005, abs=1e-9)


def test_identities_detect_mismatch():
    rcrs = {"A_l": 1.0, "B_l": 2.0, "B_q": 0.0, "A_l*B_l": 1.0, "A_l*B_q": 0.0}
    nem = {"A_l": 1.0, "B_l|A_1": 1.0, "B_q|A_1": 0.0, "B_l|A_2": 3.0, "B_q|A_2": 0.0}
    assert rcrs_nem_identity_check(rcrs, nem).passed
    nem["B_l|A_2"] = 3.5
    assert not rcrs_nem_identity_check(rcrs, nem).passed


def test_nem_coefficients_reproduce_fitted_values(welding, rng):
    y = rng.normal(size=18)
    fit = ols_fit(code_nem(welding), y)
    rsm = nem_to_rsm(nem_model_from_coefficients(welding, fit.as_dict()))
    xa = code_rsm(welding).column("x_A")
    xb = code_rsm(welding).column("x_B")
    assert np.allclose(rsm.evaluate(xa, xb), fit.fitted_values, atol=1e-10)


def test_undefined_coefficient_is_numerical_error(welding):
    coefs = {"Intercept": 1.0, "A_l": float("nan"), "B_l|A_1": 0, "B_q|A_1": 0, "B_l|A_2": 0, "B_q|A_2": 0}
    with pytest.raises(NumericalError):
        nem_model_from_coefficients(welding, coefs)


def test_rcrs_model_from_fit_recovers_eta():
    design = three_by_three()
    s, t, r = coded_geometry(design)
    truth = RcrsModel(1.0, -0.5, 0.25, 2.0, -1.5, 0.75, s=s, t=t, r=r)
    rsm = code_rsm(design)
    y = truth.evaluate(rsm.column("x_A"), rsm.column("x_B"))
    got = rcrs_model_from_fit(ols_fit(code_rcrs(design, interactions="linear"), y), design)
    for name in ("eta0", "eta1", "eta11", "eta2", "eta22", "eta12"):
        assert getattr(got, name) == pytest.approx(getattr(truth, name), abs=1e-10)


def test_welding_coded_geometry(welding):
    s, t, r = coded_geometry(welding)
    # center 29 - 7 x_A, half-width 4, on the 18..40 weld-time scale
    assert (s, t, r) == pytest.approx((0.0, -14 / 22, 8 / 22))


def test_rsm_dict_round_trip(rng):
    model = random_rsm(rng, FULL_KEYS)
    assert RsmModel.from_dict(model.to_dict()) == model
