import math

import numpy as np
import pytest
from scipy import stats

from slidekit.coding import INTERCEPT, ModelMatrix, code_nem, code_rcrs, code_rsm
from slidekit.errors import RankDeficient, ValidationError, ZeroResidualDf
from slidekit.linear_model import FitResult, check_full_rank, estimate_correlations, ols_fit, span_equal, t_two_sided_pvalue

# inv(X'X) correlations of the welding RSM matrix, computed with numpy.linalg.inv
WELDING_CORRELATIONS = {
    ("x_A", "x_B"): 0.956777,
    ("x_A", "x_A*x_B^2"): 0.906637,
    ("x_B", "x_A*x_B^2"): 0.986666,
    ("x_B^2", "x_A*x_B"): 0.986666,
}


def test_exact_fit_recovers_coefficients(welding):
    m = code_rcrs(welding, covariates="lq")
    beta = np.arange(1, len(m.terms) + 1, dtype=float)
    fit = ols_fit(m, m.values @ beta)
    assert np.allclose(fit.coefficients, beta, atol=1e-10)
    assert fit.r_squared == 1.0
    assert fit.residual_df == 18 - len(m.terms)


def test_residual_is_orthogonal_to_columns(welding, rng):
    m = code_rsm(welding, covariates="lq")
    y = rng.normal(size=18)
    fit = ols_fit(m, y)
    resid = y - fit.fitted_values
    assert np.max(np.abs(m.values.T @ resid)) <= 1e-10


def test_matches_lstsq_and_textbook_inference(welding, rng):
    m = code_nem(welding, covariates="linear")
    y = rng.normal(size=18)
    fit = ols_fit(m, y)
    X = m.values
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    df = X.shape[0] - X.shape[1]
    s2 = np.sum((y - X @ beta) ** 2) / df
    se = np.sqrt(s2 * np.diag(np.linalg.inv(X.T @ X)))
    assert np.allclose(fit.coefficients, beta, atol=1e-10)
    assert np.allclose(fit.standard_errors, se, rtol=1e-9)
    assert np.allclose(fit.p_values, 2 * stats.t.sf(np.abs(beta / se), df), rtol=1e-8)


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.5, 10.0, 300.0])
def test_pvalue_closed_forms(t):
    # df = 1 is Cauchy, df = 2 has a closed-form tail
    assert t_two_sided_pvalue(t, 1) == pytest.approx(1 - 2 * math.atan(t) / math.pi, rel=1e-12, abs=1e-15)
    assert t_two_sided_pvalue(t, 2) == pytest.approx(1 - t / math.sqrt(2 + t * t), rel=1e-12, abs=1e-15)


def test_pvalue_against_reference_values():
    assert t_two_sided_pvalue(2.5, 7) == pytest.approx(0.040992218585752874, rel=1e-10)
    assert t_two_sided_pvalue(0.3, 30) == pytest.approx(0.7662461052843528, rel=1e-10)
    assert t_two_sided_pvalue(-2.5, 7) == t_two_sided_pvalue(2.5, 7)


def test_rank_deficiency_names_the_circuit(welding):
    base = code_rcrs(welding)
    m = base.append(["dup"], base.column("B_l") + 2 * base.column("A_l"))
    with pytest.raises(RankDeficient) as info:
        ols_fit(m, np.zeros(18))
    err = info.value
    assert err.dependent == ["dup"]
    assert sorted(err.circuit) == ["A_l", "B_l", "dup"]
    assert err.rank == len(base.terms)


def test_rank_check_passes_full_rank(welding):
    check_full_rank(code_rsm(welding, covariates="lq"))


def test_saturated_fit_warns(welding):
    m = code_rsm(welding).select([INTERCEPT, "x_A"])
    tiny = ModelMatrix("RSM", m.terms, m.values[[0, 9]])
    with pytest.warns(ZeroResidualDf):
        fit = ols_fit(tiny, [1.0, 3.0])
    assert not fit.inference_available
    assert np.isnan(fit.p_values).all()
    assert np.allclose(fit.coefficients, [2.0, 1.0])


def test_response_length_checked(welding):
    with pytest.raises(ValidationError):
        ols_fit(code_rcrs(welding), np.zeros(17))


def test_welding_rsm_correlations(welding):
    corr = estimate_correlations(code_rsm(welding))
    assert corr.terms == ("x_A", "x_B", "x_B^2", "x_A*x_B", "x_A*x_B^2")
    for a in corr.terms:
        for b in corr.terms:
            if a == b:
                continue
            want = WELDING_CORRELATIONS.get((a, b), WELDING_CORRELATIONS.get((b, a), 0.0))
            assert abs(corr.get(a, b)) == pytest.approx(want, abs=1e-6)


def test_correlations_unchanged_by_covariates(welding):
    plain = estimate_correlations(code_rsm(welding))
    full = estimate_correlations(code_rsm(welding, covariates="lq"), plain.terms)
    assert np.max(np.abs(full.values - plain.values)) <= 1e-9


def test_correlations_agree_with_fit(welding, rng):
    m = code_rsm(welding)
    fit = ols_fit(m, rng.normal(size=18))
    assert np.allclose(estimate_correlations(m, m.terms).values, fit.estimate_correlations, atol=1e-12)


def test_span_equal_detects_difference(welding):
    assert span_equal(code_rcrs(welding), code_nem(welding))
    assert not span_equal(code_rcrs(welding), code_rcrs(welding, interactions="linear"))


def test_fit_dict_round_trip(welding, rng):
    fit = ols_fit(code_rcrs(welding), rng.normal(size=18))
    again = FitResult.from_dict(fit.to_dict())
    assert again.terms == fit.terms
    assert np.array_equal(again.coefficients, fit.coefficients)
    assert again.residual_df == fit.residual_df
