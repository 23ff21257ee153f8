"""Ordinary least squares with t inference and estimate correlations.

Coefficients come from a QR factorization of the model matrix, never from
inverting the normal equations: the RSM matrix of a sliding-level design is
badly conditioned by construction.  ``(X'X)^{-1}`` is formed from the
triangular factor only when standard errors or correlations are needed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .coding import INTERCEPT, ModelMatrix
from .errors import RankDeficient, ValidationError, ZeroResidualDf

RANK_TOL = 1e-10


def t_two_sided_pvalue(t, df):
    """Two-sided p-value of a central t statistic.

    Uses ``P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)`` with the regularized
    incomplete beta function.
    """
    t = np.asarray(t, dtype=float)
    if df <= 0:
        return np.full_like(t, np.nan)
    x = df / (df + t * t)
    return special.betainc(0.5 * df, 0.5, x)


def _dependent_columns(X: np.ndarray, tol: float = RANK_TOL) -> tuple[list[int], list[int]]:
    """Split column indices into (independent, dependent) sequentially.

    Column ``j`` is dependent when its residual after projection onto the
    span of the accepted earlier columns has norm <= ``tol * ||x_j||``.
    """
    basis = np.zeros((X.shape[0], 0))
    keep, drop = [], []
    for j in range(X.shape[1]):
        x = X[:, j]
        nrm = np.linalg.norm(x)
        r = x.copy()
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            r -= basis @ (basis.T @ r)
        rn = np.linalg.norm(r)
        if rn <= tol * nrm or nrm == 0.0:
            drop.append(j)
        else:
            keep.append(j)
            basis = np.column_stack([basis, r / rn])
    return keep, drop


def check_full_rank(matrix: ModelMatrix, tol: float = RANK_TOL) -> None:
    """Raise :class:`RankDeficient` unless ``matrix`` has full column rank."""
    X = matrix.values
    keep, drop = _dependent_columns(X, tol)
    if not drop:
        return
    first = drop[0]
    prior = [k for k in keep if k < first]
    if prior:
        coef, *_ = np.linalg.lstsq(X[:, prior], X[:, first], rcond=None)
        scale = np.max(np.abs(coef)) if coef.size else 0.0
        support = [prior[i] for i in range(len(prior)) if abs(coef[i]) > 1e-8 * max(scale, 1e-300)]
    else:
        support = []
    circuit = sorted(support + [first])
    raise RankDeficient(
        rank=len(keep),
        n_terms=X.shape[1],
        dependent=[matrix.terms[j] for j in drop],
        circuit=[matrix.terms[j] for j in circuit],
    )


@dataclass(frozen=True, eq=False)
class FitResult:
    """Least-squares fit of one response on one model matrix."""

    terms: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    residual_df: int
    sigma2_hat: float
    r_squared: float
    fitted_values: np.ndarray
    estimate_correlations: np.ndarray
    scheme: str = ""
    inference_available: bool = True

    def coefficient(self, term: str) -> float:
        try:
            return float(self.coefficients[self.terms.index(term)])
        except ValueError:
            raise ValidationError(f"fit has no term {term!r}") from None

    def as_dict(self) -> dict[str, float]:
        return {t: float(c) for t, c in zip(self.terms, self.coefficients)}

    def to_dict(self) -> dict:
        def num(v):
            v = float(v)
            return v if math.isfinite(v) else None

        return {
            "scheme": self.scheme,
            "terms": list(self.terms),
            "coefficients": [num(v) for v in self.coefficients],
            "standard_errors": [num(v) for v in self.standard_errors],
            "t_values": [num(v) for v in self.t_values],
            "p_values": [num(v) for v in self.p_values],
            "residual_df": int(self.residual_df),
            "sigma2_hat": num(self.sigma2_hat),
            "r_squared": num(self.r_squared),
            "fitted_values": [num(v) for v in self.fitted_values],
            "estimate_correlations": [[num(v) for v in row] for row in self.estimate_correlations],
            "inference_available": bool(self.inference_available),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        def arr(key):
            return np.array([np.nan if v is None else float(v) for v in d.get(key, [])], dtype=float)

        try:
            terms = tuple(d["terms"])
            corr = d.get("estimate_correlations") or []
            return cls(
                terms=terms,
                coefficients=arr("coefficients"),
                standard_errors=arr("standard_errors"),
                t_values=arr("t_values"),
                p_values=arr("p_values"),
                residual_df=int(d.get("residual_df", 0)),
                sigma2_hat=np.nan if d.get("sigma2_hat") is None else float(d["sigma2_hat"]),
                r_squared=np.nan if d.get("r_squared") is None else float(d["r_squared"]),
                fitted_values=arr("fitted_values"),
                estimate_correlations=np.array(
                    [[np.nan if v is None else float(v) for v in row] for row in corr], dtype=float
                ),
                scheme=d.get("scheme", ""),
                inference_available=bool(d.get("inference_available", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed fit result: {exc}") from exc


def _inverse_normal_matrix(R: np.ndarray) -> np.ndarray:
    Rinv = linalg.solve_triangular(R, np.eye(R.shape[0]), lower=False)
    return Rinv @ Rinv.T


def _correlation_from_cov(C: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.diag(C))
    corr = C / np.outer(d, d)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def _qr(matrix: ModelMatrix):
    check_full_rank(matrix)
    Q, R = np.linalg.qr(matrix.values, mode="reduced")
    return Q, R


def ols_fit(matrix: ModelMatrix, response) -> FitResult:
    """Fit ``response`` on ``matrix`` by least squares.

    Standard errors use ``sigma2_hat * diag((X'X)^{-1})`` with
    ``sigma2_hat = RSS / (runs - terms)``; p-values are two-sided from the
    central t distribution.  A saturated matrix still returns coefficients
    but warns with :class:`ZeroResidualDf` and reports NaN inference.
    """
    y = np.asarray(response, dtype=float).ravel()
    if y.shape[0] != matrix.n_runs:
        raise ValidationError(f"response has {y.shape[0]} values but the design has {matrix.n_runs} runs")
    if not np.all(np.isfinite(y)):
        raise ValidationError("response contains non-finite values")
    Q, R = _qr(matrix)
    coef = linalg.solve_triangular(R, Q.T @ y, lower=False)
    fitted = matrix.values @ coef
    resid = y - fitted
    n, p = matrix.values.shape
    df = n - p
    rss = float(resid @ resid)
    if matrix.intercept_included or INTERCEPT in matrix.terms:
        tss = float(((y - y.mean()) ** 2).sum())
    else:
        tss = float(y @ y)
    r2 = 1.0 if tss == 0.0 else min(1.0, max(0.0, 1.0 - rss / tss))
    C = _inverse_normal_matrix(R)
    corr = _correlation_from_cov(C)
    if df > 0:
        sigma2 = rss / df
        se = np.sqrt(sigma2 * np.diag(C))
        with np.errstate(divide="ignore", invalid="ignore"):
            tv = np.where(se > 0, coef / se, np.sign(coef) * np.inf)
        pv = t_two_sided_pvalue(tv, df)
        available = True
    else:
        warnings.warn(
            f"saturated fit ({p} terms on {n} runs): inference unavailable", ZeroResidualDf, stacklevel=2
        )
        sigma2 = np.nan
        se = tv = pv = np.full(p, np.nan)
        available = False
    return FitResult(
        terms=matrix.terms,
        coefficients=coef,
        standard_errors=se,
        t_values=tv,
        p_values=pv,
        residual_df=df,
        sigma2_hat=sigma2,
        r_squared=r2,
        fitted_values=fitted,
        estimate_correlations=corr,
        scheme=matrix.scheme,
        inference_available=available,
    )


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    terms: tuple[str, ...]
    values: np.ndarray

    def get(self, a: str, b: str) -> float:
        return float(self.values[self.terms.index(a), self.terms.index(b)])


def estimate_correlations(matrix: ModelMatrix, terms=None) -> CorrelationMatrix:
    """Correlations between coefficient estimators induced by the design.

    ``r_ij = C_ij / sqrt(C_ii C_jj)`` with ``C = (X'X)^{-1}`` for the whole
    matrix, then restricted to ``terms`` (default: every non-intercept
    term).  The response never enters.
    """
    _, R = _qr(matrix)
    corr = _correlation_from_cov(_inverse_normal_matrix(R))
    if terms is None:
        terms = [t for t in matrix.terms if t != INTERCEPT]
    idx = []
    for t in terms:
        if t not in matrix.terms:
            raise ValidationError(f"model matrix has no term {t!r}")
        idx.append(matrix.terms.index(t))
    return CorrelationMatrix(tuple(terms), corr[np.ix_(idx, idx)])


def _orthonormal_basis(X: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    keep, _ = _dependent_columns(X, tol)
    if not keep:
        return np.zeros((X.shape[0], 0))
    Q, _ = np.linalg.qr(X[:, keep], mode="reduced")
    return Q


def _covered(basis: np.ndarray, X: np.ndarray, tol: float) -> bool:
    for j in range(X.shape[1]):
        x = X[:, j]
        r = x - basis @ (basis.T @ x)
        if np.linalg.norm(r) > tol * np.linalg.norm(x):
            return False
    return True


def span_equal(m1: ModelMatrix, m2: ModelMatrix, tol: float = 1e-9) -> bool:
    """True when the column spans of the two matrices coincide.

    Every column of each matrix must be reproduced by projection onto the
    other's span with relative residual at most ``tol``.
    """
    a = getattr(m1, "values", m1)
    b = getattr(m2, "values", m2)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"run counts differ: {a.shape[0]} vs {b.shape[0]}")
    return _covered(_orthonormal_basis(a), b, tol) and _covered(_orthonormal_basis(b), a, tol)
