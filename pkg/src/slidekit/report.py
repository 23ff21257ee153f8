"""Text renderings of results: aligned tables, lossless JSON, CSV."""

from __future__ import annotations

import csv
import io
import math

from .io import dumps_json
from .linear_model import FitResult

FORMATS = ("json", "table", "csv")


def _fmt(v: float, digits: int = 2) -> str:
    return "NA" if not math.isfinite(v) else f"{v:.{digits}f}"


def _fmt_p(p: float) -> str:
    if not math.isfinite(p):
        return "NA"
    if p < 0.0001:
        return "<0.0001"
    return f"{p:.4f}"


def fit_table(fit: FitResult) -> str:
    """Aligned ``term  value  t-value  p-value`` table, values to 2 decimals."""
    width = max([len("term")] + [len(t) for t in fit.terms])
    lines = [f"{'term':<{width}}  {'value':>12}  {'t-value':>8}  {'p-value':>8}"]
    for term, c, t, p in zip(fit.terms, fit.coefficients, fit.t_values, fit.p_values):
        lines.append(f"{term:<{width}}  {_fmt(c):>12}  {_fmt(t):>8}  {_fmt_p(p):>8}")
    if fit.terms:
        r2 = _fmt(fit.r_squared, 4)
        lines.append(f"R^2 = {r2}, residual df = {fit.residual_df}")
    return "\n".join(lines) + "\n"


def fit_csv(fit: FitResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["term", "value", "standard_error", "t_value", "p_value"])
    for row in zip(fit.terms, fit.coefficients, fit.standard_errors, fit.t_values, fit.p_values):
        w.writerow([row[0], *(repr(float(v)) for v in row[1:])])
    return buf.getvalue()


def _as_dict(result):
    if hasattr(result, "to_dict"):
        return result.to_dict()
    return result


def emit_report(result, fmt: str = "json") -> str:
    """Render ``result`` as ``json`` (lossless), ``table`` or ``csv`` text."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {FORMATS}")
    if isinstance(result, FitResult):
        if fmt == "table":
            return fit_table(result)
        if fmt == "csv":
            return fit_csv(result)
    if fmt == "json":
        return dumps_json(_as_dict(result))
    data = _as_dict(result)
    if isinstance(data, dict):
        width = max((len(str(k)) for k in data), default=0)
        return "".join(f"{k:<{width}}  {v}\n" for k, v in data.items())
    return f"{data}\n"
