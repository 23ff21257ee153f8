"""``slidekit`` command line.

Exit codes: 0 success, 2 invalid input (parse/validation), 3 numerical
failure (rank deficiency, degenerate coding range).  Results go to stdout
or ``--out``; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .coding import code
from .errors import NumericalError, SlideKitError, ValidationError
from .io import dumps_json, load_design, matrix_csv, read_json, read_response, write_text
from .linear_model import FitResult, ols_fit
from .region import build_region, predict_rsm
from .report import FORMATS, emit_report
from .simulate import comparison_from_config
from .translation import (
    RcrsModel,
    RsmModel,
    hybrid_fit,
    nem_model_from_coefficients,
    nem_to_rsm,
    rcrs_expand,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _emit(text: str, out) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def _floats(text: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ValidationError(f"{what} must be {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ValidationError(f"{what} must be {n} comma-separated numbers, got {text!r}")
    return vals


def cmd_code(args) -> int:
    design = load_design(args.design)
    kw = {}
    if args.terms:
        if args.scheme != "rsm":
            raise ValidationError("--terms applies to the rsm scheme only")
        presets = ("saturated", "second_order")
        kw["term_set"] = args.terms if args.terms in presets else [t.strip() for t in args.terms.split(",")]
    m = code(design, args.scheme, covariates=args.covariates, **kw)
    if not args.intercept:
        m = m.drop_intercept()
    _emit(matrix_csv(m.terms, m.values), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    design = load_design(args.design)
    y = read_response(args.response, args.column)
    m = code(design, args.scheme, covariates=args.covariates)
    fit = ols_fit(m, y)
    _emit(emit_report(fit, args.report), args.out)
    return EXIT_OK


def cmd_translate(args) -> int:
    if args.source == "nem":
        if not args.design:
            raise ValidationError("translate --from nem needs --design")
        design = load_design(args.design)
        parent, slid, _ = design.pair()
        if args.fit:
            fit = FitResult.from_dict(read_json(args.fit))
            if fit.scheme and fit.scheme.upper() != "NEM":
                raise ValidationError(f"fit was produced with scheme {fit.scheme}, not NEM")
            nem = nem_model_from_coefficients(design, dict(zip(fit.terms, fit.coefficients)))
            model = nem_to_rsm(nem, parent.name, slid.name)
        elif args.response:
            model = hybrid_fit(design, read_response(args.response, args.column))
        else:
            raise ValidationError("translate --from nem needs --fit or --response")
    else:
        if not (args.eta and args.geometry):
            raise ValidationError("translate --from rcrs needs --eta and --geometry")
        eta = read_json(args.eta)
        s, t, r = _floats(args.geometry, 3, "--geometry")
        names = ("eta0", "eta1", "eta11", "eta2", "eta22", "eta12")
        unknown = set(eta) - set(names)
        if unknown:
            raise ValidationError(f"unknown eta keys {sorted(unknown)}; expected {names}")
        model = rcrs_expand(RcrsModel(**{k: float(eta.get(k, 0.0)) for k in names}, s=s, t=t, r=r))
    _emit(dumps_json(model.to_dict()), args.out)
    return EXIT_OK


def _parse_at(text: str) -> dict[str, float]:
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ValidationError(f"--at expects NAME=VALUE pairs, got {part!r}")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = float(v)
        except ValueError:
            raise ValidationError(f"--at value for {k.strip()!r} is not a number: {v!r}") from None
    return out


def cmd_predict(args) -> int:
    design = load_design(args.design)
    model = RsmModel.from_dict(read_json(args.model))
    region = build_region(design)
    at = _parse_at(args.at)
    missing = {region.parent, region.slid} - set(at)
    if missing:
        raise ValidationError(f"--at lacks values for {sorted(missing)}")
    a, b = at[region.parent], at[region.slid]
    x_a, x_b = (a, b) if args.coded else tuple(float(v) for v in region.to_coded(a, b))
    pred = predict_rsm(model, region, x_a, x_b)
    if args.report == "json":
        _emit(dumps_json({"value": pred.value, "zone": pred.zone.value, "x_A": x_a, "x_B": x_b}), args.out)
    else:
        _emit(f"{pred.value:.6g}\t{pred.zone.value}\n", args.out)
    return EXIT_OK


def cmd_region(args) -> int:
    design = load_design(args.design)
    region = build_region(design)
    rows = []
    for x_a, x_b in region.vertices:
        a, b = region.to_actual(x_a, x_b)
        rows.append([x_a, x_b, float(a), float(b)])
    _emit(matrix_csv(["x_" + region.parent, "x_" + region.slid, region.parent, region.slid], rows), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = read_json(args.config)
    report = comparison_from_config(config, seed=args.seed, reps=args.reps)
    _emit(dumps_json(report.to_dict()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slidekit", description="Modeling tools for sliding-level experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def design_arg(sp):
        sp.add_argument("--design", required=True, help="design CSV (with sibling .json) or a fixture name such as 'welding'")

    sp = sub.add_parser("code", help="write a coded model matrix as CSV")
    design_arg(sp)
    sp.add_argument("--scheme", required=True, choices=("rcrs", "nem", "rsm"))
    sp.add_argument("--covariates", default="none", choices=("none", "linear", "lq"))
    sp.add_argument("--terms", help="RSM monomials, comma-separated (x_A,x_B^2,...) or saturated/second_order")
    sp.add_argument("--intercept", action="store_true", help="include the intercept column")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_code)

    sp = sub.add_parser("fit", help="least-squares fit under a coding scheme")
    design_arg(sp)
    sp.add_argument("--response", required=True, help="CSV with a header row")
    sp.add_argument("--column", help="response column name (default: first column)")
    sp.add_argument("--scheme", required=True, choices=("rcrs", "nem", "rsm"))
    sp.add_argument("--covariates", default="none", choices=("none", "linear", "lq"))
    sp.add_argument("--report", default="json", choices=FORMATS)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("translate", help="translate model coefficients into an RSM polynomial")
    sp.add_argument("--from", dest="source", required=True, choices=("nem", "rcrs"))
    sp.add_argument("--design")
    sp.add_argument("--fit", help="NEM fit JSON produced by 'slidekit fit --scheme nem'")
    sp.add_argument("--response", help="fit the NEM from this response CSV instead of --fit")
    sp.add_argument("--column")
    sp.add_argument("--eta", help="JSON with eta0, eta1, eta11, eta2, eta22, eta12")
    sp.add_argument("--geometry", help="s,t,r")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_translate)

    sp = sub.add_parser("predict", help="evaluate an RSM model and classify the point")
    design_arg(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--at", required=True, help='factor values, e.g. "A=3,B=29"')
    sp.add_argument("--coded", action="store_true", help="--at values are already coded")
    sp.add_argument("--report", default="table", choices=("table", "json"))
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("region", help="write the experimental-region polygon as CSV")
    design_arg(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("simulate", help="Monte Carlo comparison of the modeling strategies")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)
    return p


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"slidekit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, SlideKitError) as exc:
        print(f"slidekit: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"slidekit: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(dispatch())
