"""Command-line front end.

Machine-readable output goes to stdout and diagnostics to stderr. Exit
codes: 0 ok, 1 input error, 2 numeric or guard error, 3 axiom-check failure.

Any long flag can also come from ``--config FILE``: one ``key = value`` per
line, keys spelled like the flags without the leading dashes (``risk = cvar``).
Flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from riskshap import axioms, fixtures
from riskshap.data_io import (
    augment_baseline,
    build_bsm_scenarios,
    compute_residuals,
    load_csv,
    load_vector,
    save_csv,
    ScenarioMatrix,
)
from riskshap.errors import InputError, NumericError
from riskshap.models import BSMCall, ResidualAugmented, load_model, model_to_dict, save_model
from riskshap.portfolio import min_cvar_weights
from riskshap.risk_measures import FLAG_KINDS, RiskKind, RiskMeasureSpec, evaluate
from riskshap.shapley import ENUMERATION_GUARD, BaselineGame, SampleRiskGame, shapley_exact, shapley_sampled

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_AXIOM = 0, 1, 2, 3


class UsageError(InputError):
    pass


def read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")


def _parse_row(text: str, columns=None) -> np.ndarray:
    """A baseline/explicand row: a CSV file (header + one row) or comma-separated numbers."""
    path = Path(text)
    if path.is_file():
        matrix = load_csv(path)
        if columns is not None and matrix.n_features == len(columns) and matrix.columns != tuple(columns):
            raise UsageError(f"{path}: columns {list(matrix.columns)} do not match {list(columns)}")
        return matrix.values[0].copy()
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"cannot read row {text!r}: neither a file nor comma-separated numbers") from None


def _resolve_baseline(spec: str, data: ScenarioMatrix | None, m: int) -> np.ndarray:
    if spec == "zeros":
        return np.zeros(m)
    if spec == "current":
        if data is None:
            raise UsageError("--baseline current needs --input")
        return data.values[-1].copy()
    row = _parse_row(spec, data.columns if data is not None else None)
    if row.size != m:
        raise UsageError(f"baseline has {row.size} values, expected {m}")
    return row


def _risk(args) -> RiskMeasureSpec:
    return RiskMeasureSpec.from_flag(args.risk, args.alpha, args.ddof)


def _build_game(args):
    _require(args, "model", "input")
    model = load_model(args.model)
    data = load_csv(args.input, date_column=args.date_column, transform=args.transform)
    if data.n_features != model.n_features:
        raise UsageError(f"model expects {model.n_features} features, {args.input} has {data.n_features}")
    baseline = _resolve_baseline(args.baseline, data, data.n_features)
    if args.residuals is not None:
        # rows align by position with the (possibly transformed) input
        y = load_vector(args.residuals, args.residual_column, args.date_column)
        data = compute_residuals(model, data, y)
        model = ResidualAugmented(model)
        baseline = augment_baseline(baseline)
    return SampleRiskGame(model, data, baseline, _risk(args))


def _run_engine(game, args):
    if args.method == "exact":
        return shapley_exact(game, threads=args.threads, max_features=args.max_exact_features)
    return shapley_sampled(game, args.permutations, seed=args.seed, threads=args.threads)


def _write_report(report, args, title):
    if args.svg is not None:
        Path(args.svg).write_text(report.to_svg(title), encoding="utf-8")
    _emit(report.to_csv() if args.format == "csv" else report.to_json())


def cmd_attribute(args) -> int:
    game = _build_game(args)
    report = _run_engine(game, args)
    _write_report(report, args, f"risk attribution ({game.risk.label()})")
    return EXIT_OK


def cmd_bam(args) -> int:
    _require(args, "model", "explicand")
    model = load_model(args.model)
    data = load_csv(args.input, date_column=args.date_column) if args.input is not None else None
    names = data.columns if data is not None else getattr(model, "feature_names", None)
    explicand = _parse_row(args.explicand, names)
    baseline = _resolve_baseline(args.baseline, data, model.n_features)
    game = BaselineGame(model, explicand, baseline, names)
    report = _run_engine(game, args)
    _write_report(report, args, "baseline attribution")
    return EXIT_OK


def cmd_optimize_cvar(args) -> int:
    _require(args, "input")
    data = load_csv(args.input, date_column=args.date_column, transform=args.transform)
    spec = RiskMeasureSpec(RiskKind.CVAR, args.alpha)
    opt = min_cvar_weights(data, args.alpha)
    before = [evaluate(spec, data.values[:, k]) for k in range(data.n_features)]
    _emit(json.dumps({
        "assets": list(data.columns),
        "alpha": args.alpha,
        "weights": opt.weights.tolist(),
        "cvar_before": before,
        "cvar_after": opt.optimal_cvar,
        "lp_objective": opt.lp_objective,
        "iterations": opt.iterations,
    }, indent=2))
    return EXIT_OK


def cmd_check_axioms(args) -> int:
    game = _build_game(args)
    if game.n_features > args.max_exact_features:
        raise UsageError(f"{game.n_features} features exceed the enumeration guard {args.max_exact_features}")
    checks = axioms.run_all_checks(game)
    _emit(json.dumps([c.to_dict() for c in checks], indent=2))
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(f"axiom violated: {c.axiom} (witness {c.witness})", file=sys.stderr)
    return EXIT_AXIOM if failed else EXIT_OK


def cmd_bsm_scenario(args) -> int:
    _require(args, "input", "strike")
    market = load_csv(args.input, date_column=args.date_column)
    maturity = args.maturity if args.maturity is not None else args.maturity_days / 365.0
    built = build_bsm_scenarios(
        market.column(args.price_column),
        market.column(args.vol_column),
        market.column(args.rate_column),
        args.strike,
        maturity,
        labels=market.labels,
    )
    if args.out_scenarios is not None:
        save_csv(built.scenarios, args.out_scenarios)
    if args.out_baseline is not None:
        save_csv(ScenarioMatrix(built.scenarios.columns, built.baseline[None, :]), args.out_baseline)
    if args.out_model is not None:
        save_model(built.model, args.out_model)
    _emit(json.dumps({
        "rows": built.scenarios.n_rows,
        "columns": list(built.scenarios.columns),
        "baseline": built.baseline.tolist(),
        "model": model_to_dict(built.model),
    }, indent=2))
    return EXIT_OK


def cmd_demo_bundle(args) -> int:
    paths = fixtures.write_demo_bundle(args.directory, gaussian_rows=args.gaussian_rows)
    _emit(json.dumps({k: str(v) for k, v in paths.items()}, indent=2))
    return EXIT_OK


def cmd_incompat(args) -> int:
    rep = axioms.demonstrate_incompatibilities(
        sigma1=args.sigma1, sigma2=args.sigma2, rho=args.rho, sm_sigma=args.sm_sigma, sm_rho=args.sm_rho, seed=args.seed
    )
    _emit(json.dumps(rep.to_dict(), indent=2) if args.json else rep.text())
    return EXIT_OK


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value file mirroring the long flags")
    return p


def _data_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", help="scenario CSV (header row, numeric columns)")
    p.add_argument("--date-column", help="column holding row labels")
    p.add_argument("--transform", choices=("none", "log_return"), default="none")
    return p


def _game_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--risk", choices=sorted(FLAG_KINDS), default="std",
                   help="std, var (variance), varq (value-at-risk) or cvar")
    p.add_argument("--alpha", type=float, default=0.05, help="tail level for varq/cvar")
    p.add_argument("--ddof", type=int, choices=(0, 1), default=0, help="std/variance denominator n - ddof")
    p.add_argument("--baseline", default="zeros", help="zeros, current (last input row), a CSV file or a,b,c")
    p.add_argument("--residuals", help="CSV of targets y; adds the residual y - f(x) as a feature")
    p.add_argument("--residual-column", help="column of --residuals holding y")
    return p


def _engine_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--method", choices=("exact", "sampled"), default="exact")
    p.add_argument("--permutations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--max-exact-features", type=int, default=ENUMERATION_GUARD)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--svg", help="also write a bar chart to this path")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskshap", description="Shapley risk attribution")
    sub = parser.add_subparsers(dest="command", required=True)
    cfg, data, game, engine = _config_parent(), _data_parent(), _game_parent(), _engine_parent()

    p = sub.add_parser("attribute", parents=[cfg, data, game, engine], help="attribute sample risk to features")
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("bam", parents=[cfg, engine], help="attribute one prediction relative to a baseline")
    p.add_argument("--model")
    p.add_argument("--explicand", help="CSV file or comma-separated values")
    p.add_argument("--baseline", default="zeros")
    p.add_argument("--input", help="optional CSV for feature names and --baseline current")
    p.add_argument("--date-column")
    p.set_defaults(func=cmd_bam)

    p = sub.add_parser("optimize-cvar", parents=[cfg, data], help="minimum-CVaR long-only weights")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_optimize_cvar)

    p = sub.add_parser("check-axioms", parents=[cfg, data, game], help="verify the allocation axioms on a game")
    p.add_argument("--max-exact-features", type=int, default=ENUMERATION_GUARD)
    p.set_defaults(func=cmd_check_axioms)

    p = sub.add_parser("bsm-scenario", parents=[cfg], help="build next-day option-pricing scenarios")
    p.add_argument("--input", help="market CSV with price, vol and rate columns")
    p.add_argument("--date-column")
    p.add_argument("--price-column", default="price")
    p.add_argument("--vol-column", default="vol")
    p.add_argument("--rate-column", default="rate")
    p.add_argument("--strike", type=float)
    p.add_argument("--maturity", type=float, help="years; overrides --maturity-days")
    p.add_argument("--maturity-days", type=float, default=30.0)
    p.add_argument("--out-scenarios")
    p.add_argument("--out-baseline")
    p.add_argument("--out-model")
    p.set_defaults(func=cmd_bsm_scenario)

    p = sub.add_parser("demo-bundle", parents=[cfg], help="write the synthetic demo inputs")
    p.add_argument("directory")
    p.add_argument("--gaussian-rows", type=int, default=200_000)
    p.set_defaults(func=cmd_demo_bundle)

    p = sub.add_parser("incompat", parents=[cfg], help="print the axiom incompatibility demonstrations")
    p.add_argument("--sigma1", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--sm-sigma", type=float, default=1.0)
    p.add_argument("--sm-rho", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_incompat)
    return parser


def _subparser(parser, name):
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = _config_parent().parse_known_args(argv)
        if pre.config is not None and argv and not argv[0].startswith("-"):
            sub = _subparser(parser, argv[0])
            if sub is not None:
                sub.set_defaults(**read_config(pre.config))
        args = parser.parse_args(argv)
        return args.func(args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
