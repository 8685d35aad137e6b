"""Command line front end.

Subcommands::

    simulate      simulate one asset-day and write it as a trade CSV
    estimate      per-day estimates from trade CSVs
    regress       spread-volatility regression over a daily records CSV
    predict       zone-ratio forecast for a contemplated tick change
    optimal-tick  implied optimal tick table for the bundled reference assets
    signature     realized-variance signature curve from trade CSVs
    pipeline      full batch run driven by a config file

Set ``TICKZONE_LOG=INFO`` (or DEBUG) to see progress and skip reasons.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import os
import sys
from datetime import date as date_type
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from .domain import AssetSpec
from .equilibrium import equilibrium_report
from .errors import TickzoneError
from .estimators import build_daily_record, signature_plot
from .pipeline import (
    DAILY_CSV_HEADER,
    daily_record_rows,
    fmt_float,
    load_config,
    read_daily_records_csv,
    run_pipeline,
)
from .regression import REGRESSION_CSV_HEADER, fit_spread_vol
from .simulator import EfficientPathSpec, TapeConfig, equilibrium_fill_rate, simulate_day
from .tick_policy import (
    BETA_PRESETS,
    VERSIONS,
    TickScenario,
    load_reference_assets,
    optimal_tick_table,
    predict_eta,
)
from .tradefile import SessionFilter, ingest_trades, write_tape_csv


def _open_out(out: Optional[str]):
    if out:
        return open(out, "w", newline="")
    return contextlib.nullcontext(sys.stdout)


def _session(args) -> SessionFilter:
    return SessionFilter.from_text(args.session, tz=args.timezone)


def _add_session_args(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--session", default=default, help="trading window HH:MM-HH:MM")
    p.add_argument("--timezone", default="UTC", help="IANA zone the window is quoted in")


def _cmd_simulate(args) -> int:
    session = _session(args)
    asset = AssetSpec(args.asset_id, float(Fraction(args.tick_value)), eta=args.eta)
    horizon = session.length_seconds
    if args.fills == "auto":
        intensity = equilibrium_fill_rate(asset, args.sigma, horizon)
    else:
        intensity = float(args.fills)
    spec = EfficientPathSpec(x0=args.x0, volatility=args.sigma, horizon=horizon)
    tape, truth = simulate_day(spec, asset, TapeConfig(trade_intensity=intensity, seed=args.seed))
    day = date_type.fromisoformat(args.day)
    write_tape_csv(tape, Path(args.out), day, session)
    print(
        f"wrote {args.out}: {len(tape)} trades, {tape.n_changes} price changes, "
        f"integrated variance {fmt_float(truth.integrated_variance)}"
    )
    return 0


def _cmd_estimate(args) -> int:
    asset = AssetSpec(args.asset_id, float(Fraction(args.tick_value)))
    day_tapes = ingest_trades(args.inputs, asset, session=_session(args), tick_text=args.tick_value)
    records = []
    failures = 0
    for day, tape in day_tapes:
        try:
            records.append(build_daily_record(tape, date=day.isoformat()))
        except TickzoneError as exc:
            failures += 1
            print(f"skipped: {exc}", file=sys.stderr)
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(DAILY_CSV_HEADER)
        writer.writerows(daily_record_rows(records))
    return 0 if records else 1


def _cmd_regress(args) -> int:
    records = read_daily_records_csv(args.records)
    groups = {}
    for r in records:
        key = f"{r.asset_id}@{r.alpha:g}" if args.split_regimes else r.asset_id
        groups.setdefault(key, []).append(r)
    fits = {}
    for key in sorted(groups):
        try:
            fits[key] = fit_spread_vol(groups[key], exclude_flagged=not args.keep_flagged)
        except TickzoneError as exc:
            print(f"skipped {key}: {exc}", file=sys.stderr)
    if args.pool:
        fits["ALL"] = fit_spread_vol(records, exclude_flagged=not args.keep_flagged)
    if not fits:
        print("error: no group could be fitted", file=sys.stderr)
        return 1
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(REGRESSION_CSV_HEADER)
        for key in sorted(k for k in fits if k != "ALL") + (["ALL"] if "ALL" in fits else []):
            row = fits[key].row(key)
            writer.writerow([row[0]] + [fmt_float(v) for v in row[1:]])
    return 0


def _cmd_predict(args) -> int:
    scenario = TickScenario(
        alpha0=args.alpha0,
        eta0=args.eta0,
        alpha=args.alpha,
        p1_0=args.p1,
        p2_0=args.p2,
        beta=args.beta,
        m0=args.m0,
        sigma0=args.sigma0,
    )
    forecast = predict_eta(scenario, version=args.version)
    print(f"eta_pred: {fmt_float(forecast.eta_pred)}")
    print(f"in_large_tick_regime: {str(forecast.in_large_tick_regime).lower()}")
    if forecast.warning:
        print(f"warning: {forecast.warning}")
    try:
        report = equilibrium_report(AssetSpec("TARGET", args.alpha, eta=forecast.eta_pred))
    except TickzoneError:
        return 0
    print(f"p_revert: {fmt_float(report.p_revert)}")
    print(f"p_continue: {fmt_float(report.p_continue)}")
    print(f"market_order_cost: {fmt_float(report.market_order_cost)}")
    return 0


def _cmd_optimal_tick(args) -> int:
    assets = load_reference_assets()
    if args.asset:
        wanted = set(args.asset)
        unknown = wanted - {a.asset_id for a in assets}
        if unknown:
            print(f"error: unknown asset(s): {', '.join(sorted(unknown))}", file=sys.stderr)
            return 1
        assets = [a for a in assets if a.asset_id in wanted]
    betas = tuple(args.beta) if args.beta else BETA_PRESETS
    versions = tuple(args.version) if args.version else VERSIONS
    table = optimal_tick_table(assets, betas=betas, versions=versions)
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["asset_id", "tick_value"] + [f"v{v}_beta{b:g}" for v in versions for b in betas])
        for row in table:
            writer.writerow(
                [row["asset_id"], fmt_float(row["tick_value"])]
                + [fmt_float(row[(v, b)]) for v in versions for b in betas]
            )
    return 0


def _cmd_signature(args) -> int:
    asset = AssetSpec(args.asset_id, float(Fraction(args.tick_value)))
    day_tapes = ingest_trades(args.inputs, asset, session=_session(args), tick_text=args.tick_value)
    wrote = 0
    with _open_out(args.out) as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "lag", "realized_variance"])
        for day, tape in day_tapes:
            try:
                curve = signature_plot(
                    tape, samples_per_second=args.samples_per_second, lag_max=args.lag_max
                )
            except TickzoneError as exc:
                print(f"skipped: {asset.asset_id} {day.isoformat()}: {exc}", file=sys.stderr)
                continue
            for lag in sorted(curve.points):
                writer.writerow([day.isoformat(), lag, fmt_float(curve.points[lag])])
            wrote += 1
    return 0 if wrote else 1


def _cmd_pipeline(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out:
        overrides["out"] = args.out
    if args.session:
        overrides["session"] = args.session
    config = load_config(args.config, overrides)
    result = run_pipeline(config)
    print(result.summary())
    return 0 if result.records else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tickzone",
        description="Large-tick market microstructure: simulation, estimation and tick policy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one asset-day into a trade CSV")
    p.add_argument("--asset-id", default="SIM")
    p.add_argument("--tick-value", default="0.01", help="tick value as decimal text")
    p.add_argument("--eta", type=float, required=True, help="zone ratio in (0, 1]")
    p.add_argument("--sigma", type=float, required=True, help="volatility per sqrt(second)")
    p.add_argument("--x0", type=float, default=100.0, help="efficient price at the open")
    p.add_argument("--fills", default="auto", help="'auto' or fill trades per second")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--day", default="2009-06-01", help="calendar date stamped on the file")
    p.add_argument("--out", required=True, help="output trade CSV path")
    _add_session_args(p, default="08:00-16:00")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="daily estimates from trade CSVs")
    p.add_argument("inputs", nargs="+", help="trade CSV files for one asset")
    p.add_argument("--tick-value", required=True, help="tick value as decimal text")
    p.add_argument("--asset-id", default="ASSET")
    p.add_argument("--out", help="output CSV (default stdout)")
    _add_session_args(p, default="00:00-24:00")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("regress", help="spread-volatility regression over daily records")
    p.add_argument("--records", required=True, help="daily records CSV from estimate/pipeline")
    p.add_argument("--split-regimes", action="store_true", help="fit tick-value regimes separately")
    p.add_argument("--keep-flagged", action="store_true", help="keep days with a flagged ratio")
    p.add_argument("--no-pool", dest="pool", action="store_false", help="skip the pooled ALL fit")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_regress)

    p = sub.add_parser("predict", help="forecast the zone ratio after a tick change")
    p.add_argument("--alpha0", type=float, required=True, help="current tick value")
    p.add_argument("--eta0", type=float, required=True, help="current zone ratio")
    p.add_argument("--alpha", type=float, required=True, help="candidate tick value")
    p.add_argument("--beta", type=float, default=1.0, help="trade-count elasticity in (0, 2)")
    p.add_argument("--version", type=int, default=1, choices=VERSIONS)
    p.add_argument("--p1", type=float, help="fitted slope (needed by version 1)")
    p.add_argument("--p2", type=float, help="fitted spread coefficient")
    p.add_argument("--m0", type=float, help="current trades per day")
    p.add_argument("--sigma0", type=float, help="current daily volatility")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("optimal-tick", help="optimal tick table for the reference assets")
    p.add_argument("--asset", action="append", help="restrict to this asset id (repeatable)")
    p.add_argument("--beta", action="append", type=float, help="elasticity preset (repeatable)")
    p.add_argument("--version", action="append", type=int, choices=VERSIONS, help="formula version (repeatable)")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_optimal_tick)

    p = sub.add_parser("signature", help="realized-variance signature curve")
    p.add_argument("inputs", nargs="+", help="trade CSV files for one asset")
    p.add_argument("--tick-value", required=True, help="tick value as decimal text")
    p.add_argument("--asset-id", default="ASSET")
    p.add_argument("--samples-per-second", type=float, default=1.0)
    p.add_argument("--lag-max", type=int, default=50)
    p.add_argument("--out", help="output CSV (default stdout)")
    _add_session_args(p, default="00:00-24:00")
    p.set_defaults(func=_cmd_signature)

    p = sub.add_parser("pipeline", help="run the batch pipeline from a config file")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--session", help="override the session window")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    level = os.environ.get("TICKZONE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TickzoneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
