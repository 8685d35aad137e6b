"""Batch pipeline turning trade files into daily estimates and reports.

Two modes share one code path. In ``ingest`` mode trade CSVs are read from
``input_dir/<ASSET>/*.csv``. In ``synthetic`` mode asset-days are simulated,
written out as trade CSVs under ``out/trades/``, and fed back through the
same ingestion machinery, so synthetic runs exercise exactly the parsing and
estimation used on real data.

Outputs, all under ``out``:

- ``daily_records.csv``   one row per asset-day with estimates and diagnostics
- ``regression.csv``      spread-volatility fit per asset (plus pooled ``ALL``)
- ``cloud_raw.csv``       points (eta*alpha*sqrt(M), sigma) with the y = x line
- ``cloud_adjusted.csv``  the same cloud after applying the fitted coefficients
- ``optimal_ticks.csv``   implied optimal tick sizes for the pipeline's assets
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date as date_type
from datetime import timedelta
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from .domain import AssetSpec
from .equilibrium import crossing_probabilities
from .errors import IngestError, ParameterError, TickzoneError
from .estimators import DailyRecord, build_daily_record
from .regression import REGRESSION_CSV_HEADER, RegressionFit, fit_spread_vol
from .simulator import EfficientPathSpec, TapeConfig, equilibrium_fill_rate, simulate_day
from .tick_policy import BETA_PRESETS, VERSIONS, TickScenario, optimal_tick
from .tradefile import DayTape, SessionFilter, ingest_trades, write_tape_csv

logger = logging.getLogger(__name__)

DAILY_CSV_HEADER = [
    "date", "asset_id", "eta_hat", "alpha", "sigma_hat", "m_trades",
    "avg_spread", "frac_one_tick", "market_order_cost", "p_revert", "p_continue",
]
CLOUD_CSV_HEADER = ["x", "y", "ref"]


def fmt_float(v: float) -> str:
    """Canonical float rendering for every CSV the pipeline writes."""
    return f"{v:.12g}"


_fmt = fmt_float


@dataclass(frozen=True)
class SyntheticAsset:
    """Parameters for one simulated asset in synthetic mode."""

    asset_id: str
    tick_text: str
    eta: float
    sigma: float
    days: int = 20
    x0: float = 100.0
    fills: Union[str, float] = "auto"
    sigma_jitter: float = 0.1

    def __post_init__(self):
        if self.days < 1:
            raise ParameterError(f"{self.asset_id}: days must be >= 1")
        if self.sigma <= 0:
            raise ParameterError(f"{self.asset_id}: sigma must be > 0")
        if not 0.0 <= self.sigma_jitter < 1.0:
            raise ParameterError(f"{self.asset_id}: sigma_jitter must lie in [0, 1)")
        if isinstance(self.fills, str) and self.fills != "auto":
            raise ParameterError(f"{self.asset_id}: fills must be 'auto' or a number")


@dataclass(frozen=True)
class PipelineConfig:
    mode: str
    out: Path
    seed: int = 0
    session: SessionFilter = field(default_factory=lambda: SessionFilter(0, 86400))
    pool: bool = True
    split_regimes: bool = False
    keep_flagged: bool = False
    workers: int = 4
    start_date: date_type = date_type(2009, 6, 1)
    beta: Optional[float] = None
    input_dir: Optional[Path] = None
    tick_values: Mapping[str, str] = field(default_factory=dict)
    synthetic: Mapping[str, SyntheticAsset] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("ingest", "synthetic"):
            raise ParameterError(f"mode must be 'ingest' or 'synthetic', got {self.mode!r}")
        if self.mode == "ingest" and self.input_dir is None:
            raise ParameterError("ingest mode needs input_dir")
        if self.mode == "synthetic" and not self.synthetic:
            raise ParameterError("synthetic mode needs at least one synthetic.<ID>.* block")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")


_TOP_KEYS = {
    "mode", "out", "seed", "session", "timezone", "beta", "pool", "split_regimes",
    "keep_flagged", "workers", "start_date", "input_dir",
}
_SYN_KEYS = {"tick_value", "eta", "sigma", "days", "x0", "fills", "sigma_jitter"}


def _parse_bool(value: str, key: str) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ParameterError(f"{key}: expected a boolean, got {value!r}")


def parse_config_text(text: str, overrides: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """Parse ``key = value`` lines; '#' starts a comment, blank lines ignored."""
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {lineno}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ParameterError(f"config line {lineno}: empty key or value")
        if key in raw:
            raise ParameterError(f"config line {lineno}: duplicate key {key!r}")
        raw[key] = value
    for key, value in (overrides or {}).items():
        raw[key] = value

    tick_values: Dict[str, str] = {}
    syn_params: Dict[str, Dict[str, str]] = {}
    for key in list(raw):
        if key.startswith("tick_value."):
            tick_values[key[len("tick_value."):]] = raw.pop(key)
        elif key.startswith("synthetic."):
            parts = key.split(".")
            if len(parts) != 3 or parts[2] not in _SYN_KEYS:
                raise ParameterError(
                    f"unknown synthetic key {key!r}; use synthetic.<ID>.<{'|'.join(sorted(_SYN_KEYS))}>"
                )
            syn_params.setdefault(parts[1], {})[parts[2]] = raw.pop(key)
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "out" not in raw:
        raise ParameterError("config needs an out directory")

    session = SessionFilter.from_text(raw.get("session", "00:00-24:00"), tz=raw.get("timezone", "UTC"))
    synthetic: Dict[str, SyntheticAsset] = {}
    for aid, params in sorted(syn_params.items()):
        missing = {"tick_value", "eta", "sigma"} - set(params)
        if missing:
            raise ParameterError(f"synthetic.{aid}: missing {', '.join(sorted(missing))}")
        fills: Union[str, float] = params.get("fills", "auto")
        if fills != "auto":
            fills = float(fills)
        synthetic[aid] = SyntheticAsset(
            asset_id=aid,
            tick_text=params["tick_value"],
            eta=float(params["eta"]),
            sigma=float(params["sigma"]),
            days=int(params.get("days", "20")),
            x0=float(params.get("x0", "100.0")),
            fills=fills,
            sigma_jitter=float(params.get("sigma_jitter", "0.1")),
        )
    return PipelineConfig(
        mode=raw.get("mode", "ingest" if "input_dir" in raw else "synthetic"),
        out=Path(raw["out"]),
        seed=int(raw.get("seed", "0")),
        session=session,
        pool=_parse_bool(raw.get("pool", "true"), "pool"),
        split_regimes=_parse_bool(raw.get("split_regimes", "false"), "split_regimes"),
        keep_flagged=_parse_bool(raw.get("keep_flagged", "false"), "keep_flagged"),
        workers=int(raw.get("workers", "4")),
        start_date=date_type.fromisoformat(raw.get("start_date", "2009-06-01")),
        beta=float(raw["beta"]) if "beta" in raw else None,
        input_dir=Path(raw["input_dir"]) if "input_dir" in raw else None,
        tick_values=tick_values,
        synthetic=synthetic,
    )


def load_config(path: Union[str, Path], overrides: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    return parse_config_text(Path(path).read_text(), overrides)


@dataclass
class PipelineResult:
    records: List[DailyRecord]
    fits: Dict[str, RegressionFit]
    skipped: List[str]
    outputs: Dict[str, Path]
    n_files: int = 0

    def summary(self) -> str:
        lines = [
            f"{len(self.records)} asset-day record(s) from {self.n_files} file(s); "
            f"{len(self.fits)} regression fit(s)"
        ]
        for name in sorted(self.outputs):
            lines.append(f"  wrote {self.outputs[name]}")
        if self.skipped:
            lines.append(f"{len(self.skipped)} item(s) skipped:")
            lines.extend(f"  {msg}" for msg in self.skipped)
        return "\n".join(lines)


def _synthesize(config: PipelineConfig) -> Dict[str, List[Path]]:
    """Simulate every configured asset-day and write it as a trade CSV."""
    trade_dir = config.out / "trades"
    files: Dict[str, List[Path]] = {}
    horizon = config.session.length_seconds
    for ai, aid in enumerate(sorted(config.synthetic)):
        syn = config.synthetic[aid]
        asset = AssetSpec(aid, float(Fraction(syn.tick_text)), eta=syn.eta)
        jitter_rng = np.random.default_rng([config.seed, 0x5117E5, ai])
        asset_dir = trade_dir / aid
        asset_dir.mkdir(parents=True, exist_ok=True)
        files[aid] = []
        for di in range(syn.days):
            sigma_day = syn.sigma * (1.0 + syn.sigma_jitter * (2.0 * jitter_rng.random() - 1.0))
            if syn.fills == "auto":
                intensity = equilibrium_fill_rate(asset, sigma_day, horizon)
            else:
                intensity = float(syn.fills)
            day_seed = int(np.random.SeedSequence([config.seed, ai, di]).generate_state(1)[0])
            spec = EfficientPathSpec(x0=syn.x0, volatility=sigma_day, horizon=horizon)
            tape, _ = simulate_day(spec, asset, TapeConfig(trade_intensity=intensity, seed=day_seed))
            day = config.start_date + timedelta(days=di)
            path = asset_dir / f"{day.isoformat()}.csv"
            write_tape_csv(tape, path, day, config.session)
            files[aid].append(path)
        logger.info("synthesized %d day(s) for %s", syn.days, aid)
    return files


def _discover(config: PipelineConfig, skipped: List[str]) -> tuple[Dict[str, List[Path]], Dict[str, str]]:
    """Map asset id -> trade files and asset id -> tick text for ingest mode."""
    files: Dict[str, List[Path]] = {}
    ticks: Dict[str, str] = {}
    root = config.input_dir
    if not root.is_dir():
        raise ParameterError(f"input_dir {root} is not a directory")
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        aid = sub.name
        found = sorted(sub.glob("*.csv"))
        if not found:
            skipped.append(f"{aid}: no csv files under {sub}")
            continue
        if aid not in config.tick_values:
            skipped.append(f"{aid}: no tick_value.{aid} configured, asset skipped")
            continue
        files[aid] = found
        ticks[aid] = config.tick_values[aid]
    return files, ticks


def _daily_diagnostics(r: DailyRecord) -> List[str]:
    cost = r.alpha * (0.5 - r.eta_hat)
    try:
        p_revert, p_continue = crossing_probabilities(r.eta_hat)
        return [_fmt(cost), _fmt(p_revert), _fmt(p_continue)]
    except TickzoneError:
        return [_fmt(cost), "", ""]


def daily_record_rows(records: Sequence[DailyRecord]) -> List[List]:
    return [
        [
            r.date, r.asset_id, _fmt(r.eta_hat), _fmt(r.alpha), _fmt(r.sigma_hat),
            r.m_trades, _fmt(r.avg_spread), _fmt(r.frac_one_tick),
        ]
        + _daily_diagnostics(r)
        for r in records
    ]


def write_daily_records_csv(records: Sequence[DailyRecord], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DAILY_CSV_HEADER)
        writer.writerows(daily_record_rows(records))


def read_daily_records_csv(path: Union[str, Path]) -> List[DailyRecord]:
    """Read records written by :func:`write_daily_records_csv`.

    The trailing diagnostic columns are ignored; they are derived values and
    get recomputed on the next write.
    """
    path = Path(path)
    records: List[DailyRecord] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("file is empty", path=path) from None
        if header[: len(DAILY_CSV_HEADER)] != DAILY_CSV_HEADER and header != DAILY_CSV_HEADER[:8]:
            raise IngestError(f"bad header {header!r}", path=path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 8:
                raise IngestError(f"expected at least 8 fields, got {len(row)}", path=path, line=lineno)
            try:
                records.append(
                    DailyRecord(
                        date=row[0], asset_id=row[1], eta_hat=float(row[2]), alpha=float(row[3]),
                        sigma_hat=float(row[4]), m_trades=int(row[5]), avg_spread=float(row[6]),
                        frac_one_tick=float(row[7]),
                    )
                )
            except (ValueError, TickzoneError) as exc:
                raise IngestError(str(exc), path=path, line=lineno) from None
    return records


def emit_cloud_csv(records: Sequence[DailyRecord], path: Path, fit_for=None) -> int:
    """Write the spread-volatility cloud; returns the number of rows skipped.

    ``fit_for`` maps a record to its RegressionFit (or None to drop the row);
    when omitted the raw cloud (x = eta*alpha*sqrt(M), y = sigma) is written.
    The ``ref`` column repeats x so plots can draw the y = x line directly.
    """
    dropped = 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CLOUD_CSV_HEADER)
        for r in records:
            base = r.eta_hat * r.alpha * math.sqrt(r.m_trades)
            if fit_for is None:
                x, y = base, r.sigma_hat
            else:
                fit = fit_for(r)
                if fit is None:
                    dropped += 1
                    continue
                x = fit.p1 * base
                y = r.sigma_hat - fit.p2 * r.avg_spread * math.sqrt(r.m_trades)
            writer.writerow([_fmt(x), _fmt(y), _fmt(x)])
    return dropped


def _tick_table_rows(
    records: Sequence[DailyRecord],
    fits: Mapping[str, RegressionFit],
    config: PipelineConfig,
    skipped: List[str],
) -> tuple[List[str], List[List[str]]]:
    betas = (config.beta,) if config.beta is not None else BETA_PRESETS
    header = ["asset_id", "tick_value"] + [f"v{v}_beta{b:g}" for v in VERSIONS for b in betas]
    rows: List[List[str]] = []
    for aid in sorted({r.asset_id for r in records}):
        recs = [r for r in records if r.asset_id == aid and (config.keep_flagged or not r.eta_flagged)]
        if not recs:
            skipped.append(f"optimal_ticks {aid}: every day flagged")
            continue
        eta0 = float(np.mean([r.eta_hat for r in recs]))
        if eta0 <= 0:
            skipped.append(f"optimal_ticks {aid}: mean zone ratio is zero")
            continue
        alpha0 = recs[-1].alpha
        fit = fits.get(aid) or fits.get("ALL")
        m0 = float(np.mean([r.m_trades for r in recs]))
        sigma0 = float(np.mean([r.sigma_hat for r in recs]))
        row = [aid, _fmt(alpha0)]
        for version in VERSIONS:
            for beta in betas:
                try:
                    scenario = TickScenario(
                        alpha0=alpha0, eta0=eta0, beta=beta,
                        p1_0=fit.p1 if fit else None, p2_0=fit.p2 if fit else None,
                        m0=m0, sigma0=sigma0,
                    )
                    row.append(_fmt(optimal_tick(scenario, version=version)))
                except TickzoneError:
                    row.append("")
        rows.append(row)
    return header, rows


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Execute one full pipeline run; all outputs are deterministic in the config."""
    config.out.mkdir(parents=True, exist_ok=True)
    skipped: List[str] = []

    if config.mode == "synthetic":
        files = _synthesize(config)
        ticks = {aid: config.synthetic[aid].tick_text for aid in files}
    else:
        files, ticks = _discover(config, skipped)
    if not files:
        skipped.append(f"no input: nothing to ingest under {config.input_dir or config.out}")

    def ingest_one(aid: str) -> List[DayTape]:
        asset = AssetSpec(aid, float(Fraction(ticks[aid])))
        return ingest_trades(files[aid], asset, session=config.session, tick_text=ticks[aid])

    def build_one(task):
        aid, day, tape = task
        try:
            return build_daily_record(tape, date=day.isoformat())
        except TickzoneError as exc:
            return f"record {aid} {day.isoformat()}: {exc}"

    asset_ids = sorted(files)
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        ingested = list(pool.map(ingest_one, asset_ids))
        tasks = [
            (aid, day, tape)
            for aid, day_tapes in zip(asset_ids, ingested)
            for day, tape in day_tapes
        ]
        built = list(pool.map(build_one, tasks))

    records: List[DailyRecord] = []
    for item in built:
        if isinstance(item, DailyRecord):
            records.append(item)
        else:
            skipped.append(item)

    fits: Dict[str, RegressionFit] = {}
    groups: Dict[str, List[DailyRecord]] = {}
    for r in records:
        key = f"{r.asset_id}@{r.alpha:g}" if config.split_regimes else r.asset_id
        groups.setdefault(key, []).append(r)
    for key in sorted(groups):
        try:
            fits[key] = fit_spread_vol(groups[key], exclude_flagged=not config.keep_flagged)
        except TickzoneError as exc:
            skipped.append(f"regression {key}: {exc}")
    if config.pool:
        try:
            fits["ALL"] = fit_spread_vol(records, exclude_flagged=not config.keep_flagged)
        except TickzoneError as exc:
            skipped.append(f"regression ALL: {exc}")

    outputs: Dict[str, Path] = {}

    daily_path = config.out / "daily_records.csv"
    write_daily_records_csv(records, daily_path)
    outputs["daily_records"] = daily_path

    regression_path = config.out / "regression.csv"
    with regression_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REGRESSION_CSV_HEADER)
        for key in sorted(k for k in fits if k != "ALL") + (["ALL"] if "ALL" in fits else []):
            fit = fits[key]
            writer.writerow([fit.row(key)[0]] + [_fmt(v) for v in fit.row(key)[1:]])
    outputs["regression"] = regression_path

    raw_path = config.out / "cloud_raw.csv"
    emit_cloud_csv(records, raw_path)
    outputs["cloud_raw"] = raw_path

    def fit_for(r: DailyRecord) -> Optional[RegressionFit]:
        key = f"{r.asset_id}@{r.alpha:g}" if config.split_regimes else r.asset_id
        return fits.get("ALL") if config.pool and "ALL" in fits else fits.get(key)

    adjusted_path = config.out / "cloud_adjusted.csv"
    dropped = emit_cloud_csv(records, adjusted_path, fit_for=fit_for)
    if dropped:
        skipped.append(f"cloud_adjusted: no fit for {dropped} record(s)")
    outputs["cloud_adjusted"] = adjusted_path

    ticks_path = config.out / "optimal_ticks.csv"
    header, rows = _tick_table_rows(records, fits, config, skipped)
    with ticks_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    outputs["optimal_ticks"] = ticks_path

    n_files = sum(len(v) for v in files.values())
    for msg in skipped:
        logger.warning("skipped: %s", msg)
    return PipelineResult(records=records, fits=fits, skipped=skipped, outputs=outputs, n_files=n_files)
