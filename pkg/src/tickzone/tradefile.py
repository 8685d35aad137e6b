"""Trade CSV reading and writing.

Files carry one trade per row with the header
``timestamp_ms,price,size,bid,ask``: a UTC epoch timestamp in whole
milliseconds, decimal prices, and the pre-trade quotes (which may be blank).
Prices are parsed exactly against the asset's tick grid, so grid checks and
spread statistics never depend on binary float rounding.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date as date_type
from datetime import datetime, time, timedelta, timezone
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Union
from zoneinfo import ZoneInfo

import numpy as np

from .domain import NO_QUOTE, SUBTICKS_PER_TICK, AssetSpec, TickGrid, TradeTape
from .errors import IngestError, OffGridError, ParameterError

logger = logging.getLogger(__name__)

TRADE_CSV_HEADER = ["timestamp_ms", "price", "size", "bid", "ask"]


@dataclass(frozen=True)
class TradeCsvRow:
    """One parsed line of a trade file; prices stay as decimal text."""

    timestamp_ms: int
    price: str
    size: int
    bid: Optional[str]
    ask: Optional[str]
    line: int = 0


def _parse_session_clock(text: str) -> int:
    """'HH:MM' to seconds since local midnight; '24:00' closes the day."""
    parts = text.strip().split(":")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise ParameterError(f"malformed session time {text!r}, expected HH:MM")
    hh, mm = int(parts[0]), int(parts[1])
    if hh == 24 and mm == 0:
        return 86400
    if not (0 <= hh < 24 and 0 <= mm < 60):
        raise ParameterError(f"session time {text!r} out of range")
    return hh * 3600 + mm * 60


@dataclass(frozen=True)
class SessionFilter:
    """A trading session window in an exchange's local wall-clock time.

    The window is inclusive of both endpoints so a final trade stamped
    exactly at the close survives the millisecond rounding of timestamps.
    """

    open_seconds: int
    close_seconds: int
    tz: str = "UTC"

    def __post_init__(self):
        if not (0 <= self.open_seconds < self.close_seconds <= 86400):
            raise ParameterError("session must satisfy 0 <= open < close <= 24:00")
        ZoneInfo(self.tz)  # fail fast on unknown zones

    @classmethod
    def from_text(cls, text: str, tz: str = "UTC") -> "SessionFilter":
        parts = text.strip().split("-")
        if len(parts) != 2:
            raise ParameterError(f"malformed session {text!r}, expected HH:MM-HH:MM")
        return cls(_parse_session_clock(parts[0]), _parse_session_clock(parts[1]), tz=tz)

    @property
    def length_seconds(self) -> float:
        return float(self.close_seconds - self.open_seconds)

    def label(self) -> str:
        def clock(s):
            return f"{s // 3600:02d}:{s % 3600 // 60:02d}"

        return f"{clock(self.open_seconds)}-{clock(self.close_seconds)}"

    def open_epoch_ms(self, day: date_type) -> int:
        """UTC epoch milliseconds of this session's open on ``day``."""
        midnight = datetime.combine(day, time(0), tzinfo=ZoneInfo(self.tz))
        opened = midnight + timedelta(seconds=self.open_seconds)
        return int(round(opened.timestamp() * 1000))

    def locate(self, timestamp_ms: int) -> tuple[date_type, float]:
        """Local date and seconds since local midnight of a UTC stamp."""
        dt = datetime.fromtimestamp(timestamp_ms / 1000.0, tz=timezone.utc)
        local = dt.astimezone(ZoneInfo(self.tz))
        midnight = local.replace(hour=0, minute=0, second=0, microsecond=0)
        return local.date(), (local - midnight).total_seconds()


FULL_DAY = SessionFilter(0, 86400, tz="UTC")


def read_trade_rows(path: Union[str, Path]) -> List[TradeCsvRow]:
    """Read and validate one trade file. Timestamps must be non-decreasing."""
    path = Path(path)
    rows: List[TradeCsvRow] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("file is empty", path=path) from None
        if [h.strip() for h in header] != TRADE_CSV_HEADER:
            raise IngestError(
                f"bad header {header!r}, expected {','.join(TRADE_CSV_HEADER)}", path=path
            )
        prev_ts = None
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != 5:
                raise IngestError(f"expected 5 fields, got {len(rec)}", path=path, line=lineno)
            ts_text, price, size_text, bid, ask = (f.strip() for f in rec)
            try:
                ts = int(ts_text)
            except ValueError:
                raise IngestError(f"bad timestamp {ts_text!r}", path=path, line=lineno) from None
            if prev_ts is not None and ts < prev_ts:
                raise IngestError("timestamps must be non-decreasing", path=path, line=lineno)
            prev_ts = ts
            try:
                size = int(size_text)
            except ValueError:
                raise IngestError(f"bad size {size_text!r}", path=path, line=lineno) from None
            if size < 0:
                raise IngestError(f"negative size {size}", path=path, line=lineno)
            if not price:
                raise IngestError("missing price", path=path, line=lineno)
            rows.append(
                TradeCsvRow(
                    timestamp_ms=ts,
                    price=price,
                    size=size,
                    bid=bid or None,
                    ask=ask or None,
                    line=lineno,
                )
            )
    return rows


def write_tape_csv(
    tape: TradeTape,
    path: Union[str, Path],
    day: date_type,
    session: SessionFilter,
) -> None:
    """Write a tape in the trade CSV format, anchored at the session open."""
    open_ms = session.open_epoch_ms(day)
    grid = tape.grid
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRADE_CSV_HEADER)
        for i in range(len(tape)):
            ts = open_ms + int(round(float(tape.times[i]) * 1000.0))
            bid = "" if tape.bid_q[i] == NO_QUOTE else grid.text(int(tape.bid_q[i]))
            ask = "" if tape.ask_q[i] == NO_QUOTE else grid.text(int(tape.ask_q[i]))
            writer.writerow([ts, grid.text(int(tape.price_q[i])), 1, bid, ask])


class DayTape(NamedTuple):
    date: date_type
    tape: TradeTape


def _quantize(grid: TickGrid, text: Optional[str], path, line: int, what: str) -> int:
    if text is None:
        return NO_QUOTE
    try:
        return grid.subticks_from_text(text)
    except OffGridError as exc:
        raise IngestError(f"{what}: {exc}", path=path, line=line) from None


def _build_day_tape(
    asset: AssetSpec,
    grid: TickGrid,
    day: date_type,
    kept: List[tuple[int, TradeCsvRow]],
    session: SessionFilter,
    path: Path,
) -> TradeTape:
    open_ms = session.open_epoch_ms(day)
    n = len(kept)
    ms = np.empty(n, dtype=np.int64)
    price_q = np.empty(n, dtype=np.int64)
    bid_q = np.empty(n, dtype=np.int64)
    ask_q = np.empty(n, dtype=np.int64)
    for i, (lineno, row) in enumerate(kept):
        ms[i] = row.timestamp_ms - open_ms
        pq = _quantize(grid, row.price, path, lineno, "price")
        if pq % SUBTICKS_PER_TICK != 0:
            raise IngestError(f"price {row.price} off the tick grid", path=path, line=lineno)
        price_q[i] = pq
        bid_q[i] = _quantize(grid, row.bid, path, lineno, "bid")
        ask_q[i] = _quantize(grid, row.ask, path, lineno, "ask")
        if bid_q[i] != NO_QUOTE and ask_q[i] != NO_QUOTE:
            spread = ask_q[i] - bid_q[i]
            if spread <= 0:
                raise IngestError("ask must exceed bid", path=path, line=lineno)
            if spread % SUBTICKS_PER_TICK != 0:
                raise IngestError("spread is not a whole number of ticks", path=path, line=lineno)
    # identical-millisecond prints are pushed forward to keep times strict
    if n > 1:
        ramp = np.arange(n, dtype=np.int64)
        ms = np.maximum.accumulate(ms - ramp) + ramp
    delta = np.diff(price_q, prepend=price_q[:1])
    bad = np.flatnonzero(np.abs(delta) > SUBTICKS_PER_TICK)
    if len(bad):
        lineno = kept[int(bad[0])][0]
        raise IngestError(
            "price jumped more than one tick; outside the one-tick model", path=path, line=lineno
        )
    direction = np.sign(delta).astype(np.int8)
    session_length = max(session.length_seconds, float(ms[-1]) / 1000.0 if n else 0.0)
    return TradeTape(
        asset=asset,
        times=ms / 1000.0,
        price_q=price_q,
        bid_q=bid_q,
        ask_q=ask_q,
        changed=direction != 0,
        direction=direction,
        session_length=session_length,
        opening_price_q=int(price_q[0]),
        grid=grid,
    )


def ingest_trades(
    paths: Union[str, Path, Sequence[Union[str, Path]]],
    asset: AssetSpec,
    session: Optional[SessionFilter] = None,
    tick_text: Optional[str] = None,
) -> List[DayTape]:
    """Ingest one or more trade files into per-day tapes.

    Rows outside the session window are dropped. When several files cover
    the same day (different contract maturities), the file with the most
    in-session trades wins and the others are discarded; ties go to the
    lexicographically first path so reruns stay deterministic. Days with an
    empty session are skipped with a warning.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    session = session or FULL_DAY
    grid = TickGrid(tick_text) if tick_text is not None else TickGrid(asset.tick_value)
    if abs(grid.tick_value - asset.tick_value) > 1e-12 * asset.tick_value:
        raise ParameterError(
            f"tick_text {tick_text!r} disagrees with asset tick {asset.tick_value!r}"
        )

    per_file: Dict[Path, Dict[date_type, List[tuple[int, TradeCsvRow]]]] = {}
    for p in sorted(Path(p) for p in paths):
        rows = read_trade_rows(p)
        by_day: Dict[date_type, List[tuple[int, TradeCsvRow]]] = {}
        for row in rows:
            day, secs = session.locate(row.timestamp_ms)
            if session.open_seconds <= secs <= session.close_seconds:
                by_day.setdefault(day, []).append((row.line, row))
        if not by_day:
            logger.warning("%s: no trades inside session %s", p, session.label())
        per_file[p] = by_day

    days = sorted({d for by_day in per_file.values() for d in by_day})
    out: List[DayTape] = []
    for day in days:
        candidates = [(p, by_day[day]) for p, by_day in per_file.items() if day in by_day]
        # max keeps the first candidate on ties; per_file iterates sorted paths
        best_path, best_rows = max(candidates, key=lambda c: len(c[1]))
        if len(candidates) > 1:
            logger.info(
                "%s %s: kept %s with %d trades, discarded %d other file(s)",
                asset.asset_id, day, best_path, len(best_rows), len(candidates) - 1,
            )
        if len(best_rows) == 0:
            continue
        out.append(DayTape(date=day, tape=_build_day_tape(asset, grid, day, best_rows, session, best_path)))
    return out
