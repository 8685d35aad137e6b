"""Simulation of large-tick traded prices driven by a latent efficient price.

The efficient price diffuses off-grid. The traded price sits on the tick grid
and moves by one tick exactly when the efficient price reaches a barrier half
a tick plus one zone half-width away from the last traded price. Barrier
crossings between grid points of the discretized path are recovered with the
standard Brownian bridge correction, so coarse steps do not systematically
delay price changes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .domain import SUBTICKS_PER_TICK, AssetSpec, TickGrid, TradeTape
from .errors import ParameterError

Schedule = Union[float, Sequence[Tuple[float, float]]]

_BLOCK_START = 256
_BLOCK_MIN = 64
_BLOCK_MAX = 8192


def _schedule_pieces(sched: Schedule, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Normalize a schedule to (start_times, values), first piece at t=0."""
    if isinstance(sched, (int, float)):
        return np.array([0.0]), np.array([float(sched)])
    pieces = sorted((float(t), float(v)) for t, v in sched)
    if not pieces:
        raise ParameterError(f"{what} schedule is empty")
    starts = np.array([t for t, _ in pieces])
    values = np.array([v for _, v in pieces])
    if starts[0] > 0.0:
        raise ParameterError(f"{what} schedule must start at time 0")
    if len(np.unique(starts)) != len(starts):
        raise ParameterError(f"{what} schedule has duplicate breakpoints")
    return starts, values


def _schedule_values(sched: Schedule, times: np.ndarray, what: str) -> np.ndarray:
    starts, values = _schedule_pieces(sched, what)
    if len(values) == 1:
        return np.broadcast_to(values[0], times.shape)
    idx = np.searchsorted(starts, times, side="right") - 1
    return values[idx]


@dataclass(frozen=True)
class EfficientPathSpec:
    """Parameters of the latent price: start value, drift and volatility.

    ``drift`` and ``volatility`` are either constants or piecewise-constant
    schedules given as (start_time, value) pairs. ``step`` is the Euler grid
    spacing; leave it None to let ``simulate_day`` pick one small enough that
    one step's noise is a tenth of the zone half-width.
    """

    x0: float
    volatility: Schedule
    drift: Schedule = 0.0
    horizon: float = 1.0
    step: Optional[float] = None

    def __post_init__(self):
        if self.horizon <= 0:
            raise ParameterError(f"horizon must be > 0, got {self.horizon!r}")
        if self.step is not None:
            if self.step <= 0:
                raise ParameterError(f"step must be > 0, got {self.step!r}")
            if self.horizon < self.step:
                raise ParameterError("horizon must be at least one step")
        _, vols = _schedule_pieces(self.volatility, "volatility")
        if np.any(vols < 0):
            raise ParameterError("volatility must be >= 0 everywhere")
        _schedule_pieces(self.drift, "drift")

    def max_volatility(self) -> float:
        _, vols = _schedule_pieces(self.volatility, "volatility")
        return float(np.max(vols))

    def with_step(self, step: float) -> "EfficientPathSpec":
        return EfficientPathSpec(
            x0=self.x0, volatility=self.volatility, drift=self.drift,
            horizon=self.horizon, step=step,
        )


class EfficientPath:
    """A discretized efficient-price path on a uniform time grid."""

    def __init__(self, values: np.ndarray, step: float, spec: EfficientPathSpec):
        self.values = values
        self.step = step
        self.spec = spec
        self._times: Optional[np.ndarray] = None
        self._step_sigma2: Optional[np.ndarray] = None

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def horizon(self) -> float:
        return self.n_steps * self.step

    @property
    def times(self) -> np.ndarray:
        if self._times is None:
            self._times = np.arange(len(self.values)) * self.step
        return self._times

    @property
    def step_sigma2(self) -> np.ndarray:
        """Variance rate sigma^2 (per unit time) on each step."""
        if self._step_sigma2 is None:
            left = np.arange(self.n_steps) * self.step
            self._step_sigma2 = np.asarray(
                _schedule_values(self.spec.volatility, left, "volatility")
            ) ** 2
        return self._step_sigma2

    def integrated_variance(self) -> float:
        """Ground truth integral of sigma^2 over the horizon, as discretized."""
        return float(np.sum(self.step_sigma2 * self.step))


def suggested_step(asset: AssetSpec, sigma_max: float, horizon: float, safety: float = 10.0) -> float:
    """Step size keeping one step's noise at most ``1/safety`` of the band half-width."""
    eta = asset.require_eta()
    if sigma_max <= 0:
        return horizon / 100.0
    dt = (eta * asset.tick_value / (safety * sigma_max)) ** 2
    return min(horizon, dt)


def _as_rng(rng) -> np.random.Generator:
    if rng is None:
        return np.random.default_rng(0)
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def simulate_efficient_path(spec: EfficientPathSpec, rng=None) -> EfficientPath:
    """Draw one path with independent Gaussian increments per step.

    The step is adjusted to the nearest exact divisor of the horizon so the
    grid lands on the endpoint. Increments have mean drift*dt and variance
    sigma^2*dt evaluated at the left edge of each step.
    """
    if spec.step is None:
        raise ParameterError("spec.step is unset; pass one or use simulate_day")
    gen = _as_rng(rng)
    n = max(1, round(spec.horizon / spec.step))
    dt = spec.horizon / n
    left = np.arange(n) * dt
    sig = np.asarray(_schedule_values(spec.volatility, left, "volatility"), dtype=float)
    drift = np.asarray(_schedule_values(spec.drift, left, "drift"), dtype=float)
    incr = drift * dt
    if np.any(sig > 0):
        incr = incr + sig * math.sqrt(dt) * gen.standard_normal(n)
    values = np.empty(n + 1)
    values[0] = spec.x0
    np.cumsum(incr, out=values[1:])
    values[1:] += spec.x0
    return EfficientPath(values=values, step=dt, spec=spec)


@dataclass(frozen=True)
class PriceChangeEvent:
    """One traded-price move: when, to what, which way, and where the
    efficient price was (the barrier value) when it happened."""

    time: float
    new_price: float
    direction: int
    efficient_price_at_crossing: float


class PriceChangeSeries(Sequence):
    """Column-oriented sequence of PriceChangeEvent."""

    def __init__(self, times, new_prices, directions, efficient_prices):
        self.times = np.asarray(times, dtype=np.float64)
        self.new_prices = np.asarray(new_prices, dtype=np.float64)
        self.directions = np.asarray(directions, dtype=np.int8)
        self.efficient_prices = np.asarray(efficient_prices, dtype=np.float64)
        n = len(self.times)
        if not (len(self.new_prices) == len(self.directions) == len(self.efficient_prices) == n):
            raise ParameterError("price change columns must have equal length")

    @classmethod
    def from_events(cls, events: Sequence[PriceChangeEvent]) -> "PriceChangeSeries":
        return cls(
            [e.time for e in events],
            [e.new_price for e in events],
            [e.direction for e in events],
            [e.efficient_price_at_crossing for e in events],
        )

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return PriceChangeSeries(
                self.times[i], self.new_prices[i], self.directions[i], self.efficient_prices[i]
            )
        return PriceChangeEvent(
            time=float(self.times[i]),
            new_price=float(self.new_prices[i]),
            direction=int(self.directions[i]),
            efficient_price_at_crossing=float(self.efficient_prices[i]),
        )

    def __repr__(self):
        return f"PriceChangeSeries(n={len(self)})"


def _resolve_step(
    t0: float,
    x0: float,
    t1: float,
    x1: float,
    var_rate: float,
    k: int,
    alpha: float,
    offset: float,
    rng: np.random.Generator,
    out_t: list,
    out_k: list,
    out_d: list,
    out_e: list,
    first_up: Optional[bool],
    first_dn: Optional[bool],
) -> int:
    """Emit every crossing inside one step, walking the remainder after each hit.

    The first hit decision may be supplied by the vectorized scan; later
    sub-segments are re-tested with fresh draws against the updated barriers.
    A bridged hit (endpoints short of the barrier) is placed at the tent-path
    time, interpolating up to the barrier and back down to the endpoint.
    """
    while t1 > t0:
        up_lvl = k * alpha + offset
        dn_lvl = k * alpha - offset
        if first_up is not None:
            up, dn = first_up, first_dn
            first_up = first_dn = None
        else:
            up = x1 >= up_lvl
            dn = x1 <= dn_lvl
            if not up:
                span = var_rate * (t1 - t0)
                if span > 0 and x1 > dn_lvl:
                    p = math.exp(min(-2.0 * (up_lvl - x0) * (up_lvl - x1) / span, 0.0))
                    up = rng.random() < p
            if not dn:
                span = var_rate * (t1 - t0)
                if span > 0 and x1 < up_lvl:
                    p = math.exp(min(-2.0 * (x0 - dn_lvl) * (x1 - dn_lvl) / span, 0.0))
                    dn = rng.random() < p
        if not (up or dn):
            break
        t_up = math.inf
        t_dn = math.inf
        if up:
            if x1 >= up_lvl:
                t_up = t0 + (t1 - t0) * (up_lvl - x0) / (x1 - x0)
            else:
                t_up = t0 + (t1 - t0) * (up_lvl - x0) / ((up_lvl - x0) + (up_lvl - x1))
        if dn:
            if x1 <= dn_lvl:
                t_dn = t0 + (t1 - t0) * (x0 - dn_lvl) / (x0 - x1)
            else:
                t_dn = t0 + (t1 - t0) * (x0 - dn_lvl) / ((x0 - dn_lvl) + (x1 - dn_lvl))
        if t_up <= t_dn:
            k += 1
            out_t.append(t_up)
            out_k.append(k)
            out_d.append(1)
            out_e.append(up_lvl)
            t0, x0 = t_up, up_lvl
        else:
            k -= 1
            out_t.append(t_dn)
            out_k.append(k)
            out_d.append(-1)
            out_e.append(dn_lvl)
            t0, x0 = t_dn, dn_lvl
    return k


def apply_uncertainty_zones(
    path: EfficientPath, asset: AssetSpec, p0: float, rng=None
) -> PriceChangeSeries:
    """Turn an efficient-price path into the traded-price change sequence.

    ``p0`` must sit on the asset's tick grid. Excursions between path grid
    points are recovered by accepting a crossing with the Brownian bridge
    probability exp(-2(B-x_k)(B-x_{k+1}) / (sigma^2 dt)); randomness comes
    from ``rng`` (a seed or Generator; default is a fixed seed, so results
    are reproducible by default).

    The scan is vectorized over blocks of steps. Barriers are constant
    between price changes, so each block is tested in one shot and rescanned
    past the first hit with the updated barriers.
    """
    eta = asset.require_eta()
    alpha = asset.tick_value
    k0 = round(p0 / alpha)
    if abs(p0 - k0 * alpha) > 1e-9 * alpha:
        raise ParameterError(f"p0={p0!r} is not on the tick grid of {alpha!r}")
    gen = _as_rng(rng)
    x = path.values
    dt = path.step
    n = path.n_steps
    sigma2 = path.step_sigma2  # variance rate per unit time, one entry per step
    offset = alpha * (0.5 + eta)

    out_t: list = []
    out_k: list = []
    out_d: list = []
    out_e: list = []

    k = k0
    i = 0
    block = _BLOCK_START
    while i < n:
        j = min(i + block, n)
        seg0 = x[i:j]
        seg1 = x[i + 1 : j + 1]
        v = sigma2[i:j] * dt
        up_lvl = k * alpha + offset
        dn_lvl = k * alpha - offset
        det_up = seg1 >= up_lvl
        det_dn = seg1 <= dn_lvl
        dead = v <= 0
        safe_v = np.where(dead, 1.0, v)
        pu = np.exp(np.minimum(-2.0 * (up_lvl - seg0) * (up_lvl - seg1) / safe_v, 0.0))
        pd = np.exp(np.minimum(-2.0 * (seg0 - dn_lvl) * (seg1 - dn_lvl) / safe_v, 0.0))
        draws = gen.random((2, j - i))
        hit_up = det_up | ((draws[0] < pu) & ~dead)
        hit_dn = det_dn | ((draws[1] < pd) & ~dead)
        hit = hit_up | hit_dn
        if not hit.any():
            i = j
            block = min(block * 2, _BLOCK_MAX)
            continue
        h = int(np.argmax(hit))
        step_idx = i + h
        k = _resolve_step(
            t0=step_idx * dt,
            x0=float(seg0[h]),
            t1=(step_idx + 1) * dt,
            x1=float(seg1[h]),
            var_rate=float(sigma2[step_idx]),
            k=k,
            alpha=alpha,
            offset=offset,
            rng=gen,
            out_t=out_t,
            out_k=out_k,
            out_d=out_d,
            out_e=out_e,
            first_up=bool(hit_up[h]),
            first_dn=bool(hit_dn[h]),
        )
        i = step_idx + 1
        if h > 0:
            block = max(_BLOCK_MIN, min(_BLOCK_MAX, 2 * h))
    prices = np.asarray(out_k, dtype=np.float64) * alpha
    return PriceChangeSeries(np.asarray(out_t), prices, np.asarray(out_d, dtype=np.int8), np.asarray(out_e))


@dataclass(frozen=True)
class TapeConfig:
    """Knobs for dressing a change sequence into a full tape.

    ``trade_intensity`` is the Poisson rate (per second) of trades that do
    not move the price; they print at the prevailing traded price.
    """

    trade_intensity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.trade_intensity < 0:
            raise ParameterError("trade_intensity must be >= 0")


@dataclass(frozen=True)
class TrueParams:
    """Ground truth attached to a simulated day, for estimator checks."""

    eta: float
    tick_value: float
    integrated_variance: float
    n_price_changes: int
    price_changes: PriceChangeSeries = field(repr=False, default=None)


def _strictly_increasing_ms(times: np.ndarray) -> np.ndarray:
    """Quantize seconds to milliseconds; colliding stamps are pushed forward."""
    ms = np.round(times * 1000.0).astype(np.int64)
    if len(ms) > 1:
        ramp = np.arange(len(ms), dtype=np.int64)
        ms = np.maximum.accumulate(ms - ramp) + ramp
    return ms


def generate_tape(
    changes,
    cfg: TapeConfig,
    asset: AssetSpec,
    horizon: float,
    opening_price: float,
    rng=None,
) -> TradeTape:
    """Merge price changes with Poisson fill trades into a trade tape.

    Every trade carries the one-tick quote bracket consistent with the side
    it hit: a trade that moves the price up prints at the ask, one that moves
    it down prints at the bid, and a fill prints at whichever side the next
    price move will take out. Times are recorded at millisecond resolution.

    The tape is the vendor-file view of the day: a trade file alone cannot
    show whether its first row moved the price, so the first row is always
    recorded as a non-change and the tape opens at that row's price. The
    model-true change sequence stays available in ``changes``.
    """
    if horizon <= 0:
        raise ParameterError("horizon must be > 0")
    grid = TickGrid(asset.tick_value)
    if not isinstance(changes, PriceChangeSeries):
        changes = PriceChangeSeries.from_events(list(changes))
    k_open = grid.nearest_tick_index(opening_price)
    if abs(opening_price - k_open * asset.tick_value) > 1e-9 * asset.tick_value:
        raise ParameterError(f"opening price {opening_price!r} is not on the tick grid")
    if len(changes) and (changes.times[0] < 0 or changes.times[-1] > horizon + 1e-9):
        raise ParameterError("price change times must lie within [0, horizon]")

    gen = _as_rng(cfg.seed if rng is None else rng)
    n_fill = int(gen.poisson(cfg.trade_intensity * horizon)) if cfg.trade_intensity > 0 else 0
    fill_times = np.sort(gen.random(n_fill)) * horizon if n_fill else np.empty(0)

    ch_ticks = np.round(changes.new_prices / asset.tick_value).astype(np.int64)
    n_ch = len(changes)
    all_times = np.concatenate([changes.times, fill_times])
    order = np.argsort(all_times, kind="stable")
    times = all_times[order]
    is_change = order < n_ch

    ticks = np.empty(len(times), dtype=np.int64)
    direction = np.zeros(len(times), dtype=np.int8)
    if n_ch:
        ticks[is_change] = ch_ticks
        direction[is_change] = changes.directions
        # a fill repeats the last changed price before it, or the opening price
        last_change = np.searchsorted(changes.times, times[~is_change], side="right") - 1
        fill_ticks = np.where(last_change >= 0, ch_ticks[np.maximum(last_change, 0)], k_open)
        ticks[~is_change] = fill_ticks
    else:
        ticks[:] = k_open

    # quote bracket per trade: was this print at the ask or at the bid?
    if n_ch:
        nxt = np.searchsorted(changes.times, times, side="left")
        next_dir = np.where(nxt < n_ch, changes.directions[np.minimum(nxt, n_ch - 1)], -changes.directions[-1])
    else:
        next_dir = np.ones(len(times), dtype=np.int8)
    at_ask = np.where(is_change, direction > 0, next_dir < 0)

    price_q = ticks * SUBTICKS_PER_TICK
    bid_q = np.where(at_ask, price_q - SUBTICKS_PER_TICK, price_q)
    ask_q = np.where(at_ask, price_q, price_q + SUBTICKS_PER_TICK)

    # vendor-view convention: the first row never counts as a change
    opening_q = k_open * SUBTICKS_PER_TICK
    if len(times):
        is_change[0] = False
        direction[0] = 0
        opening_q = int(price_q[0])

    ms = _strictly_increasing_ms(times)
    t_canon = ms / 1000.0
    session_length = max(horizon, float(t_canon[-1]) if len(t_canon) else horizon)
    return TradeTape(
        asset=asset,
        times=t_canon,
        price_q=price_q,
        bid_q=bid_q,
        ask_q=ask_q,
        changed=is_change,
        direction=direction,
        session_length=session_length,
        opening_price_q=opening_q,
        grid=grid,
    )


def equilibrium_fill_rate(asset: AssetSpec, sigma: float, horizon: float) -> float:
    """Fill intensity making volatility per trade match the implicit spread.

    Targets M = (sigma * sqrt(t) / (eta * alpha))^2 total trades; the expected
    number of price changes sigma^2 t / (2 eta alpha^2) is subtracted off.
    """
    eta = asset.require_eta()
    alpha = asset.tick_value
    if sigma <= 0 or horizon <= 0:
        raise ParameterError("sigma and horizon must be > 0")
    target = (sigma / (eta * alpha)) ** 2
    changes = sigma**2 / (2.0 * eta * alpha**2)
    return max(0.0, target - changes)


def simulate_day(
    path_spec: EfficientPathSpec,
    asset: AssetSpec,
    cfg: TapeConfig,
    p0: Optional[float] = None,
) -> tuple[TradeTape, TrueParams]:
    """Simulate one asset-day end to end, deterministically in ``cfg.seed``.

    The seed is split into independent streams for the path, the bridge
    draws and the fill trades. ``p0`` defaults to the grid point nearest to
    the path start (exact halves round down).
    """
    eta = asset.require_eta()
    spec = path_spec
    if spec.step is None:
        spec = spec.with_step(suggested_step(asset, spec.max_volatility(), spec.horizon))
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)]
    path = simulate_efficient_path(spec, rng=streams[0])
    grid = TickGrid(asset.tick_value)
    if p0 is None:
        p0 = grid.nearest_tick_index(spec.x0) * asset.tick_value
    changes = apply_uncertainty_zones(path, asset, p0, rng=streams[1])
    tape = generate_tape(changes, cfg, asset, spec.horizon, p0, rng=streams[2])
    truth = TrueParams(
        eta=eta,
        tick_value=asset.tick_value,
        integrated_variance=path.integrated_variance(),
        n_price_changes=len(changes),
        price_changes=changes,
    )
    return tape, truth
