"""Forecasting the zone ratio across a tick-size change, and inverting it.

A tick change rescales the zone ratio through the spread-volatility fit: per
trade volatility is invariant, trade counts scale as a power of the tick
ratio (count elasticity beta, with presets 1 and 1/2), and the quoted spread
snaps to the new tick. Solving the fitted line for the new ratio gives the
forecast; solving the forecast for ratio 1/2 gives the tick that would make
market orders exactly break even.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from typing import Dict, List, Optional, Tuple

from .errors import DomainError, ParameterError

BETA_PRESETS = (1.0, 0.5)
VERSIONS = (1, 2, 3)

# Version 2 replaces the fitted intercept ratio p2/p1 by a pooled 0.1;
# version 3 drops the quoted-spread term entirely.
_POOLED_RATIO = 0.1


@dataclass(frozen=True)
class TickScenario:
    """A contemplated tick change for one asset.

    ``alpha0``/``eta0`` describe the current regime, ``alpha`` the candidate
    tick (unused when solving for the optimal one). ``p1_0``/``p2_0`` are the
    asset's spread-volatility coefficients, needed by version 1 only.
    ``m0``/``sigma0`` (trades per day, daily volatility) refine the
    large-tick check; ``v0`` is the daily volume, carried as an invariant.
    """

    alpha0: float
    eta0: float
    alpha: Optional[float] = None
    p1_0: Optional[float] = None
    p2_0: Optional[float] = None
    beta: float = 1.0
    m0: Optional[float] = None
    sigma0: Optional[float] = None
    v0: Optional[float] = None

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise ParameterError(f"alpha0 must be > 0, got {self.alpha0!r}")
        if self.alpha is not None and self.alpha <= 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha!r}")
        if self.eta0 <= 0:
            raise ParameterError(f"eta0 must be > 0, got {self.eta0!r}")
        if not (0.0 < self.beta < 2.0):
            raise DomainError(f"beta must lie in (0, 2), got {self.beta!r}")
        if self.m0 is not None and self.m0 < 1:
            raise ParameterError("m0 must be >= 1")
        if self.sigma0 is not None and self.sigma0 < 0:
            raise ParameterError("sigma0 must be >= 0")


@dataclass(frozen=True)
class EtaForecast:
    version: int
    eta_pred: float
    in_large_tick_regime: bool
    warning: Optional[str] = None

    def __post_init__(self):
        if self.version not in VERSIONS:
            raise ParameterError(f"version must be one of {VERSIONS}")


def scale_trade_count(m0: float, alpha0: float, alpha: float, beta: float) -> float:
    """Daily trade count under the new tick, M0 * (alpha0/alpha)^beta.

    Returned as a float: the scaling must stay exact under composition, so
    no rounding to whole trades.
    """
    if m0 < 1:
        raise ParameterError("m0 must be >= 1")
    if alpha0 <= 0 or alpha <= 0:
        raise ParameterError("tick values must be > 0")
    if beta <= 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    return m0 * (alpha0 / alpha) ** beta


def check_large_tick_regime(tick_value: float, sigma: float, m_trades: float) -> bool:
    """True while half a tick covers the volatility per trade."""
    if tick_value <= 0:
        raise ParameterError("tick_value must be > 0")
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    if m_trades < 1:
        raise ParameterError("m_trades must be >= 1")
    return 0.5 * tick_value >= sigma / math.sqrt(m_trades)


def _ratio_power(s: TickScenario) -> float:
    assert s.alpha is not None
    return (s.alpha0 / s.alpha) ** (1.0 - 0.5 * s.beta)


def predict_eta(s: TickScenario, version: int = 1) -> EtaForecast:
    """Forecast the zone ratio after moving the tick from alpha0 to alpha.

    Version 1 uses the asset's own fit coefficients, version 2 a pooled
    intercept ratio of 0.1, version 3 the bare power law. All agree when the
    tick is unchanged.
    """
    if version not in VERSIONS:
        raise ParameterError(f"version must be one of {VERSIONS}")
    if s.alpha is None:
        raise ParameterError("scenario needs the candidate tick alpha")
    pw = _ratio_power(s)
    if version == 1:
        if s.p1_0 is None or s.p1_0 <= 0:
            raise ParameterError("version 1 needs fit coefficients with p1_0 > 0")
        ratio = (s.p2_0 if s.p2_0 is not None else 0.0) / s.p1_0
        eta = (s.eta0 + ratio) * pw - ratio
    elif version == 2:
        eta = (s.eta0 + _POOLED_RATIO) * pw - _POOLED_RATIO
    else:
        eta = s.eta0 * pw
    warning = None
    if not (0.0 < eta <= 0.5):
        warning = (
            f"predicted ratio {eta:.4f} leaves (0, 1/2]; the one-tick spread "
            "assumption is breaking down"
        )
    if s.sigma0 is not None and s.m0 is not None:
        m_new = scale_trade_count(s.m0, s.alpha0, s.alpha, s.beta)
        regime = check_large_tick_regime(s.alpha, s.sigma0, m_new)
    else:
        regime = 0.0 < eta <= 0.5
    return EtaForecast(version=version, eta_pred=eta, in_large_tick_regime=regime, warning=warning)


def optimal_tick(s: TickScenario, version: int = 1) -> float:
    """The tick value whose forecast ratio is exactly 1/2.

    Inverts the corresponding forecast version; the exponent 1/(1 - beta/2)
    requires beta < 2 (already enforced by the scenario).
    """
    if version not in VERSIONS:
        raise ParameterError(f"version must be one of {VERSIONS}")
    expo = 1.0 / (1.0 - 0.5 * s.beta)
    if version == 1:
        if s.p1_0 is None or s.p1_0 <= 0:
            raise ParameterError("version 1 needs fit coefficients with p1_0 > 0")
        p2 = s.p2_0 if s.p2_0 is not None else 0.0
        base = (s.eta0 * s.p1_0 + p2) / (0.5 * s.p1_0 + p2)
    elif version == 2:
        base = (s.eta0 + _POOLED_RATIO) / (0.5 + _POOLED_RATIO)
    else:
        base = 2.0 * s.eta0
    if base <= 0:
        raise DomainError("scenario implies a non-positive tick")
    return s.alpha0 * base**expo


# --------------------------------------------------------------------- fixture

@dataclass(frozen=True)
class ReferenceAsset:
    """One row of the shipped 2009 futures estimates."""

    asset_id: str
    exchange: str
    asset_class: str
    tick_value: float
    currency: str
    session: str
    trades_per_day: float
    eta: float
    frac_one_tick: float
    p1: float
    p2: float

    def scenario(self, beta: float = 1.0, alpha: Optional[float] = None) -> TickScenario:
        return TickScenario(
            alpha0=self.tick_value,
            eta0=self.eta,
            alpha=alpha,
            p1_0=self.p1,
            p2_0=self.p2,
            beta=beta,
            m0=self.trades_per_day,
        )


def load_reference_assets() -> List[ReferenceAsset]:
    """Parse the packaged futures fixture (comment lines start with '#')."""
    text = resources.files("tickzone").joinpath("data/reference_futures.csv").read_text()
    rows = [line for line in text.splitlines() if line.strip() and not line.startswith("#")]
    out = []
    for rec in csv.DictReader(rows):
        out.append(
            ReferenceAsset(
                asset_id=rec["asset_id"],
                exchange=rec["exchange"],
                asset_class=rec["asset_class"],
                tick_value=float(rec["tick_value"]),
                currency=rec["currency"],
                session=rec["session"],
                trades_per_day=float(rec["trades_per_day"]),
                eta=float(rec["eta"]),
                frac_one_tick=float(rec["frac_one_tick"]),
                p1=float(rec["p1"]),
                p2=float(rec["p2"]),
            )
        )
    return out


def reference_session(asset_id: str) -> Optional[str]:
    for ref in load_reference_assets():
        if ref.asset_id == asset_id:
            return ref.session
    return None


def optimal_tick_table(
    assets: Optional[List[ReferenceAsset]] = None,
    betas: Tuple[float, ...] = BETA_PRESETS,
    versions: Tuple[int, ...] = VERSIONS,
) -> List[Dict]:
    """Optimal tick per asset for every (version, beta) pair, fixture-driven."""
    if assets is None:
        assets = load_reference_assets()
    table = []
    for ref in assets:
        row: Dict = {"asset_id": ref.asset_id, "tick_value": ref.tick_value}
        for v in versions:
            for b in betas:
                row[(v, b)] = optimal_tick(ref.scenario(beta=b), version=v)
        table.append(row)
    return table
