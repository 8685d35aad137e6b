"""Post-trade dynamics and the cost balance of a one-tick market.

Right after a price change the efficient price sits on the barrier it just
crossed: one tick from the barrier that would continue the move, and one
buy/sell-band width from the barrier that would revert it. The two exit
probabilities follow from the gambler's ruin and drive who pays whom.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .domain import AssetSpec
from .errors import ParameterError

DEFAULT_WYART_C = 2.0


def crossing_probabilities(eta: float) -> Tuple[float, float]:
    """(probability the next move reverts, probability it continues).

    A reversion needs the efficient price to travel 2*eta*alpha against
    one tick for a continuation, hence (1, 2*eta) / (1 + 2*eta).
    """
    if not (0.0 < eta <= 1.0):
        raise ParameterError(f"eta must lie in (0, 1], got {eta!r}")
    return 1.0 / (1.0 + 2.0 * eta), 2.0 * eta / (1.0 + 2.0 * eta)


def market_order_cost(asset: AssetSpec) -> float:
    """Expected loss of a market order against the next efficient price.

    Half a tick paid over the mid, minus the zone half-width the efficient
    price has already conceded: alpha/2 - eta*alpha. Negative above
    eta = 1/2, where market orders stop subsidizing the book.
    """
    eta = asset.require_eta()
    return asset.tick_value * (0.5 - eta)


def market_maker_pnl(avg_spread: float, sigma_per_trade: float, c: float = DEFAULT_WYART_C) -> float:
    """Per-trade gain of a liquidity provider, S/2 - (c/2) * sigma_per_trade.

    ``c`` scales the adverse-selection charge; the sensible range is [1, 2]
    and the conservative default is 2.
    """
    if avg_spread <= 0:
        raise ParameterError("avg_spread must be > 0")
    if sigma_per_trade < 0:
        raise ParameterError("sigma_per_trade must be >= 0")
    if not (1.0 <= c <= 2.0):
        raise ParameterError(f"c must lie in [1, 2], got {c!r}")
    return 0.5 * avg_spread - 0.5 * c * sigma_per_trade


@dataclass(frozen=True)
class EquilibriumReport:
    """Diagnostics attached to estimate and predict outputs."""

    eta: float
    p_revert: float
    p_continue: float
    market_order_cost: float
    maker_pnl_per_trade: Optional[float] = None

    def __post_init__(self):
        if abs(self.p_revert + self.p_continue - 1.0) > 1e-12:
            raise ParameterError("crossing probabilities must sum to 1")


def equilibrium_report(
    asset: AssetSpec,
    sigma_per_trade: Optional[float] = None,
    c: float = DEFAULT_WYART_C,
) -> EquilibriumReport:
    p_rev, p_cont = crossing_probabilities(asset.require_eta())
    pnl = None
    if sigma_per_trade is not None:
        pnl = market_maker_pnl(asset.tick_value, sigma_per_trade, c=c)
    return EquilibriumReport(
        eta=asset.require_eta(),
        p_revert=p_rev,
        p_continue=p_cont,
        market_order_cost=market_order_cost(asset),
        maker_pnl_per_trade=pnl,
    )


def first_passage_frequencies(
    eta: float,
    n_trials: int,
    seed: int = 0,
    tick_value: float = 1.0,
    sigma: float = 1.0,
    step_safety: float = 5.0,
) -> Tuple[float, float]:
    """Monte Carlo check of the crossing probabilities.

    Simulates driftless Brownian paths from a fresh crossing, with barriers
    2*eta*alpha below and alpha above, bridge-corrected within steps, and
    reports the fraction absorbed at each side. Independent of the traded
    price machinery on purpose.
    """
    if not (0.0 < eta <= 1.0):
        raise ParameterError(f"eta must lie in (0, 1], got {eta!r}")
    if n_trials < 1:
        raise ParameterError("n_trials must be >= 1")
    if tick_value <= 0 or sigma <= 0:
        raise ParameterError("tick_value and sigma must be > 0")
    rng = np.random.default_rng(seed)
    lo = -2.0 * eta * tick_value
    hi = tick_value
    sdt = eta * tick_value / step_safety  # one-step noise, a fraction of the nearer gap
    var = sdt * sdt
    x = np.zeros(n_trials)
    n_dn = 0
    n_up = 0
    guard = 0
    while len(x):
        guard += 1
        if guard > 10_000_000:
            raise RuntimeError("first-passage simulation failed to absorb")
        x1 = x + sdt * rng.standard_normal(len(x))
        det_up = x1 >= hi
        det_dn = x1 <= lo
        pu = np.exp(np.minimum(-2.0 * (hi - x) * (hi - x1) / var, 0.0))
        pd = np.exp(np.minimum(-2.0 * (x - lo) * (x1 - lo) / var, 0.0))
        draws = rng.random((2, len(x)))
        hit_up = det_up | (draws[0] < pu)
        hit_dn = det_dn | (draws[1] < pd)
        both = hit_up & hit_dn
        if np.any(both):
            # earliest tent-path time decides which barrier came first
            up_den = np.where(det_up, x1 - x, (hi - x) + (hi - x1))
            dn_den = np.where(det_dn, x - x1, (x - lo) + (x1 - lo))
            t_up = (hi - x) / np.where(up_den > 0, up_den, np.inf)
            t_dn = (x - lo) / np.where(dn_den > 0, dn_den, np.inf)
            up_first = t_up <= t_dn
            hit_up = np.where(both, up_first, hit_up)
            hit_dn = np.where(both, ~up_first, hit_dn)
        n_up += int(np.count_nonzero(hit_up))
        n_dn += int(np.count_nonzero(hit_dn))
        x = x1[~(hit_up | hit_dn)]
    return n_dn / n_trials, n_up / n_trials
