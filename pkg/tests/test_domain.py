"""Value types: grids, zones, asset parameters and tape validation."""
import math

import numpy as np
import pytest

from tickzone import (
    NO_QUOTE,
    SUBTICKS_PER_TICK,
    AssetSpec,
    OffGridError,
    ParameterError,
    TickGrid,
    TradeEvent,
    TradeTape,
    Zone,
    ZoneGeometry,
    classify_efficient_price,
)


# ---------------------------------------------------------------- AssetSpec

class TestAssetSpec:
    def test_implicit_spread_is_band_width(self):
        asset = AssetSpec("A", 0.01, eta=0.25)
        assert asset.implicit_spread == pytest.approx(2 * 0.25 * 0.01, rel=1e-15)

    def test_eta_bounds(self):
        AssetSpec("A", 1.0, eta=1.0)  # closed upper end allowed
        with pytest.raises(ParameterError):
            AssetSpec("A", 1.0, eta=0.0)
        with pytest.raises(ParameterError):
            AssetSpec("A", 1.0, eta=1.01)
        with pytest.raises(ParameterError):
            AssetSpec("A", 1.0, eta=-0.1)

    def test_rejects_bad_tick_and_empty_id(self):
        with pytest.raises(ParameterError):
            AssetSpec("A", 0.0)
        with pytest.raises(ParameterError):
            AssetSpec("A", -1.0)
        with pytest.raises(ParameterError):
            AssetSpec("", 1.0)

    def test_eta_optional_until_needed(self):
        asset = AssetSpec("A", 1.0)
        with pytest.raises(ParameterError):
            asset.require_eta()
        with pytest.raises(ParameterError):
            _ = asset.implicit_spread


# ----------------------------------------------------------------- TickGrid

class TestTickGrid:
    def test_exact_text_parse(self):
        grid = TickGrid("0.01")
        assert grid.subticks_from_text("100.01") == 10001 * SUBTICKS_PER_TICK
        assert grid.subticks_from_text("0.01") == SUBTICKS_PER_TICK
        assert grid.subticks_from_text("-0.02") == -2 * SUBTICKS_PER_TICK

    def test_text_round_trip(self):
        grid = TickGrid("0.01")
        for text in ("100.01", "99.99", "0.07", "12345.67"):
            assert grid.text(grid.subticks_from_text(text)) == text

    def test_half_tick_is_on_lattice_but_not_on_tick(self):
        grid = TickGrid("0.01")
        q = grid.subticks_from_text("100.005")
        assert not grid.on_tick(q)
        with pytest.raises(OffGridError):
            grid.tick_index(q)

    def test_sub_lattice_price_rejected(self):
        grid = TickGrid("0.01")
        with pytest.raises(OffGridError):
            grid.subticks_from_text("0.0000000001")

    def test_malformed_price_rejected(self):
        grid = TickGrid("0.01")
        with pytest.raises(OffGridError):
            grid.subticks_from_text("abc")

    def test_tick_value_validation(self):
        with pytest.raises(ParameterError):
            TickGrid("0")
        with pytest.raises(ParameterError):
            TickGrid("-0.5")
        with pytest.raises(ParameterError):
            TickGrid("1/8")
        with pytest.raises(ParameterError):
            TickGrid("abc")

    def test_float_tick_matches_text_tick(self):
        assert TickGrid(0.01) == TickGrid("0.01")
        assert hash(TickGrid(0.01)) == hash(TickGrid("0.01"))
        assert TickGrid("0.01") != TickGrid("0.02")

    def test_subticks_from_currency(self):
        grid = TickGrid("0.25")
        assert grid.subticks_from_currency(100.25) == 401 * SUBTICKS_PER_TICK
        # 100.26 still sits on the millionth-of-a-tick lattice; a price
        # between lattice points does not
        assert grid.subticks_from_currency(100.26) == 401040000
        with pytest.raises(OffGridError):
            grid.subticks_from_currency(100.25 + grid.quantum / 3)

    def test_currency_scalar_and_array(self):
        grid = TickGrid("0.01")
        assert grid.currency(SUBTICKS_PER_TICK) == pytest.approx(0.01)
        arr = grid.currency(np.array([0, SUBTICKS_PER_TICK, 2 * SUBTICKS_PER_TICK]))
        assert np.allclose(arr, [0.0, 0.01, 0.02])

    def test_nearest_tick_index_rounds_halves_down(self):
        grid = TickGrid("1")
        assert grid.nearest_tick_index(100.5) == 100
        assert grid.nearest_tick_index(100.5001) == 101
        assert grid.nearest_tick_index(100.4999) == 100
        assert grid.nearest_tick_index(100.0) == 100

    def test_large_tick_text(self):
        grid = TickGrid("7.8125")
        q = grid.subticks_from_text("109.375")  # 14 ticks
        assert grid.tick_index(q) == 14
        assert grid.text(q) == "109.375"


# -------------------------------------------------------------------- zones

class TestZones:
    def geometry(self):
        return ZoneGeometry(bid=100.0, tick_value=1.0, eta=0.25)

    def test_band_edges(self):
        z = self.geometry()
        assert z.band_low == pytest.approx(100.25)
        assert z.band_high == pytest.approx(100.75)
        assert z.band_high - z.band_low == pytest.approx(2 * z.eta * z.tick_value)

    def test_mid_points_classify_buy_sell(self):
        z = self.geometry()
        assert z.classify(100.5) is Zone.BUY_SELL
        assert z.classify(100.75) is Zone.BUY_SELL  # band is closed
        assert z.classify(100.25) is Zone.BUY_SELL

    def test_outer_points(self):
        z = self.geometry()
        assert z.classify(100.80) is Zone.ASK
        assert z.classify(100.20) is Zone.BID
        assert z.classify(101.75) is Zone.OUTSIDE  # open outer endpoint
        assert z.classify(99.25) is Zone.OUTSIDE
        assert z.classify(99.26) is Zone.BID
        assert z.classify(102.0) is Zone.OUTSIDE

    def test_zone_ordering_is_monotone(self):
        z = self.geometry()
        rank = {Zone.OUTSIDE: None, Zone.BID: 0, Zone.BUY_SELL: 1, Zone.ASK: 2}
        xs = np.linspace(99.3, 101.7, 971)
        ranks = [rank[classify_efficient_price(z, x)] for x in xs]
        inner = [r for r in ranks if r is not None]
        assert inner == sorted(inner)

    def test_zone_windows(self):
        z = self.geometry()
        assert z.bid_zone == (pytest.approx(99.25), pytest.approx(100.25))
        assert z.buy_sell_zone == (pytest.approx(100.25), pytest.approx(100.75))
        assert z.ask_zone == (pytest.approx(100.75), pytest.approx(101.75))

    def test_from_asset(self):
        asset = AssetSpec("A", 1.0, eta=0.25)
        z = ZoneGeometry.from_asset(asset, bid=100.0)
        assert z == self.geometry()

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            ZoneGeometry(bid=100.0, tick_value=0.0, eta=0.25)
        with pytest.raises(ParameterError):
            ZoneGeometry(bid=100.0, tick_value=1.0, eta=0.0)

    def test_full_band_at_eta_one(self):
        z = ZoneGeometry(bid=100.0, tick_value=1.0, eta=1.0)
        # band covers [99.5, 101.5]; the open side zones collapse outward
        assert z.classify(100.5) is Zone.BUY_SELL
        assert z.classify(99.5) is Zone.BUY_SELL
        assert z.classify(99.4) is Zone.BID


# ---------------------------------------------------------------- TradeTape

def _events():
    # open at 100, one up move, a fill, one down move
    return [
        TradeEvent(time=0.5, price=100.0, pre_bid=100.0, pre_ask=101.0, changed_price=False, direction=0),
        TradeEvent(time=1.0, price=101.0, pre_bid=100.0, pre_ask=101.0, changed_price=True, direction=1),
        TradeEvent(time=2.5, price=101.0, pre_bid=101.0, pre_ask=102.0, changed_price=False, direction=0),
        TradeEvent(time=3.0, price=100.0, pre_bid=100.0, pre_ask=101.0, changed_price=True, direction=-1),
    ]


def _tape(**kw):
    asset = AssetSpec("T", 1.0, eta=0.25)
    return TradeTape.from_events(asset, _events(), session_length=10.0, opening_price=100.0, **kw)


class TestTradeTape:
    def test_views(self):
        tape = _tape()
        assert len(tape) == 4
        assert tape.n_trades == 4
        assert tape.n_changes == 2
        assert list(tape.change_indices) == [1, 3]
        assert np.allclose(tape.change_times, [1.0, 3.0])
        assert np.allclose(tape.change_prices, [101.0, 100.0])
        assert list(tape.change_directions) == [1, -1]
        assert tape.opening_price == pytest.approx(100.0)
        assert np.allclose(tape.prices(), [100.0, 101.0, 101.0, 100.0])
        assert tape.quote_mask().all()

    def test_event_round_trip(self):
        tape = _tape()
        assert list(tape) == _events()

    def test_missing_quotes_round_trip(self):
        asset = AssetSpec("T", 1.0, eta=0.25)
        events = [
            TradeEvent(time=1.0, price=100.0, pre_bid=None, pre_ask=None, changed_price=False, direction=0)
        ]
        tape = TradeTape.from_events(asset, events, session_length=2.0, opening_price=100.0)
        assert tape.bid_q[0] == NO_QUOTE
        assert not tape.quote_mask().any()
        assert tape.event(0).pre_bid is None

    def test_rejects_non_increasing_times(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="strictly increasing"):
            TradeTape(asset, [1.0, 1.0], [0, 0], [NO_QUOTE] * 2, [NO_QUOTE] * 2,
                      [False, False], [0, 0], 10.0, 0)

    def test_rejects_times_outside_session(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="within"):
            TradeTape(asset, [11.0], [0], [NO_QUOTE], [NO_QUOTE], [False], [0], 10.0, 0)
        with pytest.raises(ParameterError, match="within"):
            TradeTape(asset, [-1.0], [0], [NO_QUOTE], [NO_QUOTE], [False], [0], 10.0, 0)

    def test_rejects_off_grid_price(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(OffGridError):
            TradeTape(asset, [1.0], [SUBTICKS_PER_TICK // 2], [NO_QUOTE], [NO_QUOTE],
                      [False], [0], 10.0, 0)

    def test_rejects_two_tick_jump(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="one tick"):
            TradeTape(asset, [1.0], [2 * SUBTICKS_PER_TICK], [NO_QUOTE], [NO_QUOTE],
                      [True], [1], 10.0, 0)

    def test_rejects_changed_direction_disagreement(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="disagree"):
            TradeTape(asset, [1.0], [0], [NO_QUOTE], [NO_QUOTE], [True], [0], 10.0, 0)

    def test_rejects_bad_direction_value(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="direction"):
            TradeTape(asset, [1.0], [2 * SUBTICKS_PER_TICK], [NO_QUOTE], [NO_QUOTE],
                      [True], [2], 10.0, 0)

    def test_rejects_inverted_quotes(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="exceed"):
            TradeTape(asset, [1.0], [SUBTICKS_PER_TICK], [SUBTICKS_PER_TICK],
                      [SUBTICKS_PER_TICK], [True], [1], 10.0, 0)

    def test_rejects_fractional_tick_spread(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="whole"):
            TradeTape(asset, [1.0], [SUBTICKS_PER_TICK], [0],
                      [SUBTICKS_PER_TICK + SUBTICKS_PER_TICK // 2], [True], [1], 10.0, 0)

    def test_rejects_column_length_mismatch(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="length"):
            TradeTape(asset, [1.0, 2.0], [0], [NO_QUOTE], [NO_QUOTE], [False], [0], 10.0, 0)

    def test_rejects_nonpositive_session(self):
        asset = AssetSpec("T", 1.0)
        with pytest.raises(ParameterError, match="session_length"):
            TradeTape(asset, [], [], [], [], [], [], 0.0, 0)

    def test_empty_tape_is_valid(self):
        asset = AssetSpec("T", 1.0)
        tape = TradeTape(asset, [], [], [], [], [], [], 10.0, 0)
        assert len(tape) == 0
        assert tape.n_changes == 0

    def test_first_trade_checked_against_opening_price(self):
        asset = AssetSpec("T", 1.0)
        # first trade at 102 with opening 100 is a two-tick move
        with pytest.raises(ParameterError, match="one tick"):
            TradeTape(asset, [1.0], [102 * SUBTICKS_PER_TICK], [NO_QUOTE], [NO_QUOTE],
                      [True], [1], 10.0, 100 * SUBTICKS_PER_TICK)
        # one tick up from the opening is fine
        TradeTape(asset, [1.0], [101 * SUBTICKS_PER_TICK], [NO_QUOTE], [NO_QUOTE],
                  [True], [1], 10.0, 100 * SUBTICKS_PER_TICK)


def test_zone_width_scales_with_eta():
    widths = []
    for eta in (0.1, 0.25, 0.4, 0.5):
        z = ZoneGeometry(bid=50.0, tick_value=0.5, eta=eta)
        widths.append(z.band_high - z.band_low)
    assert widths == pytest.approx([2 * e * 0.5 for e in (0.1, 0.25, 0.4, 0.5)])


def test_classification_agrees_with_math():
    rng = np.random.default_rng(3)
    z = ZoneGeometry(bid=10.0, tick_value=0.5, eta=0.3)
    for x in rng.uniform(9.0, 12.0, 200):
        got = z.classify(float(x))
        if z.band_low <= x <= z.band_high:
            want = Zone.BUY_SELL
        elif z.band_low - z.tick_value < x < z.band_low:
            want = Zone.BID
        elif z.band_high < x < z.band_high + z.tick_value:
            want = Zone.ASK
        else:
            want = Zone.OUTSIDE
        assert got is want, f"x={x}"
