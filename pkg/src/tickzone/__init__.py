"""Market microstructure toolkit for large-tick assets.

The traded price of a large-tick asset hugs a one-tick grid while the
efficient price diffuses underneath; the gap between the two is governed by
a single zone ratio. This package simulates that mechanism, estimates the
ratio and the implicit spread from trade tapes, relates quoted spreads to
volatility per trade across assets, and inverts the relation to score and
choose tick values.
"""

from .domain import (
    NO_QUOTE,
    SUBTICKS_PER_TICK,
    AssetSpec,
    TickGrid,
    TradeEvent,
    TradeTape,
    Zone,
    ZoneGeometry,
    classify_efficient_price,
)
from .equilibrium import (
    DEFAULT_WYART_C,
    EquilibriumReport,
    crossing_probabilities,
    equilibrium_report,
    first_passage_frequencies,
    market_maker_pnl,
    market_order_cost,
)
from .errors import (
    CollinearityError,
    DegenerateTapeError,
    DomainError,
    IngestError,
    InsufficientDataError,
    OffGridError,
    ParameterError,
    PartialDataError,
    TickzoneError,
)
from .estimators import (
    ETA_FLAG_THRESHOLD,
    AlternationCounts,
    DailyRecord,
    SignatureCurve,
    SpreadStats,
    build_daily_record,
    count_alternations,
    empirical_roll_measure,
    estimate_eta,
    estimate_integrated_variance,
    recover_efficient_prices,
    roll_implicit_measure,
    signature_plot,
    spread_stats,
    volatility_per_trade,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    SyntheticAsset,
    load_config,
    parse_config_text,
    read_daily_records_csv,
    run_pipeline,
)
from .regression import (
    REGRESSION_CSV_HEADER,
    RegressionFit,
    design_matrix,
    fit_by_asset,
    fit_spread_vol,
)
from .simulator import (
    EfficientPath,
    EfficientPathSpec,
    PriceChangeEvent,
    PriceChangeSeries,
    TapeConfig,
    TrueParams,
    apply_uncertainty_zones,
    equilibrium_fill_rate,
    generate_tape,
    simulate_day,
    simulate_efficient_path,
    suggested_step,
)
from .tick_policy import (
    BETA_PRESETS,
    EtaForecast,
    ReferenceAsset,
    TickScenario,
    check_large_tick_regime,
    load_reference_assets,
    optimal_tick,
    optimal_tick_table,
    predict_eta,
    reference_session,
    scale_trade_count,
)
from .tradefile import (
    TRADE_CSV_HEADER,
    DayTape,
    SessionFilter,
    TradeCsvRow,
    ingest_trades,
    read_trade_rows,
    write_tape_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AlternationCounts",
    "AssetSpec",
    "BETA_PRESETS",
    "CollinearityError",
    "DEFAULT_WYART_C",
    "DailyRecord",
    "DayTape",
    "DegenerateTapeError",
    "DomainError",
    "ETA_FLAG_THRESHOLD",
    "EfficientPath",
    "EfficientPathSpec",
    "EquilibriumReport",
    "EtaForecast",
    "IngestError",
    "InsufficientDataError",
    "NO_QUOTE",
    "OffGridError",
    "ParameterError",
    "PartialDataError",
    "PipelineConfig",
    "PipelineResult",
    "PriceChangeEvent",
    "PriceChangeSeries",
    "REGRESSION_CSV_HEADER",
    "ReferenceAsset",
    "RegressionFit",
    "SUBTICKS_PER_TICK",
    "SessionFilter",
    "SignatureCurve",
    "SpreadStats",
    "SyntheticAsset",
    "TRADE_CSV_HEADER",
    "TapeConfig",
    "TickGrid",
    "TickScenario",
    "TickzoneError",
    "TradeCsvRow",
    "TradeEvent",
    "TradeTape",
    "TrueParams",
    "Zone",
    "ZoneGeometry",
    "apply_uncertainty_zones",
    "build_daily_record",
    "check_large_tick_regime",
    "classify_efficient_price",
    "count_alternations",
    "crossing_probabilities",
    "design_matrix",
    "empirical_roll_measure",
    "equilibrium_fill_rate",
    "equilibrium_report",
    "estimate_eta",
    "estimate_integrated_variance",
    "first_passage_frequencies",
    "fit_by_asset",
    "fit_spread_vol",
    "generate_tape",
    "ingest_trades",
    "load_config",
    "load_reference_assets",
    "market_maker_pnl",
    "market_order_cost",
    "optimal_tick",
    "optimal_tick_table",
    "parse_config_text",
    "predict_eta",
    "read_daily_records_csv",
    "read_trade_rows",
    "recover_efficient_prices",
    "reference_session",
    "roll_implicit_measure",
    "run_pipeline",
    "scale_trade_count",
    "signature_plot",
    "simulate_day",
    "simulate_efficient_path",
    "spread_stats",
    "suggested_step",
    "volatility_per_trade",
    "write_tape_csv",
]
