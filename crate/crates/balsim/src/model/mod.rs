//! Scenario data: units, control areas, market timing, orders and couplings.

pub mod order;
pub mod scenario;
pub mod time;
pub mod unit;

pub use order::{Coupling, CouplingKind, CouplingRule, Order, OrderBook, OrderKind};
pub use scenario::{
    validate_dataset, AltKind, BmFrame, ControlArea, GlobalParams, MarketConfig, MarketKind,
    Quantile, RatioBand, RatioTable, Scenario, ScenarioConfig, TsoParams,
};
pub use time::{Horizon, Minutes, Series, TimeGrid, MINUTES_PER_DAY};
pub use unit::{Direction, Reserve, ReserveKind, Unit, UnitType, WaterValueTable};
