//! BSP order formulation: indexes, available power, orders, prices and couplings.

pub mod available;
pub mod build;
pub mod coupling;
pub mod index;
pub mod storage;
pub mod thermal;

pub use available::{
    apply_notice_delay, initial_available_power, shutdown_availability, step_range, subtract_reserves,
    AvailableRange, UnitView,
};
pub use build::{emits, thermal_price, OrderGroup, UnitOrders};
pub use coupling::create_couplings;
pub use index::{enumerate_indexes, CombinatorialIndex, IndexKind, StepSpan};
pub use storage::{hydro_fragments, hydro_storage_constraints, storage_window_end, StorageBinding};
pub use thermal::{
    thermal_index, thermal_ramping, thermal_shutdown_case, thermal_startup_case, ShutdownCase,
    StartupCase, ThermalFlags, ThermalIndex,
};

use crate::error::{Error, Result};
use crate::model::{Direction, GlobalParams, Horizon, MarketConfig, OrderBook, Scenario, Unit, UnitType};
use crate::scalar::Scalar;

/// Orders of one unit, grouped by logical index.
pub fn formulate_unit_orders<S: Scalar>(
    unit: &Unit<S>,
    horizon: &Horizon,
    market: &MarketConfig,
    global: &GlobalParams<S>,
    area: &str,
    combinatorial: bool,
) -> Result<UnitOrders<S>> {
    let v = UnitView::new(unit, horizon, market)?;
    let mut out = UnitOrders::default();
    let n = v.len();
    let ranges: Vec<AvailableRange<S>> = (0..n).map(|k| step_range(&v, k)).collect();
    let mask = |dir: Direction| ranges.iter().map(|r| r.has(dir)).collect::<Vec<_>>();
    match unit.unit_type {
        UnitType::Thermal => {
            let lists = [
                (IndexKind::Up, mask(Direction::Up)),
                (IndexKind::Down, mask(Direction::Down)),
                (IndexKind::Shutdown, shutdown_availability(&v)?),
            ];
            for (kind, m) in lists {
                for span in enumerate_indexes(&m, combinatorial) {
                    let ti = thermal_index(&v, span, kind);
                    build::build_thermal(&v, &ti, area, &mut out);
                }
            }
        }
        UnitType::Wind | UnitType::Pv | UnitType::FlexibleLoad | UnitType::NondispatchableLoad => {
            for (kind, dir) in [(IndexKind::Up, Direction::Up), (IndexKind::Down, Direction::Down)] {
                for span in enumerate_indexes(&mask(dir), combinatorial) {
                    let r = thermal::index_range(&v, span);
                    build::build_general(&v, span, kind, &r, area, &mut out);
                }
            }
        }
        UnitType::Hydraulic | UnitType::Storage | UnitType::PhsStorage => {
            for (k, r) in ranges.iter().enumerate() {
                let (r, binding) = hydro_storage_constraints(*r, &v, k as i64, global);
                for (kind, dir) in [(IndexKind::Up, Direction::Up), (IndexKind::Down, Direction::Down)] {
                    build::build_reservoir(&v, k, kind, &r, binding.get(dir), area, &mut out);
                }
            }
        }
    }
    Ok(out)
}

/// Order book of one unit: orders and couplings.
pub fn formulate_unit<S: Scalar>(
    unit: &Unit<S>,
    horizon: &Horizon,
    market: &MarketConfig,
    global: &GlobalParams<S>,
    area: &str,
    combinatorial: bool,
) -> Result<OrderBook<S>> {
    let uo = formulate_unit_orders(unit, horizon, market, global, area, combinatorial)?;
    let couplings = create_couplings(&uo);
    Ok(OrderBook {
        orders: uo.orders,
        couplings,
    })
}

/// BSP orders of every unit of the scenario, in unit id order.
///
/// Orders carry the id of the control area they are cleared in.
pub fn formulate_bsp_orders<S: Scalar>(sc: &Scenario<S>, market: &MarketConfig) -> Result<OrderBook<S>> {
    let mut units: Vec<&Unit<S>> = sc.units.iter().collect();
    units.sort_by(|a, b| a.id.cmp(&b.id));
    let mut book = OrderBook::default();
    for u in units {
        let ca = sc
            .control_area_of(&u.area_id)
            .ok_or_else(|| Error::Referential(format!("unit {} references unknown area {}", u.id, u.area_id)))?;
        let b = formulate_unit(u, sc.horizon(), market, &sc.global_params, &ca.id, sc.config.combinatorial)?;
        book.orders.extend(b.orders);
        book.couplings.extend(b.couplings);
    }
    Ok(book)
}
