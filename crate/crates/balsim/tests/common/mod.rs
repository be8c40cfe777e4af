#![allow(dead_code)]

use std::collections::BTreeMap;

use balsim::model::{
    BmFrame, ControlArea, Coupling, CouplingKind, GlobalParams, Horizon, Order, OrderBook, OrderKind, Scenario,
    ScenarioConfig, Series, TsoParams, Unit, UnitType, WaterValueTable,
};
use rand::Rng;

pub fn order(id: &str, t: i64, side: i8, tso: bool, price: f64, q_min: f64, q_max: f64) -> Order<f64> {
    Order {
        id: id.to_string(),
        unit_id: if tso { None } else { Some(format!("u{id}")) },
        area_id: "CA".into(),
        price,
        q_min,
        q_max,
        t_start: t,
        t_end: t + 60,
        t_ex: -30,
        sigma: if tso { -side } else { side },
        is_tso: tso,
        kind: OrderKind::Normal,
        q_acc: 0.0,
        accepted: false,
    }
}

/// Random valid book of at most `max_orders` orders over one or two steps,
/// with exclusions, parent-children and identical-ratio couplings.
pub fn random_book<R: Rng>(rng: &mut R, max_orders: usize) -> OrderBook<f64> {
    let n = rng.gen_range(2..=max_orders);
    let steps = rng.gen_range(1..=2i64);
    let mut orders = Vec::with_capacity(n);
    for i in 0..n {
        let t = 60 * rng.gen_range(0..steps);
        let tso = rng.gen_bool(0.3);
        let side: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let q_max = rng.gen_range(1..=10) as f64 * 10.0;
        let (price, q_min) = if tso {
            let cap = if rng.gen_bool(0.5) { 10000.0 } else { rng.gen_range(20..=150) as f64 };
            (if side > 0 { cap } else { -cap }, 0.0)
        } else {
            let q_min = match rng.gen_range(0..3) {
                0 => 0.0,
                1 => q_max,
                _ => (q_max / 2.0).round(),
            };
            (rng.gen_range(0..=120) as f64, q_min)
        };
        orders.push(order(&format!("o{i:02}"), t, side, tso, price, q_min, q_max));
    }
    let ids: Vec<String> = orders.iter().map(|o| o.id.clone()).collect();
    let mut couplings = Vec::new();
    let mut in_ratio = vec![false; n];
    for _ in 0..rng.gen_range(0..=3) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        match rng.gen_range(0..3) {
            0 => couplings.push(Coupling::new(CouplingKind::Exclusion, vec![ids[a].clone(), ids[b].clone()], None)),
            1 if orders[a].q_min > 0.0 => {
                couplings.push(Coupling::new(CouplingKind::ParentChildren, vec![ids[a].clone(), ids[b].clone()], None))
            }
            2 if !in_ratio[a] && !in_ratio[b] => {
                in_ratio[a] = true;
                in_ratio[b] = true;
                couplings.push(Coupling::new(CouplingKind::IdenticalRatio, vec![ids[a].clone(), ids[b].clone()], None))
            }
            _ => {}
        }
    }
    OrderBook { orders, couplings }
}

/// Random valid single-area scenario on a quarter-hourly horizon with an RR
/// session of four 15-minute steps starting at 10:00.
pub fn random_scenario<R: Rng>(rng: &mut R, max_units: usize) -> Scenario<f64> {
    let h = Horizon { start: 0, dt: 15, len: 96 };
    let n = rng.gen_range(2..=max_units);
    let mut units = Vec::with_capacity(n);
    for i in 0..n {
        units.push(random_unit(rng, &format!("u{i}"), &h));
    }
    let bal = if rng.gen_bool(0.5) { rng.gen_range(-60..=60) as f64 } else { 0.0 };
    Scenario {
        config: ScenarioConfig {
            horizon: h,
            market_start: 600,
            market_dt: Some(15),
            combinatorial: rng.gen_bool(0.7),
            bm: Some(BmFrame { t_ex: 630, t_start: 660, t_end: 720, dt: 15 }),
        },
        global_params: GlobalParams::default(),
        control_areas: vec![ControlArea {
            id: "CA".into(),
            market_area_ids: vec!["Z".into()],
            tso_params: TsoParams {
                delta_for: rng.gen_bool(0.5),
                ..TsoParams::default()
            },
            commercial_balance: BTreeMap::from([("Z".to_string(), Series::Const(bal))]),
            day_ahead_price: Series::Const(rng.gen_range(20..=120) as f64),
        }],
        units,
    }
}

fn steps<R: Rng>(rng: &mut R, h: &Horizon, lo: f64, hi: f64) -> Series<f64> {
    if rng.gen_bool(0.5) {
        return Series::Const(rng.gen_range(lo..=hi).round());
    }
    // Piecewise constant by hour.
    let hourly: Vec<f64> = (0..24).map(|_| rng.gen_range(lo..=hi).round()).collect();
    Series::Values((0..h.len).map(|k| hourly[k * h.dt as usize / 60]).collect())
}

pub fn random_unit<R: Rng>(rng: &mut R, id: &str, h: &Horizon) -> Unit<f64> {
    let kind = match rng.gen_range(0..7) {
        0 | 1 => UnitType::Thermal,
        2 => UnitType::Hydraulic,
        3 => UnitType::Storage,
        4 => if rng.gen_bool(0.5) { UnitType::Wind } else { UnitType::Pv },
        5 => UnitType::FlexibleLoad,
        _ => UnitType::NondispatchableLoad,
    };
    let mut u = Unit::new(id, kind, "Z", 0.0, 100.0, 0.0);
    u.portfolio_id = format!("P{}", rng.gen_range(0..3));
    u.c_var = rng.gen_range(10..=120) as f64;
    match kind {
        UnitType::Thermal => {
            let p_min = rng.gen_range(10..=50) as f64;
            let p_max = p_min + rng.gen_range(20..=150) as f64;
            u.p_min = Series::Const(p_min);
            u.p_max = Series::Const(p_max);
            u.p_plan = if rng.gen_bool(0.3) { Series::Const(0.0) } else { steps(rng, h, p_min, p_max) };
            u.ramp_max = Series::Const(if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(1..=5) as f64 });
            u.c_su = rng.gen_range(0..=5000) as f64;
            u.d_notice = [0, 15, 30, 60][rng.gen_range(0..4)];
            u.d_su = [0, 15, 30][rng.gen_range(0..3)];
            u.d_min_on = [0, 30, 60][rng.gen_range(0..3)];
            u.d_min_off = [0, 30, 60][rng.gen_range(0..3)];
            u.fuel = Some(if rng.gen_bool(0.5) { "gas" } else { "coal" }.into());
        }
        UnitType::Hydraulic | UnitType::Storage => {
            let p_max = rng.gen_range(30..=150) as f64;
            let p_min = if kind == UnitType::Storage { -p_max } else { 0.0 };
            u.p_min = Series::Const(p_min);
            u.p_max = Series::Const(p_max);
            u.p_plan = steps(rng, h, p_min, p_max);
            let e_max = rng.gen_range(200..=2000) as f64;
            u.e_min = Some(Series::Const(0.0));
            u.e_max = Some(Series::Const(e_max));
            u.e_stored = Some(Series::Const((e_max * rng.gen_range(0.0..=1.0)).round()));
            if kind == UnitType::Hydraulic {
                let wv = rng.gen_range(30..=90) as f64;
                u.water_values = Some(WaterValueTable {
                    times: vec![0, 1440],
                    levels: vec![0.0, e_max],
                    values: vec![vec![wv + 20.0, wv], vec![wv + 20.0, wv]],
                });
                u.spreads = Some(vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0]);
                u.ramp_max = Series::Const(if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(2..=10) as f64 });
            } else {
                u.charge_eff = 0.9;
                u.discharge_eff = 0.9;
            }
        }
        UnitType::Wind | UnitType::Pv => {
            let p_max = rng.gen_range(50..=200) as f64;
            u.p_max = Series::Const(p_max);
            u.p_plan = steps(rng, h, 0.0, p_max);
            u.p_forecast = Some(steps(rng, h, 0.0, p_max));
            u.curtailment_ratio = rng.gen_range(0..=10) as f64 / 10.0;
            u.c_var = 0.0;
        }
        UnitType::FlexibleLoad => {
            let p = rng.gen_range(20..=150) as f64;
            u.p_min = Series::Const(-p);
            u.p_max = Series::Const(0.0);
            u.p_plan = steps(rng, h, -p, 0.0);
            u.p_forecast = Some(steps(rng, h, -p, 0.0));
        }
        _ => {
            let p = rng.gen_range(50..=400) as f64;
            u.p_min = Series::Const(-p);
            u.p_max = Series::Const(0.0);
            u.p_plan = steps(rng, h, -p, -p / 2.0);
            u.p_forecast = Some(steps(rng, h, -p, -p / 2.0));
        }
    }
    u
}

pub mod oracle;
pub mod thermal;
pub mod criteria;
