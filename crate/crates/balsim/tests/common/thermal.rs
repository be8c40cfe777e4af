//! Grid of thermal units around a four-hour market frame and isolated
//! activation of their orders.

use balsim::bsp::{formulate_unit_orders, UnitOrders};
use balsim::model::{GlobalParams, Horizon, MarketConfig, MarketKind, Series, Unit, UnitType};

use super::oracle::{plan_feasible, Thermal};

pub const HORIZON: Horizon = Horizon { start: 0, dt: 60, len: 24 };
/// First horizon step of the market frame.
pub const FRAME_FIRST: usize = 10;

pub fn market() -> MarketConfig {
    MarketConfig {
        market_kind: MarketKind::Rr,
        t_ex: 570,
        t_start: 600,
        t_end: 840,
        dt_minutes: 60,
        gct_bsp_offset_min: 55,
        gct_tso_offset_min: 40,
    }
}

/// Hourly plans whose ON/OFF pattern varies over hours 8..16, alternating
/// 50 and 60 MW when ON, plus variants with a 20 MW start-up step.
pub fn plans() -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for bits in 0u32..256 {
        let mut w = [0.0f64; 8];
        for (i, p) in w.iter_mut().enumerate() {
            if bits >> i & 1 == 1 {
                *p = if i % 2 == 0 { 50.0 } else { 60.0 };
            }
        }
        let plan: Vec<f64> = (0..24).map(|k| w[k.clamp(8, 15) - 8]).collect();
        for s in 9..=13 {
            if plan[s] == 0.0 && plan[s + 1] > 0.0 && bits % 3 == 0 {
                let mut v = plan.clone();
                v[s] = 20.0;
                out.push(v);
            }
        }
        out.push(plan);
    }
    out
}

/// Every parameter combination with every plan it can follow.
pub fn units() -> Vec<(Unit<f64>, Thermal)> {
    let mut out = Vec::new();
    let plans = plans();
    for ramp in [None, Some(0.25)] {
        for d_su in [0, 30, 90] {
            for d_min_on in [0, 120, 180] {
                for d_min_off in [0, 60, 180] {
                    for d_notice in [0, 45] {
                        for plan in &plans {
                            let mut u = Unit::new("T", UnitType::Thermal, "Z", 40.0, 100.0, 0.0);
                            u.p_plan = Series::Values(plan.clone());
                            u.ramp_max = Series::Const(ramp.unwrap_or(0.0));
                            u.c_var = 50.0;
                            u.c_su = 1000.0;
                            u.d_su = d_su;
                            u.d_min_on = d_min_on;
                            u.d_min_off = d_min_off;
                            u.d_notice = d_notice;
                            let t = Thermal {
                                p_min: 40.0,
                                p_max: 100.0,
                                ramp: ramp.map(|r| r * 60.0),
                                d_su,
                                d_min_on,
                                d_min_off,
                                d_notice,
                            };
                            if plan_feasible(&t, HORIZON.dt, plan) {
                                out.push((u, t));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn orders(u: &Unit<f64>) -> UnitOrders<f64> {
    formulate_unit_orders(u, &HORIZON, &market(), &GlobalParams::default(), "CA", true).unwrap()
}

/// Horizon trajectories with each order group accepted alone, at the
/// minimum and at the maximum of its orders.
pub fn isolated(u: &Unit<f64>, uo: &UnitOrders<f64>) -> Vec<(String, Vec<f64>)> {
    let plan = u.p_plan.values(&HORIZON);
    let mut out = Vec::new();
    for g in &uo.groups {
        for at_max in [false, true] {
            let mut traj = plan.clone();
            for i in g.all() {
                let o = &uo.orders[i];
                let q = if at_max { o.q_max } else { o.q_min };
                traj[FRAME_FIRST + uo.steps[i]] -= o.sigma as f64 * q;
            }
            let label = format!("{} {}", uo.orders[g.all().next().unwrap()].id, if at_max { "max" } else { "min" });
            out.push((label, traj));
        }
    }
    out
}
