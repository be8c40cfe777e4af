//! CSV tables summarising a run directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::pipeline::{
    csv_err, read_artifact, BmArea, ClearingArtifact, OrdersArtifact, BM_FILE, CLEARING_FILE, ORDERS_FILE,
};

pub const NEEDS_TABLE: &str = "needs.csv";
pub const VOLUMES_TABLE: &str = "volumes.csv";
pub const PRICES_TABLE: &str = "prices.csv";
pub const BM_ACTIVATIONS_TABLE: &str = "bm_activations.csv";
pub const COSTS_TABLE: &str = "costs.csv";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub written: Vec<PathBuf>,
    /// Tables that could not be built, with the reason.
    pub skipped: Vec<String>,
}

fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Reads the artifacts of `run_dir` and writes the report tables into
/// `out_dir`.
pub fn write_report(run_dir: &Path, out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir)?;
    let orders: Option<OrdersArtifact<f64>> = read_artifact(run_dir, ORDERS_FILE)?;
    let clearing: Option<ClearingArtifact<f64>> = read_artifact(run_dir, CLEARING_FILE)?;
    let bm: Option<Vec<BmArea<f64>>> = read_artifact(run_dir, BM_FILE)?;
    let mut rep = Report::default();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let p = out_dir.join(name);
        write_table(&p, header, rows)?;
        rep.written.push(p);
        Ok(())
    };

    // (area, t) -> (market eur, bm eur)
    let mut costs: BTreeMap<(String, i64), (f64, f64)> = BTreeMap::new();

    match &orders {
        Some(o) => {
            let rows = o
                .needs
                .iter()
                .flat_map(|n| {
                    n.times.iter().enumerate().map(move |(k, t)| {
                        vec![n.area_id.clone(), t.to_string(), n.raw[k].to_string(), n.bn[k].to_string()]
                    })
                })
                .collect();
            emit(NEEDS_TABLE, &["control_area", "t", "raw_mw", "capped_mw"], rows)?;
        }
        None => rep.skipped.push(format!("{NEEDS_TABLE}: no {ORDERS_FILE}")),
    }

    match (&orders, &clearing) {
        (Some(o), Some(c)) => {
            let mut vol: BTreeMap<(String, i64), (f64, f64, f64, f64)> = BTreeMap::new();
            for (ord, r) in o.book.orders.iter().zip(&c.result.orders) {
                let e = vol.entry((ord.area_id.clone(), ord.t_start)).or_default();
                let up = ord.side() < 0;
                let slot = match (ord.is_tso, up) {
                    (false, true) => &mut e.0,
                    (false, false) => &mut e.1,
                    // TSO buyers ask for upward energy.
                    (true, false) => &mut e.2,
                    (true, true) => &mut e.3,
                };
                *slot += r.q_acc;
            }
            let rows = vol
                .into_iter()
                .map(|((a, t), (bu, bd, tu, td))| {
                    vec![a, t.to_string(), bu.to_string(), bd.to_string(), tu.to_string(), td.to_string()]
                })
                .collect();
            emit(
                VOLUMES_TABLE,
                &["control_area", "t", "bsp_up_mw", "bsp_down_mw", "tso_up_mw", "tso_down_mw"],
                rows,
            )?;
        }
        _ => rep.skipped.push(format!("{VOLUMES_TABLE}: needs {ORDERS_FILE} and {CLEARING_FILE}")),
    }

    match &clearing {
        Some(c) => {
            let rows = c
                .result
                .prices
                .iter()
                .map(|p| vec![p.area.clone(), p.t.to_string(), opt(p.price)])
                .collect();
            emit(PRICES_TABLE, &["control_area", "t", "price_eur_mwh"], rows)?;
            if let Some(o) = &orders {
                let area: BTreeMap<&str, &str> = o
                    .book
                    .orders
                    .iter()
                    .map(|x| (x.id.as_str(), x.area_id.as_str()))
                    .collect();
                for a in &c.activations {
                    let key = (area.get(a.order_id.as_str()).unwrap_or(&"").to_string(), a.t);
                    costs.entry(key).or_default().0 += a.eur.unwrap_or(0.0);
                }
            }
        }
        None => rep.skipped.push(format!("{PRICES_TABLE}: no {CLEARING_FILE}")),
    }

    match &bm {
        Some(areas) => {
            let mut rows = Vec::new();
            for a in areas {
                let r = &a.result;
                for (u, id) in r.unit_ids.iter().enumerate() {
                    for (k, t) in r.times.iter().enumerate() {
                        let mw = r.p_act[u][k];
                        if mw != 0.0 {
                            rows.push(vec![
                                a.control_area.clone(),
                                id.clone(),
                                t.to_string(),
                                mw.to_string(),
                                a.problem.units[u].price[k].to_string(),
                            ]);
                        }
                    }
                }
                for (k, t) in r.times.iter().enumerate() {
                    costs.entry((a.control_area.clone(), *t)).or_default().1 += r.total_cost[k];
                }
            }
            emit(BM_ACTIVATIONS_TABLE, &["control_area", "unit_id", "t", "mw", "price_eur_mwh"], rows)?;
        }
        None => rep.skipped.push(format!("{BM_ACTIVATIONS_TABLE}: no {BM_FILE}")),
    }

    if clearing.is_some() || bm.is_some() {
        let rows = costs
            .into_iter()
            .map(|((a, t), (m, b))| vec![a, t.to_string(), m.to_string(), b.to_string(), (m + b).to_string()])
            .collect();
        emit(COSTS_TABLE, &["control_area", "t", "market_eur", "bm_eur", "total_eur"], rows)?;
    } else {
        rep.skipped.push(format!("{COSTS_TABLE}: no cost artifacts"));
    }
    Ok(rep)
}
