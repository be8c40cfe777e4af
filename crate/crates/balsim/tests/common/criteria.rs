//! One check per acceptance criterion. Each returns a short summary on
//! success and the first failure otherwise; the acceptance harness prints
//! them and the regular tests run smaller versions.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use balsim::bm::{redispatch_term, solve, BmProblem, BmUnit, SPILL_PENALTY};
use balsim::bsp::{
    enumerate_indexes, formulate_bsp_orders, thermal_index, IndexKind, ShutdownCase, StartupCase, StepSpan, UnitView,
};
use balsim::clearing::{brute_force_clear, clear, AreaPrice, ClearingResult, OrderResult};
use balsim::model::{Direction, GlobalParams, MarketConfig, MarketKind, RatioTable};
use balsim::pipeline::{run, PipelineSpec};
use balsim::tso::{
    bsp_overall_volume, compute_needs, mfrr_price, raw_needs, risk_averse_prices, risk_averse_slices, slice_division,
};
use balsim::{aggregation::apply_clearing, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{bm_grid_search, coupling_errors, risk_price, thermal_violations};
use super::{random_book, random_scenario, thermal};

pub type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

pub const CLEARING_TOL: f64 = 1e-6;
pub const CLEARING_BUDGET: Duration = Duration::from_secs(60);

/// Criterion 1: clearing against exhaustive search on random books.
pub fn coupling_semantics(books: usize, seed: u64) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..books {
        let book = random_book(&mut rng, 12);
        let r = clear(&book).map_err(|e| format!("book {case}: {e}"))?;
        let o = brute_force_clear(&book).map_err(|e| format!("book {case}: oracle {e}"))?;
        ensure!(
            (r.objective - o.objective).abs() <= CLEARING_TOL,
            "book {case}: objective {} vs exhaustive {}",
            r.objective,
            o.objective
        );
        let errs = coupling_errors(&book, &r.q_acc());
        ensure!(errs.is_empty(), "book {case}: {errs:?}");
    }
    let el = start.elapsed();
    ensure!(el < CLEARING_BUDGET, "took {el:?}");
    Ok(format!("{books} books in {:.1}s", el.as_secs_f64()))
}

/// Criterion 2: index enumeration on single runs and the four-step example.
pub fn combinatorial_enumeration() -> Outcome {
    for n in 1..=6 {
        for pre in 0..=2 {
            for post in 0..=2 {
                let mask: Vec<bool> = (0..pre + n + post).map(|k| k >= pre && k < pre + n).collect();
                let got = enumerate_indexes(&mask, true).len();
                ensure!(got == n * (n + 1) / 2, "mask {mask:?}: {got} indexes");
            }
        }
    }
    let example = enumerate_indexes(&[false, true, true, true], true);
    ensure!(example.len() == 6, "four-step example gave {}", example.len());
    ensure!(
        example.iter().all(|s| s.first >= 1 && s.last <= 3),
        "example index outside the available steps"
    );
    Ok("n = 1..6 and the four-step example (6 indexes)".into())
}

/// Criterion 3: every startup and shutdown case is reached and every group
/// of orders, accepted alone at either bound, is operable.
pub fn thermal_matrix() -> Outcome {
    let units = thermal::units();
    let market = thermal::market();
    let grid_len = 4;
    let mut startup: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut shutdown: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut trajectories = 0usize;
    for (u, t) in &units {
        let uo = thermal::orders(u);
        let v = UnitView::new(u, &thermal::HORIZON, &market).map_err(|e| e.to_string())?;
        for first in 0..grid_len {
            for last in first..grid_len {
                let span = StepSpan { first, last };
                let emitted = |kind| uo.groups.iter().any(|g| g.kind == kind && g.span == span && !g.members.is_empty());
                let up = thermal_index(&v, span, IndexKind::Up);
                if let Some(c) = up.startup_case {
                    let e = startup.entry(format!("{c:?}")).or_default();
                    e.0 += 1;
                    e.1 += emitted(IndexKind::Up) as usize;
                }
                let sd = thermal_index(&v, span, IndexKind::Shutdown);
                if let Some(c) = sd.shutdown_case {
                    let e = shutdown.entry(format!("{c:?}")).or_default();
                    e.0 += 1;
                    e.1 += emitted(IndexKind::Shutdown) as usize;
                }
            }
        }
        let plan = u.p_plan.values(&thermal::HORIZON);
        for (label, traj) in thermal::isolated(u, &uo) {
            let v = thermal_violations(t, thermal::HORIZON.dt, market.t_ex, &plan, &traj);
            ensure!(v.is_empty(), "{label} with {t:?} on plan {plan:?}: {v:?}");
            trajectories += 1;
        }
    }
    let su = [
        StartupCase::OnBoth,
        StartupCase::OnBeforeOffAfter,
        StartupCase::OffBeforeOnAfter,
        StartupCase::MidStartup,
        StartupCase::OffBoth,
    ];
    let sd = [
        ShutdownCase::OffBoth,
        ShutdownCase::OffBeforeOnAfter,
        ShutdownCase::OnBeforeOffAfter,
        ShutdownCase::MidStartup,
        ShutdownCase::OnBoth,
    ];
    for c in su.iter().map(|c| format!("{c:?}")) {
        ensure!(startup.contains_key(&c), "startup case {c} never reached");
    }
    for c in sd.iter().map(|c| format!("{c:?}")) {
        ensure!(shutdown.contains_key(&c), "shutdown case {c} never reached");
    }
    Ok(format!(
        "{} units, {trajectories} trajectories; startup {startup:?}; shutdown {shutdown:?}",
        units.len()
    ))
}

/// Criterion 4: needs are capped by the compensating volume and the
/// forecast switch moves them by the forecast deviations.
pub fn needs_capping(scenarios: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut binding = 0;
    for case in 0..scenarios {
        let sc = random_scenario(&mut rng, 8);
        let ca = &sc.control_areas[0];
        let market = sc.config.market(MarketKind::Rr);
        let grid = market.grid().map_err(|e| e.to_string())?;
        let book = formulate_bsp_orders(&sc, &market).map_err(|e| e.to_string())?;
        let needs = compute_needs(&sc, ca, &grid, &book);
        for (k, &t) in needs.times.iter().enumerate() {
            let b = needs.bn[k];
            let dir = if b >= 0.0 { Direction::Up } else { Direction::Down };
            let vol = bsp_overall_volume(&book, &ca.id, t, dir);
            ensure!(b.abs() <= vol + 1e-9, "scenario {case} t={t}: |bn| {} > volume {vol}", b.abs());
            ensure!(b * needs.raw[k] >= 0.0, "scenario {case} t={t}: cap flipped the sign");
            binding += (needs.raw[k].abs() > b.abs()) as usize;
        }
        let with = raw_needs(&sc, ca, &grid, true);
        let without = raw_needs(&sc, ca, &grid, false);
        let h = sc.horizon();
        for (k, &t) in grid.steps().iter().enumerate() {
            let i = ((t - h.start) / h.dt) as usize;
            let mut expected = 0.0;
            for u in &sc.units {
                let Some(f) = &u.p_forecast else { continue };
                let (f, p) = (f.values(h)[i], u.p_plan.values(h)[i]);
                if u.unit_type.is_load() {
                    expected += f.abs() - p.abs();
                } else if u.unit_type.is_renewable() {
                    expected -= f - p;
                }
            }
            let got = with[k] - without[k];
            ensure!((got - expected).abs() <= 1e-9, "scenario {case} t={t}: shift {got} vs {expected}");
        }
    }
    Ok(format!("{scenarios} scenarios, cap binding on {binding} steps"))
}

/// Criterion 5: slice division traces and reconstruction.
pub fn slice_traces(vectors: usize, seed: u64) -> Outcome {
    let d = slice_division(&[250.0, 150.0], 100.0);
    ensure!(d.up == vec![100.0, 50.0, 100.0], "[250, 150] gave {:?}", d.up);
    ensure!(
        d.per_step == vec![vec![100.0, 50.0, 100.0], vec![100.0, 50.0]],
        "[250, 150] per step {:?}",
        d.per_step
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..vectors {
        let n = rng.gen_range(1..=8);
        // Whole and half megawatts keep sums exact.
        let bn: Vec<f64> = (0..n).map(|_| rng.gen_range(-800..=800) as f64 / 2.0).collect();
        let v = rng.gen_range(10..=200) as f64;
        let d = slice_division(&bn, v);
        for (k, b) in bn.iter().enumerate() {
            let s: f64 = d.per_step[k].iter().sum();
            ensure!(s == b.abs(), "vector {case} {bn:?} v={v}: step {k} sums to {s}");
            ensure!(d.per_step[k].iter().all(|&q| q > 0.0 && q <= v), "vector {case}: slice above {v}");
        }
    }
    Ok(format!("trace ok, {vectors} random vectors reconstruct exactly"))
}

/// Day-ahead to mFRR ratios, (lower bound MW, down, up).
pub const FRENCH_RATIOS: [(f64, f64, f64); 6] = [
    (0.0, 0.81, 1.28),
    (300.0, 0.76, 1.33),
    (600.0, 0.73, 1.36),
    (900.0, 0.7, 1.37),
    (1200.0, 0.7, 1.38),
    (1500.0, 0.59, 1.47),
];

/// Criterion 6: the ratio table, band by band.
pub fn mfrr_table() -> Outcome {
    let table = RatioTable::default();
    let mut checks = 0;
    for (i, &(lower, down, up)) in FRENCH_RATIOS.iter().enumerate() {
        let upper = FRENCH_RATIOS.get(i + 1).map_or(lower + 1000.0, |b| b.0);
        let q = (lower + upper) / 2.0;
        for lambda in [50.0, 100.0] {
            let got_up = mfrr_price(lambda, &table, q);
            let got_dn = mfrr_price(lambda, &table, -q);
            ensure!(got_up == lambda * up, "band {lower}: up price {got_up} at {lambda}");
            ensure!(got_dn == lambda * down, "band {lower}: down price {got_dn} at {lambda}");
            checks += 2;
        }
    }
    Ok(format!("{checks} exact checks"))
}

fn band(v: f64) -> (f64, f64) {
    let row = FRENCH_RATIOS.iter().rev().find(|r| v >= r.0).unwrap_or(&FRENCH_RATIOS[0]);
    (row.1, row.2)
}

/// Criterion 7: risk-averse slice quantities, directions and prices.
pub fn risk_averse(cases: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphas: Vec<f64> = std::iter::once(0.01)
        .chain((1..=9).map(|i| i as f64 / 10.0))
        .chain(std::iter::once(0.99))
        .collect();
    let (mut pos, mut straddle, mut priced) = (0, 0, 0);
    for case in 0..cases {
        let mut eps: Vec<f64> = (0..alphas.len()).map(|_| rng.gen_range(-300..=300) as f64).collect();
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        if eps.len() != alphas.len() {
            continue;
        }
        let inner = &eps[1..eps.len() - 1];
        let bn = rng.gen_range(-600..=600) as f64;
        let slices = risk_averse_slices(bn, inner).map_err(|e| e.to_string())?;
        if bn > 0.0 && bn + inner[0] >= 0.0 {
            let total: f64 = slices.iter().map(|s| s.q).sum();
            ensure!(
                (total - (bn + inner[inner.len() - 1])).abs() <= 1e-9,
                "case {case}: upward slices sum to {total}, bn {bn}"
            );
            pos += 1;
        }
        let signs: Vec<f64> = inner.iter().map(|e| bn + e).collect();
        if bn != 0.0 && signs.iter().any(|&s| s < 0.0) && signs.iter().any(|&s| s > 0.0) {
            let dirs: Vec<i8> = slices.iter().map(|s| s.sigma).collect();
            let flips = dirs.windows(2).filter(|w| w[0] != w[1]).count();
            // Downward slices first, then upward ones.
            ensure!(flips == 1 && dirs[0] == 1, "case {case}: directions {dirs:?}");
            straddle += 1;
        }
        let lambda = 40.0 + rng.gen_range(0..=60) as f64;
        let up = |v: f64| v * lambda * band(v).1;
        let dn = |v: f64| v * lambda * band(v).0;
        let prices = risk_averse_prices(&slices, &alphas, &eps, |d, v| {
            Some(match d {
                Direction::Up => up(v.abs()),
                Direction::Down => dn(v.abs()),
            })
        });
        for (s, p) in slices.iter().zip(&prices) {
            let stack: f64 = slices
                .iter()
                .filter(|o| o.sigma == s.sigma && if s.sigma < 0 { o.index <= s.index } else { o.index >= s.index })
                .map(|o| o.q)
                .sum();
            let want = risk_price(&alphas, &eps, s.index + 1, stack, s.sigma < 0, &up, &dn);
            let got = p.ok_or_else(|| format!("case {case}: missing price"))?;
            ensure!((got - want).abs() <= 1e-9, "case {case} slice {}: {got} vs {want}", s.index);
            priced += 1;
        }
    }
    ensure!(pos > 0 && straddle > 0, "sample missed a case ({pos} upward, {straddle} straddling)");
    Ok(format!("{pos} upward, {straddle} straddling, {priced} prices"))
}

/// Checks conservation for one book and acceptance vector.
fn conserved(sc: &Scenario, book: &balsim::OrderBook, q: &[f64], market: &MarketConfig) -> Result<(), String> {
    let result = ClearingResult {
        orders: book
            .orders
            .iter()
            .zip(q)
            .map(|(o, &q)| OrderResult {
                id: o.id.clone(),
                q_acc: q,
                accepted: q > 0.0,
            })
            .collect(),
        prices: Vec::<AreaPrice<f64>>::new(),
        objective: 0.0,
        paradoxical: Vec::new(),
    };
    let (next, delta, _) = apply_clearing(sc, book, &result, market).map_err(|e| e.to_string())?;
    let h = *sc.horizon();
    let time = |k: usize| h.start + k as i64 * h.dt;
    let mut moved = vec![0.0; h.len];
    let mut energy: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (o, &q) in book.orders.iter().zip(q) {
        if o.is_tso || q == 0.0 {
            continue;
        }
        let uid = o.unit_id.as_deref().unwrap();
        for (k, m) in moved.iter_mut().enumerate() {
            if time(k) >= o.t_start && time(k) < o.t_end {
                *m += -(o.sigma as f64) * q;
            }
        }
        let e = energy.entry(uid).or_insert_with(|| vec![0.0; h.len]);
        for (k, x) in e.iter_mut().enumerate() {
            if time(k) >= o.t_start {
                *x += o.sigma as f64 * q * (o.t_end - o.t_start) as f64 / 60.0;
            }
        }
    }
    for k in 0..h.len {
        let d: f64 = sc
            .units
            .iter()
            .zip(&next.units)
            .map(|(a, b)| b.p_plan.values(&h)[k] - a.p_plan.values(&h)[k])
            .sum();
        ensure!((d - moved[k]).abs() <= 1e-9, "step {k}: plans moved {d}, orders {}", moved[k]);
    }
    let mut portfolios: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for u in &next.units {
        let p = portfolios.entry(u.portfolio()).or_insert_with(|| vec![0.0; h.len]);
        for (a, b) in p.iter_mut().zip(u.p_plan.values(&h)) {
            *a += b;
        }
    }
    for (name, p) in &portfolios {
        let got = &delta.portfolios[*name];
        ensure!(
            p.iter().zip(got).all(|(a, b)| (a - b).abs() <= 1e-9),
            "portfolio {name} is not the sum of its members"
        );
    }
    for (a, b) in sc.units.iter().zip(&next.units) {
        if !a.unit_type.is_reservoir() {
            continue;
        }
        let (Some(e0), Some(e1)) = (&a.e_stored, &b.e_stored) else { continue };
        let (e0, e1) = (e0.values(&h), e1.values(&h));
        let want = energy.get(a.id.as_str()).cloned().unwrap_or_else(|| vec![0.0; h.len]);
        for k in 0..h.len {
            ensure!(
                (e1[k] - e0[k] - want[k]).abs() <= 1e-9,
                "unit {} step {k}: stored energy moved {} instead of {}",
                a.id,
                e1[k] - e0[k],
                want[k]
            );
        }
    }
    if q.iter().all(|&x| x == 0.0) {
        ensure!(next == *sc, "zero acceptance changed the scenario");
    }
    Ok(())
}

/// Criterion 8: aggregation conserves power and stored energy.
pub fn aggregation_conservation(scenarios: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut books = 0;
    for case in 0..scenarios {
        let sc = random_scenario(&mut rng, 8);
        let market = sc.config.market(MarketKind::Rr);
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let spec = PipelineSpec::preset("markets", MarketKind::Rr, case as u64, tmp.path().to_path_buf())
            .map_err(|e| e.to_string())?;
        let out = run(&spec, &sc).map_err(|e| format!("scenario {case}: {e}"))?;
        let book = out.book.unwrap();
        let cleared = out.clearing.unwrap().q_acc();
        conserved(&sc, &book, &cleared, &market).map_err(|e| format!("scenario {case} cleared: {e}"))?;
        let zeros = vec![0.0; book.orders.len()];
        conserved(&sc, &book, &zeros, &market).map_err(|e| format!("scenario {case} zero: {e}"))?;
        // Any acceptance vector, feasible for the clearing or not.
        let random: Vec<f64> = book
            .orders
            .iter()
            .map(|o| if rng.gen_bool(0.5) { rng.gen_range(o.q_min..=o.q_max) } else { 0.0 })
            .collect();
        conserved(&sc, &book, &random, &market).map_err(|e| format!("scenario {case} random: {e}"))?;
        books += 3;
    }
    Ok(format!("{books} acceptance vectors on {scenarios} scenarios"))
}

fn tenth<R: Rng>(rng: &mut R, lo: i64, hi: i64) -> f64 {
    rng.gen_range(lo..=hi) as f64 / 10.0
}

/// Small activation problem with data on the 0.1 MW grid.
pub fn random_bm_problem<R: Rng>(rng: &mut R, ramped: bool) -> BmProblem<f64> {
    let n = rng.gen_range(1..=2);
    let m = if ramped { rng.gen_range(1..=2) } else { rng.gen_range(1..=3) };
    let cap = if ramped { 15 } else { 25 };
    let dt = [15, 30, 60][rng.gen_range(0..3)];
    let units = (0..m)
        .map(|i| {
            let plan: Vec<f64> = (0..n).map(|_| tenth(rng, 0, 50)).collect();
            let lo: Vec<f64> = plan.iter().map(|p| p - tenth(rng, 0, cap)).collect();
            let hi: Vec<f64> = plan.iter().map(|p| p + tenth(rng, 0, cap)).collect();
            let ramp = (ramped && n > 1 && rng.gen_bool(0.7)).then(|| {
                let base = (plan[1] - plan[0]).abs();
                vec![base + tenth(rng, 0, 10)]
            });
            BmUnit {
                id: format!("u{i}"),
                price: (0..n).map(|_| rng.gen_range(-20..=120) as f64).collect(),
                plan,
                lo,
                hi,
                ramp,
                frozen: (0..n).map(|_| rng.gen_bool(0.1)).collect(),
                storage: None,
            }
        })
        .collect();
    BmProblem {
        times: (0..n as i64).map(|k| 600 + k * dt).collect(),
        dt,
        bn: (0..n).map(|_| tenth(rng, -60, 60)).collect(),
        units,
        voll: 26000.0,
        p_spill: [0.0, 1000.0][rng.gen_range(0..2)],
        p_redispatch: [5.0, 50.0, 5000.0][rng.gen_range(0..3)],
    }
}

/// Criterion 9: activation optimum, zero-need behaviour and cost correction.
pub fn bm_optimality(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..instances {
        let p = random_bm_problem(&mut rng, case % 3 == 2);
        let r = solve(&p).map_err(|e| e.to_string())?;
        let grid = bm_grid_search(&p);
        let gap = (r.objective - grid).abs();
        worst = worst.max(gap);
        ensure!(gap <= 1e-6 * (1.0 + grid.abs()), "instance {case}: solve {} grid {grid}\n{p:?}", r.objective);
        for k in 0..p.times.len() {
            ensure!(r.e_voll[k] * r.e_spill[k] <= 1e-9, "instance {case}: unserved and spilled at step {k}");
        }
        let corrected = r.objective - redispatch_term(&r, &p) - r.e_spill.iter().sum::<f64>() * (SPILL_PENALTY - p.p_spill);
        let total: f64 = r.total_cost.iter().sum();
        ensure!(
            (corrected - total).abs() <= 1e-6 * (1.0 + total.abs()),
            "instance {case}: corrected objective {corrected} vs total cost {total}"
        );
    }
    // Zero needs on units with market-priced activation.
    for case in 0..10 {
        let mut p = random_bm_problem(&mut rng, false);
        p.p_redispatch = GlobalParams::<f64>::default().p_redispatch;
        p.bn.iter_mut().for_each(|b| *b = 0.0);
        let r = solve(&p).map_err(|e| e.to_string())?;
        ensure!(
            r.p_act.iter().flatten().all(|&a| a == 0.0),
            "zero-need case {case} activated {:?}",
            r.p_act
        );
        ensure!(r.objective == 0.0, "zero-need case {case}: objective {}", r.objective);
    }
    Ok(format!("{instances} instances, worst gap {worst:.2e}"))
}

pub const DEMO_BUDGET: Duration = Duration::from_secs(30);

/// Criterion 10: the demo scenario runs twice to identical bytes.
pub fn demo_determinism(scenario: &Path) -> Outcome {
    let start = Instant::now();
    let text = std::fs::read_to_string(scenario).map_err(|e| format!("{}: {e}", scenario.display()))?;
    let sc = Scenario::from_json(&text).map_err(|e| e.to_string())?;
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = |d: &Path| PipelineSpec::preset("markets+bm", MarketKind::Rr, 7, d.to_path_buf());
    let ra = run(&spec(a.path()).map_err(|e| e.to_string())?, &sc).map_err(|e| e.to_string())?;
    run(&spec(b.path()).map_err(|e| e.to_string())?, &sc).map_err(|e| e.to_string())?;
    let mut names: Vec<String> = ra.manifest.artifacts.iter().map(|x| x.file.clone()).collect();
    names.push(balsim::pipeline::MANIFEST_FILE.to_string());
    for f in &names {
        let x = std::fs::read(a.path().join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.path().join(f)).map_err(|e| e.to_string())?;
        ensure!(x == y, "{f} differs between runs");
    }
    let el = start.elapsed();
    ensure!(el < DEMO_BUDGET, "took {el:?}");
    Ok(format!("{} files identical, {:.2}s", names.len(), el.as_secs_f64()))
}
