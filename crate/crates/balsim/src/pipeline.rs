//! Orchestration of a balancing session: BSP orders, TSO orders, clearing,
//! aggregation and the balancing mechanism, with reproducible artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::{apply_clearing, ActivationRow};
use crate::bm::{build_area_problem, solve, BmProblem, BmResult};
use crate::bsp::formulate_bsp_orders;
use crate::clearing::{clear, ClearingResult};
use crate::error::{Error, Result};
use crate::model::{AltKind, MarketConfig, MarketKind, OrderBook, Scenario};
use crate::scalar::Scalar;
use crate::tso::{compute_needs, formulate_tso_orders, select_frbm_pool, BalancingNeeds, FrbmAlternative, MfrrAlternative};

pub const ORDERS_FILE: &str = "orders.json";
pub const CLEARING_FILE: &str = "clearing.json";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const BM_FILE: &str = "bm_result.json";
pub const BM_COSTS_FILE: &str = "bm_costs.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILED_FILE: &str = ".failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    BspOrders,
    TsoOrders,
    Clearing,
    Aggregation,
    BalancingMechanism,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::BspOrders => "bsp_orders",
            Stage::TsoOrders => "tso_orders",
            Stage::Clearing => "clearing",
            Stage::Aggregation => "aggregation",
            Stage::BalancingMechanism => "balancing_mechanism",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub stages: Vec<Stage>,
    pub market_kind: MarketKind,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl PipelineSpec {
    /// Checks stage order and dependencies.
    pub fn new(stages: Vec<Stage>, market_kind: MarketKind, seed: u64, output_dir: PathBuf) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Config("pipeline has no stages".into()));
        }
        if stages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "stages must follow bsp_orders < tso_orders < clearing < aggregation < balancing_mechanism, got {:?}",
                stages.iter().map(|s| s.name()).collect::<Vec<_>>()
            )));
        }
        let has = |s: Stage| stages.contains(&s);
        if has(Stage::Aggregation) && !has(Stage::Clearing) {
            return Err(Error::Config("aggregation requires clearing".into()));
        }
        if has(Stage::Clearing) && !has(Stage::BspOrders) && !has(Stage::TsoOrders) {
            return Err(Error::Config("clearing requires an order stage".into()));
        }
        if market_kind == MarketKind::Bm && stages.iter().any(|&s| s != Stage::BalancingMechanism) {
            return Err(Error::Config("market stages need an RR or mFRR session".into()));
        }
        Ok(PipelineSpec {
            stages,
            market_kind,
            seed,
            output_dir,
        })
    }

    /// Named presets: `markets`, `bm` and `markets+bm`.
    pub fn preset(name: &str, market_kind: MarketKind, seed: u64, output_dir: PathBuf) -> Result<Self> {
        let markets = vec![Stage::BspOrders, Stage::TsoOrders, Stage::Clearing, Stage::Aggregation];
        let stages = match name {
            "markets" => markets,
            "bm" => vec![Stage::BalancingMechanism],
            "markets+bm" => {
                let mut s = markets;
                s.push(Stage::BalancingMechanism);
                s
            }
            other => return Err(Error::Config(format!("unknown pipeline {other}"))),
        };
        Self::new(stages, market_kind, seed, output_dir)
    }

    fn has(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }
}

/// Seed of a named random stream derived from the run seed.
pub fn substream(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    u64::from_le_bytes(b)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct OrdersArtifact<S> {
    pub market: MarketConfig,
    pub needs: Vec<BalancingNeeds<S>>,
    pub book: OrderBook<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClearingArtifact<S> {
    pub result: ClearingResult<S>,
    pub activations: Vec<ActivationRow<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BmArea<S> {
    pub control_area: String,
    pub problem: BmProblem<S>,
    pub result: BmResult<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHash {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stages: Vec<Stage>,
    pub market_kind: MarketKind,
    pub seed: u64,
    /// Hash of the scenario document and pipeline settings.
    pub config_hash: String,
    pub artifacts: Vec<ArtifactHash>,
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome<S> {
    pub manifest: Manifest,
    pub book: Option<OrderBook<S>>,
    pub clearing: Option<ClearingResult<S>>,
    pub snapshot: Option<Scenario<S>>,
    pub bm: Vec<BmArea<S>>,
}

struct Writer {
    dir: PathBuf,
    written: Vec<ArtifactHash>,
}

impl Writer {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.written.push(ArtifactHash {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

fn stage_err(stage: Stage, e: Error) -> Error {
    match e {
        Error::Stage { .. } => e,
        e => Error::Stage {
            stage: stage.name().to_string(),
            message: e.to_string(),
        },
    }
}

/// Runs a validated scenario through the pipeline and writes its artifacts.
///
/// On a stage failure the artifacts written so far are kept next to a
/// `.failed` marker naming the stage.
pub fn run<S: Scalar>(spec: &PipelineSpec, sc: &Scenario<S>) -> Result<RunOutcome<S>> {
    let violations = sc.violations();
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    fs::create_dir_all(&spec.output_dir)?;
    let failed = spec.output_dir.join(FAILED_FILE);
    if failed.exists() {
        fs::remove_file(&failed)?;
    }
    let mut w = Writer {
        dir: spec.output_dir.clone(),
        written: Vec::new(),
    };
    let mut out = RunOutcome {
        manifest: manifest(spec, sc, Vec::new())?,
        book: None,
        clearing: None,
        snapshot: None,
        bm: Vec::new(),
    };
    match run_stages(spec, sc, &mut w, &mut out) {
        Ok(()) => {
            out.manifest = manifest(spec, sc, w.written)?;
            let mut s = serde_json::to_string_pretty(&out.manifest)?;
            s.push('\n');
            fs::write(spec.output_dir.join(MANIFEST_FILE), s)?;
            Ok(out)
        }
        Err(e) => {
            fs::write(&failed, format!("{e}\n"))?;
            Err(e)
        }
    }
}

fn manifest<S: Scalar>(spec: &PipelineSpec, sc: &Scenario<S>, artifacts: Vec<ArtifactHash>) -> Result<Manifest> {
    let doc = serde_json::json!({
        "scenario": sc,
        "stages": spec.stages,
        "market_kind": spec.market_kind,
        "seed": spec.seed,
    });
    Ok(Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        stages: spec.stages.clone(),
        market_kind: spec.market_kind,
        seed: spec.seed,
        config_hash: sha256_hex(serde_json::to_string(&doc)?.as_bytes()),
        artifacts,
    })
}

fn run_stages<S: Scalar>(spec: &PipelineSpec, sc: &Scenario<S>, w: &mut Writer, out: &mut RunOutcome<S>) -> Result<()> {
    let market = sc.config.market(spec.market_kind);
    let mut current = sc.clone();
    if spec.has(Stage::BspOrders) || spec.has(Stage::TsoOrders) {
        let grid = market.grid().map_err(|e| stage_err(Stage::BspOrders, e))?;
        let mut book = if spec.has(Stage::BspOrders) {
            formulate_bsp_orders(sc, &market).map_err(|e| stage_err(Stage::BspOrders, e))?
        } else {
            OrderBook::default()
        };
        let mut needs = Vec::new();
        if spec.has(Stage::TsoOrders) {
            let mut cas: Vec<_> = sc.control_areas.iter().collect();
            cas.sort_by(|a, b| a.id.cmp(&b.id));
            let mut tso = Vec::new();
            for ca in cas {
                let n = compute_needs(sc, ca, &grid, &book);
                let p = &ca.tso_params;
                let cap = sc.global_params.price_cap;
                let orders = match p.alt {
                    AltKind::Mfrr => {
                        let mut alt = MfrrAlternative {
                            horizon: *sc.horizon(),
                            day_ahead: ca.day_ahead_price.clone(),
                            table: p.ratio_table.clone(),
                            dt: market.dt_minutes,
                        };
                        formulate_tso_orders(ca, &n, &market, sc.horizon(), cap, &mut alt)
                    }
                    AltKind::Frbm => {
                        let seed = substream(spec.seed, &format!("tso/frbm/{}", ca.id));
                        let pool = select_frbm_pool(sc, ca, &market, p.rho_frbm, seed);
                        let mut alt = FrbmAlternative::new(pool, *sc.horizon(), sc.global_params.clone(), market);
                        formulate_tso_orders(ca, &n, &market, sc.horizon(), cap, &mut alt)
                    }
                }
                .map_err(|e| stage_err(Stage::TsoOrders, e))?;
                tso.extend(orders);
                needs.push(n);
            }
            book.orders.extend(tso);
        }
        w.json(
            ORDERS_FILE,
            &OrdersArtifact {
                market,
                needs,
                book: book.clone(),
            },
        )?;
        out.book = Some(book);
    }
    if spec.has(Stage::Clearing) {
        let book = out.book.as_ref().expect("order stage ran");
        let result = clear(book).map_err(|e| stage_err(Stage::Clearing, e))?;
        let mut activations = Vec::new();
        if spec.has(Stage::Aggregation) {
            let (next, _delta, rows) =
                apply_clearing(sc, book, &result, &market).map_err(|e| stage_err(Stage::Aggregation, e))?;
            activations = rows;
            current = next;
        }
        w.json(
            CLEARING_FILE,
            &ClearingArtifact {
                result: result.clone(),
                activations,
            },
        )?;
        if spec.has(Stage::Aggregation) {
            w.json(SNAPSHOT_FILE, &current)?;
            out.snapshot = Some(current.clone());
        }
        out.clearing = Some(result);
    }
    if spec.has(Stage::BalancingMechanism) {
        let frame = current.config.bm.ok_or_else(|| Error::Stage {
            stage: Stage::BalancingMechanism.name().into(),
            message: "scenario has no balancing mechanism frame".into(),
        })?;
        let frame = frame.market();
        let mut cas: Vec<_> = current.control_areas.iter().collect();
        cas.sort_by(|a, b| a.id.cmp(&b.id));
        let mut areas = Vec::new();
        for ca in cas {
            let problem = build_area_problem(&current, ca, &frame).map_err(|e| stage_err(Stage::BalancingMechanism, e))?;
            let result = solve(&problem).map_err(|e| stage_err(Stage::BalancingMechanism, e))?;
            areas.push(BmArea {
                control_area: ca.id.clone(),
                problem,
                result,
            });
        }
        w.json(BM_FILE, &areas)?;
        w.write(BM_COSTS_FILE, &bm_costs_csv(&areas)?)?;
        out.bm = areas;
    }
    Ok(())
}

fn bm_costs_csv<S: Scalar>(areas: &[BmArea<S>]) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["control_area", "t", "bn", "activated", "e_voll", "e_spill", "total_cost"])
        .map_err(csv_err)?;
    for a in areas {
        let r = &a.result;
        for (k, t) in r.times.iter().enumerate() {
            let act = r.p_act.iter().map(|u| u[k]).fold(S::zero(), |x, y| x + y);
            wr.write_record([
                a.control_area.clone(),
                t.to_string(),
                a.problem.bn[k].to_string(),
                act.to_string(),
                r.e_voll[k].to_string(),
                r.e_spill[k].to_string(),
                r.total_cost[k].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    wr.into_inner().map_err(|e| Error::Config(e.to_string()))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Reads a JSON artifact from a run directory, `None` when absent.
pub fn read_artifact<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Option<T>> {
    let p = dir.join(name);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
}
