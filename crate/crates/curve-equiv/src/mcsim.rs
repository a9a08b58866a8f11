//! Monte Carlo harness for the operating characteristics of the
//! equivalence tests: simulated Type I error rates and power over a
//! catalogue of preset scenarios, plus arbitrary user-defined scenarios.
//!
//! Replication is deterministic and scheduling-independent: replicate `i`
//! of scenario `id` draws from the stream `(master_seed, hash(id), i)`,
//! with group-1 responses before group-2 responses, and bootstrap streams
//! derived below the replicate stream. Re-running with the same seed gives
//! bit-identical results for any worker count.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constrain::DistanceKind;
use crate::data::simulate_sample;
use crate::error::{Error, Result};
use crate::fitting::fit_pair;
use crate::metrics::{
    dist_l2sq_curves, dist_sup_curves, QuadratureRule, DEFAULT_SUP_GRID, DEFAULT_SUP_TOL,
};
use crate::models::builtin_registry;
use crate::stream::{derive_seed, derive_stream, hash_id};
use crate::testing::{
    bootstrap_quantile, bootstrap_run, test_band_iu, test_l2_asymptotic, test_sup_asymptotic,
    Method,
};

/// One simulation scenario: the data-generating truth plus the tests to
/// apply to every replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Unique scenario id; hashed into every replicate stream.
    pub id: String,
    /// Builtin model id for group 1 (e.g. `"emax"`).
    pub model1: String,
    /// Builtin model id for group 2.
    pub model2: String,
    /// True parameters generating group 1.
    pub beta1: Vec<f64>,
    /// True parameters generating group 2.
    pub beta2: Vec<f64>,
    /// Common dose levels for both groups.
    pub doses: Vec<f64>,
    /// Group-1 size, spread as evenly as possible over the doses.
    pub n1: usize,
    /// Group-2 size.
    pub n2: usize,
    /// Group-1 error variance.
    pub sigma1_sq: f64,
    /// Group-2 error variance.
    pub sigma2_sq: f64,
    /// Covariate interval the curves are compared on.
    pub region: (f64, f64),
    /// Distance the threshold `eps` refers to.
    pub distance: DistanceKind,
    /// Equivalence threshold.
    pub eps: f64,
    /// Significance levels evaluated per replicate (shared draws).
    pub alphas: Vec<f64>,
    /// Tests applied to every replicate.
    pub methods: Vec<Method>,
    /// Number of simulation replicates.
    pub nsim: u32,
    /// Bootstrap replications per replicate (ignored by non-bootstrap
    /// methods).
    #[serde(rename = "B")]
    pub b: u32,
    /// Master seed; fixes every draw of the whole scenario.
    pub master_seed: u64,
    /// Scenario shift parameter, carried through to the results table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Rejection rate of one (method, level) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRate {
    pub method: Method,
    pub alpha: f64,
    /// Fraction of successful replicates that rejected.
    pub rate: f64,
    /// Binomial standard error `sqrt(rate (1 - rate) / n_used)`.
    pub se: f64,
    /// Replicates that produced a decision.
    pub n_used: u32,
    /// Replicates where this method failed (fit or bootstrap error).
    pub failures: u32,
}

/// Aggregated outcome of `run_scenario`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioResult {
    /// The configuration that produced this result.
    pub config: ScenarioConfig,
    /// True squared-L² distance of the generating curves.
    pub true_d2: f64,
    /// True maximal deviation of the generating curves.
    pub true_dsup: f64,
    /// One cell per (method, alpha) pair, methods outer.
    pub cells: Vec<CellRate>,
    /// Wall-clock seconds spent simulating.
    pub elapsed_secs: f64,
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.methods.is_empty() {
            return Err(Error::Invalid(
                "scenario needs at least one alpha and one method".into(),
            ));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a < 0.5) {
                return Err(Error::Invalid(format!(
                    "alpha must lie in (0, 0.5), got {a}"
                )));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Invalid(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.nsim == 0 {
            return Err(Error::Invalid("nsim must be >= 1".into()));
        }
        for &m in &self.methods {
            if m.distance() != self.distance {
                return Err(Error::Invalid(format!(
                    "method {} does not test the configured distance",
                    m.cli_name()
                )));
            }
        }
        let needs_boot = self
            .methods
            .iter()
            .any(|m| matches!(m, Method::BootL2 | Method::BootSup));
        if needs_boot && self.b == 0 {
            return Err(Error::Invalid("bootstrap methods need B >= 1".into()));
        }
        Ok(())
    }
}

fn allocate(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || n < k {
        return Err(Error::Invalid(format!(
            "cannot allocate {n} observations over {k} dose levels"
        )));
    }
    let base = n / k;
    let rem = n % k;
    Ok((0..k).map(|i| base + usize::from(i < rem)).collect())
}

/// True distances of a scenario's generating curves, without simulating.
pub fn true_distances(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    let reg = builtin_registry();
    let spec1 = reg.lookup(&cfg.model1)?.clone();
    let spec2 = reg.lookup(&cfg.model2)?.clone();
    spec1.eval(cfg.region.0, &cfg.beta1)?;
    spec2.eval(cfg.region.0, &cfg.beta2)?;
    let quad = QuadratureRule::default_on(cfg.region)?;
    let d2 = dist_l2sq_curves(&spec1, &cfg.beta1, &spec2, &cfg.beta2, &quad);
    let dsup = dist_sup_curves(
        &spec1,
        &cfg.beta1,
        &spec2,
        &cfg.beta2,
        cfg.region,
        DEFAULT_SUP_GRID,
        DEFAULT_SUP_TOL,
    )
    .value;
    Ok((d2, dsup))
}

/// Simulates every replicate of `cfg` and aggregates rejection rates.
///
/// All methods of a scenario share the same simulated data per replicate
/// (matched seeds), and all levels share the same bootstrap distribution,
/// so cross-method and cross-level comparisons are paired.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let reg = builtin_registry();
    let spec1 = reg.lookup(&cfg.model1)?.clone();
    let spec2 = reg.lookup(&cfg.model2)?.clone();
    spec1.eval(cfg.region.0, &cfg.beta1)?;
    spec2.eval(cfg.region.0, &cfg.beta2)?;
    let counts1 = allocate(cfg.n1, cfg.doses.len())?;
    let counts2 = allocate(cfg.n2, cfg.doses.len())?;
    let (true_d2, true_dsup) = true_distances(cfg)?;
    let quad = QuadratureRule::default_on(cfg.region)?;
    let sid = hash_id(&cfg.id);
    let n_cells = cfg.methods.len() * cfg.alphas.len();

    let start = Instant::now();
    let per_rep: Vec<Vec<Option<bool>>> = (0..cfg.nsim)
        .into_par_iter()
        .map(|rep| {
            let mut cells: Vec<Option<bool>> = vec![None; n_cells];
            let mut rng = derive_stream(cfg.master_seed, &[sid, u64::from(rep)]);
            let s1 = simulate_sample(
                &spec1,
                &cfg.beta1,
                &cfg.doses,
                &counts1,
                cfg.sigma1_sq,
                cfg.region,
                &mut rng,
            );
            let s2 = simulate_sample(
                &spec2,
                &cfg.beta2,
                &cfg.doses,
                &counts2,
                cfg.sigma2_sq,
                cfg.region,
                &mut rng,
            );
            let (s1, s2) = match (s1, s2) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return cells,
            };
            let boot_seed = derive_seed(cfg.master_seed, &[sid, u64::from(rep)]);
            let pf = fit_pair(&spec1, &spec2, &s1, &s2).ok();
            // one bootstrap distribution per distance, shared by all levels
            let mut boot_l2 = None;
            let mut boot_sup = None;
            for (mi, &m) in cfg.methods.iter().enumerate() {
                for (ai, &alpha) in cfg.alphas.iter().enumerate() {
                    let idx = mi * cfg.alphas.len() + ai;
                    cells[idx] = match m {
                        Method::L2Asymptotic => pf
                            .as_ref()
                            .and_then(|pf| test_l2_asymptotic(pf, cfg.eps, alpha, &quad).ok())
                            .map(|o| o.reject),
                        Method::SupAsymptotic => pf
                            .as_ref()
                            .and_then(|pf| test_sup_asymptotic(pf, cfg.eps, alpha).ok())
                            .map(|o| o.reject),
                        Method::BandIu => pf
                            .as_ref()
                            .and_then(|pf| test_band_iu(pf, cfg.eps, alpha).ok())
                            .map(|o| o.reject),
                        Method::BootL2 | Method::BootSup => {
                            let cache = if m == Method::BootL2 {
                                &mut boot_l2
                            } else {
                                &mut boot_sup
                            };
                            if cache.is_none() {
                                *cache = Some(
                                    bootstrap_run(
                                        &spec1,
                                        &spec2,
                                        &s1,
                                        &s2,
                                        cfg.eps,
                                        cfg.b,
                                        m.distance(),
                                        boot_seed,
                                    )
                                    .ok(),
                                );
                            }
                            cache.as_ref().unwrap().as_ref().and_then(|run| {
                                bootstrap_quantile(&run.sorted, alpha)
                                    .ok()
                                    .map(|q| run.d_hat < q)
                            })
                        }
                    };
                }
            }
            cells
        })
        .collect();
    let elapsed_secs = start.elapsed().as_secs_f64();

    let mut cells = Vec::with_capacity(n_cells);
    for (mi, &m) in cfg.methods.iter().enumerate() {
        for (ai, &alpha) in cfg.alphas.iter().enumerate() {
            let idx = mi * cfg.alphas.len() + ai;
            let mut n_used = 0u32;
            let mut rejects = 0u32;
            for rep in &per_rep {
                match rep[idx] {
                    Some(r) => {
                        n_used += 1;
                        rejects += u32::from(r);
                    }
                    None => {}
                }
            }
            let failures = cfg.nsim - n_used;
            let rate = if n_used > 0 {
                f64::from(rejects) / f64::from(n_used)
            } else {
                f64::NAN
            };
            let se = if n_used > 0 {
                (rate * (1.0 - rate) / f64::from(n_used)).sqrt()
            } else {
                f64::NAN
            };
            cells.push(CellRate {
                method: m,
                alpha,
                rate,
                se,
                n_used,
                failures,
            });
        }
    }
    Ok(ScenarioResult {
        config: cfg.clone(),
        true_d2,
        true_dsup,
        cells,
        elapsed_secs,
    })
}

// ---------------------------------------------------------------------------
// Preset catalogue
// ---------------------------------------------------------------------------

/// Default simulation replicates of the preset catalogue.
pub const PRESET_NSIM: u32 = 1000;
/// Default bootstrap replications of the preset catalogue.
pub const PRESET_B: u32 = 300;

const PRESET_DOSES: [f64; 5] = [0.0, 1.0, 2.0, 3.0, 4.0];
const PRESET_REGION: (f64, f64) = (0.0, 4.0);
const N_PAIRS: [(usize, usize); 4] = [(10, 10), (10, 20), (20, 20), (50, 50)];
const SIGMA_PAIRS: [(f64, f64); 3] = [(0.25, 0.25), (0.5, 0.5), (0.25, 0.5)];
const ALPHAS: [f64; 2] = [0.05, 0.1];

/// The three model pairs of the preset catalogue, indexed by shift `delta`.
#[derive(Debug, Clone, Copy)]
enum PresetPair {
    /// Two EMAX curves shifted by `delta`; the difference is constant, so
    /// its extremal set is the whole dose range.
    ShiftedEmax,
    /// EMAX vs. exponential with a unique extremal point.
    EmaxExponential,
    /// Two EMAX curves whose absolute difference peaks at both endpoints.
    TwoEmax,
}

impl PresetPair {
    fn models(self) -> (&'static str, &'static str) {
        match self {
            PresetPair::ShiftedEmax | PresetPair::TwoEmax => ("emax", "emax"),
            PresetPair::EmaxExponential => ("emax", "exponential"),
        }
    }

    fn betas(self, delta: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            PresetPair::ShiftedEmax => (vec![delta, 5.0, 1.0], vec![0.0, 5.0, 1.0]),
            PresetPair::EmaxExponential => (vec![1.0, 2.0, 1.0], vec![delta, 2.2, 8.0]),
            PresetPair::TwoEmax => (vec![delta, 6.0, 2.0], vec![0.0, 5.0, 1.0]),
        }
    }
}

struct TableDef {
    table: usize,
    pair: PresetPair,
    methods: &'static [Method],
    distance: DistanceKind,
    eps: f64,
    deltas: &'static [f64],
}

fn table_defs() -> Vec<TableDef> {
    use Method::*;
    vec![
        // squared-L² tests, threshold 1: level (d2 >= 1) then power
        TableDef { table: 1, pair: PresetPair::ShiftedEmax, methods: &[BootL2], distance: DistanceKind::L2sq, eps: 1.0, deltas: &[1.0, 0.75, 0.5] },
        TableDef { table: 2, pair: PresetPair::ShiftedEmax, methods: &[L2Asymptotic], distance: DistanceKind::L2sq, eps: 1.0, deltas: &[1.0, 0.75, 0.5] },
        TableDef { table: 3, pair: PresetPair::ShiftedEmax, methods: &[BootL2], distance: DistanceKind::L2sq, eps: 1.0, deltas: &[0.25, 0.1, 0.0] },
        TableDef { table: 4, pair: PresetPair::ShiftedEmax, methods: &[L2Asymptotic], distance: DistanceKind::L2sq, eps: 1.0, deltas: &[0.25, 0.1, 0.0] },
        // maximal deviation, unique extremal point, threshold 1
        TableDef { table: 5, pair: PresetPair::EmaxExponential, methods: &[BootSup, BandIu], distance: DistanceKind::Sup, eps: 1.0, deltas: &[0.25, 0.5, 0.75] },
        TableDef { table: 6, pair: PresetPair::EmaxExponential, methods: &[SupAsymptotic], distance: DistanceKind::Sup, eps: 1.0, deltas: &[0.25, 0.5, 0.75, 1.0, 1.5] },
        // maximal deviation attained at both endpoints, threshold 1
        TableDef { table: 7, pair: PresetPair::TwoEmax, methods: &[BootSup, BandIu], distance: DistanceKind::Sup, eps: 1.0, deltas: &[2.0, 1.5, 1.0] },
        TableDef { table: 8, pair: PresetPair::TwoEmax, methods: &[BootSup, BandIu], distance: DistanceKind::Sup, eps: 1.0, deltas: &[0.75, 0.5, 0.0] },
        // constant difference (extremal set = whole range), threshold 0.5
        TableDef { table: 9, pair: PresetPair::ShiftedEmax, methods: &[BootSup, BandIu], distance: DistanceKind::Sup, eps: 0.5, deltas: &[1.0, 0.75, 0.5] },
        TableDef { table: 10, pair: PresetPair::ShiftedEmax, methods: &[BootSup, BandIu], distance: DistanceKind::Sup, eps: 0.5, deltas: &[0.25, 0.1, 0.0] },
    ]
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn row_id(table: usize, n1: usize, n2: usize, delta: f64, s1: f64, s2: f64) -> String {
    format!(
        "table{table}_n{n1}_{n2}_d{}_s{}_{}",
        fmt_num(delta),
        fmt_num(s1),
        fmt_num(s2)
    )
}

fn make_config(def: &TableDef, n: (usize, usize), delta: f64, sigma: (f64, f64)) -> ScenarioConfig {
    let id = row_id(def.table, n.0, n.1, delta, sigma.0, sigma.1);
    let (m1, m2) = def.pair.models();
    let (b1, b2) = def.pair.betas(delta);
    let master_seed = hash_id(&id);
    ScenarioConfig {
        id,
        model1: m1.to_string(),
        model2: m2.to_string(),
        beta1: b1,
        beta2: b2,
        doses: PRESET_DOSES.to_vec(),
        n1: n.0,
        n2: n.1,
        sigma1_sq: sigma.0,
        sigma2_sq: sigma.1,
        region: PRESET_REGION,
        distance: def.distance,
        eps: def.eps,
        alphas: ALPHAS.to_vec(),
        methods: def.methods.to_vec(),
        nsim: PRESET_NSIM,
        b: PRESET_B,
        master_seed,
        delta: Some(delta),
    }
}

/// Every preset scenario of the operating-characteristic catalogue, keyed
/// by canonical id `table{T}_n{n1}_{n2}_d{delta}_s{s1}_{s2}`.
pub fn preset_scenarios() -> BTreeMap<String, ScenarioConfig> {
    let mut map = BTreeMap::new();
    for def in table_defs() {
        for cfg in table_rows(&def) {
            map.insert(cfg.id.clone(), cfg);
        }
    }
    map
}

fn table_rows(def: &TableDef) -> Vec<ScenarioConfig> {
    let mut rows = Vec::new();
    for &n in &N_PAIRS {
        for &delta in def.deltas {
            for &sigma in &SIGMA_PAIRS {
                rows.push(make_config(def, n, delta, sigma));
            }
        }
    }
    rows
}

/// Resolves a preset id to its scenario configs.
///
/// Accepted spellings: the canonical `table{T}_n{n1}_{n2}_d{delta}_s{s1}_{s2}`
/// plus aliases — an optional `_row` infix, `delta` for `d`, a single group
/// size for equal groups, and omitted `_s{s1}_{s2}` defaulting to
/// `(0.25, 0.25)`. A bare `table{T}` expands to every row of that table.
pub fn preset(id: &str) -> Result<Vec<ScenarioConfig>> {
    let not_found = || Error::NotFound(id.to_string());
    let tokens: Vec<&str> = id.split('_').filter(|t| *t != "row").collect();
    if tokens.is_empty() {
        return Err(not_found());
    }
    let table: usize = tokens[0]
        .strip_prefix("table")
        .and_then(|t| t.parse().ok())
        .ok_or_else(not_found)?;
    let def = table_defs()
        .into_iter()
        .find(|d| d.table == table)
        .ok_or_else(not_found)?;
    if tokens.len() == 1 {
        return Ok(table_rows(&def));
    }

    let mut n1: Option<usize> = None;
    let mut n2: Option<usize> = None;
    let mut delta: Option<f64> = None;
    let mut s1: Option<f64> = None;
    let mut s2: Option<f64> = None;
    let mut i = 1;
    while i < tokens.len() {
        let t = tokens[i];
        if let Some(rest) = t.strip_prefix('n') {
            n1 = Some(rest.parse().map_err(|_| not_found())?);
            if i + 1 < tokens.len() {
                if let Ok(v) = tokens[i + 1].parse::<usize>() {
                    n2 = Some(v);
                    i += 1;
                }
            }
        } else if let Some(rest) = t.strip_prefix("delta").or_else(|| t.strip_prefix('d')) {
            delta = Some(rest.parse().map_err(|_| not_found())?);
        } else if let Some(rest) = t.strip_prefix('s') {
            s1 = Some(rest.parse().map_err(|_| not_found())?);
            let next = tokens.get(i + 1).ok_or_else(not_found)?;
            s2 = Some(next.parse().map_err(|_| not_found())?);
            i += 1;
        } else {
            return Err(not_found());
        }
        i += 1;
    }
    let n1 = n1.ok_or_else(not_found)?;
    let n2 = n2.unwrap_or(n1);
    let delta = delta.ok_or_else(not_found)?;
    let sigma = (s1.unwrap_or(0.25), s2.unwrap_or(0.25));
    let canonical = row_id(table, n1, n2, delta, sigma.0, sigma.1);
    preset_scenarios()
        .remove(&canonical)
        .map(|cfg| vec![cfg])
        .ok_or_else(|| Error::NotFound(format!("{id} (canonical: {canonical})")))
}

// ---------------------------------------------------------------------------
// Results table
// ---------------------------------------------------------------------------

/// Method tag as written in the results table (the JSON spelling).
fn method_tag(m: Method) -> &'static str {
    match m {
        Method::L2Asymptotic => "L2_ASYMPTOTIC",
        Method::BootL2 => "BOOT_L2",
        Method::BootSup => "BOOT_SUP",
        Method::SupAsymptotic => "SUP_ASYMPTOTIC",
        Method::BandIu => "BAND_IU",
    }
}

/// Renders results as CSV, one row per (scenario, method, alpha) cell.
pub fn render_table(results: &[ScenarioResult]) -> String {
    let mut out = String::from(
        "scenario_id,method,alpha,n1,n2,sigma1_sq,sigma2_sq,delta,true_d2,true_dsup,rate,se,nsim,B,seed\n",
    );
    for r in results {
        let c = &r.config;
        let delta = c.delta.map(fmt_num).unwrap_or_default();
        for cell in &r.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                c.id,
                method_tag(cell.method),
                cell.alpha,
                c.n1,
                c.n2,
                c.sigma1_sq,
                c.sigma2_sq,
                delta,
                r.true_d2,
                r.true_dsup,
                cell.rate,
                cell.se,
                c.nsim,
                c.b,
                c.master_seed,
            ));
        }
    }
    out
}

/// Writes `render_table` output to `path`.
pub fn emit_table(results: &[ScenarioResult], path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(render_table(results).as_bytes())?;
    Ok(())
}
