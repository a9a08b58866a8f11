//! The decision procedures: asymptotic squared-L² test, constrained
//! parametric bootstrap (both distances), unique-extremum asymptotic sup
//! test, and the confidence-band intersection-union comparator.
//!
//! All procedures test the precise hypotheses `H0: d >= eps` against
//! `H1: d < eps` — rejection positively demonstrates equivalence of the two
//! curves. The bootstrap follows the constrained-resampling algorithm:
//! unconstrained fits with divisor-`n` variance estimates, null parameters
//! on the manifold `d = eps` when the observed distance falls below `eps`,
//! then `B` refits of normal-error resamples on the original designs.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::constrain::{fit_constrained_warm, DistanceKind};
use crate::data::GroupSample;
use crate::error::{Error, Result};
use crate::fitting::{fit_pair, solve_ls, PairedFit};
use crate::metrics::{
    self, band_halfwidth, dist_l2sq_curves, dist_sup_curves, var_l2, var_sup_unique,
    QuadratureRule, DEFAULT_SUP_GRID, DEFAULT_SUP_TOL,
};
use crate::models::ModelSpec;
use crate::stats::{normal_cdf, normal_quantile};
use crate::stream::derive_stream;

/// Tag mixed into bootstrap replicate streams.
const BOOT_TAG: u64 = 0xB007;

/// Scan grid for sup distances inside bootstrap refits. Coarser than the
/// observed-statistic grid: the golden-section refinement of each grid-local
/// maximum recovers the value to far below the bootstrap resolution.
const BOOT_SUP_GRID: usize = 401;

/// The implemented decision procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Asymptotic squared-L² test.
    #[serde(rename = "L2_ASYMPTOTIC")]
    L2Asymptotic,
    /// Constrained parametric bootstrap for the squared-L² distance.
    #[serde(rename = "BOOT_L2")]
    BootL2,
    /// Constrained parametric bootstrap for the maximal deviation.
    #[serde(rename = "BOOT_SUP")]
    BootSup,
    /// Asymptotic maximal-deviation test (unique extremal point only).
    #[serde(rename = "SUP_ASYMPTOTIC")]
    SupAsymptotic,
    /// Intersection-union test on the pointwise confidence band.
    #[serde(rename = "BAND_IU")]
    BandIu,
}

impl Method {
    /// CLI spelling, e.g. `boot-sup`.
    pub fn cli_name(self) -> &'static str {
        match self {
            Method::L2Asymptotic => "l2-asymptotic",
            Method::BootL2 => "boot-l2",
            Method::BootSup => "boot-sup",
            Method::SupAsymptotic => "sup-asymptotic",
            Method::BandIu => "band-iu",
        }
    }

    /// Parses the CLI spelling.
    pub fn from_cli_name(s: &str) -> Result<Self> {
        Ok(match s {
            "l2-asymptotic" => Method::L2Asymptotic,
            "boot-l2" => Method::BootL2,
            "boot-sup" => Method::BootSup,
            "sup-asymptotic" => Method::SupAsymptotic,
            "band-iu" => Method::BandIu,
            _ => return Err(Error::NotFound(s.to_string())),
        })
    }

    /// The distance each method decides about.
    pub fn distance(self) -> DistanceKind {
        match self {
            Method::L2Asymptotic | Method::BootL2 => DistanceKind::L2sq,
            _ => DistanceKind::Sup,
        }
    }
}

/// Outcome of one test invocation.
///
/// Serializes to a JSON object with exactly these field names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    /// Which procedure produced this outcome.
    pub method: Method,
    /// Observed distance statistic.
    pub statistic: f64,
    /// Equivalence threshold tested against.
    pub eps: f64,
    /// Significance level.
    pub alpha: f64,
    /// Rejection boundary on the statistic scale (`None` where the method
    /// has no scalar critical value, e.g. the band test or a degenerate
    /// variance).
    pub critical_value: Option<f64>,
    /// P-value in `[0, 1]`; `None` for the band test, which reports an
    /// equivalence margin in `diagnostics` instead.
    pub p_value: Option<f64>,
    /// True when the null "distance >= eps" is rejected, i.e. equivalence
    /// is demonstrated.
    pub reject: bool,
    /// Bootstrap replications (0 for non-bootstrap methods).
    #[serde(rename = "B")]
    pub b: u32,
    /// Master RNG seed (0 for deterministic methods).
    pub seed: u64,
    /// Method-specific extras: extremal points, band extrema, variance
    /// estimates, dropped-replication counts, ...
    pub diagnostics: BTreeMap<String, Value>,
}

fn validate_level(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Invalid(format!(
            "alpha must lie in (0, 0.5), got {alpha}"
        )));
    }
    Ok(())
}

fn validate_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be > 0, got {eps}")));
    }
    Ok(())
}

/// Asymptotic squared-L² test: reject when
/// `d2_hat < eps2 + (sigma_hat/sqrt(n)) * u_alpha`.
pub fn test_l2_asymptotic(
    pf: &PairedFit,
    eps2: f64,
    alpha: f64,
    quad: &QuadratureRule,
) -> Result<TestOutcome> {
    validate_level(alpha)?;
    validate_eps(eps2)?;
    let d2 = metrics::dist_l2sq(pf, quad);
    let var = var_l2(pf, quad);
    let sd = (var / pf.n as f64).max(0.0).sqrt();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("sigma2_d2".into(), json!(var));
    diagnostics.insert("sigma2_d2_over_n".into(), json!(var / pf.n as f64));
    if sd == 0.0 {
        // no sampling variability to calibrate against: never reject
        diagnostics.insert("degenerate_variance".into(), json!(true));
        return Ok(TestOutcome {
            method: Method::L2Asymptotic,
            statistic: d2,
            eps: eps2,
            alpha,
            critical_value: None,
            p_value: Some(if d2 >= eps2 { 1.0 } else { 0.0 }),
            reject: false,
            b: 0,
            seed: 0,
            diagnostics,
        });
    }
    let crit = eps2 + sd * normal_quantile(alpha);
    let p = normal_cdf((d2 - eps2) / sd);
    Ok(TestOutcome {
        method: Method::L2Asymptotic,
        statistic: d2,
        eps: eps2,
        alpha,
        critical_value: Some(crit),
        p_value: Some(p),
        reject: d2 < crit,
        b: 0,
        seed: 0,
        diagnostics,
    })
}

/// The `floor(B*alpha)`-th order statistic (1-based) of ascending bootstrap
/// statistics, with the index clamped to 1 when `floor(B*alpha) = 0`.
pub fn bootstrap_quantile(sorted_stats: &[f64], alpha: f64) -> Result<f64> {
    validate_level(alpha)?;
    if sorted_stats.is_empty() {
        return Err(Error::EmptyStats);
    }
    let idx = ((sorted_stats.len() as f64 * alpha).floor() as usize).max(1);
    Ok(sorted_stats[idx - 1])
}

/// Raw material of one bootstrap test run: the observed statistic and the
/// ascending resampled statistics, so several levels and thresholds can be
/// evaluated on a single run.
#[derive(Debug, Clone)]
pub struct BootstrapRun {
    /// Observed distance.
    pub d_hat: f64,
    /// Ascending bootstrap distances (one per kept replication).
    pub sorted: Vec<f64>,
    /// Replications dropped after one retry.
    pub dropped: usize,
    /// Whether the null parameters came from the constrained fit.
    pub used_constrained: bool,
    /// Constraint residual of the constrained fit (0 when unused).
    pub constraint_residual: f64,
    /// Divisor-`n` residual standard deviations used for resampling.
    pub sigma_hat: (f64, f64),
}

impl BootstrapRun {
    /// P-value `#{d* <= d_hat} / B` (ties count toward rejection).
    pub fn p_value(&self) -> f64 {
        let cnt = self.sorted.iter().filter(|&&d| d <= self.d_hat).count();
        cnt as f64 / self.sorted.len() as f64
    }
}

/// Executes the constrained parametric bootstrap and returns its raw
/// statistics. `seed` fixes every random draw; the result is bit-identical
/// for any worker count.
pub fn bootstrap_run(
    spec1: &ModelSpec,
    spec2: &ModelSpec,
    s1: &GroupSample,
    s2: &GroupSample,
    eps: f64,
    b_reps: u32,
    distance: DistanceKind,
    seed: u64,
) -> Result<BootstrapRun> {
    validate_eps(eps)?;
    if b_reps < 1 {
        return Err(Error::Invalid("B must be >= 1".into()));
    }
    let pf = fit_pair(spec1, spec2, s1, s2)?;
    let region = pf.region;
    let quad = QuadratureRule::default_on(region)?;
    let d_hat = match distance {
        DistanceKind::L2sq => metrics::dist_l2sq(&pf, &quad),
        DistanceKind::Sup => metrics::dist_sup(&pf, DEFAULT_SUP_GRID, DEFAULT_SUP_TOL).value,
    };
    let sigma1 = pf.fit1.sigma2_hat.sqrt();
    let sigma2 = pf.fit2.sigma2_hat.sqrt();

    // null parameters: unconstrained when already at distance >= eps,
    // otherwise projected onto the manifold d = eps
    let (hh1, hh2, used_constrained, constraint_residual) = if d_hat >= eps {
        (pf.fit1.beta_hat.clone(), pf.fit2.beta_hat.clone(), false, 0.0)
    } else {
        let cf = fit_constrained_warm(
            spec1,
            spec2,
            s1,
            s2,
            eps,
            distance,
            &pf.fit1.beta_hat,
            &pf.fit2.beta_hat,
            None,
        )?;
        (
            cf.beta1_tilde.clone(),
            cf.beta2_tilde.clone(),
            true,
            cf.constraint_residual,
        )
    };

    // per-observation design and null means, in dose order
    let xs1: Vec<f64> = s1.observations().map(|(x, _)| x).collect();
    let xs2: Vec<f64> = s2.observations().map(|(x, _)| x).collect();
    let mu1: Vec<f64> = xs1.iter().map(|&x| spec1.eval_unchecked(x, &hh1)).collect();
    let mu2: Vec<f64> = xs2.iter().map(|&x| spec2.eval_unchecked(x, &hh2)).collect();
    let starts1 = [hh1.clone()];
    let starts2 = [hh2.clone()];

    let stats: Vec<Option<f64>> = (0..b_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = derive_stream(seed, &[BOOT_TAG, u64::from(rep)]);
            let ys1: Vec<f64> = mu1
                .iter()
                .map(|&m| m + sigma1 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let ys2: Vec<f64> = mu2
                .iter()
                .map(|&m| m + sigma2 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let refit = |extra: bool| -> Result<f64> {
                let more1;
                let more2;
                let (st1, st2): (&[Vec<f64>], &[Vec<f64>]) = if extra {
                    more1 = fresh_starts(spec1, &starts1);
                    more2 = fresh_starts(spec2, &starts2);
                    (&more1, &more2)
                } else {
                    (&starts1, &starts2)
                };
                let (b1, _, c1, _) = solve_ls(spec1, &xs1, &ys1, Some(st1))?;
                let (b2, _, c2, _) = solve_ls(spec2, &xs2, &ys2, Some(st2))?;
                if !(c1 && c2) {
                    return Err(Error::NonConvergence("bootstrap refit".into()));
                }
                Ok(match distance {
                    DistanceKind::L2sq => dist_l2sq_curves(spec1, &b1, spec2, &b2, &quad),
                    DistanceKind::Sup => {
                        dist_sup_curves(spec1, &b1, spec2, &b2, region, BOOT_SUP_GRID, DEFAULT_SUP_TOL)
                            .value
                    }
                })
            };
            refit(false).or_else(|_| refit(true)).ok()
        })
        .collect();

    let mut sorted: Vec<f64> = stats.iter().filter_map(|s| *s).collect();
    let dropped = b_reps as usize - sorted.len();
    if dropped * 20 > b_reps as usize {
        return Err(Error::DroppedReplicates {
            dropped,
            total: b_reps as usize,
        });
    }
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapRun {
        d_hat,
        sorted,
        dropped,
        used_constrained,
        constraint_residual,
        sigma_hat: (sigma1, sigma2),
    })
}

fn fresh_starts(spec: &ModelSpec, base: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut v = base.to_vec();
    v.extend(crate::fitting::quasi_random_points(&spec.bounds, 5, 31));
    v
}

/// Constrained parametric bootstrap test for either distance.
#[allow(clippy::too_many_arguments)]
pub fn test_bootstrap(
    spec1: &ModelSpec,
    spec2: &ModelSpec,
    s1: &GroupSample,
    s2: &GroupSample,
    eps: f64,
    alpha: f64,
    b_reps: u32,
    distance: DistanceKind,
    seed: u64,
) -> Result<TestOutcome> {
    validate_level(alpha)?;
    let run = bootstrap_run(spec1, spec2, s1, s2, eps, b_reps, distance, seed)?;
    let crit = bootstrap_quantile(&run.sorted, alpha)?;
    let p = run.p_value();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("dropped".into(), json!(run.dropped));
    diagnostics.insert("kept".into(), json!(run.sorted.len()));
    diagnostics.insert("used_constrained".into(), json!(run.used_constrained));
    diagnostics.insert(
        "constraint_residual".into(),
        json!(run.constraint_residual),
    );
    diagnostics.insert("sigma1_hat".into(), json!(run.sigma_hat.0));
    diagnostics.insert("sigma2_hat".into(), json!(run.sigma_hat.1));
    Ok(TestOutcome {
        method: match distance {
            DistanceKind::L2sq => Method::BootL2,
            DistanceKind::Sup => Method::BootSup,
        },
        statistic: run.d_hat,
        eps,
        alpha,
        critical_value: Some(crit),
        p_value: Some(p),
        reject: run.d_hat < crit,
        b: b_reps,
        seed,
        diagnostics,
    })
}

/// Asymptotic maximal-deviation test, valid only when the fitted difference
/// attains its maximum at a single point.
pub fn test_sup_asymptotic(pf: &PairedFit, eps_inf: f64, alpha: f64) -> Result<TestOutcome> {
    validate_level(alpha)?;
    validate_eps(eps_inf)?;
    let sup = metrics::dist_sup(pf, DEFAULT_SUP_GRID, DEFAULT_SUP_TOL);
    if sup.plateau || sup.extremal_points.len() != 1 {
        return Err(Error::NonUniqueExtremum {
            count: sup.extremal_points.len(),
            plateau: sup.plateau,
        });
    }
    let x0 = sup.extremal_points[0];
    let var = var_sup_unique(pf, x0);
    let sd = (var / pf.n as f64).max(0.0).sqrt();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("x0".into(), json!(x0));
    diagnostics.insert("sigma2_sup".into(), json!(var));
    // gradient-norm check at the extremum: both must be nonzero for the
    // limit variance to be positive
    let g1 = pf.fit1.spec.grad(x0, &pf.fit1.beta_hat)?;
    let g2 = pf.fit2.spec.grad(x0, &pf.fit2.beta_hat)?;
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>().sqrt();
    diagnostics.insert("grad_norm_1".into(), json!(norm(&g1)));
    diagnostics.insert("grad_norm_2".into(), json!(norm(&g2)));
    if sd == 0.0 {
        diagnostics.insert("degenerate_variance".into(), json!(true));
        return Ok(TestOutcome {
            method: Method::SupAsymptotic,
            statistic: sup.value,
            eps: eps_inf,
            alpha,
            critical_value: None,
            p_value: Some(if sup.value >= eps_inf { 1.0 } else { 0.0 }),
            reject: false,
            b: 0,
            seed: 0,
            diagnostics,
        });
    }
    let crit = eps_inf + sd * normal_quantile(alpha);
    let p = normal_cdf((sup.value - eps_inf) / sd);
    Ok(TestOutcome {
        method: Method::SupAsymptotic,
        statistic: sup.value,
        eps: eps_inf,
        alpha,
        critical_value: Some(crit),
        p_value: Some(p),
        reject: sup.value < crit,
        b: 0,
        seed: 0,
        diagnostics,
    })
}

/// Intersection-union band test: equivalence is declared when the whole
/// pointwise confidence band of the fitted difference lies inside
/// `(-eps_inf, eps_inf)`.
pub fn test_band_iu(pf: &PairedFit, eps_inf: f64, alpha: f64) -> Result<TestOutcome> {
    validate_level(alpha)?;
    validate_eps(eps_inf)?;
    let (lo, hi) = pf.region;
    let n = DEFAULT_SUP_GRID;
    let step = (hi - lo) / (n - 1) as f64;
    let mut upper_max = f64::NEG_INFINITY;
    let mut lower_min = f64::INFINITY;
    for i in 0..n {
        let x = lo + step * i as f64;
        let d = pf.delta(x);
        let hw = band_halfwidth(pf, x, alpha);
        upper_max = upper_max.max(d + hw);
        lower_min = lower_min.min(d - hw);
    }
    let reject = upper_max < eps_inf && lower_min > -eps_inf;
    let sup = metrics::dist_sup(pf, DEFAULT_SUP_GRID, DEFAULT_SUP_TOL);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("band_upper_max".into(), json!(upper_max));
    diagnostics.insert("band_lower_min".into(), json!(lower_min));
    // the smallest threshold at which this band would reject: an
    // equivalence margin rather than a p-value
    diagnostics.insert(
        "equivalence_margin".into(),
        json!(upper_max.max(-lower_min)),
    );
    Ok(TestOutcome {
        method: Method::BandIu,
        statistic: sup.value,
        eps: eps_inf,
        alpha,
        critical_value: None,
        p_value: None,
        reject,
        b: 0,
        seed: 0,
        diagnostics,
    })
}
