//! Grouped dose-response samples: CSV ingestion, design weights, and
//! synthetic data generation.
//!
//! A [`GroupSample`] stores one group's design in canonical form: strictly
//! increasing dose levels, a vector of replicate responses per dose, and the
//! covariate region the curves are compared on. The on-disk format is a
//! three-column CSV `group,dose,response` with `group ∈ {1,2}`, one
//! observation per row.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// One group's dose-response sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    /// Distinct dose levels, strictly increasing.
    pub doses: Vec<f64>,
    /// `responses[i]` holds the replicate responses observed at `doses[i]`.
    pub responses: Vec<Vec<f64>>,
    /// Covariate interval `[lo, hi]` the curves are compared on.
    pub region: (f64, f64),
}

/// Per-dose allocation proportions `n_i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignWeights {
    /// One positive weight per dose level; the weights sum to 1.
    pub weights: Vec<f64>,
}

impl GroupSample {
    /// Validates and constructs a sample.
    pub fn new(doses: Vec<f64>, responses: Vec<Vec<f64>>, region: (f64, f64)) -> Result<Self> {
        if doses.is_empty() {
            return Err(Error::Invalid("sample has no dose levels".into()));
        }
        if doses.len() != responses.len() {
            return Err(Error::Invalid(format!(
                "{} dose levels but {} response groups",
                doses.len(),
                responses.len()
            )));
        }
        // a degenerate (single-point) region is tolerated here so that
        // single-dose imports construct; operations needing an interval
        // (quadrature, bands) reject it at use
        if region.0 > region.1 || !region.0.is_finite() || !region.1.is_finite() {
            return Err(Error::Invalid(format!(
                "invalid region [{}, {}]",
                region.0, region.1
            )));
        }
        for w in doses.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Invalid(
                    "dose levels must be strictly increasing".into(),
                ));
            }
        }
        for (i, (&d, r)) in doses.iter().zip(&responses).enumerate() {
            if !(region.0..=region.1).contains(&d) {
                return Err(Error::Invalid(format!(
                    "dose {d} outside region [{}, {}]",
                    region.0, region.1
                )));
            }
            if r.is_empty() {
                return Err(Error::Invalid(format!("dose level {i} has no responses")));
            }
            if r.iter().any(|y| !y.is_finite()) || !d.is_finite() {
                return Err(Error::Invalid("non-finite dose or response".into()));
            }
        }
        Ok(GroupSample {
            doses,
            responses,
            region,
        })
    }

    /// Total number of observations.
    pub fn n(&self) -> usize {
        self.responses.iter().map(Vec::len).sum()
    }

    /// Number of distinct dose levels.
    pub fn k(&self) -> usize {
        self.doses.len()
    }

    /// Per-dose counts `n_i`.
    pub fn counts(&self) -> Vec<usize> {
        self.responses.iter().map(Vec::len).collect()
    }

    /// Allocation proportions `n_i / n`.
    pub fn design_weights(&self) -> DesignWeights {
        let n = self.n() as f64;
        DesignWeights {
            weights: self.responses.iter().map(|r| r.len() as f64 / n).collect(),
        }
    }

    /// Iterates over all `(dose, response)` observations in dose order.
    pub fn observations(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.doses
            .iter()
            .zip(&self.responses)
            .flat_map(|(&d, rs)| rs.iter().map(move |&y| (d, y)))
    }

    /// Returns a copy with a different comparison region.
    pub fn with_region(mut self, region: (f64, f64)) -> Result<Self> {
        self.region = region;
        GroupSample::new(self.doses, self.responses, region)
    }
}

/// Loads the two-group CSV format (`group,dose,response`).
///
/// Rows are partitioned by group and grouped by dose; dose levels are sorted.
/// The region defaults to `[min dose, max dose]` across both groups and can
/// be overridden afterwards with [`GroupSample::with_region`].
pub fn load_samples_csv(path: impl AsRef<Path>) -> Result<(GroupSample, GroupSample)> {
    let text = std::fs::read_to_string(path)?;
    parse_samples_csv(&text)
}

/// Parses the two-group CSV format from an in-memory string.
pub fn parse_samples_csv(text: &str) -> Result<(GroupSample, GroupSample)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "group,dose,response" => {}
        Some((_, h)) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `group,dose,response`, got `{}`", h.trim()),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }

    // (dose, response) rows per group, in file order
    let mut rows: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (g, d, y) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(g), Some(d), Some(y), None) => (g.trim(), d.trim(), y.trim()),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "expected exactly 3 comma-separated fields".into(),
                })
            }
        };
        let group = match g {
            "1" => 0usize,
            "2" => 1usize,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("group must be 1 or 2, got `{other}`"),
                })
            }
        };
        let parse_num = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("cannot parse {what} `{s}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("{what} `{s}` is not finite"),
                });
            }
            Ok(v)
        };
        rows[group].push((parse_num(d, "dose")?, parse_num(y, "response")?));
    }

    for (g, r) in rows.iter().enumerate() {
        if r.is_empty() {
            return Err(Error::EmptyGroup(g as u8 + 1));
        }
    }
    let lo = rows
        .iter()
        .flatten()
        .map(|&(d, _)| d)
        .fold(f64::INFINITY, f64::min);
    let hi = rows
        .iter()
        .flatten()
        .map(|&(d, _)| d)
        .fold(f64::NEG_INFINITY, f64::max);
    let region = (lo, hi);

    let build = |mut rows: Vec<(f64, f64)>| -> Result<GroupSample> {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut doses: Vec<f64> = Vec::new();
        let mut responses: Vec<Vec<f64>> = Vec::new();
        for (d, y) in rows {
            if doses.last() == Some(&d) {
                responses.last_mut().unwrap().push(y);
            } else {
                doses.push(d);
                responses.push(vec![y]);
            }
        }
        GroupSample::new(doses, responses, region)
    };
    let [r1, r2] = rows;
    Ok((build(r1)?, build(r2)?))
}

/// Serializes two samples back to the CSV format (exact `{:?}` float
/// representation, so load → save → load round-trips bit-exactly).
pub fn save_samples_csv(
    path: impl AsRef<Path>,
    s1: &GroupSample,
    s2: &GroupSample,
) -> Result<()> {
    let mut out = String::from("group,dose,response\n");
    for (g, s) in [(1, s1), (2, s2)] {
        for (d, y) in s.observations() {
            writeln!(out, "{g},{d:?},{y:?}").expect("string write");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Draws a synthetic sample `Y_ij = m(x_i, b) + eta_ij` with
/// `eta ~ Normal(0, sigma2)`, deterministically for a fixed RNG state.
pub fn simulate_sample(
    spec: &ModelSpec,
    b: &[f64],
    doses: &[f64],
    counts: &[usize],
    sigma2: f64,
    region: (f64, f64),
    rng: &mut impl Rng,
) -> Result<GroupSample> {
    if doses.len() != counts.len() {
        return Err(Error::Invalid(format!(
            "{} doses but {} counts",
            doses.len(),
            counts.len()
        )));
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::Invalid("all counts must be positive".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Invalid(format!("sigma2 must be > 0, got {sigma2}")));
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).expect("positive sd");
    let mut responses = Vec::with_capacity(doses.len());
    for (&x, &c) in doses.iter().zip(counts) {
        let mean = spec.eval(x, b)?;
        responses.push((0..c).map(|_| mean + normal.sample(rng)).collect());
    }
    GroupSample::new(doses.to_vec(), responses, region)
}
