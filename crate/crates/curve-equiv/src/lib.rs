//! Statistical equivalence testing for two parametric regression curves.
//!
//! Given dose-response samples from two groups, each modeled by its own
//! parametric mean curve, this crate decides whether the curves are
//! *equivalent*: it tests `H0: d(m1, m2) >= eps` against
//! `H1: d(m1, m2) < eps`, so that a rejection positively demonstrates that
//! the difference between the curves is below the pre-specified relevance
//! threshold `eps`. Two distances are supported — the squared L² distance
//! `∫ (m1 - m2)²` and the maximal deviation `max |m1 - m2|` over the
//! covariate region.
//!
//! # Components
//!
//! - [`models`]: builtin model families (EMAX, exponential, linear,
//!   quadratic, constant) and user-defined [`models::ModelSpec`]s.
//! - [`data`]: grouped dose-response samples, CSV import/export, and
//!   synthetic-data generation.
//! - [`fitting`]: per-group least squares with information matrices and
//!   the paired summary [`fitting::PairedFit`] all tests consume.
//! - [`metrics`]: the distances, Gauss–Legendre quadrature, the covariance
//!   kernel, and variance estimates.
//! - [`constrain`]: least squares constrained to the manifold
//!   `d(beta1, beta2) = eps`, used to resample under the null.
//! - [`testing`]: the decision procedures — asymptotic L² test, constrained
//!   parametric bootstrap for both distances, asymptotic sup test, and the
//!   confidence-band intersection-union test.
//! - [`mcsim`]: a Monte Carlo harness with a preset catalogue of Type I
//!   error and power scenarios.
//! - [`stream`]: deterministic, scheduling-independent RNG streams.
//!
//! # Example
//!
//! ```
//! use curve_equiv::constrain::DistanceKind;
//! use curve_equiv::data::GroupSample;
//! use curve_equiv::models::builtin_registry;
//! use curve_equiv::testing::test_bootstrap;
//!
//! // two constant curves observed at one dose
//! let s1 = GroupSample::new(vec![0.5], vec![vec![0.11, -0.07, 0.05, -0.02]], (0.0, 1.0))?;
//! let s2 = GroupSample::new(vec![0.5], vec![vec![-0.03, 0.08, -0.06, 0.01]], (0.0, 1.0))?;
//! let registry = builtin_registry();
//! let constant = registry.lookup("constant")?;
//! let outcome = test_bootstrap(
//!     constant, constant, &s1, &s2,
//!     1.0,               // equivalence threshold for the squared-L² distance
//!     0.05,              // level
//!     200,               // bootstrap replications
//!     DistanceKind::L2sq,
//!     42,                // seed
//! )?;
//! assert!(outcome.reject); // the curves are equivalent at threshold 1
//! # Ok::<(), curve_equiv::error::Error>(())
//! ```

pub mod constrain;
pub mod data;
pub mod error;
pub mod fitting;
pub mod mcsim;
pub mod metrics;
pub mod models;
pub mod stats;
pub mod stream;
pub mod testing;

pub use constrain::{fit_constrained, ConstrainedFit, DistanceKind};
pub use data::{load_samples_csv, simulate_sample, GroupSample};
pub use error::{Error, Result};
pub use fitting::{fit_ols, fit_pair, FitResult, PairedFit};
pub use metrics::{dist_l2sq, dist_sup, QuadratureRule, SupResult};
pub use models::{builtin_registry, BuiltinFamily, ModelRegistry, ModelSpec};
pub use testing::{
    bootstrap_run, test_band_iu, test_bootstrap, test_l2_asymptotic, test_sup_asymptotic,
    BootstrapRun, Method, TestOutcome,
};
