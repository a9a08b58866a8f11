//! Parametric regression families: evaluation, analytic gradients, and the
//! model registry.
//!
//! A [`ModelSpec`] is an immutable description of a curve family
//! `m(x, b)` over a scalar covariate `x` and a parameter vector `b` of
//! length `p`, together with a compact per-parameter search box. The five
//! built-in families cover the usual dose-response shapes:
//!
//! | id            | form                        | p |
//! |---------------|-----------------------------|---|
//! | `emax`        | `b1 + b2*x/(b3 + x)`        | 3 |
//! | `exponential` | `b1 + b2*(exp(x/b3) - 1)`   | 3 |
//! | `linear`      | `b1 + b2*x`                 | 2 |
//! | `quadratic`   | `b1*x^2 + b2*x + b3`        | 3 |
//! | `constant`    | `b1`                        | 1 |
//!
//! User-defined families can be registered with an evaluation closure and an
//! optional analytic gradient; when no gradient is supplied a central
//! finite-difference fallback is used and flagged on the spec.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Built-in curve families with closed-form evaluation and gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinFamily {
    /// `m(x,b) = b1 + b2*x/(b3+x)`, saturating dose-response; requires `b3 > 0`.
    Emax,
    /// `m(x,b) = b1 + b2*(exp(x/b3) - 1)`; requires `b3 != 0`.
    Exponential,
    /// `m(x,b) = b1 + b2*x`.
    Linear,
    /// `m(x,b) = b1*x^2 + b2*x + b3`.
    Quadratic,
    /// `m(x,b) = b1`.
    Constant,
}

impl BuiltinFamily {
    /// All built-in families in registry order.
    pub const ALL: [BuiltinFamily; 5] = [
        BuiltinFamily::Emax,
        BuiltinFamily::Exponential,
        BuiltinFamily::Linear,
        BuiltinFamily::Quadratic,
        BuiltinFamily::Constant,
    ];

    /// Lowercase ASCII id used in config files and CLI flags.
    pub fn id(self) -> &'static str {
        match self {
            BuiltinFamily::Emax => "emax",
            BuiltinFamily::Exponential => "exponential",
            BuiltinFamily::Linear => "linear",
            BuiltinFamily::Quadratic => "quadratic",
            BuiltinFamily::Constant => "constant",
        }
    }

    /// Parameter dimension.
    pub fn p(self) -> usize {
        match self {
            BuiltinFamily::Emax | BuiltinFamily::Exponential | BuiltinFamily::Quadratic => 3,
            BuiltinFamily::Linear => 2,
            BuiltinFamily::Constant => 1,
        }
    }

    /// Default compact search box.
    ///
    /// Linear-in-parameter coefficients get a wide generic box; the
    /// nonlinear parameters get the conventional dose-response defaults for
    /// designs with doses up to ~4 (EMAX half-effect in `[0.004, 6]`,
    /// exponential rate in `[0.4, 8]`).
    pub fn default_bounds(self) -> Vec<(f64, f64)> {
        const WIDE: (f64, f64) = (-1e3, 1e3);
        match self {
            BuiltinFamily::Emax => vec![WIDE, WIDE, (0.004, 6.0)],
            BuiltinFamily::Exponential => vec![WIDE, WIDE, (0.4, 8.0)],
            BuiltinFamily::Linear => vec![WIDE, WIDE],
            BuiltinFamily::Quadratic => vec![WIDE, WIDE, WIDE],
            BuiltinFamily::Constant => vec![WIDE],
        }
    }

    fn check_domain(self, b: &[f64]) -> Result<()> {
        match self {
            BuiltinFamily::Emax if b[2] <= 0.0 => Err(Error::Domain(format!(
                "emax requires b3 > 0, got b3 = {}",
                b[2]
            ))),
            BuiltinFamily::Exponential if b[2] == 0.0 => Err(Error::Domain(
                "exponential requires b3 != 0".to_string(),
            )),
            _ => Ok(()),
        }
    }

    fn eval(self, x: f64, b: &[f64]) -> f64 {
        match self {
            BuiltinFamily::Emax => b[0] + b[1] * x / (b[2] + x),
            BuiltinFamily::Exponential => b[0] + b[1] * ((x / b[2]).exp() - 1.0),
            BuiltinFamily::Linear => b[0] + b[1] * x,
            BuiltinFamily::Quadratic => b[0] * x * x + b[1] * x + b[2],
            BuiltinFamily::Constant => b[0],
        }
    }

    fn grad(self, x: f64, b: &[f64], out: &mut [f64]) {
        match self {
            BuiltinFamily::Emax => {
                let s = b[2] + x;
                out[0] = 1.0;
                out[1] = x / s;
                out[2] = -b[1] * x / (s * s);
            }
            BuiltinFamily::Exponential => {
                let e = (x / b[2]).exp();
                out[0] = 1.0;
                out[1] = e - 1.0;
                out[2] = -b[1] * e * x / (b[2] * b[2]);
            }
            BuiltinFamily::Linear => {
                out[0] = 1.0;
                out[1] = x;
            }
            BuiltinFamily::Quadratic => {
                out[0] = x * x;
                out[1] = x;
                out[2] = 1.0;
            }
            BuiltinFamily::Constant => out[0] = 1.0,
        }
    }
}

type EvalFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// Immutable description of one parametric curve family.
///
/// Cloning is cheap (closures are reference-counted). All methods are pure,
/// so a spec can be shared freely across threads.
#[derive(Clone)]
pub struct ModelSpec {
    /// Lowercase ASCII identifier, unique within a registry.
    pub id: String,
    /// Parameter dimension.
    pub p: usize,
    /// Per-parameter `(lower, upper)` bounds defining the compact search box.
    pub bounds: Vec<(f64, f64)>,
    /// Set for built-in families; enables closed-form fitting paths.
    pub family: Option<BuiltinFamily>,
    /// True when the gradient is a finite-difference fallback rather than
    /// an analytic derivative.
    pub grad_is_numeric: bool,
    eval_fn: Arc<EvalFn>,
    grad_fn: Option<Arc<GradFn>>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("id", &self.id)
            .field("p", &self.p)
            .field("bounds", &self.bounds)
            .field("family", &self.family)
            .field("grad_is_numeric", &self.grad_is_numeric)
            .finish()
    }
}

impl ModelSpec {
    /// Builds the spec of a built-in family with its default box.
    pub fn builtin(family: BuiltinFamily) -> Self {
        ModelSpec {
            id: family.id().to_string(),
            p: family.p(),
            bounds: family.default_bounds(),
            family: Some(family),
            grad_is_numeric: false,
            eval_fn: Arc::new(move |x, b| family.eval(x, b)),
            grad_fn: Some(Arc::new(move |x, b, out| family.grad(x, b, out))),
        }
    }

    /// Builds a user-defined family from an evaluation closure and an
    /// optional analytic gradient. Without a gradient, central finite
    /// differences (step `1e-6 * max(1, |b_j|)`) are used and
    /// `grad_is_numeric` is set.
    pub fn custom(
        id: impl Into<String>,
        p: usize,
        bounds: Vec<(f64, f64)>,
        eval: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        grad: Option<Arc<GradFn>>,
    ) -> Result<Self> {
        let id = id.into();
        if bounds.len() != p {
            return Err(Error::Invalid(format!(
                "model `{id}`: {} bounds for {p} parameters",
                bounds.len()
            )));
        }
        if p == 0 {
            return Err(Error::Invalid(format!("model `{id}`: p must be positive")));
        }
        let grad_is_numeric = grad.is_none();
        Ok(ModelSpec {
            id,
            p,
            bounds,
            family: None,
            grad_is_numeric,
            eval_fn: Arc::new(eval),
            grad_fn: grad,
        })
    }

    /// Returns a copy of this spec with a different search box.
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.p {
            return Err(Error::Invalid(format!(
                "model `{}`: {} bounds for {} parameters",
                self.id,
                bounds.len(),
                self.p
            )));
        }
        self.bounds = bounds;
        Ok(self)
    }

    fn check(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.p {
            return Err(Error::DimensionMismatch {
                id: self.id.clone(),
                expected: self.p,
                got: b.len(),
            });
        }
        if let Some(f) = self.family {
            f.check_domain(b)?;
        }
        Ok(())
    }

    /// Evaluates `m(x, b)`.
    pub fn eval(&self, x: f64, b: &[f64]) -> Result<f64> {
        self.check(b)?;
        Ok((self.eval_fn)(x, b))
    }

    /// Evaluation without the dimension/domain check, for hot loops whose
    /// inputs were validated up front.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64, b: &[f64]) -> f64 {
        (self.eval_fn)(x, b)
    }

    /// Evaluates the gradient `∂m/∂b` at `(x, b)`.
    pub fn grad(&self, x: f64, b: &[f64]) -> Result<Vec<f64>> {
        self.check(b)?;
        let mut out = vec![0.0; self.p];
        self.grad_into(x, b, &mut out);
        Ok(out)
    }

    /// Gradient into a caller-provided buffer (validated inputs only).
    #[inline]
    pub(crate) fn grad_into(&self, x: f64, b: &[f64], out: &mut [f64]) {
        match &self.grad_fn {
            Some(g) => g(x, b, out),
            None => {
                // central finite differences
                let mut bb = b.to_vec();
                for j in 0..self.p {
                    let h = 1e-6 * b[j].abs().max(1.0);
                    bb[j] = b[j] + h;
                    let up = (self.eval_fn)(x, &bb);
                    bb[j] = b[j] - h;
                    let lo = (self.eval_fn)(x, &bb);
                    bb[j] = b[j];
                    out[j] = (up - lo) / (2.0 * h);
                }
            }
        }
    }

    /// Projects a parameter vector onto the search box, coordinate-wise.
    pub(crate) fn project(&self, b: &mut [f64]) {
        for (bj, &(lo, hi)) in b.iter_mut().zip(&self.bounds) {
            *bj = bj.clamp(lo, hi);
        }
    }
}

/// Evaluates `m(x, b)` for a spec — free-function form of [`ModelSpec::eval`].
pub fn eval_model(spec: &ModelSpec, x: f64, b: &[f64]) -> Result<f64> {
    spec.eval(x, b)
}

/// Evaluates `∂m/∂b` — free-function form of [`ModelSpec::grad`].
pub fn eval_gradient(spec: &ModelSpec, x: f64, b: &[f64]) -> Result<Vec<f64>> {
    spec.grad(x, b)
}

/// Registry mapping model ids to specs.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    map: BTreeMap<String, ModelSpec>,
}

impl ModelRegistry {
    /// Registry containing only the built-in families.
    pub fn builtin() -> Self {
        let mut map = BTreeMap::new();
        for f in BuiltinFamily::ALL {
            let spec = ModelSpec::builtin(f);
            map.insert(spec.id.clone(), spec);
        }
        ModelRegistry { map }
    }

    /// Adds a spec; fails if the id is already taken.
    pub fn register(&mut self, spec: ModelSpec) -> Result<()> {
        if self.map.contains_key(&spec.id) {
            return Err(Error::DuplicateId(spec.id));
        }
        self.map.insert(spec.id.clone(), spec);
        Ok(())
    }

    /// Looks up a spec by id.
    pub fn lookup(&self, id: &str) -> Result<&ModelSpec> {
        self.map.get(id).ok_or_else(|| Error::NotFound(id.to_string()))
    }

    /// Iterates over all registered specs in id order.
    pub fn iter(&self) -> impl Iterator<Item = &ModelSpec> {
        self.map.values()
    }
}

/// Returns the registry of built-in families.
pub fn builtin_registry() -> ModelRegistry {
    ModelRegistry::builtin()
}
