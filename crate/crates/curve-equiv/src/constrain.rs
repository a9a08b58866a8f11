//! Constrained least squares on the null manifold `d(beta1, beta2) = eps`,
//! and the null-parameter selection rule used to generate bootstrap data.
//!
//! The solver is an augmented Lagrangian: minimize
//! `SSR(v) + nu*c(v) + mu*c(v)^2` over the stacked parameter vector
//! `v = (beta1, beta2)` with `c(v) = d(beta1, beta2) - eps`, escalating `mu`
//! until the constraint residual meets tolerance. The inner minimization is
//! a box-projected damped Newton step on the Gauss–Newton Hessian.
//!
//! The squared-L² constraint is smooth and enforced exactly. The maximal
//! deviation is not differentiable, so its constraint uses a Boltzmann
//! soft maximum over a 500-point grid at fixed temperature 50
//! (`c = Σ d_i e^{50 d_i} / Σ e^{50 d_i} - eps`); the true grid-refined
//! maximum of the solution is reported alongside.

use nalgebra::{DMatrix, DVector};

use crate::data::GroupSample;
use crate::error::{Error, Result};
use crate::fitting::{fit_ols, quasi_random_points, PairedFit};
use crate::metrics::{self, QuadratureRule};
use crate::models::ModelSpec;

/// Which curve distance a test or constraint refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// Squared L² distance (integral of the squared difference).
    L2sq,
    /// Maximal absolute deviation.
    Sup,
}

/// Softmax temperature for the sup-distance constraint.
const SUP_TEMP: f64 = 50.0;
/// Grid size for the sup-distance constraint.
const SUP_GRID: usize = 500;

/// Result of a constrained fit.
#[derive(Debug, Clone)]
pub struct ConstrainedFit {
    /// Group-1 parameters on the manifold.
    pub beta1_tilde: Vec<f64>,
    /// Group-2 parameters on the manifold.
    pub beta2_tilde: Vec<f64>,
    /// `|d(beta1, beta2) - eps|` measured by the constraint actually solved
    /// (the smoothed maximum in the sup case).
    pub constraint_residual: f64,
    /// Pooled sum of squared residuals at the solution.
    pub objective: f64,
    /// Whether the solver met both its optimality and feasibility tolerances.
    pub converged: bool,
    /// False when the selection rule kept the unconstrained fits instead.
    pub used_constrained: bool,
    /// Distance of the solution under the solved constraint function.
    pub d_at_solution: f64,
}

/// Null-parameter selection: the unconstrained estimates when the observed
/// distance is already at least `eps`, otherwise the constrained ones.
pub fn select_null_params(
    pf: &PairedFit,
    eps: f64,
    distance: DistanceKind,
    cf: &ConstrainedFit,
) -> (Vec<f64>, Vec<f64>) {
    let d_hat = observed_distance(pf, distance);
    if d_hat >= eps {
        (pf.fit1.beta_hat.clone(), pf.fit2.beta_hat.clone())
    } else {
        (cf.beta1_tilde.clone(), cf.beta2_tilde.clone())
    }
}

/// The observed distance used by the selection rule and the tests.
pub fn observed_distance(pf: &PairedFit, distance: DistanceKind) -> f64 {
    match distance {
        DistanceKind::L2sq => {
            let quad = QuadratureRule::default_on(pf.region).expect("valid region");
            metrics::dist_l2sq(pf, &quad)
        }
        DistanceKind::Sup => {
            metrics::dist_sup(pf, metrics::DEFAULT_SUP_GRID, metrics::DEFAULT_SUP_TOL).value
        }
    }
}

/// Pooled least squares subject to `d(beta1, beta2) = eps`.
///
/// `starts` adds extra stacked starting points `(beta1, beta2)`; the
/// unconstrained fits are always used as warm starts, perturbed toward both
/// signs of the mean difference so that every manifold branch is visited.
pub fn fit_constrained(
    spec1: &ModelSpec,
    spec2: &ModelSpec,
    s1: &GroupSample,
    s2: &GroupSample,
    eps: f64,
    distance: DistanceKind,
    starts: Option<&[(Vec<f64>, Vec<f64>)]>,
) -> Result<ConstrainedFit> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be > 0, got {eps}")));
    }
    let f1 = fit_ols(spec1, s1, None)?;
    let f2 = fit_ols(spec2, s2, None)?;
    fit_constrained_warm(
        spec1,
        spec2,
        s1,
        s2,
        eps,
        distance,
        &f1.beta_hat,
        &f2.beta_hat,
        starts,
    )
}

/// Constrained fit reusing already-computed unconstrained estimates.
#[allow(clippy::too_many_arguments)]
pub fn fit_constrained_warm(
    spec1: &ModelSpec,
    spec2: &ModelSpec,
    s1: &GroupSample,
    s2: &GroupSample,
    eps: f64,
    distance: DistanceKind,
    warm1: &[f64],
    warm2: &[f64],
    starts: Option<&[(Vec<f64>, Vec<f64>)]>,
) -> Result<ConstrainedFit> {
    let region = s1.region;
    let problem = Problem::new(spec1, spec2, s1, s2, eps, distance, region);
    let tol = 1e-6 * eps.max(1.0);

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let stack = |b1: &[f64], b2: &[f64]| {
        let mut v = b1.to_vec();
        v.extend_from_slice(b2);
        v
    };
    candidates.push(stack(warm1, warm2));
    // perturb the warm start toward both signs of the mean difference, so
    // both components of the manifold (delta ~ +target and delta ~ -target)
    // receive a start
    let target = match distance {
        DistanceKind::L2sq => (eps / (region.1 - region.0)).sqrt(),
        DistanceKind::Sup => eps,
    };
    if let Some(j) = intercept_index(spec1, region) {
        let dbar = problem.mean_delta(&stack(warm1, warm2));
        for sign in [1.0, -1.0] {
            let mut b1 = warm1.to_vec();
            b1[j] += sign * target - dbar;
            spec1.project(&mut b1);
            candidates.push(stack(&b1, warm2));
        }
    }
    if let Some(extra) = starts {
        for (b1, b2) in extra {
            candidates.push(stack(b1, b2));
        }
    }
    // a couple of deterministic jitters of the warm start
    for (i, q) in quasi_random_points(&problem.bounds, 2, 7).into_iter().enumerate() {
        let base = stack(warm1, warm2);
        let mixed: Vec<f64> = base
            .iter()
            .zip(&q)
            .map(|(b, qq)| 0.8 * b + 0.2 * qq + 1e-3 * (i as f64 + 1.0))
            .collect();
        candidates.push(mixed);
    }

    let mut best: Option<(Vec<f64>, f64, f64, bool)> = None; // v, ssr, residual, converged
    let mut best_infeasible_residual = f64::INFINITY;
    for mut v in candidates {
        problem.project(&mut v);
        let (v, ssr, res, conv) = problem.auglag(v, tol);
        if res <= tol {
            let better = match &best {
                None => true,
                Some((bv, bssr, _, _)) => {
                    ssr < bssr - 1e-12
                        || ((ssr - bssr).abs() <= 1e-12
                            && v.iter()
                                .zip(bv.iter())
                                .find(|(a, b)| a != b)
                                .map_or(false, |(a, b)| a < b))
                }
            };
            if better {
                best = Some((v, ssr, res, conv));
            }
        } else {
            best_infeasible_residual = best_infeasible_residual.min(res);
        }
    }

    match best {
        Some((v, ssr, res, conv)) => {
            let (b1, b2) = v.split_at(spec1.p);
            let d = problem.constraint(&v) + eps;
            Ok(ConstrainedFit {
                beta1_tilde: b1.to_vec(),
                beta2_tilde: b2.to_vec(),
                constraint_residual: res,
                objective: ssr,
                converged: conv,
                used_constrained: true,
                d_at_solution: d,
            })
        }
        None => Err(Error::ConstraintInfeasible {
            eps,
            residual: best_infeasible_residual,
        }),
    }
}

/// Index of an additive-intercept parameter (gradient component identically
/// 1 over the region), if the family has one.
fn intercept_index(spec: &ModelSpec, region: (f64, f64)) -> Option<usize> {
    let probe: Vec<f64> = spec
        .bounds
        .iter()
        .map(|&(lo, hi)| 0.5 * (lo.max(-1.0) + hi.min(1.0)).max(lo).min(hi))
        .collect();
    let xs = [
        region.0,
        0.5 * (region.0 + region.1),
        region.1,
    ];
    let mut g = vec![0.0; spec.p];
    'param: for j in 0..spec.p {
        for &x in &xs {
            spec.grad_into(x, &probe, &mut g);
            if (g[j] - 1.0).abs() > 1e-9 {
                continue 'param;
            }
        }
        return Some(j);
    }
    None
}

/// The stacked constrained problem: pooled SSR + distance constraint.
struct Problem<'a> {
    spec1: &'a ModelSpec,
    spec2: &'a ModelSpec,
    xs1: Vec<f64>,
    ys1: Vec<f64>,
    xs2: Vec<f64>,
    ys2: Vec<f64>,
    p1: usize,
    bounds: Vec<(f64, f64)>,
    eps: f64,
    distance: DistanceKind,
    // quadrature for the L2 constraint / grid for the sup constraint
    cx: Vec<f64>,
    cw: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(
        spec1: &'a ModelSpec,
        spec2: &'a ModelSpec,
        s1: &GroupSample,
        s2: &GroupSample,
        eps: f64,
        distance: DistanceKind,
        region: (f64, f64),
    ) -> Self {
        let (xs1, ys1): (Vec<f64>, Vec<f64>) = s1.observations().unzip();
        let (xs2, ys2): (Vec<f64>, Vec<f64>) = s2.observations().unzip();
        let mut bounds = spec1.bounds.clone();
        bounds.extend_from_slice(&spec2.bounds);
        let (cx, cw) = match distance {
            DistanceKind::L2sq => {
                let q = QuadratureRule::default_on(region).expect("valid region");
                (q.nodes, q.weights)
            }
            DistanceKind::Sup => {
                let step = (region.1 - region.0) / (SUP_GRID - 1) as f64;
                (
                    (0..SUP_GRID).map(|i| region.0 + step * i as f64).collect(),
                    vec![1.0; SUP_GRID],
                )
            }
        };
        Problem {
            spec1,
            spec2,
            xs1,
            ys1,
            xs2,
            ys2,
            p1: spec1.p,
            bounds,
            eps,
            distance,
            cx,
            cw,
        }
    }

    fn project(&self, v: &mut [f64]) {
        for (x, &(lo, hi)) in v.iter_mut().zip(&self.bounds) {
            *x = x.clamp(lo, hi);
        }
    }

    fn delta(&self, v: &[f64], x: f64) -> f64 {
        self.spec1.eval_unchecked(x, &v[..self.p1])
            - self.spec2.eval_unchecked(x, &v[self.p1..])
    }

    fn mean_delta(&self, v: &[f64]) -> f64 {
        let s: f64 = self.cx.iter().map(|&x| self.delta(v, x)).sum();
        s / self.cx.len() as f64
    }

    fn ssr(&self, v: &[f64]) -> f64 {
        let (b1, b2) = v.split_at(self.p1);
        let mut s = 0.0;
        for (&x, &y) in self.xs1.iter().zip(&self.ys1) {
            let r = self.spec1.eval_unchecked(x, b1) - y;
            s += r * r;
        }
        for (&x, &y) in self.xs2.iter().zip(&self.ys2) {
            let r = self.spec2.eval_unchecked(x, b2) - y;
            s += r * r;
        }
        s
    }

    /// `c(v) = d(beta1, beta2) - eps` under the solved constraint function.
    fn constraint(&self, v: &[f64]) -> f64 {
        match self.distance {
            DistanceKind::L2sq => {
                let mut s = 0.0;
                for (&x, &w) in self.cx.iter().zip(&self.cw) {
                    let d = self.delta(v, x);
                    s += w * d * d;
                }
                s - self.eps
            }
            DistanceKind::Sup => {
                let ds: Vec<f64> = self.cx.iter().map(|&x| self.delta(v, x).abs()).collect();
                let dmax = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                let mut zd = 0.0;
                for &d in &ds {
                    let e = (SUP_TEMP * (d - dmax)).exp();
                    z += e;
                    zd += e * d;
                }
                zd / z - self.eps
            }
        }
    }

    /// Gradient of `c` with respect to the stacked parameters.
    fn constraint_grad(&self, v: &[f64]) -> DVector<f64> {
        let p = self.bounds.len();
        let p1 = self.p1;
        let (b1, b2) = v.split_at(p1);
        let mut out = DVector::<f64>::zeros(p);
        let mut g1 = vec![0.0; p1];
        let mut g2 = vec![0.0; p - p1];
        match self.distance {
            DistanceKind::L2sq => {
                for (&x, &w) in self.cx.iter().zip(&self.cw) {
                    let d = self.delta(v, x);
                    self.spec1.grad_into(x, b1, &mut g1);
                    self.spec2.grad_into(x, b2, &mut g2);
                    for j in 0..p1 {
                        out[j] += 2.0 * w * d * g1[j];
                    }
                    for j in 0..g2.len() {
                        out[p1 + j] -= 2.0 * w * d * g2[j];
                    }
                }
            }
            DistanceKind::Sup => {
                let ds: Vec<f64> = self.cx.iter().map(|&x| self.delta(v, x)).collect();
                let abs: Vec<f64> = ds.iter().map(|d| d.abs()).collect();
                let dmax = abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                let mut m = 0.0;
                let ws: Vec<f64> = abs
                    .iter()
                    .map(|&d| {
                        let e = (SUP_TEMP * (d - dmax)).exp();
                        z += e;
                        m += e * d;
                        e
                    })
                    .collect();
                let m = m / z;
                for (i, &x) in self.cx.iter().enumerate() {
                    let w = ws[i] / z * (1.0 + SUP_TEMP * (abs[i] - m));
                    let sgn = if ds[i] >= 0.0 { 1.0 } else { -1.0 };
                    self.spec1.grad_into(x, b1, &mut g1);
                    self.spec2.grad_into(x, b2, &mut g2);
                    for j in 0..p1 {
                        out[j] += w * sgn * g1[j];
                    }
                    for j in 0..g2.len() {
                        out[p1 + j] -= w * sgn * g2[j];
                    }
                }
            }
        }
        out
    }

    /// Gradient of the pooled SSR and its Gauss–Newton Hessian block.
    fn ssr_grad_hess(&self, v: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.bounds.len();
        let p1 = self.p1;
        let (b1, b2) = v.split_at(p1);
        let mut grad = DVector::<f64>::zeros(p);
        let mut hess = DMatrix::<f64>::zeros(p, p);
        let mut g = vec![0.0; p1.max(p - p1)];
        for (&x, &y) in self.xs1.iter().zip(&self.ys1) {
            let r = self.spec1.eval_unchecked(x, b1) - y;
            self.spec1.grad_into(x, b1, &mut g[..p1]);
            for a in 0..p1 {
                grad[a] += 2.0 * g[a] * r;
                for c in 0..p1 {
                    hess[(a, c)] += 2.0 * g[a] * g[c];
                }
            }
        }
        let p2 = p - p1;
        for (&x, &y) in self.xs2.iter().zip(&self.ys2) {
            let r = self.spec2.eval_unchecked(x, b2) - y;
            self.spec2.grad_into(x, b2, &mut g[..p2]);
            for a in 0..p2 {
                grad[p1 + a] += 2.0 * g[a] * r;
                for c in 0..p2 {
                    hess[(p1 + a, p1 + c)] += 2.0 * g[a] * g[c];
                }
            }
        }
        (grad, hess)
    }

    /// Augmented-Lagrangian outer loop from one starting point. Returns
    /// `(v, ssr, |c|, converged)`.
    fn auglag(&self, mut v: Vec<f64>, tol: f64) -> (Vec<f64>, f64, f64, bool) {
        let mut nu = 0.0;
        let mut mu = 1.0;
        let mut c = self.constraint(&v);
        let mut inner_ok = false;
        for _ in 0..20 {
            inner_ok = self.inner_minimize(&mut v, nu, mu);
            let c_new = self.constraint(&v);
            if c_new.abs() <= tol && inner_ok {
                c = c_new;
                break;
            }
            nu += 2.0 * mu * c_new;
            if c_new.abs() > 0.25 * c.abs() {
                mu = (mu * 10.0).min(1e8);
            }
            c = c_new;
        }
        (v.clone(), self.ssr(&v), c.abs(), inner_ok)
    }

    /// Box-projected damped Newton on `SSR + nu*c + mu*c^2`.
    fn inner_minimize(&self, v: &mut Vec<f64>, nu: f64, mu: f64) -> bool {
        let p = self.bounds.len();
        let merit = |v: &[f64]| {
            let c = self.constraint(v);
            self.ssr(v) + nu * c + mu * c * c
        };
        let mut f = merit(v);
        let mut damp = 1e-3;
        for _ in 0..100 {
            let c = self.constraint(v);
            let cg = self.constraint_grad(v);
            let (mut grad, mut hess) = self.ssr_grad_hess(v);
            let w = nu + 2.0 * mu * c;
            for a in 0..p {
                grad[a] += w * cg[a];
                for b in 0..p {
                    hess[(a, b)] += 2.0 * mu * cg[a] * cg[b];
                }
            }
            // projected-gradient convergence check
            let mut pg: f64 = 0.0;
            for a in 0..p {
                let (lo, hi) = self.bounds[a];
                let g = grad[a];
                let active = (v[a] <= lo && g > 0.0) || (v[a] >= hi && g < 0.0);
                if !active {
                    pg = pg.max(g.abs());
                }
            }
            if pg < 1e-8 * f.abs().max(1.0) {
                return true;
            }
            let mut stepped = false;
            for _ in 0..30 {
                let mut m = hess.clone();
                for a in 0..p {
                    m[(a, a)] += damp * hess[(a, a)].max(1.0);
                }
                if let Some(ch) = m.cholesky() {
                    let step = ch.solve(&(-&grad));
                    let mut cand: Vec<f64> =
                        v.iter().zip(step.iter()).map(|(x, s)| x + s).collect();
                    self.project(&mut cand);
                    let fc = merit(&cand);
                    if fc.is_finite() && fc <= f {
                        let snorm: f64 = cand
                            .iter()
                            .zip(v.iter())
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        let delta = f - fc;
                        *v = cand;
                        f = fc;
                        damp = (damp / 3.0).max(1e-12);
                        stepped = true;
                        if snorm < 1e-12 || delta < 1e-14 * f.abs().max(1.0) {
                            return true;
                        }
                        break;
                    }
                }
                damp *= 4.0;
                if damp > 1e14 {
                    break;
                }
            }
            if !stepped {
                return pg < 1e-4 * f.abs().max(1.0);
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_samples_csv, simulate_sample, GroupSample};
    use crate::fitting::fit_pair;
    use crate::models::builtin_registry;
    use crate::stream::derive_stream;
    use approx::assert_relative_eq;

    #[test]
    fn constant_pair_lagrange_closed_form() {
        // group means 0.4 and 0.0, equal sizes, region [0,1], eps = 1:
        // the nearer branch b - c = 1 gives b = 0.7, c = -0.3
        let reg = builtin_registry();
        let c = reg.lookup("constant").unwrap();
        let mk = |mean: f64| {
            GroupSample::new(
                vec![0.5],
                vec![vec![mean + 0.1, mean - 0.1, mean, mean]],
                (0.0, 1.0),
            )
            .unwrap()
        };
        let s1 = mk(0.4);
        let s2 = mk(0.0);
        let cf = fit_constrained(c, c, &s1, &s2, 1.0, DistanceKind::L2sq, None).unwrap();
        assert!(cf.converged);
        assert!(cf.constraint_residual <= 1e-6);
        assert_relative_eq!(cf.beta1_tilde[0], 0.7, epsilon = 1e-6);
        assert_relative_eq!(cf.beta2_tilde[0], -0.3, epsilon = 1e-6);
    }

    #[test]
    fn noiseless_data_on_the_manifold_is_recovered() {
        // shifted emax pair with delta = 0.5 has d2 = 1 exactly
        let reg = builtin_registry();
        let emax = reg.lookup("emax").unwrap();
        let doses = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut rng = derive_stream(21, &[0]);
        let s1 = simulate_sample(emax, &[0.5, 5.0, 1.0], &doses, &[4; 5], 1e-30, (0.0, 4.0), &mut rng)
            .unwrap();
        let s2 = simulate_sample(emax, &[0.0, 5.0, 1.0], &doses, &[4; 5], 1e-30, (0.0, 4.0), &mut rng)
            .unwrap();
        let cf = fit_constrained(emax, emax, &s1, &s2, 1.0, DistanceKind::L2sq, None).unwrap();
        assert!(cf.constraint_residual <= 1e-6);
        assert!(cf.objective <= 1e-8, "objective = {}", cf.objective);
        assert_relative_eq!(cf.beta1_tilde[0] - cf.beta2_tilde[0], 0.5, epsilon = 1e-4);
    }

    #[test]
    fn infeasible_eps_is_reported() {
        // constant models with |b - c| <= 0.2 allowed cannot reach d2 = 1
        let reg = builtin_registry();
        let c = reg
            .lookup("constant")
            .unwrap()
            .clone()
            .with_bounds(vec![(-0.1, 0.1)])
            .unwrap();
        let s1 = GroupSample::new(vec![0.5], vec![vec![0.1, 0.0]], (0.0, 1.0)).unwrap();
        let s2 = GroupSample::new(vec![0.5], vec![vec![0.0, -0.1]], (0.0, 1.0)).unwrap();
        let err = fit_constrained(&c, &c, &s1, &s2, 1.0, DistanceKind::L2sq, None).unwrap_err();
        assert!(matches!(err, Error::ConstraintInfeasible { .. }));
    }

    #[test]
    fn selection_rule_keeps_unconstrained_when_distance_large() {
        let reg = builtin_registry();
        let emax = reg.lookup("emax").unwrap();
        let doses = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut rng = derive_stream(22, &[0]);
        // delta = 1 -> d2 = 4 >= eps = 1
        let s1 = simulate_sample(emax, &[1.0, 5.0, 1.0], &doses, &[6; 5], 0.01, (0.0, 4.0), &mut rng)
            .unwrap();
        let s2 = simulate_sample(emax, &[0.0, 5.0, 1.0], &doses, &[6; 5], 0.01, (0.0, 4.0), &mut rng)
            .unwrap();
        let pf = fit_pair(emax, emax, &s1, &s2).unwrap();
        let cf = fit_constrained(emax, emax, &s1, &s2, 1.0, DistanceKind::L2sq, None).unwrap();
        let (b1, b2) = select_null_params(&pf, 1.0, DistanceKind::L2sq, &cf);
        assert_eq!(b1, pf.fit1.beta_hat);
        assert_eq!(b2, pf.fit2.beta_hat);
        // and moves to the manifold when the distance is small
        let (b1, b2) = select_null_params(&pf, 100.0, DistanceKind::L2sq, &cf);
        assert_eq!(b1, cf.beta1_tilde);
        assert_eq!(b2, cf.beta2_tilde);
    }

    #[test]
    fn objective_dominates_unconstrained_ssr() {
        let reg = builtin_registry();
        let emax = reg.lookup("emax").unwrap();
        let lin = reg.lookup("linear").unwrap();
        let (s1, s2) = parse_samples_csv(include_str!("../../../data/ibs.csv")).unwrap();
        let f1 = crate::fitting::fit_ols(emax, &s1, None).unwrap();
        let f2 = crate::fitting::fit_ols(lin, &s2, None).unwrap();
        let cf = fit_constrained(emax, lin, &s1, &s2, 0.05, DistanceKind::L2sq, None).unwrap();
        assert!(cf.constraint_residual <= 1e-6 * 1.0);
        assert!(cf.objective >= f1.ssr + f2.ssr - 1e-9);
        assert_relative_eq!(cf.d_at_solution, 0.05, epsilon = 1e-6);
    }

    #[test]
    fn sup_constraint_reaches_target_softmax_level() {
        let reg = builtin_registry();
        let emax = reg.lookup("emax").unwrap();
        let lin = reg.lookup("linear").unwrap();
        let (s1, s2) = parse_samples_csv(include_str!("../../../data/ibs.csv")).unwrap();
        let cf = fit_constrained(emax, lin, &s1, &s2, 0.35, DistanceKind::Sup, None).unwrap();
        assert!(cf.constraint_residual <= 1e-6 * 1.0, "res = {}", cf.constraint_residual);
        // the true maximum sits near the soft maximum from below
        let sup = crate::metrics::dist_sup_curves(
            emax,
            &cf.beta1_tilde,
            lin,
            &cf.beta2_tilde,
            (0.0, 4.0),
            2001,
            1e-3,
        );
        assert!(sup.value > 0.3 && sup.value < 0.4, "sup = {}", sup.value);
    }

    #[test]
    fn feasibility_on_randomized_instances() {
        let reg = builtin_registry();
        let emax = reg.lookup("emax").unwrap();
        let doses = [0.0, 1.0, 2.0, 3.0, 4.0];
        for rep in 0..10u64 {
            let mut rng = derive_stream(23, &[rep]);
            let delta = 0.1 + 0.05 * rep as f64;
            let s1 = simulate_sample(
                emax,
                &[delta, 5.0, 1.0],
                &doses,
                &[4; 5],
                0.25,
                (0.0, 4.0),
                &mut rng,
            )
            .unwrap();
            let s2 = simulate_sample(
                emax,
                &[0.0, 5.0, 1.0],
                &doses,
                &[4; 5],
                0.25,
                (0.0, 4.0),
                &mut rng,
            )
            .unwrap();
            let eps = 1.0;
            let cf = fit_constrained(emax, emax, &s1, &s2, eps, DistanceKind::L2sq, None).unwrap();
            assert!(
                cf.constraint_residual <= 1e-6 * eps.max(1.0),
                "rep {rep}: residual {}",
                cf.constraint_residual
            );
        }
    }
}
