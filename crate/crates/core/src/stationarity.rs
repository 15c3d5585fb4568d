//! Moreau-envelope stationarity probe.
//!
//! For `phi = F + indicator(box)` and `lambda < 1/rho`, the subproblem
//!
//! ```text
//! Psi(y) = F(y) + |y - x|^2 / (2 lambda)
//! ```
//!
//! is `mu = 1/lambda - rho` strongly convex. It is solved with a cutting-plane
//! model of the convex function `F + rho/2 |.|^2`: every full-batch
//! subgradient evaluation adds a global lower bound, the regularised model is
//! minimised through its dual over the simplex, and the dual value gives a
//! certified lower bound on `min Psi`. The solve stops once
//! `2 (UB - LB) / mu <= tol`, which bounds the squared distance of the
//! returned point to the exact prox.

use crate::constraint::{BoxConstraint, FeasibleSet};
use crate::data::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::models::LossSpec;
use crate::risk::{composite_value_and_subgradient, RiskParams};
use crate::scalar::Scalar;
use crate::vector::{distance, dot, ParameterVector};

/// Default cap on subgradient evaluations per prox solve.
pub const DEFAULT_BUDGET: usize = 5000;
/// Default bound on the squared distance to the exact prox.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Cuts kept before the bundle is compressed.
const BUNDLE_CAP: usize = 64;
const DUAL_ITERS: usize = 2000;

/// `rho_bar = (1 + 2 kappa) delta + (1 + kappa) delta`
pub fn rho_bar<T: Scalar>(kappa: T, delta: T) -> T {
    (T::one() + T::two() * kappa) * delta + (T::one() + kappa) * delta
}

/// Weak-convexity modulus of the composite objective for a `delta`-weakly
/// convex loss: `(1 + 2 kappa) delta`.
pub fn composite_modulus<T: Scalar>(kappa: T, delta: T) -> T {
    (T::one() + T::two() * kappa) * delta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoreauProbe<T> {
    lambda: T,
    rho: T,
    budget: usize,
    tol: T,
}

impl<T: Scalar> MoreauProbe<T> {
    /// `rho` is the weak-convexity modulus of `F` used to build the cuts.
    pub fn new(lambda: T, rho: T, budget: usize, tol: T) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(rho >= T::zero() && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rho must be nonnegative, got {rho}"
            )));
        }
        if lambda * rho >= T::one() {
            return Err(Error::InvalidArgument(format!(
                "lambda * rho = {} must be below 1",
                lambda * rho
            )));
        }
        if budget == 0 || !(tol > T::zero()) {
            return Err(Error::InvalidArgument(
                "need a positive budget and tolerance".into(),
            ));
        }
        Ok(Self {
            lambda,
            rho,
            budget,
            tol,
        })
    }

    /// Probe at `lambda = 1 / rho_bar` for a `delta`-weakly convex loss. In
    /// the convex case `lambda` falls back to one.
    pub fn for_problem(kappa: T, delta: T) -> Result<Self> {
        let rb = rho_bar(kappa, delta);
        let lambda = if rb > T::zero() { T::one() / rb } else { T::one() };
        Self::new(
            lambda,
            composite_modulus(kappa, delta),
            DEFAULT_BUDGET,
            T::lit(DEFAULT_TOLERANCE),
        )
    }

    pub fn with_budget(mut self, budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidArgument("budget must be positive".into()));
        }
        self.budget = budget;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: T) -> Result<Self> {
        if !(tol > T::zero()) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn tolerance(&self) -> T {
        self.tol
    }

    /// Strong-convexity modulus `1/lambda - rho` of the prox subproblem.
    pub fn mu(&self) -> T {
        T::one() / self.lambda - self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport<T> {
    pub x_hat: ParameterVector<T>,
    /// `|x - x_hat| / lambda`
    pub grad_norm: T,
    /// `F(x_hat)`
    pub phi_at_xhat: T,
    pub dist_to_xhat: T,
    /// `Psi(x_hat)`, the envelope value up to the certified gap.
    pub envelope: T,
    /// Certified bound on `|x_hat - prox(x)|^2`.
    pub certified_dist_sq: T,
    /// Subgradient evaluations used.
    pub evaluations: usize,
}

/// Result of a certified prox solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxSolution<T> {
    pub x_hat: ParameterVector<T>,
    pub value: T,
    pub lower_bound: T,
    pub f_at_xhat: T,
    pub evaluations: usize,
}

struct Cut<T> {
    c: T,
    v: Vec<T>,
}

/// Regularised cutting-plane model and its dual over the simplex.
struct Master<'a, T> {
    cuts: Vec<Cut<T>>,
    theta: Vec<T>,
    q: Vec<T>,
    mu: T,
    offset: T,
    feasible: &'a BoxConstraint<T>,
}

impl<T: Scalar> Master<'_, T> {
    /// Minimiser of the Lagrangian at `theta`, and the dual value.
    fn inner(&self, theta: &[T]) -> (Vec<T>, T) {
        let mut s: Vec<T> = self.q.iter().map(|&q| -q).collect();
        let mut lin = T::zero();
        for (cut, &t) in self.cuts.iter().zip(theta) {
            if t != T::zero() {
                lin += t * cut.c;
                for (si, &vi) in s.iter_mut().zip(&cut.v) {
                    *si += t * vi;
                }
            }
        }
        let z: Vec<T> = s
            .iter()
            .zip(self.feasible.lower().iter().zip(self.feasible.upper()))
            .map(|(&si, (&lo, &hi))| (-si / self.mu).max(lo).min(hi))
            .collect();
        let d = lin + dot(&s, &z) + self.mu * T::half() * dot(&z, &z) + self.offset;
        (z, d)
    }

    fn primal(&self, z: &[T]) -> T {
        let model = self
            .cuts
            .iter()
            .map(|cut| cut.c + dot(&cut.v, z))
            .fold(T::neg_infinity(), T::max);
        model + self.mu * T::half() * dot(z, z) - dot(&self.q, z) + self.offset
    }

    fn dual_gradient(&self, z: &[T]) -> Vec<T> {
        self.cuts.iter().map(|cut| cut.c + dot(&cut.v, z)).collect()
    }

    /// Accelerated projected ascent on the dual until the master gap is at
    /// most `target`. Returns the master minimiser estimate and the dual
    /// value at the final `theta`.
    fn solve(&mut self, target: T) -> (Vec<T>, T) {
        let lip = self.spectral_bound() / self.mu;
        if lip == T::zero() {
            // flat cuts: the dual is linear in theta
            let top = (0..self.cuts.len())
                .max_by(|&a, &b| {
                    self.cuts[a]
                        .c
                        .partial_cmp(&self.cuts[b].c)
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("at least one cut");
            self.theta.iter_mut().for_each(|t| *t = T::zero());
            self.theta[top] = T::one();
        }
        if lip > T::zero() && self.cuts.len() > 1 {
            self.active_set();
        }
        let (mut z, mut d) = self.inner(&self.theta);
        if lip == T::zero() || self.cuts.len() == 1 || self.primal(&z) - d <= target {
            return (z, d);
        }
        let step = T::one() / lip;
        let mut y = self.theta.clone();
        let mut t = T::one();
        let mut best = (z.clone(), d, self.theta.clone());
        for it in 0..DUAL_ITERS {
            let (zy, _) = self.inner(&y);
            let g = self.dual_gradient(&zy);
            let cand: Vec<T> = y.iter().zip(&g).map(|(&yi, &gi)| yi + step * gi).collect();
            let next = project_simplex(&cand);
            let (zn, dn) = self.inner(&next);
            let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * T::half();
            let beta = (t - T::one()) / t_next;
            // restart momentum when the dual value drops
            let restart = dn < d;
            y = if restart {
                next.clone()
            } else {
                next.iter()
                    .zip(&self.theta)
                    .map(|(&a, &b)| a + beta * (a - b))
                    .collect()
            };
            t = if restart { T::one() } else { t_next };
            self.theta = next;
            z = zn;
            d = dn;
            if d > best.1 {
                best = (z.clone(), d, self.theta.clone());
            }
            if it % 8 == 7 && self.primal(&best.0) - best.1 <= target {
                break;
            }
        }
        self.theta = best.2;
        (best.0, best.1)
    }

    /// Active-set solve of the dual with the box ignored:
    /// `min 1/2 t'Ht + f't` over the simplex with `H = V V' / mu` and
    /// `f = -c - V q / mu`. Exact when the box is inactive at the answer;
    /// otherwise a warm start for the projected ascent.
    fn active_set(&mut self) {
        let k = self.cuts.len();
        let mut h = vec![T::zero(); k * k];
        for i in 0..k {
            for j in i..k {
                let v = dot(&self.cuts[i].v, &self.cuts[j].v) / self.mu;
                h[i * k + j] = v;
                h[j * k + i] = v;
            }
        }
        let f: Vec<T> = self
            .cuts
            .iter()
            .map(|c| -c.c - dot(&c.v, &self.q) / self.mu)
            .collect();
        let scale = (0..k).map(|i| h[i * k + i]).fold(T::zero(), T::max);
        let ridge = scale * T::lit(1e-13);
        let tol = T::epsilon() * T::lit(1e3) * (T::one() + f.iter().map(|v| v.abs()).fold(T::zero(), T::max));

        let mut theta = self.theta.clone();
        let mut support: Vec<usize> = (0..k).filter(|&j| theta[j] > T::zero()).collect();
        for _ in 0..(3 * k + 10) {
            let m = support.len();
            let mut a = vec![T::zero(); (m + 1) * (m + 1)];
            let mut rhs = vec![T::zero(); m + 1];
            for (r, &i) in support.iter().enumerate() {
                for (c, &j) in support.iter().enumerate() {
                    a[r * (m + 1) + c] = h[i * k + j];
                }
                a[r * (m + 1) + r] += ridge;
                a[r * (m + 1) + m] = T::one();
                a[m * (m + 1) + r] = T::one();
                rhs[r] = -f[i];
            }
            rhs[m] = T::one();
            let Some(sol) = solve_dense(a, rhs, m + 1) else {
                break;
            };
            if sol[..m].iter().all(|&v| v >= T::zero()) {
                for (r, &i) in support.iter().enumerate() {
                    theta[i] = sol[r];
                }
                let nu = sol[m];
                let worst = (0..k)
                    .filter(|j| !support.contains(j))
                    .map(|j| {
                        let g: T = (0..k).map(|i| h[j * k + i] * theta[i]).sum::<T>() + f[j] + nu;
                        (j, g)
                    })
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
                match worst {
                    Some((j, g)) if g < -tol => support.push(j),
                    _ => break,
                }
            } else {
                // step towards the face solution until a weight hits zero
                let mut alpha = T::one();
                let mut leave = None;
                for (r, &i) in support.iter().enumerate() {
                    if sol[r] < theta[i] {
                        let a = theta[i] / (theta[i] - sol[r]);
                        if a < alpha {
                            alpha = a;
                            leave = Some(r);
                        }
                    }
                }
                for (r, &i) in support.iter().enumerate() {
                    theta[i] = theta[i] + alpha * (sol[r] - theta[i]);
                }
                match leave {
                    Some(r) => {
                        theta[support[r]] = T::zero();
                        support.swap_remove(r);
                    }
                    None => break,
                }
            }
        }
        let total: T = theta.iter().map(|&t| t.max(T::zero())).sum();
        if total > T::zero() && total.is_finite() {
            self.theta = theta.into_iter().map(|t| t.max(T::zero()) / total).collect();
        }
    }

    /// Upper estimate of the largest eigenvalue of `V^T V`: power iteration
    /// on the `d x d` Gram matrix, inflated by 10%, capped by the trace.
    fn spectral_bound(&self) -> T {
        let d = self.q.len();
        let mut gram = vec![T::zero(); d * d];
        for cut in &self.cuts {
            for i in 0..d {
                let vi = cut.v[i];
                if vi != T::zero() {
                    for j in 0..d {
                        gram[i * d + j] += vi * cut.v[j];
                    }
                }
            }
        }
        let trace: T = (0..d).map(|i| gram[i * d + i]).sum();
        if trace == T::zero() || d == 1 {
            return trace;
        }
        let mut w = vec![T::one(); d];
        let mut est = T::zero();
        for _ in 0..60 {
            let next: Vec<T> = (0..d).map(|i| dot(&gram[i * d..(i + 1) * d], &w)).collect();
            let nn = dot(&next, &next).sqrt();
            if nn == T::zero() {
                return trace;
            }
            est = dot(&w, &next) / dot(&w, &w);
            w = next.into_iter().map(|v| v / nn).collect();
        }
        (est * T::lit(1.1)).min(trace)
    }

    fn push(&mut self, cut: Cut<T>) {
        if self.cuts.len() >= BUNDLE_CAP {
            self.compress();
        }
        self.cuts.push(cut);
        let first = self.theta.is_empty();
        self.theta.push(if first { T::one() } else { T::zero() });
    }

    /// Keeps the cuts with the largest dual weights and folds the rest into
    /// one aggregate cut carrying their combined weight, so the current dual
    /// value is unchanged.
    fn compress(&mut self) {
        let keep_n = BUNDLE_CAP / 2;
        let mut order: Vec<usize> = (0..self.cuts.len()).collect();
        order.sort_by(|&a, &b| {
            self.theta[b]
                .partial_cmp(&self.theta[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(b.cmp(&a))
        });
        let (kept, folded) = order.split_at(keep_n.min(order.len()));
        let weight: T = folded.iter().map(|&j| self.theta[j]).sum();
        let mut cuts = Vec::with_capacity(keep_n + 1);
        let mut theta = Vec::with_capacity(keep_n + 1);
        if weight > T::zero() {
            let mut c = T::zero();
            let mut v = vec![T::zero(); self.q.len()];
            for &j in folded {
                let w = self.theta[j] / weight;
                c += w * self.cuts[j].c;
                for (a, &b) in v.iter_mut().zip(&self.cuts[j].v) {
                    *a += w * b;
                }
            }
            cuts.push(Cut { c, v });
            theta.push(weight);
        }
        let mut kept = kept.to_vec();
        kept.sort_unstable();
        for &j in &kept {
            theta.push(self.theta[j]);
            cuts.push(Cut {
                c: self.cuts[j].c,
                v: std::mem::take(&mut self.cuts[j].v),
            });
        }
        self.cuts = cuts;
        self.theta = theta;
    }
}

/// Gaussian elimination with partial pivoting on a row-major `n x n` system.
fn solve_dense<T: Scalar>(mut a: Vec<T>, mut b: Vec<T>, n: usize) -> Option<Vec<T>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i * n + col]
                .abs()
                .partial_cmp(&a[j * n + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[piv * n + col].abs() > T::zero()) {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / p;
            if factor != T::zero() {
                for c in col..n {
                    let v = a[col * n + c];
                    a[r * n + c] -= factor * v;
                }
                let v = b[col];
                b[r] -= factor * v;
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r * n + c] * x[c];
        }
        x[r] = acc / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = T::zero();
    let mut shift = T::zero();
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let cand = (cum - T::one()) / T::from_usize_lossy(i + 1);
        if ui - cand > T::zero() {
            shift = cand;
        }
    }
    v.iter().map(|&vi| (vi - shift).max(T::zero())).collect()
}

/// Certified approximate `prox_{lambda phi}(x)` with its objective bounds.
pub fn solve_prox<T: Scalar>(
    probe: &MoreauProbe<T>,
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    rp: RiskParams<T>,
    feasible: &BoxConstraint<T>,
    x: &[T],
) -> Result<ProxSolution<T>> {
    check_dim(feasible.dim(), x.len())?;
    check_dim(ds.dim(), x.len())?;
    let lambda = probe.lambda;
    let rho = probe.rho;
    let mu = probe.mu();
    let inv = T::one() / lambda;

    let psi = |y: &[T], f: T| f + distance(y, x).powi(2) * inv * T::half();
    let mut master = Master {
        cuts: Vec::new(),
        theta: Vec::new(),
        q: x.iter().map(|&v| v * inv).collect(),
        mu,
        offset: dot(x, x) * inv * T::half(),
        feasible,
    };

    let mut y = x.to_vec();
    feasible.project_in_place(&mut y)?;
    let mut best: Option<(Vec<T>, T, T)> = None;
    let mut lower = T::neg_infinity();
    for evals in 1..=probe.budget {
        let (f, g) = composite_value_and_subgradient(spec, &y, ds, rp)?;
        if !f.is_finite() || !g.is_finite() {
            return Err(Error::NonFinite {
                iteration: evals,
                what: "prox subproblem".into(),
            });
        }
        let val = psi(&y, f);
        if best.as_ref().is_none_or(|b| val < b.1) {
            best = Some((y.clone(), val, f));
        }
        let yy = dot(&y, &y);
        let v: Vec<T> = g.iter().zip(&y).map(|(&gi, &yi)| gi + rho * yi).collect();
        let c = f - dot(g.as_slice(), &y) - rho * T::half() * yy;
        master.push(Cut { c, v });

        let (ub_y, ub, fb) = best.as_ref().expect("set above");
        let gap = *ub - lower;
        let target = if gap.is_finite() {
            (gap * T::lit(0.05)).max(T::epsilon() * ub.abs().max(T::one()))
        } else {
            T::infinity()
        };
        let (z, d) = master.solve(target);
        lower = lower.max(d);
        if T::two() * (*ub - lower).max(T::zero()) / mu <= probe.tol {
            return Ok(ProxSolution {
                x_hat: ParameterVector::new(ub_y.clone()),
                value: *ub,
                lower_bound: lower,
                f_at_xhat: *fb,
                evaluations: evals,
            });
        }
        y = z;
    }
    let (b, ub, _) = best.expect("budget is positive");
    Err(Error::Convergence {
        iterations: probe.budget,
        gap: (ub - lower).as_f64(),
        best: b.iter().map(|v| v.as_f64()).collect(),
    })
}

/// Approximate `prox_{lambda phi}(x)`.
pub fn prox<T: Scalar>(
    probe: &MoreauProbe<T>,
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    rp: RiskParams<T>,
    feasible: &BoxConstraint<T>,
    x: &[T],
) -> Result<ParameterVector<T>> {
    Ok(solve_prox(probe, spec, ds, rp, feasible, x)?.x_hat)
}

/// `grad phi_lambda(x) = (x - prox(x)) / lambda` and the quantities around it.
pub fn moreau_gradient<T: Scalar>(
    probe: &MoreauProbe<T>,
    spec: &LossSpec<T>,
    ds: &Dataset<T>,
    rp: RiskParams<T>,
    feasible: &BoxConstraint<T>,
    x: &[T],
) -> Result<StationarityReport<T>> {
    let sol = solve_prox(probe, spec, ds, rp, feasible, x)?;
    let dist = distance(x, &sol.x_hat);
    Ok(StationarityReport {
        grad_norm: dist / probe.lambda,
        phi_at_xhat: sol.f_at_xhat,
        dist_to_xhat: dist,
        envelope: sol.value,
        certified_dist_sq: T::two() * (sol.value - sol.lower_bound).max(T::zero()) / probe.mu(),
        evaluations: sol.evaluations,
        x_hat: sol.x_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataPoint;
    use crate::models::{BaseLoss, Penalty};
    use approx::assert_abs_diff_eq;

    fn abs_problem() -> (LossSpec<f64>, Dataset<f64>, BoxConstraint<f64>) {
        (
            LossSpec::new(BaseLoss::Mad, Penalty::none()),
            Dataset::new(vec![DataPoint::new(vec![1.0], 0.0).unwrap()]).unwrap(),
            BoxConstraint::symmetric(1, 10.0).unwrap(),
        )
    }

    fn rp(k: f64) -> RiskParams<f64> {
        RiskParams::new(k).unwrap()
    }

    #[test]
    fn rho_bar_values() {
        assert_eq!(rho_bar(0.0, 1.0), 2.0);
        assert_eq!(rho_bar(0.5, 0.0), 0.0);
        assert_eq!(rho_bar(1.0, 2.0), 10.0);
    }

    #[test]
    fn probe_validation() {
        assert!(MoreauProbe::new(1.0, 1.0, 10, 1e-8).is_err());
        assert!(MoreauProbe::new(0.0, 0.0, 10, 1e-8).is_err());
        assert!(MoreauProbe::new(1.0, 0.5, 0, 1e-8).is_err());
        assert!(MoreauProbe::new(1.0, 0.5, 10, 0.0).is_err());
        let p = MoreauProbe::<f64>::for_problem(0.0, 1.0).unwrap();
        assert_eq!(p.lambda(), 0.5);
        assert_eq!(p.mu(), 1.0);
        assert_eq!(MoreauProbe::<f64>::for_problem(0.3, 0.0).unwrap().lambda(), 1.0);
    }

    #[test]
    fn absolute_value_examples() {
        let (spec, ds, bx) = abs_problem();
        let p = MoreauProbe::new(1.0, 0.0, 100, 1e-12).unwrap();
        let r = moreau_gradient(&p, &spec, &ds, rp(0.0), &bx, &[2.0]).unwrap();
        assert_abs_diff_eq!(r.x_hat[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.grad_norm, 1.0, epsilon = 1e-12);
        let r = moreau_gradient(&p, &spec, &ds, rp(0.0), &bx, &[0.0]).unwrap();
        assert_eq!(r.x_hat[0], 0.0);
        assert!(r.grad_norm <= 1e-12);
        let p = MoreauProbe::new(0.5, 0.0, 100, 1e-12).unwrap();
        let r = moreau_gradient(&p, &spec, &ds, rp(0.0), &bx, &[2.0]).unwrap();
        assert_abs_diff_eq!(r.x_hat[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.grad_norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_objective_returns_the_point() {
        let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
        let ds = Dataset::new(vec![DataPoint::new(vec![0.0, 0.0], 0.0).unwrap()]).unwrap();
        let bx = BoxConstraint::symmetric(2, 1.0).unwrap();
        let p = MoreauProbe::new(1.0, 0.0, 10, 1e-12).unwrap();
        let x = [0.3, -0.4];
        assert_eq!(prox(&p, &spec, &ds, rp(0.7), &bx, &x).unwrap().as_slice(), &x);
    }

    #[test]
    fn box_is_respected() {
        let (spec, ds, _) = abs_problem();
        let bx = BoxConstraint::new(vec![1.5], vec![4.0]).unwrap();
        let p = MoreauProbe::new(1.0, 0.0, 100, 1e-12).unwrap();
        // unconstrained prox of 2 is 1, clipped to the box
        let r = prox(&p, &spec, &ds, rp(0.0), &bx, &[2.0]).unwrap();
        assert_abs_diff_eq!(r[0], 1.5, epsilon = 1e-9);
    }

    #[test]
    fn exhausted_budget_reports_best() {
        let mut rng = crate::rng::RngStream::new(3);
        let pts = (0..40)
            .map(|_| {
                let a: Vec<f64> = (0..5).map(|_| rng.uniform(-1.0, 1.0)).collect();
                DataPoint::new(a, rng.uniform(-1.0, 1.0)).unwrap()
            })
            .collect();
        let ds = Dataset::new(pts).unwrap();
        let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
        let bx = BoxConstraint::symmetric(5, 3.0).unwrap();
        let p = MoreauProbe::new(1.0, 0.0, 2, 1e-14).unwrap();
        match solve_prox(&p, &spec, &ds, rp(0.5), &bx, &[1.0; 5]) {
            Err(Error::Convergence { iterations, best, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(best.len(), 5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.2, 0.2, 0.2]);
        for v in p {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(project_simplex(&[5.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.9, 0.6, -3.0]);
        assert_abs_diff_eq!(p[0], 0.65, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.35, epsilon = 1e-15);
        assert_eq!(p[2], 0.0);
    }
}
