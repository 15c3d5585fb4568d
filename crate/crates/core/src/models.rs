//! Linear-model losses `l(x, D) = base(a'x, b) + r(x)` and sparsity penalties.
//!
//! Every base loss is a function of the score `a'x` and the target, so its
//! subgradient is `slope * a` for a scalar slope. Penalties are separable
//! across coordinates. Where a function has a kink, the reported subgradient
//! is the midpoint of the one-sided derivatives; every kink used here is
//! symmetric, so the selection is `0`.

use crate::constraint::BoxConstraint;
use crate::data::{DataPoint, Dataset};
use crate::error::{check_dim, Error, Result};
use crate::scalar::Scalar;
use crate::vector::{dot, norm, ParameterVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseLoss {
    /// `|a'x - b|`
    Mad,
    /// `(a'x - b)^2`
    LeastSquares,
    /// `log(1 + exp(-b a'x))`, labels `b` in `{-1, +1}`.
    Logistic,
}

impl BaseLoss {
    pub fn is_smooth(self) -> bool {
        !matches!(self, BaseLoss::Mad)
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseLoss::Mad => "mad",
            BaseLoss::LeastSquares => "least-squares",
            BaseLoss::Logistic => "logistic",
        }
    }

    /// Value and derivative with respect to the score `s = a'x`.
    #[inline]
    pub fn eval_score<T: Scalar>(self, score: T, target: T) -> (T, T) {
        match self {
            BaseLoss::Mad => {
                let r = score - target;
                (r.abs(), sign0(r))
            }
            BaseLoss::LeastSquares => {
                let r = score - target;
                (r * r, T::two() * r)
            }
            BaseLoss::Logistic => {
                let m = target * score;
                (softplus(-m), -target * logistic(-m))
            }
        }
    }
}

impl std::str::FromStr for BaseLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mad" => Ok(BaseLoss::Mad),
            "least-squares" | "ls" => Ok(BaseLoss::LeastSquares),
            "logistic" => Ok(BaseLoss::Logistic),
            other => Err(Error::Config(format!("unknown loss '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyKind {
    None,
    Lasso,
    Scad,
    Mcp,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::None => "none",
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::Scad => "scad",
            PenaltyKind::Mcp => "mcp",
        }
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PenaltyKind::None),
            "lasso" | "l1" => Ok(PenaltyKind::Lasso),
            "scad" => Ok(PenaltyKind::Scad),
            "mcp" => Ok(PenaltyKind::Mcp),
            other => Err(Error::Config(format!("unknown penalty '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams<T> {
    pub lambda: T,
    pub gamma: T,
}

impl<T: Scalar> PenaltyParams<T> {
    pub fn new(lambda: T, gamma: T) -> Self {
        Self { lambda, gamma }
    }
}

/// A validated penalty `r(x) = sum_i p(x_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty<T> {
    kind: PenaltyKind,
    params: PenaltyParams<T>,
}

impl<T: Scalar> Penalty<T> {
    pub fn none() -> Self {
        Self {
            kind: PenaltyKind::None,
            params: PenaltyParams::new(T::zero(), T::zero()),
        }
    }

    pub fn new(kind: PenaltyKind, params: PenaltyParams<T>) -> Result<Self> {
        let PenaltyParams { lambda, gamma } = params;
        if kind != PenaltyKind::None && !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        match kind {
            PenaltyKind::Scad if !(gamma > T::one() && gamma.is_finite()) => {
                Err(Error::Config(format!("SCAD needs gamma > 1, got {gamma}")))
            }
            PenaltyKind::Mcp if !(gamma > T::zero() && gamma.is_finite()) => {
                Err(Error::Config(format!("MCP needs gamma > 0, got {gamma}")))
            }
            _ => Ok(Self { kind, params }),
        }
    }

    pub fn kind(&self) -> PenaltyKind {
        self.kind
    }

    pub fn params(&self) -> PenaltyParams<T> {
        self.params
    }

    /// Scalar penalty at one coordinate.
    pub fn scalar_value(&self, t: T) -> T {
        let PenaltyParams { lambda: l, gamma: g } = self.params;
        let a = t.abs();
        match self.kind {
            PenaltyKind::None => T::zero(),
            PenaltyKind::Lasso => l * a,
            PenaltyKind::Scad => {
                if a <= l {
                    l * a
                } else if a <= l * g {
                    (g * l * a - T::half() * (t * t + l * l)) / (g - T::one())
                } else {
                    l * l * (g + T::one()) / T::two()
                }
            }
            PenaltyKind::Mcp => {
                if a <= l * g {
                    l * a - t * t / (T::two() * g)
                } else {
                    l * l * g / T::two()
                }
            }
        }
    }

    /// Subgradient selection at one coordinate (`0` at the origin).
    pub fn scalar_subgradient(&self, t: T) -> T {
        let PenaltyParams { lambda: l, gamma: g } = self.params;
        let a = t.abs();
        let s = sign0(t);
        match self.kind {
            PenaltyKind::None => T::zero(),
            PenaltyKind::Lasso => l * s,
            PenaltyKind::Scad => {
                if a <= l {
                    l * s
                } else if a <= l * g {
                    s * (g * l - a) / (g - T::one())
                } else {
                    T::zero()
                }
            }
            PenaltyKind::Mcp => {
                if a <= l * g {
                    s * (l - a / g)
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        if self.kind == PenaltyKind::None {
            return T::zero();
        }
        x.iter().map(|&t| self.scalar_value(t)).sum()
    }

    pub fn subgradient(&self, x: &[T]) -> Vec<T> {
        x.iter().map(|&t| self.scalar_subgradient(t)).collect()
    }

    /// `out += weight * subgradient(x)`
    pub fn add_subgradient(&self, x: &[T], weight: T, out: &mut [T]) {
        if self.kind == PenaltyKind::None {
            return;
        }
        for (o, &t) in out.iter_mut().zip(x) {
            *o += weight * self.scalar_subgradient(t);
        }
    }

    /// Weak-convexity modulus of the penalty.
    pub fn modulus(&self) -> T {
        match self.kind {
            PenaltyKind::None | PenaltyKind::Lasso => T::zero(),
            PenaltyKind::Scad => T::one() / (self.params.gamma - T::one()),
            PenaltyKind::Mcp => T::one() / self.params.gamma,
        }
    }

    /// Euclidean Lipschitz bound in `n` dimensions; every coordinate slope is
    /// at most `lambda`.
    pub fn lipschitz(&self, n: usize) -> T {
        match self.kind {
            PenaltyKind::None => T::zero(),
            _ => self.params.lambda * T::from_usize_lossy(n).sqrt(),
        }
    }
}

/// Loss specification plus the constants the algorithms need.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec<T> {
    base: BaseLoss,
    penalty: Penalty<T>,
    base_curvature: T,
    lipschitz: Option<T>,
}

impl<T: Scalar> LossSpec<T> {
    /// Spec without data-dependent constants. The base curvature is taken as
    /// zero, which is exact for MAD.
    pub fn new(base: BaseLoss, penalty: Penalty<T>) -> Self {
        Self {
            base,
            penalty,
            base_curvature: T::zero(),
            lipschitz: None,
        }
    }

    /// Spec with curvature and Lipschitz bounds computed over `ds` and the
    /// box.
    pub fn calibrated(
        base: BaseLoss,
        penalty: Penalty<T>,
        ds: &Dataset<T>,
        feasible: &BoxConstraint<T>,
    ) -> Result<Self> {
        check_dim(ds.dim(), feasible.lower().len())?;
        let pen_lip = penalty.lipschitz(ds.dim());
        let mut curvature = T::zero();
        let mut lipschitz = T::zero();
        for d in ds {
            let an = norm(&d.features);
            let (curv, lip) = match base {
                BaseLoss::Mad => (T::zero(), an),
                BaseLoss::LeastSquares => {
                    let rmax = d
                        .features
                        .iter()
                        .enumerate()
                        .map(|(i, &a)| a.abs() * feasible.max_abs(i))
                        .sum::<T>()
                        + d.target.abs();
                    (T::two() * an * an, T::two() * rmax * an)
                }
                BaseLoss::Logistic => {
                    let bn = d.target.abs();
                    (bn * bn * an * an / T::lit(4.0), bn * an)
                }
            };
            curvature = curvature.max(curv);
            lipschitz = lipschitz.max(lip);
        }
        Ok(Self {
            base,
            penalty,
            base_curvature: curvature,
            lipschitz: Some(lipschitz + pen_lip),
        })
    }

    pub fn base(&self) -> BaseLoss {
        self.base
    }

    pub fn penalty(&self) -> &Penalty<T> {
        &self.penalty
    }

    /// Per-sample weak-convexity modulus: penalty modulus plus the largest
    /// gradient-Lipschitz constant of a smooth base over the data.
    pub fn weak_convexity_modulus(&self) -> T {
        self.penalty.modulus() + self.base_curvature
    }

    /// Largest per-sample Lipschitz constant over the box, if calibrated.
    pub fn lipschitz(&self) -> Option<T> {
        self.lipschitz
    }

    #[inline]
    fn score(&self, x: &[T], d: &DataPoint<T>) -> Result<T> {
        check_dim(d.dim(), x.len())?;
        Ok(dot(&d.features, x))
    }

    /// Base value and score slope; the base subgradient is `slope * a`.
    pub fn base_eval(&self, x: &[T], d: &DataPoint<T>) -> Result<(T, T)> {
        let s = self.score(x, d)?;
        Ok(self.base.eval_score(s, d.target))
    }

    pub fn value(&self, x: &[T], d: &DataPoint<T>) -> Result<T> {
        Ok(self.base_eval(x, d)?.0 + self.penalty.value(x))
    }

    pub fn subgradient(&self, x: &[T], d: &DataPoint<T>) -> Result<ParameterVector<T>> {
        let (_, slope) = self.base_eval(x, d)?;
        let mut g = self.penalty.subgradient(x);
        for (gi, &ai) in g.iter_mut().zip(&d.features) {
            *gi += slope * ai;
        }
        Ok(ParameterVector::new(g))
    }

    /// Value and subgradient in one pass.
    pub fn value_and_subgradient(&self, x: &[T], d: &DataPoint<T>) -> Result<(T, ParameterVector<T>)> {
        let (v, slope) = self.base_eval(x, d)?;
        let mut g = self.penalty.subgradient(x);
        for (gi, &ai) in g.iter_mut().zip(&d.features) {
            *gi += slope * ai;
        }
        Ok((v + self.penalty.value(x), ParameterVector::new(g)))
    }

    /// Gradient of the base loss with respect to the features `a`.
    pub fn feature_gradient(&self, x: &[T], d: &DataPoint<T>) -> Result<Vec<T>> {
        let (_, slope) = self.base_eval(x, d)?;
        Ok(x.iter().map(|&xi| slope * xi).collect())
    }

    /// Losses at `x` for every point of `ds`.
    pub fn losses(&self, x: &[T], ds: &Dataset<T>) -> Result<Vec<T>> {
        check_dim(ds.dim(), x.len())?;
        let r = self.penalty.value(x);
        Ok(ds
            .iter()
            .map(|d| self.base.eval_score(dot(&d.features, x), d.target).0 + r)
            .collect())
    }

    /// `h(x)`: mean loss over a batch of points.
    pub fn mean_loss<'a, I>(&self, x: &[T], batch: I) -> Result<T>
    where
        I: IntoIterator<Item = &'a DataPoint<T>>,
    {
        let mut sum = T::zero();
        let mut n = 0usize;
        for d in batch {
            sum += self.base_eval(x, d)?.0;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        Ok(sum / T::from_usize_lossy(n) + self.penalty.value(x))
    }
}

pub fn loss_value<T: Scalar>(spec: &LossSpec<T>, x: &[T], d: &DataPoint<T>) -> Result<T> {
    spec.value(x, d)
}

pub fn loss_subgradient<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    d: &DataPoint<T>,
) -> Result<ParameterVector<T>> {
    spec.subgradient(x, d)
}

pub fn penalty_value<T: Scalar>(kind: PenaltyKind, p: PenaltyParams<T>, x: &[T]) -> Result<T> {
    Ok(Penalty::new(kind, p)?.value(x))
}

pub fn penalty_subgradient<T: Scalar>(
    kind: PenaltyKind,
    p: PenaltyParams<T>,
    x: &[T],
) -> Result<ParameterVector<T>> {
    Ok(ParameterVector::new(Penalty::new(kind, p)?.subgradient(x)))
}

pub fn weak_convexity_modulus<T: Scalar>(spec: &LossSpec<T>) -> T {
    spec.weak_convexity_modulus()
}

/// Sign with `sign0(0) = 0`.
#[inline]
pub(crate) fn sign0<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        T::one()
    } else if t < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// `log(1 + exp(z))` without overflow.
#[inline]
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-z))`
#[inline]
fn logistic<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(a: &[f64], b: f64) -> DataPoint<f64> {
        DataPoint::new(a.to_vec(), b).unwrap()
    }

    fn scad(l: f64, g: f64) -> Penalty<f64> {
        Penalty::new(PenaltyKind::Scad, PenaltyParams::new(l, g)).unwrap()
    }

    fn mcp(l: f64, g: f64) -> Penalty<f64> {
        Penalty::new(PenaltyKind::Mcp, PenaltyParams::new(l, g)).unwrap()
    }

    #[test]
    fn mad_values() {
        let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
        assert_eq!(spec.value(&[2.0, 0.0], &pt(&[1.0, 0.0], 0.0)).unwrap(), 2.0);
        let lasso = Penalty::new(PenaltyKind::Lasso, PenaltyParams::new(0.5, 0.0)).unwrap();
        let spec = LossSpec::new(BaseLoss::Mad, lasso);
        // zero residual leaves only the penalty
        assert_eq!(spec.value(&[1.0, 2.0], &pt(&[1.0, 1.0], 3.0)).unwrap(), 1.5);
    }

    #[test]
    fn least_squares_zero_residual() {
        let spec = LossSpec::new(BaseLoss::LeastSquares, Penalty::none());
        assert_eq!(spec.value(&[1.0], &pt(&[1.0], 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn mad_subgradients() {
        let lasso = Penalty::new(PenaltyKind::Lasso, PenaltyParams::new(0.5, 0.0)).unwrap();
        let spec = LossSpec::new(BaseLoss::Mad, lasso);
        let d = pt(&[1.0, -2.0], 0.0);
        // residual 1*1 + (-2)*(-1) = 3 > 0: a + lambda*sign(x)
        let g = spec.subgradient(&[1.0, -1.0], &d).unwrap();
        assert_eq!(g.as_slice(), &[1.5, -2.5]);
        // residual 0: penalty part only
        let g = spec.subgradient(&[2.0, 1.0], &d).unwrap();
        assert_eq!(g.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let spec = LossSpec::new(BaseLoss::Mad, Penalty::<f64>::none());
        assert!(spec.value(&[1.0], &pt(&[1.0, 2.0], 0.0)).is_err());
        assert!(spec.subgradient(&[1.0], &pt(&[1.0, 2.0], 0.0)).is_err());
    }

    #[test]
    fn penalty_reference_values() {
        assert_relative_eq!(scad(1.0, 3.0).scalar_value(0.5), 0.5);
        assert_relative_eq!(scad(1.0, 3.0).scalar_value(5.0), 2.0);
        assert_relative_eq!(mcp(1.0, 2.0).scalar_value(0.5), 0.4375);
        assert_relative_eq!(mcp(1.0, 2.0).scalar_value(3.0), 1.0);
        let v = penalty_value(PenaltyKind::Lasso, PenaltyParams::new(2.0, 0.0), &[1.0, -3.0]);
        assert_relative_eq!(v.unwrap(), 8.0);
    }

    #[test]
    fn penalty_subgradient_values() {
        let lasso = PenaltyParams::new(1.0, 0.0);
        let g = penalty_subgradient(PenaltyKind::Lasso, lasso, &[0.0]).unwrap();
        assert_eq!(g.as_slice(), &[0.0]);
        assert_relative_eq!(scad(1.0, 3.0).scalar_subgradient(2.0), 0.5);
        assert_relative_eq!(scad(1.0, 3.0).scalar_subgradient(-2.0), -0.5);
        for x in [2.0, 2.5, 7.0] {
            assert_eq!(mcp(1.0, 2.0).scalar_subgradient(x), 0.0);
        }
        assert_eq!(mcp(1.0, 2.0).scalar_subgradient(0.0), 0.0);
    }

    #[test]
    fn moduli() {
        let lasso = Penalty::new(PenaltyKind::Lasso, PenaltyParams::new(1.0, 0.0)).unwrap();
        assert_eq!(LossSpec::new(BaseLoss::Mad, lasso).weak_convexity_modulus(), 0.0);
        assert_eq!(
            LossSpec::new(BaseLoss::Mad, scad(1.0, 3.0)).weak_convexity_modulus(),
            0.5
        );
        assert_eq!(
            LossSpec::new(BaseLoss::Mad, mcp(1.0, 2.0)).weak_convexity_modulus(),
            0.5
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(Penalty::new(PenaltyKind::Scad, PenaltyParams::new(1.0, 1.0)).is_err());
        assert!(Penalty::new(PenaltyKind::Mcp, PenaltyParams::new(1.0, 0.0)).is_err());
        assert!(Penalty::new(PenaltyKind::Lasso, PenaltyParams::new(0.0, 0.0)).is_err());
        assert!(penalty_value(PenaltyKind::Scad, PenaltyParams::new(-1.0, 3.0), &[1.0]).is_err());
    }

    #[test]
    fn breakpoint_continuity() {
        let s = scad(0.7, 3.7);
        for knot in [0.7, 0.7 * 3.7] {
            let lo = s.scalar_value(knot * (1.0 - 1e-15));
            let hi = s.scalar_value(knot * (1.0 + 1e-15));
            assert!((lo - hi).abs() < 1e-12);
        }
        let m = mcp(0.7, 2.5);
        let knot = 0.7 * 2.5;
        assert!((m.scalar_value(knot * (1.0 - 1e-15)) - m.scalar_value(knot * (1.0 + 1e-15))).abs() < 1e-12);
    }

    #[test]
    fn logistic_is_stable() {
        let (v, s) = BaseLoss::Logistic.eval_score(1000.0f64, 1.0);
        assert!(v.is_finite() && s.is_finite());
        let (v, s) = BaseLoss::Logistic.eval_score(-1000.0f64, 1.0);
        assert_relative_eq!(v, 1000.0);
        assert_relative_eq!(s, -1.0);
        let (v, _) = BaseLoss::Logistic.eval_score(0.0f64, 1.0);
        assert_relative_eq!(v, std::f64::consts::LN_2);
    }

    #[test]
    fn calibrated_constants() {
        let ds = Dataset::new(vec![pt(&[3.0, 4.0], 1.0), pt(&[1.0, 0.0], -1.0)]).unwrap();
        let bx = BoxConstraint::symmetric(2, 10.0).unwrap();
        let spec = LossSpec::calibrated(BaseLoss::Mad, scad(1.0, 3.0), &ds, &bx).unwrap();
        assert_relative_eq!(spec.lipschitz().unwrap(), 5.0 + 2f64.sqrt());
        assert_eq!(spec.weak_convexity_modulus(), 0.5);
        let spec = LossSpec::calibrated(BaseLoss::Logistic, Penalty::none(), &ds, &bx).unwrap();
        assert_relative_eq!(spec.weak_convexity_modulus(), 25.0 / 4.0);
    }

    #[test]
    fn feature_gradients() {
        let d = pt(&[1.0, 1.0], 0.0);
        let x = [2.0, -0.5];
        let mad = LossSpec::new(BaseLoss::Mad, Penalty::none());
        assert_eq!(mad.feature_gradient(&x, &d).unwrap(), vec![2.0, -0.5]);
        let ls = LossSpec::new(BaseLoss::LeastSquares, Penalty::none());
        assert_eq!(ls.feature_gradient(&x, &d).unwrap(), vec![6.0, -1.5]);
    }
}
