//! Test-time attacks on linear models and log-loss histograms.

use std::str::FromStr;

use crate::data::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::models::LossSpec;
use crate::scalar::Scalar;
use crate::vector::norm;

/// Losses below this are raised to it before taking logs.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Semidev,
    Pgm,
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semidev" => Ok(Self::Semidev),
            "pgm" => Ok(Self::Pgm),
            other => Err(Error::Config(format!("unknown attack kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackConfig<T> {
    Semidev { kappa_adv: T },
    Pgm { eps_adv: T, tau_adv: T, iters: usize },
}

impl<T: Scalar> AttackConfig<T> {
    pub fn semidev(kappa_adv: T) -> Result<Self> {
        if !(kappa_adv >= T::zero() && kappa_adv.is_finite()) {
            return Err(Error::Config(format!("kappa_adv must be >= 0, got {kappa_adv}")));
        }
        Ok(Self::Semidev { kappa_adv })
    }

    /// `iters = 0` is allowed and leaves points unchanged.
    pub fn pgm(eps_adv: T, tau_adv: T, iters: usize) -> Result<Self> {
        if !(eps_adv > T::zero() && eps_adv.is_finite()) || !(tau_adv > T::zero() && tau_adv.is_finite()) {
            return Err(Error::Config(format!(
                "eps_adv and tau_adv must be positive, got {eps_adv} and {tau_adv}"
            )));
        }
        Ok(Self::Pgm {
            eps_adv,
            tau_adv,
            iters,
        })
    }

    pub fn kind(&self) -> AttackKind {
        match self {
            Self::Semidev { .. } => AttackKind::Semidev,
            Self::Pgm { .. } => AttackKind::Pgm,
        }
    }
}

/// `l_bar + kappa_adv * max(0, l_i - l_bar)` per test point.
pub fn semidev_attack_losses<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    ds: &Dataset<T>,
    kappa_adv: T,
) -> Result<Vec<T>> {
    let losses = spec.losses(x, ds)?;
    Ok(semidev_transform(&losses, kappa_adv))
}

/// The semideviation attack applied to raw losses.
pub fn semidev_transform<T: Scalar>(losses: &[T], kappa_adv: T) -> Vec<T> {
    if losses.is_empty() {
        return Vec::new();
    }
    let mean = losses.iter().copied().sum::<T>() / T::from_usize_lossy(losses.len());
    losses
        .iter()
        .map(|&l| mean + kappa_adv * (l - mean).max(T::zero()))
        .collect()
}

/// Projected ascent on the loss over the feature vector. Each step moves
/// `tau_adv * eps_adv` along the normalised feature gradient and is then
/// projected onto the `eps_adv` ball around the iterate it started from.
pub fn pgm_attack_point<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    d: &DataPoint<T>,
    eps_adv: T,
    tau_adv: T,
    iters: usize,
) -> Result<DataPoint<T>> {
    let mut a = d.features.clone();
    for _ in 0..iters {
        let probe = DataPoint {
            features: a.clone(),
            target: d.target,
        };
        let g = spec.feature_gradient(x, &probe)?;
        let gn = norm(&g);
        if !(gn > T::zero()) || !gn.is_finite() {
            break;
        }
        let mut scale = tau_adv * eps_adv / gn;
        let step = scale * gn;
        if step > eps_adv {
            scale = scale * eps_adv / step;
        }
        for (ai, &gi) in a.iter_mut().zip(&g) {
            *ai += scale * gi;
        }
    }
    DataPoint::new(a, d.target)
}

/// Per-point losses under `cfg`, in dataset order.
pub fn attacked_losses<T: Scalar>(
    spec: &LossSpec<T>,
    x: &[T],
    ds: &Dataset<T>,
    cfg: &AttackConfig<T>,
) -> Result<Vec<T>> {
    match *cfg {
        AttackConfig::Semidev { kappa_adv } => semidev_attack_losses(spec, x, ds, kappa_adv),
        AttackConfig::Pgm {
            eps_adv,
            tau_adv,
            iters,
        } => ds
            .iter()
            .map(|d| spec.value(x, &pgm_attack_point(spec, x, d, eps_adv, tau_adv, iters)?))
            .collect(),
    }
}

/// Histogram over `ln(max(loss, floor))`. `edges` has `counts.len() + 1`
/// entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `bin_lo,bin_hi,count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

/// `bins` equal-width bins over the log-losses. A zero-width range is
/// widened to `[lo, lo + 1]`; with no losses the range is
/// `[ln floor, ln floor + 1]`. Infinite losses fall in the last bin.
pub fn loss_histogram<T: Scalar>(losses: &[T], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let floor = LOG_FLOOR;
    let logs: Vec<f64> = losses
        .iter()
        .map(|l| {
            let v = l.as_f64();
            if v.is_nan() {
                floor.ln()
            } else {
                v.max(floor).ln()
            }
        })
        .collect();
    let finite = logs.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if !lo.is_finite() {
        (floor.ln(), floor.ln() + 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    };
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    let mut counts = vec![0usize; bins];
    for v in logs {
        let i = if v.is_finite() {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            bins - 1
        };
        counts[i] += 1;
    }
    Histogram { edges, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BaseLoss, Penalty};
    use crate::risk::{mean_semideviation, FiniteDistribution, RiskParams};
    use crate::vector::distance;

    #[test]
    fn semidev_examples() {
        assert_eq!(semidev_transform(&[0.0, 2.0], 1.0), vec![1.0, 2.0]);
        assert_eq!(semidev_transform(&[0.0, 2.0, 7.0], 0.0), vec![3.0; 3]);
        let l = [0.3, 1.2, 5.0, 0.1];
        let mean = semidev_transform(&l, 0.6).iter().sum::<f64>() / 4.0;
        let d = FiniteDistribution::uniform(l.to_vec()).unwrap();
        let rho = mean_semideviation(&d, RiskParams::new(0.6).unwrap());
        assert!((mean - rho).abs() < 1e-15);
    }

    #[test]
    fn pgm_zero_iterations_and_zero_gradient() {
        let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
        let d = DataPoint::new(vec![1.0, -2.0], 0.5).unwrap();
        assert_eq!(pgm_attack_point(&spec, &[1.0, 1.0], &d, 0.1, 1.0, 0).unwrap(), d);
        assert_eq!(pgm_attack_point(&spec, &[0.0, 0.0], &d, 0.1, 1.0, 5).unwrap(), d);
    }

    #[test]
    fn pgm_raises_mad_loss_and_stays_in_reach() {
        let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
        let x = [0.5, -1.0];
        let d = DataPoint::new(vec![1.0, 1.0], 0.0).unwrap();
        let adv = pgm_attack_point(&spec, &x, &d, 0.2, 2.0, 4).unwrap();
        assert!(spec.value(&x, &adv).unwrap() > spec.value(&x, &d).unwrap());
        let moved: f64 = distance(&adv.features, &d.features);
        assert!((moved - 0.8).abs() < 1e-12, "{moved}");
        let small = pgm_attack_point(&spec, &x, &d, 0.2, 0.5, 4).unwrap();
        assert!((distance::<f64>(&small.features, &d.features) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn histogram_rules() {
        let h = loss_histogram(&[2.0, 2.0, 2.0], 4);
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.total(), 3);
        assert_eq!(h.edges.len(), 5);
        let h = loss_histogram::<f64>(&[], 3);
        assert_eq!(h.total(), 0);
        assert_eq!(h.edges[0], LOG_FLOOR.ln());
        assert_eq!(*h.edges.last().unwrap(), LOG_FLOOR.ln() + 1.0);
        let h = loss_histogram(&[0.0, 1.0, 10.0, 100.0, f64::INFINITY], 3);
        assert_eq!(h.total(), 5);
        assert_eq!(h.edges[0], LOG_FLOOR.ln());
        assert_eq!(h.counts, vec![1, 0, 4]);
        assert!(h.to_csv().starts_with("bin_lo,bin_hi,count\n"));
    }

    #[test]
    fn config_validation() {
        assert!(AttackConfig::semidev(-0.1).is_err());
        assert!(AttackConfig::pgm(0.0, 1.0, 3).is_err());
        assert!(AttackConfig::pgm(0.1, 1.0, 0).is_ok());
        assert_eq!("pgm".parse::<AttackKind>().unwrap(), AttackKind::Pgm);
        assert!("fgsm".parse::<AttackKind>().is_err());
    }
}
