use proptest::prelude::*;
use semidev::risk::{
    composite_objective, composite_value_and_subgradient, dual_value_oracle, mean_semideviation,
    worst_case_distortion,
};
use semidev::{
    BaseLoss, BoxConstraint, DataPoint, Dataset, FeasibleSet, FiniteDistribution, LossSpec, ParameterVector,
    Penalty, PenaltyKind, PenaltyParams, RiskParams,
};

fn distribution() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=10).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(0.01f64..1.0, n),
        )
            .prop_map(|(v, raw)| {
                let s: f64 = raw.iter().sum();
                (v, raw.iter().map(|r| r / s).collect())
            })
    })
}

fn dist(v: Vec<f64>, p: &[f64]) -> FiniteDistribution<f64> {
    let s: f64 = p.iter().sum();
    FiniteDistribution::new(v, p.iter().map(|x| x / s).collect()).unwrap()
}

fn rho(v: &[f64], p: &[f64], kappa: f64) -> f64 {
    mean_semideviation(&dist(v.to_vec(), p), RiskParams::new(kappa).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn primal_equals_dual((v, p) in distribution(), kappa in 0.0f64..=1.0) {
        let d = dist(v.clone(), &p);
        let rp = RiskParams::new(kappa).unwrap();
        let primal = mean_semideviation(&d, rp);
        prop_assert!((primal - dual_value_oracle(&d, rp).unwrap()).abs() <= 1e-10);
        // The maximising density reproduces the value.
        let xi = worst_case_distortion(&d, rp).unwrap();
        let via: f64 = v.iter().zip(&p).zip(&xi).map(|((z, q), w)| z * q * w).sum();
        prop_assert!((primal - via).abs() <= 1e-10);
    }

    #[test]
    fn coherent((v, p) in distribution(), kappa in 0.0f64..=1.0, c in -5.0f64..5.0, t in 0.0f64..4.0) {
        let base = rho(&v, &p, kappa);
        let shifted: Vec<f64> = v.iter().map(|z| z + c).collect();
        prop_assert!((rho(&shifted, &p, kappa) - base - c).abs() <= 1e-10);
        let scaled: Vec<f64> = v.iter().map(|z| z * t).collect();
        prop_assert!((rho(&scaled, &p, kappa) - t * base).abs() <= 1e-10);
        let mean: f64 = v.iter().zip(&p).map(|(z, q)| z * q).sum::<f64>() / p.iter().sum::<f64>();
        prop_assert!(base >= mean - 1e-10);
    }

    #[test]
    fn monotone_and_subadditive((v, p) in distribution(), kappa in 0.0f64..=1.0, seed in any::<u64>()) {
        let bump: Vec<f64> = (0..v.len()).map(|i| ((seed >> (i % 60)) & 7) as f64 * 0.3).collect();
        let w: Vec<f64> = v.iter().zip(&bump).map(|(z, b)| z + b).collect();
        prop_assert!(rho(&v, &p, kappa) <= rho(&w, &p, kappa) + 1e-10);
        let other: Vec<f64> = v.iter().zip(&bump).map(|(z, b)| b - z * 0.5).collect();
        let sum: Vec<f64> = v.iter().zip(&other).map(|(a, b)| a + b).collect();
        prop_assert!(rho(&sum, &p, kappa) <= rho(&v, &p, kappa) + rho(&other, &p, kappa) + 1e-10);
    }

    #[test]
    fn penalty_weak_convexity(
        x in prop::collection::vec(-4.0f64..4.0, 3),
        y in prop::collection::vec(-4.0f64..4.0, 3),
        lambda in 0.05f64..1.5,
        gamma in 2.2f64..6.0,
        mcp in any::<bool>(),
    ) {
        let kind = if mcp { PenaltyKind::Mcp } else { PenaltyKind::Scad };
        let p = Penalty::new(kind, PenaltyParams::new(lambda, gamma)).unwrap();
        let g = p.subgradient(&x);
        let lin: f64 = g.iter().zip(x.iter().zip(&y)).map(|(gi, (a, b))| gi * (b - a)).sum();
        let sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        prop_assert!(p.value(&y) >= p.value(&x) + lin - p.modulus() / 2.0 * sq - 1e-12);
    }

    #[test]
    fn composite_weak_convexity(
        x in prop::collection::vec(-2.0f64..2.0, 2),
        y in prop::collection::vec(-2.0f64..2.0, 2),
        kappa in 0.0f64..=1.0,
    ) {
        let ds = Dataset::new(vec![
            DataPoint::new(vec![1.0, 0.5], 0.3).unwrap(),
            DataPoint::new(vec![-0.4, 1.0], -1.0).unwrap(),
            DataPoint::new(vec![0.2, -0.7], 2.0).unwrap(),
            DataPoint::new(vec![0.9, 0.9], 0.0).unwrap(),
        ]).unwrap();
        let spec = LossSpec::new(
            BaseLoss::Mad,
            Penalty::new(PenaltyKind::Scad, PenaltyParams::new(0.3, 3.0)).unwrap(),
        );
        let rp = RiskParams::new(kappa).unwrap();
        let (fx, g) = composite_value_and_subgradient(&spec, &x, &ds, rp).unwrap();
        prop_assert!((fx - composite_objective(&spec, &x, &ds, rp).unwrap()).abs() <= 1e-12);
        let fy = composite_objective(&spec, &y, &ds, rp).unwrap();
        let lin: f64 = g.iter().zip(x.iter().zip(&y)).map(|(gi, (a, b))| gi * (b - a)).sum();
        let sq: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        let modulus = (1.0 + 2.0 * kappa) * spec.weak_convexity_modulus();
        prop_assert!(fy >= fx + lin - modulus / 2.0 * sq - 1e-12);
    }

    #[test]
    fn projection_is_idempotent(x in prop::collection::vec(-20.0f64..20.0, 4), w in 0.0f64..5.0) {
        let b = BoxConstraint::symmetric(4, w).unwrap();
        let p = b.project(&ParameterVector::new(x)).unwrap();
        prop_assert!(b.contains(&p));
        prop_assert_eq!(b.project(&p).unwrap(), p);
    }

    #[test]
    fn calibrated_lipschitz_holds(
        x in prop::collection::vec(-3.0f64..3.0, 3),
        y in prop::collection::vec(-3.0f64..3.0, 3),
        which in 0usize..3,
    ) {
        let base = [BaseLoss::Mad, BaseLoss::LeastSquares, BaseLoss::Logistic][which];
        let pts: Vec<DataPoint<f64>> = (0..6)
            .map(|i| {
                let t = i as f64;
                let target = if base == BaseLoss::Logistic { if i % 2 == 0 { 1.0 } else { -1.0 } } else { t - 2.5 };
                DataPoint::new(vec![(t * 0.7).sin(), (t * 1.3).cos(), 0.2 * t - 0.5], target).unwrap()
            })
            .collect();
        let ds = Dataset::new(pts).unwrap();
        let b = BoxConstraint::symmetric(3, 3.0).unwrap();
        let spec = LossSpec::calibrated(base, Penalty::new(PenaltyKind::Mcp, PenaltyParams::new(0.2, 3.0)).unwrap(), &ds, &b).unwrap();
        let l = spec.lipschitz().unwrap();
        let dist = x.iter().zip(&y).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        for d in &ds {
            let diff = (spec.value(&x, d).unwrap() - spec.value(&y, d).unwrap()).abs();
            prop_assert!(diff <= l * dist + 1e-12);
        }
    }
}
