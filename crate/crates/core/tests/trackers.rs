use semidev::risk::inner_value;
use semidev::scs::{self, ScsConfig};
use semidev::spider::{self, SpiderConfig, SpiderParams};
use semidev::stationarity::{moreau_gradient, MoreauProbe};
use semidev::trace::TraceOptions;
use semidev::{BaseLoss, BoxConstraint, DataPoint, Dataset, LossSpec, Penalty, RiskParams, RngStream};

fn data(n: usize, seed: u64) -> Dataset<f64> {
    let mut rng = RngStream::new(seed);
    let pts = (0..n)
        .map(|_| {
            let a: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let mut e: f64 = rng.standard_normal();
            if rng.bernoulli(0.1) {
                e *= 8.0;
            }
            DataPoint::new(a.clone(), a[0] + a[1] - a[2] + 0.5 * e).unwrap()
        })
        .collect();
    Dataset::new(pts).unwrap()
}

fn rows(every: usize) -> TraceOptions {
    TraceOptions {
        every,
        checkpoint_every: 0,
    }
}

fn frozen_at(x: [f64; 3]) -> BoxConstraint<f64> {
    BoxConstraint::new(x.to_vec(), x.to_vec()).unwrap()
}

#[test]
fn scs_tracker_settles_when_x_is_frozen() {
    let ds = data(400, 1);
    let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
    let x = [0.3, -0.2, 0.1];
    let h = inner_value(&spec, &x, &ds).unwrap();
    let losses = spec.losses(&x, &ds).unwrap();
    let sd = (losses.iter().map(|l| (l - h).powi(2)).sum::<f64>() / losses.len() as f64).sqrt();
    let tau = 0.01;
    let mut c = ScsConfig::new(tau, 20_000, RiskParams::new(0.5).unwrap(), frozen_at(x), 4);
    c.trace = rows(1);
    let (t, _) = scs::run(&c, &spec, &ds, &RngStream::new(4)).unwrap();
    assert!(t.rows.iter().all(|r| r.h == h));
    let tail: Vec<f64> = t.rows[10_000..].iter().map(|r| r.u - h).collect();
    let bias = tail.iter().sum::<f64>() / tail.len() as f64;
    let spread = (tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64).sqrt();
    // An exponential average with weight tau has stationary sd near
    // sd * sqrt(tau / 2).
    let expected = sd * (tau / 2.0).sqrt();
    assert!(
        spread < 2.0 * expected && spread > 0.5 * expected,
        "{spread} vs {expected}"
    );
    assert!(bias.abs() < 0.5 * expected, "{bias}");
}

#[test]
fn spider_tracker_is_unbiased_across_an_epoch() {
    let ds = data(300, 2);
    let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
    let b = BoxConstraint::symmetric(3, 4.0).unwrap();
    let params = SpiderParams::new(10, 32, 4).unwrap();
    let reps = 300;
    let mut errs: Vec<Vec<f64>> = (0..10).map(|_| Vec::with_capacity(reps)).collect();
    for s in 0..reps as u64 {
        let mut c = SpiderConfig::new(0.05, 10, params, RiskParams::new(0.5).unwrap(), b.clone(), s);
        c.trace = rows(1);
        let (t, _) = spider::run(&c, &spec, &ds, &RngStream::new(s)).unwrap();
        for r in &t.rows {
            errs[r.k].push(r.u - r.h);
        }
    }
    for (k, e) in errs.iter().enumerate() {
        let m = e.iter().sum::<f64>() / e.len() as f64;
        let sd = (e.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (e.len() - 1) as f64).sqrt();
        assert!(
            m.abs() <= 4.0 * sd / (e.len() as f64).sqrt(),
            "k={k}: mean {m}, sd {sd}"
        );
    }
}

#[test]
fn spider_variance_grows_within_an_epoch_and_resets() {
    let ds = data(300, 3);
    let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
    let b = BoxConstraint::symmetric(3, 4.0).unwrap();
    let params = SpiderParams::new(8, 16, 2).unwrap();
    let mut msq = [0.0; 16];
    let reps = 200;
    for s in 0..reps {
        let mut c = SpiderConfig::new(0.2, 16, params, RiskParams::new(0.5).unwrap(), b.clone(), s);
        c.trace = rows(1);
        let (t, _) = spider::run(&c, &spec, &ds, &RngStream::new(s)).unwrap();
        for r in &t.rows {
            msq[r.k] += (r.u - r.h).powi(2) / reps as f64;
        }
    }
    assert!(msq[7] > msq[0], "{msq:?}");
    assert!(msq[8] < msq[7], "{msq:?}");
}

#[test]
fn probe_matches_quadratic_prox() {
    // l(x) = x^2 on a single point, so F = x^2 and prox(x) = x / (1 + 2 lambda).
    let ds = Dataset::new(vec![DataPoint::new(vec![1.0], 0.0).unwrap()]).unwrap();
    let spec = LossSpec::new(BaseLoss::LeastSquares, Penalty::none());
    let b = BoxConstraint::symmetric(1, 10.0).unwrap();
    for lambda in [0.1f64, 0.5, 2.0] {
        let probe = MoreauProbe::new(lambda, 0.0, 5000, 1e-14).unwrap();
        for x in [-4.0f64, 0.0, 1.5] {
            let r = moreau_gradient(&probe, &spec, &ds, RiskParams::new(0.3).unwrap(), &b, &[x]).unwrap();
            let p = x / (1.0 + 2.0 * lambda);
            assert!(
                (r.x_hat[0] - p).abs() < 1e-6,
                "lambda {lambda} x {x}: {}",
                r.x_hat[0]
            );
            assert!((r.grad_norm - 2.0 * p.abs()).abs() < 1e-5);
        }
    }
}

#[test]
fn probe_respects_the_box() {
    // |y| over [-1, 1] at x = 5 with lambda = 1: the unconstrained prox 4 is
    // clipped to the bound.
    let ds = Dataset::new(vec![DataPoint::new(vec![1.0], 0.0).unwrap()]).unwrap();
    let spec = LossSpec::new(BaseLoss::Mad, Penalty::none());
    let b = BoxConstraint::symmetric(1, 1.0).unwrap();
    let probe = MoreauProbe::new(1.0, 0.0, 1000, 1e-12).unwrap();
    let r = moreau_gradient(&probe, &spec, &ds, RiskParams::new(0.0).unwrap(), &b, &[5.0f64]).unwrap();
    assert!((r.x_hat[0] - 1.0).abs() < 1e-8);
    assert!((r.grad_norm - 4.0).abs() < 1e-8);
}
