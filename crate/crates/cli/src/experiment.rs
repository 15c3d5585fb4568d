//! Run orchestration behind the subcommands.

use std::path::Path;

use semidev::rng::{streams, RngStream};
use semidev::robusteval::{attacked_losses, loss_histogram, AttackConfig, Histogram};
use semidev::spider::{self, SpiderConfig, SpiderParams};
use semidev::stationarity::{moreau_gradient, MoreauProbe};
use semidev::trace::{parse_trace, RunTrace, TraceOptions, TraceRow};
use semidev::{baseline, risk, scs};
use semidev::{
    BoxConstraint, Dataset, FiniteDistribution, LossSpec, ParameterVector, Penalty, PenaltyKind,
    PenaltyParams, RiskParams,
};

use crate::config::{Algorithm, DataSource, ExperimentConfig, SpiderSchedule};
use crate::error::CliError;
use crate::io::{format_weights, write_atomic};
use crate::synthetic::generate_synthetic;

/// Pilot draws for SPIDER constant estimation.
pub const SPIDER_PILOT: usize = 256;
/// Largest restart batch the automatic schedule may request.
pub const MAX_AUTO_BATCH: usize = 10_000_000;

/// Everything a run needs besides the algorithm settings.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: LossSpec<f64>,
    pub ds: Dataset<f64>,
    pub feasible: BoxConstraint<f64>,
    pub risk: RiskParams<f64>,
}

impl Problem {
    /// Moreau probe at `lambda = 1 / rho_bar` for this objective.
    pub fn probe(&self) -> Result<MoreauProbe<f64>, CliError> {
        Ok(MoreauProbe::for_problem(
            self.risk.kappa(),
            self.spec.weak_convexity_modulus(),
        )?)
    }
}

/// Training data (`streams::DATA`) or test data (`streams::TEST_DATA`) for a
/// synthetic source; a file source is read as is.
pub fn load_dataset(source: &DataSource, seed: u64, stream: u64) -> Result<Dataset<f64>, CliError> {
    match source {
        DataSource::File(p) => Dataset::load_csv(p).map_err(|e| CliError::Data(e.to_string())),
        DataSource::Synthetic(s) => Ok(generate_synthetic(
            s,
            &mut RngStream::new(seed).substream(stream),
        )?),
    }
}

pub fn penalty(cfg: &ExperimentConfig) -> Result<Penalty<f64>, CliError> {
    Ok(match cfg.penalty {
        PenaltyKind::None => Penalty::none(),
        kind => Penalty::new(kind, PenaltyParams::new(cfg.lambda, cfg.gamma))?,
    })
}

pub fn build_problem(cfg: &ExperimentConfig, ds: Dataset<f64>) -> Result<Problem, CliError> {
    let feasible = BoxConstraint::symmetric(ds.dim(), cfg.box_width)?;
    let spec = LossSpec::calibrated(cfg.loss, penalty(cfg)?, &ds, &feasible)?;
    Ok(Problem {
        spec,
        ds,
        feasible,
        risk: RiskParams::new(cfg.kappa)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub k: usize,
    pub grad_norm: f64,
    pub phi_lambda: f64,
}

pub fn probe_points(
    problem: &Problem,
    probe: &MoreauProbe<f64>,
    points: &[(usize, ParameterVector<f64>)],
) -> Result<Vec<ProbeRow>, CliError> {
    points
        .iter()
        .map(|(k, x)| {
            let r = moreau_gradient(
                probe,
                &problem.spec,
                &problem.ds,
                problem.risk,
                &problem.feasible,
                x,
            )?;
            Ok(ProbeRow {
                k: *k,
                grad_norm: r.grad_norm,
                phi_lambda: r.envelope,
            })
        })
        .collect()
}

pub fn probes_csv(rows: &[ProbeRow]) -> String {
    let mut out = String::from("k,grad_norm,phi_lambda\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.k, r.grad_norm, r.phi_lambda));
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub algo: Algorithm,
    pub iters: usize,
    pub seed: u64,
    pub tau: f64,
    pub weights: ParameterVector<f64>,
    pub trace: RunTrace<f64>,
    pub spider: Option<SpiderParams>,
    /// Full-batch `F(x^R)`.
    pub objective: f64,
    pub probes: Vec<ProbeRow>,
    /// Moreau-gradient norm at `x^R`, when probing.
    pub output_grad_norm: Option<f64>,
}

impl TrainOutput {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "algo = {}\niters = {}\nseed = {}\ntau = {}\noutput_index = {}\nobjective = {}\n",
            self.algo.name(),
            self.iters,
            self.seed,
            self.tau,
            self.trace.output_index,
            self.objective
        );
        if let Some(p) = self.spider {
            s.push_str(&format!(
                "spider = {},{},{}\n",
                p.epoch, p.big_batch, p.small_batch
            ));
        }
        if let Some(g) = self.output_grad_norm {
            s.push_str(&format!("grad_norm = {g}\n"));
        }
        if !self.probes.is_empty() {
            let m =
                self.probes.iter().map(|r| r.grad_norm * r.grad_norm).sum::<f64>() / self.probes.len() as f64;
            s.push_str(&format!("mean_sq_grad_norm = {m}\n"));
        }
        s
    }

    /// Writes `weights.txt`, `trace.csv`, `summary.txt`, and with probing
    /// `checkpoints.csv` and `probes.csv`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        write_atomic(&dir.join("weights.txt"), &format_weights(&self.weights))?;
        write_atomic(&dir.join("trace.csv"), &self.trace.to_csv())?;
        write_atomic(&dir.join("summary.txt"), &self.summary())?;
        if !self.trace.checkpoints.is_empty() {
            write_atomic(&dir.join("checkpoints.csv"), &self.trace.checkpoints_csv())?;
            write_atomic(&dir.join("probes.csv"), &probes_csv(&self.probes))?;
        }
        Ok(())
    }
}

pub fn train(cfg: &ExperimentConfig) -> Result<TrainOutput, CliError> {
    let ds = load_dataset(&cfg.data, cfg.seed, streams::DATA)?;
    let problem = build_problem(cfg, ds)?;
    train_on(cfg, &problem)
}

/// Trains on an already built problem.
pub fn train_on(cfg: &ExperimentConfig, problem: &Problem) -> Result<TrainOutput, CliError> {
    cfg.validate()?;
    let tau = cfg.tau();
    let rng = RngStream::new(cfg.seed);
    let trace_opts = TraceOptions {
        every: cfg.trace_thin,
        checkpoint_every: cfg.probe_every,
    };
    let Problem {
        spec,
        ds,
        feasible,
        risk,
    } = problem;
    let mut spider_params = None;
    let (trace, weights) = match cfg.algo {
        Algorithm::Scs => {
            let mut c = scs::ScsConfig::new(tau, cfg.iters, *risk, feasible.clone(), cfg.seed);
            c.trace = trace_opts;
            scs::run(&c, spec, ds, &rng)?
        }
        Algorithm::ScsSpider => {
            let params = match cfg.spider.unwrap_or(SpiderSchedule::Auto) {
                SpiderSchedule::Manual(p) => p,
                SpiderSchedule::Auto => auto_schedule(problem, tau, &rng)?,
            };
            spider_params = Some(params);
            let mut c = SpiderConfig::new(tau, cfg.iters, params, *risk, feasible.clone(), cfg.seed);
            c.trace = trace_opts;
            spider::run(&c, spec, ds, &rng)?
        }
        Algorithm::Sgd => {
            let c = baseline::SubgradientConfig {
                tau,
                iters: cfg.iters,
                feasible: feasible.clone(),
                x0: None,
            };
            let (path, out) = baseline::projected_subgradient(&c, spec, ds, &rng)?;
            let r = rng.substream(streams::OUTPUT).index(cfg.iters);
            (sgd_trace(problem, &path, trace_opts, r)?, out)
        }
    };
    let objective = risk::composite_objective(spec, &weights, ds, *risk)?;
    let (probes, output_grad_norm) = if cfg.probe_every > 0 {
        let probe = problem.probe()?;
        let rows = probe_points(problem, &probe, &trace.checkpoints)?;
        let at_r = probe_points(problem, &probe, &[(trace.output_index, weights.clone())])?;
        (rows, Some(at_r[0].grad_norm))
    } else {
        (Vec::new(), None)
    };
    Ok(TrainOutput {
        algo: cfg.algo,
        iters: cfg.iters,
        seed: cfg.seed,
        tau,
        weights,
        trace,
        spider: spider_params,
        objective,
        probes,
        output_grad_norm,
    })
}

/// SPIDER schedule from pilot estimates at the starting point.
pub fn auto_schedule(problem: &Problem, tau: f64, rng: &RngStream) -> Result<SpiderParams, CliError> {
    let x0 = ParameterVector::zeros(problem.ds.dim());
    let est = spider::estimate_constants(
        &problem.spec,
        &problem.ds,
        &problem.feasible,
        problem.risk,
        &x0,
        rng,
        SPIDER_PILOT,
    )?;
    let p = spider::auto_params(est.sigma, est.lipschitz, est.m, tau)?;
    if p.big_batch > MAX_AUTO_BATCH {
        return Err(CliError::Usage(format!(
            "automatic SPIDER schedule asks for a restart batch of {}; raise tau or set --spider",
            p.big_batch
        )));
    }
    Ok(p)
}

fn sgd_trace(
    problem: &Problem,
    path: &[ParameterVector<f64>],
    opts: TraceOptions,
    r: usize,
) -> Result<RunTrace<f64>, CliError> {
    let mut trace = RunTrace {
        output_index: r,
        ..Default::default()
    };
    for k in 0..path.len() - 1 {
        let x = &path[k];
        if opts.records(k) {
            let h = risk::inner_value(&problem.spec, x, &problem.ds)?;
            trace.rows.push(TraceRow {
                k,
                f_hat: risk::composite_objective(&problem.spec, x, &problem.ds, problem.risk)?,
                u: h,
                h,
                step_norm: x.distance(&path[k + 1])?,
                epoch: None,
                batch_size: None,
            });
        }
        if opts.snapshots(k) {
            trace.checkpoints.push((k, x.clone()));
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutput {
    pub clean: Vec<f64>,
    pub attacked: Vec<f64>,
    pub hist_clean: Histogram,
    pub hist_attacked: Histogram,
}

impl AttackOutput {
    pub fn mean_clean(&self) -> f64 {
        self.clean.iter().sum::<f64>() / self.clean.len() as f64
    }

    pub fn mean_attacked(&self) -> f64 {
        self.attacked.iter().sum::<f64>() / self.attacked.len() as f64
    }

    /// Per-point table, histogram table and means, separated by blank lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,clean,attacked\n");
        for (i, (c, a)) in self.clean.iter().zip(&self.attacked).enumerate() {
            s.push_str(&format!("{i},{c},{a}\n"));
        }
        s.push_str("\nseries,bin_lo,bin_hi,count\n");
        for (name, h) in [("clean", &self.hist_clean), ("attacked", &self.hist_attacked)] {
            for (i, c) in h.counts.iter().enumerate() {
                s.push_str(&format!("{name},{},{},{c}\n", h.edges[i], h.edges[i + 1]));
            }
        }
        s.push_str(&format!(
            "\nstatistic,value\nmean_clean,{}\nmean_attacked,{}\n",
            self.mean_clean(),
            self.mean_attacked()
        ));
        s
    }
}

pub fn attack(
    spec: &LossSpec<f64>,
    x: &[f64],
    test: &Dataset<f64>,
    cfg: &AttackConfig<f64>,
    bins: usize,
) -> Result<AttackOutput, CliError> {
    let clean = spec.losses(x, test)?;
    let attacked = attacked_losses(spec, x, test, cfg)?;
    Ok(AttackOutput {
        hist_clean: loss_histogram(&clean, bins),
        hist_attacked: loss_histogram(&attacked, bins),
        clean,
        attacked,
    })
}

/// Largest primal-dual discrepancy over `trials` random distributions with
/// support up to `max_support`, for each `kappa` in `{0, 0.3, 0.7, 1}`.
pub fn check_oracle(trials: usize, seed: u64, max_support: usize) -> Result<f64, CliError> {
    if trials == 0 || max_support == 0 {
        return Err(CliError::Usage("trials and support must be positive".into()));
    }
    let mut rng = RngStream::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = 1 + rng.index(max_support);
        let values: Vec<f64> = (0..n).map(|_| rng.uniform(-10.0, 10.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.uniform(0.01, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs = raw.iter().map(|p| p / total).collect();
        let d = FiniteDistribution::new(values, probs)?;
        for kappa in [0.0, 0.3, 0.7, 1.0] {
            let rp = RiskParams::new(kappa)?;
            let diff = (risk::mean_semideviation(&d, rp) - risk::dual_value_oracle(&d, rp)?).abs();
            worst = worst.max(diff);
        }
    }
    Ok(worst)
}

/// Plot-ready tables from run artifacts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTables {
    pub objective: String,
    pub tracking: String,
    pub grad_norm: String,
    pub histogram: String,
}

impl ReportTables {
    pub fn render(&self) -> String {
        format!(
            "{}\n{}\n{}\n{}",
            self.objective, self.tracking, self.grad_norm, self.histogram
        )
    }
}

/// `traces` are `(name, text)` trace files, `summaries` are `summary.txt`
/// contents, `losses` are attack outputs. Every `thin`-th trace row is kept.
pub fn report(
    traces: &[(String, String)],
    summaries: &[String],
    losses: &[(String, String)],
    thin: usize,
    bins: usize,
) -> Result<ReportTables, CliError> {
    if thin == 0 {
        return Err(CliError::Usage("thin must be positive".into()));
    }
    let mut t = ReportTables {
        objective: "trace,k,F_hat\n".into(),
        tracking: "trace,k,track_err\n".into(),
        grad_norm: "N,runs,mean_sq_grad_norm\n".into(),
        histogram: "source,series,bin_lo,bin_hi,count\n".into(),
    };
    for (name, text) in traces {
        let rows = parse_trace(text).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        for r in rows.iter().step_by(thin) {
            t.objective.push_str(&format!("{name},{},{}\n", r.k, r.f_hat));
            t.tracking.push_str(&format!("{name},{},{}\n", r.k, r.track_err));
        }
    }
    let mut by_n: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for (i, s) in summaries.iter().enumerate() {
        let field = |key: &str| {
            s.lines()
                .filter_map(|l| l.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim().to_string())
        };
        let n: usize = field("iters")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Data(format!("summary {}: missing iters", i + 1)))?;
        if let Some(g) = field("mean_sq_grad_norm") {
            let g: f64 = g
                .parse()
                .map_err(|_| CliError::Data(format!("summary {}: bad mean_sq_grad_norm", i + 1)))?;
            by_n.entry(n).or_default().push(g);
        }
    }
    for (n, v) in by_n {
        t.grad_norm.push_str(&format!(
            "{n},{},{}\n",
            v.len(),
            v.iter().sum::<f64>() / v.len() as f64
        ));
    }
    for (name, text) in losses {
        let (clean, attacked) =
            parse_attack_table(text).map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        for (series, vals) in [("clean", clean), ("attacked", attacked)] {
            let h = loss_histogram(&vals, bins);
            for (i, c) in h.counts.iter().enumerate() {
                t.histogram.push_str(&format!(
                    "{name},{series},{},{},{c}\n",
                    h.edges[i],
                    h.edges[i + 1]
                ));
            }
        }
    }
    Ok(t)
}

/// Reads the per-point block of an attack output.
fn parse_attack_table(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "i,clean,attacked" => {}
        _ => return Err("line 1: expected header 'i,clean,attacked'".into()),
    }
    let (mut clean, mut attacked) = (Vec::new(), Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            break;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let parsed = match cols[..] {
            [_, c, a] => c.trim().parse::<f64>().ok().zip(a.trim().parse::<f64>().ok()),
            _ => None,
        };
        let (c, a) = parsed.ok_or_else(|| format!("line {}: malformed row", i + 1))?;
        clean.push(c);
        attacked.push(a);
    }
    Ok((clean, attacked))
}

/// Synthetic data as CSV, drawn from the training stream of `seed`.
pub fn gen_data(spec: &crate::synthetic::SyntheticSpec, seed: u64) -> Result<String, CliError> {
    let ds = generate_synthetic(spec, &mut RngStream::new(seed).substream(streams::DATA))?;
    Ok(ds.to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Settings;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_settings(&Settings::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn kappa_zero_scs_matches_sgd() {
        let base = "synthetic = n=200,d=3,noise=0.5\npenalty = lasso\nlambda = 0.01\niters = 300\nseed = 4\ntau = 0.02\n";
        let a = train(&cfg(&format!("{base}algo = scs\n"))).unwrap();
        let b = train(&cfg(&format!("{base}algo = sgd\n"))).unwrap();
        let c = train(&cfg(&format!("{base}algo = scs-spider\nspider = 3,8,2\n"))).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.weights, c.weights);
    }

    #[test]
    fn probing_fills_summary() {
        let o = train(&cfg(
            "synthetic = n=100,d=2\niters = 40\nprobe-every = 10\nkappa = 0.5\n",
        ))
        .unwrap();
        assert_eq!(o.probes.len(), 4);
        let s = o.summary();
        assert!(s.contains("grad_norm = ") && s.contains("mean_sq_grad_norm = "));
        let t = report(&[], &[s.clone(), s], &[], 1, 5).unwrap();
        assert!(t.grad_norm.contains("\n40,2,"));
    }

    #[test]
    fn empty_report_has_headers() {
        let t = report(&[("a".into(), String::new())], &[], &[], 1, 5).unwrap();
        assert_eq!(t.objective, "trace,k,F_hat\n");
        assert!(report(
            &[("a".into(), "k,F_hat,u,track_err,step_norm\n0,1\n".into())],
            &[],
            &[],
            1,
            5
        )
        .unwrap_err()
        .to_string()
        .contains("line 2"));
    }

    #[test]
    fn attack_tables_round_trip() {
        let c = cfg("synthetic = n=50,d=2,noise=1\n");
        let test = load_dataset(&c.data, 1, streams::TEST_DATA).unwrap();
        let spec = LossSpec::new(semidev::BaseLoss::Mad, Penalty::none());
        let out = attack(&spec, &[0.5, 0.5], &test, &AttackConfig::semidev(1.0).unwrap(), 8).unwrap();
        assert_eq!(out.hist_attacked.total(), 50);
        assert!(out.mean_attacked() >= out.mean_clean());
        let t = report(&[], &[], &[("x".into(), out.to_csv())], 1, 8).unwrap();
        let total: usize = t
            .histogram
            .lines()
            .skip(1)
            .filter(|l| l.contains(",clean,"))
            .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 50);
    }

    #[test]
    fn oracle_check() {
        assert!(check_oracle(50, 1, 8).unwrap() <= 1e-10);
    }
}
