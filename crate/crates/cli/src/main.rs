use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semidev::rng::streams;
use semidev::robusteval::{AttackConfig, AttackKind};
use semidev_cli::experiment::{self, probes_csv, Problem};
use semidev_cli::io::{parse_checkpoints, parse_weights, read_text, write_atomic};
use semidev_cli::{CliError, ExperimentConfig, Settings, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "semidev",
    version,
    about = "Mean-semideviation training, probing and attacks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a linear model and write weights, trace and summary.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Moreau-envelope gradient norms at saved weights or checkpoints.
    ProbeStationarity {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, conflicts_with = "checkpoints", required_unless_present = "checkpoints")]
        weights: Option<PathBuf>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Envelope parameter; defaults to 1 / rho_bar.
        #[arg(long)]
        probe_lambda: Option<f64>,
        /// Output file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Losses of saved weights on test data, clean and attacked.
    Attack {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        weights: PathBuf,
        /// semidev or pgm.
        #[arg(long, default_value = "semidev")]
        kind: String,
        #[arg(long, default_value_t = 1.0)]
        kappa_adv: f64,
        #[arg(long, default_value_t = 0.1)]
        eps_adv: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_adv: f64,
        #[arg(long, default_value_t = 10)]
        adv_iters: usize,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the primal and dual risk values on random distributions.
    CheckOracle {
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        max_support: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Plot-ready tables from traces, summaries and attack outputs.
    Report {
        #[arg(long = "trace")]
        traces: Vec<PathBuf>,
        #[arg(long = "summary")]
        summaries: Vec<PathBuf>,
        #[arg(long = "losses")]
        losses: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Directory for one file per table; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset as CSV.
    GenData {
        #[arg(long)]
        synthetic: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw the test split instead of the training split.
        #[arg(long)]
        test: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Experiment settings; every flag overrides the same key in `--config`.
#[derive(Args)]
struct RunArgs {
    /// `key = value` file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    penalty: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, conflicts_with = "tau_auto")]
    tau: Option<f64>,
    /// tau = c N^(-2/3), or c N^(-1/2) for scs-spider.
    #[arg(long, value_name = "C")]
    tau_auto: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// e.g. n=2000,d=10,noise=0.5,frac=0.1,mult=10
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long = "box", value_name = "W")]
    box_width: Option<f64>,
    #[arg(long, conflicts_with = "spider")]
    spider_auto: bool,
    /// T,B,b
    #[arg(long)]
    spider: Option<String>,
    #[arg(long)]
    trace_thin: Option<usize>,
    #[arg(long)]
    probe_every: Option<usize>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(p) => Settings::parse(&read_text(p)?)
                .map_err(|e| CliError::Usage(format!("{}: {}", p.display(), strip(&e))))?,
            None => Settings::default(),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                s.set(k, v);
            }
        };
        set("algo", self.algo.clone());
        set("loss", self.loss.clone());
        set("penalty", self.penalty.clone());
        set("lambda", self.lambda.map(|v| v.to_string()));
        set("gamma", self.gamma.map(|v| v.to_string()));
        set("kappa", self.kappa.map(|v| v.to_string()));
        set("tau", self.tau.map(|v| v.to_string()));
        set("tau-auto", self.tau_auto.map(|v| v.to_string()));
        set("iters", self.iters.map(|v| v.to_string()));
        set("seed", self.seed.map(|v| v.to_string()));
        set("data", self.data.as_ref().map(|p| p.display().to_string()));
        set("synthetic", self.synthetic.clone());
        set("box", self.box_width.map(|v| v.to_string()));
        set("spider-auto", self.spider_auto.then(|| "true".to_string()));
        set("spider", self.spider.clone());
        set("trace-thin", self.trace_thin.map(|v| v.to_string()));
        set("probe-every", self.probe_every.map(|v| v.to_string()));
        Ok(s)
    }

    fn config(&self) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_settings(&self.settings()?)
    }
}

/// Drops the kind prefix from a nested diagnostic.
fn strip(e: &CliError) -> String {
    match e {
        CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m.clone(),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn problem_for(cfg: &ExperimentConfig, stream: u64) -> Result<Problem, CliError> {
    let ds = experiment::load_dataset(&cfg.data, cfg.seed, stream)?;
    experiment::build_problem(cfg, ds)
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Train { run, out } => {
            let cfg = run.config()?;
            experiment::train(&cfg)?.write(&out)
        }
        Command::ProbeStationarity {
            run,
            weights,
            checkpoints,
            probe_lambda,
            out,
        } => {
            let cfg = run.config()?;
            let problem = problem_for(&cfg, streams::DATA)?;
            let mut probe = problem.probe()?;
            if let Some(l) = probe_lambda {
                probe = semidev::stationarity::MoreauProbe::new(
                    l,
                    probe.rho(),
                    probe.budget(),
                    probe.tolerance(),
                )?;
            }
            let points = match (weights, checkpoints) {
                (Some(w), _) => vec![(0, parse_weights(&read_text(&w)?)?)],
                (None, Some(c)) => parse_checkpoints(&read_text(&c)?)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let rows = experiment::probe_points(&problem, &probe, &points)?;
            emit(out.as_deref(), &probes_csv(&rows))
        }
        Command::Attack {
            run,
            weights,
            kind,
            kappa_adv,
            eps_adv,
            tau_adv,
            adv_iters,
            bins,
            out,
        } => {
            let cfg = run.config()?;
            let problem = problem_for(&cfg, streams::TEST_DATA)?;
            let x = parse_weights(&read_text(&weights)?)?;
            let acfg = match kind.parse::<AttackKind>()? {
                AttackKind::Semidev => AttackConfig::semidev(kappa_adv)?,
                AttackKind::Pgm => AttackConfig::pgm(eps_adv, tau_adv, adv_iters)?,
            };
            let res = experiment::attack(&problem.spec, &x, &problem.ds, &acfg, bins)?;
            emit(out.as_deref(), &res.to_csv())
        }
        Command::CheckOracle {
            trials,
            seed,
            max_support,
            tol,
        } => {
            let worst = experiment::check_oracle(trials, seed, max_support)?;
            println!("trials,max_abs_diff\n{trials},{worst:e}");
            if worst > tol {
                return Err(CliError::Numeric(format!(
                    "primal and dual values differ by {worst:e} > {tol:e}"
                )));
            }
            Ok(())
        }
        Command::Report {
            traces,
            summaries,
            losses,
            thin,
            bins,
            out,
        } => {
            let named = |paths: &[PathBuf]| -> Result<Vec<(String, String)>, CliError> {
                paths
                    .iter()
                    .map(|p| Ok((p.display().to_string(), read_text(p)?)))
                    .collect()
            };
            let summaries = summaries
                .iter()
                .map(|p| read_text(p))
                .collect::<Result<Vec<_>, _>>()?;
            let t = experiment::report(&named(&traces)?, &summaries, &named(&losses)?, thin, bins)?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    write_atomic(&dir.join("objective.csv"), &t.objective)?;
                    write_atomic(&dir.join("tracking.csv"), &t.tracking)?;
                    write_atomic(&dir.join("grad_norm.csv"), &t.grad_norm)?;
                    write_atomic(&dir.join("histogram.csv"), &t.histogram)
                }
                None => emit(None, &t.render()),
            }
        }
        Command::GenData {
            synthetic,
            seed,
            test,
            out,
        } => {
            let spec: SyntheticSpec = synthetic
                .parse()
                .map_err(|e: semidev::Error| CliError::Usage(e.to_string()))?;
            let text = if test {
                let source = semidev_cli::DataSource::Synthetic(spec);
                experiment::load_dataset(&source, seed, streams::TEST_DATA)?.to_csv()
            } else {
                experiment::gen_data(&spec, seed)?
            };
            write_atomic(&out, &text)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("usage error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
