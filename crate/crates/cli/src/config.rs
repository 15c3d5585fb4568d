//! Experiment configuration: a `key = value` file merged with command-line
//! flags, flags taking precedence.

use std::collections::BTreeMap;
use std::path::PathBuf;

use semidev::spider::SpiderParams;
use semidev::{BaseLoss, PenaltyKind};

use crate::error::CliError;
use crate::synthetic::SyntheticSpec;

/// Keys accepted in a config file; the same names as the long flags.
pub const KEYS: &[&str] = &[
    "algo",
    "loss",
    "penalty",
    "lambda",
    "gamma",
    "kappa",
    "tau",
    "tau-auto",
    "iters",
    "seed",
    "data",
    "synthetic",
    "box",
    "spider-auto",
    "spider",
    "trace-thin",
    "probe-every",
];

/// Keys that exclude each other; setting one from a flag drops the others.
const EXCLUSIVE: &[&[&str]] = &[
    &["tau", "tau-auto"],
    &["data", "synthetic"],
    &["spider", "spider-auto"],
];

/// Raw string settings in file order of precedence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    map: BTreeMap<String, String>,
}

impl Settings {
    /// Parses `key = value` lines. `#` starts a comment; blank lines are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected 'key = value'", i + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key '{k}'",
                    i + 1
                )));
            }
            map.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { map })
    }

    /// Sets `key` from a flag, overriding the file and any exclusive
    /// alternative.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        for group in EXCLUSIVE {
            if group.contains(&key) {
                for other in group.iter().filter(|o| **o != key) {
                    self.map.remove(*other);
                }
            }
        }
        self.map.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse_as<V: std::str::FromStr>(&self, key: &str) -> Result<Option<V>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<V>()
                    .map_err(|_| CliError::Usage(format!("invalid value '{v}' for {key}")))
            })
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Scs,
    ScsSpider,
    /// Plain projected stochastic subgradient on the mean loss.
    Sgd,
}

impl std::str::FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "scs" => Ok(Self::Scs),
            "scs-spider" | "spider" => Ok(Self::ScsSpider),
            "sgd" => Ok(Self::Sgd),
            _ => Err(CliError::Usage(format!("unknown algorithm '{s}'"))),
        }
    }
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Scs => "scs",
            Self::ScsSpider => "scs-spider",
            Self::Sgd => "sgd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `c N^{-2/3}`, or `c N^{-1/2}` for the SPIDER variant.
    Auto(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpiderSchedule {
    Auto,
    Manual(SpiderParams),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algo: Algorithm,
    pub loss: BaseLoss,
    pub penalty: PenaltyKind,
    pub lambda: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub step: StepSize,
    pub iters: usize,
    pub seed: u64,
    pub data: DataSource,
    pub box_width: f64,
    /// Only with [`Algorithm::ScsSpider`].
    pub spider: Option<SpiderSchedule>,
    pub trace_thin: usize,
    /// Probe the Moreau gradient every this many iterations; 0 disables.
    pub probe_every: usize,
}

impl ExperimentConfig {
    /// Defaults: `scs`, MAD, no penalty, `kappa = 0`, `tau-auto = 1`,
    /// 1000 iterations, box half-width 10, seed 0.
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let algo = s.parse_as::<Algorithm>("algo")?.unwrap_or(Algorithm::Scs);
        let loss = match s.get("loss") {
            Some(v) => v
                .parse::<BaseLoss>()
                .map_err(|e| CliError::Usage(e.to_string()))?,
            None => BaseLoss::Mad,
        };
        let penalty = match s.get("penalty") {
            Some(v) => v
                .parse::<PenaltyKind>()
                .map_err(|e| CliError::Usage(e.to_string()))?,
            None => PenaltyKind::None,
        };
        let step = match (s.parse_as::<f64>("tau")?, s.parse_as::<f64>("tau-auto")?) {
            (Some(_), Some(_)) => return Err(CliError::Usage("tau and tau-auto are exclusive".into())),
            (Some(t), None) => StepSize::Fixed(t),
            (None, Some(c)) => StepSize::Auto(c),
            (None, None) => StepSize::Auto(1.0),
        };
        let data = match (s.get("data"), s.get("synthetic")) {
            (Some(_), Some(_)) => return Err(CliError::Usage("data and synthetic are exclusive".into())),
            (Some(p), None) => DataSource::File(PathBuf::from(p)),
            (None, Some(spec)) => DataSource::Synthetic(
                spec.parse()
                    .map_err(|e: semidev::Error| CliError::Usage(e.to_string()))?,
            ),
            (None, None) => {
                return Err(CliError::Usage(
                    "no data source: give --data or --synthetic".into(),
                ))
            }
        };
        let spider_auto = s.parse_as::<bool>("spider-auto")?.unwrap_or(false);
        let spider = match (s.get("spider"), spider_auto) {
            (Some(_), true) => return Err(CliError::Usage("spider and spider-auto are exclusive".into())),
            (Some(v), false) => Some(SpiderSchedule::Manual(parse_spider(v)?)),
            (None, true) => Some(SpiderSchedule::Auto),
            (None, false) => None,
        };
        let spider = match (algo, spider) {
            (Algorithm::ScsSpider, None) => Some(SpiderSchedule::Auto),
            (Algorithm::ScsSpider, some) => some,
            (_, None) => None,
            (_, Some(_)) => {
                return Err(CliError::Usage(
                    "SPIDER settings require --algo scs-spider".into(),
                ))
            }
        };
        let cfg = Self {
            algo,
            loss,
            penalty,
            lambda: s.parse_as("lambda")?.unwrap_or(0.01),
            gamma: s.parse_as("gamma")?.unwrap_or(3.7),
            kappa: s.parse_as("kappa")?.unwrap_or(0.0),
            step,
            iters: s.parse_as("iters")?.unwrap_or(1000),
            seed: s.parse_as("seed")?.unwrap_or(0),
            data,
            box_width: s.parse_as("box")?.unwrap_or(10.0),
            spider,
            trace_thin: s.parse_as("trace-thin")?.unwrap_or(1),
            probe_every: s.parse_as("probe-every")?.unwrap_or(0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.iters == 0 {
            return bad("iters must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return bad(format!("kappa must lie in [0, 1], got {}", self.kappa));
        }
        match self.step {
            StepSize::Fixed(t) | StepSize::Auto(t) if !(t > 0.0 && t.is_finite()) => {
                return bad(format!("step size parameter must be positive, got {t}"))
            }
            _ => {}
        }
        if !(self.box_width > 0.0 && self.box_width.is_finite()) {
            return bad(format!("box half-width must be positive, got {}", self.box_width));
        }
        if self.trace_thin == 0 {
            return bad("trace-thin must be positive".into());
        }
        Ok(())
    }

    /// Resolved step size.
    pub fn tau(&self) -> f64 {
        match self.step {
            StepSize::Fixed(t) => t,
            StepSize::Auto(c) => {
                let n = self.iters as f64;
                match self.algo {
                    Algorithm::ScsSpider => c * n.powf(-0.5),
                    _ => c * n.powf(-2.0 / 3.0),
                }
            }
        }
    }
}

/// `T,B,b`
pub fn parse_spider(v: &str) -> Result<SpiderParams, CliError> {
    let parts: Vec<usize> = v
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("spider expects T,B,b, got '{v}'")))?;
    match parts[..] {
        [t, big, small] => SpiderParams::new(t, big, small).map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage(format!("spider expects T,B,b, got '{v}'"))),
    }
}
