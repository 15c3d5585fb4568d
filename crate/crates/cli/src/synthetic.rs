//! Seeded synthetic linear data with an optional heavy-tailed fraction.

use std::str::FromStr;

use semidev::rng::RngStream;
use semidev::{DataPoint, Dataset, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// `b = <w*, a> + noise`
    Regression,
    /// `b = sign(<w*, a> + noise)` in `{-1, +1}`
    Classification,
}

/// How heavy-tailed points are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// Any point, noise multiplied as drawn.
    Symmetric,
    /// Only points with `a_1 > 0`, with an upward noise of
    /// `|noise| * multiplier`. Overall fraction stays `frac`.
    Aligned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub dim: usize,
    /// Length `dim`.
    pub weights: Vec<f64>,
    pub noise: f64,
    pub heavy_frac: f64,
    pub heavy_mult: f64,
    pub task: Task,
    pub tail: Tail,
}

impl SyntheticSpec {
    /// `w* = (1, ..., 1)`, Gaussian noise of scale `noise`, no heavy tail.
    pub fn new(n: usize, dim: usize, noise: f64) -> Result<Self> {
        let s = Self {
            n,
            dim,
            weights: vec![1.0; dim],
            noise,
            heavy_frac: 0.0,
            heavy_mult: 1.0,
            task: Task::Regression,
            tail: Tail::Symmetric,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.dim == 0 {
            return bad(format!("need n, d >= 1, got n={} d={}", self.n, self.dim));
        }
        if self.weights.len() != self.dim {
            return bad(format!(
                "{} weights for dimension {}",
                self.weights.len(),
                self.dim
            ));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return bad("non-finite true weight".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be >= 0, got {}", self.noise));
        }
        if !(0.0..1.0).contains(&self.heavy_frac) {
            return bad(format!(
                "heavy-tail fraction must lie in [0, 1), got {}",
                self.heavy_frac
            ));
        }
        if !(self.heavy_mult > 0.0 && self.heavy_mult.is_finite()) {
            return bad(format!("multiplier must be positive, got {}", self.heavy_mult));
        }
        Ok(())
    }
}

/// Parses `key=value` pairs separated by commas, e.g.
/// `n=2000,d=10,noise=0.5,frac=0.1,mult=10,w=1;-1;2,task=cls,tail=aligned`.
/// `w` is either one value for every coordinate or `d` values separated by
/// semicolons.
impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n = 1000usize;
        let mut dim = 5usize;
        let mut weights: Option<Vec<f64>> = None;
        let mut noise = 0.1;
        let mut frac = 0.0;
        let mut mult = 10.0;
        let mut task = Task::Regression;
        let mut tail = Tail::Symmetric;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("synthetic spec: expected key=value, got '{part}'")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("synthetic spec: bad number '{v}' for {k}")))
            };
            let int = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("synthetic spec: bad integer '{v}' for {k}")))
            };
            match k {
                "n" => n = int(v)?,
                "d" => dim = int(v)?,
                "noise" => noise = num(v)?,
                "frac" => frac = num(v)?,
                "mult" => mult = num(v)?,
                "w" => weights = Some(v.split(';').map(|x| num(x.trim())).collect::<Result<_>>()?),
                "task" => {
                    task = match v {
                        "reg" | "regression" => Task::Regression,
                        "cls" | "classification" => Task::Classification,
                        _ => return Err(Error::Config(format!("synthetic spec: unknown task '{v}'"))),
                    }
                }
                "tail" => {
                    tail = match v {
                        "sym" | "symmetric" => Tail::Symmetric,
                        "aligned" => Tail::Aligned,
                        _ => return Err(Error::Config(format!("synthetic spec: unknown tail '{v}'"))),
                    }
                }
                _ => return Err(Error::Config(format!("synthetic spec: unknown key '{k}'"))),
            }
        }
        let weights = match weights {
            None => vec![1.0; dim],
            Some(w) if w.len() == 1 => vec![w[0]; dim],
            Some(w) => w,
        };
        let spec = Self {
            n,
            dim,
            weights,
            noise,
            heavy_frac: frac,
            heavy_mult: mult,
            task,
            tail,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Draws `spec.n` points. Deterministic in `rng`'s state.
pub fn generate_synthetic(spec: &SyntheticSpec, rng: &mut RngStream) -> Result<Dataset<f64>> {
    spec.validate()?;
    let mut points = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let a: Vec<f64> = (0..spec.dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let z: f64 = rng.standard_normal();
        let mut eps = spec.noise * z;
        match spec.tail {
            Tail::Symmetric => {
                if rng.bernoulli(spec.heavy_frac) {
                    eps *= spec.heavy_mult;
                }
            }
            Tail::Aligned => {
                if a[0] > 0.0 && rng.bernoulli((2.0 * spec.heavy_frac).min(1.0)) {
                    eps = eps.abs() * spec.heavy_mult;
                }
            }
        }
        let score: f64 = a.iter().zip(&spec.weights).map(|(x, w)| x * w).sum::<f64>() + eps;
        let b = match spec.task {
            Task::Regression => score,
            Task::Classification => {
                if score >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        points.push(DataPoint::new(a, b)?);
    }
    Dataset::new(points)
}
