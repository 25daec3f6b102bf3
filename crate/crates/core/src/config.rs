//! Experiment configuration: a flat `key = value` text file plus overrides.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{QuadratureSpec, Scheme, Space};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceName {
    H2,
    H3,
}

impl SpaceName {
    pub fn space(self) -> Space {
        match self {
            SpaceName::H2 => Space::h2(),
            SpaceName::H3 => Space::h3(),
        }
    }
}

impl FromStr for SpaceName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h2" => Ok(SpaceName::H2),
            "h3" => Ok(SpaceName::H3),
            other => Err(Error::Config(format!(
                "unknown space '{other}' (expected h2 or h3)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub space: SpaceName,
    pub lambda: f64,
    pub seed: u64,
    /// Half-width of the `V` box for `N̄` integrals; infinite by default.
    #[serde(with = "crate::measure::extended_float")]
    pub trunc_radius: f64,
    pub nodes: usize,
    pub tail_tol: f64,
    /// Half-width of the base `t`-domain of weak-norm grids.
    pub t_max: f64,
    pub r_list: Vec<f64>,
    /// Points per decade of the `η` and ball-radius grids.
    pub eta_decades: usize,
    pub out_dir: PathBuf,
    pub scheme: Scheme,
    /// Half-width of the `V` box of weak-norm grids.
    pub v_max: f64,
    /// Wall-clock time in reports; off keeps reports byte-identical across runs.
    pub record_runtime: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            space: SpaceName::H2,
            lambda: 1.0,
            seed: 7,
            trunc_radius: f64::INFINITY,
            nodes: 16,
            tail_tol: 1e-11,
            t_max: 8.0,
            r_list: (5..=30).map(f64::from).collect(),
            eta_decades: 64,
            out_dir: PathBuf::from("out"),
            scheme: Scheme::AdaptiveSubdivision,
            v_max: 16.0,
            record_runtime: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = '{value}'")))
}

impl Config {
    pub const KEYS: [&'static str; 13] = [
        "space",
        "lambda",
        "seed",
        "trunc_radius",
        "nodes",
        "tail_tol",
        "t_max",
        "r_list",
        "eta_decades",
        "out_dir",
        "scheme",
        "v_max",
        "record_runtime",
    ];

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "space" => self.space = value.parse()?,
            "lambda" => self.lambda = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "trunc_radius" => {
                self.trunc_radius = match value {
                    "inf" | "infinity" | "none" => f64::INFINITY,
                    v => parse(key, v)?,
                }
            }
            "nodes" => self.nodes = parse(key, value)?,
            "tail_tol" => self.tail_tol = parse(key, value)?,
            "t_max" => self.t_max = parse(key, value)?,
            "r_list" => {
                self.r_list = value
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "eta_decades" => self.eta_decades = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "scheme" => {
                self.scheme = match value {
                    "adaptive" | "adaptive-subdivision" => Scheme::AdaptiveSubdivision,
                    "tensor" | "tensor-gauss" => Scheme::TensorGauss,
                    other => return Err(Error::Config(format!("unknown scheme '{other}'"))),
                }
            }
            "v_max" => self.v_max = parse(key, value)?,
            "record_runtime" => self.record_runtime = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.quadrature().validate()?;
        if !self.lambda.is_finite() {
            return Err(Error::Config("lambda must be finite".into()));
        }
        if !(self.t_max > 0.0 && self.v_max > 0.0) {
            return Err(Error::Config("t_max and v_max must be positive".into()));
        }
        if self.r_list.is_empty()
            || self.r_list[0] <= 0.0
            || self.r_list.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Config(
                "r_list must be positive and increasing".into(),
            ));
        }
        if self.eta_decades < 2 {
            return Err(Error::Config("eta_decades must be at least 2".into()));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            truncation_radius: self.trunc_radius,
            nodes_per_axis: self.nodes,
            tail_tolerance: self.tail_tol,
            scheme: self.scheme,
        }
    }
}
