//! JSON experiment configuration.

use pva_core::geom::Shape;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Shape description in JSON form, converted to [`Shape`] after validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Union { left: Box<ShapeConfig>, right: Box<ShapeConfig> },
    Difference { left: Box<ShapeConfig>, right: Box<ShapeConfig> },
}

impl ShapeConfig {
    pub fn build(&self) -> Result<Shape, CliError> {
        match self {
            ShapeConfig::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(CliError::config("shape: ball center must be non-empty"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(CliError::config("shape: ball radius must be positive"));
                }
                Ok(Shape::ball(center.clone(), *radius))
            }
            ShapeConfig::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(CliError::config("shape: box bounds must match and be non-empty"));
                }
                if !lower.iter().zip(upper).all(|(l, u)| l < u && l.is_finite() && u.is_finite()) {
                    return Err(CliError::config("shape: box needs lower < upper per axis"));
                }
                Ok(Shape::cuboid(lower.clone(), upper.clone()))
            }
            ShapeConfig::Union { left, right } => Shape::union(left.build()?, right.build()?)
                .map_err(|e| CliError::config(format!("shape union: {e}"))),
            ShapeConfig::Difference { left, right } => {
                Shape::difference(left.build()?, right.build()?)
                    .map_err(|e| CliError::config(format!("shape difference: {e}")))
            }
        }
    }
}

/// Thread count: explicit or "auto" (all available cores).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThreadCount {
    Count(usize),
    Named(String),
}

impl ThreadCount {
    pub fn resolve(&self) -> Result<usize, CliError> {
        match self {
            ThreadCount::Count(0) => Err(CliError::config("thread_count must be positive")),
            ThreadCount::Count(n) => Ok(*n),
            ThreadCount::Named(s) if s == "auto" => Ok(std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)),
            ThreadCount::Named(s) => {
                Err(CliError::config(format!("thread_count must be a count or \"auto\", got {s:?}")))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub shape: ShapeConfig,
    pub lambda_grid: Vec<f64>,
    pub replications: usize,
    /// quadrature points per replication
    pub n_quad: usize,
    /// when set, n_quad grows with intensity: max(n_quad, ceil(scale * lambda))
    pub n_quad_per_lambda: Option<f64>,
    /// highest moment order reported
    pub n_max: usize,
    pub master_seed: u64,
    /// window dilation safety factor (>= 1)
    pub safety: f64,
    pub thread_count: ThreadCount,
    pub output_path: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: ShapeConfig::Ball { center: vec![0.0, 0.0], radius: 1.0 },
            lambda_grid: vec![100.0, 316.22776601683796, 1000.0, 3162.2776601683795, 10000.0],
            replications: 200,
            n_quad: 20_000,
            n_quad_per_lambda: None,
            n_max: 3,
            master_seed: 0x5EED_CAFE,
            safety: 4.0,
            thread_count: ThreadCount::Named("auto".into()),
            output_path: "sweep.csv".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {path}: {e}")))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("parsing config {path}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.shape.build()?;
        if self.lambda_grid.is_empty() {
            return Err(CliError::config("lambda_grid must be non-empty"));
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(CliError::config("lambda_grid entries must be positive and finite"));
        }
        if self.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config("lambda_grid must be strictly increasing"));
        }
        if self.replications < 2 {
            return Err(CliError::config("replications must be at least 2"));
        }
        if self.n_quad == 0 {
            return Err(CliError::config("n_quad must be positive"));
        }
        if let Some(scale) = self.n_quad_per_lambda {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(CliError::config("n_quad_per_lambda must be positive"));
            }
        }
        if self.n_max < 1 {
            return Err(CliError::config("n_max must be at least 1"));
        }
        if !(self.safety >= 1.0 && self.safety.is_finite()) {
            return Err(CliError::config("safety must be at least 1"));
        }
        self.thread_count.resolve()?;
        Ok(())
    }

    /// Quadrature point count for one intensity.
    pub fn n_quad_for(&self, lambda: f64) -> usize {
        match self.n_quad_per_lambda {
            Some(scale) => self.n_quad.max((scale * lambda).ceil() as usize),
            None => self.n_quad,
        }
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
