//! Experiment orchestration: sweeps, theory tables, covariogram profiles.

use pva_core::approx::{run_replication, summarize, MomentSummary, QuadratureSpec};
use pva_core::covariogram::{
    perimeter_from_covariogram, AngularRule, CovariogramEvaluator, CovariogramMode,
    SphericalAggregate,
};
use pva_core::geom::{DimConstants, Shape};
use pva_core::sampler::simulation_window;
use pva_core::theory::{exact_mean_sym_diff, RadialRule};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const SWEEP_HEADER: &str = "lambda,mean_vol_approx,se_vol_approx,mean_sym_diff,se_sym_diff,\
var_vol_approx,var_sym_diff,diag_1543,exact_theory,asymptotic_theory,ratio,flag_degenerate,\
flag_edge";

/// One CSV row of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub summary: MomentSummary,
    pub exact_theory: f64,
    pub asymptotic_theory: f64,
}

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        let s = &self.summary;
        let ratio = s.mean_sym_diff / self.asymptotic_theory;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.lambda,
            s.mean_vol_approx,
            s.se_vol_approx,
            s.mean_sym_diff,
            s.se_sym_diff,
            s.var_vol_approx,
            s.var_sym_diff,
            s.diag_identity_1543,
            self.exact_theory,
            self.asymptotic_theory,
            ratio,
            s.n_degenerate,
            s.n_edge,
        )
    }
}

/// Resolves the worker count: CLI flag beats `PVA_THREADS` beats config.
pub fn resolve_threads(
    flag: Option<usize>,
    config: &ExperimentConfig,
) -> Result<usize, CliError> {
    if let Some(n) = flag {
        if n == 0 {
            return Err(CliError::config("--threads must be positive"));
        }
        return Ok(n);
    }
    if let Ok(text) = std::env::var("PVA_THREADS") {
        let n: usize = text
            .parse()
            .map_err(|_| CliError::config(format!("PVA_THREADS must be a count, got {text:?}")))?;
        if n == 0 {
            return Err(CliError::config("PVA_THREADS must be positive"));
        }
        return Ok(n);
    }
    config.thread_count.resolve()
}

/// Theory predictions used for the CSV columns. For shapes without
/// closed-form volume or perimeter the covariogram itself supplies them
/// (Monte Carlo evaluator, perimeter via the directional-derivative
/// identity).
struct TheoryColumns {
    aggregate: SphericalAggregate,
    c_d: f64,
    perimeter: f64,
    dim: usize,
}

impl TheoryColumns {
    fn new(shape: &Shape, master_seed: u64) -> Result<Self, CliError> {
        let evaluator = match CovariogramEvaluator::new(shape.clone(), CovariogramMode::Analytic) {
            Ok(ev) => ev,
            Err(pva_core::Error::MissingVolume) => CovariogramEvaluator::new(
                shape.clone(),
                CovariogramMode::MonteCarlo { n_points: 400_000, seed: master_seed },
            )?,
            Err(e) => return Err(e.into()),
        };
        let perimeter = match shape.analytic_perimeter() {
            Some(p) => p,
            None => perimeter_from_covariogram(&evaluator, AngularRule::default())?,
        };
        let dim = shape.dim();
        let consts = DimConstants::new(dim)?;
        let aggregate = SphericalAggregate::new(evaluator, AngularRule::default());
        Ok(TheoryColumns { aggregate, c_d: consts.c_d, perimeter, dim })
    }

    fn exact(&self, lambda: f64) -> Result<f64, CliError> {
        Ok(exact_mean_sym_diff(&self.aggregate, lambda, RadialRule::default())?.value)
    }

    fn asymptotic(&self, lambda: f64) -> f64 {
        self.c_d * self.perimeter * lambda.powf(-1.0 / self.dim as f64)
    }
}

/// Runs the replications for one intensity on the current rayon pool and
/// aggregates them in replication-index order, so the result does not
/// depend on the worker count.
fn run_lambda(
    shape: &Shape,
    config: &ExperimentConfig,
    lambda: f64,
) -> Result<MomentSummary, CliError> {
    use rayon::prelude::*;

    let window = simulation_window(shape, lambda, config.safety)?;
    let quad = QuadratureSpec::MonteCarlo { n_quad: config.n_quad_for(lambda) };
    let samples = (0..config.replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(shape, &window, lambda, rep, config.master_seed, quad))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(lambda, &window, &samples, config.n_max)?)
}

/// Runs the full sweep over `config.lambda_grid`.
pub fn run_sweep(config: &ExperimentConfig, threads: usize) -> Result<Vec<SweepRow>, CliError> {
    let shape = config.shape.build()?;
    let theory = TheoryColumns::new(&shape, config.master_seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    let mut rows = Vec::with_capacity(config.lambda_grid.len());
    for &lambda in &config.lambda_grid {
        let summary = pool.install(|| run_lambda(&shape, config, lambda))?;
        rows.push(SweepRow {
            summary,
            exact_theory: theory.exact(lambda)?,
            asymptotic_theory: theory.asymptotic(lambda),
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow], comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

/// Theory-only prediction table: `lambda,exact,asymptotic,ratio`.
pub fn theory_csv(config: &ExperimentConfig) -> Result<String, CliError> {
    let shape = config.shape.build()?;
    let theory = TheoryColumns::new(&shape, config.master_seed)?;
    let mut out = String::from("lambda,exact,asymptotic,ratio\n");
    for &lambda in &config.lambda_grid {
        let exact = theory.exact(lambda)?;
        let asym = theory.asymptotic(lambda);
        out.push_str(&format!("{},{},{},{}\n", lambda, exact, asym, exact / asym));
    }
    Ok(out)
}

/// Covariogram profile export: `r,direction_index,g_value` over a radius
/// grid up to the shape diameter.
pub fn covariogram_csv(config: &ExperimentConfig, n_radii: usize) -> Result<String, CliError> {
    if n_radii < 2 {
        return Err(CliError::config("covariogram needs at least 2 radii"));
    }
    let shape = config.shape.build()?;
    let evaluator = match CovariogramEvaluator::new(shape.clone(), CovariogramMode::Analytic) {
        Ok(ev) => ev,
        Err(pva_core::Error::MissingVolume) => CovariogramEvaluator::new(
            shape.clone(),
            CovariogramMode::MonteCarlo { n_points: 400_000, seed: config.master_seed },
        )?,
        Err(e) => return Err(e.into()),
    };
    let bbox = shape.bounding_box(0.0);
    let diameter = bbox
        .lower
        .iter()
        .zip(&bbox.upper)
        .map(|(l, u)| (u - l) * (u - l))
        .sum::<f64>()
        .sqrt();
    let directions = AngularRule::default().directions(shape.dim());
    let mut out = String::from("r,direction_index,g_value\n");
    for i in 0..n_radii {
        let r = diameter * i as f64 / (n_radii - 1) as f64;
        for (j, (u, _w)) in directions.iter().enumerate() {
            let x: Vec<f64> = u.iter().map(|c| c * r).collect();
            let g = evaluator.eval(&x)?;
            out.push_str(&format!("{},{},{}\n", r, j, g));
        }
    }
    Ok(out)
}
