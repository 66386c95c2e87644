//! Built-in oracle checks (`pva selftest`).

use pva_core::approx::{build_model, nearest_brute_force};
use pva_core::covariogram::{
    ball_covariogram, perimeter_from_covariogram, AngularRule, CovariogramEvaluator,
    CovariogramMode,
};
use pva_core::geom::{DimConstants, Shape};
use pva_core::sampler::{sample_nuclei, simulation_window, stream_rng};
use pva_core::theory::{kernel_integral_check, RadialRule};
use rand::Rng;

use crate::error::CliError;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Runs the oracle suite; a failed check is a numeric failure (exit 3).
pub fn run_selftest() -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();

    // kernel identity: int e^{-c ||x||^d} dx = kappa_d / c
    let mut worst = 0.0f64;
    for c in [0.5, 1.0, 2.0] {
        for d in 1..=3 {
            let expect = DimConstants::new(d)?.kappa / c;
            let got = kernel_integral_check(c, d, RadialRule::default())?;
            worst = worst.max((got - expect).abs() / expect);
        }
    }
    checks.push(check("kernel_identity", worst < 1e-8, format!("max rel err {worst:.3e}")));

    // disk covariogram: lens formula vs closed 2-D expression
    let mut worst = 0.0f64;
    for i in 1..20 {
        let t = 2.0 * i as f64 / 20.0;
        let got = ball_covariogram(2, 1.0, t);
        let closed = 2.0 * ((t / 2.0).acos() - (t / 2.0) * (1.0 - t * t / 4.0).sqrt());
        worst = worst.max((got - closed).abs());
    }
    checks.push(check("disk_covariogram", worst < 1e-12, format!("max abs err {worst:.3e}")));

    // square covariogram: product formula at rational offsets
    let ev = CovariogramEvaluator::new(Shape::unit_cube(2), CovariogramMode::Analytic)?;
    let got = ev.eval(&[0.25, 0.5])?;
    let passed = (got - 0.375).abs() < 1e-12;
    checks.push(check("square_covariogram", passed, format!("g(1/4,1/2) = {got}")));

    // perimeter recovery from the covariogram slope
    let per = perimeter_from_covariogram(
        &CovariogramEvaluator::new(Shape::unit_ball(2), CovariogramMode::Analytic)?,
        AngularRule::default(),
    )?;
    let expect = 2.0 * std::f64::consts::PI;
    let rel = (per - expect).abs() / expect;
    checks.push(check("perimeter_recovery", rel < 0.01, format!("disk rel err {rel:.3e}")));

    // classify equals brute-force nearest neighbor
    let shape = Shape::unit_ball(2);
    let window = simulation_window(&shape, 500.0, 4.0)?;
    let mut mismatches = 0usize;
    for seed in 0..3u64 {
        let nuclei = sample_nuclei(&shape, &window, 500.0, seed)?;
        let model = build_model(nuclei);
        let mut rng = stream_rng(seed, 1000);
        for _ in 0..2000 {
            let x: Vec<f64> = window
                .bbox
                .lower
                .iter()
                .zip(&window.bbox.upper)
                .map(|(l, u)| rng.random_range(*l..*u))
                .collect();
            if model.nearest(&x) != nearest_brute_force(model.points(), &x) {
                mismatches += 1;
            }
        }
    }
    checks.push(check("classify_vs_brute_force", mismatches == 0, format!("{mismatches} mismatches")));

    Ok(checks)
}
