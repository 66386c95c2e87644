//! Power-law exponent reports from sweep CSV files.

use pva_core::theory::{fit_power_law, PowerLawFit};
use serde::Serialize;

use crate::error::CliError;
use crate::runner::SWEEP_HEADER;

#[derive(Debug, Serialize)]
struct FitJson {
    exponent: f64,
    ci_low: f64,
    ci_high: f64,
    log_constant: f64,
    r_squared: f64,
}

impl From<PowerLawFit> for FitJson {
    fn from(f: PowerLawFit) -> Self {
        FitJson {
            exponent: f.exponent,
            ci_low: f.exponent_ci.0,
            ci_high: f.exponent_ci.1,
            log_constant: f.log_constant,
            r_squared: f.r_squared,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct FitReport {
    mean_sym_diff: FitJson,
    var_vol_approx: FitJson,
    var_sym_diff: FitJson,
}

/// Parses a sweep CSV (comment lines allowed) and fits the rate columns.
pub fn fit_sweep_csv(text: &str) -> Result<FitReport, CliError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| CliError::config("empty CSV"))?;
    if header != SWEEP_HEADER {
        return Err(CliError::config(format!("unexpected CSV header: {header:?}")));
    }
    let mut lambda_msd = Vec::new();
    let mut lambda_vva = Vec::new();
    let mut lambda_vsd = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(CliError::config(format!("row {}: expected 13 fields", i + 1)));
        }
        let get = |k: usize| -> Result<f64, CliError> {
            fields[k]
                .parse()
                .map_err(|_| CliError::config(format!("row {}: bad number {:?}", i + 1, fields[k])))
        };
        let lambda = get(0)?;
        lambda_msd.push((lambda, get(3)?));
        lambda_vva.push((lambda, get(5)?));
        lambda_vsd.push((lambda, get(6)?));
    }
    let fit = |pairs: &[(f64, f64)]| -> Result<FitJson, CliError> {
        fit_power_law(pairs)
            .map(FitJson::from)
            .map_err(|e| CliError::numeric(format!("power-law fit: {e}")))
    };
    Ok(FitReport {
        mean_sym_diff: fit(&lambda_msd)?,
        var_vol_approx: fit(&lambda_vva)?,
        var_sym_diff: fit(&lambda_vsd)?,
    })
}

impl FitReport {
    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
