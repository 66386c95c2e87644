//! Set covariogram `g_A(x) = Vol((A+x) ∩ A)`, its spherical aggregate,
//! directional derivatives at the origin, and perimeter recovery.
//!
//! Analytic covariograms exist for balls (hyperspherical lens volume via the
//! regularized incomplete beta function) and boxes (product formula). For
//! unions the piece covariograms are analytic and the cross terms
//! `Vol((A_i + x) ∩ A_j)` fall back to Monte Carlo automatically;
//! differences are evaluated fully by Monte Carlo.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{unit_ball_volume, DimConstants, Shape};
use crate::special::betainc_reg;
use crate::{Error, Result};

/// Sample-cloud size used when an analytic evaluator needs a Monte Carlo
/// fallback for CSG cross terms.
const FALLBACK_POINTS: usize = 200_000;
const FALLBACK_SEED: u64 = 0xC0FF_EE00;

/// Evaluation mode for the covariogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovariogramMode {
    /// Closed forms where available; CSG cross terms fall back to a fixed
    /// internal Monte Carlo cloud.
    Analytic,
    /// Pure Monte Carlo estimate of `Vol((A+x) ∩ A)` from a cloud of
    /// uniform points pre-generated over the shape's bounding box.
    MonteCarlo { n_points: usize, seed: u64 },
}

/// Uniform sample cloud over the shape's tight bounding box; evaluation
/// counts points satisfying a pair of membership predicates.
#[derive(Debug, Clone)]
struct Cloud {
    /// flat coordinates, `dim` per point
    coords: Vec<f64>,
    dim: usize,
    n_total: usize,
    /// box volume / n_total
    weight: f64,
}

impl Cloud {
    fn generate(shape: &Shape, n_points: usize, seed: u64) -> Cloud {
        let bbox = shape.bounding_box(0.0);
        let dim = bbox.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::with_capacity(n_points * dim);
        for _ in 0..n_points {
            for k in 0..dim {
                coords.push(rng.random_range(bbox.lower[k]..bbox.upper[k]));
            }
        }
        Cloud {
            coords,
            dim,
            n_total: n_points,
            weight: bbox.volume() / n_points as f64,
        }
    }

    fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Evaluator for the covariogram of a shape.
#[derive(Debug, Clone)]
pub struct CovariogramEvaluator {
    shape: Shape,
    mode: CovariogramMode,
    /// `g_A(0) = Vol(A)`
    vol0: f64,
    /// cloud restricted to points inside `A` (Monte Carlo mode)
    cloud_in_a: Option<Cloud>,
    /// full cloud (analytic mode with CSG cross terms)
    cloud_full: Option<Cloud>,
}

impl CovariogramEvaluator {
    pub fn new(shape: Shape, mode: CovariogramMode) -> Result<Self> {
        match mode {
            CovariogramMode::Analytic => {
                let vol0 = shape.analytic_volume().ok_or(Error::MissingVolume)?;
                let cloud_full = if needs_fallback(&shape) {
                    Some(Cloud::generate(&shape, FALLBACK_POINTS, FALLBACK_SEED))
                } else {
                    None
                };
                Ok(CovariogramEvaluator { shape, mode, vol0, cloud_in_a: None, cloud_full })
            }
            CovariogramMode::MonteCarlo { n_points, seed } => {
                if n_points == 0 {
                    return Err(Error::InvalidParameter("n_points must be positive"));
                }
                let full = Cloud::generate(&shape, n_points, seed);
                let mut coords = Vec::new();
                for p in full.points() {
                    if shape.is_inside(p) {
                        coords.extend_from_slice(p);
                    }
                }
                let in_a = Cloud {
                    coords,
                    dim: full.dim,
                    n_total: full.n_total,
                    weight: full.weight,
                };
                let vol0 = in_a.weight * (in_a.coords.len() / in_a.dim) as f64;
                Ok(CovariogramEvaluator {
                    shape,
                    mode,
                    vol0,
                    cloud_in_a: Some(in_a),
                    cloud_full: None,
                })
            }
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn mode(&self) -> CovariogramMode {
        self.mode
    }

    /// `g_A(0) = Vol(A)` (cached).
    pub fn at_zero(&self) -> f64 {
        self.vol0
    }

    /// Evaluates `g_A(x) = Vol((A+x) ∩ A)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(match self.mode {
            CovariogramMode::Analytic => eval_analytic(&self.shape, x, self.cloud_full.as_ref()),
            CovariogramMode::MonteCarlo { .. } => {
                let cloud = self.cloud_in_a.as_ref().expect("cloud present in MC mode");
                let mut shifted = alloc::vec![0.0; self.dim()];
                let mut count = 0usize;
                for p in cloud.points() {
                    for k in 0..self.dim() {
                        shifted[k] = p[k] - x[k];
                    }
                    if self.shape.is_inside(&shifted) {
                        count += 1;
                    }
                }
                cloud.weight * count as f64
            }
        })
    }

    /// Standard error of a Monte Carlo evaluation at `x` (0 for analytic
    /// primitives without fallback clouds).
    pub fn eval_standard_error(&self, x: &[f64]) -> Result<f64> {
        let g = self.eval(x)?;
        let cloud = match self.mode {
            CovariogramMode::MonteCarlo { .. } => self.cloud_in_a.as_ref(),
            CovariogramMode::Analytic => self.cloud_full.as_ref(),
        };
        Ok(match cloud {
            None => 0.0,
            Some(c) => {
                let n = c.n_total as f64;
                let box_vol = c.weight * n;
                let p = (g / box_vol).clamp(0.0, 1.0);
                box_vol * libm::sqrt(p * (1.0 - p) / n)
            }
        })
    }
}

/// True when the analytic route needs a Monte Carlo cloud somewhere in the
/// CSG tree.
fn needs_fallback(shape: &Shape) -> bool {
    match shape {
        Shape::Ball { .. } | Shape::Box { .. } => false,
        Shape::Union(..) | Shape::Difference(..) => true,
    }
}

fn eval_analytic(shape: &Shape, x: &[f64], cloud: Option<&Cloud>) -> f64 {
    match shape {
        Shape::Ball { center, radius } => {
            let t = libm::sqrt(x.iter().map(|v| v * v).sum());
            ball_covariogram(center.len(), *radius, t)
        }
        Shape::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .zip(x)
            .map(|((l, u), xi)| ((u - l) - xi.abs()).max(0.0))
            .product(),
        Shape::Union(l, r) => {
            let cloud = cloud.expect("union evaluator carries a fallback cloud");
            eval_analytic(l, x, Some(cloud))
                + eval_analytic(r, x, Some(cloud))
                + mc_cross(l, r, x, cloud)
                + mc_cross(r, l, x, cloud)
        }
        Shape::Difference(..) => {
            let cloud = cloud.expect("difference evaluator carries a fallback cloud");
            mc_cross(shape, shape, x, cloud)
        }
    }
}

/// Monte Carlo estimate of `Vol((L + x) ∩ R)` from a shared cloud.
fn mc_cross(left: &Shape, right: &Shape, x: &[f64], cloud: &Cloud) -> f64 {
    let dim = cloud.dim;
    let mut shifted = alloc::vec![0.0; dim];
    let mut count = 0usize;
    for p in cloud.points() {
        if right.is_inside(p) {
            for k in 0..dim {
                shifted[k] = p[k] - x[k];
            }
            if left.is_inside(&shifted) {
                count += 1;
            }
        }
    }
    cloud.weight * count as f64
}

/// Intersection volume of two d-balls of equal radius `r` whose centers are
/// distance `t` apart (the hyperspherical lens), via the regularized
/// incomplete beta representation of the spherical-cap volume.
pub fn ball_covariogram(dim: usize, r: f64, t: f64) -> f64 {
    debug_assert!(r > 0.0 && t >= 0.0);
    let kappa = unit_ball_volume(dim).expect("dim within range");
    let full = kappa * libm::pow(r, dim as f64);
    if t >= 2.0 * r {
        return 0.0;
    }
    if t == 0.0 {
        return full;
    }
    // lens = 2 caps of height h = r - t/2; cap = (1/2) kappa_d r^d I_x((d+1)/2, 1/2)
    // with x = 1 - (t / 2r)^2
    let c = t / (2.0 * r);
    let x = (1.0 - c * c).clamp(0.0, 1.0);
    full * betainc_reg((dim as f64 + 1.0) / 2.0, 0.5, x)
}

/// Angular quadrature on the unit sphere `S^{d-1}`.
///
/// * d = 1 — the two points `{-1, +1}` with unit weight (counting measure);
/// * d = 2 — an N-point uniform grid on `[0, 2pi)` (default 256);
/// * d = 3 — a spherical Fibonacci lattice (default 4096);
/// * d >= 4 — seeded quasi-uniform random directions (default 4096).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularRule {
    pub n_directions: Option<usize>,
    pub seed: u64,
}

impl Default for AngularRule {
    fn default() -> Self {
        AngularRule { n_directions: None, seed: 0xD1CE }
    }
}

impl AngularRule {
    pub fn with_directions(n: usize) -> Self {
        AngularRule { n_directions: Some(n), ..Default::default() }
    }

    /// Unit directions and weights summing to `H_{d-1}(S^{d-1})`.
    pub fn directions(&self, dim: usize) -> Vec<(Vec<f64>, f64)> {
        match dim {
            0 => Vec::new(),
            1 => alloc::vec![(alloc::vec![1.0], 1.0), (alloc::vec![-1.0], 1.0)],
            2 => {
                let n = self.n_directions.unwrap_or(256);
                let w = 2.0 * core::f64::consts::PI / n as f64;
                (0..n)
                    .map(|i| {
                        let th = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
                        (alloc::vec![libm::cos(th), libm::sin(th)], w)
                    })
                    .collect()
            }
            3 => {
                let n = self.n_directions.unwrap_or(4096);
                let w = 4.0 * core::f64::consts::PI / n as f64;
                let golden = (1.0 + libm::sqrt(5.0)) / 2.0;
                (0..n)
                    .map(|i| {
                        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                        let rho = libm::sqrt((1.0 - z * z).max(0.0));
                        let phi = 2.0 * core::f64::consts::PI * (i as f64 / golden % 1.0);
                        (alloc::vec![rho * libm::cos(phi), rho * libm::sin(phi), z], w)
                    })
                    .collect()
            }
            d => {
                let n = self.n_directions.unwrap_or(4096);
                let consts = DimConstants::new(d).expect("dim within range");
                let w = consts.sphere_surface() / n as f64;
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..n)
                    .map(|_| {
                        loop {
                            // Gaussian direction via Box-Muller pairs
                            let mut u = Vec::with_capacity(d);
                            while u.len() < d {
                                let a: f64 = rng.random();
                                let b: f64 = rng.random();
                                let r = libm::sqrt(-2.0 * libm::log(a.max(1e-300)));
                                u.push(r * libm::cos(2.0 * core::f64::consts::PI * b));
                                if u.len() < d {
                                    u.push(r * libm::sin(2.0 * core::f64::consts::PI * b));
                                }
                            }
                            let norm = libm::sqrt(u.iter().map(|v| v * v).sum());
                            if norm > 1e-12 {
                                for v in &mut u {
                                    *v /= norm;
                                }
                                return (u, w);
                            }
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Spherical aggregate `g~_A(r) = int_{S^{d-1}} (g_A(r u) - g_A(0)) dH(u)`.
#[derive(Debug, Clone)]
pub struct SphericalAggregate {
    evaluator: CovariogramEvaluator,
    directions: Vec<(Vec<f64>, f64)>,
}

impl SphericalAggregate {
    pub fn new(evaluator: CovariogramEvaluator, rule: AngularRule) -> Self {
        let directions = rule.directions(evaluator.dim());
        SphericalAggregate { evaluator, directions }
    }

    pub fn evaluator(&self) -> &CovariogramEvaluator {
        &self.evaluator
    }

    /// Value of the aggregate at radius `r >= 0`; always `<= 0`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::InvalidParameter("radius must be nonnegative"));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let g0 = self.evaluator.at_zero();
        let dim = self.evaluator.dim();
        let mut point = alloc::vec![0.0; dim];
        let mut acc = 0.0;
        for (u, w) in &self.directions {
            for k in 0..dim {
                point[k] = r * u[k];
            }
            acc += w * (self.evaluator.eval(&point)? - g0);
        }
        Ok(acc)
    }
}

/// Richardson-extrapolated one-sided directional derivative result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub error_indicator: f64,
}

/// Relative convergence tolerance for the Richardson extrapolation.
pub const DERIVATIVE_TOLERANCE: f64 = 1e-4;

/// One-sided derivative `lim_{r -> 0+} (g_A(ru) - g_A(0)) / r` along the
/// unit direction `u`, by Richardson extrapolation over `h_k = 0.1 * 2^-k`.
pub fn directional_derivative_at_zero(
    evaluator: &CovariogramEvaluator,
    u: &[f64],
) -> Result<DerivativeEstimate> {
    let norm: f64 = libm::sqrt(u.iter().map(|v| v * v).sum());
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("direction must be a unit vector"));
    }
    let dim = evaluator.dim();
    if u.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: u.len() });
    }
    let g0 = evaluator.at_zero();
    let mut point = alloc::vec![0.0; dim];
    let mut diffs = [0.0; 7];
    for (k, d) in diffs.iter_mut().enumerate() {
        let h = 0.1 * libm::pow(2.0, -(k as f64));
        for j in 0..dim {
            point[j] = h * u[j];
        }
        *d = (evaluator.eval(&point)? - g0) / h;
    }
    // two-level extrapolation for the O(h) one-sided stencil
    let extrap: Vec<f64> = (0..6).map(|k| 2.0 * diffs[k + 1] - diffs[k]).collect();
    let value = extrap[5];
    let error_indicator = (extrap[5] - extrap[4]).abs();
    let scale = value.abs().max(1e-12);
    if error_indicator > DERIVATIVE_TOLERANCE * scale {
        return Err(Error::DerivativeNotConverged {
            error_indicator,
            tolerance: DERIVATIVE_TOLERANCE * scale,
        });
    }
    Ok(DerivativeEstimate { value, error_indicator })
}

/// Perimeter recovery: `Per(A) = -(1/kappa_{d-1}) int_{S^{d-1}}
/// dg_A/du (0) dH(u)`.
pub fn perimeter_from_covariogram(
    evaluator: &CovariogramEvaluator,
    rule: AngularRule,
) -> Result<f64> {
    let dim = evaluator.dim();
    let consts = DimConstants::new(dim)?;
    let mut acc = 0.0;
    for (u, w) in rule.directions(dim) {
        acc += w * directional_derivative_at_zero(evaluator, &u)?.value;
    }
    Ok(-acc / consts.kappa_minus1)
}
