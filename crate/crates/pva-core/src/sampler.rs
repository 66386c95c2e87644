//! Reproducible homogeneous Poisson point process realizations in dilated
//! windows, with in-shape labels.
//!
//! Randomness is keyed by `(master seed, stream index)` on a counter-based
//! generator, so distinct replications use disjoint streams and parallel
//! scheduling order can never change results.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{Aabb, DimConstants, Shape};
use crate::{Error, Result};

/// Flat point storage: `dim` consecutive coordinates per point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        PointCloud { coords: Vec::new(), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn push(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }
}

/// Finite simulation window: the shape's bounding box dilated by `margin`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub bbox: Aabb,
    pub margin: f64,
}

impl Window {
    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn volume(&self) -> f64 {
        self.bbox.volume()
    }
}

/// Dilated window controlling edge effects:
/// `margin = safety * max((log lambda / (kappa_d lambda))^{1/d}, lambda^{-1/d})`.
pub fn simulation_window(shape: &Shape, lambda: f64, safety: f64) -> Result<Window> {
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter("lambda must be positive"));
    }
    if safety < 1.0 {
        return Err(Error::InvalidParameter("safety factor must be >= 1"));
    }
    let d = shape.dim();
    let consts = DimConstants::new(d)?;
    let log_term = libm::pow((libm::log(lambda).max(0.0)) / (consts.kappa * lambda), 1.0 / d as f64);
    let floor = libm::pow(lambda, -1.0 / d as f64);
    let margin = safety * log_term.max(floor);
    Ok(Window { bbox: shape.bounding_box(margin), margin })
}

/// Counter-based RNG stream keyed by `(master_seed, stream)`.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Poisson count with the given mean, by chunked inversion: the mean is
/// split into pieces `<= 30` so the inversion products never underflow, and
/// the chunk sums stay exactly Poisson.
pub fn poisson_count(mean: f64, rng: &mut impl Rng) -> u64 {
    debug_assert!(mean >= 0.0);
    const CHUNK: f64 = 30.0;
    let mut remaining = mean;
    let mut total = 0u64;
    while remaining > CHUNK {
        total += poisson_inversion(CHUNK, rng);
        remaining -= CHUNK;
    }
    total + poisson_inversion(remaining, rng)
}

fn poisson_inversion(mean: f64, rng: &mut impl Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let limit = libm::exp(-mean);
    let mut product: f64 = 1.0;
    let mut count = 0u64;
    loop {
        product *= rng.random::<f64>();
        if product < limit {
            return count;
        }
        count += 1;
    }
}

/// Homogeneous Poisson point process realization in the window:
/// `N ~ Poisson(lambda * Vol(window))`, points i.i.d. uniform.
pub fn sample_ppp(window: &Window, lambda: f64, seed: u64) -> Result<PointCloud> {
    let mut rng = stream_rng(seed, 0);
    sample_ppp_with(window, lambda, &mut rng)
}

/// Same as [`sample_ppp`] but drawing from a caller-provided stream.
pub fn sample_ppp_with(window: &Window, lambda: f64, rng: &mut impl Rng) -> Result<PointCloud> {
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter("lambda must be positive"));
    }
    let dim = window.dim();
    let n = poisson_count(lambda * window.volume(), rng);
    let mut cloud = PointCloud::new(dim);
    cloud.coords.reserve(n as usize * dim);
    for _ in 0..n {
        for k in 0..dim {
            cloud
                .coords
                .push(rng.random_range(window.bbox.lower[k]..window.bbox.upper[k]));
        }
    }
    Ok(cloud)
}

/// A labeled Poisson realization: nuclei plus their in-shape indicators.
#[derive(Debug, Clone)]
pub struct NucleusSet {
    pub points: PointCloud,
    /// `labels[i] == shape.contains(points[i])`
    pub labels: Vec<bool>,
    pub intensity: f64,
    pub seed: u64,
    pub window: Window,
}

impl NucleusSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count_inside(&self) -> usize {
        self.labels.iter().filter(|l| **l).count()
    }
}

/// Labels each point by exact membership.
pub fn label_nuclei(
    points: PointCloud,
    shape: &Shape,
    window: Window,
    intensity: f64,
    seed: u64,
) -> Result<NucleusSet> {
    if points.dim() != shape.dim() {
        return Err(Error::DimensionMismatch { expected: shape.dim(), got: points.dim() });
    }
    let labels = points.iter().map(|p| shape.is_inside(p)).collect();
    Ok(NucleusSet { points, labels, intensity, seed, window })
}

/// One-call pipeline: sample a realization in the window and label it.
pub fn sample_nuclei(shape: &Shape, window: &Window, lambda: f64, seed: u64) -> Result<NucleusSet> {
    let points = sample_ppp(window, lambda, seed)?;
    label_nuclei(points, shape, window.clone(), lambda, seed)
}

/// As [`sample_nuclei`] with an explicit stream of a master seed.
pub fn sample_nuclei_stream(
    shape: &Shape,
    window: &Window,
    lambda: f64,
    master_seed: u64,
    stream: u64,
) -> Result<NucleusSet> {
    let mut rng = stream_rng(master_seed, stream);
    let points = sample_ppp_with(window, lambda, &mut rng)?;
    label_nuclei(points, shape, window.clone(), lambda, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn window_margin_formula() {
        let disk = Shape::unit_ball(2);
        let w = simulation_window(&disk, 1e4, 4.0).unwrap();
        // 4 * (ln 1e4 / (pi 1e4))^{1/2}
        assert!((w.margin - 0.068489).abs() < 1e-5, "margin {}", w.margin);
        assert!(w.bbox.lower[0] < -1.0 && w.bbox.upper[0] > 1.0);

        // linear in safety
        let w1 = simulation_window(&disk, 1e4, 1.0).unwrap();
        let w8 = simulation_window(&disk, 1e4, 8.0).unwrap();
        assert!((w8.margin / w1.margin - 8.0).abs() < 1e-12);

        // margin -> 0 as lambda -> infinity
        let whuge = simulation_window(&disk, 1e12, 4.0).unwrap();
        assert!(whuge.margin < w.margin && whuge.margin < 1e-4);

        assert!(simulation_window(&disk, 0.0, 4.0).is_err());
        assert!(simulation_window(&disk, 10.0, 0.5).is_err());
    }

    #[test]
    fn poisson_mean_and_variance() {
        // lambda Vol = 100 over many seed streams
        let mean = 100.0;
        let n_seeds = 10_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for s in 0..n_seeds {
            let mut rng = stream_rng(9, s);
            let n = poisson_count(mean, &mut rng) as f64;
            sum += n;
            sum2 += n * n;
        }
        let m = sum / n_seeds as f64;
        let v = sum2 / n_seeds as f64 - m * m;
        assert!((m - mean).abs() < 0.4, "sample mean {m}");
        assert!((v - mean).abs() < 10.0, "sample variance {v}");
    }

    #[test]
    fn ppp_deterministic_under_seed() {
        let disk = Shape::unit_ball(2);
        let w = simulation_window(&disk, 500.0, 4.0).unwrap();
        let a = sample_ppp(&w, 500.0, 77).unwrap();
        let b = sample_ppp(&w, 500.0, 77).unwrap();
        assert_eq!(a, b);
        let c = sample_ppp(&w, 500.0, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn adjacent_streams_are_disjoint() {
        let disk = Shape::unit_ball(2);
        let w = simulation_window(&disk, 200.0, 4.0).unwrap();
        let a = sample_nuclei_stream(&disk, &w, 200.0, 5, 0).unwrap();
        let b = sample_nuclei_stream(&disk, &w, 200.0, 5, 1).unwrap();
        for p in a.points.iter() {
            for q in b.points.iter() {
                assert_ne!(p, q);
            }
        }
    }

    #[test]
    fn labels_match_membership() {
        let disk = Shape::unit_ball(2);
        let w = simulation_window(&disk, 1000.0, 4.0).unwrap();
        let set = sample_nuclei(&disk, &w, 1000.0, 3).unwrap();
        for (p, l) in set.points.iter().zip(&set.labels) {
            assert_eq!(*l, disk.is_inside(p));
        }
        // area-fraction sanity: window [-1.1..,1.1..]^2, disk fraction ~ pi / Vol(W)
        let frac = set.count_inside() as f64 / set.len() as f64;
        let expect = PI / w.volume();
        let sigma = libm::sqrt(expect * (1.0 - expect) / set.len() as f64);
        assert!((frac - expect).abs() < 4.0 * sigma, "frac {frac} expect {expect}");
    }

    #[test]
    fn label_all_true_and_all_false() {
        // shape containing the whole window
        let big = Shape::ball(alloc::vec![0.0, 0.0], 100.0);
        let w = simulation_window(&Shape::unit_ball(2), 100.0, 4.0).unwrap();
        let set = sample_nuclei(&big, &w, 100.0, 1).unwrap();
        assert!(set.labels.iter().all(|l| *l));

        let far = Shape::ball(alloc::vec![50.0, 50.0], 1.0);
        let set = sample_nuclei(&far, &w, 100.0, 1).unwrap();
        assert!(set.labels.iter().all(|l| !*l));
    }

    #[test]
    fn restriction_property_chi_square() {
        // counts over a 4x4 partition of the window pooled across seeds
        // behave like i.i.d. Poisson cells: chi-square GOF on the index-of-
        // dispersion statistic at significance 1e-3.
        let disk = Shape::unit_ball(2);
        let w = simulation_window(&disk, 64.0, 4.0).unwrap();
        let cells = 16usize;
        let mut counts = alloc::vec![0.0f64; cells];
        let mut counts2 = alloc::vec![0.0f64; cells];
        let n_seeds = 1000u64;
        for s in 0..n_seeds {
            let pts = sample_ppp(&w, 64.0, s).unwrap();
            let mut c = [0u32; 16];
            for p in pts.iter() {
                let ix = (((p[0] - w.bbox.lower[0]) / (w.bbox.upper[0] - w.bbox.lower[0]))
                    * 4.0)
                    .min(3.999) as usize;
                let iy = (((p[1] - w.bbox.lower[1]) / (w.bbox.upper[1] - w.bbox.lower[1]))
                    * 4.0)
                    .min(3.999) as usize;
                c[ix * 4 + iy] += 1;
            }
            for (k, v) in c.iter().enumerate() {
                counts[k] += *v as f64;
                counts2[k] += (*v as f64) * (*v as f64);
            }
        }
        // per cell: mean ~= variance (Poisson); dispersion index chi2 test
        for k in 0..cells {
            let m = counts[k] / n_seeds as f64;
            let v = counts2[k] / n_seeds as f64 - m * m;
            let dispersion = v / m;
            // chi2_{999} / 999 in [0.86, 1.15] covers significance ~1e-3
            assert!(
                dispersion > 0.86 && dispersion < 1.15,
                "cell {k}: dispersion {dispersion}"
            );
        }
    }
}
