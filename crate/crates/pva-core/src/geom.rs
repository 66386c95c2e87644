//! Dimension-generic CSG shapes with exact membership tests, analytic
//! volume/perimeter, and dimensional constants.

use alloc::boxed::Box as ABox;
use alloc::vec::Vec;

use crate::special::gamma;
use crate::{Error, Result};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Aabb {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l).max(0.0))
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(xi, (l, u))| *l <= *xi && *xi <= *u)
    }

    fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a.min(*b))
                .collect(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    fn dilate(&self, margin: f64) -> Aabb {
        Aabb {
            lower: self.lower.iter().map(|l| l - margin).collect(),
            upper: self.upper.iter().map(|u| u + margin).collect(),
        }
    }
}

/// A d-dimensional set with exact membership and, where the construction
/// admits it, closed-form volume and perimeter.
///
/// Boundary points are inside: membership uses closed balls and boxes
/// (`<=` comparisons). Union/difference volumes and perimeters are only
/// reported when the operands are provably disjoint (union) or nested with
/// positive clearance (difference), so inclusion-exclusion is exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Union(ABox<Shape>, ABox<Shape>),
    Difference(ABox<Shape>, ABox<Shape>),
}

impl Shape {
    /// Closed ball of the given radius around the origin.
    pub fn unit_ball(dim: usize) -> Shape {
        Shape::ball(alloc::vec![0.0; dim], 1.0)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Shape {
        assert!(radius > 0.0 && !center.is_empty());
        Shape::Ball { center, radius }
    }

    pub fn cuboid(lower: Vec<f64>, upper: Vec<f64>) -> Shape {
        assert!(
            !lower.is_empty()
                && lower.len() == upper.len()
                && lower.iter().zip(&upper).all(|(l, u)| l < u)
        );
        Shape::Box { lower, upper }
    }

    /// Axis-aligned unit cube `[0,1]^d`.
    pub fn unit_cube(dim: usize) -> Shape {
        Shape::cuboid(alloc::vec![0.0; dim], alloc::vec![1.0; dim])
    }

    pub fn union(left: Shape, right: Shape) -> Result<Shape> {
        if left.dim() != right.dim() {
            return Err(Error::DimensionMismatch {
                expected: left.dim(),
                got: right.dim(),
            });
        }
        Ok(Shape::Union(ABox::new(left), ABox::new(right)))
    }

    pub fn difference(left: Shape, right: Shape) -> Result<Shape> {
        if left.dim() != right.dim() {
            return Err(Error::DimensionMismatch {
                expected: left.dim(),
                got: right.dim(),
            });
        }
        Ok(Shape::Difference(ABox::new(left), ABox::new(right)))
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.len(),
            Shape::Box { lower, .. } => lower.len(),
            Shape::Union(l, _) | Shape::Difference(l, _) => l.dim(),
        }
    }

    /// Exact membership with a dimension check.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.is_inside(x))
    }

    /// Exact membership; `x` must have the shape's dimension.
    pub fn is_inside(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Shape::Ball { center, radius } => {
                let d2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d2 <= radius * radius
            }
            Shape::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (l, u))| *l <= *xi && *xi <= *u),
            Shape::Union(l, r) => l.is_inside(x) || r.is_inside(x),
            Shape::Difference(l, r) => l.is_inside(x) && !r.is_inside(x),
        }
    }

    /// Closed-form volume, absent for overlapping CSG operands.
    pub fn analytic_volume(&self) -> Option<f64> {
        match self {
            Shape::Ball { center, radius } => {
                let d = center.len();
                Some(unit_ball_volume(d).ok()? * libm::pow(*radius, d as f64))
            }
            Shape::Box { lower, upper } => {
                Some(lower.iter().zip(upper).map(|(l, u)| u - l).product())
            }
            Shape::Union(l, r) => {
                if l.disjoint_from(r) {
                    Some(l.analytic_volume()? + r.analytic_volume()?)
                } else {
                    None
                }
            }
            Shape::Difference(l, r) => {
                if r.strictly_inside(l) {
                    Some(l.analytic_volume()? - r.analytic_volume()?)
                } else {
                    None
                }
            }
        }
    }

    /// Closed-form perimeter ((d-1)-dimensional boundary measure), absent
    /// for overlapping CSG operands.
    pub fn analytic_perimeter(&self) -> Option<f64> {
        match self {
            Shape::Ball { center, radius } => {
                let d = center.len();
                // surface of a d-ball: d * kappa_d * r^{d-1}
                Some(
                    d as f64
                        * unit_ball_volume(d).ok()?
                        * libm::pow(*radius, (d - 1) as f64),
                )
            }
            Shape::Box { lower, upper } => {
                let sides: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
                let d = sides.len();
                if d == 1 {
                    // two endpoints, counting measure
                    return Some(2.0);
                }
                let mut per = 0.0;
                for i in 0..d {
                    let face: f64 = sides
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, s)| *s)
                        .product();
                    per += 2.0 * face;
                }
                Some(per)
            }
            Shape::Union(l, r) => {
                if l.disjoint_from(r) {
                    Some(l.analytic_perimeter()? + r.analytic_perimeter()?)
                } else {
                    None
                }
            }
            Shape::Difference(l, r) => {
                if r.strictly_inside(l) {
                    Some(l.analytic_perimeter()? + r.analytic_perimeter()?)
                } else {
                    None
                }
            }
        }
    }

    /// Axis-aligned box containing the shape dilated by `margin`.
    pub fn bounding_box(&self, margin: f64) -> Aabb {
        assert!(margin >= 0.0);
        self.tight_bbox().dilate(margin)
    }

    fn tight_bbox(&self) -> Aabb {
        match self {
            Shape::Ball { center, radius } => Aabb {
                lower: center.iter().map(|c| c - radius).collect(),
                upper: center.iter().map(|c| c + radius).collect(),
            },
            Shape::Box { lower, upper } => Aabb {
                lower: lower.clone(),
                upper: upper.clone(),
            },
            Shape::Union(l, r) => l.tight_bbox().union(&r.tight_bbox()),
            // the subtracted part cannot enlarge the set
            Shape::Difference(l, _) => l.tight_bbox(),
        }
    }

    /// Conservative disjointness test (sufficient, not necessary).
    fn disjoint_from(&self, other: &Shape) -> bool {
        match (self, other) {
            (
                Shape::Ball { center: c1, radius: r1 },
                Shape::Ball { center: c2, radius: r2 },
            ) => dist(c1, c2) > r1 + r2,
            (Shape::Ball { center, radius }, Shape::Box { lower, upper })
            | (Shape::Box { lower, upper }, Shape::Ball { center, radius }) => {
                dist_point_box(center, lower, upper) > *radius
            }
            (Shape::Box { lower: l1, upper: u1 }, Shape::Box { lower: l2, upper: u2 }) => l1
                .iter()
                .zip(u1)
                .zip(l2.iter().zip(u2))
                .any(|((l1, u1), (l2, u2))| u1 < l2 || u2 < l1),
            // fall back to bounding boxes for compound operands
            _ => {
                let a = self.tight_bbox();
                let b = other.tight_bbox();
                a.lower
                    .iter()
                    .zip(&a.upper)
                    .zip(b.lower.iter().zip(&b.upper))
                    .any(|((l1, u1), (l2, u2))| u1 < l2 || u2 < l1)
            }
        }
    }

    /// Conservative "self lies strictly inside `outer` with positive
    /// clearance" test (sufficient, not necessary).
    fn strictly_inside(&self, outer: &Shape) -> bool {
        match (self, outer) {
            (
                Shape::Ball { center: ci, radius: ri },
                Shape::Ball { center: co, radius: ro },
            ) => dist(ci, co) + ri < *ro,
            (Shape::Ball { center, radius }, Shape::Box { lower, upper }) => center
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(c, (l, u))| l + radius < *c && *c < u - radius),
            (Shape::Box { lower, upper }, Shape::Ball { center, radius }) => {
                // all corners strictly inside the ball
                corners_max_dist(lower, upper, center) < *radius
            }
            (Shape::Box { lower: li, upper: ui }, Shape::Box { lower: lo, upper: uo }) => li
                .iter()
                .zip(ui)
                .zip(lo.iter().zip(uo))
                .all(|((li, ui), (lo, uo))| lo < li && ui < uo),
            _ => false,
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn dist_point_box(p: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    let d2: f64 = p
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (l, u))| {
            let t = if x < l {
                l - x
            } else if x > u {
                x - u
            } else {
                0.0
            };
            t * t
        })
        .sum();
    libm::sqrt(d2)
}

fn corners_max_dist(lower: &[f64], upper: &[f64], center: &[f64]) -> f64 {
    // farthest corner coordinate-wise
    let d2: f64 = center
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(c, (l, u))| {
            let t = (c - l).abs().max((u - c).abs());
            t * t
        })
        .sum();
    libm::sqrt(d2)
}

/// Volume `kappa_d` of the unit d-ball, by the recurrence
/// `kappa_d = 2 pi / d * kappa_{d-2}` (equals `pi^{d/2} / Gamma(d/2 + 1)`).
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d > 20 {
        return Err(Error::DimensionOutOfRange { dim: d, min: 0, max: 20 });
    }
    let mut even = 1.0; // kappa_0
    let mut odd = 2.0; // kappa_1
    if d == 0 {
        return Ok(even);
    }
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        if k % 2 == 0 {
            even *= 2.0 * core::f64::consts::PI / k as f64;
        } else {
            odd *= 2.0 * core::f64::consts::PI / k as f64;
        }
        k += 2;
    }
    Ok(if d % 2 == 0 { even } else { odd })
}

/// The asymptotic constant `c_d = 2 d^{-2} Gamma(1/d) kappa_{d-1}
/// kappa_d^{-1-1/d}` governing the mean symmetric-difference volume.
pub fn pva_constant(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::DimensionOutOfRange { dim: d, min: 1, max: 20 });
    }
    let df = d as f64;
    let kappa_d = unit_ball_volume(d)?;
    let kappa_dm1 = unit_ball_volume(d - 1)?;
    Ok(2.0 / (df * df) * gamma(1.0 / df) * kappa_dm1 * libm::pow(kappa_d, -1.0 - 1.0 / df))
}

/// Bundle of the dimensional constants used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimConstants {
    pub dim: usize,
    /// volume of the unit d-ball
    pub kappa: f64,
    /// volume of the unit (d-1)-ball (1 for d = 1, by the 0-ball convention)
    pub kappa_minus1: f64,
    /// asymptotic constant c_d
    pub c_d: f64,
}

impl DimConstants {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::DimensionOutOfRange { dim, min: 1, max: 20 });
        }
        Ok(DimConstants {
            dim,
            kappa: unit_ball_volume(dim)?,
            kappa_minus1: unit_ball_volume(dim - 1)?,
            c_d: pva_constant(dim)?,
        })
    }

    /// Surface measure of the unit sphere S^{d-1}: `d * kappa_d`.
    pub fn sphere_surface(&self) -> f64 {
        self.dim as f64 * self.kappa
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn unit_ball_volume_low_dims() {
        assert_eq!(unit_ball_volume(1).unwrap(), 2.0);
        assert!((unit_ball_volume(2).unwrap() - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!(unit_ball_volume(21).is_err());
    }

    #[test]
    fn pva_constant_low_dims() {
        assert!((pva_constant(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((pva_constant(2).unwrap() - 1.0 / PI).abs() < 1e-15);
        // frozen from an arbitrary-precision evaluation of the formula
        assert!((pva_constant(3).unwrap() - 0.27698013918254510235).abs() < 1e-13);
    }

    #[test]
    fn ball_membership_boundary() {
        let disk = Shape::unit_ball(2);
        assert!(disk.contains(&[0.0, 0.0]).unwrap());
        assert!(disk.contains(&[1.0, 0.0]).unwrap()); // closed-set convention
        assert!(!disk.contains(&[1.0001, 0.0]).unwrap());
        assert!(disk.contains(&[0.0]).is_err());
    }

    #[test]
    fn bounding_boxes() {
        let disk = Shape::unit_ball(2);
        let bb = disk.bounding_box(0.0);
        assert_eq!(bb.lower, alloc::vec![-1.0, -1.0]);
        assert_eq!(bb.upper, alloc::vec![1.0, 1.0]);
        let bb = disk.bounding_box(0.5);
        assert_eq!(bb.lower, alloc::vec![-1.5, -1.5]);

        let cube = Shape::unit_cube(2);
        let bb = cube.bounding_box(0.1);
        assert!((bb.lower[0] + 0.1).abs() < 1e-15 && (bb.upper[1] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn csg_volume_inclusion_exclusion() {
        let a = Shape::ball(alloc::vec![0.0, 0.0], 1.0);
        let b = Shape::ball(alloc::vec![5.0, 0.0], 1.0);
        let u = Shape::union(a.clone(), b).unwrap();
        assert!((u.analytic_volume().unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((u.analytic_perimeter().unwrap() - 4.0 * PI).abs() < 1e-12);

        let inner = Shape::ball(alloc::vec![0.0, 0.0], 0.5);
        let annulus = Shape::difference(a.clone(), inner).unwrap();
        assert!((annulus.analytic_volume().unwrap() - (PI - 0.25 * PI)).abs() < 1e-12);
        assert!((annulus.analytic_perimeter().unwrap() - 3.0 * PI).abs() < 1e-12);

        // overlapping union: no analytic volume
        let c = Shape::ball(alloc::vec![0.5, 0.0], 1.0);
        let o = Shape::union(a, c).unwrap();
        assert!(o.analytic_volume().is_none());
        assert!(o.analytic_perimeter().is_none());
    }

    #[test]
    fn csg_membership() {
        let a = Shape::ball(alloc::vec![0.0, 0.0], 1.0);
        let inner = Shape::ball(alloc::vec![0.0, 0.0], 0.5);
        let annulus = Shape::difference(a, inner).unwrap();
        assert!(!annulus.is_inside(&[0.0, 0.0]));
        assert!(annulus.is_inside(&[0.75, 0.0]));
        assert!(!annulus.is_inside(&[1.1, 0.0]));
    }

    #[test]
    fn box_perimeter() {
        let b = Shape::cuboid(alloc::vec![0.0, 0.0], alloc::vec![2.0, 3.0]);
        assert!((b.analytic_perimeter().unwrap() - 10.0).abs() < 1e-14);
        let c = Shape::unit_cube(3);
        assert!((c.analytic_perimeter().unwrap() - 6.0).abs() < 1e-14);
        let seg = Shape::cuboid(alloc::vec![0.0], alloc::vec![1.0]);
        assert_eq!(seg.analytic_perimeter().unwrap(), 2.0);
    }

    #[test]
    fn dim_constants() {
        let c = DimConstants::new(1).unwrap();
        assert_eq!(c.kappa, 2.0);
        assert_eq!(c.kappa_minus1, 1.0);
        let c = DimConstants::new(2).unwrap();
        assert!((c.sphere_surface() - 2.0 * PI).abs() < 1e-14);
    }
}
