//! Poisson-Voronoi approximation of Euclidean sets.
//!
//! Given a shape `A` in `R^d` and a homogeneous Poisson point process of
//! intensity `lambda`, the Poisson-Voronoi approximation `A_eta` is the union
//! of the Voronoi cells whose nuclei fall inside `A`; equivalently, a point
//! belongs to `A_eta` iff its nearest nucleus lies in `A`. This crate
//! provides:
//!
//! * [`geom`] — CSG shapes with exact membership, analytic volume/perimeter
//!   and the dimensional constants `kappa_d`, `c_d`;
//! * [`covariogram`] — the set covariogram `g_A`, its spherical aggregate,
//!   directional derivatives at the origin and perimeter recovery;
//! * [`sampler`] — reproducible Poisson point process realizations in dilated
//!   windows;
//! * [`approx`] — nearest-nucleus classification and replicated Monte Carlo
//!   volume estimation of `A_eta` and the symmetric difference;
//! * [`theory`] — exact (quadrature) and asymptotic predictions for the mean
//!   and moments of `Vol(A delta A_eta)`, plus rate diagnostics.
//!
//! The crate is `no_std` compatible (requires `alloc`).

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod approx;
pub mod covariogram;
pub mod error;
pub mod geom;
pub mod quadrature;
pub mod sampler;
pub mod special;
pub mod theory;

pub use error::Error;

/// Convenience result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
