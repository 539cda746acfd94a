//! Expected characteristic polynomials of corner projections, sums and
//! products of invariant random matrices at general β, a Monte Carlo sampler
//! for the β-corners process, and its β → ∞ limit: the lattice of roots of
//! successive derivatives with a discrete Gaussian free field on top.
//!
//! Module map:
//!
//! * [`poly`]: monic real-rooted polynomials and spectra.
//! * [`finfree`]: finite free projection, additive and multiplicative
//!   convolution, with permutation-average oracles.
//! * [`corners`]: the β-corners density and its level-by-level sampler.
//! * [`matrix`]: β = 1, 2 matrix realizations (Haar conjugation, Jacobi
//!   eigenvalues).
//! * [`infinity`]: the ∞-corners lattice and Gaussian field.
//! * [`symfunc`]: monomial / Jack symmetric function engine.
//! * [`quadrature`], [`stats`], [`rng`]: numerical support.

pub mod corners;
pub mod error;
pub mod finfree;
pub mod infinity;
pub mod matrix;
pub mod numeric;
pub mod poly;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod symfunc;

pub use error::{Error, Result};
pub use poly::{RealRootedPoly, Spectrum};
