//! Desk-scale workbench for integer points on spheres.
//!
//! The crate enumerates the shells `E(n) = {x in Z^3 : |x|^2 = n}`, measures how
//! evenly their projections fill spherical caps (variance by Monte Carlo,
//! by product quadrature and by the spectral route through Weyl sums), and
//! provides the half-integral weight machinery behind the average bounds:
//! theta series attached to harmonic polynomials, generalized Kloosterman
//! sums, Petersson-type coefficient bounds and Rankin–Selberg Dirichlet series.
//!
//! Measure convention used everywhere: `σ` is the normalized (probability)
//! surface measure on the unit sphere, harmonic bases are `σ`-orthonormal and
//! the zonal transform of a kernel `f(cos d)` is `T(m) = ½ ∫_{-1}^{1} f(t) P_m(t) dt`.

pub mod arith;
pub mod capstat;
mod error;
pub mod harmonics;
pub mod kloosterman;
pub mod lseries;
pub mod modular;
pub mod quadrature;
pub mod variance;

pub use error::{Error, Result};
