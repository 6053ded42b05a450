//! Simulation and analysis of two optomechanical cavities whose end mirrors
//! interact through Newtonian gravity.
//!
//! The crate follows the linearised input-output picture: each mirror is a
//! harmonic oscillator driven by radiation pressure and thermal noise, the
//! cavity modes are adiabatically eliminated, and the two mirrors couple via
//! a bilinear gravitational term. From the resulting 4×4 transfer matrix the
//! crate derives output spectra, the optimal cross-correlation SNR, the
//! integration time needed to see the gravity-mediated correlation, Gaussian
//! entanglement measures, and geometric form factors for realistic test
//! masses. A time-domain Monte Carlo closes the loop by checking the analytic
//! SNR against synthetic data.
//!
//! Conventions: SI units throughout, angular frequencies in rad/s, and
//! double-sided spectral densities (vacuum quadrature level 1/2).

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod numdiff;
pub mod params;
pub mod quad;

pub use error::{Error, Result};
pub use params::{
    CavityBandwidth, CavityParams, GravityCoupling, GravityModel, MechanicalParams, OpticalParams,
    PhysicalConstants, SystemParams,
};
