//! Harmonic analysis on compact Lie groups (tori up to dimension three and
//! SU(2)): Fourier transform, Fourier multipliers, oscillating kernels,
//! Hörmander-type kernel seminorms and the Calderón–Zygmund decomposition.

pub mod cz;
pub mod dual;
pub mod experiment;
pub mod error;
pub mod fourier;
pub mod group;
pub mod hormander;
pub mod multiplier;
pub mod numeric;
pub mod quadrature;
pub mod wigner;

pub use error::{Error, Result};
