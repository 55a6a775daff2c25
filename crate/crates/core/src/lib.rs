//! Pseudospectral laboratory for the periodic Kawahara equation
//!
//! ```text
//! ∂_t u − ∂_x⁵ u + λ⁻² β ∂_x³ u + ∂_x(u²) = 0,   x ∈ T_λ = R / 2πλZ
//! ```
//!
//! The crate is organised around the computable pieces of the low-regularity
//! theory for this equation:
//!
//! * [`spectral`]: mean-zero fields on `T_λ`, Sobolev norms, Fourier
//!   multipliers, the I-operator and the torus rescaling map.
//! * [`evolution`]: exact linear propagator, dealiased quadratic
//!   nonlinearity, integrating-factor / ETD Runge-Kutta and an L²-conserving
//!   integrating-factor Gauss-Legendre integrator, and
//!   Duhamel-quadrature Picard iterates.
//! * [`hierarchy`]: symmetrised multipliers, the functionals `Λ_l`, the
//!   correction multipliers `M_3 … M_5`, `σ_3`, `σ_4` and the modified
//!   energies `E_I^(2..4)`.
//! * [`bourgain`]: discrete `X^{s,b}`, `Y^s` and `Z^s` norms of space-time
//!   data, region classification and empirical bilinear probes.
//! * [`illposed`]: the two-mode witness `φ_N` and the closed-form second and
//!   third Picard terms.
//!
//! Frequencies are always carried as integer indices `n` with `k = n / λ`.
//! Heavy loops go through [`exec::Exec`], which runs on rayon when the
//! `parallel` feature is enabled and sequentially otherwise.

pub mod bourgain;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod hierarchy;
pub mod illposed;
pub mod io;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Exec;
pub use num_complex::Complex64;
pub use spectral::{Beta, IMultiplier, MultiplierVariant, SpectralField, TorusSpec};
