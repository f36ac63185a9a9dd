//! Numerical and symbolic laboratory for the moment dynamics of a quantum
//! particle in a time-dependent harmonic (and optionally quartic) potential.
//!
//! The crate is organized around five subsystems that validate each other:
//!
//! - [`classical`]: the classical equation ẍ + ω(t)²x = 0 and its
//!   Wronskian-normalized fundamental pair (q₁, q₂).
//! - [`weyl`]: exact noncommutative polynomial algebra in (x̂, p̂) with
//!   [x̂, p̂] = iħ, Weyl-symmetrized monomials, and the sl(2,ℝ) structure.
//! - [`moments`]: the per-layer moment hierarchy, its closed-form solution
//!   basis, and the conserved invariants.
//! - [`gaussian`]: Gaussian wave-packet effective dynamics in the canonical
//!   pairs (q, p) and (α, β), with quartic corrections.
//! - [`oracle`]: an independent split-step Fourier integrator for the full
//!   Schrödinger equation with Weyl-moment extraction by quadrature.

pub mod classical;
pub mod error;
pub mod gaussian;
pub mod moments;
pub mod numeric;
pub mod oracle;
pub mod tolerances;
pub mod weyl;

pub use classical::{FrequencyProfile, SystemParams, TimeGrid, TrajectoryPair};
pub use error::Error;
pub use gaussian::{GaussianState, PotentialSpec};
pub use moments::{BasisCoefficients, MomentLayer, MomentSeries, MomentState};
pub use oracle::{GridSpec, GridWavefunction};
pub use weyl::{SL2Triple, WeylElement};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
