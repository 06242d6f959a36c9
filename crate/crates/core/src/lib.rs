//! Numerical thermodynamic formalism for one-sided shifts `Ω = 𝒜^ℕ`.
//!
//! The alphabet `𝒜` is either finite or a quadrature discretization of a
//! compact interval, and always carries a full-support a priori probability
//! `p`. Potentials are locally constant (depth `k`), which turns the Ruelle
//! operator
//!
//! ```text
//! (𝓛_f φ)(x) = ∫ exp(f(ax)) φ(ax) dp(a)
//! ```
//!
//! into a finite positive operator. On top of that the crate computes
//! maximal spectral data, normalized potentials, Gibbs (equilibrium)
//! measures, finite-volume and specific entropies, the DLR kernels
//! `γ_n(·|y) = 𝓛ⁿ(1_·)(σⁿy)` and the variational entropy.
//!
//! Enumeration-heavy loops run on rayon when the `parallel` feature is on
//! (the default). [`exec::sequential`] forces the sequential path for a
//! scope; both paths produce bit-identical results.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alphabet;
pub mod dlr;
pub mod entropy;
pub mod error;
pub mod exec;
pub mod extended;
pub mod measures;
pub mod potential;
pub mod quadrature;
pub mod symbolic;
pub mod transfer;
pub mod variational;

pub use alphabet::{Alphabet, AlphabetKind, Density, Metric, QuadratureRule};
pub use error::{Error, Result};
pub use extended::ExtendedReal;
pub use measures::{CylinderMeasure, MarkovMeasure, Mixture};
pub use potential::Potential;
pub use symbolic::{BoundaryCondition, Sequence, Word};
pub use transfer::{SpectralData, TransferMatrix};
pub use variational::{OptimizationConfig, VariationalReport};
