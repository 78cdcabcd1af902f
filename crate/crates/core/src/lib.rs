//! Survival probability of a local excitation (an add atom) weakly coupled to
//! a lattice continuum.
//!
//! The crate computes `P00(t) = |<0|exp(-iHt)|0>|²` in three independent ways:
//!
//! * [`dynamics::survival_direct`]: Fourier transform of the local density of
//!   states on the real axis,
//! * [`dynamics::survival_decomposed`]: deformation of that integral into the
//!   lower half-plane, which splits the amplitude into the resonance pole term
//!   (pure survival) and branch-line integrals (return amplitude),
//! * [`oracle::propagate`]: Chebyshev propagation on a finite lattice, which
//!   shares no code with the Green-function machinery.
//!
//! [`analysis`] extracts the decay regimes and the survival-collapse dip from
//! the resulting series.
//!
//! Units: `ħ = 1`, energies in units of the substrate hopping `V`, times in
//! `ħ/V`.

#![allow(clippy::excessive_precision, clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod quadrature;
pub mod resonance;
pub mod special;
pub mod substrate;

pub use num_complex::Complex64 as C64;

pub use analysis::{CollapseDip, RegimeReport};
pub use dynamics::{Method, SurvivalSeries};
pub use error::{Error, Result};
pub use oracle::FiniteLattice;
pub use resonance::{AdatomSpec, Resonance};
pub use substrate::{BandHalf, Sheet, SubstrateKind, SubstrateSpec};
