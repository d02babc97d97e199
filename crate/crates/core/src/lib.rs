//! Gaussian analysis on truncated sequence spaces.
//!
//! The crate realizes, at finite truncation, the correlated Gaussian measure
//! `mu_A` on a sequence space over a Hilbert space `H`, together with the
//! machinery needed to compute with it:
//!
//! * [`seqspace`]: bullet/bracket maps, A-weighted inner products, operator
//!   extension, A-Gram-Schmidt, block projections, PSD helpers;
//! * [`hermite`]: Hermite polynomials in both normalizations and Gauss-Hermite
//!   quadrature;
//! * [`wick`]: polarized symmetric kernels and Wick polynomials, with a dense
//!   brute-force oracle;
//! * [`measure`]: seeded sampling of `mu_A`, Monte Carlo estimators and the
//!   exact pair-partition moment oracle;
//! * [`chaos`]: chaos expansions and conditional expectations as kernel-wise
//!   A-orthogonal projections;
//! * [`closure`]: the 1-D radiative-transfer moment system with P_N and
//!   optimal-prediction closures.

pub mod chaos;
pub mod cli;
pub mod closure;
pub mod error;
pub mod hermite;
pub mod io;
pub mod measure;
pub mod seqspace;
pub mod verify;
pub mod wick;

pub use error::{Error, Result};
pub use seqspace::{CovOp, HVec, SeqVec, TruncationDims};
