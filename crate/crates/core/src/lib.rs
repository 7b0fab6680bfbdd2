//! Finite-energy path groups over compact matrix Lie groups.
//!
//! The crate realizes the based path group `H¹₀([0,1], G)` through its right
//! logarithmic derivative, i.e. as `L²((0,1), 𝔤)` with the transported product
//! `f ∗ g = f + Ad_{Π exp f} g`, and provides Monte Carlo estimators for the
//! invariance defects of the ball measures `ν_N` on the step-function
//! subspaces `V_N`.
//!
//! Modules, bottom-up:
//!
//! * [`liegroup`]: matrix groups `SO(n)` and `SU(2)`, exp/log, `Ad`, Haar sampling.
//! * [`pathspace`]: step paths, product integrals, log derivatives, the `∗` law.
//! * [`ballmeasure`]: sampling `ν_N`, shifted-ball overlaps, concentration tails.
//! * [`meanlab`]: invariance defect estimators, Brownian paths, the non-SIN witness.
//! * [`report`]: CSV and JSON emitters with a byte-stable float format.

pub mod ballmeasure;
mod error;
pub mod liegroup;
mod matfn;
pub mod meanlab;
pub mod pathspace;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
