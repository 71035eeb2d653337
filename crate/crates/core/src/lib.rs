//! Local stability analysis for equilibria of two-time-scale systems.
//!
//! * [`charpoly`]: determinants, principal-minor sums and characteristic
//!   polynomials over a generic scalar ring.
//! * [`gamma`]: polynomials in the large parameter `Γ = 1/ε`.
//! * [`routh`]: Routh arrays and verdicts over reals or `Γ`-ratios.
//! * [`tworisk`]: the five-state two-risk-group SEIR model.
//! * [`oracle`]: numeric roots, eigenvalues, Newton refinement, integration.
//! * [`sweep`] and [`report`]: sampled verification and per-point reports.

pub mod charpoly;
pub mod error;
pub mod gamma;
pub mod oracle;
pub mod report;
pub mod routh;
pub mod sweep;
pub mod tworisk;

pub use charpoly::{
    charpoly_leverrier, charpoly_minors, det, principal_minor_sum, CharPoly, Ring, SquareMatrix,
};
pub use error::{Error, Result};
pub use gamma::{GammaPoly, GammaRatio, LeadingTerm};
pub use routh::{build_routh, routh_verdict, RouthArray, Stability, Verdict};
pub use tworisk::{EdeState, Params, State};
