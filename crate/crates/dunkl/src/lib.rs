//! Dunkl differential-difference calculus over finite root systems, and a
//! numerical certification pipeline for the Caccioppoli-type estimates and
//! the nonexistence bound attached to the Dunkl A-Laplacian inequality
//! `-Δ_{k,A} u ≥ b Φ(u) χ_{u>0}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`rootsys`] — finite root systems, reflections, orbits, the weight `w_k`;
//! * [`dsl`] — the expression language carrying scalar fields and 1-d profiles
//!   with exact symbolic derivatives;
//! * [`quad`] — deterministic weighted quadrature over balls, annuli and boxes;
//! * [`operator`] — the Dunkl operator, gradient, Laplacian, the weak
//!   A-Laplacian pairing and the differential-inequality residual;
//! * [`orlicz`] — N-functions, M-condition certificates, Legendre conjugates,
//!   the Luxemburg norm and the derived `Φ_{t,Λ,g}` / `(F_t)` machinery;
//! * [`caccioppoli`] — assembly of the local, δ-shifted and global estimates
//!   with all proof-step diagnostics;
//! * [`nonexist`] — the cutoff family, `J₁/J₂` integrals, `𝔉(l)` and the
//!   nonexistence verdict;
//! * [`scenario`] / [`suite`] / [`report`] — config-driven runner plumbing.

pub mod caccioppoli;
pub mod cutoff;
pub mod dsl;
pub mod nonexist;
pub mod operator;
pub mod orlicz;
pub mod quad;
pub mod report;
pub mod rootsys;
pub mod scenario;
pub mod suite;

mod vecn;

pub use vecn::{dot, norm, scale_vec, sub};
