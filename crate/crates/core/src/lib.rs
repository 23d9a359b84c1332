//! Dirac operators on foliated space(times).
//!
//! A space(time) `Z = M x T` with metric `g_t + eps0 N^2 dT^2` is described by a
//! family of hypersurface Dirac operators `D_t` on a fixed Hilbert space and a
//! family of lapse operators `N_t`. This crate discretizes such families on flat
//! tori, assembles the total operators on the doubled time-extended space in both
//! Riemannian and Lorentzian signature, and compares them against an intrinsic
//! discretization of the space(time) Dirac operator.
//!
//! Module map:
//!
//! * [`clifford`]: complex Clifford representations and the odd/even recursion.
//! * [`lattice`]: hypersurface geometry and Dirac matrices on `T^n`.
//! * [`family`]: sampled operator families and their axiom checks.
//! * [`assembler`]: product operators `D+`, `D-` and the Lorentzian operator.
//! * [`oracle`]: intrinsic space(time) operator and closed-form spectra.
//! * [`verify`]: named check suite and JSON reports.

pub mod assembler;
pub mod clifford;
pub mod error;
pub mod expr;
pub mod family;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod oracle;
pub mod par;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
