//! Finite-element solver for the thermal quasi-geostrophic (TQG) equations
//! and their α-regularised variant on the doubly periodic unit square.
//!
//! Buoyancy `b` and potential vorticity `ω` live in a discontinuous Galerkin
//! space and are transported with a local Lax–Friedrichs flux; the stream
//! functions `ψ̃` and `ψ^α` are recovered from `ω` by two continuous Galerkin
//! Helmholtz solves; time is advanced with SSPRK3.

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod fem;
pub mod harness;
pub mod mesh;
pub(crate) mod par;
pub mod quadrature;
pub mod stability;
pub mod timestepper;
pub mod transport;

pub use error::{Result, TqgError};
