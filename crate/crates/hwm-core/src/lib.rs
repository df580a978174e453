//! Rational multi-soliton solutions of the half-wave maps equation through
//! their spin Calogero–Moser pole dynamics.
//!
//! The modules build on each other: [`linalg`] and [`model`] provide the
//! data types, [`dynamics`] integrates the pole/spin flow, [`spectral`]
//! holds the Lax matrices and the explicit resolvent formula,
//! [`scattering`] analyses long-time behaviour, [`constructor`] builds
//! initial data with prescribed speeds and [`sobolev`] computes norms of
//! rational profiles.

pub mod constructor;
pub mod dynamics;
pub mod linalg;
pub mod model;
pub mod scattering;
pub mod scenarios;
pub mod sobolev;
pub mod spectral;

pub use linalg::{CMatrix, C64};
pub use model::{Configuration, Spin};
