//! Numerical toolkit for pitchfork bifurcations.
//!
//! The crate covers the one-dimensional cubic normal form, a two-dimensional
//! quadratic normal form that exhibits a pitchfork without any third-order
//! term, and the genetic toggle switch together with its quadratic surrogate.
//! On top of the model registry it provides equilibrium enumeration,
//! eigenvalue-based stability classification, Poincaré–Hopf index accounting
//! checked against a winding-number degree, RK4 trajectories with a basin
//! uniformity probe, and parameter sweeps that assemble branches and decide
//! whether a detected bifurcation is a pitchfork.

pub mod bifurcation;
pub mod equilibria;
pub mod error;
pub mod field;
pub mod flow;
pub mod index;
pub mod stability;
pub mod toggle;

pub use error::{Error, Result};
pub use field::{make_model, Bounds, Family, Matrix, Model, ModelId, Params, Point};
