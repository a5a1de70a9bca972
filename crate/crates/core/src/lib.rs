//! Numerics for reparametrization-invariant mechanics.
//!
//! The central object is the first-order homogeneous Lagrangian
//! `L(x, λv) = λ L(x, v)`: an electromagnetic coupling, a relativistic mass
//! term and optional higher symmetric-tensor roots. Around it sit
//!
//! - [`geometry`]: metrics, signatures and the causality classification,
//! - [`lagrangian`]: evaluation, momenta and the identities they satisfy,
//! - [`dynamics`]: gauge-fixed world-line integration,
//! - [`action`]: discrete actions and their stationary paths,
//! - [`brane`]: Jacobian-minor velocities and volume actions of embeddings,
//! - [`clifford`]: gamma matrices, the quadratic-generator linear solve and
//!   the Dirac operator,
//! - [`sweep`]: seeded property sweeps over random Lagrangians.

pub mod action;
pub mod brane;
pub mod clifford;
pub mod dynamics;
pub mod geometry;
pub mod lagrangian;
pub mod profile;
pub mod sweep;

use nalgebra as na;

pub type DMat = na::DMatrix<f64>;
pub type DVec = na::DVector<f64>;

pub use geometry::MetricField;
pub use lagrangian::{LagrangianSpec, SymmetricTensor, SymmetricTensorField, VectorPotentialField};
pub use profile::ScalarProfile;
