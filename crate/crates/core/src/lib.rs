//! Marketing-mix reallocation with minimum-change constraints.
//!
//! Activities move their spend left, right or not at all; each move must be
//! at least a minimum size, at most `m` activities may move, and total spend
//! grows by at most a fixed fraction. Revenue is a concave quadratic in the
//! change. The crate provides the instance model, convex-hull formulations,
//! Lagrangian node bounds, a branch-and-bound solver and an instance
//! generator.

pub mod bnb;
pub mod gen;
pub mod hull;
pub mod instance;
pub mod relax;

pub use instance::{Activity, Instance, InstanceError, Region, Solution};
