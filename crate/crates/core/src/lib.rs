//! Goal babbling with intrinsic motivation and occasional demonstrations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod interest_map;
pub mod learners;
pub mod memory;
pub mod policy_explorer;
pub mod primitives;
pub mod rng;
pub mod teachers;
pub mod task_explorer;

pub use error::{Error, Result};
pub use geometry::{Goal, Outcome, Rect, TileGrid};
pub use primitives::PolicyParams;
