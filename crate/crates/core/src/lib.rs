//! Desk-scale object-goal navigation: a grid world with a depth/semantic ray
//! sensor, a filtered birds-eye semantic map, a test-time adapted per-ray
//! segmenter, a skill-fusion navigation policy and evaluation harness.

// Negated float comparisons are how validation rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decider;
pub mod error;
pub mod framebuf;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod refiner;
pub mod semmap;
pub mod sensors;
pub mod skills;
pub mod world;

pub use error::{Error, Result};
