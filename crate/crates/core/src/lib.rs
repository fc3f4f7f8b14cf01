//! Approachability in generalized quitting games.

pub mod calibration;
pub mod catalog;
pub mod cli;
pub mod conditions;
pub mod error;
pub mod evaluator;
pub mod game;
pub mod geometry;
pub mod reproduce;
pub mod strategies;
pub mod suite;

pub use error::{Error, Result};
