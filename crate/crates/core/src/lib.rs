//! Local, hierarchy-free decoders for the repetition and toric codes.
//!
//! The decoder is a cellular automaton on a `(d+1)`-dimensional control
//! lattice: syndrome changes enter at the bottom, drift toward a back wall,
//! and are paired up by locally propagated messages on the way.

pub mod automaton;
pub mod code;
pub mod error;
pub mod experiments;
pub mod fieldsim;
pub mod noise;
pub mod rng;
pub mod schedule;
pub mod world;

pub use error::{Error, Result};
