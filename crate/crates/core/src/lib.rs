//! Heavy-tailed configuration models, first-passage percolation and the
//! branching processes that describe them locally.
//!
//! The crate is `no_std` (with `alloc`); IO and orchestration live in the
//! companion `fpp-sim` crate.
#![no_std]

extern crate alloc;

pub mod branching;
pub mod distributions;
pub mod fpp;
pub mod graph;
pub mod percolation;
pub mod special;
pub mod stats;
pub mod weights;
