#![no_std]
extern crate alloc;

pub mod asymptotics;
pub mod embeddings;
pub mod exact;
pub mod kappa;
pub mod percolation;
pub mod precision;
pub mod quadrant;
pub mod renewal;
pub mod rng;
pub mod stats;
pub mod table;
pub mod urn;
