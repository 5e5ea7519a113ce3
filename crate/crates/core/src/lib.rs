//! Training pointer networks for Euclidean TSP with negatively correlated
//! search, plus the classical baselines and portfolio inference needed to
//! evaluate them.
//!
//! The crate is `no_std`-compatible (with `alloc`); everything here is pure
//! computation over in-memory data. File formats, checkpoints, and the CLI
//! live in the companion `ptrnet-ea` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod evolution;
pub mod portfolio;
pub mod ptrnet;
pub mod rng;
pub mod tsp;

pub use evolution::{NcsConfig, RunRecord, SearchState, SigmaRule, Trainer};
pub use portfolio::{Portfolio, PortfolioReport};
pub use ptrnet::{DecodeMode, DecodeTrace, NetworkConfig, ParamLayout, ParamVector};
pub use tsp::{Dataset, Instance, Point, Split, Tour};
