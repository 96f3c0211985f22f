//! Simulation and analysis toolkit for will-sensing and alignment
//! policies: a sparse time-indexed Will matrix with aggregation and
//! stability metrics, a synthetic-population voting simulator with
//! collusion detection, a collective response session engine, latent-
//! factor elicitation inference, a finite-state universe with discounted
//! alignment value functions, an action-selection pipeline with pluggable
//! scorers, and Fermi calculators for will power.

pub mod crs;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod population;
pub mod remote;
pub mod universe;
pub mod will;
pub mod willpower;

pub use error::{Error, Result};
pub use will::{HumanId, Item, ItemId, Provenance, WillMatrix};
