//! Simulation engine for bilateral exchange under motivation and power
//! imbalances.
//!
//! The modules build on each other: [`exchange`] holds the primitive
//! quantities and reserve-price adjustment, [`negotiation`] runs the offer
//! dynamics, [`supply_chain`] chains negotiations, [`nonmarket`] handles
//! money-free exchanges, [`power_graph`] searches for chains of helpers and
//! [`society`] runs population-scale wealth dynamics.

pub mod error;
pub mod exchange;
pub mod negotiation;
pub mod nonmarket;
pub mod power_graph;
pub mod society;
pub mod supply_chain;

pub use error::{Error, Result};
