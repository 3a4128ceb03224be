//! Simulation laboratory for random geometric graphs and geometric
//! random k-SAT: model generators, satisfiability solvers and
//! certificates, closed-form quantities, and a seeded Monte Carlo
//! experiment engine.

pub mod analytics;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
pub mod models;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
