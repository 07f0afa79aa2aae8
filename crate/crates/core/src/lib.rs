//! Simulation and exact analysis of incremental generosity tuning in a
//! population playing the repeated prisoner's dilemma.
//!
//! * [`game`]: repeated-game payoffs between AllC, AllD and GTFT players.
//! * [`ehrenfest`]: the weighted Ehrenfest walk the generosity counts follow.
//! * [`population`]: agent-level dynamics and the reduction to that walk.
//! * [`analysis`]: stationary generosity, mean-field payoff and its optimum.

pub mod analysis;
pub mod ehrenfest;
pub mod error;
pub mod game;
pub mod population;
pub mod rng;

pub use error::{Error, Result};
