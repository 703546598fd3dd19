//! Client association and airtime allocation for mmWave WLANs.
//!
//! The crate maps a floor plan to a client-by-AP rate matrix, then picks an
//! association (and per-AP airtime split) maximizing the sum of log
//! throughputs. Saturated traffic is handled by a convex relaxation plus
//! rounding; finite demands by water-filling airtime inside a simulated
//! annealing search. Baselines, an exhaustive oracle for small instances
//! and an experiment runner are included.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod loadsolve;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod phy;
pub mod satsolve;
pub mod scenario;

pub use error::{Error, Result};
