//! Simulation and bound evaluation for additive-noise channels whose noise
//! variance grows with the energy of past inputs.

pub mod bounds;
pub mod channel;
pub mod codec;
pub mod coeffs;
pub mod harness;
pub mod output;
pub mod par;
mod quad;
pub mod rng;
pub mod stats;

pub use channel::{ChannelParams, HeatingChannel, NoiseDistribution};
pub use coeffs::{CoefficientSpec, Verdict};
