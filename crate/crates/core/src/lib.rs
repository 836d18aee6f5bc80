//! Constellation-constrained capacity regions of the two-user Gaussian
//! interference channel.
//!
//! The crate evaluates the mutual informations that bound the rate region
//! when both users transmit uniformly over finite constellations, searches
//! for the relative rotation between the constellations that enlarges the
//! region, and compares simultaneous decoding against FDMA.

pub mod channel;
pub mod cli;
pub mod constellation;
pub mod error;
pub mod fdma;
pub mod lse;
pub mod mi;
pub mod quadrature;
pub mod regions;
pub mod rotation;
pub mod svg;

pub use channel::{ChannelInstance, Gain, Receiver};
pub use constellation::{Constellation, ConstellationSpec, Family};
pub use error::{Error, Result};
pub use mi::{Method, MiEstimate, NoiseRule, SumBound};
