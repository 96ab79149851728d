//! Secure transmission of individual sequences over wiretap channels.
//!
//! The crate evaluates, for a concrete source sequence, the quantities that
//! govern finite-state secure communication:
//!
//! * [`parsing`]: LZ78 incremental parsing, LZ and conditional LZ complexity.
//! * [`channels`]: discrete memoryless channels and their cascades.
//! * [`info`]: entropies, capacity, secrecy capacity and `Gamma[R]`.
//! * [`bounds`]: lower bounds on the bandwidth expansion factor and on
//!   local randomness, with per-term breakdowns.
//! * [`fsm`]: finite-state stochastic encoders and decoders, simulation, and
//!   exact leakage of small systems.
//! * [`wyner`]: desk-scale binning wiretap codes.
//! * [`feedback`]: random binning with incremental transmission and ACK
//!   feedback, decoded by conditional-LZ list decoding.
//! * [`separation`]: LZ78 bitstreams carried by a binning code.

pub mod bounds;
pub mod channels;
pub mod error;
pub mod feedback;
pub mod fsm;
pub mod info;
pub mod io;
pub mod parsing;
pub mod report;
pub mod rng;
pub mod separation;
pub mod wyner;

pub use channels::{cascade, ChannelTriple, TransitionMatrix};
pub use error::{Error, Result};
pub use info::{CapacityResult, ProbVector};
pub use parsing::{Alphabet, SymbolSequence};

/// Default cap on the number of table entries an exact enumeration may touch.
pub const ENUMERATION_BUDGET: u128 = 1 << 24;
