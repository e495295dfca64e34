//! Monte Carlo harness: experiment configuration, deterministic sweep
//! runners, and CSV emission.

use std::error::Error;
use std::fmt;

use crate::fec::FecError;
use crate::mac::MacError;

mod config;
mod pipeline;
mod run;

pub use config::{
    load_config, parse_snr_grid, Decoder, ExperimentConfig, PhaseSpec, VerifyKind, MAX_TRIALS,
};
pub use pipeline::{
    bits_to_bytes, bytes_to_bits, decode_frame, random_bits, realize_channel, simulate_slot,
    slot_decoder_pair, transmit_frames, trial_rng, DecodedFrame, PhyOracle, SlotDecode,
};
pub use run::{
    csv_string, emit_csv, phy_event_counts, run_ber_sweep, run_phy_stats, run_throughput,
    ResultRow, ThroughputSource, CSV_HEADER,
};

/// Errors surfaced by the harness: invalid configurations, file problems,
/// and failures bubbling up from the decoding or session layers.
#[derive(Debug)]
pub enum SimError {
    Config(String),
    Io { path: String, detail: String },
    Fec(FecError),
    Mac(MacError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(msg) => write!(f, "invalid configuration: {}", msg),
            SimError::Io { path, detail } => write!(f, "{}: {}", path, detail),
            SimError::Fec(e) => write!(f, "decode failed: {}", e),
            SimError::Mac(e) => write!(f, "session failed: {}", e),
        }
    }
}

impl Error for SimError {}

impl From<FecError> for SimError {
    fn from(e: FecError) -> SimError {
        SimError::Fec(e)
    }
}

impl From<MacError> for SimError {
    fn from(e: MacError) -> SimError {
        SimError::Mac(e)
    }
}
