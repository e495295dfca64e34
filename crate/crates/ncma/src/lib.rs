//! Simulation toolkit for network-coded multiple access.
//!
//! Two single-antenna transmitters send simultaneously to a receiver with one
//! or two antennas. The receiver runs two families of soft demodulators over
//! the superimposed signal: XOR demodulators that target the bitwise XOR of
//! the two coded streams (exploiting the linearity of the convolutional
//! code), and multiuser demodulators that target each stream individually.
//! Verified packets feed a MAC layer that stitches messages together with an
//! any-L-of-N erasure code and XOR bridging, and a Monte Carlo harness
//! measures bit error rates, slot event statistics, and session throughput.

pub mod channel;
pub mod demod;
pub mod fec;
pub mod mac;
pub mod modem;
pub mod sim;

pub use channel::{ChannelState, RxSamplePair};
pub use modem::{ModScheme, Symbol};
