//! Frame-level plumbing shared by the sweep runners: deterministic RNG
//! substreams, frame transmission, decoder dispatch, and a full-PHY slot
//! oracle for throughput sessions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{sigma_from_snr, transmit, ChannelState, RxSamplePair};
use crate::demod::{
    mud_bit_llr, mud_reduced, mud_symbol_logprob, pnc_bit_llr, pnc_nearest_point,
    pnc_symbol_logprob, User,
};
use crate::fec::{conv_encode, viterbi_bit, viterbi_symbol, SoftBit, SoftSymbolVector};
use crate::mac::{SlotDecision, SlotOracle, SlotTruth};
use crate::modem::{build_joint, modulate, ModScheme, Symbol};

use super::config::{Decoder, ExperimentConfig};
use super::SimError;

/// Substream id reserved for session message payloads.
pub(super) const MESSAGE_STREAM: u64 = 0xFFFF_FFFD;
/// Substream id reserved for the per-slot decode oracle.
pub(super) const ORACLE_STREAM: u64 = 0xFFFF_FFFE;

/// Independent RNG for one Monte Carlo trial, keyed by (seed, SNR index,
/// trial index) so results do not depend on scheduling order.
pub fn trial_rng(seed: u64, snr_idx: usize, trial: u64) -> ChaCha8Rng {
    substream_rng(seed, snr_idx, trial)
}

pub(super) fn substream_rng(seed: u64, snr_idx: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_idx as u64) << 32) | (stream & 0xFFFF_FFFF));
    rng
}

/// One channel realization: draws any uniform phase offsets from `rng` and
/// applies the per-antenna noise variance for `snr_db`.
pub fn realize_channel(cfg: &ExperimentConfig, snr_db: f64, rng: &mut impl Rng) -> ChannelState {
    let sigma_sq = sigma_from_snr(snr_db, cfg.scheme);
    let dphi1 = cfg.dphi1.sample(rng);
    if cfg.antennas == 1 {
        ChannelState::single_antenna(dphi1, 1.0, 1.0, sigma_sq)
            .expect("unit amplitudes are valid")
    } else {
        let dphi2 = cfg.dphi2.sample(rng);
        ChannelState::from_phase_offsets(dphi1, dphi2, 1.0, 1.0, sigma_sq)
            .expect("unit amplitudes are valid")
    }
}

/// `n` independent uniform bits.
pub fn random_bits(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

/// Encodes both users' source bits, modulates, and superimposes them over
/// the channel. Returns the two symbol streams and the received samples.
pub fn transmit_frames(
    source_a: &[u8],
    source_b: &[u8],
    ch: &ChannelState,
    scheme: ModScheme,
    rng: &mut impl Rng,
) -> (Vec<Symbol>, Vec<Symbol>, Vec<RxSamplePair>) {
    let coded_a = conv_encode(source_a);
    let coded_b = conv_encode(source_b);
    let xs_a = modulate(&coded_a, scheme).expect("coded length fits the scheme");
    let xs_b = modulate(&coded_b, scheme).expect("coded length fits the scheme");
    let ys = xs_a
        .iter()
        .zip(&xs_b)
        .map(|(xa, xb)| transmit(xa, xb, ch, rng))
        .collect();
    (xs_a, xs_b, ys)
}

/// Decoded source-bit streams for one frame. XOR-stream decoders fill
/// `xor`; per-user decoders fill `a` and `b`.
#[derive(Debug, Clone, Default)]
pub struct DecodedFrame {
    pub xor: Option<Vec<u8>>,
    pub a: Option<Vec<u8>>,
    pub b: Option<Vec<u8>>,
}

/// Runs one demodulate-and-decode chain over a frame of received samples.
pub fn decode_frame(
    ys: &[RxSamplePair],
    ch: &ChannelState,
    scheme: ModScheme,
    decoder: Decoder,
    nearest_k: usize,
) -> Result<DecodedFrame, SimError> {
    let mut out = DecodedFrame::default();
    match decoder {
        Decoder::PncBit => {
            let joint = build_joint(ch, scheme);
            let llrs: Vec<SoftBit> = ys.iter().flat_map(|y| pnc_bit_llr(y, &joint)).collect();
            out.xor = Some(viterbi_bit(&llrs)?.bits);
        }
        Decoder::PncSymbol => {
            let joint = build_joint(ch, scheme);
            let soft: Vec<SoftSymbolVector> =
                ys.iter().map(|y| pnc_symbol_logprob(y, &joint)).collect();
            out.xor = Some(viterbi_symbol(&soft, scheme)?.bits);
        }
        Decoder::MudBit => {
            let joint = build_joint(ch, scheme);
            for (user, slot) in [(User::A, &mut out.a), (User::B, &mut out.b)] {
                let llrs: Vec<SoftBit> =
                    ys.iter().flat_map(|y| mud_bit_llr(y, &joint, user)).collect();
                *slot = Some(viterbi_bit(&llrs)?.bits);
            }
        }
        Decoder::MudSymbol => {
            let joint = build_joint(ch, scheme);
            for (user, slot) in [(User::A, &mut out.a), (User::B, &mut out.b)] {
                let soft: Vec<SoftSymbolVector> =
                    ys.iter().map(|y| mud_symbol_logprob(y, &joint, user)).collect();
                *slot = Some(viterbi_symbol(&soft, scheme)?.bits);
            }
        }
        Decoder::MudReduced => {
            for (user, slot) in [(User::A, &mut out.a), (User::B, &mut out.b)] {
                let soft: Vec<SoftSymbolVector> =
                    ys.iter().map(|y| mud_reduced(y, ch, user)).collect();
                *slot = Some(viterbi_symbol(&soft, scheme)?.bits);
            }
        }
        Decoder::PncNearestK => {
            let soft: Vec<SoftSymbolVector> =
                ys.iter().map(|y| pnc_nearest_point(y, ch, nearest_k)).collect();
            out.xor = Some(viterbi_symbol(&soft, scheme)?.bits);
        }
    }
    Ok(out)
}

/// Big-endian bit expansion: 0x80 becomes [1,0,0,0,0,0,0,0].
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> (7 - i)) & 1))
        .collect()
}

/// Inverse of [`bytes_to_bits`]; the bit count must be a multiple of 8.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    assert_eq!(bits.len() % 8, 0, "bit count must be a multiple of 8");
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect()
}

/// The XOR-stream and per-user decoders a PHY slot runs side by side,
/// chosen to match the level (and any complexity reduction) of the
/// configured decoder.
pub fn slot_decoder_pair(decoder: Decoder) -> (Decoder, Decoder) {
    match decoder {
        Decoder::PncBit | Decoder::MudBit => (Decoder::PncBit, Decoder::MudBit),
        Decoder::PncSymbol | Decoder::MudSymbol => (Decoder::PncSymbol, Decoder::MudSymbol),
        Decoder::MudReduced => (Decoder::PncSymbol, Decoder::MudReduced),
        Decoder::PncNearestK => (Decoder::PncNearestK, Decoder::MudSymbol),
    }
}

/// Byte frames recovered from one slot: both native streams and the XOR
/// stream, decoded side by side from the same received samples.
#[derive(Debug, Clone)]
pub struct SlotDecode {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
    pub x: Vec<u8>,
}

/// Transmits two byte frames over a fresh channel realization and decodes
/// the XOR stream and both native streams.
pub fn simulate_slot(
    cfg: &ExperimentConfig,
    snr_db: f64,
    a_frame: &[u8],
    b_frame: &[u8],
    rng: &mut impl Rng,
) -> Result<SlotDecode, SimError> {
    let ch = realize_channel(cfg, snr_db, rng);
    let a_bits = bytes_to_bits(a_frame);
    let b_bits = bytes_to_bits(b_frame);
    let (_, _, ys) = transmit_frames(&a_bits, &b_bits, &ch, cfg.scheme, rng);
    let (pnc, mud) = slot_decoder_pair(cfg.decoder);
    let xor_bits = decode_frame(&ys, &ch, cfg.scheme, pnc, cfg.nearest_k)?
        .xor
        .expect("XOR decoder fills the xor stream");
    let users = decode_frame(&ys, &ch, cfg.scheme, mud, cfg.nearest_k)?;
    Ok(SlotDecode {
        a: bits_to_bytes(&users.a.expect("per-user decoder fills stream a")),
        b: bits_to_bytes(&users.b.expect("per-user decoder fills stream b")),
        x: bits_to_bytes(&xor_bits),
    })
}

/// Session oracle that runs the full PHY chain every slot: the true frames
/// are transmitted over a fresh channel realization and the reports are
/// whatever the decoders produce, right or wrong.
pub struct PhyOracle<'a> {
    cfg: &'a ExperimentConfig,
    snr_db: f64,
    rng: ChaCha8Rng,
}

impl<'a> PhyOracle<'a> {
    pub fn new(cfg: &'a ExperimentConfig, snr_db: f64, rng: ChaCha8Rng) -> PhyOracle<'a> {
        PhyOracle { cfg, snr_db, rng }
    }
}

impl SlotOracle for PhyOracle<'_> {
    fn decode_slot(&mut self, truth: &SlotTruth) -> SlotDecision {
        let d = simulate_slot(self.cfg, self.snr_db, truth.a_frame, truth.b_frame, &mut self.rng)
            .expect("validated config produces decodable frames");
        SlotDecision { a: Some(d.a), b: Some(d.b), x: Some(d.x) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::PhaseSpec;

    fn qpsk_cfg() -> ExperimentConfig {
        ExperimentConfig {
            dphi1: PhaseSpec::Fixed(std::f64::consts::FRAC_PI_4),
            dphi2: PhaseSpec::Fixed(0.0),
            frame_source_bits: 64,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn trial_rng_streams_are_independent_and_reproducible() {
        let mut a1 = trial_rng(9, 2, 7);
        let mut a2 = trial_rng(9, 2, 7);
        let mut b = trial_rng(9, 2, 8);
        let mut c = trial_rng(9, 3, 7);
        let draw = |r: &mut ChaCha8Rng| (0..4).map(|_| r.gen::<u64>()).collect::<Vec<_>>();
        let va = draw(&mut a1);
        assert_eq!(va, draw(&mut a2));
        assert_ne!(va, draw(&mut b));
        assert_ne!(va, draw(&mut c));
    }

    #[test]
    fn byte_bit_round_trip() {
        assert_eq!(bytes_to_bits(&[0x80]), vec![1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes_to_bits(&[0x01]), vec![0, 0, 0, 0, 0, 0, 0, 1]);
        let mut rng = trial_rng(3, 0, 0);
        for _ in 0..20 {
            let bytes: Vec<u8> = (0..17).map(|_| rng.gen()).collect();
            assert_eq!(bits_to_bytes(&bytes_to_bits(&bytes)), bytes);
        }
    }

    #[test]
    fn noise_free_frames_decode_exactly() {
        let mut cfg = qpsk_cfg();
        cfg.snr_db = vec![60.0];
        let mut rng = trial_rng(cfg.seed, 0, 0);
        let ch = realize_channel(&cfg, 60.0, &mut rng);
        let a = random_bits(cfg.frame_source_bits, &mut rng);
        let b = random_bits(cfg.frame_source_bits, &mut rng);
        let (_, _, ys) = transmit_frames(&a, &b, &ch, cfg.scheme, &mut rng);

        let xor_truth: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        for decoder in [Decoder::PncBit, Decoder::PncSymbol] {
            let dec = decode_frame(&ys, &ch, cfg.scheme, decoder, cfg.nearest_k).unwrap();
            assert_eq!(dec.xor.unwrap(), xor_truth);
        }
        for decoder in [Decoder::MudBit, Decoder::MudSymbol] {
            let dec = decode_frame(&ys, &ch, cfg.scheme, decoder, cfg.nearest_k).unwrap();
            assert_eq!(dec.a.unwrap(), a);
            assert_eq!(dec.b.unwrap(), b);
        }
    }

    #[test]
    fn qam16_reduced_and_nearest_point_decode_noise_free_frames() {
        let mut cfg = qpsk_cfg();
        cfg.scheme = ModScheme::Qam16;
        cfg.dphi1 = PhaseSpec::Fixed(0.5);
        cfg.dphi2 = PhaseSpec::Fixed(1.7);
        let mut rng = trial_rng(11, 0, 4);
        let ch = realize_channel(&cfg, 70.0, &mut rng);
        let a = random_bits(cfg.frame_source_bits, &mut rng);
        let b = random_bits(cfg.frame_source_bits, &mut rng);
        let (_, _, ys) = transmit_frames(&a, &b, &ch, cfg.scheme, &mut rng);

        let dec = decode_frame(&ys, &ch, cfg.scheme, Decoder::MudReduced, 4).unwrap();
        assert_eq!(dec.a.unwrap(), a);
        assert_eq!(dec.b.unwrap(), b);

        let xor_truth: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        for k in [1, 4] {
            let dec = decode_frame(&ys, &ch, cfg.scheme, Decoder::PncNearestK, k).unwrap();
            assert_eq!(dec.xor.unwrap(), xor_truth);
        }
    }

    #[test]
    fn slot_simulation_recovers_frames_at_high_snr() {
        let cfg = qpsk_cfg();
        let mut rng = trial_rng(5, 0, 1);
        let a_frame: Vec<u8> = (0..cfg.packet_bytes).map(|_| rng.gen()).collect();
        let b_frame: Vec<u8> = (0..cfg.packet_bytes).map(|_| rng.gen()).collect();
        let d = simulate_slot(&cfg, 50.0, &a_frame, &b_frame, &mut rng).unwrap();
        let x_truth: Vec<u8> = a_frame.iter().zip(&b_frame).map(|(x, y)| x ^ y).collect();
        assert_eq!(d.a, a_frame);
        assert_eq!(d.b, b_frame);
        assert_eq!(d.x, x_truth);
    }

    #[test]
    fn uniform_phase_draws_differ_between_trials() {
        let mut cfg = qpsk_cfg();
        cfg.dphi1 = PhaseSpec::Uniform;
        let ch1 = realize_channel(&cfg, 10.0, &mut trial_rng(1, 0, 0));
        let ch2 = realize_channel(&cfg, 10.0, &mut trial_rng(1, 0, 1));
        assert_ne!(ch1.h_b1, ch2.h_b1);
        assert_eq!(ch1.h_a1, ch2.h_a1);
    }
}
