//! Slot-by-slot session engine bridging the PHY and MAC layers.
//!
//! Every slot, both nodes transmit the next packet of their current
//! message, cycling through packet indices until the receiver decodes the
//! message, then advancing to a fresh message (ideal feedback). A pluggable
//! per-slot oracle stands in for the PHY: it is shown the true wire frames
//! and reports what it decoded. The engine validates the reports, applies
//! PHY bridging within the slot and MAC bridging on message completion,
//! and accumulates slot-event and message counters.

use std::collections::BTreeMap;

use rand::RngCore;

use super::erasure::{decode_shares, encode_shares};
use super::{
    append_crc, check_frame, check_xor_frame, classify_slot, xor_bytes, MacError, SessionStats,
    SlotOutcome,
};

/// How the engine validates what the oracle claims to have decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Accept a report only if it equals the true wire frame.
    Genie,
    /// Frames carry CRC-32 tags; accept a report if its tag validates.
    Crc,
}

/// The true wire frames of one slot, shown to the decode oracle.
#[derive(Debug, Clone, Copy)]
pub struct SlotTruth<'a> {
    pub slot: u64,
    pub a_frame: &'a [u8],
    pub b_frame: &'a [u8],
    pub x_frame: &'a [u8],
}

/// What the oracle decoded: a frame per item, or None where decoding
/// failed. Reports that fail validation are treated as failures.
#[derive(Debug, Clone, Default)]
pub struct SlotDecision {
    pub a: Option<Vec<u8>>,
    pub b: Option<Vec<u8>>,
    pub x: Option<Vec<u8>>,
}

/// Per-slot PHY stand-in: given the true frames, report decode results.
pub trait SlotOracle {
    fn decode_slot(&mut self, truth: &SlotTruth) -> SlotDecision;
}

/// Oracle driven by a recorded outcome trace: a set flag means the item
/// decodes perfectly, a cleared flag means it is lost. Slots beyond the
/// end of the trace decode nothing.
#[derive(Debug, Clone)]
pub struct TraceOracle {
    outcomes: Vec<SlotOutcome>,
    pos: usize,
}

impl TraceOracle {
    pub fn new(outcomes: Vec<SlotOutcome>) -> TraceOracle {
        TraceOracle { outcomes, pos: 0 }
    }
}

impl SlotOracle for TraceOracle {
    fn decode_slot(&mut self, truth: &SlotTruth) -> SlotDecision {
        let Some(o) = self.outcomes.get(self.pos) else {
            return SlotDecision::default();
        };
        self.pos += 1;
        SlotDecision {
            a: o.got_a.then(|| truth.a_frame.to_vec()),
            b: o.got_b.then(|| truth.b_frame.to_vec()),
            x: o.got_x.then(|| truth.x_frame.to_vec()),
        }
    }
}

/// Session parameters.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// Packets needed to decode one of A's messages.
    pub l_a: usize,
    /// Packets needed to decode one of B's messages.
    pub l_b: usize,
    /// Packets per encoded message (code length).
    pub n: usize,
    /// Slots to simulate.
    pub n_beacons: u64,
    /// Payload bytes per packet.
    pub packet_bytes: usize,
    pub verify: VerifyMode,
}

struct NodeState {
    l: usize,
    payload: Vec<u8>,
    frames: Vec<Vec<u8>>,
    seq: u64,
    received: BTreeMap<usize, Vec<u8>>,
}

impl NodeState {
    fn new(l: usize, cfg: &SessionConfig, rng: &mut dyn RngCore) -> Result<NodeState, MacError> {
        let mut node = NodeState {
            l,
            payload: Vec::new(),
            frames: Vec::new(),
            seq: 0,
            received: BTreeMap::new(),
        };
        node.fresh_message(cfg, rng)?;
        Ok(node)
    }

    fn fresh_message(&mut self, cfg: &SessionConfig, rng: &mut dyn RngCore) -> Result<(), MacError> {
        self.payload = vec![0u8; self.l * cfg.packet_bytes];
        rng.fill_bytes(&mut self.payload);
        let shares = encode_shares(&self.payload, self.l, cfg.n)?;
        self.frames = shares
            .iter()
            .map(|s| match cfg.verify {
                VerifyMode::Genie => s.clone(),
                VerifyMode::Crc => append_crc(s),
            })
            .collect();
        self.seq = 0;
        self.received.clear();
        Ok(())
    }

    fn current_index(&self, n: usize) -> usize {
        (self.seq % n as u64) as usize
    }

    fn try_decode(&self) -> Option<Vec<u8>> {
        if self.received.len() < self.l {
            return None;
        }
        let shares: Vec<(usize, &[u8])> =
            self.received.iter().map(|(i, p)| (*i, p.as_slice())).collect();
        decode_shares(&shares, self.l).expect("validated shares").map(|m| {
            debug_assert_eq!(m, self.payload);
            m
        })
    }
}

/// A stored lone XOR packet: the XOR of the two users' packet payloads at
/// the indices each user was transmitting that slot. Only packets of the
/// current message pair are ever stored; the store drains whenever either
/// message completes.
struct LoneX {
    a_idx: usize,
    b_idx: usize,
    body: Vec<u8>,
}

fn validated_body(
    report: Option<Vec<u8>>,
    truth_frame: &[u8],
    mode: VerifyMode,
    is_xor: bool,
) -> Option<Vec<u8>> {
    let frame = report?;
    match mode {
        VerifyMode::Genie => (frame == truth_frame).then_some(frame),
        VerifyMode::Crc => {
            let check = if is_xor { check_xor_frame(&frame) } else { check_frame(&frame) };
            check.map(|body| body.to_vec())
        }
    }
}

/// Runs one session of `cfg.n_beacons` slots against a decode oracle and
/// returns the accumulated counters. The RNG only generates message
/// contents; a PHY-simulating oracle brings its own noise source.
pub fn run_session(
    oracle: &mut dyn SlotOracle,
    cfg: &SessionConfig,
    rng: &mut dyn RngCore,
) -> Result<SessionStats, MacError> {
    if cfg.l_a < 1 || cfg.l_b < 1 || cfg.l_a.max(cfg.l_b) > cfg.n || cfg.n > 255 {
        return Err(MacError::BadCodeParams { l: cfg.l_a.max(cfg.l_b), n: cfg.n });
    }
    let mut a = NodeState::new(cfg.l_a, cfg, rng)?;
    let mut b = NodeState::new(cfg.l_b, cfg, rng)?;
    let mut lone: Vec<LoneX> = Vec::new();
    let mut stats = SessionStats::default();

    for slot in 0..cfg.n_beacons {
        let ia = a.current_index(cfg.n);
        let ib = b.current_index(cfg.n);
        let x_frame = xor_bytes(&a.frames[ia], &b.frames[ib])?;
        let truth =
            SlotTruth { slot, a_frame: &a.frames[ia], b_frame: &b.frames[ib], x_frame: &x_frame };
        let decision = oracle.decode_slot(&truth);

        let body_a = validated_body(decision.a, truth.a_frame, cfg.verify, false);
        let body_b = validated_body(decision.b, truth.b_frame, cfg.verify, false);
        let body_x = validated_body(decision.x, truth.x_frame, cfg.verify, true);
        let outcome = SlotOutcome {
            slot,
            got_a: body_a.is_some(),
            got_b: body_b.is_some(),
            got_x: body_x.is_some(),
        };
        stats.event_counts[classify_slot(&outcome).index()] += 1;
        stats.n_beacon += 1;

        match (body_a, body_b, body_x) {
            (Some(pa), Some(pb), _) => {
                a.received.entry(ia).or_insert(pa);
                b.received.entry(ib).or_insert(pb);
            }
            (Some(pa), None, Some(px)) => {
                let recovered = xor_bytes(&pa, &px)?;
                a.received.entry(ia).or_insert(pa);
                if let std::collections::btree_map::Entry::Vacant(e) = b.received.entry(ib) {
                    e.insert(recovered);
                    stats.phy_bridged += 1;
                }
            }
            (None, Some(pb), Some(px)) => {
                let recovered = xor_bytes(&pb, &px)?;
                b.received.entry(ib).or_insert(pb);
                if let std::collections::btree_map::Entry::Vacant(e) = a.received.entry(ia) {
                    e.insert(recovered);
                    stats.phy_bridged += 1;
                }
            }
            (Some(pa), None, None) => {
                a.received.entry(ia).or_insert(pa);
            }
            (None, Some(pb), None) => {
                b.received.entry(ib).or_insert(pb);
            }
            (None, None, Some(px)) => {
                lone.push(LoneX { a_idx: ia, b_idx: ib, body: px });
            }
            (None, None, None) => {}
        }

        loop {
            let mut progressed = false;
            if let Some(decoded) = a.try_decode() {
                stats.n_a += 1;
                let reencoded = encode_shares(&decoded, cfg.l_a, cfg.n)?;
                for x in lone.drain(..) {
                    let recovered = xor_bytes(&reencoded[x.a_idx], &x.body)?;
                    if let std::collections::btree_map::Entry::Vacant(e) =
                        b.received.entry(x.b_idx)
                    {
                        e.insert(recovered);
                        stats.mac_bridged += 1;
                    }
                }
                a.fresh_message(cfg, rng)?;
                progressed = true;
            }
            if let Some(decoded) = b.try_decode() {
                stats.n_b += 1;
                let reencoded = encode_shares(&decoded, cfg.l_b, cfg.n)?;
                for x in lone.drain(..) {
                    let recovered = xor_bytes(&reencoded[x.b_idx], &x.body)?;
                    if let std::collections::btree_map::Entry::Vacant(e) =
                        a.received.entry(x.a_idx)
                    {
                        e.insert(recovered);
                        stats.mac_bridged += 1;
                    }
                }
                b.fresh_message(cfg, rng)?;
                progressed = true;
            }
            if !progressed {
                break;
            }
        }

        a.seq += 1;
        b.seq += 1;
    }
    Ok(stats)
}
