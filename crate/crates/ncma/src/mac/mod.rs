//! MAC layer: erasure coding of messages into packets, per-slot outcome
//! classification, PHY-layer and MAC-layer bridging, session simulation,
//! and throughput accounting.
//!
//! Each uplink slot carries one packet from each of the two nodes. The
//! receiver's PHY may decode user A's packet, user B's packet, and their
//! bitwise XOR, in any combination. Two decoded items of a slot always
//! yield the third (PHY bridging). A lone XOR packet is stored: once one
//! user's message decodes at the MAC layer, re-encoding it reproduces that
//! user's packet for any slot, and XORing with the stored packet recovers
//! the other user's packet (MAC bridging).

mod erasure;
mod gf256;
mod session;

use std::fmt;
use std::io::{self, BufRead, Write};

pub use erasure::{erasure_decode, erasure_encode};
pub use session::{
    run_session, SessionConfig, SlotDecision, SlotOracle, SlotTruth, TraceOracle, VerifyMode,
};

/// Which node a message or native packet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Owner {
    A,
    B,
}

impl Owner {
    pub fn other(self) -> Owner {
        match self {
            Owner::A => Owner::B,
            Owner::B => Owner::A,
        }
    }
}

/// A MAC-layer message, erasure-coded into packets for transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub id: u64,
    pub owner: Owner,
    pub payload: Vec<u8>,
}

/// What a packet carries: one user's native bytes or the XOR of both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    NativeA,
    NativeB,
    Xor,
}

impl PacketKind {
    pub fn native(owner: Owner) -> PacketKind {
        match owner {
            Owner::A => PacketKind::NativeA,
            Owner::B => PacketKind::NativeB,
        }
    }
}

/// One erasure-coded packet (or the XOR of two same-index packets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub msg_id: u64,
    pub index: usize,
    pub kind: PacketKind,
    pub payload: Vec<u8>,
}

/// Which of the three decodable items the PHY produced in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotOutcome {
    pub slot: u64,
    pub got_a: bool,
    pub got_b: bool,
    pub got_x: bool,
}

/// The six-way grouping of slot outcomes used for throughput accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotEvent {
    /// Nothing decoded.
    None,
    /// Only the XOR packet decoded.
    X,
    /// Exactly one native packet, no XOR.
    AOrB,
    /// Exactly one native packet plus the XOR.
    AxBx,
    /// Both native packets, no XOR.
    Ab,
    /// Everything decoded.
    Abx,
}

impl SlotEvent {
    pub const ALL: [SlotEvent; 6] = [
        SlotEvent::None,
        SlotEvent::X,
        SlotEvent::AOrB,
        SlotEvent::AxBx,
        SlotEvent::Ab,
        SlotEvent::Abx,
    ];

    /// Position of this event in `ALL`, the index used by count arrays.
    pub fn index(self) -> usize {
        SlotEvent::ALL.iter().position(|e| *e == self).unwrap()
    }
}

impl fmt::Display for SlotEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SlotEvent::None => "NONE",
            SlotEvent::X => "X",
            SlotEvent::AOrB => "A|B",
            SlotEvent::AxBx => "AX|BX",
            SlotEvent::Ab => "AB",
            SlotEvent::Abx => "ABX",
        };
        f.write_str(s)
    }
}

/// Counters accumulated over one session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionStats {
    /// Messages of A fully decoded.
    pub n_a: u64,
    /// Messages of B fully decoded.
    pub n_b: u64,
    /// Slots elapsed.
    pub n_beacon: u64,
    /// Slot counts indexed per `SlotEvent::ALL`.
    pub event_counts: [u64; 6],
    /// Native packets recovered by XORing within a slot.
    pub phy_bridged: u64,
    /// Native packets recovered from stored lone XOR packets.
    pub mac_bridged: u64,
}

impl SessionStats {
    /// Empirical event frequencies in `SlotEvent::ALL` order.
    pub fn event_probs(&self) -> [f64; 6] {
        let total = self.n_beacon.max(1) as f64;
        let mut probs = [0.0; 6];
        for (p, &c) in probs.iter_mut().zip(&self.event_counts) {
            *p = c as f64 / total;
        }
        probs
    }
}

/// Errors from MAC-layer operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MacError {
    BadCodeParams { l: usize, n: usize },
    PayloadNotDivisible { len: usize, l: usize },
    ShareIndexTooLarge(usize),
    ShareLengthMismatch { expected: usize, got: usize },
    LengthMismatch { a: usize, b: usize },
    IndexMismatch { a: usize, b: usize },
    KindMismatch,
    IndexOutOfRange { index: usize, n: usize },
    ZeroBeacons,
    BadProbabilities(String),
    TraceFormat { line: usize, detail: String },
}

impl fmt::Display for MacError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MacError::BadCodeParams { l, n } => {
                write!(f, "erasure code needs 1 <= L <= N <= 255, got L={} N={}", l, n)
            }
            MacError::PayloadNotDivisible { len, l } => {
                write!(f, "payload of {} bytes does not split into {} equal parts", len, l)
            }
            MacError::ShareIndexTooLarge(i) => write!(f, "share index {} exceeds field range", i),
            MacError::ShareLengthMismatch { expected, got } => {
                write!(f, "share length {} differs from {}", got, expected)
            }
            MacError::LengthMismatch { a, b } => {
                write!(f, "payload lengths {} and {} cannot be combined", a, b)
            }
            MacError::IndexMismatch { a, b } => {
                write!(f, "packet indices {} and {} do not match", a, b)
            }
            MacError::KindMismatch => write!(f, "packet kind does not fit this operation"),
            MacError::IndexOutOfRange { index, n } => {
                write!(f, "packet index {} outside 0..{}", index, n)
            }
            MacError::ZeroBeacons => write!(f, "throughput is undefined over zero slots"),
            MacError::BadProbabilities(d) => write!(f, "bad event probabilities: {}", d),
            MacError::TraceFormat { line, detail } => {
                write!(f, "trace line {}: {}", line, detail)
            }
        }
    }
}

impl std::error::Error for MacError {}

pub(crate) fn xor_bytes(a: &[u8], b: &[u8]) -> Result<Vec<u8>, MacError> {
    if a.len() != b.len() {
        return Err(MacError::LengthMismatch { a: a.len(), b: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

/// XOR of two same-index native packets, as the PHY would decode it from
/// the superimposed signal. The result carries A's message id.
pub fn xor_packet(a: &Packet, b: &Packet) -> Result<Packet, MacError> {
    if a.kind != PacketKind::NativeA || b.kind != PacketKind::NativeB {
        return Err(MacError::KindMismatch);
    }
    if a.index != b.index {
        return Err(MacError::IndexMismatch { a: a.index, b: b.index });
    }
    Ok(Packet {
        msg_id: a.msg_id,
        index: a.index,
        kind: PacketKind::Xor,
        payload: xor_bytes(&a.payload, &b.payload)?,
    })
}

/// Result of PHY bridging one slot's decoded packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhyBridged {
    pub a: Option<Packet>,
    pub b: Option<Packet>,
    /// An XOR packet that could not be paired with a native this slot.
    pub lone_x: Option<Packet>,
}

/// Combines whatever the PHY decoded in one slot. A native packet plus the
/// XOR packet recovers the other native; a lone XOR packet is passed
/// through for MAC bridging; two natives need no help.
pub fn phy_bridge(
    a: Option<&Packet>,
    b: Option<&Packet>,
    x: Option<&Packet>,
) -> Result<PhyBridged, MacError> {
    for (p, kind) in [
        (a, PacketKind::NativeA),
        (b, PacketKind::NativeB),
        (x, PacketKind::Xor),
    ] {
        if let Some(p) = p {
            if p.kind != kind {
                return Err(MacError::KindMismatch);
            }
        }
    }
    let recover = |native: &Packet, x: &Packet, kind: PacketKind| -> Result<Packet, MacError> {
        if native.index != x.index {
            return Err(MacError::IndexMismatch { a: native.index, b: x.index });
        }
        Ok(Packet {
            msg_id: x.msg_id,
            index: x.index,
            kind,
            payload: xor_bytes(&native.payload, &x.payload)?,
        })
    };
    match (a, b, x) {
        (Some(a), None, Some(x)) => Ok(PhyBridged {
            a: Some(a.clone()),
            b: Some(recover(a, x, PacketKind::NativeB)?),
            lone_x: None,
        }),
        (None, Some(b), Some(x)) => Ok(PhyBridged {
            a: Some(recover(b, x, PacketKind::NativeA)?),
            b: Some(b.clone()),
            lone_x: None,
        }),
        (None, None, Some(x)) => {
            Ok(PhyBridged { a: None, b: None, lone_x: Some(x.clone()) })
        }
        (a, b, _) => Ok(PhyBridged { a: a.cloned(), b: b.cloned(), lone_x: None }),
    }
}

/// Converts stored lone XOR packets into the other user's native packets
/// by re-encoding a decoded message: the recovered packet at index `i` is
/// the re-encoded packet `i` XOR the stored packet `i`.
pub fn mac_bridge(
    decoded: &Message,
    lone_xs: &[Packet],
    l: usize,
    n: usize,
) -> Result<Vec<Packet>, MacError> {
    let reencoded = erasure_encode(decoded, l, n)?;
    let kind = PacketKind::native(decoded.owner.other());
    lone_xs
        .iter()
        .map(|x| {
            if x.kind != PacketKind::Xor {
                return Err(MacError::KindMismatch);
            }
            if x.index >= n {
                return Err(MacError::IndexOutOfRange { index: x.index, n });
            }
            Ok(Packet {
                msg_id: x.msg_id,
                index: x.index,
                kind,
                payload: xor_bytes(&reencoded[x.index].payload, &x.payload)?,
            })
        })
        .collect()
}

/// Groups a slot outcome into the six-way taxonomy.
pub fn classify_slot(outcome: &SlotOutcome) -> SlotEvent {
    match (outcome.got_a, outcome.got_b, outcome.got_x) {
        (true, true, true) => SlotEvent::Abx,
        (true, true, false) => SlotEvent::Ab,
        (true, false, true) | (false, true, true) => SlotEvent::AxBx,
        (true, false, false) | (false, true, false) => SlotEvent::AOrB,
        (false, false, true) => SlotEvent::X,
        (false, false, false) => SlotEvent::None,
    }
}

/// Normalized throughput: message payloads delivered per slot, in units of
/// one packet payload, `(L_A * N_A + L_B * N_B) / N_Beacon`.
pub fn throughput(stats: &SessionStats, l_a: usize, l_b: usize) -> Result<f64, MacError> {
    if stats.n_beacon == 0 {
        return Err(MacError::ZeroBeacons);
    }
    Ok((l_a as f64 * stats.n_a as f64 + l_b as f64 * stats.n_b as f64) / stats.n_beacon as f64)
}

/// Throughput upper bound from slot-event probabilities in
/// `SlotEvent::ALL` order: events recovering two native packets count
/// twice, events recovering one (a single native, or a lone XOR packet
/// convertible at the MAC layer) count once.
pub fn upper_bound(event_probs: &[f64; 6]) -> Result<f64, MacError> {
    let sum: f64 = event_probs.iter().sum();
    if event_probs.iter().any(|p| *p < 0.0) {
        return Err(MacError::BadProbabilities("negative entry".to_string()));
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(MacError::BadProbabilities(format!("sum {} is not 1", sum)));
    }
    let p = |e: SlotEvent| event_probs[e.index()];
    Ok(2.0 * (p(SlotEvent::Abx) + p(SlotEvent::AxBx) + p(SlotEvent::Ab))
        + (p(SlotEvent::AOrB) + p(SlotEvent::X)))
}

const CRC_POLY: u32 = 0xEDB8_8320;

fn crc_table() -> &'static [u32; 256] {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [0u32; 256];
        for (i, entry) in table.iter_mut().enumerate() {
            let mut c = i as u32;
            for _ in 0..8 {
                c = if c & 1 != 0 { (c >> 1) ^ CRC_POLY } else { c >> 1 };
            }
            *entry = c;
        }
        table
    })
}

/// CRC-32 (IEEE 802.3) of a byte sequence.
pub fn crc32(bytes: &[u8]) -> u32 {
    let table = crc_table();
    let mut c = 0xFFFF_FFFFu32;
    for &b in bytes {
        c = table[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

/// Appends a little-endian CRC-32 tag to a payload, forming a wire frame.
pub fn append_crc(payload: &[u8]) -> Vec<u8> {
    let mut frame = payload.to_vec();
    frame.extend_from_slice(&crc32(payload).to_le_bytes());
    frame
}

/// Validates a native frame's CRC tag and returns its payload.
pub fn check_frame(frame: &[u8]) -> Option<&[u8]> {
    if frame.len() < 4 {
        return None;
    }
    let (payload, tag) = frame.split_at(frame.len() - 4);
    if crc32(payload).to_le_bytes() == tag {
        Some(payload)
    } else {
        None
    }
}

/// Validates the XOR of two tagged frames. The XORed tag equals the XOR of
/// the two payload CRCs, which differs from the CRC of the XORed payload
/// by the CRC of an all-zero payload of the same length.
pub fn check_xor_frame(frame: &[u8]) -> Option<&[u8]> {
    if frame.len() < 4 {
        return None;
    }
    let (payload, tag) = frame.split_at(frame.len() - 4);
    let expected = crc32(payload) ^ crc32(&vec![0u8; payload.len()]);
    if expected.to_le_bytes() == tag {
        Some(payload)
    } else {
        None
    }
}

/// How decoded payloads are validated.
#[derive(Debug, Clone, Copy)]
pub enum Verify<'a> {
    /// Compare against ground truth.
    Genie(&'a [u8]),
    /// Validate an embedded CRC-32 tag.
    Crc,
}

/// Accepts or rejects one decoded payload.
pub fn verify_packet(decoded: &[u8], check: Verify) -> bool {
    match check {
        Verify::Genie(truth) => decoded == truth,
        Verify::Crc => check_frame(decoded).is_some(),
    }
}

const TRACE_HEADER: &str = "slot_outcomes_v1";

/// Writes slot outcomes as a trace: a header line, then one
/// `gotA,gotB,gotX` line of 0/1 flags per slot.
pub fn write_trace(w: &mut dyn Write, outcomes: &[SlotOutcome]) -> io::Result<()> {
    writeln!(w, "{}", TRACE_HEADER)?;
    for o in outcomes {
        writeln!(w, "{},{},{}", o.got_a as u8, o.got_b as u8, o.got_x as u8)?;
    }
    Ok(())
}

/// Reads a slot-outcome trace written by `write_trace`. Slot numbers are
/// assigned in file order.
pub fn read_trace(r: impl BufRead) -> Result<Vec<SlotOutcome>, MacError> {
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(line))) if line.trim() == TRACE_HEADER => {}
        Some((_, Ok(line))) => {
            return Err(MacError::TraceFormat {
                line: 1,
                detail: format!("expected header {:?}, got {:?}", TRACE_HEADER, line),
            })
        }
        _ => {
            return Err(MacError::TraceFormat { line: 1, detail: "missing header".to_string() })
        }
    }
    let mut outcomes = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| MacError::TraceFormat {
            line: idx + 1,
            detail: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut flags = [false; 3];
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 3 {
            return Err(MacError::TraceFormat {
                line: idx + 1,
                detail: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        for (slot, field) in flags.iter_mut().zip(&fields) {
            *slot = match field.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(MacError::TraceFormat {
                        line: idx + 1,
                        detail: format!("expected 0 or 1, got {:?}", other),
                    })
                }
            };
        }
        outcomes.push(SlotOutcome {
            slot: outcomes.len() as u64,
            got_a: flags[0],
            got_b: flags[1],
            got_x: flags[2],
        });
    }
    Ok(outcomes)
}
