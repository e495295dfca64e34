//! Constellations, Gray bit-to-symbol mappings, XOR symbol arithmetic, and
//! the joint two-user constellation seen by the receiver.
//!
//! Symbols live on the unnormalized unit grid: BPSK and QPSK axes take values
//! in {-1, +1}, 16-QAM axes in {-3, -1, +1, +3}. Energy normalization is the
//! channel module's job. Labels are bit vectors packed big-endian into a
//! `u8` index, so label index order equals lexicographic bit order.

use std::fmt;

use num_complex::Complex64;

use crate::channel::{scaled_distance, ChannelState, RxSamplePair};

/// Modulation scheme used by both transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModScheme {
    Bpsk,
    Qpsk,
    Qam16,
}

impl ModScheme {
    /// Number of label bits carried by one symbol.
    pub const fn bits_per_symbol(self) -> usize {
        match self {
            ModScheme::Bpsk => 1,
            ModScheme::Qpsk => 2,
            ModScheme::Qam16 => 4,
        }
    }

    /// Number of constellation points.
    pub const fn constellation_size(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Mean symbol energy of the unnormalized grid.
    pub const fn symbol_energy(self) -> f64 {
        match self {
            ModScheme::Bpsk => 1.0,
            ModScheme::Qpsk => 2.0,
            ModScheme::Qam16 => 10.0,
        }
    }
}

impl fmt::Display for ModScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModScheme::Bpsk => "bpsk",
            ModScheme::Qpsk => "qpsk",
            ModScheme::Qam16 => "qam16",
        };
        f.write_str(s)
    }
}

/// 16-QAM per-axis level for a two-bit group, indexed by the group's
/// big-endian value. Bit pair 00 maps to +3, 01 to +1, 11 to -1, 10 to -3,
/// extending the QPSK convention that an all-zero label sits at the positive
/// extreme while keeping adjacent levels one bit apart.
const QAM16_AXIS: [f64; 4] = [3.0, 1.0, -3.0, -1.0];

/// One modulated symbol together with the label it encodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symbol {
    pub value: Complex64,
    pub label: u8,
    pub scheme: ModScheme,
}

impl Symbol {
    /// Builds the symbol for a label index. Panics if the label is out of
    /// range for the scheme.
    pub fn from_label(scheme: ModScheme, label: u8) -> Symbol {
        assert!(
            (label as usize) < scheme.constellation_size(),
            "label {} out of range for {}",
            label,
            scheme
        );
        Symbol {
            value: point_for_label(scheme, label),
            label,
            scheme,
        }
    }

    /// Label as a big-endian bit vector.
    pub fn label_bits(&self) -> Vec<u8> {
        label_to_bits(self.label, self.scheme)
    }
}

/// Errors from modulation-layer operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModemError {
    /// Input bit count is not a multiple of the scheme's bits per symbol.
    BitCount { len: usize, bits_per_symbol: usize },
    /// An input value was neither 0 nor 1.
    InvalidBit { pos: usize },
    /// Two symbols from different schemes were combined.
    SchemeMismatch,
}

impl fmt::Display for ModemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModemError::BitCount { len, bits_per_symbol } => write!(
                f,
                "bit vector length {} is not a multiple of {} bits per symbol",
                len, bits_per_symbol
            ),
            ModemError::InvalidBit { pos } => write!(f, "input at position {} is not a bit", pos),
            ModemError::SchemeMismatch => write!(f, "symbols use different modulation schemes"),
        }
    }
}

impl std::error::Error for ModemError {}

/// Constellation point for a label index.
pub fn point_for_label(scheme: ModScheme, label: u8) -> Complex64 {
    match scheme {
        ModScheme::Bpsk => Complex64::new(1.0 - 2.0 * (label & 1) as f64, 0.0),
        ModScheme::Qpsk => Complex64::new(
            1.0 - 2.0 * ((label >> 1) & 1) as f64,
            1.0 - 2.0 * (label & 1) as f64,
        ),
        ModScheme::Qam16 => Complex64::new(
            QAM16_AXIS[((label >> 2) & 3) as usize],
            QAM16_AXIS[(label & 3) as usize],
        ),
    }
}

/// Packs big-endian bits into a label index.
pub fn bits_to_label(bits: &[u8]) -> u8 {
    let mut label = 0u8;
    for &b in bits {
        label = (label << 1) | (b & 1);
    }
    label
}

/// Unpacks a label index into big-endian bits.
pub fn label_to_bits(label: u8, scheme: ModScheme) -> Vec<u8> {
    let n = scheme.bits_per_symbol();
    (0..n).map(|i| (label >> (n - 1 - i)) & 1).collect()
}

/// Maps a bit vector to a symbol sequence.
pub fn modulate(bits: &[u8], scheme: ModScheme) -> Result<Vec<Symbol>, ModemError> {
    let bps = scheme.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(ModemError::BitCount {
            len: bits.len(),
            bits_per_symbol: bps,
        });
    }
    if let Some(pos) = bits.iter().position(|&b| b > 1) {
        return Err(ModemError::InvalidBit { pos });
    }
    Ok(bits
        .chunks(bps)
        .map(|chunk| Symbol::from_label(scheme, bits_to_label(chunk)))
        .collect())
}

/// Label index of the constellation point nearest to `y`. Equidistant
/// candidates resolve to the lexicographically smallest label.
pub fn hard_label_index(y: Complex64, scheme: ModScheme) -> u8 {
    let mut best = 0u8;
    let mut best_d = f64::INFINITY;
    for label in 0..scheme.constellation_size() as u8 {
        let d = (y - point_for_label(scheme, label)).norm_sqr();
        if d < best_d {
            best_d = d;
            best = label;
        }
    }
    best
}

/// Bit vector of the constellation point nearest to `y`.
pub fn hard_label(y: Complex64, scheme: ModScheme) -> Vec<u8> {
    label_to_bits(hard_label_index(y, scheme), scheme)
}

/// XOR of two symbols: the symbol whose label is the bitwise XOR of the
/// operand labels. For BPSK and QPSK this coincides with the per-axis product
/// of the operand axis values.
pub fn xor_symbol(a: &Symbol, b: &Symbol) -> Result<Symbol, ModemError> {
    if a.scheme != b.scheme {
        return Err(ModemError::SchemeMismatch);
    }
    Ok(Symbol::from_label(a.scheme, a.label ^ b.label))
}

/// Recovers the XOR bit vector from an XOR symbol. For the {-1, +1} axes of
/// BPSK and QPSK this is the rule bit = (1 - axis) / 2 applied per axis.
pub fn xor_bits_from_symbol(x: &Symbol) -> Vec<u8> {
    x.label_bits()
}

/// One joint constellation point: a transmit pair together with its
/// noise-free receive values and XOR label.
#[derive(Debug, Clone, Copy)]
pub struct JointPoint {
    pub a: Symbol,
    pub b: Symbol,
    pub xor_label: u8,
    pub rx1: Complex64,
    pub rx2: Complex64,
}

/// All (x_A, x_B) transmit pairs with their noise-free receive samples,
/// enumerated in lexicographic label order (A's label major). Every
/// demodulator scores hypotheses against this set.
#[derive(Debug, Clone)]
pub struct JointConstellation {
    scheme: ModScheme,
    antennas: u8,
    inv_sigma1: f64,
    inv_sigma2: f64,
    points: Vec<JointPoint>,
}

impl JointConstellation {
    pub fn scheme(&self) -> ModScheme {
        self.scheme
    }

    pub fn antennas(&self) -> u8 {
        self.antennas
    }

    pub fn points(&self) -> &[JointPoint] {
        &self.points
    }

    /// Squared distance between a received pair and a joint point, each
    /// antenna term scaled by its inverse noise variance.
    pub fn dist_sq(&self, p: &JointPoint, y: &RxSamplePair) -> f64 {
        scaled_distance(y, p.rx1, p.rx2, self.inv_sigma1, self.inv_sigma2, self.antennas)
    }

    /// Mean inverse noise variance across active antennas.
    pub fn mean_inv_sigma(&self) -> f64 {
        if self.antennas == 2 {
            0.5 * (self.inv_sigma1 + self.inv_sigma2)
        } else {
            self.inv_sigma1
        }
    }
}

/// Enumerates the joint constellation for a channel and scheme.
pub fn build_joint(ch: &ChannelState, scheme: ModScheme) -> JointConstellation {
    let size = scheme.constellation_size() as u8;
    let mut points = Vec::with_capacity((size as usize) * (size as usize));
    for la in 0..size {
        let a = Symbol::from_label(scheme, la);
        for lb in 0..size {
            let b = Symbol::from_label(scheme, lb);
            let (rx1, rx2) = ch.noiseless_rx(a.value, b.value);
            points.push(JointPoint {
                a,
                b,
                xor_label: la ^ lb,
                rx1,
                rx2,
            });
        }
    }
    JointConstellation {
        scheme,
        antennas: ch.antennas,
        inv_sigma1: 1.0 / ch.sigma1_sq,
        inv_sigma2: 1.0 / ch.sigma2_sq,
        points,
    }
}
