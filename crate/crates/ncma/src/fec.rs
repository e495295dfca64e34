//! Rate-1/2 convolutional code with generators 133 and 171 (octal),
//! constraint length 7, and three soft-input Viterbi decoders.
//!
//! The bit-level decoder consumes one LLR per coded bit on the standard
//! 64-state trellis. The symbol-level decoders consume one log-likelihood
//! vector per modulation symbol: QPSK symbols carry exactly one trellis
//! transition's output, while 16-QAM symbols carry two transitions' worth,
//! handled by merging adjacent transitions so each merged stage emits all
//! four coded bits of one symbol. Merging squares the branches per state and
//! halves the stage count, so the total branch-metric work stays at two
//! branches per state per source bit for every decoder here.
//!
//! Encoding is linear over GF(2): the encoding of an XOR of two equal-length
//! sources equals the XOR of their encodings, tail bits included. That
//! identity is what lets a receiver channel-decode the XOR of two users'
//! coded streams directly.

use std::fmt;
use std::sync::OnceLock;

use crate::modem::ModScheme;

/// Generator polynomial 133 (octal), tap mask over the 7-bit input window.
pub const GENERATOR_0: u32 = 0o133;
/// Generator polynomial 171 (octal).
pub const GENERATOR_1: u32 = 0o171;
/// Constraint length of the code.
pub const CONSTRAINT_LENGTH: usize = 7;
/// Number of trellis states.
pub const NUM_STATES: usize = 64;
/// Zero tail bits appended to terminate every frame in state 0.
pub const TAIL_BITS: usize = 6;

/// Soft information for one coded bit: log P(bit = 0) - log P(bit = 1).
/// Positive values favor bit 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftBit {
    pub llr: f64,
}

/// Unnormalized log-likelihoods over one symbol's labels, indexed by label.
/// Length 4 for QPSK, 16 for 16-QAM. Only differences carry meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftSymbolVector {
    pub logp: Vec<f64>,
}

impl SoftSymbolVector {
    /// Builds the separable vector whose entry for each label is the signed
    /// sum of the per-bit LLR contributions of that label's bits. Feeding
    /// such vectors to the symbol-level decoder reproduces the bit-level
    /// decoder exactly.
    pub fn from_bit_llrs(llrs: &[SoftBit]) -> SoftSymbolVector {
        let n = llrs.len();
        let logp = (0..1usize << n)
            .map(|label| {
                let mut acc = 0.0;
                for (i, soft) in llrs.iter().enumerate() {
                    let bit = (label >> (n - 1 - i)) & 1;
                    acc += 0.5 * (1.0 - 2.0 * bit as f64) * soft.llr;
                }
                acc
            })
            .collect();
        SoftSymbolVector { logp }
    }
}

/// Decoder family selector for complexity accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Bit,
    Symbol,
}

/// Errors from encoding or decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FecError {
    /// Coded input length does not describe a tail-terminated frame.
    BadCodedLength { len: usize },
    /// Too few stages to hold the tail plus at least one source bit.
    TooShort { stages: usize, min: usize },
    /// A symbol vector's length does not match the scheme's label count.
    BadVectorLength { got: usize, want: usize },
    /// Symbol-level decoding is not defined for this scheme.
    UnsupportedScheme(ModScheme),
    /// Merge factors outside {1, 2} are not supported.
    UnsupportedMergeFactor(usize),
    /// Source length must be even to fill whole 16-QAM symbols.
    OddSourceLength(usize),
}

impl fmt::Display for FecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FecError::BadCodedLength { len } => {
                write!(f, "coded length {} is not an even tail-terminated frame", len)
            }
            FecError::TooShort { stages, min } => {
                write!(f, "{} stages cannot hold the tail plus data (need at least {})", stages, min)
            }
            FecError::BadVectorLength { got, want } => {
                write!(f, "symbol vector has {} entries, scheme needs {}", got, want)
            }
            FecError::UnsupportedScheme(s) => {
                write!(f, "symbol-level decoding is not defined for {}", s)
            }
            FecError::UnsupportedMergeFactor(m) => write!(f, "merge factor {} not supported", m),
            FecError::OddSourceLength(n) => {
                write!(f, "source length {} must be even for 16-QAM symbol decoding", n)
            }
        }
    }
}

impl std::error::Error for FecError {}

fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Coded output pair for one transition. The state holds the six most recent
/// inputs with the newest in bit 5; the tap window is the new input above
/// the state bits.
fn output_pair(state: usize, input: usize) -> (u8, u8) {
    let w = ((input as u32) << 6) | state as u32;
    (parity(w & GENERATOR_0), parity(w & GENERATOR_1))
}

fn next_state(state: usize, input: usize) -> usize {
    (state >> 1) | (input << 5)
}

/// Encodes source bits and appends the zero tail: output length is
/// 2 * (source length + 6) and every frame ends in state 0.
pub fn conv_encode(source: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * (source.len() + TAIL_BITS));
    let mut state = 0usize;
    for &u in source.iter().chain([0u8; TAIL_BITS].iter()) {
        debug_assert!(u <= 1);
        let (o0, o1) = output_pair(state, u as usize);
        out.push(o0);
        out.push(o1);
        state = next_state(state, u as usize);
    }
    out
}

/// Trellis with `m` source bits per stage. `m = 1` is the standard trellis;
/// `m = 2` fuses adjacent transitions so one stage emits four coded bits.
#[derive(Debug, Clone)]
pub struct MergedTrellis {
    /// Source bits consumed per stage.
    pub merge_factor: usize,
    /// Outgoing branches per state, 2^merge_factor.
    pub branches_per_state: usize,
    /// Coded bits emitted per stage, 2 * merge_factor.
    pub output_bits_per_stage: usize,
    next: Vec<u8>,
    out: Vec<u8>,
}

impl MergedTrellis {
    /// Destination state of a branch. The branch index packs the stage's
    /// source bits big-endian (first bit in the highest position).
    pub fn next_state(&self, state: usize, branch: usize) -> usize {
        self.next[state * self.branches_per_state + branch] as usize
    }

    /// Output bits of a branch, packed big-endian (first coded bit highest).
    pub fn output(&self, state: usize, branch: usize) -> usize {
        self.out[state * self.branches_per_state + branch] as usize
    }
}

/// Builds the trellis for a merge factor in {1, 2}.
pub fn build_merged_trellis(m: usize) -> Result<MergedTrellis, FecError> {
    if m == 0 || m > 2 {
        return Err(FecError::UnsupportedMergeFactor(m));
    }
    let branches = 1usize << m;
    let mut next = vec![0u8; NUM_STATES * branches];
    let mut out = vec![0u8; NUM_STATES * branches];
    for state in 0..NUM_STATES {
        for branch in 0..branches {
            let mut s = state;
            let mut packed = 0usize;
            for i in 0..m {
                let u = (branch >> (m - 1 - i)) & 1;
                let (o0, o1) = output_pair(s, u);
                packed = (packed << 2) | ((o0 as usize) << 1) | o1 as usize;
                s = next_state(s, u);
            }
            next[state * branches + branch] = s as u8;
            out[state * branches + branch] = packed as u8;
        }
    }
    Ok(MergedTrellis {
        merge_factor: m,
        branches_per_state: branches,
        output_bits_per_stage: 2 * m,
        next,
        out,
    })
}

fn trellis(m: usize) -> &'static MergedTrellis {
    static M1: OnceLock<MergedTrellis> = OnceLock::new();
    static M2: OnceLock<MergedTrellis> = OnceLock::new();
    match m {
        1 => M1.get_or_init(|| build_merged_trellis(1).unwrap()),
        2 => M2.get_or_init(|| build_merged_trellis(2).unwrap()),
        _ => unreachable!(),
    }
}

/// Decoder output: recovered source bits plus the winning path metric and
/// the number of branch-metric evaluations spent on data and tail stages.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    pub path_metric: f64,
    pub data_branch_ops: u64,
    pub tail_branch_ops: u64,
}

/// Forward pass and traceback over per-stage metric tables. Each table is
/// indexed by a branch's packed output bits. Ties between equal-metric
/// candidates keep the branch evaluated first, which is the one with the
/// smaller predecessor state (the destination pins the input bits).
fn viterbi_core(tr: &MergedTrellis, tables: &[Vec<f64>], data_stages: usize) -> DecodeOutcome {
    let stages = tables.len();
    let mut metrics = vec![f64::NEG_INFINITY; NUM_STATES];
    metrics[0] = 0.0;
    let mut fresh = vec![f64::NEG_INFINITY; NUM_STATES];
    let mut decisions: Vec<[(u8, u8); NUM_STATES]> = Vec::with_capacity(stages);
    let mut data_ops = 0u64;
    let mut tail_ops = 0u64;

    for (stage, table) in tables.iter().enumerate() {
        let in_tail = stage >= data_stages;
        let branches = if in_tail { 1 } else { tr.branches_per_state };
        fresh.fill(f64::NEG_INFINITY);
        let mut dec = [(0u8, 0u8); NUM_STATES];
        for state in 0..NUM_STATES {
            let base = metrics[state];
            for branch in 0..branches {
                let cand = base + table[tr.output(state, branch)];
                let to = tr.next_state(state, branch);
                if cand > fresh[to] {
                    fresh[to] = cand;
                    dec[to] = (state as u8, branch as u8);
                }
            }
        }
        if in_tail {
            tail_ops += (NUM_STATES * branches) as u64;
        } else {
            data_ops += (NUM_STATES * branches) as u64;
        }
        decisions.push(dec);
        std::mem::swap(&mut metrics, &mut fresh);
    }

    let path_metric = metrics[0];
    let mut bits = vec![0u8; stages * tr.merge_factor];
    let mut state = 0usize;
    for stage in (0..stages).rev() {
        let (pred, branch) = decisions[stage][state];
        for i in 0..tr.merge_factor {
            bits[stage * tr.merge_factor + i] = ((branch >> (tr.merge_factor - 1 - i)) & 1) as u8;
        }
        state = pred as usize;
    }
    bits.truncate(stages * tr.merge_factor - TAIL_BITS);
    DecodeOutcome {
        bits,
        path_metric,
        data_branch_ops: data_ops,
        tail_branch_ops: tail_ops,
    }
}

/// Soft bit-level Viterbi decode of a tail-terminated frame. Takes one LLR
/// per coded bit and returns the source bits without the tail.
pub fn viterbi_bit(soft: &[SoftBit]) -> Result<DecodeOutcome, FecError> {
    if soft.len() % 2 != 0 {
        return Err(FecError::BadCodedLength { len: soft.len() });
    }
    let stages = soft.len() / 2;
    if stages < TAIL_BITS + 1 {
        return Err(FecError::TooShort { stages, min: TAIL_BITS + 1 });
    }
    let tables: Vec<Vec<f64>> = soft
        .chunks(2)
        .map(|pair| {
            (0..4usize)
                .map(|oo| {
                    let o0 = (oo >> 1) & 1;
                    let o1 = oo & 1;
                    0.5 * (1.0 - 2.0 * o0 as f64) * pair[0].llr
                        + 0.5 * (1.0 - 2.0 * o1 as f64) * pair[1].llr
                })
                .collect()
        })
        .collect();
    Ok(viterbi_core(trellis(1), &tables, stages - TAIL_BITS))
}

/// Symbol-level Viterbi decode. QPSK uses the standard trellis with one
/// 4-entry vector per stage; 16-QAM uses the merged trellis with one
/// 16-entry vector per merged stage. A vector's entry for a label scores the
/// branch whose output bits equal that label.
pub fn viterbi_symbol(soft: &[SoftSymbolVector], scheme: ModScheme) -> Result<DecodeOutcome, FecError> {
    let m = match scheme {
        ModScheme::Qpsk => 1,
        ModScheme::Qam16 => 2,
        ModScheme::Bpsk => return Err(FecError::UnsupportedScheme(scheme)),
    };
    let want = scheme.constellation_size();
    for v in soft {
        if v.logp.len() != want {
            return Err(FecError::BadVectorLength { got: v.logp.len(), want });
        }
    }
    let stages = soft.len();
    let tail_stages = TAIL_BITS / m;
    if stages < tail_stages + 1 {
        return Err(FecError::TooShort { stages, min: tail_stages + 1 });
    }
    let tables: Vec<Vec<f64>> = soft.iter().map(|v| v.logp.clone()).collect();
    Ok(viterbi_core(trellis(m), &tables, stages - tail_stages))
}

/// Total branch-metric evaluations a decode of `n_source_bits` spends on
/// data stages: branches per state, times 64 states, times stages. All three
/// supported decoders land on exactly 2 * 64 * n.
pub fn count_branch_ops(
    scheme: ModScheme,
    kind: DecoderKind,
    n_source_bits: usize,
) -> Result<u64, FecError> {
    let m = match kind {
        DecoderKind::Bit => 1,
        DecoderKind::Symbol => match scheme {
            ModScheme::Qpsk => 1,
            ModScheme::Qam16 => 2,
            ModScheme::Bpsk => return Err(FecError::UnsupportedScheme(scheme)),
        },
    };
    if n_source_bits % m != 0 {
        return Err(FecError::OddSourceLength(n_source_bits));
    }
    let tr = trellis(m);
    Ok((tr.branches_per_state * NUM_STATES) as u64 * (n_source_bits / m) as u64)
}

/// Forward-pass survivor census for symbol-level metrics: after each stage,
/// the number of states whose metric is within `tol` of that stage's best.
/// All stages are treated as data stages (no tail constraint), which suits
/// short crafted prefixes.
pub fn symbol_survivor_counts(
    soft: &[SoftSymbolVector],
    scheme: ModScheme,
    tol: f64,
) -> Result<Vec<usize>, FecError> {
    let m = match scheme {
        ModScheme::Qpsk => 1,
        ModScheme::Qam16 => 2,
        ModScheme::Bpsk => return Err(FecError::UnsupportedScheme(scheme)),
    };
    let tr = trellis(m);
    let mut metrics = vec![f64::NEG_INFINITY; NUM_STATES];
    metrics[0] = 0.0;
    let mut counts = Vec::with_capacity(soft.len());
    for v in soft {
        if v.logp.len() != scheme.constellation_size() {
            return Err(FecError::BadVectorLength {
                got: v.logp.len(),
                want: scheme.constellation_size(),
            });
        }
        let mut fresh = vec![f64::NEG_INFINITY; NUM_STATES];
        for state in 0..NUM_STATES {
            if metrics[state] == f64::NEG_INFINITY {
                continue;
            }
            for branch in 0..tr.branches_per_state {
                let cand = metrics[state] + v.logp[tr.output(state, branch)];
                let to = tr.next_state(state, branch);
                if cand > fresh[to] {
                    fresh[to] = cand;
                }
            }
        }
        let best = fresh.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        counts.push(fresh.iter().filter(|&&v| v >= best - tol).count());
        metrics = fresh;
    }
    Ok(counts)
}
