//! Sweep runners and CSV emission: BER/PER over an SNR grid, per-slot
//! reception event statistics, and session throughput against the analytic
//! upper bound.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::mac::{
    self, classify_slot, run_session, SessionConfig, SessionStats, SlotEvent, SlotOutcome,
    TraceOracle,
};
use crate::modem::ModScheme;

use super::config::{Decoder, ExperimentConfig, PhaseSpec};
use super::pipeline::{
    decode_frame, random_bits, realize_channel, simulate_slot, substream_rng, transmit_frames,
    trial_rng, PhyOracle, MESSAGE_STREAM, ORACLE_STREAM,
};
use super::SimError;

pub const CSV_HEADER: &str = "scheme,decoder,antennas,snr_db,dphi1,dphi2,metric,value,trials,seed";

/// One measured value together with the configuration that produced it.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub scheme: ModScheme,
    pub decoder: Decoder,
    pub antennas: u8,
    pub snr_db: f64,
    pub dphi1: PhaseSpec,
    pub dphi2: PhaseSpec,
    pub metric: String,
    pub value: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ResultRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.decoder,
            self.antennas,
            self.snr_db,
            self.dphi1,
            self.dphi2,
            self.metric,
            format_value(self.value),
            self.trials,
            self.seed
        )
    }
}

/// Formats a measurement with at most six significant digits, trailing
/// zeros trimmed, so equal runs emit byte-identical text.
fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{:.5e}", v);
    let (mantissa, exponent) = s.split_once('e').expect("scientific format has an exponent");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    format!("{}e{}", mantissa, exponent)
}

/// Writes the header and one line per row.
pub fn emit_csv(rows: &[ResultRow], w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "{}", CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

/// The full CSV document as a string.
pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    emit_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV text is ASCII")
}

fn row(cfg: &ExperimentConfig, snr_db: f64, metric: String, value: f64) -> ResultRow {
    ResultRow {
        scheme: cfg.scheme,
        decoder: cfg.decoder,
        antennas: cfg.antennas,
        snr_db,
        dphi1: cfg.dphi1,
        dphi2: cfg.dphi2,
        metric,
        value,
        trials: cfg.trials,
        seed: cfg.seed,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ErrorCounts {
    bit_errors: u64,
    bits: u64,
    frame_errors: u64,
    frames: u64,
}

impl ErrorCounts {
    fn merge(self, o: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            bit_errors: self.bit_errors + o.bit_errors,
            bits: self.bits + o.bits,
            frame_errors: self.frame_errors + o.frame_errors,
            frames: self.frames + o.frames,
        }
    }
}

/// Post-decoding bit and frame error rates over the SNR grid. XOR-stream
/// decoders are scored against the XOR of the two source frames; per-user
/// decoders are scored against both frames, doubling the bit count.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, SimError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let counts = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| ber_trial(cfg, snr_idx, snr_db, trial))
            .try_reduce(ErrorCounts::default, |a, b| Ok(a.merge(b)))?;
        rows.push(row(cfg, snr_db, "ber".into(), counts.bit_errors as f64 / counts.bits as f64));
        rows.push(row(
            cfg,
            snr_db,
            "per".into(),
            counts.frame_errors as f64 / counts.frames as f64,
        ));
    }
    Ok(rows)
}

fn ber_trial(
    cfg: &ExperimentConfig,
    snr_idx: usize,
    snr_db: f64,
    trial: u64,
) -> Result<ErrorCounts, SimError> {
    let mut rng = trial_rng(cfg.seed, snr_idx, trial);
    let ch = realize_channel(cfg, snr_db, &mut rng);
    let a = random_bits(cfg.frame_source_bits, &mut rng);
    let b = random_bits(cfg.frame_source_bits, &mut rng);
    let (_, _, ys) = transmit_frames(&a, &b, &ch, cfg.scheme, &mut rng);
    let dec = decode_frame(&ys, &ch, cfg.scheme, cfg.decoder, cfg.nearest_k)?;

    let mut counts = ErrorCounts::default();
    let mut tally = |decoded: &[u8], truth: &[u8]| {
        let errs = decoded.iter().zip(truth).filter(|(d, t)| d != t).count() as u64;
        counts.bit_errors += errs;
        counts.bits += truth.len() as u64;
        counts.frame_errors += (errs > 0) as u64;
        counts.frames += 1;
    };
    if let Some(x) = &dec.xor {
        let truth: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
        tally(x, &truth);
    }
    if let Some(da) = &dec.a {
        tally(da, &a);
    }
    if let Some(db) = &dec.b {
        tally(db, &b);
    }
    Ok(counts)
}

/// Counts of the eight (got A, got B, got X) reception combinations over
/// `cfg.trials` independent slots at one SNR point, with genie
/// verification. The index packs the flags as `a<<2 | b<<1 | x`.
pub fn phy_event_counts(
    cfg: &ExperimentConfig,
    snr_idx: usize,
    snr_db: f64,
) -> Result<[u64; 8], SimError> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<[u64; 8], SimError> {
            let mut rng = trial_rng(cfg.seed, snr_idx, trial);
            let a_frame: Vec<u8> = (0..cfg.packet_bytes).map(|_| rng.gen()).collect();
            let b_frame: Vec<u8> = (0..cfg.packet_bytes).map(|_| rng.gen()).collect();
            let d = simulate_slot(cfg, snr_db, &a_frame, &b_frame, &mut rng)?;
            let x_truth: Vec<u8> = a_frame.iter().zip(&b_frame).map(|(p, q)| p ^ q).collect();
            let idx = (((d.a == a_frame) as usize) << 2)
                | (((d.b == b_frame) as usize) << 1)
                | ((d.x == x_truth) as usize);
            let mut c = [0u64; 8];
            c[idx] = 1;
            Ok(c)
        })
        .try_reduce(
            || [0u64; 8],
            |mut a, b| {
                for i in 0..8 {
                    a[i] += b[i];
                }
                Ok(a)
            },
        )
}

fn group_events(combos: &[u64; 8]) -> [u64; 6] {
    let mut out = [0u64; 6];
    for (idx, &c) in combos.iter().enumerate() {
        let o = SlotOutcome {
            slot: 0,
            got_a: idx & 4 != 0,
            got_b: idx & 2 != 0,
            got_x: idx & 1 != 0,
        };
        out[classify_slot(&o).index()] += c;
    }
    out
}

/// Per-slot reception event frequencies over the SNR grid: one slot per
/// trial, both decoder families run side by side, events grouped into the
/// six-way taxonomy.
pub fn run_phy_stats(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, SimError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let combos = phy_event_counts(cfg, snr_idx, snr_db)?;
        let events = group_events(&combos);
        for ev in SlotEvent::ALL {
            rows.push(row(
                cfg,
                snr_db,
                format!("event_prob_{}", ev),
                events[ev.index()] as f64 / cfg.trials as f64,
            ));
        }
    }
    Ok(rows)
}

/// Where throughput sessions get their per-slot reception outcomes.
pub enum ThroughputSource {
    /// Replay a recorded outcome trace; the session runs one slot per line.
    Trace(Vec<SlotOutcome>),
    /// Measure the eight-way outcome distribution at each SNR point, then
    /// sample `n_beacons` outcomes from it.
    Sampled,
    /// Run the full PHY chain every slot at each SNR point.
    FullPhy,
}

fn session_config(cfg: &ExperimentConfig, n_beacons: u64) -> SessionConfig {
    SessionConfig {
        l_a: cfg.l_a,
        l_b: cfg.l_b,
        n: cfg.n_packets,
        n_beacons,
        packet_bytes: cfg.packet_bytes,
        verify: cfg.verify.to_mac(),
    }
}

fn push_session_rows(
    rows: &mut Vec<ResultRow>,
    cfg: &ExperimentConfig,
    snr_db: f64,
    stats: &SessionStats,
) -> Result<(), SimError> {
    rows.push(row(cfg, snr_db, "throughput".into(), mac::throughput(stats, cfg.l_a, cfg.l_b)?));
    rows.push(row(cfg, snr_db, "upper_bound".into(), mac::upper_bound(&stats.event_probs())?));
    for ev in SlotEvent::ALL {
        rows.push(row(
            cfg,
            snr_db,
            format!("event_prob_{}", ev),
            stats.event_counts[ev.index()] as f64 / stats.n_beacon as f64,
        ));
    }
    Ok(())
}

fn sample_outcomes(combos: &[u64; 8], n: u64, rng: &mut impl Rng) -> Vec<SlotOutcome> {
    let total: u64 = combos.iter().sum();
    (0..n)
        .map(|slot| {
            let mut draw = rng.gen_range(0..total);
            let mut idx = 0;
            for (i, &c) in combos.iter().enumerate() {
                if draw < c {
                    idx = i;
                    break;
                }
                draw -= c;
            }
            SlotOutcome {
                slot,
                got_a: idx & 4 != 0,
                got_b: idx & 2 != 0,
                got_x: idx & 1 != 0,
            }
        })
        .collect()
}

/// Session throughput and its analytic upper bound, emitted side by side
/// along with the session's own event frequencies. An empty trace yields no
/// rows.
pub fn run_throughput(
    cfg: &ExperimentConfig,
    source: ThroughputSource,
) -> Result<Vec<ResultRow>, SimError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    match source {
        ThroughputSource::Trace(outcomes) => {
            if outcomes.is_empty() {
                return Ok(rows);
            }
            let scfg = session_config(cfg, outcomes.len() as u64);
            let mut oracle = TraceOracle::new(outcomes);
            let mut msg_rng = substream_rng(cfg.seed, 0, MESSAGE_STREAM);
            let stats = run_session(&mut oracle, &scfg, &mut msg_rng)?;
            push_session_rows(&mut rows, cfg, f64::NAN, &stats)?;
        }
        ThroughputSource::Sampled => {
            for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
                let combos = phy_event_counts(cfg, snr_idx, snr_db)?;
                let mut sample_rng = substream_rng(cfg.seed, snr_idx, ORACLE_STREAM);
                let outcomes = sample_outcomes(&combos, cfg.n_beacons, &mut sample_rng);
                let scfg = session_config(cfg, cfg.n_beacons);
                let mut msg_rng = substream_rng(cfg.seed, snr_idx, MESSAGE_STREAM);
                let stats = run_session(&mut TraceOracle::new(outcomes), &scfg, &mut msg_rng)?;
                push_session_rows(&mut rows, cfg, snr_db, &stats)?;
            }
        }
        ThroughputSource::FullPhy => {
            for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
                let scfg = session_config(cfg, cfg.n_beacons);
                let mut oracle =
                    PhyOracle::new(cfg, snr_db, substream_rng(cfg.seed, snr_idx, ORACLE_STREAM));
                let mut msg_rng = substream_rng(cfg.seed, snr_idx, MESSAGE_STREAM);
                let stats = run_session(&mut oracle, &scfg, &mut msg_rng)?;
                push_session_rows(&mut rows, cfg, snr_db, &stats)?;
            }
        }
    }
    Ok(rows)
}
