//! Experiment configuration: decoder selection, channel geometry, sweep
//! axes, Monte Carlo sizing, and MAC parameters, loadable from a TOML file
//! and overridable by CLI flags.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::modem::ModScheme;

use super::SimError;

/// Which demodulate-and-decode chain a BER sweep exercises.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Decoder {
    /// Per-bit XOR LLRs into the bit-level Viterbi.
    PncBit,
    /// XOR symbol log-likelihoods into the symbol-level Viterbi.
    PncSymbol,
    /// Per-bit per-user LLRs into the bit-level Viterbi, both users.
    MudBit,
    /// Per-user symbol log-likelihoods into the symbol-level Viterbi.
    MudSymbol,
    /// Reduced-complexity 16-QAM MUD (grid decision after combining).
    MudReduced,
    /// Nearest-point 16-QAM XOR demodulator with a k-best shortlist.
    PncNearestK,
}

impl Decoder {
    /// True for the decoders that target the XOR stream rather than the
    /// two users' own streams.
    pub fn is_pnc(self) -> bool {
        matches!(self, Decoder::PncBit | Decoder::PncSymbol | Decoder::PncNearestK)
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decoder::PncBit => "pnc_bit",
            Decoder::PncSymbol => "pnc_symbol",
            Decoder::MudBit => "mud_bit",
            Decoder::MudSymbol => "mud_symbol",
            Decoder::MudReduced => "mud_reduced",
            Decoder::PncNearestK => "pnc_nearest_k",
        })
    }
}

/// How session-level packet reports are validated.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
#[clap(rename_all = "lowercase")]
pub enum VerifyKind {
    /// Compare reports against the true wire frames.
    Genie,
    /// Frames carry CRC-32 tags and reports must validate.
    Crc,
}

impl VerifyKind {
    pub fn to_mac(self) -> crate::mac::VerifyMode {
        match self {
            VerifyKind::Genie => crate::mac::VerifyMode::Genie,
            VerifyKind::Crc => crate::mac::VerifyMode::Crc,
        }
    }
}

impl fmt::Display for VerifyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyKind::Genie => "genie",
            VerifyKind::Crc => "crc",
        })
    }
}

/// A relative phase offset: a fixed angle in radians, or redrawn uniformly
/// from [0, 2pi) per channel realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSpec {
    Fixed(f64),
    Uniform,
}

impl PhaseSpec {
    /// The angle for one channel realization, drawing from `rng` only in
    /// the uniform case.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            PhaseSpec::Fixed(v) => *v,
            PhaseSpec::Uniform => rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }
}

impl fmt::Display for PhaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseSpec::Fixed(v) => write!(f, "{}", v),
            PhaseSpec::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for PhaseSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<PhaseSpec, String> {
        if s.eq_ignore_ascii_case("uniform") {
            return Ok(PhaseSpec::Uniform);
        }
        s.parse::<f64>()
            .map(PhaseSpec::Fixed)
            .map_err(|_| format!("expected radians or \"uniform\", got {:?}", s))
    }
}

impl Serialize for PhaseSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PhaseSpec::Fixed(v) => s.serialize_f64(*v),
            PhaseSpec::Uniform => s.serialize_str("uniform"),
        }
    }
}

impl<'de> Deserialize<'de> for PhaseSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<PhaseSpec, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = PhaseSpec;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a phase in radians or the string \"uniform\"")
            }

            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<PhaseSpec, E> {
                Ok(PhaseSpec::Fixed(v))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<PhaseSpec, E> {
                Ok(PhaseSpec::Fixed(v as f64))
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<PhaseSpec, E> {
                Ok(PhaseSpec::Fixed(v as f64))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<PhaseSpec, E> {
                PhaseSpec::from_str(v).map_err(E::custom)
            }
        }
        d.deserialize_any(Visitor)
    }
}

/// Trial indices share a 32-bit RNG substream field with two reserved
/// session streams, which caps the trial count.
pub const MAX_TRIALS: u64 = 0xFFFF_FFF0;

/// Full description of one experiment. Missing TOML fields take the
/// defaults below; CLI flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: ModScheme,
    pub decoder: Decoder,
    /// Receive antennas, 1 or 2.
    pub antennas: u8,
    /// SNR grid in dB (per-antenna noise convention).
    pub snr_db: Vec<f64>,
    /// Relative phase offset of user B at antenna 1.
    pub dphi1: PhaseSpec,
    /// Relative phase offset of user B at antenna 2 (two-antenna only).
    pub dphi2: PhaseSpec,
    /// Monte Carlo repetitions per SNR point.
    pub trials: u64,
    /// Information bits per simulated frame in BER sweeps.
    pub frame_source_bits: usize,
    pub seed: u64,
    /// Shortlist size for the nearest-point demodulator, 1 or 4.
    pub nearest_k: usize,
    /// Packets needed to decode one of A's messages.
    pub l_a: usize,
    /// Packets needed to decode one of B's messages.
    pub l_b: usize,
    /// Packets per encoded message.
    pub n_packets: usize,
    /// Slots per throughput session.
    pub n_beacons: u64,
    /// Payload bytes per MAC packet.
    pub packet_bytes: usize,
    /// How session-level packet reports are validated.
    pub verify: VerifyKind,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            scheme: ModScheme::Qpsk,
            decoder: Decoder::PncBit,
            antennas: 2,
            snr_db: vec![10.0],
            dphi1: PhaseSpec::Fixed(0.0),
            dphi2: PhaseSpec::Fixed(0.0),
            trials: 1000,
            frame_source_bits: 128,
            seed: 1,
            nearest_k: 4,
            l_a: 24,
            l_b: 16,
            n_packets: 64,
            n_beacons: 1000,
            packet_bytes: 32,
            verify: VerifyKind::Genie,
        }
    }
}

impl ExperimentConfig {
    /// Checks cross-field consistency; every violation is a config error.
    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if self.trials == 0 {
            return fail("trials must be positive".into());
        }
        if self.trials > MAX_TRIALS {
            return fail(format!("trials must be at most {}, got {}", MAX_TRIALS, self.trials));
        }
        if self.snr_db.is_empty() {
            return fail("snr grid must be non-empty".into());
        }
        if self.snr_db.iter().any(|v| !v.is_finite()) {
            return fail("snr grid entries must be finite".into());
        }
        if !matches!(self.antennas, 1 | 2) {
            return fail(format!("antennas must be 1 or 2, got {}", self.antennas));
        }
        if self.frame_source_bits == 0 {
            return fail("frame_source_bits must be positive".into());
        }
        if self.scheme == ModScheme::Qam16 && self.frame_source_bits % 2 != 0 {
            return fail("frame_source_bits must be even for 16-QAM frames".into());
        }
        match self.decoder {
            Decoder::PncSymbol | Decoder::MudSymbol if self.scheme == ModScheme::Bpsk => {
                return fail(format!(
                    "decoder {} has no symbol-level trellis for {}",
                    self.decoder, self.scheme
                ));
            }
            Decoder::MudReduced | Decoder::PncNearestK if self.scheme != ModScheme::Qam16 => {
                return fail(format!(
                    "decoder {} is defined for qam16 only, not {}",
                    self.decoder, self.scheme
                ));
            }
            _ => {}
        }
        if self.decoder == Decoder::PncNearestK && !matches!(self.nearest_k, 1 | 4) {
            return fail(format!("nearest_k must be 1 or 4, got {}", self.nearest_k));
        }
        if self.l_a < 1 || self.l_b < 1 || self.l_a.max(self.l_b) > self.n_packets {
            return fail(format!(
                "need 1 <= L <= N, got L_A={} L_B={} N={}",
                self.l_a, self.l_b, self.n_packets
            ));
        }
        if self.n_packets > 255 {
            return fail(format!("n_packets must be at most 255, got {}", self.n_packets));
        }
        if self.packet_bytes == 0 {
            return fail("packet_bytes must be positive".into());
        }
        if self.n_beacons == 0 {
            return fail("n_beacons must be positive".into());
        }
        Ok(())
    }
}

/// Loads a configuration from a TOML file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    toml::from_str(&text)
        .map_err(|e| SimError::Config(format!("{}: {}", path.display(), e)))
}

/// Parses an SNR grid given as comma-separated values (`4,6,8`) or an
/// inclusive range with step (`4:2:12`).
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, SimError> {
    let bad = |detail: String| SimError::Config(format!("snr grid {:?}: {}", s, detail));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range form is start:step:stop".into()));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        let (start, step, stop) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) {
            return Err(bad("step must be positive".into()));
        }
        if stop < start {
            return Err(bad("stop must not precede start".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    let grid: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| bad(e.to_string()))?;
    if grid.is_empty() {
        return Err(bad("empty grid".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn scheme_decoder_mismatches_are_config_errors() {
        let mut cfg = ExperimentConfig::default();
        cfg.decoder = Decoder::MudReduced;
        cfg.scheme = ModScheme::Qpsk;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));
        cfg.scheme = ModScheme::Qam16;
        cfg.validate().unwrap();

        cfg.decoder = Decoder::PncSymbol;
        cfg.scheme = ModScheme::Bpsk;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));

        cfg = ExperimentConfig::default();
        cfg.decoder = Decoder::PncNearestK;
        cfg.scheme = ModScheme::Qam16;
        cfg.nearest_k = 3;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));

        cfg = ExperimentConfig::default();
        cfg.antennas = 3;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));

        cfg = ExperimentConfig::default();
        cfg.trials = 0;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));

        cfg = ExperimentConfig::default();
        cfg.l_a = 65;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));
    }

    #[test]
    fn snr_grid_forms_parse() {
        assert_eq!(parse_snr_grid("4,6,8").unwrap(), vec![4.0, 6.0, 8.0]);
        assert_eq!(parse_snr_grid("4:2:12").unwrap(), vec![4.0, 6.0, 8.0, 10.0, 12.0]);
        assert_eq!(parse_snr_grid("5").unwrap(), vec![5.0]);
        assert_eq!(parse_snr_grid("0:2.5:5").unwrap(), vec![0.0, 2.5, 5.0]);
        assert!(parse_snr_grid("4:0:8").is_err());
        assert!(parse_snr_grid("4:2").is_err());
        assert!(parse_snr_grid("abc").is_err());
    }

    #[test]
    fn phase_spec_round_trips_through_text() {
        assert_eq!("uniform".parse::<PhaseSpec>().unwrap(), PhaseSpec::Uniform);
        assert_eq!("1.5".parse::<PhaseSpec>().unwrap(), PhaseSpec::Fixed(1.5));
        assert!("sideways".parse::<PhaseSpec>().is_err());
        assert_eq!(PhaseSpec::Uniform.to_string(), "uniform");
        assert_eq!(PhaseSpec::Fixed(0.25).to_string(), "0.25");
    }

    #[test]
    fn toml_round_trip_with_overrides() {
        let text = r#"
            scheme = "qam16"
            decoder = "pnc_nearest_k"
            antennas = 1
            snr_db = [14.0, 16.0]
            dphi1 = "uniform"
            dphi2 = 0.5
            trials = 50
            nearest_k = 1
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.scheme, ModScheme::Qam16);
        assert_eq!(cfg.decoder, Decoder::PncNearestK);
        assert_eq!(cfg.dphi1, PhaseSpec::Uniform);
        assert_eq!(cfg.dphi2, PhaseSpec::Fixed(0.5));
        assert_eq!(cfg.l_a, 24);
        cfg.validate().unwrap();

        let err: Result<ExperimentConfig, _> = toml::from_str("no_such_key = 3");
        assert!(err.is_err());
    }
}
