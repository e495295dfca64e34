//! Uplink model for two simultaneous transmitters and a one- or two-antenna
//! receiver: complex gains, relative phase offsets, AWGN, and the SNR to
//! noise-variance bookkeeping.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::modem::{ModScheme, Symbol};

/// Complex gains and noise variances of one channel realization.
///
/// Antenna 1 carries gains `h_a1`, `h_b1` and noise variance `sigma1_sq`;
/// antenna 2 likewise. With `antennas == 1` the second antenna's fields are
/// inert and receive samples carry `y2 = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ChannelState {
    pub h_a1: Complex64,
    pub h_b1: Complex64,
    pub h_a2: Complex64,
    pub h_b2: Complex64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub antennas: u8,
    /// Standard deviation in radians of a per-symbol Gaussian rotation
    /// applied to B's gains. Zero disables the jitter.
    pub phase_jitter_std: f64,
}

/// Received samples on the two antennas for one symbol slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxSamplePair {
    pub y1: Complex64,
    pub y2: Complex64,
}

/// Errors from channel construction.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    NonPositiveAmplitude(f64),
    NonPositiveVariance(f64),
    NonFiniteGain,
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::NonPositiveAmplitude(a) => write!(f, "amplitude {} must be positive", a),
            ChannelError::NonPositiveVariance(v) => write!(f, "noise variance {} must be positive", v),
            ChannelError::NonFiniteGain => write!(f, "channel gains must be finite"),
        }
    }
}

impl std::error::Error for ChannelError {}

fn check_variance(v: f64) -> Result<(), ChannelError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(ChannelError::NonPositiveVariance(v));
    }
    Ok(())
}

impl ChannelState {
    /// Two-antenna channel from explicit complex gains.
    pub fn from_gains(
        h_a1: Complex64,
        h_b1: Complex64,
        h_a2: Complex64,
        h_b2: Complex64,
        sigma1_sq: f64,
        sigma2_sq: f64,
    ) -> Result<ChannelState, ChannelError> {
        for h in [h_a1, h_b1, h_a2, h_b2] {
            if !h.re.is_finite() || !h.im.is_finite() {
                return Err(ChannelError::NonFiniteGain);
            }
        }
        check_variance(sigma1_sq)?;
        check_variance(sigma2_sq)?;
        Ok(ChannelState {
            h_a1,
            h_b1,
            h_a2,
            h_b2,
            sigma1_sq,
            sigma2_sq,
            antennas: 2,
            phase_jitter_std: 0.0,
        })
    }

    /// Single-antenna channel from explicit complex gains.
    pub fn from_gains_single(
        h_a1: Complex64,
        h_b1: Complex64,
        sigma_sq: f64,
    ) -> Result<ChannelState, ChannelError> {
        let mut ch = ChannelState::from_gains(
            h_a1,
            h_b1,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            sigma_sq,
            sigma_sq,
        )?;
        ch.antennas = 1;
        Ok(ch)
    }

    /// Two-antenna channel where A's gain is real `amp_a` on both antennas
    /// and B's gain is `amp_b` rotated by `dphi1` on antenna 1 and `dphi2`
    /// on antenna 2.
    pub fn from_phase_offsets(
        dphi1: f64,
        dphi2: f64,
        amp_a: f64,
        amp_b: f64,
        sigma_sq: f64,
    ) -> Result<ChannelState, ChannelError> {
        if !(amp_a > 0.0) {
            return Err(ChannelError::NonPositiveAmplitude(amp_a));
        }
        if !(amp_b > 0.0) {
            return Err(ChannelError::NonPositiveAmplitude(amp_b));
        }
        ChannelState::from_gains(
            Complex64::new(amp_a, 0.0),
            amp_b * Complex64::new(0.0, dphi1).exp(),
            Complex64::new(amp_a, 0.0),
            amp_b * Complex64::new(0.0, dphi2).exp(),
            sigma_sq,
            sigma_sq,
        )
    }

    /// Single-antenna channel with one relative phase offset.
    pub fn single_antenna(
        dphi: f64,
        amp_a: f64,
        amp_b: f64,
        sigma_sq: f64,
    ) -> Result<ChannelState, ChannelError> {
        if !(amp_a > 0.0) {
            return Err(ChannelError::NonPositiveAmplitude(amp_a));
        }
        if !(amp_b > 0.0) {
            return Err(ChannelError::NonPositiveAmplitude(amp_b));
        }
        ChannelState::from_gains_single(
            Complex64::new(amp_a, 0.0),
            amp_b * Complex64::new(0.0, dphi).exp(),
            sigma_sq,
        )
    }

    /// Replaces the per-antenna noise variances.
    pub fn with_noise(mut self, sigma1_sq: f64, sigma2_sq: f64) -> Result<ChannelState, ChannelError> {
        check_variance(sigma1_sq)?;
        check_variance(sigma2_sq)?;
        self.sigma1_sq = sigma1_sq;
        self.sigma2_sq = sigma2_sq;
        Ok(self)
    }

    /// Enables per-symbol Gaussian phase jitter on B's gains.
    pub fn with_phase_jitter(mut self, std_radians: f64) -> ChannelState {
        self.phase_jitter_std = std_radians.max(0.0);
        self
    }

    /// Noise-free receive samples for a transmit value pair.
    pub fn noiseless_rx(&self, xa: Complex64, xb: Complex64) -> (Complex64, Complex64) {
        let rx1 = self.h_a1 * xa + self.h_b1 * xb;
        let rx2 = if self.antennas == 2 {
            self.h_a2 * xa + self.h_b2 * xb
        } else {
            Complex64::new(0.0, 0.0)
        };
        (rx1, rx2)
    }
}

fn complex_awgn(sigma_sq: f64, rng: &mut impl Rng) -> Complex64 {
    let scale = (sigma_sq / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(scale * re, scale * im)
}

/// One symbol slot over the channel: superposition of both transmit symbols
/// under the channel gains plus circular complex Gaussian noise per antenna.
pub fn transmit(xa: &Symbol, xb: &Symbol, ch: &ChannelState, rng: &mut impl Rng) -> RxSamplePair {
    debug_assert_eq!(xa.scheme, xb.scheme);
    let (hb1, hb2) = if ch.phase_jitter_std > 0.0 {
        let theta = Normal::new(0.0, ch.phase_jitter_std).unwrap().sample(rng);
        let rot = Complex64::new(0.0, theta).exp();
        (ch.h_b1 * rot, ch.h_b2 * rot)
    } else {
        (ch.h_b1, ch.h_b2)
    };
    let y1 = ch.h_a1 * xa.value + hb1 * xb.value + complex_awgn(ch.sigma1_sq, rng);
    let y2 = if ch.antennas == 2 {
        ch.h_a2 * xa.value + hb2 * xb.value + complex_awgn(ch.sigma2_sq, rng)
    } else {
        Complex64::new(0.0, 0.0)
    };
    RxSamplePair { y1, y2 }
}

/// Noise variance for a target per-node, per-antenna SNR in dB at unit gain
/// magnitude: sigma^2 = E_s / 10^(snr/10).
pub fn sigma_from_snr(snr_db: f64, scheme: ModScheme) -> f64 {
    scheme.symbol_energy() / 10f64.powf(snr_db / 10.0)
}

/// Squared distance between received samples and a noise-free hypothesis,
/// each antenna term weighted by its inverse noise variance. Single-antenna
/// states skip the second term entirely.
pub(crate) fn scaled_distance(
    y: &RxSamplePair,
    rx1: Complex64,
    rx2: Complex64,
    inv_sigma1: f64,
    inv_sigma2: f64,
    antennas: u8,
) -> f64 {
    let d1 = (y.y1 - rx1).norm_sqr() * inv_sigma1;
    if antennas == 2 {
        d1 + (y.y2 - rx2).norm_sqr() * inv_sigma2
    } else {
        d1
    }
}
