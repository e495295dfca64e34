//! Soft demodulators for the two-user joint constellation.
//!
//! All demodulators here score hypotheses by reduced-constellation
//! (log-max) distances: the log-likelihood of a hypothesis is minus the
//! smallest noise-scaled squared distance from the received samples to any
//! joint point consistent with it. Bit-level variants emit one LLR per
//! label bit; symbol-level variants emit a log-likelihood vector over whole
//! labels for the symbol-level Viterbi decoder.
//!
//! Two hypothesis families are supported: the XOR of the two users' labels
//! (PNC) and each user's own label (MUD). Two reduced-complexity 16-QAM
//! variants avoid the full 256-point scan: an MRC-based MUD demodulator
//! that grid-decides the interfering user, and a nearest-point PNC
//! demodulator that scores only the union of per-user candidate shortlists.

use num_complex::Complex64;

use crate::channel::{scaled_distance, ChannelState, RxSamplePair};
use crate::fec::{SoftBit, SoftSymbolVector};
use crate::modem::{point_for_label, JointConstellation, JointPoint, ModScheme, Symbol};

/// Which transmitter a MUD demodulator targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum User {
    A,
    B,
}

/// Noise-scaled squared Euclidean distance summed over receive antennas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceMetric {
    pub d_sq: f64,
}

/// Which user's symbol was swept to build a candidate set: `FixedA` fixes
/// each candidate of A and shortlists B's symbols, `FixedB` the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateOrigin {
    FixedA,
    FixedB,
}

/// One shortlisted joint hypothesis with its distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateEntry {
    pub x_a: Symbol,
    pub x_b: Symbol,
    pub metric: DistanceMetric,
}

/// Shortlist of joint hypotheses produced by sweeping one user's symbols.
/// With `k` selections per fixed symbol the set holds `16 * k` entries for
/// 16-QAM, exactly one per fixed symbol when `k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub entries: Vec<CandidateEntry>,
    pub origin: CandidateOrigin,
}

fn bit_of(label: u8, bits_per_symbol: usize, pos: usize) -> usize {
    ((label >> (bits_per_symbol - 1 - pos)) & 1) as usize
}

/// Per-bit LLRs for the XOR of the two users' labels. Entry `p` is
/// `min_{xor bit p = 1} d² − min_{xor bit p = 0} d²`, so positive values
/// favor bit 0. Distances are noise-scaled per antenna.
pub fn pnc_bit_llr(y: &RxSamplePair, joint: &JointConstellation) -> Vec<SoftBit> {
    bit_llr_over(y, joint, |p| p.xor_label)
}

/// Per-bit LLRs for one user's own label, same reduced-constellation form
/// as `pnc_bit_llr` but partitioning by that user's label bits.
pub fn mud_bit_llr(y: &RxSamplePair, joint: &JointConstellation, user: User) -> Vec<SoftBit> {
    match user {
        User::A => bit_llr_over(y, joint, |p| p.a.label),
        User::B => bit_llr_over(y, joint, |p| p.b.label),
    }
}

fn bit_llr_over(
    y: &RxSamplePair,
    joint: &JointConstellation,
    label_of: impl Fn(&JointPoint) -> u8,
) -> Vec<SoftBit> {
    let nbits = joint.scheme().bits_per_symbol();
    let mut mins = [[f64::INFINITY; 4]; 2];
    for p in joint.points() {
        let d = joint.dist_sq(p, y);
        let label = label_of(p);
        for pos in 0..nbits {
            let side = bit_of(label, nbits, pos);
            if d < mins[side][pos] {
                mins[side][pos] = d;
            }
        }
    }
    (0..nbits).map(|pos| SoftBit { llr: mins[1][pos] - mins[0][pos] }).collect()
}

/// Log-likelihood vector over XOR labels: `logp[s]` is minus the smallest
/// scaled distance to any joint point whose XOR label is `s`.
pub fn pnc_symbol_logprob(y: &RxSamplePair, joint: &JointConstellation) -> SoftSymbolVector {
    symbol_logprob_over(y, joint, |p| p.xor_label)
}

/// Log-likelihood vector over one user's own labels.
pub fn mud_symbol_logprob(
    y: &RxSamplePair,
    joint: &JointConstellation,
    user: User,
) -> SoftSymbolVector {
    match user {
        User::A => symbol_logprob_over(y, joint, |p| p.a.label),
        User::B => symbol_logprob_over(y, joint, |p| p.b.label),
    }
}

fn symbol_logprob_over(
    y: &RxSamplePair,
    joint: &JointConstellation,
    label_of: impl Fn(&JointPoint) -> u8,
) -> SoftSymbolVector {
    let mut best = vec![f64::INFINITY; joint.scheme().constellation_size()];
    for p in joint.points() {
        let d = joint.dist_sq(p, y);
        let slot = &mut best[label_of(p) as usize];
        if d < *slot {
            *slot = d;
        }
    }
    SoftSymbolVector { logp: best.into_iter().map(|d| -d).collect() }
}

/// Nearest joint point among those satisfying a predicate, with its scaled
/// distance. Ties keep the first point in lexicographic label order.
pub fn nearest_in_partition(
    y: &RxSamplePair,
    joint: &JointConstellation,
    mut pred: impl FnMut(&JointPoint) -> bool,
) -> Option<(JointPoint, f64)> {
    let mut best: Option<(JointPoint, f64)> = None;
    for p in joint.points() {
        if !pred(p) {
            continue;
        }
        let d = joint.dist_sq(p, y);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((*p, d));
        }
    }
    best
}

/// Interference-cancelled combining statistic for one fixed symbol of the
/// swept user: conjugate-gain combining of the residuals, weighted per
/// antenna by 1/σ², then normalized so the interfering user's symbol sits
/// on its own grid. The scaled joint distance is an increasing affine
/// function of the grid distance to this statistic, so grid decisions and
/// shortlists taken on it match exhaustive distance rankings exactly.
fn mrc_residual(y: &RxSamplePair, ch: &ChannelState, origin: CandidateOrigin, fixed: Complex64) -> Complex64 {
    let (h_f1, h_f2, h_o1, h_o2) = match origin {
        CandidateOrigin::FixedA => (ch.h_a1, ch.h_a2, ch.h_b1, ch.h_b2),
        CandidateOrigin::FixedB => (ch.h_b1, ch.h_b2, ch.h_a1, ch.h_a2),
    };
    let inv1 = 1.0 / ch.sigma1_sq;
    let mut z = h_o1.conj() * (y.y1 - h_f1 * fixed) * inv1;
    let mut c = h_o1.norm_sqr() * inv1;
    if ch.antennas == 2 {
        let inv2 = 1.0 / ch.sigma2_sq;
        z += h_o2.conj() * (y.y2 - h_f2 * fixed) * inv2;
        c += h_o2.norm_sqr() * inv2;
    }
    z / c
}

fn joint_distance(y: &RxSamplePair, ch: &ChannelState, xa: Complex64, xb: Complex64) -> f64 {
    let (rx1, rx2) = ch.noiseless_rx(xa, xb);
    scaled_distance(y, rx1, rx2, 1.0 / ch.sigma1_sq, 1.0 / ch.sigma2_sq, ch.antennas)
}

/// Reduced-complexity 16-QAM MUD demodulator. For each candidate symbol of
/// the target user it cancels that symbol, combines the residuals across
/// antennas, grid-decides the interfering user's symbol, and scores the
/// resulting pair by the same scaled joint distance as the exhaustive
/// demodulator. Produces bit-identical output to `mud_symbol_logprob`.
pub fn mud_reduced(y: &RxSamplePair, ch: &ChannelState, user: User) -> SoftSymbolVector {
    let scheme = ModScheme::Qam16;
    let origin = match user {
        User::A => CandidateOrigin::FixedA,
        User::B => CandidateOrigin::FixedB,
    };
    let logp = (0..scheme.constellation_size() as u8)
        .map(|label| {
            let fixed = point_for_label(scheme, label);
            let g = mrc_residual(y, ch, origin, fixed);
            let other = point_for_label(scheme, crate::modem::hard_label_index(g, scheme));
            let (xa, xb) = match user {
                User::A => (fixed, other),
                User::B => (other, fixed),
            };
            -joint_distance(y, ch, xa, xb)
        })
        .collect();
    SoftSymbolVector { logp }
}

/// Shortlist of the `k` best interfering-user symbols for each fixed symbol
/// of the swept user, ranked by grid distance to the combining statistic
/// (equivalently, by scaled joint distance). Ties prefer smaller labels.
pub fn nearest_candidates(
    y: &RxSamplePair,
    ch: &ChannelState,
    k: usize,
    origin: CandidateOrigin,
) -> CandidateSet {
    let scheme = ModScheme::Qam16;
    let size = scheme.constellation_size() as u8;
    assert!(k >= 1 && k <= size as usize, "k must be in 1..=16");
    let mut entries = Vec::with_capacity(size as usize * k);
    for fixed_label in 0..size {
        let fixed = point_for_label(scheme, fixed_label);
        let g = mrc_residual(y, ch, origin, fixed);
        let mut ranked: Vec<(f64, u8)> = (0..size)
            .map(|l| ((point_for_label(scheme, l) - g).norm_sqr(), l))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, other_label) in ranked.iter().take(k) {
            let (xa_label, xb_label) = match origin {
                CandidateOrigin::FixedA => (fixed_label, other_label),
                CandidateOrigin::FixedB => (other_label, fixed_label),
            };
            let xa = Symbol::from_label(scheme, xa_label);
            let xb = Symbol::from_label(scheme, xb_label);
            let d = joint_distance(y, ch, xa.value, xb.value);
            entries.push(CandidateEntry { x_a: xa, x_b: xb, metric: DistanceMetric { d_sq: d } });
        }
    }
    CandidateSet { entries, origin }
}

/// Nearest-point 16-QAM PNC demodulator. Builds both users' shortlists with
/// `k` selections per fixed symbol and scores each XOR label by the best
/// distance among shortlist members mapping to it. XOR labels with no
/// member get a floor of minus (largest observed distance plus ten mean
/// noise-scaled symbol energies), keeping the Viterbi metric finite.
pub fn pnc_nearest_point(y: &RxSamplePair, ch: &ChannelState, k: usize) -> SoftSymbolVector {
    let size = ModScheme::Qam16.constellation_size();
    let sa = nearest_candidates(y, ch, k, CandidateOrigin::FixedA);
    let sb = nearest_candidates(y, ch, k, CandidateOrigin::FixedB);
    let mut best = vec![f64::INFINITY; size];
    let mut max_d = 0.0f64;
    for e in sa.entries.iter().chain(sb.entries.iter()) {
        let xor = (e.x_a.label ^ e.x_b.label) as usize;
        if e.metric.d_sq < best[xor] {
            best[xor] = e.metric.d_sq;
        }
        if e.metric.d_sq > max_d {
            max_d = e.metric.d_sq;
        }
    }
    let mut inv_mean = 1.0 / ch.sigma1_sq;
    if ch.antennas == 2 {
        inv_mean = 0.5 * (inv_mean + 1.0 / ch.sigma2_sq);
    }
    let floor = -(max_d + 10.0 * ModScheme::Qam16.symbol_energy() * inv_mean);
    SoftSymbolVector {
        logp: best.into_iter().map(|d| if d.is_finite() { -d } else { floor }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::build_joint;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_channel(rng: &mut impl Rng, antennas: u8) -> ChannelState {
        let (s1, s2) = (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0));
        let mut g = || c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)) + c(0.3, 0.0);
        if antennas == 2 {
            let (a1, b1, a2, b2) = (g(), g(), g(), g());
            ChannelState::from_gains(a1, b1, a2, b2, s1, s2).unwrap()
        } else {
            let (a1, b1) = (g(), g());
            ChannelState::from_gains_single(a1, b1, s1).unwrap()
        }
    }

    fn random_rx(rng: &mut impl Rng, antennas: u8) -> RxSamplePair {
        RxSamplePair {
            y1: c(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)),
            y2: if antennas == 2 {
                c(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0))
            } else {
                c(0.0, 0.0)
            },
        }
    }

    #[test]
    fn frozen_sample_partition_minimizers() {
        let ch = ChannelState::from_gains(
            c(1.0, 0.0),
            c(0.0, 30f64.to_radians()).exp(),
            c(1.0, 0.0),
            c(0.0, 100f64.to_radians()).exp(),
            1.0,
            1.0,
        )
        .unwrap();
        let joint = build_joint(&ch, ModScheme::Qpsk);
        let y = RxSamplePair { y1: c(1.5371, -2.2270), y2: c(2.8657, -1.2159) };

        let (p0, d0) = nearest_in_partition(&y, &joint, |p| p.xor_label >> 1 == 0).unwrap();
        assert_eq!((p0.a.value, p0.b.value), (c(1.0, -1.0), c(1.0, -1.0)));
        let (p1, d1) = nearest_in_partition(&y, &joint, |p| p.xor_label >> 1 == 1).unwrap();
        assert_eq!((p1.a.value, p1.b.value), (c(1.0, -1.0), c(-1.0, -1.0)));
        assert!(d0 - d1 > 2.73 && d0 - d1 < 2.75);
        let llrs = pnc_bit_llr(&y, &joint);
        assert!((llrs[0].llr - (d1 - d0)).abs() < 1e-12);
        assert!(llrs[0].llr < 0.0);

        let (a0, _) = nearest_in_partition(&y, &joint, |p| p.a.label >> 1 == 0).unwrap();
        assert_eq!((a0.a.value, a0.b.value), (c(1.0, -1.0), c(-1.0, -1.0)));
        let (a1, _) = nearest_in_partition(&y, &joint, |p| p.a.label >> 1 == 1).unwrap();
        assert_eq!((a1.a.value, a1.b.value), (c(-1.0, -1.0), c(1.0, -1.0)));
        assert!(mud_bit_llr(&y, &joint, User::A)[0].llr > 0.0);
    }

    #[test]
    fn aligned_rotation_kills_xor_information() {
        let ch =
            ChannelState::from_gains(c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 1.0), 1.0, 1.0)
                .unwrap();
        let joint = build_joint(&ch, ModScheme::Qpsk);
        let y = RxSamplePair { y1: c(2.0, 0.0), y2: c(2.0, 0.0) };

        let logp = pnc_symbol_logprob(&y, &joint).logp;
        assert_eq!(logp[0], 0.0);
        assert_eq!(logp[3], 0.0);
        assert!(logp[1] < 0.0 && logp[2] < 0.0);
        for soft in pnc_bit_llr(&y, &joint) {
            assert_eq!(soft.llr, 0.0);
        }
    }

    #[test]
    fn aligned_rotation_keeps_unique_xor_points() {
        let ch =
            ChannelState::from_gains(c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 1.0), 1.0, 1.0)
                .unwrap();
        let joint = build_joint(&ch, ModScheme::Qpsk);
        let y = RxSamplePair { y1: c(2.0, 2.0), y2: c(2.0, 2.0) };
        let logp = pnc_symbol_logprob(&y, &joint).logp;
        assert_eq!(logp[1], 0.0);
        for (s, &v) in logp.iter().enumerate() {
            if s != 1 {
                assert!(v < 0.0);
            }
        }
    }

    #[test]
    fn origin_cluster_is_fourfold_ambiguous_for_each_user() {
        let ch =
            ChannelState::from_gains(c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 1.0), 1.0, 1.0)
                .unwrap();
        let joint = build_joint(&ch, ModScheme::Qpsk);
        let y = RxSamplePair { y1: c(0.0, 0.0), y2: c(0.0, 0.0) };
        for user in [User::A, User::B] {
            let logp = mud_symbol_logprob(&y, &joint, user).logp;
            assert_eq!(logp, vec![0.0; 4]);
            for soft in mud_bit_llr(&y, &joint, user) {
                assert_eq!(soft.llr, 0.0);
            }
        }
    }

    #[test]
    fn noise_free_unique_points_demodulate_truthfully() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for scheme in [ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Qam16] {
            let ch = ChannelState::from_phase_offsets(0.43, 1.21, 1.0, 0.9, 1.0).unwrap();
            let joint = build_joint(&ch, scheme);
            for _ in 0..40 {
                let idx = rng.gen_range(0..joint.points().len());
                let p = joint.points()[idx];
                let y = RxSamplePair { y1: p.rx1, y2: p.rx2 };
                let nbits = scheme.bits_per_symbol();
                for (pos, soft) in pnc_bit_llr(&y, &joint).iter().enumerate() {
                    let truth = bit_of(p.xor_label, nbits, pos);
                    assert!(if truth == 0 { soft.llr > 0.0 } else { soft.llr < 0.0 });
                }
                for (user, label) in [(User::A, p.a.label), (User::B, p.b.label)] {
                    for (pos, soft) in mud_bit_llr(&y, &joint, user).iter().enumerate() {
                        let truth = bit_of(label, nbits, pos);
                        assert!(if truth == 0 { soft.llr > 0.0 } else { soft.llr < 0.0 });
                    }
                    let logp = mud_symbol_logprob(&y, &joint, user).logp;
                    assert_eq!(argmax(&logp), label as usize);
                }
                assert_eq!(argmax(&pnc_symbol_logprob(&y, &joint).logp), p.xor_label as usize);
            }
        }
    }

    fn argmax(v: &[f64]) -> usize {
        v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
    }

    fn exact_sum_bit_llr(
        y: &RxSamplePair,
        joint: &JointConstellation,
        label_of: impl Fn(&JointPoint) -> u8,
        pos: usize,
    ) -> f64 {
        let nbits = joint.scheme().bits_per_symbol();
        let mut terms = [Vec::new(), Vec::new()];
        for p in joint.points() {
            terms[bit_of(label_of(p), nbits, pos)].push(-joint.dist_sq(p, y));
        }
        let lse = |v: &[f64]| {
            let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
        };
        lse(&terms[0]) - lse(&terms[1])
    }

    #[test]
    fn log_max_llr_stays_within_partition_size_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for scheme in [ModScheme::Qpsk, ModScheme::Qam16] {
            let bound = ((scheme.constellation_size().pow(2) / 2) as f64).ln();
            for _ in 0..100 {
                let ch = random_channel(&mut rng, 2).with_noise(1.0, 1.0).unwrap();
                let joint = build_joint(&ch, scheme);
                let y = random_rx(&mut rng, 2);
                let approx = pnc_bit_llr(&y, &joint);
                for pos in 0..scheme.bits_per_symbol() {
                    let exact = exact_sum_bit_llr(&y, &joint, |p| p.xor_label, pos);
                    assert!(
                        (approx[pos].llr - exact).abs() <= bound + 1e-9,
                        "scheme {} pos {}: approx {} exact {}",
                        scheme,
                        pos,
                        approx[pos].llr,
                        exact
                    );
                }
            }
        }
    }

    #[test]
    fn symbol_argmax_matches_global_nearest_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for scheme in [ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Qam16] {
            for antennas in [1u8, 2] {
                for _ in 0..50 {
                    let ch = random_channel(&mut rng, antennas);
                    let joint = build_joint(&ch, scheme);
                    let y = random_rx(&mut rng, antennas);
                    let (global, _) = nearest_in_partition(&y, &joint, |_| true).unwrap();
                    let pnc = pnc_symbol_logprob(&y, &joint);
                    assert_eq!(argmax(&pnc.logp), global.xor_label as usize);
                    let mud_a = mud_symbol_logprob(&y, &joint, User::A);
                    assert_eq!(argmax(&mud_a.logp), global.a.label as usize);
                }
            }
        }
    }

    #[test]
    fn uniform_noise_scaling_preserves_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..30 {
            let ch = random_channel(&mut rng, 2).with_noise(0.7, 0.7).unwrap();
            let scaled = ch.clone().with_noise(0.7 * 7.3, 0.7 * 7.3).unwrap();
            let joint = build_joint(&ch, ModScheme::Qam16);
            let joint_scaled = build_joint(&scaled, ModScheme::Qam16);
            let y = random_rx(&mut rng, 2);
            let a = pnc_symbol_logprob(&y, &joint).logp;
            let b = pnc_symbol_logprob(&y, &joint_scaled).logp;
            assert_eq!(argmax(&a), argmax(&b));
            for (&va, &vb) in a.iter().zip(&b) {
                assert!((va / 7.3 - vb).abs() < 1e-9);
            }
            let la = pnc_bit_llr(&y, &joint);
            let lb = pnc_bit_llr(&y, &joint_scaled);
            for (sa, sb) in la.iter().zip(&lb) {
                assert_eq!(sa.llr > 0.0, sb.llr > 0.0);
            }
        }
    }

    #[test]
    fn reduced_mud_is_bitwise_equal_to_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for antennas in [1u8, 2] {
            for _ in 0..250 {
                let ch = random_channel(&mut rng, antennas);
                let joint = build_joint(&ch, ModScheme::Qam16);
                let y = random_rx(&mut rng, antennas);
                for user in [User::A, User::B] {
                    let reduced = mud_reduced(&y, &ch, user);
                    let exhaustive = mud_symbol_logprob(&y, &joint, user);
                    assert_eq!(reduced.logp, exhaustive.logp);
                }
            }
        }
    }

    #[test]
    fn grid_decision_matches_exhaustive_argmin_per_fixed_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let ch = random_channel(&mut rng, 2);
            let y = random_rx(&mut rng, 2);
            for fixed_label in 0..16u8 {
                let fixed = point_for_label(ModScheme::Qam16, fixed_label);
                let g = mrc_residual(&y, &ch, CandidateOrigin::FixedA, fixed);
                let decided = crate::modem::hard_label_index(g, ModScheme::Qam16);
                let brute = (0..16u8)
                    .min_by(|&l1, &l2| {
                        let d1 = joint_distance(
                            &y,
                            &ch,
                            fixed,
                            point_for_label(ModScheme::Qam16, l1),
                        );
                        let d2 = joint_distance(
                            &y,
                            &ch,
                            fixed,
                            point_for_label(ModScheme::Qam16, l2),
                        );
                        d1.total_cmp(&d2)
                    })
                    .unwrap();
                assert_eq!(decided, brute);
            }
        }
    }

    #[test]
    fn candidate_set_sizes_and_nesting() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let ch = random_channel(&mut rng, 2);
        let y = random_rx(&mut rng, 2);
        for (k, cap) in [(1usize, 32usize), (4, 128)] {
            let sa = nearest_candidates(&y, &ch, k, CandidateOrigin::FixedA);
            let sb = nearest_candidates(&y, &ch, k, CandidateOrigin::FixedB);
            assert_eq!(sa.entries.len(), 16 * k);
            assert_eq!(sb.entries.len(), 16 * k);
            let mut union: Vec<(u8, u8)> = sa
                .entries
                .iter()
                .chain(sb.entries.iter())
                .map(|e| (e.x_a.label, e.x_b.label))
                .collect();
            union.sort_unstable();
            union.dedup();
            assert!(union.len() <= cap);
        }
        let one = nearest_candidates(&y, &ch, 1, CandidateOrigin::FixedA);
        let four = nearest_candidates(&y, &ch, 4, CandidateOrigin::FixedA);
        for e in &one.entries {
            assert!(four
                .entries
                .iter()
                .any(|f| f.x_a.label == e.x_a.label && f.x_b.label == e.x_b.label));
        }
    }

    #[test]
    fn nearest_point_scores_true_label_at_zero_when_noise_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let ch = random_channel(&mut rng, 2);
        let joint = build_joint(&ch, ModScheme::Qam16);
        for p in joint.points() {
            let y = RxSamplePair { y1: p.rx1, y2: p.rx2 };
            for k in [1usize, 4] {
                let logp = pnc_nearest_point(&y, &ch, k).logp;
                assert_eq!(logp[p.xor_label as usize], 0.0);
                assert_eq!(argmax(&logp), p.xor_label as usize);
            }
        }
    }

    #[test]
    fn nearest_point_floors_missing_labels() {
        let ch =
            ChannelState::from_gains(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), 1.0, 1.0)
                .unwrap();
        let y = RxSamplePair { y1: c(0.0, 0.0), y2: c(0.0, 0.0) };
        let logp = pnc_nearest_point(&y, &ch, 1).logp;
        for (s, &v) in logp.iter().enumerate() {
            if s == 0b1010 {
                assert_eq!(v, 0.0);
            } else {
                assert_eq!(v, -100.0);
            }
        }
    }

    #[test]
    fn nearest_point_never_beats_exhaustive_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..100 {
            let ch = random_channel(&mut rng, 2);
            let joint = build_joint(&ch, ModScheme::Qam16);
            let y = random_rx(&mut rng, 2);
            let exhaustive = pnc_symbol_logprob(&y, &joint).logp;
            for k in [1usize, 4] {
                let sa = nearest_candidates(&y, &ch, k, CandidateOrigin::FixedA);
                let sb = nearest_candidates(&y, &ch, k, CandidateOrigin::FixedB);
                let mut present = [false; 16];
                for e in sa.entries.iter().chain(sb.entries.iter()) {
                    present[(e.x_a.label ^ e.x_b.label) as usize] = true;
                }
                let near = pnc_nearest_point(&y, &ch, k).logp;
                for s in 0..16 {
                    if present[s] {
                        assert!(near[s] <= exhaustive[s] + 1e-12);
                    }
                }
            }
        }
    }
}
