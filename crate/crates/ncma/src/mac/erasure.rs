//! Systematic maximum-distance-separable erasure code over GF(2^8).
//!
//! A message of `L * S` bytes is split into `L` contiguous parts of `S`
//! bytes. Byte position `j` across the parts defines a polynomial of degree
//! less than `L` through the points (0, part_0[j]) .. (L-1, part_{L-1}[j]);
//! packet `i` carries that polynomial evaluated at `x = i`. Packets
//! 0..L-1 therefore equal the message parts verbatim, and any `L` distinct
//! packet indices recover the message by Lagrange interpolation.

use std::collections::BTreeMap;

use super::gf256;
use super::{MacError, Message, Packet, PacketKind};

fn check_params(l: usize, n: usize) -> Result<(), MacError> {
    if l < 1 || l > n || n > 255 {
        return Err(MacError::BadCodeParams { l, n });
    }
    Ok(())
}

/// Lagrange basis coefficients for evaluating at `target` the polynomial
/// interpolating arbitrary values at the distinct nodes `xs`.
fn lagrange_coeffs(xs: &[u8], target: u8) -> Vec<u8> {
    (0..xs.len())
        .map(|k| {
            let mut num = 1u8;
            let mut den = 1u8;
            for m in 0..xs.len() {
                if m != k {
                    num = gf256::mul(num, target ^ xs[m]);
                    den = gf256::mul(den, xs[k] ^ xs[m]);
                }
            }
            gf256::div(num, den)
        })
        .collect()
}

/// Encodes a message payload into `n` packet payloads under an (l, n) code.
pub(crate) fn encode_shares(payload: &[u8], l: usize, n: usize) -> Result<Vec<Vec<u8>>, MacError> {
    check_params(l, n)?;
    if payload.is_empty() || payload.len() % l != 0 {
        return Err(MacError::PayloadNotDivisible { len: payload.len(), l });
    }
    let s = payload.len() / l;
    let parts: Vec<&[u8]> = payload.chunks(s).collect();
    let nodes: Vec<u8> = (0..l as u8).collect();
    let mut shares: Vec<Vec<u8>> = parts.iter().map(|p| p.to_vec()).collect();
    for i in l..n {
        let coeffs = lagrange_coeffs(&nodes, i as u8);
        let mut share = vec![0u8; s];
        for (c, part) in coeffs.iter().zip(&parts) {
            if *c == 0 {
                continue;
            }
            for (dst, &src) in share.iter_mut().zip(*part) {
                *dst ^= gf256::mul(*c, src);
            }
        }
        shares.push(share);
    }
    Ok(shares)
}

/// Recovers the message payload from packet payload shares keyed by index.
/// Returns `Ok(None)` while fewer than `l` distinct indices are present.
/// Duplicate indices keep the first payload seen.
pub(crate) fn decode_shares(
    shares: &[(usize, &[u8])],
    l: usize,
) -> Result<Option<Vec<u8>>, MacError> {
    check_params(l, 255)?;
    let mut seen: BTreeMap<usize, &[u8]> = BTreeMap::new();
    for (i, p) in shares {
        if *i >= 255 {
            return Err(MacError::ShareIndexTooLarge(*i));
        }
        seen.entry(*i).or_insert(p);
    }
    if seen.len() < l {
        return Ok(None);
    }
    let chosen: Vec<(u8, &[u8])> = seen.iter().take(l).map(|(i, p)| (*i as u8, *p)).collect();
    let s = chosen[0].1.len();
    for (_, p) in &chosen {
        if p.len() != s {
            return Err(MacError::ShareLengthMismatch { expected: s, got: p.len() });
        }
    }
    let xs: Vec<u8> = chosen.iter().map(|(i, _)| *i).collect();
    let mut msg = Vec::with_capacity(l * s);
    for t in 0..l as u8 {
        if let Some(pos) = xs.iter().position(|&x| x == t) {
            msg.extend_from_slice(chosen[pos].1);
        } else {
            let coeffs = lagrange_coeffs(&xs, t);
            for j in 0..s {
                let mut byte = 0u8;
                for (c, (_, p)) in coeffs.iter().zip(&chosen) {
                    byte ^= gf256::mul(*c, p[j]);
                }
                msg.push(byte);
            }
        }
    }
    Ok(Some(msg))
}

/// Encodes a message into `n` packets such that any `l` of them recover it.
pub fn erasure_encode(msg: &Message, l: usize, n: usize) -> Result<Vec<Packet>, MacError> {
    let shares = encode_shares(&msg.payload, l, n)?;
    Ok(shares
        .into_iter()
        .enumerate()
        .map(|(index, payload)| Packet {
            msg_id: msg.id,
            index,
            kind: PacketKind::native(msg.owner),
            payload,
        })
        .collect())
}

/// Recovers a message payload from received `(index, payload)` shares.
/// `Ok(None)` means not enough packets yet; it is not a fault.
pub fn erasure_decode(shares: &[(usize, &[u8])], l: usize) -> Result<Option<Vec<u8>>, MacError> {
    decode_shares(shares, l)
}
