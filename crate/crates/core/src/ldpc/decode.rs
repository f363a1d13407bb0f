//! Syndrome-conditioned sum-product decoding and one-way reconciliation.

use rand::Rng;

use super::LdpcCode;
use crate::bits::BitString;
use crate::channel::Seed;
use crate::error::{ensure_len, Error, Result};
use crate::transcript::Transcript;

/// Bits disclosed by the verification hash.
pub const HASH_BITS: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct BpConfig {
    pub max_iterations: usize,
    /// Every message and posterior LLR is clipped to `±llr_clip`.
    pub llr_clip: f64,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            max_iterations: 200,
            llr_clip: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub estimate: BitString,
    /// The estimate satisfies the target syndrome.
    pub converged: bool,
    pub iterations: usize,
}

/// Flooding sum-product decoder. Finds the word closest to `y` (under a
/// BSC(p)) whose syndrome is `s`.
pub fn bp_decode(
    code: &LdpcCode,
    y: &BitString,
    s: &BitString,
    p: f64,
    cfg: &BpConfig,
) -> Result<DecodeResult> {
    ensure_len(code.n(), y.len())?;
    ensure_len(code.m(), s.len())?;
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: "(0, 0.5)".into(),
        });
    }
    if code.syndrome(y)? == *s {
        return Ok(DecodeResult {
            estimate: y.clone(),
            converged: true,
            iterations: 0,
        });
    }

    let clip = cfg.llr_clip;
    let n = code.n();
    // Edges are numbered check by check.
    let mut offsets = Vec::with_capacity(code.m() + 1);
    offsets.push(0usize);
    for row in code.checks() {
        offsets.push(offsets.last().unwrap() + row.len());
    }
    let edge_var: Vec<u32> = code.checks().iter().flatten().copied().collect();
    let mut var_edges: Vec<Vec<u32>> = (0..n).map(|v| Vec::with_capacity(code.var(v).len())).collect();
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v as usize].push(e as u32);
    }

    let l0 = ((1.0 - p) / p).ln();
    let channel: Vec<f64> = (0..n).map(|v| if y.get(v) { -l0 } else { l0 }).collect();
    // variable-to-check messages are kept as tanh(L / 2)
    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| (0.5 * channel[v as usize]).tanh()).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut estimate = y.clone();
    let mut fwd = Vec::new();

    for it in 1..=cfg.max_iterations {
        for c in 0..code.m() {
            let (a, b) = (offsets[c], offsets[c + 1]);
            let sign = if s.get(c) { -1.0 } else { 1.0 };
            fwd.clear();
            let mut acc = 1.0;
            for e in a..b {
                fwd.push(acc);
                acc *= v2c[e];
            }
            let mut back = 1.0;
            for e in (a..b).rev() {
                let prod = fwd[e - a] * back;
                back *= v2c[e];
                c2v[e] = (sign * 2.0 * prod.atanh()).clamp(-clip, clip);
            }
        }
        for v in 0..n {
            let edges = &var_edges[v];
            let total = (channel[v] + edges.iter().map(|&e| c2v[e as usize]).sum::<f64>())
                .clamp(-clip, clip);
            debug_assert!(total.is_finite());
            estimate.set(v, total < 0.0);
            for &e in edges {
                v2c[e as usize] = (0.5 * (total - c2v[e as usize]).clamp(-clip, clip)).tanh();
            }
        }
        let satisfied = (0..code.m()).all(|c| {
            let parity = edge_var[offsets[c]..offsets[c + 1]]
                .iter()
                .fold(false, |acc, &v| acc ^ estimate.get(v as usize));
            parity == s.get(c)
        });
        if satisfied {
            return Ok(DecodeResult {
                estimate,
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(DecodeResult {
        estimate,
        converged: false,
        iterations: cfg.max_iterations,
    })
}

/// Alice sends `syndrome(x)` in one message; Bob decodes.
pub fn reconcile_oneway(
    x: &BitString,
    y: &BitString,
    code: &LdpcCode,
    p: f64,
    cfg: &BpConfig,
) -> Result<(DecodeResult, Transcript)> {
    ensure_len(x.len(), y.len())?;
    let s = code.syndrome(x)?;
    let mut transcript = Transcript::new();
    transcript.begin_pass(code.n());
    transcript.disclose(code.m() as u64);
    transcript.round();
    let result = bp_decode(code, y, &s, p, cfg)?;
    Ok((result, transcript))
}

/// Polynomial hash over GF(2^61 - 1) evaluated at a seeded point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolyHash {
    point: u64,
}

const MERSENNE_61: u64 = (1 << 61) - 1;

impl PolyHash {
    pub fn new(seed: Seed) -> Self {
        PolyHash {
            point: seed.rng().random_range(2..MERSENNE_61),
        }
    }

    fn step(acc: u64, point: u64, word: u64) -> u64 {
        let prod = u128::from(acc) * u128::from(point) + u128::from(word);
        let folded = (prod & u128::from(MERSENNE_61)) + (prod >> 61);
        let r = folded as u64;
        let r = (r & MERSENNE_61) + (r >> 61);
        if r >= MERSENNE_61 {
            r - MERSENNE_61
        } else {
            r
        }
    }

    /// Hash of the bit string, read in 32-bit chunks and closed with its
    /// length.
    pub fn hash(&self, bits: &BitString) -> u64 {
        let mut acc = 0;
        let mut i = 0;
        while i < bits.len() {
            let end = (i + 32).min(bits.len());
            let word = (i..end).fold(0u64, |w, j| (w << 1) | u64::from(bits.get(j)));
            acc = Self::step(acc, self.point, word);
            i = end;
        }
        Self::step(acc, self.point, bits.len() as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifiedReconciliation {
    pub decode: DecodeResult,
    /// Syndrome plus hash, sent together in one message.
    pub transcript: Transcript,
    pub hash_match: bool,
}

/// One-way reconciliation followed by a hash comparison. Alice appends the
/// hash of `x` to her syndrome message.
pub fn reconcile_verified(
    x: &BitString,
    y: &BitString,
    code: &LdpcCode,
    p: f64,
    cfg: &BpConfig,
    hash_seed: Seed,
) -> Result<VerifiedReconciliation> {
    let (decode, mut transcript) = reconcile_oneway(x, y, code, p, cfg)?;
    transcript.disclose(HASH_BITS);
    let hasher = PolyHash::new(hash_seed);
    let hash_match = decode.converged && hasher.hash(&decode.estimate) == hasher.hash(x);
    Ok(VerifiedReconciliation {
        decode,
        transcript,
        hash_match,
    })
}
