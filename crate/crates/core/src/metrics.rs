//! Secret key rates for BB84 under individual attacks, and the efficiency
//! and key-rate curves built from them.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bits::BitString;
use crate::cascade::{run_cascade, CascadeConfig};
use crate::channel::{transmit_bsc, BscParams, Seed};
use crate::degree::CodeRegistry;
use crate::entropy::{h, inverse_binary_entropy};
use crate::error::{Error, Result};
use crate::ldpc::{reconcile_verified, BpConfig, LdpcCode, HASH_BITS};

fn domain(name: &'static str, value: f64, domain: &str) -> Error {
    Error::Domain {
        name,
        value,
        domain: domain.into(),
    }
}

/// `1 - 2 h(p)`.
pub fn secret_capacity_bb84(p: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(domain("p", p, "[0, 0.5)"));
    }
    Ok(1.0 - 2.0 * h(p))
}

/// `1 - (1 + f) h(p)`; negative when no key survives.
pub fn key_rate_real(p: f64, f: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(domain("p", p, "(0, 0.5)"));
    }
    if !(f >= 1.0) {
        return Err(domain("f", f, "[1, inf)"));
    }
    Ok(1.0 - (1.0 + f) * h(p))
}

/// Eve's equivalent error: the root `q` in `(0, 1/2]` of `h(q) = 1 - h(p)`,
/// by bisection to 1e-12.
pub fn eve_error(p: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(domain("p", p, "[0, 0.5)"));
    }
    inverse_binary_entropy(1.0 - h(p), 1e-12)
}

/// Flip probability `e = (b - p) / (1 - 2p)` that turns a BSC(p) into a
/// BSC(b).
pub fn randomization_flip(p: f64, b: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(domain("p", p, "[0, 0.5)"));
    }
    if !(b >= p && b < 0.5) {
        return Err(domain("b", b, &format!("[{p}, 0.5)")));
    }
    Ok((b - p) / (1.0 - 2.0 * p))
}

/// Key rate with local randomization up to the code threshold `b`:
/// `h(q + e - 2eq) - f(b) h(b)`.
pub fn key_rate_randomized(p: f64, b: f64, f_at_b: f64) -> Result<f64> {
    let e = randomization_flip(p, b)?;
    let q = eve_error(p)?;
    Ok(h(q + e - 2.0 * e * q) - f_at_b * h(b))
}

/// The quantities of one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateModel {
    pub p: f64,
    /// Efficiency at `p`.
    pub f: f64,
    /// Threshold of the selected code, when randomizing.
    pub b: Option<f64>,
    pub e: Option<f64>,
    pub q: f64,
}

impl KeyRateModel {
    pub fn new(p: f64, f: f64, b: Option<f64>) -> Result<Self> {
        let q = eve_error(p)?;
        let e = b.map(|b| randomization_flip(p, b)).transpose()?;
        Ok(KeyRateModel { p, f, b, e, q })
    }

    pub fn k_real(&self) -> Result<f64> {
        key_rate_real(self.p, self.f)
    }

    /// `K_tr` given the efficiency at the threshold; `None` without `b`.
    pub fn k_tr(&self, f_at_b: f64) -> Result<Option<f64>> {
        self.b
            .map(|b| key_rate_randomized(self.p, b, f_at_b))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Cascade,
    /// One-way LDPC at the channel's own error rate (the saw curve).
    Ldpc,
    /// One-way LDPC after raising the error rate to the code threshold.
    LdpcRandomized,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Cascade => "cascade",
            Scheme::Ldpc => "ldpc",
            Scheme::LdpcRandomized => "ldpc_randomized",
        })
    }
}

/// One row of an efficiency / key-rate curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub p: f64,
    pub scheme: Scheme,
    pub f: f64,
    pub k_real: Option<f64>,
    pub k_tr: Option<f64>,
}

impl CurvePoint {
    pub const CSV_HEADER: &'static str = "p,scheme,f,K_real,K_tr,secure";

    /// The rate that applies to this scheme.
    pub fn key_rate(&self) -> f64 {
        match self.scheme {
            Scheme::LdpcRandomized => self.k_tr,
            _ => self.k_real,
        }
        .unwrap_or(f64::NAN)
    }

    pub fn secure(&self) -> bool {
        self.key_rate() > 0.0
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{:.6},{},{:.6},{},{},{}",
            self.p,
            self.scheme,
            self.f,
            opt(self.k_real),
            opt(self.k_tr),
            self.secure()
        )
    }
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CurvePoint::CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(out, "{}", p.csv_row());
    }
    out
}

/// Cascade rows from measured `(p, mean f)` pairs.
pub fn cascade_curve(measured: &[(f64, f64)]) -> Result<Vec<CurvePoint>> {
    measured
        .iter()
        .map(|&(p, f)| {
            Ok(CurvePoint {
                p,
                scheme: Scheme::Cascade,
                f,
                k_real: Some(key_rate_real(p, f)?),
                k_tr: None,
            })
        })
        .collect()
}

/// LDPC efficiency at `p` for a code of nominal rate `rate`, optionally
/// charging `HASH_BITS` on a block of `n` bits.
pub fn ldpc_efficiency(rate: f64, p: f64, hash_block: Option<usize>) -> f64 {
    let hash = hash_block.map_or(0.0, |n| HASH_BITS as f64 / n as f64);
    (1.0 - rate + hash) / h(p)
}

/// Two LDPC rows per grid point, using the code `select_code(p)`: the saw
/// value `(1 - R) / h(p)` with `K_real`, and the randomized variant with
/// `f(b)` and `K_tr`. Points beyond the registry are skipped.
pub fn ldpc_curve(registry: &CodeRegistry, grid: &[f64], hash_block: Option<usize>) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::new();
    for &p in grid {
        let entry = match registry.select_code(p) {
            Ok(e) => e,
            Err(Error::NoCode { .. }) => continue,
            Err(e) => return Err(e),
        };
        let f = ldpc_efficiency(entry.rate, p, hash_block);
        let b = entry.threshold;
        let f_b = ldpc_efficiency(entry.rate, b, hash_block);
        out.push(CurvePoint {
            p,
            scheme: Scheme::Ldpc,
            f,
            k_real: Some(key_rate_real(p, f)?),
            k_tr: None,
        });
        out.push(CurvePoint {
            p,
            scheme: Scheme::LdpcRandomized,
            f: f_b,
            k_real: None,
            k_tr: Some(key_rate_randomized(p, b, f_b)?),
        });
    }
    Ok(out)
}

/// First `p` where a rate sampled on increasing `p` drops from positive to
/// non-positive, by linear interpolation.
pub fn zero_crossing(samples: &[(f64, f64)]) -> Option<f64> {
    samples.windows(2).find_map(|w| {
        let ((p0, k0), (p1, k1)) = (w[0], w[1]);
        (k0 > 0.0 && k1 <= 0.0).then(|| p0 + (p1 - p0) * k0 / (k0 - k1))
    })
}

/// Evenly spaced grid `start, start + step, ...` up to `stop` inclusive.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!("bad grid {start}:{stop}:{step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

/// Aggregate of seeded reconciliation sessions at one error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub p: f64,
    pub n: usize,
    pub trials: usize,
    /// Sessions that ended with identical strings.
    pub successes: usize,
    /// Sessions declared successful that left a discrepancy.
    pub undetected: usize,
    pub mean_leaked: f64,
    pub mean_rounds: f64,
    /// `mean_leaked / (n h(p))`.
    pub mean_f: f64,
}

impl TrialSummary {
    fn collect(p: f64, n: usize, runs: &[(bool, bool, u64, u64)]) -> Self {
        let trials = runs.len();
        let per_trial = |total: u64| if trials == 0 { 0.0 } else { total as f64 / trials as f64 };
        let mean_leaked = per_trial(runs.iter().map(|r| r.2).sum());
        TrialSummary {
            p,
            n,
            trials,
            successes: runs.iter().filter(|r| r.0).count(),
            undetected: runs.iter().filter(|r| r.1).count(),
            mean_leaked,
            mean_rounds: per_trial(runs.iter().map(|r| r.3).sum()),
            mean_f: mean_leaked / (n as f64 * h(p)),
        }
    }

    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Trial `t` uses `seed.derive(t)` for the strings and channel, so results do
/// not depend on the number of worker threads.
fn random_pair(n: usize, p: f64, seed: Seed) -> Result<(BitString, BitString)> {
    let mut rng = seed.rng();
    let x = BitString::random(n, &mut rng);
    let y = transmit_bsc(&x, BscParams::new(p)?, &mut rng);
    Ok((x, y))
}

/// Cascade sessions with the standard block-size rule, the error estimate
/// set to the true `p`.
pub fn cascade_trials(p: f64, n: usize, trials: usize, seed: Seed) -> Result<TrialSummary> {
    let runs: Vec<(bool, bool, u64, u64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed.derive(t);
            let (x, y) = random_pair(n, p, s)?;
            let (z, tr) = run_cascade(&x, &y, &CascadeConfig::new(p, s.derive(1)))?;
            let ok = z == x;
            Ok((ok, false, tr.leaked(), tr.rounds()))
        })
        .collect::<Result<_>>()?;
    Ok(TrialSummary::collect(p, n, &runs))
}

/// Hash-verified one-way sessions on a fixed code. A session succeeds when
/// the decoder converges and the hashes match; `undetected` counts those
/// that still differ from Alice's string.
pub fn ldpc_trials(code: &LdpcCode, p: f64, trials: usize, seed: Seed, cfg: &BpConfig) -> Result<TrialSummary> {
    let runs: Vec<(bool, bool, u64, u64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let s = seed.derive(t);
            let (x, y) = random_pair(code.n(), p, s)?;
            let v = reconcile_verified(&x, &y, code, p, cfg, s.derive(1))?;
            let accepted = v.hash_match;
            let undetected = accepted && v.decode.estimate != x;
            Ok((accepted && !undetected, undetected, v.transcript.leaked(), v.transcript.rounds()))
        })
        .collect::<Result<_>>()?;
    Ok(TrialSummary::collect(p, code.n(), &runs))
}

#[cfg(test)]
mod tests;
