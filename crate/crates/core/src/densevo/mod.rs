//! Discretized density evolution on the binary symmetric channel.
//!
//! Message densities live on a uniform LLR grid `i * step`, `|i| <= K`.
//! Variable-node updates are saturating FFT convolutions on that grid.
//! Check-node updates map each density to the `(sign, y = -ln tanh(|x|/2))`
//! domain, where the boxplus operation becomes addition, convolve there, and
//! map back. Mass moved between grids is split linearly between the two
//! nearest bins, which preserves the mean of the additive coordinate.
//!
//! Reliable messages have `y ~ 2 e^-x`, far below the step of any uniform
//! grid that also covers weak messages, and lumping them together makes
//! wrong-but-confident messages look certain. The check domain is therefore
//! a stack of uniform grids, each finer one covering only the low end of the
//! previous: a sum of `y` values lies below a level's upper edge only when
//! every term does, so each level convolves exactly the inputs it covers.
//!
//! A threshold is located by bisection on the crossover probability: the
//! lower end of the final interval is a probe that converged, the upper end
//! one that did not.

mod conv;

use crate::degree::DegreeDistribution;
use crate::entropy::inverse_binary_entropy;
use crate::error::{ensure_in, Error, Result};

use conv::{powers, CheckAlgebra, CheckDensity, LlrAlgebra};

/// Quantization and stopping parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEvolutionConfig {
    /// LLR grid step.
    pub llr_step: f64,
    /// Messages saturate at `±llr_bound`.
    pub llr_bound: f64,
    /// Bins per level of the check-domain grid.
    pub check_bins: usize,
    /// Step ratio between consecutive check-domain levels.
    pub check_level_ratio: usize,
    pub max_iterations: usize,
    /// Convergence is declared once the message error probability drops
    /// below this value.
    pub target_error: f64,
    /// A probe stops early as non-convergent once the error probability has
    /// decreased by less than this relative amount for several iterations
    /// in a row (a numerical fixed point).
    pub stall_tolerance: f64,
    /// Initial bisection interval for threshold search.
    pub bracket: (f64, f64),
    /// Bisection stops when the interval is at most this wide.
    pub bisection_width: f64,
}

const STALL_RUN: usize = 5;

impl Default for DensityEvolutionConfig {
    fn default() -> Self {
        DensityEvolutionConfig {
            llr_step: 1.0 / 128.0,
            llr_bound: 30.0,
            check_bins: 2048,
            check_level_ratio: 16,
            max_iterations: 2000,
            target_error: 1e-7,
            stall_tolerance: 1e-9,
            bracket: (0.0, 0.2),
            bisection_width: 1e-4,
        }
    }
}

impl DensityEvolutionConfig {
    /// Coarse, non-certifying settings for use inside design searches.
    pub fn fast() -> Self {
        DensityEvolutionConfig {
            llr_step: 1.0 / 16.0,
            llr_bound: 30.0,
            check_bins: 256,
            check_level_ratio: 16,
            max_iterations: 300,
            target_error: 1e-6,
            stall_tolerance: 1e-8,
            bracket: (0.0, 0.2),
            bisection_width: 1e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.llr_step > 0.0
            && self.llr_bound >= self.llr_step
            && self.check_level_ratio >= 2
            && self.check_bins > 2 * self.check_level_ratio
            && self.max_iterations >= 1
            && self.target_error > 0.0
            && self.bracket.0 >= 0.0
            && self.bracket.0 < self.bracket.1
            && self.bracket.1 < 0.5
            && self.bisection_width > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid density evolution settings {self:?}"
            )))
        }
    }
}

/// Probability masses over the LLR grid `-K..=K` (index `K + i` holds value
/// `i * step`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDensity {
    mass: Vec<f64>,
    step: f64,
}

impl QuantizedDensity {
    pub fn half_width(&self) -> usize {
        self.mass.len() / 2
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// LLR value of storage index `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_width() as f64) * self.step
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `P(x < 0) + P(x = 0) / 2`.
    pub fn error_probability(&self) -> f64 {
        error_probability(&self.mass)
    }
}

fn error_probability(mass: &[f64]) -> f64 {
    let k = mass.len() / 2;
    mass[..k].iter().sum::<f64>() + 0.5 * mass[k]
}

/// Result of one density-evolution run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeOutcome {
    pub converged: bool,
    /// Error probability of variable-to-check messages at the last iteration.
    pub error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdProbe {
    pub p: f64,
    pub outcome: DeOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Largest probed crossover probability that converged.
    pub threshold: f64,
    /// Width of the final bisection interval; `threshold + width` did not
    /// converge.
    pub width: f64,
    /// Every probe, in evaluation order.
    pub probes: Vec<ThresholdProbe>,
}

impl ThresholdResult {
    pub const CSV_HEADER: &'static str = "rate,threshold,gap_to_shannon,iterations";

    /// Iterations needed to converge at the reported threshold.
    pub fn iterations(&self) -> usize {
        self.probes
            .iter()
            .find(|pr| pr.p == self.threshold && pr.outcome.converged)
            .map_or(0, |pr| pr.outcome.iterations)
    }

    pub fn csv_row(&self, rate: f64) -> Result<String> {
        Ok(format!(
            "{:.6},{:.6},{:.6},{}",
            rate,
            self.threshold,
            shannon_gap(rate, self.threshold)?,
            self.iterations()
        ))
    }
}

/// Weighted exponents `(d - 1, coefficient)` of one side of a distribution.
struct Side {
    exponents: Vec<usize>,
    weights: Vec<f64>,
}

impl Side {
    fn new(map: &std::collections::BTreeMap<usize, f64>) -> Self {
        Side {
            exponents: map.keys().map(|&d| d - 1).collect(),
            weights: map.values().copied().collect(),
        }
    }
}

/// A configured density-evolution evaluator. Immutable and shareable across
/// threads; every call allocates its own working buffers.
pub struct DensityEvolution {
    cfg: DensityEvolutionConfig,
    half: usize,
    llr: LlrAlgebra,
    check: CheckAlgebra,
    /// Check-domain levels, coarsest first.
    levels: Vec<Level>,
}

/// One uniform check-domain grid with step `g`, bins `0..check_bins`.
struct Level {
    /// `(i, targets)`: LLR magnitude bin `i` lands on these bins.
    inputs: Vec<(usize, [(usize, f64); 2])>,
    /// Bins below `first` are covered by the next finer level. Zero on the
    /// finest level.
    first: usize,
    /// LLR magnitude bins receiving level bin `first + n`.
    outputs: Vec<[(usize, f64); 2]>,
}

/// `-ln tanh(x / 2) = ln((1 + e^-x) / (1 - e^-x))`; its own inverse.
fn phi(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let t = (-x).exp();
    if t < 0.5 {
        t.ln_1p() - (-t).ln_1p()
    } else {
        t.ln_1p() - (-(-x).exp_m1()).ln()
    }
}

fn split(t: f64, last: usize) -> [(usize, f64); 2] {
    if t >= last as f64 {
        return [(last, 1.0), (last, 0.0)];
    }
    let lo = t.floor();
    let w = t - lo;
    let lo = lo as usize;
    [(lo, 1.0 - w), ((lo + 1).min(last), w)]
}

impl DensityEvolution {
    pub fn new(cfg: DensityEvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        let step = cfg.llr_step;
        let half = (cfg.llr_bound / step).round() as usize;
        let bins = cfg.check_bins;
        let last = bins - 1;
        let boundary = last / cfg.check_level_ratio;
        // Beyond phi(step / 2) a check output rounds to LLR zero; below
        // y_floor everything rounds to the saturation value.
        let y_max = phi(step / 2.0);
        let y_floor = phi((half as f64 * step - 1.0).max(step));

        let mut steps = vec![y_max / last as f64];
        while *steps.last().expect("nonempty") > y_floor {
            let g = steps.last().expect("nonempty") * boundary as f64 / last as f64;
            steps.push(g);
        }
        let finest = steps.len() - 1;
        let levels = steps
            .iter()
            .enumerate()
            .map(|(l, &g)| {
                let inputs = (1..=half)
                    .filter_map(|i| {
                        let t = phi(i as f64 * step) / g;
                        (t <= last as f64).then(|| (i, split(t, last)))
                    })
                    .collect();
                let first = if l == finest { 0 } else { boundary };
                let outputs = (first..bins)
                    .map(|j| {
                        if j == 0 {
                            [(half, 1.0), (half, 0.0)]
                        } else {
                            split(phi(j as f64 * g) / step, half)
                        }
                    })
                    .collect();
                Level {
                    inputs,
                    first,
                    outputs,
                }
            })
            .collect();

        Ok(DensityEvolution {
            llr: LlrAlgebra::new(half),
            check: CheckAlgebra::new(bins),
            cfg,
            half,
            levels,
        })
    }

    pub fn config(&self) -> &DensityEvolutionConfig {
        &self.cfg
    }

    /// The two-point channel LLR density: `+ln((1-p)/p)` with mass `1 - p`,
    /// its negative with mass `p`.
    pub fn channel_density(&self, p: f64) -> QuantizedDensity {
        let k = self.half;
        let mut mass = vec![0.0; 2 * k + 1];
        if p == 0.0 {
            mass[2 * k] = 1.0;
        } else {
            let llr = ((1.0 - p) / p).ln();
            for (i, w) in split(llr / self.cfg.llr_step, k) {
                mass[k + i] += (1.0 - p) * w;
                mass[k - i] += p * w;
            }
        }
        QuantizedDensity {
            mass,
            step: self.cfg.llr_step,
        }
    }

    /// Runs density evolution at crossover `p` until the message error
    /// probability falls below the target, stalls, or the iteration budget
    /// is spent.
    pub fn de_iterate(&self, dd: &DegreeDistribution, p: f64) -> Result<DeOutcome> {
        ensure_in("p", p, 0.0, 0.5 - f64::EPSILON)?;
        let lambda = Side::new(dd.lambda());
        let rho = Side::new(dd.rho());
        let channel = self.channel_density(p).mass;

        let mut message = channel.clone();
        let mut prev = error_probability(&message);
        let mut stalled = 0;
        for it in 1..=self.cfg.max_iterations {
            let from_checks = self.check_update(&message, &rho);
            message = self.var_update(&from_checks, &lambda, &channel);
            let err = error_probability(&message);
            debug_assert!(err.is_finite());
            if err < self.cfg.target_error {
                return Ok(DeOutcome {
                    converged: true,
                    error: err,
                    iterations: it,
                });
            }
            if prev - err <= self.cfg.stall_tolerance * prev {
                stalled += 1;
                if stalled >= STALL_RUN {
                    return Ok(DeOutcome {
                        converged: false,
                        error: err,
                        iterations: it,
                    });
                }
            } else {
                stalled = 0;
            }
            prev = err;
        }
        Ok(DeOutcome {
            converged: false,
            error: prev,
            iterations: self.cfg.max_iterations,
        })
    }

    /// Bisection for the largest convergent crossover probability.
    pub fn find_threshold(&self, dd: &DegreeDistribution) -> Result<ThresholdResult> {
        let (mut lo, mut hi) = self.cfg.bracket;
        let mut probes = Vec::new();
        let probe = |p: f64, probes: &mut Vec<ThresholdProbe>| -> Result<bool> {
            let outcome = self.de_iterate(dd, p)?;
            probes.push(ThresholdProbe { p, outcome });
            Ok(outcome.converged)
        };
        if probe(hi, &mut probes)? {
            return Ok(ThresholdResult {
                threshold: hi,
                width: 0.0,
                probes,
            });
        }
        if lo > 0.0 && !probe(lo, &mut probes)? {
            return Ok(ThresholdResult {
                threshold: 0.0,
                width: lo,
                probes,
            });
        }
        while hi - lo > self.cfg.bisection_width {
            let mid = 0.5 * (lo + hi);
            if probe(mid, &mut probes)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(ThresholdResult {
            threshold: lo,
            width: hi - lo,
            probes,
        })
    }

    /// Searches only `[from, bracket.1]`, assuming convergence at `from`.
    /// Returns `None` when the distribution does not converge at `from`.
    pub fn threshold_above(&self, dd: &DegreeDistribution, from: f64) -> Result<Option<f64>> {
        if !self.de_iterate(dd, from)?.converged {
            return Ok(None);
        }
        let (mut lo, mut hi) = (from, self.cfg.bracket.1);
        if self.de_iterate(dd, hi)?.converged {
            return Ok(Some(hi));
        }
        while hi - lo > self.cfg.bisection_width {
            let mid = 0.5 * (lo + hi);
            if self.de_iterate(dd, mid)?.converged {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(lo))
    }

    fn check_update(&self, message: &[f64], rho: &Side) -> Vec<f64> {
        let k = self.half;
        let bins = self.cfg.check_bins;
        let mut out = vec![0.0; 2 * k + 1];
        // Mass already placed by finer levels.
        let mut covered = 0.0;
        for level in self.levels.iter().rev() {
            let mut base = CheckDensity {
                sum: vec![0.0; bins],
                diff: vec![0.0; bins],
            };
            let mut mass = 0.0;
            for &(i, targets) in &level.inputs {
                let (pos, neg) = (message[k + i], message[k - i]);
                mass += pos + neg;
                for (j, w) in targets {
                    base.sum[j] += (pos + neg) * w;
                    base.diff[j] += (pos - neg) * w;
                }
            }
            if mass < 1e-300 {
                continue;
            }

            let mut sum = vec![0.0; bins];
            let mut diff = vec![0.0; bins];
            for (g, &w) in powers(&self.check, &base, &rho.exponents)
                .iter()
                .zip(&rho.weights)
            {
                for j in 0..bins {
                    sum[j] += w * g.sum[j];
                    diff[j] += w * g.diff[j];
                }
            }
            // This level owns the mass above the finer levels' range.
            // Grid rounding smears a little of the finer mass past the
            // boundary, so bins are claimed from the top down until the
            // level's share is used up.
            let f = level.first;
            let mut quota = (sum.iter().sum::<f64>() - covered).max(0.0);
            for j in (f..bins).rev() {
                let (mut s_j, mut d_j) = (sum[j], diff[j]);
                if j == f || s_j > quota {
                    let scale = if s_j > 0.0 { quota / s_j } else { 0.0 };
                    s_j = quota;
                    d_j = (d_j * scale).clamp(-s_j, s_j);
                }
                quota -= s_j;
                let plus = 0.5 * (s_j + d_j);
                let minus = 0.5 * (s_j - d_j);
                for &(i, w) in &level.outputs[j - f] {
                    out[k + i] += plus * w;
                    out[k - i] += minus * w;
                }
                covered += s_j;
                if quota <= 0.0 {
                    break;
                }
            }
        }
        out[k] += (1.0 - covered).max(0.0);
        normalize(&mut out);
        out
    }

    fn var_update(&self, from_checks: &[f64], lambda: &Side, channel: &[f64]) -> Vec<f64> {
        let k = self.half as isize;
        let pw = powers(&self.llr, &from_checks.to_vec(), &lambda.exponents);
        let mut mix = vec![0.0; from_checks.len()];
        for (d, &w) in pw.iter().zip(&lambda.weights) {
            for (m, &v) in mix.iter_mut().zip(d) {
                *m += w * v;
            }
        }
        // The channel density has at most four atoms; shift-and-add.
        let mut out = vec![0.0; from_checks.len()];
        for (ci, &cm) in channel.iter().enumerate() {
            if cm == 0.0 {
                continue;
            }
            let shift = ci as isize - k;
            for (mi, &mm) in mix.iter().enumerate() {
                let target = (mi as isize + shift).clamp(0, 2 * k) as usize;
                out[target] += cm * mm;
            }
        }
        normalize(&mut out);
        out
    }
}

/// Rescales to unit mass. FFT round-off would otherwise compound through
/// the high powers taken at every iteration.
fn normalize(mass: &mut [f64]) {
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        mass.iter_mut().for_each(|m| *m /= total);
    }
}

/// Density evolution with the default (certifying) settings, overriding the
/// iteration budget and target error.
pub fn de_iterate(
    dd: &DegreeDistribution,
    p: f64,
    max_iterations: usize,
    target_error: f64,
) -> Result<DeOutcome> {
    let cfg = DensityEvolutionConfig {
        max_iterations,
        target_error,
        ..Default::default()
    };
    DensityEvolution::new(cfg)?.de_iterate(dd, p)
}

/// Threshold of `dd` with the default (certifying) settings.
pub fn find_threshold(dd: &DegreeDistribution) -> Result<ThresholdResult> {
    DensityEvolution::new(DensityEvolutionConfig::default())?.find_threshold(dd)
}

/// Distance from the threshold to the Shannon limit `h^-1(1 - rate)`.
pub fn shannon_gap(rate: f64, threshold: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Domain {
            name: "rate",
            value: rate,
            domain: "(0, 1)".into(),
        });
    }
    Ok(inverse_binary_entropy(1.0 - rate, 1e-9)? - threshold)
}

#[cfg(test)]
mod tests;
