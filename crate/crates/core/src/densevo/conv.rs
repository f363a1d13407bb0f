//! FFT convolution algebras used by density evolution.
//!
//! Both algebras keep densities on a fixed grid. Products are computed as
//! full linear convolutions in the frequency domain and then folded back
//! onto the grid: the LLR algebra saturates at `±K`, the check-domain
//! algebra drops mass that runs past the last bin.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// A density together with its (lazily computed) spectrum.
pub(crate) struct Powered<E, S> {
    pub elem: E,
    pub spec: Option<S>,
}

/// Convolution monoid over quantized densities.
pub(crate) trait Algebra {
    type Elem: Clone;
    type Spec: Clone;

    fn spectrum(&self, e: &Self::Elem) -> Self::Spec;
    fn multiply(&self, a: &Self::Spec, b: &Self::Spec) -> Self::Elem;
}

/// Returns `base^e` for each exponent in `exps` (ascending, all `>= 1`),
/// sharing work through a chain of repeated squares.
pub(crate) fn powers<A: Algebra>(alg: &A, base: &A::Elem, exps: &[usize]) -> Vec<A::Elem> {
    debug_assert!(exps.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(exps.first().is_none_or(|&e| e >= 1));
    if exps.is_empty() {
        return Vec::new();
    }

    // squares[b] = base^(2^b), with spectrum
    let mut squares: Vec<(A::Elem, A::Spec)> = vec![(base.clone(), alg.spectrum(base))];
    let ensure_square = |b: usize, squares: &mut Vec<(A::Elem, A::Spec)>| {
        while squares.len() <= b {
            let last = &squares.last().expect("nonempty").1;
            let e = alg.multiply(last, last);
            let s = alg.spectrum(&e);
            squares.push((e, s));
        }
    };

    let mut out = Vec::with_capacity(exps.len());
    let mut cur: Option<Powered<A::Elem, A::Spec>> = None;
    let mut cur_e = 0usize;
    for &e in exps {
        let mut diff = e - cur_e;
        while diff != 0 {
            let b = diff.trailing_zeros() as usize;
            diff &= diff - 1;
            ensure_square(b, &mut squares);
            cur = Some(match cur.take() {
                None => Powered {
                    elem: squares[b].0.clone(),
                    spec: Some(squares[b].1.clone()),
                },
                Some(mut c) => {
                    let cs = c.spec.take().unwrap_or_else(|| alg.spectrum(&c.elem));
                    Powered {
                        elem: alg.multiply(&cs, &squares[b].1),
                        spec: None,
                    }
                }
            });
        }
        cur_e = e;
        out.push(cur.as_ref().expect("e >= 1").elem.clone());
    }
    out
}

struct FftPair {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPair {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

/// LLR-domain densities on bins `-K..=K`, stored at offsets `0..=2K`.
/// Sums beyond the grid saturate to the end bins.
pub(crate) struct LlrAlgebra {
    half: usize,
    fft: FftPair,
}

impl LlrAlgebra {
    pub fn new(half: usize) -> Self {
        let len = (4 * half + 1).next_power_of_two();
        LlrAlgebra {
            half,
            fft: FftPair::new(len),
        }
    }
}

impl Algebra for LlrAlgebra {
    type Elem = Vec<f64>;
    type Spec = Arc<Vec<Complex64>>;

    fn spectrum(&self, e: &Vec<f64>) -> Self::Spec {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len];
        for (b, &v) in buf.iter_mut().zip(e) {
            b.re = v;
        }
        self.fft.forward.process(&mut buf);
        Arc::new(buf)
    }

    fn multiply(&self, a: &Self::Spec, b: &Self::Spec) -> Vec<f64> {
        let n = self.fft.len;
        let mut buf: Vec<Complex64> = a.iter().zip(b.iter()).map(|(x, y)| x * y).collect();
        self.fft.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        let k = self.half;
        // full product index j <-> value j - 2K
        let mut out = vec![0.0; 2 * k + 1];
        for (j, z) in buf.iter().enumerate().take(4 * k + 1) {
            let v = (z.re * scale).max(0.0);
            let target = j.clamp(k, 3 * k) - k;
            out[target] += v;
        }
        out
    }
}

/// Check-domain densities: `(sign, y)` with `y = -ln tanh(|x|/2)` on the
/// grid `j * step`, `j < bins`. Mass beyond the grid is not represented.
///
/// Stored in sum/difference form: `sum[j] = P(+, j) + P(-, j)`,
/// `diff[j] = P(+, j) - P(-, j)`. Under convolution the sign is an XOR, so
/// both components convolve independently.
#[derive(Clone, Debug)]
pub(crate) struct CheckDensity {
    pub sum: Vec<f64>,
    pub diff: Vec<f64>,
}

pub(crate) struct CheckAlgebra {
    bins: usize,
    fft: FftPair,
}

impl CheckAlgebra {
    pub fn new(bins: usize) -> Self {
        let len = (2 * bins - 1).next_power_of_two();
        CheckAlgebra {
            bins,
            fft: FftPair::new(len),
        }
    }
}

/// Spectra of the sum and difference components.
#[derive(Clone)]
pub(crate) struct CheckSpec {
    sum: Arc<Vec<Complex64>>,
    diff: Arc<Vec<Complex64>>,
}

impl Algebra for CheckAlgebra {
    type Elem = CheckDensity;
    type Spec = CheckSpec;

    fn spectrum(&self, e: &CheckDensity) -> CheckSpec {
        let n = self.fft.len;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (j, b) in buf.iter_mut().enumerate().take(self.bins) {
            *b = Complex64::new(e.sum[j], e.diff[j]);
        }
        self.fft.forward.process(&mut buf);
        // Separate the two real sequences packed as re + i*im.
        let mut sum = vec![Complex64::new(0.0, 0.0); n];
        let mut diff = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let z = buf[k];
            let zc = buf[(n - k) % n].conj();
            sum[k] = (z + zc) * 0.5;
            diff[k] = (z - zc) * Complex64::new(0.0, -0.5);
        }
        CheckSpec {
            sum: Arc::new(sum),
            diff: Arc::new(diff),
        }
    }

    fn multiply(&self, a: &CheckSpec, b: &CheckSpec) -> CheckDensity {
        let n = self.fft.len;
        let i = Complex64::new(0.0, 1.0);
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| a.sum[k] * b.sum[k] + i * (a.diff[k] * b.diff[k]))
            .collect();
        self.fft.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        let mut sum = vec![0.0; self.bins];
        let mut diff = vec![0.0; self.bins];
        for j in 0..self.bins {
            let s = (buf[j].re * scale).max(0.0);
            let d = (buf[j].im * scale).clamp(-s, s);
            sum[j] = s;
            diff[j] = d;
        }
        CheckDensity { sum, diff }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_llr_conv(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
        let mut out = vec![0.0; 2 * k + 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                let v = i as isize + j as isize - 2 * k as isize;
                let idx = v.clamp(-(k as isize), k as isize) + k as isize;
                out[idx as usize] += x * y;
            }
        }
        out
    }

    #[test]
    fn llr_product_matches_direct_sum_with_saturation() {
        let k = 20;
        let alg = LlrAlgebra::new(k);
        let a: Vec<f64> = (0..=2 * k).map(|i| ((i * 7) % 5) as f64 + 0.5).collect();
        let b: Vec<f64> = (0..=2 * k).map(|i| ((i * 3) % 4) as f64 + 0.1).collect();
        let na: f64 = a.iter().sum();
        let nb: f64 = b.iter().sum();
        let a: Vec<f64> = a.iter().map(|v| v / na).collect();
        let b: Vec<f64> = b.iter().map(|v| v / nb).collect();
        let got = alg.multiply(&alg.spectrum(&a), &alg.spectrum(&b));
        let want = direct_llr_conv(&a, &b, k);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn powers_match_repeated_products() {
        let k = 10;
        let alg = LlrAlgebra::new(k);
        let mut base = vec![0.0; 2 * k + 1];
        base[k + 2] = 0.7;
        base[k - 1] = 0.3;
        let exps = [1, 2, 3, 5, 8];
        let got = powers(&alg, &base, &exps);
        let mut acc = base.clone();
        let mut e = 1;
        for (idx, &target) in exps.iter().enumerate() {
            while e < target {
                acc = direct_llr_conv(&acc, &base, k);
                e += 1;
            }
            // saturation is not associative, so compare only where no mass
            // reached the boundary
            if target * 2 <= k {
                for (g, w) in got[idx].iter().zip(&acc) {
                    assert!((g - w).abs() < 1e-12, "exp {target}");
                }
            }
            assert!((got[idx].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn check_product_xors_signs_and_drops_overflow() {
        let bins = 8;
        let alg = CheckAlgebra::new(bins);
        // P(+, y=1) = 0.75, P(-, y=5) = 0.25
        let mut sum = vec![0.0; bins];
        let mut diff = vec![0.0; bins];
        sum[1] = 0.75;
        diff[1] = 0.75;
        sum[5] = 0.25;
        diff[5] = -0.25;
        let d = CheckDensity { sum, diff };
        let s = alg.spectrum(&d);
        let out = alg.multiply(&s, &s);
        // (+,1)(+,1) -> (+,2) 0.5625 ; (+,1)(-,5) twice -> (-,6) 0.375 ;
        // (-,5)(-,5) -> y=10 falls off the grid
        assert!((out.sum[2] - 0.5625).abs() < 1e-12);
        assert!((out.diff[2] - 0.5625).abs() < 1e-12);
        assert!((out.sum[6] - 0.375).abs() < 1e-12);
        assert!((out.diff[6] + 0.375).abs() < 1e-12);
        assert!((out.sum.iter().sum::<f64>() - 0.9375).abs() < 1e-12);
    }
}
