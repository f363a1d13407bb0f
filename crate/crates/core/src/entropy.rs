//! Binary entropy and its inverse on `[0, 1/2]`.

use crate::error::{ensure_in, Result};

/// `h(p) = -p log2 p - (1-p) log2 (1-p)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    ensure_in("p", p, 0.0, 1.0)?;
    Ok(h(p))
}

/// Unchecked entropy for callers that have already validated `p`.
#[inline]
pub(crate) fn h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Root of `h(p) = y` on `[0, 1/2]`, by bisection to absolute tolerance `tol`.
pub fn inverse_binary_entropy(y: f64, tol: f64) -> Result<f64> {
    ensure_in("y", y, 0.0, 1.0)?;
    // h is flat at its maximum, so bisection cannot resolve this end
    if y == 1.0 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if h(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values computed independently with 40-digit mpmath.
    const H_0_1071: f64 = 0.491106232529019;
    const H_0_09: f64 = 0.436469817064103;
    const HINV_0_5: f64 = 0.11002786443836;

    #[test]
    fn known_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let v = binary_entropy(0.1071).unwrap();
        assert!((v - H_0_1071).abs() < 1e-12);
        assert!((v - 0.4912).abs() < 1e-3);
        assert!((binary_entropy(0.09).unwrap() - H_0_09).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
        assert!(inverse_binary_entropy(1.5, 1e-9).is_err());
    }

    #[test]
    fn inverse_matches_reference() {
        let q = inverse_binary_entropy(0.5, 1e-12).unwrap();
        assert!((q - HINV_0_5).abs() < 1e-11);
        assert!(inverse_binary_entropy(0.0, 1e-12).unwrap() < 1e-11);
        assert!((inverse_binary_entropy(1.0, 1e-12).unwrap() - 0.5).abs() < 1e-11);
    }

    proptest! {
        #[test]
        fn symmetric(p in 0.0f64..=1.0) {
            let a = binary_entropy(p).unwrap();
            let b = binary_entropy(1.0 - p).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn concave(p in 0.0f64..=1.0, q in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            let mix = binary_entropy(t * p + (1.0 - t) * q).unwrap();
            let chord = t * binary_entropy(p).unwrap() + (1.0 - t) * binary_entropy(q).unwrap();
            prop_assert!(mix >= chord - 1e-12);
        }

        #[test]
        fn inverse_round_trips(y in 0.0f64..=1.0) {
            let p = inverse_binary_entropy(y, 1e-13).unwrap();
            prop_assert!((0.0..=0.5).contains(&p));
            prop_assert!((binary_entropy(p).unwrap() - y).abs() < 1e-9);
        }
    }
}
