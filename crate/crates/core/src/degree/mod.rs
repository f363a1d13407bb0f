//! Edge-perspective degree distributions of irregular LDPC ensembles.
//!
//! A distribution is a pair of sparse maps keyed by **node degree** `i`
//! (not by polynomial exponent `i - 1`): `lambda[i]` is the fraction of edges
//! attached to variable nodes of degree `i`, `rho[i]` the same for check
//! nodes. Use [`DegreeDistribution::from_exponents`] to enter coefficients
//! written as `sum_i c_i x^(i-1)`.

mod registry;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use registry::{CodeRegistry, RegistryEntry};

const SUM_TOLERANCE: f64 = 1e-9;
/// Completed coefficients this close to 0 or 1 are snapped onto the bound.
const ROUND_OFF: f64 = 1e-12;

/// The pair `(lambda, rho)` defining an LDPC ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    lambda: BTreeMap<usize, f64>,
    rho: BTreeMap<usize, f64>,
}

impl DegreeDistribution {
    /// Validates and wraps the two maps. Zero coefficients are dropped.
    pub fn new(lambda: BTreeMap<usize, f64>, rho: BTreeMap<usize, f64>) -> Result<Self> {
        let lambda = validate_side("lambda", lambda)?;
        let rho = validate_side("rho", rho)?;
        Ok(DegreeDistribution { lambda, rho })
    }

    /// Builds a distribution after rescaling each side to unit sum.
    pub fn normalized(lambda: BTreeMap<usize, f64>, rho: BTreeMap<usize, f64>) -> Result<Self> {
        Self::new(rescale(lambda)?, rescale(rho)?)
    }

    /// Coefficients given as `(exponent, coefficient)` terms of `lambda(x)`
    /// and `rho(x)`; exponent `k` is node degree `k + 1`.
    pub fn from_exponents(lambda: &[(usize, f64)], rho: &[(usize, f64)]) -> Result<Self> {
        let conv = |terms: &[(usize, f64)]| {
            let mut m = BTreeMap::new();
            for &(k, c) in terms {
                *m.entry(k + 1).or_insert(0.0) += c;
            }
            m
        };
        Self::new(conv(lambda), conv(rho))
    }

    /// `(exponent, coefficient)` terms of `lambda(x)` and `rho(x)`.
    pub fn to_exponents(&self) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
        let conv = |m: &BTreeMap<usize, f64>| m.iter().map(|(&d, &c)| (d - 1, c)).collect();
        (conv(&self.lambda), conv(&self.rho))
    }

    /// Regular `(dv, dc)` ensemble.
    pub fn regular(dv: usize, dc: usize) -> Result<Self> {
        Self::new(BTreeMap::from([(dv, 1.0)]), BTreeMap::from([(dc, 1.0)]))
    }

    pub fn lambda(&self) -> &BTreeMap<usize, f64> {
        &self.lambda
    }

    pub fn rho(&self) -> &BTreeMap<usize, f64> {
        &self.rho
    }

    pub fn lambda_at(&self, degree: usize) -> f64 {
        self.lambda.get(&degree).copied().unwrap_or(0.0)
    }

    pub fn rho_at(&self, degree: usize) -> f64 {
        self.rho.get(&degree).copied().unwrap_or(0.0)
    }

    /// Maximum variable degree `L`.
    pub fn max_var_degree(&self) -> usize {
        *self.lambda.keys().next_back().expect("validated nonempty")
    }

    /// Maximum check degree `R`.
    pub fn max_check_degree(&self) -> usize {
        *self.rho.keys().next_back().expect("validated nonempty")
    }

    /// `sum_i lambda_i / i`, the variable nodes per edge.
    pub fn var_nodes_per_edge(&self) -> f64 {
        self.lambda.iter().map(|(&d, &c)| c / d as f64).sum()
    }

    /// `sum_i rho_i / i`, the check nodes per edge.
    pub fn check_nodes_per_edge(&self) -> f64 {
        self.rho.iter().map(|(&d, &c)| c / d as f64).sum()
    }

    /// `1 - (sum rho_i / i) / (sum lambda_i / i)`.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.check_nodes_per_edge() / self.var_nodes_per_edge()
    }

    /// Node-perspective fractions of variable nodes per degree.
    pub fn var_node_fractions(&self) -> BTreeMap<usize, f64> {
        node_fractions(&self.lambda)
    }

    /// Node-perspective fractions of check nodes per degree.
    pub fn check_node_fractions(&self) -> BTreeMap<usize, f64> {
        node_fractions(&self.rho)
    }

    /// Largest `lambda_2` for which the zero-error fixed point is stable on
    /// a BSC with crossover `p`: `1 / (2 sum (i-1) rho_i sqrt(p(1-p)))`.
    pub fn stability_limit(&self, p: f64) -> f64 {
        let rho_prime: f64 = self.rho.iter().map(|(&d, &c)| (d as f64 - 1.0) * c).sum();
        1.0 / (2.0 * rho_prime * (p * (1.0 - p)).sqrt())
    }

    /// Whether `lambda_2` satisfies the BSC stability condition at `p`.
    pub fn is_stable(&self, p: f64) -> bool {
        self.lambda_at(2) <= self.stability_limit(p)
    }
}

fn validate_side(name: &str, side: BTreeMap<usize, f64>) -> Result<BTreeMap<usize, f64>> {
    let side: BTreeMap<usize, f64> = side.into_iter().filter(|&(_, c)| c != 0.0).collect();
    if side.is_empty() {
        return Err(Error::Infeasible(format!("{name} has no terms")));
    }
    for (&d, &c) in &side {
        if d < 2 {
            return Err(Error::Infeasible(format!("{name} has degree {d} < 2")));
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Infeasible(format!(
                "{name}[{d}] = {c} is outside [0, 1]"
            )));
        }
    }
    let sum: f64 = side.values().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::Infeasible(format!("{name} sums to {sum}, not 1")));
    }
    Ok(side)
}

fn rescale(side: BTreeMap<usize, f64>) -> Result<BTreeMap<usize, f64>> {
    let sum: f64 = side.values().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::Infeasible(format!("cannot normalize a side summing to {sum}")));
    }
    // already normalized up to round-off; keeps text round trips exact
    if (sum - 1.0).abs() <= ROUND_OFF {
        return Ok(side);
    }
    Ok(side.into_iter().map(|(d, c)| (d, c / sum)).collect())
}

fn node_fractions(side: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let total: f64 = side.iter().map(|(&d, &c)| c / d as f64).sum();
    side.iter()
        .map(|(&d, &c)| (d, c / d as f64 / total))
        .collect()
}

/// Degree bounds of a design search: variable degrees `2..=l_max`, check
/// degrees `2..=r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeShape {
    pub l_max: usize,
    pub r_max: usize,
}

impl DegreeShape {
    /// Number of free coefficients, `L + R - 5`: `lambda_3..lambda_{L-1}`
    /// followed by `rho_3..rho_R`.
    pub fn free_dimension(&self) -> usize {
        (self.l_max + self.r_max).saturating_sub(5)
    }

    fn free_lambda_count(&self) -> usize {
        self.l_max.saturating_sub(3)
    }
}

/// Dense coefficients produced by [`complete_unchecked`], indexed by degree.
/// Entries may lie outside `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
}

impl Completion {
    /// Whether every coefficient lies in `[0, 1]`.
    pub fn is_feasible(&self) -> bool {
        self.lambda
            .iter()
            .chain(&self.rho)
            .all(|c| (0.0..=1.0).contains(c))
    }

    pub fn design_rate(&self) -> f64 {
        let per_edge = |v: &[f64]| -> f64 {
            v.iter()
                .enumerate()
                .skip(2)
                .map(|(d, &c)| c / d as f64)
                .sum()
        };
        1.0 - per_edge(&self.rho) / per_edge(&self.lambda)
    }

    fn into_distribution(self) -> Result<DegreeDistribution> {
        let to_map = |v: Vec<f64>| -> BTreeMap<usize, f64> {
            v.into_iter().enumerate().skip(2).collect()
        };
        DegreeDistribution::new(to_map(self.lambda), to_map(self.rho))
    }
}

/// Solves for `lambda_2`, `rho_2` (unit sums) and `lambda_L` (target rate)
/// given the free coefficients, without range checks.
pub fn complete_unchecked(free: &[f64], shape: DegreeShape, rate: f64) -> Result<Completion> {
    let DegreeShape { l_max, r_max } = shape;
    if l_max < 3 || r_max < 2 {
        return Err(Error::Infeasible(format!(
            "degree bounds L = {l_max}, R = {r_max} leave no coefficient to fix the rate"
        )));
    }
    if free.len() != shape.free_dimension() {
        return Err(Error::LengthMismatch {
            expected: shape.free_dimension(),
            actual: free.len(),
        });
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::Domain {
            name: "rate",
            value: rate,
            domain: "(0, 1)".into(),
        });
    }
    let beta = 1.0 - rate;
    let (free_lambda, free_rho) = free.split_at(shape.free_lambda_count());

    let mut lambda = vec![0.0; l_max + 1];
    let mut rho = vec![0.0; r_max + 1];
    lambda[3..l_max].copy_from_slice(free_lambda);
    rho[3..=r_max].copy_from_slice(free_rho);

    let tilt = |d: usize| 1.0 / d as f64 - 0.5;
    let rho_term: f64 = (3..=r_max).map(|d| rho[d] * tilt(d)).sum();
    let lambda_term: f64 = (3..l_max).map(|d| lambda[d] * tilt(d)).sum();
    lambda[l_max] = (0.5 * (1.0 - beta) + rho_term - beta * lambda_term) / (beta * tilt(l_max));

    lambda[2] = 1.0 - lambda[3..].iter().sum::<f64>();
    rho[2] = 1.0 - rho[3..].iter().sum::<f64>();
    for c in lambda.iter_mut().chain(rho.iter_mut()) {
        if c.abs() <= ROUND_OFF {
            *c = 0.0;
        } else if (*c - 1.0).abs() <= ROUND_OFF {
            *c = 1.0;
        }
    }
    Ok(Completion { lambda, rho })
}

/// Completes the free coefficients into a distribution of the target rate,
/// rejecting completions with any coefficient outside `[0, 1]`.
pub fn complete_distribution(
    free: &[f64],
    shape: DegreeShape,
    rate: f64,
) -> Result<DegreeDistribution> {
    let c = complete_unchecked(free, shape, rate)?;
    if !c.is_feasible() {
        let bad = c
            .lambda
            .iter()
            .enumerate()
            .skip(2)
            .map(|(d, &v)| ("lambda", d, v))
            .chain(c.rho.iter().enumerate().skip(2).map(|(d, &v)| ("rho", d, v)))
            .find(|(_, _, v)| !(0.0..=1.0).contains(v))
            .expect("infeasible completion has an out-of-range entry");
        return Err(Error::Infeasible(format!(
            "{}[{}] = {} after completion",
            bad.0, bad.1, bad.2
        )));
    }
    c.into_distribution()
}

/// Free-coefficient vector of `dd` for the given shape (inverse of
/// [`complete_distribution`] up to the three dependent coefficients).
pub fn free_coefficients(dd: &DegreeDistribution, shape: DegreeShape) -> Vec<f64> {
    (3..shape.l_max)
        .map(|d| dd.lambda_at(d))
        .chain((3..=shape.r_max).map(|d| dd.rho_at(d)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regular_three_six_has_rate_half() {
        let dd = DegreeDistribution::regular(3, 6).unwrap();
        assert!((dd.design_rate() - 0.5).abs() < 1e-15);
        assert_eq!(dd.max_var_degree(), 3);
        assert_eq!(dd.max_check_degree(), 6);
    }

    #[test]
    fn exponent_convention_round_trips() {
        let dd = DegreeDistribution::from_exponents(&[(1, 0.25), (2, 0.75)], &[(5, 1.0)]).unwrap();
        assert_eq!(dd.lambda_at(2), 0.25);
        assert_eq!(dd.lambda_at(3), 0.75);
        assert_eq!(dd.rho_at(6), 1.0);
        let (l, r) = dd.to_exponents();
        assert_eq!(l, vec![(1, 0.25), (2, 0.75)]);
        assert_eq!(r, vec![(5, 1.0)]);
    }

    #[test]
    fn rejects_invalid_sides() {
        let one = BTreeMap::from([(3, 1.0)]);
        assert!(DegreeDistribution::new(BTreeMap::from([(1, 1.0)]), one.clone()).is_err());
        assert!(DegreeDistribution::new(BTreeMap::from([(3, 0.9)]), one.clone()).is_err());
        assert!(DegreeDistribution::new(BTreeMap::from([(2, 1.5), (3, -0.5)]), one.clone()).is_err());
        assert!(DegreeDistribution::new(BTreeMap::new(), one).is_err());
    }

    #[test]
    fn zero_free_coefficients_at_three_six() {
        // With rho_3..rho_6 = 0 every check has degree 2, and rate 1/2 then
        // forces lambda_3 = -3, lambda_2 = 4: the rate is exact but the
        // completion is out of range.
        let shape = DegreeShape { l_max: 3, r_max: 6 };
        let raw = complete_unchecked(&[0.0; 4], shape, 0.5).unwrap();
        assert!((raw.lambda[3] + 3.0).abs() < 1e-12);
        assert!((raw.lambda[2] - (1.0 - raw.lambda[3])).abs() < 1e-12);
        assert_eq!(raw.rho[2], 1.0);
        assert!((raw.design_rate() - 0.5).abs() < 1e-12);
        assert!(matches!(
            complete_distribution(&[0.0; 4], shape, 0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn completion_recovers_regular_three_six() {
        let shape = DegreeShape { l_max: 3, r_max: 6 };
        let dd = complete_distribution(&[0.0, 0.0, 0.0, 1.0], shape, 0.5).unwrap();
        assert!((dd.lambda_at(3) - 1.0).abs() < 1e-12);
        assert!(dd.lambda_at(2).abs() < 1e-12);
        assert_eq!(dd.rho_at(2), 0.0);
        assert!((dd.design_rate() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_lambda_l_is_infeasible() {
        // All check mass on degree 3 makes rate 1/2 unreachable with L = 4.
        let shape = DegreeShape { l_max: 4, r_max: 3 };
        let raw = complete_unchecked(&[0.0, 1.0], shape, 0.5).unwrap();
        assert!(raw.lambda[4] < 0.0);
        assert!(matches!(
            complete_distribution(&[0.0, 1.0], shape, 0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn degree_two_only_is_rejected() {
        let shape = DegreeShape { l_max: 2, r_max: 2 };
        assert!(matches!(
            complete_unchecked(&[], shape, 0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn stability_examples() {
        let regular = DegreeDistribution::regular(3, 6).unwrap();
        for p in [0.001, 0.05, 0.2, 0.49] {
            assert!(regular.is_stable(p));
        }
        let half = CodeRegistry::bundled().entry_for_rate(0.5).unwrap().dd.clone();
        // 1 / (2 * 10.1306 * sqrt(0.1071 * 0.8929)) = 0.1596 >= lambda_2 = 0.1444
        let limit = half.stability_limit(0.1071);
        assert!((limit - 0.1596).abs() < 5e-4, "limit {limit}");
        assert!(half.is_stable(0.1071));
    }

    #[test]
    fn stability_limit_decreases_in_p() {
        let dd = CodeRegistry::bundled().entry_for_rate(0.7).unwrap().dd.clone();
        let mut prev = f64::INFINITY;
        for k in 1..500 {
            let p = k as f64 * 0.001;
            let cur = dd.stability_limit(p);
            assert!(cur < prev);
            prev = cur;
        }
    }

    proptest! {
        #[test]
        fn completion_hits_target_rate(
            free in proptest::collection::vec(0.0f64..0.3, 12),
            rate in 0.05f64..0.95,
        ) {
            let shape = DegreeShape { l_max: 8, r_max: 9 };
            let raw = complete_unchecked(&free, shape, rate).unwrap();
            prop_assert!((raw.design_rate() - rate).abs() < 1e-9);
            prop_assert!((raw.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!((raw.rho.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if let Ok(dd) = complete_distribution(&free, shape, rate) {
                prop_assert!((dd.design_rate() - rate).abs() < 1e-9);
                let back = free_coefficients(&dd, shape);
                for (a, b) in back.iter().zip(&free) {
                    prop_assert!((a - b).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn rate_ignores_insertion_order(
            mut terms in proptest::collection::vec((2usize..40, 0.01f64..1.0), 1..10),
            seed in any::<u64>(),
        ) {
            let build = |t: &[(usize, f64)]| {
                let mut m = BTreeMap::new();
                for &(d, c) in t {
                    *m.entry(d).or_insert(0.0) += c;
                }
                m
            };
            let rho = BTreeMap::from([(7, 0.5), (8, 0.5)]);
            let a = DegreeDistribution::normalized(build(&terms), rho.clone()).unwrap();
            let k = (seed as usize) % terms.len();
            terms.rotate_left(k);
            terms.reverse();
            let b = DegreeDistribution::normalized(build(&terms), rho).unwrap();
            prop_assert!((a.design_rate() - b.design_rate()).abs() < 1e-12);
        }
    }
}
