//! Configuration-model sampling of a Tanner graph.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;

use super::LdpcCode;
use crate::channel::{Seed, SimRng};
use crate::degree::DegreeDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructOptions {
    /// Run the 4-cycle removal pass after matching.
    pub remove_four_cycles: bool,
    pub cycle_sweeps: usize,
    /// Random partners tried per edge when rewiring.
    pub swap_attempts: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            remove_four_cycles: false,
            cycle_sweeps: 8,
            swap_attempts: 1000,
        }
    }
}

/// Samples a code with `n` variables from the ensemble `dd`.
pub fn sample_code(dd: &DegreeDistribution, n: usize, seed: Seed) -> Result<LdpcCode> {
    sample_code_with(dd, n, seed, &ConstructOptions::default())
}

pub fn sample_code_with(
    dd: &DegreeDistribution,
    n: usize,
    seed: Seed,
    opts: &ConstructOptions,
) -> Result<LdpcCode> {
    let m = (n as f64 * (1.0 - dd.design_rate())).round() as usize;
    let var_exact = exact_counts(&dd.var_node_fractions(), n);
    let check_exact = exact_counts(&dd.check_node_fractions(), m);
    let mut var_counts = apportion(&var_exact, n, "variable")?;
    let mut check_counts = apportion(&check_exact, m, "check")?;
    balance(&mut var_counts, &mut check_counts, &var_exact, &check_exact)?;

    let sockets = |counts: &BTreeMap<usize, usize>| {
        let mut s = Vec::new();
        let mut node = 0u32;
        for (&d, &k) in counts {
            for _ in 0..k {
                s.extend(std::iter::repeat_n(node, d));
                node += 1;
            }
        }
        s
    };
    let var_sockets = sockets(&var_counts);
    let mut check_sockets = sockets(&check_counts);
    let mut rng = seed.rng();
    // Variables of each degree are spread over the index range.
    let mut relabel: Vec<u32> = (0..n as u32).collect();
    relabel.shuffle(&mut rng);
    check_sockets.shuffle(&mut rng);

    let mut edges: Vec<(u32, u32)> = var_sockets
        .iter()
        .zip(&check_sockets)
        .map(|(&v, &c)| (relabel[v as usize], c))
        .collect();
    remove_parallel_edges(&mut edges, opts.swap_attempts, &mut rng)?;

    let mut checks = vec![Vec::new(); m];
    for &(v, c) in &edges {
        checks[c as usize].push(v);
    }
    let code = LdpcCode::from_checks(n, checks)?;
    if opts.remove_four_cycles {
        Ok(remove_four_cycles(code, opts, &mut rng))
    } else {
        Ok(code)
    }
}

/// Exact (fractional) node counts per degree.
fn exact_counts(fractions: &BTreeMap<usize, f64>, total: usize) -> BTreeMap<usize, f64> {
    fractions.iter().map(|(&d, &f)| (d, f * total as f64)).collect()
}

/// Integer node counts per degree summing to `total`, by largest remainder.
fn apportion(exact: &BTreeMap<usize, f64>, total: usize, side: &str) -> Result<BTreeMap<usize, usize>> {
    let mut counts: BTreeMap<usize, usize> =
        exact.iter().map(|(&d, &x)| (d, x.floor() as usize)).collect();
    let assigned: usize = counts.values().sum();
    let mut order: Vec<(usize, f64)> = exact.iter().map(|(&d, &x)| (d, x - x.floor())).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(d, _) in order.iter().take(total.saturating_sub(assigned)) {
        *counts.get_mut(&d).expect("known degree") += 1;
    }
    if let Some((d, _)) = counts.iter().find(|(_, &k)| k == 0) {
        return Err(Error::Infeasible(format!(
            "{total} {side} nodes leave no node of degree {d}"
        )));
    }
    Ok(counts)
}

/// Moves single nodes between degrees until both sides have the same number
/// of edges. Each move shrinks the edge gap; among those, the one keeping
/// every count closest to its exact value wins.
fn balance(
    vars: &mut BTreeMap<usize, usize>,
    checks: &mut BTreeMap<usize, usize>,
    var_exact: &BTreeMap<usize, f64>,
    check_exact: &BTreeMap<usize, f64>,
) -> Result<()> {
    let edges = |c: &BTreeMap<usize, usize>| c.iter().map(|(d, k)| d * k).sum::<usize>() as i64;
    let drift = |c: &BTreeMap<usize, usize>, exact: &BTreeMap<usize, f64>, a: usize, b: usize| {
        let off = |d: usize, k: usize| (k as f64 - exact[&d]).abs();
        off(a, c[&a] - 1).max(off(b, c[&b] + 1))
    };
    let mut gap = edges(vars) - edges(checks);
    while gap != 0 {
        // (score, new gap, is_check, from, to)
        let mut best: Option<(f64, i64, bool, usize, usize)> = None;
        for (is_check, side, exact) in [(true, &*checks, check_exact), (false, &*vars, var_exact)] {
            for &a in side.keys().filter(|&&a| side[&a] > 1) {
                for &b in side.keys().filter(|&&b| b != a) {
                    let step = b as i64 - a as i64;
                    let next = if is_check { gap - step } else { gap + step };
                    if next.abs() >= gap.abs() {
                        continue;
                    }
                    let score = drift(side, exact, a, b);
                    let key = (score, next.abs());
                    if best.is_none_or(|(s, g, ..)| key < (s, g.abs())) {
                        best = Some((score, next, is_check, a, b));
                    }
                }
            }
        }
        let Some((_, next, is_check, a, b)) = best else {
            return Err(Error::Infeasible(format!(
                "cannot balance edge counts (gap {gap})"
            )));
        };
        let side = if is_check { &mut *checks } else { &mut *vars };
        *side.get_mut(&a).expect("known degree") -= 1;
        *side.get_mut(&b).expect("known degree") += 1;
        gap = next;
    }
    Ok(())
}

fn key(v: u32, c: u32) -> u64 {
    (u64::from(v) << 32) | u64::from(c)
}

/// Swaps check endpoints of repeated `(v, c)` pairs with random other edges.
fn remove_parallel_edges(edges: &mut [(u32, u32)], attempts: usize, rng: &mut SimRng) -> Result<()> {
    let mut count: HashMap<u64, u32> = HashMap::with_capacity(edges.len());
    for &(v, c) in edges.iter() {
        *count.entry(key(v, c)).or_insert(0) += 1;
    }
    let repeated: Vec<usize> = (0..edges.len())
        .filter(|&i| count[&key(edges[i].0, edges[i].1)] > 1)
        .collect();
    for i in repeated {
        let (v, c) = edges[i];
        if count[&key(v, c)] <= 1 {
            continue;
        }
        let mut fixed = false;
        for _ in 0..attempts {
            let j = rng.random_range(0..edges.len());
            let (w, d) = edges[j];
            if d == c || count.contains_key(&key(v, d)) || count.contains_key(&key(w, c)) {
                continue;
            }
            for k in [key(v, c), key(w, d)] {
                let e = count.get_mut(&k).expect("present");
                *e -= 1;
                if *e == 0 {
                    count.remove(&k);
                }
            }
            count.insert(key(v, d), 1);
            count.insert(key(w, c), 1);
            edges[i] = (v, d);
            edges[j] = (w, c);
            fixed = true;
            break;
        }
        if !fixed {
            return Err(Error::Infeasible(format!(
                "could not remove a parallel edge at variable {v}"
            )));
        }
    }
    Ok(())
}

/// 4-cycles through edge `(v, c)`.
fn cycles_through(vars: &[Vec<u32>], checks: &[Vec<u32>], v: u32, c: u32) -> usize {
    let row = &checks[c as usize];
    vars[v as usize]
        .iter()
        .filter(|&&d| d != c)
        .map(|&d| {
            checks[d as usize]
                .iter()
                .filter(|&&w| w != v && row.contains(&w))
                .count()
        })
        .sum()
}

/// Rewires edges on 4-cycles, keeping a swap only when it lowers the number
/// of 4-cycles through the touched edges. Degrees are unchanged.
fn remove_four_cycles(code: LdpcCode, opts: &ConstructOptions, rng: &mut SimRng) -> LdpcCode {
    let n = code.n;
    let LdpcCode {
        mut checks,
        mut vars,
        ..
    } = code;
    let m = checks.len();
    for _ in 0..opts.cycle_sweeps {
        let mut improved = false;
        let mut any = false;
        for c in 0..m as u32 {
            let row = checks[c as usize].clone();
            for v in row {
                if cycles_through(&vars, &checks, v, c) == 0 {
                    continue;
                }
                any = true;
                for _ in 0..opts.swap_attempts.min(64) {
                    let d = rng.random_range(0..m as u32);
                    let drow = &checks[d as usize];
                    if d == c || drow.is_empty() {
                        continue;
                    }
                    let w = drow[rng.random_range(0..drow.len())];
                    if w == v || vars[v as usize].contains(&d) || vars[w as usize].contains(&c) {
                        continue;
                    }
                    let before = cycles_through(&vars, &checks, v, c)
                        + cycles_through(&vars, &checks, w, d);
                    rewire(&mut vars, &mut checks, (v, c), (w, d));
                    let after = cycles_through(&vars, &checks, v, d)
                        + cycles_through(&vars, &checks, w, c);
                    if after < before {
                        improved = true;
                        break;
                    }
                    rewire(&mut vars, &mut checks, (v, d), (w, c));
                }
            }
        }
        if !any || !improved {
            break;
        }
    }
    LdpcCode::from_checks(n, checks).expect("rewiring keeps the graph simple")
}

/// Replaces edges `(v, c)` and `(w, d)` with `(v, d)` and `(w, c)`.
fn rewire(vars: &mut [Vec<u32>], checks: &mut [Vec<u32>], (v, c): (u32, u32), (w, d): (u32, u32)) {
    let swap_in = |list: &mut Vec<u32>, old: u32, new: u32| {
        let slot = list.iter().position(|&x| x == old).expect("edge present");
        list[slot] = new;
    };
    swap_in(&mut vars[v as usize], c, d);
    swap_in(&mut vars[w as usize], d, c);
    swap_in(&mut checks[c as usize], v, w);
    swap_in(&mut checks[d as usize], w, v);
}
