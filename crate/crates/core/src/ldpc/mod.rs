//! Sparse parity-check codes: construction from a degree distribution,
//! syndromes, belief-propagation decoding and the alist file format.

mod construct;
mod decode;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::bits::BitString;
use crate::error::{ensure_len, Error, Result};

pub use construct::{sample_code, sample_code_with, ConstructOptions};
pub use decode::{
    bp_decode, reconcile_oneway, reconcile_verified, BpConfig, DecodeResult, PolyHash,
    VerifiedReconciliation, HASH_BITS,
};

/// A parity-check matrix stored as adjacency lists in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    /// `checks[c]`: sorted variable indices of check `c`.
    checks: Vec<Vec<u32>>,
    /// `vars[v]`: sorted check indices of variable `v`.
    vars: Vec<Vec<u32>>,
}

impl LdpcCode {
    /// Builds a code from per-check variable lists. Lists are sorted; a
    /// repeated entry or an index `>= n` is an error.
    pub fn from_checks(n: usize, mut checks: Vec<Vec<u32>>) -> Result<Self> {
        let mut vars = vec![Vec::new(); n];
        for (c, row) in checks.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Config(format!("check {c} repeats a variable")));
            }
            for &v in row.iter() {
                let slot = vars.get_mut(v as usize).ok_or_else(|| {
                    Error::Config(format!("check {c} names variable {v} of {n}"))
                })?;
                slot.push(c as u32);
            }
        }
        Ok(LdpcCode { n, checks, vars })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.checks.len()
    }

    pub fn edges(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    pub fn check(&self, c: usize) -> &[u32] {
        &self.checks[c]
    }

    pub fn var(&self, v: usize) -> &[u32] {
        &self.vars[v]
    }

    pub fn checks(&self) -> &[Vec<u32>] {
        &self.checks
    }

    /// `1 - m / n`.
    pub fn rate(&self) -> f64 {
        1.0 - self.m() as f64 / self.n as f64
    }

    /// Realized edge-perspective `(lambda, rho)` keyed by node degree.
    pub fn edge_degree_spectrum(&self) -> (BTreeMap<usize, f64>, BTreeMap<usize, f64>) {
        let e = self.edges() as f64;
        let spectrum = |lists: &[Vec<u32>]| {
            let mut m = BTreeMap::new();
            for l in lists {
                *m.entry(l.len()).or_insert(0.0) += l.len() as f64 / e;
            }
            m
        };
        (spectrum(&self.vars), spectrum(&self.checks))
    }

    /// `H x`, one bit per check.
    pub fn syndrome(&self, x: &BitString) -> Result<BitString> {
        ensure_len(self.n, x.len())?;
        let mut s = BitString::zeros(self.m());
        for (c, row) in self.checks.iter().enumerate() {
            if row.iter().fold(false, |acc, &v| acc ^ x.get(v as usize)) {
                s.set(c, true);
            }
        }
        Ok(s)
    }

    /// Number of 4-cycles (pairs of checks sharing two variables).
    pub fn four_cycles(&self) -> usize {
        let mut count = 0;
        let mut seen = vec![0u32; self.m()];
        for (c, row) in self.checks.iter().enumerate() {
            for &v in row {
                for &d in &self.vars[v as usize] {
                    if (d as usize) > c {
                        seen[d as usize] += 1;
                    }
                }
            }
            for &v in row {
                for &d in &self.vars[v as usize] {
                    let k = seen[d as usize];
                    if k > 0 {
                        count += (k * (k - 1) / 2) as usize;
                        seen[d as usize] = 0;
                    }
                }
            }
        }
        count
    }

    /// Serializes in alist format with 1-based indices and zero padding.
    pub fn to_alist(&self) -> String {
        let col_max = self.vars.iter().map(Vec::len).max().unwrap_or(0);
        let row_max = self.checks.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.m());
        let _ = writeln!(out, "{col_max} {row_max}");
        let degrees = |lists: &[Vec<u32>]| {
            lists
                .iter()
                .map(|l| l.len().to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "{}", degrees(&self.vars));
        let _ = writeln!(out, "{}", degrees(&self.checks));
        for (lists, width) in [(&self.vars, col_max), (&self.checks, row_max)] {
            for l in lists {
                let cells: Vec<String> = l
                    .iter()
                    .map(|&i| (i + 1).to_string())
                    .chain(std::iter::repeat_n("0".to_string(), width - l.len()))
                    .collect();
                let _ = writeln!(out, "{}", cells.join(" "));
            }
        }
        out
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next_nums = |what: &str| -> Result<(usize, Vec<usize>)> {
            let (no, line) = lines.next().ok_or(Error::Parse {
                line: 0,
                message: format!("missing {what}"),
            })?;
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Parse {
                        line: no,
                        message: format!("bad number {t:?} in {what}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((no, nums))
        };
        let bad = |line: usize, message: String| Error::Parse { line, message };

        let (no, dims) = next_nums("dimensions")?;
        let [n, m] = dims[..] else {
            return Err(bad(no, "expected `n m`".into()));
        };
        let (no, maxes) = next_nums("maximum degrees")?;
        if maxes.len() != 2 {
            return Err(bad(no, "expected two maximum degrees".into()));
        }
        let (no, col_deg) = next_nums("column degrees")?;
        if col_deg.len() != n {
            return Err(bad(no, format!("expected {n} column degrees")));
        }
        let (no, row_deg) = next_nums("row degrees")?;
        if row_deg.len() != m {
            return Err(bad(no, format!("expected {m} row degrees")));
        }
        let mut cols = Vec::with_capacity(n);
        for &d in &col_deg {
            let (no, l) = next_nums("column list")?;
            cols.push(parse_list(no, &l, d, m)?);
        }
        let mut rows = Vec::with_capacity(m);
        for &d in &row_deg {
            let (no, l) = next_nums("row list")?;
            rows.push(parse_list(no, &l, d, n)?);
        }
        let code = LdpcCode::from_checks(n, rows)?;
        let mut cols_sorted = cols;
        cols_sorted.iter_mut().for_each(|c| c.sort_unstable());
        if cols_sorted != code.vars {
            return Err(bad(0, "column lists disagree with row lists".into()));
        }
        Ok(code)
    }

    pub fn save_alist(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_alist())?)
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_alist(&std::fs::read_to_string(path)?)
    }
}

fn parse_list(line: usize, cells: &[usize], degree: usize, bound: usize) -> Result<Vec<u32>> {
    let err = |message: String| Error::Parse { line, message };
    if cells.len() < degree || cells[degree..].iter().any(|&z| z != 0) {
        return Err(err(format!("expected {degree} entries then zero padding")));
    }
    cells[..degree]
        .iter()
        .map(|&i| {
            if i == 0 || i > bound {
                Err(err(format!("index {i} outside 1..={bound}")))
            } else {
                Ok((i - 1) as u32)
            }
        })
        .collect()
}
