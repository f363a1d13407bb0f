//! Registry of designed codes and its text format.
//!
//! ```text
//! rate 0.50
//! threshold 0.1071
//! lambda 2 0.14438
//! rho 10 0.47575
//! ```
//!
//! `#` starts a comment line. A `rate` line opens a new entry. Each side of
//! an entry must sum to one within `1e-3`; it is then rescaled to exactly one.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::DegreeDistribution;
use crate::error::{Error, Result};

const RENORMALIZE_TOLERANCE: f64 = 1e-3;

static BUNDLED: &str = include_str!("../../data/bsc_codes.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    /// Nominal rate as listed.
    pub rate: f64,
    /// Listed decoding threshold (crossover probability).
    pub threshold: f64,
    pub dd: DegreeDistribution,
}

/// Codes ordered by increasing threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CodeRegistry {
    entries: Vec<RegistryEntry>,
}

impl CodeRegistry {
    pub fn new(mut entries: Vec<RegistryEntry>) -> Self {
        entries.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
        CodeRegistry { entries }
    }

    /// The nine bundled BSC codes, rates 0.90 down to 0.50.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled registry is valid")
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_for_rate(&self, rate: f64) -> Option<&RegistryEntry> {
        self.entries.iter().find(|e| (e.rate - rate).abs() < 1e-9)
    }

    /// The entry with the smallest threshold strictly greater than `p`.
    pub fn select_code(&self, p: f64) -> Result<&RegistryEntry> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::Domain {
                name: "p",
                value: p,
                domain: "[0, 0.5)".into(),
            });
        }
        self.entries
            .iter()
            .find(|e| e.threshold > p)
            .ok_or(Error::NoCode { p })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut open: Option<PartialEntry> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["rate", r] => {
                    if let Some(done) = open.take() {
                        entries.push(done.finish()?);
                    }
                    open = Some(PartialEntry::new(line_no, parse_num(r, line_no)?));
                }
                ["threshold", t] => {
                    let e = open
                        .as_mut()
                        .ok_or_else(|| err("threshold before any rate line".into()))?;
                    if e.threshold.is_some() {
                        return Err(err("duplicate threshold".into()));
                    }
                    e.threshold = Some(parse_num(t, line_no)?);
                }
                [side @ ("lambda" | "rho"), d, c] => {
                    let e = open
                        .as_mut()
                        .ok_or_else(|| err(format!("{side} before any rate line")))?;
                    let degree: usize = d
                        .parse()
                        .map_err(|_| err(format!("bad degree {d:?}")))?;
                    let coeff = parse_num(c, line_no)?;
                    let map = if *side == "lambda" {
                        &mut e.lambda
                    } else {
                        &mut e.rho
                    };
                    if map.insert(degree, coeff).is_some() {
                        return Err(err(format!("duplicate {side} degree {degree}")));
                    }
                }
                _ => return Err(err(format!("unrecognized line {line:?}"))),
            }
        }
        if let Some(done) = open.take() {
            entries.push(done.finish()?);
        }
        Ok(Self::new(entries))
    }

    /// Serializes in the format accepted by [`CodeRegistry::parse`], in
    /// decreasing rate order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in self.entries.iter().rev() {
            write_entry(&mut out, e);
            out.push('\n');
        }
        out
    }
}

pub(crate) fn write_entry(out: &mut String, e: &RegistryEntry) {
    let _ = writeln!(out, "rate {}", e.rate);
    let _ = writeln!(out, "threshold {}", e.threshold);
    for (d, c) in e.dd.lambda() {
        let _ = writeln!(out, "lambda {d} {c}");
    }
    for (d, c) in e.dd.rho() {
        let _ = writeln!(out, "rho {d} {c}");
    }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad number {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite number {s:?}"),
        });
    }
    Ok(v)
}

struct PartialEntry {
    line: usize,
    rate: f64,
    threshold: Option<f64>,
    lambda: BTreeMap<usize, f64>,
    rho: BTreeMap<usize, f64>,
}

impl PartialEntry {
    fn new(line: usize, rate: f64) -> Self {
        PartialEntry {
            line,
            rate,
            threshold: None,
            lambda: BTreeMap::new(),
            rho: BTreeMap::new(),
        }
    }

    fn finish(self) -> Result<RegistryEntry> {
        let err = |message: String| Error::Parse {
            line: self.line,
            message,
        };
        let threshold = self
            .threshold
            .ok_or_else(|| err(format!("rate {} has no threshold", self.rate)))?;
        for (name, side) in [("lambda", &self.lambda), ("rho", &self.rho)] {
            let sum: f64 = side.values().sum();
            if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
                return Err(err(format!(
                    "rate {}: {name} coefficients sum to {sum:.6}",
                    self.rate
                )));
            }
        }
        let dd = DegreeDistribution::normalized(self.lambda, self.rho)
            .map_err(|e| err(format!("rate {}: {e}", self.rate)))?;
        Ok(RegistryEntry {
            rate: self.rate,
            threshold,
            dd,
        })
    }
}
