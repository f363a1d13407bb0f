//! Accounting of what a reconciliation session disclosed.

use crate::entropy::h;
use crate::error::{Error, Result};

/// Disclosure counts for one pass (Cascade) or one message (one-way codes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassRecord {
    pub pass: usize,
    pub block_size: usize,
    /// Bits disclosed by Alice during this pass, including bisection
    /// parities of earlier-pass blocks revisited here.
    pub leaked: u64,
    pub rounds: u64,
    pub corrections: u64,
}

/// Running totals of a session. Counts only ever grow.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    leaked: u64,
    rounds: u64,
    passes: Vec<PassRecord>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total bits disclosed by Alice.
    pub fn leaked(&self) -> u64 {
        self.leaked
    }

    /// Number of messages exchanged.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn passes(&self) -> &[PassRecord] {
        &self.passes
    }

    pub fn corrections(&self) -> u64 {
        self.passes.iter().map(|p| p.corrections).sum()
    }

    pub(crate) fn begin_pass(&mut self, block_size: usize) {
        self.passes.push(PassRecord {
            pass: self.passes.len() + 1,
            block_size,
            leaked: 0,
            rounds: 0,
            corrections: 0,
        });
    }

    fn current(&mut self) -> &mut PassRecord {
        if self.passes.is_empty() {
            self.begin_pass(0);
        }
        self.passes.last_mut().expect("nonempty")
    }

    pub(crate) fn disclose(&mut self, bits: u64) {
        self.leaked += bits;
        self.current().leaked += bits;
    }

    pub(crate) fn round(&mut self) {
        self.rounds += 1;
        self.current().rounds += 1;
    }

    pub(crate) fn correction(&mut self) {
        self.current().corrections += 1;
    }

    /// `leaked / (n h(p))`.
    pub fn efficiency(&self, n: usize, p: f64) -> Result<f64> {
        efficiency(self.leaked as f64, n, p)
    }
}

pub(crate) fn efficiency(leaked: f64, n: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::Domain {
            name: "p",
            value: p,
            domain: "(0, 0.5)".into(),
        });
    }
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            domain: "n > 0".into(),
        });
    }
    Ok(leaked / (n as f64 * h(p)))
}
