//! The Cascade interactive reconciliation protocol.
//!
//! Alice holds `x`, Bob holds `y`. In pass `i` both sides apply a shared
//! random permutation, cut the permuted string into blocks of size
//! `k_i = k_1 * 2^(i-1)` and compare block parities. Every block with odd
//! parity mismatch is bisected to locate and flip one error. A flip changes
//! the parity of the block containing that position in every earlier pass;
//! blocks that turn odd are queued and processed smallest first until no odd
//! block remains.
//!
//! Only Alice's parity bits count as leakage. Bob computes his own parities
//! locally, and each request/response exchange counts as one round.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::bits::BitString;
use crate::channel::{Seed, SimRng};
use crate::error::{ensure_len, Error, Result};
use crate::transcript::Transcript;

pub const DEFAULT_PASSES: usize = 4;

/// `max(1, round(0.73 / e_est))`, rounding halves up.
pub fn initial_block_size(e_est: f64) -> Result<usize> {
    if !(e_est > 0.0 && e_est.is_finite()) {
        return Err(Error::Domain {
            name: "e_est",
            value: e_est,
            domain: "e_est > 0".into(),
        });
    }
    Ok((0.73 / e_est + 0.5).floor().max(1.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockSizeRule {
    /// `k_1 = max(1, round(0.73 / e_est))`.
    Standard,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    pub error_estimate: f64,
    pub passes: usize,
    pub block_rule: BlockSizeRule,
    pub seed: Seed,
}

impl CascadeConfig {
    pub fn new(error_estimate: f64, seed: Seed) -> Self {
        CascadeConfig {
            error_estimate,
            passes: DEFAULT_PASSES,
            block_rule: BlockSizeRule::Standard,
            seed,
        }
    }

    pub fn initial_block_size(&self) -> Result<usize> {
        match self.block_rule {
            BlockSizeRule::Standard => initial_block_size(self.error_estimate),
            BlockSizeRule::Fixed(0) => Err(Error::Config("block size must be at least 1".into())),
            BlockSizeRule::Fixed(k) => Ok(k),
        }
    }

    fn validate(&self) -> Result<usize> {
        if self.passes == 0 {
            return Err(Error::Config("pass count must be at least 1".into()));
        }
        self.initial_block_size()
    }
}

/// Permutation, block size and cached block parities of one pass.
#[derive(Debug, Clone)]
pub struct PassState {
    perm: Vec<usize>,
    inverse: Vec<usize>,
    block_size: usize,
    alice: Vec<bool>,
    bob: Vec<bool>,
}

impl PassState {
    fn new(n: usize, block_size: usize, rng: &mut SimRng) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut inverse = vec![0; n];
        for (slot, &pos) in perm.iter().enumerate() {
            inverse[pos] = slot;
        }
        let blocks = n.div_ceil(block_size);
        PassState {
            perm,
            inverse,
            block_size,
            alice: vec![false; blocks],
            bob: vec![false; blocks],
        }
    }

    /// `perm[slot]` is the string position placed at `slot`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    /// Nominal block size; the last block may be shorter.
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn blocks(&self) -> usize {
        self.alice.len()
    }

    /// Slots of block `b` in permuted order.
    pub fn block_range(&self, b: usize) -> Range<usize> {
        let start = b * self.block_size;
        start..(start + self.block_size).min(self.perm.len())
    }

    fn block_of(&self, pos: usize) -> usize {
        self.inverse[pos] / self.block_size
    }

    fn parity(&self, s: &BitString, slots: Range<usize>) -> bool {
        self.perm[slots].iter().fold(false, |acc, &i| acc ^ s.get(i))
    }
}

/// One line of the session log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogEntry {
    /// Top-level block parity: `PASS i | BLOCK j | PARITY a b`.
    Block {
        pass: usize,
        block: usize,
        alice: bool,
        bob: bool,
    },
    /// Bisection parity over permuted slots `start..end`:
    /// `PASS i | BLOCK j | RANGE s e | PARITY a b`.
    Half {
        pass: usize,
        block: usize,
        start: usize,
        end: usize,
        alice: bool,
        bob: bool,
    },
    /// Bob flips string position `position`: `PASS i | BLOCK j | FLIP pos`.
    Flip {
        pass: usize,
        block: usize,
        position: usize,
    },
}

impl LogEntry {
    /// Parity bits Alice disclosed in this entry.
    pub fn disclosed(&self) -> u64 {
        match self {
            LogEntry::Flip { .. } => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = |v: bool| u8::from(v);
        match *self {
            LogEntry::Block {
                pass,
                block,
                alice,
                bob,
            } => write!(f, "PASS {pass} | BLOCK {block} | PARITY {} {}", b(alice), b(bob)),
            LogEntry::Half {
                pass,
                block,
                start,
                end,
                alice,
                bob,
            } => write!(
                f,
                "PASS {pass} | BLOCK {block} | RANGE {start} {end} | PARITY {} {}",
                b(alice),
                b(bob)
            ),
            LogEntry::Flip {
                pass,
                block,
                position,
            } => write!(f, "PASS {pass} | BLOCK {block} | FLIP {position}"),
        }
    }
}

impl FromStr for LogEntry {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let fields: Vec<Vec<&str>> = s
            .split('|')
            .map(|f| f.split_whitespace().collect())
            .collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| format!("bad number {t:?}"));
        let bit = |t: &str| match t {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(format!("bad parity {t:?}")),
        };
        let refs: Vec<&[&str]> = fields.iter().map(Vec::as_slice).collect();
        match refs.as_slice() {
            [["PASS", i], ["BLOCK", j], ["PARITY", a, b]] => Ok(LogEntry::Block {
                pass: num(i)?,
                block: num(j)?,
                alice: bit(a)?,
                bob: bit(b)?,
            }),
            [["PASS", i], ["BLOCK", j], ["RANGE", s, e], ["PARITY", a, b]] => Ok(LogEntry::Half {
                pass: num(i)?,
                block: num(j)?,
                start: num(s)?,
                end: num(e)?,
                alice: bit(a)?,
                bob: bit(b)?,
            }),
            [["PASS", i], ["BLOCK", j], ["FLIP", p]] => Ok(LogEntry::Flip {
                pass: num(i)?,
                block: num(j)?,
                position: num(p)?,
            }),
            _ => Err(format!("unrecognized log line {s:?}")),
        }
    }
}

/// Parses a text log, one entry per nonblank line.
pub fn parse_log(text: &str) -> Result<Vec<LogEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse().map_err(|message| Error::Parse {
                line: i + 1,
                message,
            })
        })
        .collect()
}

pub fn format_log(entries: &[LogEntry]) -> String {
    entries.iter().map(|e| format!("{e}\n")).collect()
}

/// Leakage recomputed from a log.
pub fn replay_leak(entries: &[LogEntry]) -> u64 {
    entries.iter().map(LogEntry::disclosed).sum()
}

/// Result of a session with its message log.
#[derive(Debug, Clone)]
pub struct CascadeRun {
    pub corrected: BitString,
    pub transcript: Transcript,
    pub log: Vec<LogEntry>,
    pub passes: Vec<PassState>,
}

/// Runs the full protocol and returns Bob's corrected string.
pub fn run_cascade(x: &BitString, y: &BitString, cfg: &CascadeConfig) -> Result<(BitString, Transcript)> {
    let run = Session::run(x, y, cfg, false)?;
    Ok((run.corrected, run.transcript))
}

/// As [`run_cascade`], also recording every message.
pub fn run_cascade_logged(x: &BitString, y: &BitString, cfg: &CascadeConfig) -> Result<CascadeRun> {
    Session::run(x, y, cfg, true)
}

/// `leaked / (n h(p))`.
pub fn cascade_efficiency(transcript: &Transcript, n: usize, p: f64) -> Result<f64> {
    transcript.efficiency(n, p)
}

/// Bisects a block whose parities differ, flipping one differing bit of
/// `bob`. Returns its index. The caller accounts for the initiating block
/// parity; each half parity disclosed here is added to `transcript`.
pub fn binary_search_correct(
    alice: &BitString,
    bob: &mut BitString,
    transcript: &mut Transcript,
) -> Result<usize> {
    ensure_len(alice.len(), bob.len())?;
    if alice.is_empty() || alice.parity() == bob.parity() {
        return Err(Error::Config("blocks must have differing parity".into()));
    }
    let parity = |s: &BitString, r: Range<usize>| r.fold(false, |acc, i| acc ^ s.get(i));
    let pos = bisect(0..alice.len(), |r| {
        transcript.disclose(1);
        transcript.round();
        parity(alice, r.clone()) != parity(bob, r)
    });
    bob.flip(pos);
    transcript.correction();
    Ok(pos)
}

/// Narrows `range` (known to hold an odd number of differences) to one
/// index. `left_differs` reveals whether the left half does.
fn bisect(mut range: Range<usize>, mut left_differs: impl FnMut(Range<usize>) -> bool) -> usize {
    while range.len() > 1 {
        let mid = range.start + range.len().div_ceil(2);
        if left_differs(range.start..mid) {
            range.end = mid;
        } else {
            range.start = mid;
        }
    }
    range.start
}

struct Session<'a> {
    x: &'a BitString,
    y: BitString,
    passes: Vec<PassState>,
    transcript: Transcript,
    log: Option<Vec<LogEntry>>,
    /// Odd-mismatch blocks keyed `(length, pass, block)`, so the first entry
    /// is the smallest.
    odd: BTreeSet<(usize, usize, usize)>,
}

impl<'a> Session<'a> {
    fn run(x: &'a BitString, y: &BitString, cfg: &CascadeConfig, logged: bool) -> Result<CascadeRun> {
        ensure_len(x.len(), y.len())?;
        let k1 = cfg.validate()?;
        let mut s = Session {
            x,
            y: y.clone(),
            passes: Vec::with_capacity(cfg.passes),
            transcript: Transcript::new(),
            log: logged.then(Vec::new),
            odd: BTreeSet::new(),
        };
        let n = x.len();
        let mut rng = cfg.seed.rng();
        for i in 0..cfg.passes {
            let k = k1.saturating_mul(1 << i.min(63));
            s.transcript.begin_pass(k);
            if n == 0 {
                continue;
            }
            s.passes.push(PassState::new(n, k, &mut rng));
            s.open_pass(i);
            s.drain();
        }
        Ok(CascadeRun {
            corrected: s.y,
            transcript: s.transcript,
            log: s.log.unwrap_or_default(),
            passes: s.passes,
        })
    }

    fn push_log(&mut self, e: LogEntry) {
        if let Some(log) = &mut self.log {
            log.push(e);
        }
    }

    /// Alice sends every block parity of pass `i` in one message.
    fn open_pass(&mut self, i: usize) {
        let blocks = self.passes[i].blocks();
        self.transcript.disclose(blocks as u64);
        self.transcript.round();
        for b in 0..blocks {
            let st = &self.passes[i];
            let r = st.block_range(b);
            let (alice, bob) = (st.parity(self.x, r.clone()), st.parity(&self.y, r.clone()));
            self.passes[i].alice[b] = alice;
            self.passes[i].bob[b] = bob;
            self.push_log(LogEntry::Block {
                pass: i + 1,
                block: b,
                alice,
                bob,
            });
            if alice != bob {
                self.odd.insert((r.len(), i, b));
            }
        }
    }

    fn drain(&mut self) {
        while let Some((_, j, b)) = self.odd.pop_first() {
            debug_assert_ne!(self.passes[j].alice[b], self.passes[j].bob[b]);
            let pos = self.locate(j, b);
            self.flip(j, b, pos);
        }
    }

    fn locate(&mut self, j: usize, b: usize) -> usize {
        let range = self.passes[j].block_range(b);
        let mut entries = Vec::new();
        let x = self.x;
        let y = &self.y;
        let st = &self.passes[j];
        let transcript = &mut self.transcript;
        let slot = bisect(range, |r| {
            let (alice, bob) = (st.parity(x, r.clone()), st.parity(y, r.clone()));
            transcript.disclose(1);
            transcript.round();
            entries.push(LogEntry::Half {
                pass: j + 1,
                block: b,
                start: r.start,
                end: r.end,
                alice,
                bob,
            });
            alice != bob
        });
        for e in entries {
            self.push_log(e);
        }
        self.passes[j].perm[slot]
    }

    /// Flips `pos` in Bob's string and updates the parity of the block
    /// holding it in every pass opened so far.
    fn flip(&mut self, j: usize, b: usize, pos: usize) {
        self.y.flip(pos);
        self.transcript.correction();
        self.push_log(LogEntry::Flip {
            pass: j + 1,
            block: b,
            position: pos,
        });
        for (i, st) in self.passes.iter_mut().enumerate() {
            let blk = st.block_of(pos);
            st.bob[blk] = !st.bob[blk];
            let key = (st.block_range(blk).len(), i, blk);
            if st.alice[blk] != st.bob[blk] {
                self.odd.insert(key);
            } else {
                self.odd.remove(&key);
            }
        }
    }
}
