use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::FormulaError;

/// Encodings are packed into a `u64`; `3 * 20 + 2` bits is the ceiling.
pub const MAX_PREDICATES: usize = 20;

/// The `3N+2` truth-value vector describing one explanation.
///
/// Layout: `[neg_0..neg_N | temporal_0..temporal_N | clause_0..clause_N | form_f | form_g]`.
/// A temporal bit of 0 places the predicate in `φ_F`, 1 in `φ_G`. A form bit of
/// 0 means CNF and 1 means DNF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExplanationEncoding {
    n_pred: u8,
    bits: u64,
}

impl ExplanationEncoding {
    /// Builds an encoding from its packed bits (bit `i` is element `i`).
    pub fn from_bits(n_pred: usize, bits: u64) -> Result<Self, FormulaError> {
        if n_pred == 0 || n_pred > MAX_PREDICATES {
            return Err(FormulaError::InvalidEncoding(format!(
                "predicate count {n_pred} outside 1..={MAX_PREDICATES}"
            )));
        }
        let len = 3 * n_pred + 2;
        if bits >> len != 0 {
            return Err(FormulaError::InvalidEncoding(format!(
                "bits beyond length {len} are set"
            )));
        }
        let enc = Self { n_pred: n_pred as u8, bits };
        if !enc.is_valid() {
            return Err(FormulaError::InvalidEncoding(
                "each temporal formula needs at least one predicate".into(),
            ));
        }
        Ok(enc)
    }

    pub fn from_parts(
        negated: &[bool],
        temporal: &[bool],
        clause: &[bool],
        form_f: bool,
        form_g: bool,
    ) -> Result<Self, FormulaError> {
        let n = negated.len();
        if temporal.len() != n || clause.len() != n {
            return Err(FormulaError::InvalidEncoding(
                "negation, temporal and clause vectors differ in length".into(),
            ));
        }
        let mut bits = 0u64;
        let mut set = |i: usize, v: bool| {
            if v {
                bits |= 1 << i;
            }
        };
        for p in 0..n {
            set(p, negated[p]);
            set(n + p, temporal[p]);
            set(2 * n + p, clause[p]);
        }
        set(3 * n, form_f);
        set(3 * n + 1, form_g);
        Self::from_bits(n, bits)
    }

    /// Parses a string of `0`/`1` characters; `|`, `_` and spaces are ignored.
    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        let digits: Vec<bool> = text
            .chars()
            .filter(|c| !matches!(c, '|' | '_' | ' '))
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(FormulaError::InvalidEncoding(format!(
                    "unexpected character `{other}`"
                ))),
            })
            .collect::<Result<_, _>>()?;
        if digits.len() < 5 || !(digits.len() - 2).is_multiple_of(3) {
            return Err(FormulaError::InvalidEncoding(format!(
                "length {} is not 3N+2",
                digits.len()
            )));
        }
        let n = (digits.len() - 2) / 3;
        if n > MAX_PREDICATES {
            return Err(FormulaError::InvalidEncoding(format!(
                "predicate count {n} exceeds {MAX_PREDICATES}"
            )));
        }
        let bits = digits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b { acc | (1 << i) } else { acc });
        Self::from_bits(n, bits)
    }

    pub fn n_pred(&self) -> usize {
        self.n_pred as usize
    }

    /// `3N + 2`.
    pub fn len(&self) -> usize {
        3 * self.n_pred() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn negated(&self, p: usize) -> bool {
        self.bit(p)
    }

    /// True when predicate `p` belongs to `φ_G`.
    pub fn in_globally(&self, p: usize) -> bool {
        self.bit(self.n_pred() + p)
    }

    pub fn second_clause(&self, p: usize) -> bool {
        self.bit(2 * self.n_pred() + p)
    }

    /// True when `φ_F` is in DNF.
    pub fn form_f(&self) -> bool {
        self.bit(3 * self.n_pred())
    }

    pub fn form_g(&self) -> bool {
        self.bit(3 * self.n_pred() + 1)
    }

    fn is_valid(&self) -> bool {
        let n = self.n_pred();
        let temporal = (self.bits >> n) & ((1u64 << n) - 1);
        temporal != 0 && temporal != (1u64 << n) - 1
    }

    fn flipped(&self, i: usize) -> Self {
        Self {
            n_pred: self.n_pred,
            bits: self.bits ^ (1 << i),
        }
    }

    /// Flips element `i`, or `None` if the result is not a valid encoding.
    pub fn flip(&self, i: usize) -> Option<Self> {
        assert!(i < self.len(), "bit {i} out of range for length {}", self.len());
        let e = self.flipped(i);
        e.is_valid().then_some(e)
    }

    /// Flips both form bits. Always valid.
    pub fn flip_forms(&self) -> Self {
        let n = self.n_pred();
        Self {
            n_pred: self.n_pred,
            bits: self.bits ^ (0b11 << (3 * n)),
        }
    }

    /// Every valid encoding over `n_pred` predicates, in increasing bit order.
    pub fn all_valid(n_pred: usize) -> impl Iterator<Item = Self> {
        assert!(
            (1..=MAX_PREDICATES).contains(&n_pred),
            "predicate count {n_pred} outside 1..={MAX_PREDICATES}"
        );
        let len = 3 * n_pred + 2;
        (0..1u64 << len)
            .map(move |bits| Self { n_pred: n_pred as u8, bits })
            .filter(Self::is_valid)
    }
}

impl fmt::Display for ExplanationEncoding {
    /// `neg|temporal|clause|forms`, e.g. `000|011|000|00`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n_pred();
        for i in 0..self.len() {
            if i > 0 && (i == n || i == 2 * n || i == 3 * n) {
                f.write_str("|")?;
            }
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// All valid single-bit flips of `enc`, ordered by flipped position.
pub fn neighborhood(enc: &ExplanationEncoding) -> Vec<ExplanationEncoding> {
    (0..enc.len()).filter_map(|i| enc.flip(i)).collect()
}

/// Flips both form bits of every member of `nbh`, dropping results already in
/// `nbh` or equal to `parent`. Order follows `nbh`.
pub fn expansion(
    parent: &ExplanationEncoding,
    nbh: &[ExplanationEncoding],
) -> Vec<ExplanationEncoding> {
    let mut seen: BTreeSet<ExplanationEncoding> = nbh.iter().copied().collect();
    seen.insert(*parent);
    let mut out = Vec::new();
    for e in nbh {
        let x = e.flip_forms();
        if seen.insert(x) {
            out.push(x);
        }
    }
    out
}
