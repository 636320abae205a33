use std::fmt::Write as _;

use crate::Scalar;

use super::RlError;

/// Row-stochastic action distribution over product-state indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy<T> {
    num_actions: usize,
    probs: Vec<T>,
    pub trainer: String,
    pub seed: u64,
    pub tau: T,
}

/// Absolute tolerance for row sums: 1e-9 in `f64`, scaled to the precision of `T`.
pub fn simplex_tolerance<T: Scalar>(num_actions: usize) -> T {
    let scaled = T::epsilon() * T::of(16.0 * num_actions.max(1) as f64);
    scaled.max(T::of(1e-9))
}

impl<T: Scalar> TabularPolicy<T> {
    /// Validates every row of the flat `probs` matrix.
    pub fn new(num_actions: usize, probs: Vec<T>, trainer: impl Into<String>, seed: u64, tau: T) -> Result<Self, RlError> {
        if num_actions == 0 || !probs.len().is_multiple_of(num_actions) {
            return Err(RlError::InvalidPolicy(format!(
                "{} entries do not form rows of {num_actions} actions",
                probs.len()
            )));
        }
        let tol = simplex_tolerance::<T>(num_actions);
        for (s, row) in probs.chunks(num_actions).enumerate() {
            if row.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) {
                return Err(RlError::InvalidPolicy(format!("row {s} has a negative or non-finite entry")));
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(RlError::InvalidPolicy(format!("row {s} sums to {sum}")));
            }
        }
        Ok(Self { num_actions, probs, trainer: trainer.into(), seed, tau })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let p = T::one() / T::of(num_actions as f64);
        Self {
            num_actions,
            probs: vec![p; num_states * num_actions],
            trainer: "uniform".into(),
            seed: 0,
            tau: T::infinity(),
        }
    }

    /// Softmax of `q / tau` per row; `q` is flat with `num_actions` columns.
    pub fn softmax(q: &[T], num_actions: usize, tau: T, trainer: impl Into<String>, seed: u64) -> Self {
        let mut probs = Vec::with_capacity(q.len());
        for row in q.chunks(num_actions) {
            softmax_into(row, tau, &mut probs);
        }
        Self { num_actions, probs, trainer: trainer.into(), seed, tau }
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Plain-text form: a header followed by one row per product state.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "tabular-policy 1").unwrap();
        writeln!(out, "states {}", self.num_states()).unwrap();
        writeln!(out, "actions {}", self.num_actions).unwrap();
        writeln!(out, "tau {}", self.tau).unwrap();
        writeln!(out, "trainer {}", self.trainer).unwrap();
        writeln!(out, "seed {}", self.seed).unwrap();
        for row in self.probs.chunks(self.num_actions) {
            let cells: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RlError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<(usize, String), RlError> {
            let (n, line) = lines.next().ok_or_else(|| RlError::Parse { line: 0, reason: format!("missing `{key}`") })?;
            let mut parts = line.trim().splitn(2, ' ');
            if parts.next() != Some(key) {
                return Err(RlError::Parse { line: n + 1, reason: format!("expected `{key}`") });
            }
            Ok((n + 1, parts.next().unwrap_or("").trim().to_string()))
        };
        let num = |(n, v): (usize, String)| -> Result<usize, RlError> {
            v.parse().map_err(|_| RlError::Parse { line: n, reason: format!("bad integer `{v}`") })
        };
        let (n, version) = header("tabular-policy")?;
        if version != "1" {
            return Err(RlError::Parse { line: n, reason: format!("unsupported version `{version}`") });
        }
        let states = num(header("states")?)?;
        let actions = num(header("actions")?)?;
        let (n, tau) = header("tau")?;
        let tau: T = tau.parse().map_err(|_| RlError::Parse { line: n, reason: format!("bad tau `{tau}`") })?;
        let (_, trainer) = header("trainer")?;
        let (n, seed) = header("seed")?;
        let seed: u64 = seed.parse().map_err(|_| RlError::Parse { line: n, reason: format!("bad seed `{seed}`") })?;
        let mut probs = Vec::with_capacity(states * actions);
        let mut rows = 0;
        for (n, line) in lines {
            let before = probs.len();
            for cell in line.split_whitespace() {
                let p: T = cell
                    .parse()
                    .map_err(|_| RlError::Parse { line: n + 1, reason: format!("bad probability `{cell}`") })?;
                probs.push(p);
            }
            if probs.len() - before != actions {
                return Err(RlError::Parse { line: n + 1, reason: format!("expected {actions} entries") });
            }
            rows += 1;
        }
        if rows != states {
            return Err(RlError::Parse { line: 0, reason: format!("header says {states} states, found {rows} rows") });
        }
        Self::new(actions, probs, trainer, seed, tau)
    }
}

pub(crate) fn softmax_into<T: Scalar>(row: &[T], tau: T, out: &mut Vec<T>) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let start = out.len();
    let mut total = T::zero();
    for &q in row {
        let e = ((q - max) / tau).exp();
        total = total + e;
        out.push(e);
    }
    for p in &mut out[start..] {
        *p = *p / total;
    }
}

/// `tau * log(sum(exp(q / tau)))`, shifted by the row maximum.
pub(crate) fn soft_max_value<T: Scalar>(row: &[T], tau: T) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let sum: T = row.iter().map(|&q| ((q - max) / tau).exp()).sum();
    max + tau * sum.ln()
}

/// Shannon entropy in nats with `0 log 0 = 0`.
pub fn row_entropy<T: Scalar>(row: &[T]) -> T {
    -row.iter()
        .filter(|p| **p > T::zero())
        .map(|&p| p * p.ln())
        .sum::<T>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rows() {
        assert!(TabularPolicy::<f64>::new(2, vec![0.5, 0.6], "t", 0, 1.0).is_err());
        assert!(TabularPolicy::<f64>::new(2, vec![1.5, -0.5], "t", 0, 1.0).is_err());
        assert!(TabularPolicy::<f64>::new(2, vec![1.0], "t", 0, 1.0).is_err());
        assert!(TabularPolicy::<f64>::new(2, vec![0.25, 0.75], "t", 0, 1.0).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let q = [1.0, 0.0, 0.3, -2.0, 0.1, 0.1, 7.0, 7.5, -1.0];
        let p = TabularPolicy::<f64>::softmax(&q, 3, 0.37, "soft-vi", 42);
        let back = TabularPolicy::<f64>::from_text(&p.to_text()).unwrap();
        assert_eq!(p, back);
        let p32 = TabularPolicy::<f32>::softmax(&[1.0, 2.0], 2, 0.5, "q-learning", 1);
        assert_eq!(TabularPolicy::<f32>::from_text(&p32.to_text()).unwrap(), p32);
    }

    #[test]
    fn text_errors() {
        assert!(TabularPolicy::<f64>::from_text("").is_err());
        let bad = "tabular-policy 1\nstates 2\nactions 2\ntau 1\ntrainer x\nseed 0\n0.5 0.5\n";
        assert!(TabularPolicy::<f64>::from_text(bad).is_err());
        let short = "tabular-policy 1\nstates 1\nactions 2\ntau 1\ntrainer x\nseed 0\n1\n";
        assert!(TabularPolicy::<f64>::from_text(short).is_err());
    }

    #[test]
    fn softmax_and_log_sum_exp() {
        let mut out = Vec::new();
        softmax_into(&[1.0f64, 0.0], 1.0, &mut out);
        let e = std::f64::consts::E;
        assert!((out[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((soft_max_value(&[1.0f64, 0.0], 1.0) - (e + 1.0).ln()).abs() < 1e-15);
        // Large values do not overflow.
        assert!(soft_max_value(&[1000.0f64, 999.0], 0.01).is_finite());
    }
}
