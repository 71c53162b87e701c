//! Loss sequences chosen by an oblivious adversary, and their CSV form.

use std::path::Path;

use crate::{Error, Result};

/// `T` rounds of losses over `N` arms (or `K` actions), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSequence {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl LossSequence {
    /// Builds a sequence, checking that every row has the same width and
    /// every entry is in `[0, 1]`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::InvalidParameter("loss sequence needs at least one arm".into()));
        }
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (i, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::LossOutOfRange { round: t + 1, arm: i + 1, value: v });
                }
            }
        }
        Ok(Self { n, rows })
    }

    pub fn arms(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rows[t]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// The first `t` rounds.
    pub fn prefix(&self, t: usize) -> Self {
        Self { n: self.n, rows: self.rows[..t.min(self.rows.len())].to_vec() }
    }

    /// Column sums.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n];
        for row in &self.rows {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        acc
    }

    /// Comma-separated, one round per line, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses CSV text. Blank lines, `#` comments and a non-numeric header
    /// line are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(parse_numeric_csv(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn parse_numeric_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if rows.is_empty() => continue,
            Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
        }
    }
    Ok(rows)
}

/// Minimizing arm (lowest index on ties) and its cumulative loss.
pub fn best_arm_loss(losses: &LossSequence) -> (usize, f64) {
    argmin(&losses.cumulative())
}

/// Index and value of the smallest entry, lowest index on ties.
pub fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < best.1 {
            best = (i, x);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_arm_examples() {
        let l = LossSequence::new(vec![vec![0.2, 0.7]]).unwrap();
        assert_eq!(best_arm_loss(&l), (0, 0.2));
        let l = LossSequence::new(vec![vec![0.5; 3]; 4]).unwrap();
        assert_eq!(best_arm_loss(&l).0, 0);
    }

    #[test]
    fn best_arm_brute_force() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|t| (0..3).map(|i| ((t * 7 + i * 5) % 11) as f64 / 10.0).collect())
            .collect();
        let l = LossSequence::new(rows.clone()).unwrap();
        let sums: Vec<f64> = (0..3).map(|i| rows.iter().map(|r| r[i]).sum()).collect();
        let (arm, v) = best_arm_loss(&l);
        assert!(sums.iter().all(|&s| s >= v));
        assert_eq!(sums[arm], v);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            LossSequence::new(vec![vec![0.0, 1.5]]),
            Err(Error::LossOutOfRange { round: 1, arm: 2, .. })
        ));
        assert!(LossSequence::new(vec![vec![0.0, 1.0], vec![0.5]]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let l = LossSequence::new(vec![vec![0.1, 0.25], vec![1.0, 0.0]]).unwrap();
        let text = format!("a,b\n{}", l.to_csv());
        assert_eq!(LossSequence::from_csv(&text).unwrap(), l);
    }
}
