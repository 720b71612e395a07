use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BhOutcome {
    /// Largest p-value that was rejected, or 0 when nothing was.
    pub threshold: f64,
    pub flags: Vec<bool>,
}

impl BhOutcome {
    pub fn discoveries(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

/// Benjamini-Hochberg step-up procedure at level `q`.
///
/// Sorts the p-values, finds the largest rank `k` with `p_(k) ≤ k·q/m`, and
/// flags every test with `p ≤ p_(k)`. A non-positive `q` or an empty list
/// rejects nothing.
pub fn bh_adjust(p_values: &[f64], q: f64) -> BhOutcome {
    let m = p_values.len();
    let mut sorted: Vec<f64> = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = if q <= 0.0 {
        None
    } else {
        sorted.iter().enumerate().rev().find(|(i, p)| **p <= (i + 1) as f64 * q / m as f64).map(|(_, p)| *p)
    };
    let flags = p_values.iter().map(|p| cut.is_some_and(|c| *p <= c)).collect();
    let threshold = cut.unwrap_or(0.0);
    BhOutcome { threshold, flags }
}
