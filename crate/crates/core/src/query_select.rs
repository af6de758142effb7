//! Uncertainty-minimal query selection.
//!
//! A query's uncertainty is the disagreement between its localization
//! confidence and its classification confidence, `|p_loc - c_cls|`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryScore {
    p_loc: f64,
    c_cls: f64,
}

impl QueryScore {
    pub fn new(p_loc: f64, c_cls: f64) -> Result<Self> {
        for (name, v) in [("localization", p_loc), ("classification", c_cls)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name} confidence {v} outside [0, 1]")));
            }
        }
        Ok(Self { p_loc, c_cls })
    }

    pub fn p_loc(&self) -> f64 {
        self.p_loc
    }

    pub fn c_cls(&self) -> f64 {
        self.c_cls
    }
}

#[inline]
pub fn uncertainty(q: &QueryScore) -> f64 {
    (q.p_loc - q.c_cls).abs()
}

/// Indices of the `k` least uncertain queries, ordered by
/// `(uncertainty, index)`.
pub fn select_queries(scores: &[QueryScore], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(Error::param(format!("cannot select {k} queries out of {}", scores.len())));
    }
    let mut ranked: Vec<(f64, usize)> = scores.iter().enumerate().map(|(i, q)| (uncertainty(q), i)).collect();
    // Uncertainties are finite, so total_cmp agrees with numeric order.
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < ranked.len() && k > 0 {
        ranked.select_nth_unstable_by(k - 1, by_key);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(by_key);
    ranked.truncate(k);
    Ok(ranked.into_iter().map(|(_, i)| i).collect())
}
