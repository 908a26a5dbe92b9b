use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Role;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    /// Users scoring strictly above this are called cheaters.
    pub threshold: f64,
    pub accuracy: f64,
}

/// Picks the cut on dubious scores that best matches `truth`.
///
/// Candidates are the midpoints between adjacent distinct scores plus one
/// value below the minimum and one above the maximum. Among equally
/// accurate candidates the smallest wins.
pub fn select_threshold<K: Ord>(
    scores: &BTreeMap<K, f64>,
    truth: &BTreeMap<K, Role>,
) -> Result<ThresholdChoice> {
    if scores.is_empty() {
        return Err(Error::config("no scores to threshold"));
    }
    if scores.len() != truth.len() || !scores.keys().eq(truth.keys()) {
        return Err(Error::KeyMismatch);
    }
    if scores.values().any(|s| !s.is_finite()) {
        return Err(Error::config("scores must be finite"));
    }

    // (score, cheaters, normals) per distinct score, ascending
    let mut pairs: Vec<(f64, Role)> = scores
        .iter()
        .zip(truth.values())
        .map(|((_, &s), &r)| (s, r))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut levels: Vec<(f64, usize, usize)> = Vec::new();
    for (s, r) in pairs {
        if levels.last().map_or(true, |l| l.0 != s) {
            levels.push((s, 0, 0));
        }
        let l = levels.last_mut().expect("just pushed");
        match r {
            Role::Cheater => l.1 += 1,
            Role::Normal => l.2 += 1,
        }
    }

    let n = scores.len() as f64;
    let lowest = levels[0].0;
    let highest = levels[levels.len() - 1].0;
    // below the minimum everyone is called a cheater
    let mut correct: usize = levels.iter().map(|l| l.1).sum();
    let mut best = ThresholdChoice {
        threshold: lowest - 1f64.max(lowest.abs()),
        accuracy: correct as f64 / n,
    };
    for (i, &(s, c, nn)) in levels.iter().enumerate() {
        correct = correct + nn - c;
        let threshold = match levels.get(i + 1) {
            Some(next) => s + (next.0 - s) / 2.0,
            None => highest + 1f64.max(highest.abs()),
        };
        let accuracy = correct as f64 / n;
        if accuracy > best.accuracy {
            best = ThresholdChoice { threshold, accuracy };
        }
    }
    Ok(best)
}

/// Shifts every score by `-threshold`, moving the cut to zero.
pub fn standardize<K: Ord + Clone>(scores: &BTreeMap<K, f64>, threshold: f64) -> BTreeMap<K, f64> {
    scores.iter().map(|(k, &s)| (k.clone(), s - threshold)).collect()
}
