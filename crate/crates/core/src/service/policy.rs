use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{Role, UserId};

/// One user's scores at the end of one match.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub user: UserId,
    pub role: Role,
    pub validity: f64,
    pub dubious: f64,
}

pub const LOW_VALIDITY: f64 = 0.5;
pub const HIGH_DUBIOUS: f64 = 0.0;

fn ordered_sum(mut xs: Vec<f64>) -> f64 {
    // summing in sorted order makes the result independent of match order
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

/// Per-user sums of validity and dubious over all given matches.
pub fn policy_adding(records: &[MatchRecord]) -> BTreeMap<UserId, (f64, f64)> {
    let mut per_user: BTreeMap<UserId, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let e = per_user.entry(r.user).or_default();
        e.0.push(r.validity);
        e.1.push(r.dubious);
    }
    per_user
        .into_iter()
        .map(|(u, (v, d))| (u, (ordered_sum(v), ordered_sum(d))))
        .collect()
}

/// Per-user counts of matches with validity below `v_thresh` and with
/// dubious above `d_thresh`.
pub fn policy_counting(
    records: &[MatchRecord],
    v_thresh: f64,
    d_thresh: f64,
) -> BTreeMap<UserId, (u32, u32)> {
    let mut out: BTreeMap<UserId, (u32, u32)> = BTreeMap::new();
    for r in records {
        let e = out.entry(r.user).or_default();
        e.0 += u32::from(r.validity < v_thresh);
        e.1 += u32::from(r.dubious > d_thresh);
    }
    out
}
