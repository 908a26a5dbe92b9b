use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::UserId;

use super::events::{EventKind, EventRecord};

/// How long a user must be present in a window to vote.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinParticipation {
    Millis(i64),
    /// Fraction of the window's span, in `[0, 1]`.
    FractionOfWindow(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EligibilityConfig {
    pub min_participation: MinParticipation,
    pub merge_gap_ms: i64,
    /// Half-width of the interval seeded by each fire event; at least 1.
    pub window_pad_ms: i64,
}

impl Default for EligibilityConfig {
    fn default() -> Self {
        EligibilityConfig {
            min_participation: MinParticipation::FractionOfWindow(0.5),
            merge_gap_ms: 1000,
            window_pad_ms: 2000,
        }
    }
}

impl EligibilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_pad_ms < 1 {
            return Err(Error::config("window_pad_ms must be at least 1"));
        }
        if self.merge_gap_ms < 0 {
            return Err(Error::config("merge_gap_ms must be non-negative"));
        }
        match self.min_participation {
            MinParticipation::Millis(ms) if ms < 0 => {
                Err(Error::config("min_participation must be non-negative"))
            }
            MinParticipation::FractionOfWindow(f) if !(0.0..=1.0).contains(&f) => Err(
                Error::config(format!("min_participation fraction {f} outside [0, 1]")),
            ),
            _ => Ok(()),
        }
    }

    /// Presence required in a window of the given span, in milliseconds.
    pub fn required_presence(&self, span_ms: i64) -> f64 {
        match self.min_participation {
            MinParticipation::Millis(ms) => ms as f64,
            MinParticipation::FractionOfWindow(f) => f * span_ms as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub user: UserId,
    pub first_seen: i64,
    /// Latest sample in the window, or the user's first death in it.
    pub last_seen: i64,
}

impl Participant {
    pub fn presence_ms(&self) -> i64 {
        self.last_seen - self.first_seen
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BattleWindow {
    pub start: i64,
    pub end: i64,
    /// Sorted by user.
    pub participants: Vec<Participant>,
}

impl BattleWindow {
    pub fn span_ms(&self) -> i64 {
        self.end - self.start
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.participants.iter().map(|p| p.user)
    }
}

/// Slices a match into battle windows around fire events.
///
/// Each fire at `t` seeds `[t - pad, t + pad]`; intervals that overlap or
/// are separated by at most `merge_gap_ms` are merged. The returned windows
/// are sorted and pairwise disjoint.
pub fn segment_battles(events: &[EventRecord], cfg: &EligibilityConfig) -> Result<Vec<BattleWindow>> {
    cfg.validate()?;
    let mut fires: Vec<i64> = events
        .iter()
        .filter(|e| e.event == EventKind::Fire)
        .map(|e| e.timestamp_ms)
        .collect();
    fires.sort_unstable();

    let mut spans: Vec<(i64, i64)> = Vec::new();
    for t in fires {
        let (lo, hi) = (t - cfg.window_pad_ms, t + cfg.window_pad_ms);
        match spans.last_mut() {
            Some(last) if lo - last.1 <= cfg.merge_gap_ms => last.1 = last.1.max(hi),
            _ => spans.push((lo, hi)),
        }
    }

    let mut sorted: Vec<&EventRecord> = events.iter().collect();
    sorted.sort_by_key(|e| e.timestamp_ms);

    Ok(spans
        .into_iter()
        .map(|(start, end)| {
            let lo = sorted.partition_point(|e| e.timestamp_ms < start);
            let hi = sorted.partition_point(|e| e.timestamp_ms <= end);
            let mut seen: BTreeMap<UserId, (i64, i64, bool)> = BTreeMap::new();
            for e in &sorted[lo..hi] {
                let entry = seen
                    .entry(e.user)
                    .or_insert((e.timestamp_ms, e.timestamp_ms, false));
                if !entry.2 {
                    entry.1 = e.timestamp_ms;
                    entry.2 = e.event == EventKind::Dead;
                }
            }
            BattleWindow {
                start,
                end,
                participants: seen
                    .into_iter()
                    .map(|(user, (first_seen, last_seen, _))| Participant {
                        user,
                        first_seen,
                        last_seen,
                    })
                    .collect(),
            }
        })
        .collect())
}

/// Participants present for at least the configured duration.
pub fn eligible_voters(window: &BattleWindow, cfg: &EligibilityConfig) -> Vec<UserId> {
    let need = cfg.required_presence(window.span_ms());
    window
        .participants
        .iter()
        .filter(|p| p.presence_ms() as f64 >= need)
        .map(|p| p.user)
        .collect()
}
