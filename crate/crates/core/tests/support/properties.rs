//! Randomized checks of the scoring invariants, each run through a
//! deterministic proptest runner.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::SeedableRng;

use cheatvote::battle::{
    kfold_split, segment_battles, select_threshold, standardize, EligibilityConfig, EventKind,
    EventRecord, MinParticipation,
};
use cheatvote::consensus::{classify_scores, ground_truth, ScoreRecord, Weights, HISTORY_CAPACITY};
use cheatvote::fps::fps_do_vote;
use cheatvote::service::{policy_adding, policy_counting, MatchRecord};
use cheatvote::{Ballot, Role, UserId, Verdict};

use super::oracle::{random_instance, replay_base, replay_battle, run_base, run_battle, same, Instance};

pub type Check = fn(u32) -> Result<(), String>;

fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn instance(self_votes: bool) -> impl Strategy<Value = Instance> {
    any::<u64>().prop_map(move |s| random_instance(&mut rand_chacha::ChaCha8Rng::seed_from_u64(s), self_votes))
}

pub fn validity_bounds(cases: u32) -> Result<(), String> {
    let s = (0.001f64..0.5, 0.01f64..=1.0, 0.0f64..=1.0, prop::collection::vec(any::<bool>(), 0..60));
    check(cases, s, |(w_v, ratio, start, votes)| {
        let w = Weights::new(w_v, w_v * ratio).unwrap();
        let mut rec = ScoreRecord { validity: start, ..ScoreRecord::fresh() };
        let always_agree = votes.iter().all(|&a| a);
        for agreed in votes {
            let before = rec.validity;
            let hist = f64::from(rec.history.balance());
            prop_assert!((-10.0..=10.0).contains(&hist));
            rec.record_vote(agreed, &w);
            prop_assert!((0.0..=1.0).contains(&rec.validity), "validity {}", rec.validity);
            let bound = w.w_v + 10.0 * w.w_h + 1e-12;
            prop_assert!((rec.validity - before).abs() <= bound);
            if always_agree {
                prop_assert!(rec.validity >= before);
            }
        }
        Ok(())
    })
}

pub fn history_cap(cases: u32) -> Result<(), String> {
    check(cases, prop::collection::vec(any::<bool>(), 0..40), |votes| {
        let mut rec = ScoreRecord::fresh();
        for (i, &agreed) in votes.iter().enumerate() {
            rec.record_vote(agreed, &Weights::DEFAULT);
            prop_assert_eq!(rec.history.len(), (i + 1).min(HISTORY_CAPACITY));
        }
        let tail = &votes[votes.len().saturating_sub(HISTORY_CAPACITY)..];
        prop_assert_eq!(rec.history.iter().collect::<Vec<_>>(), tail.to_vec());
        Ok(())
    })
}

pub fn tie_is_false(cases: u32) -> Result<(), String> {
    let s = (0usize..6, prop::collection::vec(any::<bool>(), 0..9), any::<u64>());
    check(cases, s, |(k, extra, seed)| {
        use rand::seq::SliceRandom;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut tied: Vec<bool> = std::iter::repeat_n(true, k).chain(std::iter::repeat_n(false, k)).collect();
        tied.shuffle(&mut rng);
        let mk = |v: &[bool]| -> Vec<Ballot> {
            v.iter()
                .enumerate()
                .map(|(i, &c)| Ballot::new(i as u32, 99, Verdict::from_bool(c)))
                .collect()
        };
        prop_assert_eq!(ground_truth(&mk(&tied)).unwrap(), Verdict::Normal);

        let mut ballots = mk(&extra);
        let gt = ground_truth(&ballots).unwrap();
        let trues = extra.iter().filter(|&&c| c).count();
        prop_assert_eq!(gt.is_cheater(), trues > extra.len() - trues);
        ballots.shuffle(&mut rng);
        prop_assert_eq!(ground_truth(&ballots).unwrap(), gt);
        Ok(())
    })
}

pub fn self_ballot_noop(cases: u32) -> Result<(), String> {
    check(cases, instance(true), |inst| {
        let stripped = Instance {
            users: inst.users.clone(),
            rounds: inst
                .rounds
                .iter()
                .map(|(t, b)| (*t, b.iter().copied().filter(|(v, _)| v != t).collect()))
                .collect(),
        };
        prop_assert_eq!(run_battle(&inst), run_battle(&stripped));
        Ok(())
    })
}

pub fn dubious_gate(cases: u32) -> Result<(), String> {
    let s = (instance(true), prop::collection::vec(any::<bool>(), 0..5), any::<prop::sample::Index>());
    check(cases, s, |(inst, votes, pick)| {
        let mut board = run_battle(&inst);
        let target = inst.users[pick.index(inst.users.len())];
        let voters: Vec<u32> = inst.users.iter().copied().filter(|&u| u != target).collect();
        let ballots: Vec<Ballot> = voters
            .iter()
            .zip(&votes)
            .map(|(&v, &c)| Ballot::new(v, target, Verdict::from_bool(c)))
            .collect();
        let before = board.get(UserId(target)).unwrap().dubious;
        let tally = fps_do_vote(&mut board, target, ballots, &Weights::DEFAULT).unwrap();
        let after = board.get(UserId(target)).unwrap().dubious;
        let (c, n) = (f64::from(tally.c_cnt), f64::from(tally.n_cnt));
        if tally.n_cnt >= tally.c_cnt || tally.c_cnt + tally.n_cnt <= 2 {
            prop_assert_eq!(after.to_bits(), before.to_bits());
        } else {
            prop_assert!(tally.gate_open());
            prop_assert!((after - before).abs() <= (c * c + n * n) / (c + n) + 1e-12);
        }
        Ok(())
    })
}

pub fn standardize_commutes(cases: u32) -> Result<(), String> {
    let s = (prop::collection::vec(-1e6f64..1e6, 1..40), -1e6f64..1e6);
    check(cases, s, |(xs, t)| {
        let scores: BTreeMap<UserId, f64> = xs.iter().enumerate().map(|(i, &x)| (UserId(i as u32), x)).collect();
        prop_assert_eq!(classify_scores(&scores, t), classify_scores(&standardize(&scores, t), 0.0));
        Ok(())
    })
}

fn accuracy_at(data: &[(f64, Role)], t: f64) -> f64 {
    let hits = data.iter().filter(|(s, r)| (*s > t) == (*r == Role::Cheater)).count();
    hits as f64 / data.len() as f64
}

pub fn threshold_brute_force(cases: u32) -> Result<(), String> {
    let s = prop::collection::vec((-8i32..8, any::<bool>()), 1..30);
    check(cases, s, |raw| {
        let data: Vec<(f64, Role)> = raw
            .iter()
            .map(|&(s, c)| (f64::from(s) / 2.0, if c { Role::Cheater } else { Role::Normal }))
            .collect();
        let scores: BTreeMap<usize, f64> = data.iter().enumerate().map(|(i, d)| (i, d.0)).collect();
        let truth: BTreeMap<usize, Role> = data.iter().enumerate().map(|(i, d)| (i, d.1)).collect();
        let got = select_threshold(&scores, &truth).unwrap();

        let mut uniq: Vec<f64> = data.iter().map(|d| d.0).collect();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        let mut candidates = vec![uniq[0] - 1.0];
        candidates.extend(uniq.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        candidates.push(uniq[uniq.len() - 1] + 1.0);
        let best = candidates.iter().map(|&t| accuracy_at(&data, t)).fold(0.0, f64::max);
        // every cut at a score value is covered by some candidate
        for &u in &uniq {
            prop_assert!(accuracy_at(&data, u) <= best);
        }
        prop_assert_eq!(got.accuracy, best);
        prop_assert_eq!(accuracy_at(&data, got.threshold), best);
        let first = candidates.iter().position(|&t| accuracy_at(&data, t) == best).unwrap();
        prop_assert_eq!(accuracy_at(&data, got.threshold), accuracy_at(&data, candidates[first]));
        if first > 0 {
            prop_assert!(got.threshold > candidates[first - 1]);
        }
        if first + 1 < candidates.len() {
            prop_assert!(got.threshold < candidates[first + 1]);
        }
        Ok(())
    })
}

pub fn base_oracle(cases: u32) -> Result<(), String> {
    check(cases, instance(true), |inst| {
        same(&run_base(&inst), &replay_base(&inst)).map_err(TestCaseError::fail)
    })
}

pub fn battle_oracle(cases: u32) -> Result<(), String> {
    check(cases, instance(true), |inst| {
        same(&run_battle(&inst), &replay_battle(&inst)).map_err(TestCaseError::fail)
    })
}

pub fn kfold_partition(cases: u32) -> Result<(), String> {
    let s = (2usize..60).prop_flat_map(|n| (Just(n), 2..=n, any::<u64>()));
    check(cases, s, |(n, k, seed)| {
        let ids: Vec<usize> = (0..n).collect();
        let folds = kfold_split(&ids, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, ids);
        Ok(())
    })
}

pub fn windows_disjoint(cases: u32) -> Result<(), String> {
    let s = (prop::collection::vec((0i64..100_000, 0u32..5, any::<bool>()), 0..60), 1i64..3000, 0i64..3000);
    check(cases, s, |(raw, pad, gap)| {
        let events: Vec<EventRecord> = raw
            .iter()
            .map(|&(t, u, fire)| EventRecord {
                timestamp_ms: t,
                user: UserId(u),
                position: [0.0; 3],
                aim: [0.0; 3],
                event: if fire { EventKind::Fire } else { EventKind::None },
            })
            .collect();
        let cfg = EligibilityConfig {
            min_participation: MinParticipation::Millis(0),
            merge_gap_ms: gap,
            window_pad_ms: pad,
        };
        let windows = segment_battles(&events, &cfg).unwrap();
        let fires = events.iter().filter(|e| e.event == EventKind::Fire).count();
        prop_assert_eq!(fires == 0, windows.is_empty());
        for w in &windows {
            prop_assert!(w.start < w.end);
            for p in &w.participants {
                prop_assert!(p.first_seen <= p.last_seen);
                prop_assert!(w.start <= p.first_seen && p.last_seen <= w.end);
            }
        }
        for pair in windows.windows(2) {
            prop_assert!(pair[1].start - pair[0].end > gap);
        }
        Ok(())
    })
}

pub fn policies_ignore_order(cases: u32) -> Result<(), String> {
    let s = (prop::collection::vec((0u32..6, 0.0f64..=1.0, -5.0f64..5.0), 0..40), any::<u64>());
    check(cases, s, |(raw, seed)| {
        use rand::seq::SliceRandom;
        let mut records: Vec<MatchRecord> = raw
            .iter()
            .map(|&(u, validity, dubious)| MatchRecord {
                user: UserId(u),
                role: Role::Normal,
                validity,
                dubious,
            })
            .collect();
        let adding = policy_adding(&records);
        let counting = policy_counting(&records, 0.5, 0.0);
        records.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(policy_adding(&records), adding);
        prop_assert_eq!(policy_counting(&records, 0.5, 0.0), counting);
        Ok(())
    })
}

/// The invariants the acceptance suite demands, by name.
pub const REQUIRED: [(&str, Check); 7] = [
    ("validity bounds", validity_bounds),
    ("history cap 10", history_cap),
    ("tie resolves to normal", tie_is_false),
    ("self-ballot no-op", self_ballot_noop),
    ("dubious gate closure", dubious_gate),
    ("standardize/classify commutation", standardize_commutes),
    ("threshold brute-force equivalence", threshold_brute_force),
];
