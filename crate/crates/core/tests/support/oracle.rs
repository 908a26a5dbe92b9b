//! Step-by-step replays of both score-evaluation procedures, kept free of
//! any library code so they can serve as oracles.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use cheatvote::consensus::{score_evaluation, Scoreboard, VoteRound, Weights};
use cheatvote::fps::fps_do_vote;
use cheatvote::{Ballot, UserId, Verdict};

const W_V: f64 = 0.05;
const W_H: f64 = 0.01;
const QUEUE_MAX: usize = 10;

/// Rounds of `(target, [(voter, says_cheater)])`.
#[derive(Clone, Debug)]
pub struct Instance {
    pub users: Vec<u32>,
    pub rounds: Vec<(u32, Vec<(u32, bool)>)>,
}

/// At most 4 voters per round and at most 5 rounds. A target may vote on
/// itself when `self_votes` is set.
pub fn random_instance<R: Rng>(rng: &mut R, self_votes: bool) -> Instance {
    let n = rng.random_range(2..=5u32);
    let users: Vec<u32> = (0..n).map(|i| i * 3 + 1).collect();
    let rounds = (0..rng.random_range(0..=5))
        .map(|_| {
            let target = users[rng.random_range(0..users.len())];
            let mut pool: Vec<u32> = users
                .iter()
                .copied()
                .filter(|&u| self_votes || u != target)
                .collect();
            pool.shuffle(rng);
            let k = rng.random_range(0..=pool.len().min(4));
            let ballots = pool[..k].iter().map(|&v| (v, rng.random_bool(0.5))).collect();
            (target, ballots)
        })
        .collect();
    Instance { users, rounds }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Replayed {
    pub v: f64,
    pub d: f64,
    pub q: VecDeque<bool>,
}

fn fresh(users: &[u32]) -> BTreeMap<u32, Replayed> {
    users
        .iter()
        .map(|&u| (u, Replayed { v: 1.0, d: 0.0, q: VecDeque::new() }))
        .collect()
}

fn validity_step(s: &mut Replayed, lied: bool) {
    let t_cnt = s.q.iter().filter(|&&x| x).count() as i64;
    let f_cnt = s.q.iter().filter(|&&x| !x).count() as i64;
    let hist_record = (t_cnt - f_cnt) as f64;
    if s.q.len() + 1 > QUEUE_MAX {
        s.q.pop_front();
    }
    if lied {
        s.v = s.v - W_V + hist_record * W_H;
        s.q.push_back(false);
    } else {
        s.v = s.v + W_V + hist_record * W_H;
        s.q.push_back(true);
    }
    if s.v > 1.0 {
        s.v = 1.0;
    }
    if s.v < 0.0 {
        s.v = 0.0;
    }
}

/// Base procedure: every ballot counts; dubious moves by the signed
/// post-update validity of each voter.
pub fn replay_base(inst: &Instance) -> BTreeMap<u32, Replayed> {
    let mut st = fresh(&inst.users);
    for (target, ballots) in &inst.rounds {
        let trues = ballots.iter().filter(|b| b.1).count();
        let falses = ballots.len() - trues;
        let gt = trues > falses;
        for &(voter, vote) in ballots {
            let s = st.get_mut(&voter).unwrap();
            validity_step(s, vote != gt);
            let v = s.v;
            let t = st.get_mut(target).unwrap();
            if vote {
                t.d = t.d + v;
            } else {
                t.d = t.d - v;
            }
        }
    }
    st
}

/// Battle procedure: self votes skipped, gated and count-weighted dubious.
pub fn replay_battle(inst: &Instance) -> BTreeMap<u32, Replayed> {
    let mut st = fresh(&inst.users);
    for (target, ballots) in &inst.rounds {
        let mut c_cnt = 0u32;
        let mut n_cnt = 0u32;
        for &(voter, vote) in ballots {
            if voter == *target {
                continue;
            }
            if vote {
                c_cnt += 1;
            } else {
                n_cnt += 1;
            }
        }
        let gt = c_cnt > n_cnt;
        for &(voter, vote) in ballots {
            if voter == *target {
                continue;
            }
            let s = st.get_mut(&voter).unwrap();
            validity_step(s, vote != gt);
            let v = s.v;
            if c_cnt > n_cnt && c_cnt + n_cnt > 2 {
                let t = st.get_mut(target).unwrap();
                let all = (c_cnt + n_cnt) as f64;
                if vote {
                    t.d = t.d + (c_cnt as f64 / all) * v;
                } else {
                    t.d = t.d - (n_cnt as f64 / all) * v;
                }
            }
        }
    }
    st
}

fn ballots(target: u32, raw: &[(u32, bool)]) -> Vec<Ballot> {
    raw.iter()
        .map(|&(v, c)| Ballot::new(v, target, Verdict::from_bool(c)))
        .collect()
}

pub fn run_base(inst: &Instance) -> Scoreboard {
    let mut board = Scoreboard::new(inst.users.iter().copied()).unwrap();
    for (target, raw) in &inst.rounds {
        let round = VoteRound::new(*target, ballots(*target, raw)).unwrap();
        score_evaluation(&mut board, &round, &Weights::DEFAULT).unwrap();
    }
    board
}

pub fn run_battle(inst: &Instance) -> Scoreboard {
    let mut board = Scoreboard::new(inst.users.iter().copied()).unwrap();
    for (target, raw) in &inst.rounds {
        fps_do_vote(&mut board, *target, ballots(*target, raw), &Weights::DEFAULT).unwrap();
    }
    board
}

/// Bitwise comparison of a board against a replay.
pub fn same(board: &Scoreboard, replay: &BTreeMap<u32, Replayed>) -> Result<(), String> {
    if board.len() != replay.len() {
        return Err(format!("{} users vs {}", board.len(), replay.len()));
    }
    for (&u, r) in replay {
        let rec = board.get(UserId(u)).ok_or(format!("user {u} missing"))?;
        let hist: Vec<bool> = rec.history.iter().collect();
        let q: Vec<bool> = r.q.iter().copied().collect();
        if rec.validity.to_bits() != r.v.to_bits()
            || rec.dubious.to_bits() != r.d.to_bits()
            || hist != q
        {
            return Err(format!(
                "user {u}: got V={} D={} Q={hist:?}, replay V={} D={} Q={q:?}",
                rec.validity, rec.dubious, r.v, r.d
            ));
        }
    }
    Ok(())
}
