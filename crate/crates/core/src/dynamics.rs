//! Deviation enumeration and the improvement-dynamics game loop.
//!
//! A `k`-deviation is a coalition of at most `k` nodes that jointly move to
//! one common group (possibly a fresh empty one) so that every member
//! strictly increases its utility. The loop starts from all singletons and
//! fires one deviation per step until none exists, a canonical partition
//! repeats, or a step cap is hit.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashSet, VecDeque};
use std::hash::{Hash, Hasher};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::game::{ExtendedUtility, Game, Partition, PartitionVector, ResolvedView};
use crate::{Error, Result};

/// Where a coalition moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    /// Index into the canonical group list of the pre-move partition.
    Group(usize),
    /// A fresh empty group.
    New,
}

/// A validated coalition move: applying it strictly increases every
/// member's utility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    pub coalition: Vec<usize>,
    pub target: Target,
}

/// A pair in different groups whose merge strictly benefits both; the other
/// members of the two groups are not consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GossipDeviation {
    pub u: usize,
    pub v: usize,
}

/// One move of the dynamics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Move {
    Deviation(Deviation),
    Gossip(GossipDeviation),
}

/// Deviation-selection policy. `FirstLex` and the seeded `Random` are
/// reproducible; ties under the other policies break in `FirstLex` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    /// Lexicographically least coalition (prefix order), then least target.
    FirstLex,
    Random(u64),
    /// Smallest coalition, ties in FirstLex order.
    MinCoalition,
    /// Largest total utility gain, ties in FirstLex order.
    MaxUtilityGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Stable,
    CycleDetected,
    StepCapReached,
}

/// One executed step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub partition_before_hash: u64,
    pub mv: Move,
    /// (node, utility before, utility after) for each coalition member.
    pub member_utils: Vec<(usize, ExtendedUtility, ExtendedUtility)>,
    pub lambda_before: PartitionVector,
    pub lambda_after: PartitionVector,
    pub f_before: ExtendedUtility,
    pub f_after: ExtendedUtility,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
    pub status: Terminal,
    pub final_partition: Partition,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One JSON line per step plus a final status line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let (coalition, target) = match &s.mv {
                Move::Deviation(d) => (
                    d.coalition.clone(),
                    match d.target {
                        Target::Group(g) => json!(g),
                        Target::New => json!("new"),
                    },
                ),
                Move::Gossip(g) => (vec![g.u, g.v], json!("merge")),
            };
            let line = json!({
                "step": s.step,
                "coalition": coalition,
                "target": target,
                "f_before": s.f_before.to_string(),
                "f_after": s.f_after.to_string(),
                "lambda_after": s.lambda_after.counts(),
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let status = match self.status {
            Terminal::Stable => "stable",
            Terminal::CycleDetected => "cycle",
            Terminal::StepCapReached => "cap",
        };
        out.push_str(&json!({"status": status, "steps": self.steps.len()}).to_string());
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone)]
pub struct DynamicsOpts {
    pub max_steps: usize,
    pub gossip: bool,
    /// Check the global-utility variation lower bound on every applied
    /// coalition move.
    pub assert_potential: bool,
    pub initial: Option<Partition>,
    /// Canonical partitions remembered for cycle detection; beyond the cap a
    /// ring of the most recent states is kept instead (documented in the CLI
    /// help: cycles longer than the ring may then be reported as `cap`).
    pub cycle_memory_cap: usize,
}

impl Default for DynamicsOpts {
    fn default() -> Self {
        DynamicsOpts {
            max_steps: 100_000,
            gossip: false,
            assert_potential: false,
            initial: None,
            cycle_memory_cap: 1_000_000,
        }
    }
}

fn hash_partition(p: &Partition) -> u64 {
    let mut h = DefaultHasher::new();
    p.encode().hash(&mut h);
    h.finish()
}

/// Visits coalitions of size `<= k` in lexicographic prefix order
/// ([0], [0,1], [0,1,2], ..., [1], ...). Returns early when `f` yields true.
fn for_each_coalition(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
        let start = cur.last().map_or(0, |&l| l + 1);
        for next in start..n {
            cur.push(next);
            if f(cur) || (cur.len() < k && rec(n, k, cur, f)) {
                cur.pop();
                return true;
            }
            cur.pop();
        }
        false
    }
    let mut cur = Vec::with_capacity(k);
    rec(n, k, &mut cur, &mut f)
}

/// Evaluates a candidate move; `Some(gains)` iff every member strictly
/// improves. Members already in the target group count as staying and must
/// still strictly gain from the arrivals.
fn evaluate(
    view: &ResolvedView,
    p: &Partition,
    membership: &[usize],
    coalition: &[usize],
    target: Target,
) -> Option<Vec<(usize, ExtendedUtility, ExtendedUtility)>> {
    let groups = p.groups();
    // Post-move group: target members plus coalition, deduped.
    let mut post: Vec<usize> = match target {
        Target::Group(t) => {
            // Reject no-op moves where nobody changes groups.
            if coalition.iter().all(|&u| membership[u] == t) {
                return None;
            }
            let mut g = groups[t].clone();
            g.extend(coalition.iter().copied().filter(|&u| membership[u] != t));
            g
        }
        Target::New => coalition.to_vec(),
    };
    post.sort_unstable();
    let mut gains = Vec::with_capacity(coalition.len());
    for &u in coalition {
        let before = view.utility_in(u, &groups[membership[u]]);
        let after = view.utility_in(u, &post);
        if after <= before {
            return None;
        }
        gains.push((u, before, after));
    }
    Some(gains)
}

/// Complete list of valid deviations of size at most `k`, in `FirstLex`
/// order: coalition lexicographic prefix order, then existing targets by
/// canonical index, then the fresh group.
pub fn enumerate_deviations(game: &Game, p: &Partition, k: usize) -> Result<Vec<Deviation>> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    let view = game.view();
    Ok(enumerate_deviations_view(&view, p, k))
}

pub fn enumerate_deviations_view(view: &ResolvedView, p: &Partition, k: usize) -> Vec<Deviation> {
    let mut out = Vec::new();
    let membership = p.membership(view.n());
    for_each_coalition(view.n(), k, |coalition| {
        for target in targets(p) {
            if evaluate(view, p, &membership, coalition, target).is_some() {
                out.push(Deviation {
                    coalition: coalition.to_vec(),
                    target,
                });
            }
        }
        false
    });
    out
}

fn targets(p: &Partition) -> impl Iterator<Item = Target> + '_ {
    (0..p.groups().len())
        .map(Target::Group)
        .chain(std::iter::once(Target::New))
}

/// First valid deviation in FirstLex order, if any.
pub fn first_deviation_view(view: &ResolvedView, p: &Partition, k: usize) -> Option<Deviation> {
    let membership = p.membership(view.n());
    let mut found = None;
    for_each_coalition(view.n(), k, |coalition| {
        for target in targets(p) {
            if evaluate(view, p, &membership, coalition, target).is_some() {
                found = Some(Deviation {
                    coalition: coalition.to_vec(),
                    target,
                });
                return true;
            }
        }
        false
    });
    found
}

/// All pairs in distinct groups whose group merge strictly improves both
/// endpoints, ordered by (u, v).
pub fn enumerate_gossip(game: &Game, p: &Partition) -> Vec<GossipDeviation> {
    enumerate_gossip_view(&game.view(), p)
}

pub fn enumerate_gossip_view(view: &ResolvedView, p: &Partition) -> Vec<GossipDeviation> {
    let membership = p.membership(view.n());
    let groups = p.groups();
    let mut out = Vec::new();
    for u in 0..view.n() {
        for v in u + 1..view.n() {
            let (gu, gv) = (membership[u], membership[v]);
            if gu == gv {
                continue;
            }
            let mut merged: Vec<usize> = groups[gu].iter().chain(&groups[gv]).copied().collect();
            merged.sort_unstable();
            let ok = [u, v].into_iter().all(|x| {
                view.utility_in(x, &merged) > view.utility_in(x, &groups[membership[x]])
            });
            if ok {
                out.push(GossipDeviation { u, v });
            }
        }
    }
    out
}

/// Applies a deviation, asserting every member strictly improves, and
/// returns the canonical successor partition.
pub fn apply_deviation(game: &Game, p: &Partition, d: &Deviation) -> Result<Partition> {
    apply_deviation_view(&game.view(), p, d)
}

pub fn apply_deviation_view(view: &ResolvedView, p: &Partition, d: &Deviation) -> Result<Partition> {
    let membership = p.membership(view.n());
    if evaluate(view, p, &membership, &d.coalition, d.target).is_none() {
        return Err(Error::InvalidPartition(format!(
            "deviation {:?} is not strictly improving for {p}",
            d
        )));
    }
    Ok(apply_unchecked(p, &membership, &d.coalition, d.target))
}

fn apply_unchecked(
    p: &Partition,
    membership: &[usize],
    coalition: &[usize],
    target: Target,
) -> Partition {
    let mut groups: Vec<Vec<usize>> = p.groups().to_vec();
    let in_coalition: HashSet<usize> = coalition.iter().copied().collect();
    for g in &mut groups {
        g.retain(|u| !in_coalition.contains(u));
    }
    match target {
        Target::Group(t) => {
            groups[t].extend(coalition.iter().copied());
        }
        Target::New => groups.push(coalition.to_vec()),
    }
    let _ = membership;
    Partition::new(
        membership.len(),
        groups.into_iter().filter(|g| !g.is_empty()).collect(),
    )
    .expect("apply preserves partition validity")
}

fn apply_gossip(p: &Partition, n: usize, g: &GossipDeviation) -> Partition {
    let membership = p.membership(n);
    let (a, b) = (membership[g.u], membership[g.v]);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut merged = Vec::new();
    for (i, grp) in p.groups().iter().enumerate() {
        if i == a || i == b {
            merged.extend(grp.iter().copied());
        } else {
            groups.push(grp.clone());
        }
    }
    groups.push(merged);
    Partition::new(n, groups).expect("gossip merge preserves partition validity")
}

/// Report of the global-utility variation check for one coalition move.
#[derive(Debug, Clone)]
pub struct PotentialReport {
    pub delta: i128,
    pub bound: i128,
    pub ok: bool,
}

/// Computes `f(P') - f(P)` and the lower bound
/// `2 [ |S| - sum_{pairs in S} w + sum_{same-group pairs in S} w ]`,
/// asserting the bound holds. Only meaningful for symmetric games on
/// conflict-free partitions.
pub fn check_potential_step(
    game: &Game,
    before: &Partition,
    coalition: &[usize],
    after: &Partition,
) -> Result<PotentialReport> {
    let view = game.view();
    check_potential_step_view(&view, before, coalition, after)
}

pub fn check_potential_step_view(
    view: &ResolvedView,
    before: &Partition,
    coalition: &[usize],
    after: &Partition,
) -> Result<PotentialReport> {
    let fb = crate::game::global_utility_view(view, before)
        .finite()
        .ok_or_else(|| Error::InvalidPartition("pre-move utility is -inf".into()))?;
    let fa = crate::game::global_utility_view(view, after)
        .finite()
        .ok_or_else(|| Error::InvalidPartition("post-move utility is -inf".into()))?;
    let membership = before.membership(view.n());
    let mut w_all = 0i128;
    let mut w_same = 0i128;
    for (i, &u) in coalition.iter().enumerate() {
        for &v in &coalition[i + 1..] {
            if view.incompatible(u, v) {
                return Err(Error::InvalidPartition(
                    "conflicting pair inside coalition".into(),
                ));
            }
            let w = view.weight(u, v) as i128;
            w_all += w;
            if membership[u] == membership[v] {
                w_same += w;
            }
        }
    }
    let bound = 2 * (coalition.len() as i128 - w_all + w_same);
    let delta = fa - fb;
    Ok(PotentialReport {
        delta,
        bound,
        ok: delta >= bound,
    })
}

/// Runs the improvement dynamics from all singletons (or `opts.initial`).
pub fn run_dynamics(game: &Game, k: usize, scheduler: Scheduler, opts: &DynamicsOpts) -> Result<Trace> {
    run_dynamics_view(&game.view(), k, scheduler, opts)
}

pub fn run_dynamics_view(
    view: &ResolvedView,
    k: usize,
    scheduler: Scheduler,
    opts: &DynamicsOpts,
) -> Result<Trace> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    let n = view.n();
    let mut p = opts
        .initial
        .clone()
        .unwrap_or_else(|| Partition::singletons(n));
    let mut rng = match scheduler {
        Scheduler::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    let mut ring: VecDeque<Vec<u32>> = VecDeque::new();
    let mut steps = Vec::new();
    remember(&mut seen, &mut ring, opts.cycle_memory_cap, p.encode());

    for step in 0..opts.max_steps {
        let mv = match (scheduler, &mut rng) {
            // FirstLex takes the first candidate, so gossip (ordered after
            // all coalition moves) only fires when no deviation exists.
            (Scheduler::FirstLex, _) => {
                let d = first_deviation_view(view, &p, k).map(Move::Deviation);
                match d {
                    Some(d) => Some(d),
                    None if opts.gossip => enumerate_gossip_view(view, &p)
                        .into_iter()
                        .next()
                        .map(Move::Gossip),
                    None => None,
                }
            }
            _ => {
                let mut pool: Vec<Move> = enumerate_deviations_view(view, &p, k)
                    .into_iter()
                    .map(Move::Deviation)
                    .collect();
                if opts.gossip {
                    pool.extend(enumerate_gossip_view(view, &p).into_iter().map(Move::Gossip));
                }
                if pool.is_empty() {
                    None
                } else {
                    let idx = match (scheduler, &mut rng) {
                        (Scheduler::Random(_), Some(r)) => r.gen_range(0..pool.len()),
                        (Scheduler::MinCoalition, _) => pool
                            .iter()
                            .enumerate()
                            .min_by_key(|(i, m)| (move_size(m), *i))
                            .map(|(i, _)| i)
                            .unwrap(),
                        (Scheduler::MaxUtilityGain, _) => {
                            let membership = p.membership(n);
                            pool.iter()
                                .enumerate()
                                .max_by_key(|(i, m)| {
                                    (total_gain(view, &p, &membership, m), std::cmp::Reverse(*i))
                                })
                                .map(|(i, _)| i)
                                .unwrap()
                        }
                        _ => 0,
                    };
                    Some(pool.swap_remove(idx))
                }
            }
        };
        let Some(mv) = mv else {
            return Ok(Trace {
                steps,
                status: Terminal::Stable,
                final_partition: p,
            });
        };

        let membership = p.membership(n);
        let f_before = crate::game::global_utility_view(view, &p);
        let lambda_before = p.partition_vector();
        let before_hash = hash_partition(&p);
        let (next, member_utils) = match &mv {
            Move::Deviation(d) => {
                let gains = evaluate(view, &p, &membership, &d.coalition, d.target)
                    .expect("scheduled deviation must be valid");
                (apply_unchecked(&p, &membership, &d.coalition, d.target), gains)
            }
            Move::Gossip(g) => {
                let next = apply_gossip(&p, n, g);
                let utils = [g.u, g.v]
                    .into_iter()
                    .map(|x| {
                        let before = view.utility_in(x, &p.groups()[membership[x]]);
                        let gi = next.group_of(x).unwrap();
                        let after = view.utility_in(x, &next.groups()[gi]);
                        (x, before, after)
                    })
                    .collect();
                (next, utils)
            }
        };
        // Every coalition member strictly improves, on every applied move.
        for &(u, b, a) in &member_utils {
            assert!(a > b, "node {u} did not strictly improve");
        }
        if opts.assert_potential {
            if let Move::Deviation(d) = &mv {
                let rep = check_potential_step_view(view, &p, &d.coalition, &next)?;
                assert!(
                    rep.ok,
                    "utility variation {} below bound {}",
                    rep.delta, rep.bound
                );
            }
        }
        let f_after = crate::game::global_utility_view(view, &next);
        steps.push(StepRecord {
            step,
            partition_before_hash: before_hash,
            mv,
            member_utils,
            lambda_before,
            lambda_after: next.partition_vector(),
            f_before,
            f_after,
        });
        p = next;
        let code = p.encode();
        if seen.contains(&code) || ring.contains(&code) {
            return Ok(Trace {
                steps,
                status: Terminal::CycleDetected,
                final_partition: p,
            });
        }
        remember(&mut seen, &mut ring, opts.cycle_memory_cap, code);
    }
    Ok(Trace {
        steps,
        status: Terminal::StepCapReached,
        final_partition: p,
    })
}

fn remember(
    seen: &mut HashSet<Vec<u32>>,
    ring: &mut VecDeque<Vec<u32>>,
    cap: usize,
    code: Vec<u32>,
) {
    if seen.len() < cap {
        seen.insert(code);
    } else {
        if ring.len() >= cap.max(1) {
            ring.pop_front();
        }
        ring.push_back(code);
    }
}

fn move_size(m: &Move) -> usize {
    match m {
        Move::Deviation(d) => d.coalition.len(),
        Move::Gossip(_) => 2,
    }
}

fn total_gain(view: &ResolvedView, p: &Partition, membership: &[usize], m: &Move) -> i128 {
    match m {
        Move::Deviation(d) => evaluate(view, p, membership, &d.coalition, d.target)
            .map(|gains| {
                gains
                    .iter()
                    .map(|(_, b, a)| match (a, b) {
                        (ExtendedUtility::Finite(a), ExtendedUtility::Finite(b)) => a - b,
                        (ExtendedUtility::Finite(a), ExtendedUtility::NegInfinity) => {
                            a + i64::MAX as i128
                        }
                        _ => i128::MIN,
                    })
                    .sum()
            })
            .unwrap_or(i128::MIN),
        Move::Gossip(g) => {
            let mut total = 0i128;
            for x in [g.u, g.v] {
                let grp = &p.groups()[membership[x]];
                if let (ExtendedUtility::Finite(b), ExtendedUtility::Finite(_)) =
                    (view.utility_in(x, grp), ExtendedUtility::ZERO)
                {
                    total -= b;
                }
            }
            total
        }
    }
}

use rand::SeedableRng;
