//! Stability checking, exhaustive existence search, and longest deviation
//! sequences.
//!
//! Existence searches enumerate feasible partitions only (no group contains
//! a conflicting pair); a partition placing enemies together is never stable
//! since the poisoned node strictly gains by going solo, so the restriction
//! loses nothing.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::dynamics::{
    apply_deviation_view, enumerate_deviations_view, enumerate_gossip_view, Deviation, StepRecord,
    Target, Terminal, Trace,
};
use crate::game::{Game, Partition, PartitionVector, ResolvedView};
use crate::{Error, Result, SearchBudget};

/// True iff no deviation of size at most `k` (nor, when asked, any gossip
/// move) breaks `p`.
pub fn is_k_stable(game: &Game, p: &Partition, k: usize, gossip: bool) -> Result<bool> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    Ok(is_k_stable_view(&game.view(), p, k, gossip))
}

pub fn is_k_stable_view(view: &ResolvedView, p: &Partition, k: usize, gossip: bool) -> bool {
    let n = view.n();
    let membership = p.membership(n);
    let groups = p.groups();
    // Check coalition sizes in increasing order: unstable partitions almost
    // always fall to a unilateral move, so this exits early cheaply.
    let mut coalition = Vec::with_capacity(k);
    for size in 1..=k.min(n) {
        if breaks_with_size(view, p, &membership, &mut coalition, 0, size) {
            return false;
        }
    }
    if gossip {
        let _ = groups;
        if !enumerate_gossip_view(view, p).is_empty() {
            return false;
        }
    }
    true
}

fn breaks_with_size(
    view: &ResolvedView,
    p: &Partition,
    membership: &[usize],
    coalition: &mut Vec<usize>,
    from: usize,
    size: usize,
) -> bool {
    if coalition.len() == size {
        return any_target_improves(view, p, membership, coalition);
    }
    for u in from..view.n() {
        coalition.push(u);
        if breaks_with_size(view, p, membership, coalition, u + 1, size) {
            coalition.pop();
            return true;
        }
        coalition.pop();
    }
    false
}

fn any_target_improves(
    view: &ResolvedView,
    p: &Partition,
    membership: &[usize],
    coalition: &[usize],
) -> bool {
    let groups = p.groups();
    'target: for t in 0..=groups.len() {
        let mut post: Vec<usize> = if t < groups.len() {
            if coalition.iter().all(|&u| membership[u] == t) {
                continue;
            }
            let mut g = groups[t].clone();
            g.extend(coalition.iter().copied().filter(|&u| membership[u] != t));
            g
        } else {
            coalition.to_vec()
        };
        post.sort_unstable();
        for &u in coalition {
            let before = view.utility_in(u, &groups[membership[u]]);
            let after = view.utility_in(u, &post);
            if after <= before {
                continue 'target;
            }
        }
        return true;
    }
    false
}

/// Streaming enumeration of feasible partitions in restricted-growth order,
/// with conflict pruning. Optional blocks are kept whole (each block must be
/// internally conflict-free).
pub struct FeasiblePartitions<'a> {
    view: &'a ResolvedView,
    units: Vec<Vec<usize>>,
    compat: Vec<bool>,
    assign: Vec<Vec<usize>>,
    cand: Vec<usize>,
    pos: usize,
    started: bool,
    done: bool,
}

impl<'a> FeasiblePartitions<'a> {
    pub fn new(view: &'a ResolvedView) -> Self {
        let units = (0..view.n()).map(|u| vec![u]).collect();
        Self::with_units(view, units).expect("singleton units are feasible")
    }

    /// Enumeration over partitions that keep each block whole.
    pub fn with_blocks(view: &'a ResolvedView, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut covered = vec![false; view.n()];
        let mut units: Vec<Vec<usize>> = Vec::new();
        for b in blocks {
            let mut b = b.clone();
            b.sort_unstable();
            for &u in &b {
                if covered[u] {
                    return Err(Error::InvalidParam(format!("node {u} in two blocks")));
                }
                covered[u] = true;
            }
            units.push(b);
        }
        for u in 0..view.n() {
            if !covered[u] {
                units.push(vec![u]);
            }
        }
        units.sort_by_key(|u| u[0]);
        Self::with_units(view, units)
    }

    fn with_units(view: &'a ResolvedView, units: Vec<Vec<usize>>) -> Result<Self> {
        for unit in &units {
            for (i, &x) in unit.iter().enumerate() {
                for &y in &unit[i + 1..] {
                    if view.incompatible(x, y) {
                        return Err(Error::InvalidParam(format!(
                            "block contains conflicting pair ({x},{y})"
                        )));
                    }
                }
            }
        }
        let m = units.len();
        let mut compat = vec![true; m * m];
        for a in 0..m {
            for b in 0..m {
                compat[a * m + b] = units[a].iter().all(|&x| {
                    units[b].iter().all(|&y| !view.incompatible(x, y))
                });
            }
        }
        Ok(FeasiblePartitions {
            view,
            units,
            compat,
            assign: Vec::new(),
            cand: vec![0; m + 1],
            pos: 0,
            started: false,
            done: false,
        })
    }

    fn feasible(&self, unit: usize, group: &[usize]) -> bool {
        let m = self.units.len();
        group.iter().all(|&other| self.compat[unit * m + other])
    }

    fn build(&self) -> Partition {
        let groups: Vec<Vec<usize>> = self
            .assign
            .iter()
            .map(|g| {
                let mut nodes: Vec<usize> =
                    g.iter().flat_map(|&u| self.units[u].iter().copied()).collect();
                nodes.sort_unstable();
                nodes
            })
            .collect();
        Partition::new(self.view.n(), groups).expect("feasible assignment covers all nodes")
    }

    fn retreat(&mut self) {
        if self.pos == 0 {
            self.done = true;
            return;
        }
        self.pos -= 1;
        let g = self
            .assign
            .iter()
            .position(|grp| grp.last() == Some(&self.pos))
            .expect("unit was placed");
        self.assign[g].pop();
        if self.assign[g].is_empty() {
            self.assign.pop();
        }
    }
}

impl Iterator for FeasiblePartitions<'_> {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        if self.started {
            self.retreat();
        }
        self.started = true;
        let m = self.units.len();
        loop {
            if self.done {
                return None;
            }
            if self.pos == m {
                return Some(self.build());
            }
            let used = self.assign.len();
            let mut placed = false;
            while self.cand[self.pos] <= used {
                let g = self.cand[self.pos];
                self.cand[self.pos] += 1;
                if g == used {
                    self.assign.push(vec![self.pos]);
                    placed = true;
                    break;
                } else if self.feasible(self.pos, &self.assign[g]) {
                    self.assign[g].push(self.pos);
                    placed = true;
                    break;
                }
            }
            if placed {
                self.pos += 1;
                if self.pos < m {
                    self.cand[self.pos] = 0;
                }
            } else {
                self.cand[self.pos] = 0;
                self.retreat();
            }
        }
    }
}

/// Counts feasible partitions (Bell(n) when no conflicts), within budget.
pub fn count_feasible(view: &ResolvedView, budget: SearchBudget) -> Result<u64> {
    let mut count = 0u64;
    for _ in FeasiblePartitions::new(view) {
        count += 1;
        if count > budget.max_states {
            return Err(Error::SearchTooLarge {
                examined: count,
                budget: budget.max_states,
            });
        }
    }
    Ok(count)
}

/// First feasible partition (restricted-growth order) that is `k`-stable, or
/// `None`. Result is independent of worker count: batches are checked in
/// parallel but matched positionally.
pub fn exists_k_stable(
    game: &Game,
    k: usize,
    gossip: bool,
    budget: SearchBudget,
) -> Result<Option<Partition>> {
    exists_k_stable_view(&game.view(), k, gossip, budget, None)
}

pub fn exists_k_stable_view(
    view: &ResolvedView,
    k: usize,
    gossip: bool,
    budget: SearchBudget,
    blocks: Option<&[Vec<usize>]>,
) -> Result<Option<Partition>> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    let mut iter = match blocks {
        Some(b) => FeasiblePartitions::with_blocks(view, b)?,
        None => FeasiblePartitions::new(view),
    };
    let mut examined = 0u64;
    const BATCH: usize = 2048;
    loop {
        let batch: Vec<Partition> = iter.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            return Ok(None);
        }
        examined += batch.len() as u64;
        if examined > budget.max_states {
            return Err(Error::SearchTooLarge {
                examined,
                budget: budget.max_states,
            });
        }
        if let Some(p) = batch
            .into_par_iter()
            .find_first(|p| is_k_stable_view(view, p, k, gossip))
        {
            return Ok(Some(p));
        }
    }
}

/// Exact value of the longest unilateral-deviation sequence:
/// with `n = m(m+1)/2 + r`, `0 <= r <= m`, the value is
/// `2*binom(m+1,3) + m*r`.
pub fn l1_formula(n: u64) -> u64 {
    let mut m = ((((8 * n + 1) as f64).sqrt() - 1.0) / 2.0) as u64;
    while (m + 1) * (m + 2) / 2 <= n {
        m += 1;
    }
    while m * (m + 1) / 2 > n {
        m -= 1;
    }
    let r = n - m * (m + 1) / 2;
    debug_assert!(r <= m);
    let binom3 = if m + 1 >= 3 {
        (m + 1) * m * (m - 1) / 6
    } else {
        0
    };
    2 * binom3 + m * r
}

/// Exact number of integer partitions of `n`, by Euler's pentagonal
/// recurrence.
pub fn integer_partition_count(n: usize) -> u128 {
    let mut p = vec![0u128; n + 1];
    p[0] = 1;
    for i in 1..=n {
        let mut total: i128 = 0;
        let mut k = 1i64;
        loop {
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > i {
                break;
            }
            let sign = if k % 2 == 0 { -1 } else { 1 };
            total += sign * p[i - g1] as i128;
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= i {
                total += sign * p[i - g2] as i128;
            }
            k += 1;
        }
        p[i] = total as u128;
    }
    p[n]
}

/// Longest sequence of `k`-deviations from all singletons, with a witness
/// trace. Uses partition-vector memoization on conflict-free uniform games
/// with `k <= 2` (node identities are interchangeable there) and canonical
/// partitions otherwise. Errors when the deviation graph has a cycle (the
/// longest sequence is then unbounded).
pub fn longest_sequence(game: &Game, k: usize, budget: SearchBudget) -> Result<(u64, Trace)> {
    let view = game.view();
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    if view.is_uniform() && !view.has_conflicts() && k <= 2 {
        let (len, moves) = lambda_longest(view.n(), k, budget)?;
        let trace = realize_lambda_moves(&view, &moves)?;
        debug_assert_eq!(trace.len() as u64, len);
        return Ok((len, trace));
    }
    node_level_longest(&view, k, budget)
}

/// `L(k, n)` on the conflict-free uniform game. By the empty-conflict-graph
/// reduction this equals the maximum over all conflict graphs on `n` nodes.
pub fn l_empty(k: usize, n: usize, budget: SearchBudget) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    if k <= 2 {
        return Ok(lambda_longest(n, k, budget)?.0);
    }
    let game = Game::uniform(n, &[])?;
    Ok(node_level_longest(&game.view(), k, budget)?.0)
}

// ---- partition-vector level search (conflict-free uniform, k <= 2) ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LMove {
    /// One node from a group of size `s_from` into an existing group of size
    /// `s_to >= s_from`.
    One { s_from: usize, s_to: usize },
    /// Two nodes of one group of size `s`, into size `s_to >= s-1`
    /// (`s_to = 0` is impossible here and never emitted).
    TwoSame { s: usize, s_to: usize },
    /// Two nodes from distinct groups of sizes `s1 <= s2`, into size
    /// `s_to >= s2-1`, or a fresh group when `s_to = 0` (both singletons).
    TwoDiff { s1: usize, s2: usize, s_to: usize },
}

fn lambda_apply(lambda: &[u16], mv: LMove) -> Vec<u16> {
    let mut l = lambda.to_vec();
    match mv {
        LMove::One { s_from, s_to } => {
            l[s_from] -= 1;
            if s_from > 1 {
                l[s_from - 1] += 1;
            }
            l[s_to] -= 1;
            l[s_to + 1] += 1;
        }
        LMove::TwoSame { s, s_to } => {
            l[s] -= 1;
            if s > 2 {
                l[s - 2] += 1;
            }
            l[s_to] -= 1;
            l[s_to + 2] += 1;
        }
        LMove::TwoDiff { s1, s2, s_to } => {
            l[s1] -= 1;
            if s1 > 1 {
                l[s1 - 1] += 1;
            }
            l[s2] -= 1;
            if s2 > 1 {
                l[s2 - 1] += 1;
            }
            if s_to > 0 {
                l[s_to] -= 1;
            }
            l[s_to + 2] += 1;
        }
    }
    l
}

fn lambda_moves(lambda: &[u16], k: usize) -> Vec<LMove> {
    let n = lambda.len() - 1;
    let sizes: Vec<usize> = (1..=n).filter(|&s| lambda[s] > 0).collect();
    let mut out = Vec::new();
    for &s_from in &sizes {
        for &s_to in &sizes {
            if s_to < s_from {
                continue;
            }
            if s_to == s_from && lambda[s_from] < 2 {
                continue;
            }
            if s_to + 1 <= n {
                out.push(LMove::One { s_from, s_to });
            }
        }
    }
    if k >= 2 {
        for &s in &sizes {
            if s < 2 {
                continue;
            }
            for &s_to in &sizes {
                if s_to + 2 > n || s_to < s.saturating_sub(1) {
                    continue;
                }
                if s_to == s && lambda[s] < 2 {
                    continue;
                }
                out.push(LMove::TwoSame { s, s_to });
            }
        }
        for &s1 in &sizes {
            for &s2 in &sizes {
                if s2 < s1 || (s1 == s2 && lambda[s1] < 2) {
                    continue;
                }
                // Fresh target: only profitable when both movers are solo.
                if s1 == 1 && s2 == 1 {
                    out.push(LMove::TwoDiff { s1, s2, s_to: 0 });
                }
                for &s_to in &sizes {
                    if s_to + 2 > n || s_to + 1 < s2 {
                        continue;
                    }
                    // Target must be a third group.
                    let mut need = 1u16;
                    if s_to == s1 {
                        need += 1;
                    }
                    if s_to == s2 {
                        need += 1;
                    }
                    if lambda[s_to] < need {
                        continue;
                    }
                    out.push(LMove::TwoDiff { s1, s2, s_to });
                }
            }
        }
    }
    out
}

fn lambda_longest(n: usize, k: usize, budget: SearchBudget) -> Result<(u64, Vec<LMove>)> {
    let mut start = vec![0u16; n + 1];
    start[1] = n as u16;
    let mut memo: HashMap<Vec<u16>, (u64, Option<LMove>)> = HashMap::new();
    let mut states = 0u64;
    fn rec(
        lambda: Vec<u16>,
        k: usize,
        memo: &mut HashMap<Vec<u16>, (u64, Option<LMove>)>,
        states: &mut u64,
        budget: &SearchBudget,
    ) -> Result<u64> {
        if let Some(&(len, _)) = memo.get(&lambda) {
            return Ok(len);
        }
        *states += 1;
        if *states > budget.max_states {
            return Err(Error::SearchTooLarge {
                examined: *states,
                budget: budget.max_states,
            });
        }
        let mut best = 0u64;
        let mut best_mv = None;
        for mv in lambda_moves(&lambda, k) {
            let next = lambda_apply(&lambda, mv);
            let len = 1 + rec(next, k, memo, states, budget)?;
            if len > best {
                best = len;
                best_mv = Some(mv);
            }
        }
        memo.insert(lambda, (best, best_mv));
        Ok(best)
    }
    let total = rec(start.clone(), k, &mut memo, &mut states, &budget)?;
    // Reconstruct the move path.
    let mut moves = Vec::new();
    let mut cur = start;
    while let Some(&(_, Some(mv))) = memo.get(&cur) {
        moves.push(mv);
        cur = lambda_apply(&cur, mv);
    }
    debug_assert_eq!(moves.len() as u64, total);
    Ok((total, moves))
}

/// Realizes a partition-vector move path as a concrete trace on the
/// conflict-free uniform game, picking lowest group indices and node ids.
fn realize_lambda_moves(view: &ResolvedView, moves: &[LMove]) -> Result<Trace> {
    let n = view.n();
    let mut p = Partition::singletons(n);
    let mut steps = Vec::new();
    for (i, &mv) in moves.iter().enumerate() {
        let groups = p.groups();
        let find_group = |size: usize, exclude: &[usize]| -> Result<usize> {
            groups
                .iter()
                .position(|g| g.len() == size && !exclude.contains(&g[0]))
                .ok_or_else(|| Error::InsufficientGroups {
                    size,
                    needed: 1,
                    have: 0,
                })
        };
        let (coalition, target) = match mv {
            LMove::One { s_from, s_to } => {
                let from = find_group(s_from, &[])?;
                let to = groups
                    .iter()
                    .enumerate()
                    .position(|(i, g)| g.len() == s_to && i != from)
                    .ok_or(Error::InsufficientGroups {
                        size: s_to,
                        needed: 1,
                        have: 0,
                    })?;
                (vec![groups[from][0]], Target::Group(to))
            }
            LMove::TwoSame { s, s_to } => {
                let from = find_group(s, &[])?;
                let to = groups
                    .iter()
                    .enumerate()
                    .position(|(i, g)| g.len() == s_to && i != from)
                    .ok_or(Error::InsufficientGroups {
                        size: s_to,
                        needed: 1,
                        have: 0,
                    })?;
                (groups[from][..2].to_vec(), Target::Group(to))
            }
            LMove::TwoDiff { s1, s2, s_to } => {
                let from2 = find_group(s2, &[])?;
                let from1 = groups
                    .iter()
                    .enumerate()
                    .position(|(i, g)| g.len() == s1 && i != from2)
                    .ok_or(Error::InsufficientGroups {
                        size: s1,
                        needed: 2,
                        have: 1,
                    })?;
                let coalition = vec![groups[from1][0], groups[from2][0]];
                if s_to == 0 {
                    (coalition, Target::New)
                } else {
                    let to = groups
                        .iter()
                        .enumerate()
                        .position(|(i, g)| g.len() == s_to && i != from1 && i != from2)
                        .ok_or(Error::InsufficientGroups {
                            size: s_to,
                            needed: 1,
                            have: 0,
                        })?;
                    (coalition, Target::Group(to))
                }
            }
        };
        let mut coalition = coalition;
        coalition.sort_unstable();
        let d = Deviation {
            coalition: coalition.clone(),
            target,
        };
        let f_before = crate::game::global_utility_view(view, &p);
        let lambda_before = p.partition_vector();
        let membership = p.membership(n);
        let member_utils = coalition
            .iter()
            .map(|&u| {
                let b = view.utility_in(u, &p.groups()[membership[u]]);
                (u, b, b)
            })
            .collect();
        let next = apply_deviation_view(view, &p, &d)?;
        steps.push(StepRecord {
            step: i,
            partition_before_hash: 0,
            mv: crate::dynamics::Move::Deviation(d),
            member_utils,
            lambda_before,
            lambda_after: next.partition_vector(),
            f_before,
            f_after: crate::game::global_utility_view(view, &next),
        });
        p = next;
    }
    Ok(Trace {
        steps,
        status: Terminal::Stable,
        final_partition: p,
    })
}

// ---- canonical-partition level search (general games) ----

fn node_level_longest(view: &ResolvedView, k: usize, budget: SearchBudget) -> Result<(u64, Trace)> {
    let start = Partition::singletons(view.n());
    let mut memo: HashMap<Vec<u32>, (u64, Option<Deviation>)> = HashMap::new();
    let mut on_stack: HashSet<Vec<u32>> = HashSet::new();
    let mut states = 0u64;

    fn rec(
        view: &ResolvedView,
        p: &Partition,
        k: usize,
        memo: &mut HashMap<Vec<u32>, (u64, Option<Deviation>)>,
        on_stack: &mut HashSet<Vec<u32>>,
        states: &mut u64,
        budget: &SearchBudget,
    ) -> Result<u64> {
        let code = p.encode();
        if let Some(&(len, _)) = memo.get(&code) {
            return Ok(len);
        }
        if !on_stack.insert(code.clone()) {
            return Err(Error::InvalidParam(
                "deviation graph contains a cycle; longest sequence is unbounded".into(),
            ));
        }
        *states += 1;
        if *states > budget.max_states {
            return Err(Error::SearchTooLarge {
                examined: *states,
                budget: budget.max_states,
            });
        }
        let mut best = 0u64;
        let mut best_mv = None;
        for d in enumerate_deviations_view(view, p, k) {
            let next = apply_deviation_view(view, p, &d)?;
            let len = 1 + rec(view, &next, k, memo, on_stack, states, budget)?;
            if len > best {
                best = len;
                best_mv = Some(d);
            }
        }
        on_stack.remove(&code);
        memo.insert(code, (best, best_mv));
        Ok(best)
    }

    let total = rec(view, &start, k, &mut memo, &mut on_stack, &mut states, &budget)?;
    // Replay the recorded best moves into a witness trace.
    let mut steps = Vec::new();
    let mut p = start;
    let mut i = 0;
    while let Some((_, Some(d))) = memo.get(&p.encode()).cloned() {
        let f_before = crate::game::global_utility_view(view, &p);
        let lambda_before = p.partition_vector();
        let next = apply_deviation_view(view, &p, &d)?;
        steps.push(StepRecord {
            step: i,
            partition_before_hash: 0,
            mv: crate::dynamics::Move::Deviation(d),
            member_utils: Vec::new(),
            lambda_before,
            lambda_after: next.partition_vector(),
            f_before,
            f_after: crate::game::global_utility_view(view, &next),
        });
        p = next;
        i += 1;
    }
    debug_assert_eq!(steps.len() as u64, total);
    Ok((
        total,
        Trace {
            steps,
            status: Terminal::Stable,
            final_partition: p,
        },
    ))
}

/// `sum_s s*lambda_s = n` holds for every vector produced here.
pub fn check_vector_conservation(v: &PartitionVector, n: usize) -> bool {
    v.total_nodes() == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Weight;
    use crate::test_support::{chaotic4_game, fig1_game, fig1_left, fig2_game, GameSampler};

    fn all_partitions_unpruned(n: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        fn rec(u: usize, n: usize, groups: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
            if u == n {
                out.push(groups.clone());
                return;
            }
            for i in 0..groups.len() {
                groups[i].push(u);
                rec(u + 1, n, groups, out);
                groups[i].pop();
            }
            groups.push(vec![u]);
            rec(u + 1, n, groups, out);
            groups.pop();
        }
        rec(0, n, &mut groups, &mut out);
        out
    }

    #[test]
    fn feasible_counts() {
        let g = Game::uniform(4, &[]).unwrap();
        assert_eq!(count_feasible(&g.view(), SearchBudget::default()).unwrap(), 15);

        let g = Game::uniform(3, &[(0, 1)]).unwrap();
        assert_eq!(count_feasible(&g.view(), SearchBudget::default()).unwrap(), 3);

        // Pruned enumeration agrees with unpruned enumeration plus filtering.
        let mut sampler = GameSampler::new(17);
        for _ in 0..10 {
            let g = sampler.sample(6);
            let view = g.view();
            let pruned = count_feasible(&view, SearchBudget::default()).unwrap();
            let filtered = all_partitions_unpruned(6)
                .into_iter()
                .filter(|groups| {
                    groups.iter().all(|grp| {
                        grp.iter().enumerate().all(|(i, &x)| {
                            grp[i + 1..].iter().all(|&y| !view.incompatible(x, y))
                        })
                    })
                })
                .count() as u64;
            assert_eq!(pruned, filtered);
        }
    }

    #[test]
    fn budget_is_hard() {
        let g = Game::uniform(8, &[]).unwrap();
        let err = count_feasible(&g.view(), SearchBudget::new(10)).unwrap_err();
        assert!(matches!(err, Error::SearchTooLarge { .. }));
    }

    #[test]
    fn fig1_stability_thresholds() {
        let g = fig1_game();
        let left = fig1_left();
        assert!(is_k_stable(&g, &left, 3, false).unwrap());
        assert!(!is_k_stable(&g, &left, 4, false).unwrap());
    }

    #[test]
    fn trivial_stable_partitions() {
        // All singletons in an all-enemies game.
        let n = 4;
        let mut g = Game::new(n, [Weight::NegInfinity]).unwrap();
        for u in 0..n {
            for v in u + 1..n {
                g.set_weight(u, v, Weight::NegInfinity).unwrap();
            }
        }
        let p = Partition::singletons(n);
        for k in 1..=4 {
            assert!(is_k_stable(&g, &p, k, false).unwrap());
        }
        // Single group in an all-positive game.
        let g = Game::uniform(4, &[]).unwrap();
        let p = Partition::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        for k in 1..=4 {
            assert!(is_k_stable(&g, &p, k, false).unwrap());
        }
    }

    #[test]
    fn existence_examples() {
        let fig2 = fig2_game();
        assert!(exists_k_stable(&fig2, 2, false, SearchBudget::default())
            .unwrap()
            .is_none());
        assert!(exists_k_stable(&fig2, 1, false, SearchBudget::default())
            .unwrap()
            .is_some());

        let c4 = chaotic4_game();
        assert!(exists_k_stable(&c4, 2, false, SearchBudget::default())
            .unwrap()
            .is_none());
        assert!(exists_k_stable(&c4, 1, false, SearchBudget::default())
            .unwrap()
            .is_some());
    }

    #[test]
    fn uniform_games_always_have_stable_partitions() {
        let mut sampler = GameSampler::new(23);
        for _ in 0..20 {
            let g = sampler.sample_uniform(5);
            for k in 1..=3 {
                assert!(exists_k_stable(&g, k, false, SearchBudget::default())
                    .unwrap()
                    .is_some());
            }
        }
    }

    #[test]
    fn l1_formula_values() {
        let expected = [0u64, 0, 1, 2, 4, 6, 8, 11, 14, 17, 20, 24, 28, 32, 36];
        for n in 1..=14usize {
            assert_eq!(l1_formula(n as u64), expected[n], "n={n}");
        }
    }

    #[test]
    fn partition_counts() {
        assert_eq!(integer_partition_count(1), 1);
        assert_eq!(integer_partition_count(5), 7);
        assert_eq!(integer_partition_count(10), 42);
        assert_eq!(integer_partition_count(14), 135);
    }

    #[test]
    fn longest_sequence_small_values() {
        let b = SearchBudget::default();
        assert_eq!(l_empty(1, 3, b).unwrap(), 2);
        assert_eq!(l_empty(1, 6, b).unwrap(), 8);
        assert_eq!(l_empty(2, 6, b).unwrap(), 8);
        assert_eq!(l_empty(2, 10, b).unwrap(), 20);
        assert_eq!(l_empty(1, 1, b).unwrap(), 0);
        // Frozen small fixture for a 3-deviation search: the chain through
        // all five shapes of 4 nodes.
        assert_eq!(l_empty(3, 4, b).unwrap(), 4);
    }

    #[test]
    fn longest_sequence_witness_matches_length() {
        let g = Game::uniform(6, &[]).unwrap();
        let (len, trace) = longest_sequence(&g, 1, SearchBudget::default()).unwrap();
        assert_eq!(len, 8);
        assert_eq!(trace.len(), 8);
        for s in &trace.steps {
            assert!(s.lambda_after > s.lambda_before);
        }
        let (len2, trace2) = longest_sequence(&g, 2, SearchBudget::default()).unwrap();
        assert_eq!(len2, 8);
        assert_eq!(trace2.len(), 8);
    }

    #[test]
    fn lambda_and_node_level_agree() {
        for n in 2..=6 {
            let g = Game::uniform(n, &[]).unwrap();
            for k in 1..=2 {
                let fast = l_empty(k, n, SearchBudget::default()).unwrap();
                let slow = node_level_longest(&g.view(), k, SearchBudget::default())
                    .unwrap()
                    .0;
                assert_eq!(fast, slow, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn conflict_graphs_never_beat_the_empty_graph() {
        // Every conflict graph on n <= 5 nodes.
        for n in 2..=5usize {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .collect();
            for k in 1..=2usize {
                let bound = l_empty(k, n, SearchBudget::default()).unwrap();
                for mask in 0u32..(1 << pairs.len()) {
                    let conflicts: Vec<(usize, usize)> = pairs
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &e)| e)
                        .collect();
                    let g = Game::uniform(n, &conflicts).unwrap();
                    let (len, _) =
                        node_level_longest(&g.view(), k, SearchBudget::default()).unwrap();
                    assert!(len <= bound, "n={n} k={k} mask={mask}");
                }
            }
        }
    }

    #[test]
    fn sequence_bound_by_partition_count() {
        for (k, n) in [(1usize, 6usize), (2, 6), (3, 4), (1, 8)] {
            let len = l_empty(k, n, SearchBudget::default()).unwrap();
            assert!(len as u128 <= integer_partition_count(n) - 1);
        }
    }

    #[test]
    fn twins_share_groups_in_1_stable_partitions() {
        let mut sampler = GameSampler::new(77);
        for _ in 0..20 {
            let g = sampler.sample(6);
            let twins = g.find_twins();
            if twins.is_empty() {
                continue;
            }
            let view = g.view();
            for p in FeasiblePartitions::new(&view) {
                if is_k_stable_view(&view, &p, 1, false) {
                    for &(u, v) in &twins {
                        assert_eq!(p.group_of(u), p.group_of(v), "twins {u},{v} in {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn unstable_games_never_report_stable() {
        for game in [fig2_game(), chaotic4_game()] {
            let opts = crate::dynamics::DynamicsOpts {
                max_steps: 3000,
                ..Default::default()
            };
            for seed in 0..3 {
                let t = crate::dynamics::run_dynamics(
                    &game,
                    2,
                    crate::dynamics::Scheduler::Random(seed),
                    &opts,
                )
                .unwrap();
                assert_ne!(t.status, Terminal::Stable);
            }
        }
    }
}
