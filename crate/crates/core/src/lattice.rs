//! The dominance order on integer partitions and its correspondence with
//! unilateral deviation sequences on conflict-free uniform games.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::game::{Game, Partition, PartitionVector};
use crate::{Error, Result};

/// An integer partition of `n`: non-increasing positive parts, stored
/// without trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntegerPartition {
    parts: Vec<usize>,
}

impl IntegerPartition {
    pub fn new(mut parts: Vec<usize>) -> Result<IntegerPartition> {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        if parts.is_empty() {
            return Err(Error::InvalidParam("integer partition of 0".into()));
        }
        Ok(IntegerPartition { parts })
    }

    pub fn singletons(n: usize) -> IntegerPartition {
        IntegerPartition { parts: vec![1; n] }
    }

    pub fn whole(n: usize) -> IntegerPartition {
        IntegerPartition { parts: vec![n] }
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn from_vector(v: &PartitionVector) -> IntegerPartition {
        let mut parts = Vec::new();
        for s in (1..=v.max_size()).rev() {
            parts.extend(std::iter::repeat(s).take(v.count(s)));
        }
        IntegerPartition { parts }
    }

    pub fn to_vector(&self) -> PartitionVector {
        let n = self.total();
        let mut lambda = vec![0usize; n + 1];
        for &p in &self.parts {
            lambda[p] += 1;
        }
        PartitionVector::from_counts(lambda)
    }

    /// Part at index `i`, 0 when padded beyond the stored parts.
    fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }
}

impl std::fmt::Display for IntegerPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({})",
            self.parts
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// Dominance: every prefix sum of `qp` is at least the matching prefix sum
/// of `q`.
pub fn dominates(qp: &IntegerPartition, q: &IntegerPartition) -> bool {
    debug_assert_eq!(qp.total(), q.total());
    let len = qp.parts.len().max(q.parts.len());
    let (mut sp, mut s) = (0usize, 0usize);
    for i in 0..len {
        sp += qp.part(i);
        s += q.part(i);
        if sp < s {
            return false;
        }
    }
    true
}

/// Immediate-successor (covering) test, by the four-condition
/// characterization: one part grows by 1 at position `j`, one shrinks by 1
/// at position `k`, everything else equal, and `k = j+1` or `q_j = q_k`.
pub fn covers(qp: &IntegerPartition, q: &IntegerPartition) -> bool {
    if qp.total() != q.total() {
        return false;
    }
    let len = qp.parts.len().max(q.parts.len());
    let mut up = None;
    let mut down = None;
    for i in 0..len {
        match (qp.part(i) as i64) - (q.part(i) as i64) {
            0 => {}
            1 if up.is_none() => up = Some(i),
            -1 if down.is_none() => down = Some(i),
            _ => return false,
        }
    }
    match (up, down) {
        (Some(j), Some(k)) if j < k => k == j + 1 || q.part(j) == q.part(k),
        _ => false,
    }
}

/// All partitions covering `q` (one covering step up the order).
pub fn covering_successors(q: &IntegerPartition) -> Vec<IntegerPartition> {
    let mut out = HashSet::new();
    let m = q.parts.len();
    for k in 0..m {
        for j in 0..m {
            if j == k {
                continue;
            }
            let mut parts = q.parts.clone();
            parts[j] += 1;
            parts[k] -= 1;
            if let Ok(cand) = IntegerPartition::new(parts) {
                if covers(&cand, q) {
                    out.insert(cand);
                }
            }
        }
    }
    let mut v: Vec<_> = out.into_iter().collect();
    v.sort();
    v
}

/// All partitions covered by `q` (one covering step down).
pub fn covering_predecessors(q: &IntegerPartition) -> Vec<IntegerPartition> {
    let mut out = HashSet::new();
    let m = q.parts.len();
    for j in 0..m {
        // Move one unit from part j to another part or to a fresh part.
        for k in 0..=m {
            if k < m && k == j {
                continue;
            }
            let mut parts = q.parts.clone();
            parts[j] -= 1;
            if k < m {
                parts[k] += 1;
            } else {
                parts.push(1);
            }
            if let Ok(cand) = IntegerPartition::new(parts) {
                if covers(q, &cand) {
                    out.insert(cand);
                }
            }
        }
    }
    let mut v: Vec<_> = out.into_iter().collect();
    v.sort();
    v
}

/// Length of the longest chain from `(1,...,1)` to `(n)` in the covering
/// DAG; the DAG is walked lazily, never materialized whole.
pub fn longest_chain(n: usize) -> u64 {
    longest_chain_with_witness(n).0
}

/// Longest chain plus one maximum-length chain as a witness.
pub fn longest_chain_with_witness(n: usize) -> (u64, Vec<IntegerPartition>) {
    let mut memo: HashMap<IntegerPartition, (u64, Option<IntegerPartition>)> = HashMap::new();
    fn rec(
        q: &IntegerPartition,
        memo: &mut HashMap<IntegerPartition, (u64, Option<IntegerPartition>)>,
    ) -> u64 {
        if let Some(&(len, _)) = memo.get(q) {
            return len;
        }
        let mut best = 0;
        let mut best_next = None;
        for s in covering_successors(q) {
            let len = 1 + rec(&s, memo);
            if len > best {
                best = len;
                best_next = Some(s);
            }
        }
        memo.insert(q.clone(), (best, best_next));
        best
    }
    let start = IntegerPartition::singletons(n);
    let total = rec(&start, &mut memo);
    let mut chain = vec![start.clone()];
    let mut cur = start;
    while let Some((_, Some(next))) = memo.get(&cur).cloned() {
        chain.push(next.clone());
        cur = next;
    }
    (total, chain)
}

/// Whether a sequence of unilateral deviations on the conflict-free uniform
/// game can lead from some partition with vector `q` to one with vector
/// `qp`. Searched at the node level by BFS; agrees with [`dominates`].
pub fn deviation_reaches(q: &IntegerPartition, qp: &IntegerPartition, n: usize) -> Result<bool> {
    if q.total() != n || qp.total() != n {
        return Err(Error::InvalidParam(format!(
            "partitions must sum to n={n}"
        )));
    }
    let game = Game::uniform(n, &[])?;
    let view = game.view();
    // Realize q on concrete nodes.
    let mut groups = Vec::new();
    let mut next = 0;
    for &size in q.parts() {
        groups.push((next..next + size).collect::<Vec<_>>());
        next += size;
    }
    let start = Partition::new(n, groups)?;
    let target = qp.to_vector();
    let mut queue = VecDeque::new();
    let mut seen = HashSet::new();
    seen.insert(start.encode());
    queue.push_back(start);
    while let Some(p) = queue.pop_front() {
        if p.partition_vector() == target {
            return Ok(true);
        }
        for d in crate::dynamics::enumerate_deviations_view(&view, &p, 1) {
            let nxt = crate::dynamics::apply_deviation_view(&view, &p, &d)?;
            if seen.insert(nxt.encode()) {
                queue.push_back(nxt);
            }
        }
    }
    Ok(false)
}

/// Decomposes one unilateral deviation (a node moving from the group at
/// sorted index `from` into the group at index `to`, which must be at least
/// as large) into a chain of elementary deviations whose vector effects are
/// covering steps. Returns the chain of integer partitions from the original
/// vector to the direct move's vector; the elementary movers need not be the
/// original node, only the final vector is preserved.
pub fn decompose_to_covering_steps(
    q: &IntegerPartition,
    from: usize,
    to: usize,
) -> Result<Vec<IntegerPartition>> {
    let m = q.parts.len();
    if from >= m || to >= m || from == to {
        return Err(Error::InvalidParam("bad group indices".into()));
    }
    if q.parts[to] < q.parts[from] {
        return Err(Error::InvalidParam(
            "target group must be at least as large as the source".into(),
        ));
    }
    let mut parts = q.parts.clone();
    parts[to] += 1;
    parts[from] -= 1;
    let goal = IntegerPartition::new(parts)?;
    let mut chain = vec![q.clone()];
    let mut cur = q.clone();
    while cur != goal {
        let step = covering_successors(&cur)
            .into_iter()
            .find(|s| dominates(&goal, s))
            .expect("dominance interval admits a covering chain");
        chain.push(step.clone());
        cur = step;
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{l1_formula, FeasiblePartitions};

    fn all_partitions_of(n: usize) -> Vec<IntegerPartition> {
        let mut out = Vec::new();
        fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<IntegerPartition>) {
            if rem == 0 {
                out.push(IntegerPartition::new(cur.clone()).unwrap());
                return;
            }
            for p in (1..=rem.min(max)).rev() {
                cur.push(p);
                rec(rem - p, p, cur, out);
                cur.pop();
            }
        }
        rec(n, n, &mut Vec::new(), &mut out);
        out
    }

    /// Definitional covering oracle: dominance with nothing strictly between.
    fn covers_def(qp: &IntegerPartition, q: &IntegerPartition, all: &[IntegerPartition]) -> bool {
        qp != q
            && dominates(qp, q)
            && !all.iter().any(|mid| {
                mid != qp && mid != q && dominates(qp, mid) && dominates(mid, q)
            })
    }

    #[test]
    fn dominance_examples() {
        let top = IntegerPartition::whole(4);
        let bottom = IntegerPartition::singletons(4);
        for q in all_partitions_of(4) {
            assert!(dominates(&top, &q));
            assert!(dominates(&q, &bottom));
        }
        let a = IntegerPartition::new(vec![2, 2]).unwrap();
        let b = IntegerPartition::new(vec![2, 1, 1]).unwrap();
        assert!(dominates(&a, &b));
        assert!(!dominates(&b, &a));
    }

    #[test]
    fn covering_examples() {
        let a = IntegerPartition::new(vec![2, 2]).unwrap();
        let b = IntegerPartition::new(vec![2, 1, 1]).unwrap();
        assert!(covers(&a, &b));
        assert!(!covers(&a, &a));
        let c = IntegerPartition::new(vec![3, 1]).unwrap();
        assert!(covers(&c, &a));
    }

    #[test]
    fn characterization_matches_definition_exhaustively() {
        for n in 1..=10usize {
            let all = all_partitions_of(n);
            for qp in &all {
                for q in &all {
                    assert_eq!(
                        covers(qp, q),
                        covers_def(qp, q, &all),
                        "n={n} qp={qp} q={q}"
                    );
                }
            }
        }
    }

    #[test]
    fn successor_examples() {
        let bottom = IntegerPartition::singletons(3);
        assert_eq!(
            covering_successors(&bottom),
            vec![IntegerPartition::new(vec![2, 1]).unwrap()]
        );
        assert!(covering_successors(&IntegerPartition::whole(5)).is_empty());
        assert_eq!(
            covering_predecessors(&IntegerPartition::new(vec![2, 1]).unwrap()),
            vec![IntegerPartition::singletons(3)]
        );
    }

    #[test]
    fn longest_chain_matches_formula() {
        assert_eq!(longest_chain(1), 0);
        assert_eq!(longest_chain(3), 2);
        assert_eq!(longest_chain(6), 8);
        for n in 1..=14 {
            assert_eq!(longest_chain(n), l1_formula(n as u64), "n={n}");
        }
    }

    #[test]
    fn maximum_chain_is_a_covering_chain() {
        for n in [6usize, 9, 12] {
            let (len, chain) = longest_chain_with_witness(n);
            assert_eq!(chain.len() as u64, len + 1);
            for w in chain.windows(2) {
                assert!(covers(&w[1], &w[0]));
            }
            assert_eq!(chain.first().unwrap(), &IntegerPartition::singletons(n));
            assert_eq!(chain.last().unwrap(), &IntegerPartition::whole(n));
        }
    }

    #[test]
    fn reachability_examples() {
        let q3 = IntegerPartition::singletons(3);
        let w3 = IntegerPartition::whole(3);
        assert!(deviation_reaches(&q3, &w3, 3).unwrap());
        let a = IntegerPartition::new(vec![2, 2]).unwrap();
        let b = IntegerPartition::new(vec![3, 1]).unwrap();
        assert!(deviation_reaches(&a, &b, 4).unwrap());
        assert!(!deviation_reaches(&b, &a, 4).unwrap());
    }

    #[test]
    fn reachability_iff_dominance_small() {
        for n in 2..=6usize {
            let all = all_partitions_of(n);
            for q in &all {
                for qp in &all {
                    assert_eq!(
                        deviation_reaches(q, qp, n).unwrap(),
                        dominates(qp, q),
                        "n={n} q={q} qp={qp}"
                    );
                }
            }
        }
    }

    #[test]
    fn decomposition_staircase() {
        // Moving out of the size-2 group into the size-5 group decomposes
        // into three covering steps.
        let q = IntegerPartition::new(vec![5, 4, 3, 2]).unwrap();
        let chain = decompose_to_covering_steps(&q, 3, 0).unwrap();
        assert_eq!(chain.len(), 4);
        for w in chain.windows(2) {
            assert!(covers(&w[1], &w[0]));
        }
        assert_eq!(
            chain.last().unwrap(),
            &IntegerPartition::new(vec![6, 4, 3, 1]).unwrap()
        );

        // Equal sizes: a single covering step.
        let q = IntegerPartition::new(vec![3, 3, 1]).unwrap();
        let chain = decompose_to_covering_steps(&q, 1, 0).unwrap();
        assert_eq!(chain.len(), 2);

        // Adjacent sizes in sorted order: a single step.
        let q = IntegerPartition::new(vec![4, 3]).unwrap();
        let chain = decompose_to_covering_steps(&q, 1, 0).unwrap();
        assert_eq!(chain.len(), 2);
    }

    #[test]
    fn two_deviation_effects_are_dominance_steps() {
        // Every 2-deviation's vector effect on the conflict-free uniform
        // game is reachable by unilateral deviations alone.
        for n in 3..=6usize {
            let game = Game::uniform(n, &[]).unwrap();
            let view = game.view();
            for p in FeasiblePartitions::new(&view) {
                let before = IntegerPartition::from_vector(&p.partition_vector());
                for d in crate::dynamics::enumerate_deviations_view(&view, &p, 2) {
                    let next = crate::dynamics::apply_deviation_view(&view, &p, &d).unwrap();
                    let after = IntegerPartition::from_vector(&next.partition_vector());
                    assert!(dominates(&after, &before), "n={n} {p} -> {next}");
                }
            }
        }
    }
}
