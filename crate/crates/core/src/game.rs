//! Domain types: weights, games, partitions, partition vectors, utilities.
//!
//! Nodes are dense 0-based integers. Weights live in `Z ∪ {-inf, N}` where
//! `N` is a symbolic "best friend" weight resolved per game to a concrete
//! integer larger than `n` times any finite weight magnitude.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::de::Error as _;
use serde_json::{json, Value};

use crate::{Error, Result};

/// An edge weight: a finite integer, a conflict (`-inf`), or the symbolic
/// best-friend weight `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Weight {
    NegInfinity,
    Finite(i64),
    BestFriend,
}

impl Weight {
    pub fn is_conflict(self) -> bool {
        self == Weight::NegInfinity
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::NegInfinity => write!(f, "-inf"),
            Weight::Finite(w) => write!(f, "{w}"),
            Weight::BestFriend => write!(f, "N"),
        }
    }
}

/// A utility value: a finite integer or `-inf`. Addition is absorbing in
/// `-inf`; finite arithmetic is exact (i128 is ample at desk scale).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtendedUtility {
    NegInfinity,
    Finite(i128),
}

impl ExtendedUtility {
    pub const ZERO: ExtendedUtility = ExtendedUtility::Finite(0);

    pub fn finite(self) -> Option<i128> {
        match self {
            ExtendedUtility::Finite(v) => Some(v),
            ExtendedUtility::NegInfinity => None,
        }
    }

    pub fn add(self, other: ExtendedUtility) -> ExtendedUtility {
        match (self, other) {
            (ExtendedUtility::Finite(a), ExtendedUtility::Finite(b)) => {
                ExtendedUtility::Finite(a + b)
            }
            _ => ExtendedUtility::NegInfinity,
        }
    }
}

impl PartialOrd for ExtendedUtility {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedUtility {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedUtility::NegInfinity, ExtendedUtility::NegInfinity) => Ordering::Equal,
            (ExtendedUtility::NegInfinity, _) => Ordering::Less,
            (_, ExtendedUtility::NegInfinity) => Ordering::Greater,
            (ExtendedUtility::Finite(a), ExtendedUtility::Finite(b)) => a.cmp(b),
        }
    }
}

impl std::ops::Add for ExtendedUtility {
    type Output = ExtendedUtility;
    fn add(self, rhs: Self) -> Self {
        ExtendedUtility::add(self, rhs)
    }
}

impl std::iter::Sum for ExtendedUtility {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ExtendedUtility::ZERO, ExtendedUtility::add)
    }
}

impl fmt::Display for ExtendedUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedUtility::NegInfinity => write!(f, "-inf"),
            ExtendedUtility::Finite(v) => write!(f, "{v}"),
        }
    }
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// A symmetric coloring game: `n` nodes, weights defaulting to 0 for absent
/// pairs, and a declared weight set `W`.
#[derive(Debug, Clone)]
pub struct Game {
    n: usize,
    weights: HashMap<(usize, usize), Weight>,
    weight_set: BTreeSet<Weight>,
}

impl Game {
    pub fn new(n: usize, weight_set: impl IntoIterator<Item = Weight>) -> Result<Game> {
        if n == 0 {
            return Err(Error::InvalidGame("n must be >= 1".into()));
        }
        Ok(Game {
            n,
            weights: HashMap::new(),
            weight_set: weight_set.into_iter().collect(),
        })
    }

    /// A uniform game: every pair is a unit friend except the listed
    /// conflict edges.
    pub fn uniform(n: usize, conflicts: &[(usize, usize)]) -> Result<Game> {
        let mut g = Game::new(n, [Weight::NegInfinity, Weight::Finite(1)])?;
        for u in 0..n {
            for v in u + 1..n {
                g.set_weight(u, v, Weight::Finite(1))?;
            }
        }
        for &(u, v) in conflicts {
            g.set_weight(u, v, Weight::NegInfinity)?;
        }
        Ok(g)
    }

    pub fn set_weight(&mut self, u: usize, v: usize, w: Weight) -> Result<()> {
        if u == v {
            return Err(Error::InvalidGame(format!("loop at node {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::UnknownNode(u.max(v)));
        }
        if w != Weight::Finite(0) && !self.weight_set.contains(&w) {
            return Err(Error::InvalidGame(format!(
                "weight {w} not in declared weight set"
            )));
        }
        // Explicit zeros stay stored: indifferent edges are declared
        // structure, distinct from absent pairs that merely default to 0.
        self.weights.insert(key(u, v), w);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, u: usize, v: usize) -> Weight {
        debug_assert!(u != v);
        *self.weights.get(&key(u, v)).unwrap_or(&Weight::Finite(0))
    }

    pub fn weight_set(&self) -> &BTreeSet<Weight> {
        &self.weight_set
    }

    pub fn stored_edges(&self) -> impl Iterator<Item = (usize, usize, Weight)> + '_ {
        self.weights.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    /// Resolves the symbolic best-friend weight `N` to a concrete integer:
    /// `n * (max finite |w| over stored weights, or 1 if none) + 1`.
    pub fn resolve_bestfriend(&self) -> i64 {
        let max_abs = self
            .weights
            .values()
            .filter_map(|w| match w {
                Weight::Finite(v) => Some(v.unsigned_abs()),
                _ => None,
            })
            .max();
        let base = match max_abs {
            Some(m) => m as i64,
            None => 1,
        };
        self.n as i64 * base + 1
    }

    /// The friendship graph: adjacency lists over edges with positive
    /// resolved weight.
    pub fn friendship_graph(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(u, v), &w) in &self.weights {
            let positive = match w {
                Weight::Finite(x) => x > 0,
                Weight::BestFriend => true,
                Weight::NegInfinity => false,
            };
            if positive {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        adj
    }

    /// All unordered twin pairs: `w(u,u') > 0` and identical weights to every
    /// third node. Resolved weights cannot collide with the symbolic `N`
    /// (it exceeds every stored magnitude), so comparing resolved rows is
    /// exact.
    pub fn find_twins(&self) -> Vec<(usize, usize)> {
        let view = self.view();
        let n = self.n;
        let mut twins = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if view.incompatible(u, v) || view.weight(u, v) <= 0 {
                    continue;
                }
                let same = (0..n).filter(|&x| x != u && x != v).all(|x| {
                    view.weight(u, x) == view.weight(v, x)
                        && view.is_conflict(u, x) == view.is_conflict(v, x)
                });
                if same {
                    twins.push((u, v));
                }
            }
        }
        twins
    }

    pub fn view(&self) -> ResolvedView {
        let n = self.n;
        let big = self.resolve_bestfriend();
        let mut w = vec![0i64; n * n];
        let mut conflict = vec![false; n * n];
        for (&(u, v), &wt) in &self.weights {
            let (val, conf) = match wt {
                Weight::Finite(x) => (x, false),
                Weight::BestFriend => (big, false),
                Weight::NegInfinity => (0, true),
            };
            for (a, b) in [(u, v), (v, u)] {
                w[a * n + b] = val;
                conflict[a * n + b] = conf;
            }
        }
        ResolvedView { n, w, conflict }
    }

    pub fn to_json(&self) -> Value {
        game_json(self.n, &self.weight_set, &self.weights, false)
    }

    pub fn from_json(v: &Value) -> Result<Game> {
        let (n, weight_set, entries, directed) = parse_game_json(v)?;
        if directed {
            return Err(Error::Malformed(
                "field \"directed\" is true; use AsymGame".into(),
            ));
        }
        let mut g = Game::new(n, weight_set)?;
        for (u, v, w) in entries {
            g.set_weight(u, v, w)?;
        }
        Ok(g)
    }
}

/// A directed coloring game: `w(u,v)` and `w(v,u)` may differ.
#[derive(Debug, Clone)]
pub struct AsymGame {
    n: usize,
    weights: HashMap<(usize, usize), Weight>,
    weight_set: BTreeSet<Weight>,
}

impl AsymGame {
    pub fn new(n: usize, weight_set: impl IntoIterator<Item = Weight>) -> Result<AsymGame> {
        if n == 0 {
            return Err(Error::InvalidGame("n must be >= 1".into()));
        }
        Ok(AsymGame {
            n,
            weights: HashMap::new(),
            weight_set: weight_set.into_iter().collect(),
        })
    }

    /// Sets the directed weight from `u` to `v`.
    pub fn set_weight(&mut self, u: usize, v: usize, w: Weight) -> Result<()> {
        if u == v {
            return Err(Error::InvalidGame(format!("loop at node {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::UnknownNode(u.max(v)));
        }
        if w != Weight::Finite(0) && !self.weight_set.contains(&w) {
            return Err(Error::InvalidGame(format!(
                "weight {w} not in declared weight set"
            )));
        }
        self.weights.insert((u, v), w);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, u: usize, v: usize) -> Weight {
        *self.weights.get(&(u, v)).unwrap_or(&Weight::Finite(0))
    }

    pub fn resolve_bestfriend(&self) -> i64 {
        let max_abs = self
            .weights
            .values()
            .filter_map(|w| match w {
                Weight::Finite(v) => Some(v.unsigned_abs()),
                _ => None,
            })
            .max();
        self.n as i64 * max_abs.map_or(1, |m| m as i64) + 1
    }

    pub fn view(&self) -> ResolvedView {
        let n = self.n;
        let big = self.resolve_bestfriend();
        let mut w = vec![0i64; n * n];
        let mut conflict = vec![false; n * n];
        for (&(u, v), &wt) in &self.weights {
            match wt {
                Weight::Finite(x) => w[u * n + v] = x,
                Weight::BestFriend => w[u * n + v] = big,
                Weight::NegInfinity => conflict[u * n + v] = true,
            }
        }
        ResolvedView { n, w, conflict }
    }

    pub fn to_json(&self) -> Value {
        game_json(self.n, &self.weight_set, &self.weights, true)
    }

    pub fn from_json(v: &Value) -> Result<AsymGame> {
        let (n, weight_set, entries, directed) = parse_game_json(v)?;
        if !directed {
            return Err(Error::Malformed(
                "field \"directed\" missing or false; use Game".into(),
            ));
        }
        let mut g = AsymGame::new(n, weight_set)?;
        for (u, v, w) in entries {
            g.set_weight(u, v, w)?;
        }
        Ok(g)
    }
}

/// A game with `N` resolved and weights laid out densely; the shared input
/// of every search and dynamics loop. Covers both symmetric and directed
/// games (the symmetric view stores each weight twice).
#[derive(Debug, Clone)]
pub struct ResolvedView {
    n: usize,
    w: Vec<i64>,
    conflict: Vec<bool>,
}

impl ResolvedView {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_conflict(&self, u: usize, v: usize) -> bool {
        self.conflict[u * self.n + v]
    }

    /// Conflict in either direction; used to prune infeasible groups.
    #[inline]
    pub fn incompatible(&self, u: usize, v: usize) -> bool {
        self.conflict[u * self.n + v] || self.conflict[v * self.n + u]
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> i64 {
        self.w[u * self.n + v]
    }

    /// Utility of `u` inside the given group (which must contain `u`).
    pub fn utility_in<'a>(&self, u: usize, group: impl IntoIterator<Item = &'a usize>) -> ExtendedUtility {
        let mut total = 0i128;
        for &v in group {
            if v == u {
                continue;
            }
            if self.is_conflict(u, v) {
                return ExtendedUtility::NegInfinity;
            }
            total += self.weight(u, v) as i128;
        }
        ExtendedUtility::Finite(total)
    }

    /// Largest positive resolved weight, or 0 if none.
    pub fn max_positive_weight(&self) -> i64 {
        self.w.iter().copied().filter(|&x| x > 0).max().unwrap_or(0)
    }

    pub fn is_symmetric(&self) -> bool {
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.w[u * self.n + v] != self.w[v * self.n + u]
                    || self.conflict[u * self.n + v] != self.conflict[v * self.n + u]
                {
                    return false;
                }
            }
        }
        true
    }

    /// True when every non-conflict pair has the same single positive weight.
    pub fn is_uniform(&self) -> bool {
        let mut pos = None;
        for u in 0..self.n {
            for v in u + 1..self.n {
                if self.incompatible(u, v) {
                    continue;
                }
                let w = self.weight(u, v);
                if w <= 0 {
                    return false;
                }
                match pos {
                    None => pos = Some(w),
                    Some(p) if p != w => return false,
                    _ => {}
                }
            }
        }
        true
    }

    pub fn has_conflicts(&self) -> bool {
        self.conflict.iter().any(|&c| c)
    }
}

/// A partition of the nodes into disjoint groups, held in canonical form:
/// groups sorted by (size descending, minimum element ascending), nodes
/// sorted within each group. Empty groups are dropped; deviation search
/// materializes a fresh empty target on demand.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds a partition from groups, validating disjoint cover of `0..n`,
    /// and canonicalizes.
    pub fn new(n: usize, groups: Vec<Vec<usize>>) -> Result<Partition> {
        let mut seen = vec![false; n];
        for g in &groups {
            for &u in g {
                if u >= n {
                    return Err(Error::UnknownNode(u));
                }
                if seen[u] {
                    return Err(Error::InvalidPartition(format!(
                        "node {u} appears in two groups"
                    )));
                }
                seen[u] = true;
            }
        }
        if let Some(u) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!("node {u} not covered")));
        }
        let mut p = Partition {
            groups: groups.into_iter().filter(|g| !g.is_empty()).collect(),
        };
        p.canonicalize_in_place();
        Ok(p)
    }

    pub fn singletons(n: usize) -> Partition {
        Partition {
            groups: (0..n).map(|u| vec![u]).collect(),
        }
    }

    /// The deterministic canonical form. Idempotent; two partitions are equal
    /// as set-partitions iff their canonical forms are identical.
    pub fn canonicalize(mut self) -> Partition {
        self.canonicalize_in_place();
        self
    }

    fn canonicalize_in_place(&mut self) {
        self.groups.retain(|g| !g.is_empty());
        for g in &mut self.groups {
            g.sort_unstable();
        }
        self.groups
            .sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    pub fn group_of(&self, u: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.binary_search(&u).is_ok())
    }

    /// Per-node group index lookup table.
    pub fn membership(&self, n: usize) -> Vec<usize> {
        let mut m = vec![usize::MAX; n];
        for (i, g) in self.groups.iter().enumerate() {
            for &u in g {
                m[u] = i;
            }
        }
        m
    }

    /// The partition vector: `lambda[s]` counts groups of size `s`.
    pub fn partition_vector(&self) -> PartitionVector {
        let n = self.n();
        let mut lambda = vec![0usize; n + 1];
        for g in &self.groups {
            lambda[g.len()] += 1;
        }
        PartitionVector { lambda }
    }

    /// Compact encoding for hashing/memoization.
    pub fn encode(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.n() + self.groups.len());
        for g in &self.groups {
            out.push(u32::MAX);
            out.extend(g.iter().map(|&u| u as u32));
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, g) in self.groups.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(
                f,
                "{{{}}}",
                g.iter()
                    .map(|u| u.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )?;
        }
        write!(f, "]")
    }
}

/// Counts of groups per size, compared lexicographically from the largest
/// size down (`lambda[n], ..., lambda[1]`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionVector {
    lambda: Vec<usize>,
}

impl PartitionVector {
    pub fn from_counts(lambda: Vec<usize>) -> PartitionVector {
        PartitionVector { lambda }
    }

    /// `lambda[s]` for `1 <= s <= n`; 0 outside.
    pub fn count(&self, size: usize) -> usize {
        self.lambda.get(size).copied().unwrap_or(0)
    }

    pub fn max_size(&self) -> usize {
        self.lambda.len().saturating_sub(1)
    }

    /// `sum_s s * lambda[s]`, the number of nodes.
    pub fn total_nodes(&self) -> usize {
        self.lambda
            .iter()
            .enumerate()
            .map(|(s, &c)| s * c)
            .sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.lambda
    }
}

impl PartialOrd for PartitionVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PartitionVector {
    fn cmp(&self, other: &Self) -> Ordering {
        let top = self.max_size().max(other.max_size());
        for s in (1..=top).rev() {
            match self.count(s).cmp(&other.count(s)) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

/// Utility of node `u` under partition `p`.
pub fn utility(game: &Game, p: &Partition, u: usize) -> Result<ExtendedUtility> {
    if u >= game.n() {
        return Err(Error::UnknownNode(u));
    }
    let view = game.view();
    let gi = p
        .group_of(u)
        .ok_or_else(|| Error::InvalidPartition(format!("node {u} not in partition")))?;
    Ok(view.utility_in(u, &p.groups()[gi]))
}

/// Global utility (social welfare): the sum over all nodes.
pub fn global_utility(game: &Game, p: &Partition) -> ExtendedUtility {
    let view = game.view();
    global_utility_view(&view, p)
}

pub fn global_utility_view(view: &ResolvedView, p: &Partition) -> ExtendedUtility {
    let mut total = ExtendedUtility::ZERO;
    for g in p.groups() {
        for &u in g {
            total = total + view.utility_in(u, g);
        }
    }
    total
}

/// Girth of an unweighted graph given as adjacency lists; `None` means
/// acyclic (infinite girth).
pub fn girth(adj: &[Vec<usize>]) -> Option<usize> {
    let n = adj.len();
    let mut best: Option<usize> = None;
    // BFS from each node; a cross/back edge at depths d1, d2 closes a cycle
    // of length d1 + d2 + 1 through the root.
    for root in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        dist[root] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                } else if parent[u] != v {
                    let len = dist[u] + dist[v] + 1;
                    if best.map_or(true, |b| len < b) {
                        best = Some(len);
                    }
                }
            }
        }
    }
    best
}

fn weight_to_json(w: Weight) -> Value {
    match w {
        Weight::NegInfinity => json!("-inf"),
        Weight::BestFriend => json!("N"),
        Weight::Finite(x) => json!(x),
    }
}

fn weight_from_json(v: &Value) -> Result<Weight> {
    match v {
        Value::String(s) if s == "-inf" => Ok(Weight::NegInfinity),
        Value::String(s) if s == "N" => Ok(Weight::BestFriend),
        Value::Number(x) => x
            .as_i64()
            .map(Weight::Finite)
            .ok_or_else(|| Error::Malformed(format!("weight {x} out of i64 range"))),
        other => Err(Error::Malformed(format!(
            "weight must be an integer, \"-inf\" or \"N\", got {other}"
        ))),
    }
}

fn game_json(
    n: usize,
    weight_set: &BTreeSet<Weight>,
    weights: &HashMap<(usize, usize), Weight>,
    directed: bool,
) -> Value {
    let mut entries: Vec<_> = weights.iter().map(|(&(u, v), &w)| (u, v, w)).collect();
    entries.sort();
    let mut obj = json!({
        "v": 1,
        "n": n,
        "weight_set": weight_set.iter().map(|&w| weight_to_json(w)).collect::<Vec<_>>(),
        "weights": entries
            .iter()
            .map(|&(u, v, w)| json!([u, v, weight_to_json(w)]))
            .collect::<Vec<_>>(),
    });
    if directed {
        obj["directed"] = json!(true);
    }
    obj
}

type ParsedGame = (usize, Vec<Weight>, Vec<(usize, usize, Weight)>, bool);

fn parse_game_json(v: &Value) -> Result<ParsedGame> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Malformed("game file must be a JSON object".into()))?;
    match obj.get("v") {
        Some(Value::Number(x)) if x.as_u64() == Some(1) => {}
        Some(other) => {
            return Err(Error::Malformed(format!(
                "unsupported format version \"v\": {other}"
            )))
        }
        None => return Err(Error::Malformed("missing field \"v\"".into())),
    }
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing or non-integer field \"n\"".into()))?
        as usize;
    let weight_set = obj
        .get("weight_set")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed("missing array field \"weight_set\"".into()))?
        .iter()
        .map(weight_from_json)
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    for (i, e) in obj
        .get("weights")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed("missing array field \"weights\"".into()))?
        .iter()
        .enumerate()
    {
        let triple = e.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
            Error::Malformed(format!("weights[{i}] must be a [u, v, w] triple"))
        })?;
        let u = triple[0]
            .as_u64()
            .ok_or_else(|| Error::Malformed(format!("weights[{i}][0] must be a node id")))?
            as usize;
        let v = triple[1]
            .as_u64()
            .ok_or_else(|| Error::Malformed(format!("weights[{i}][1] must be a node id")))?
            as usize;
        entries.push((u, v, weight_from_json(&triple[2])?));
    }
    let directed = obj.get("directed").and_then(Value::as_bool).unwrap_or(false);
    Ok((n, weight_set, entries, directed))
}

/// Parses either game flavor from a JSON value.
pub fn any_game_from_json(v: &Value) -> Result<EitherGame> {
    let (_, _, _, directed) = parse_game_json(v)?;
    if directed {
        Ok(EitherGame::Directed(AsymGame::from_json(v)?))
    } else {
        Ok(EitherGame::Symmetric(Game::from_json(v)?))
    }
}

#[derive(Debug, Clone)]
pub enum EitherGame {
    Symmetric(Game),
    Directed(AsymGame),
}

impl EitherGame {
    pub fn view(&self) -> ResolvedView {
        match self {
            EitherGame::Symmetric(g) => g.view(),
            EitherGame::Directed(g) => g.view(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            EitherGame::Symmetric(g) => g.n(),
            EitherGame::Directed(g) => g.n(),
        }
    }
}

impl serde::Serialize for Game {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Game {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Game, D::Error> {
        let v = Value::deserialize(d)?;
        Game::from_json(&v).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{chaotic4_game, fig1_game, fig1_left, fig3_like};
    use proptest::prelude::*;

    #[test]
    fn bestfriend_resolution() {
        let mut g = Game::new(
            4,
            [
                Weight::NegInfinity,
                Weight::Finite(-4),
                Weight::Finite(2),
                Weight::Finite(6),
                Weight::Finite(7),
            ],
        )
        .unwrap();
        g.set_weight(0, 3, Weight::Finite(7)).unwrap();
        g.set_weight(1, 3, Weight::Finite(6)).unwrap();
        g.set_weight(2, 3, Weight::Finite(2)).unwrap();
        g.set_weight(1, 2, Weight::Finite(-4)).unwrap();
        assert_eq!(g.resolve_bestfriend(), 29);

        let empty = Game::new(5, [Weight::NegInfinity, Weight::BestFriend]).unwrap();
        assert_eq!(empty.resolve_bestfriend(), 6);

        assert_eq!(chaotic4_game().resolve_bestfriend(), 29);
    }

    #[test]
    fn utility_basics() {
        let g = Game::uniform(5, &[(0, 1)]).unwrap();
        let p = Partition::new(5, vec![vec![0], vec![1, 2, 3], vec![4]]).unwrap();
        assert_eq!(utility(&g, &p, 0).unwrap(), ExtendedUtility::Finite(0));
        assert_eq!(utility(&g, &p, 1).unwrap(), ExtendedUtility::Finite(2));
        let bad = Partition::new(5, vec![vec![0, 1], vec![2, 3, 4]]).unwrap();
        assert_eq!(utility(&g, &bad, 0).unwrap(), ExtendedUtility::NegInfinity);
        assert!(utility(&g, &p, 9).is_err());
    }

    #[test]
    fn fig1_utilities() {
        let g = fig1_game();
        let left = fig1_left();
        for u in 0..12 {
            assert_eq!(utility(&g, &left, u).unwrap(), ExtendedUtility::Finite(2));
        }
        assert_eq!(global_utility(&g, &left), ExtendedUtility::Finite(24));
        assert_eq!(left.partition_vector().count(3), 4);
        // Right partition: connectors (0,3,6,9) in one group.
        let right = Partition::new(
            12,
            vec![
                vec![0, 3, 6, 9],
                vec![1, 2],
                vec![4, 5],
                vec![7, 8],
                vec![10, 11],
            ],
        )
        .unwrap();
        for c in [0, 3, 6, 9] {
            assert_eq!(utility(&g, &right, c).unwrap(), ExtendedUtility::Finite(3));
        }
        assert_eq!(global_utility(&g, &right), ExtendedUtility::Finite(20));
    }

    #[test]
    fn global_utility_double_counts_edges() {
        // Every within-group edge weight is counted exactly twice.
        let g = chaotic4_game();
        let view = g.view();
        let p = Partition::new(4, vec![vec![1, 2, 3], vec![0]]).unwrap();
        let mut edge_sum = 0i128;
        for grp in p.groups() {
            for (i, &u) in grp.iter().enumerate() {
                for &v in &grp[i + 1..] {
                    assert!(!view.incompatible(u, v));
                    edge_sum += view.weight(u, v) as i128;
                }
            }
        }
        assert_eq!(
            global_utility(&g, &p),
            ExtendedUtility::Finite(2 * edge_sum)
        );
    }

    #[test]
    fn partition_vector_examples() {
        let singles = Partition::singletons(6);
        let v = singles.partition_vector();
        assert_eq!(v.count(1), 6);
        assert_eq!(v.total_nodes(), 6);
        let one = Partition::new(4, vec![vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(one.partition_vector().count(4), 1);
    }

    #[test]
    fn canonical_form() {
        let p = Partition::new(3, vec![vec![2], vec![1, 0]]).unwrap();
        assert_eq!(p.groups(), &[vec![0, 1], vec![2]]);
        let again = p.clone().canonicalize();
        assert_eq!(p, again);
    }

    #[test]
    fn girth_examples() {
        // Triangle.
        let adj = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
        assert_eq!(girth(&adj), Some(3));
        // Path (tree).
        let adj = vec![vec![1], vec![0, 2], vec![1]];
        assert_eq!(girth(&adj), None);
        // Constructed no-3-stable graph at h=2 contains triangles.
        let g = fig3_like(2);
        assert_eq!(girth(&g.friendship_graph()), Some(3));
    }

    #[test]
    fn twins_examples() {
        // Empty-conflict uniform game: all pairs are twins.
        let g = Game::uniform(4, &[]).unwrap();
        assert_eq!(g.find_twins().len(), 6);
        // Two friends with different enemy sets are not twins.
        let g = Game::uniform(4, &[(0, 2), (1, 3)]).unwrap();
        assert!(!g.find_twins().contains(&(0, 1)));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let g = chaotic4_game();
        let j = g.to_json();
        let back = Game::from_json(&j).unwrap();
        assert_eq!(back.n(), 4);
        assert_eq!(back.weight(0, 3), Weight::Finite(7));
        assert_eq!(back.weight(0, 1), Weight::NegInfinity);

        let bad = json!({"n": 3});
        let err = Game::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("\"v\""));
    }

    proptest! {
        #[test]
        fn canonicalize_is_shuffle_invariant(perm in proptest::sample::subsequence((0..6usize).collect::<Vec<_>>(), 6), split in 1usize..5) {
            let nodes = perm;
            let (a, b) = nodes.split_at(split);
            let p1 = Partition::new(6, vec![a.to_vec(), b.to_vec()]).unwrap();
            let mut a2 = a.to_vec();
            let mut b2 = b.to_vec();
            a2.reverse();
            b2.reverse();
            let p2 = Partition::new(6, vec![b2, a2]).unwrap();
            prop_assert_eq!(p1, p2);
        }

        #[test]
        fn partition_vector_conserves_nodes(groups in proptest::collection::vec(1usize..5, 1..6)) {
            let n: usize = groups.iter().sum();
            let mut next = 0;
            let gs: Vec<Vec<usize>> = groups.iter().map(|&len| {
                let g: Vec<usize> = (next..next + len).collect();
                next += len;
                g
            }).collect();
            let p = Partition::new(n, gs).unwrap();
            prop_assert_eq!(p.partition_vector().total_nodes(), n);
        }
    }
}
