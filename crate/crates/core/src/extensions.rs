//! Overlapping groups (each node holds `q` channel memberships) and
//! hypergraph games with set-valued weights.
//!
//! Conflict pairs never share a group: the weight `-inf` is the modeling
//! axiom that two enemies never pick a common color, so configuration
//! searches range over enemy-free configurations, exactly as partition
//! searches do.

use std::collections::{HashMap, HashSet};

use num::rational::Ratio;
use serde_json::{json, Value};

use crate::dynamics::Scheduler;
use crate::game::{ExtendedUtility, Game, Partition, ResolvedView, Weight};
use crate::{Error, Result, SearchBudget};

pub type Rat = Ratio<i128>;

/// Utility value in the multichannel model: exact rational or `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigUtility {
    NegInfinity,
    Finite(Rat),
}

impl ConfigUtility {
    pub const ZERO: ConfigUtility = ConfigUtility::Finite(Ratio::new_raw(0, 1));

    pub fn finite(self) -> Option<Rat> {
        match self {
            ConfigUtility::Finite(r) => Some(r),
            ConfigUtility::NegInfinity => None,
        }
    }

    fn add(self, other: ConfigUtility) -> ConfigUtility {
        match (self, other) {
            (ConfigUtility::Finite(a), ConfigUtility::Finite(b)) => ConfigUtility::Finite(a + b),
            _ => ConfigUtility::NegInfinity,
        }
    }
}

impl PartialOrd for ConfigUtility {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ConfigUtility {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (ConfigUtility::NegInfinity, ConfigUtility::NegInfinity) => Equal,
            (ConfigUtility::NegInfinity, _) => Less,
            (_, ConfigUtility::NegInfinity) => Greater,
            (ConfigUtility::Finite(a), ConfigUtility::Finite(b)) => a.cmp(b),
        }
    }
}

/// The per-pair utility shape `h(g, w)`: how much sharing `g` groups with a
/// `w`-weighted peer is worth. All families satisfy `h(0,.) = 0`,
/// `h(.,0) = 0`, `h(1,w) = w`, `w -> h(g,w)` non-decreasing and
/// `g -> w*h(g,w)` non-decreasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HFunction {
    /// `h(g,w) = w` once any group is shared.
    Indicator,
    /// `h(g,w) = (1 + eps*(g-1)) * w` for `g >= 1`, with an exact rational
    /// `eps`; comparisons never fall to floating-point noise.
    LinearEps { num: i64, den: i64 },
    /// `h(g,w) = min(g, cap) * w`; the concave custom family used by the
    /// optimum-transform checks.
    Capped { cap: u32 },
}

impl HFunction {
    pub fn linear_eps(num: i64, den: i64) -> HFunction {
        assert!(den > 0 && num >= 0);
        HFunction::LinearEps { num, den }
    }

    pub fn eval(&self, g: u32, w: i64) -> Rat {
        let out = if g == 0 || w == 0 {
            Rat::from_integer(0)
        } else {
            match self {
                HFunction::Indicator => Rat::from_integer(w as i128),
                HFunction::LinearEps { num, den } => {
                    let eps = Rat::new(*num as i128, *den as i128);
                    (Rat::from_integer(1) + eps * Rat::from_integer((g - 1) as i128))
                        * Rat::from_integer(w as i128)
                }
                HFunction::Capped { cap } => {
                    Rat::from_integer(g.min(*cap) as i128 * w as i128)
                }
            }
        };
        debug_assert!(g != 1 || out == Rat::from_integer(w as i128));
        out
    }

    /// Integer value, for constructions requiring integral weights.
    pub fn eval_int(&self, g: u32, w: i64) -> Result<i64> {
        let r = self.eval(g, w);
        if r.is_integer() {
            Ok(*r.numer() as i64)
        } else {
            Err(Error::InvalidParam(format!(
                "h({g},{w}) = {r} is not an integer"
            )))
        }
    }

    /// True when `g -> h(g,w)` has non-increasing increments.
    pub fn is_concave_on(&self, max_g: u32, w: i64) -> bool {
        let mut prev: Option<Rat> = None;
        for g in 1..=max_g {
            let inc = self.eval(g, w) - self.eval(g - 1, w);
            if let Some(p) = prev {
                if inc > p {
                    return false;
                }
            }
            prev = Some(inc);
        }
        true
    }
}

/// A multiset of groups where every node appears in exactly `q` of them
/// (padded with singletons). Canonical form sorts groups by size descending
/// then contents; duplicate groups are meaningful (two shared channels).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    q: usize,
    groups: Vec<Vec<usize>>,
}

impl Configuration {
    /// Pads with singletons until every node sits in exactly `q` groups.
    pub fn from_groups(n: usize, q: usize, groups: Vec<Vec<usize>>) -> Configuration {
        let mut groups: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
        let mut count = vec![0usize; n];
        for g in &groups {
            for &u in g {
                count[u] += 1;
            }
        }
        for u in 0..n {
            assert!(count[u] <= q, "node {u} in more than q groups");
            for _ in count[u]..q {
                groups.push(vec![u]);
            }
        }
        let mut c = Configuration { n, q, groups };
        c.canonicalize();
        c
    }

    pub fn singletons(n: usize, q: usize) -> Configuration {
        Configuration::from_groups(n, q, Vec::new())
    }

    fn canonicalize(&mut self) {
        for g in &mut self.groups {
            g.sort_unstable();
        }
        self.groups
            .sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Group indices containing `u`.
    pub fn channels_of(&self, u: usize) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.binary_search(&u).is_ok())
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of groups shared by `u` and `v` (multiset count).
    pub fn shared(&self, u: usize, v: usize) -> u32 {
        self.groups
            .iter()
            .filter(|g| g.binary_search(&u).is_ok() && g.binary_search(&v).is_ok())
            .count() as u32
    }

    /// The underlying partition when `q = 1`.
    pub fn as_partition(&self) -> Result<Partition> {
        if self.q != 1 {
            return Err(Error::InvalidParam("not a single-channel configuration".into()));
        }
        Partition::new(self.n, self.groups.clone())
    }

    pub fn to_json(&self) -> Value {
        let channels: Vec<Vec<usize>> = (0..self.n).map(|u| self.channels_of(u)).collect();
        json!({
            "v": 1,
            "n": self.n,
            "q": self.q,
            "channels": channels,
        })
    }

    pub fn from_json(v: &Value) -> Result<Configuration> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Malformed("configuration must be an object".into()))?;
        if obj.get("v").and_then(Value::as_u64) != Some(1) {
            return Err(Error::Malformed("missing or unsupported field \"v\"".into()));
        }
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("missing field \"n\"".into()))? as usize;
        let q = obj
            .get("q")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("missing field \"q\"".into()))? as usize;
        let channels = obj
            .get("channels")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("missing array field \"channels\"".into()))?;
        if channels.len() != n {
            return Err(Error::Malformed("\"channels\" must list every node".into()));
        }
        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for (u, gs) in channels.iter().enumerate() {
            let gs = gs
                .as_array()
                .ok_or_else(|| Error::Malformed(format!("channels[{u}] must be an array")))?;
            if gs.len() != q {
                return Err(Error::Malformed(format!(
                    "channels[{u}] must list exactly q={q} group ids"
                )));
            }
            for g in gs {
                let gid = g
                    .as_u64()
                    .ok_or_else(|| Error::Malformed(format!("channels[{u}] has a non-integer id")))?
                    as usize;
                members.entry(gid).or_default().push(u);
            }
        }
        Ok(Configuration::from_groups(
            n,
            q,
            members.into_values().collect(),
        ))
    }
}

/// Utility of `u` under configuration `c`: the sum over peers of
/// `h(shared groups, weight)`; `-inf` once any group is shared with an
/// enemy.
pub fn config_utility(game: &Game, h: &HFunction, c: &Configuration, u: usize) -> Result<ConfigUtility> {
    if u >= game.n() {
        return Err(Error::UnknownNode(u));
    }
    Ok(config_utility_view(&game.view(), h, c, u))
}

pub fn config_utility_view(
    view: &ResolvedView,
    h: &HFunction,
    c: &Configuration,
    u: usize,
) -> ConfigUtility {
    let mut total = ConfigUtility::ZERO;
    for v in 0..view.n() {
        if v == u {
            continue;
        }
        let g = c.shared(u, v);
        if g == 0 {
            continue;
        }
        if view.is_conflict(u, v) {
            return ConfigUtility::NegInfinity;
        }
        total = total.add(ConfigUtility::Finite(h.eval(g, view.weight(u, v))));
    }
    total
}

pub fn config_global_utility(view: &ResolvedView, h: &HFunction, c: &Configuration) -> ConfigUtility {
    (0..view.n()).fold(ConfigUtility::ZERO, |acc, u| {
        acc.add(config_utility_view(view, h, c, u))
    })
}

/// Streams every enemy-free configuration with `q` channels, canonical and
/// deduplicated, via restricted-growth enumeration over the `q*n` channel
/// slots. Returns the number deduplicated configurations visited.
fn for_each_configuration(
    view: &ResolvedView,
    q: usize,
    budget: SearchBudget,
    mut f: impl FnMut(&Configuration) -> bool,
) -> Result<u64> {
    let n = view.n();
    let slots = n * q;

    let mut assign: Vec<Vec<usize>> = Vec::new(); // group -> slots
    let mut seen: HashSet<Vec<Vec<usize>>> = HashSet::new();
    let mut examined = 0u64;

    fn groups_key(n: usize, q: usize, assign: &[Vec<usize>]) -> Configuration {
        let groups: Vec<Vec<usize>> = assign
            .iter()
            .map(|g| g.iter().map(|&s| s / q).collect())
            .collect();
        Configuration::from_groups(n, q, groups)
    }

    fn rec(
        view: &ResolvedView,
        q: usize,
        slot: usize,
        slots: usize,
        assign: &mut Vec<Vec<usize>>,
        seen: &mut HashSet<Vec<Vec<usize>>>,
        examined: &mut u64,
        budget: &SearchBudget,
        f: &mut impl FnMut(&Configuration) -> bool,
    ) -> Result<bool> {
        if slot == slots {
            *examined += 1;
            if *examined > budget.max_states {
                return Err(Error::SearchTooLarge {
                    examined: *examined,
                    budget: budget.max_states,
                });
            }
            let c = groups_key(view.n(), q, assign);
            if seen.insert(c.groups.clone()) && f(&c) {
                return Ok(true);
            }
            return Ok(false);
        }
        let node = slot / q;
        let used = assign.len();
        for g in 0..=used {
            if g < used {
                let ok = assign[g].iter().all(|&s| {
                    let other = s / q;
                    other != node && !view.incompatible(node, other)
                });
                if !ok {
                    continue;
                }
                assign[g].push(slot);
            } else {
                assign.push(vec![slot]);
            }
            let done = rec(view, q, slot + 1, slots, assign, seen, examined, budget, f)?;
            if g < used {
                assign[g].pop();
            } else {
                assign.pop();
            }
            if done {
                return Ok(true);
            }
        }
        Ok(false)
    }

    rec(
        view,
        q,
        0,
        slots,
        &mut assign,
        &mut seen,
        &mut examined,
        &budget,
        &mut f,
    )?;
    Ok(examined)
}

/// Candidate multichannel moves for one node: replace one membership with an
/// existing group or a fresh singleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McTarget {
    Group(usize),
    New,
}

fn mc_apply(c: &Configuration, node: usize, from_group: usize, target: McTarget) -> Configuration {
    let mut groups = c.groups.clone();
    let pos = groups[from_group]
        .binary_search(&node)
        .expect("node in source group");
    groups[from_group].remove(pos);
    match target {
        McTarget::Group(t) => {
            groups[t].push(node);
        }
        McTarget::New => groups.push(vec![node]),
    }
    Configuration::from_groups(c.n, c.q, groups)
}

fn mc_candidates(c: &Configuration, node: usize) -> Vec<(usize, McTarget)> {
    let mut out = Vec::new();
    for from in c.channels_of(node) {
        for (t, g) in c.groups.iter().enumerate() {
            if g.binary_search(&node).is_err() {
                out.push((from, McTarget::Group(t)));
            }
        }
        out.push((from, McTarget::New));
    }
    out
}

#[derive(Debug, Clone)]
pub struct McStep {
    pub step: usize,
    pub node: usize,
    pub utility_before: ConfigUtility,
    pub utility_after: ConfigUtility,
    pub global_before: ConfigUtility,
    pub global_after: ConfigUtility,
}

#[derive(Debug, Clone)]
pub struct McTrace {
    pub steps: Vec<McStep>,
    pub stable: bool,
    pub final_config: Configuration,
}

#[derive(Debug, Clone)]
pub struct McOpts {
    pub max_steps: usize,
    pub initial: Option<Configuration>,
}

impl Default for McOpts {
    fn default() -> Self {
        McOpts {
            max_steps: 100_000,
            initial: None,
        }
    }
}

/// Improvement dynamics over configurations, one membership swap per step;
/// the global utility strictly increases every step, so the loop always
/// reports `stable` within the configuration space.
pub fn run_multichannel_dynamics(
    game: &Game,
    h: &HFunction,
    q: usize,
    scheduler: Scheduler,
    opts: &McOpts,
) -> Result<McTrace> {
    if q == 0 {
        return Err(Error::InvalidParam("q must be >= 1".into()));
    }
    let view = game.view();
    let mut c = opts
        .initial
        .clone()
        .unwrap_or_else(|| Configuration::singletons(view.n(), q));
    let mut rng = match scheduler {
        Scheduler::Random(seed) => {
            use rand::SeedableRng;
            Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed))
        }
        _ => None,
    };
    let mut steps = Vec::new();
    for step in 0..opts.max_steps {
        let mut moves: Vec<(usize, usize, McTarget, ConfigUtility, ConfigUtility)> = Vec::new();
        'nodes: for node in 0..view.n() {
            let before = config_utility_view(&view, h, &c, node);
            for (from, target) in mc_candidates(&c, node) {
                let next = mc_apply(&c, node, from, target);
                let after = config_utility_view(&view, h, &next, node);
                if after > before {
                    moves.push((node, from, target, before, after));
                    if matches!(scheduler, Scheduler::FirstLex | Scheduler::MinCoalition) {
                        break 'nodes;
                    }
                }
            }
        }
        if moves.is_empty() {
            return Ok(McTrace {
                steps,
                stable: true,
                final_config: c,
            });
        }
        let idx = match (&scheduler, &mut rng) {
            (Scheduler::Random(_), Some(r)) => {
                use rand::Rng;
                r.gen_range(0..moves.len())
            }
            (Scheduler::MaxUtilityGain, _) => moves
                .iter()
                .enumerate()
                .max_by(|(i, a), (j, b)| {
                    gain(a).cmp(&gain(b)).then(j.cmp(i))
                })
                .map(|(i, _)| i)
                .unwrap(),
            _ => 0,
        };
        let (node, from, target, before, after) = moves[idx];
        let global_before = config_global_utility(&view, h, &c);
        let next = mc_apply(&c, node, from, target);
        let global_after = config_global_utility(&view, h, &next);
        assert!(
            global_after > global_before,
            "global utility must strictly increase"
        );
        steps.push(McStep {
            step,
            node,
            utility_before: before,
            utility_after: after,
            global_before,
            global_after,
        });
        c = next;
    }
    Ok(McTrace {
        steps,
        stable: false,
        final_config: c,
    })
}

fn gain(m: &(usize, usize, McTarget, ConfigUtility, ConfigUtility)) -> Rat {
    match (m.4.finite(), m.3.finite()) {
        (Some(a), Some(b)) => a - b,
        _ => Rat::from_integer(i64::MIN as i128),
    }
}

/// A coalition multichannel deviation: every member swaps exactly one
/// membership to the one common target.
fn config_breaks(
    view: &ResolvedView,
    h: &HFunction,
    c: &Configuration,
    k: usize,
) -> bool {
    let n = view.n();
    let mut coalition: Vec<usize> = Vec::new();
    fn rec(
        view: &ResolvedView,
        h: &HFunction,
        c: &Configuration,
        k: usize,
        from: usize,
        coalition: &mut Vec<usize>,
    ) -> bool {
        if !coalition.is_empty() && coalition_improves(view, h, c, coalition) {
            return true;
        }
        if coalition.len() == k {
            return false;
        }
        for u in from..view.n() {
            coalition.push(u);
            if rec(view, h, c, k, u + 1, coalition) {
                coalition.pop();
                return true;
            }
            coalition.pop();
        }
        false
    }
    let _ = n;
    rec(view, h, c, k, 0, &mut coalition)
}

fn coalition_improves(
    view: &ResolvedView,
    h: &HFunction,
    c: &Configuration,
    coalition: &[usize],
) -> bool {
    // Targets: any existing group free of coalition members, or a fresh one.
    let mut targets: Vec<Option<usize>> = c
        .groups
        .iter()
        .enumerate()
        .filter(|(_, g)| coalition.iter().all(|u| g.binary_search(u).is_err()))
        .map(|(i, _)| Some(i))
        .collect();
    targets.push(None);
    let before: Vec<ConfigUtility> = coalition
        .iter()
        .map(|&u| config_utility_view(view, h, c, u))
        .collect();
    let slots: Vec<Vec<usize>> = coalition.iter().map(|&u| c.channels_of(u)).collect();
    for target in targets {
        // Each member drops one membership; try all combinations.
        let mut choice = vec![0usize; coalition.len()];
        'combos: loop {
            let mut groups = c.groups.clone();
            for (i, &u) in coalition.iter().enumerate() {
                let from = slots[i][choice[i]];
                let pos = groups[from].binary_search(&u).unwrap();
                groups[from].remove(pos);
            }
            match target {
                Some(t) => groups[t].extend(coalition.iter().copied()),
                None => groups.push(coalition.to_vec()),
            }
            let next = Configuration::from_groups(c.n, c.q, groups);
            let ok = coalition.iter().enumerate().all(|(i, &u)| {
                config_utility_view(view, h, &next, u) > before[i]
            });
            if ok {
                return true;
            }
            // Advance the slot-choice odometer.
            for i in 0..choice.len() {
                choice[i] += 1;
                if choice[i] < slots[i].len() {
                    continue 'combos;
                }
                choice[i] = 0;
            }
            break;
        }
    }
    false
}

pub fn is_k_stable_config(
    game: &Game,
    h: &HFunction,
    c: &Configuration,
    k: usize,
) -> Result<bool> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    Ok(!config_breaks(&game.view(), h, c, k))
}

/// First (canonical order) `k`-stable configuration with `q` channels, or
/// `None`; exhaustive and budgeted.
pub fn exists_k_stable_config(
    game: &Game,
    h: &HFunction,
    q: usize,
    k: usize,
    budget: SearchBudget,
) -> Result<Option<Configuration>> {
    if q == 0 || k == 0 {
        return Err(Error::InvalidParam("q and k must be >= 1".into()));
    }
    let view = game.view();
    let mut found = None;
    for_each_configuration(&view, q, budget, |c| {
        if !config_breaks(&view, h, c, k) {
            found = Some(c.clone());
            true
        } else {
            false
        }
    })?;
    Ok(found)
}

/// Maximum-utility configuration with `q` channels (exhaustive, budgeted);
/// ties keep the first in canonical enumeration order.
pub fn max_configuration(
    game: &Game,
    h: &HFunction,
    q: usize,
    budget: SearchBudget,
) -> Result<(Configuration, ConfigUtility)> {
    let view = game.view();
    let mut best: Option<(Configuration, ConfigUtility)> = None;
    for_each_configuration(&view, q, budget, |c| {
        let f = config_global_utility(&view, h, c);
        match &best {
            Some((_, b)) if *b >= f => {}
            _ => best = Some((c.clone(), f)),
        }
        false
    })?;
    best.ok_or_else(|| Error::InvalidParam("no configurations".into()))
}

/// Smallest `q` whose best configuration reaches global utility `target`,
/// probing `q = 1..=q_cap`.
pub fn min_channels(
    game: &Game,
    h: &HFunction,
    target: i64,
    q_cap: usize,
    budget: SearchBudget,
) -> Result<usize> {
    let view = game.view();
    // Sound ceiling for the saturating families.
    let ceiling: Option<Rat> = match h {
        HFunction::Indicator => Some(pair_sum(&view, |w| Rat::from_integer(w as i128))),
        HFunction::Capped { cap } => {
            Some(pair_sum(&view, |w| Rat::from_integer(*cap as i128 * w as i128)))
        }
        HFunction::LinearEps { .. } => None,
    };
    if let Some(cap) = ceiling {
        if Rat::from_integer(target as i128) > cap {
            return Err(Error::NotAchievable(format!(
                "best possible global utility is {cap}"
            )));
        }
    }
    let mut prev: Option<ConfigUtility> = None;
    for q in 1..=q_cap {
        let (_, f) = max_configuration(game, h, q, budget)?;
        if f >= ConfigUtility::Finite(Rat::from_integer(target as i128)) {
            return Ok(q);
        }
        if prev == Some(f) && ceiling.is_none() {
            // Plateau under an unbounded family: nothing more to gain.
            return Err(Error::NotAchievable(format!(
                "optimum plateaued below the target at q={q}"
            )));
        }
        prev = Some(f);
    }
    Err(Error::SearchTooLarge {
        examined: q_cap as u64,
        budget: q_cap as u64,
    })
}

fn pair_sum(view: &ResolvedView, f: impl Fn(i64) -> Rat) -> Rat {
    let mut total = Rat::from_integer(0);
    for u in 0..view.n() {
        for v in 0..view.n() {
            if u != v && !view.is_conflict(u, v) && view.weight(u, v) > 0 {
                total += f(view.weight(u, v));
            }
        }
    }
    total
}

// ---- hypergraph games ----

/// A game whose weights attach to node subsets of arity `2..=t`.
#[derive(Debug, Clone)]
pub struct HyperGame {
    n: usize,
    max_arity: Option<usize>,
    edges: Vec<(Vec<usize>, Weight)>,
}

impl HyperGame {
    pub fn new(n: usize, max_arity: Option<usize>) -> Result<HyperGame> {
        if n == 0 {
            return Err(Error::InvalidGame("n must be >= 1".into()));
        }
        Ok(HyperGame {
            n,
            max_arity,
            edges: Vec::new(),
        })
    }

    pub fn add_edge(&mut self, mut nodes: Vec<usize>, w: Weight) -> Result<()> {
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.len() < 2 {
            return Err(Error::InvalidGame("hyperedge needs at least 2 nodes".into()));
        }
        if let Some(t) = self.max_arity {
            if nodes.len() > t {
                return Err(Error::InvalidGame(format!(
                    "hyperedge arity {} beyond t={t}",
                    nodes.len()
                )));
            }
        }
        if nodes.iter().any(|&u| u >= self.n) {
            return Err(Error::UnknownNode(*nodes.iter().max().unwrap()));
        }
        if w == Weight::BestFriend {
            return Err(Error::InvalidGame("hypergraph weights are integers or -inf".into()));
        }
        if self.edges.iter().any(|(e, _)| *e == nodes) {
            return Err(Error::InvalidGame("duplicate hyperedge".into()));
        }
        self.edges.push((nodes, w));
        self.edges.sort();
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(Vec<usize>, Weight)] {
        &self.edges
    }

    /// The positive-weight sub-hypergraph.
    pub fn friendship(&self) -> HyperGame {
        HyperGame {
            n: self.n,
            max_arity: self.max_arity,
            edges: self
                .edges
                .iter()
                .filter(|(_, w)| matches!(w, Weight::Finite(x) if *x > 0))
                .cloned()
                .collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "v": 1,
            "n": self.n,
            "t": self.max_arity,
            "hyperedges": self
                .edges
                .iter()
                .map(|(e, w)| {
                    let w = match w {
                        Weight::NegInfinity => json!("-inf"),
                        Weight::Finite(x) => json!(x),
                        Weight::BestFriend => unreachable!(),
                    };
                    json!([e, w])
                })
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<HyperGame> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Malformed("hypergame must be an object".into()))?;
        if obj.get("v").and_then(Value::as_u64) != Some(1) {
            return Err(Error::Malformed("missing or unsupported field \"v\"".into()));
        }
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Malformed("missing field \"n\"".into()))? as usize;
        let t = obj.get("t").and_then(Value::as_u64).map(|x| x as usize);
        let mut g = HyperGame::new(n, t)?;
        for (i, e) in obj
            .get("hyperedges")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Malformed("missing array field \"hyperedges\"".into()))?
            .iter()
            .enumerate()
        {
            let pair = e
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Malformed(format!("hyperedges[{i}] must be [[nodes], w]")))?;
            let nodes = pair[0]
                .as_array()
                .ok_or_else(|| Error::Malformed(format!("hyperedges[{i}][0] must be an array")))?
                .iter()
                .map(|x| {
                    x.as_u64().map(|v| v as usize).ok_or_else(|| {
                        Error::Malformed(format!("hyperedges[{i}] has a non-integer node"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let w = match &pair[1] {
                Value::String(s) if s == "-inf" => Weight::NegInfinity,
                Value::Number(x) => Weight::Finite(x.as_i64().ok_or_else(|| {
                    Error::Malformed(format!("hyperedges[{i}] weight out of range"))
                })?),
                other => {
                    return Err(Error::Malformed(format!(
                        "hyperedges[{i}] weight must be an integer or \"-inf\", got {other}"
                    )))
                }
            };
            g.add_edge(nodes, w)?;
        }
        Ok(g)
    }
}

/// Utility of `u`: the weights of all hyperedges containing `u` and lying
/// inside `u`'s group.
pub fn hyper_utility(h: &HyperGame, p: &Partition, u: usize) -> Result<ExtendedUtility> {
    if u >= h.n {
        return Err(Error::UnknownNode(u));
    }
    let gi = p
        .group_of(u)
        .ok_or_else(|| Error::InvalidPartition(format!("node {u} missing")))?;
    let group = &p.groups()[gi];
    let mut total = ExtendedUtility::ZERO;
    for (e, w) in &h.edges {
        if e.binary_search(&u).is_ok() && e.iter().all(|x| group.binary_search(x).is_ok()) {
            total = total
                + match w {
                    Weight::Finite(x) => ExtendedUtility::Finite(*x as i128),
                    _ => ExtendedUtility::NegInfinity,
                };
        }
    }
    Ok(total)
}

/// The potential: every within-group hyperedge counted once.
pub fn hyper_potential(h: &HyperGame, p: &Partition) -> ExtendedUtility {
    let mut total = ExtendedUtility::ZERO;
    for group in p.groups() {
        for (e, w) in &h.edges {
            if e.iter().all(|x| group.binary_search(x).is_ok()) {
                total = total
                    + match w {
                        Weight::Finite(x) => ExtendedUtility::Finite(*x as i128),
                        _ => ExtendedUtility::NegInfinity,
                    };
            }
        }
    }
    total
}

pub fn hyper_global_utility(h: &HyperGame, p: &Partition) -> ExtendedUtility {
    (0..h.n).fold(ExtendedUtility::ZERO, |acc, u| {
        acc + hyper_utility(h, p, u).expect("valid partition")
    })
}

#[derive(Debug, Clone)]
pub struct HyperOpts {
    pub max_steps: usize,
    pub k: usize,
    pub initial: Option<Partition>,
}

impl Default for HyperOpts {
    fn default() -> Self {
        HyperOpts {
            max_steps: 100_000,
            k: 1,
            initial: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HyperTrace {
    pub steps: usize,
    pub stable: bool,
    pub final_partition: Partition,
    pub potentials: Vec<i128>,
}

/// Coalition improvement dynamics on a hypergraph game. For unilateral
/// moves the potential gain equals the mover's utility gain, asserted each
/// step.
pub fn run_hyper_dynamics(h: &HyperGame, scheduler: Scheduler, opts: &HyperOpts) -> Result<HyperTrace> {
    if opts.k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    let mut p = opts
        .initial
        .clone()
        .unwrap_or_else(|| Partition::singletons(h.n));
    let mut rng = match scheduler {
        Scheduler::Random(seed) => {
            use rand::SeedableRng;
            Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed))
        }
        _ => None,
    };
    let mut potentials = Vec::new();
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    seen.insert(p.encode());
    for step in 0..opts.max_steps {
        if let ExtendedUtility::Finite(phi) = hyper_potential(h, &p) {
            potentials.push(phi);
        }
        let moves = hyper_deviations(h, &p, opts.k);
        if moves.is_empty() {
            return Ok(HyperTrace {
                steps: step,
                stable: true,
                final_partition: p,
                potentials,
            });
        }
        let idx = match &mut rng {
            Some(r) => {
                use rand::Rng;
                r.gen_range(0..moves.len())
            }
            None => 0,
        };
        let (coalition, next) = &moves[idx];
        if coalition.len() == 1 {
            let u = coalition[0];
            let phi_before = hyper_potential(h, &p);
            let phi_after = hyper_potential(h, next);
            let fu_before = hyper_utility(h, &p, u)?;
            let fu_after = hyper_utility(h, next, u)?;
            if let (
                ExtendedUtility::Finite(pb),
                ExtendedUtility::Finite(pa),
                ExtendedUtility::Finite(fb),
                ExtendedUtility::Finite(fa),
            ) = (phi_before, phi_after, fu_before, fu_after)
            {
                assert_eq!(pa - pb, fa - fb, "potential gain must equal mover gain");
                assert!(pa > pb);
            }
        }
        p = next.clone();
        if !seen.insert(p.encode()) && opts.k > 1 {
            return Ok(HyperTrace {
                steps: step + 1,
                stable: false,
                final_partition: p,
                potentials,
            });
        }
    }
    Ok(HyperTrace {
        steps: opts.max_steps,
        stable: false,
        final_partition: p,
        potentials,
    })
}

fn hyper_deviations(h: &HyperGame, p: &Partition, k: usize) -> Vec<(Vec<usize>, Partition)> {
    let mut out = Vec::new();
    let membership = p.membership(h.n);
    let mut coalition = Vec::new();
    fn rec(
        h: &HyperGame,
        p: &Partition,
        membership: &[usize],
        k: usize,
        from: usize,
        coalition: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, Partition)>,
    ) {
        if !coalition.is_empty() {
            let groups = p.groups();
            for t in 0..=groups.len() {
                let mut post: Vec<usize> = if t < groups.len() {
                    if coalition.iter().all(|&u| membership[u] == t) {
                        continue;
                    }
                    let mut g = groups[t].clone();
                    g.extend(coalition.iter().copied().filter(|&u| membership[u] != t));
                    g
                } else {
                    coalition.clone()
                };
                post.sort_unstable();
                let mut next_groups: Vec<Vec<usize>> = groups
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| t >= groups.len() || i != t)
                    .map(|(_, g)| {
                        g.iter()
                            .copied()
                            .filter(|u| !coalition.contains(u))
                            .collect()
                    })
                    .collect();
                next_groups.push(post);
                let next = Partition::new(h.n, next_groups.into_iter().filter(|g| !g.is_empty()).collect())
                    .expect("moves preserve partitions");
                let ok = coalition.iter().all(|&u| {
                    hyper_utility(h, &next, u).unwrap() > hyper_utility(h, p, u).unwrap()
                });
                if ok {
                    out.push((coalition.clone(), next));
                }
            }
        }
        if coalition.len() == k {
            return;
        }
        for u in from..h.n {
            coalition.push(u);
            rec(h, p, membership, k, u + 1, coalition, out);
            coalition.pop();
        }
    }
    rec(h, p, &membership, k, 0, &mut coalition, &mut out);
    out
}

/// Shortest Berge cycle length (`None` for acyclic): half the girth of the
/// vertex-edge incidence graph.
pub fn berge_girth(h: &HyperGame) -> Option<usize> {
    let n = h.n;
    let m = h.edges.len();
    let mut adj = vec![Vec::new(); n + m];
    for (ei, (e, _)) in h.edges.iter().enumerate() {
        for &u in e {
            adj[u].push(n + ei);
            adj[n + ei].push(u);
        }
    }
    crate::game::girth(&adj).map(|g| g / 2)
}

/// For a Berge-acyclic hypergraph, `|V| = sum_e (|e| - 1) + c` with `c`
/// connected components (isolated vertices included).
pub fn acyclic_count_check(h: &HyperGame) -> Result<bool> {
    if berge_girth(h).is_some() {
        return Err(Error::InvalidParam("hypergraph has a Berge cycle".into()));
    }
    let mut parent: Vec<usize> = (0..h.n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for (e, _) in &h.edges {
        for w in e.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let comps: HashSet<usize> = (0..h.n).map(|u| find(&mut parent, u)).collect();
    let edge_sum: usize = h.edges.iter().map(|(e, _)| e.len() - 1).sum();
    Ok(h.n == edge_sum + comps.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run_dynamics, DynamicsOpts};
    use crate::game::utility;

    fn rat(x: i64) -> ConfigUtility {
        ConfigUtility::Finite(Rat::from_integer(x as i128))
    }

    #[test]
    fn h_function_constraints() {
        for h in [
            HFunction::Indicator,
            HFunction::linear_eps(1, 100),
            HFunction::Capped { cap: 2 },
        ] {
            for w in [-3i64, 0, 1, 5] {
                assert_eq!(h.eval(0, w), Rat::from_integer(0));
                assert_eq!(h.eval(1, w), Rat::from_integer(w as i128));
                assert_eq!(h.eval(3, 0), Rat::from_integer(0));
                // g -> w*h(g,w) non-decreasing.
                for g in 1..5u32 {
                    let a = Rat::from_integer(w as i128) * h.eval(g, w);
                    let b = Rat::from_integer(w as i128) * h.eval(g + 1, w);
                    assert!(b >= a, "{h:?} w={w} g={g}");
                }
                if w >= 0 {
                    assert!(h.is_concave_on(5, w));
                }
            }
        }
    }

    #[test]
    fn config_utility_examples() {
        let g = Game::uniform(3, &[]).unwrap();
        // q = 1 reduces to plain utility.
        let p = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let c = Configuration::from_groups(3, 1, vec![vec![0, 1], vec![2]]);
        for u in 0..3 {
            let plain = utility(&g, &p, u).unwrap();
            let multi = config_utility(&g, &HFunction::Indicator, &c, u).unwrap();
            assert_eq!(
                plain.finite().map(Rat::from_integer),
                multi.finite()
            );
        }
        // Indicator counts a doubly-shared friend once; the linear family
        // pays (1 + eps).
        let c2 = Configuration::from_groups(3, 2, vec![vec![0, 1], vec![0, 1]]);
        assert_eq!(
            config_utility(&g, &HFunction::Indicator, &c2, 0).unwrap(),
            rat(1)
        );
        let eps = HFunction::linear_eps(1, 100);
        assert_eq!(
            config_utility(&g, &eps, &c2, 0).unwrap(),
            ConfigUtility::Finite(Rat::new(101, 100))
        );
    }

    #[test]
    fn multichannel_dynamics_is_stable_and_monotone() {
        let g = Game::uniform(4, &[(0, 1)]).unwrap();
        let eps = HFunction::linear_eps(1, 100);
        let t = run_multichannel_dynamics(&g, &eps, 2, Scheduler::FirstLex, &McOpts::default())
            .unwrap();
        assert!(t.stable);
        for s in &t.steps {
            assert!(s.global_after > s.global_before);
        }
    }

    #[test]
    fn q1_trace_mirrors_partition_dynamics() {
        let g = crate::test_support::fig2_game();
        let mc = run_multichannel_dynamics(
            &g,
            &HFunction::Indicator,
            1,
            Scheduler::FirstLex,
            &McOpts::default(),
        )
        .unwrap();
        let plain = run_dynamics(&g, 1, Scheduler::FirstLex, &DynamicsOpts::default()).unwrap();
        assert!(mc.stable);
        assert_eq!(mc.steps.len(), plain.len());
        assert_eq!(
            mc.final_config.as_partition().unwrap(),
            plain.final_partition
        );
    }

    #[test]
    fn all_positive_game_saturates() {
        let g = Game::uniform(3, &[]).unwrap();
        let eps = HFunction::linear_eps(1, 100);
        let q = 2;
        let t =
            run_multichannel_dynamics(&g, &eps, q, Scheduler::FirstLex, &McOpts::default()).unwrap();
        assert!(t.stable);
        let view = g.view();
        for u in 0..3 {
            let got = config_utility_view(&view, &eps, &t.final_config, u)
                .finite()
                .unwrap();
            let max: Rat = (0..3)
                .filter(|&v| v != u)
                .map(|v| eps.eval(q as u32, view.weight(u, v)))
                .sum();
            assert_eq!(got, max, "node {u} should saturate");
        }
    }

    #[test]
    fn config_existence_examples() {
        let budget = SearchBudget::default();
        // Uniform games have stable configurations at q = 1 for every k.
        let g = Game::uniform(4, &[(0, 1)]).unwrap();
        for k in 1..=3 {
            assert!(
                exists_k_stable_config(&g, &HFunction::Indicator, 1, k, budget)
                    .unwrap()
                    .is_some()
            );
        }
        // Two best friends at q = 3: all three channels shared.
        let mut bf = Game::new(2, [Weight::BestFriend]).unwrap();
        bf.set_weight(0, 1, Weight::BestFriend).unwrap();
        let found = exists_k_stable_config(&bf, &HFunction::linear_eps(1, 100), 3, 2, budget)
            .unwrap()
            .expect("stable configuration");
        assert_eq!(found.shared(0, 1), 3);
    }

    #[test]
    fn chaotic_channels_flip() {
        let budget = SearchBudget::default();
        let g = crate::gallery::chaotic_channels(2).unwrap();
        let eps = HFunction::linear_eps(1, 1000);
        assert!(exists_k_stable_config(&g, &eps, 1, 2, budget)
            .unwrap()
            .is_some());
        assert!(exists_k_stable_config(&g, &eps, 2, 2, budget)
            .unwrap()
            .is_none());
    }

    #[test]
    fn min_channels_examples() {
        let budget = SearchBudget::default();
        // A single friendly pair reaches 2 with one channel.
        let mut pair = Game::new(2, [Weight::Finite(1)]).unwrap();
        pair.set_weight(0, 1, Weight::Finite(1)).unwrap();
        assert_eq!(
            min_channels(&pair, &HFunction::Indicator, 2, 3, budget).unwrap(),
            1
        );
        // A star with two mutually hostile leaves needs two channels for 4.
        let mut star = Game::new(3, [W_INF_TEST, Weight::Finite(1)]).unwrap();
        star.set_weight(0, 1, Weight::Finite(1)).unwrap();
        star.set_weight(0, 2, Weight::Finite(1)).unwrap();
        star.set_weight(1, 2, W_INF_TEST).unwrap();
        assert_eq!(
            min_channels(&star, &HFunction::Indicator, 4, 3, budget).unwrap(),
            2
        );
        // Unreachable targets error out.
        assert!(matches!(
            min_channels(&star, &HFunction::Indicator, 100, 3, budget),
            Err(Error::NotAchievable(_))
        ));
    }

    const W_INF_TEST: Weight = Weight::NegInfinity;

    #[test]
    fn hyper_utility_examples() {
        // Pairwise-only hypergraph matches the plain game; potential is
        // half the global utility.
        let g = Game::uniform(4, &[(0, 3)]).unwrap();
        let mut hg = HyperGame::new(4, Some(2)).unwrap();
        for u in 0..4 {
            for v in u + 1..4 {
                hg.add_edge(vec![u, v], g.weight(u, v)).unwrap();
            }
        }
        let p = Partition::new(4, vec![vec![0, 1, 2], vec![3]]).unwrap();
        for u in 0..4 {
            assert_eq!(
                hyper_utility(&hg, &p, u).unwrap(),
                utility(&g, &p, u).unwrap()
            );
        }
        let f = hyper_global_utility(&hg, &p).finite().unwrap();
        let phi = hyper_potential(&hg, &p).finite().unwrap();
        assert_eq!(f, 2 * phi);

        // A triangle hyperedge pays each member once, the potential once.
        let mut tri = HyperGame::new(3, Some(3)).unwrap();
        tri.add_edge(vec![0, 1, 2], Weight::Finite(5)).unwrap();
        let together = Partition::new(3, vec![vec![0, 1, 2]]).unwrap();
        for u in 0..3 {
            assert_eq!(
                hyper_utility(&tri, &together, u).unwrap(),
                ExtendedUtility::Finite(5)
            );
        }
        assert_eq!(hyper_potential(&tri, &together), ExtendedUtility::Finite(5));
        let solo = Partition::singletons(3);
        assert_eq!(hyper_utility(&tri, &solo, 0).unwrap(), ExtendedUtility::ZERO);
    }

    #[test]
    fn hyper_dynamics_terminates_with_rising_potential() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut h = HyperGame::new(6, Some(3)).unwrap();
            for _ in 0..8 {
                let a = rng.gen_range(0..6);
                let b = rng.gen_range(0..6);
                let c = rng.gen_range(0..6);
                let mut nodes = vec![a, b, c];
                nodes.sort_unstable();
                nodes.dedup();
                if nodes.len() < 2 {
                    continue;
                }
                let w = Weight::Finite(rng.gen_range(-2..6));
                let _ = h.add_edge(nodes, w);
            }
            let t = run_hyper_dynamics(&h, Scheduler::FirstLex, &HyperOpts::default()).unwrap();
            assert!(t.stable);
            for w in t.potentials.windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn berge_girth_examples() {
        // Two hyperedges sharing two vertices.
        let mut h = HyperGame::new(4, None).unwrap();
        h.add_edge(vec![0, 1, 2], Weight::Finite(1)).unwrap();
        h.add_edge(vec![1, 2, 3], Weight::Finite(1)).unwrap();
        assert_eq!(berge_girth(&h), Some(2));

        // A hypertree plus an isolated vertex.
        let mut tree = HyperGame::new(6, None).unwrap();
        tree.add_edge(vec![0, 1, 2], Weight::Finite(1)).unwrap();
        tree.add_edge(vec![2, 3], Weight::Finite(1)).unwrap();
        tree.add_edge(vec![3, 4], Weight::Finite(1)).unwrap();
        assert_eq!(berge_girth(&tree), None);
        assert!(acyclic_count_check(&tree).unwrap());

        // Single arity-3 edge plus an isolated vertex: 4 = (3-1) + 2.
        let mut single = HyperGame::new(4, None).unwrap();
        single.add_edge(vec![0, 1, 2], Weight::Finite(1)).unwrap();
        assert!(acyclic_count_check(&single).unwrap());
    }

    #[test]
    fn girth_guarded_hyper_dynamics_terminates() {
        // Unit weights whose friendship hypergraph is Berge-acyclic: any
        // coalition size still terminates.
        let mut h = HyperGame::new(6, Some(3)).unwrap();
        h.add_edge(vec![0, 1, 2], Weight::Finite(1)).unwrap();
        h.add_edge(vec![2, 3], Weight::Finite(1)).unwrap();
        h.add_edge(vec![4, 5], Weight::Finite(1)).unwrap();
        h.add_edge(vec![0, 3], Weight::Finite(0)).unwrap();
        assert_eq!(berge_girth(&h.friendship()), None);
        for k in 1..=3 {
            let t = run_hyper_dynamics(
                &h,
                Scheduler::FirstLex,
                &HyperOpts {
                    k,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(t.stable, "k={k}");
        }
    }

    #[test]
    fn config_json_round_trip() {
        let c = Configuration::from_groups(3, 2, vec![vec![0, 1], vec![0, 2]]);
        let j = c.to_json();
        let back = Configuration::from_json(&j).unwrap();
        assert_eq!(c, back);

        let mut h = HyperGame::new(3, Some(3)).unwrap();
        h.add_edge(vec![0, 1, 2], Weight::Finite(4)).unwrap();
        h.add_edge(vec![0, 1], Weight::NegInfinity).unwrap();
        let back = HyperGame::from_json(&h.to_json()).unwrap();
        assert_eq!(back.edges(), h.edges());
    }
}
