//! Parameterized builders for the counterexample, reduction, and
//! price-of-anarchy graphs, each paired with machine-checkable claims.
//!
//! Builders pick the smallest parameter values their constraints allow, so
//! every claim that fits a desk-scale search budget is checked exhaustively;
//! claims on the larger constructions are structural.

use serde_json::json;

use crate::dynamics;
use crate::extensions::{self, Configuration, HFunction};
use crate::game::{AsymGame, Game, Partition, Weight};
use crate::stability;
use crate::{Error, Result, SearchBudget};

const W_INF: Weight = Weight::NegInfinity;

fn fin(x: i64) -> Weight {
    Weight::Finite(x)
}

/// A machine-checkable statement about a gallery construction.
#[derive(Debug, Clone)]
pub enum Claim {
    /// `exists_k_stable(game, k, gossip)` matches `expect_some`, optionally
    /// restricting the search to partitions keeping the listed twin blocks
    /// whole.
    Existence {
        name: String,
        k: usize,
        gossip: bool,
        expect_some: bool,
        blocks: Option<Vec<Vec<usize>>>,
    },
    /// A named partition is (or is not) k-stable.
    PartitionStable {
        name: String,
        partition: Partition,
        k: usize,
        expect: bool,
    },
    /// Exact global-utility ratio of two named partitions.
    PartitionRatio {
        name: String,
        high: Partition,
        low: Partition,
        expect_num: i128,
        expect_den: i128,
    },
    /// A configuration-level existence check at `q` channels.
    ConfigExistence {
        name: String,
        q: usize,
        k: usize,
        h: HFunction,
        expect_some: bool,
    },
    /// A structural predicate already verified at build time.
    Structural { name: String, ok: bool },
}

impl Claim {
    pub fn name(&self) -> &str {
        match self {
            Claim::Existence { name, .. }
            | Claim::PartitionStable { name, .. }
            | Claim::PartitionRatio { name, .. }
            | Claim::ConfigExistence { name, .. }
            | Claim::Structural { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
    Infeasible(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Runs a claim against its game within the budget.
pub fn verify(game: &Game, claim: &Claim, budget: SearchBudget) -> Verdict {
    match claim {
        Claim::Existence {
            k,
            gossip,
            expect_some,
            blocks,
            ..
        } => {
            let view = game.view();
            let found = stability::exists_k_stable_view(&view, *k, *gossip, budget, blocks.as_deref());
            match found {
                Ok(found) => {
                    if found.is_some() == *expect_some {
                        Verdict::Pass
                    } else {
                        Verdict::Fail(format!(
                            "expected {} k={k}-stable partition, found {}",
                            if *expect_some { "some" } else { "no" },
                            match found {
                                Some(p) => format!("{p}"),
                                None => "none".into(),
                            }
                        ))
                    }
                }
                Err(Error::SearchTooLarge { examined, budget }) => {
                    Verdict::Infeasible(format!("examined {examined} of budget {budget}"))
                }
                Err(e) => Verdict::Fail(e.to_string()),
            }
        }
        Claim::PartitionStable {
            partition,
            k,
            expect,
            ..
        } => match stability::is_k_stable(game, partition, *k, false) {
            Ok(got) if got == *expect => Verdict::Pass,
            Ok(got) => Verdict::Fail(format!("is_{k}_stable = {got}, expected {expect}")),
            Err(e) => Verdict::Fail(e.to_string()),
        },
        Claim::PartitionRatio {
            high,
            low,
            expect_num,
            expect_den,
            ..
        } => {
            let fh = crate::game::global_utility(game, high);
            let fl = crate::game::global_utility(game, low);
            match (fh.finite(), fl.finite()) {
                (Some(a), Some(b)) if b != 0 => {
                    if a * expect_den == b * expect_num {
                        Verdict::Pass
                    } else {
                        Verdict::Fail(format!("ratio {a}/{b} != {expect_num}/{expect_den}"))
                    }
                }
                _ => Verdict::Fail("utilities not finite/nonzero".into()),
            }
        }
        Claim::ConfigExistence {
            q,
            k,
            h,
            expect_some,
            ..
        } => match extensions::exists_k_stable_config(game, h, *q, *k, budget) {
            Ok(found) if found.is_some() == *expect_some => Verdict::Pass,
            Ok(_) => Verdict::Fail(format!(
                "expected {} at q={q}",
                if *expect_some { "some" } else { "none" }
            )),
            Err(Error::SearchTooLarge { examined, budget }) => {
                Verdict::Infeasible(format!("examined {examined} of budget {budget}"))
            }
            Err(e) => Verdict::Fail(e.to_string()),
        },
        Claim::Structural { ok, name } => {
            if *ok {
                Verdict::Pass
            } else {
                Verdict::Fail(format!("structural check {name} failed"))
            }
        }
    }
}

// ---- counterexamples ----

/// The 6-node rotation game: a triangle of `w1`-friends `v1,v2,v3` and three
/// mutually hostile nodes `u1,u2,u3` (node ids 0..2), with
/// `w(u_i, v_(i+1)) = w2` and `w(u_i, v_(i+2)) = w3`, `u_i` hostile to
/// `v_i`. Needs `w1 < w2 < w3 < w1 + w2`; no partition is then 2-stable.
pub fn fig2_rotation(w1: i64, w2: i64, w3: i64) -> Result<Game> {
    if !(w1 < w2 && w2 < w3 && w1 + w2 > w3 && w1 > 0) {
        return Err(Error::InvalidParam(format!(
            "need 0 < w1 < w2 < w3 < w1+w2, got ({w1},{w2},{w3})"
        )));
    }
    let mut g = Game::new(6, [W_INF, fin(w1), fin(w2), fin(w3)])?;
    let v = |j: usize| 3 + j % 3;
    for u in 0..6 {
        for x in u + 1..6 {
            g.set_weight(u, x, W_INF)?;
        }
    }
    for i in 0..3 {
        for j in i + 1..3 {
            g.set_weight(v(i), v(j), fin(w1))?;
        }
    }
    for i in 0..3 {
        g.set_weight(i, v(i + 1), fin(w2))?;
        g.set_weight(i, v(i + 2), fin(w3))?;
    }
    Ok(g)
}

pub fn fig2_claims() -> Vec<Claim> {
    vec![
        Claim::Existence {
            name: "fig2(2,3,4) has no 2-stable partition".into(),
            k: 2,
            gossip: false,
            expect_some: false,
            blocks: None,
        },
        Claim::Existence {
            name: "fig2(2,3,4) has a 1-stable partition".into(),
            k: 1,
            gossip: false,
            expect_some: true,
            blocks: None,
        },
    ]
}

/// The `4h+6`-node game over weights `{-inf, 0, 1}` with no 3-stable
/// partition: four size-`h` friend cliques `A_0..A_3` each with a special
/// node `a_i`, ring nodes `b_0..b_3`, and two hubs `c_0, c_1`.
///
/// Node layout: `A_i` occupies `i*h..(i+1)*h` with `a_i = i*h`; `b_i = 4h+i`;
/// `c_j = 4h+4+j`.
pub fn fig3_no3stable(h: usize) -> Result<Game> {
    if h < 2 {
        return Err(Error::InvalidParam("h must be >= 2".into()));
    }
    let n = 4 * h + 6;
    let a = |i: usize| (i % 4) * h;
    let b = |i: usize| 4 * h + i % 4;
    let c = |j: usize| 4 * h + 4 + j % 2;
    let mut g = Game::new(n, [W_INF, fin(0), fin(1)])?;
    for u in 0..n {
        for v in u + 1..n {
            g.set_weight(u, v, W_INF)?;
        }
    }
    for i in 0..4 {
        // Cliques A_i.
        for x in 0..h {
            for y in x + 1..h {
                g.set_weight(a(i) + x, a(i) + y, fin(1))?;
            }
        }
        // b_i to all of A_i; b_i to A_(i+1) minus its special node, and an
        // indifferent edge to the special node itself.
        for x in 0..h {
            g.set_weight(b(i), a(i) + x, fin(1))?;
        }
        for x in 1..h {
            g.set_weight(b(i), a(i + 1) + x, fin(1))?;
        }
        g.set_weight(b(i), a(i + 1), fin(0))?;
        // Ring of b's.
        g.set_weight(b(i), b(i + 1), fin(1))?;
        // Hubs befriend every b.
        g.set_weight(c(0), b(i), fin(1))?;
        g.set_weight(c(1), b(i), fin(1))?;
    }
    // c_0 with A_0 and A_2; c_1 with A_1 and A_3.
    for i in [0usize, 2] {
        for x in 0..h {
            g.set_weight(c(0), a(i) + x, fin(1))?;
        }
    }
    for i in [1usize, 3] {
        for x in 0..h {
            g.set_weight(c(1), a(i) + x, fin(1))?;
        }
    }
    Ok(g)
}

pub fn fig3_claims() -> Vec<Claim> {
    vec![
        Claim::Existence {
            name: "fig3(h=2) has no 3-stable partition".into(),
            k: 3,
            gossip: false,
            expect_some: false,
            blocks: None,
        },
        Claim::Existence {
            name: "fig3(h=2) has a 2-stable partition".into(),
            k: 2,
            gossip: false,
            expect_some: true,
            blocks: None,
        },
    ]
}

/// The 12-node game over `{-inf, a, b}` (0 < a < b) with no 2-stable
/// partition: three 3-cliques `V_1 = {0,1,2}`, `V_2 = {3,4,5}`,
/// `V_3 = {6,7,8}` of weight `b`, hubs `u_1, u_2, u_3 = 9, 10, 11`.
pub fn extent_ab(a: i64, b: i64) -> Result<Game> {
    if !(0 < a && a < b) {
        return Err(Error::InvalidParam(format!("need 0 < a < b, got ({a},{b})")));
    }
    let mut g = Game::new(12, [W_INF, fin(a), fin(b)])?;
    for u in 0..12 {
        for v in u + 1..12 {
            g.set_weight(u, v, W_INF)?;
        }
    }
    let block = |i: usize| (3 * (i % 3)..3 * (i % 3) + 3).collect::<Vec<_>>();
    let hub = |i: usize| 9 + i % 3;
    for i in 0..3 {
        let v = block(i);
        for &x in &v {
            for &y in &v {
                if x < y {
                    g.set_weight(x, y, fin(b))?;
                }
            }
        }
        // Hubs are a b-clique.
        for j in i + 1..3 {
            g.set_weight(hub(i), hub(j), fin(b))?;
        }
        // u_(i+1) attaches to V_i at weight b, except weight a to its last
        // member; u_i attaches to all of V_i at b.
        for &x in &v {
            g.set_weight(hub(i), x, fin(b))?;
        }
        let prev_hub = hub(i + 1);
        g.set_weight(prev_hub, v[0], fin(b))?;
        g.set_weight(prev_hub, v[1], fin(b))?;
        g.set_weight(prev_hub, v[2], fin(a))?;
    }
    Ok(g)
}

pub fn extent_claims() -> Vec<Claim> {
    vec![
        Claim::Existence {
            name: "extent(1,2) has no 2-stable partition".into(),
            k: 2,
            gossip: false,
            expect_some: false,
            blocks: None,
        },
        Claim::Existence {
            name: "extent(1,2) has a 1-stable partition".into(),
            k: 1,
            gossip: false,
            expect_some: true,
            blocks: None,
        },
    ]
}

/// Parameters of the `{-a, b}` construction.
#[derive(Debug, Clone)]
pub struct NegAb {
    pub game: Game,
    pub t: [usize; 3],
    pub s: [usize; 3],
    /// Node ranges: `v[i]` spans the clique `V_i`; within it the first
    /// `t_i*b` nodes are `V_(i,m)` and the first `(t_i+1)*b` are `V_(i,p)`.
    pub v_start: [usize; 3],
    pub u_start: [usize; 3],
    pub u_size: usize,
}

/// The `{-a, b}` construction with minimal sizes: three big cliques `V_i`
/// with nested subcliques and three hub cliques `U_i`, every missing edge
/// at weight `-a`. Verification is structural; exhaustive search at these
/// sizes is out of reach by design.
pub fn negab(a: i64, b: i64) -> Result<NegAb> {
    if a <= 0 || b <= 0 {
        return Err(Error::InvalidParam("a and b must be positive".into()));
    }
    let (au, bu) = (a as i128, b as i128);
    // |V_i'| as a function of t: the larger of the two candidate subgroup
    // sizes; strictly increasing in t.
    let vprime = |t: i128| -> i128 { (t * bu).max((t + 1) * au + 2 * (bu + au) + 3) };
    let t_floor = (5 * (bu + au + 1) + (bu - au).max(1) - 1) / (bu - au).max(1);
    let mut t = [0i128; 3];
    let mut prev = t_floor.max(1);
    let bounds = |i: usize, t_prev: i128| -> i128 {
        match i {
            0 => (3 * (bu + au) + 2) * bu + 1,
            _ => ((t_prev + 5) * (bu + au) + 4) * bu + 1,
        }
    };
    for i in 0..3 {
        let need = bounds(i, if i == 0 { 0 } else { t[i - 1] });
        let mut cand = prev;
        while vprime(cand) * au < need {
            cand += 1;
        }
        t[i] = cand;
        prev = cand;
    }
    let s: Vec<i128> = t.iter().map(|&ti| ti * (bu + au) + 3 * (bu + au + 1)).collect();
    let u_size = (bu + au + 1) as usize;
    let total = s.iter().sum::<i128>() as usize + 3 * u_size;
    let mut g = Game::new(total, [fin(-a), fin(b)])?;
    for x in 0..total {
        for y in x + 1..total {
            g.set_weight(x, y, fin(-a))?;
        }
    }
    let mut v_start = [0usize; 3];
    let mut next = 0usize;
    for i in 0..3 {
        v_start[i] = next;
        next += s[i] as usize;
    }
    let mut u_start = [0usize; 3];
    for i in 0..3 {
        u_start[i] = next;
        next += u_size;
    }
    // Big cliques V_i.
    for i in 0..3 {
        let lo = v_start[i];
        let hi = lo + s[i] as usize;
        for x in lo..hi {
            for y in x + 1..hi {
                g.set_weight(x, y, fin(b))?;
            }
        }
    }
    // The three U_i together form one b-clique.
    for x in u_start[0]..total {
        for y in x + 1..total {
            g.set_weight(x, y, fin(b))?;
        }
    }
    for i in 0..3 {
        let ti = t[i] as usize;
        let m_end = v_start[i] + ti * b as usize; // V_(i,m)
        let p_end = v_start[i] + (ti + 1) * b as usize; // V_(i,p)
        let v_end = v_start[i] + s[i] as usize;
        // U_i to V_i minus V_(i,m).
        for u in u_start[i]..u_start[i] + u_size {
            for x in m_end..v_end {
                g.set_weight(u, x, fin(b))?;
            }
        }
        // U_i to V_(i+1) minus V_(i+1,p).
        let j = (i + 1) % 3;
        let tj = t[j] as usize;
        let pj_end = v_start[j] + (tj + 1) * b as usize;
        let vj_end = v_start[j] + s[j] as usize;
        for u in u_start[i]..u_start[i] + u_size {
            for x in pj_end..vj_end {
                g.set_weight(u, x, fin(b))?;
            }
        }
        let _ = p_end;
    }
    Ok(NegAb {
        game: g,
        t: [t[0] as usize, t[1] as usize, t[2] as usize],
        s: [s[0] as usize, s[1] as usize, s[2] as usize],
        v_start,
        u_start,
        u_size,
    })
}

pub fn negab_claims(built: &NegAb, a: i64, b: i64) -> Vec<Claim> {
    let g = &built.game;
    // Only -a and b appear.
    let mut weights_ok = true;
    for (_, _, w) in g.stored_edges() {
        if w != fin(-a) && w != fin(b) {
            weights_ok = false;
        }
    }
    // Subclique containments: members of V_(i,m) are pairwise twins, as are
    // members of V_i minus V_(i,p).
    let twins = g.find_twins();
    let has_twin = |x: usize, y: usize| twins.contains(&(x.min(y), x.max(y)));
    let mut twin_ok = true;
    for i in 0..3 {
        let lo = built.v_start[i];
        let m_end = lo + built.t[i] * b as usize;
        let p_end = lo + (built.t[i] + 1) * b as usize;
        let v_end = lo + built.s[i];
        twin_ok &= has_twin(lo, lo + 1);
        twin_ok &= has_twin(p_end, v_end - 1);
        // Across the V_(i,m) / V_i-minus-V_(i,p) boundary weights differ.
        twin_ok &= !has_twin(lo, m_end) || m_end >= p_end;
    }
    vec![
        Claim::Structural {
            name: format!(
                "negab({a},{b}) weight multiset is {{-{a}, {b}}} with sizes s={:?}",
                built.s
            ),
            ok: weights_ok,
        },
        Claim::Structural {
            name: format!("negab({a},{b}) nested twin subcliques t={:?}", built.t),
            ok: twin_ok,
        },
    ]
}

/// The 4-node game over `{-inf, -4, 2, 6, 7}` with no 2-stable partition.
pub fn chaotic4() -> Game {
    let mut g = Game::new(4, [W_INF, fin(-4), fin(2), fin(6), fin(7)]).unwrap();
    g.set_weight(0, 1, W_INF).unwrap();
    g.set_weight(0, 2, W_INF).unwrap();
    g.set_weight(0, 3, fin(7)).unwrap();
    g.set_weight(1, 3, fin(6)).unwrap();
    g.set_weight(2, 3, fin(2)).unwrap();
    g.set_weight(1, 2, fin(-4)).unwrap();
    g
}

pub fn chaotic4_claims() -> Vec<Claim> {
    vec![
        Claim::Existence {
            name: "chaotic4 has no 2-stable partition".into(),
            k: 2,
            gossip: false,
            expect_some: false,
            blocks: None,
        },
        Claim::Existence {
            name: "chaotic4 has a 1-stable partition".into(),
            k: 1,
            gossip: false,
            expect_some: true,
            blocks: None,
        },
    ]
}

/// `chaotic4` plus `q-1` pendant best-friend nodes on node 3; with `q`
/// channels the pendants pin down `q-1` of node 3's memberships, collapsing
/// the game to the chaotic core, so a 2-stable configuration exists iff the
/// channel count differs from `q`.
pub fn chaotic_channels(q: usize) -> Result<Game> {
    if q < 1 {
        return Err(Error::InvalidParam("q must be >= 1".into()));
    }
    let n = 4 + (q - 1);
    let mut g = Game::new(
        n,
        [W_INF, fin(-4), fin(2), fin(6), fin(7), Weight::BestFriend],
    )?;
    for u in 0..n {
        for v in u + 1..n {
            g.set_weight(u, v, W_INF)?;
        }
    }
    g.set_weight(0, 3, fin(7))?;
    g.set_weight(1, 3, fin(6))?;
    g.set_weight(2, 3, fin(2))?;
    g.set_weight(1, 2, fin(-4))?;
    for x in 4..n {
        g.set_weight(x, 3, Weight::BestFriend)?;
    }
    Ok(g)
}

pub fn chaotic_channels_claims(q: usize, eps_den: i64) -> Vec<Claim> {
    let h = HFunction::linear_eps(1, eps_den);
    let mut claims = vec![Claim::ConfigExistence {
        name: format!("chaotic_channels({q}) has no 2-stable configuration at q={q}"),
        q,
        k: 2,
        h: h.clone(),
        expect_some: false,
    }];
    for qq in 1..q {
        claims.push(Claim::ConfigExistence {
            name: format!("chaotic_channels({q}) has a 2-stable configuration at q={qq}"),
            q: qq,
            k: 2,
            h: h.clone(),
            expect_some: true,
        });
    }
    claims
}

/// Disjoint union of `chaotic_channels(q)` blocks for each `q` in `bad`,
/// plus an all-friendly block, with hostile cross edges: over the channel
/// counts in `q_list`, a 2-stable configuration exists iff the count is not
/// in `bad`. Cross-block enmity makes stability decompose block by block.
pub fn chaotic_schedule(q_list: &[usize], bad: &[usize]) -> Result<Game> {
    if bad.iter().any(|&q| q == 0 || !q_list.contains(&q)) {
        return Err(Error::InvalidParam(
            "bad channel counts must come from q_list".into(),
        ));
    }
    let blocks: Vec<Game> = bad
        .iter()
        .map(|&q| chaotic_channels(q))
        .collect::<Result<_>>()?;
    let base = Game::uniform(2, &[])?; // a trivially always-stable block
    let mut sizes = vec![base.n()];
    sizes.extend(blocks.iter().map(|b| b.n()));
    let total: usize = sizes.iter().sum();
    let mut g = Game::new(
        total,
        [W_INF, fin(-4), fin(1), fin(2), fin(6), fin(7), Weight::BestFriend],
    )?;
    for u in 0..total {
        for v in u + 1..total {
            g.set_weight(u, v, W_INF)?;
        }
    }
    let mut offset = 0usize;
    for (bi, block) in std::iter::once(&base).chain(blocks.iter()).enumerate() {
        for (u, v, w) in block.stored_edges() {
            g.set_weight(offset + u, offset + v, w)?;
        }
        offset += sizes[bi];
    }
    Ok(g)
}

// ---- reductions ----

/// The directed reduction from a positive multiset: nodes `0..m` carry the
/// multiset values, then `z = m`, `u = m+1`, `v = m+2`. A 1-stable partition
/// exists iff the multiset splits into two halves of equal sum.
pub fn asym_partition_reduction(values: &[i64]) -> Result<AsymGame> {
    if values.is_empty() || values.iter().any(|&s| s <= 0) {
        return Err(Error::InvalidParam(
            "multiset must be non-empty and positive".into(),
        ));
    }
    let m = values.len();
    let total: i64 = values.iter().sum();
    let (z, u, v) = (m, m + 1, m + 2);
    let mut set = vec![W_INF];
    for &s in values {
        set.push(fin(-s));
        set.push(fin(total - s + 1));
        set.push(fin(s));
    }
    set.push(fin(total + 1));
    let mut g = AsymGame::new(m + 3, set)?;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                g.set_weight(i, j, fin(-values[j]))?;
            }
        }
        g.set_weight(i, u, fin(total - values[i] + 1))?;
        g.set_weight(i, v, fin(total - values[i] + 1))?;
        g.set_weight(u, i, fin(0))?;
        g.set_weight(v, i, fin(0))?;
        g.set_weight(i, z, fin(values[i]))?;
        g.set_weight(z, i, fin(-values[i]))?;
    }
    g.set_weight(u, v, W_INF)?;
    g.set_weight(v, u, W_INF)?;
    g.set_weight(u, z, fin(0))?;
    g.set_weight(v, z, fin(0))?;
    g.set_weight(z, u, fin(total + 1))?;
    g.set_weight(z, v, fin(total + 1))?;
    Ok(g)
}

/// Direct solver for the two-way balanced partition problem.
pub fn balanced_split_exists(values: &[i64]) -> bool {
    let total: i64 = values.iter().sum();
    if total % 2 != 0 {
        return false;
    }
    let half = (total / 2) as usize;
    let mut reachable = vec![false; half + 1];
    reachable[0] = true;
    for &v in values {
        let v = v as usize;
        for s in (v..=half).rev() {
            if reachable[s - v] {
                reachable[s] = true;
            }
        }
    }
    reachable[half]
}

/// The `{-inf, 0, 1}` gossip reduction from a simple graph: five nodes per
/// vertex (`v1, v2` and three colored nodes) plus three color hubs.
///
/// Node layout for vertex `x` (0-based): `5x + 0,1` are `v1, v2`, and
/// `5x + 2 + i` is the color-`i` node; hubs are `5m + i` for `i = 0..3`.
pub fn gossip_3coloring_reduction(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Game> {
    if n_vertices == 0 {
        return Err(Error::InvalidParam("graph must have vertices".into()));
    }
    let m = n_vertices;
    let hub = |i: usize| 5 * m + i;
    let pair = |x: usize, j: usize| 5 * x + j; // j in 0..2
    let colored = |x: usize, i: usize| 5 * x + 2 + i; // i in 0..3
    let mut g = Game::new(5 * m + 3, [W_INF, fin(0), fin(1)])?;
    for x in 0..m {
        g.set_weight(pair(x, 0), pair(x, 1), fin(1))?;
        for i in 0..3 {
            g.set_weight(pair(x, 0), colored(x, i), fin(1))?;
            g.set_weight(pair(x, 1), colored(x, i), fin(1))?;
            g.set_weight(hub(i), colored(x, i), fin(1))?;
            for j in 0..3 {
                if i != j {
                    g.set_weight(colored(x, i), hub(j), W_INF)?;
                }
            }
        }
        for i in 0..3 {
            for j in i + 1..3 {
                g.set_weight(colored(x, i), colored(x, j), W_INF)?;
            }
        }
        // Colored nodes of different vertices and colors conflict.
        for y in 0..m {
            if x == y {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        g.set_weight(colored(x, i), colored(y, j), W_INF)?;
                    }
                }
            }
        }
    }
    for i in 0..3 {
        for j in i + 1..3 {
            g.set_weight(hub(i), hub(j), W_INF)?;
        }
    }
    for &(x, y) in edges {
        if x == y || x >= m || y >= m {
            return Err(Error::InvalidParam(format!("bad edge ({x},{y})")));
        }
        for a in 0..2 {
            for b in 0..2 {
                g.set_weight(pair(x, a), pair(y, b), W_INF)?;
            }
        }
    }
    Ok(g)
}

/// The candidate partition for a coloring assignment: group `i` holds hub
/// `i`, every color-`i` node, and the `v1, v2` pairs of vertices colored `i`.
pub fn gossip_candidate_partition(
    n_vertices: usize,
    coloring: &[usize],
) -> Result<Partition> {
    let m = n_vertices;
    let mut groups = vec![Vec::new(), Vec::new(), Vec::new()];
    for i in 0..3 {
        groups[i].push(5 * m + i);
        for x in 0..m {
            groups[i].push(5 * x + 2 + i);
        }
    }
    for (x, &c) in coloring.iter().enumerate() {
        groups[c].push(5 * x);
        groups[c].push(5 * x + 1);
    }
    Partition::new(5 * m + 3, groups)
}

/// Restricted existence search justified by the gossip forcing chain: every
/// gossip-stable partition glues each colored node to its hub and each
/// vertex pair together into one of the three hub groups, so candidates are
/// exactly the 3-coloring assignments.
pub fn gossip_stable_exists_restricted(n_vertices: usize, edges: &[(usize, usize)]) -> Result<bool> {
    let game = gossip_3coloring_reduction(n_vertices, edges)?;
    let view = game.view();
    let mut coloring = vec![0usize; n_vertices];
    loop {
        if edges.iter().all(|&(x, y)| coloring[x] != coloring[y]) {
            let p = gossip_candidate_partition(n_vertices, &coloring)?;
            if stability::is_k_stable_view(&view, &p, 2, true) {
                return Ok(true);
            }
        }
        // Next assignment in base 3.
        let mut i = 0;
        loop {
            if i == n_vertices {
                return Ok(false);
            }
            coloring[i] += 1;
            if coloring[i] < 3 {
                break;
            }
            coloring[i] = 0;
            i += 1;
        }
    }
}

/// Brute-force 3-colorability of a simple graph.
pub fn three_colorable(n_vertices: usize, edges: &[(usize, usize)]) -> bool {
    let mut coloring = vec![0usize; n_vertices];
    loop {
        if edges.iter().all(|&(x, y)| coloring[x] != coloring[y]) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n_vertices {
                return false;
            }
            coloring[i] += 1;
            if coloring[i] < 3 {
                break;
            }
            coloring[i] = 0;
            i += 1;
        }
    }
}

/// Appends `n` hostile `w_p`-cliques of `t` nodes, each fully `w_p`-connected
/// to the original vertices: `k`-stability is preserved both ways when
/// `t > n`. Returns the game and the clique node blocks.
pub fn tilde_g(game: &Game, t: usize) -> Result<(Game, Vec<Vec<usize>>)> {
    let n = game.n();
    let wp = max_positive(game)?;
    let total = n + n * t;
    let mut set: Vec<Weight> = game.weight_set().iter().copied().collect();
    set.push(W_INF);
    let mut g = Game::new(total, set)?;
    for (u, v, w) in game.stored_edges() {
        g.set_weight(u, v, w)?;
    }
    let mut blocks = Vec::new();
    for i in 0..n {
        let lo = n + i * t;
        let block: Vec<usize> = (lo..lo + t).collect();
        for (xi, &x) in block.iter().enumerate() {
            for &y in &block[xi + 1..] {
                g.set_weight(x, y, wp)?;
            }
            for v in 0..n {
                g.set_weight(x, v, wp)?;
            }
            for j in 0..i {
                for y in n + j * t..n + (j + 1) * t {
                    g.set_weight(x, y, W_INF)?;
                }
            }
        }
        blocks.push(block);
    }
    Ok((g, blocks))
}

/// Substitutes every vertex by a `w_p`-clique of `alpha` nodes; cross
/// weights copy the original edge weights.
pub fn bar_g(game: &Game, alpha: usize) -> Result<Game> {
    if alpha == 0 {
        return Err(Error::InvalidParam("alpha must be >= 1".into()));
    }
    let n = game.n();
    let wp = max_positive(game)?;
    let mut set: Vec<Weight> = game.weight_set().iter().copied().collect();
    set.push(wp);
    let mut g = Game::new(n * alpha, set)?;
    let node = |u: usize, i: usize| u * alpha + i;
    for u in 0..n {
        for i in 0..alpha {
            for j in i + 1..alpha {
                g.set_weight(node(u, i), node(u, j), wp)?;
            }
        }
        for v in u + 1..n {
            let w = game.weight(u, v);
            if w == fin(0) {
                continue;
            }
            for i in 0..alpha {
                for j in 0..alpha {
                    g.set_weight(node(u, i), node(v, j), w)?;
                }
            }
        }
    }
    Ok(g)
}

fn max_positive(game: &Game) -> Result<Weight> {
    let big = game.resolve_bestfriend();
    let best = game
        .stored_edges()
        .filter_map(|(_, _, w)| match w {
            Weight::Finite(x) if x > 0 => Some((x, Weight::Finite(x))),
            Weight::BestFriend => Some((big, Weight::BestFriend)),
            _ => None,
        })
        .max_by_key(|&(v, _)| v)
        .map(|(_, w)| w);
    best.ok_or_else(|| Error::InvalidParam("game has no positive weight".into()))
}

/// Glues the clique-padded copy of a no-`k`-stable seed game to the
/// clique-substituted conflict graph: the result has a `k`-stable partition
/// iff the conflict graph has an independent set of size `c`.
///
/// `x0` is a seed node whose removal restores `k`-stability.
#[derive(Debug, Clone)]
pub struct HardnessReduction {
    pub game: Game,
    pub t: usize,
    pub alpha: usize,
    pub f0: i64,
    /// Blocks usable for block-respecting searches.
    pub clique_blocks: Vec<Vec<usize>>,
}

pub fn hardness_reduction(
    conflict_n: usize,
    conflict_edges: &[(usize, usize)],
    c: usize,
    seed: &Game,
    x0: usize,
    k: usize,
    budget: SearchBudget,
) -> Result<HardnessReduction> {
    let n0 = seed.n();
    if x0 >= n0 {
        return Err(Error::UnknownNode(x0));
    }
    let wp = match max_positive(seed)? {
        Weight::Finite(x) => x,
        Weight::BestFriend => seed.resolve_bestfriend(),
        Weight::NegInfinity => unreachable!(),
    };
    // Seed minus x0 must have a k-stable partition; find one and measure the
    // best utility x0 can grab with a single deviation from it.
    let mut reduced = Game::new(n0 - 1, seed.weight_set().iter().copied())?;
    let idx = |u: usize| if u < x0 { u } else { u - 1 };
    for (u, v, w) in seed.stored_edges() {
        if u != x0 && v != x0 {
            reduced.set_weight(idx(u), idx(v), w)?;
        }
    }
    let p0 = stability::exists_k_stable(&reduced, k, false, budget)?
        .ok_or_else(|| Error::InvalidParam("seed minus x0 is not k-stable".into()))?;
    // Lift back to seed nodes, with x0 solo.
    let mut groups: Vec<Vec<usize>> = p0
        .groups()
        .iter()
        .map(|g| g.iter().map(|&u| if u < x0 { u } else { u + 1 }).collect())
        .collect();
    groups.push(vec![x0]);
    let lifted = Partition::new(n0, groups)?;
    let view = seed.view();
    let mut f0 = 0i128;
    for d in dynamics::enumerate_deviations_view(&view, &lifted, k) {
        if !d.coalition.contains(&x0) {
            continue;
        }
        let next = dynamics::apply_deviation_view(&view, &lifted, &d)?;
        let gi = next.group_of(x0).unwrap();
        if let crate::game::ExtendedUtility::Finite(f) =
            view.utility_in(x0, &next.groups()[gi])
        {
            f0 = f0.max(f);
        }
    }
    if f0 <= 0 {
        return Err(Error::InvalidParam(
            "x0 gains nothing by deviating; pad the seed first".into(),
        ));
    }
    let f0 = f0 as i64;
    let alpha = ((f0 + wp - 1) / wp) as usize;
    let c0 = 2 * n0 + 1;
    if c < c0 {
        return Err(Error::InvalidParam(format!("c must be at least {c0}")));
    }
    let t = ((alpha * c) as i64 - (f0 + wp - 1) / wp) as usize;
    let (g1, mut blocks) = tilde_g(seed, t)?;
    let conflict_game = {
        let mut g = Game::new(conflict_n, [W_INF, fin(wp)])?;
        for u in 0..conflict_n {
            for v in u + 1..conflict_n {
                g.set_weight(u, v, fin(wp))?;
            }
        }
        for &(u, v) in conflict_edges {
            g.set_weight(u, v, W_INF)?;
        }
        g
    };
    let g2 = bar_g(&conflict_game, alpha)?;
    let n1 = g1.n();
    let total = n1 + g2.n();
    let mut set: Vec<Weight> = g1.weight_set().iter().copied().collect();
    set.extend(g2.weight_set().iter().copied());
    let mut h = Game::new(total, set)?;
    for (u, v, w) in g1.stored_edges() {
        h.set_weight(u, v, w)?;
    }
    for (u, v, w) in g2.stored_edges() {
        h.set_weight(n1 + u, n1 + v, w)?;
    }
    for v2 in 0..g2.n() {
        for u1 in 0..n1 {
            let w = if u1 == x0 { fin(wp) } else { W_INF };
            h.set_weight(u1, n1 + v2, w)?;
        }
    }
    for u in 0..conflict_n {
        blocks.push((n1 + u * alpha..n1 + (u + 1) * alpha).collect());
    }
    Ok(HardnessReduction {
        game: h,
        t,
        alpha,
        f0,
        clique_blocks: blocks,
    })
}

// ---- price-of-anarchy constructions ----

/// The `(k+1) x n'/(k+1)` grid: friends (weight `b = 1`) share a row or a
/// column, everything else weighs `-1`. Returns the game with its rows and
/// columns partitions.
pub fn poa_grid(k: usize, n: usize) -> Result<(Game, Partition, Partition)> {
    let side = k + 1;
    let cols = n / (side * side) * side;
    if cols == 0 {
        return Err(Error::InvalidParam(format!(
            "n={n} too small for a (k+1)^2 grid with k={k}"
        )));
    }
    let nn = side * cols;
    let mut g = Game::new(nn, [fin(-1), fin(1)])?;
    let id = |i: usize, j: usize| i * cols + j;
    for i in 0..side {
        for j in 0..cols {
            for i2 in 0..side {
                for j2 in 0..cols {
                    let (a, b) = (id(i, j), id(i2, j2));
                    if a < b {
                        let w = if i == i2 || j == j2 { fin(1) } else { fin(-1) };
                        g.set_weight(a, b, w)?;
                    }
                }
            }
        }
    }
    let rows = Partition::new(
        nn,
        (0..side).map(|i| (0..cols).map(|j| id(i, j)).collect()).collect(),
    )?;
    let columns = Partition::new(
        nn,
        (0..cols).map(|j| (0..side).map(|i| id(i, j)).collect()).collect(),
    )?;
    Ok((g, rows, columns))
}

pub fn poa_grid_claims(k: usize, n: usize) -> Result<Vec<Claim>> {
    let (_, rows, columns) = poa_grid(k, n)?;
    let side = k + 1;
    let cols = n / (side * side) * side;
    let nn = side * cols;
    // f(rows)/f(columns) = ((k+1) floor(n/(k+1)^2) - 1) / k.
    let num = (nn * (cols - 1)) as i128;
    let den = (nn * k) as i128;
    Ok(vec![
        Claim::PartitionStable {
            name: format!("poa_grid({k},{n}) columns partition is {k}-stable"),
            partition: columns.clone(),
            k,
            expect: true,
        },
        Claim::PartitionRatio {
            name: format!("poa_grid({k},{n}) rows/columns utility ratio"),
            high: rows,
            low: columns,
            expect_num: num,
            expect_den: den,
        },
    ])
}

/// `n'/(kb)` cliques of size `kb` at weight `b`, cross edges at `b' < b`.
pub fn poa_blocks(k: usize, b: i64, bprime: i64, n: usize) -> Result<(Game, Partition, Partition)> {
    if !(0 < bprime && bprime < b) {
        return Err(Error::InvalidParam("need 0 < b' < b".into()));
    }
    let part = k * b as usize;
    let parts = n / part;
    if parts == 0 {
        return Err(Error::InvalidParam("n too small".into()));
    }
    let nn = parts * part;
    let mut g = Game::new(nn, [fin(bprime), fin(b)])?;
    for u in 0..nn {
        for v in u + 1..nn {
            let w = if u / part == v / part { fin(b) } else { fin(bprime) };
            g.set_weight(u, v, w)?;
        }
    }
    let grand = Partition::new(nn, vec![(0..nn).collect()])?;
    let blocks = Partition::new(
        nn,
        (0..parts)
            .map(|i| (i * part..(i + 1) * part).collect())
            .collect(),
    )?;
    Ok((g, grand, blocks))
}

/// Games whose worst Nash equilibrium has zero utility while good partitions
/// reach at least `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroNashVariant {
    /// `{-inf, 0, b}`: two 0-cliques bridged by b-edges, with one guard
    /// node per side.
    Guarded,
    /// `{-a, b}`: a d-regular `-a` circulant where the all-in-one partition
    /// gives every node exactly zero.
    Circulant,
}

pub struct ZeroNash {
    pub game: Game,
    /// The 1-stable partition with zero global utility.
    pub bad: Partition,
    /// A partition witnessing `f >= R`.
    pub good: Partition,
}

pub fn poa_zero_nash(variant: ZeroNashVariant, b: i64, a: i64, r: i64) -> Result<ZeroNash> {
    if b <= 0 || r < 1 {
        return Err(Error::InvalidParam("need b > 0 and R >= 1".into()));
    }
    match variant {
        ZeroNashVariant::Guarded => {
            // n' >= sqrt(R / 2b).
            let mut np = 1usize;
            while 2 * b * (np as i64) * (np as i64) < r {
                np += 1;
            }
            let n = 2 * np + 2;
            let (v1, v2) = (2 * np, 2 * np + 1);
            let mut g = Game::new(n, [W_INF, fin(0), fin(b)])?;
            for x in 0..np {
                for y in np..2 * np {
                    g.set_weight(x, y, fin(b))?;
                }
            }
            for x in 0..np {
                g.set_weight(x, v2, W_INF)?;
            }
            for y in np..2 * np {
                g.set_weight(y, v1, W_INF)?;
            }
            let bad = Partition::new(
                n,
                vec![
                    (0..np).chain([v1]).collect(),
                    (np..2 * np).chain([v2]).collect(),
                ],
            )?;
            let good = Partition::new(n, vec![(0..2 * np).collect(), vec![v1, v2]])?;
            Ok(ZeroNash { game: g, bad, good })
        }
        ZeroNashVariant::Circulant => {
            if a <= 0 {
                return Err(Error::InvalidParam("circulant variant needs a > 0".into()));
            }
            // n' >= R / (2b(b+a)).
            let mut np = 1i64;
            while 2 * b * (b + a) * np < r {
                np += 1;
            }
            let d = (2 * np * b) as usize;
            let n = (2 * np * (b + a) + 1) as usize;
            // d-regular -a graph on offsets {2..d/2+1}: offset-1 pairs stay
            // friends so consecutive pairs witness f >= R.
            let mut g = Game::new(n, [fin(-a), fin(b)])?;
            for u in 0..n {
                for v in u + 1..n {
                    let off = (v - u).min(n - (v - u));
                    let w = if (2..=d / 2 + 1).contains(&off) { fin(-a) } else { fin(b) };
                    g.set_weight(u, v, w)?;
                }
            }
            let bad = Partition::new(n, vec![(0..n).collect()])?;
            let mut groups: Vec<Vec<usize>> = (0..(n - 1) / 2)
                .map(|i| vec![2 * i, 2 * i + 1])
                .collect();
            groups.push(vec![n - 1]);
            let good = Partition::new(n, groups)?;
            Ok(ZeroNash { game: g, bad, good })
        }
    }
}

// ---- multichannel constructions ----

/// Rewrites a `q`-channel configuration problem as a single-channel game:
/// `q` mutually hostile copies per node, and per positive edge `uv` and
/// channel `g` a two-node gadget whose link weights encode the marginal
/// value `h(g,w) - h(g-1,w)`. All weights are scaled by 4 to keep the
/// `3/4` gadget weight integral.
pub struct MultichannelTransform {
    pub game: Game,
    pub q: usize,
    /// Copy node ids per original node.
    pub copies: Vec<Vec<usize>>,
    /// Gadget hub per (positive edge index, channel).
    pub hubs: Vec<Vec<usize>>,
    pub pos_edges: Vec<(usize, usize)>,
}

pub fn multichannel_transform(game: &Game, q: usize, h: &HFunction) -> Result<MultichannelTransform> {
    if q == 0 {
        return Err(Error::InvalidParam("q must be >= 1".into()));
    }
    for (_, _, w) in game.stored_edges() {
        match w {
            Weight::Finite(x) if x < 0 => {
                return Err(Error::InvalidParam(
                    "transform requires weights in {-inf} union N".into(),
                ))
            }
            _ => {}
        }
    }
    let n = game.n();
    let pos_edges: Vec<(usize, usize)> = {
        let mut e: Vec<_> = game
            .stored_edges()
            .filter(|&(_, _, w)| matches!(w, Weight::Finite(x) if x > 0) || w == Weight::BestFriend)
            .map(|(u, v, _)| (u.min(v), u.max(v)))
            .collect();
        e.sort();
        e
    };
    let big = game.resolve_bestfriend();
    let copies: Vec<Vec<usize>> = (0..n).map(|u| (u * q..(u + 1) * q).collect()).collect();
    let base = n * q;
    let total = base + pos_edges.len() * q * 2;
    let mut weights: Vec<(usize, usize, i64)> = Vec::new();
    let mut conflicts: Vec<(usize, usize)> = Vec::new();
    // Copies of one node are mutually hostile.
    for u in 0..n {
        for i in 0..q {
            for j in i + 1..q {
                conflicts.push((copies[u][i], copies[u][j]));
            }
        }
    }
    // Non-positive base edges copy over (scaled zero stays zero).
    for (u, v, w) in game.stored_edges() {
        if w == W_INF {
            for i in 0..q {
                for j in 0..q {
                    conflicts.push((copies[u][i], copies[v][j]));
                }
            }
        }
    }
    let mut hubs: Vec<Vec<usize>> = Vec::new();
    for (ei, &(u, v)) in pos_edges.iter().enumerate() {
        let w = match game.weight(u, v) {
            Weight::Finite(x) => x,
            Weight::BestFriend => big,
            Weight::NegInfinity => unreachable!(),
        };
        let mut edge_hubs = Vec::new();
        for g in 1..=q {
            let hub = base + (ei * q + (g - 1)) * 2;
            let pendant = hub + 1;
            edge_hubs.push(hub);
            let marginal = h.eval_int(g as u32, w)? - h.eval_int(g as u32 - 1, w)?;
            // Scaled by 4: link = 2*marginal, anchor = 3*marginal.
            for i in 0..q {
                weights.push((copies[u][i], hub, 2 * marginal));
                weights.push((copies[v][i], hub, 2 * marginal));
            }
            weights.push((hub, pendant, 3 * marginal));
            for other in 0..total {
                if other != hub && other != pendant && other > pendant {
                    conflicts.push((pendant, other));
                }
            }
            for x in 0..pendant {
                if x != hub {
                    conflicts.push((x, pendant));
                }
            }
            // Hubs of the same edge conflict pairwise.
            for &prev in &edge_hubs[..edge_hubs.len() - 1] {
                conflicts.push((prev, hub));
            }
        }
        hubs.push(edge_hubs);
    }
    let mut set: Vec<Weight> = vec![W_INF];
    set.extend(weights.iter().map(|&(_, _, w)| fin(w)));
    let mut g = Game::new(total, set)?;
    for (u, v, w) in weights {
        if w != 0 {
            g.set_weight(u, v, fin(w))?;
        }
    }
    for (u, v) in conflicts {
        g.set_weight(u, v, W_INF)?;
    }
    Ok(MultichannelTransform {
        game: g,
        q,
        copies,
        hubs,
        pos_edges,
    })
}

/// Extracts the `q`-channel configuration a partition of the transformed
/// game encodes: copy nodes map back to their original node, gadget nodes
/// drop out.
pub fn extract_configuration(t: &MultichannelTransform, p: &Partition, n: usize) -> Configuration {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for grp in p.groups() {
        let mut orig: Vec<usize> = grp
            .iter()
            .filter(|&&x| x < n * t.q)
            .map(|&x| x / t.q)
            .collect();
        orig.sort_unstable();
        orig.dedup();
        if !orig.is_empty() {
            groups.push(orig);
        }
    }
    Configuration::from_groups(n, t.q, groups)
}

/// The uniform 2-channel counterexample: the no-3-stable base graph with a
/// unit clique of order `p` attached per base node (shared across the four
/// indifferent edges). Structural claims only; the configuration space is
/// far beyond desk scale.
pub struct Uniform2Channel {
    pub game: Game,
    pub p: usize,
    pub shared_cliques: usize,
    pub solo_cliques: usize,
}

pub fn uniform_2channel_counterexample(p: usize) -> Result<Uniform2Channel> {
    let base = fig3_no3stable(2)?;
    let nb = base.n();
    if p <= 2 * nb {
        return Err(Error::InvalidParam(format!("p must exceed {}", 2 * nb)));
    }
    // Base nodes on an indifferent (weight 0) edge share one clique per
    // such edge; every other base node gets its own clique.
    let zero_edges: Vec<(usize, usize)> = base
        .stored_edges()
        .filter(|&(_, _, w)| w == fin(0))
        .map(|(u, v, _)| (u.min(v), u.max(v)))
        .collect();
    let mut on_zero = vec![false; nb];
    for &(u, v) in &zero_edges {
        on_zero[u] = true;
        on_zero[v] = true;
    }
    let solo: Vec<usize> = (0..nb).filter(|&u| !on_zero[u]).collect();
    let total = nb + (zero_edges.len() + solo.len()) * p;
    let mut g = Game::new(total, [W_INF, fin(1)])?;
    for u in 0..total {
        for v in u + 1..total {
            g.set_weight(u, v, W_INF)?;
        }
    }
    for (u, v, w) in base.stored_edges() {
        // Indifferent base edges become unit friendships, pinned by the
        // shared clique.
        let w = if w == fin(0) { fin(1) } else { w };
        g.set_weight(u, v, w)?;
    }
    let mut next = nb;
    for &(u, v) in &zero_edges {
        for x in next..next + p {
            for y in x + 1..next + p {
                g.set_weight(x, y, fin(1))?;
            }
            g.set_weight(u, x, fin(1))?;
            g.set_weight(v, x, fin(1))?;
        }
        next += p;
    }
    for &u in &solo {
        for x in next..next + p {
            for y in x + 1..next + p {
                g.set_weight(x, y, fin(1))?;
            }
            g.set_weight(u, x, fin(1))?;
        }
        next += p;
    }
    Ok(Uniform2Channel {
        game: g,
        p,
        shared_cliques: zero_edges.len(),
        solo_cliques: solo.len(),
    })
}

pub fn uniform_2channel_claims(built: &Uniform2Channel) -> Vec<Claim> {
    let weights_ok = built
        .game
        .stored_edges()
        .all(|(_, _, w)| w == W_INF || w == fin(1));
    let node_count = built.game.n() == 14 + built.solo_cliques * built.p + 4 * built.p;
    vec![
        Claim::Structural {
            name: "uniform 2-channel graph uses weights {-inf, 1}".into(),
            ok: weights_ok,
        },
        Claim::Structural {
            name: format!(
                "uniform 2-channel graph has one shared clique per indifferent edge ({}) and {} solo cliques",
                built.shared_cliques, built.solo_cliques
            ),
            ok: built.shared_cliques == 4 && node_count,
        },
    ]
}

/// Serializes a named gallery game for the CLI.
pub fn build_named(name: &str, params: &[i64]) -> Result<(serde_json::Value, String)> {
    let (json, desc) = match name {
        "fig2" => {
            let (w1, w2, w3) = match params {
                [] => (2, 3, 4),
                [a, b, c] => (*a, *b, *c),
                _ => return Err(Error::InvalidParam("fig2 takes 0 or 3 params".into())),
            };
            (
                fig2_rotation(w1, w2, w3)?.to_json(),
                format!("rotation game ({w1},{w2},{w3})"),
            )
        }
        "fig3" => {
            let h = params.first().copied().unwrap_or(2) as usize;
            (fig3_no3stable(h)?.to_json(), format!("no-3-stable graph h={h}"))
        }
        "extent" => {
            let (a, b) = match params {
                [] => (1, 2),
                [a, b] => (*a, *b),
                _ => return Err(Error::InvalidParam("extent takes 0 or 2 params".into())),
            };
            (extent_ab(a, b)?.to_json(), format!("two-positive-weights graph ({a},{b})"))
        }
        "negab" => {
            let (a, b) = match params {
                [] => (1, 2),
                [a, b] => (*a, *b),
                _ => return Err(Error::InvalidParam("negab takes 0 or 2 params".into())),
            };
            (negab(a, b)?.game.to_json(), format!("{{-a,b}} construction ({a},{b})"))
        }
        "chaotic4" => (chaotic4().to_json(), "4-node chaotic core".into()),
        "chaotic-channels" => {
            let q = params.first().copied().unwrap_or(2) as usize;
            (chaotic_channels(q)?.to_json(), format!("chaotic core with {q} channels pinned"))
        }
        "asym-partition" => {
            let values = if params.is_empty() { vec![1, 2, 3] } else { params.to_vec() };
            (
                asym_partition_reduction(&values)?.to_json(),
                format!("balanced-split reduction over {values:?}"),
            )
        }
        "gossip-3col" => {
            // params: n, then edge pairs.
            let n = params.first().copied().unwrap_or(3) as usize;
            let edges: Vec<(usize, usize)> = params[1.min(params.len())..]
                .chunks(2)
                .filter(|c| c.len() == 2)
                .map(|c| (c[0] as usize, c[1] as usize))
                .collect();
            (
                gossip_3coloring_reduction(n, &edges)?.to_json(),
                format!("gossip 3-coloring reduction on {n} vertices"),
            )
        }
        "poa-grid" => {
            let (k, n) = match params {
                [] => (2, 36),
                [k, n] => (*k as usize, *n as usize),
                _ => return Err(Error::InvalidParam("poa-grid takes 0 or 2 params".into())),
            };
            (poa_grid(k, n)?.0.to_json(), format!("grid game k={k} n={n}"))
        }
        "poa-blocks" => {
            let (k, b, bp, n) = match params {
                [] => (2, 2, 1, 16),
                [k, b, bp, n] => (*k as usize, *b, *bp, *n as usize),
                _ => return Err(Error::InvalidParam("poa-blocks takes 0 or 4 params".into())),
            };
            (
                poa_blocks(k, b, bp, n)?.0.to_json(),
                format!("block game k={k} b={b} b'={bp} n={n}"),
            )
        }
        "poa-zero-nash" => {
            let (b, a, r) = match params {
                [] => (1, 1, 8),
                [b, a, r] => (*b, *a, *r),
                _ => return Err(Error::InvalidParam("poa-zero-nash takes 0 or 3 params".into())),
            };
            (
                poa_zero_nash(ZeroNashVariant::Circulant, b, a, r)?.game.to_json(),
                format!("zero-utility Nash circulant b={b} a={a} R={r}"),
            )
        }
        "uniform-2channel" => {
            let p = params.first().copied().unwrap_or(29) as usize;
            (
                uniform_2channel_counterexample(p)?.game.to_json(),
                format!("uniform 2-channel counterexample p={p}"),
            )
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "unknown gallery game \"{other}\""
            )))
        }
    };
    Ok((json, desc))
}

/// All claims for a named gallery game, with the game they apply to.
pub fn named_claims(name: &str) -> Result<(Game, Vec<Claim>)> {
    match name {
        "fig2" => Ok((fig2_rotation(2, 3, 4)?, fig2_claims())),
        "fig3" => Ok((fig3_no3stable(2)?, fig3_claims())),
        "extent" => Ok((extent_ab(1, 2)?, extent_claims())),
        "negab" => {
            let built = negab(1, 2)?;
            let claims = negab_claims(&built, 1, 2);
            Ok((built.game, claims))
        }
        "chaotic4" => Ok((chaotic4(), chaotic4_claims())),
        "chaotic-channels" => Ok((chaotic_channels(2)?, chaotic_channels_claims(2, 1000))),
        "poa-grid" => Ok((poa_grid(2, 36)?.0, poa_grid_claims(2, 36)?)),
        "uniform-2channel" => {
            let built = uniform_2channel_counterexample(29)?;
            let claims = uniform_2channel_claims(&built);
            Ok((built.game, claims))
        }
        other => Err(Error::InvalidParam(format!(
            "no claims registered for \"{other}\""
        ))),
    }
}

/// Verification summary for the CLI.
pub fn verify_named(name: &str, budget: SearchBudget) -> Result<Vec<(String, Verdict)>> {
    let (game, claims) = named_claims(name)?;
    Ok(claims
        .iter()
        .map(|c| (c.name().to_string(), verify(&game, c, budget)))
        .collect())
}

pub fn claims_to_json(results: &[(String, Verdict)]) -> serde_json::Value {
    json!(results
        .iter()
        .map(|(name, v)| {
            let status = match v {
                Verdict::Pass => "PASS".to_string(),
                Verdict::Fail(m) => format!("FAIL: {m}"),
                Verdict::Infeasible(m) => format!("INFEASIBLE: {m}"),
            };
            json!({"claim": name, "result": status})
        })
        .collect::<Vec<_>>())
}

pub use crate::game::EitherGame;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{global_utility, utility, ExtendedUtility};
    use crate::stability::FeasiblePartitions;

    #[test]
    fn fig2_structure() {
        let g = fig2_rotation(2, 3, 4).unwrap();
        assert_eq!(g.n(), 6);
        assert!(fig2_rotation(1, 2, 4).is_err());
        // Weight set matches the declared one.
        let ws: Vec<Weight> = g.weight_set().iter().copied().collect();
        assert_eq!(ws, vec![W_INF, fin(2), fin(3), fin(4)]);
    }

    #[test]
    fn fig3_sizes() {
        assert_eq!(fig3_no3stable(2).unwrap().n(), 14);
        assert_eq!(fig3_no3stable(3).unwrap().n(), 18);
        assert!(fig3_no3stable(1).is_err());
    }

    #[test]
    fn extent_structure_and_twins() {
        let g = extent_ab(1, 2).unwrap();
        assert!(extent_ab(2, 2).is_err());
        let twins = g.find_twins();
        // x1,x2 of each clique are twins; the a-weighted member is not.
        for base in [0usize, 3, 6] {
            assert!(twins.contains(&(base, base + 1)), "({base},{}) twins", base + 1);
            assert!(!twins.contains(&(base, base + 2)));
            assert!(!twins.contains(&(base + 1, base + 2)));
        }
    }

    #[test]
    fn extent_one_stable_partitions_keep_cliques() {
        let g = extent_ab(1, 2).unwrap();
        let view = g.view();
        let mut found = 0usize;
        for p in FeasiblePartitions::new(&view) {
            if stability::is_k_stable_view(&view, &p, 1, false) {
                found += 1;
                for base in [0usize, 3, 6] {
                    let gi = p.group_of(base);
                    assert_eq!(gi, p.group_of(base + 1));
                    assert_eq!(gi, p.group_of(base + 2));
                }
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn negab_minimal_parameters() {
        let built = negab(1, 2).unwrap();
        assert_eq!(built.t, [20, 80, 260]);
        assert_eq!(built.s, [3 * 20 + 12, 3 * 80 + 12, 3 * 260 + 12]);
        for c in negab_claims(&built, 1, 2) {
            assert!(verify(&built.game, &c, SearchBudget::default()).is_pass());
        }
    }

    #[test]
    fn chaotic4_weights() {
        let g = chaotic4();
        assert_eq!(g.weight(0, 3), fin(7));
        assert_eq!(g.weight(1, 2), fin(-4));
        // Negative-utility member rules out this grouping ever being stable.
        let p = Partition::new(4, vec![vec![0], vec![1, 2, 3]]).unwrap();
        assert_eq!(utility(&g, &p, 2).unwrap(), ExtendedUtility::Finite(-2));
    }

    #[test]
    fn asym_reduction_examples() {
        for (values, expect) in [
            (vec![1i64, 2, 3], true),
            (vec![1, 1, 3], false),
            (vec![1, 1], true),
        ] {
            assert_eq!(balanced_split_exists(&values), expect, "{values:?}");
            let g = asym_partition_reduction(&values).unwrap();
            let view = g.view();
            let found = stability::exists_k_stable_view(
                &view,
                1,
                false,
                SearchBudget::default(),
                None,
            )
            .unwrap();
            assert_eq!(found.is_some(), expect, "{values:?}");
        }
    }

    #[test]
    fn gossip_reduction_examples() {
        // Triangle: 3-colorable, the color partition is 2-stable and
        // gossip-stable.
        let tri = [(0usize, 1usize), (1, 2), (0, 2)];
        assert!(gossip_stable_exists_restricted(3, &tri).unwrap());
        let game = gossip_3coloring_reduction(3, &tri).unwrap();
        let p = gossip_candidate_partition(3, &[0, 1, 2]).unwrap();
        assert!(stability::is_k_stable(&game, &p, 2, true).unwrap());
        // Every node has utility >= 1 in the candidate partition.
        for u in 0..game.n() {
            assert!(utility(&game, &p, u).unwrap() >= ExtendedUtility::Finite(1));
        }

        // K4 is not 3-colorable.
        let k4 = [(0usize, 1usize), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        assert!(!gossip_stable_exists_restricted(4, &k4).unwrap());

        // A single edge.
        assert!(gossip_stable_exists_restricted(2, &[(0, 1)]).unwrap());
    }

    #[test]
    fn bar_g_structure() {
        let mut seed = Game::new(2, [fin(1)]).unwrap();
        seed.set_weight(0, 1, fin(1)).unwrap();
        let g = bar_g(&seed, 2).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.weight(0, 1), fin(1));
        assert_eq!(g.weight(2, 3), fin(1));
        assert_eq!(g.weight(0, 2), fin(1));
    }

    #[test]
    fn tilde_g_preserves_stability_small() {
        use crate::test_support::GameSampler;
        let mut sampler = GameSampler::new(404);
        for _ in 0..4 {
            let seed = sampler.sample(4);
            if seed.view().max_positive_weight() == 0 {
                continue;
            }
            let (tg, blocks) = tilde_g(&seed, 5).unwrap();
            for k in 1..=2 {
                let orig = stability::exists_k_stable(&seed, k, false, SearchBudget::default())
                    .unwrap()
                    .is_some();
                let lifted = stability::exists_k_stable_view(
                    &tg.view(),
                    k,
                    false,
                    SearchBudget::default(),
                    Some(&blocks),
                )
                .unwrap()
                .is_some();
                assert_eq!(orig, lifted, "k={k}");
            }
        }
    }

    #[test]
    fn poa_grid_values() {
        let (g, rows, columns) = poa_grid(2, 36).unwrap();
        assert_eq!(g.n(), 36);
        assert_eq!(
            global_utility(&g, &rows),
            ExtendedUtility::Finite(36 * 11)
        );
        assert_eq!(global_utility(&g, &columns), ExtendedUtility::Finite(36 * 2));
        for c in poa_grid_claims(2, 36).unwrap() {
            assert!(verify(&g, &c, SearchBudget::default()).is_pass(), "{}", c.name());
        }
    }

    #[test]
    fn poa_blocks_values() {
        let (g, grand, blocks) = poa_blocks(2, 2, 1, 16).unwrap();
        let fg = global_utility(&g, &grand).finite().unwrap();
        let fb = global_utility(&g, &blocks).finite().unwrap();
        // f(blocks) = n b (kb - 1); the ratio matches the closed form
        // 1 + (b'/b) * kb(floor(n/kb) - 1)/(kb-1) = 3.
        assert_eq!(fb, 16 * 2 * 3);
        assert_eq!(fg, 3 * fb);
        assert!(stability::is_k_stable(&g, &blocks, 2, false).unwrap());
    }

    #[test]
    fn zero_nash_variants() {
        for variant in [ZeroNashVariant::Guarded, ZeroNashVariant::Circulant] {
            let z = poa_zero_nash(variant, 1, 1, 8).unwrap();
            assert_eq!(global_utility(&z.game, &z.bad), ExtendedUtility::Finite(0));
            assert!(stability::is_k_stable(&z.game, &z.bad, 1, false).unwrap());
            let good = global_utility(&z.game, &z.good).finite().unwrap();
            assert!(good >= 8, "{variant:?}: {good}");
        }
        // The circulant's all-in-one utility is zero per node.
        let z = poa_zero_nash(ZeroNashVariant::Circulant, 1, 1, 8).unwrap();
        for u in 0..z.game.n() {
            assert_eq!(utility(&z.game, &z.bad, u).unwrap(), ExtendedUtility::Finite(0));
        }
    }

    #[test]
    fn uniform_2channel_structure() {
        let built = uniform_2channel_counterexample(29).unwrap();
        for c in uniform_2channel_claims(&built) {
            assert!(verify(&built.game, &c, SearchBudget::default()).is_pass());
        }
        assert_eq!(built.game.n(), 14 + 6 * 29 + 4 * 29);
    }

    #[test]
    fn named_build_round_trips() {
        for name in ["fig2", "fig3", "extent", "chaotic4", "poa-grid"] {
            let (json, _) = build_named(name, &[]).unwrap();
            Game::from_json(&json).unwrap();
        }
        assert!(build_named("nope", &[]).is_err());
    }
}
