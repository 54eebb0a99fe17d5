//! Optimum computation and price-of-anarchy analysis.

use num::rational::Ratio;
use rayon::prelude::*;

use crate::extensions::{ConfigUtility, Configuration, HFunction};
use crate::game::{ExtendedUtility, Game, Partition, ResolvedView};
use crate::stability::{is_k_stable_view, FeasiblePartitions};
use crate::{Error, Result, SearchBudget};

pub type Rat = Ratio<i128>;

/// Maximum-utility partition, exhaustive over feasible partitions; ties keep
/// the first in canonical enumeration order.
pub fn max_partition(game: &Game, budget: SearchBudget) -> Result<(Partition, ExtendedUtility)> {
    let view = game.view();
    max_partition_view(&view, budget)
}

pub fn max_partition_view(
    view: &ResolvedView,
    budget: SearchBudget,
) -> Result<(Partition, ExtendedUtility)> {
    let mut best: Option<(Partition, ExtendedUtility)> = None;
    scan(view, budget, |p, f| {
        match &best {
            Some((_, b)) if *b >= f => {}
            _ => best = Some((p.clone(), f)),
        }
        false
    })?;
    best.ok_or_else(|| Error::InvalidGame("no feasible partition".into()))
}

/// Minimum-utility `k`-stable partition, or `None` when no stable partition
/// exists.
pub fn worst_k_stable(
    game: &Game,
    k: usize,
    budget: SearchBudget,
) -> Result<Option<(Partition, ExtendedUtility)>> {
    let view = game.view();
    worst_k_stable_view(&view, k, budget)
}

pub fn worst_k_stable_view(
    view: &ResolvedView,
    k: usize,
    budget: SearchBudget,
) -> Result<Option<(Partition, ExtendedUtility)>> {
    if k == 0 {
        return Err(Error::InvalidParam("k must be >= 1".into()));
    }
    let mut worst: Option<(Partition, ExtendedUtility)> = None;
    let mut iter = FeasiblePartitions::new(view);
    let mut examined = 0u64;
    const BATCH: usize = 2048;
    loop {
        let batch: Vec<Partition> = iter.by_ref().take(BATCH).collect();
        if batch.is_empty() {
            return Ok(worst);
        }
        examined += batch.len() as u64;
        if examined > budget.max_states {
            return Err(Error::SearchTooLarge {
                examined,
                budget: budget.max_states,
            });
        }
        let stable: Vec<(usize, ExtendedUtility)> = batch
            .par_iter()
            .enumerate()
            .filter(|(_, p)| is_k_stable_view(view, p, k, false))
            .map(|(i, p)| (i, crate::game::global_utility_view(view, p)))
            .collect();
        for (i, f) in stable {
            match &worst {
                Some((_, w)) if *w <= f => {}
                _ => worst = Some((batch[i].clone(), f)),
            }
        }
    }
}

fn scan(
    view: &ResolvedView,
    budget: SearchBudget,
    mut f: impl FnMut(&Partition, ExtendedUtility) -> bool,
) -> Result<()> {
    let mut examined = 0u64;
    for p in FeasiblePartitions::new(view) {
        examined += 1;
        if examined > budget.max_states {
            return Err(Error::SearchTooLarge {
                examined,
                budget: budget.max_states,
            });
        }
        let util = crate::game::global_utility_view(view, &p);
        if f(&p, util) {
            return Ok(());
        }
    }
    Ok(())
}

/// Exact price of anarchy at coalition size `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PoaRatio {
    Ratio(Rat),
    Infinite,
    /// No `k`-stable partition exists.
    Undefined,
}

#[derive(Debug, Clone)]
pub struct PoaResult {
    pub ratio: PoaRatio,
    pub best: ExtendedUtility,
    pub worst: Option<ExtendedUtility>,
    /// Both optima were zero; the ratio is 1 by convention.
    pub zero_over_zero: bool,
}

/// `f(best) / f(worst k-stable)` as an exact rational; `Infinite` when the
/// worst stable utility is zero but the optimum is positive, `Undefined`
/// when no stable partition exists, and `0/0` is 1 by convention.
pub fn price_of_anarchy(game: &Game, k: usize, budget: SearchBudget) -> Result<PoaResult> {
    let view = game.view();
    let (_, best) = max_partition_view(&view, budget)?;
    let worst = worst_k_stable_view(&view, k, budget)?;
    let Some((_, worst_util)) = worst else {
        return Ok(PoaResult {
            ratio: PoaRatio::Undefined,
            best,
            worst: None,
            zero_over_zero: false,
        });
    };
    let b = best
        .finite()
        .ok_or_else(|| Error::InvalidGame("optimum utility is -inf".into()))?;
    let w = worst_util
        .finite()
        .ok_or_else(|| Error::InvalidGame("worst stable utility is -inf".into()))?;
    let (ratio, zz) = if w == 0 && b == 0 {
        (PoaRatio::Ratio(Rat::from_integer(1)), true)
    } else if w == 0 {
        (PoaRatio::Infinite, false)
    } else {
        (PoaRatio::Ratio(Rat::new(b, w)), false)
    };
    Ok(PoaResult {
        ratio,
        best,
        worst: Some(worst_util),
        zero_over_zero: zz,
    })
}

/// Report for the positive-degree bound on the price of anarchy.
#[derive(Debug, Clone)]
pub struct DeltaBoundReport {
    /// Max number of positive-weight partners over all nodes.
    pub delta_plus: usize,
    /// Number of positive-weight edges.
    pub m_plus: usize,
    pub w_p: i64,
    pub best: i128,
    /// `f(best) <= 2 * m_plus * w_p`.
    pub best_bound_ok: bool,
    /// Every enumerated `k`-stable partition has at least
    /// `ceil(m_plus / delta_plus)` nodes with positive utility, because each
    /// positive edge keeps one endpoint strictly positive.
    pub key_step_ok: bool,
    pub stable_count: usize,
    /// Realized ratio against the worst stable partition, when one exists
    /// with positive utility.
    pub realized_ratio: Option<Rat>,
}

pub fn check_delta_bound(game: &Game, k: usize, budget: SearchBudget) -> Result<DeltaBoundReport> {
    if k < 2 {
        return Err(Error::InvalidParam(
            "the degree bound argument needs k >= 2".into(),
        ));
    }
    let view = game.view();
    let n = view.n();
    let mut m_plus = 0usize;
    let mut degree = vec![0usize; n];
    for u in 0..n {
        for v in u + 1..n {
            if !view.incompatible(u, v) && view.weight(u, v) > 0 {
                m_plus += 1;
                degree[u] += 1;
                degree[v] += 1;
            }
        }
    }
    let delta_plus = degree.iter().copied().max().unwrap_or(0);
    let w_p = view.max_positive_weight();
    let (_, best) = max_partition_view(&view, budget)?;
    let best = best
        .finite()
        .ok_or_else(|| Error::InvalidGame("optimum is -inf".into()))?;
    if m_plus == 0 {
        // Both optima are zero; the ratio is 1 by convention.
        return Ok(DeltaBoundReport {
            delta_plus,
            m_plus,
            w_p,
            best,
            best_bound_ok: best == 0,
            key_step_ok: true,
            stable_count: 0,
            realized_ratio: Some(Rat::from_integer(1)),
        });
    }
    let best_bound_ok = best <= 2 * m_plus as i128 * w_p as i128;
    let needed = m_plus.div_ceil(delta_plus);
    let mut key_step_ok = true;
    let mut stable_count = 0usize;
    let mut worst: Option<i128> = None;
    let mut examined = 0u64;
    for p in FeasiblePartitions::new(&view) {
        examined += 1;
        if examined > budget.max_states {
            return Err(Error::SearchTooLarge {
                examined,
                budget: budget.max_states,
            });
        }
        if !is_k_stable_view(&view, &p, k, false) {
            continue;
        }
        stable_count += 1;
        let mut positive = 0usize;
        for g in p.groups() {
            for &u in g {
                if view.utility_in(u, g) > ExtendedUtility::ZERO {
                    positive += 1;
                }
            }
        }
        // Key step: every positive edge has an endpoint with positive
        // utility, so positive-utility nodes number at least m+/Delta+.
        for u in 0..n {
            for v in u + 1..n {
                if !view.incompatible(u, v) && view.weight(u, v) > 0 {
                    let gu = p.group_of(u).unwrap();
                    let gv = p.group_of(v).unwrap();
                    let fu = view.utility_in(u, &p.groups()[gu]);
                    let fv = view.utility_in(v, &p.groups()[gv]);
                    if fu <= ExtendedUtility::ZERO && fv <= ExtendedUtility::ZERO {
                        key_step_ok = false;
                    }
                }
            }
        }
        if positive < needed {
            key_step_ok = false;
        }
        let f = crate::game::global_utility_view(&view, &p)
            .finite()
            .unwrap_or(i128::MIN);
        worst = Some(match worst {
            Some(w) => w.min(f),
            None => f,
        });
    }
    let realized_ratio = worst.filter(|&w| w > 0).map(|w| Rat::new(best, w));
    Ok(DeltaBoundReport {
        delta_plus,
        m_plus,
        w_p,
        best,
        best_bound_ok,
        key_step_ok,
        stable_count,
        realized_ratio,
    })
}

/// Maximum configuration at `q` channels; `q = 1` coincides with
/// [`max_partition`].
pub fn max_configuration(
    game: &Game,
    h: &HFunction,
    q: usize,
    budget: SearchBudget,
) -> Result<(Configuration, ConfigUtility)> {
    crate::extensions::max_configuration(game, h, q, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::game::{global_utility, Weight};
    use crate::test_support::{fig1_game, fig2_game, GameSampler};

    #[test]
    fn max_partition_examples() {
        let budget = SearchBudget::default();
        // All-positive clique: one group.
        let g = Game::uniform(4, &[]).unwrap();
        let (p, f) = max_partition(&g, budget).unwrap();
        assert_eq!(p.groups().len(), 1);
        assert_eq!(f, ExtendedUtility::Finite(12));

        // The hub-cliques game peaks at the four triangles.
        let g = fig1_game();
        let (p, f) = max_partition(&g, budget).unwrap();
        assert_eq!(f, ExtendedUtility::Finite(24));
        assert_eq!(p.partition_vector().count(3), 4);

        // All-enemies: singletons at zero.
        let mut g = Game::new(4, [Weight::NegInfinity]).unwrap();
        for u in 0..4 {
            for v in u + 1..4 {
                g.set_weight(u, v, Weight::NegInfinity).unwrap();
            }
        }
        let (p, f) = max_partition(&g, budget).unwrap();
        assert_eq!(p.groups().len(), 4);
        assert_eq!(f, ExtendedUtility::ZERO);
    }

    #[test]
    fn worst_stable_examples() {
        let budget = SearchBudget::default();
        assert!(worst_k_stable(&fig2_game(), 2, budget).unwrap().is_none());

        // All-positive clique: the grand coalition is the only stable
        // partition for k >= 2 at this size.
        let g = Game::uniform(4, &[]).unwrap();
        let (p, _) = worst_k_stable(&g, 2, budget).unwrap().unwrap();
        assert_eq!(p.groups().len(), 1);

        // Worst stable utility never decreases with k.
        let mut sampler = GameSampler::new(31);
        for _ in 0..15 {
            let g = sampler.sample(6);
            let mut prev: Option<i128> = None;
            for k in 1..=3 {
                let Some((_, f)) = worst_k_stable(&g, k, budget).unwrap() else {
                    break;
                };
                let f = f.finite().unwrap();
                if let Some(p) = prev {
                    assert!(f >= p, "worst utility dropped from {p} to {f} at k={k}");
                }
                prev = Some(f);
            }
        }
    }

    #[test]
    fn poa_examples() {
        let budget = SearchBudget::default();
        // Single friendly pair: ratio 1.
        let mut pair = Game::new(2, [Weight::Finite(1)]).unwrap();
        pair.set_weight(0, 1, Weight::Finite(1)).unwrap();
        let r = price_of_anarchy(&pair, 1, budget).unwrap();
        assert_eq!(r.ratio, PoaRatio::Ratio(Rat::from_integer(1)));

        // The zero-utility Nash circulant: infinite at k = 1.
        let z = gallery::poa_zero_nash(gallery::ZeroNashVariant::Circulant, 1, 1, 8).unwrap();
        let r = price_of_anarchy(&z.game, 1, budget).unwrap();
        assert_eq!(r.ratio, PoaRatio::Infinite);
        assert!(r.best >= ExtendedUtility::Finite(8));

        // No stable partition: undefined.
        let r = price_of_anarchy(&fig2_game(), 2, budget).unwrap();
        assert_eq!(r.ratio, PoaRatio::Undefined);
    }

    #[test]
    fn delta_bound_block_example() {
        let budget = SearchBudget::default();
        let (g, grand, blocks) = gallery::poa_blocks(2, 2, 1, 16).unwrap();
        // The closed form: 1 + (b'/b) * kb(floor(n/kb) - 1)/(kb - 1) = 3.
        let fg = global_utility(&g, &grand).finite().unwrap();
        let fb = global_utility(&g, &blocks).finite().unwrap();
        assert_eq!(Rat::new(fg, fb), Rat::from_integer(3));
        let _ = budget;
    }

    #[test]
    fn delta_bound_zero_edges() {
        let budget = SearchBudget::default();
        let mut g = Game::new(3, [Weight::Finite(-1)]).unwrap();
        g.set_weight(0, 1, Weight::Finite(-1)).unwrap();
        let rep = check_delta_bound(&g, 2, budget).unwrap();
        assert_eq!(rep.m_plus, 0);
        assert_eq!(rep.realized_ratio, Some(Rat::from_integer(1)));
        assert!(rep.key_step_ok);
    }

    #[test]
    fn delta_bound_random_sweep() {
        let budget = SearchBudget::default();
        let mut sampler = GameSampler::new(55);
        for _ in 0..10 {
            let g = sampler.sample(6);
            let rep = check_delta_bound(&g, 2, budget).unwrap();
            assert!(rep.best_bound_ok, "f(P+) exceeded 2 m+ w_p");
            assert!(rep.key_step_ok, "positive edge with both endpoints at zero");
        }
    }

    #[test]
    fn max_configuration_examples() {
        let budget = SearchBudget::default();
        // q = 1 equals max_partition.
        let g = Game::uniform(4, &[(0, 1)]).unwrap();
        let (c, f) = max_configuration(&g, &HFunction::Indicator, 1, budget).unwrap();
        let (p, fp) = max_partition(&g, budget).unwrap();
        assert_eq!(c.as_partition().unwrap(), p);
        assert_eq!(
            f.finite().unwrap(),
            Rat::from_integer(fp.finite().unwrap())
        );

        // Star with hostile leaves: two channels beat one.
        let mut star = Game::new(3, [Weight::NegInfinity, Weight::Finite(1)]).unwrap();
        star.set_weight(0, 1, Weight::Finite(1)).unwrap();
        star.set_weight(0, 2, Weight::Finite(1)).unwrap();
        star.set_weight(1, 2, Weight::NegInfinity).unwrap();
        let (_, f1) = max_configuration(&star, &HFunction::Indicator, 1, budget).unwrap();
        let (_, f2) = max_configuration(&star, &HFunction::Indicator, 2, budget).unwrap();
        assert!(f2 > f1);
    }

    #[test]
    fn optimum_monotone_in_q() {
        let budget = SearchBudget::default();
        let mut sampler = GameSampler::new(21);
        for _ in 0..5 {
            let g = sampler.sample(4);
            let mut prev: Option<ConfigUtility> = None;
            for q in 1..=2 {
                let (_, f) = max_configuration(&g, &HFunction::Indicator, q, budget).unwrap();
                if let Some(p) = prev {
                    assert!(f >= p);
                }
                prev = Some(f);
            }
        }
    }
}
