//! Shared fixtures for unit tests.

use crate::game::{Game, Partition, Weight};

/// The 12-node hub-cliques game: four triangles of unit friends, one
/// designated connector per triangle, connectors pairwise friends, every
/// other pair enemies. Nodes 3i is the connector of triangle i.
pub fn fig1_game() -> Game {
    let mut g = Game::new(12, [Weight::NegInfinity, Weight::Finite(1)]).unwrap();
    for u in 0..12 {
        for v in u + 1..12 {
            g.set_weight(u, v, Weight::NegInfinity).unwrap();
        }
    }
    for i in 0..4 {
        let base = 3 * i;
        for a in 0..3 {
            for b in a + 1..3 {
                g.set_weight(base + a, base + b, Weight::Finite(1)).unwrap();
            }
        }
    }
    for i in 0..4 {
        for j in i + 1..4 {
            g.set_weight(3 * i, 3 * j, Weight::Finite(1)).unwrap();
        }
    }
    g
}

/// The four-triangles partition of [`fig1_game`].
pub fn fig1_left() -> Partition {
    Partition::new(
        12,
        (0..4).map(|i| vec![3 * i, 3 * i + 1, 3 * i + 2]).collect(),
    )
    .unwrap()
}

/// The 4-node game over weights {-inf, -4, 2, 6, 7} with no 2-stable
/// partition.
pub fn chaotic4_game() -> Game {
    crate::gallery::chaotic4()
}

pub fn fig3_like(h: usize) -> Game {
    crate::gallery::fig3_no3stable(h).unwrap()
}

pub fn fig2_game() -> Game {
    crate::gallery::fig2_rotation(2, 3, 4).unwrap()
}

/// Deterministic small random symmetric games for property sweeps.
pub struct GameSampler {
    rng: rand_chacha::ChaCha8Rng,
}

impl GameSampler {
    pub fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        GameSampler {
            rng: rand_chacha::ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Samples a game with `n` nodes over a randomly chosen small weight set.
    pub fn sample(&mut self, n: usize) -> Game {
        use rand::Rng;
        let sets: &[&[Weight]] = &[
            &[Weight::NegInfinity, Weight::Finite(1)],
            &[Weight::NegInfinity, Weight::Finite(0), Weight::Finite(1)],
            &[
                Weight::NegInfinity,
                Weight::Finite(-2),
                Weight::Finite(0),
                Weight::Finite(1),
            ],
            &[Weight::Finite(-1), Weight::Finite(2)],
            &[
                Weight::NegInfinity,
                Weight::Finite(2),
                Weight::Finite(3),
                Weight::Finite(4),
            ],
            &[Weight::Finite(0), Weight::Finite(1)],
        ];
        let set = sets[self.rng.gen_range(0..sets.len())];
        self.sample_from_set(n, set)
    }

    pub fn sample_from_set(&mut self, n: usize, set: &[Weight]) -> Game {
        use rand::Rng;
        let mut g = Game::new(n, set.iter().copied()).unwrap();
        for u in 0..n {
            for v in u + 1..n {
                // Bias towards sparse graphs: default-0 with probability 1/3.
                if self.rng.gen_range(0..3) == 0 {
                    continue;
                }
                let w = set[self.rng.gen_range(0..set.len())];
                g.set_weight(u, v, w).unwrap();
            }
        }
        g
    }

    /// A proper uniform game: every pair is explicitly a unit friend or an
    /// enemy.
    pub fn sample_uniform(&mut self, n: usize) -> Game {
        use rand::Rng;
        let conflicts: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| self.rng.gen_range(0..3) == 0)
            .collect();
        Game::uniform(n, &conflicts).unwrap()
    }

    pub fn rng(&mut self) -> &mut rand_chacha::ChaCha8Rng {
        &mut self.rng
    }
}
