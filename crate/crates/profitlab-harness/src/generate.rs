//! Seeded random instances on a small rational grid.

use anyhow::{ensure, Result};
use profitlab::model::{CostAtom, CostModel, DiscreteDist, Family, FamilyKind, Instance, Mask};
use profitlab::rational::frac;
use profitlab::Q;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyClass {
    Additive,
    DownwardClosed,
    Matroid,
    /// One of the three, uniformly.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub n: (usize, usize),
    pub m: (usize, usize),
    pub max_support: usize,
    /// Cap on one buyer's type-space size; supports are redrawn until it holds.
    pub max_types: usize,
    pub max_atoms: usize,
    pub families: FamilyClass,
    /// Values are multiples of ½ in `[0, value_cap/2]`, costs in `[0, cost_cap/2]`.
    pub value_cap: i64,
    pub cost_cap: i64,
    /// Halve the weight of each successively higher value, so the top of the
    /// support is rare (as in equal-revenue distributions).
    #[serde(default)]
    pub skewed: bool,
    /// Give each buyer, independently, either the full value grid or only `{0, ½}`,
    /// so one buyer often dominates.
    #[serde(default)]
    pub uneven_buyers: bool,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            n: (1, 2),
            m: (1, 2),
            max_support: 3,
            max_types: 9,
            max_atoms: 2,
            families: FamilyClass::Mixed,
            value_cap: 8,
            cost_cap: 6,
            skewed: false,
            uneven_buyers: false,
        }
    }
}

impl CorpusParams {
    pub fn validate(&self) -> Result<()> {
        ensure!(1 <= self.n.0 && self.n.0 <= self.n.1 && self.n.1 <= 3, "need 1 ≤ n ≤ 3");
        ensure!(1 <= self.m.0 && self.m.0 <= self.m.1 && self.m.1 <= 3, "need 1 ≤ m ≤ 3");
        ensure!((1..=4).contains(&self.max_support), "need 1 ≤ max_support ≤ 4");
        ensure!((1..=3).contains(&self.max_atoms), "need 1 ≤ max_atoms ≤ 3");
        ensure!(self.max_types >= 1, "need max_types ≥ 1");
        ensure!(self.value_cap >= 1 && self.cost_cap >= 0, "grid caps must be non-negative");
        ensure!(
            self.max_support as i64 <= self.value_cap + 1,
            "the value grid has fewer points than max_support"
        );
        Ok(())
    }
}

/// Positive integer weights normalized to probabilities.
fn random_probs(rng: &mut impl Rng, k: usize) -> Vec<Q> {
    let w: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = w.iter().sum();
    w.into_iter().map(|x| frac(x, total)).collect()
}

fn random_dist(rng: &mut impl Rng, size: usize, cap: i64, skewed: bool) -> DiscreteDist {
    let mut grid: Vec<i64> = (0..=cap).collect();
    grid.shuffle(rng);
    let mut support: Vec<i64> = grid[..size].to_vec();
    support.sort_unstable();
    let mut probs = random_probs(rng, size);
    if skewed {
        let scaled: Vec<Q> = probs.iter().enumerate().map(|(k, p)| p / frac(1 << k, 1)).collect();
        let total = scaled.iter().fold(Q::from_integer(0.into()), |a, b| a + b);
        probs = scaled.into_iter().map(|p| p / &total).collect();
    }
    DiscreteDist::new(support.into_iter().map(|v| frac(v, 2)).collect(), probs)
        .expect("distinct support with positive weights")
}

/// A common shock plus per-item offsets, so costs are correlated across items.
fn random_costs(rng: &mut impl Rng, m: usize, max_atoms: usize, cap: i64) -> CostModel {
    let target = rng.gen_range(1..=max_atoms);
    let mut vectors: Vec<Vec<i64>> = Vec::new();
    for _ in 0..8 * target {
        if vectors.len() == target {
            break;
        }
        let base = rng.gen_range(0..=cap);
        let v: Vec<i64> = (0..m).map(|_| (base + rng.gen_range(-1..=1)).clamp(0, cap)).collect();
        if !vectors.contains(&v) {
            vectors.push(v);
        }
    }
    let probs = random_probs(rng, vectors.len());
    let atoms = vectors
        .into_iter()
        .zip(probs)
        .map(|(v, prob)| CostAtom { costs: v.into_iter().map(|x| frac(x, 2)).collect(), prob })
        .collect();
    CostModel::new(atoms).expect("distinct vectors with positive weights")
}

fn random_matroid(rng: &mut impl Rng, m: usize) -> Family {
    if rng.gen_bool(0.5) {
        return Family::new(m, FamilyKind::Uniform { rank: rng.gen_range(1..=m) }).expect("valid rank");
    }
    let blocks = rng.gen_range(1..=m);
    let mut parts: Vec<Mask> = vec![0; blocks];
    for j in 0..m {
        // The first `blocks` items seed one part each so no part is empty.
        let p = if j < blocks { j } else { rng.gen_range(0..blocks) };
        parts[p] |= 1 << j;
    }
    let capacities = parts.iter().map(|p| rng.gen_range(1..=p.count_ones() as usize)).collect();
    Family::new(m, FamilyKind::Partition { parts, capacities }).expect("parts cover the ground set")
}

fn random_downward_closed(rng: &mut impl Rng, m: usize) -> Family {
    let full: Mask = (1 << m) - 1;
    let generators = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(1..=full)).collect();
    Family::new(m, FamilyKind::DownwardClosed { generators }).expect("generators inside the ground set")
}

fn random_family(rng: &mut impl Rng, m: usize, class: FamilyClass) -> Family {
    match class {
        FamilyClass::Additive => Family::additive(m),
        FamilyClass::Matroid => random_matroid(rng, m),
        FamilyClass::DownwardClosed => random_downward_closed(rng, m),
        FamilyClass::Mixed => {
            let pick = [FamilyClass::Additive, FamilyClass::DownwardClosed, FamilyClass::Matroid][rng.gen_range(0..3)];
            random_family(rng, m, pick)
        }
    }
}

pub fn random_instance(rng: &mut impl Rng, params: &CorpusParams) -> Instance {
    let n = rng.gen_range(params.n.0..=params.n.1);
    let m = rng.gen_range(params.m.0..=params.m.1);
    let dists = (0..n)
        .map(|_| {
            let cap = if params.uneven_buyers && rng.gen_bool(0.5) { 1 } else { params.value_cap };
            loop {
                let sizes: Vec<usize> =
                    (0..m).map(|_| rng.gen_range(1..=params.max_support.min(cap as usize + 1))).collect();
                if sizes.iter().product::<usize>() <= params.max_types {
                    break sizes.into_iter().map(|s| random_dist(rng, s, cap, params.skewed)).collect();
                }
            }
        })
        .collect();
    let costs = random_costs(rng, m, params.max_atoms, params.cost_cap);
    let families = (0..n).map(|_| random_family(rng, m, params.families)).collect();
    Instance::new(dists, costs, families).expect("generated instances are well formed")
}

/// `count` instances from one seeded stream.
pub fn generate_corpus(params: &CorpusParams, count: usize, seed: u64) -> Result<Vec<Instance>> {
    use rand::SeedableRng;
    params.validate()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| random_instance(&mut rng, params)).collect())
}
