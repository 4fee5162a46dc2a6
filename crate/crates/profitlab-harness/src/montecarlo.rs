//! Sampled profit estimates with a 99% normal confidence interval.

use profitlab::mechanisms::{evaluate, simulate, EvalResult, MechanismSpec, Randomness};
use profitlab::model::Instance;
use profitlab::rational::to_f64;
use profitlab::{Error, Q};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.576;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Estimate {
    pub fn covers(&self, exact: &Q) -> bool {
        (self.mean - to_f64(exact)).abs() <= self.half_width
    }
}

struct Coins<'a>(&'a mut ChaCha8Rng);

impl Randomness for Coins<'_> {
    fn flip(&mut self, p: &Q) -> bool {
        use num_traits::{One, Zero};
        if p.is_zero() {
            return false;
        }
        if p.is_one() {
            return true;
        }
        self.0.gen::<f64>() < to_f64(p)
    }
}

fn weighted(probs: &[Q]) -> WeightedIndex<f64> {
    WeightedIndex::new(probs.iter().map(to_f64)).expect("probabilities are positive and sum to one")
}

/// Draws types, costs and every mechanism coin `samples` times.
///
/// Stage-one choices and hiding probabilities depend on exact availability,
/// so they are taken from `result` (an exact evaluation of the same spec).
pub fn sample_profit(
    instance: &Instance,
    spec: &MechanismSpec,
    result: &EvalResult,
    samples: usize,
    seed: u64,
) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let type_pickers: Vec<_> = (0..instance.n()).map(|i| weighted(&instance.types(i).probs)).collect();
    let atom_probs: Vec<Q> = instance.atoms().iter().map(|a| a.prob.clone()).collect();
    let atom_picker = weighted(&atom_probs);
    // Welford's running mean and squared deviation; constant samples give exactly zero spread.
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let mut profile = vec![0; instance.n()];
    for k in 1..=samples {
        for (slot, picker) in profile.iter_mut().zip(&type_pickers) {
            *slot = picker.sample(&mut rng);
        }
        let c = atom_picker.sample(&mut rng);
        let x = to_f64(&simulate(instance, spec, result, &profile, c, &mut Coins(&mut rng)).profit());
        let delta = x - mean;
        mean += delta / k as f64;
        m2 += delta * (x - mean);
    }
    let n = samples as f64;
    let var = if samples > 1 { m2 / (n - 1.0) } else { 0.0 };
    Estimate { mean, half_width: Z99 * (var / n).sqrt(), samples, seed }
}

/// Exact evaluation followed by sampling.
pub fn monte_carlo_eval(
    instance: &Instance,
    spec: &MechanismSpec,
    samples: usize,
    seed: u64,
) -> Result<(EvalResult, Estimate), Error> {
    if samples == 0 {
        return Err(Error::Precondition("at least one sample is required".into()));
    }
    let result = evaluate(instance, spec)?;
    let estimate = sample_profit(instance, spec, &result, samples, seed);
    Ok((result, estimate))
}
