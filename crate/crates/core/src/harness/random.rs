use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Distribution;
use crate::function::{CoefSequence, StepFunction};
use crate::lattice::Lattice;

/// Deterministic random leaf values.
pub fn random_function(lattice: &Arc<Lattice>, seed: u64, dist: Distribution) -> StepFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lattice.num_leaves();
    let values = match dist {
        Distribution::Uniform => (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        Distribution::Spiky => {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.01..=0.01)).collect();
            let spikes = rng.gen_range(1..=3.min(n));
            for pos in rand::seq::index::sample(&mut rng, n, spikes) {
                let mass = rng.gen_range(0.5..=1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                v[pos] = mass / lattice.leaf_length(pos);
            }
            v
        }
        Distribution::Sparse => {
            let mut v: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        rng.gen_range(-1.0..=1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            if v.iter().all(|x| *x == 0.0) {
                let pos = rng.gen_range(0..n);
                v[pos] = rng.gen_range(0.5..=1.0);
            }
            v
        }
    };
    StepFunction::from_values_unchecked(lattice.clone(), values)
}

/// Deterministic random sparse coefficients: each interval is kept with
/// probability 0.3 and gets `u · |I|` with `u` uniform in `(0, 1]`, with a
/// random sign when `signed` is set.
pub fn random_coefficients(lattice: &Arc<Lattice>, seed: u64, signed: bool) -> CoefSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = CoefSequence::new(lattice.clone());
    for id in lattice.ids() {
        if !rng.gen_bool(0.3) {
            continue;
        }
        let mut v = rng.gen_range(f64::EPSILON..=1.0) * lattice.length(id);
        if signed && rng.gen_bool(0.5) {
            v = -v;
        }
        a.set(id, v).expect("lattice interval");
    }
    a
}
