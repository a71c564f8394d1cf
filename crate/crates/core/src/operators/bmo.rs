use serde::Serialize;

use crate::function::StepFunction;
use crate::lattice::IntervalId;

use super::{integral_over, interval_averages};

/// Martingale BMO norm: `c1` bounds the local square-function energy,
/// `c2` bounds every single difference, and `value = max(c1, c2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BmoNorm {
    pub c1: f64,
    pub c2: f64,
    pub value: f64,
    /// Interval attaining `c1`.
    pub c1_witness: IntervalId,
    /// Interval attaining `c2`; `None` when the lattice has no non-leaf interval.
    pub c2_witness: Option<IntervalId>,
}

/// Computes `c1` from difference energies `∫|Δ_J g|²` accumulated over
/// subtrees, and `c2` from the child-minus-parent averages.
pub fn bmo_norm(g: &StepFunction) -> BmoNorm {
    let lattice = g.lattice();
    let averages = interval_averages(g);
    let n = lattice.len();

    let mut energy = vec![0.0; n];
    let mut c2 = 0.0;
    let mut c2_witness = None;
    for id in lattice.ids() {
        let parent = averages[id.index()];
        for &c in lattice.children(id) {
            let d = averages[c.index()] - parent;
            energy[id.index()] += lattice.length(c) * d * d;
            if d.abs() > c2 || c2_witness.is_none() {
                c2 = c2.max(d.abs());
                c2_witness = Some(id);
            }
        }
    }
    // children have larger ids than their parent
    for id in lattice.ids().collect::<Vec<_>>().into_iter().rev() {
        if let Some(p) = lattice.parent(id) {
            energy[p.index()] += energy[id.index()];
        }
    }

    let mut best = -1.0;
    let mut c1_witness = lattice.roots()[0];
    for id in lattice.ids() {
        let local = energy[id.index()] / lattice.length(id);
        if local > best {
            best = local;
            c1_witness = id;
        }
    }
    let c1 = best.max(0.0).sqrt();
    BmoNorm {
        c1,
        c2,
        value: c1.max(c2),
        c1_witness,
        c2_witness,
    }
}

/// `(1/|I|) ∫_I |g − ⟨g⟩_I|²`, computed from leaf values alone.
pub fn mean_oscillation(g: &StepFunction, id: IntervalId) -> f64 {
    let lattice = g.lattice();
    let mean = integral_over(g, id) / lattice.length(id);
    let values = g.values();
    let sum: f64 = lattice
        .leaf_range(id)
        .map(|pos| {
            let d = values[pos] - mean;
            d * d * lattice.leaf_length(pos)
        })
        .sum();
    sum / lattice.length(id)
}

/// `c1` evaluated through the variance on every interval instead of the
/// difference energies.
pub fn bmo_c1_by_variance(g: &StepFunction) -> f64 {
    g.lattice()
        .ids()
        .map(|id| mean_oscillation(g, id))
        .fold(0.0, f64::max)
        .sqrt()
}
