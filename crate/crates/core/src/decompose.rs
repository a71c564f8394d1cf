//! Constructive decompositions: Calderón–Zygmund stopping intervals, the
//! bounded-plus-balayage splitting of a BMO function, the Carleson sequence
//! dual to the maximal function, and the bounded-difference witness that
//! pairs with `f` to give `∫Sf`.

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::function::{CoefSequence, StepFunction};
use crate::lattice::{IntervalId, Lattice, Rational};
use crate::operators::{self, balayage, bmo_norm, interval_averages, maximal, square, BmoNorm};

fn range_average(lattice: &Lattice, h: &[f64], id: IntervalId) -> f64 {
    let sum: f64 = lattice
        .leaf_range(id)
        .map(|pos| h[pos] * lattice.leaf_length(pos))
        .sum();
    sum / lattice.length(id)
}

/// Maximal intervals strictly inside `start` whose `h`-average exceeds
/// `lambda`. Only the leaves of `start` are read from `h`.
fn cz_select(lattice: &Lattice, h: &[f64], start: IntervalId, lambda: f64) -> Vec<IntervalId> {
    let mut selected = Vec::new();
    let mut stack: Vec<IntervalId> = lattice.children(start).iter().rev().copied().collect();
    while let Some(id) = stack.pop() {
        if range_average(lattice, h, id) > lambda {
            selected.push(id);
        } else {
            stack.extend(lattice.children(id).iter().rev());
        }
    }
    selected
}

/// Calderón–Zygmund stopping intervals of `h ≥ 0` inside `start` at height
/// `lambda`: the maximal lattice intervals `J ⊊ start` with `⟨h⟩_J > lambda`,
/// in left-to-right order. The search starts at the children of `start`
/// whatever the average over `start` itself.
pub fn cz_decompose(h: &StepFunction, start: IntervalId, lambda: f64) -> Result<Vec<IntervalId>> {
    let lattice = h.lattice();
    if start.index() >= lattice.len() {
        return Err(Error::ForeignInterval);
    }
    if lambda.is_nan() || lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::BadLambda(lambda));
    }
    let values = h.values();
    if let Some(leaf) = lattice.leaf_range(start).find(|pos| values[*pos] < 0.0) {
        return Err(Error::NegativeInput { leaf });
    }
    Ok(cz_select(lattice, values, start, lambda))
}

/// `g = root_means + phi + balayage(coeffs)`.
#[derive(Debug, Clone)]
pub struct BmoDecomposition {
    lattice: Arc<Lattice>,
    pub phi: StepFunction,
    pub coeffs: CoefSequence,
    /// Average of `g` over each root, subtracted before decomposing.
    pub root_means: Vec<(IntervalId, f64)>,
    /// `stages[n - 1]` holds every stage-`n` stopping interval.
    pub stages: Vec<Vec<IntervalId>>,
    /// Norm of the root-normalized input.
    pub norm: BmoNorm,
    /// Stopping height, `2 · norm.value`.
    pub lambda: f64,
}

impl BmoDecomposition {
    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn root_mean_function(&self) -> StepFunction {
        let mut values = vec![0.0; self.lattice.num_leaves()];
        for (root, m) in &self.root_means {
            for pos in self.lattice.leaf_range(*root) {
                values[pos] = *m;
            }
        }
        StepFunction::from_values_unchecked(self.lattice.clone(), values)
    }

    /// `phi + balayage(coeffs)`, the part of `g` seen by the BMO norm.
    pub fn oscillating_part(&self) -> StepFunction {
        self.phi.add(&balayage(&self.coeffs)).expect("same lattice")
    }

    /// `root_means + phi + balayage(coeffs)`.
    pub fn recombine(&self) -> StepFunction {
        self.root_mean_function()
            .add(&self.oscillating_part())
            .expect("same lattice")
    }

    /// Total length of the stage-`n` intervals inside `root`, exactly.
    pub fn stage_measure(&self, root: IntervalId, n: usize) -> Rational {
        let root_iv = self.lattice.interval(root);
        self.stages
            .get(n.wrapping_sub(1))
            .map(|stage| {
                stage
                    .iter()
                    .map(|id| self.lattice.interval(*id))
                    .filter(|iv| root_iv.contains(iv))
                    .fold(Rational::zero(), |acc, iv| acc + iv.length())
            })
            .unwrap_or_else(Rational::zero)
    }
}

/// Splits `g` into root averages, a bounded part and the balayage of a
/// Carleson sequence by iterating Calderón–Zygmund stopping times at the
/// fixed height `2‖g‖_BMO`.
pub fn bmo_decompose(g: &StepFunction) -> BmoDecomposition {
    let lattice = g.lattice().clone();
    let averages = interval_averages(g);
    let root_means: Vec<(IntervalId, f64)> = lattice.roots().iter().map(|r| (*r, averages[r.index()])).collect();

    let mut normalized = g.values().to_vec();
    for (root, m) in &root_means {
        for pos in lattice.leaf_range(*root) {
            normalized[pos] -= m;
        }
    }
    let normalized = StepFunction::from_values_unchecked(lattice.clone(), normalized);
    let norm = bmo_norm(&normalized);
    let lambda = 2.0 * norm.value;
    let mut coeffs = CoefSequence::new(lattice.clone());

    if norm.value == 0.0 {
        return BmoDecomposition {
            phi: StepFunction::zero(lattice.clone()),
            lattice,
            coeffs,
            root_means,
            stages: Vec::new(),
            norm,
            lambda,
        };
    }

    let avg = interval_averages(&normalized);
    let values = normalized.values();
    let mut h = vec![0.0; lattice.num_leaves()];
    let mut stages = Vec::new();
    let mut current: Vec<IntervalId> = lattice.roots().to_vec();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &stop in &current {
            let mean = avg[stop.index()];
            for pos in lattice.leaf_range(stop) {
                h[pos] = (values[pos] - mean).abs();
            }
            for j in cz_select(&lattice, &h, stop, lambda) {
                let a = lattice.length(j) * (avg[j.index()] - mean);
                coeffs.set(j, a).expect("lattice interval");
                next.push(j);
            }
        }
        if !next.is_empty() {
            stages.push(next.clone());
        }
        current = next;
    }

    let phi = normalized.sub(&balayage(&coeffs)).expect("same lattice");
    BmoDecomposition {
        lattice,
        phi,
        coeffs,
        root_means,
        stages,
        norm,
        lambda,
    }
}

/// Carleson sequence realizing `∫Mf` as the pairing `Σ ⟨f⟩_I a_I`.
#[derive(Debug, Clone)]
pub struct MaximalDual {
    pub coeffs: CoefSequence,
    pub pairing: f64,
    /// `I(J)` for every leaf `J`, in leaf order.
    pub leaf_assignments: Vec<IntervalId>,
    pub integral_max: f64,
}

/// Each leaf `J` hands the mass `|J| · sign⟨f⟩_{I(J)}` to the coarsest
/// interval `I(J)` attaining `Mf` on `J`; leaves with `Mf = 0` hand nothing.
pub fn maximal_dual(f: &StepFunction) -> MaximalDual {
    let lattice = f.lattice();
    let averages = interval_averages(f);
    let m = maximal(f);
    let mut coeffs = CoefSequence::new(lattice.clone());
    for (pos, (&target, mf)) in m.argmax.iter().zip(m.function.values()).enumerate() {
        if *mf == 0.0 {
            continue;
        }
        let contribution = lattice.leaf_length(pos) * averages[target.index()].signum();
        coeffs.add_to(target, contribution).expect("lattice interval");
    }
    let pairing = coeffs.iter().map(|(id, a)| averages[id.index()] * a).sum();
    MaximalDual {
        coeffs,
        pairing,
        leaf_assignments: m.argmax,
        integral_max: operators::integral(&m.function),
    }
}

/// `g = Σ_I Δ_I(Δ_I f / Sf) + Σ_roots E_I(E_I f / Sf)`, with `0/0 = 0`.
///
/// Pairs with `f` to give `∫Sf`, and every `|Δ_I g|` is at most 2.
pub fn duality_witness(f: &StepFunction) -> StepFunction {
    let lattice = f.lattice();
    let averages = interval_averages(f);
    let s = square(f);

    // ∫_I 1/Sf over the leaves where Sf > 0
    let weights: Vec<f64> = s
        .values()
        .iter()
        .enumerate()
        .map(|(pos, v)| if *v > 0.0 { lattice.leaf_length(pos) / v } else { 0.0 })
        .collect();
    let inverse_mass: Vec<f64> = lattice
        .ids()
        .map(|id| lattice.leaf_range(id).map(|pos| weights[pos]).sum())
        .collect();

    // value of the piece attached to `parent` on each of its children
    let mut piece_on_child = vec![0.0; lattice.len()];
    for id in lattice.ids() {
        let kids = lattice.children(id);
        if kids.is_empty() {
            continue;
        }
        let parent = averages[id.index()];
        let integrals: Vec<f64> = kids
            .iter()
            .map(|c| (averages[c.index()] - parent) * inverse_mass[c.index()])
            .collect();
        let over_parent = integrals.iter().sum::<f64>() / lattice.length(id);
        for (c, integral) in kids.iter().zip(integrals) {
            piece_on_child[c.index()] = integral / lattice.length(*c) - over_parent;
        }
    }
    let mut root_piece = vec![0.0; lattice.len()];
    for &r in lattice.roots() {
        root_piece[r.index()] = averages[r.index()] * inverse_mass[r.index()] / lattice.length(r);
    }

    let values = lattice
        .leaves()
        .iter()
        .map(|&leaf| {
            lattice
                .ancestors_or_self(leaf)
                .map(|id| match lattice.parent(id) {
                    Some(_) => piece_on_child[id.index()],
                    None => root_piece[id.index()],
                })
                .sum()
        })
        .collect();
    StepFunction::from_values_unchecked(lattice.clone(), values)
}
