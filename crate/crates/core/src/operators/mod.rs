//! Averaging, conditional expectation and martingale differences, plus the
//! maximal function, square function, BMO norm, Carleson constant and
//! balayage built on top of them.

mod bmo;
mod carleson;
mod maximal;
mod square;

use std::sync::Arc;

pub use bmo::{bmo_c1_by_variance, bmo_norm, mean_oscillation, BmoNorm};
pub use carleson::{balayage, carleson_constant, carleson_constant_by_enumeration, CarlesonConstant};
pub use maximal::{maximal, maximal_by_enumeration, Maximal};
pub use square::{square, square_truncated};

use crate::error::{Error, Result};
use crate::function::StepFunction;
use crate::lattice::{IntervalId, Lattice};

/// `∫_I f`, summed leaf by leaf in left-to-right order.
pub(crate) fn integral_over(f: &StepFunction, id: IntervalId) -> f64 {
    let lattice = f.lattice();
    let values = f.values();
    lattice
        .leaf_range(id)
        .map(|pos| values[pos] * lattice.leaf_length(pos))
        .sum()
}

/// Average of `f` over every lattice interval, indexed by interval id.
pub fn interval_averages(f: &StepFunction) -> Vec<f64> {
    let lattice = f.lattice();
    lattice
        .ids()
        .map(|id| integral_over(f, id) / lattice.length(id))
        .collect()
}

fn check_member(lattice: &Lattice, id: IntervalId) -> Result<()> {
    if id.index() < lattice.len() {
        Ok(())
    } else {
        Err(Error::ForeignInterval)
    }
}

/// `⟨f⟩_I`.
pub fn average(f: &StepFunction, id: IntervalId) -> Result<f64> {
    check_member(f.lattice(), id)?;
    Ok(integral_over(f, id) / f.lattice().length(id))
}

pub fn integral(f: &StepFunction) -> f64 {
    let lattice = f.lattice();
    f.values()
        .iter()
        .enumerate()
        .map(|(pos, v)| v * lattice.leaf_length(pos))
        .sum()
}

pub fn lp_norm(f: &StepFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    let lattice = f.lattice();
    let sum: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(pos, v)| v.abs().powf(p) * lattice.leaf_length(pos))
        .sum();
    Ok(if p == 1.0 { sum } else { sum.powf(1.0 / p) })
}

pub fn sup_norm(f: &StepFunction) -> f64 {
    f.max_abs()
}

/// Conditional expectation onto generation `k`.
pub fn project(f: &StepFunction, k: usize) -> Result<StepFunction> {
    let lattice = f.lattice();
    let generation = lattice.generation(k)?;
    let mut values = vec![0.0; lattice.num_leaves()];
    for &id in generation {
        let avg = integral_over(f, id) / lattice.length(id);
        for pos in lattice.leaf_range(id) {
            values[pos] = avg;
        }
    }
    Ok(StepFunction::from_values_unchecked(lattice.clone(), values))
}

/// Values of `Δ_I f` on each child of `I`, aligned with `lattice.children(I)`.
pub(crate) fn difference_values(lattice: &Lattice, averages: &[f64], id: IntervalId) -> Vec<f64> {
    let parent = averages[id.index()];
    lattice
        .children(id)
        .iter()
        .map(|c| averages[c.index()] - parent)
        .collect()
}

/// `Δ_I f = −E_I f + Σ_{J ∈ child(I)} E_J f`.
pub fn diff_interval(f: &StepFunction, id: IntervalId) -> Result<StepFunction> {
    let lattice = f.lattice();
    check_member(lattice, id)?;
    if lattice.is_leaf(id) {
        return Err(Error::LeafHasNoChildren);
    }
    let parent = integral_over(f, id) / lattice.length(id);
    let mut values = vec![0.0; lattice.num_leaves()];
    for &c in lattice.children(id) {
        let d = integral_over(f, c) / lattice.length(c) - parent;
        for pos in lattice.leaf_range(c) {
            values[pos] = d;
        }
    }
    Ok(StepFunction::from_values_unchecked(lattice.clone(), values))
}

fn check_difference_generation(lattice: &Lattice, k: usize) -> Result<()> {
    if k == 0 || k > lattice.depth() {
        Err(Error::BadGeneration {
            k,
            depth: lattice.depth(),
        })
    } else {
        Ok(())
    }
}

/// `Δ_k f = E_k f − E_{k−1} f`.
pub fn diff_generation(f: &StepFunction, k: usize) -> Result<StepFunction> {
    check_difference_generation(f.lattice(), k)?;
    project(f, k)?.sub(&project(f, k - 1)?)
}

/// `Δ_k f` assembled as `Σ_{rk(I) = k−1} Δ_I f`.
pub fn diff_generation_by_pieces(f: &StepFunction, k: usize) -> Result<StepFunction> {
    let lattice = f.lattice();
    check_difference_generation(lattice, k)?;
    let averages = interval_averages(f);
    let mut values = vec![0.0; lattice.num_leaves()];
    for &id in lattice.generation(k - 1)? {
        if lattice.rank(id) != k - 1 {
            continue;
        }
        for (c, d) in lattice
            .children(id)
            .iter()
            .zip(difference_values(lattice, &averages, id))
        {
            for pos in lattice.leaf_range(*c) {
                values[pos] = d;
            }
        }
    }
    Ok(StepFunction::from_values_unchecked(lattice.clone(), values))
}

/// `Δ_I f` stored as one value per child of `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferencePiece {
    pub interval: IntervalId,
    pub child_values: Vec<f64>,
}

/// `E_I f` for a root `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragePiece {
    pub root: IntervalId,
    pub value: f64,
}

/// `f = Σ_I Δ_I f + Σ_roots E_I f`, with identically-zero differences omitted.
#[derive(Debug, Clone)]
pub struct MartingaleDecomposition {
    lattice: Arc<Lattice>,
    pub differences: Vec<DifferencePiece>,
    pub averages: Vec<AveragePiece>,
}

impl MartingaleDecomposition {
    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Sums every piece back into a function.
    pub fn reconstruct(&self) -> StepFunction {
        let lattice = &self.lattice;
        let mut values = vec![0.0; lattice.num_leaves()];
        for piece in &self.averages {
            for pos in lattice.leaf_range(piece.root) {
                values[pos] += piece.value;
            }
        }
        for piece in &self.differences {
            for (c, d) in lattice.children(piece.interval).iter().zip(&piece.child_values) {
                for pos in lattice.leaf_range(*c) {
                    values[pos] += d;
                }
            }
        }
        StepFunction::from_values_unchecked(lattice.clone(), values)
    }

    pub fn difference_function(&self, piece: &DifferencePiece) -> StepFunction {
        let lattice = &self.lattice;
        let mut values = vec![0.0; lattice.num_leaves()];
        for (c, d) in lattice.children(piece.interval).iter().zip(&piece.child_values) {
            for pos in lattice.leaf_range(*c) {
                values[pos] = *d;
            }
        }
        StepFunction::from_values_unchecked(lattice.clone(), values)
    }

    pub fn average_function(&self, piece: &AveragePiece) -> StepFunction {
        let lattice = &self.lattice;
        let mut values = vec![0.0; lattice.num_leaves()];
        for pos in lattice.leaf_range(piece.root) {
            values[pos] = piece.value;
        }
        StepFunction::from_values_unchecked(lattice.clone(), values)
    }
}

pub fn martingale_decompose(f: &StepFunction) -> MartingaleDecomposition {
    let lattice = f.lattice();
    let averages = interval_averages(f);
    let differences = lattice
        .ids()
        .filter(|id| !lattice.is_leaf(*id))
        .map(|id| DifferencePiece {
            interval: id,
            child_values: difference_values(lattice, &averages, id),
        })
        .filter(|p| p.child_values.iter().any(|d| *d != 0.0))
        .collect();
    let averages = lattice
        .roots()
        .iter()
        .map(|&root| AveragePiece {
            root,
            value: averages[root.index()],
        })
        .collect();
    MartingaleDecomposition {
        lattice: lattice.clone(),
        differences,
        averages,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use std::sync::Arc;

    use crate::function::StepFunction;
    use crate::lattice::{Lattice, Rational};

    pub fn d2() -> Arc<Lattice> {
        Arc::new(Lattice::dyadic(2, Rational::from_integer(0), Rational::from_integer(1)).unwrap())
    }

    pub fn on_d2(values: [f64; 4]) -> StepFunction {
        StepFunction::new(d2(), values.to_vec()).unwrap()
    }

    pub fn haar() -> StepFunction {
        on_d2([1.0, 1.0, -1.0, -1.0])
    }

    pub fn spike() -> StepFunction {
        on_d2([4.0, 0.0, 0.0, 0.0])
    }

    pub fn id_of(f: &StepFunction, l: (i128, i128), r: (i128, i128)) -> crate::lattice::IntervalId {
        f.lattice()
            .find(&Rational::new(l.0, l.1), &Rational::new(r.0, r.1))
            .expect("interval in lattice")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn averages() {
        let f = haar();
        let root = f.lattice().roots()[0];
        assert_eq!(average(&f, root).unwrap(), 0.0);
        let g = spike();
        assert_eq!(average(&g, id_of(&g, (0, 1), (1, 2))).unwrap(), 2.0);
        let c = StepFunction::constant(d2(), 2.5);
        for id in c.lattice().ids() {
            assert_eq!(average(&c, id).unwrap(), 2.5);
        }
        assert_eq!(average(&c, IntervalId(7)), Err(Error::ForeignInterval));
    }

    #[test]
    fn projections() {
        let f = spike();
        assert_eq!(project(&f, 2).unwrap(), f);
        assert_eq!(project(&f, 1).unwrap().values(), &[2.0, 2.0, 0.0, 0.0]);
        assert_eq!(project(&f, 0).unwrap().values(), &[1.0; 4]);
        assert!(matches!(project(&f, 3), Err(Error::BadGeneration { k: 3, depth: 2 })));
    }

    #[test]
    fn single_differences() {
        let h = haar();
        let root = h.lattice().roots()[0];
        assert_eq!(diff_interval(&h, root).unwrap(), h);
        let f = spike();
        let left = id_of(&f, (0, 1), (1, 2));
        assert_eq!(diff_interval(&f, left).unwrap().values(), &[2.0, -2.0, 0.0, 0.0]);
        let c = StepFunction::constant(d2(), 3.0);
        assert_eq!(diff_interval(&c, root).unwrap().values(), &[0.0; 4]);
        let leaf = f.lattice().leaves()[0];
        assert_eq!(diff_interval(&f, leaf), Err(Error::LeafHasNoChildren));
    }

    #[test]
    fn generation_differences() {
        let h = haar();
        assert_eq!(diff_generation(&h, 1).unwrap(), h);
        assert_eq!(diff_generation(&h, 2).unwrap().values(), &[0.0; 4]);
        let f = spike();
        assert_eq!(diff_generation(&f, 2).unwrap().values(), &[2.0, -2.0, 0.0, 0.0]);
        for k in 1..=2 {
            assert_eq!(
                diff_generation(&f, k).unwrap(),
                diff_generation_by_pieces(&f, k).unwrap()
            );
        }
        assert!(diff_generation(&f, 0).is_err());
        assert!(diff_generation(&f, 3).is_err());
    }

    #[test]
    fn decomposition_of_spike() {
        let f = spike();
        let d = martingale_decompose(&f);
        assert_eq!(d.averages.len(), 1);
        assert_eq!(d.averages[0].value, 1.0);
        assert_eq!(d.differences.len(), 2);
        assert_eq!(
            d.difference_function(&d.differences[0]).values(),
            &[1.0, 1.0, -1.0, -1.0]
        );
        assert_eq!(
            d.difference_function(&d.differences[1]).values(),
            &[2.0, -2.0, 0.0, 0.0]
        );
        assert_eq!(d.reconstruct(), f);
    }

    #[test]
    fn decomposition_of_constant() {
        let c = StepFunction::constant(d2(), -1.5);
        let d = martingale_decompose(&c);
        assert!(d.differences.is_empty());
        assert_eq!(d.average_function(&d.averages[0]).values(), &[-1.5; 4]);
    }

    #[test]
    fn norms() {
        assert_eq!(lp_norm(&haar(), 2.0).unwrap(), 1.0);
        let z = StepFunction::zero(d2());
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(lp_norm(&z, p).unwrap(), 0.0);
        }
        assert_eq!(integral(&spike()), 1.0);
        assert_eq!(lp_norm(&spike(), 1.0).unwrap(), 1.0);
        assert!(lp_norm(&spike(), 0.5).is_err());
    }
}
