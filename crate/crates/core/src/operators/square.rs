use crate::error::{Error, Result};
use crate::function::StepFunction;

use super::interval_averages;

/// Squared terms seen by a leaf, coarsest first: the root average, then one
/// `|Δ_A f|²` per non-leaf ancestor `A`, tagged with `rk(A)`.
fn leaf_terms(f: &StepFunction, averages: &[f64], pos: usize, out: &mut Vec<(usize, f64)>) {
    let lattice = f.lattice();
    out.clear();
    let chain: Vec<_> = lattice.ancestors_or_self(lattice.leaves()[pos]).collect();
    let root = *chain.last().expect("non-empty chain");
    out.push((0, averages[root.index()].powi(2)));
    for w in chain.windows(2).rev() {
        let (child, parent) = (w[0], w[1]);
        let d = averages[child.index()] - averages[parent.index()];
        out.push((lattice.rank(parent), d * d));
    }
}

fn truncated(f: &StepFunction, n: Option<usize>) -> StepFunction {
    let lattice = f.lattice();
    let averages = interval_averages(f);
    let mut terms = Vec::new();
    let values = (0..lattice.num_leaves())
        .map(|pos| {
            leaf_terms(f, &averages, pos, &mut terms);
            // the root term always comes first; after it, only ranks < n
            let mut sum = terms[0].1;
            for (rank, t) in &terms[1..] {
                if n.is_none_or(|n| *rank < n) {
                    sum += t;
                }
            }
            sum.sqrt()
        })
        .collect();
    StepFunction::from_values_unchecked(lattice.clone(), values)
}

/// `Sf = (Σ_I |Δ_I f|² + Σ_roots |E_I f|²)^{1/2}`.
pub fn square(f: &StepFunction) -> StepFunction {
    truncated(f, None)
}

/// `S_n f`, keeping only differences of intervals with `rk(I) ≤ n − 1`.
pub fn square_truncated(f: &StepFunction, n: usize) -> Result<StepFunction> {
    let depth = f.lattice().depth();
    if n > depth {
        return Err(Error::BadGeneration { k: n, depth });
    }
    Ok(truncated(f, Some(n)))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::integral;
    use super::*;

    #[test]
    fn haar() {
        let s = square(&super::super::fixtures::haar());
        assert_eq!(s.values(), &[1.0; 4]);
        assert_eq!(integral(&s), 1.0);
    }

    #[test]
    fn constant() {
        let s = square(&StepFunction::constant(d2(), -2.0));
        assert_eq!(s.values(), &[2.0; 4]);
    }

    #[test]
    fn spike() {
        let f = super::super::fixtures::spike();
        let s = square(&f);
        let (a, b) = (6f64.sqrt(), 2f64.sqrt());
        assert_eq!(s.values(), &[a, a, b, b]);
        assert!((integral(&s) - (a + b) / 2.0).abs() < 1e-15);
        assert!((integral(&s) - 1.9319).abs() < 1e-4);

        assert_eq!(square_truncated(&f, 2).unwrap(), s);
        assert_eq!(square_truncated(&f, 1).unwrap().values(), &[b; 4]);
        assert_eq!(square_truncated(&f, 0).unwrap().values(), &[1.0; 4]);
        assert!(square_truncated(&f, 3).is_err());
    }
}
