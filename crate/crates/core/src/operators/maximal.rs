use crate::function::StepFunction;
use crate::lattice::IntervalId;

use super::{average, interval_averages};

/// Averages within this relative distance of the maximum count as ties.
/// Sums over different leaf sets of a constant function can differ in the
/// last few bits, and the coarsest maximizer must still be found.
const TIE_RELATIVE: f64 = 1e-12;

/// `Mf` together with the coarsest maximizing interval of every leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximal {
    pub function: StepFunction,
    pub argmax: Vec<IntervalId>,
}

fn is_tie(candidate: f64, max: f64) -> bool {
    candidate >= max - TIE_RELATIVE * max
}

/// `Mf(x) = max_{I ∋ x} |⟨f⟩_I|`, by walking each leaf's ancestor chain.
pub fn maximal(f: &StepFunction) -> Maximal {
    let lattice = f.lattice();
    let averages = interval_averages(f);
    let mut values = Vec::with_capacity(lattice.num_leaves());
    let mut argmax = Vec::with_capacity(lattice.num_leaves());
    for &leaf in lattice.leaves() {
        let max = lattice
            .ancestors_or_self(leaf)
            .map(|id| averages[id.index()].abs())
            .fold(0.0, f64::max);
        // the walk goes fine to coarse, so the last tie is the coarsest
        let best = lattice
            .ancestors_or_self(leaf)
            .filter(|id| is_tie(averages[id.index()].abs(), max))
            .last()
            .expect("a leaf is its own ancestor");
        values.push(max);
        argmax.push(best);
    }
    Maximal {
        function: StepFunction::from_values_unchecked(lattice.clone(), values),
        argmax,
    }
}

/// Brute-force `Mf`: every leaf is tested against every lattice interval by
/// endpoint containment. Quadratic; meant as an oracle for [`maximal`].
pub fn maximal_by_enumeration(f: &StepFunction) -> Maximal {
    let lattice = f.lattice();
    let mut values = Vec::with_capacity(lattice.num_leaves());
    let mut argmax = Vec::with_capacity(lattice.num_leaves());
    for &leaf in lattice.leaves() {
        let leaf_iv = lattice.interval(leaf);
        let containing: Vec<(IntervalId, f64)> = lattice
            .intervals()
            .iter()
            .filter(|iv| iv.contains(leaf_iv))
            .map(|iv| (iv.id, average(f, iv.id).expect("own interval").abs()))
            .collect();
        let max = containing.iter().map(|(_, a)| *a).fold(0.0, f64::max);
        let best = containing
            .iter()
            .filter(|(_, a)| is_tie(*a, max))
            .max_by(|(x, _), (y, _)| {
                let (x, y) = (lattice.interval(*x), lattice.interval(*y));
                x.length().cmp(&y.length())
            })
            .map(|(id, _)| *id)
            .expect("the leaf contains itself");
        values.push(max);
        argmax.push(best);
    }
    Maximal {
        function: StepFunction::from_values_unchecked(lattice.clone(), values),
        argmax,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::integral;
    use super::*;

    #[test]
    fn spike() {
        let f = super::super::fixtures::spike();
        let m = maximal(&f);
        assert_eq!(m.function.values(), &[4.0, 2.0, 1.0, 1.0]);
        assert_eq!(integral(&m.function), 2.0);
        let root = f.lattice().roots()[0];
        assert_eq!(m.argmax[0], f.lattice().leaves()[0]);
        assert_eq!(m.argmax[1], id_of(&f, (0, 1), (1, 2)));
        assert_eq!(m.argmax[2], root);
        assert_eq!(m.argmax[3], root);
        assert_eq!(m, maximal_by_enumeration(&f));
    }

    #[test]
    fn constant_goes_to_root() {
        let f = StepFunction::constant(d2(), -0.3);
        let m = maximal(&f);
        let root = f.lattice().roots()[0];
        assert!(m.function.values().iter().all(|v| (v - 0.3).abs() < 1e-15));
        assert!(m.argmax.iter().all(|a| *a == root));
    }

    #[test]
    fn haar() {
        let m = maximal(&super::super::fixtures::haar());
        assert_eq!(m.function.values(), &[1.0; 4]);
        assert_eq!(integral(&m.function), 1.0);
    }
}
