use std::sync::Arc;

use num_traits::Zero;
use proptest::prelude::*;

use hardy_core::decompose::{bmo_decompose, cz_decompose, duality_witness, maximal_dual};
use hardy_core::harness::{random_coefficients, random_function, Distribution};
use hardy_core::operators::{
    average, balayage, bmo_c1_by_variance, bmo_norm, carleson_constant, carleson_constant_by_enumeration,
    diff_generation, diff_generation_by_pieces, integral, interval_averages, lp_norm, martingale_decompose, maximal,
    square, square_truncated,
};
use hardy_core::{CoefSequence, IntervalId, Lattice, Rational, StepFunction};

fn lattice(seed: u64) -> Arc<Lattice> {
    Arc::new(Lattice::random(seed, 5, 4, 3).unwrap())
}

fn function(seed: u64, dist: usize) -> StepFunction {
    random_function(&lattice(seed), seed.rotate_left(17), Distribution::ALL[dist % 3])
}

fn check_lattice(l: &Lattice) {
    for id in l.ids() {
        let iv = l.interval(id);
        if !l.is_leaf(id) {
            let sum = l
                .children(id)
                .iter()
                .fold(Rational::zero(), |acc, c| acc + l.interval(*c).length());
            assert_eq!(sum, iv.length());
        }
        assert!(iv.generation <= iv.rank && iv.rank <= l.depth());
        for k in 0..=l.depth() {
            let member = l.generation(k).unwrap().contains(&id);
            assert_eq!(member, (iv.generation..=iv.rank).contains(&k));
        }
    }
    // each generation tiles the same span without gaps or overlaps
    let span = l.total_length();
    for k in 0..=l.depth() {
        let mut gen: Vec<_> = l.generation(k).unwrap().iter().map(|id| l.interval(*id)).collect();
        gen.sort_by_key(|iv| iv.left);
        for w in gen.windows(2) {
            assert_eq!(w[0].right, w[1].left);
        }
        let covered = gen.iter().fold(Rational::zero(), |acc, iv| acc + iv.length());
        assert_eq!(covered, span);
        assert_eq!(gen[0].left, l.interval(l.generation(0).unwrap()[0]).left);
    }
}

#[test]
fn random_lattices_are_valid() {
    for seed in 0..1000 {
        let l = Lattice::random(seed, 6, 4, 3).unwrap();
        check_lattice(&l);
        let rebuilt = Lattice::from_breakpoints(l.breakpoints().to_vec()).unwrap();
        assert_eq!(rebuilt, l);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lattice_partitions(seed in any::<u64>(), depth in 0usize..7, children in 1usize..6, roots in 1usize..4) {
        check_lattice(&Lattice::random(seed, depth, children, roots).unwrap());
    }

    #[test]
    fn reconstruction(seed in any::<u64>(), dist in 0usize..3) {
        let f = function(seed, dist);
        let err = martingale_decompose(&f).reconstruct().sub(&f).unwrap().max_abs();
        prop_assert!(err <= 1e-9 * (1.0 + f.max_abs()));
    }

    #[test]
    fn orthogonality_and_pythagoras(seed in any::<u64>(), dist in 0usize..3) {
        let f = function(seed, dist);
        let m = martingale_decompose(&f);
        let pieces: Vec<StepFunction> = m
            .differences
            .iter()
            .map(|p| m.difference_function(p))
            .chain(m.averages.iter().map(|p| m.average_function(p)))
            .collect();
        let scale = 1.0 + f.max_abs() * f.max_abs() * f.lattice().roots().iter().map(|r| f.lattice().length(*r)).sum::<f64>();
        for (i, p) in pieces.iter().enumerate().take(m.differences.len()) {
            prop_assert!(integral(p).abs() <= 1e-9 * scale);
            for q in &pieces[i + 1..] {
                prop_assert!(integral(&p.mul(q).unwrap()).abs() <= 1e-9 * scale);
            }
        }
        let energy: f64 = pieces.iter().map(|p| lp_norm(p, 2.0).unwrap().powi(2)).sum();
        let total = lp_norm(&f, 2.0).unwrap().powi(2);
        prop_assert!((energy - total).abs() <= 1e-8 * total.max(1e-12));
    }

    #[test]
    fn generation_differences_agree(seed in any::<u64>(), dist in 0usize..3) {
        let f = function(seed, dist);
        for k in 1..=f.lattice().depth() {
            prop_assert_eq!(diff_generation(&f, k).unwrap(), diff_generation_by_pieces(&f, k).unwrap());
        }
    }

    #[test]
    fn maximal_dominates(seed in any::<u64>(), dist in 0usize..3) {
        let f = function(seed, dist);
        let l = f.lattice();
        let mf = maximal(&f).function;
        let averages = interval_averages(&f);
        for (m, v) in mf.values().iter().zip(f.values()) {
            prop_assert!(*m >= v.abs() * (1.0 - 1e-12));
        }
        for id in l.ids() {
            for pos in l.leaf_range(id) {
                prop_assert!(mf.values()[pos] >= averages[id.index()].abs());
            }
        }
    }

    #[test]
    fn truncated_square_is_monotone(seed in any::<u64>(), dist in 0usize..3) {
        let f = function(seed, dist);
        let depth = f.lattice().depth();
        let mut prev = square_truncated(&f, 0).unwrap();
        for n in 1..=depth {
            let next = square_truncated(&f, n).unwrap();
            for (a, b) in prev.values().iter().zip(next.values()) {
                prop_assert!(a <= b);
            }
            prev = next;
        }
        prop_assert_eq!(prev, square(&f));
    }

    #[test]
    fn bmo_routes_and_root_constants(seed in any::<u64>(), dist in 0usize..3, shift in -5.0f64..5.0) {
        let g = function(seed, dist);
        let norm = bmo_norm(&g);
        let c1 = bmo_c1_by_variance(&g);
        prop_assert!((norm.c1 - c1).abs() <= 1e-8 * norm.c1.max(c1).max(1e-7));
        prop_assert_eq!(norm.value, norm.c1.max(norm.c2));

        let l = g.lattice().clone();
        let mut values = g.values().to_vec();
        for (i, &root) in l.roots().iter().enumerate() {
            for pos in l.leaf_range(root) {
                values[pos] += shift * (i as f64 + 1.0);
            }
        }
        let shifted = bmo_norm(&StepFunction::new(l, values).unwrap());
        let tol = 1e-9 * (1.0 + norm.value + shift.abs());
        prop_assert!((shifted.c1 - norm.c1).abs() <= tol);
        prop_assert!((shifted.c2 - norm.c2).abs() <= tol);
    }

    #[test]
    fn balayage_bound(seed in any::<u64>()) {
        let l = lattice(seed);
        let a = random_coefficients(&l, seed ^ 7, false);
        let carl = carleson_constant(&a).value;
        prop_assert!(bmo_norm(&balayage(&a)).value <= 2.0 * carl + 1e-9);
    }

    #[test]
    fn carleson_routes_agree(seed in any::<u64>(), signed in any::<bool>()) {
        let l = lattice(seed);
        let a = random_coefficients(&l, seed ^ 9, signed);
        prop_assert_eq!(carleson_constant(&a), carleson_constant_by_enumeration(&a));
    }

    #[test]
    fn cz_selection_is_maximal(seed in any::<u64>(), dist in 0usize..3, scale in 0.25f64..4.0) {
        let h = function(seed, dist).map(f64::abs);
        let l = h.lattice().clone();
        for start in l.ids() {
            let lambda = scale * average(&h, start).unwrap();
            if lambda.is_nan() || lambda <= 0.0 {
                continue;
            }
            let selected = cz_decompose(&h, start, lambda).unwrap();
            let start_iv = l.interval(start);
            for (i, &j) in selected.iter().enumerate() {
                let iv = l.interval(j);
                prop_assert!(j != start && start_iv.contains(iv));
                prop_assert!(average(&h, j).unwrap() > lambda);
                let mut up = l.parent(j).unwrap();
                while up != start {
                    prop_assert!(average(&h, up).unwrap() <= lambda);
                    up = l.parent(up).unwrap();
                }
                for &k in &selected[i + 1..] {
                    let other = l.interval(k);
                    prop_assert!(iv.right <= other.left || other.right <= iv.left);
                }
            }
        }
    }

    #[test]
    fn bmo_decomposition_bounds(seed in any::<u64>(), dist in 0usize..3) {
        let g = function(seed, dist);
        let l = g.lattice().clone();
        let d = bmo_decompose(&g);
        let b = d.norm.value;
        prop_assert!(d.recombine().sub(&g).unwrap().max_abs() <= 1e-8 * (1.0 + g.max_abs()));
        for v in d.phi.values() {
            prop_assert!(v.abs() <= 2.0 * b + 1e-9);
        }
        prop_assert!(carleson_constant(&d.coeffs).value <= 3.0 * b + 1e-9);
        for &root in l.roots() {
            for n in 1..=d.stages.len() {
                let allowance = l.interval(root).length() / Rational::from_integer(1 << n);
                prop_assert!(d.stage_measure(root, n) <= allowance);
            }
        }
    }

    #[test]
    fn maximal_dual_is_carleson(seed in any::<u64>(), dist in 0usize..3) {
        let f = function(seed, dist);
        let l = f.lattice().clone();
        let md = maximal_dual(&f);
        for k in l.ids() {
            let kv = l.interval(k);
            let mass: f64 = md
                .coeffs
                .iter()
                .filter(|(i, _)| kv.contains(l.interval(*i)))
                .map(|(_, v)| v.abs())
                .sum();
            prop_assert!(mass <= l.length(k) * (1.0 + 1e-12));
        }
        let int_m = integral(&maximal(&f).function);
        prop_assert!((md.pairing - int_m).abs() <= 1e-8 * int_m.abs().max(1e-12));
        prop_assert!(bmo_norm(&balayage(&md.coeffs)).value <= 2.0 + 1e-9);
    }

    #[test]
    fn duality_witness_bounds(seed in any::<u64>(), dist in 0usize..3) {
        let f = function(seed, dist);
        let w = duality_witness(&f);
        let int_s = integral(&square(&f));
        let fw = integral(&f.mul(&w).unwrap());
        prop_assert!((int_s - fw).abs() <= 1e-8 * int_s.max(1e-12));
        prop_assert!(bmo_norm(&w).c2 <= 2.0 + 1e-9);
    }
}

#[test]
fn empty_coefficients_have_zero_constant() {
    let l = lattice(3);
    let a = CoefSequence::new(l);
    assert_eq!(carleson_constant(&a).value, 0.0);
    assert_eq!(carleson_constant(&a).witness, IntervalId(0));
}
