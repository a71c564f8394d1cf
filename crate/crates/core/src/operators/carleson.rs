//! Carleson constants and balayage.
//!
//! Subtree sums of `|a_J|` are accumulated exactly: every f64 is an integer
//! multiple of a power of two, so all coefficients are rescaled to a common
//! exponent and summed as big integers. Ratios `sum / |I|` are then compared
//! by cross-multiplication against the rational lengths, which makes the
//! result independent of summation order.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::function::{CoefSequence, StepFunction};
use crate::lattice::{IntervalId, Lattice, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlesonConstant {
    pub value: f64,
    pub witness: IntervalId,
}

/// `|x| = mantissa · 2^exponent` for finite `x`.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.abs().to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    }
}

/// Exact `|a_J|` values as big integers sharing the scale `2^exponent`.
struct Scaled {
    exponent: i32,
    values: Vec<(IntervalId, BigInt)>,
}

fn scale(a: &CoefSequence) -> Scaled {
    let parts: Vec<(IntervalId, u64, i32)> = a
        .iter()
        .map(|(id, v)| {
            let (m, e) = decompose(v);
            (id, m, e)
        })
        .collect();
    let exponent = parts.iter().map(|p| p.2).min().unwrap_or(0);
    let values = parts
        .into_iter()
        .map(|(id, m, e)| (id, BigInt::from(m) << ((e - exponent) as usize)))
        .collect();
    Scaled { exponent, values }
}

fn big(x: i128) -> BigInt {
    BigInt::from(x)
}

/// Picks the interval maximizing `sums[I] / |I|`; ties keep the smallest id.
fn argmax_ratio(lattice: &Lattice, sums: &[BigInt], exponent: i32) -> CarlesonConstant {
    let mut best: Option<(IntervalId, BigInt, Rational)> = None;
    for id in lattice.ids() {
        let s = &sums[id.index()];
        let len = lattice.interval(id).length();
        let better = match &best {
            None => true,
            Some((_, bs, blen)) => {
                // s / len > bs / blen  ⇔  s · blen > bs · len
                let lhs = s * big(*blen.numer()) * big(*len.denom());
                let rhs = bs * big(*len.numer()) * big(*blen.denom());
                lhs.cmp(&rhs) == Ordering::Greater
            }
        };
        if better {
            best = Some((id, s.clone(), len));
        }
    }
    let (witness, s, len) = best.expect("lattices have at least one interval");
    let mut ratio = BigRational::new(s * big(*len.denom()), big(*len.numer()));
    let two = BigRational::from_integer(BigInt::from(2));
    let pow = if exponent >= 0 {
        num_traits::pow(two, exponent as usize)
    } else {
        BigRational::one() / num_traits::pow(two, (-exponent) as usize)
    };
    ratio *= pow;
    CarlesonConstant {
        value: ratio.to_f64().unwrap_or(f64::INFINITY),
        witness,
    }
}

/// `Carl(|a|) = max_I (1/|I|) Σ_{J ⊆ I} |a_J|`, via one bottom-up pass of
/// subtree sums. The maximum runs over all lattice intervals, roots included.
pub fn carleson_constant(a: &CoefSequence) -> CarlesonConstant {
    let lattice = a.lattice();
    let scaled = scale(a);
    let mut sums = vec![BigInt::zero(); lattice.len()];
    for (id, v) in scaled.values {
        sums[id.index()] = v;
    }
    for id in (0..lattice.len()).rev().map(IntervalId) {
        if let Some(p) = lattice.parent(id) {
            let s = sums[id.index()].clone();
            sums[p.index()] += s;
        }
    }
    argmax_ratio(lattice, &sums, scaled.exponent)
}

/// Same quantity as [`carleson_constant`], but every subtree sum is formed by
/// testing each support interval for endpoint containment in `I`.
pub fn carleson_constant_by_enumeration(a: &CoefSequence) -> CarlesonConstant {
    let lattice = a.lattice();
    let scaled = scale(a);
    let sums: Vec<BigInt> = lattice
        .intervals()
        .iter()
        .map(|iv| {
            scaled
                .values
                .iter()
                .filter(|(j, _)| iv.contains(lattice.interval(*j)))
                .fold(BigInt::zero(), |acc, (_, v)| acc + v)
        })
        .collect();
    argmax_ratio(lattice, &sums, scaled.exponent)
}

/// `g = Σ_I (a_I / |I|) 1_I`.
pub fn balayage(a: &CoefSequence) -> StepFunction {
    let lattice = a.lattice();
    let mut values = vec![0.0; lattice.num_leaves()];
    for (id, v) in a.iter() {
        let h = v / lattice.length(id);
        for pos in lattice.leaf_range(id) {
            values[pos] += h;
        }
    }
    StepFunction::from_values_unchecked(lattice.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn decompose_is_exact() {
        for x in [0.0, 1.0, 0.1, 3.5e-300, 5e-324, 1e300, 123456.789] {
            let (m, e) = decompose(x);
            assert_eq!(m as f64 * 2f64.powi(e), x, "{x}");
        }
    }

    #[test]
    fn zero_sequence() {
        let a = CoefSequence::new(d2());
        assert_eq!(carleson_constant(&a).value, 0.0);
        assert_eq!(balayage(&a).values(), &[0.0; 4]);
    }

    #[test]
    fn lengths_as_coefficients() {
        let l = d2();
        let a = CoefSequence::from_entries(l.clone(), l.ids().map(|id| (id, l.length(id)))).unwrap();
        let c = carleson_constant(&a);
        assert_eq!(c.value, 3.0);
        assert_eq!(c.witness, l.roots()[0]);
        assert_eq!(c, carleson_constant_by_enumeration(&a));
    }

    #[test]
    fn half_interval() {
        let f = haar();
        let half = id_of(&f, (0, 1), (1, 2));
        let a = CoefSequence::from_entries(f.lattice().clone(), [(half, 0.5)]).unwrap();
        let c = carleson_constant(&a);
        assert_eq!((c.value, c.witness), (1.0, half));
        assert_eq!(balayage(&a).values(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn root_coefficient_balayage() {
        let l = d2();
        let a = CoefSequence::from_entries(l.clone(), [(l.roots()[0], 1.0)]).unwrap();
        assert_eq!(balayage(&a).values(), &[1.0; 4]);
    }

    #[test]
    fn signs_are_ignored() {
        let l = d2();
        let a = CoefSequence::from_entries(l.clone(), [(IntervalId(1), -0.25), (IntervalId(3), 0.25)]).unwrap();
        assert_eq!(carleson_constant(&a).value, 1.0);
    }
}
