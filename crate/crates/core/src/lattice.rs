//! Finite interval lattices.
//!
//! A lattice is a tower of generations `0..=depth`. Every generation is a
//! partition of the same half-open base domain into intervals `[left, right)`
//! with exact rational endpoints, and generation `k + 1` refines generation
//! `k`. An interval that appears unchanged in consecutive generations is a
//! single object whose rank is the last generation it belongs to.
//!
//! Generation 0 holds the roots, the finest generation holds the leaves.
//! Every function in this crate is constant on leaves.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact coordinate type.
pub type Rational = Ratio<i128>;

/// Index of an interval inside its lattice.
///
/// Ids are assigned in order of first generation, then left endpoint, so
/// every interval's id is larger than the id of its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IntervalId(pub usize);

impl IntervalId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for IntervalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub id: IntervalId,
    pub left: Rational,
    pub right: Rational,
    /// First generation containing the interval.
    pub generation: usize,
    /// Last generation containing the interval.
    pub rank: usize,
    /// `right - left` rounded to f64, cached for the numeric operators.
    pub length_f64: f64,
}

impl Interval {
    pub fn length(&self) -> Rational {
        self.right - self.left
    }

    /// `true` iff `other` is a subset of `self`.
    pub fn contains(&self, other: &Interval) -> bool {
        self.left <= other.left && other.right <= self.right
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        &self.left <= x && x < &self.right
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left, self.right)
    }
}

/// Homogeneity constants: `r` bounds the number of children of an interval,
/// `k` bounds the ratio `|parent| / |child|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityStats {
    pub r: usize,
    #[serde(with = "rational_string")]
    pub k: Rational,
}

#[derive(Debug, Clone)]
pub struct Lattice {
    breakpoints: Vec<Vec<Rational>>,
    intervals: Vec<Interval>,
    parents: Vec<Option<IntervalId>>,
    children: Vec<Vec<IntervalId>>,
    generations: Vec<Vec<IntervalId>>,
    leaf_ranges: Vec<Range<usize>>,
    by_endpoints: HashMap<(Rational, Rational), IntervalId>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.breakpoints == other.breakpoints
    }
}

impl Eq for Lattice {}

impl Lattice {
    /// Builds and validates a lattice from per-generation breakpoints.
    ///
    /// Generation `k` is the partition `[b0, b1), [b1, b2), ...` of its
    /// breakpoint list.
    pub fn from_breakpoints(generations: Vec<Vec<Rational>>) -> Result<Self> {
        if generations.is_empty() {
            return Err(Error::EmptyInput("no generations"));
        }
        for (k, points) in generations.iter().enumerate() {
            if points.len() < 2 {
                return Err(Error::EmptyInput("a generation needs at least two breakpoints"));
            }
            if let Some(w) = points.windows(2).find(|w| w[0] >= w[1]) {
                return Err(Error::GapOrOverlap {
                    generation: k,
                    detail: format!("breakpoints {} and {} are not increasing", w[0], w[1]),
                });
            }
        }

        let mut intervals: Vec<Interval> = Vec::new();
        let mut parents: Vec<Option<IntervalId>> = Vec::new();
        let mut children: Vec<Vec<IntervalId>> = Vec::new();
        let mut gens: Vec<Vec<IntervalId>> = Vec::with_capacity(generations.len());
        let mut by_endpoints = HashMap::new();

        for (k, points) in generations.iter().enumerate() {
            let mut current = Vec::with_capacity(points.len() - 1);
            if k > 0 {
                let prev = &generations[k - 1];
                // each new interval must sit inside one previous interval
                let mut p = 0;
                for w in points.windows(2) {
                    let (l, r) = (w[0], w[1]);
                    while p + 1 < prev.len() && prev[p + 1] <= l {
                        p += 1;
                    }
                    let inside = p + 1 < prev.len() && prev[p] <= l && r <= prev[p + 1];
                    if !inside {
                        return Err(Error::NotARefinement {
                            generation: k,
                            left: l,
                            right: r,
                        });
                    }
                }
                if points[0] != prev[0] || points[points.len() - 1] != prev[prev.len() - 1] {
                    return Err(Error::GapOrOverlap {
                        generation: k,
                        detail: format!(
                            "covers [{}, {}) but generation 0 covers [{}, {})",
                            points[0],
                            points[points.len() - 1],
                            prev[0],
                            prev[prev.len() - 1]
                        ),
                    });
                }
            }

            let prev_ids = if k > 0 { gens[k - 1].clone() } else { Vec::new() };
            let mut p = 0usize;
            for w in points.windows(2) {
                let (l, r) = (w[0], w[1]);
                if k > 0 {
                    while intervals[prev_ids[p].0].right <= l {
                        p += 1;
                    }
                    let parent = prev_ids[p];
                    let pi = &intervals[parent.0];
                    if pi.left == l && pi.right == r {
                        // persists into this generation
                        intervals[parent.0].rank = k;
                        current.push(parent);
                        continue;
                    }
                    let id = IntervalId(intervals.len());
                    intervals.push(Interval {
                        id,
                        left: l,
                        right: r,
                        generation: k,
                        rank: k,
                        length_f64: rational_to_f64(&(r - l)),
                    });
                    parents.push(Some(parent));
                    children.push(Vec::new());
                    children[parent.0].push(id);
                    by_endpoints.insert((l, r), id);
                    current.push(id);
                } else {
                    let id = IntervalId(intervals.len());
                    intervals.push(Interval {
                        id,
                        left: l,
                        right: r,
                        generation: 0,
                        rank: 0,
                        length_f64: rational_to_f64(&(r - l)),
                    });
                    parents.push(None);
                    children.push(Vec::new());
                    by_endpoints.insert((l, r), id);
                    current.push(id);
                }
            }
            gens.push(current);
        }

        let leaves = gens.last().expect("non-empty");
        let leaf_lefts: Vec<Rational> = leaves.iter().map(|id| intervals[id.0].left).collect();
        let leaf_ranges = intervals
            .iter()
            .map(|iv| {
                let start = leaf_lefts.partition_point(|x| *x < iv.left);
                let end = leaf_lefts.partition_point(|x| *x < iv.right);
                start..end
            })
            .collect();

        Ok(Lattice {
            breakpoints: generations,
            intervals,
            parents,
            children,
            generations: gens,
            leaf_ranges,
            by_endpoints,
        })
    }

    /// The standard dyadic lattice on `[left, right)`: every interval is
    /// halved `depth` times.
    pub fn dyadic(depth: usize, left: Rational, right: Rational) -> Result<Self> {
        if left >= right {
            return Err(Error::InvalidParameter(format!(
                "base interval [{left}, {right}) is empty"
            )));
        }
        let mut generations = Vec::with_capacity(depth + 1);
        for k in 0..=depth {
            let n = 1i128 << k;
            let step = (right - left) / Rational::from_integer(n);
            generations.push((0..=n).map(|j| left + step * Rational::from_integer(j)).collect());
        }
        Lattice::from_breakpoints(generations)
    }

    /// Deterministic pseudo-random lattice.
    ///
    /// The depth is drawn from `0..=max_depth`, the root count from
    /// `1..=max_roots` and each interval gets between 1 and `max_children`
    /// children, cut at points of the grid `left + j * |I| / g` with
    /// `g = max(8, max_children)`. A child count of one keeps the interval
    /// alive in the next generation.
    pub fn random(seed: u64, max_depth: usize, max_children: usize, max_roots: usize) -> Result<Self> {
        if max_children < 1 || max_roots < 1 {
            return Err(Error::InvalidParameter(
                "max_children and max_roots must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let depth = rng.gen_range(0..=max_depth);
        let roots = rng.gen_range(1..=max_roots);
        let half = Rational::new(1, 2);

        let mut first = vec![Rational::zero()];
        for _ in 0..roots {
            let len = half * Rational::from_integer(rng.gen_range(1..=4));
            let last = *first.last().unwrap();
            first.push(last + len);
        }

        let grid = max_children.max(8) as i128;
        let mut generations = vec![first];
        for _ in 0..depth {
            let prev = generations.last().unwrap();
            let mut next = vec![prev[0]];
            for w in prev.windows(2) {
                let (l, r) = (w[0], w[1]);
                let count = rng.gen_range(1..=max_children);
                let step = (r - l) / Rational::from_integer(grid);
                let cuts = rand::seq::index::sample(&mut rng, (grid - 1) as usize, count - 1);
                let mut cuts: Vec<i128> = cuts.into_iter().map(|j| j as i128 + 1).collect();
                cuts.sort_unstable();
                for j in cuts {
                    next.push(l + step * Rational::from_integer(j));
                }
                next.push(r);
            }
            generations.push(next);
        }
        Lattice::from_breakpoints(generations)
    }

    pub fn depth(&self) -> usize {
        self.generations.len() - 1
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn breakpoints(&self) -> &[Vec<Rational>] {
        &self.breakpoints
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, id: IntervalId) -> &Interval {
        &self.intervals[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = IntervalId> + '_ {
        (0..self.intervals.len()).map(IntervalId)
    }

    pub fn generation(&self, k: usize) -> Result<&[IntervalId]> {
        self.generations
            .get(k)
            .map(Vec::as_slice)
            .ok_or(Error::BadGeneration { k, depth: self.depth() })
    }

    pub fn roots(&self) -> &[IntervalId] {
        &self.generations[0]
    }

    pub fn leaves(&self) -> &[IntervalId] {
        &self.generations[self.depth()]
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves().len()
    }

    pub fn parent(&self, id: IntervalId) -> Option<IntervalId> {
        self.parents[id.0]
    }

    pub fn children(&self, id: IntervalId) -> &[IntervalId] {
        &self.children[id.0]
    }

    pub fn is_leaf(&self, id: IntervalId) -> bool {
        self.children[id.0].is_empty()
    }

    pub fn rank(&self, id: IntervalId) -> usize {
        self.intervals[id.0].rank
    }

    /// Positions (in leaf order) of the leaves contained in `id`.
    pub fn leaf_range(&self, id: IntervalId) -> Range<usize> {
        self.leaf_ranges[id.0].clone()
    }

    pub fn length(&self, id: IntervalId) -> f64 {
        self.intervals[id.0].length_f64
    }

    /// Length of the leaf at position `pos` in leaf order.
    pub fn leaf_length(&self, pos: usize) -> f64 {
        self.intervals[self.leaves()[pos].0].length_f64
    }

    /// Looks up an interval by its endpoints.
    pub fn find(&self, left: &Rational, right: &Rational) -> Option<IntervalId> {
        self.by_endpoints.get(&(*left, *right)).copied()
    }

    /// Root containing `id`.
    pub fn root_of(&self, mut id: IntervalId) -> IntervalId {
        while let Some(p) = self.parents[id.0] {
            id = p;
        }
        id
    }

    /// `id` followed by its ancestors, finest first.
    pub fn ancestors_or_self(&self, id: IntervalId) -> Ancestors<'_> {
        Ancestors {
            lattice: self,
            next: Some(id),
        }
    }

    /// All intervals contained in `id`, including `id`, in pre-order.
    pub fn subtree(&self, id: IntervalId) -> Vec<IntervalId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.children[i.0].iter().rev());
        }
        out
    }

    pub fn homogeneity_stats(&self) -> HomogeneityStats {
        let mut r = 1;
        let mut k = Rational::from_integer(1);
        for iv in &self.intervals {
            let kids = &self.children[iv.id.0];
            r = r.max(kids.len());
            for c in kids {
                let ratio = iv.length() / self.intervals[c.0].length();
                if ratio > k {
                    k = ratio;
                }
            }
        }
        HomogeneityStats { r, k }
    }

    /// Sum of root lengths.
    pub fn total_length(&self) -> Rational {
        let b = &self.breakpoints[0];
        b[b.len() - 1] - b[0]
    }
}

pub struct Ancestors<'a> {
    lattice: &'a Lattice,
    next: Option<IntervalId>,
}

impl Iterator for Ancestors<'_> {
    type Item = IntervalId;

    fn next(&mut self) -> Option<IntervalId> {
        let cur = self.next?;
        self.next = self.lattice.parents[cur.0];
        Some(cur)
    }
}

pub(crate) fn rational_to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| *x.numer() as f64 / *x.denom() as f64)
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    s.trim()
        .parse::<Rational>()
        .map_err(|_| Error::Parse(format!("{s:?} is not a rational of the form p/q")))
}

/// Serde adapter writing a rational as a `"p/q"` (or integer) string.
pub mod rational_string {
    use super::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// On-disk form of a lattice: `{"generations": [["0", "1/2", "1"], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub generations: Vec<Vec<String>>,
}

impl From<&Lattice> for LatticeSpec {
    fn from(l: &Lattice) -> Self {
        LatticeSpec {
            generations: l
                .breakpoints
                .iter()
                .map(|g| g.iter().map(ToString::to_string).collect())
                .collect(),
        }
    }
}

impl TryFrom<LatticeSpec> for Lattice {
    type Error = Error;

    fn try_from(spec: LatticeSpec) -> Result<Self> {
        let generations = spec
            .generations
            .iter()
            .map(|g| g.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Lattice::from_breakpoints(generations)
    }
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LatticeSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = LatticeSpec::deserialize(d)?;
        Lattice::try_from(spec).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn d2() -> Lattice {
        Lattice::from_breakpoints(vec![
            vec![q(0, 1), q(1, 1)],
            vec![q(0, 1), q(1, 2), q(1, 1)],
            vec![q(0, 1), q(1, 4), q(1, 2), q(3, 4), q(1, 1)],
        ])
        .unwrap()
    }

    #[test]
    fn d2_structure() {
        let l = d2();
        assert_eq!(l.len(), 7);
        assert_eq!(l.roots().len(), 1);
        assert_eq!(l.num_leaves(), 4);
        let root = l.roots()[0];
        assert_eq!(l.interval(root).left, q(0, 1));
        assert_eq!(l.interval(root).right, q(1, 1));
        assert_eq!(l.children(root).len(), 2);
        assert_eq!(l.leaf_range(root), 0..4);
        assert_eq!(l, Lattice::dyadic(2, q(0, 1), q(1, 1)).unwrap());
    }

    #[test]
    fn thirds_split() {
        let l = Lattice::from_breakpoints(vec![vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(1, 3), q(1, 1)]]).unwrap();
        let kids: Vec<_> = l
            .children(l.roots()[0])
            .iter()
            .map(|c| (l.interval(*c).left, l.interval(*c).right))
            .collect();
        assert_eq!(kids, vec![(q(0, 1), q(1, 3)), (q(1, 3), q(1, 1))]);
        let stats = l.homogeneity_stats();
        assert_eq!(stats.r, 2);
        assert_eq!(stats.k, q(3, 1));
    }

    #[test]
    fn child_leaving_parent_is_rejected() {
        let err = Lattice::from_breakpoints(vec![vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(1, 2), q(2, 1)]]).unwrap_err();
        assert!(matches!(err, Error::NotARefinement { generation: 1, .. }), "{err:?}");
    }

    #[test]
    fn crossing_a_parent_boundary_is_rejected() {
        let err = Lattice::from_breakpoints(vec![
            vec![q(0, 1), q(1, 2), q(1, 1)],
            vec![q(0, 1), q(1, 4), q(3, 4), q(1, 1)],
        ])
        .unwrap_err();
        assert!(matches!(err, Error::NotARefinement { .. }), "{err:?}");
    }

    #[test]
    fn short_generation_is_a_gap() {
        let err = Lattice::from_breakpoints(vec![vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(1, 2)]]).unwrap_err();
        assert!(matches!(err, Error::GapOrOverlap { generation: 1, .. }), "{err:?}");
        let err = Lattice::from_breakpoints(vec![vec![q(0, 1), q(1, 2), q(1, 2)]]).unwrap_err();
        assert!(matches!(err, Error::GapOrOverlap { generation: 0, .. }));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(Lattice::from_breakpoints(vec![]), Err(Error::EmptyInput(_))));
        assert!(matches!(
            Lattice::from_breakpoints(vec![vec![q(0, 1)]]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn persisting_interval_is_one_object() {
        let l = Lattice::from_breakpoints(vec![
            vec![q(0, 1), q(1, 1)],
            vec![q(0, 1), q(1, 2), q(1, 1)],
            vec![q(0, 1), q(1, 4), q(1, 2), q(1, 1)],
        ])
        .unwrap();
        assert_eq!(l.len(), 5);
        let right = l.find(&q(1, 2), &q(1, 1)).unwrap();
        assert_eq!(l.interval(right).generation, 1);
        assert_eq!(l.rank(right), 2);
        assert!(l.is_leaf(right));
        assert_eq!(l.leaves().len(), 3);
    }

    #[test]
    fn dyadic_examples() {
        let l0 = Lattice::dyadic(0, q(0, 1), q(1, 1)).unwrap();
        assert_eq!(l0.len(), 1);
        assert_eq!(l0.roots(), l0.leaves());
        let s = l0.homogeneity_stats();
        assert_eq!((s.r, s.k), (1, q(1, 1)));

        let l3 = Lattice::dyadic(3, q(0, 1), q(8, 1)).unwrap();
        assert_eq!(l3.len(), 15);
        for iv in l3.intervals() {
            let len = iv.length();
            assert!(len.is_integer() && (*len.numer() as u64).is_power_of_two());
        }
        let s = d2().homogeneity_stats();
        assert_eq!((s.r, s.k), (2, q(2, 1)));
    }

    #[test]
    fn random_depth_zero_is_single_interval() {
        let l = Lattice::random(1, 0, 4, 1).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.depth(), 0);
    }

    #[test]
    fn random_is_deterministic() {
        for seed in 0..20 {
            assert_eq!(
                Lattice::random(seed, 5, 4, 3).unwrap(),
                Lattice::random(seed, 5, 4, 3).unwrap()
            );
        }
    }

    #[test]
    fn json_round_trip() {
        let l = Lattice::from_breakpoints(vec![vec![q(0, 1), q(1, 1)], vec![q(0, 1), q(1, 3), q(1, 1)]]).unwrap();
        let text = serde_json::to_string(&l).unwrap();
        assert_eq!(text, r#"{"generations":[["0","1"],["0","1/3","1"]]}"#);
        let back: Lattice = serde_json::from_str(&text).unwrap();
        assert_eq!(back, l);
    }
}
