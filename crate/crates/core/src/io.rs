//! JSON documents for lattices, functions, coefficient sequences and
//! decomposition certificates.
//!
//! Rationals are written as `"p/q"` strings. Intervals are referenced as
//! `[left, right, generation]` where `generation` is any generation that
//! contains the interval; emitters use the first one.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::decompose::{BmoDecomposition, MaximalDual};
use crate::error::{Error, Result};
use crate::function::{CoefSequence, StepFunction};
use crate::lattice::{parse_rational, rational_to_f64, IntervalId, Lattice, LatticeSpec, Rational};
use crate::operators::{self, bmo_norm, carleson_constant, maximal, square};

/// A lattice given inline or as a path to a lattice JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeRef {
    Inline(LatticeSpec),
    File(String),
}

impl LatticeRef {
    /// Resolves the reference; relative paths are taken from `base_dir`.
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Lattice> {
        match self {
            LatticeRef::Inline(spec) => Lattice::try_from(spec.clone()),
            LatticeRef::File(path) => {
                let mut p = PathBuf::from(path);
                if p.is_relative() {
                    if let Some(base) = base_dir {
                        p = base.join(p);
                    }
                }
                let text = std::fs::read_to_string(&p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
                let spec: LatticeSpec =
                    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
                Lattice::try_from(spec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDoc {
    pub lattice: LatticeRef,
    pub leaf_values: Vec<f64>,
}

impl FunctionDoc {
    pub fn from_function(f: &StepFunction) -> Self {
        FunctionDoc {
            lattice: LatticeRef::Inline(LatticeSpec::from(&**f.lattice())),
            leaf_values: f.values().to_vec(),
        }
    }

    pub fn to_function(&self, base_dir: Option<&Path>) -> Result<StepFunction> {
        let lattice = Arc::new(self.lattice.resolve(base_dir)?);
        StepFunction::new(lattice, self.leaf_values.clone())
    }

    /// Builds the function on an already loaded lattice, which must match
    /// the one named in the document.
    pub fn to_function_on(&self, lattice: &Arc<Lattice>, base_dir: Option<&Path>) -> Result<StepFunction> {
        let own = self.lattice.resolve(base_dir)?;
        if own != **lattice {
            return Err(Error::LatticeMismatch);
        }
        StepFunction::new(lattice.clone(), self.leaf_values.clone())
    }
}

/// `[left, right, generation]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalKey(pub String, pub String, pub usize);

impl IntervalKey {
    pub fn of(lattice: &Lattice, id: IntervalId) -> Self {
        let iv = lattice.interval(id);
        IntervalKey(iv.left.to_string(), iv.right.to_string(), iv.generation)
    }

    pub fn resolve(&self, lattice: &Lattice) -> Result<IntervalId> {
        let left = parse_rational(&self.0)?;
        let right = parse_rational(&self.1)?;
        let id = lattice.find(&left, &right).ok_or(Error::ForeignInterval)?;
        let iv = lattice.interval(id);
        if self.2 < iv.generation || self.2 > iv.rank {
            return Err(Error::ForeignInterval);
        }
        Ok(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefEntry {
    pub interval: IntervalKey,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefDoc {
    pub entries: Vec<CoefEntry>,
}

impl CoefDoc {
    pub fn from_sequence(a: &CoefSequence) -> Self {
        let lattice = a.lattice();
        CoefDoc {
            entries: a
                .iter()
                .map(|(id, value)| CoefEntry {
                    interval: IntervalKey::of(lattice, id),
                    value,
                })
                .collect(),
        }
    }

    /// Repeated intervals are summed.
    pub fn to_sequence(&self, lattice: &Arc<Lattice>) -> Result<CoefSequence> {
        let mut a = CoefSequence::new(lattice.clone());
        for e in &self.entries {
            a.add_to(e.interval.resolve(lattice)?, e.value)?;
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoCertificates {
    pub bmo_norm: f64,
    pub c1: f64,
    pub c2: f64,
    pub lambda: f64,
    pub phi_sup: f64,
    pub carleson: f64,
    pub carleson_witness: IntervalKey,
    /// `max |g − (root means + phi + balayage)|` over leaves.
    pub identity_residual: f64,
    /// `max_n max_roots Σ|I^{(n)}| / (2^{-n} |I_m|)`; at most 1.
    pub worst_stage_decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoDecompositionDoc {
    pub lattice: LatticeSpec,
    pub root_means: Vec<CoefEntry>,
    pub phi: Vec<f64>,
    pub coeffs: CoefDoc,
    pub stages: Vec<Vec<IntervalKey>>,
    pub certificates: BmoCertificates,
}

/// Largest stage measure relative to its allowance `2^{-n} |I_m|`.
pub fn worst_stage_decay(d: &BmoDecomposition) -> f64 {
    let lattice = d.lattice();
    let mut worst: f64 = 0.0;
    for n in 1..=d.stages.len() {
        for &root in lattice.roots() {
            let measure = d.stage_measure(root, n);
            let allowance = lattice.interval(root).length() / Rational::from_integer(1i128 << n.min(120));
            let ratio = rational_to_f64(&(measure / allowance));
            worst = worst.max(ratio);
        }
    }
    worst
}

impl BmoDecompositionDoc {
    pub fn new(g: &StepFunction, d: &BmoDecomposition) -> Self {
        let lattice = d.lattice();
        let carl = carleson_constant(&d.coeffs);
        let residual = d.recombine().sub(g).map(|r| r.max_abs()).unwrap_or(f64::INFINITY);
        BmoDecompositionDoc {
            lattice: LatticeSpec::from(&**lattice),
            root_means: d
                .root_means
                .iter()
                .map(|(id, value)| CoefEntry {
                    interval: IntervalKey::of(lattice, *id),
                    value: *value,
                })
                .collect(),
            phi: d.phi.values().to_vec(),
            coeffs: CoefDoc::from_sequence(&d.coeffs),
            stages: d
                .stages
                .iter()
                .map(|s| s.iter().map(|id| IntervalKey::of(lattice, *id)).collect())
                .collect(),
            certificates: BmoCertificates {
                bmo_norm: d.norm.value,
                c1: d.norm.c1,
                c2: d.norm.c2,
                lambda: d.lambda,
                phi_sup: d.phi.max_abs(),
                carleson: carl.value,
                carleson_witness: IntervalKey::of(lattice, carl.witness),
                identity_residual: residual,
                worst_stage_decay: worst_stage_decay(d),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalDualDoc {
    pub lattice: LatticeSpec,
    pub coeffs: CoefDoc,
    pub leaf_assignments: Vec<IntervalKey>,
    pub pairing: f64,
    pub integral_max: f64,
    pub carleson: f64,
}

impl MaximalDualDoc {
    pub fn new(m: &MaximalDual) -> Self {
        let lattice = m.coeffs.lattice();
        MaximalDualDoc {
            lattice: LatticeSpec::from(&**lattice),
            coeffs: CoefDoc::from_sequence(&m.coeffs),
            leaf_assignments: m
                .leaf_assignments
                .iter()
                .map(|id| IntervalKey::of(lattice, *id))
                .collect(),
            pairing: m.pairing,
            integral_max: m.integral_max,
            carleson: carleson_constant(&m.coeffs).value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityDoc {
    pub witness: FunctionDoc,
    pub integral_square: f64,
    pub pairing: f64,
    pub max_difference: f64,
    pub bmo_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisDoc {
    pub integral_max: f64,
    pub integral_square: f64,
    pub bmo_norm: f64,
    pub bmo_c1: f64,
    pub bmo_c2: f64,
    pub max_function: Vec<f64>,
    pub square_function: Vec<f64>,
}

impl AnalysisDoc {
    pub fn new(f: &StepFunction) -> Self {
        let m = maximal(f).function;
        let s = square(f);
        let b = bmo_norm(f);
        AnalysisDoc {
            integral_max: operators::integral(&m),
            integral_square: operators::integral(&s),
            bmo_norm: b.value,
            bmo_c1: b.c1,
            bmo_c2: b.c2,
            max_function: m.into_values(),
            square_function: s.into_values(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{bmo_decompose, maximal_dual};
    use crate::operators::fixtures::*;

    #[test]
    fn function_round_trip() {
        let f = on_d2([0.1, -2.5, 1e-300, 3.0]);
        let text = serde_json::to_string(&FunctionDoc::from_function(&f)).unwrap();
        let doc: FunctionDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.to_function(None).unwrap(), f);
    }

    #[test]
    fn coef_round_trip() {
        let l = d2();
        let a = CoefSequence::from_entries(l.clone(), [(IntervalId(1), 0.5), (IntervalId(6), -0.125)]).unwrap();
        let doc = CoefDoc::from_sequence(&a);
        let text = serde_json::to_string(&doc).unwrap();
        assert_eq!(
            text,
            r#"{"entries":[{"interval":["0","1/2",1],"value":0.5},{"interval":["3/4","1",2],"value":-0.125}]}"#
        );
        let back: CoefDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_sequence(&l).unwrap(), a);
    }

    #[test]
    fn persisting_interval_accepts_any_of_its_generations() {
        let q = |n, d| crate::lattice::Rational::new(n, d);
        let l = Arc::new(
            Lattice::from_breakpoints(vec![
                vec![q(0, 1), q(1, 1)],
                vec![q(0, 1), q(1, 2), q(1, 1)],
                vec![q(0, 1), q(1, 4), q(1, 2), q(1, 1)],
            ])
            .unwrap(),
        );
        for generation in [1, 2] {
            assert!(IntervalKey("1/2".into(), "1".into(), generation).resolve(&l).is_ok());
        }
        assert_eq!(
            IntervalKey("1/2".into(), "1".into(), 0).resolve(&l),
            Err(Error::ForeignInterval)
        );
    }

    #[test]
    fn certificate_docs_round_trip() {
        let f = spike();
        let d = BmoDecompositionDoc::new(&f, &bmo_decompose(&f));
        let back: BmoDecompositionDoc = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let m = MaximalDualDoc::new(&maximal_dual(&f));
        let back: MaximalDualDoc = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn analysis_of_spike() {
        let a = AnalysisDoc::new(&spike());
        assert_eq!(a.integral_max, 2.0);
        assert!((a.integral_square - (6f64.sqrt() + 2f64.sqrt()) / 2.0).abs() < 1e-15);
    }
}
