//! Leaf-constant functions and interval-indexed coefficient sequences.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{IntervalId, Lattice};

/// A real function constant on every leaf of its lattice.
#[derive(Debug, Clone)]
pub struct StepFunction {
    lattice: Arc<Lattice>,
    values: Vec<f64>,
}

impl PartialEq for StepFunction {
    fn eq(&self, other: &Self) -> bool {
        same_lattice(&self.lattice, &other.lattice) && self.values == other.values
    }
}

pub(crate) fn same_lattice(a: &Arc<Lattice>, b: &Arc<Lattice>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl StepFunction {
    pub fn new(lattice: Arc<Lattice>, values: Vec<f64>) -> Result<Self> {
        let expected = lattice.num_leaves();
        if values.len() != expected {
            return Err(Error::LeafCount {
                expected,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("leaf value {pos} is not finite")));
        }
        Ok(StepFunction { lattice, values })
    }

    pub fn zero(lattice: Arc<Lattice>) -> Self {
        let n = lattice.num_leaves();
        StepFunction {
            lattice,
            values: vec![0.0; n],
        }
    }

    pub fn constant(lattice: Arc<Lattice>, c: f64) -> Self {
        let n = lattice.num_leaves();
        StepFunction {
            lattice,
            values: vec![c; n],
        }
    }

    /// Builds a function from a per-leaf rule; `f` receives leaf positions.
    pub fn from_fn(lattice: Arc<Lattice>, f: impl FnMut(usize) -> f64) -> Self {
        let values = (0..lattice.num_leaves()).map(f).collect();
        StepFunction { lattice, values }
    }

    pub(crate) fn from_values_unchecked(lattice: Arc<Lattice>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), lattice.num_leaves());
        StepFunction { lattice, values }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Values in leaf order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        StepFunction {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &StepFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_lattice(other.lattice())?;
        Ok(StepFunction {
            lattice: self.lattice.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &StepFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &StepFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub(crate) fn check_lattice(&self, other: &Arc<Lattice>) -> Result<()> {
        if same_lattice(&self.lattice, other) {
            Ok(())
        } else {
            Err(Error::LatticeMismatch)
        }
    }
}

/// Sparse real sequence indexed by lattice intervals; absent entries are 0.
#[derive(Debug, Clone)]
pub struct CoefSequence {
    lattice: Arc<Lattice>,
    entries: BTreeMap<IntervalId, f64>,
}

impl PartialEq for CoefSequence {
    fn eq(&self, other: &Self) -> bool {
        same_lattice(&self.lattice, &other.lattice) && self.entries == other.entries
    }
}

impl CoefSequence {
    pub fn new(lattice: Arc<Lattice>) -> Self {
        CoefSequence {
            lattice,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(lattice: Arc<Lattice>, entries: impl IntoIterator<Item = (IntervalId, f64)>) -> Result<Self> {
        let mut seq = CoefSequence::new(lattice);
        for (id, v) in entries {
            seq.set(id, v)?;
        }
        Ok(seq)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Sets `a_I`; a zero value removes the entry.
    pub fn set(&mut self, id: IntervalId, value: f64) -> Result<()> {
        if id.0 >= self.lattice.len() {
            return Err(Error::ForeignInterval);
        }
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("coefficient for {id} is not finite")));
        }
        if value == 0.0 {
            self.entries.remove(&id);
        } else {
            self.entries.insert(id, value);
        }
        Ok(())
    }

    pub fn add_to(&mut self, id: IntervalId, delta: f64) -> Result<()> {
        let v = self.get(id) + delta;
        self.set(id, v)
    }

    pub fn get(&self, id: IntervalId) -> f64 {
        self.entries.get(&id).copied().unwrap_or(0.0)
    }

    /// Non-zero entries in interval-id order.
    pub fn iter(&self) -> impl Iterator<Item = (IntervalId, f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn abs(&self) -> Self {
        CoefSequence {
            lattice: self.lattice.clone(),
            entries: self.entries.iter().map(|(k, v)| (*k, v.abs())).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }
}
