//! Randomized verification of the inequalities linking the maximal
//! function, the square function, BMO and Carleson sequences.

mod check;
mod fuzz;
mod random;
mod sharpness;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use check::{check_instance, Instance};
pub use fuzz::{
    fuzz, fuzz_with_reports, instance_for_trial, replay, CheckSummary, FailureRecord, FuzzConfig, FuzzReport,
};
pub use random::{random_coefficients, random_function};
pub use sharpness::{sharpness_search, Objective, SharpnessResult, TracePoint};

use crate::error::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    /// i.i.d. values in `[-1, 1]`.
    Uniform,
    /// A few leaves carry unit-order mass, the rest is small noise.
    Spiky,
    /// Most leaves are zero.
    Sparse,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Uniform, Distribution::Spiky, Distribution::Sparse];
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "spiky" => Ok(Distribution::Spiky),
            "sparse" => Ok(Distribution::Sparse),
            other => Err(Error::UnknownDistribution(other.to_string())),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Spiky => "spiky",
            Distribution::Sparse => "sparse",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    /// Violated by less than ten times the allowed slack.
    Numerical,
    Logical,
}

/// One inequality `lhs ≤ rhs`; identities are encoded as `|difference| ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    /// Magnitude the slack is proportional to.
    pub scale: f64,
    pub margin: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureKind>,
}

impl CheckRecord {
    /// Passes iff `lhs ≤ rhs + tol · (1 + scale)`.
    pub fn new(name: &str, lhs: f64, rhs: f64, constant: f64, scale: f64, tol: f64) -> Self {
        let slack = tol * (1.0 + scale.abs());
        let pass = lhs <= rhs + slack;
        let failure = if pass {
            None
        } else if lhs <= rhs + 10.0 * slack {
            Some(FailureKind::Numerical)
        } else {
            Some(FailureKind::Logical)
        };
        CheckRecord {
            name: name.to_string(),
            lhs,
            rhs,
            constant,
            scale: scale.abs(),
            margin: rhs - lhs,
            pass,
            failure,
        }
    }

    /// `lhs / rhs`, when the right-hand side is positive.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

/// Identifies how an instance was produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_distribution: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_distribution: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance: InstanceDescriptor,
    pub checks: Vec<CheckRecord>,
    pub all_pass: bool,
    pub worst_margin: f64,
    pub worst_check: String,
}

impl VerificationReport {
    pub fn new(instance: InstanceDescriptor, checks: Vec<CheckRecord>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        let (worst_margin, worst_check) = checks.iter().fold((f64::INFINITY, String::new()), |(m, n), c| {
            if c.margin < m {
                (c.margin, c.name.clone())
            } else {
                (m, n)
            }
        });
        VerificationReport {
            instance,
            checks,
            all_pass,
            worst_margin,
            worst_check,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn has_logical_failure(&self) -> bool {
        self.checks.iter().any(|c| c.failure == Some(FailureKind::Logical))
    }

    /// CSV rows `trial,name,lhs,rhs,constant,margin,pass`, without header.
    pub fn csv_rows(&self, out: &mut String) {
        let trial = self.instance.trial.map(|t| t.to_string()).unwrap_or_default();
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{:e},{:e},{},{:e},{}\n",
                trial, c.name, c.lhs, c.rhs, c.constant, c.margin, c.pass
            ));
        }
    }
}

pub const CSV_HEADER: &str = "trial,name,lhs,rhs,constant,margin,pass\n";
