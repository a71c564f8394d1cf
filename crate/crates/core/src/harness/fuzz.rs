use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check::Instance;
use super::random::{random_coefficients, random_function};
use super::{Distribution, InstanceDescriptor, VerificationReport, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice::Lattice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: usize,
    pub max_depth: usize,
    pub max_children: usize,
    pub max_roots: usize,
    /// Distributions cycled through by trial index.
    pub distributions: Vec<Distribution>,
    pub tolerance: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            trials: 1000,
            max_depth: 6,
            max_children: 4,
            max_roots: 3,
            distributions: Distribution::ALL.to_vec(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl FuzzConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trial count must be at least 1".into()));
        }
        if self.max_children == 0 || self.max_roots == 0 {
            return Err(Error::InvalidParameter(
                "max_children and max_roots must be at least 1".into(),
            ));
        }
        if self.distributions.is_empty() {
            return Err(Error::InvalidParameter("no value distribution".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The instance checked by trial `trial` of `config`.
pub fn instance_for_trial(config: &FuzzConfig, trial: usize) -> Result<Instance> {
    let seed = mix(config.seed ^ mix(trial as u64));
    let lattice = Arc::new(Lattice::random(
        seed,
        config.max_depth,
        config.max_children,
        config.max_roots,
    )?);
    let dists = &config.distributions;
    let f_dist = dists[trial % dists.len()];
    let g_dist = dists[(trial + 1) % dists.len()];
    let f = random_function(&lattice, mix(seed ^ 1), f_dist);
    let g = random_function(&lattice, mix(seed ^ 2), g_dist);
    let a = random_coefficients(&lattice, mix(seed ^ 3), true);
    let descriptor = InstanceDescriptor {
        trial: Some(trial),
        seed: Some(seed),
        f_distribution: Some(f_dist),
        g_distribution: Some(g_dist),
        source: None,
    };
    Ok(Instance::new(descriptor, &f, &g, &a))
}

/// Re-runs a saved instance artifact.
pub fn replay(instance: &Instance, tol: f64) -> Result<VerificationReport> {
    instance.check(tol)
}

/// Per-check aggregate over all trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub passed: usize,
    pub failed: usize,
    pub numerical_failures: usize,
    pub worst_margin: f64,
    pub worst_margin_trial: usize,
    /// Largest `lhs / rhs` over trials with `rhs > 0`.
    pub max_ratio: Option<f64>,
    pub max_ratio_trial: Option<usize>,
}

impl CheckSummary {
    fn single(trial: usize, c: &super::CheckRecord) -> Self {
        CheckSummary {
            passed: c.pass as usize,
            failed: (!c.pass) as usize,
            numerical_failures: (c.failure == Some(super::FailureKind::Numerical)) as usize,
            worst_margin: c.margin,
            worst_margin_trial: trial,
            max_ratio: c.ratio(),
            max_ratio_trial: c.ratio().map(|_| trial),
        }
    }

    /// Associative and commutative; ties go to the lower trial index.
    fn merge(&mut self, other: &CheckSummary) {
        self.passed += other.passed;
        self.failed += other.failed;
        self.numerical_failures += other.numerical_failures;
        if other.worst_margin < self.worst_margin
            || (other.worst_margin == self.worst_margin && other.worst_margin_trial < self.worst_margin_trial)
        {
            self.worst_margin = other.worst_margin;
            self.worst_margin_trial = other.worst_margin_trial;
        }
        match (self.max_ratio, other.max_ratio) {
            (_, None) => {}
            (None, Some(_)) => {
                self.max_ratio = other.max_ratio;
                self.max_ratio_trial = other.max_ratio_trial;
            }
            (Some(a), Some(b)) => {
                if b > a || (b == a && other.max_ratio_trial < self.max_ratio_trial) {
                    self.max_ratio = other.max_ratio;
                    self.max_ratio_trial = other.max_ratio_trial;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub trial: usize,
    pub logical: bool,
    pub instance: Instance,
    pub report: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub trials: usize,
    pub all_pass: bool,
    pub summary: BTreeMap<String, CheckSummary>,
    /// Ordered by trial index.
    pub failures: Vec<FailureRecord>,
}

impl FuzzReport {
    pub fn has_logical_failure(&self) -> bool {
        self.failures.iter().any(|f| f.logical)
    }
}

/// Runs `check_instance` on `config.trials` generated instances in parallel.
///
/// Returns the summary and, separately, every trial report in trial order.
pub fn fuzz_with_reports(config: &FuzzConfig) -> Result<(FuzzReport, Vec<VerificationReport>)> {
    config.validate()?;
    let results: Vec<Result<(Instance, VerificationReport)>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let inst = instance_for_trial(config, t)?;
            let report = inst.check(config.tolerance)?;
            Ok((inst, report))
        })
        .collect();

    let mut summary: BTreeMap<String, CheckSummary> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut reports = Vec::with_capacity(config.trials);
    for (t, r) in results.into_iter().enumerate() {
        let (inst, report) = r?;
        for c in &report.checks {
            let s = CheckSummary::single(t, c);
            summary
                .entry(c.name.clone())
                .and_modify(|acc| acc.merge(&s))
                .or_insert(s);
        }
        if !report.all_pass {
            failures.push(FailureRecord {
                trial: t,
                logical: report.has_logical_failure(),
                instance: inst,
                report: report.clone(),
            });
        }
        reports.push(report);
    }
    let report = FuzzReport {
        config: config.clone(),
        trials: config.trials,
        all_pass: failures.is_empty(),
        summary,
        failures,
    };
    Ok((report, reports))
}

pub fn fuzz(config: &FuzzConfig) -> Result<FuzzReport> {
    fuzz_with_reports(config).map(|(r, _)| r)
}
