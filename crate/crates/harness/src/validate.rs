//! Admissibility reports and theoretical iteration estimates for a config.

use std::fmt;
use std::path::Path;

use rculmc_core::oracles::{
    prop5_second_moment_floor, rc_ulmc_iteration_estimate, ulmc_iteration_estimate, IterationEstimate,
};
use rculmc_core::samplers::{validate_stepsize, AdmissibilityReport, Algorithm};
use rculmc_core::Error as CoreError;

use crate::config::{ExperimentConfig, ExperimentKind, SamplerEntry};
use crate::error::{HarnessError, Result};

/// Accuracy and initial distance the iteration estimates are computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateTarget {
    pub eps: f64,
    pub w0: f64,
}

impl Default for EstimateTarget {
    fn default() -> Self {
        Self { eps: 0.1, w0: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmCheck {
    pub report: AdmissibilityReport,
    pub estimate: IterationEstimate,
}

#[derive(Debug, Clone)]
pub struct SamplerValidation {
    pub label: String,
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub h: f64,
    pub strict: bool,
    pub ulmc: AlgorithmCheck,
    pub rc_ulmc: AlgorithmCheck,
}

impl SamplerValidation {
    /// The check for the algorithm this sampler actually runs.
    pub fn own(&self) -> &AlgorithmCheck {
        match self.algorithm {
            Algorithm::Ulmc => &self.ulmc,
            Algorithm::RcUlmc => &self.rc_ulmc,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub name: String,
    pub eps: f64,
    pub w0: f64,
    pub samplers: Vec<SamplerValidation>,
    /// For the recursion experiment: whether `h·d` meets its hypothesis.
    pub oracle_hypothesis: Option<std::result::Result<(), String>>,
}

impl ValidationReport {
    /// Any sampler configured as strict whose own algorithm is inadmissible.
    pub fn strict_failures(&self) -> Vec<&SamplerValidation> {
        self.samplers
            .iter()
            .filter(|s| s.strict && !s.own().report.admissible())
            .collect()
    }
}

/// Evaluates both algorithms' bounds at each sampler's `(γ, h)`.
pub fn validate(config: &ExperimentConfig, base: Option<&Path>, at: EstimateTarget) -> Result<ValidationReport> {
    let mut report = ValidationReport {
        name: config.name.clone(),
        eps: at.eps,
        w0: at.w0,
        samplers: Vec::new(),
        oracle_hypothesis: None,
    };
    if config.kind == ExperimentKind::Prop5Oracle {
        let o = config
            .oracle
            .as_ref()
            .ok_or_else(|| HarnessError::Config("`[oracle]` is required".into()))?;
        report.oracle_hypothesis = Some(match prop5_second_moment_floor(o.dim, o.h, 0) {
            Ok(_) => Ok(()),
            Err(e @ CoreError::HypothesisViolated(_)) => Err(e.to_string()),
            Err(e) => return Err(HarnessError::setup(e)),
        });
        return Ok(report);
    }
    let target = config
        .target
        .as_ref()
        .ok_or_else(|| HarnessError::Config("`[target]` is required".into()))?
        .build(base)?;
    let p = target.potential();
    let constants = p.constants();
    for entry in &config.samplers {
        let algorithm = entry.algorithm()?;
        let as_alg = |alg: Algorithm| SamplerEntry {
            algorithm: alg.as_str().into(),
            ..entry.clone()
        };
        let ulmc_cfg = as_alg(Algorithm::Ulmc).sampler_config(p)?;
        let rc_cfg = as_alg(Algorithm::RcUlmc).sampler_config(p)?;
        let phi = rc_cfg.schedule.as_ref().map(|s| s.phi().to_vec());
        let ulmc = AlgorithmCheck {
            report: validate_stepsize(constants, &ulmc_cfg, Algorithm::Ulmc),
            estimate: ulmc_iteration_estimate(constants, entry.gamma, at.eps, at.w0).map_err(HarnessError::setup)?,
        };
        let rc_ulmc = AlgorithmCheck {
            report: validate_stepsize(constants, &rc_cfg, Algorithm::RcUlmc),
            estimate: rc_ulmc_iteration_estimate(constants, entry.gamma, phi.as_deref(), at.eps, at.w0)
                .map_err(HarnessError::setup)?,
        };
        report.samplers.push(SamplerValidation {
            label: entry.label()?,
            algorithm,
            gamma: entry.gamma,
            h: entry.h,
            strict: entry.strict,
            ulmc,
            rc_ulmc,
        });
    }
    Ok(report)
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "config `{}`", self.name)?;
        if let Some(h) = &self.oracle_hypothesis {
            match h {
                Ok(()) => writeln!(f, "  recursion hypothesis h*d <= 1e-8: PASS")?,
                Err(e) => writeln!(f, "  recursion hypothesis h*d <= 1e-8: FAIL ({e})")?,
            }
        }
        for s in &self.samplers {
            let mode = if s.strict { "strict" } else { "permissive" };
            writeln!(
                f,
                "sampler `{}` runs {} with gamma = {}, h = {} ({mode})",
                s.label, s.algorithm, s.gamma, s.h
            )?;
            for (alg, check) in [(Algorithm::Ulmc, &s.ulmc), (Algorithm::RcUlmc, &s.rc_ulmc)] {
                let verdict = match (check.report.admissible(), s.strict && alg == s.algorithm) {
                    (true, _) => "PASS",
                    (false, true) => "FAIL",
                    (false, false) => "WARN",
                };
                let b = check.report.binding();
                writeln!(
                    f,
                    "  {:<8} {verdict}  gamma_max = {:.6e}, h_max = {:.6e}; binding: {} ({:.6e} vs {:.6e})",
                    alg.as_str(),
                    check.report.gamma_max,
                    check.report.h_max,
                    b.description,
                    b.value,
                    b.limit
                )?;
                for c in check.report.checks.iter().filter(|c| !c.passed) {
                    writeln!(f, "           violated: {} ({:.6e} > {:.6e})", c.description, c.value, c.limit)?;
                }
                writeln!(
                    f,
                    "           estimate for W2 <= {} from W0 = {}: h = {:.6e}, iterations = {:.6e}, cost = {:.6e}",
                    self.eps, self.w0, check.estimate.h, check.estimate.iterations, check.estimate.cost_units
                )?;
            }
        }
        Ok(())
    }
}
