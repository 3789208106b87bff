//! Strongly log-concave target potentials `f`, with target density `∝ exp(-f)`.
//!
//! Every target reports its smoothness constants: the strong-convexity
//! constant `μ`, the gradient Lipschitz constant `L`, and the directional
//! constants `L_i` bounding the variation of `∂_i f` along the `i`-th axis.
//!
//! The unit of computational cost throughout the crate is one evaluation of a
//! single partial derivative; a full gradient is charged `d` units.

mod experiment;
mod graph;
mod quadratic;

pub use experiment::{ProductExperimentTarget, EXPERIMENT_BLOCK};
pub use graph::GraphTarget;
pub use quadratic::QuadraticTarget;

use crate::error::{check_dim, Error, Result};

/// Relative slack allowed when checking the constant inequalities.
const CONSTANT_SLACK: f64 = 1e-12;

/// A twice-differentiable, strongly convex potential with Lipschitz gradient.
///
/// The `*_into`/plain methods assume correctly sized inputs; the checked
/// entry points are [`eval`], [`partial_grad`] and [`full_grad`].
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    /// `f(x)`.
    fn value(&self, x: &[f64]) -> f64;

    /// `∂_i f(x)`.
    fn partial(&self, i: usize, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, g) in out.iter_mut().enumerate() {
            *g = self.partial(i, x);
        }
    }

    fn constants(&self) -> &SmoothnessConstants;

    fn minimizer(&self) -> Option<&[f64]> {
        None
    }
}

/// Counter of partial-derivative evaluations. Owned by a single chain.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CostLedger {
    units: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn units(&self) -> u64 {
        self.units
    }

    pub fn charge(&mut self, units: u64) {
        self.units += units;
    }
}

/// `μ`, `L` and the directional constants `L_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessConstants {
    mu: f64,
    big_l: f64,
    coord_l: Vec<f64>,
}

impl SmoothnessConstants {
    /// Validates `0 < μ ≤ L_i ≤ L ≤ d·max_i L_i`.
    pub fn new(mu: f64, big_l: f64, coord_l: Vec<f64>) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::param("mu", mu, "must be positive and finite"));
        }
        if !(big_l.is_finite() && big_l > 0.0) {
            return Err(Error::param("L", big_l, "must be positive and finite"));
        }
        if coord_l.is_empty() {
            return Err(Error::InvalidConstants("empty directional constants".into()));
        }
        let tol = 1.0 + CONSTANT_SLACK;
        if mu > big_l * tol {
            return Err(Error::InvalidConstants(format!("mu = {mu} exceeds L = {big_l}")));
        }
        for (i, &li) in coord_l.iter().enumerate() {
            if !(li.is_finite() && li > 0.0) {
                return Err(Error::InvalidConstants(format!("L_{i} = {li} is not positive")));
            }
            if li > big_l * tol {
                return Err(Error::InvalidConstants(format!("L_{i} = {li} exceeds L = {big_l}")));
            }
            if mu > li * tol {
                return Err(Error::InvalidConstants(format!("mu = {mu} exceeds L_{i} = {li}")));
            }
        }
        let l_max = coord_l.iter().copied().fold(0.0, f64::max);
        if big_l > coord_l.len() as f64 * l_max * tol {
            return Err(Error::InvalidConstants(format!(
                "L = {big_l} exceeds d * max L_i = {}",
                coord_l.len() as f64 * l_max
            )));
        }
        Ok(Self { mu, big_l, coord_l })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn big_l(&self) -> f64 {
        self.big_l
    }

    pub fn coord_l(&self) -> &[f64] {
        &self.coord_l
    }

    pub fn dim(&self) -> usize {
        self.coord_l.len()
    }
}

/// `κ = L/μ`, `κ_i = L_i/μ`, `κ_max = max_i κ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionNumbers {
    pub kappa: f64,
    pub kappa_vec: Vec<f64>,
    pub kappa_max: f64,
}

impl ConditionNumbers {
    /// `Σ_i κ_i² / φ_i²`, the schedule-dependent factor of the RC-ULMC
    /// discretization error.
    pub fn weighted_sum(&self, phi: &[f64]) -> f64 {
        self.kappa_vec
            .iter()
            .zip(phi)
            .map(|(k, p)| (k / p) * (k / p))
            .sum()
    }
}

/// Computes the condition numbers and checks `κ_i ≤ κ_max ≤ κ ≤ d·κ_max`.
pub fn condition_numbers(constants: &SmoothnessConstants) -> Result<ConditionNumbers> {
    let mu = constants.mu();
    if !(mu > 0.0) {
        return Err(Error::param("mu", mu, "must be positive"));
    }
    let kappa = constants.big_l() / mu;
    let kappa_vec: Vec<f64> = constants.coord_l().iter().map(|l| l / mu).collect();
    let kappa_max = kappa_vec.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let d = kappa_vec.len() as f64;
    let tol = 1.0 + CONSTANT_SLACK;
    if kappa_max > kappa * tol || kappa > d * kappa_max * tol {
        return Err(Error::InvalidConstants(format!(
            "condition numbers violate kappa_max <= kappa <= d kappa_max \
             (kappa = {kappa}, kappa_max = {kappa_max}, d = {d})"
        )));
    }
    Ok(ConditionNumbers {
        kappa,
        kappa_vec,
        kappa_max,
    })
}

/// Checked `f(x)`.
pub fn eval<P: Potential + ?Sized>(target: &P, x: &[f64]) -> Result<f64> {
    check_dim(target.dim(), x.len())?;
    Ok(target.value(x))
}

/// Checked `∂_i f(x)`, charging one unit to `ledger`.
pub fn partial_grad<P: Potential + ?Sized>(
    target: &P,
    i: usize,
    x: &[f64],
    ledger: &mut CostLedger,
) -> Result<f64> {
    check_dim(target.dim(), x.len())?;
    if i >= target.dim() {
        return Err(Error::IndexOutOfRange {
            index: i,
            dim: target.dim(),
        });
    }
    ledger.charge(1);
    Ok(target.partial(i, x))
}

/// Checked `∇f(x)`, charging `d` units to `ledger`.
pub fn full_grad<P: Potential + ?Sized>(
    target: &P,
    x: &[f64],
    ledger: &mut CostLedger,
) -> Result<Vec<f64>> {
    check_dim(target.dim(), x.len())?;
    let mut out = vec![0.0; x.len()];
    target.gradient_into(x, &mut out);
    ledger.charge(x.len() as u64);
    Ok(out)
}

/// Outcome of [`spot_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpotCheckReport {
    /// Largest relative deviation between `∂_i f` and a central difference of `f`.
    pub max_partial_fd_error: f64,
    /// Largest observed `|∂_i f(x + t e_i) - ∂_i f(x)| / (L_i |t|)`.
    pub max_directional_ratio: f64,
    /// Largest observed `|∇f(x) - ∇f(y)| / (L |x - y|)`.
    pub max_lipschitz_ratio: f64,
    /// Smallest observed `(∇f(x) - ∇f(y))·(x - y) / (μ |x - y|²)`.
    pub min_convexity_ratio: f64,
}

impl SpotCheckReport {
    pub fn passed(&self, fd_tolerance: f64) -> bool {
        let slack = 1.0 + 1e-9;
        self.max_partial_fd_error <= fd_tolerance
            && self.max_directional_ratio <= slack
            && self.max_lipschitz_ratio <= slack
            && self.min_convexity_ratio >= 1.0 / slack
    }
}

/// Sampled consistency check of a target against its declared constants.
///
/// `points` are probe locations. Exact global verification of `μ`, `L`, `L_i`
/// is impossible for general targets; this only looks for counterexamples.
pub fn spot_check<P: Potential + ?Sized>(target: &P, points: &[Vec<f64>]) -> Result<SpotCheckReport> {
    let d = target.dim();
    let c = target.constants();
    let mut report = SpotCheckReport {
        max_partial_fd_error: 0.0,
        max_directional_ratio: 0.0,
        max_lipschitz_ratio: 0.0,
        min_convexity_ratio: f64::INFINITY,
    };
    let mut g0 = vec![0.0; d];
    let mut g1 = vec![0.0; d];
    for (n, x) in points.iter().enumerate() {
        check_dim(d, x.len())?;
        target.gradient_into(x, &mut g0);
        let mut probe = x.clone();
        for i in 0..d {
            let scale = x[i].abs().max(1.0);
            let step = 1e-5 * scale;
            probe[i] = x[i] + step;
            let fp = target.value(&probe);
            let gp = target.partial(i, &probe);
            probe[i] = x[i] - step;
            let fm = target.value(&probe);
            probe[i] = x[i];
            let fd = (fp - fm) / (2.0 * step);
            let denom = g0[i].abs().max(1.0);
            report.max_partial_fd_error = report.max_partial_fd_error.max((fd - g0[i]).abs() / denom);
            let ratio = (gp - g0[i]).abs() / (c.coord_l()[i] * step);
            report.max_directional_ratio = report.max_directional_ratio.max(ratio);
        }
        // Pair each probe with the next one for the two-point conditions.
        let y = &points[(n + 1) % points.len()];
        let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist2 > 0.0 {
            target.gradient_into(y, &mut g1);
            let gdist2: f64 = g0.iter().zip(&g1).map(|(a, b)| (a - b) * (a - b)).sum();
            let inner: f64 = g0
                .iter()
                .zip(&g1)
                .zip(x.iter().zip(y))
                .map(|((ga, gb), (xa, yb))| (ga - gb) * (xa - yb))
                .sum();
            report.max_lipschitz_ratio = report
                .max_lipschitz_ratio
                .max((gdist2 / dist2).sqrt() / c.big_l());
            report.min_convexity_ratio = report.min_convexity_ratio.min(inner / (c.mu() * dist2));
        }
    }
    Ok(report)
}
