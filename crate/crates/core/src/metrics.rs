//! Diagnostics computed from chain output.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::potentials::ProductExperimentTarget;
use crate::samplers::PhaseState;

/// Relative resolution of each power-iteration run (see [`spectral_norm`]).
pub const POWER_TOLERANCE: f64 = 1e-10;

/// Hard cap on power iterations.
pub const POWER_MAX_ITERS: usize = 100_000;

/// Blocks of at most this many samples are summed sequentially; larger
/// ranges are split in half.
const PAIRWISE_BLOCK: usize = 32;

/// Spectral-norm distance between the empirical mean of `x xᵀ` over the
/// first `k` coordinates and a reference matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentErrorReport {
    pub empirical_psi: DMatrix<f64>,
    pub reference_psi: DMatrix<f64>,
    pub error: f64,
    pub n_samples: usize,
    pub cost_units: u64,
}

impl MomentErrorReport {
    pub fn with_cost_units(mut self, cost_units: u64) -> Self {
        self.cost_units = cost_units;
        self
    }
}

/// `‖(1/N) Σ x⁽ⁱ⁾x⁽ⁱ⁾ᵀ − reference‖₂` over the first `k` coordinates of each
/// sample. Samples are summed pairwise in a fixed order, so the result does
/// not depend on how they were produced.
pub fn moment_error<S: AsRef<[f64]>>(
    samples: &[S],
    reference: &DMatrix<f64>,
    k: usize,
) -> Result<MomentErrorReport> {
    if samples.is_empty() {
        return Err(Error::param("n_samples", 0.0, "need at least one sample"));
    }
    check_dim(k, reference.nrows())?;
    check_dim(k, reference.ncols())?;
    for s in samples {
        let d = s.as_ref().len();
        if k > d {
            return Err(Error::IndexOutOfRange { index: k, dim: d });
        }
    }
    let sum = pairwise_outer_sum(samples, k);
    let empirical = sum / samples.len() as f64;
    let error = spectral_norm(&(&empirical - reference))?;
    Ok(MomentErrorReport {
        empirical_psi: empirical,
        reference_psi: reference.clone(),
        error,
        n_samples: samples.len(),
        cost_units: 0,
    })
}

fn pairwise_outer_sum<S: AsRef<[f64]>>(samples: &[S], k: usize) -> DMatrix<f64> {
    if samples.len() <= PAIRWISE_BLOCK {
        let mut acc = DMatrix::zeros(k, k);
        for s in samples {
            let x = &s.as_ref()[..k];
            for i in 0..k {
                for j in 0..k {
                    acc[(i, j)] += x[i] * x[j];
                }
            }
        }
        acc
    } else {
        let (lo, hi) = samples.split_at(samples.len() / 2);
        pairwise_outer_sum(lo, k) + pairwise_outer_sum(hi, k)
    }
}

/// `E xxᵀ` on the Gaussian block of the experiment target: `(ΓᵀΓ)⁻¹`.
pub fn reference_second_moment(target: &ProductExperimentTarget) -> Result<DMatrix<f64>> {
    let block = target.block_hessian();
    let chol = block
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("ΓᵀΓ is singular".into()))?;
    let inv = chol.solve(&DMatrix::identity(block.nrows(), block.ncols()));
    Ok((&inv + inv.transpose()) * 0.5)
}

/// `|x − x*|² + |x − x* + v|² + 1`.
pub fn lyapunov(state: &PhaseState, x_star: Option<&[f64]>) -> Result<f64> {
    let x_star = x_star.ok_or(Error::MissingMinimizer)?;
    check_dim(state.dim(), x_star.len())?;
    let mut total = 1.0;
    for ((x, v), s) in state.x.iter().zip(&state.v).zip(x_star) {
        let dx = x - s;
        total += dx * dx + (dx + v) * (dx + v);
    }
    Ok(total)
}

/// Largest absolute eigenvalue of a symmetric matrix by power iteration.
/// The input is symmetrised first.
///
/// `λ_max` and `-λ_min` are found separately by iterating on the positive
/// semidefinite shifts `cI + M` and `cI - M` with `c = ‖M‖_F`; this keeps
/// a pair `±λ` from stalling the iteration. Each shift is iterated from a
/// fixed quasi-random vector and from every standard basis vector, keeping
/// the largest Rayleigh quotient: some `e_j` has a component of at least
/// `1/√k` along the top eigenvector, so no start can hide it. Runs stop when
/// the Rayleigh quotient is resolved to [`POWER_TOLERANCE`] relative to the
/// shifted eigenvalue.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if !m.iter().all(|t| t.is_finite()) {
        return Err(Error::NonFinite("spectral_norm input".into()));
    }
    let n = m.nrows();
    let s = (m + m.transpose()) * 0.5;
    let scale = s.amax();
    if n == 0 || scale == 0.0 {
        return Ok(0.0);
    }
    // Scale to unit max entry.
    let s = s / scale;
    let c = s.norm();
    let eye = DMatrix::<f64>::identity(n, n);
    let top = |p: &DMatrix<f64>| {
        let quasi = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7548776662).fract());
        (0..n).fold(power_iterate(p, quasi), |best, j| {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            best.max(power_iterate(p, e))
        })
    };
    let lambda_max = top(&(&eye * c + &s)) - c;
    let neg_lambda_min = top(&(&eye * c - &s)) - c;
    Ok(lambda_max.max(neg_lambda_min).max(0.0) * scale)
}

/// Power iteration on a positive semidefinite `p` from `x`; returns the
/// final Rayleigh quotient, which increases monotonically.
fn power_iterate(p: &DMatrix<f64>, mut x: DVector<f64>) -> f64 {
    x /= x.norm();
    let mut rq = 0.0f64;
    let mut last_change = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let y = p * &x;
        let next = x.dot(&y);
        let yn = y.norm();
        if yn == 0.0 {
            return next;
        }
        x = y / yn;
        let change = (next - rq).abs();
        rq = next;
        // Changes shrink geometrically; extrapolate the remaining distance
        // so that slow convergence does not stop the iteration early.
        let ratio = (change / last_change).min(1.0);
        let remaining = if ratio < 1.0 { change * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if change <= POWER_TOLERANCE * rq && remaining <= POWER_TOLERANCE * rq {
            break;
        }
        last_change = change;
    }
    rq
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}
