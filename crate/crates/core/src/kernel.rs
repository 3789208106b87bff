//! Exact conditional Gaussian moments of one frozen-gradient step of
//!
//! ```text
//! dX = V dt,   dV = -2 V dt - γ ∇f(X) dt + sqrt(4γ) dB
//! ```
//!
//! over a time `h`. Conditional on `(x, v)` and the gradient `g` frozen at the
//! step start, the new `(x', v')` of each coordinate is Gaussian with
//!
//! ```text
//! E x' = x + ½(1 - e^{-2h}) v - ½γ (h - ½(1 - e^{-2h})) g
//! E v' = e^{-2h} v - ½γ (1 - e^{-2h}) g
//! Var x'     = γ [h + ¼(1 - e^{-4h}) - (1 - e^{-2h})]
//! Var v'     = γ (1 - e^{-4h})
//! Cov(x',v') = ½γ (1 - e^{-2h})²
//! ```
//!
//! and independent across coordinates.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Below this stepsize `Var x'` and the `x`-on-gradient coefficient are
/// evaluated from their power series; above it from `expm1` closed forms.
/// At the switch both branches agree to a few ulps.
pub const SERIES_THRESHOLD: f64 = 0.25;

/// Negative Schur complements down to this fraction of `Var v'` are treated
/// as roundoff and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-12;

/// Mean coefficients and 2×2 covariance of one step of length `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMoments {
    /// `½(1 - e^{-2h})`, multiplies `v` in the `x` mean.
    pub coef_x_on_v: f64,
    /// `½γ(h - ½(1 - e^{-2h}))`, multiplies `-g` in the `x` mean.
    pub coef_x_on_grad: f64,
    /// `e^{-2h}`.
    pub coef_v_decay: f64,
    /// `½γ(1 - e^{-2h})`, multiplies `-g` in the `v` mean.
    pub coef_v_on_grad: f64,
    pub var_x: f64,
    pub var_v: f64,
    pub cov_xv: f64,
}

impl StepMoments {
    pub fn determinant(&self) -> f64 {
        self.var_x * self.var_v - self.cov_xv * self.cov_xv
    }
}

/// Moments of a step of length `h ≥ 0` with parameter `γ > 0`.
pub fn step_moments(h: f64, gamma: f64) -> Result<StepMoments> {
    check_inputs(h, gamma)?;
    let (drift, var_x) = if h < SERIES_THRESHOLD {
        series_terms(h)
    } else {
        closed_form_terms(h)
    };
    Ok(assemble(h, gamma, drift, var_x))
}

/// Same as [`step_moments`] but always uses the `expm1` closed forms.
/// Loses relative accuracy in `var_x` and `coef_x_on_grad` as `h → 0`.
pub fn step_moments_closed_form(h: f64, gamma: f64) -> Result<StepMoments> {
    check_inputs(h, gamma)?;
    let (drift, var_x) = closed_form_terms(h);
    Ok(assemble(h, gamma, drift, var_x))
}

fn check_inputs(h: f64, gamma: f64) -> Result<()> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(Error::param("h", h, "stepsize must be finite and non-negative"));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::param("gamma", gamma, "must be positive and finite"));
    }
    Ok(())
}

fn assemble(h: f64, gamma: f64, drift: f64, var_x: f64) -> StepMoments {
    let one_minus_e2 = -(-2.0 * h).exp_m1();
    let one_minus_e4 = -(-4.0 * h).exp_m1();
    StepMoments {
        coef_x_on_v: 0.5 * one_minus_e2,
        coef_x_on_grad: 0.5 * gamma * drift,
        coef_v_decay: (-2.0 * h).exp(),
        coef_v_on_grad: 0.5 * gamma * one_minus_e2,
        var_x: gamma * var_x,
        var_v: gamma * one_minus_e4,
        // (1 + e^{-4h} - 2e^{-2h}) = (1 - e^{-2h})², never the three-term form.
        cov_xv: 0.5 * gamma * one_minus_e2 * one_minus_e2,
    }
}

/// `(h - ½(1 - e^{-2h}), h + ¼(1 - e^{-4h}) - (1 - e^{-2h}))` via `expm1`.
fn closed_form_terms(h: f64) -> (f64, f64) {
    let one_minus_e2 = -(-2.0 * h).exp_m1();
    let one_minus_e4 = -(-4.0 * h).exp_m1();
    (h - 0.5 * one_minus_e2, h + 0.25 * one_minus_e4 - one_minus_e2)
}

/// Power series of the two cancelling terms:
///
/// `h - ½(1 - e^{-2h}) = ½ Σ_{n≥2} (-2h)ⁿ/n!`
/// `h + ¼(1 - e^{-4h}) - (1 - e^{-2h}) = Σ_{n≥3} [(-2h)ⁿ - ¼(-4h)ⁿ]/n!`
fn series_terms(h: f64) -> (f64, f64) {
    if h == 0.0 {
        return (0.0, 0.0);
    }
    // a_n = (-2h)^n / n!, b_n = (-4h)^n / n!, starting at n = 2.
    let mut a = 2.0 * h * h;
    let mut b = 8.0 * h * h;
    let mut drift = 0.5 * a;
    let mut var = 0.0;
    for n in 3..64 {
        let nf = n as f64;
        a *= -2.0 * h / nf;
        b *= -4.0 * h / nf;
        let d_term = 0.5 * a;
        let v_term = a - 0.25 * b;
        drift += d_term;
        var += v_term;
        if d_term.abs() <= f64::EPSILON * 1e-3 * drift.abs()
            && v_term.abs() <= f64::EPSILON * 1e-3 * var.abs()
        {
            break;
        }
    }
    (drift, var)
}

/// Lower-triangular factor `[[l11, 0], [l21, l22]]` of the step covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CholeskyPair {
    pub l11: f64,
    pub l21: f64,
    pub l22: f64,
}

impl CholeskyPair {
    /// Maps independent standard normals `(z1, z2)` to correlated noise.
    #[inline]
    pub fn apply(&self, z1: f64, z2: f64) -> (f64, f64) {
        (self.l11 * z1, self.l21 * z1 + self.l22 * z2)
    }

    /// `L Lᵀ` as `(var_x, cov_xv, var_v)`.
    pub fn reconstruct(&self) -> (f64, f64, f64) {
        (
            self.l11 * self.l11,
            self.l11 * self.l21,
            self.l21 * self.l21 + self.l22 * self.l22,
        )
    }
}

/// Cholesky factor of the 2×2 step covariance.
///
/// Roundoff-negative pivots are clamped to zero; anything more negative than
/// [`PSD_CLAMP`] relative means the moments are broken and is an error.
pub fn cholesky2x2(m: &StepMoments) -> Result<CholeskyPair> {
    let scale = m.var_x.abs().max(m.var_v.abs()).max(m.cov_xv.abs());
    if !(m.var_x.is_finite() && m.var_v.is_finite() && m.cov_xv.is_finite()) {
        return Err(Error::NonFinite("step covariance".into()));
    }
    if m.var_x < -PSD_CLAMP * scale || m.var_v < -PSD_CLAMP * scale {
        return Err(Error::NotPositiveDefinite(format!(
            "step variances ({:e}, {:e})",
            m.var_x, m.var_v
        )));
    }
    let var_x = m.var_x.max(0.0);
    let var_v = m.var_v.max(0.0);
    if var_x == 0.0 {
        // Degenerate x-noise: the covariance is PSD only if cov_xv vanishes too.
        if m.cov_xv.abs() > PSD_CLAMP * scale {
            return Err(Error::NotPositiveDefinite("zero Var x with nonzero covariance".into()));
        }
        return Ok(CholeskyPair {
            l11: 0.0,
            l21: 0.0,
            l22: var_v.sqrt(),
        });
    }
    let l11 = var_x.sqrt();
    let l21 = m.cov_xv / l11;
    let mut schur = var_v - l21 * l21;
    if schur < 0.0 {
        if schur < -PSD_CLAMP * var_v.max(f64::MIN_POSITIVE) {
            return Err(Error::NotPositiveDefinite(format!(
                "negative Schur complement {schur:e}"
            )));
        }
        schur = 0.0;
    }
    Ok(CholeskyPair {
        l11,
        l21,
        l22: schur.sqrt(),
    })
}

/// Conditional mean `(E x', E v')` of one coordinate.
#[inline]
pub fn step_mean(m: &StepMoments, x: f64, v: f64, g: f64) -> (f64, f64) {
    (
        x + m.coef_x_on_v * v - m.coef_x_on_grad * g,
        m.coef_v_decay * v - m.coef_v_on_grad * g,
    )
}

/// Moments and covariance factor for a fixed `(h, γ)`, ready for sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepKernel {
    pub h: f64,
    pub moments: StepMoments,
    pub factor: CholeskyPair,
}

impl StepKernel {
    pub fn new(h: f64, gamma: f64) -> Result<Self> {
        let moments = step_moments(h, gamma)?;
        let factor = cholesky2x2(&moments)?;
        Ok(Self { h, moments, factor })
    }

    /// Draws `(x', v')` for one coordinate, consuming two standard normals.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, x: f64, v: f64, g: f64, rng: &mut R) -> (f64, f64) {
        let (mx, mv) = step_mean(&self.moments, x, v, g);
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let (nx, nv) = self.factor.apply(z1, z2);
        (mx + nx, mv + nv)
    }
}
