//! Analytic references for the samplers.
//!
//! * Exact law propagation of ULMC on a quadratic target (the step is affine
//!   in `(x, v)` with additive Gaussian noise).
//! * The exact second-moment recursion of RC-ULMC with uniform `Φ` on the
//!   standard Gaussian, in the variables `x` and `w = x + v`.
//! * The closed-form Wasserstein-2 distance between Gaussians.
//! * The published ULMC/RC-ULMC upper bounds and the RC-ULMC lower bound on
//!   the standard Gaussian.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{step_moments, StepMoments};
use crate::linalg::sym_eigen;
use crate::potentials::SmoothnessConstants;
use crate::samplers::{optimal_phi, InitialLaw, PHI_SUM_TOLERANCE};

/// Eigenvalues of a covariance may dip to `-COV_EIG_TOLERANCE·trace`.
pub const COV_EIG_TOLERANCE: f64 = 1e-10;

/// Negative eigenvalues above `-SQRT_CLAMP·trace` are zeroed before a
/// matrix square root; anything below is an error.
pub const SQRT_CLAMP: f64 = 1e-12;

/// Gaussian law of the stacked state `(x, v)` in `R^{2d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianLaw {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidConstants(format!(
                "stacked (x, v) mean has odd length {n}"
            )));
        }
        check_dim(n, cov.nrows())?;
        check_dim(n, cov.ncols())?;
        let law = Self { mean, cov };
        law.check()?;
        Ok(law)
    }

    /// `x ~ N(x_mean, x_cov)`, `v ~ N(0, v_var·I)`, independent.
    pub fn product(x_mean: &[f64], x_cov: &DMatrix<f64>, v_var: f64) -> Result<Self> {
        let d = x_mean.len();
        check_dim(d, x_cov.nrows())?;
        check_dim(d, x_cov.ncols())?;
        let mut mean = DVector::zeros(2 * d);
        mean.rows_mut(0, d).copy_from_slice(x_mean);
        let mut cov = DMatrix::zeros(2 * d, 2 * d);
        cov.view_mut((0, 0), (d, d)).copy_from(x_cov);
        for i in 0..d {
            cov[(d + i, d + i)] = v_var;
        }
        Self::new(mean, cov)
    }

    /// The stationary law of a quadratic target `f = ½xᵀAx`:
    /// `x ~ N(0, A⁻¹)`, `v ~ N(0, γI)`.
    pub fn stationary(a: &DMatrix<f64>, gamma: f64) -> Result<Self> {
        let d = a.nrows();
        let inv = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("stationary law needs SPD A".into()))?
            .inverse();
        Self::product(&vec![0.0; d], &symmetrize(&inv), gamma)
    }

    /// The law a [`InitialLaw`] draws from. `Fixed` states give a point mass.
    pub fn from_initial(init: &InitialLaw, dim: usize, gamma: f64) -> Result<Self> {
        match init {
            InitialLaw::Fixed { x, v } => {
                check_dim(dim, x.len())?;
                check_dim(dim, v.len())?;
                let mean = DVector::from_iterator(2 * dim, x.iter().chain(v).copied());
                Self::new(mean, DMatrix::zeros(2 * dim, 2 * dim))
            }
            InitialLaw::Gaussian {
                x_mean,
                leading_factor,
                v_variance,
            } => {
                let mut x_cov = DMatrix::identity(dim, dim);
                if let Some(f) = leading_factor {
                    let k = f.nrows();
                    if k > dim || f.ncols() != k {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: k,
                        });
                    }
                    x_cov.view_mut((0, 0), (k, k)).copy_from(&(f * f.transpose()));
                }
                let mean = x_mean.clone().unwrap_or_else(|| vec![0.0; dim]);
                Self::product(&mean, &x_cov, v_variance.unwrap_or(gamma))
            }
        }
    }

    /// Half the stacked dimension.
    pub fn dim(&self) -> usize {
        self.mean.len() / 2
    }

    /// `E|x|²`, `E|v|²` and `E|x + v|²`.
    pub fn second_moments(&self) -> (f64, f64, f64) {
        let d = self.dim();
        let (mut x2, mut v2, mut xv) = (0.0, 0.0, 0.0);
        for i in 0..d {
            let (mx, mv) = (self.mean[i], self.mean[d + i]);
            x2 += self.cov[(i, i)] + mx * mx;
            v2 += self.cov[(d + i, d + i)] + mv * mv;
            xv += self.cov[(i, d + i)] + mx * mv;
        }
        (x2, v2, x2 + 2.0 * xv + v2)
    }

    fn check(&self) -> Result<()> {
        if !self.mean.iter().chain(self.cov.iter()).all(|t| t.is_finite()) {
            return Err(Error::NonFinite("Gaussian law".into()));
        }
        let scale = self.cov.amax().max(f64::MIN_POSITIVE);
        if (&self.cov - self.cov.transpose()).amax() > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidConstants("covariance is not symmetric".into()));
        }
        let trace = self.cov.trace();
        let lo = sym_eigen(&symmetrize(&self.cov))?.eigenvalues.min();
        if lo < -COV_EIG_TOLERANCE * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotPositiveDefinite(format!(
                "covariance eigenvalue {lo:e} below tolerance"
            )));
        }
        Ok(())
    }
}

/// ULMC on `f = ½xᵀAx` as the affine map `z ↦ M z + ξ`, `ξ ~ N(0, Q)`.
#[derive(Debug, Clone)]
pub struct UlmcAffineMap {
    pub transition: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

impl UlmcAffineMap {
    pub fn new(a: &DMatrix<f64>, h: f64, gamma: f64) -> Result<Self> {
        let d = a.nrows();
        check_dim(d, a.ncols())?;
        let m = step_moments(h, gamma)?;
        let eye = DMatrix::<f64>::identity(d, d);
        let mut t = DMatrix::zeros(2 * d, 2 * d);
        t.view_mut((0, 0), (d, d))
            .copy_from(&(&eye - a * m.coef_x_on_grad));
        t.view_mut((0, d), (d, d)).copy_from(&(&eye * m.coef_x_on_v));
        t.view_mut((d, 0), (d, d)).copy_from(&(a * -m.coef_v_on_grad));
        t.view_mut((d, d), (d, d)).copy_from(&(&eye * m.coef_v_decay));
        let mut q = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            q[(i, i)] = m.var_x;
            q[(d + i, d + i)] = m.var_v;
            q[(i, d + i)] = m.cov_xv;
            q[(d + i, i)] = m.cov_xv;
        }
        Ok(Self {
            transition: t,
            noise: q,
        })
    }

    pub fn apply(&self, law: &GaussianLaw) -> Result<GaussianLaw> {
        check_dim(self.transition.nrows(), law.mean.len())?;
        let mean = &self.transition * &law.mean;
        let cov = &self.transition * &law.cov * self.transition.transpose() + &self.noise;
        Ok(GaussianLaw {
            mean,
            cov: symmetrize(&cov),
        })
    }
}

/// One ULMC step applied exactly to a Gaussian law on the target
/// `f = ½xᵀAx`. For repeated steps build an [`UlmcAffineMap`] once.
pub fn propagate_ulmc_gaussian(
    law: &GaussianLaw,
    a: &DMatrix<f64>,
    h: f64,
    gamma: f64,
) -> Result<GaussianLaw> {
    check_dim(law.dim(), a.nrows())?;
    UlmcAffineMap::new(a, h, gamma)?.apply(law)
}

/// `(E|x|², E⟨x, w⟩, E|w|²)` with `w = x + v`, summed over coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTriple {
    pub ex2: f64,
    pub exw: f64,
    pub ew2: f64,
}

impl MomentTriple {
    /// The stationary moments of the standard Gaussian with `γ = 1`.
    pub fn stationary(d: usize) -> Self {
        let d = d as f64;
        Self {
            ex2: d,
            exw: d,
            ew2: 2.0 * d,
        }
    }

    pub fn from_xv(ex2: f64, exv: f64, ev2: f64) -> Self {
        Self {
            ex2,
            exw: ex2 + exv,
            ew2: ex2 + 2.0 * exv + ev2,
        }
    }

    /// `(E|x|², E⟨x, v⟩, E|v|²)`.
    pub fn to_xv(&self) -> (f64, f64, f64) {
        let exv = self.exw - self.ex2;
        (self.ex2, exv, self.ew2 - 2.0 * self.exw + self.ex2)
    }

    /// Non-negativity and Cauchy–Schwarz, with a relative slack.
    pub fn is_consistent(&self, rel_tol: f64) -> bool {
        let slack = rel_tol * (self.ex2.abs() + self.ew2.abs());
        self.ex2 >= -slack
            && self.ew2 >= -slack
            && self.exw * self.exw <= self.ex2.max(0.0) * self.ew2.max(0.0) + slack * slack.max(1.0)
    }
}

/// Exact second-moment recursion of RC-ULMC with uniform `Φ` and `γ = 1` on
/// the standard Gaussian. Each step updates one coordinate with probability
/// `1/d` over a time `H = d·h`, so the summed moments obey
///
/// ```text
/// S' = S + (M S Mᵀ - S)/d + Q
/// ```
///
/// with `S` the summed 2×2 moment matrix of `(x, v)`, `M` the step mean map
/// with `g = x` and `Q` the step covariance.
#[derive(Debug, Clone, Copy)]
pub struct RcMomentRecursion {
    d: usize,
    h: f64,
    moments: StepMoments,
}

impl RcMomentRecursion {
    pub fn new(phi: &[f64], h: f64) -> Result<Self> {
        let d = phi.len();
        if d == 0 {
            return Err(Error::InvalidSchedule("empty schedule".into()));
        }
        let u = 1.0 / d as f64;
        if phi.iter().any(|&p| (p - u).abs() > PHI_SUM_TOLERANCE) {
            return Err(Error::InvalidSchedule(
                "the second-moment recursion needs uniform φ".into(),
            ));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::param("h", h, "must be positive"));
        }
        Ok(Self {
            d,
            h,
            moments: step_moments(h * d as f64, 1.0)?,
        })
    }

    pub fn uniform(d: usize, h: f64) -> Result<Self> {
        Self::new(&vec![1.0 / d as f64; d], h)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Moments of the per-coordinate step of length `d·h`.
    pub fn moments(&self) -> &StepMoments {
        &self.moments
    }

    pub fn step(&self, s: &MomentTriple) -> MomentTriple {
        let m = &self.moments;
        let (x, c, v) = s.to_xv();
        // Mean map written as identity plus small deviations to keep the
        // O(h) increments accurate: a = 1 + α, e = 1 + ε.
        let alpha = -m.coef_x_on_grad;
        let eps = -2.0 * m.coef_x_on_v;
        let b = m.coef_x_on_v;
        let cc = -m.coef_v_on_grad;
        let dxx = (2.0 * alpha + alpha * alpha) * x + 2.0 * (1.0 + alpha) * b * c + b * b * v;
        let dxv = (1.0 + alpha) * cc * x + (alpha + eps + alpha * eps + b * cc) * c + (1.0 + eps) * b * v;
        let dvv = cc * cc * x + 2.0 * cc * (1.0 + eps) * c + (2.0 * eps + eps * eps) * v;
        let inv_d = 1.0 / self.d as f64;
        MomentTriple::from_xv(
            x + inv_d * dxx + m.var_x,
            c + inv_d * dxv + m.cov_xv,
            v + inv_d * dvv + m.var_v,
        )
    }

    /// Iterates `0..=steps`, returning every intermediate triple.
    pub fn trajectory(&self, start: MomentTriple, steps: usize) -> Vec<MomentTriple> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut s = start;
        out.push(s);
        for _ in 0..steps {
            s = self.step(&s);
            out.push(s);
        }
        out
    }
}

/// One step of [`RcMomentRecursion`] for a schedule `phi` (must be uniform).
pub fn rc_second_moment_step(m: &MomentTriple, phi: &[f64], h: f64) -> Result<MomentTriple> {
    Ok(RcMomentRecursion::new(phi, h)?.step(m))
}

/// Remainders `D₁, D₂` in `e^{-2dh} = 1 - 2dh + 2d²h² + D₁h³` and
/// `e^{-4dh} = 1 - 4dh + 8d²h² + D₂h³`.
pub fn taylor_remainders(d: usize, h: f64) -> (f64, f64) {
    let big_h = d as f64 * h;
    let tail = |y: f64| {
        // Σ_{n≥3} (-y)^n / n!
        let mut term = -y * y * y / 6.0;
        let mut sum = 0.0f64;
        let mut n = 3.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            n += 1.0;
            term *= -y / n;
            if n > 200.0 {
                break;
            }
        }
        sum
    };
    let h3 = h * h * h;
    (tail(2.0 * big_h) / h3, tail(4.0 * big_h) / h3)
}

/// `D₁, D₂` are negative with `|D₁| < 10d³` and `|D₂| < 100d³`.
pub fn within_taylor_envelope(d: usize, h: f64) -> bool {
    let (d1, d2) = taylor_remainders(d, h);
    let d3 = (d as f64).powi(3);
    d1 < 0.0 && d2 < 0.0 && d1.abs() < 10.0 * d3 && d2.abs() < 100.0 * d3
}

/// The `E|w|²` update written with the Taylor remainders instead of
/// exponentials. Equal to [`RcMomentRecursion::step`]'s `ew2` up to roundoff.
pub fn rc_ew2_taylor_form(m: &MomentTriple, d: usize, h: f64) -> f64 {
    let (d1, d2) = taylor_remainders(d, h);
    let df = d as f64;
    let (h2, h3) = (h * h, h * h * h);
    let a = 1.0 - df * h + df * df * h2 + d1 * h3 / 2.0;
    let b = df * df * h2 / 2.0 + d1 * h3 / 4.0;
    (1.0 - 1.0 / df + a * a / df) * m.ew2 + b * b / df * m.ex2 - 2.0 / df * a * b * m.exw
        + 4.0 * df * h
        - 4.0 * df * df * h2
        - (d1 + d2 / 4.0) * h3
}

/// `x ~ N(u, I)` with `u_i = 1/400`, `v ~ N(0, I)`: the initial law of the
/// RC-ULMC lower-bound example.
pub fn prop5_initial_law(d: usize) -> InitialLaw {
    InitialLaw::shifted(vec![1.0 / 400.0; d], Some(1.0))
}

/// Moments of [`prop5_initial_law`]: `E|x|² = 160001/160000·d`,
/// `E|w|² = 320001/160000·d`.
pub fn prop5_initial_moments(d: usize) -> MomentTriple {
    let df = d as f64;
    let ex2 = 160_001.0 / 160_000.0 * df;
    MomentTriple {
        ex2,
        exw: ex2,
        ew2: 320_001.0 / 160_000.0 * df,
    }
}

fn check_prop5_hypothesis(d: usize, h: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::param("d", 0.0, "must be positive"));
    }
    // The closed condition h·d ≤ 1e-8: every inequality in the argument is
    // continuous in h, so the boundary case follows by taking limits.
    if !(h > 0.0 && h * d as f64 <= 1e-8 * (1.0 + 1e-12)) {
        return Err(Error::HypothesisViolated(format!(
            "lower bound needs 0 < h ≤ 1e-8/d = {:e}, got h = {h:e}",
            1e-8 / d as f64
        )));
    }
    Ok(())
}

fn prop5_tail(d: f64, h: f64) -> f64 {
    d.powf(1.5) * h / (320.0 - 464.0 * d * h)
}

/// Lower bound on `W₂(q_m, p)` for RC-ULMC with uniform `Φ` and `γ = 1` on
/// the standard Gaussian started from [`prop5_initial_law`], as stated:
/// `e^{-4hm}/800²·d/8 + d^{3/2}h/(320 - 464dh)`.
pub fn prop5_lower_bound(d: usize, h: f64, m: u64) -> Result<f64> {
    check_prop5_hypothesis(d, h)?;
    let df = d as f64;
    Ok((-4.0 * h * m as f64).exp() / 640_000.0 * df / 8.0 + prop5_tail(df, h))
}

/// The same bound with the decay factor `(1 - 2h)^m` that its derivation
/// produces. Never smaller than [`prop5_lower_bound`].
pub fn prop5_proof_bound(d: usize, h: f64, m: u64) -> Result<f64> {
    check_prop5_hypothesis(d, h)?;
    let df = d as f64;
    let decay = (m as f64 * (-2.0 * h).ln_1p()).exp();
    Ok(decay / 640_000.0 * df / 8.0 + prop5_tail(df, h))
}

/// `(1 - 2h)^m·d/320000 + (4d - 5.7d²h)/(2 - 2.9dh)`, the floor for `E|w^m|²`
/// in the lower-bound argument.
pub fn prop5_second_moment_floor(d: usize, h: f64, m: u64) -> Result<f64> {
    check_prop5_hypothesis(d, h)?;
    let df = d as f64;
    let decay = (m as f64 * (-2.0 * h).ln_1p()).exp();
    Ok(decay * df / 320_000.0 + (4.0 * df - 5.7 * df * df * h) / (2.0 - 2.9 * df * h))
}

/// `max(0, √ew2 - √(2d))`: a certified lower bound on the `W₂` distance
/// between the law of `(x, x + v)` and its stationary counterpart.
pub fn second_moment_w2_lower_bound(ew2: f64, d: usize) -> f64 {
    let two_d = 2.0 * d as f64;
    // Difference of roots written as a quotient to avoid cancellation.
    ((ew2 - two_d) / (ew2.max(0.0).sqrt() + two_d.sqrt())).max(0.0)
}

/// Symmetric square root via eigendecomposition, clamping small negative
/// eigenvalues.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(m);
    let trace = s.trace().abs();
    let eig = sym_eigen(&s)?;
    let floor = -SQRT_CLAMP * trace.max(f64::MIN_POSITIVE);
    let mut roots = eig.eigenvalues.clone();
    for l in roots.iter_mut() {
        if !l.is_finite() {
            return Err(Error::NonFinite("matrix square root".into()));
        }
        if *l < floor {
            return Err(Error::NotPositiveDefinite(format!("eigenvalue {l:e}")));
        }
        *l = l.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(symmetrize(&(q * DMatrix::from_diagonal(&roots) * q.transpose())))
}

/// `W₂` between `N(mean1, cov1)` and `N(mean2, cov2)`:
/// `|Δm|² + tr(C₁ + C₂ - 2(C₂^{1/2} C₁ C₂^{1/2})^{1/2})`.
pub fn gaussian_w2(
    mean1: &[f64],
    cov1: &DMatrix<f64>,
    mean2: &[f64],
    cov2: &DMatrix<f64>,
) -> Result<f64> {
    let n = mean1.len();
    check_dim(n, mean2.len())?;
    for c in [cov1, cov2] {
        check_dim(n, c.nrows())?;
        check_dim(n, c.ncols())?;
    }
    let shift: f64 = mean1.iter().zip(mean2).map(|(a, b)| (a - b) * (a - b)).sum();
    let r2 = sym_sqrt(cov2)?;
    // Validates cov1 as PSD too.
    sym_sqrt(cov1)?;
    let cross = sym_sqrt(&(&r2 * cov1 * &r2))?;
    let bures = cov1.trace() + cov2.trace() - 2.0 * cross.trace();
    Ok((shift + bures.max(0.0)).sqrt())
}

/// [`gaussian_w2`] between two stacked laws.
pub fn law_w2(a: &GaussianLaw, b: &GaussianLaw) -> Result<f64> {
    gaussian_w2(a.mean.as_slice(), &a.cov, b.mean.as_slice(), &b.cov)
}

/// ULMC upper bound `√2·e^{-0.375μhγ^{1/2}m}·W₀ + (2d)^{1/2}κh`.
pub fn theorem1_rhs(w0: f64, m: u64, h: f64, gamma: f64, mu: f64, kappa: f64, d: usize) -> f64 {
    std::f64::consts::SQRT_2 * (-0.375 * mu * h * gamma.sqrt() * m as f64).exp() * w0
        + (2.0 * d as f64).sqrt() * kappa * h
}

/// RC-ULMC upper bound `4·e^{-μγmh/8}·W₀ + 40γ^{1/2}h·√(Σκ_i²/φ_i²)`.
pub fn theorem3_rhs(
    w0: f64,
    m: u64,
    h: f64,
    gamma: f64,
    mu: f64,
    kappa_vec: &[f64],
    phi: &[f64],
) -> Result<f64> {
    check_dim(kappa_vec.len(), phi.len())?;
    Ok(4.0 * (-mu * gamma * m as f64 * h / 8.0).exp() * w0
        + 40.0 * gamma.sqrt() * h * weighted_kappa_norm(kappa_vec, phi))
}

/// `√(Σ κ_i²/φ_i²)`.
pub fn weighted_kappa_norm(kappa_vec: &[f64], phi: &[f64]) -> f64 {
    kappa_vec
        .iter()
        .zip(phi)
        .map(|(k, p)| (k / p) * (k / p))
        .sum::<f64>()
        .sqrt()
}

/// Stepsize and iteration count that make an upper bound at most `ε`, each
/// of its two terms contributing `ε/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationEstimate {
    pub h: f64,
    pub iterations: f64,
    pub cost_units: f64,
}

/// Estimate for ULMC from its upper bound, with `h` also capped by the
/// admissible stepsize.
pub fn ulmc_iteration_estimate(
    c: &SmoothnessConstants,
    gamma: f64,
    eps: f64,
    w0: f64,
) -> Result<IterationEstimate> {
    check_estimate_inputs(gamma, eps, w0)?;
    let (mu, big_l, d) = (c.mu(), c.big_l(), c.dim() as f64);
    let kappa = big_l / mu;
    let h = (gamma.sqrt() * mu / (8.0 * big_l)).min(eps / (2.0 * (2.0 * d).sqrt() * kappa));
    let iterations = ((2.0 * std::f64::consts::SQRT_2 * w0 / eps).ln().max(0.0)
        / (0.375 * mu * h * gamma.sqrt()))
    .ceil();
    Ok(IterationEstimate {
        h,
        iterations,
        cost_units: iterations * d,
    })
}

/// Estimate for RC-ULMC from its upper bound. `phi = None` uses the optimal
/// schedule.
pub fn rc_ulmc_iteration_estimate(
    c: &SmoothnessConstants,
    gamma: f64,
    phi: Option<&[f64]>,
    eps: f64,
    w0: f64,
) -> Result<IterationEstimate> {
    check_estimate_inputs(gamma, eps, w0)?;
    let owned;
    let phi = match phi {
        Some(p) => p,
        None => {
            owned = optimal_phi(c.coord_l())?;
            &owned
        }
    };
    check_dim(c.dim(), phi.len())?;
    let mu = c.mu();
    let kappa_vec: Vec<f64> = c.coord_l().iter().map(|l| l / mu).collect();
    let min_phi = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = weighted_kappa_norm(&kappa_vec, phi);
    let h = (gamma * mu * min_phi / 240.0).min(eps / (80.0 * gamma.sqrt() * norm));
    let iterations = (8.0 / (mu * gamma * h) * (8.0 * w0 / eps).ln().max(0.0)).ceil();
    Ok(IterationEstimate {
        h,
        iterations,
        cost_units: iterations,
    })
}

fn check_estimate_inputs(gamma: f64, eps: f64, w0: f64) -> Result<()> {
    for (name, v) in [("gamma", gamma), ("eps", eps)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, v, "must be positive"));
        }
    }
    if !(w0.is_finite() && w0 >= 0.0) {
        return Err(Error::param("w0", w0, "must be non-negative"));
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_step_leaves_law_unchanged() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]));
        let law = GaussianLaw::product(&[0.3, -1.0], &DMatrix::identity(2, 2), 0.7).unwrap();
        let out = propagate_ulmc_gaussian(&law, &a, 0.0, 1.0).unwrap();
        assert_eq!(out, law);
    }

    #[test]
    fn stationary_mean_stays_zero() {
        let a = DMatrix::identity(3, 3);
        let law = GaussianLaw::stationary(&a, 1.0).unwrap();
        let out = propagate_ulmc_gaussian(&law, &a, 0.1, 1.0).unwrap();
        assert!(out.mean.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn one_dimensional_fixed_point_is_near_one() {
        let a = DMatrix::identity(1, 1);
        let map = UlmcAffineMap::new(&a, 0.01, 1.0).unwrap();
        let mut law = GaussianLaw::product(&[2.0], &DMatrix::identity(1, 1), 1.0).unwrap();
        for _ in 0..100_000 {
            law = map.apply(&law).unwrap();
        }
        let (x2, _, _) = law.second_moments();
        assert!((x2 - 1.0).abs() <= 0.05, "E x² = {x2}");
    }

    #[test]
    fn propagation_rejects_mismatched_dimension() {
        let law = GaussianLaw::product(&[0.0, 0.0], &DMatrix::identity(2, 2), 1.0).unwrap();
        let a = DMatrix::identity(3, 3);
        assert!(propagate_ulmc_gaussian(&law, &a, 0.1, 1.0).is_err());
    }

    #[test]
    fn recursion_rejects_nonuniform_schedule() {
        let m = MomentTriple::stationary(2);
        assert!(matches!(
            rc_second_moment_step(&m, &[0.3, 0.7], 1e-3),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(rc_second_moment_step(&m, &[0.5, 0.5], 1e-3).is_ok());
    }

    #[test]
    fn stationary_moments_drift_only_at_second_order() {
        let d = 4;
        let s = MomentTriple::stationary(d);
        for h in [1e-3, 1e-4, 1e-5] {
            let rec = RcMomentRecursion::uniform(d, h).unwrap();
            let out = rec.step(&s);
            let delta = (out.ex2 - s.ex2).abs() + (out.exw - s.exw).abs() + (out.ew2 - s.ew2).abs();
            // The discretisation bias per step is O(H²) with H = d·h.
            let big_h = d as f64 * h;
            assert!(delta <= 2.0 * big_h * big_h, "h={h}: Δ={delta:e}");
        }
    }

    #[test]
    fn prop5_initial_values() {
        let m = prop5_initial_moments(16);
        assert_eq!(m.ex2, 160_001.0 / 10_000.0);
        assert_eq!(m.ew2, 320_001.0 / 10_000.0);
        let law = GaussianLaw::from_initial(&prop5_initial_law(16), 16, 1.0).unwrap();
        let (x2, _, w2) = law.second_moments();
        assert_relative_eq!(x2, m.ex2, max_relative = 1e-15);
        assert_relative_eq!(w2, m.ew2, max_relative = 1e-15);
    }

    #[test]
    fn prop5_bound_examples() {
        let b = prop5_lower_bound(8, 1e-10, 0).unwrap();
        let expected = 1.0 / 640_000.0 + 8f64.powf(1.5) * 1e-10 / (320.0 - 464.0 * 8e-10);
        assert_relative_eq!(b, expected, max_relative = 1e-15);
        assert_relative_eq!(b, 1.5625e-6 + 7.07e-12, max_relative = 1e-6);
        let tail = prop5_lower_bound(8, 1e-10, u64::MAX).unwrap();
        assert_relative_eq!(tail, prop5_tail(8.0, 1e-10), max_relative = 1e-12);
        assert!(matches!(prop5_lower_bound(10, 1.01e-9, 0), Err(Error::HypothesisViolated(_))));
        assert!(prop5_lower_bound(10, 1e-9, 0).is_ok());
        assert!(prop5_lower_bound(10, 0.0, 0).is_err());
    }

    #[test]
    fn prop5_bound_is_monotone_and_below_proof_form() {
        let (d, h) = (10, 5e-10);
        let mut prev = f64::INFINITY;
        for m in (0..=2_000_000_000u64).step_by(50_000_000) {
            let b = prop5_lower_bound(d, h, m).unwrap();
            assert!(b <= prev);
            assert!(b <= prop5_proof_bound(d, h, m).unwrap());
            prev = b;
        }
    }

    #[test]
    fn w2_lower_bound_examples() {
        assert_eq!(second_moment_w2_lower_bound(20.0, 10), 0.0);
        assert_eq!(second_moment_w2_lower_bound(3.0, 10), 0.0);
        let delta = 0.25;
        assert_relative_eq!(
            second_moment_w2_lower_bound(20.0 + delta, 10),
            20.25f64.sqrt() - 20f64.sqrt(),
            max_relative = 1e-13
        );
        let ew2 = prop5_initial_moments(100).ew2;
        assert_relative_eq!(
            second_moment_w2_lower_bound(ew2, 100),
            ew2.sqrt() - 200f64.sqrt(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn w2_identical_and_shifted() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(gaussian_w2(&[1.0, 2.0], &c, &[1.0, 2.0], &c).unwrap() < 1e-7);
        let d = 16;
        let eye = DMatrix::identity(d, d);
        let w = gaussian_w2(&vec![1.0 / 400.0; d], &eye, &vec![0.0; d], &eye).unwrap();
        assert_relative_eq!(w, 0.01, max_relative = 1e-12);
    }

    #[test]
    fn w2_rejects_indefinite_covariance() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let eye = DMatrix::identity(2, 2);
        assert!(matches!(
            gaussian_w2(&[0.0, 0.0], &bad, &[0.0, 0.0], &eye),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn theorem3_examples() {
        let phi = [0.25; 4];
        let kappa = [1.0; 4];
        let rhs = theorem3_rhs(0.0, 0, 1e-3, 1.0, 1.0, &kappa, &phi).unwrap();
        assert_relative_eq!(rhs, 0.32, max_relative = 1e-14);
        let rhs0 = theorem3_rhs(0.7, 0, 0.0, 1.0, 1.0, &kappa, &phi).unwrap();
        assert_relative_eq!(rhs0, 2.8, max_relative = 1e-15);
    }

    #[test]
    fn theorem3_penalises_starving_the_stiffest_coordinate() {
        let kappa = [5.0, 1.0, 1.0];
        let phi = [0.5, 0.25, 0.25];
        let base = theorem3_rhs(0.0, 0, 1e-3, 1.0, 1.0, &kappa, &phi).unwrap();
        // Halve φ_0 and hand the mass to the others, then renormalise.
        let moved = [0.25, 0.375, 0.375];
        let worse = theorem3_rhs(0.0, 0, 1e-3, 1.0, 1.0, &kappa, &moved).unwrap();
        assert!(worse > base);
    }

    #[test]
    fn theorem1_at_zero_iterations() {
        assert_relative_eq!(
            theorem1_rhs(1.0, 0, 0.0, 2.0, 1.0, 1.0, 4),
            std::f64::consts::SQRT_2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn taylor_remainders_match_leading_terms() {
        let (d1, d2) = taylor_remainders(10, 1e-9);
        // D₁ ≈ -(4/3)d³, D₂ ≈ -(32/3)d³.
        assert_relative_eq!(d1, -4000.0 / 3.0, max_relative = 1e-6);
        assert_relative_eq!(d2, -32000.0 / 3.0, max_relative = 1e-6);
        assert!(within_taylor_envelope(10, 1e-9));
    }

    #[test]
    fn taylor_form_matches_exact_recursion() {
        let (d, h) = (10, 1e-9);
        let rec = RcMomentRecursion::uniform(d, h).unwrap();
        let m = prop5_initial_moments(d);
        let exact = rec.step(&m).ew2;
        let paper = rc_ew2_taylor_form(&m, d, h);
        assert!((exact - paper).abs() <= 1e-13 * exact, "{exact} vs {paper}");
    }

    #[test]
    fn estimates_are_finite_and_ordered() {
        let c = SmoothnessConstants::new(1.0, 100.0, vec![100.0, 1.0, 1.0, 1.0]).unwrap();
        let rc = rc_ulmc_iteration_estimate(&c, 0.01, None, 0.1, 1.0).unwrap();
        let ul = ulmc_iteration_estimate(&c, 0.01, 0.1, 1.0).unwrap();
        assert!(rc.h > 0.0 && rc.iterations.is_finite());
        assert!(ul.h > 0.0 && ul.cost_units == ul.iterations * 4.0);
    }
}
