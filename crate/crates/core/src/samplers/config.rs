use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::schedule::CoordinateSchedule;
use crate::error::{Error, Result};
use crate::potentials::SmoothnessConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Full-gradient underdamped Langevin Monte Carlo.
    Ulmc,
    /// Random-coordinate variant.
    RcUlmc,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Ulmc => "ulmc",
            Algorithm::RcUlmc => "rc-ulmc",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ulmc" => Ok(Algorithm::Ulmc),
            "rc-ulmc" | "rculmc" | "rc_ulmc" => Ok(Algorithm::RcUlmc),
            other => Err(Error::Parse(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Law of the initial `(x⁰, v⁰)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// `x ~ N(x_mean, Σ)` where `Σ = F Fᵀ` on the leading block covered by
    /// `leading_factor` and the identity elsewhere; `v ~ N(0, σ_v² I)`.
    /// Unset means zero mean, identity covariance and `σ_v² = γ`.
    Gaussian {
        x_mean: Option<Vec<f64>>,
        leading_factor: Option<DMatrix<f64>>,
        v_variance: Option<f64>,
    },
    /// Deterministic start.
    Fixed { x: Vec<f64>, v: Vec<f64> },
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw::standard()
    }
}

impl InitialLaw {
    /// `x ~ N(0, I)`, `v ~ N(0, γ I)`: the velocity marginal starts stationary.
    pub fn standard() -> Self {
        InitialLaw::Gaussian {
            x_mean: None,
            leading_factor: None,
            v_variance: None,
        }
    }

    /// `x ~ N(shift, I)`, `v ~ N(0, v_variance I)` (`γ` when `None`).
    pub fn shifted(shift: Vec<f64>, v_variance: Option<f64>) -> Self {
        InitialLaw::Gaussian {
            x_mean: Some(shift),
            leading_factor: None,
            v_variance,
        }
    }

    /// `x` Gaussian with the given mean and a leading-block covariance.
    pub fn with_leading_covariance(
        x_mean: Vec<f64>,
        leading_cov: &DMatrix<f64>,
        v_variance: Option<f64>,
    ) -> Result<Self> {
        let chol = leading_cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("initial covariance".into()))?;
        Ok(InitialLaw::Gaussian {
            x_mean: Some(x_mean),
            leading_factor: Some(chol.l()),
            v_variance,
        })
    }

    pub fn fixed(x: Vec<f64>, v: Vec<f64>) -> Self {
        InitialLaw::Fixed { x, v }
    }

    /// Draws `(x, v)`, consuming `2d` standard normals for Gaussian laws
    /// (all of `x` first, then `v`).
    pub fn draw<R: Rng + ?Sized>(&self, dim: usize, gamma: f64, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            InitialLaw::Fixed { x, v } => {
                crate::error::check_dim(dim, x.len())?;
                crate::error::check_dim(dim, v.len())?;
                Ok((x.clone(), v.clone()))
            }
            InitialLaw::Gaussian {
                x_mean,
                leading_factor,
                v_variance,
            } => {
                if let Some(m) = x_mean {
                    crate::error::check_dim(dim, m.len())?;
                }
                let mut z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                if let Some(f) = leading_factor {
                    let k = f.nrows();
                    if k > dim || f.ncols() != k {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: k,
                        });
                    }
                    let lead: Vec<f64> = (0..k)
                        .map(|i| (0..=i).map(|j| f[(i, j)] * z[j]).sum())
                        .collect();
                    z[..k].copy_from_slice(&lead);
                }
                if let Some(m) = x_mean {
                    for (zi, mi) in z.iter_mut().zip(m) {
                        *zi += mi;
                    }
                }
                let var = v_variance.unwrap_or(gamma);
                if !(var.is_finite() && var >= 0.0) {
                    return Err(Error::param("v_variance", var, "must be non-negative"));
                }
                let sd = var.sqrt();
                let v = (0..dim)
                    .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Ok((z, v))
            }
        }
    }
}

/// Parameters of one chain.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub gamma: f64,
    pub h: f64,
    /// Required for RC-ULMC; its base stepsize must equal `h`.
    pub schedule: Option<CoordinateSchedule>,
    pub max_iters: u64,
    pub rng_seed: u64,
    /// ChaCha stream index; distinct streams of one seed are independent.
    pub rng_stream: u64,
    /// Refuse to run outside the theorems' admissible region.
    pub strict_admissibility: bool,
    pub init: InitialLaw,
}

impl SamplerConfig {
    pub fn new(gamma: f64, h: f64) -> Self {
        Self {
            gamma,
            h,
            schedule: None,
            max_iters: u64::MAX,
            rng_seed: 0,
            rng_stream: 0,
            strict_admissibility: false,
            init: InitialLaw::standard(),
        }
    }

    pub fn with_schedule(mut self, schedule: CoordinateSchedule) -> Self {
        self.schedule = Some(schedule);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.rng_stream = stream;
        self
    }

    pub fn with_init(mut self, init: InitialLaw) -> Self {
        self.init = init;
        self
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict_admissibility = strict;
        self
    }

    pub fn with_max_iters(mut self, max_iters: u64) -> Self {
        self.max_iters = max_iters;
        self
    }
}

/// One inequality of an admissibility report.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub description: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl BoundCheck {
    fn new(name: &'static str, description: &'static str, value: f64, limit: f64) -> Self {
        Self {
            name,
            description,
            value,
            limit,
            passed: value <= limit,
        }
    }

    /// `value / limit`; above one means violated.
    pub fn ratio(&self) -> f64 {
        self.value / self.limit
    }
}

/// Which admissibility conditions hold for a `(γ, h, Φ)` choice.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub algorithm: Algorithm,
    pub checks: Vec<BoundCheck>,
    pub gamma_max: f64,
    pub h_max: f64,
    /// `min_i φ_i` of the schedule (uniform when none is configured).
    pub min_phi: Option<f64>,
    /// The schedule shrinks the stepsize bound below its uniform-`Φ` value.
    pub schedule_limited: bool,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The condition closest to (or furthest past) its limit.
    pub fn binding(&self) -> &BoundCheck {
        self.checks
            .iter()
            .max_by(|a, b| a.ratio().total_cmp(&b.ratio()))
            .expect("reports always carry checks")
    }

    pub fn first_violation(&self) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub(crate) fn into_error(self) -> Result<()> {
        match self.first_violation() {
            None => Ok(()),
            Some(c) => Err(Error::Inadmissible {
                bound: format!("{} ({})", c.name, c.description),
                value: c.value,
                limit: c.limit,
            }),
        }
    }
}

/// Checks the stepsize and `γ` hypotheses of the convergence bounds.
///
/// ULMC: `γ ≤ 4/(μ+L)` and `h ≤ γ^{1/2} μ / (8L)`.
/// RC-ULMC: `γ ≤ 1/L` and `h ≤ γ μ min_i φ_i / 240`.
pub fn validate_stepsize(
    constants: &SmoothnessConstants,
    config: &SamplerConfig,
    algorithm: Algorithm,
) -> AdmissibilityReport {
    let (mu, big_l) = (constants.mu(), constants.big_l());
    let (gamma, h) = (config.gamma, config.h);
    match algorithm {
        Algorithm::Ulmc => {
            let gamma_max = 4.0 / (mu + big_l);
            let h_max = gamma.sqrt() * mu / (8.0 * big_l);
            AdmissibilityReport {
                algorithm,
                checks: vec![
                    BoundCheck::new("gamma", "gamma <= 4/(mu+L)", gamma, gamma_max),
                    BoundCheck::new("stepsize", "h <= gamma^(1/2) mu/(8L)", h, h_max),
                ],
                gamma_max,
                h_max,
                min_phi: None,
                schedule_limited: false,
            }
        }
        Algorithm::RcUlmc => {
            let d = constants.dim() as f64;
            let min_phi = config
                .schedule
                .as_ref()
                .map(|s| s.min_phi())
                .unwrap_or(1.0 / d);
            let gamma_max = 1.0 / big_l;
            let h_max = gamma * mu * min_phi / 240.0;
            AdmissibilityReport {
                algorithm,
                checks: vec![
                    BoundCheck::new("gamma", "gamma <= 1/L", gamma, gamma_max),
                    BoundCheck::new("stepsize", "h <= gamma mu min(phi)/240", h, h_max),
                ],
                gamma_max,
                h_max,
                min_phi: Some(min_phi),
                schedule_limited: min_phi * d < 1.0 - 1e-12,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_constants(d: usize) -> SmoothnessConstants {
        SmoothnessConstants::new(1.0, 1.0, vec![1.0; d]).unwrap()
    }

    #[test]
    fn rc_bound_for_uniform_schedule() {
        let cfg = SamplerConfig::new(1.0, 1e-4).with_schedule(CoordinateSchedule::uniform(10, 1e-4).unwrap());
        let r = validate_stepsize(&unit_constants(10), &cfg, Algorithm::RcUlmc);
        assert!((r.h_max - 1.0 / 2400.0).abs() < 1e-18);
        assert!(r.admissible());
        assert!(!r.schedule_limited);
    }

    #[test]
    fn ulmc_gamma_bound_is_inclusive() {
        let c = unit_constants(3);
        let r = validate_stepsize(&c, &SamplerConfig::new(2.0, 1e-3), Algorithm::Ulmc);
        assert!(r.checks[0].passed);
        let r = validate_stepsize(&c, &SamplerConfig::new(2.01, 1e-3), Algorithm::Ulmc);
        assert!(!r.checks[0].passed);
        assert_eq!(r.first_violation().unwrap().name, "gamma");
    }

    #[test]
    fn skewed_schedule_binds_the_stepsize() {
        let phi = vec![1e-9, 1.0 - 1e-9];
        let cfg = SamplerConfig::new(1.0, 1e-6).with_schedule(CoordinateSchedule::new(phi, 1e-6).unwrap());
        let r = validate_stepsize(&unit_constants(2), &cfg, Algorithm::RcUlmc);
        assert!(r.h_max < 1e-11);
        assert!(r.schedule_limited);
        assert_eq!(r.binding().name, "stepsize");
        assert!(!r.admissible());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Ulmc, Algorithm::RcUlmc] {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
        assert!("hmc".parse::<Algorithm>().is_err());
    }

    #[test]
    fn initial_law_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, v) = InitialLaw::fixed(vec![1.0, 2.0], vec![0.0, 0.5])
            .draw(2, 1.0, &mut rng)
            .unwrap();
        assert_eq!((x, v), (vec![1.0, 2.0], vec![0.0, 0.5]));
        assert!(InitialLaw::fixed(vec![1.0], vec![0.0]).draw(2, 1.0, &mut rng).is_err());

        // Zero velocity variance pins v at the origin.
        let law = InitialLaw::shifted(vec![3.0; 4], Some(0.0));
        let (x, v) = law.draw(4, 1.0, &mut rng).unwrap();
        assert!(v.iter().all(|&vi| vi == 0.0));
        assert!(x.iter().all(|xi| (xi - 3.0).abs() < 6.0));
    }
}
