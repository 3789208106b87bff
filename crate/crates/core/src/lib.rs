//! Underdamped Langevin Monte Carlo with exact Gaussian step kernels.
//!
//! Two samplers share one step kernel:
//!
//! * **ULMC** advances every coordinate per iteration from one full gradient
//!   (cost `d` partial derivatives).
//! * **RC-ULMC** draws a single coordinate `r` from a distribution `Φ`, moves
//!   only `(x_r, v_r)` over a stepsize `h / φ_r`, and pays for one partial
//!   derivative.
//!
//! The dynamics use friction 2 and a tunable `γ`, so that the stationary law is
//! `p(x, v) ∝ exp(-(f(x) + |v|²/(2γ)))`.
//!
//! Besides the samplers the crate carries the analytic references used to
//! check them: exact Gaussian law propagation for quadratic targets, the
//! second-moment recursion of RC-ULMC on a standard Gaussian, the closed-form
//! Gaussian Wasserstein-2 distance, and the published error bounds.
//!
//! ```
//! use rculmc_core::potentials::QuadraticTarget;
//! use rculmc_core::samplers::{run_chain, Algorithm, CoordinateSchedule, SamplerConfig};
//!
//! let target = QuadraticTarget::diagonal(&[1.0, 8.0]).unwrap();
//! let schedule = CoordinateSchedule::optimal(&[1.0, 8.0], 1e-3).unwrap();
//! let config = SamplerConfig::new(0.1, 1e-3).with_schedule(schedule).with_seed(7);
//! let summary = run_chain(&target, &config, Algorithm::RcUlmc, 1_000, &mut []).unwrap();
//! assert_eq!(summary.state.cost_units, 1_000);
//! ```

pub mod error;
pub mod kernel;
mod linalg;
pub mod metrics;
pub mod oracles;
pub mod potentials;
pub mod samplers;

pub use error::{Error, Result};
