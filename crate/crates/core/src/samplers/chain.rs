use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{validate_stepsize, Algorithm, SamplerConfig};
use super::schedule::CoordinateSchedule;
use crate::error::{check_dim, Error, Result};
use crate::kernel::StepKernel;
use crate::potentials::Potential;

/// Position, velocity and bookkeeping of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Dynamical time `Σ h_{r^n}` (RC-ULMC) or `m·h` (ULMC).
    pub elapsed_time: f64,
    pub iter: u64,
    /// Partial-derivative evaluations so far.
    pub cost_units: u64,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_dim(x.len(), v.len())?;
        Ok(Self {
            x,
            v,
            elapsed_time: 0.0,
            iter: 0,
            cost_units: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// One ULMC iteration: a full gradient at `x`, then every coordinate is
/// resampled from the step Gaussian with its own pair of normals.
///
/// `grad` is scratch space of length `d`.
pub fn ulmc_step<P, R>(
    state: &mut PhaseState,
    target: &P,
    kernel: &StepKernel,
    grad: &mut [f64],
    rng: &mut R,
) -> Result<()>
where
    P: Potential + ?Sized,
    R: Rng + ?Sized,
{
    target.gradient_into(&state.x, grad);
    state.cost_units += state.x.len() as u64;
    for ((x, v), &g) in state.x.iter_mut().zip(state.v.iter_mut()).zip(grad.iter()) {
        let (nx, nv) = kernel.sample(*x, *v, g, rng);
        *x = nx;
        *v = nv;
    }
    state.elapsed_time += kernel.h;
    state.iter += 1;
    if !state.x.iter().chain(&state.v).all(|t| t.is_finite()) {
        return Err(Error::NonFinite(format!("ULMC state at iteration {}", state.iter)));
    }
    Ok(())
}

/// One RC-ULMC iteration: draw `r ~ Φ`, evaluate `∂_r f(x)`, resample
/// `(x_r, v_r)` over `h_r`. All other coordinates are left untouched.
///
/// `kernels[i]` must be the step kernel for `schedule.h_coord()[i]`.
pub fn rc_ulmc_step<P, R>(
    state: &mut PhaseState,
    target: &P,
    schedule: &CoordinateSchedule,
    kernels: &[StepKernel],
    rng: &mut R,
) -> Result<()>
where
    P: Potential + ?Sized,
    R: Rng + ?Sized,
{
    let r = schedule.sample(rng);
    let g = target.partial(r, &state.x);
    state.cost_units += 1;
    let kernel = &kernels[r];
    let (nx, nv) = kernel.sample(state.x[r], state.v[r], g, rng);
    if !(nx.is_finite() && nv.is_finite()) {
        return Err(Error::NonFinite(format!(
            "RC-ULMC coordinate {r} at iteration {}",
            state.iter + 1
        )));
    }
    state.x[r] = nx;
    state.v[r] = nv;
    state.elapsed_time += kernel.h;
    state.iter += 1;
    Ok(())
}

#[derive(Debug, Clone)]
enum Stepper {
    Ulmc {
        kernel: StepKernel,
        grad: Vec<f64>,
    },
    Rc {
        schedule: CoordinateSchedule,
        kernels: Vec<StepKernel>,
    },
}

/// A chain bound to a target, owning its state and random stream.
pub struct Chain<'a, P: Potential + ?Sized> {
    target: &'a P,
    algorithm: Algorithm,
    stepper: Stepper,
    state: PhaseState,
    rng: ChaCha8Rng,
    max_iters: u64,
}

impl<'a, P: Potential + ?Sized> Chain<'a, P> {
    /// Validates the configuration, draws the initial state from
    /// `config.init` and prepares the step kernels.
    pub fn new(target: &'a P, config: &SamplerConfig, algorithm: Algorithm) -> Result<Self> {
        let d = target.dim();
        if config.strict_admissibility {
            validate_stepsize(target.constants(), config, algorithm).into_error()?;
        }
        let stepper = match algorithm {
            Algorithm::Ulmc => Stepper::Ulmc {
                kernel: StepKernel::new(config.h, config.gamma)?,
                grad: vec![0.0; d],
            },
            Algorithm::RcUlmc => {
                let schedule = config
                    .schedule
                    .clone()
                    .ok_or_else(|| Error::InvalidSchedule("RC-ULMC needs a coordinate schedule".into()))?;
                if schedule.dim() != d {
                    return Err(Error::InvalidSchedule(format!(
                        "schedule has {} coordinates, target has {d}",
                        schedule.dim()
                    )));
                }
                if schedule.h_base() != config.h {
                    return Err(Error::InvalidSchedule(format!(
                        "schedule base stepsize {} differs from h = {}",
                        schedule.h_base(),
                        config.h
                    )));
                }
                let kernels = schedule
                    .h_coord()
                    .iter()
                    .map(|&h| StepKernel::new(h, config.gamma))
                    .collect::<Result<Vec<_>>>()?;
                Stepper::Rc { schedule, kernels }
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(config.rng_stream);
        let (x, v) = config.init.draw(d, config.gamma, &mut rng)?;
        Ok(Self {
            target,
            algorithm,
            stepper,
            state: PhaseState::new(x, v)?,
            rng,
            max_iters: config.max_iters,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn state(&self) -> &PhaseState {
        &self.state
    }

    pub fn into_state(self) -> PhaseState {
        self.state
    }

    /// Partial-derivative units charged per iteration.
    pub fn cost_per_iter(&self) -> u64 {
        match self.algorithm {
            Algorithm::Ulmc => self.target.dim() as u64,
            Algorithm::RcUlmc => 1,
        }
    }

    pub fn step(&mut self) -> Result<()> {
        if self.state.iter >= self.max_iters {
            return Err(Error::param(
                "max_iters",
                self.max_iters as f64,
                "iteration cap reached",
            ));
        }
        match &mut self.stepper {
            Stepper::Ulmc { kernel, grad } => {
                ulmc_step(&mut self.state, self.target, kernel, grad, &mut self.rng)
            }
            Stepper::Rc { schedule, kernels } => {
                rc_ulmc_step(&mut self.state, self.target, schedule, kernels, &mut self.rng)
            }
        }
    }

    pub fn advance(&mut self, iterations: u64) -> Result<()> {
        for _ in 0..iterations {
            self.step()?;
        }
        Ok(())
    }

    /// Advances while the next iteration still fits within `budget` cost
    /// units. Returns the cost actually reached (`≤ budget`).
    pub fn advance_to_cost(&mut self, budget: u64) -> Result<u64> {
        let per = self.cost_per_iter();
        while self.state.cost_units + per <= budget {
            self.step()?;
        }
        Ok(self.state.cost_units)
    }
}

/// Receives the chain state at a fixed iteration stride.
pub trait Observer {
    /// Observe when `iter % stride == 0` (including the initial state).
    fn stride(&self) -> u64 {
        1
    }

    fn observe(&mut self, state: &PhaseState) -> Result<()>;
}

/// Final state of a [`run_chain`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub algorithm: Algorithm,
    pub state: PhaseState,
}

/// Runs `n_iters` iterations, invoking each observer at its stride.
/// Bitwise reproducible given `(config, algorithm, n_iters)`.
pub fn run_chain<P: Potential + ?Sized>(
    target: &P,
    config: &SamplerConfig,
    algorithm: Algorithm,
    n_iters: u64,
    observers: &mut [&mut dyn Observer],
) -> Result<ChainSummary> {
    if n_iters > config.max_iters {
        return Err(Error::param("n_iters", n_iters as f64, "exceeds max_iters"));
    }
    let strides: Vec<u64> = observers.iter().map(|o| o.stride().max(1)).collect();
    let mut chain = Chain::new(target, config, algorithm)?;
    for o in observers.iter_mut() {
        o.observe(chain.state())?;
    }
    for _ in 0..n_iters {
        chain.step()?;
        let iter = chain.state().iter;
        for (o, &s) in observers.iter_mut().zip(&strides) {
            if iter % s == 0 {
                o.observe(chain.state())?;
            }
        }
    }
    Ok(ChainSummary {
        algorithm,
        state: chain.into_state(),
    })
}

/// Time averages of `|x|²` and `|v|²` over iterations `≥ burn_in`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunningMoments {
    pub burn_in: u64,
    pub count: u64,
    sum_x2: f64,
    sum_v2: f64,
}

impl RunningMoments {
    pub fn new(burn_in: u64) -> Self {
        Self {
            burn_in,
            ..Self::default()
        }
    }

    pub fn mean_x2(&self) -> f64 {
        self.sum_x2 / self.count as f64
    }

    pub fn mean_v2(&self) -> f64 {
        self.sum_v2 / self.count as f64
    }
}

impl Observer for RunningMoments {
    fn observe(&mut self, state: &PhaseState) -> Result<()> {
        if state.iter >= self.burn_in {
            self.count += 1;
            self.sum_x2 += state.x.iter().map(|t| t * t).sum::<f64>();
            self.sum_v2 += state.v.iter().map(|t| t * t).sum::<f64>();
        }
        Ok(())
    }
}

/// Records the Lyapunov function `|x-x*|² + |x-x*+v|² + 1` along a chain.
#[derive(Debug, Clone)]
pub struct LyapunovTrace {
    x_star: Vec<f64>,
    stride: u64,
    pub values: Vec<f64>,
}

impl LyapunovTrace {
    pub fn new(x_star: Vec<f64>, stride: u64) -> Self {
        Self {
            x_star,
            stride,
            values: Vec::new(),
        }
    }
}

impl Observer for LyapunovTrace {
    fn stride(&self) -> u64 {
        self.stride
    }

    fn observe(&mut self, state: &PhaseState) -> Result<()> {
        self.values
            .push(crate::metrics::lyapunov(state, Some(&self.x_star))?);
        Ok(())
    }
}
