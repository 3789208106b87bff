//! ULMC and RC-ULMC chains.

mod chain;
mod config;
mod schedule;

pub use chain::{
    rc_ulmc_step, run_chain, ulmc_step, Chain, ChainSummary, LyapunovTrace, Observer, PhaseState,
    RunningMoments,
};
pub use config::{
    validate_stepsize, AdmissibilityReport, Algorithm, BoundCheck, InitialLaw, SamplerConfig,
};
pub use schedule::{optimal_phi, CoordinateSchedule, MIN_PHI, PHI_SUM_TOLERANCE};
