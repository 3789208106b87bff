//! Direct access to the analytic references, formatted for the terminal.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rculmc_core::kernel::step_moments;
use rculmc_core::oracles::{GaussianLaw, UlmcAffineMap};
use rculmc_core::samplers::optimal_phi;

use crate::config::OracleConfig;
use crate::error::{HarnessError, Result};
use crate::run::prop5_rows;

/// Mean coefficients and covariance of one step of length `h`.
pub fn moments_table(h: f64, gamma: f64) -> Result<String> {
    let m = step_moments(h, gamma).map_err(HarnessError::setup)?;
    let mut s = String::new();
    for (name, v) in [
        ("coef_x_on_v", m.coef_x_on_v),
        ("coef_x_on_grad", m.coef_x_on_grad),
        ("coef_v_decay", m.coef_v_decay),
        ("coef_v_on_grad", m.coef_v_on_grad),
        ("var_x", m.var_x),
        ("var_v", m.var_v),
        ("cov_xv", m.cov_xv),
    ] {
        writeln!(s, "{name:<15} {v:.17e}").unwrap();
    }
    Ok(s)
}

/// Optimal coordinate probabilities `φ_i ∝ L_i^{2/3}`.
pub fn phi_table(coord_l: &[f64]) -> Result<String> {
    let phi = optimal_phi(coord_l).map_err(HarnessError::setup)?;
    let mut s = String::new();
    for (i, (l, p)) in coord_l.iter().zip(&phi).enumerate() {
        writeln!(s, "{i:>4} L = {l:<12} phi = {p:.17e}").unwrap();
    }
    Ok(s)
}

/// The recursion rows as CSV text; fails if the floor is ever crossed.
pub fn prop5_csv(o: &OracleConfig) -> Result<String> {
    let (rows, violation) = prop5_rows(o)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| HarnessError::Numerical(e.to_string()))?;
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv");
    match violation {
        None => Ok(text),
        Some(m) => Err(HarnessError::Numerical(format!("recursion fell below its floor at step {m}"))),
    }
}

/// Exact law of ULMC on `½ xᵀ diag(a) x` after `steps` iterations from
/// `x ~ N(shift, I)`, `v ~ N(0, γI)`.
pub fn gaussian_table(diag: &[f64], shift: &[f64], h: f64, gamma: f64, steps: u64) -> Result<String> {
    let d = diag.len();
    if shift.len() != d {
        return Err(HarnessError::Usage(format!("--shift needs {d} entries")));
    }
    let a = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
    let map = UlmcAffineMap::new(&a, h, gamma).map_err(HarnessError::setup)?;
    let mut law = GaussianLaw::product(shift, &DMatrix::identity(d, d), gamma).map_err(HarnessError::setup)?;
    for _ in 0..steps {
        law = map.apply(&law).map_err(HarnessError::running)?;
    }
    let (ex2, ev2, ew2) = law.second_moments();
    let mut s = String::new();
    writeln!(s, "E|x|^2 = {ex2:.17e}").unwrap();
    writeln!(s, "E|v|^2 = {ev2:.17e}").unwrap();
    writeln!(s, "E|x+v|^2 = {ew2:.17e}").unwrap();
    for i in 0..d {
        writeln!(
            s,
            "x[{i}]: mean = {:.17e}, var = {:.17e}; v[{i}]: mean = {:.17e}, var = {:.17e}",
            law.mean[i],
            law.cov[(i, i)],
            law.mean[d + i],
            law.cov[(d + i, d + i)]
        )
        .unwrap();
    }
    Ok(s)
}
