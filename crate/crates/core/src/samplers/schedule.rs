use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};

/// Probabilities below this are rejected: `h / φ_i` would blow up.
pub const MIN_PHI: f64 = 1e-12;

/// Tolerance on `Σ φ_i = 1`.
pub const PHI_SUM_TOLERANCE: f64 = 1e-12;

/// Coordinate-selection distribution `Φ` with per-coordinate stepsizes
/// `h_i = h / φ_i`, so the expected step `Σ φ_i h_i` over one draw is `d·h`
/// and each coordinate advances at rate `h` per iteration on average.
#[derive(Debug, Clone)]
pub struct CoordinateSchedule {
    phi: Vec<f64>,
    h_base: f64,
    h_coord: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl CoordinateSchedule {
    pub fn new(phi: Vec<f64>, h_base: f64) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::InvalidSchedule("empty probability vector".into()));
        }
        if !(h_base.is_finite() && h_base > 0.0) {
            return Err(Error::param("h", h_base, "must be positive and finite"));
        }
        for (i, &p) in phi.iter().enumerate() {
            if !p.is_finite() || p < MIN_PHI {
                return Err(Error::InvalidSchedule(format!(
                    "phi[{i}] = {p:e} is below the minimum {MIN_PHI:e}"
                )));
            }
        }
        let total: f64 = phi.iter().sum();
        if (total - 1.0).abs() > PHI_SUM_TOLERANCE {
            return Err(Error::InvalidSchedule(format!("probabilities sum to {total}")));
        }
        let h_coord = phi.iter().map(|p| h_base / p).collect();
        let alias = WeightedAliasIndex::new(phi.clone())
            .map_err(|e| Error::InvalidSchedule(e.to_string()))?;
        Ok(Self {
            phi,
            h_base,
            h_coord,
            alias,
        })
    }

    pub fn uniform(dim: usize, h_base: f64) -> Result<Self> {
        Self::new(vec![1.0 / dim as f64; dim], h_base)
    }

    /// Schedule with `φ_i ∝ L_i^{2/3}`, see [`optimal_phi`].
    pub fn optimal(coord_l: &[f64], h_base: f64) -> Result<Self> {
        Self::new(optimal_phi(coord_l)?, h_base)
    }

    /// Normalizes non-negative weights into probabilities.
    pub fn from_weights(weights: &[f64], h_base: f64) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidSchedule(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect(), h_base)
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn h_base(&self) -> f64 {
        self.h_base
    }

    pub fn h_coord(&self) -> &[f64] {
        &self.h_coord
    }

    pub fn min_phi(&self) -> f64 {
        self.phi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_uniform(&self) -> bool {
        let u = 1.0 / self.dim() as f64;
        self.phi.iter().all(|p| (p - u).abs() <= PHI_SUM_TOLERANCE)
    }

    /// Draws a coordinate index in O(1).
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }
}

/// Minimizer of `Σ κ_i²/φ_i²` over the probability simplex:
/// `φ_i = L_i^{2/3} / Σ_j L_j^{2/3}`.
pub fn optimal_phi(coord_l: &[f64]) -> Result<Vec<f64>> {
    if coord_l.is_empty() {
        return Err(Error::InvalidSchedule("empty directional constants".into()));
    }
    let mut weights = Vec::with_capacity(coord_l.len());
    for &l in coord_l {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::param("L_i", l, "directional constants must be positive"));
        }
        let c = l.cbrt();
        weights.push(c * c);
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stepsizes_follow_inverse_probability() {
        let s = CoordinateSchedule::uniform(4, 0.01).unwrap();
        assert!(s.h_coord().iter().all(|&h| (h - 0.04).abs() < 1e-17));

        let s = CoordinateSchedule::new(vec![0.2, 0.8], 0.01).unwrap();
        assert!((s.h_coord()[0] - 0.05).abs() < 1e-17);
        assert!((s.h_coord()[1] - 0.0125).abs() < 1e-17);
        let expected: f64 = s.phi().iter().zip(s.h_coord()).map(|(p, h)| p * h).sum();
        assert!((expected - 2.0 * 0.01).abs() < 1e-16);
        for (p, h) in s.phi().iter().zip(s.h_coord()) {
            assert!((p * h - 0.01).abs() <= 2.0 * f64::EPSILON * 0.01);
        }
    }

    #[test]
    fn optimal_phi_examples() {
        let phi = optimal_phi(&[1.0, 1.0, 1.0]).unwrap();
        assert!(phi.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let phi = optimal_phi(&[1.0, 8.0]).unwrap();
        assert!((phi[0] - 0.2).abs() < 1e-15 && (phi[1] - 0.8).abs() < 1e-15);
        assert!(optimal_phi(&[1.0, 0.0]).is_err());
        assert!(optimal_phi(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn degenerate_schedules_are_rejected() {
        assert!(CoordinateSchedule::new(vec![1.0 - 1e-13, 1e-13], 0.1).is_err());
        assert!(CoordinateSchedule::new(vec![0.5, 0.6], 0.1).is_err());
        assert!(CoordinateSchedule::new(vec![], 0.1).is_err());
        assert!(CoordinateSchedule::new(vec![0.5, 0.5], 0.0).is_err());
        assert!(CoordinateSchedule::new(vec![f64::NAN, 0.5], 0.1).is_err());
    }

    #[test]
    fn draws_match_probabilities() {
        let s = CoordinateSchedule::new(vec![0.2, 0.8], 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000u64;
        let hits = (0..n).filter(|_| s.sample(&mut rng) == 0).count() as f64;
        let (mean, sd) = (0.2 * n as f64, (n as f64 * 0.2 * 0.8).sqrt());
        assert!((hits - mean).abs() < 4.0 * sd, "hits = {hits}");
    }
}
