use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::quadratic::dot;
use super::{Potential, SmoothnessConstants};
use crate::error::{Error, Result};

/// Size of the correlated leading block.
pub const EXPERIMENT_BLOCK: usize = 10;

/// Smallest accepted `λ_min(ΓᵀΓ) / λ_max(ΓᵀΓ)` before `T` is redrawn.
const MIN_BLOCK_CONDITIONING: f64 = 1e-10;

/// Product of a correlated Gaussian on the first ten coordinates and a
/// standard Gaussian on the rest:
///
/// `f(x) = ½ 𝗑ᵀ ΓᵀΓ 𝗑 + ½ Σ_{i>10} x_i²`, with `𝗑 = (x_1, …, x_10)` and
/// `Γ = T + (d/10) I`, where `T` has i.i.d. standard normal entries.
#[derive(Debug, Clone)]
pub struct ProductExperimentTarget {
    dim: usize,
    gamma: DMatrix<f64>,
    block: DMatrix<f64>,
    block_rows: Vec<f64>,
    constants: SmoothnessConstants,
    x_star: Vec<f64>,
    seed: Option<u64>,
}

impl ProductExperimentTarget {
    /// Draws `T` from a ChaCha8 stream seeded with `seed`, row by row, and
    /// redraws (continuing the same stream) if `ΓᵀΓ` is numerically singular.
    pub fn generate(dim: usize, seed: u64) -> Result<Self> {
        check_block_dim(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = dim as f64 / EXPERIMENT_BLOCK as f64;
        loop {
            let mut gamma = DMatrix::<f64>::zeros(EXPERIMENT_BLOCK, EXPERIMENT_BLOCK);
            for i in 0..EXPERIMENT_BLOCK {
                for j in 0..EXPERIMENT_BLOCK {
                    gamma[(i, j)] = StandardNormal.sample(&mut rng);
                }
                gamma[(i, i)] += shift;
            }
            match Self::with_gamma(dim, gamma) {
                Ok(mut target) => {
                    target.seed = Some(seed);
                    return Ok(target);
                }
                Err(Error::NotPositiveDefinite(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }

    /// Builds the target from an explicit `Γ`.
    pub fn with_gamma(dim: usize, gamma: DMatrix<f64>) -> Result<Self> {
        check_block_dim(dim)?;
        if gamma.nrows() != EXPERIMENT_BLOCK || gamma.ncols() != EXPERIMENT_BLOCK {
            return Err(Error::DimensionMismatch {
                expected: EXPERIMENT_BLOCK,
                found: gamma.nrows(),
            });
        }
        let block = gamma.transpose() * &gamma;
        let block = (&block + block.transpose()) * 0.5;
        let eig = crate::linalg::sym_eigen(&block)?;
        let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        if !(lo > MIN_BLOCK_CONDITIONING * hi) {
            return Err(Error::NotPositiveDefinite(format!(
                "Gamma^T Gamma has eigenvalues in [{lo:e}, {hi:e}]"
            )));
        }
        let has_tail = dim > EXPERIMENT_BLOCK;
        let (mu, big_l) = if has_tail {
            (lo.min(1.0), hi.max(1.0))
        } else {
            (lo, hi)
        };
        let coord_l = (0..dim)
            .map(|i| if i < EXPERIMENT_BLOCK { block[(i, i)] } else { 1.0 })
            .collect();
        let constants = SmoothnessConstants::new(mu, big_l, coord_l)?;
        let block_rows = (0..EXPERIMENT_BLOCK)
            .flat_map(|i| (0..EXPERIMENT_BLOCK).map(move |j| (i, j)))
            .map(|(i, j)| block[(i, j)])
            .collect();
        Ok(Self {
            dim,
            gamma,
            block,
            block_rows,
            constants,
            x_star: vec![0.0; dim],
            seed: None,
        })
    }

    /// `Γ`.
    pub fn gamma_matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    /// `ΓᵀΓ`, the Hessian of the leading block.
    pub fn block_hessian(&self) -> &DMatrix<f64> {
        &self.block
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    #[inline]
    fn block_row(&self, i: usize) -> &[f64] {
        &self.block_rows[i * EXPERIMENT_BLOCK..(i + 1) * EXPERIMENT_BLOCK]
    }
}

fn check_block_dim(dim: usize) -> Result<()> {
    if dim < EXPERIMENT_BLOCK {
        return Err(Error::DimensionMismatch {
            expected: EXPERIMENT_BLOCK,
            found: dim,
        });
    }
    Ok(())
}

impl Potential for ProductExperimentTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let lead = &x[..EXPERIMENT_BLOCK];
        let quad: f64 = (0..EXPERIMENT_BLOCK)
            .map(|i| lead[i] * dot(self.block_row(i), lead))
            .sum();
        let tail: f64 = x[EXPERIMENT_BLOCK..].iter().map(|v| v * v).sum();
        0.5 * (quad + tail)
    }

    #[inline]
    fn partial(&self, i: usize, x: &[f64]) -> f64 {
        if i < EXPERIMENT_BLOCK {
            dot(self.block_row(i), &x[..EXPERIMENT_BLOCK])
        } else {
            x[i]
        }
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let lead = &x[..EXPERIMENT_BLOCK];
        for (i, g) in out[..EXPERIMENT_BLOCK].iter_mut().enumerate() {
            *g = dot(self.block_row(i), lead);
        }
        out[EXPERIMENT_BLOCK..].copy_from_slice(&x[EXPERIMENT_BLOCK..]);
    }

    fn constants(&self) -> &SmoothnessConstants {
        &self.constants
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.x_star)
    }
}
