use nalgebra::DMatrix;

use super::{Potential, SmoothnessConstants};
use crate::error::{Error, Result};

/// Pairwise-coupled potential on a graph:
///
/// `f(x) = Σ_{(i,j) ∈ E} ½ β_ij (x_i - x_j)² + ½ α |x|²`.
///
/// `∂_i f` only reads the neighbours of `i`, so a partial derivative is much
/// cheaper than a full gradient on sparse graphs. The Hessian is `α I` plus the
/// weighted graph Laplacian, which gives `μ`, `L` and `L_i` in closed form.
#[derive(Debug, Clone)]
pub struct GraphTarget {
    dim: usize,
    alpha: f64,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    constants: SmoothnessConstants,
    x_star: Vec<f64>,
}

impl GraphTarget {
    /// Builds the target with per-edge couplings `β_ij > 0` and diagonal `α > 0`.
    pub fn new(dim: usize, edges: Vec<(usize, usize, f64)>, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param("alpha", alpha, "must be positive"));
        }
        let mut adjacency = vec![Vec::new(); dim];
        let mut laplacian = DMatrix::<f64>::zeros(dim, dim);
        for &(i, j, beta) in &edges {
            for idx in [i, j] {
                if idx >= dim {
                    return Err(Error::IndexOutOfRange { index: idx, dim });
                }
            }
            if i == j {
                return Err(Error::Parse(format!("self-loop on node {i}")));
            }
            if !(beta.is_finite() && beta > 0.0) {
                return Err(Error::param("beta", beta, "must be positive"));
            }
            adjacency[i].push((j, beta));
            adjacency[j].push((i, beta));
            laplacian[(i, i)] += beta;
            laplacian[(j, j)] += beta;
            laplacian[(i, j)] -= beta;
            laplacian[(j, i)] -= beta;
        }
        let eig = crate::linalg::sym_eigen(&laplacian)?;
        // The Laplacian always has the constant vector in its kernel.
        let mu = alpha;
        let big_l = alpha + eig.eigenvalues.max().max(0.0);
        let coord_l = (0..dim).map(|i| alpha + laplacian[(i, i)]).collect();
        let constants = SmoothnessConstants::new(mu, big_l, coord_l)?;
        Ok(Self {
            dim,
            alpha,
            edges,
            adjacency,
            constants,
            x_star: vec![0.0; dim],
        })
    }

    /// Same coupling `beta` on every edge.
    pub fn uniform(dim: usize, edges: &[(usize, usize)], beta: f64, alpha: f64) -> Result<Self> {
        Self::new(dim, edges.iter().map(|&(i, j)| (i, j, beta)).collect(), alpha)
    }

    /// Parses an edge list with one `i j` pair per line (0-indexed). Blank
    /// lines and lines starting with `#` are skipped. When `dim` is `None` the
    /// node count is one more than the largest index.
    pub fn from_edge_list(text: &str, dim: Option<usize>, beta: f64, alpha: f64) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next = || -> Result<usize> {
                fields
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: expected `i j`", lineno + 1)))?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let (i, j) = (next()?, next()?);
            if fields.next().is_some() {
                return Err(Error::Parse(format!("line {}: trailing fields", lineno + 1)));
            }
            edges.push((i, j));
        }
        let dim = match dim {
            Some(d) => d,
            None => edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0),
        };
        Self::uniform(dim, &edges, beta, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }
}

impl Potential for GraphTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let coupling: f64 = self
            .edges
            .iter()
            .map(|&(i, j, b)| b * (x[i] - x[j]) * (x[i] - x[j]))
            .sum();
        let diag: f64 = x.iter().map(|v| v * v).sum();
        0.5 * (coupling + self.alpha * diag)
    }

    fn partial(&self, i: usize, x: &[f64]) -> f64 {
        let xi = x[i];
        self.adjacency[i]
            .iter()
            .fold(self.alpha * xi, |acc, &(j, b)| acc + b * (xi - x[j]))
    }

    fn constants(&self) -> &SmoothnessConstants {
        &self.constants
    }

    fn minimizer(&self) -> Option<&[f64]> {
        Some(&self.x_star)
    }
}
