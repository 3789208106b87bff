//! Declarative experiment description, loaded from TOML.
//!
//! ```toml
//! name = "example"
//! kind = "sampling"          # or "prop5-oracle"
//! master_seed = 1
//! trials = 1000
//!
//! [target]
//! kind = "experiment"        # experiment | quadratic | graph
//! dim = 100
//! gamma_seed = 5
//!
//! [init]
//! kind = "gaussian"          # gaussian | fixed
//! shift = 0.5
//! shift_coords = 10
//! leading_covariance = "reference"
//!
//! [metric]
//! k = 10
//!
//! [grid]
//! cost = [1000, 10000, 100000]
//!
//! [[samplers]]
//! algorithm = "rc-ulmc"
//! gamma = 0.2
//! h = 1e-4
//! schedule = "optimal"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rculmc_core::potentials::{
    GraphTarget, Potential, ProductExperimentTarget, QuadraticTarget,
};
use rculmc_core::samplers::{Algorithm, CoordinateSchedule, InitialLaw, SamplerConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Monte Carlo cost-error curves for one or more samplers.
    Sampling,
    /// Exact second-moment recursion of RC-ULMC against its lower bound.
    Prop5Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Where artifacts go; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samplers: Vec<SamplerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetConfig {
    /// Seeded `Γ` block on the leading ten coordinates, standard Gaussian tail.
    Experiment { dim: usize, gamma_seed: u64 },
    /// `½ xᵀAx` with `A` given by its diagonal or in full.
    Quadratic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diag: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
    },
    /// Graph coupling read from an `i j` edge-list file.
    Graph {
        edges_file: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        beta: f64,
        alpha: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeadingCovariance {
    #[default]
    Identity,
    /// The reference second moment of the metric block.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitConfig {
    /// `x ~ N(shift·𝟙_{coords}, Σ)`, `v ~ N(0, v_variance·I)` (`γ` if unset).
    Gaussian {
        #[serde(default)]
        shift: f64,
        /// Number of leading coordinates shifted; all when unset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shift_coords: Option<usize>,
        #[serde(default)]
        leading_covariance: LeadingCovariance,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        v_variance: Option<f64>,
    },
    Fixed { x: Vec<f64>, v: Vec<f64> },
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Gaussian {
            shift: 0.0,
            shift_coords: None,
            leading_covariance: LeadingCovariance::Identity,
            v_variance: None,
        }
    }
}

/// Spectral-norm error of the empirical `E xxᵀ` on the leading `k`
/// coordinates against its exact value under the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    10
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { k: default_k() }
    }
}

impl MetricConfig {
    pub fn name(&self) -> String {
        format!("moment-error-k{}", self.k)
    }
}

/// Snapshot costs, either listed or as a log grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_decade: Option<u32>,
}

impl GridConfig {
    pub fn explicit(cost: Vec<u64>) -> Self {
        Self {
            cost: Some(cost),
            start: None,
            stop: None,
            per_decade: None,
        }
    }

    /// The snapshot costs; must be positive and strictly increasing.
    pub fn points(&self) -> Result<Vec<u64>> {
        let points = match (&self.cost, self.start, self.stop, self.per_decade) {
            (Some(c), None, None, None) => c.clone(),
            (None, Some(start), Some(stop), Some(per)) => {
                if start == 0 || per == 0 || stop < start {
                    return Err(HarnessError::Config(
                        "grid needs 0 < start ≤ stop and per_decade > 0".into(),
                    ));
                }
                let mut out = Vec::new();
                for j in 0.. {
                    let c = (start as f64 * 10f64.powf(j as f64 / per as f64)).round();
                    if c > stop as f64 * (1.0 + 1e-9) {
                        break;
                    }
                    out.push(c as u64);
                }
                out
            }
            _ => {
                return Err(HarnessError::Config(
                    "grid takes either `cost` or all of `start`, `stop`, `per_decade`".into(),
                ))
            }
        };
        if points.is_empty() {
            return Err(HarnessError::Config("grid is empty".into()));
        }
        if points[0] == 0 {
            return Err(HarnessError::Config("grid costs must be positive".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config(format!(
                "grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    /// `"uniform"` or `"optimal"`.
    Named(String),
    /// Unnormalised positive weights.
    Weights(Vec<f64>),
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Named("optimal".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub algorithm: String,
    pub gamma: f64,
    pub h: f64,
    /// Only read for RC-ULMC.
    #[serde(default)]
    pub schedule: ScheduleSpec,
    /// Refuse to run outside the admissible region.
    #[serde(default)]
    pub strict: bool,
}

impl SamplerEntry {
    pub fn new(algorithm: Algorithm, gamma: f64, h: f64) -> Self {
        Self {
            label: None,
            algorithm: algorithm.as_str().into(),
            gamma,
            h,
            schedule: ScheduleSpec::default(),
            strict: false,
        }
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.algorithm
            .parse()
            .map_err(|e: rculmc_core::Error| HarnessError::Config(e.to_string()))
    }

    pub fn label(&self) -> Result<String> {
        Ok(match &self.label {
            Some(l) => l.clone(),
            None => format!("{}-h{}", self.algorithm()?, self.h),
        })
    }

    /// The core sampler configuration for `target`, without seeds.
    pub fn sampler_config<P: Potential + ?Sized>(&self, target: &P) -> Result<SamplerConfig> {
        for (name, v) in [("gamma", self.gamma), ("h", self.h)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(HarnessError::Config(format!("sampler `{name}` must be positive, got {v}")));
            }
        }
        let mut config = SamplerConfig::new(self.gamma, self.h).strict(self.strict);
        if self.algorithm()? == Algorithm::RcUlmc {
            let d = target.dim();
            let schedule = match &self.schedule {
                ScheduleSpec::Named(n) if n == "uniform" => CoordinateSchedule::uniform(d, self.h),
                ScheduleSpec::Named(n) if n == "optimal" => {
                    CoordinateSchedule::optimal(target.constants().coord_l(), self.h)
                }
                ScheduleSpec::Named(n) => {
                    return Err(HarnessError::Config(format!(
                        "unknown schedule `{n}` (expected uniform, optimal or a weight list)"
                    )))
                }
                ScheduleSpec::Weights(w) => CoordinateSchedule::from_weights(w, self.h),
            }
            .map_err(HarnessError::setup)?;
            config = config.with_schedule(schedule);
        }
        Ok(config)
    }
}

/// Parameters of the second-moment recursion experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub dim: usize,
    pub h: f64,
    pub steps: u64,
    /// Rows are written every `stride` steps (and at the last step).
    pub stride: u64,
}

/// A target built from its config, with the exact `E xxᵀ` it induces.
pub enum BuiltTarget {
    Experiment(ProductExperimentTarget),
    Quadratic(QuadraticTarget),
    Graph(GraphTarget),
}

impl BuiltTarget {
    pub fn potential(&self) -> &dyn Potential {
        match self {
            BuiltTarget::Experiment(t) => t,
            BuiltTarget::Quadratic(t) => t,
            BuiltTarget::Graph(t) => t,
        }
    }

    /// Hessian of the (quadratic) block that contains the leading `k`
    /// coordinates; its inverse restricted to them is the reference moment.
    fn precision(&self) -> DMatrix<f64> {
        match self {
            BuiltTarget::Experiment(t) => t.block_hessian().clone(),
            BuiltTarget::Quadratic(t) => t.matrix().clone(),
            BuiltTarget::Graph(t) => {
                let d = t.dim();
                let mut m = DMatrix::from_diagonal_element(d, d, t.alpha());
                for &(i, j, b) in t.edges() {
                    m[(i, i)] += b;
                    m[(j, j)] += b;
                    m[(i, j)] -= b;
                    m[(j, i)] -= b;
                }
                m
            }
        }
    }

    /// Exact `E xxᵀ` on the leading `k` coordinates under the target.
    pub fn reference_moment(&self, k: usize) -> Result<DMatrix<f64>> {
        if let BuiltTarget::Experiment(t) = self {
            if k <= t.block_hessian().nrows() {
                let full = rculmc_core::metrics::reference_second_moment(t).map_err(HarnessError::setup)?;
                return Ok(full.view((0, 0), (k, k)).into_owned());
            }
            return Err(HarnessError::Config(format!(
                "metric k = {k} exceeds the coupled block of the experiment target"
            )));
        }
        let p = self.precision();
        if k > p.nrows() {
            return Err(HarnessError::Config(format!("metric k = {k} exceeds dimension {}", p.nrows())));
        }
        let inv = p
            .cholesky()
            .ok_or_else(|| HarnessError::Config("target Hessian is not positive definite".into()))?
            .inverse();
        let block = inv.view((0, 0), (k, k)).into_owned();
        Ok((&block + block.transpose()) * 0.5)
    }
}

impl TargetConfig {
    /// Relative paths resolve against `base` (the config file's directory).
    pub fn build(&self, base: Option<&Path>) -> Result<BuiltTarget> {
        Ok(match self {
            TargetConfig::Experiment { dim, gamma_seed } => BuiltTarget::Experiment(
                ProductExperimentTarget::generate(*dim, *gamma_seed).map_err(HarnessError::setup)?,
            ),
            TargetConfig::Quadratic { diag, matrix } => {
                let t = match (diag, matrix) {
                    (Some(d), None) => QuadraticTarget::diagonal(d),
                    (None, Some(rows)) => {
                        let n = rows.len();
                        if rows.iter().any(|r| r.len() != n) {
                            return Err(HarnessError::Config("quadratic matrix must be square".into()));
                        }
                        QuadraticTarget::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
                    }
                    _ => {
                        return Err(HarnessError::Config(
                            "quadratic target takes exactly one of `diag`, `matrix`".into(),
                        ))
                    }
                };
                BuiltTarget::Quadratic(t.map_err(HarnessError::setup)?)
            }
            TargetConfig::Graph {
                edges_file,
                dim,
                beta,
                alpha,
            } => {
                let path = match base {
                    Some(b) if edges_file.is_relative() => b.join(edges_file),
                    _ => edges_file.clone(),
                };
                let text = fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
                BuiltTarget::Graph(
                    GraphTarget::from_edge_list(&text, *dim, *beta, *alpha).map_err(HarnessError::setup)?,
                )
            }
        })
    }
}

impl InitConfig {
    /// The initial law for a target of dimension `dim`; `reference` is the
    /// leading-block covariance used when requested.
    pub fn build(&self, dim: usize, reference: Option<&DMatrix<f64>>) -> Result<InitialLaw> {
        match self {
            InitConfig::Fixed { x, v } => {
                if x.len() != dim || v.len() != dim {
                    return Err(HarnessError::Config(format!(
                        "fixed init needs {dim} entries in `x` and `v`"
                    )));
                }
                Ok(InitialLaw::fixed(x.clone(), v.clone()))
            }
            InitConfig::Gaussian {
                shift,
                shift_coords,
                leading_covariance,
                v_variance,
            } => {
                let n = shift_coords.unwrap_or(dim);
                if n > dim {
                    return Err(HarnessError::Config(format!(
                        "shift_coords = {n} exceeds dimension {dim}"
                    )));
                }
                if let Some(s) = v_variance {
                    if !(s.is_finite() && *s > 0.0) {
                        return Err(HarnessError::Config("v_variance must be positive".into()));
                    }
                }
                let mut mean = vec![0.0; dim];
                mean[..n].iter_mut().for_each(|m| *m = *shift);
                match leading_covariance {
                    LeadingCovariance::Identity => Ok(InitialLaw::shifted(mean, *v_variance)),
                    LeadingCovariance::Reference => {
                        let cov = reference.ok_or_else(|| {
                            HarnessError::Config("init covariance `reference` needs a metric reference".into())
                        })?;
                        InitialLaw::with_leading_covariance(mean, cov, *v_variance).map_err(HarnessError::setup)
                    }
                }
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON form, with the output directory removed.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_string(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Structural checks that need no target construction.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ExperimentKind::Sampling => {
                match self.trials {
                    None => return Err(HarnessError::Config("`trials` is required".into())),
                    Some(0) => return Err(HarnessError::Config("`trials` must be at least 1 (got N = 0)".into())),
                    Some(_) => {}
                }
                if self.target.is_none() {
                    return Err(HarnessError::Config("`[target]` is required".into()));
                }
                self.grid
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("`[grid]` is required".into()))?
                    .points()?;
                if self.samplers.is_empty() {
                    return Err(HarnessError::Config("at least one `[[samplers]]` entry is required".into()));
                }
                if self.metric.k == 0 {
                    return Err(HarnessError::Config("metric k must be positive".into()));
                }
                let mut labels = Vec::new();
                for s in &self.samplers {
                    let label = s.label()?;
                    if label.is_empty() || label.contains(['/', '\\']) {
                        return Err(HarnessError::Config(format!("invalid sampler label `{label}`")));
                    }
                    if labels.contains(&label) {
                        return Err(HarnessError::Config(format!("duplicate sampler label `{label}`")));
                    }
                    labels.push(label);
                }
            }
            ExperimentKind::Prop5Oracle => {
                let o = self
                    .oracle
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("`[oracle]` is required".into()))?;
                if o.dim == 0 || o.stride == 0 {
                    return Err(HarnessError::Config("oracle dim and stride must be positive".into()));
                }
                if !(o.h.is_finite() && o.h > 0.0) {
                    return Err(HarnessError::Config("oracle h must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_includes_endpoints() {
        let g = GridConfig {
            cost: None,
            start: Some(1000),
            stop: Some(1_000_000),
            per_decade: Some(3),
        };
        let p = g.points().unwrap();
        assert_eq!(p.first(), Some(&1000));
        assert_eq!(p.last(), Some(&1_000_000));
        assert_eq!(p.len(), 10);
        assert_eq!(p[1], 2154);
    }

    #[test]
    fn grid_rejects_non_increasing() {
        assert!(GridConfig::explicit(vec![10, 10]).points().is_err());
        assert!(GridConfig::explicit(vec![20, 10]).points().is_err());
        assert!(GridConfig::explicit(vec![0, 10]).points().is_err());
        assert!(GridConfig::explicit(vec![]).points().is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let text = r#"
            name = "t"
            kind = "sampling"
            trials = 3
            [target]
            kind = "quadratic"
            diag = [1.0, 2.0]
            [grid]
            cost = [2, 4]
            [[samplers]]
            algorithm = "ulmc"
            gamma = 1.0
            h = 0.1
        "#;
        let a = ExperimentConfig::from_toml(text).unwrap();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.master_seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(ExperimentConfig::from_toml(&a.to_toml()).unwrap(), a);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r = ExperimentConfig::from_toml("name = \"x\"\nkind = \"sampling\"\ntrails = 3\n");
        assert!(matches!(r, Err(HarnessError::Config(_))));
    }

    #[test]
    fn graph_reference_inverts_laplacian() {
        let t = GraphTarget::uniform(3, &[(0, 1), (1, 2)], 1.0, 1.0).unwrap();
        let r = BuiltTarget::Graph(t).reference_moment(3).unwrap();
        let p = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 3.0, -1.0, 0.0, -1.0, 2.0]);
        assert!((r * p - DMatrix::identity(3, 3)).amax() < 1e-12);
    }
}
