//! Side-by-side summary of cost-error curves sharing one cost grid.

use std::fmt;
use std::path::{Path, PathBuf};

use rculmc_core::samplers::Algorithm;

use crate::error::{HarnessError, Result};
use crate::run::{read_records, RunRecord};

#[derive(Debug, Clone)]
pub struct Curve {
    pub path: PathBuf,
    pub label: String,
    pub algorithm: String,
    pub records: Vec<RunRecord>,
}

/// Reference error divided by another curve's error at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub label: String,
    pub ratios: Vec<f64>,
    /// First grid cost where the reference is strictly below this curve.
    pub crossover: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub grid: Vec<u64>,
    pub reference: Curve,
    pub others: Vec<Curve>,
    pub series: Vec<RatioSeries>,
}

impl Comparison {
    pub fn final_ratios(&self) -> Vec<(String, f64)> {
        self.series
            .iter()
            .map(|s| (s.label.clone(), *s.ratios.last().expect("grid is non-empty")))
            .collect()
    }
}

/// Loads the curves and compares them against the first RC-ULMC curve (or
/// the first file when there is none).
pub fn compare_files<P: AsRef<Path>>(paths: &[P]) -> Result<Comparison> {
    if paths.len() < 2 {
        return Err(HarnessError::Usage("compare needs at least two CSV files".into()));
    }
    let mut curves = Vec::new();
    for p in paths {
        let path = p.as_ref().to_path_buf();
        let records = read_records(&path)?;
        let first = &records[0];
        if records.iter().any(|r| r.label != first.label) {
            return Err(HarnessError::csv(&path, "file mixes several curves"));
        }
        curves.push(Curve {
            label: first.label.clone(),
            algorithm: first.algorithm.clone(),
            path,
            records,
        });
    }
    compare(curves)
}

pub fn compare(mut curves: Vec<Curve>) -> Result<Comparison> {
    if curves.len() < 2 {
        return Err(HarnessError::Usage("compare needs at least two curves".into()));
    }
    let grid: Vec<u64> = curves[0].records.iter().map(|r| r.grid_cost).collect();
    for c in &curves[1..] {
        let other: Vec<u64> = c.records.iter().map(|r| r.grid_cost).collect();
        if other != grid {
            return Err(HarnessError::Config(format!(
                "cost grids differ: {} has {:?}, {} has {:?}",
                curves[0].path.display(),
                grid,
                c.path.display(),
                other
            )));
        }
    }
    let ref_index = curves
        .iter()
        .position(|c| c.algorithm == Algorithm::RcUlmc.as_str())
        .unwrap_or(0);
    let reference = curves.remove(ref_index);
    let series = curves
        .iter()
        .map(|c| {
            let ratios: Vec<f64> = reference
                .records
                .iter()
                .zip(&c.records)
                .map(|(a, b)| if a.error == b.error { 1.0 } else { a.error / b.error })
                .collect();
            let crossover = reference
                .records
                .iter()
                .zip(&c.records)
                .find(|(a, b)| a.error < b.error)
                .map(|(a, _)| a.grid_cost);
            RatioSeries {
                label: c.label.clone(),
                ratios,
                crossover,
            }
        })
        .collect();
    Ok(Comparison {
        grid,
        reference,
        others: curves,
        series,
    })
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reference: {} ({})", self.reference.label, self.reference.path.display())?;
        write!(f, "{:>12} {:>14}", "grid_cost", self.reference.label)?;
        for s in &self.series {
            write!(f, " {:>22}", format!("ratio vs {}", s.label))?;
        }
        writeln!(f)?;
        for (i, g) in self.grid.iter().enumerate() {
            write!(f, "{g:>12} {:>14.6e}", self.reference.records[i].error)?;
            for s in &self.series {
                write!(f, " {:>22.6}", s.ratios[i])?;
            }
            writeln!(f)?;
        }
        for s in &self.series {
            match s.crossover {
                Some(c) => writeln!(f, "crossover vs {}: cost {c}", s.label)?,
                None => writeln!(f, "crossover vs {}: none", s.label)?,
            }
        }
        Ok(())
    }
}
