//! End-to-end numerical studies producing CSV tables and fitted rates.

mod config;
mod fit;
mod runners;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

pub use config::{ExperimentConfig, ExperimentId, Kind, ParamSpec, ParamValue, DEFAULT_SEED};
pub use fit::{fit_rate, trimmed_window, RateEstimate, MIN_R_SQUARED};

use crate::error::{Error, Result};
use crate::problems::InverseProblem;
use crate::regularizers::{tikhonov, RegularizedSolution};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A named table written as one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Dataset {
    pub fn new<S: Into<String>>(name: &str, columns: impl IntoIterator<Item = S>) -> Self {
        Dataset {
            name: name.to_string(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; non-numeric cells are skipped.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.column_index(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match &r[i] {
                Cell::Num(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn texts(&self, name: &str) -> Vec<String> {
        let Some(i) = self.column_index(name) else {
            return Vec::new();
        };
        self.rows.iter().map(|r| r[i].render()).collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub id: ExperimentId,
    pub datasets: Vec<Dataset>,
    pub fits: BTreeMap<String, RateEstimate>,
    /// Scalar diagnostics (boundary ratios, deviations, theoretical values).
    pub metrics: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
    pub seed: u64,
}

impl ExperimentReport {
    pub fn dataset(&self, name: &str) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.name == name)
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let fits: serde_json::Map<String, serde_json::Value> = self
            .fits
            .iter()
            .map(|(k, f)| {
                (
                    k.clone(),
                    json!({
                        "slope": f.slope,
                        "intercept": f.intercept,
                        "r_squared": f.r_squared,
                        "window": [f.window.0, f.window.1],
                    }),
                )
            })
            .collect();
        json!({
            "experiment": self.id.as_str(),
            "fits": fits,
            "metrics": self.metrics,
            "config": self.config.echo(),
            "seed": self.seed,
        })
    }

    /// Writes every dataset as `<name>.csv` plus `summary.json` into
    /// `out_dir` (created if needed) and returns the written paths.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(out_dir)?;
        let mut paths = Vec::new();
        for d in &self.datasets {
            let path = out_dir.join(format!("{}.csv", d.name));
            fs::write(&path, d.to_csv()?)?;
            paths.push(path);
        }
        let path = out_dir.join("summary.json");
        fs::write(
            &path,
            serde_json::to_string_pretty(&self.summary_json())? + "\n",
        )?;
        paths.push(path);
        Ok(paths)
    }
}

/// Runs one experiment on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let (datasets, fits, metrics) = match config.id {
        ExperimentId::BoundaryEffect => runners::boundary_effect(config)?,
        ExperimentId::AscCurves => runners::asc_curves(config)?,
        ExperimentId::DiscreteAsc => runners::discrete_asc(config)?,
        ExperimentId::SourceGrowth => runners::source_growth(config)?,
        ExperimentId::RateTable => runners::rate_table(config)?,
        ExperimentId::HighOrderSaturation => runners::high_order_saturation(config)?,
        ExperimentId::OversmoothingRate => runners::oversmoothing_rate(config)?,
        ExperimentId::LandweberVsTikhonov => runners::landweber_vs_tikhonov(config)?,
    };
    Ok(ExperimentReport {
        id: config.id,
        datasets,
        fits,
        metrics,
        config: config.clone(),
        seed: config.seed,
    })
}

/// Residual and error of noise-free classical Tikhonov divided by `alpha`.
#[derive(Debug, Clone)]
pub struct SaturationProbe {
    pub table: Dataset,
    pub residual_ratio: (f64, f64),
    pub error_ratio: (f64, f64),
}

pub fn saturation_probe(problem: &InverseProblem, alpha_grid: &[f64]) -> Result<SaturationProbe> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidParameter("alpha grid is empty".into()));
    }
    let mut table = Dataset::new(
        "saturation_probe",
        ["alpha", "residual_over_alpha", "error_over_alpha"],
    );
    let mut rr = (f64::INFINITY, 0.0f64);
    let mut er = (f64::INFINITY, 0.0f64);
    for &alpha in alpha_grid {
        let sol: RegularizedSolution = tikhonov(problem, problem.y_exact(), alpha, 0)?;
        let r = sol.residual_norm / alpha;
        let e = sol.error_norm.unwrap_or(f64::NAN) / alpha;
        rr = (rr.0.min(r), rr.1.max(r));
        er = (er.0.min(e), er.1.max(e));
        table.push(vec![alpha.into(), r.into(), e.into()]);
    }
    Ok(SaturationProbe {
        table,
        residual_ratio: rr,
        error_ratio: er,
    })
}
