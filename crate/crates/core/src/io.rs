//! Versioned JSON files for bodies, measures and solve reports.

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::body::{Estimate, SupportVector};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::grid::DirectionGrid;
use crate::measure::DiscreteSphereMeasure;
use crate::solver::{Residual, SolveReport, SolverConfig, Validation};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub geometry: Geometry,
    pub grid: Vec<Vec<f64>>,
    pub f: Vec<f64>,
}

impl BodyFile {
    pub fn new(geometry: Geometry, f: &SupportVector) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            geometry,
            grid: f.grid.dirs().to_vec(),
            f: f.values.clone(),
        }
    }

    pub fn support_vector(&self) -> Result<SupportVector> {
        check_version(self.format_version)?;
        let grid = DirectionGrid::from_unnormalized(self.grid.clone(), "file")?;
        check_dim(&grid, self.geometry)?;
        SupportVector::new(grid, self.f.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub u: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub geometry: Geometry,
    pub atoms: Vec<Atom>,
    /// Per-atom standard errors of a sampled measure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
}

impl MeasureFile {
    pub fn new(geometry: Geometry, mu: &DiscreteSphereMeasure) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            geometry,
            atoms: mu
                .grid
                .dirs()
                .iter()
                .zip(&mu.weights)
                .map(|(u, w)| Atom { u: u.clone(), w: *w })
                .collect(),
            stderr: None,
        }
    }

    /// Atoms that fail to positively span lie in a closed hemisphere and are reported as such.
    pub fn measure(&self) -> Result<DiscreteSphereMeasure> {
        check_version(self.format_version)?;
        let grid = DirectionGrid::from_unnormalized(self.atoms.iter().map(|a| a.u.clone()).collect(), "file").map_err(|e| match e {
            Error::NotSpanning => Error::HemisphereConcentration { margin: 0.0 },
            e => e,
        })?;
        check_dim(&grid, self.geometry)?;
        DiscreteSphereMeasure::new(grid, self.atoms.iter().map(|a| a.w).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub geometry: Geometry,
    pub grid: Vec<Vec<f64>>,
    pub f_out: Vec<f64>,
    pub achieved: Vec<f64>,
    pub residual: Residual,
    pub phi_trace: Vec<f64>,
    pub max_support_trace: Vec<f64>,
    pub validation: Validation,
    pub radius_bound_held: bool,
    pub mass_exponent: Estimate,
    pub dilation: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub experimental: bool,
    pub config: SolverConfig,
}

impl ReportFile {
    pub fn new(report: &SolveReport, config: &SolverConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            geometry: config.geometry,
            grid: report.f_out.grid.dirs().to_vec(),
            f_out: report.f_out.values.clone(),
            achieved: report.achieved.weights.clone(),
            residual: report.residual.clone(),
            phi_trace: report.phi_trace.clone(),
            max_support_trace: report.max_support_trace.clone(),
            validation: report.validation.clone(),
            radius_bound_held: report.radius_bound_held,
            mass_exponent: report.mass_exponent,
            dilation: report.dilation,
            sweeps: report.sweeps,
            converged: report.converged,
            experimental: report.experimental,
            config: config.clone(),
        }
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::InvalidInput(format!("unsupported format_version {v}")));
    }
    Ok(())
}

fn check_dim(grid: &DirectionGrid, geometry: Geometry) -> Result<()> {
    if grid.dim() != geometry.dir_dim() {
        return Err(Error::DimensionMismatch {
            expected: geometry.dir_dim(),
            got: grid.dim(),
        });
    }
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))
}
