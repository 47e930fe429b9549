//! Run configuration: a single JSON document with every default materialized
//! on load.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use subdiff_core::forward::ProblemSpec;
use subdiff_core::frackernel::TimeGrid;
use subdiff_core::profile::Profile;
use subdiff_core::spectral::SpaceGrid;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub sigma: TimeProfile,
    /// Reaction coefficient of the forward problem, or the true coefficient of
    /// synthetic inverse data.
    #[serde(default)]
    pub q: Option<TimeProfile>,
    #[serde(default)]
    pub source: FieldConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "one")]
    pub t_final: f64,
    pub rho: f64,
    pub n_steps: usize,
    pub n_cells: usize,
    /// Defaults to `min(64, n_cells/4)`.
    #[serde(default)]
    pub modes: Option<usize>,
}

fn one() -> f64 {
    1.0
}

/// Named analytic profiles of time, or samples from a two-column CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    Constant {
        value: f64,
    },
    /// `a + b t`
    Affine {
        a: f64,
        b: f64,
    },
    /// `offset + amplitude · sin(frequency · t + phase)`
    SinusoidalOffset {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `coefficient · t^exponent`
    Power {
        coefficient: f64,
        exponent: f64,
    },
    Sum {
        terms: Vec<TimeProfile>,
    },
    Csv {
        path: PathBuf,
    },
}

impl TimeProfile {
    fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::Affine { a, b } => a + b * t,
            Self::SinusoidalOffset { offset, amplitude, frequency, phase } => offset + amplitude * (frequency * t + phase).sin(),
            Self::Power { coefficient, exponent } => {
                if t == 0.0 && *exponent == 0.0 {
                    *coefficient
                } else {
                    coefficient * t.powf(*exponent)
                }
            }
            Self::Sum { terms } => terms.iter().map(|p| p.eval(t)).sum(),
            Self::Csv { .. } => unreachable!("CSV profiles are resampled, not evaluated"),
        }
    }

    fn has_csv(&self) -> bool {
        match self {
            Self::Csv { .. } => true,
            Self::Sum { terms } => terms.iter().any(Self::has_csv),
            _ => false,
        }
    }

    pub fn sample(&self, grid: TimeGrid, base: &Path) -> Result<Profile, CliError> {
        match self {
            Self::Csv { path } => {
                let pairs = read_pairs(&base.join(path))?;
                Ok(Profile::from_pairs(grid, &pairs)?)
            }
            Self::Sum { terms } if self.has_csv() => {
                let mut acc = vec![0.0; grid.len()];
                for term in terms {
                    for (a, v) in acc.iter_mut().zip(term.sample(grid, base)?.values()) {
                        *a += v;
                    }
                }
                Ok(Profile::new(grid, acc)?)
            }
            _ => Ok(Profile::new(grid, grid.nodes().into_iter().map(|t| self.eval(t)).collect())?),
        }
    }
}

/// `Σ_k a_k(t) √(2/l) sin(kπx/l)`, or a time-major CSV matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    Modes { modes: Vec<SourceMode> },
    Csv { path: PathBuf },
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self::Modes { modes: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceMode {
    pub k: usize,
    pub amplitude: TimeProfile,
}

/// `Σ_k c_k √(2/l) sin(kπx/l)`, or a single-column CSV of nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Modes { modes: Vec<InitialMode> },
    Csv { path: PathBuf },
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self::Modes { modes: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMode {
    pub k: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// Flux generated from the forward problem with `q` as the true coefficient.
    Synthetic {
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Observed flux as `(t, value)` pairs; `psi0` defaults to the smallest sample.
    Csv {
        path: PathBuf,
        #[serde(default)]
        psi0: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    1000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: default_max_iter() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Largest accepted L1 residual of the spectral solution.
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Largest accepted sup-norm gap between the spectral and finite-difference solutions.
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
}

fn default_residual_tol() -> f64 {
    1e-2
}

fn default_gap_tol() -> f64 {
    5e-3
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { residual_tol: default_residual_tol(), gap_tol: default_gap_tol() }
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let rows = read_rows(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(i, r)| match r.as_slice() {
            [t, v] => Ok((*t, *v)),
            _ => Err(CliError::Config(format!("{}: row {} must have two columns", path.display(), i + 2))),
        })
        .collect()
}

/// Numeric rows of a CSV file with a header line.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        let row = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("{}: row {}: {e}", path.display(), i + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

impl RunConfig {
    pub fn from_str(text: &str, origin: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", origin.display(), e.line(), e.column())))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_str(&text, path)
    }

    /// Range checks and default materialization.
    fn resolve(&mut self) -> Result<(), CliError> {
        let p = &mut self.problem;
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(p.length > 0.0 && p.length.is_finite()) {
            return bad(format!("problem.length = {} must be positive", p.length));
        }
        if !(p.t_final > 0.0 && p.t_final.is_finite()) {
            return bad(format!("problem.t_final = {} must be positive", p.t_final));
        }
        if !(p.rho > 0.0 && p.rho < 1.0) {
            return bad(format!("problem.rho = {} must lie in (0, 1)", p.rho));
        }
        if p.n_steps == 0 {
            return bad("problem.n_steps must be positive".into());
        }
        if p.n_cells < 2 || p.n_cells % 2 != 0 {
            return bad(format!("problem.n_cells = {} must be even and at least 2", p.n_cells));
        }
        let max = p.n_cells / 2;
        let k = p.modes.unwrap_or_else(|| (p.n_cells / 4).clamp(1, 64));
        if k == 0 || k > max {
            return bad(format!("problem.modes = {k} must lie in 1..={max}"));
        }
        p.modes = Some(k);
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver.tol and solver.max_iter must be positive".into());
        }
        if let Some(DataConfig::Synthetic { noise, .. }) = &self.data {
            if !(*noise >= 0.0 && *noise < 1.0) {
                return bad(format!("data.noise = {noise} must lie in [0, 1)"));
            }
        }
        let check_modes = |ks: &mut dyn Iterator<Item = usize>| -> Result<(), CliError> {
            for kk in ks {
                if kk == 0 || kk > k {
                    return Err(CliError::Config(format!("mode index {kk} must lie in 1..={k}")));
                }
            }
            Ok(())
        };
        if let FieldConfig::Modes { modes } = &self.source {
            check_modes(&mut modes.iter().map(|m| m.k))?;
        }
        if let InitialConfig::Modes { modes } = &self.initial {
            check_modes(&mut modes.iter().map(|m| m.k))?;
        }
        Ok(())
    }

    pub fn grids(&self) -> Result<(TimeGrid, SpaceGrid), CliError> {
        let p = &self.problem;
        Ok((TimeGrid::new(p.t_final, p.n_steps)?, SpaceGrid::new(p.length, p.n_cells)?))
    }

    /// The problem data; `q` is set when the configuration gives one.
    pub fn problem_spec(&self, base: &Path) -> Result<ProblemSpec, CliError> {
        let (tgrid, sgrid) = self.grids()?;
        let l = self.problem.length;
        let xs = sgrid.nodes();
        let norm = (2.0 / l).sqrt();
        let shape = |k: usize| -> Vec<f64> {
            xs.iter()
                .enumerate()
                .map(|(i, &x)| if i == 0 || i == xs.len() - 1 { 0.0 } else { norm * (PI * k as f64 * x / l).sin() })
                .collect()
        };
        let f = match &self.source {
            FieldConfig::Modes { modes } => {
                let mut f = Array2::zeros((tgrid.len(), sgrid.len()));
                for m in modes {
                    let a = m.amplitude.sample(tgrid, base)?;
                    let s = shape(m.k);
                    for (n, an) in a.values().iter().enumerate() {
                        for (i, si) in s.iter().enumerate() {
                            f[[n, i]] += an * si;
                        }
                    }
                }
                f
            }
            FieldConfig::Csv { path } => {
                let path = base.join(path);
                let rows = read_rows(&path)?;
                if rows.len() != tgrid.len() || rows.iter().any(|r| r.len() != sgrid.len()) {
                    return Err(CliError::Config(format!(
                        "{}: source must be a {} × {} time-major matrix",
                        path.display(),
                        tgrid.len(),
                        sgrid.len()
                    )));
                }
                Array2::from_shape_fn((tgrid.len(), sgrid.len()), |(n, i)| rows[n][i])
            }
        };
        let phi = match &self.initial {
            InitialConfig::Modes { modes } => {
                let mut phi = vec![0.0; sgrid.len()];
                for m in modes {
                    for (p, s) in phi.iter_mut().zip(shape(m.k)) {
                        *p += m.amplitude * s;
                    }
                }
                phi
            }
            InitialConfig::Csv { path } => {
                let path = base.join(path);
                let rows = read_rows(&path)?;
                if rows.len() != sgrid.len() || rows.iter().any(|r| r.len() != 1) {
                    return Err(CliError::Config(format!(
                        "{}: initial datum must be one column of {} values",
                        path.display(),
                        sgrid.len()
                    )));
                }
                rows.into_iter().map(|r| r[0]).collect()
            }
        };
        let sigma = self.sigma.sample(tgrid, base)?;
        let q = self.q.as_ref().map(|q| q.sample(tgrid, base)).transpose()?;
        Ok(ProblemSpec { rho: self.problem.rho, tgrid, sgrid, sigma, q, f, phi, k_modes: self.problem.modes.unwrap_or(1) })
    }
}
