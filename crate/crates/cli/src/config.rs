//! TOML run configuration: sections [geometry], [perturbation], [numerics]
//! and [task]. Unknown keys are rejected.

use crate::RunError;
use conispec::cone_kernels::{ConePoint, Sign};
use conispec::cross_section::{check_hyp2, CrossSectionKind, CrossSectionSpec, ModeSpectrum};
use conispec::numerics::logspace;
use conispec::radial::{Perturbation, RadialModel};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub task: Task,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub n: usize,
    /// sphere | circle | custom | discretized_circle
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default)]
    pub v0: f64,
    pub l_max: Option<usize>,
    pub length: Option<f64>,
    /// (ν, multiplicity) pairs for `custom`
    pub modes: Option<Vec<(f64, usize)>>,
    pub volume: Option<f64>,
    pub v0_samples: Option<Vec<f64>>,
    pub grid: Option<usize>,
}

fn default_kind() -> String {
    "sphere".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    /// none | bump | tabulated
    #[serde(default = "default_none")]
    pub kind: String,
    pub center: Option<f64>,
    pub width: Option<f64>,
    pub amplitude: Option<f64>,
    /// two-column (r, W) CSV, relative to the config file
    pub file: Option<PathBuf>,
    pub r: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig { kind: default_none(), center: None, width: None, amplitude: None, file: None, r: None, w: None }
    }
}

fn default_none() -> String {
    "none".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub r_match: Option<f64>,
    pub r_min: Option<f64>,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics { tol: default_tol(), r_match: None, r_min: None }
    }
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub lambdas: Option<Vec<f64>>,
    /// [first, last, count]
    pub lambda_range: Option<(f64, f64, usize)>,
    /// log (default) | linear
    pub lambda_spacing: Option<String>,
    /// (r, θ)
    pub left: Option<(f64, f64)>,
    pub right: Option<(f64, f64)>,
    /// outgoing | incoming
    pub sign: Option<String>,
    /// schrodinger | wave_sin | wave_cos
    pub kind: Option<String>,
    pub lambda_c: Option<f64>,
    pub times: Option<Vec<f64>>,
    /// [first, last, count], log spaced
    pub time_range: Option<(f64, f64, usize)>,
    pub panels: Option<usize>,
    pub radii: Option<Vec<f64>>,
    /// fit-decay input CSV with columns t, re, im
    pub input: Option<PathBuf>,
    pub predicted_exponent: Option<f64>,
    pub predicted_coefficient: Option<(f64, f64)>,
    pub nu: Option<f64>,
    pub r0: Option<f64>,
    pub r_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub sigma: Option<f64>,
    pub r: Option<f64>,
    pub r_prime: Option<f64>,
    pub expressions: Option<Vec<String>>,
    /// great_circle | torus
    pub geodesic: Option<String>,
    pub y0: Option<Vec<f64>>,
    pub eta0: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub step: Option<f64>,
}

/// Parsed config plus the raw table for echoing and the directory that
/// relative paths resolve against.
pub struct Loaded {
    pub config: RunConfig,
    pub raw: toml::Table,
    pub dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::config(format!("cannot read {}: {e}", path.display())))?;
    let raw: toml::Table = text.parse().map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, raw, dir })
}

impl RunConfig {
    pub fn geometry(&self) -> Result<&Geometry, RunError> {
        self.geometry.as_ref().ok_or_else(|| RunError::config("this command needs a [geometry] section"))
    }

    pub fn cross_section(&self, l_max_override: Option<usize>) -> Result<CrossSectionSpec, RunError> {
        let g = self.geometry()?;
        let kind = match g.kind.as_str() {
            "sphere" => CrossSectionKind::Sphere,
            "circle" => CrossSectionKind::Circle { length: g.length.unwrap_or(2.0 * std::f64::consts::PI) },
            "custom" => CrossSectionKind::Custom {
                modes: g.modes.clone().ok_or_else(|| RunError::config("custom geometry needs `modes`"))?,
                volume: g.volume.ok_or_else(|| RunError::config("custom geometry needs `volume`"))?,
            },
            "discretized_circle" => {
                let v0_samples = g.v0_samples.clone().ok_or_else(|| RunError::config("discretized_circle needs `v0_samples`"))?;
                let grid = g.grid.unwrap_or(v0_samples.len());
                CrossSectionKind::DiscretizedCircle { v0_samples, grid }
            }
            other => return Err(RunError::config(format!("unknown geometry kind '{other}'"))),
        };
        let default_l = if matches!(kind, CrossSectionKind::DiscretizedCircle { .. }) { 31 } else { 60 };
        Ok(CrossSectionSpec { n: g.n, kind, v0: g.v0, l_max: l_max_override.or(g.l_max).unwrap_or(default_l) })
    }

    /// Builds the spectrum; a ν₀² ≤ 0 cross-section fails here.
    pub fn spectrum(&self, l_max_override: Option<usize>) -> Result<ModeSpectrum, RunError> {
        Ok(check_hyp2(&self.cross_section(l_max_override)?)?)
    }

    pub fn perturbation(&self, dir: &Path) -> Result<Perturbation, RunError> {
        let p = &self.perturbation;
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| RunError::config(format!("bump perturbation needs `{k}`")));
        Ok(match p.kind.as_str() {
            "none" => Perturbation::None,
            "bump" => Perturbation::bump(need(p.center, "center")?, need(p.width, "width")?, need(p.amplitude, "amplitude")?)?,
            "tabulated" => match (&p.file, &p.r, &p.w) {
                (Some(f), None, None) => Perturbation::from_csv(&dir.join(f))?,
                (None, Some(r), Some(w)) => Perturbation::tabulated(r.clone(), w.clone())?,
                _ => return Err(RunError::config("tabulated perturbation needs either `file` or both `r` and `w`")),
            },
            other => return Err(RunError::config(format!("unknown perturbation kind '{other}'"))),
        })
    }

    pub fn model(&self, dir: &Path, spectrum: ModeSpectrum) -> Result<RadialModel, RunError> {
        let mut m = RadialModel::new(spectrum, self.perturbation(dir)?, self.numerics.tol)?;
        if let Some(r) = self.numerics.r_match {
            m = m.with_r_match(r)?;
        }
        if let Some(r) = self.numerics.r_min {
            m = m.with_r_min(r)?;
        }
        Ok(m)
    }

    pub fn lambdas(&self) -> Result<Vec<f64>, RunError> {
        let t = &self.task;
        let v = match (&t.lambdas, t.lambda_range) {
            (Some(l), None) => l.clone(),
            (None, Some((a, b, n))) => match t.lambda_spacing.as_deref().unwrap_or("log") {
                "log" => {
                    if !(a > 0.0 && b > a) {
                        return Err(RunError::config("log lambda_range needs 0 < first < last"));
                    }
                    logspace(a, b, n)
                }
                "linear" => (0..n).map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
                other => return Err(RunError::config(format!("unknown lambda_spacing '{other}'"))),
            },
            (Some(_), Some(_)) => return Err(RunError::config("give either `lambdas` or `lambda_range`, not both")),
            (None, None) => return Err(RunError::config("this command needs `lambdas` or `lambda_range` in [task]")),
        };
        if v.is_empty() || v.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(RunError::config("lambda values must be positive and finite"));
        }
        Ok(v)
    }

    pub fn times(&self) -> Result<Vec<f64>, RunError> {
        let t = &self.task;
        let v = match (&t.times, t.time_range) {
            (Some(l), None) => l.clone(),
            (None, Some((a, b, n))) => {
                if !(a > 0.0 && b > a && n >= 2) {
                    return Err(RunError::config("time_range needs 0 < first < last and count >= 2"));
                }
                logspace(a, b, n)
            }
            (Some(_), Some(_)) => return Err(RunError::config("give either `times` or `time_range`, not both")),
            (None, None) => return Err(RunError::config("this command needs `times` or `time_range` in [task]")),
        };
        if v.is_empty() || v.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(RunError::config("times must be positive and finite"));
        }
        Ok(v)
    }

    /// Left point, default (1, 0); right defaults to left.
    pub fn points(&self) -> Result<(ConePoint, ConePoint), RunError> {
        let (lr, lt) = self.task.left.unwrap_or((1.0, 0.0));
        let (rr, rt) = self.task.right.unwrap_or((lr, lt));
        let l = ConePoint::new(lr, lt).map_err(|e| RunError::config(e.to_string()))?;
        let r = ConePoint::new(rr, rt).map_err(|e| RunError::config(e.to_string()))?;
        Ok((l, r))
    }

    pub fn sign(&self) -> Result<Sign, RunError> {
        match self.task.sign.as_deref().unwrap_or("outgoing") {
            "outgoing" | "+" => Ok(Sign::Outgoing),
            "incoming" | "-" => Ok(Sign::Incoming),
            other => Err(RunError::config(format!("unknown sign '{other}'"))),
        }
    }
}
