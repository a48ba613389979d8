//! `key = value` run configuration.

use std::collections::HashSet;
use std::path::PathBuf;

use crate::error::ConfigError;
use crate::model::ModelParams;
use crate::scheme::{InitialData, RunSetup, SolverSettings};

/// Named initial phase field.
#[derive(Debug, Clone, PartialEq)]
pub enum PhasePreset {
    Paper6,
    Constant(f64),
}

/// Named initial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityPreset {
    Paper6,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh_n: usize,
    pub t_final: f64,
    /// Explicit time step; overrides `dt_ratio` when set.
    pub tau: Option<f64>,
    /// `τ = dt_ratio / mesh_n`.
    pub dt_ratio: f64,
    pub gamma: f64,
    pub f_coeffs: Vec<f64>,
    pub b_coeffs: Vec<f64>,
    pub eta_coeffs: Vec<f64>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub energy_tol: f64,
    pub phi0: PhasePreset,
    pub u0: VelocityPreset,
    pub output_dir: PathBuf,
    /// Snapshot period in steps; 0 disables snapshots.
    pub snapshot_every: usize,
    pub levels: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverSettings::default();
        Self {
            mesh_n: 8,
            t_final: 2.0,
            tau: None,
            dt_ratio: 0.025,
            gamma: 1e-3,
            f_coeffs: ModelParams::reference_potential(),
            b_coeffs: ModelParams::reference_mobility(),
            eta_coeffs: ModelParams::reference_viscosity(),
            newton_tol: solver.newton_tol,
            newton_max_iter: solver.newton_max_iter,
            energy_tol: solver.energy_tol,
            phi0: PhasePreset::Paper6,
            u0: VelocityPreset::Paper6,
            output_dir: PathBuf::from("output"),
            snapshot_every: 0,
            levels: 4,
        }
    }
}

const KEYS: [&str; 16] = [
    "mesh_n",
    "T",
    "tau",
    "dt_ratio",
    "gamma",
    "f_coeffs",
    "b_coeffs",
    "eta_coeffs",
    "newton_tol",
    "newton_max_iter",
    "energy_tol",
    "phi0",
    "u0",
    "output_dir",
    "snapshot_every",
    "levels",
];

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse().map_err(|_| ConfigError::Syntax {
        line,
        message: format!("`{key}` expects a number, got `{v}`"),
    })
}

fn parse_usize(line: usize, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| ConfigError::Syntax {
        line,
        message: format!("`{key}` expects a nonnegative integer, got `{v}`"),
    })
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|s| parse_f64(line, key, s.trim())).collect()
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

/// Parse and validate a configuration. Missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), unquote(value.trim()));
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line, key: key.into() });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::DuplicateKey { line, key: key.into() });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("`{key}` has no value"),
            });
        }
        match key {
            "mesh_n" => cfg.mesh_n = parse_usize(line, key, value)?,
            "T" => cfg.t_final = parse_f64(line, key, value)?,
            "tau" => cfg.tau = Some(parse_f64(line, key, value)?),
            "dt_ratio" => cfg.dt_ratio = parse_f64(line, key, value)?,
            "gamma" => cfg.gamma = parse_f64(line, key, value)?,
            "f_coeffs" => cfg.f_coeffs = parse_list(line, key, value)?,
            "b_coeffs" => cfg.b_coeffs = parse_list(line, key, value)?,
            "eta_coeffs" => cfg.eta_coeffs = parse_list(line, key, value)?,
            "newton_tol" => cfg.newton_tol = parse_f64(line, key, value)?,
            "newton_max_iter" => cfg.newton_max_iter = parse_usize(line, key, value)?,
            "energy_tol" => cfg.energy_tol = parse_f64(line, key, value)?,
            "phi0" => {
                cfg.phi0 = match value {
                    "paper6" => PhasePreset::Paper6,
                    v => PhasePreset::Constant(v.parse().map_err(|_| ConfigError::Syntax {
                        line,
                        message: format!("`phi0` expects `paper6` or a number, got `{v}`"),
                    })?),
                }
            }
            "u0" => {
                cfg.u0 = match value {
                    "paper6" => VelocityPreset::Paper6,
                    "zero" => VelocityPreset::Zero,
                    v => {
                        return Err(ConfigError::Syntax {
                            line,
                            message: format!("`u0` expects `paper6` or `zero`, got `{v}`"),
                        })
                    }
                }
            }
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "snapshot_every" => cfg.snapshot_every = parse_usize(line, key, value)?,
            "levels" => cfg.levels = parse_usize(line, key, value)?,
            _ => unreachable!("key list is exhaustive"),
        }
    }
    if seen.contains("tau") && seen.contains("dt_ratio") {
        return Err(ConfigError::Invalid {
            field: "tau",
            message: "give either tau or dt_ratio, not both".into(),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    field,
                    message: format!("must be positive and finite, got {v}"),
                })
            }
        };
        if self.mesh_n == 0 {
            return Err(ConfigError::Invalid {
                field: "mesh_n",
                message: "must be at least 1".into(),
            });
        }
        positive("T", self.t_final)?;
        if let Some(tau) = self.tau {
            positive("tau", tau)?;
        }
        positive("dt_ratio", self.dt_ratio)?;
        positive("newton_tol", self.newton_tol)?;
        positive("energy_tol", self.energy_tol)?;
        if self.newton_max_iter == 0 {
            return Err(ConfigError::Invalid {
                field: "newton_max_iter",
                message: "must be at least 1".into(),
            });
        }
        if self.levels == 0 {
            return Err(ConfigError::Invalid {
                field: "levels",
                message: "must be at least 1".into(),
            });
        }
        if let PhasePreset::Constant(c) = self.phi0 {
            if !c.is_finite() {
                return Err(ConfigError::Invalid {
                    field: "phi0",
                    message: format!("constant must be finite, got {c}"),
                });
            }
        }
        self.model_params()?;
        Ok(())
    }

    pub fn model_params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.gamma, &self.f_coeffs, &self.b_coeffs, &self.eta_coeffs).map_err(|e| {
            ConfigError::Invalid {
                field: "model parameters",
                message: e.to_string(),
            }
        })
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            energy_tol: self.energy_tol,
            ..SolverSettings::default()
        }
    }

    pub fn initial_data(&self) -> InitialData {
        let paper = InitialData::paper6();
        let mut data = match self.phi0 {
            PhasePreset::Paper6 => paper.clone(),
            PhasePreset::Constant(c) => InitialData {
                u: paper.u.clone(),
                grad_u: paper.grad_u.clone(),
                ..InitialData::constant(c, [0.0; 2])
            },
        };
        if self.u0 == VelocityPreset::Zero {
            let zero = InitialData::constant(0.0, [0.0; 2]);
            data.u = zero.u;
            data.grad_u = zero.grad_u;
        }
        data
    }

    /// Mesh subdivisions on refinement level `k`.
    pub fn level_n(&self, k: usize) -> usize {
        self.mesh_n << k
    }

    /// Requested time step on refinement level `k`.
    pub fn level_tau(&self, k: usize) -> f64 {
        let scale = (1u64 << k) as f64;
        match self.tau {
            Some(tau) => tau / scale,
            None => self.dt_ratio / self.level_n(k) as f64,
        }
    }

    pub fn setup(&self, k: usize) -> Result<RunSetup, ConfigError> {
        Ok(RunSetup {
            mesh_n: self.level_n(k),
            t_final: self.t_final,
            tau: self.level_tau(k),
            params: self.model_params()?,
            settings: self.solver_settings(),
            initial: self.initial_data(),
        })
    }
}
