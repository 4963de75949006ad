//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use superrad::grid::TimeGrid;
use superrad::observables::SnapshotRequest;
use superrad::runner::{Backend, SimulationSpec};
use superrad::{dicke, Model, SqueezedModel, WaveguideModel};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Squeezed {
        gamma: f64,
        zeta: f64,
        n: usize,
    },
    /// Either `phases` (the `k₀ z_j`) or `n` with `spacing`.
    Waveguide {
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spacing: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phases: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendConfig {
    Dicke,
    Dense,
    Mps,
    Meanfield,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub backend: BackendConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bond_dim: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesSection {
    /// Half-chain entanglement entropy `S_half`.
    #[serde(default)]
    pub entropy: bool,
    /// Site pairs for `I_tilde`, `I_ens` and the factorization residual.
    #[serde(default)]
    pub pairs: Vec<(usize, usize)>,
    /// Wineland parameter `xi_R2`.
    #[serde(default)]
    pub squeezing: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub run: RunSection,
    #[serde(default)]
    pub observables: ObservablesSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Number of output samples when `sample_every` is not given.
pub const DEFAULT_SAMPLES: f64 = 200.0;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build_model(&self) -> Result<Model, CliError> {
        let m = match &self.model {
            ModelConfig::Squeezed { gamma, zeta, n } => SqueezedModel::new(*gamma, *zeta, *n)?.into(),
            ModelConfig::Waveguide {
                gamma,
                n,
                spacing,
                phases,
            } => match (n, spacing, phases) {
                (None, None, Some(p)) => WaveguideModel::new(*gamma, p.clone())?.into(),
                (Some(n), Some(s), None) => WaveguideModel::equally_spaced(*gamma, *s, *n)?.into(),
                _ => {
                    return Err(CliError::Config(
                        "model: waveguide needs either `phases` or both `n` and `spacing`".into(),
                    ))
                }
            },
        };
        Ok(m)
    }

    /// The simulation spec for a numerical backend. `workers` is used when
    /// the config does not set one.
    pub fn to_spec(&self, default_workers: usize) -> Result<SimulationSpec, CliError> {
        let model = self.build_model()?;
        let r = &self.run;
        let backend = match r.backend {
            BackendConfig::Dicke => Backend::Dicke,
            BackendConfig::Dense => Backend::Dense,
            BackendConfig::Mps => Backend::Mps,
            BackendConfig::Meanfield => Backend::Meanfield,
            BackendConfig::Analytic => {
                return Err(CliError::Config("run.backend: analytic runs have no time series; use `predict`".into()))
            }
        };
        if r.bond_dim.is_some() && backend != Backend::Mps {
            return Err(CliError::Config("run.bond_dim: only valid for the mps backend".into()));
        }
        if backend == Backend::Dicke && r.n_traj.is_some() {
            return Err(CliError::Config("run.n_traj: the dicke backend has no trajectories".into()));
        }
        if !(r.t_max.is_finite() && r.t_max > 0.0) {
            return Err(CliError::Config(format!("run.t_max: must be positive, got {}", r.t_max)));
        }
        let dt = match (r.dt, &model) {
            (Some(dt), _) => dt,
            (None, Model::Squeezed(m)) if backend == Backend::Dicke => dicke::default_dt(m),
            (None, m) => m.default_trajectory_dt(),
        };
        let sample_every = match r.sample_every {
            Some(s) => s,
            None => dt * (r.t_max / DEFAULT_SAMPLES / dt).round().max(1.0),
        };
        let grid = TimeGrid::new(dt, sample_every, r.t_max)?;
        Ok(SimulationSpec {
            model,
            backend,
            grid,
            n_traj: if backend.is_trajectory() { r.n_traj.unwrap_or(1) } else { 0 },
            bond_dim: r.bond_dim,
            seed: r.seed,
            workers: r.workers.unwrap_or(default_workers),
            request: SnapshotRequest {
                entropy: self.observables.entropy,
                pairs: self.observables.pairs.clone(),
                moments: self.observables.squeezing,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUEEZED: &str = r#"
[model]
kind = "squeezed"
gamma = 1.0
zeta = 0.5
n = 8

[run]
backend = "dense"
t_max = 1.0
sample_every = 0.1
dt = 0.001
n_traj = 10
seed = 3
"#;

    #[test]
    fn parses_and_builds_spec() {
        let c = RunConfig::parse(SQUEEZED).unwrap();
        let s = c.to_spec(4).unwrap();
        assert_eq!(s.grid.n_samples, 11);
        assert_eq!(s.grid.steps_per_sample, 100);
        assert_eq!(s.workers, 4);
        assert_eq!(s.n_traj, 10);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let bad = SQUEEZED.replace("seed = 3", "sede = 3");
        let e = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("sede") && e.contains("line"), "{e}");
        let bad = SQUEEZED.replace("n = 8", "n = 8\nomega = 1.0");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig::parse(SQUEEZED).unwrap();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn incompatible_settings_are_config_errors() {
        let c = RunConfig::parse(&SQUEEZED.replace("n_traj = 10", "n_traj = 10\nbond_dim = 4")).unwrap();
        assert!(matches!(c.to_spec(1), Err(CliError::Config(_))));
        let c = RunConfig::parse(&SQUEEZED.replace("zeta = 0.5", "zeta = 1.5")).unwrap();
        assert!(matches!(c.to_spec(1), Err(CliError::Config(_))));
        let c = RunConfig::parse(&SQUEEZED.replace("sample_every = 0.1", "sample_every = 0.00015")).unwrap();
        assert!(matches!(c.to_spec(1), Err(CliError::Config(_))));
    }

    #[test]
    fn waveguide_forms() {
        let spaced = r#"
[model]
kind = "waveguide"
gamma = 1.0
n = 4
spacing = 0.6283185307179586
[run]
backend = "mps"
t_max = 1.0
bond_dim = 4
"#;
        let m = RunConfig::parse(spaced).unwrap().build_model().unwrap();
        assert_eq!(m.n(), 4);
        let both = spaced.replace("spacing = ", "phases = [0.1]\nspacing = ");
        assert!(RunConfig::parse(&both).unwrap().build_model().is_err());
    }
}
