//! Run summaries, written as TOML.

use serde::{Deserialize, Serialize};
use superrad::analytic::PeakPrediction;
use superrad::dicke;
use superrad::observables::names;
use superrad::runner::{Diagnostics, RunOutput, SimulationSpec};

use crate::config::RunConfig;

pub const SUMMARY_SCHEMA: &str = "superrad-summary v1";

/// Settings filled in from defaults, so the run can be repeated exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub dt: f64,
    pub sample_every: f64,
    pub n_samples: usize,
    pub n_traj: usize,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSummary {
    pub t_star: f64,
    pub r_star: f64,
    pub s_z_star: f64,
    /// Standard error of `R` at the nearest sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadySummary {
    pub t: f64,
    pub sz_over_n: f64,
    /// `2<Sz> + N`.
    pub residual_excitation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_excitation_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnError {
    pub name: String,
    pub max_se: f64,
    pub mean_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub peak: PeakPrediction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_excitation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak: Option<PeakSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub errors: Vec<ColumnError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved: Option<Resolved>,
    pub config: RunConfig,
}

impl RunSummary {
    pub fn from_run(config: &RunConfig, spec: &SimulationSpec, out: &RunOutput, wall: f64) -> Self {
        let s = &out.series;
        let n = s.meta.n as f64;
        let (peak, peak_error) = match dicke::find_peak(s) {
            Ok(p) => {
                let rate_err = s.column(names::RATE).and_then(|c| c.errors.as_ref());
                let k = nearest(&s.times, p.t_star);
                (
                    Some(PeakSummary {
                        t_star: p.t_star,
                        r_star: p.r_star,
                        s_z_star: p.s_z_star,
                        r_star_err: rate_err.map(|e| e[k] * n),
                    }),
                    None,
                )
            }
            Err(e) => (None, Some(e.to_string())),
        };
        let last = s.times.len() - 1;
        let sz = s.column(names::SZ).expect("series has Sz");
        let steady = SteadySummary {
            t: s.times[last],
            sz_over_n: sz.values[last],
            residual_excitation: n * (2.0 * sz.values[last] + 1.0),
            residual_excitation_err: sz.errors.as_ref().map(|e| 2.0 * n * e[last]),
            xi_r2: s.values(names::XI).map(|v| v[last]),
        };
        let errors = s
            .columns
            .iter()
            .filter_map(|c| {
                let e = c.errors.as_ref()?;
                let finite: Vec<f64> = e.iter().cloned().filter(|x| x.is_finite()).collect();
                Some(ColumnError {
                    name: c.name.clone(),
                    max_se: finite.iter().cloned().fold(0.0, f64::max),
                    mean_se: finite.iter().sum::<f64>() / finite.len().max(1) as f64,
                })
            })
            .collect();
        Self {
            schema: SUMMARY_SCHEMA.into(),
            wall_time_s: wall,
            n_traj: s.meta.n_traj,
            peak,
            peak_error,
            steady: Some(steady),
            prediction: None,
            diagnostics: Some(out.diagnostics.clone()),
            errors,
            resolved: Some(Resolved {
                dt: spec.grid.dt,
                sample_every: spec.grid.sample_interval(),
                n_samples: spec.grid.n_samples,
                n_traj: spec.n_traj,
                workers: spec.workers,
            }),
            config: config.clone(),
        }
    }

    pub fn from_prediction(config: &RunConfig, peak: &PeakPrediction, steady: Option<f64>, wall: f64) -> Self {
        Self {
            schema: SUMMARY_SCHEMA.into(),
            wall_time_s: wall,
            n_traj: None,
            peak: Some(PeakSummary {
                t_star: peak.t_star,
                r_star: peak.r_star,
                s_z_star: peak.s_z_star,
                r_star_err: None,
            }),
            peak_error: None,
            steady: None,
            prediction: Some(PredictionSummary {
                peak: *peak,
                steady_excitation: steady,
            }),
            diagnostics: None,
            errors: Vec::new(),
            resolved: None,
            config: config.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

fn nearest(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map_or(0, |(k, _)| k)
}
