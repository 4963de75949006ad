//! Reproducible trajectory ensembles and backend comparison.
//!
//! Trajectory `i` always draws from `seed_trajectory(seed, i)`. Indices are
//! processed in fixed chunks of [`CHUNK`]; chunk accumulators are merged
//! in chunk order, so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dicke::{self, MasterOptions};
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::model::Model;
use crate::noise::seed_trajectory;
use crate::observables::{
    averaged_trajectory_entropies, factorization_residual, names, EnsembleAccumulator, ObservableSeries, RunMeta,
    Snapshot, SnapshotRequest,
};
use crate::{dense, meanfield, mps};

pub const CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dicke,
    Dense,
    Mps,
    Meanfield,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Dicke => "dicke",
            Backend::Dense => "dense",
            Backend::Mps => "mps",
            Backend::Meanfield => "meanfield",
        }
    }

    pub fn is_trajectory(self) -> bool {
        !matches!(self, Backend::Dicke)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub model: Model,
    pub backend: Backend,
    pub grid: TimeGrid,
    pub n_traj: usize,
    /// Required for [`Backend::Mps`].
    pub bond_dim: Option<usize>,
    pub seed: u64,
    pub workers: usize,
    pub request: SnapshotRequest,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Trajectories whose discarded weight exceeded the flag threshold.
    pub flagged: usize,
    pub max_discarded: f64,
    pub mean_discarded: f64,
    /// Largest trace deviation of the master-equation solver.
    pub max_trace_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: ObservableSeries,
    pub diagnostics: Diagnostics,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        let model_name = self.model.name();
        let cap = |reason: &str| Error::Capability {
            backend: self.backend.name().into(),
            model: model_name.into(),
            reason: reason.into(),
        };
        match self.backend {
            Backend::Dicke => {
                if !matches!(self.model, Model::Squeezed(_)) {
                    return Err(cap("the symmetric-sector solver needs a permutation-symmetric model"));
                }
                if self.request.entropy || !self.request.pairs.is_empty() {
                    return Err(cap("trajectory entropies are not defined for the master equation"));
                }
            }
            Backend::Dense if self.model.n() > dense::DENSE_CAP => {
                return Err(Error::Capacity {
                    n: self.model.n(),
                    cap: dense::DENSE_CAP,
                });
            }
            Backend::Mps => match self.bond_dim {
                None => return Err(invalid("bond_dim", "required for the mps backend")),
                Some(0) => return Err(invalid("bond_dim", "must be at least 1")),
                _ => {}
            },
            Backend::Meanfield if self.request.moments => {
                return Err(cap("spin squeezing needs exact second moments, not factorized correlators"));
            }
            _ => {}
        }
        if self.backend.is_trajectory() && self.n_traj == 0 {
            return Err(invalid("n_traj", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        let n = self.model.n();
        for &(j, l) in &self.request.pairs {
            if j == l || j >= n || l >= n {
                return Err(invalid("pairs", format!("({j}, {l}) for n = {n}")));
            }
        }
        Ok(())
    }

    fn meta(&self) -> RunMeta {
        RunMeta {
            backend: self.backend.name().into(),
            model: self.model.name().into(),
            n: self.model.n(),
            seed: self.backend.is_trajectory().then_some(self.seed),
            n_traj: self.backend.is_trajectory().then_some(self.n_traj),
            dt: self.grid.dt,
            bond_dim: match self.backend {
                Backend::Mps => self.bond_dim,
                Backend::Meanfield => Some(1),
                _ => None,
            },
        }
    }
}

/// One trajectory's snapshots and discarded weight.
pub type TrajectoryResult = (Vec<Snapshot>, f64);

/// Runs `n_traj` trajectories on `workers` threads and reduces them in
/// index order.
pub fn accumulate<F>(n_traj: usize, workers: usize, run: F) -> Result<(EnsembleAccumulator, Vec<f64>)>
where
    F: Fn(usize) -> Result<TrajectoryResult> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter {
            name: "workers".into(),
            reason: e.to_string(),
        })?;
    let chunks: Vec<(usize, usize)> = (0..n_traj.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n_traj)))
        .collect();
    let partial: Vec<Result<(EnsembleAccumulator, Vec<f64>)>> = pool.install(|| {
        chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc = EnsembleAccumulator::new(n_traj);
                let mut disc = Vec::with_capacity(hi - lo);
                for i in lo..hi {
                    let (snaps, d) = run(i)?;
                    acc.add(i, &snaps);
                    disc.push(d);
                }
                Ok((acc, disc))
            })
            .collect()
    });
    let mut total = EnsembleAccumulator::new(n_traj);
    let mut discarded = Vec::with_capacity(n_traj);
    for p in partial {
        let (acc, d) = p?;
        total.merge(&acc);
        discarded.extend(d);
    }
    Ok((total, discarded))
}

/// Ensemble series: `<Sz>/N`, `R/N`, and the requested entropies, pair
/// informations, factorization residuals and squeezing, with errors.
pub fn series_from_accumulator(acc: &EnsembleAccumulator, times: Vec<f64>, meta: RunMeta, req: &SnapshotRequest) -> ObservableSeries {
    let n = meta.n as f64;
    let mut s = ObservableSeries::new(times, meta);
    let split = |v: Vec<(f64, f64)>, scale: f64| -> (Vec<f64>, Vec<f64>) { v.into_iter().map(|(m, e)| (m * scale, e * scale)).unzip() };
    let (v, e) = split(acc.sz(), 1.0 / n);
    s.push(names::SZ, v, Some(e));
    let (v, e) = split(acc.rate(), 1.0 / n);
    s.push(names::RATE, v, Some(e));
    if req.entropy || !req.pairs.is_empty() {
        let ent = averaged_trajectory_entropies(acc);
        if req.entropy {
            let (v, e) = split(ent.iter().map(|x| x.s_half.unwrap_or((f64::NAN, f64::NAN))).collect(), 1.0);
            s.push(names::S_HALF, v, Some(e));
        }
        for (p, &(j, l)) in req.pairs.iter().enumerate() {
            let (v, e) = split(ent.iter().map(|x| x.i_tilde[p]).collect(), 1.0);
            s.push(names::i_tilde(j, l), v, Some(e));
            let (v, e) = split(ent.iter().map(|x| x.i_ensemble[p]).collect(), 1.0);
            s.push(names::i_ensemble(j, l), v, Some(e));
            let (v, e) = split(factorization_residual(acc, p), 1.0);
            s.push(names::residual(j, l), v, Some(e));
        }
    }
    if req.moments {
        let (v, e) = split(acc.squeezing(), 1.0);
        s.push(names::XI, v, Some(e));
    }
    s
}

/// Runs a simulation described by `spec`.
pub fn simulate(spec: &SimulationSpec) -> Result<RunOutput> {
    spec.validate()?;
    let model = &spec.model;
    let grid = &spec.grid;
    let req = &spec.request;
    if spec.backend == Backend::Dicke {
        let Model::Squeezed(m) = model else { unreachable!("validated") };
        let run = dicke::evolve_master(
            m,
            grid,
            MasterOptions {
                moments: req.moments,
                validate_each_sample: false,
            },
        )?;
        run.final_state.validate(1e-8)?;
        return Ok(RunOutput {
            series: run.to_series(),
            diagnostics: Diagnostics {
                max_trace_error: Some(run.max_trace_error),
                ..Default::default()
            },
        });
    }
    let seed = spec.seed;
    let bond = spec.bond_dim.unwrap_or(1);
    let (acc, discarded) = accumulate(spec.n_traj, spec.workers, |i| {
        let mut stream = seed_trajectory(seed, i as u64);
        match spec.backend {
            Backend::Dense => Ok((dense::run_trajectory(model, grid, req, &mut stream)?, 0.0)),
            Backend::Mps => {
                let t = mps::run_trajectory(model, grid, bond, req, &mut stream)?;
                Ok((t.snapshots, t.discarded))
            }
            Backend::Meanfield => Ok((meanfield::run_trajectory(model, grid, req, &mut stream)?, 0.0)),
            Backend::Dicke => unreachable!(),
        }
    })?;
    let diagnostics = Diagnostics {
        flagged: discarded.iter().filter(|&&d| d > mps::DISCARD_FLAG).count(),
        max_discarded: discarded.iter().cloned().fold(0.0, f64::max),
        mean_discarded: discarded.iter().sum::<f64>() / discarded.len().max(1) as f64,
        max_trace_error: None,
    };
    Ok(RunOutput {
        series: series_from_accumulator(&acc, grid.times(), spec.meta(), req),
        diagnostics,
    })
}

/// Absolute slack added to the `tol·σ` threshold so that points with zero
/// combined error compare exactly up to rounding.
pub const COMPARE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub observable: String,
    pub tolerance_sigma: f64,
    pub points: usize,
    pub max_abs_deviation: f64,
    /// Largest `|a - b|/σ` over points with nonzero combined error.
    pub max_sigma: f64,
    pub failures: usize,
    pub pass: bool,
    pub deviations: Vec<f64>,
}

/// Pointwise comparison of one observable; passes when every
/// `|a - b| ≤ tol·sqrt(σa² + σb²) + COMPARE_FLOOR`.
pub fn compare_series(a: &ObservableSeries, b: &ObservableSeries, observable: &str, tol: f64) -> Result<CompareReport> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(invalid("tol", format!("must be non-negative, got {tol}")));
    }
    if a.times.len() != b.times.len() {
        return Err(Error::DimensionMismatch {
            expected: a.times.len(),
            got: b.times.len(),
        });
    }
    if let Some(k) = a
        .times
        .iter()
        .zip(&b.times)
        .position(|(x, y)| (x - y).abs() > 1e-9 * x.abs().max(1.0))
    {
        return Err(invalid("times", format!("grids differ at sample {k}: {} vs {}", a.times[k], b.times[k])));
    }
    let ca = a
        .column(observable)
        .ok_or_else(|| invalid("observable", format!("`{observable}` missing from first series")))?;
    let cb = b
        .column(observable)
        .ok_or_else(|| invalid("observable", format!("`{observable}` missing from second series")))?;
    let err = |c: &crate::observables::Column, k: usize| c.errors.as_ref().map_or(0.0, |e| e[k]);
    let mut report = CompareReport {
        observable: observable.into(),
        tolerance_sigma: tol,
        points: a.times.len(),
        max_abs_deviation: 0.0,
        max_sigma: 0.0,
        failures: 0,
        pass: true,
        deviations: Vec::with_capacity(a.times.len()),
    };
    for k in 0..a.times.len() {
        let d = ca.values[k] - cb.values[k];
        let sigma = err(ca, k).hypot(err(cb, k));
        report.deviations.push(d);
        report.max_abs_deviation = report.max_abs_deviation.max(d.abs());
        if sigma > 0.0 {
            report.max_sigma = report.max_sigma.max(d.abs() / sigma);
        }
        if !(d.abs() <= tol * sigma + COMPARE_FLOOR) {
            report.failures += 1;
        }
    }
    report.pass = report.failures == 0;
    Ok(report)
}
