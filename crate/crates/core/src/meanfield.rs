//! Product-state (bond dimension one) trajectories.
//!
//! For the squeezed model every site shares one Bloch vector per
//! trajectory. Complex channel noise `dW` maps to the real pair of the
//! Bloch equations through [`crate::noise::real_pair`].

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg;
use crate::model::{pauli, Mat2, Model, SqueezedModel, WaveguideModel};
use crate::noise::{real_pair, NoiseStream};
use crate::observables::{
    self, names, EnsembleAccumulator, ObservableSeries, PairRdm, RunMeta, Snapshot, SnapshotRequest,
};

/// Reflection margin for the polar angle.
pub const THETA_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const EXCITED: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn length(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let l = self.length();
        Self::new(self.x / l, self.y / l, self.z / l)
    }

    /// `(I + x σˣ + y σʸ + z σᶻ)/2`.
    pub fn density(self) -> Mat2 {
        let [sx, sy, sz] = pauli::xyz();
        (pauli::identity() + sx * C64::from(self.x) + sy * C64::from(self.y) + sz * C64::from(self.z))
            * C64::from(0.5)
    }

    /// Polar angles with `x = sinθ cosφ`, `y = sinθ sinφ`, `z = cosθ`.
    pub fn angles(self) -> BlochAngles {
        let v = self.normalized();
        let phi = v.y.atan2(v.x).rem_euclid(std::f64::consts::TAU);
        BlochAngles {
            theta: v.z.clamp(-1.0, 1.0).acos(),
            phi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    pub fn to_vector(self) -> BlochVector {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        BlochVector::new(st * cp, st * sp, ct)
    }
}

/// Drift of the squeezed Bloch equations.
pub fn squeezed_drift(s: BlochVector, model: &SqueezedModel) -> [f64; 3] {
    let (g, z) = (model.gamma, model.zeta);
    let coll = 0.5 * g * z * (model.n as f64 - 1.0);
    [
        -0.5 * g * z * z * s.x + coll * s.z * s.x,
        -0.5 * g * s.y + coll * s.z * s.y,
        -0.5 * g * ((z * z + 1.0) * s.z + 2.0 * z) - coll * (s.x * s.x + s.y * s.y),
    ]
}

/// Coefficients of `(dWa, dWb)` in the squeezed Bloch equations.
pub fn squeezed_noise(s: BlochVector, model: &SqueezedModel) -> ([f64; 3], [f64; 3]) {
    let (r, z) = ((0.5 * model.gamma).sqrt(), model.zeta);
    let a = [
        r * (z * s.z + 1.0 - s.x * s.x),
        -r * s.x * s.y,
        -r * (z + s.z) * s.x,
    ];
    let b = [
        r * z * s.x * s.y,
        -r * (s.z + z - z * s.y * s.y),
        r * (1.0 + z * s.z) * s.y,
    ];
    (a, b)
}

/// Euler–Maruyama step of the squeezed Bloch equations followed by
/// projection to unit length.
pub fn mf_step_squeezed(s: BlochVector, model: &SqueezedModel, dt: f64, dwa: f64, dwb: f64) -> BlochVector {
    let d = squeezed_drift(s, model);
    let (a, b) = squeezed_noise(s, model);
    let f = |i: usize| d[i] * dt + a[i] * dwa + b[i] * dwb;
    BlochVector::new(s.x + f(0), s.y + f(1), s.z + f(2)).normalized()
}

/// Drift and noise coefficients `(dθ, dφ)` of the angle equations:
/// returns `(drift, coefficient of dWa, coefficient of dWb)`.
pub fn angle_coefficients(a: BlochAngles, model: &SqueezedModel) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let (g, z, n) = (model.gamma, model.zeta, model.n as f64);
    let (st, ct) = a.theta.sin_cos();
    let (sp, cp) = a.phi.sin_cos();
    let r = (0.5 * g).sqrt();
    let p = z + ct;
    let q = 1.0 + z * ct;
    let dtheta = 0.5 * g / st * ((z * z + 1.0) * ct + 2.0 * z) - 0.25 * g * ct / st * (cp * cp * p * p + sp * sp * q * q)
        + 0.5 * g * (n - 1.0) * z * st;
    let dphi = -0.5 * g / (st * st) * cp * sp * (q * q - p * p);
    (
        [dtheta, dphi],
        [r * cp * p, -r / st * sp * q],
        [-r * sp * q, -r / st * cp * p],
    )
}

/// Euler–Maruyama step of the angle equations with reflection of `θ` at
/// `THETA_EPS` and `π - THETA_EPS`.
pub fn angle_step(a: BlochAngles, model: &SqueezedModel, dt: f64, dwa: f64, dwb: f64) -> BlochAngles {
    let (d, ca, cb) = angle_coefficients(a, model);
    let mut theta = a.theta + d[0] * dt + ca[0] * dwa + cb[0] * dwb;
    let phi = a.phi + d[1] * dt + ca[1] * dwa + cb[1] * dwb;
    let hi = std::f64::consts::PI - THETA_EPS;
    for _ in 0..4 {
        if theta < THETA_EPS {
            theta = 2.0 * THETA_EPS - theta;
        } else if theta > hi {
            theta = 2.0 * hi - theta;
        } else {
            break;
        }
    }
    BlochAngles {
        theta: theta.clamp(THETA_EPS, hi),
        phi: phi.rem_euclid(std::f64::consts::TAU),
    }
}

/// Per-site drift and complex noise coefficients `X_k` (the increment is
/// `Σ_k 2 Re(X_k dW_k)`) of the waveguide mean-field equations, evaluated
/// on the pre-step state.
pub fn waveguide_coefficients(states: &[BlochVector], model: &WaveguideModel) -> Vec<([f64; 3], [C64; 3], [C64; 3])> {
    let g = model.gamma;
    let amp = 0.5 * (0.5 * g).sqrt();
    let ph = &model.phases;
    let i = C64::new(0.0, 1.0);
    states
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let (mut sin_x, mut sin_y, mut cos_x, mut cos_y) = (0.0, 0.0, 0.0, 0.0);
            for (l, t) in states.iter().enumerate() {
                if l == j {
                    continue;
                }
                let sn = (ph[l] - ph[j]).abs().sin();
                let cs = (ph[j] - ph[l]).cos();
                sin_x += sn * t.x;
                sin_y += sn * t.y;
                cos_x += cs * t.x;
                cos_y += cs * t.y;
            }
            let drift = [
                -0.5 * g * s.x + 0.5 * g * sin_y * s.z + 0.5 * g * s.z * cos_x,
                -0.5 * g * s.y - 0.5 * g * sin_x * s.z + 0.5 * g * s.z * cos_y,
                -g * (1.0 + s.z) + 0.5 * g * (sin_x * s.y - sin_y * s.x) - 0.5 * g * (s.x * cos_x + s.y * cos_y),
            ];
            let base = [
                C64::new(s.z + 1.0 - s.x * s.x, s.x * s.y),
                -i * s.z - i - s.y * s.x + i * s.y * s.y,
                -(1.0 + s.z) * C64::new(s.x, -s.y),
            ];
            let right = C64::from_polar(amp, -ph[j]);
            let left = C64::from_polar(amp, ph[j]);
            (drift, base.map(|b| b * right), base.map(|b| b * left))
        })
        .collect()
}

/// Jacobi Euler–Maruyama step of the waveguide mean-field equations with
/// shared channel noises `dw1` (right) and `dw2` (left).
pub fn mf_step_waveguide(
    states: &[BlochVector],
    model: &WaveguideModel,
    dt: f64,
    dw1: C64,
    dw2: C64,
) -> Vec<BlochVector> {
    waveguide_coefficients(states, model)
        .into_iter()
        .zip(states)
        .map(|((d, xr, xl), s)| {
            let f = |a: usize| d[a] * dt + 2.0 * (xr[a] * dw1).re + 2.0 * (xl[a] * dw2).re;
            BlochVector::new(s.x + f(0), s.y + f(1), s.z + f(2)).normalized()
        })
        .collect()
}

/// Bloch vectors of one trajectory at every grid time: one vector per
/// sample for the squeezed model, one per site for the waveguide.
#[derive(Debug, Clone, PartialEq)]
pub struct MfTrajectory {
    pub states: Vec<Vec<BlochVector>>,
}

/// Integrates one trajectory from the fully inverted state.
pub fn run_bloch_trajectory(model: &Model, grid: &TimeGrid, stream: &mut NoiseStream) -> MfTrajectory {
    let dt = grid.dt;
    let mut states = Vec::with_capacity(grid.n_samples);
    match model {
        Model::Squeezed(m) => {
            let mut s = BlochVector::EXCITED;
            for k in 0..grid.n_samples {
                if k > 0 {
                    for _ in 0..grid.steps_per_sample {
                        let (a, b) = real_pair(stream.complex_increment(dt));
                        s = mf_step_squeezed(s, m, dt, a, b);
                    }
                }
                states.push(vec![s]);
            }
        }
        Model::Waveguide(m) => {
            let mut s = vec![BlochVector::EXCITED; m.n()];
            for k in 0..grid.n_samples {
                if k > 0 {
                    for _ in 0..grid.steps_per_sample {
                        let dw1 = stream.complex_increment(dt);
                        let dw2 = stream.complex_increment(dt);
                        s = mf_step_waveguide(&s, m, dt, dw1, dw2);
                    }
                }
                states.push(s.clone());
            }
        }
    }
    MfTrajectory { states }
}

/// Emission rate of the squeezed model on a uniform product state.
pub fn squeezed_rate(s: BlochVector, model: &SqueezedModel) -> f64 {
    let (g, z, n) = (model.gamma, model.zeta, model.n as f64);
    0.25 * g * n * ((z * z + 1.0) * s.z + 2.0 * z) + 0.25 * g * n * (n - 1.0) * z * (s.x * s.x + s.y * s.y)
}

fn sites_of(model: &Model, sample: &[BlochVector]) -> Vec<BlochVector> {
    match model {
        Model::Squeezed(m) => vec![sample[0]; m.n],
        Model::Waveguide(_) => sample.to_vec(),
    }
}

/// Snapshots of a mean-field trajectory. Pair states are products of the
/// single-site states; the half-chain entropy is zero.
pub fn snapshots(model: &Model, traj: &MfTrajectory, req: &SnapshotRequest) -> Result<Vec<Snapshot>> {
    if req.moments {
        return Err(Error::Capability {
            backend: "meanfield".into(),
            model: model.name().into(),
            reason: "spin squeezing needs exact second moments, not factorized correlators".into(),
        });
    }
    let n = model.n();
    for &(j, l) in &req.pairs {
        if j == l || j >= n || l >= n {
            return Err(crate::error::invalid("pairs", format!("({j}, {l}) for n = {n}")));
        }
    }
    let jumps = model.jumps();
    Ok(traj
        .states
        .iter()
        .map(|sample| {
            let rate = match model {
                Model::Squeezed(m) => squeezed_rate(sample[0], m),
                Model::Waveguide(_) => {
                    let b: Vec<[f64; 3]> = sample.iter().map(|s| s.to_array()).collect();
                    observables::product_state_rate(&jumps, &b)
                }
            };
            let sites = sites_of(model, sample);
            Snapshot {
                sz: 0.5 * sites.iter().map(|s| s.z).sum::<f64>(),
                rate,
                s_half: req.entropy.then_some(0.0),
                pairs: req
                    .pairs
                    .iter()
                    .map(|&(j, l)| PairRdm {
                        rho_ab: linalg::kron2(&sites[j].density(), &sites[l].density()),
                    })
                    .collect(),
                moments: None,
            }
        })
        .collect())
}

pub fn run_trajectory(
    model: &Model,
    grid: &TimeGrid,
    req: &SnapshotRequest,
    stream: &mut NoiseStream,
) -> Result<Vec<Snapshot>> {
    let traj = run_bloch_trajectory(model, grid, stream);
    snapshots(model, &traj, req)
}

/// Ensemble observables of mean-field trajectories: `<Sz>/N`, `R/N` and,
/// for each requested pair, the ensemble mutual information of
/// `E[ρ_j ⊗ ρ_l]`, all with standard errors.
pub fn mf_ensemble_observables(
    model: &Model,
    grid: &TimeGrid,
    trajectories: &[MfTrajectory],
    pairs: &[(usize, usize)],
) -> Result<ObservableSeries> {
    if trajectories.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} trajectories; at least 2 are needed for error estimates",
            trajectories.len()
        )));
    }
    let req = SnapshotRequest {
        entropy: false,
        pairs: pairs.to_vec(),
        moments: false,
    };
    let mut acc = EnsembleAccumulator::new(trajectories.len());
    for (i, t) in trajectories.iter().enumerate() {
        if t.states.len() != grid.n_samples {
            return Err(Error::DimensionMismatch {
                expected: grid.n_samples,
                got: t.states.len(),
            });
        }
        acc.add(i, &snapshots(model, t, &req)?);
    }
    let n = model.n() as f64;
    let mut series = ObservableSeries::new(
        grid.times(),
        RunMeta {
            backend: "meanfield".into(),
            model: model.name().into(),
            n: model.n(),
            n_traj: Some(trajectories.len()),
            dt: grid.dt,
            ..Default::default()
        },
    );
    let (sz, sz_e): (Vec<f64>, Vec<f64>) = acc.sz().into_iter().map(|(m, e)| (m / n, e / n)).unzip();
    series.push(names::SZ, sz, Some(sz_e));
    let (r, r_e): (Vec<f64>, Vec<f64>) = acc.rate().into_iter().map(|(m, e)| (m / n, e / n)).unzip();
    series.push(names::RATE, r, Some(r_e));
    let ent = observables::averaged_trajectory_entropies(&acc);
    for (p, &(j, l)) in pairs.iter().enumerate() {
        let (v, e): (Vec<f64>, Vec<f64>) = ent.iter().map(|x| x.i_ensemble[p]).unzip();
        series.push(names::i_ensemble(j, l), v, Some(e));
    }
    Ok(series)
}
