//! Three-stage theory of the squeezed burst.
//!
//! The polar angle `θ` of the collective Bloch vector leaves the pole as
//! a two-dimensional Bessel process, follows the deterministic collective
//! flow, and finally relaxes near the ground state as a radial
//! Ornstein–Uhlenbeck process.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::SqueezedModel;
use crate::noise::NoiseStream;

/// `R* / (ζ γ N²)`.
pub const PEAK_RATE_CONSTANT: f64 = 0.195707;
/// `(γ/4)(1+ζ)² Δt e^{(N-1)ζγt*}` at the peak.
pub const PEAK_TIME_CONSTANT: f64 = 1.390537;
/// `2<Sz>/N` at the peak.
pub const PEAK_SZ: f64 = 0.064;
/// `Θ = π - θ` below which the end stage takes over.
pub const END_STAGE_SWITCH: f64 = 0.1;
/// Smallest `ζN` for which the predictions are meaningful.
pub const MIN_ZETA_N: f64 = 10.0;

fn require_squeezing(model: &SqueezedModel) -> Result<()> {
    if model.zeta <= 0.0 {
        return Err(Error::Undefined(
            "the collective drift vanishes at zeta = 0; there is no burst".into(),
        ));
    }
    Ok(())
}

/// `V(θ)` and `dV/dθ`; the deterministic drift of `θ` is `-dV/dθ`.
pub fn effective_potential(theta: f64, model: &SqueezedModel) -> Result<(f64, f64)> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(invalid("theta", format!("must lie in (0, π), got {theta}")));
    }
    let (g, z, n) = (model.gamma, model.zeta, model.n as f64);
    let a = 0.25 * g * (1.0 + z).powi(2);
    let b = 0.25 * g * (1.0 - z).powi(2);
    let pt = std::f64::consts::PI - theta;
    let v = 0.5 * g * z * n * theta.cos() - a * theta.ln() - b * pt.ln();
    let dv = -0.5 * g * z * n * theta.sin() - a / theta + b / pt;
    Ok((v, dv))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageParameters {
    /// Duration of the stochastic seeding stage.
    pub delta_t: f64,
    /// `γ(1+ζ)²Δt`, the mean of `θ₀²`.
    pub theta0_scale: f64,
}

impl StageParameters {
    /// Seeding duration `2/(πγζN)`.
    pub fn default_for(model: &SqueezedModel) -> Result<Self> {
        require_squeezing(model)?;
        let dt = 2.0 / (std::f64::consts::PI * model.gamma * model.zeta * model.n as f64);
        Self::with_delta_t(model, dt)
    }

    pub fn with_delta_t(model: &SqueezedModel, delta_t: f64) -> Result<Self> {
        if !(delta_t.is_finite() && delta_t > 0.0) {
            return Err(invalid("delta_t", format!("must be positive, got {delta_t}")));
        }
        Ok(Self {
            delta_t,
            theta0_scale: model.gamma * (1.0 + model.zeta).powi(2) * delta_t,
        })
    }
}

/// Density of `θ₀` after seeding for `delta_t`.
pub fn initial_theta_pdf(theta: f64, delta_t: f64, model: &SqueezedModel) -> f64 {
    if theta < 0.0 {
        return 0.0;
    }
    let c = model.gamma * (1.0 + model.zeta).powi(2) * delta_t;
    2.0 * theta / c * (-theta * theta / c).exp()
}

/// Inverse-transform sample of `θ₀`.
pub fn sample_theta0(params: &StageParameters, stream: &mut NoiseStream) -> f64 {
    let u = stream.uniform();
    (-params.theta0_scale * (1.0 - u).ln()).sqrt()
}

/// Solution of `dθ = (γ/2)(N-1)ζ sinθ dt` from `theta0`.
pub fn deterministic_theta(t: f64, theta0: f64, model: &SqueezedModel) -> f64 {
    let k = 0.5 * (model.n as f64 - 1.0) * model.gamma * model.zeta;
    2.0 * ((k * t).exp() * (0.5 * theta0).tan()).atan()
}

/// Small-`θ₀` form of `cos θ(t)`.
pub fn deterministic_cos_small_theta(t: f64, theta0: f64, model: &SqueezedModel) -> f64 {
    let x = ((model.n as f64 - 1.0) * model.zeta * model.gamma * t).exp() * theta0 * theta0 / 4.0;
    (1.0 - x) / (1.0 + x)
}

/// `(E[sin²θ], E[cosθ])` of the two-stage model at
/// `c = (γ/4)(1+ζ)²Δt e^{(N-1)ζγt}`, where `θ₀²` is exponential.
pub fn two_stage_expectations(c: f64) -> (f64, f64) {
    // composite Simpson for ∫₀^L e^{-E} f(cE) dE; the tail beyond L is below 1e-17
    let (m, l) = (80_000, 40.0);
    let h = l / m as f64;
    let (mut s, mut co) = (0.0, 0.0);
    for i in 0..=m {
        let w = match i {
            0 => 1.0,
            _ if i == m => 1.0,
            _ if i % 2 == 1 => 4.0,
            _ => 2.0,
        };
        let e = i as f64 * h;
        let x = c * e;
        let p = w * (-e).exp();
        s += p * 4.0 * x / (1.0 + x).powi(2);
        co += p * (1.0 - x) / (1.0 + x);
    }
    (s * h / 3.0, co * h / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPrediction {
    /// Peak emission rate.
    pub r_star: f64,
    /// Leading-order peak time `ln N/(ζγN)`.
    pub t_star: f64,
    /// `2<Sz>/N` at the peak.
    pub s_z_star: f64,
    /// Seeding duration used for `t_star_two_stage`.
    pub delta_t: f64,
    /// Peak time of the two-stage model for `delta_t`, counted from the
    /// end of seeding.
    pub t_star_two_stage: f64,
    /// Set when `ζN` is below [`MIN_ZETA_N`].
    pub low_zeta_n: bool,
}

pub fn peak_predictions(model: &SqueezedModel) -> Result<PeakPrediction> {
    require_squeezing(model)?;
    let (g, z, n) = (model.gamma, model.zeta, model.n as f64);
    let params = StageParameters::default_for(model)?;
    let growth = (n - 1.0) * z * g;
    let t2 = if growth > 0.0 {
        (4.0 * PEAK_TIME_CONSTANT / params.theta0_scale).ln() / growth
    } else {
        f64::INFINITY
    };
    Ok(PeakPrediction {
        r_star: PEAK_RATE_CONSTANT * z * g * n * n,
        t_star: n.ln() / (z * g * n),
        s_z_star: PEAK_SZ,
        delta_t: params.delta_t,
        t_star_two_stage: t2,
        low_zeta_n: z * n < MIN_ZETA_N,
    })
}

/// Residual excitation `2<Sz> + N` in the steady state.
pub fn steady_excitation(zeta: f64) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Undefined(format!(
            "steady excitation diverges or is undefined for zeta = {zeta}"
        )));
    }
    Ok((1.0 - zeta).powi(2) / (2.0 * zeta))
}

/// One sample path of `θ` at `times` (ascending, non-negative).
///
/// During seeding `θ = θ₀√(t/Δt)`, which has the exact Bessel marginal at
/// every `t ≤ Δt`. The deterministic flow runs until `π - θ` reaches
/// [`END_STAGE_SWITCH`]; after that `Θ = π - θ` is the norm of a planar
/// Ornstein–Uhlenbeck vector, advanced with its exact transition law.
pub fn three_stage_sample(
    model: &SqueezedModel,
    params: &StageParameters,
    times: &[f64],
    stream: &mut NoiseStream,
) -> Result<Vec<f64>> {
    require_squeezing(model)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("times", "must be ascending and non-negative"));
    }
    let pi = std::f64::consts::PI;
    let theta0 = sample_theta0(params, stream);
    let kappa = 0.5 * model.gamma * (model.n as f64 - 1.0) * model.zeta;
    let sigma = (1.0 - model.zeta) * (0.5 * model.gamma).sqrt();
    let t_switch = if kappa > 0.0 {
        params.delta_t + (1.0 / ((0.5 * END_STAGE_SWITCH).tan() * (0.5 * theta0).tan())).ln().max(0.0) / kappa
    } else {
        f64::INFINITY
    };
    let mut ou: Option<(f64, f64, f64)> = None;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let theta = if t <= params.delta_t {
            theta0 * (t / params.delta_t).sqrt()
        } else if t < t_switch {
            deterministic_theta(t - params.delta_t, theta0, model)
        } else {
            let (mut x, mut y, t0) = ou.unwrap_or((END_STAGE_SWITCH, 0.0, t_switch));
            let h = t - t0;
            let decay = (-kappa * h).exp();
            let sd = sigma * ((1.0 - decay * decay) / (2.0 * kappa)).sqrt();
            x = x * decay + sd * stream.normal();
            y = y * decay + sd * stream.normal();
            ou = Some((x, y, t));
            pi - x.hypot(y).min(pi)
        };
        out.push(theta);
    }
    Ok(out)
}

/// Ensemble statistics of [`three_stage_sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeStageEnsemble {
    pub times: Vec<f64>,
    pub mean_cos: Vec<f64>,
    pub mean_sin2: Vec<f64>,
    pub rate: Vec<f64>,
}

pub fn three_stage_ensemble(
    model: &SqueezedModel,
    params: &StageParameters,
    times: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<ThreeStageEnsemble> {
    if n_samples == 0 {
        return Err(Error::InsufficientData("no samples".into()));
    }
    let mut cos = vec![0.0; times.len()];
    let mut sin2 = vec![0.0; times.len()];
    for i in 0..n_samples {
        let path = three_stage_sample(model, params, times, &mut crate::noise::seed_trajectory(seed, i as u64))?;
        for (k, th) in path.iter().enumerate() {
            cos[k] += th.cos();
            sin2[k] += th.sin().powi(2);
        }
    }
    let m = n_samples as f64;
    cos.iter_mut().for_each(|v| *v /= m);
    sin2.iter_mut().for_each(|v| *v /= m);
    let (g, z, n) = (model.gamma, model.zeta, model.n as f64);
    let rate = cos
        .iter()
        .zip(&sin2)
        .map(|(c, s)| 0.25 * g * n * ((z * z + 1.0) * c + 2.0 * z) + 0.25 * g * n * (n - 1.0) * z * s)
        .collect();
    Ok(ThreeStageEnsemble {
        times: times.to_vec(),
        mean_cos: cos,
        mean_sin2: sin2,
        rate,
    })
}
