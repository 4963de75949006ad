//! Physical scenarios and their operator descriptions.
//!
//! Single-site conventions, fixed for every backend:
//!
//! ```text
//! |0> ground, |1> excited
//! σ⁺ = |1><0|   σ⁻ = |0><1|
//! σˣ = σ⁺ + σ⁻  σʸ = -i(σ⁺ - σ⁻)  σᶻ = |1><1| - |0><0|
//! ```
//!
//! Operators leave this module as data ([`SiteSumOperator`],
//! [`PairCouplingOperator`]); each backend realizes them in its own
//! representation.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type Mat2 = Matrix2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Single-site operators in the `[row][col]` basis order `(|0>, |1>)`.
pub mod pauli {
    use super::*;

    pub fn identity() -> Mat2 {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }
    pub fn raising() -> Mat2 {
        Mat2::new(ZERO, ZERO, ONE, ZERO)
    }
    pub fn lowering() -> Mat2 {
        Mat2::new(ZERO, ONE, ZERO, ZERO)
    }
    pub fn x() -> Mat2 {
        raising() + lowering()
    }
    pub fn y() -> Mat2 {
        (raising() - lowering()) * (-I)
    }
    pub fn z() -> Mat2 {
        Mat2::new(-ONE, ZERO, ZERO, ONE)
    }
    /// Projector on the excited state, σ⁺σ⁻.
    pub fn excited() -> Mat2 {
        Mat2::new(ZERO, ZERO, ZERO, ONE)
    }
    /// `[σˣ, σʸ, σᶻ]`.
    pub fn xyz() -> [Mat2; 3] {
        [x(), y(), z()]
    }
}

/// Collective decay into a squeezed reservoir, `γ D[Sx - iζSy]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedModel {
    pub gamma: f64,
    pub zeta: f64,
    pub n: usize,
}

impl SqueezedModel {
    pub fn new(gamma: f64, zeta: f64, n: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid("gamma", format!("must be positive, got {gamma}")));
        }
        if !(0.0..=1.0).contains(&zeta) {
            return Err(invalid("zeta", format!("must lie in [0, 1], got {zeta}")));
        }
        if n == 0 {
            return Err(invalid("n", "need at least one emitter"));
        }
        Ok(Self { gamma, zeta, n })
    }

    /// Jump weights `(w⁻, w⁺) = √γ((1+ζ)/2, (1-ζ)/2)`.
    pub fn jump_weights(&self) -> (f64, f64) {
        let s = self.gamma.sqrt();
        (s * (1.0 + self.zeta) / 2.0, s * (1.0 - self.zeta) / 2.0)
    }
}

/// Emitter array coupled to a one-dimensional waveguide.
///
/// `phases[j]` is the dimensionless position `k₀ z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveguideModel {
    pub gamma: f64,
    pub phases: Vec<f64>,
}

impl WaveguideModel {
    pub fn new(gamma: f64, phases: Vec<f64>) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid("gamma", format!("must be positive, got {gamma}")));
        }
        if phases.is_empty() {
            return Err(invalid("phases", "need at least one emitter"));
        }
        if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
            return Err(invalid("phases", format!("non-finite position {p}")));
        }
        Ok(Self { gamma, phases })
    }

    /// Equally spaced array, `k₀ z_j = spacing · j` for `j = 1..=n`.
    pub fn equally_spaced(gamma: f64, spacing: f64, n: usize) -> Result<Self> {
        Self::new(gamma, (1..=n).map(|j| spacing * j as f64).collect())
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }
}

/// `Σ_j (w⁻_j σ⁻_j + w⁺_j σ⁺_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSumOperator {
    pub lower: Vec<C64>,
    pub raise: Vec<C64>,
}

impl SiteSumOperator {
    pub fn new(lower: Vec<C64>, raise: Vec<C64>) -> Result<Self> {
        if lower.len() != raise.len() {
            return Err(invalid(
                "weights",
                format!("{} lowering vs {} raising weights", lower.len(), raise.len()),
            ));
        }
        if lower.iter().chain(&raise).any(|w| !w.is_finite()) {
            return Err(invalid("weights", "non-finite weight"));
        }
        Ok(Self { lower, raise })
    }

    pub fn uniform(n: usize, lower: C64, raise: C64) -> Self {
        Self {
            lower: vec![lower; n],
            raise: vec![raise; n],
        }
    }

    pub fn n(&self) -> usize {
        self.lower.len()
    }

    pub fn site_matrix(&self, j: usize) -> Mat2 {
        pauli::lowering() * self.lower[j] + pauli::raising() * self.raise[j]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            lower: self.raise.iter().map(|w| w.conj()).collect(),
            raise: self.lower.iter().map(|w| w.conj()).collect(),
        }
    }

    /// The lowering half `Σ w⁻_j σ⁻_j`.
    pub fn lowering_part(&self) -> Self {
        Self {
            lower: self.lower.clone(),
            raise: vec![ZERO; self.n()],
        }
    }

    /// The raising half `Σ w⁺_j σ⁺_j`.
    pub fn raising_part(&self) -> Self {
        Self {
            lower: vec![ZERO; self.n()],
            raise: self.raise.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lower.iter().chain(&self.raise).all(|w| *w == ZERO)
    }
}

/// `Σ_{j<l} h_{jl} (σ⁺_j σ⁻_l + σ⁻_j σ⁺_l)` with real symmetric couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCouplingOperator {
    n: usize,
    h: Vec<f64>,
}

impl PairCouplingOperator {
    /// Builds from a coupling function evaluated for `j < l`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut h = vec![0.0; n * n];
        for j in 0..n {
            for l in j + 1..n {
                let v = f(j, l);
                if !v.is_finite() {
                    return Err(invalid("couplings", format!("h[{j}][{l}] = {v}")));
                }
                h[j * n + l] = v;
                h[l * n + j] = v;
            }
        }
        Ok(Self { n, h })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, l: usize) -> f64 {
        self.h[j * self.n + l]
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&v| v == 0.0)
    }
}

/// `J = √γ Σ_j [(1+ζ)σ⁻_j + (1-ζ)σ⁺_j]/2`.
pub fn build_squeezed_jump(model: &SqueezedModel) -> SiteSumOperator {
    let (lo, hi) = model.jump_weights();
    SiteSumOperator::uniform(model.n, C64::new(lo, 0.0), C64::new(hi, 0.0))
}

/// Right/left emission channels and the coherent exchange Hamiltonian.
pub fn build_waveguide_operators(
    model: &WaveguideModel,
) -> (SiteSumOperator, SiteSumOperator, PairCouplingOperator) {
    let amp = (model.gamma / 2.0).sqrt();
    let n = model.n();
    let right = SiteSumOperator {
        lower: model.phases.iter().map(|&p| C64::from_polar(amp, -p)).collect(),
        raise: vec![ZERO; n],
    };
    let left = SiteSumOperator {
        lower: model.phases.iter().map(|&p| C64::from_polar(amp, p)).collect(),
        raise: vec![ZERO; n],
    };
    let g = model.gamma;
    let h = PairCouplingOperator::from_fn(n, |j, l| {
        0.5 * g * (model.phases[j] - model.phases[l]).abs().sin()
    })
    .expect("finite phases give finite couplings");
    (right, left, h)
}

/// Alternative ways of writing the squeezed jump operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JumpForm {
    /// `√Γ(cos φ S⁻ + sin φ S⁺)`, `φ ∈ [0, π/4]`.
    Angle { phi: f64 },
    /// `√Γ(cosh r S⁻ + sinh r S⁺)`, `r ≥ 0`.
    Rapidity { r: f64 },
    /// `√Γ(S⁻ + ℰ S⁺)`, `ℰ ∈ [0, 1]`.
    Reflectivity { e: f64 },
}

impl JumpForm {
    /// The `(w⁻, w⁺)` coefficients this form places on each site.
    pub fn site_weights(&self, big_gamma: f64) -> (f64, f64) {
        let s = big_gamma.sqrt();
        match *self {
            JumpForm::Angle { phi } => (s * phi.cos(), s * phi.sin()),
            JumpForm::Rapidity { r } => (s * r.cosh(), s * r.sinh()),
            JumpForm::Reflectivity { e } => (s, s * e),
        }
    }
}

/// Maps an alternative jump form with rate `Γ` to `(γ, ζ)`.
pub fn convert_parametrization(form: JumpForm, big_gamma: f64) -> Result<(f64, f64)> {
    if !(big_gamma.is_finite() && big_gamma > 0.0) {
        return Err(invalid("Gamma", format!("must be positive, got {big_gamma}")));
    }
    match form {
        JumpForm::Angle { phi } => {
            if !(0.0..=std::f64::consts::FRAC_PI_4).contains(&phi) {
                return Err(invalid("phi", format!("must lie in [0, π/4], got {phi}")));
            }
            let (c, s) = (phi.cos(), phi.sin());
            Ok(((1.0 + 2.0 * c * s) * big_gamma, (c - s) / (c + s)))
        }
        JumpForm::Rapidity { r } => {
            if !(r.is_finite() && r >= 0.0) {
                return Err(invalid("r", format!("must be finite and non-negative, got {r}")));
            }
            Ok((big_gamma * (2.0 * r).exp(), (-2.0 * r).exp()))
        }
        JumpForm::Reflectivity { e } => {
            if !(0.0..=1.0).contains(&e) {
                return Err(invalid("E", format!("must lie in [0, 1], got {e}")));
            }
            Ok((big_gamma * (1.0 + e).powi(2), (1.0 - e) / (1.0 + e)))
        }
    }
}

/// A physical scenario, as consumed by the trajectory backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Squeezed(SqueezedModel),
    Waveguide(WaveguideModel),
}

impl Model {
    pub fn n(&self) -> usize {
        match self {
            Model::Squeezed(m) => m.n,
            Model::Waveguide(m) => m.n(),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Model::Squeezed(m) => m.gamma,
            Model::Waveguide(m) => m.gamma,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Squeezed(_) => "squeezed",
            Model::Waveguide(_) => "waveguide",
        }
    }

    pub fn jumps(&self) -> Vec<SiteSumOperator> {
        match self {
            Model::Squeezed(m) => vec![build_squeezed_jump(m)],
            Model::Waveguide(m) => {
                let (r, l, _) = build_waveguide_operators(m);
                vec![r, l]
            }
        }
    }

    pub fn hamiltonian(&self) -> Option<PairCouplingOperator> {
        match self {
            Model::Squeezed(_) => None,
            Model::Waveguide(m) => Some(build_waveguide_operators(m).2),
        }
    }

    /// Trajectory step size: `2e-4/(γζ)` for squeezed decay, `2e-4/γ` for the waveguide.
    pub fn default_trajectory_dt(&self) -> f64 {
        match self {
            Model::Squeezed(m) => 2e-4 / (m.gamma * m.zeta.max(f64::MIN_POSITIVE)),
            Model::Waveguide(m) => 2e-4 / m.gamma,
        }
    }
}

impl From<SqueezedModel> for Model {
    fn from(m: SqueezedModel) -> Self {
        Model::Squeezed(m)
    }
}

impl From<WaveguideModel> for Model {
    fn from(m: WaveguideModel) -> Self {
        Model::Waveguide(m)
    }
}
