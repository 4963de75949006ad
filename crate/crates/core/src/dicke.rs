//! Exact master equation in the fully symmetric sector `j = N/2`.
//!
//! Basis index `i = 0..=N` labels `|j, m = j - i>`, so index 0 is the fully
//! inverted state. For the squeezed model the jump operator is real and
//! only couples `m` to `m ± 1`; starting from `|m = j>` the density matrix
//! stays real symmetric with support on even index offsets, which
//! [`evolve_master`] exploits.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg;
use crate::model::SqueezedModel;
use crate::observables::{names, Moments, ObservableSeries, RunMeta};

/// Collective spin matrices in the `j = n/2` sector.
#[derive(Debug, Clone)]
pub struct CollectiveMatrices {
    pub n: usize,
    pub sx: DMatrix<C64>,
    pub sy: DMatrix<C64>,
    pub sz: DMatrix<C64>,
    pub sp: DMatrix<C64>,
    pub sm: DMatrix<C64>,
}

/// `m` of basis index `i`.
pub fn magnetization(n: usize, i: usize) -> f64 {
    0.5 * n as f64 - i as f64
}

/// `√(j(j+1) - m(m+1))`, the `S⁺` element leaving `m`.
fn raise_coeff(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// `√(j(j+1) - m(m-1))`, the `S⁻` element leaving `m`.
fn lower_coeff(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m - 1.0)).max(0.0).sqrt()
}

pub fn collective_matrices(n: usize) -> CollectiveMatrices {
    let d = n + 1;
    let j = 0.5 * n as f64;
    let mut sp = DMatrix::<C64>::zeros(d, d);
    let mut sm = DMatrix::<C64>::zeros(d, d);
    let mut sz = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        let m = magnetization(n, i);
        sz[(i, i)] = C64::from(m);
        if i > 0 {
            sp[(i - 1, i)] = C64::from(raise_coeff(j, m));
        }
        if i + 1 < d {
            sm[(i + 1, i)] = C64::from(lower_coeff(j, m));
        }
    }
    let sx = (&sp + &sm) * C64::from(0.5);
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    CollectiveMatrices { n, sx, sy, sz, sp, sm }
}

/// Density matrix in the symmetric sector.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    pub n: usize,
    pub rho: DMatrix<C64>,
}

impl DickeState {
    /// `|m = N/2><m = N/2|`.
    pub fn fully_inverted(n: usize) -> Self {
        let mut rho = DMatrix::zeros(n + 1, n + 1);
        rho[(0, 0)] = C64::from(1.0);
        Self { n, rho }
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.rho).re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.rho, &self.rho).re
    }

    pub fn expect(&self, op: &DMatrix<C64>) -> C64 {
        linalg::trace_product(&self.rho, op)
    }

    pub fn sz(&self) -> f64 {
        (0..=self.n)
            .map(|i| self.rho[(i, i)].re * magnetization(self.n, i))
            .sum()
    }

    /// Collective first and symmetrized second moments.
    pub fn moments(&self, mats: &CollectiveMatrices) -> Moments {
        let ops = [&mats.sx, &mats.sy, &mats.sz];
        let mut m = Moments {
            n: self.n,
            ..Default::default()
        };
        let rho_ops: Vec<DMatrix<C64>> = ops.iter().map(|o| &self.rho * *o).collect();
        for a in 0..3 {
            m.mean[a] = linalg::trace(&rho_ops[a]).re;
            for b in a..3 {
                let v = linalg::trace_product(&rho_ops[a], ops[b]).re;
                m.second[a][b] = v;
                m.second[b][a] = v;
            }
        }
        m
    }

    /// Checks Hermiticity, unit trace and positivity within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let h = linalg::hermiticity_defect(&self.rho);
        if h > tol {
            return Err(Error::InvalidState(format!("Hermiticity defect {h:e}")));
        }
        let t = self.trace();
        if (t - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace {t}")));
        }
        let ev = linalg::hermitian_eigenvalues(&self.rho);
        if ev[0] < -1e-8 {
            return Err(Error::InvalidState(format!("eigenvalue {:e}", ev[0])));
        }
        Ok(())
    }
}

/// `-i[H, ρ] + JρJ† - ½{ρ, J†J}`.
pub fn lindblad_rhs(
    state: &DickeState,
    jump: &DMatrix<C64>,
    hamiltonian: Option<&DMatrix<C64>>,
) -> Result<DMatrix<C64>> {
    let d = state.rho.nrows();
    for m in std::iter::once(jump).chain(hamiltonian) {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows().max(m.ncols()),
            });
        }
    }
    let rho = &state.rho;
    let jd = jump.adjoint();
    let jdj = &jd * jump;
    let mut out = jump * rho * &jd - (rho * &jdj + &jdj * rho) * C64::from(0.5);
    if let Some(h) = hamiltonian {
        out += (h * rho - rho * h) * C64::new(0.0, -1.0);
    }
    Ok(out)
}

/// The squeezed jump `√γ(Sx - iζSy)` as a collective matrix.
pub fn squeezed_jump_matrix(model: &SqueezedModel, mats: &CollectiveMatrices) -> DMatrix<C64> {
    (&mats.sx - &mats.sy * C64::new(0.0, model.zeta)) * C64::from(model.gamma.sqrt())
}

/// Diagonal of the emission-rate operator
/// `R̂ = (γ/2)(ζ²+1)Sz + γζ(Sx² + Sy²)`, which is diagonal in `m`.
pub fn rate_diagonal(model: &SqueezedModel) -> Vec<f64> {
    let n = model.n;
    let j = 0.5 * n as f64;
    let (g, z) = (model.gamma, model.zeta);
    (0..=n)
        .map(|i| {
            let m = magnetization(n, i);
            0.5 * g * (z * z + 1.0) * m + g * z * (j * (j + 1.0) - m * m)
        })
        .collect()
}

/// Default master-equation step `1e-3/(γ max(1, ζN))`.
pub fn default_dt(model: &SqueezedModel) -> f64 {
    1e-3 / (model.gamma * (model.zeta * model.n as f64).max(1.0))
}

/// Real banded Lindbladian of the squeezed model.
struct BandedSqueezed {
    d: usize,
    /// `J[i+1, i]`
    lo: Vec<f64>,
    /// `J[i-1, i]`
    hi: Vec<f64>,
    /// `K = JᵀJ` on offsets 0 and +2 (symmetric).
    k0: Vec<f64>,
    k2: Vec<f64>,
    diagonal_only: bool,
}

impl BandedSqueezed {
    fn new(model: &SqueezedModel) -> Self {
        let n = model.n;
        let d = n + 1;
        let j = 0.5 * n as f64;
        let (a, b) = model.jump_weights();
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for i in 0..d {
            let m = magnetization(n, i);
            if i + 1 < d {
                lo[i] = a * lower_coeff(j, m);
            }
            if i > 0 {
                hi[i] = b * raise_coeff(j, m);
            }
        }
        let k0 = (0..d).map(|p| lo[p] * lo[p] + hi[p] * hi[p]).collect();
        let k2 = (0..d)
            .map(|p| if p + 2 < d { lo[p] * hi[p + 2] } else { 0.0 })
            .collect();
        Self {
            d,
            lo,
            hi,
            k0,
            k2,
            diagonal_only: b == 0.0,
        }
    }

    /// `J[p, r]`.
    #[inline]
    fn jel(&self, p: usize, r: usize) -> f64 {
        if r + 1 == p {
            self.lo[r]
        } else if p + 1 == r {
            self.hi[r]
        } else {
            0.0
        }
    }

    /// `(Kρ)[p, q]` with `K` pentadiagonal on even offsets.
    #[inline]
    fn k_rho(&self, rho: &[f64], p: usize, q: usize) -> f64 {
        let d = self.d;
        let mut v = self.k0[p] * rho[p * d + q];
        if p + 2 < d {
            v += self.k2[p] * rho[(p + 2) * d + q];
        }
        if p >= 2 {
            v += self.k2[p - 2] * rho[(p - 2) * d + q];
        }
        v
    }

    fn rhs(&self, rho: &[f64], out: &mut [f64]) {
        let d = self.d;
        let step = if self.diagonal_only { d } else { 2 };
        for p in 0..d {
            let mut q = p;
            while q < d {
                // JρJᵀ
                let mut jrj = 0.0;
                for r in [p.wrapping_sub(1), p + 1] {
                    if r >= d {
                        continue;
                    }
                    let jpr = self.jel(p, r);
                    if jpr == 0.0 {
                        continue;
                    }
                    for s in [q.wrapping_sub(1), q + 1] {
                        if s >= d {
                            continue;
                        }
                        jrj += jpr * self.jel(q, s) * rho[r * d + s];
                    }
                }
                // ρK = (Kρ)ᵀ for symmetric ρ and K
                let v = jrj - 0.5 * (self.k_rho(rho, p, q) + self.k_rho(rho, q, p));
                out[p * d + q] = v;
                out[q * d + p] = v;
                q += step;
            }
        }
    }
}

/// Observables recorded by the master-equation solver at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeSample {
    pub t: f64,
    pub sz: f64,
    pub rate: f64,
    pub moments: Option<Moments>,
}

#[derive(Debug, Clone)]
pub struct DickeRun {
    pub model: SqueezedModel,
    pub dt: f64,
    pub samples: Vec<DickeSample>,
    pub final_state: DickeState,
    /// Largest trace deviation seen at any grid time.
    pub max_trace_error: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MasterOptions {
    /// Record collective moments (for `ξ_R²`) at every grid time.
    pub moments: bool,
    /// Run the full Hermiticity/trace/positivity check at every grid time.
    pub validate_each_sample: bool,
}

/// RK4 integration of the squeezed master equation from the fully inverted
/// state, sampling observables on `grid`.
pub fn evolve_master(model: &SqueezedModel, grid: &TimeGrid, opts: MasterOptions) -> Result<DickeRun> {
    evolve_master_with(model, grid, opts, |_, _| {})
}

/// Like [`evolve_master`], handing the state at every grid time to `visit`.
pub fn evolve_master_with(
    model: &SqueezedModel,
    grid: &TimeGrid,
    opts: MasterOptions,
    mut visit: impl FnMut(f64, &DickeState),
) -> Result<DickeRun> {
    let op = BandedSqueezed::new(model);
    let d = op.d;
    let dt = grid.dt;
    let mut rho = vec![0.0; d * d];
    rho[0] = 1.0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; d * d], vec![0.0; d * d], vec![0.0; d * d], vec![0.0; d * d], vec![0.0; d * d]);
    let rate_diag = rate_diagonal(model);
    let mats = opts.moments.then(|| collective_matrices(model.n));
    let to_state = |rho: &[f64]| DickeState {
        n: model.n,
        rho: DMatrix::from_fn(d, d, |r, c| C64::from(rho[r * d + c])),
    };

    let mut samples = Vec::with_capacity(grid.n_samples);
    let mut max_trace_error: f64 = 0.0;
    for k in 0..grid.n_samples {
        if k > 0 {
            for _ in 0..grid.steps_per_sample {
                op.rhs(&rho, &mut k1);
                axpy(&rho, &k1, 0.5 * dt, &mut tmp);
                op.rhs(&tmp, &mut k2);
                axpy(&rho, &k2, 0.5 * dt, &mut tmp);
                op.rhs(&tmp, &mut k3);
                axpy(&rho, &k3, dt, &mut tmp);
                op.rhs(&tmp, &mut k4);
                for i in 0..d * d {
                    rho[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
                }
            }
        }
        let t = grid.time(k);
        let trace: f64 = (0..d).map(|i| rho[i * d + i]).sum();
        let trace_err = (trace - 1.0).abs();
        max_trace_error = max_trace_error.max(trace_err);
        let min_pop = (0..d).map(|i| rho[i * d + i]).fold(f64::INFINITY, f64::min);
        if trace_err > 1e-8 || min_pop < -1e-8 || !trace.is_finite() {
            return Err(Error::Integration {
                time: t,
                reason: format!("trace {trace}, smallest population {min_pop:e}"),
            });
        }
        let sz = (0..d).map(|i| rho[i * d + i] * magnetization(model.n, i)).sum();
        let rate = (0..d).map(|i| rho[i * d + i] * rate_diag[i]).sum();
        let need_state = opts.validate_each_sample || mats.is_some();
        let state = need_state.then(|| to_state(&rho));
        if let (true, Some(s)) = (opts.validate_each_sample, &state) {
            s.validate(1e-8).map_err(|e| Error::Integration {
                time: t,
                reason: e.to_string(),
            })?;
        }
        let moments = match (&mats, &state) {
            (Some(m), Some(s)) => Some(s.moments(m)),
            _ => None,
        };
        match &state {
            Some(s) => visit(t, s),
            None => visit(t, &to_state(&rho)),
        }
        samples.push(DickeSample { t, sz, rate, moments });
    }
    Ok(DickeRun {
        model: *model,
        dt,
        samples,
        final_state: to_state(&rho),
        max_trace_error,
    })
}

fn axpy(x: &[f64], y: &[f64], a: f64, out: &mut [f64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + a * yi;
    }
}

impl DickeRun {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn sz(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.sz).collect()
    }

    pub fn rate(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.rate).collect()
    }

    pub fn peak(&self) -> Result<Peak> {
        let n = self.model.n as f64;
        let sz_over_n: Vec<f64> = self.sz().iter().map(|s| s / n).collect();
        find_peak_samples(&self.times(), &self.rate(), &sz_over_n)
    }

    pub fn to_series(&self) -> ObservableSeries {
        let n = self.model.n as f64;
        let mut s = ObservableSeries::new(
            self.times(),
            RunMeta {
                backend: "dicke".into(),
                model: "squeezed".into(),
                n: self.model.n,
                dt: self.dt,
                ..Default::default()
            },
        );
        s.push(names::SZ, self.sz().iter().map(|v| v / n).collect(), None);
        s.push(names::RATE, self.rate().iter().map(|v| v / n).collect(), None);
        if self.samples.iter().all(|x| x.moments.is_some()) {
            let xi = self
                .samples
                .iter()
                .map(|x| crate::observables::spin_squeezing(x.moments.as_ref().unwrap()).unwrap_or(f64::NAN))
                .collect();
            s.push(names::XI, xi, None);
        }
        s
    }
}

/// Location and height of the emission maximum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Peak {
    pub t_star: f64,
    /// Peak rate in the units of the supplied rate samples.
    pub r_star: f64,
    /// `2<Sz>/N` at `t_star`.
    pub s_z_star: f64,
}

/// Quadratic interpolation through the three samples around the discrete
/// maximum of `rate`; `sz_over_n` is interpolated at the same point.
pub fn find_peak_samples(times: &[f64], rate: &[f64], sz_over_n: &[f64]) -> Result<Peak> {
    if times.len() < 3 || rate.len() != times.len() || sz_over_n.len() != times.len() {
        return Err(Error::InsufficientData("need at least three aligned samples".into()));
    }
    let k = rate
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    if k == 0 {
        let monotone = rate.windows(2).all(|w| w[1] <= w[0]);
        return Err(if monotone { Error::NoPeak } else { Error::PeakAtBoundary { index: 0 } });
    }
    if k == rate.len() - 1 {
        return Err(Error::PeakAtBoundary { index: k });
    }
    let h = times[k] - times[k - 1];
    let (ym, y0, yp) = (rate[k - 1], rate[k], rate[k + 1]);
    let curv = ym - 2.0 * y0 + yp;
    let x = if curv != 0.0 { 0.5 * (ym - yp) / curv } else { 0.0 };
    let r_star = y0 - 0.25 * (ym - yp) * x;
    let (sm, s0, sp) = (sz_over_n[k - 1], sz_over_n[k], sz_over_n[k + 1]);
    let sz = s0 + 0.5 * x * (sp - sm) + 0.5 * x * x * (sp - 2.0 * s0 + sm);
    Ok(Peak {
        t_star: times[k] + x * h,
        r_star,
        s_z_star: 2.0 * sz,
    })
}

/// [`find_peak_samples`] on the `R_over_N`/`Sz_over_N` columns of a series;
/// `r_star` is returned as the total rate `R*`.
pub fn find_peak(series: &ObservableSeries) -> Result<Peak> {
    let rate = series
        .values(names::RATE)
        .ok_or_else(|| Error::InsufficientData("series has no rate column".into()))?;
    let sz = series
        .values(names::SZ)
        .ok_or_else(|| Error::InsufficientData("series has no Sz column".into()))?;
    let mut p = find_peak_samples(&series.times, rate, sz)?;
    p.r_star *= series.meta.n as f64;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::PureState;
    use crate::model::Model;

    fn model(g: f64, z: f64, n: usize) -> SqueezedModel {
        SqueezedModel::new(g, z, n).unwrap()
    }

    fn comm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a * b - b * a
    }

    #[test]
    fn collective_matrix_examples() {
        let m = collective_matrices(1);
        assert_eq!(m.sz[(0, 0)], C64::from(0.5));
        assert_eq!(m.sz[(1, 1)], C64::from(-0.5));
        assert_eq!(m.sm[(1, 0)], C64::from(1.0));
        assert_eq!(m.sm[(0, 1)], C64::from(0.0));

        let m = collective_matrices(2);
        let nz: Vec<f64> = m.sm.iter().filter(|z| z.norm() > 0.0).map(|z| z.re).collect();
        assert_eq!(nz.len(), 2);
        assert!(nz.iter().all(|v| (v - 2f64.sqrt()).abs() < 1e-14));
    }

    #[test]
    fn collective_algebra() {
        for n in [1, 2, 5, 12] {
            let m = collective_matrices(n);
            let lhs = comm(&m.sx, &m.sy);
            let rhs = &m.sz * C64::new(0.0, 1.0);
            assert!((lhs - rhs).norm() < 1e-10);
            // (Sx²+Sy²)|j,j> = j|j,j>
            let t = &m.sx * &m.sx + &m.sy * &m.sy;
            assert!((t[(0, 0)].re - 0.5 * n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_state_is_dark_for_lowering_jump() {
        let mdl = model(1.0, 1.0, 1);
        let mats = collective_matrices(1);
        let j = squeezed_jump_matrix(&mdl, &mats);
        let mut rho = DMatrix::zeros(2, 2);
        rho[(1, 1)] = C64::from(1.0);
        let out = lindblad_rhs(&DickeState { n: 1, rho }, &j, None).unwrap();
        assert!(out.norm() < 1e-14);
    }

    #[test]
    fn rhs_is_traceless() {
        let mdl = model(0.8, 0.4, 6);
        let mats = collective_matrices(6);
        let j = squeezed_jump_matrix(&mdl, &mats);
        let mut s = crate::noise::seed_trajectory(3, 0);
        let a = DMatrix::from_fn(7, 7, |_, _| C64::new(s.normal(), s.normal()));
        let rho = (&a + a.adjoint()) * C64::from(0.5);
        let out = lindblad_rhs(&DickeState { n: 6, rho }, &j, Some(&mats.sz)).unwrap();
        assert!(linalg::trace(&out).norm() < 1e-12);
    }

    #[test]
    fn single_emitter_initial_slope() {
        // Tr(σᶻ L(|1><1|)) = -2γ; σᶻ = 2Sz for n = 1
        let g = 1.7;
        let mdl = model(g, 1.0, 1);
        let mats = collective_matrices(1);
        let j = squeezed_jump_matrix(&mdl, &mats);
        let out = lindblad_rhs(&DickeState::fully_inverted(1), &j, None).unwrap();
        let slope = linalg::trace_product(&out, &(&mats.sz * C64::from(2.0))).re;
        assert!((slope + 2.0 * g).abs() < 1e-12);
    }

    #[test]
    fn rhs_dimension_mismatch() {
        let mats = collective_matrices(3);
        assert!(matches!(
            lindblad_rhs(&DickeState::fully_inverted(2), &mats.sm, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn banded_rhs_matches_dense_rhs() {
        for &zeta in &[0.0, 0.3, 1.0] {
            let mdl = model(1.3, zeta, 7);
            let mats = collective_matrices(7);
            let j = squeezed_jump_matrix(&mdl, &mats);
            let banded = BandedSqueezed::new(&mdl);
            let d = 8;
            let mut s = crate::noise::seed_trajectory(9, 0);
            let mut rho = vec![0.0; d * d];
            for p in 0..d {
                for q in p..d {
                    if (q - p) % 2 == 0 && (zeta < 1.0 || p == q) {
                        let v = s.normal();
                        rho[p * d + q] = v;
                        rho[q * d + p] = v;
                    }
                }
            }
            let mut out = vec![0.0; d * d];
            banded.rhs(&rho, &mut out);
            let state = DickeState {
                n: 7,
                rho: DMatrix::from_fn(d, d, |r, c| C64::from(rho[r * d + c])),
            };
            let dense = lindblad_rhs(&state, &j, None).unwrap();
            for r in 0..d {
                for c in 0..d {
                    assert!((dense[(r, c)] - C64::from(out[r * d + c])).norm() < 1e-10, "zeta {zeta} ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn single_emitter_exponential_decay() {
        let g = 1.0;
        let mdl = model(g, 1.0, 1);
        let grid = TimeGrid::new(1e-3, 0.1, 3.0).unwrap();
        let run = evolve_master(&mdl, &grid, MasterOptions::default()).unwrap();
        for s in &run.samples {
            let sigma_z = 2.0 * s.sz;
            assert!((sigma_z - (2.0 * (-g * s.t).exp() - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn initial_rate_on_inverted_state() {
        for &(zeta, n) in &[(1.0, 4), (0.5, 6), (0.0, 3), (0.25, 9)] {
            let mdl = model(0.9, zeta, n);
            let grid = TimeGrid::from_steps(1e-4, 1, 1);
            let run = evolve_master(&mdl, &grid, MasterOptions::default()).unwrap();
            let expected = 0.9 * n as f64 * (1.0 + zeta) * (1.0 + zeta) / 4.0;
            assert!((run.samples[0].rate - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_operator_matches_brute_force_expectation() {
        // collective R̂ vs site-resolved R̂ on the dense fully inverted state
        for n in 1..=6 {
            for &zeta in &[0.0, 0.6, 1.0] {
                let mdl = model(1.0, zeta, n);
                let collective = rate_diagonal(&mdl)[0];
                let psi = PureState::fully_inverted(n);
                let site = psi.emission_rate(&Model::Squeezed(mdl).jumps());
                assert!((collective - site).abs() < 1e-12, "n {n} zeta {zeta}");
            }
        }
    }

    #[test]
    fn rate_equals_minus_dsz_dt() {
        let mdl = model(1.0, 0.5, 10);
        let dt = default_dt(&mdl);
        let grid = TimeGrid::from_steps(dt, 20, 60);
        let run = evolve_master(&mdl, &grid, MasterOptions::default()).unwrap();
        let h = grid.sample_interval();
        let peak_rate = run.rate().iter().cloned().fold(0.0, f64::max);
        for k in 1..run.samples.len() - 1 {
            let fd = -(run.samples[k + 1].sz - run.samples[k - 1].sz) / (2.0 * h);
            // central difference error is O(h²)
            assert!((fd - run.samples[k].rate).abs() < 1e-3 * peak_rate, "k {k}");
        }
    }

    #[test]
    fn state_invariants_along_run() {
        let mdl = model(1.0, 0.4, 12);
        let grid = TimeGrid::from_steps(default_dt(&mdl), 200, 30);
        let mut worst_purity: f64 = 0.0;
        let run = evolve_master_with(
            &mdl,
            &grid,
            MasterOptions {
                validate_each_sample: true,
                ..Default::default()
            },
            |_, s| worst_purity = worst_purity.max(s.purity()),
        )
        .unwrap();
        assert!(run.max_trace_error < 1e-8);
        assert!(worst_purity <= 1.0 + 1e-8);
    }

    #[test]
    fn unsqueezed_decay_is_complete() {
        let n = 8;
        let mdl = model(1.0, 1.0, n);
        let grid = TimeGrid::new(1e-3, 1.0, 25.0).unwrap();
        let run = evolve_master(&mdl, &grid, MasterOptions::default()).unwrap();
        let last = run.samples.last().unwrap();
        assert!((last.sz + 0.5 * n as f64).abs() < 1e-6, "{}", last.sz);
    }

    #[test]
    fn halving_dt_changes_sz_below_1e6() {
        let mdl = model(1.0, 0.5, 20);
        let dt = default_dt(&mdl);
        let coarse = evolve_master(&mdl, &TimeGrid::from_steps(dt, 100, 11), MasterOptions::default()).unwrap();
        let fine = evolve_master(&mdl, &TimeGrid::from_steps(dt / 2.0, 200, 11), MasterOptions::default()).unwrap();
        for (a, b) in coarse.samples.iter().zip(&fine.samples) {
            assert!((a.t - b.t).abs() < 1e-12);
            assert!((a.sz - b.sz).abs() < 1e-6);
        }
    }

    #[test]
    fn fully_squeezed_limit_still_runs() {
        let mdl = model(1.0, 0.0, 5);
        let grid = TimeGrid::new(1e-3, 0.05, 2.0).unwrap();
        let run = evolve_master(&mdl, &grid, MasterOptions::default()).unwrap();
        assert!(run.max_trace_error < 1e-8);
        assert!(matches!(run.peak(), Err(Error::NoPeak)));
    }

    #[test]
    fn peak_of_parabola() {
        let times: Vec<f64> = (0..41).map(|k| 0.1 * k as f64).collect();
        let rate: Vec<f64> = times.iter().map(|t| 1.0 - (t - 2.0) * (t - 2.0)).collect();
        let sz: Vec<f64> = times.iter().map(|t| 0.5 - 0.1 * t).collect();
        let p = find_peak_samples(&times, &rate, &sz).unwrap();
        assert!((p.t_star - 2.0).abs() < 1e-6);
        assert!((p.r_star - 1.0).abs() < 1e-12);
        assert!((p.s_z_star - 2.0 * 0.3).abs() < 1e-12);

        // off-grid maximum
        let rate: Vec<f64> = times.iter().map(|t| 1.0 - (t - 2.03) * (t - 2.03)).collect();
        let p = find_peak_samples(&times, &rate, &sz).unwrap();
        assert!((p.t_star - 2.03).abs() < 1e-9);
    }

    #[test]
    fn peak_at_boundary_is_an_error() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let rising: Vec<f64> = times.clone();
        assert!(matches!(
            find_peak_samples(&times, &rising, &times),
            Err(Error::PeakAtBoundary { index: 9 })
        ));
    }

    #[test]
    fn moments_of_inverted_state() {
        let n = 6;
        let mats = collective_matrices(n);
        let m = DickeState::fully_inverted(n).moments(&mats);
        assert!((m.mean[2] - 3.0).abs() < 1e-12);
        assert!((m.second[0][0] - 1.5).abs() < 1e-12);
        assert!((crate::observables::spin_squeezing(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_steady_state_beats_coherent_state() {
        let mdl = model(1.0, 0.5, 20);
        let grid = TimeGrid::from_steps(default_dt(&mdl), 20_000, 3);
        let run = evolve_master(&mdl, &grid, MasterOptions { moments: true, ..Default::default() }).unwrap();
        let xi = crate::observables::spin_squeezing(run.samples.last().unwrap().moments.as_ref().unwrap()).unwrap();
        assert!(xi < 0.8, "{xi}");
    }
}
