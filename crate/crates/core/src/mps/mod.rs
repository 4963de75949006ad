//! Matrix-product-state quantum state diffusion with a bond-dimension cap.
//!
//! A step applies the single linear operator of the Euler–Maruyama update
//! as one MPO, then compresses with a left-to-right QR sweep followed by a
//! right-to-left truncated SVD sweep. After each step the state is
//! right-canonical with its norm carried by site 0.

pub mod mpo;

pub use mpo::{
    jdagger_j_terms, mpo_from_sitesum, mpo_waveguide_hamiltonian, site_matrices, sorted_order,
    waveguide_hamiltonian_terms, Channel, LocalTerms, Mpo, MpoSite,
};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::dense::PureState;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::Mat4;
use crate::model::{pauli, Mat2, Model, SiteSumOperator, WaveguideModel};
use crate::noise::NoiseStream;
use crate::observables::{self, Moments, PairRdm, Snapshot, SnapshotRequest};

/// Singular values below this fraction of the largest are always dropped.
pub const SV_CUTOFF: f64 = 1e-14;

/// Cumulative discarded weight above which a trajectory is flagged.
pub const DISCARD_FLAG: f64 = 1e-3;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Site tensor of shape `(dl, 2, dr)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub dl: usize,
    pub dr: usize,
    pub data: Vec<C64>,
}

impl SiteTensor {
    fn at(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * 2 + s) * self.dr + b]
    }

    /// The `dl × dr` matrix for physical index `s`.
    fn slice(&self, s: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.dl, self.dr, |a, b| self.at(a, s, b))
    }

    /// `(dl·2) × dr` view.
    fn left_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dl * 2, self.dr, &self.data)
    }

    /// `dl × (2·dr)` view.
    fn right_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dl, 2 * self.dr, &self.data)
    }

    fn from_left_matrix(m: &DMatrix<C64>) -> Self {
        Self {
            dl: m.nrows() / 2,
            dr: m.ncols(),
            data: row_major(m),
        }
    }

    fn from_right_matrix(m: &DMatrix<C64>) -> Self {
        Self {
            dl: m.nrows(),
            dr: m.ncols() / 2,
            data: row_major(m),
        }
    }
}

fn row_major(m: &DMatrix<C64>) -> Vec<C64> {
    m.transpose().as_slice().to_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    tensors: Vec<SiteTensor>,
    bond_cap: usize,
    /// Sum of relative discarded weights over all truncations so far.
    pub discarded: f64,
}

/// Outcome of one compression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Norm before renormalization.
    pub norm: f64,
    /// Relative weight discarded by truncation in this step.
    pub discarded: f64,
}

impl MpsState {
    /// Product state `⊗_j (a_j |0> + b_j |1>)`.
    pub fn product(sites: &[[C64; 2]], bond_cap: usize) -> Self {
        let tensors = sites
            .iter()
            .map(|s| SiteTensor {
                dl: 1,
                dr: 1,
                data: vec![s[0], s[1]],
            })
            .collect();
        Self {
            tensors,
            bond_cap: bond_cap.max(1),
            discarded: 0.0,
        }
    }

    pub fn fully_inverted(n: usize, bond_cap: usize) -> Self {
        Self::product(&vec![[ZERO, C64::new(1.0, 0.0)]; n], bond_cap)
    }

    /// Exact (untruncated unless `bond_cap` is smaller) MPS of a dense state.
    pub fn from_dense(psi: &PureState, bond_cap: usize) -> Self {
        let n = psi.n();
        let mut tensors = Vec::with_capacity(n);
        let mut rest = DMatrix::from_row_slice(1, psi.amplitudes().len(), psi.amplitudes());
        for _ in 0..n - 1 {
            let dl = rest.nrows();
            let cols = rest.ncols() / 2;
            let m = DMatrix::from_row_slice(dl * 2, cols, &row_major(&rest));
            let qr = m.qr();
            let q = qr.q();
            tensors.push(SiteTensor::from_left_matrix(&q));
            rest = qr.r();
        }
        let last = rest;
        tensors.push(SiteTensor {
            dl: last.nrows(),
            dr: 1,
            data: row_major(&last),
        });
        let mut s = Self {
            tensors,
            bond_cap: bond_cap.max(1),
            discarded: 0.0,
        };
        s.right_sweep_truncate();
        let nrm = s.norm();
        s.scale_center(1.0 / nrm);
        s
    }

    pub fn n(&self) -> usize {
        self.tensors.len()
    }

    pub fn bond_cap(&self) -> usize {
        self.bond_cap
    }

    /// Bond dimensions between consecutive sites.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n() - 1].iter().map(|t| t.dr).collect()
    }

    pub fn tensors(&self) -> &[SiteTensor] {
        &self.tensors
    }

    /// Norm, assuming the right-canonical form maintained by every mutator.
    pub fn norm(&self) -> f64 {
        self.tensors[0].data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Contracts to a dense vector (site 0 most significant).
    pub fn to_dense(&self) -> PureState {
        let n = self.n();
        // rows: basis prefix, columns: open right bond
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for t in &self.tensors {
            let mut next = DMatrix::zeros(acc.nrows() * 2, t.dr);
            for s in 0..2 {
                let part = &acc * t.slice(s);
                for r in 0..acc.nrows() {
                    for c in 0..t.dr {
                        next[(r * 2 + s, c)] = part[(r, c)];
                    }
                }
            }
            acc = next;
        }
        PureState::from_amplitudes(n, acc.column(0).iter().copied().collect()).expect("dimension")
    }

    /// Right-to-left SVD sweep with truncation to the bond cap; assumes
    /// sites `0..n-1` are left-orthonormal. Returns the discarded weight.
    fn right_sweep_truncate(&mut self) -> f64 {
        let n = self.n();
        let mut carry: Option<DMatrix<C64>> = None;
        let mut discarded = 0.0;
        for j in (1..n).rev() {
            let mut t = self.tensors[j].clone();
            if let Some(c) = carry.take() {
                t = SiteTensor::from_left_matrix(&(t.left_matrix() * c));
            }
            let m = t.right_matrix();
            let (u, s, vt, w) = truncated_svd(&m, self.bond_cap);
            discarded += w;
            self.tensors[j] = SiteTensor::from_right_matrix(&vt);
            let mut us = u;
            for (k, sv) in s.iter().enumerate() {
                us.column_mut(k).scale_mut(*sv);
            }
            carry = Some(us);
        }
        if let Some(c) = carry {
            let t = &self.tensors[0];
            self.tensors[0] = SiteTensor::from_left_matrix(&(t.left_matrix() * c));
        }
        self.discarded += discarded;
        discarded
    }

    fn scale_center(&mut self, f: f64) {
        for z in &mut self.tensors[0].data {
            *z *= f;
        }
    }

    /// Applies `op` exactly, compresses to the bond cap and renormalizes.
    pub fn apply_and_compress(&mut self, op: &Mpo) -> Result<StepReport> {
        let n = self.n();
        if op.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: op.n(),
            });
        }
        // fused application and left-to-right QR sweep
        let mut r = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for j in 0..n {
            let t = apply_site(&self.tensors[j], &op.sites[j]);
            // r: (k × dl·Dl), t: (dl·Dl, 2, dr·Dr)
            let k = r.nrows();
            let cols = t.dr;
            let mut m = DMatrix::zeros(k * 2, cols);
            for s in 0..2 {
                let part = &r * t.slice(s);
                for a in 0..k {
                    for c in 0..cols {
                        m[(a * 2 + s, c)] = part[(a, c)];
                    }
                }
            }
            if j == n - 1 {
                self.tensors[j] = SiteTensor::from_left_matrix(&m);
            } else {
                let qr = m.qr();
                self.tensors[j] = SiteTensor::from_left_matrix(&qr.q());
                r = qr.r();
            }
        }
        let norm_before = self.tensors[n - 1].data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm_before >= crate::dense::COLLAPSE_NORM) {
            return Err(Error::NormCollapse { norm: norm_before });
        }
        let discarded = self.right_sweep_truncate();
        let nrm = self.norm();
        self.scale_center(1.0 / nrm);
        Ok(StepReport {
            norm: norm_before,
            discarded,
        })
    }

    /// Left environments `E_j` (the contraction of sites `< j`), `j = 0..n`.
    fn left_environments(&self) -> Vec<DMatrix<C64>> {
        let mut envs = Vec::with_capacity(self.n() + 1);
        let mut e = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for t in &self.tensors {
            let mut next = DMatrix::zeros(t.dr, t.dr);
            for s in 0..2 {
                let a = t.slice(s);
                next += a.adjoint() * &e * &a;
            }
            envs.push(std::mem::replace(&mut e, next));
        }
        envs.push(e);
        envs
    }

    /// Single-site reduced density matrices, `ρ[ket, bra]`.
    pub fn site_rdms(&self) -> Vec<Mat2> {
        let envs = self.left_environments();
        let norm2 = envs[self.n()][(0, 0)].re;
        self.tensors
            .iter()
            .zip(&envs)
            .map(|(t, e)| {
                let sl = [t.slice(0), t.slice(1)];
                Mat2::from_fn(|ket, bra| (sl[bra].adjoint() * e * &sl[ket]).trace() / norm2)
            })
            .collect()
    }

    /// `<ψ|W|ψ>/<ψ|ψ>`.
    pub fn expect_mpo(&self, op: &Mpo) -> C64 {
        let mut env: Vec<DMatrix<C64>> = vec![DMatrix::from_element(1, 1, C64::new(1.0, 0.0))];
        for (t, w) in self.tensors.iter().zip(&op.sites) {
            let sl = [t.slice(0), t.slice(1)];
            let mut next = vec![DMatrix::zeros(t.dr, t.dr); w.dr];
            for (l, r, m) in &w.entries {
                for bra in 0..2 {
                    let left = sl[bra].adjoint() * &env[*l];
                    for ket in 0..2 {
                        let c = m[(bra, ket)];
                        if c != ZERO {
                            next[*r] += &left * &sl[ket] * c;
                        }
                    }
                }
            }
            env = next;
        }
        env[0][(0, 0)] / C64::from(self.norm().powi(2))
    }

    /// Reduced state of sites `(j, l)`, index `2 s_j + s_l`.
    pub fn two_site_rdm(&self, j: usize, l: usize) -> Result<Mat4> {
        let n = self.n();
        if j == l || j >= n || l >= n {
            return Err(crate::error::invalid("pair", format!("({j}, {l}) for n = {n}")));
        }
        let (a, b, swapped) = if j < l { (j, l, false) } else { (l, j, true) };
        let envs = self.left_environments();
        let ta = &self.tensors[a];
        let sa = [ta.slice(0), ta.slice(1)];
        // x[bra][ket]
        let mut x: Vec<Vec<DMatrix<C64>>> = (0..2)
            .map(|bra| (0..2).map(|ket| sa[bra].adjoint() * &envs[a] * &sa[ket]).collect())
            .collect();
        for t in &self.tensors[a + 1..b] {
            let sl = [t.slice(0), t.slice(1)];
            for row in x.iter_mut() {
                for m in row.iter_mut() {
                    *m = sl[0].adjoint() * &*m * &sl[0] + sl[1].adjoint() * &*m * &sl[1];
                }
            }
        }
        let tb = &self.tensors[b];
        let sb = [tb.slice(0), tb.slice(1)];
        let norm2 = self.norm().powi(2);
        let mut rho = Mat4::zeros();
        for bra_a in 0..2 {
            for ket_a in 0..2 {
                for bra_b in 0..2 {
                    for ket_b in 0..2 {
                        let v = (sb[bra_b].adjoint() * &x[bra_a][ket_a] * &sb[ket_b]).trace() / norm2;
                        rho[(2 * ket_a + ket_b, 2 * bra_a + bra_b)] = v;
                    }
                }
            }
        }
        if swapped {
            let p = |i: usize| 2 * (i % 2) + i / 2;
            rho = Mat4::from_fn(|r, c| rho[(p(r), p(c))]);
        }
        Ok(rho)
    }

    /// Schmidt values across the bond between sites `cut - 1` and `cut`.
    pub fn schmidt_values(&self, cut: usize) -> Vec<f64> {
        let n = self.n();
        if cut == 0 || cut >= n {
            return vec![self.norm()];
        }
        let mut r = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for t in &self.tensors[..cut] {
            let k = r.nrows();
            let mut mm = DMatrix::zeros(k * 2, t.dr);
            for s in 0..2 {
                let part = &r * t.slice(s);
                for a in 0..k {
                    for c in 0..t.dr {
                        mm[(a * 2 + s, c)] = part[(a, c)];
                    }
                }
            }
            r = mm.qr().r();
        }
        let mut sv: Vec<f64> = r.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Entanglement entropy in bits across the bond before site `cut`.
    pub fn schmidt_entropy(&self, cut: usize) -> f64 {
        observables::schmidt_values_entropy(&self.schmidt_values(cut))
    }
}

/// `W · A` at one site: shape `(dl·Dl, 2, dr·Dr)`.
fn apply_site(t: &SiteTensor, w: &MpoSite) -> SiteTensor {
    let (dl, dr) = (t.dl * w.dl, t.dr * w.dr);
    let mut data = vec![ZERO; dl * 2 * dr];
    for (al, ar, m) in &w.entries {
        for a in 0..t.dl {
            for b in 0..t.dr {
                let x0 = t.at(a, 0, b);
                let x1 = t.at(a, 1, b);
                if x0 == ZERO && x1 == ZERO {
                    continue;
                }
                let row = a * w.dl + al;
                let col = b * w.dr + ar;
                for s in 0..2 {
                    data[(row * 2 + s) * dr + col] += m[(s, 0)] * x0 + m[(s, 1)] * x1;
                }
            }
        }
    }
    SiteTensor { dl, dr, data }
}

/// SVD truncated to at most `cap` values, dropping values below
/// `SV_CUTOFF` relative to the largest. Returns `(U, s, V†, discarded)`
/// with the discarded weight relative to the total.
fn truncated_svd(m: &DMatrix<C64>, cap: usize) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>, f64) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let smax = svd.singular_values[idx[0]];
    let keep: Vec<usize> = idx
        .iter()
        .copied()
        .take(cap)
        .filter(|&i| svd.singular_values[i] > SV_CUTOFF * smax)
        .collect();
    let keep = if keep.is_empty() { vec![idx[0]] } else { keep };
    let kept: f64 = keep.iter().map(|&i| svd.singular_values[i].powi(2)).sum();
    let u_k = DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
    let vt_k = DMatrix::from_fn(keep.len(), vt.ncols(), |r, c| vt[(keep[r], c)]);
    let s_k = keep.iter().map(|&i| svd.singular_values[i]).collect();
    let discarded = if total > 0.0 { (total - kept).max(0.0) / total } else { 0.0 };
    (u_k, s_k, vt_k, discarded)
}

/// Operators of a QSD step, realized on the chain.
#[derive(Debug, Clone)]
pub struct MpsOperators {
    pub n: usize,
    /// Jumps in chain order.
    pub jumps: Vec<SiteSumOperator>,
    /// Hamiltonian terms in chain order, if any.
    pub hamiltonian: Option<LocalTerms>,
    /// `Σ_k L_k†L_k - P_k†P_k`.
    pub rate: Mpo,
    /// Chain site `c` hosts emitter `order[c]`.
    pub order: Vec<usize>,
}

fn permute_sitesum(op: &SiteSumOperator, order: &[usize]) -> SiteSumOperator {
    SiteSumOperator {
        lower: order.iter().map(|&j| op.lower[j]).collect(),
        raise: order.iter().map(|&j| op.raise[j]).collect(),
    }
}

impl MpsOperators {
    pub fn of_model(model: &Model) -> Self {
        let n = model.n();
        let order: Vec<usize> = match model {
            Model::Squeezed(_) => (0..n).collect(),
            Model::Waveguide(w) => sorted_order(&w.phases),
        };
        let jumps: Vec<SiteSumOperator> = model.jumps().iter().map(|j| permute_sitesum(j, &order)).collect();
        let hamiltonian = match model {
            Model::Waveguide(w) => {
                let sorted: Vec<f64> = order.iter().map(|&j| w.phases[j]).collect();
                let t = waveguide_hamiltonian_terms(w.gamma, &sorted, C64::new(1.0, 0.0));
                (!t.channels.is_empty()).then_some(t)
            }
            Model::Squeezed(_) => None,
        };
        let mut rate = LocalTerms::zero(n);
        for j in &jumps {
            let lo = jdagger_j_terms(&j.lowering_part());
            let hi = jdagger_j_terms(&j.raising_part());
            merge_terms(&mut rate, &lo, C64::new(1.0, 0.0));
            merge_terms(&mut rate, &hi, C64::new(-1.0, 0.0));
        }
        Self {
            n,
            jumps,
            hamiltonian,
            rate: rate.to_mpo(),
            order,
        }
    }

    /// The linear step operator
    /// `c0 + Σ_k β_k J_k - (dt/2) Σ_k J_k†J_k - i dt H`
    /// with `c0 = 1 - Σ_k (dt|<J_k>|²/2 + dW_k <J_k>)`, `β_k = dt<J_k>* + dW_k`.
    pub fn step_mpo(&self, expectations: &[C64], noises: &[C64], dt: f64) -> Mpo {
        let mut t = LocalTerms::zero(self.n);
        let mut c0 = C64::new(1.0, 0.0);
        let half = C64::from(-0.5 * dt);
        for ((jump, &e), &dw) in self.jumps.iter().zip(expectations).zip(noises) {
            c0 += -0.5 * dt * e.norm_sqr() - dw * e;
            t.add_sitesum(jump, e.conj() * dt + dw);
            merge_terms(&mut t, &jdagger_j_terms(jump), half);
        }
        t.add_identity(c0);
        if let Some(h) = &self.hamiltonian {
            merge_terms(&mut t, h, C64::new(0.0, -dt));
        }
        t.to_mpo()
    }
}

/// `acc += scale · other`.
fn merge_terms(acc: &mut LocalTerms, other: &LocalTerms, scale: C64) {
    for j in 0..acc.n {
        acc.onsite[j] += other.onsite[j] * scale;
    }
    for ch in &other.channels {
        acc.add_channel(&ch.left, &ch.right, scale);
    }
}

/// `<J>` for a site-sum operator from single-site reduced states.
fn expect_sitesum(rdms: &[Mat2], op: &SiteSumOperator) -> C64 {
    rdms.iter()
        .enumerate()
        .map(|(j, r)| (r * op.site_matrix(j)).trace())
        .sum()
}

/// One Euler–Maruyama step; `noises[k]` drives `ops.jumps[k]`.
pub fn mps_qsd_step(psi: &mut MpsState, ops: &MpsOperators, dt: f64, noises: &[C64]) -> Result<StepReport> {
    if noises.len() != ops.jumps.len() {
        return Err(Error::DimensionMismatch {
            expected: ops.jumps.len(),
            got: noises.len(),
        });
    }
    let rdms = psi.site_rdms();
    let e: Vec<C64> = ops.jumps.iter().map(|j| expect_sitesum(&rdms, j)).collect();
    let op = ops.step_mpo(&e, noises, dt);
    psi.apply_and_compress(&op)
}

fn collective_moment_mpos(n: usize) -> [[Mpo; 3]; 3] {
    let half = C64::new(0.5, 0.0);
    let ops = [pauli::x() * half, pauli::y() * half, pauli::z() * half];
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let x = vec![ops[a]; n];
            let y = vec![ops[b]; n];
            let mut t = LocalTerms::zero(n);
            // symmetrized: Σ_j {X_j, Y_j}/2 + Σ_{j≠l} X_j Y_l
            for j in 0..n {
                t.onsite[j] += (x[j] * y[j] + y[j] * x[j]) * half;
            }
            t.add_channel(&x, &y, C64::new(1.0, 0.0));
            t.add_channel(&y, &x, C64::new(1.0, 0.0));
            t.to_mpo()
        })
    })
}

/// Per-trajectory MPS outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub discarded: f64,
    /// Cumulative discarded weight exceeded [`DISCARD_FLAG`].
    pub flagged: bool,
}

/// Runs one trajectory from the fully inverted state. Requested pairs and
/// the half cut refer to emitter labels; for waveguide models the chain is
/// ordered by position, and the half cut splits that chain.
pub fn run_trajectory_with(
    model: &Model,
    grid: &TimeGrid,
    bond_cap: usize,
    req: &SnapshotRequest,
    stream: &mut NoiseStream,
    mut visit: impl FnMut(usize, &MpsState),
) -> Result<MpsTrajectory> {
    let n = model.n();
    if bond_cap == 0 {
        return Err(crate::error::invalid("bond_dim", "must be at least 1"));
    }
    for &(j, l) in &req.pairs {
        if j == l || j >= n || l >= n {
            return Err(crate::error::invalid("pairs", format!("({j}, {l}) for n = {n}")));
        }
    }
    let ops = MpsOperators::of_model(model);
    let mut chain_pos = vec![0; n];
    for (c, &j) in ops.order.iter().enumerate() {
        chain_pos[j] = c;
    }
    let moment_mpos = req.moments.then(|| collective_moment_mpos(n));
    let mut psi = MpsState::fully_inverted(n, bond_cap);
    let mut snapshots = Vec::with_capacity(grid.n_samples);
    for k in 0..grid.n_samples {
        if k > 0 {
            for _ in 0..grid.steps_per_sample {
                let dw = stream.complex_increments(grid.dt, ops.jumps.len());
                mps_qsd_step(&mut psi, &ops, grid.dt, &dw)?;
            }
        }
        visit(k, &psi);
        let rdms = psi.site_rdms();
        let sz = rdms.iter().map(|r| 0.5 * (r[(1, 1)] - r[(0, 0)]).re).sum();
        let pairs = req
            .pairs
            .iter()
            .map(|&(j, l)| psi.two_site_rdm(chain_pos[j], chain_pos[l]).map(|rho_ab| PairRdm { rho_ab }))
            .collect::<Result<_>>()?;
        let moments = moment_mpos.as_ref().map(|m| {
            let mut out = Moments {
                n,
                ..Default::default()
            };
            for a in 0..3 {
                out.mean[a] = rdms.iter().map(|r| 0.5 * (r * pauli::xyz()[a]).trace().re).sum();
                for b in 0..3 {
                    out.second[a][b] = psi.expect_mpo(&m[a][b]).re;
                }
            }
            out
        });
        snapshots.push(Snapshot {
            sz,
            rate: psi.expect_mpo(&ops.rate).re,
            s_half: req.entropy.then(|| psi.schmidt_entropy(n / 2)),
            pairs,
            moments,
        });
    }
    Ok(MpsTrajectory {
        snapshots,
        discarded: psi.discarded,
        flagged: psi.discarded > DISCARD_FLAG,
    })
}

pub fn run_trajectory(
    model: &Model,
    grid: &TimeGrid,
    bond_cap: usize,
    req: &SnapshotRequest,
    stream: &mut NoiseStream,
) -> Result<MpsTrajectory> {
    run_trajectory_with(model, grid, bond_cap, req, stream, |_, _| {})
}

/// Chain order used by [`run_trajectory`] for a waveguide model.
pub fn waveguide_chain_order(model: &WaveguideModel) -> Vec<usize> {
    sorted_order(&model.phases)
}
