//! Dense state-vector quantum state diffusion.
//!
//! Basis index `i = Σ_j b_j 2^{n-1-j}`: site 0 is the most significant bit
//! and `b_j = 1` is the excited state.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::Mat4;
use crate::model::{Model, PairCouplingOperator, SiteSumOperator};
use crate::noise::NoiseStream;
use crate::observables::{self, Moments, PairRdm, Snapshot, SnapshotRequest};

/// Largest `n` accepted by [`run_trajectory`].
pub const DENSE_CAP: usize = 14;

/// Pre-normalization norms below this abort the step.
pub const COLLAPSE_NORM: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    amp: Vec<C64>,
}

impl PureState {
    pub fn from_amplitudes(n: usize, amp: Vec<C64>) -> Result<Self> {
        if amp.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: amp.len(),
            });
        }
        Ok(Self { n, amp })
    }

    /// `|1…1>`.
    pub fn fully_inverted(n: usize) -> Self {
        let mut amp = vec![ZERO; 1 << n];
        amp[(1 << n) - 1] = C64::new(1.0, 0.0);
        Self { n, amp }
    }

    /// `⊗_j (a_j |0> + b_j |1>)` from per-site `[a_j, b_j]`.
    pub fn product(sites: &[[C64; 2]]) -> Self {
        let n = sites.len();
        let amp = (0..1usize << n)
            .map(|i| {
                sites
                    .iter()
                    .enumerate()
                    .map(|(j, s)| s[(i >> (n - 1 - j)) & 1])
                    .product()
            })
            .collect();
        Self { n, amp }
    }

    /// Gaussian random normalized state.
    pub fn random(n: usize, stream: &mut NoiseStream) -> Self {
        let amp = (0..1usize << n).map(|_| C64::new(stream.normal(), stream.normal())).collect();
        let mut s = Self { n, amp };
        s.normalize();
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> f64 {
        let nrm = self.norm();
        let inv = 1.0 / nrm;
        for a in &mut self.amp {
            *a *= inv;
        }
        nrm
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        dot(&self.amp, &other.amp)
    }

    /// `<Sz>`.
    pub fn sz(&self) -> f64 {
        let half = 0.5 * self.n as f64;
        self.amp
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (i.count_ones() as f64 - half))
            .sum()
    }

    /// `Σ_k <L_k†L_k> - <P_k†P_k>` with `L_k`/`P_k` the lowering and raising
    /// parts of each jump; equals `-d<Sz>/dt`.
    pub fn emission_rate(&self, jumps: &[SiteSumOperator]) -> f64 {
        let mut buf = vec![ZERO; self.amp.len()];
        let mut rate = 0.0;
        for jump in jumps {
            apply_sitesum(&jump.lowering_part(), &self.amp, &mut buf);
            rate += norm_sqr(&buf);
            apply_sitesum(&jump.raising_part(), &self.amp, &mut buf);
            rate -= norm_sqr(&buf);
        }
        rate
    }

    /// `<op>` for a site-sum operator.
    pub fn expect_sitesum(&self, op: &SiteSumOperator) -> C64 {
        let mut buf = vec![ZERO; self.amp.len()];
        apply_sitesum(op, &self.amp, &mut buf);
        dot(&self.amp, &buf)
    }

    /// Collective first and symmetrized second moments.
    pub fn moments(&self) -> Moments {
        let half = C64::new(0.5, 0.0);
        let n = self.n;
        let ops = [
            SiteSumOperator::uniform(n, half, half),
            SiteSumOperator::uniform(n, C64::new(0.0, 0.5), C64::new(0.0, -0.5)),
        ];
        let mut vecs: Vec<Vec<C64>> = ops
            .iter()
            .map(|op| {
                let mut b = vec![ZERO; self.amp.len()];
                apply_sitesum(op, &self.amp, &mut b);
                b
            })
            .collect();
        let hn = 0.5 * n as f64;
        vecs.push(
            self.amp
                .iter()
                .enumerate()
                .map(|(i, a)| a * (i.count_ones() as f64 - hn))
                .collect(),
        );
        let mut m = Moments {
            n,
            ..Default::default()
        };
        for a in 0..3 {
            m.mean[a] = dot(&self.amp, &vecs[a]).re;
            for b in a..3 {
                let v = dot(&vecs[a], &vecs[b]).re;
                m.second[a][b] = v;
                m.second[b][a] = v;
            }
        }
        m
    }

    /// Reduced density matrix of the sites in `keep`, in the order given
    /// (first listed site is the most significant index bit).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DMatrix<C64>> {
        let n = self.n;
        if keep.is_empty() || keep.len() > 12 {
            return Err(crate::error::invalid("keep", format!("{} sites", keep.len())));
        }
        let mut seen = vec![false; n];
        for &j in keep {
            if j >= n || seen[j] {
                return Err(crate::error::invalid("keep", format!("bad or repeated site {j}")));
            }
            seen[j] = true;
        }
        let rest: Vec<usize> = (0..n).filter(|j| !seen[*j]).collect();
        let (dk, dr) = (1usize << keep.len(), 1usize << rest.len());
        let mut m = DMatrix::<C64>::zeros(dk, dr);
        for (i, a) in self.amp.iter().enumerate() {
            let bit = |j: usize| (i >> (n - 1 - j)) & 1;
            let r = keep.iter().fold(0, |acc, &j| (acc << 1) | bit(j));
            let c = rest.iter().fold(0, |acc, &j| (acc << 1) | bit(j));
            m[(r, c)] = *a;
        }
        Ok(&m * m.adjoint())
    }

    pub fn pair_rdm(&self, j: usize, l: usize) -> Result<Mat4> {
        let r = self.partial_trace(&[j, l])?;
        Ok(Mat4::from_fn(|a, b| r[(a, b)]))
    }

    /// Entanglement entropy (bits) between sites `0..cut` and `cut..n`.
    pub fn schmidt_entropy(&self, cut: usize) -> f64 {
        if cut == 0 || cut >= self.n {
            return 0.0;
        }
        let cols = 1usize << (self.n - cut);
        let m = DMatrix::from_row_slice(self.amp.len() / cols, cols, &self.amp);
        let sv = m.singular_values();
        observables::schmidt_values_entropy(sv.as_slice())
    }

    /// Amplitudes on the Dicke states `|j = n/2, m = n/2 - i>`.
    pub fn dicke_amplitudes(&self) -> Vec<C64> {
        let n = self.n;
        let mut c = vec![ZERO; n + 1];
        for (i, a) in self.amp.iter().enumerate() {
            c[n - i.count_ones() as usize] += a;
        }
        for (i, ci) in c.iter_mut().enumerate() {
            *ci /= binomial(n, i).sqrt();
        }
        c
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// `out = Σ_j (w⁻_j σ⁻_j + w⁺_j σ⁺_j) psi`.
pub fn apply_sitesum(op: &SiteSumOperator, psi: &[C64], out: &mut [C64]) {
    let n = op.n();
    out.iter_mut().for_each(|o| *o = ZERO);
    for j in 0..n {
        let mask = 1usize << (n - 1 - j);
        let (lo, hi) = (op.lower[j], op.raise[j]);
        if lo == ZERO && hi == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            if i & mask == 0 {
                *o += lo * psi[i | mask];
            } else {
                *o += hi * psi[i ^ mask];
            }
        }
    }
}

/// `out = Σ_{j<l} h_jl (σ⁺_jσ⁻_l + σ⁻_jσ⁺_l) psi`.
pub fn apply_pair(op: &PairCouplingOperator, psi: &[C64], out: &mut [C64]) {
    let n = op.n();
    out.iter_mut().for_each(|o| *o = ZERO);
    for j in 0..n {
        for l in j + 1..n {
            let h = op.get(j, l);
            if h == 0.0 {
                continue;
            }
            let flip = (1usize << (n - 1 - j)) | (1usize << (n - 1 - l));
            for (i, o) in out.iter_mut().enumerate() {
                let (bj, bl) = ((i >> (n - 1 - j)) & 1, (i >> (n - 1 - l)) & 1);
                if bj != bl {
                    *o += psi[i ^ flip] * h;
                }
            }
        }
    }
}

/// Operators of one QSD step.
#[derive(Debug, Clone)]
pub struct StepOperators {
    pub jumps: Vec<SiteSumOperator>,
    pub hamiltonian: Option<PairCouplingOperator>,
}

impl StepOperators {
    pub fn of_model(model: &Model) -> Self {
        Self {
            jumps: model.jumps(),
            hamiltonian: model.hamiltonian().filter(|h| !h.is_zero()),
        }
    }
}

/// Euler–Maruyama step of the multi-channel QSD equation followed by
/// renormalization. `noises[k]` drives `ops.jumps[k]`. Returns the norm
/// before renormalization.
pub fn qsd_step(psi: &mut PureState, ops: &StepOperators, dt: f64, noises: &[C64]) -> Result<f64> {
    if noises.len() != ops.jumps.len() {
        return Err(Error::DimensionMismatch {
            expected: ops.jumps.len(),
            got: noises.len(),
        });
    }
    let dim = psi.amp.len();
    let mut next = vec![ZERO; dim];
    let mut jpsi = vec![ZERO; dim];
    let mut jdj = vec![ZERO; dim];
    let mut c0 = C64::new(1.0, 0.0);
    for (jump, &dw) in ops.jumps.iter().zip(noises) {
        apply_sitesum(jump, &psi.amp, &mut jpsi);
        let e = dot(&psi.amp, &jpsi);
        c0 += -0.5 * dt * e.norm_sqr() - dw * e;
        let beta = e.conj() * dt + dw;
        apply_sitesum(&jump.adjoint(), &jpsi, &mut jdj);
        for i in 0..dim {
            next[i] += beta * jpsi[i] - 0.5 * dt * jdj[i];
        }
    }
    if let Some(h) = &ops.hamiltonian {
        apply_pair(h, &psi.amp, &mut jpsi);
        let f = C64::new(0.0, -dt);
        for i in 0..dim {
            next[i] += f * jpsi[i];
        }
    }
    for i in 0..dim {
        next[i] += c0 * psi.amp[i];
    }
    let nrm = norm_sqr(&next).sqrt();
    if !(nrm >= COLLAPSE_NORM) {
        return Err(Error::NormCollapse { norm: nrm });
    }
    let inv = 1.0 / nrm;
    for (a, b) in psi.amp.iter_mut().zip(&next) {
        *a = b * inv;
    }
    Ok(nrm)
}

/// Observables of `psi` as requested.
pub fn snapshot(psi: &PureState, jumps: &[SiteSumOperator], req: &SnapshotRequest) -> Result<Snapshot> {
    Ok(Snapshot {
        sz: psi.sz(),
        rate: psi.emission_rate(jumps),
        s_half: req.entropy.then(|| psi.schmidt_entropy(psi.n / 2)),
        pairs: req
            .pairs
            .iter()
            .map(|&(j, l)| psi.pair_rdm(j, l).map(|rho_ab| PairRdm { rho_ab }))
            .collect::<Result<_>>()?,
        moments: req.moments.then(|| psi.moments()),
    })
}

/// Runs one trajectory from the fully inverted state, handing the state at
/// every grid time to `visit` and returning the requested snapshots.
pub fn run_trajectory_with(
    model: &Model,
    grid: &TimeGrid,
    req: &SnapshotRequest,
    stream: &mut NoiseStream,
    mut visit: impl FnMut(usize, &PureState),
) -> Result<Vec<Snapshot>> {
    let n = model.n();
    if n > DENSE_CAP {
        return Err(Error::Capacity { n, cap: DENSE_CAP });
    }
    for &(j, l) in &req.pairs {
        if j == l || j >= n || l >= n {
            return Err(crate::error::invalid("pairs", format!("({j}, {l}) for n = {n}")));
        }
    }
    let ops = StepOperators::of_model(model);
    let mut psi = PureState::fully_inverted(n);
    let mut out = Vec::with_capacity(grid.n_samples);
    for k in 0..grid.n_samples {
        if k > 0 {
            for _ in 0..grid.steps_per_sample {
                let dw = stream.complex_increments(grid.dt, ops.jumps.len());
                qsd_step(&mut psi, &ops, grid.dt, &dw)?;
            }
        }
        visit(k, &psi);
        out.push(snapshot(&psi, &ops.jumps, req)?);
    }
    Ok(out)
}

pub fn run_trajectory(
    model: &Model,
    grid: &TimeGrid,
    req: &SnapshotRequest,
    stream: &mut NoiseStream,
) -> Result<Vec<Snapshot>> {
    run_trajectory_with(model, grid, req, stream, |_, _| {})
}
