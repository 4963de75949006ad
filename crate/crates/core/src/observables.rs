//! Observable calculus shared by all backends: entropies, mutual
//! information, spin squeezing, emission rates and ensemble accumulation.
//!
//! Entropies are in bits.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat4};
use crate::model::{Mat2, SiteSumOperator};

/// Eigenvalues in `[-NEG_TOL, 0)` are clipped before taking logs.
pub const NEG_TOL: f64 = 1e-8;

fn check_density(rho: &DMatrix<C64>) -> Result<Vec<f64>> {
    if rho.nrows() != rho.ncols() {
        return Err(Error::InvalidState(format!("{}x{} is not square", rho.nrows(), rho.ncols())));
    }
    let herm = linalg::hermiticity_defect(rho);
    if herm > NEG_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
    }
    let tr = linalg::trace(rho);
    if (tr - C64::from(1.0)).norm() > NEG_TOL {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let ev = linalg::hermitian_eigenvalues(rho);
    if ev[0] < -NEG_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {:e}", ev[0])));
    }
    Ok(ev)
}

fn shannon_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    p.into_iter()
        .map(|p| if p > 0.0 { -p * p.log2() } else { 0.0 })
        .sum()
}

/// `-Tr ρ log₂ρ`.
pub fn von_neumann_entropy(rho: &DMatrix<C64>) -> Result<f64> {
    Ok(shannon_bits(check_density(rho)?))
}

/// Entropy of Schmidt coefficients `λ` (not squared), normalized internally.
pub fn schmidt_values_entropy(lambda: &[f64]) -> f64 {
    let norm: f64 = lambda.iter().map(|l| l * l).sum();
    if norm == 0.0 {
        return 0.0;
    }
    shannon_bits(lambda.iter().map(|l| l * l / norm))
}

/// Reduces a bipartite `dim_a*dim_b` matrix to the first factor.
pub fn partial_trace_second(rho: &DMatrix<C64>, dim_a: usize, dim_b: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim_a, dim_a, |r, c| {
        (0..dim_b).map(|k| rho[(r * dim_b + k, c * dim_b + k)]).sum()
    })
}

/// Reduces a bipartite `dim_a*dim_b` matrix to the second factor.
pub fn partial_trace_first(rho: &DMatrix<C64>, dim_a: usize, dim_b: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim_b, dim_b, |r, c| {
        (0..dim_a).map(|k| rho[(k * dim_b + r, k * dim_b + c)]).sum()
    })
}

/// `S(ρ_A) + S(ρ_B) - S(ρ_AB)` for the split `dim_a ⊗ dim_b`.
pub fn mutual_information(rho_ab: &DMatrix<C64>, dim_a: usize, dim_b: usize) -> Result<f64> {
    if rho_ab.nrows() != dim_a * dim_b {
        return Err(Error::DimensionMismatch {
            expected: dim_a * dim_b,
            got: rho_ab.nrows(),
        });
    }
    let sa = von_neumann_entropy(&partial_trace_second(rho_ab, dim_a, dim_b))?;
    let sb = von_neumann_entropy(&partial_trace_first(rho_ab, dim_a, dim_b))?;
    let sab = von_neumann_entropy(rho_ab)?;
    Ok(sa + sb - sab)
}

/// Mutual information between the two sites of a two-qubit matrix.
pub fn pair_mutual_information(rho_ab: &Mat4) -> Result<f64> {
    mutual_information(&linalg::to_dmatrix(rho_ab), 2, 2)
}

/// Collective first moments `<S_α>` and symmetrized second moments
/// `<(S_α S_β + S_β S_α)/2>`, α ∈ {x, y, z}.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: [f64; 3],
    pub second: [[f64; 3]; 3],
}

impl Moments {
    fn add_scaled(&mut self, other: &Moments, w: f64) {
        self.n = other.n;
        for a in 0..3 {
            self.mean[a] += w * other.mean[a];
            for b in 0..3 {
                self.second[a][b] += w * other.second[a][b];
            }
        }
    }

    fn scaled(&self, w: f64) -> Moments {
        let mut m = Moments { n: self.n, ..Default::default() };
        m.add_scaled(self, w);
        m
    }

    /// Moments of a product state with per-site Bloch vectors.
    pub fn of_product_state(bloch: &[[f64; 3]]) -> Moments {
        let n = bloch.len();
        let mut mean = [0.0; 3];
        for s in bloch {
            for a in 0..3 {
                mean[a] += 0.5 * s[a];
            }
        }
        let mut second = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                // Σ_{j≠l} s_j^a s_l^b / 4 + Σ_j δ_ab / 4
                let mut same = 0.0;
                for s in bloch {
                    same += s[a] * s[b];
                }
                second[a][b] = mean[a] * mean[b] - 0.25 * same + if a == b { 0.25 * n as f64 } else { 0.0 };
            }
        }
        Moments { n, mean, second }
    }

    /// Applies the rotation `R` to the spin vector: `S → R S`.
    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Moments {
        let mut out = Moments { n: self.n, ..Default::default() };
        for a in 0..3 {
            for i in 0..3 {
                out.mean[a] += r[a][i] * self.mean[i];
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let mut v = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        v += r[a][i] * r[b][j] * self.second[i][j];
                    }
                }
                out.second[a][b] = v;
            }
        }
        out
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vectors `(e1, e2)` completing `s` to a right-handed frame.
pub fn transverse_frame(s: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let trial = if s[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = cross(s, &trial);
    let norm = dot(&c, &c).sqrt();
    let e1 = [c[0] / norm, c[1] / norm, c[2] / norm];
    let e2 = cross(s, &e1);
    (e1, e2)
}

/// Variance of `e·S` for a unit vector `e`.
pub fn variance_along(m: &Moments, e: &[f64; 3]) -> f64 {
    let mut v = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            v += e[a] * e[b] * (m.second[a][b] - m.mean[a] * m.mean[b]);
        }
    }
    v
}

/// Wineland parameter `ξ_R² = N min(ΔS_⊥)² / |<S>|²`.
///
/// The moments must come from a backend that resolves two-site
/// correlations exactly; factorized correlators bias the variance at O(1/N)
/// which the prefactor `N` promotes to O(1).
pub fn spin_squeezing(m: &Moments) -> Result<f64> {
    let len = dot(&m.mean, &m.mean).sqrt();
    if !(len > 1e-10 * (m.n.max(1) as f64)) {
        return Err(Error::UndefinedDirection);
    }
    let s = [m.mean[0] / len, m.mean[1] / len, m.mean[2] / len];
    let (e1, e2) = transverse_frame(&s);
    let cov = |u: &[f64; 3], v: &[f64; 3]| {
        let mut c = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                c += u[a] * v[b] * (m.second[a][b] - m.mean[a] * m.mean[b]);
            }
        }
        c
    };
    let (a, b, c) = (cov(&e1, &e1), cov(&e1, &e2), cov(&e2, &e2));
    let min_var = 0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt();
    Ok(m.n as f64 * min_var / (len * len))
}

/// Emission rate of a product state with per-site Bloch vectors:
/// `Σ_k <L_k†L_k> - <P_k†P_k>` where `L_k`/`P_k` are the lowering/raising
/// halves of each jump operator.
pub fn product_state_rate(jumps: &[SiteSumOperator], bloch: &[[f64; 3]]) -> f64 {
    let mut rate = 0.0;
    for jump in jumps {
        // <σ⁻> = (sx - i sy)/2, <σ⁺> = conj
        let mut sum_lo = C64::new(0.0, 0.0);
        let mut sum_hi = C64::new(0.0, 0.0);
        for (j, s) in bloch.iter().enumerate() {
            let minus = C64::new(0.5 * s[0], -0.5 * s[1]);
            let (wl, wh) = (jump.lower[j], jump.raise[j]);
            sum_lo += wl * minus;
            sum_hi += wh * minus.conj();
            // diagonal terms exactly, off-diagonal self-pairs removed
            rate += wl.norm_sqr() * (0.5 * (1.0 + s[2]) - minus.norm_sqr());
            rate -= wh.norm_sqr() * (0.5 * (1.0 - s[2]) - minus.norm_sqr());
        }
        rate += sum_lo.norm_sqr() - sum_hi.norm_sqr();
    }
    rate
}

/// Running sum and sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stat {
    pub sum: f64,
    pub sumsq: f64,
}

impl Stat {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sumsq += x * x;
    }
    fn merge(&mut self, o: &Stat) {
        self.sum += o.sum;
        self.sumsq += o.sumsq;
    }
    /// `(mean, standard error)` over `count` samples.
    pub fn mean_se(&self, count: usize) -> (f64, f64) {
        let n = count as f64;
        let mean = self.sum / n;
        if count < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

/// Reduced two-site state of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRdm {
    pub rho_ab: Mat4,
}

impl PairRdm {
    pub fn site_a(&self) -> Mat2 {
        linalg::trace_out_second(&self.rho_ab)
    }
    pub fn site_b(&self) -> Mat2 {
        linalg::trace_out_first(&self.rho_ab)
    }
}

/// Observables of a single trajectory at one grid time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    /// `<Sz>`.
    pub sz: f64,
    /// Emission rate `-d<Sz>/dt`.
    pub rate: f64,
    /// Half-chain entanglement entropy in bits.
    pub s_half: Option<f64>,
    /// Reduced states of the requested site pairs.
    pub pairs: Vec<PairRdm>,
    pub moments: Option<Moments>,
}

#[derive(Debug, Clone, Default)]
struct SampleSums {
    sz: Stat,
    rate: Stat,
    s_half: Stat,
    has_s_half: bool,
    mi: Vec<Stat>,
    rho_ab: Vec<Mat4>,
    product: Vec<Mat4>,
    moments: Option<Moments>,
}

impl SampleSums {
    fn merge(&mut self, o: &SampleSums) {
        self.sz.merge(&o.sz);
        self.rate.merge(&o.rate);
        self.s_half.merge(&o.s_half);
        self.has_s_half |= o.has_s_half;
        if self.mi.is_empty() {
            self.mi = o.mi.clone();
            self.rho_ab = o.rho_ab.clone();
            self.product = o.product.clone();
        } else {
            for p in 0..o.mi.len() {
                self.mi[p].merge(&o.mi[p]);
                self.rho_ab[p] += o.rho_ab[p];
                self.product[p] += o.product[p];
            }
        }
        match (&mut self.moments, &o.moments) {
            (Some(a), Some(b)) => a.add_scaled(b, 1.0),
            (None, Some(b)) => self.moments = Some(*b),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Default)]
struct BlockSums {
    count: usize,
    samples: Vec<SampleSums>,
}

impl BlockSums {
    fn merge(&mut self, o: &BlockSums) {
        if self.samples.is_empty() {
            self.samples = vec![SampleSums::default(); o.samples.len()];
        }
        self.count += o.count;
        for (a, b) in self.samples.iter_mut().zip(&o.samples) {
            a.merge(b);
        }
    }
}

/// Number of jackknife blocks used for nonlinear ensemble quantities.
pub const JACKKNIFE_BLOCKS: usize = 16;

/// Trajectory-ensemble sums with an associative, index-ordered merge.
///
/// Trajectories are assigned to one of up to [`JACKKNIFE_BLOCKS`] contiguous
/// blocks by index; nonlinear quantities (ensemble mutual information,
/// factorization residual, squeezing) get block-jackknife errors.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    n_traj: usize,
    n_blocks: usize,
    blocks: Vec<BlockSums>,
}

impl EnsembleAccumulator {
    /// An empty accumulator for a run of `n_traj` trajectories.
    pub fn new(n_traj: usize) -> Self {
        let n_blocks = n_traj.clamp(1, JACKKNIFE_BLOCKS);
        Self {
            n_traj,
            n_blocks,
            blocks: vec![BlockSums::default(); n_blocks],
        }
    }

    fn block_of(&self, index: usize) -> usize {
        (index * self.n_blocks / self.n_traj.max(1)).min(self.n_blocks - 1)
    }

    /// Adds trajectory `index`, one snapshot per grid time.
    pub fn add(&mut self, index: usize, snapshots: &[Snapshot]) {
        let b = self.block_of(index);
        let block = &mut self.blocks[b];
        if block.samples.is_empty() {
            block.samples = vec![SampleSums::default(); snapshots.len()];
        }
        block.count += 1;
        for (sums, snap) in block.samples.iter_mut().zip(snapshots) {
            sums.sz.push(snap.sz);
            sums.rate.push(snap.rate);
            if let Some(s) = snap.s_half {
                sums.s_half.push(s);
                sums.has_s_half = true;
            }
            if sums.mi.is_empty() && !snap.pairs.is_empty() {
                sums.mi = vec![Stat::default(); snap.pairs.len()];
                sums.rho_ab = vec![Mat4::zeros(); snap.pairs.len()];
                sums.product = vec![Mat4::zeros(); snap.pairs.len()];
            }
            for (p, pair) in snap.pairs.iter().enumerate() {
                let mi = pair_mutual_information(&pair.rho_ab).unwrap_or(0.0).max(0.0);
                sums.mi[p].push(mi);
                sums.rho_ab[p] += pair.rho_ab;
                sums.product[p] += linalg::kron2(&pair.site_a(), &pair.site_b());
            }
            if let Some(m) = &snap.moments {
                match &mut sums.moments {
                    Some(acc) => acc.add_scaled(m, 1.0),
                    None => sums.moments = Some(*m),
                }
            }
        }
    }

    /// Merges another accumulator for the same run; merge in index order.
    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        assert_eq!(self.n_traj, other.n_traj, "accumulators of different runs");
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            if b.count > 0 {
                a.merge(b);
            }
        }
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count).sum()
    }

    fn totals(&self) -> BlockSums {
        let mut t = BlockSums::default();
        for b in &self.blocks {
            if b.count > 0 {
                t.merge(b);
            }
        }
        t
    }

    fn filled_blocks(&self) -> Vec<&BlockSums> {
        self.blocks.iter().filter(|b| b.count > 0).collect()
    }

    /// Applies a nonlinear estimator to the totals and returns its value with
    /// a block-jackknife error (zero if fewer than two blocks are filled).
    fn jackknife<F>(&self, f: F) -> Vec<(f64, f64)>
    where
        F: Fn(&SampleSums, usize) -> f64,
    {
        let total = self.totals();
        let blocks = self.filled_blocks();
        let nb = blocks.len();
        (0..total.samples.len())
            .map(|k| {
                let full = f(&total.samples[k], total.count);
                if nb < 2 {
                    return (full, 0.0);
                }
                let mut loo = Vec::with_capacity(nb);
                for skip in 0..nb {
                    let mut s = SampleSums::default();
                    let mut c = 0;
                    for (i, b) in blocks.iter().enumerate() {
                        if i != skip {
                            s.merge(&b.samples[k]);
                            c += b.count;
                        }
                    }
                    loo.push(f(&s, c));
                }
                let mean = loo.iter().sum::<f64>() / nb as f64;
                let var = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (nb as f64 - 1.0) / nb as f64;
                (full, var.sqrt())
            })
            .collect()
    }

    /// `(mean, se)` of `<Sz>` per grid time.
    pub fn sz(&self) -> Vec<(f64, f64)> {
        let t = self.totals();
        t.samples.iter().map(|s| s.sz.mean_se(t.count)).collect()
    }

    pub fn rate(&self) -> Vec<(f64, f64)> {
        let t = self.totals();
        t.samples.iter().map(|s| s.rate.mean_se(t.count)).collect()
    }

    pub fn n_pairs(&self) -> usize {
        self.totals().samples.first().map_or(0, |s| s.mi.len())
    }

    pub fn has_entropy(&self) -> bool {
        self.totals().samples.first().is_some_and(|s| s.has_s_half)
    }

    pub fn has_moments(&self) -> bool {
        self.totals().samples.first().is_some_and(|s| s.moments.is_some())
    }

    /// Trajectory-averaged pair state `Σ_s ρ_{s,AB}/N_tr`.
    pub fn averaged_pair_rdm(&self, sample: usize, pair: usize) -> Mat4 {
        let t = self.totals();
        t.samples[sample].rho_ab[pair] / C64::from(t.count as f64)
    }

    /// Ensemble-averaged collective moments.
    pub fn averaged_moments(&self, sample: usize) -> Option<Moments> {
        let t = self.totals();
        t.samples[sample].moments.map(|m| m.scaled(1.0 / t.count as f64))
    }

    /// `ξ_R²` per grid time from the averaged moments, with a jackknife error.
    pub fn squeezing(&self) -> Vec<(f64, f64)> {
        self.jackknife(|s, c| {
            s.moments
                .map(|m| spin_squeezing(&m.scaled(1.0 / c as f64)).unwrap_or(f64::NAN))
                .unwrap_or(f64::NAN)
        })
    }
}

/// Trajectory-averaged entropies at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedEntropies {
    /// `S̃` for the half cut, `(mean, se)`.
    pub s_half: Option<(f64, f64)>,
    /// `Ĩ` per requested pair, `(mean, se)`.
    pub i_tilde: Vec<(f64, f64)>,
    /// `I` of the averaged pair state, `(value, jackknife se)`.
    pub i_ensemble: Vec<(f64, f64)>,
}

/// `S̃`, `Ĩ` and `I` at every grid time.
pub fn averaged_trajectory_entropies(acc: &EnsembleAccumulator) -> Vec<AveragedEntropies> {
    let t = acc.totals();
    let n_pairs = acc.n_pairs();
    let ens: Vec<Vec<(f64, f64)>> = (0..n_pairs)
        .map(|p| {
            acc.jackknife(move |s, c| {
                let rho = s.rho_ab[p] / C64::from(c as f64);
                pair_mutual_information(&rho).unwrap_or(f64::NAN)
            })
        })
        .collect();
    t.samples
        .iter()
        .enumerate()
        .map(|(k, s)| AveragedEntropies {
            s_half: s.has_s_half.then(|| s.s_half.mean_se(t.count)),
            i_tilde: s.mi.iter().map(|m| m.mean_se(t.count)).collect(),
            i_ensemble: ens.iter().map(|e| e[k]).collect(),
        })
        .collect()
}

/// Trace norm of `mean_s ρ_{s,jj'} - mean_s ρ_{s,j} ⊗ ρ_{s,j'}` per grid
/// time, with a jackknife error.
pub fn factorization_residual(acc: &EnsembleAccumulator, pair: usize) -> Vec<(f64, f64)> {
    acc.jackknife(move |s, c| {
        let diff = (s.rho_ab[pair] - s.product[pair]) / C64::from(c as f64);
        linalg::trace_norm(&linalg::to_dmatrix(&diff))
    })
}

/// One named data column, optionally with per-point standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub errors: Option<Vec<f64>>,
}

/// Run provenance attached to every series.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMeta {
    pub backend: String,
    pub model: String,
    pub n: usize,
    pub seed: Option<u64>,
    pub n_traj: Option<usize>,
    pub dt: f64,
    pub bond_dim: Option<usize>,
}

/// Time-indexed observable records on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub columns: Vec<Column>,
    pub meta: RunMeta,
}

/// Column names used across the crate.
pub mod names {
    pub const SZ: &str = "Sz_over_N";
    pub const RATE: &str = "R_over_N";
    pub const S_HALF: &str = "S_half";
    pub const XI: &str = "xi_R2";

    pub fn i_tilde(j: usize, l: usize) -> String {
        format!("I_tilde_{j}_{l}")
    }
    pub fn i_ensemble(j: usize, l: usize) -> String {
        format!("I_{j}_{l}")
    }
    pub fn residual(j: usize, l: usize) -> String {
        format!("F_{j}_{l}")
    }
}

impl ObservableSeries {
    pub fn new(times: Vec<f64>, meta: RunMeta) -> Self {
        Self {
            times,
            columns: Vec::new(),
            meta,
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>, errors: Option<Vec<f64>>) {
        debug_assert_eq!(values.len(), self.times.len());
        self.columns.push(Column {
            name: name.into(),
            values,
            errors,
        });
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn values(&self, name: &str) -> Option<&[f64]> {
        self.column(name).map(|c| c.values.as_slice())
    }

    /// Grid spacing, if the grid is uniform to `1e-9` relative.
    pub fn uniform_spacing(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300) + 1e-12)
            .then_some(h)
    }
}

/// Which per-trajectory quantities a backend records at each grid time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRequest {
    /// Half-chain entanglement entropy.
    pub entropy: bool,
    /// Site pairs `(j, l)` whose reduced states are recorded.
    pub pairs: Vec<(usize, usize)>,
    /// Collective moments for `ξ_R²`.
    pub moments: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron2, to_dmatrix};
    use crate::model::pauli;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn bell() -> Mat4 {
        let mut m = Mat4::zeros();
        for (r, cc) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(r, cc)] = c(0.5);
        }
        m
    }

    fn random_density(dim: usize, seed: u64) -> DMatrix<C64> {
        let mut s = crate::noise::seed_trajectory(seed, 0);
        let a = DMatrix::from_fn(dim, dim, |_, _| C64::new(s.normal(), s.normal()));
        let rho = &a * a.adjoint();
        let tr = linalg::trace(&rho);
        rho / tr
    }

    #[test]
    fn entropy_of_pure_and_mixed() {
        let pure = to_dmatrix(&pauli::excited());
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        let mixed = DMatrix::<C64>::identity(4, 4) * c(0.25);
        assert!((von_neumann_entropy(&mixed).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_is_additive() {
        for seed in 0..5 {
            let a = random_density(2, seed);
            let b = random_density(3, seed + 100);
            let ab = a.kronecker(&b);
            let lhs = von_neumann_entropy(&ab).unwrap();
            let rhs = von_neumann_entropy(&a).unwrap() + von_neumann_entropy(&b).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_is_concave() {
        for seed in 0..10 {
            let a = random_density(4, seed);
            let b = random_density(4, seed + 50);
            let mid = (&a + &b) * c(0.5);
            let lhs = von_neumann_entropy(&mid).unwrap();
            let rhs = 0.5 * (von_neumann_entropy(&a).unwrap() + von_neumann_entropy(&b).unwrap());
            assert!(lhs >= rhs - 1e-12);
        }
    }

    #[test]
    fn entropy_rejects_invalid_input() {
        let mut bad = DMatrix::<C64>::identity(2, 2) * c(0.5);
        bad[(0, 1)] = c(0.3);
        assert!(von_neumann_entropy(&bad).is_err());
        let neg = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.1), c(-0.1)]));
        assert!(von_neumann_entropy(&neg).is_err());
        let tiny = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0 + 5e-9), c(-5e-9)]));
        assert!(von_neumann_entropy(&tiny).unwrap().abs() < 1e-6);
    }

    #[test]
    fn mutual_information_examples() {
        let prod = kron2(&pauli::excited(), &((pauli::identity() + pauli::x()) * c(0.5)));
        assert!(pair_mutual_information(&prod).unwrap().abs() < 1e-10);
        assert!((pair_mutual_information(&bell()).unwrap() - 2.0).abs() < 1e-10);
        let mut classical = Mat4::zeros();
        classical[(0, 0)] = c(0.5);
        classical[(3, 3)] = c(0.5);
        assert!((pair_mutual_information(&classical).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_nonnegative_random() {
        for seed in 0..20 {
            let rho = random_density(4, seed);
            assert!(mutual_information(&rho, 2, 2).unwrap() >= -1e-8);
        }
    }

    #[test]
    fn coherent_state_has_unit_squeezing() {
        for n in [1, 4, 50] {
            let m = Moments::of_product_state(&vec![[0.0, 0.0, -1.0]; n]);
            assert!((spin_squeezing(&m).unwrap() - 1.0).abs() < 1e-12);
            let tilted = [0.6, 0.0, 0.8];
            let m = Moments::of_product_state(&vec![tilted; n]);
            assert!((spin_squeezing(&m).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn squeezing_undefined_without_mean_spin() {
        let m = Moments::of_product_state(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]);
        assert_eq!(spin_squeezing(&m), Err(Error::UndefinedDirection));
    }

    fn rotation(a: f64, b: f64, g: f64) -> [[f64; 3]; 3] {
        let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
        let ry = |t: f64| [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]];
        let mul = |x: [[f64; 3]; 3], y: [[f64; 3]; 3]| {
            let mut o = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        o[i][j] += x[i][k] * y[k][j];
                    }
                }
            }
            o
        };
        mul(mul(rz(a), ry(b)), rz(g))
    }

    fn squeezed_moments() -> Moments {
        // spin-squeezed around -z: small x variance, large y variance
        Moments {
            n: 10,
            mean: [0.0, 0.0, -4.6],
            second: [[0.9, 0.1, 0.0], [0.1, 3.5, 0.0], [0.0, 0.0, 21.3]],
        }
    }

    proptest! {
        #[test]
        fn squeezing_is_rotation_invariant(a in 0.0..6.28f64, b in 0.0..3.14f64, g in 0.0..6.28f64) {
            let m = squeezed_moments();
            let r = rotation(a, b, g);
            let x0 = spin_squeezing(&m).unwrap();
            let x1 = spin_squeezing(&m.rotated(&r)).unwrap();
            prop_assert!((x0 - x1).abs() < 1e-8);
        }
    }

    #[test]
    fn squeezing_matches_angle_scan() {
        let m = squeezed_moments();
        let s = [0.0, 0.0, -1.0];
        let (e1, e2) = transverse_frame(&s);
        let mut best = f64::INFINITY;
        // v(t) = A + B cos 2t + C sin 2t, fitted over the scan
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for k in 0..360 {
            let t = (k as f64).to_radians();
            let e = [
                t.cos() * e1[0] + t.sin() * e2[0],
                t.cos() * e1[1] + t.sin() * e2[1],
                t.cos() * e1[2] + t.sin() * e2[2],
            ];
            let v = variance_along(&m, &e);
            best = best.min(v);
            a += v / 360.0;
            b += v * (2.0 * t).cos() / 180.0;
            c += v * (2.0 * t).sin() / 180.0;
        }
        let fitted = a - b.hypot(c);
        assert!(best >= fitted - 1e-12 && best - fitted < 1e-3 * a.abs().max(1.0));
        let scan = m.n as f64 * fitted / (4.6 * 4.6);
        assert!((spin_squeezing(&m).unwrap() - scan).abs() < 1e-6);
    }

    #[test]
    fn inverted_product_state_rate() {
        let n = 7;
        for &zeta in &[0.0, 0.4, 1.0] {
            let model = crate::model::SqueezedModel::new(1.3, zeta, n).unwrap();
            let jumps = vec![crate::model::build_squeezed_jump(&model)];
            let r = product_state_rate(&jumps, &vec![[0.0, 0.0, 1.0]; n]);
            let expected = 1.3 * n as f64 * (1.0 + zeta).powi(2) / 4.0;
            assert!((r - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_rate_matches_collective_formula() {
        // R̂ = (γ/4)Σ[(ζ²+1)σᶻ+2ζ] + (γ/4)Σ_{j≠l} ζ(σˣσˣ+σʸσʸ) on a product state
        let (gamma, zeta, n) = (0.7, 0.35, 5);
        let model = crate::model::SqueezedModel::new(gamma, zeta, n).unwrap();
        let bloch: Vec<[f64; 3]> = (0..n)
            .map(|j| {
                let t = 0.3 + 0.4 * j as f64;
                let p = 1.1 * j as f64;
                [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
            })
            .collect();
        let mut expected = 0.0;
        for j in 0..n {
            expected += gamma / 4.0 * ((zeta * zeta + 1.0) * bloch[j][2] + 2.0 * zeta);
            for l in 0..n {
                if l != j {
                    expected += gamma / 4.0 * zeta * (bloch[j][0] * bloch[l][0] + bloch[j][1] * bloch[l][1]);
                }
            }
        }
        let r = product_state_rate(&[crate::model::build_squeezed_jump(&model)], &bloch);
        assert!((r - expected).abs() < 1e-12);
    }

    fn snapshot_with_pair(rho: Mat4) -> Snapshot {
        Snapshot {
            sz: 0.0,
            rate: 0.0,
            s_half: Some(0.0),
            pairs: vec![PairRdm { rho_ab: rho }],
            moments: None,
        }
    }

    #[test]
    fn product_trajectories_have_zero_trajectory_correlations() {
        let up = pauli::excited();
        let down = pauli::identity() - pauli::excited();
        let mut acc = EnsembleAccumulator::new(2);
        acc.add(0, &[snapshot_with_pair(kron2(&up, &up))]);
        acc.add(1, &[snapshot_with_pair(kron2(&down, &down))]);
        let e = &averaged_trajectory_entropies(&acc)[0];
        assert!(e.i_tilde[0].0.abs() < 1e-12);
        assert!(e.s_half.unwrap().0.abs() < 1e-12);
        // classical correlations survive in the averaged state
        assert!((e.i_ensemble[0].0 - 1.0).abs() < 1e-10);
        assert!(factorization_residual(&acc, 0)[0].0.abs() < 1e-12);
    }

    #[test]
    fn single_trajectory_i_tilde_equals_i() {
        let mut acc = EnsembleAccumulator::new(1);
        let mut rho = bell() * c(0.7);
        rho[(1, 1)] = c(0.15);
        rho[(2, 2)] = c(0.15);
        acc.add(0, &[snapshot_with_pair(rho)]);
        let e = &averaged_trajectory_entropies(&acc)[0];
        assert!((e.i_tilde[0].0 - e.i_ensemble[0].0).abs() < 1e-12);
    }

    #[test]
    fn bell_pair_factorization_residual() {
        let mut acc = EnsembleAccumulator::new(1);
        acc.add(0, &[snapshot_with_pair(bell())]);
        // Bell - I/4 has eigenvalues {3/4, -1/4, -1/4, -1/4}
        let r = factorization_residual(&acc, 0)[0].0;
        assert!((r - 1.5).abs() < 1e-12, "{r}");
    }

    #[test]
    fn merge_is_order_fixed_and_matches_sequential() {
        let snaps: Vec<Vec<Snapshot>> = (0..40)
            .map(|i| {
                vec![Snapshot {
                    sz: (i as f64).sin(),
                    rate: (i as f64).cos(),
                    ..Default::default()
                }]
            })
            .collect();
        let mut seq = EnsembleAccumulator::new(40);
        for (i, s) in snaps.iter().enumerate() {
            seq.add(i, s);
        }
        let mut merged = EnsembleAccumulator::new(40);
        for chunk in (0..40).collect::<Vec<_>>().chunks(8) {
            let mut part = EnsembleAccumulator::new(40);
            for &i in chunk {
                part.add(i, &snaps[i]);
            }
            merged.merge(&part);
        }
        assert_eq!(merged.count(), 40);
        let (a, b) = (seq.sz()[0], merged.sz()[0]);
        assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
    }

    #[test]
    fn stat_standard_error() {
        let mut s = Stat::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            s.push(x);
        }
        let (m, se) = s.mean_se(4);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-14);
    }
}
