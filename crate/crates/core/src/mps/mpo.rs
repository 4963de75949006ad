//! Matrix product operators for sums of one- and two-site terms.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::model::{pauli, Mat2, SiteSumOperator, WaveguideModel};

/// One MPO site: sparse list of `(left, right, W)` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct MpoSite {
    pub dl: usize,
    pub dr: usize,
    pub entries: Vec<(usize, usize, Mat2)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mpo {
    pub sites: Vec<MpoSite>,
}

/// `Σ_{j<l} left_j ⊗ right_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub left: Vec<Mat2>,
    pub right: Vec<Mat2>,
}

/// An operator `Σ_j O_j + Σ_c Σ_{j<l} A^c_j ⊗ B^c_l`, the form shared by
/// every operator the trajectory step needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTerms {
    pub n: usize,
    pub onsite: Vec<Mat2>,
    pub channels: Vec<Channel>,
}

fn mat_norm(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl LocalTerms {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            onsite: vec![Mat2::zeros(); n],
            channels: Vec::new(),
        }
    }

    /// Adds `c · I`.
    pub fn add_identity(&mut self, c: C64) {
        self.onsite[0] += pauli::identity() * c;
    }

    /// Adds `scale · Σ_j (w⁻_j σ⁻_j + w⁺_j σ⁺_j)`.
    pub fn add_sitesum(&mut self, op: &SiteSumOperator, scale: C64) {
        for j in 0..self.n {
            self.onsite[j] += op.site_matrix(j) * scale;
        }
    }

    /// Adds `scale · Σ_{j<l} left_j ⊗ right_l`, merging into an existing
    /// channel whose left operators are proportional.
    pub fn add_channel(&mut self, left: &[Mat2], right: &[Mat2], scale: C64) {
        let n = self.n;
        if n < 2 {
            return;
        }
        let active_left = &left[..n - 1];
        if active_left.iter().all(|m| mat_norm(m) == 0.0) || right[1..].iter().all(|m| mat_norm(m) == 0.0) {
            return;
        }
        for ch in &mut self.channels {
            if let Some(lambda) = proportionality(active_left, &ch.left[..n - 1]) {
                for l in 0..n {
                    ch.right[l] += right[l] * (scale * lambda);
                }
                return;
            }
        }
        self.channels.push(Channel {
            left: left.to_vec(),
            right: right.iter().map(|m| m * scale).collect(),
        });
    }

    /// Adds `scale · (Σ_j X_j)(Σ_l Y_l)` for site-local `X`, `Y`.
    pub fn add_product(&mut self, x: &[Mat2], y: &[Mat2], scale: C64) {
        for j in 0..self.n {
            self.onsite[j] += x[j] * y[j] * scale;
        }
        self.add_channel(x, y, scale);
        self.add_channel(y, x, scale);
    }

    pub fn bond_dim(&self) -> usize {
        if self.n < 2 {
            1
        } else {
            2 + self.channels.len()
        }
    }

    pub fn to_mpo(&self) -> Mpo {
        let n = self.n;
        let id = pauli::identity();
        if n == 1 {
            return Mpo {
                sites: vec![MpoSite {
                    dl: 1,
                    dr: 1,
                    entries: vec![(0, 0, self.onsite[0])],
                }],
            };
        }
        let d = self.bond_dim();
        let mut sites = Vec::with_capacity(n);
        for j in 0..n {
            let mut bulk: Vec<(usize, usize, Mat2)> = vec![(0, 0, id), (1, 1, id), (0, 1, self.onsite[j])];
            for (c, ch) in self.channels.iter().enumerate() {
                bulk.push((0, 2 + c, ch.left[j]));
                bulk.push((2 + c, 1, ch.right[j]));
                bulk.push((2 + c, 2 + c, id));
            }
            let keep = |m: &Mat2| mat_norm(m) != 0.0;
            let site = if j == 0 {
                MpoSite {
                    dl: 1,
                    dr: d,
                    entries: bulk.into_iter().filter(|e| e.0 == 0 && keep(&e.2)).collect(),
                }
            } else if j == n - 1 {
                MpoSite {
                    dl: d,
                    dr: 1,
                    entries: bulk
                        .into_iter()
                        .filter(|e| e.1 == 1 && keep(&e.2))
                        .map(|(a, _, w)| (a, 0, w))
                        .collect(),
                }
            } else {
                MpoSite {
                    dl: d,
                    dr: d,
                    entries: bulk.into_iter().filter(|e| keep(&e.2)).collect(),
                }
            };
            sites.push(site);
        }
        Mpo { sites }
    }
}

/// `λ` with `a = λ b` sitewise, if it exists.
fn proportionality(a: &[Mat2], b: &[Mat2]) -> Option<C64> {
    let (k, r) = b
        .iter()
        .enumerate()
        .flat_map(|(j, m)| m.iter().enumerate().map(move |(r, z)| (j, r, *z)))
        .max_by(|x, y| x.2.norm().total_cmp(&y.2.norm()))
        .map(|(j, r, _)| (j, r))?;
    let pivot = b[k][r];
    if pivot.norm() == 0.0 {
        return None;
    }
    let lambda = a[k][r] / pivot;
    let scale = a.iter().chain(b).map(mat_norm).fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .all(|(x, y)| mat_norm(&(x - y * lambda)) <= 1e-13 * scale)
        .then_some(lambda)
}

/// Per-site matrices of a site-sum operator.
pub fn site_matrices(op: &SiteSumOperator) -> Vec<Mat2> {
    (0..op.n()).map(|j| op.site_matrix(j)).collect()
}

/// `J†J` as local terms.
pub fn jdagger_j_terms(op: &SiteSumOperator) -> LocalTerms {
    let a = site_matrices(op);
    let ad: Vec<Mat2> = a.iter().map(|m| m.adjoint()).collect();
    let mut t = LocalTerms::zero(op.n());
    t.add_product(&ad, &a, C64::new(1.0, 0.0));
    t
}

/// `Σ_{j<l} (γ/2) sin(φ_l - φ_j)(σ⁺_jσ⁻_l + σ⁻_jσ⁺_l)` for non-decreasing
/// phases, scaled by `scale`.
pub fn waveguide_hamiltonian_terms(gamma: f64, sorted_phases: &[f64], scale: C64) -> LocalTerms {
    let n = sorted_phases.len();
    let (sp, sm) = (pauli::raising(), pauli::lowering());
    let c = C64::new(0.0, -gamma / 4.0) * scale;
    let ph = |sign: f64| -> Vec<C64> { sorted_phases.iter().map(|&p| C64::from_polar(1.0, sign * p)).collect() };
    let (em, ep) = (ph(-1.0), ph(1.0));
    let times = |w: &[C64], m: Mat2| -> Vec<Mat2> { w.iter().map(|z| m * *z).collect() };
    let mut t = LocalTerms::zero(n);
    t.add_channel(&times(&em, sp), &times(&ep, sm), c);
    t.add_channel(&times(&em, sm), &times(&ep, sp), c);
    t.add_channel(&times(&ep, sp), &times(&em, sm), -c);
    t.add_channel(&times(&ep, sm), &times(&em, sp), -c);
    t
}

/// Chain order placing emitters by non-decreasing phase (stable).
pub fn sorted_order(phases: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..phases.len()).collect();
    order.sort_by(|&a, &b| phases[a].total_cmp(&phases[b]));
    order
}

/// Sum of single-site operators, bond dimension 2.
pub fn mpo_from_sitesum(op: &SiteSumOperator) -> Mpo {
    let mut t = LocalTerms::zero(op.n());
    t.add_sitesum(op, C64::new(1.0, 0.0));
    t.to_mpo()
}

/// The waveguide exchange Hamiltonian on the chain sorted by position.
/// Returns the MPO and the chain order: chain site `c` hosts emitter
/// `order[c]`.
pub fn mpo_waveguide_hamiltonian(model: &WaveguideModel) -> (Mpo, Vec<usize>) {
    let order = sorted_order(&model.phases);
    let sorted: Vec<f64> = order.iter().map(|&j| model.phases[j]).collect();
    let t = waveguide_hamiltonian_terms(model.gamma, &sorted, C64::new(1.0, 0.0));
    (t.to_mpo(), order)
}

impl Mpo {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s.dr).max().unwrap_or(1)
    }

    /// `self · other` (apply `other` first), bond dimensions multiply.
    pub fn compose(&self, other: &Mpo) -> Mpo {
        let sites = self
            .sites
            .iter()
            .zip(&other.sites)
            .map(|(a, b)| {
                let mut entries = Vec::new();
                for (al, ar, wa) in &a.entries {
                    for (bl, br, wb) in &b.entries {
                        entries.push((al * b.dl + bl, ar * b.dr + br, wa * wb));
                    }
                }
                MpoSite {
                    dl: a.dl * b.dl,
                    dr: a.dr * b.dr,
                    entries,
                }
            })
            .collect();
        Mpo { sites }
    }

    /// Full `2^n × 2^n` matrix (site 0 most significant); for tests and
    /// small systems.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let first = &self.sites[0];
        let mut acc: Vec<DMatrix<C64>> = vec![DMatrix::zeros(2, 2); first.dr];
        for (_, r, w) in &first.entries {
            acc[*r] += crate::linalg::to_dmatrix(w);
        }
        for site in &self.sites[1..] {
            let dim = acc[0].nrows() * 2;
            let mut next = vec![DMatrix::zeros(dim, dim); site.dr];
            for (l, r, w) in &site.entries {
                next[*r] += acc[*l].kronecker(&crate::linalg::to_dmatrix(w));
            }
            acc = next;
        }
        acc.swap_remove(0)
    }
}
