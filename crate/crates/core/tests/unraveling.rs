//! Trajectory averages of the dense integrator converge to an
//! independently built Lindblad solution at the Monte Carlo rate.

use nalgebra::{DMatrix, DVector};
use superrad::dense;
use superrad::grid::TimeGrid;
use superrad::observables::SnapshotRequest;
use superrad::{seed_trajectory, Model, SqueezedModel, WaveguideModel, C64};

type M = DMatrix<C64>;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `op` acting on site `j` of `n`, site 0 being the leftmost factor.
fn embed(op: &M, j: usize, n: usize) -> M {
    let id = M::identity(2, 2);
    let mut out = M::from_element(1, 1, c(1.0));
    for k in 0..n {
        out = out.kronecker(if k == j { op } else { &id });
    }
    out
}

fn lowering() -> M {
    M::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)])
}

struct Lindblad {
    h: M,
    jumps: Vec<M>,
}

impl Lindblad {
    fn squeezed(gamma: f64, zeta: f64, n: usize) -> Self {
        let (sm, sp) = (lowering(), lowering().adjoint());
        let mut j = M::zeros(1 << n, 1 << n);
        for k in 0..n {
            j += (embed(&sm, k, n) * c(1.0 + zeta) + embed(&sp, k, n) * c(1.0 - zeta)) * c(0.5 * gamma.sqrt());
        }
        Self {
            h: M::zeros(1 << n, 1 << n),
            jumps: vec![j],
        }
    }

    fn waveguide(gamma: f64, phases: &[f64]) -> Self {
        let n = phases.len();
        let sm = lowering();
        let mut right = M::zeros(1 << n, 1 << n);
        let mut left = M::zeros(1 << n, 1 << n);
        for (k, &p) in phases.iter().enumerate() {
            right += embed(&sm, k, n) * C64::from_polar((gamma / 2.0).sqrt(), -p);
            left += embed(&sm, k, n) * C64::from_polar((gamma / 2.0).sqrt(), p);
        }
        let mut h = M::zeros(1 << n, 1 << n);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let hop = embed(&sm.adjoint(), a, n) * embed(&sm, b, n);
                    h += hop * c(0.5 * gamma * (phases[a] - phases[b]).abs().sin());
                }
            }
        }
        Self { h, jumps: vec![right, left] }
    }

    fn rhs(&self, rho: &M) -> M {
        let i = C64::new(0.0, 1.0);
        let mut out = (&self.h * rho - rho * &self.h) * (-i);
        for l in &self.jumps {
            let ldl = l.adjoint() * l;
            out += l * rho * l.adjoint() - (&ldl * rho + rho * &ldl) * c(0.5);
        }
        out
    }

    /// RK4 from the fully inverted state, recording `ρ` at `times`.
    fn evolve(&self, n: usize, times: &[f64], dt: f64) -> Vec<M> {
        let dim = 1 << n;
        let mut rho = M::zeros(dim, dim);
        rho[(dim - 1, dim - 1)] = c(1.0);
        let mut t = 0.0;
        let mut out = Vec::new();
        for &target in times {
            let steps = ((target - t) / dt).round() as usize;
            for _ in 0..steps {
                let k1 = self.rhs(&rho);
                let k2 = self.rhs(&(&rho + &k1 * c(0.5 * dt)));
                let k3 = self.rhs(&(&rho + &k2 * c(0.5 * dt)));
                let k4 = self.rhs(&(&rho + &k3 * c(dt)));
                rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
            }
            t = target;
            out.push(rho.clone());
        }
        out
    }
}

/// Fitted exponent of the Frobenius error of `mean |ψ><ψ|` against the
/// exact solution, over disjoint batches of 250, 1000 and 4000 trajectories.
fn error_exponent(model: &Model, exact: &Lindblad, dt: f64, every: f64, n_samples: usize) -> f64 {
    const BLOCK: usize = 250;
    const BLOCKS: usize = 16;
    let n = model.n();
    let dim = 1 << n;
    let grid = TimeGrid::from_steps(dt, (every / dt).round() as usize, n_samples);
    let reference = exact.evolve(n, &grid.times(), 1e-4);
    let mut sums = vec![vec![M::zeros(dim, dim); n_samples]; BLOCKS];
    for (b, block) in sums.iter_mut().enumerate() {
        for i in 0..BLOCK {
            let index = (b * BLOCK + i) as u64;
            dense::run_trajectory_with(model, &grid, &SnapshotRequest::default(), &mut seed_trajectory(40, index), |k, psi| {
                let v = DVector::from_column_slice(psi.amplitudes());
                block[k] += &v * v.adjoint();
            })
            .unwrap();
        }
    }
    let rms_error = |blocks_per_batch: usize| -> f64 {
        let batches = BLOCKS / blocks_per_batch;
        let size = (blocks_per_batch * BLOCK) as f64;
        let mut total = 0.0;
        for b in 0..batches {
            for (k, exact_k) in reference.iter().enumerate() {
                let mut avg = M::zeros(dim, dim);
                for block in &sums[b * blocks_per_batch..(b + 1) * blocks_per_batch] {
                    avg += &block[k];
                }
                total += (avg / c(size) - exact_k).norm_squared();
            }
        }
        (total / batches as f64).sqrt()
    };
    let pts: Vec<(f64, f64)> = [1usize, 4, 16]
        .iter()
        .map(|&k| (((k * BLOCK) as f64).ln(), rms_error(k).ln()))
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn oracle_conserves_trace_and_matches_single_emitter_decay() {
    let l = Lindblad::waveguide(1.3, &[0.4]);
    let rho = l.evolve(1, &[0.5], 1e-4);
    let excited = rho[0][(1, 1)].re;
    assert!((excited - (-1.3f64 * 0.5).exp()).abs() < 1e-10);
    let l = Lindblad::squeezed(1.0, 0.4, 3);
    let rho = &l.evolve(3, &[0.7], 1e-4)[0];
    assert!((rho.trace() - c(1.0)).norm() < 1e-12);
}

#[test]
fn squeezed_trajectories_converge_to_master_equation() {
    let m = SqueezedModel::new(1.0, 0.5, 4).unwrap();
    let fit = error_exponent(&Model::from(m), &Lindblad::squeezed(1.0, 0.5, 4), 1e-3, 0.1, 16);
    assert!((fit + 0.5).abs() <= 0.1, "exponent {fit}");
}

#[test]
fn waveguide_trajectories_converge_to_master_equation() {
    let w = WaveguideModel::equally_spaced(1.0, 0.2 * std::f64::consts::PI, 4).unwrap();
    let exact = Lindblad::waveguide(1.0, &w.phases);
    let fit = error_exponent(&Model::from(w), &exact, 1e-3, 0.1, 16);
    assert!((fit + 0.5).abs() <= 0.1, "exponent {fit}");
}
