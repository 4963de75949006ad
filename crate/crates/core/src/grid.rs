use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform output grid `t_k = k · steps_per_sample · dt`, `k = 0..n_samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps_per_sample: usize,
    pub n_samples: usize,
}

impl TimeGrid {
    /// Grid covering `[0, t_max]` with output every `sample_every`, which
    /// must be an integer multiple of `dt` (to 1e-9 relative).
    pub fn new(dt: f64, sample_every: f64, t_max: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(sample_every.is_finite() && sample_every >= dt * (1.0 - 1e-9)) {
            return Err(invalid(
                "sample_every",
                format!("must be at least dt = {dt}, got {sample_every}"),
            ));
        }
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(invalid("t_max", format!("must be non-negative, got {t_max}")));
        }
        let steps = (sample_every / dt).round();
        if (steps * dt - sample_every).abs() > 1e-9 * sample_every {
            return Err(invalid(
                "sample_every",
                format!("{sample_every} is not a multiple of dt = {dt}"),
            ));
        }
        let n_samples = (t_max / sample_every + 1e-9).floor() as usize + 1;
        Ok(Self {
            dt,
            steps_per_sample: steps as usize,
            n_samples,
        })
    }

    /// Grid with output after every `steps_per_sample` steps.
    pub fn from_steps(dt: f64, steps_per_sample: usize, n_samples: usize) -> Self {
        Self {
            dt,
            steps_per_sample: steps_per_sample.max(1),
            n_samples: n_samples.max(1),
        }
    }

    pub fn sample_interval(&self) -> f64 {
        self.steps_per_sample as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        (k * self.steps_per_sample) as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.time(k)).collect()
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.n_samples - 1)
    }

    pub fn total_steps(&self) -> usize {
        (self.n_samples - 1) * self.steps_per_sample
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = TimeGrid::new(1e-3, 0.01, 1.0).unwrap();
        assert_eq!(g.steps_per_sample, 10);
        assert_eq!(g.n_samples, 101);
        assert!((g.t_max() - 1.0).abs() < 1e-12);
        assert_eq!(g.total_steps(), 1000);
        assert!(TimeGrid::new(1e-3, 0.0105, 1.0).is_err());
        assert!(TimeGrid::new(0.0, 0.01, 1.0).is_err());
    }
}
