//! Region boundary tracing by weight-angle sweeps.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{AlignedChannel, CovSplit, RateTriple};
use crate::error::{Error, Result};
use crate::tolerances::TOL_FEAS;

use super::{maximize_weighted, SolverConfig, Weights};

/// One traced boundary point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSample {
    /// Rates reproduced from `split`; `r0` is the achieved `f0(B0)`.
    pub rates: RateTriple,
    pub weights: Weights,
    pub theta: f64,
    pub split: CovSplit,
}

fn uniform(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

/// `(lambda1, lambda2) = (cos theta, sin theta)`, exact at both endpoints.
fn angle_weights(theta: f64) -> (f64, f64) {
    if theta == 0.0 {
        (1.0, 0.0)
    } else if theta == FRAC_PI_2 {
        (0.0, 1.0)
    } else {
        (theta.cos(), theta.sin())
    }
}

fn sample_at(ch: &AlignedChannel, r0: f64, theta: f64, cfg: &SolverConfig) -> Result<RegionSample> {
    let (l1, l2) = angle_weights(theta);
    let weights = Weights::new(l1, l2, r0)?;
    let res = maximize_weighted(ch, &weights, cfg)?;
    Ok(RegionSample {
        rates: res.rates,
        weights,
        theta,
        split: res.split,
    })
}

fn sweep(ch: &AlignedChannel, r0_grid: &[f64], weight_steps: usize, cfg: &SolverConfig) -> Result<Vec<RegionSample>> {
    if weight_steps == 0 {
        return Err(Error::InvalidResolution(0));
    }
    let thetas = uniform(0.0, FRAC_PI_2, weight_steps);
    let jobs: Vec<(usize, usize)> = (0..r0_grid.len())
        .flat_map(|i| (0..thetas.len()).map(move |j| (i, j)))
        .collect();
    jobs.par_iter()
        .map(|&(i, j)| {
            sample_at(ch, r0_grid[i], thetas[j], cfg).map_err(|e| Error::Trace {
                r0_index: i,
                theta_index: j,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Samples the boundary over `r0_steps` common-rate targets in
/// `[0, r0_max]` and `weight_steps` angles in `[0, pi/2]`, sorted by
/// `(r0_target, theta)`.
pub fn trace_surface(ch: &AlignedChannel, r0_steps: usize, weight_steps: usize, cfg: &SolverConfig) -> Result<Vec<RegionSample>> {
    if r0_steps == 0 {
        return Err(Error::InvalidResolution(0));
    }
    let grid = uniform(0.0, ch.r0_max(), r0_steps);
    sweep(ch, &grid, weight_steps, cfg)
}

/// The angle sweep at a single common-rate target.
pub fn slice_at_r0(ch: &AlignedChannel, r0: f64, weight_steps: usize, cfg: &SolverConfig) -> Result<Vec<RegionSample>> {
    let ceiling = ch.r0_max();
    if !(r0 >= 0.0) || r0 > ceiling + TOL_FEAS {
        return Err(Error::InfeasibleTarget { target: r0, ceiling });
    }
    sweep(ch, &[r0], weight_steps, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::SymMatrix;

    #[test]
    fn grids() {
        assert_eq!(uniform(0.0, 1.0, 1), vec![0.0]);
        assert_eq!(uniform(0.0, 2.0, 3), vec![0.0, 1.0, 2.0]);
        assert_eq!(angle_weights(FRAC_PI_2), (0.0, 1.0));
    }

    #[test]
    fn single_point_trace() {
        let ch = AlignedChannel::new(SymMatrix::scalar(1.0), SymMatrix::scalar(2.0), SymMatrix::scalar(3.0)).unwrap();
        let cfg = SolverConfig::default();
        let out = trace_surface(&ch, 1, 1, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].weights.r0_target, 0.0);
        assert!((out[0].rates.r1 - 0.5 * 1.6f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn slice_at_ceiling_is_origin() {
        let ch = AlignedChannel::new(SymMatrix::scalar(1.0), SymMatrix::scalar(2.0), SymMatrix::scalar(3.0)).unwrap();
        let out = slice_at_r0(&ch, ch.r0_max(), 4, &SolverConfig::default()).unwrap();
        assert!(out.iter().all(|s| s.rates.r1 == 0.0 && s.rates.r2 == 0.0));
        assert!(slice_at_r0(&ch, ch.r0_max() + 0.1, 4, &SolverConfig::default()).is_err());
    }
}
