//! Spectral projected-gradient ascent over covariance splits.

use crate::channel::CovSplit;
use crate::matcore::SymMatrix;

use super::SolverConfig;

const ARMIJO: f64 = 1e-4;
const ALPHA_MIN: f64 = 1e-10;
const ALPHA_MAX: f64 = 1e10;
const MAX_BACKTRACKS: usize = 60;
/// Consecutive negligible gains that count as convergence.
const QUIET_STEPS: usize = 5;

/// Smooth objective on `(B0, B1)` with its gradient blocks.
pub(crate) trait Objective {
    fn eval(&self, x: &CovSplit) -> Option<(f64, SymMatrix, SymMatrix)>;
}

pub(crate) trait Projector {
    fn project(&self, b0: &SymMatrix, b1: &SymMatrix) -> CovSplit;
}

#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub x: CovSplit,
    pub iterations: usize,
    pub converged: bool,
}

fn inner(a0: &SymMatrix, a1: &SymMatrix, b0: &SymMatrix, b1: &SymMatrix) -> f64 {
    a0.dot(b0) + a1.dot(b1)
}

/// Maximizes `obj` from `start` (assumed feasible) with Barzilai-Borwein
/// steps and Armijo backtracking along the projected direction.
pub(crate) fn ascend<O: Objective, P: Projector>(obj: &O, proj: &P, start: CovSplit, cfg: &SolverConfig, scale: f64) -> Ascent {
    let mut x = start;
    let Some((mut f, mut g0, mut g1)) = obj.eval(&x) else {
        return Ascent {
            x,
            iterations: 0,
            converged: false,
        };
    };
    let mut alpha = cfg.step_init;
    let step_tol = 1e-13 * scale;
    let mut quiet = 0usize;

    for it in 0..cfg.max_iters {
        let trial = proj.project(&x.b0.add_scaled(alpha, &g0), &x.b1.add_scaled(alpha, &g1));
        let d0 = &trial.b0 - &x.b0;
        let d1 = &trial.b1 - &x.b1;
        let dn = d0.max_abs().max(d1.max_abs());
        if dn <= step_tol {
            return Ascent {
                x,
                iterations: it,
                converged: true,
            };
        }
        let slope = inner(&g0, &g1, &d0, &d1);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = CovSplit {
                b0: x.b0.add_scaled(t, &d0),
                b1: x.b1.add_scaled(t, &d1),
            };
            if let Some((fc, c0, c1)) = obj.eval(&cand) {
                if fc >= f + ARMIJO * t * slope {
                    accepted = Some((cand, fc, c0, c1));
                    break;
                }
            }
            t *= cfg.step_shrink;
        }
        let Some((xn, fnew, n0, n1)) = accepted else {
            // No ascent along the projected direction: numerically stationary.
            return Ascent {
                x,
                iterations: it,
                converged: true,
            };
        };

        let s0 = &xn.b0 - &x.b0;
        let s1 = &xn.b1 - &x.b1;
        let y0 = &n0 - &g0;
        let y1 = &n1 - &g1;
        let ss = inner(&s0, &s1, &s0, &s1);
        let sy = inner(&s0, &s1, &y0, &y1);
        alpha = if sy < 0.0 { (ss / -sy).clamp(ALPHA_MIN, ALPHA_MAX) } else { ALPHA_MAX.min(alpha * 4.0) };

        let gain = fnew - f;
        x = xn;
        f = fnew;
        g0 = n0;
        g1 = n1;

        if gain.abs() <= cfg.tol_obj * (1.0 + f.abs()) {
            quiet += 1;
            if quiet >= QUIET_STEPS {
                return Ascent {
                    x,
                    iterations: it + 1,
                    converged: true,
                };
            }
        } else {
            quiet = 0;
        }
    }
    Ascent {
        x,
        iterations: cfg.max_iters,
        converged: false,
    }
}
