//! Projections onto the covariance-split feasible set.
//!
//! The set `{B0 >= 0, B1 >= 0, B0 + B1 <= S}` is the intersection of three
//! convex sets, each with a closed-form Euclidean projection:
//!
//! - `B0 >= 0`, `B1 >= 0`: eigenvalue clipping;
//! - `B0 + B1 <= S`: with `D = psd_project(B0 + B1 - S)`, subtract `D/2`
//!   from each block.
//!
//! Dykstra's correction terms make the alternating passes converge to the
//! Euclidean projection of the intersection rather than to an arbitrary
//! feasible point, which keeps projected-gradient fixed points stationary.

use crate::channel::CovSplit;
use crate::matcore::SymMatrix;
use crate::tolerances::TOL_FEAS;

/// Approximate Euclidean projection of `(b0, b1)` onto the feasible set:
/// Dykstra cycles until every block is feasible to [`TOL_FEAS`] (or `iters`
/// cycles), followed by an exact feasibility repair.
pub(crate) fn project_split(s: &SymMatrix, b0: &SymMatrix, b1: &SymMatrix, iters: usize) -> CovSplit {
    let n = s.dim();
    let scale = 1.0 + s.max_abs();
    let mut x0 = b0.clone();
    let mut x1 = b1.clone();
    let mut p0 = SymMatrix::zeros(n);
    let mut p1 = SymMatrix::zeros(n);
    let mut pc = SymMatrix::zeros(n);

    for _ in 0..iters.max(1) {
        let (prev0, prev1) = (x0.clone(), x1.clone());

        let y = &x0 + &p0;
        x0 = y.psd_project();
        p0 = &y - &x0;

        let y = &x1 + &p1;
        x1 = y.psd_project();
        p1 = &y - &x1;

        let y0 = &x0 + &pc;
        let y1 = &x1 + &pc;
        let half = (&(&y0 + &y1) - s).psd_project().scale(0.5);
        x0 = &y0 - &half;
        x1 = &y1 - &half;
        pc = half;

        let moved = (&x0 - &prev0).max_abs().max((&x1 - &prev1).max_abs());
        // The sum step leaves B0 + B1 <= S exactly, so only the cones remain.
        if moved <= 1e-15 * scale || (x0.min_eigenvalue() >= -TOL_FEAS && x1.min_eigenvalue() >= -TOL_FEAS) {
            break;
        }
    }
    repair(s, x0, x1)
}

/// Clip both blocks to PSD, then scale them down together if the sum still
/// exceeds `S`.
pub(crate) fn repair(s: &SymMatrix, b0: SymMatrix, b1: SymMatrix) -> CovSplit {
    let b0 = b0.psd_project();
    let b1 = b1.psd_project();
    let total = &b0 + &b1;
    let ratio = generalized_max(s, &total);
    if ratio > 1.0 {
        let k = 1.0 / ratio;
        CovSplit {
            b0: b0.scale(k),
            b1: b1.scale(k),
        }
    } else {
        CovSplit { b0, b1 }
    }
}

/// Largest eigenvalue of `S^{-1/2} X S^{-1/2}`, i.e. the smallest `c` with
/// `X <= c S`. Returns 0 when `S` is not positive definite and `X = 0`.
pub(crate) fn generalized_max(s: &SymMatrix, x: &SymMatrix) -> f64 {
    let Ok(e) = s.eig() else {
        return f64::INFINITY;
    };
    if e.min() <= 0.0 {
        return if x.max_abs() == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let inv_sqrt = e.compose(|l| 1.0 / l.sqrt());
    let whitened = x.congruence(&inv_sqrt.to_matrix()).expect("dimensions agree");
    whitened.eig().map_or(f64::INFINITY, |w| w.max())
}
