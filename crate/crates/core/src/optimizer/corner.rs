//! Closed-form confidential layer for a fixed common layer.
//!
//! With `C = S - B0 = F F^T`, every `0 <= B1 <= C` is `F Z F^T` with
//! `0 <= Z <= I`, and
//!
//! ```text
//! f1 = 1/2 ln|I + F^T N1^{-1} F Z| - 1/2 ln|I + F^T N2^{-1} F Z|.
//! ```
//!
//! Writing `A = I + F^T N1^{-1} F` and `B = I + F^T N2^{-1} F`, the maximum
//! is reached by the orthogonal projector `Z` onto the span of the
//! generalized eigenvectors `A u = sigma B u` with `sigma > 1`; its value is
//! `1/2 sum ln sigma` over those eigenvalues. `f2` moves by exactly minus the
//! `B1`-dependent part of `f1` plus `1/2 ln|C + N2| - 1/2 ln|C + N1|`, so the
//! same `B1` also maximizes `f2` on the swapped channel ordering: this split
//! is the corner of the rate rectangle for the given `B0`.

use serde::Serialize;

use crate::channel::{AlignedChannel, CovSplit};
use crate::error::{Error, Result};
use crate::matcore::{Matrix, SymMatrix};

/// Generalized eigenvalues within this of one carry no secrecy gain.
const GAIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidentialCorner {
    pub split: CovSplit,
    /// Generalized eigenvalues of `(A, B)`, ascending.
    pub sigma: Vec<f64>,
    /// `1/2 sum_{sigma > 1} ln sigma`, equal to `f1` at `split`.
    pub value: f64,
}

fn sqrt_factor(c: &SymMatrix) -> Result<Matrix> {
    let e = c.eig()?;
    let n = c.dim();
    let v = e.vectors.as_slice();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            data[i * n + k] = v[i * n + k] * e.values[k].max(0.0).sqrt();
        }
    }
    Matrix::new(n, n, data)
}

/// The `B1` maximizing `f1` over `0 <= B1 <= S - B0`, with its value.
pub fn confidential_corner(ch: &AlignedChannel, b0: &SymMatrix) -> Result<ConfidentialCorner> {
    ch.f0(b0)?;
    if !b0.is_psd(crate::tolerances::TOL_FEAS) || !b0.loewner_leq(ch.s(), crate::tolerances::TOL_FEAS)? {
        return Err(Error::InfeasibleCovariance("B0 outside [0, S]".into()));
    }
    let n = ch.dim();
    let c = (ch.s() - b0).psd_project();
    let f = sqrt_factor(&c)?;
    let ft = f.transpose();
    let eye = SymMatrix::identity(n);
    let a = &eye + &ch.n1().inverse()?.congruence(&ft)?;
    let b = &eye + &ch.n2().inverse()?.congruence(&ft)?;

    // sigma(A, B) via B^{-1/2} A B^{-1/2}; B >= I is always well conditioned.
    let b_inv_sqrt = b.eig()?.compose(|l| 1.0 / l.sqrt());
    let whitened = a.congruence(&b_inv_sqrt.to_matrix())?.eig()?;
    let sigma = whitened.values.clone();
    let value = 0.5 * sigma.iter().filter(|&&s| s > 1.0 + GAIN_TOL).map(|s| s.ln()).sum::<f64>();

    let b1 = match whitened.basis_where(|s| s > 1.0 + GAIN_TOL) {
        None => SymMatrix::zeros(n),
        Some(y) => {
            let u = b_inv_sqrt.matmul(&y)?;
            let gram = u.transpose().matmul(&u)?.symmetrize()?;
            let proj = gram.inverse()?.congruence(&u)?;
            proj.congruence(&f)?.psd_project()
        }
    };
    // Rounding may leave B1 a hair above C; pull it back inside.
    let b1 = clip_to(&c, b1);
    Ok(ConfidentialCorner {
        split: CovSplit::new(b0.clone(), b1)?,
        sigma,
        value,
    })
}

fn clip_to(cap: &SymMatrix, x: SymMatrix) -> SymMatrix {
    let over = (&x - cap).psd_project();
    if over.max_abs() == 0.0 {
        x
    } else {
        &x - &over
    }
}
