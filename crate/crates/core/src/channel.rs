//! Channel models and the secrecy rate functionals.
//!
//! All rates are in nats. The aligned model replaces the gain matrices by
//! colored noises `N_k = H_k^{-1} H_k^{-T}`; on an aligned channel the three
//! bounds are
//!
//! ```text
//! f0(B0)     = min_k 1/2 [ln|S + N_k| - ln|(S - B0) + N_k|]
//! f1(B1)     = 1/2 [ln|B1 + N1| - ln|N1|] - 1/2 [ln|B1 + N2| - ln|N2|]
//! f2(B0, B1) = 1/2 [ln|(S - B0) + N2| - ln|B1 + N2|]
//!            - 1/2 [ln|(S - B0) + N1| - ln|B1 + N1|]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{Matrix, SymMatrix};
use crate::tolerances::TOL_FEAS;

/// Legitimate receiver index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Receiver {
    One,
    Two,
}

impl Receiver {
    pub const BOTH: [Receiver; 2] = [Receiver::One, Receiver::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Receiver::One => 0,
            Receiver::Two => 1,
        }
    }
}

/// `Y_k = H_k X + Z_k` with white noise and input covariance capped by `S`.
#[derive(Debug, Clone)]
pub struct GeneralChannel {
    h1: Matrix,
    h2: Matrix,
    s: SymMatrix,
}

impl GeneralChannel {
    pub fn new(h1: Matrix, h2: Matrix, s: SymMatrix) -> Result<Self> {
        let t = s.dim();
        for (name, h) in [("H1", &h1), ("H2", &h2)] {
            if h.cols() != t {
                return Err(Error::InvalidChannel(format!(
                    "{name} has {} columns but S is {t}x{t}",
                    h.cols()
                )));
            }
        }
        require_pd_constraint(&s)?;
        Ok(Self { h1, h2, s })
    }

    pub fn h1(&self) -> &Matrix {
        &self.h1
    }

    pub fn h2(&self) -> &Matrix {
        &self.h2
    }

    pub fn s(&self) -> &SymMatrix {
        &self.s
    }

    /// Number of transmit antennas.
    pub fn tx_dim(&self) -> usize {
        self.s.dim()
    }

    /// Equivalent aligned channel; requires square invertible gains.
    pub fn to_aligned(&self) -> Result<AlignedChannel> {
        let n1 = aligned_noise("H1", &self.h1)?;
        let n2 = aligned_noise("H2", &self.h2)?;
        AlignedChannel::new(n1, n2, self.s.clone())
    }

    /// The three rate bounds evaluated with grams `H_k X H_k^T + I`.
    pub fn rates(&self, split: &CovSplit) -> Result<RateBounds> {
        split.check_feasible(&self.s)?;
        let rem = &self.s - &split.b0;
        let gram_ld = |h: &Matrix, x: &SymMatrix| -> Result<f64> {
            let g = x.congruence(h)?;
            (&g + &SymMatrix::identity(h.rows())).logdet()
        };
        let mut r0 = f64::INFINITY;
        for h in [&self.h1, &self.h2] {
            r0 = r0.min(0.5 * (gram_ld(h, &self.s)? - gram_ld(h, &rem)?));
        }
        let b1_1 = gram_ld(&self.h1, &split.b1)?;
        let b1_2 = gram_ld(&self.h2, &split.b1)?;
        let r1 = 0.5 * b1_1 - 0.5 * b1_2;
        let r2 = 0.5 * (gram_ld(&self.h2, &rem)? - b1_2) - 0.5 * (gram_ld(&self.h1, &rem)? - b1_1);
        Ok(RateBounds { r0, r1, r2 })
    }
}

fn require_pd_constraint(s: &SymMatrix) -> Result<()> {
    s.logdet()
        .map(|_| ())
        .map_err(|_| Error::DegenerateConstraint("S not positive definite".into()))
}

fn aligned_noise(name: &str, h: &Matrix) -> Result<SymMatrix> {
    if !h.is_square() {
        return Err(Error::NotAlignable(format!(
            "{name} is {}x{}, not square",
            h.rows(),
            h.cols()
        )));
    }
    let scale = h.max_abs().powi(h.rows() as i32);
    let det = h.det()?;
    if !(det.abs() > 1e-10 * scale) {
        return Err(Error::NotAlignable(format!("{name} is singular (det {det:e})")));
    }
    let inv = h
        .inverse()
        .map_err(|_| Error::NotAlignable(format!("{name} is singular")))?;
    (&inv * &inv.transpose()).symmetrize()
}

/// `Y_k = X + Z_k` with `Z_k ~ N(0, N_k)`.
#[derive(Debug, Clone)]
pub struct AlignedChannel {
    n1: SymMatrix,
    n2: SymMatrix,
    s: SymMatrix,
    ld_n: [f64; 2],
    ld_s_n: [f64; 2],
}

impl AlignedChannel {
    pub fn new(n1: SymMatrix, n2: SymMatrix, s: SymMatrix) -> Result<Self> {
        n1.check_same_dim(&s)?;
        n2.check_same_dim(&s)?;
        require_pd_constraint(&s)?;
        let ld1 = n1
            .logdet()
            .map_err(|_| Error::InvalidChannel("N1 not positive definite".into()))?;
        let ld2 = n2
            .logdet()
            .map_err(|_| Error::InvalidChannel("N2 not positive definite".into()))?;
        let ld_s1 = (&s + &n1).logdet()?;
        let ld_s2 = (&s + &n2).logdet()?;
        Ok(Self {
            n1,
            n2,
            s,
            ld_n: [ld1, ld2],
            ld_s_n: [ld_s1, ld_s2],
        })
    }

    pub fn n1(&self) -> &SymMatrix {
        &self.n1
    }

    pub fn n2(&self) -> &SymMatrix {
        &self.n2
    }

    pub fn noise(&self, k: Receiver) -> &SymMatrix {
        match k {
            Receiver::One => &self.n1,
            Receiver::Two => &self.n2,
        }
    }

    pub fn s(&self) -> &SymMatrix {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// `ln|N_k|`.
    pub fn logdet_noise(&self, k: Receiver) -> f64 {
        self.ld_n[k.index()]
    }

    /// `ln|S + N_k|`.
    pub fn logdet_full(&self, k: Receiver) -> f64 {
        self.ld_s_n[k.index()]
    }

    /// The same channel with the two receivers exchanged.
    pub fn swapped(&self) -> AlignedChannel {
        Self {
            n1: self.n2.clone(),
            n2: self.n1.clone(),
            s: self.s.clone(),
            ld_n: [self.ld_n[1], self.ld_n[0]],
            ld_s_n: [self.ld_s_n[1], self.ld_s_n[0]],
        }
    }

    /// Largest common rate: `min_k 1/2 [ln|S + N_k| - ln|N_k|]`.
    pub fn r0_max(&self) -> f64 {
        Receiver::BOTH
            .iter()
            .map(|&k| 0.5 * (self.logdet_full(k) - self.logdet_noise(k)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Both branches of the `f0` minimum.
    pub fn f0_branches(&self, b0: &SymMatrix) -> Result<[f64; 2]> {
        self.s.check_same_dim(b0)?;
        if !b0.is_psd(TOL_FEAS) {
            return Err(Error::InfeasibleCovariance("B0 not PSD".into()));
        }
        if !b0.loewner_leq(&self.s, TOL_FEAS)? {
            return Err(Error::InfeasibleCovariance("B0 exceeds S".into()));
        }
        let rem = &self.s - b0;
        let mut out = [0.0; 2];
        for k in Receiver::BOTH {
            let ld = (&rem + self.noise(k)).logdet()?;
            out[k.index()] = 0.5 * (self.logdet_full(k) - ld);
        }
        Ok(out)
    }

    pub fn f0(&self, b0: &SymMatrix) -> Result<f64> {
        let [a, b] = self.f0_branches(b0)?;
        Ok(a.min(b))
    }

    pub fn f1(&self, b1: &SymMatrix) -> Result<f64> {
        self.s.check_same_dim(b1)?;
        if !b1.is_psd(TOL_FEAS) {
            return Err(Error::InfeasibleCovariance("B1 not PSD".into()));
        }
        let l1 = (b1 + &self.n1).logdet()?;
        let l2 = (b1 + &self.n2).logdet()?;
        Ok(0.5 * (l1 - self.ld_n[0]) - 0.5 * (l2 - self.ld_n[1]))
    }

    pub fn f2(&self, b0: &SymMatrix, b1: &SymMatrix) -> Result<f64> {
        let split = CovSplit::new(b0.clone(), b1.clone())?;
        split.check_feasible(&self.s)?;
        Ok(self.terms(&split)?.f2())
    }

    /// The bounds `(f0, f1, f2)` at a feasible split.
    pub fn rates(&self, split: &CovSplit) -> Result<RateBounds> {
        split.check_feasible(&self.s)?;
        let t = self.terms(split)?;
        Ok(RateBounds {
            r0: t.f0(),
            r1: t.f1(),
            r2: t.f2(),
        })
    }

    /// `1/2 [(B1 + N1)^{-1} - (B1 + N2)^{-1}]`.
    pub fn grad_f1_b1(&self, b1: &SymMatrix) -> Result<SymMatrix> {
        let p1 = (b1 + &self.n1).inverse()?;
        let p2 = (b1 + &self.n2).inverse()?;
        Ok((&p1 - &p2).scale(0.5))
    }

    /// Same closed form as [`Self::grad_f1_b1`].
    pub fn grad_f2_b1(&self, b1: &SymMatrix) -> Result<SymMatrix> {
        self.grad_f1_b1(b1)
    }

    /// `-1/2 [((S - B0) + N2)^{-1} - ((S - B0) + N1)^{-1}]`.
    pub fn grad_f2_b0(&self, b0: &SymMatrix) -> Result<SymMatrix> {
        let rem = &self.s - b0;
        let k1 = (&rem + &self.n1).inverse()?;
        let k2 = (&rem + &self.n2).inverse()?;
        Ok((&k1 - &k2).scale(0.5))
    }

    /// Gradient of the `k`-th `f0` branch: `1/2 ((S - B0) + N_k)^{-1}`.
    pub fn grad_f0_b0(&self, b0: &SymMatrix, k: Receiver) -> Result<SymMatrix> {
        let rem = &self.s - b0;
        Ok((&rem + self.noise(k)).inverse()?.scale(0.5))
    }

    /// Log-dets and inverses of the four shifted matrices at a split.
    ///
    /// No feasibility check is made beyond positive definiteness of the
    /// shifted matrices; callers inside the optimizer rely on this.
    pub fn terms(&self, split: &CovSplit) -> Result<RateTerms> {
        let rem = &self.s - &split.b0;
        let (ld_k1, k1_inv) = (&rem + &self.n1).logdet_and_inverse()?;
        let (ld_k2, k2_inv) = (&rem + &self.n2).logdet_and_inverse()?;
        let (ld_p1, p1_inv) = (&split.b1 + &self.n1).logdet_and_inverse()?;
        let (ld_p2, p2_inv) = (&split.b1 + &self.n2).logdet_and_inverse()?;
        Ok(RateTerms {
            ld_n: self.ld_n,
            ld_s_n: self.ld_s_n,
            ld_k: [ld_k1, ld_k2],
            ld_p: [ld_p1, ld_p2],
            k_inv: [k1_inv, k2_inv],
            p_inv: [p1_inv, p2_inv],
        })
    }
}

/// Cached log-dets and inverses of `(S - B0) + N_k` and `B1 + N_k`.
#[derive(Debug, Clone)]
pub struct RateTerms {
    ld_n: [f64; 2],
    ld_s_n: [f64; 2],
    ld_k: [f64; 2],
    ld_p: [f64; 2],
    /// `((S - B0) + N_k)^{-1}`
    pub k_inv: [SymMatrix; 2],
    /// `(B1 + N_k)^{-1}`
    pub p_inv: [SymMatrix; 2],
}

impl RateTerms {
    pub fn f0_branch(&self, k: Receiver) -> f64 {
        let i = k.index();
        0.5 * (self.ld_s_n[i] - self.ld_k[i])
    }

    pub fn f0(&self) -> f64 {
        self.f0_branch(Receiver::One).min(self.f0_branch(Receiver::Two))
    }

    pub fn f1(&self) -> f64 {
        0.5 * (self.ld_p[0] - self.ld_n[0]) - 0.5 * (self.ld_p[1] - self.ld_n[1])
    }

    pub fn f2(&self) -> f64 {
        0.5 * (self.ld_k[1] - self.ld_p[1]) - 0.5 * (self.ld_k[0] - self.ld_p[0])
    }

    pub fn grad_f1_b1(&self) -> SymMatrix {
        (&self.p_inv[0] - &self.p_inv[1]).scale(0.5)
    }

    pub fn grad_f2_b0(&self) -> SymMatrix {
        (&self.k_inv[0] - &self.k_inv[1]).scale(0.5)
    }

    pub fn grad_f0_b0(&self, k: Receiver) -> SymMatrix {
        self.k_inv[k.index()].scale(0.5)
    }
}

/// Covariance allocation: `B0` to the common layer, `B1` to confidential
/// layer 1, and the remainder `S - B0 - B1` to confidential layer 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplitRows", into = "SplitRows")]
pub struct CovSplit {
    pub b0: SymMatrix,
    pub b1: SymMatrix,
}

impl CovSplit {
    pub fn new(b0: SymMatrix, b1: SymMatrix) -> Result<Self> {
        b0.check_same_dim(&b1)?;
        Ok(Self { b0, b1 })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            b0: SymMatrix::zeros(dim),
            b1: SymMatrix::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.b0.dim()
    }

    /// `S - B0 - B1`.
    pub fn remainder(&self, s: &SymMatrix) -> SymMatrix {
        &(s - &self.b0) - &self.b1
    }

    /// Checks `B0 >= 0`, `B1 >= 0`, `B0 + B1 <= S` within [`TOL_FEAS`].
    pub fn check_feasible(&self, s: &SymMatrix) -> Result<()> {
        s.check_same_dim(&self.b0)?;
        if !self.b0.is_psd(TOL_FEAS) {
            return Err(Error::InfeasibleCovariance("B0 not PSD".into()));
        }
        if !self.b1.is_psd(TOL_FEAS) {
            return Err(Error::InfeasibleCovariance("B1 not PSD".into()));
        }
        if !self.remainder(s).is_psd(TOL_FEAS) {
            return Err(Error::InfeasibleCovariance("B0 + B1 exceeds S".into()));
        }
        Ok(())
    }

    pub fn is_feasible(&self, s: &SymMatrix) -> bool {
        self.check_feasible(s).is_ok()
    }
}

#[derive(Serialize, Deserialize)]
struct SplitRows {
    #[serde(rename = "B0")]
    b0: Vec<Vec<f64>>,
    #[serde(rename = "B1")]
    b1: Vec<Vec<f64>>,
}

impl TryFrom<SplitRows> for CovSplit {
    type Error = Error;

    fn try_from(rows: SplitRows) -> Result<Self> {
        CovSplit::new(SymMatrix::from_rows(&rows.b0)?, SymMatrix::from_rows(&rows.b1)?)
    }
}

impl From<CovSplit> for SplitRows {
    fn from(split: CovSplit) -> Self {
        Self {
            b0: split.b0.to_rows(),
            b1: split.b1.to_rows(),
        }
    }
}

/// Unclamped right-hand sides of the three rate constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RateBounds {
    pub fn clamped(&self) -> RateTriple {
        RateTriple {
            r0: self.r0.max(0.0),
            r1: self.r1.max(0.0),
            r2: self.r2.max(0.0),
        }
    }
}

/// A nonnegative rate triple `(R0, R1, R2)` in nats per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateTriple {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RateTriple {
    pub fn new(r0: f64, r1: f64, r2: f64) -> Result<Self> {
        for (name, r) in [("r0", r0), ("r1", r1), ("r2", r2)] {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::InvalidChannel(format!("rate {name} = {r} is not a nonnegative finite value")));
            }
        }
        Ok(Self { r0, r1, r2 })
    }

    pub fn scaled(&self, k: f64) -> RateTriple {
        RateTriple {
            r0: self.r0 * k,
            r1: self.r1 * k,
            r2: self.r2 * k,
        }
    }
}

impl From<RateTriple> for RateBounds {
    fn from(r: RateTriple) -> Self {
        RateBounds {
            r0: r.r0,
            r1: r.r1,
            r2: r.r2,
        }
    }
}

/// Dirty-paper precoder `F = B1 H1^T (I + H1 B1 H1^T)^{-1} H1`.
pub fn dpc_precoder(h1: &Matrix, b1: &SymMatrix) -> Result<Matrix> {
    if h1.cols() != b1.dim() {
        return Err(Error::DimMismatch {
            left: h1.shape(),
            right: (b1.dim(), b1.dim()),
        });
    }
    if !b1.is_psd(TOL_FEAS) {
        return Err(Error::InfeasibleCovariance("B1 not PSD".into()));
    }
    let gram = &b1.congruence(h1)? + &SymMatrix::identity(h1.rows());
    let inner = gram.inverse()?.to_matrix();
    let lhs = b1.matmul(&h1.transpose())?;
    lhs.matmul(&inner)?.matmul(h1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(n1: f64, n2: f64, s: f64) -> AlignedChannel {
        AlignedChannel::new(SymMatrix::scalar(n1), SymMatrix::scalar(n2), SymMatrix::scalar(s)).unwrap()
    }

    fn reference_general() -> GeneralChannel {
        GeneralChannel::new(
            Matrix::from_rows(&[[1.8, 2.0], [1.0, 3.0]]).unwrap(),
            Matrix::from_rows(&[[3.3, 1.3], [2.0, -1.5]]).unwrap(),
            SymMatrix::from_rows(&[[5.0, 1.25], [1.25, 10.0]]).unwrap(),
        )
        .unwrap()
    }

    fn s11(x: f64) -> SymMatrix {
        SymMatrix::scalar(x)
    }

    #[test]
    fn to_aligned_examples() {
        let id = Matrix::identity(2);
        let ch = GeneralChannel::new(id.clone(), id, SymMatrix::identity(2)).unwrap();
        let al = ch.to_aligned().unwrap();
        assert!((al.n1() - &SymMatrix::identity(2)).max_abs() < 1e-15);
        assert!((al.n2() - &SymMatrix::identity(2)).max_abs() < 1e-15);

        let h = Matrix::from_rows(&[[2.0]]).unwrap();
        let ch = GeneralChannel::new(h.clone(), h, s11(1.0)).unwrap();
        assert!((ch.to_aligned().unwrap().n1().get(0, 0) - 0.25).abs() < 1e-15);

        let al = reference_general().to_aligned().unwrap();
        let expected = SymMatrix::from_rows(&[[13.0, -6.6], [-6.6, 4.24]]).unwrap().scale(1.0 / 11.56);
        assert!((al.n1() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn to_aligned_rejects_non_square_or_singular() {
        let h1 = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let h2 = Matrix::identity(2);
        let ch = GeneralChannel::new(h1, h2.clone(), SymMatrix::identity(2)).unwrap();
        assert!(matches!(ch.to_aligned(), Err(Error::NotAlignable(_))));

        let sing = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let ch = GeneralChannel::new(sing, h2, SymMatrix::identity(2)).unwrap();
        assert!(matches!(ch.to_aligned(), Err(Error::NotAlignable(_))));
    }

    #[test]
    fn singular_power_constraint_is_degenerate() {
        let err = AlignedChannel::new(SymMatrix::identity(2), SymMatrix::identity(2), SymMatrix::diag(&[1.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, Error::DegenerateConstraint(_)));
        let err = GeneralChannel::new(Matrix::identity(2), Matrix::identity(2), SymMatrix::diag(&[1.0, -1.0]))
            .unwrap_err();
        assert_eq!(err, Error::DegenerateConstraint("S not positive definite".into()));
    }

    #[test]
    fn gain_width_must_match_constraint() {
        let err = GeneralChannel::new(Matrix::identity(3), Matrix::identity(2), SymMatrix::identity(2)).unwrap_err();
        assert!(matches!(err, Error::InvalidChannel(_)));
    }

    #[test]
    fn f0_examples() {
        let ch = scalar(1.0, 2.0, 3.0);
        assert_eq!(ch.f0(&s11(0.0)).unwrap(), 0.0);
        assert!((ch.f0(&s11(3.0)).unwrap() - 0.5 * 2.5f64.ln()).abs() < 1e-14);
        assert!((0.5 * 2.5f64.ln() - 0.458145).abs() < 1e-6);
        let ch = scalar(1.0, 1.0, 1.0);
        assert!((ch.f0(&s11(0.5)).unwrap() - 0.5 * (2.0f64 / 1.5).ln()).abs() < 1e-14);
        assert!((0.5 * (2.0f64 / 1.5).ln() - 0.143841).abs() < 1e-6);
        assert!(matches!(ch.f0(&s11(1.5)), Err(Error::InfeasibleCovariance(_))));
        assert!(matches!(ch.f0(&s11(-0.1)), Err(Error::InfeasibleCovariance(_))));
    }

    #[test]
    fn f1_examples() {
        let ch = scalar(1.0, 2.0, 3.0);
        assert_eq!(ch.f1(&s11(0.0)).unwrap(), 0.0);
        let expected = 0.5 * 1.6f64.ln();
        assert!((ch.f1(&s11(3.0)).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.235001).abs() < 1e-6);
        let same = scalar(1.5, 1.5, 3.0);
        assert_eq!(same.f1(&s11(2.0)).unwrap(), 0.0);
        assert!(matches!(ch.f1(&s11(-1.0)), Err(Error::InfeasibleCovariance(_))));
    }

    #[test]
    fn f2_examples() {
        let ch = scalar(1.0, 2.0, 3.0);
        assert!(ch.f2(&s11(1.0), &s11(2.0)).unwrap().abs() < 1e-15);
        let same = scalar(0.7, 0.7, 3.0);
        assert_eq!(same.f2(&s11(1.0), &s11(0.5)).unwrap(), 0.0);
        let ch = scalar(2.0, 1.0, 3.0);
        assert!((ch.f2(&s11(0.0), &s11(0.0)).unwrap() - 0.5 * 1.6f64.ln()).abs() < 1e-14);
        assert!(matches!(
            ch.f2(&s11(2.0), &s11(2.0)),
            Err(Error::InfeasibleCovariance(_))
        ));
    }

    #[test]
    fn general_rates_on_reference_channel() {
        let ch = reference_general();
        let s = ch.s().clone();
        let g1 = (&s.congruence(ch.h1()).unwrap() + &SymMatrix::identity(2)).logdet().unwrap();
        let g2 = (&s.congruence(ch.h2()).unwrap() + &SymMatrix::identity(2)).logdet().unwrap();
        assert!((g1.exp() - 728.6375).abs() < 1e-9);
        assert!((g2.exp() - 2879.13359375).abs() < 1e-8);

        let full = CovSplit::new(s.clone(), SymMatrix::zeros(2)).unwrap();
        let r = ch.rates(&full).unwrap();
        assert!((r.r0 - 0.5 * 728.6375f64.ln()).abs() < 1e-12);
        assert!((r.r0 - 3.29558).abs() < 1e-5);
        assert!(r.r1.abs() < 1e-15 && r.r2.abs() < 1e-12);

        let r = ch.rates(&CovSplit::zeros(2)).unwrap();
        let expected = 0.5 * 2879.13359375f64.ln() - 0.5 * 728.6375f64.ln();
        assert!((r.r2 - expected).abs() < 1e-12);
        assert!((r.r2 - 0.6870341702732903).abs() < 1e-12);
        assert_eq!(r.r0, 0.0);
    }

    #[test]
    fn identical_gains_kill_confidential_rates() {
        let h = Matrix::from_rows(&[[1.8, 2.0], [1.0, 3.0]]).unwrap();
        let ch = GeneralChannel::new(h.clone(), h, SymMatrix::from_rows(&[[5.0, 1.25], [1.25, 10.0]]).unwrap())
            .unwrap();
        let split = CovSplit::new(SymMatrix::diag(&[1.0, 2.0]), SymMatrix::diag(&[2.0, 3.0])).unwrap();
        let r = ch.rates(&split).unwrap();
        assert!(r.r1.abs() < 1e-14 && r.r2.abs() < 1e-14);
    }

    #[test]
    fn aligned_rates_examples() {
        let ch = AlignedChannel::new(SymMatrix::identity(1), SymMatrix::identity(1), SymMatrix::identity(1)).unwrap();
        let split = CovSplit::new(s11(1.0), s11(0.0)).unwrap();
        let r = ch.rates(&split).unwrap();
        assert!((r.r0 - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!((r.r1, r.r2), (0.0, 0.0));

        let ch = scalar(1.0, 2.0, 3.0);
        let split = CovSplit::new(s11(0.5), s11(1.25)).unwrap();
        let r = ch.rates(&split).unwrap();
        assert!((r.r0 - ch.f0(&split.b0).unwrap()).abs() < 1e-15);
        assert!((r.r1 - ch.f1(&split.b1).unwrap()).abs() < 1e-15);
        assert!((r.r2 - ch.f2(&split.b0, &split.b1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn reference_channel_aligned_matches_general() {
        let g = reference_general();
        let a = g.to_aligned().unwrap();
        let split = CovSplit::new(
            SymMatrix::from_rows(&[[1.0, 0.2], [0.2, 2.0]]).unwrap(),
            SymMatrix::from_rows(&[[2.0, -0.5], [-0.5, 3.0]]).unwrap(),
        )
        .unwrap();
        let rg = g.rates(&split).unwrap();
        let ra = a.rates(&split).unwrap();
        assert!((rg.r0 - ra.r0).abs() < 1e-9);
        assert!((rg.r1 - ra.r1).abs() < 1e-9);
        assert!((rg.r2 - ra.r2).abs() < 1e-9);
        assert!((a.r0_max() - 0.5 * 728.6375f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn gradient_examples() {
        let ch = scalar(1.0, 2.0, 3.0);
        assert!((ch.grad_f1_b1(&s11(0.0)).unwrap().get(0, 0) - 0.25).abs() < 1e-15);
        let same = scalar(1.0, 1.0, 3.0);
        assert_eq!(same.grad_f1_b1(&s11(0.7)).unwrap().max_abs(), 0.0);
        let g1 = ch.grad_f1_b1(&s11(1.3)).unwrap();
        let g2 = ch.grad_f2_b1(&s11(1.3)).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn precoder_examples() {
        let h = Matrix::identity(2);
        assert_eq!(dpc_precoder(&h, &SymMatrix::zeros(2)).unwrap().max_abs(), 0.0);
        let f = dpc_precoder(&h, &SymMatrix::identity(2)).unwrap();
        assert!((&f - &Matrix::identity(2).scale(0.5)).max_abs() < 1e-15);
        let f = dpc_precoder(&Matrix::from_rows(&[[2.0]]).unwrap(), &s11(1.0)).unwrap();
        assert!((f.get(0, 0) - 0.8).abs() < 1e-15);
        assert!(matches!(
            dpc_precoder(&Matrix::identity(3), &SymMatrix::identity(2)),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn split_json_shape() {
        let split = CovSplit::new(s11(1.0), s11(2.0)).unwrap();
        let text = serde_json::to_string(&split).unwrap();
        assert_eq!(text, r#"{"B0":[[1.0]],"B1":[[2.0]]}"#);
        let back: CovSplit = serde_json::from_str(&text).unwrap();
        assert_eq!(back, split);
    }
}
