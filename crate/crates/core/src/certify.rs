//! KKT certificates, enhanced noise and converse-bound checks.
//!
//! Multipliers are stated at twice the Lagrangian scale, so stationarity in
//! `B0` and `B1` reads
//!
//! ```text
//! (beta1 + lambda2) K1^-1 + beta2 K2^-1 + M0 = lambda2 K2^-1 + M2
//! M2 - M1 = (lambda1 + lambda2) (P1^-1 - P2^-1)
//! ```
//!
//! with `Kk = S - B0 + Nk` and `Pk = B1 + Nk`, alongside `M0 B0 = 0`,
//! `M1 B1 = 0` and `M2 (S - B0 - B1) = 0`.

use crate::channel::{AlignedChannel, CovSplit, RateBounds, Receiver};
use crate::error::{Error, Result};
use crate::matcore::{jacobi, Matrix, SymMatrix};
use crate::optimizer::{active_threshold, Weights};
use crate::tolerances::{cert as tol, RECOVERY_LIMIT, TIGHT_R0, TOL_CERT};

const AFFINE_PSD_ROUNDS: usize = 500;

/// Lagrange multipliers witnessing stationarity of a candidate split.
#[derive(Debug, Clone, PartialEq)]
pub struct KktCertificate {
    pub m0: SymMatrix,
    pub m1: SymMatrix,
    pub m2: SymMatrix,
    pub beta1: f64,
    pub beta2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub r0_target: f64,
    /// Largest entry of [`verify_kkt`] at recovery time.
    pub residual: f64,
    /// Condition number of the least-squares system over its retained
    /// singular values; large values flag non-unique multipliers.
    pub condition: f64,
}

impl KktCertificate {
    pub fn weight_sum(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    pub fn beta(&self, k: Receiver) -> f64 {
        match k {
            Receiver::One => self.beta1,
            Receiver::Two => self.beta2,
        }
    }
}

/// Max-norm residuals of the KKT system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub stationarity_b0: f64,
    pub stationarity_b1: f64,
    pub slack_b0: f64,
    pub slack_b1: f64,
    pub slack_sum: f64,
    pub psd_m0: f64,
    pub psd_m1: f64,
    pub psd_m2: f64,
    pub beta_sign: f64,
    pub beta_slack: f64,
}

impl KktResiduals {
    /// `(name, value, tolerance)` for every entry, in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64, f64); 10] {
        [
            ("stationarity_b0", self.stationarity_b0, tol::KKT_STATIONARITY),
            ("stationarity_b1", self.stationarity_b1, tol::KKT_STATIONARITY),
            ("slack_b0", self.slack_b0, tol::KKT_SLACKNESS),
            ("slack_b1", self.slack_b1, tol::KKT_SLACKNESS),
            ("slack_sum", self.slack_sum, tol::KKT_SLACKNESS),
            ("psd_m0", self.psd_m0, TOL_CERT),
            ("psd_m1", self.psd_m1, TOL_CERT),
            ("psd_m2", self.psd_m2, TOL_CERT),
            ("beta_sign", self.beta_sign, TOL_CERT),
            ("beta_slack", self.beta_slack, tol::KKT_SLACKNESS),
        ]
    }

    /// Largest residual; NaN if any entry is NaN.
    pub fn max(&self) -> f64 {
        self.entries().iter().fold(0.0, |m, e| if e.1.is_nan() { f64::NAN } else { m.max(e.1) })
    }

    pub fn passed(&self) -> bool {
        self.entries().iter().all(|&(_, v, t)| v <= t)
    }
}

/// Residuals of the enhanced-channel identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhancementResiduals {
    /// Smallest eigenvalue of `N1 - N~` (negative means violation).
    pub dominance1: f64,
    /// Smallest eigenvalue of `N2 - N~`.
    pub dominance2: f64,
    pub det_identity: f64,
    pub ratio_identity: f64,
    pub stationarity_enh: f64,
    pub converse_gap: f64,
}

impl EnhancementResiduals {
    /// `(name, value, passed)` for every entry.
    pub fn entries(&self) -> [(&'static str, f64, bool); 6] {
        [
            ("dominance1", self.dominance1, self.dominance1 >= -tol::DOMINANCE_N1),
            ("dominance2", self.dominance2, self.dominance2 >= -tol::DOMINANCE_N2),
            ("det_identity", self.det_identity, self.det_identity <= tol::DET_IDENTITY),
            ("ratio_identity", self.ratio_identity, self.ratio_identity <= tol::RATIO_IDENTITY),
            ("stationarity_enh", self.stationarity_enh, self.stationarity_enh <= tol::STATIONARITY_ENH),
            (
                "converse_gap",
                self.converse_gap,
                (tol::CONVERSE_GAP_LOW..=tol::CONVERSE_GAP_HIGH).contains(&self.converse_gap),
            ),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementReport {
    pub n_tilde: SymMatrix,
    pub residuals: EnhancementResiduals,
    pub passed: bool,
}

// ---------------------------------------------------------------------------
// Least-squares plumbing

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Frobenius-isometric coordinates of a symmetric matrix.
fn sym_coords(m: &SymMatrix) -> Vec<f64> {
    upper_pairs(m.dim())
        .into_iter()
        .map(|(i, j)| if i == j { m.get(i, i) } else { std::f64::consts::SQRT_2 * m.get(i, j) })
        .collect()
}

/// A multiplier restricted to the span of `basis`: `M = U Y U^T`.
struct Block {
    basis: Option<Matrix>,
}

impl Block {
    fn params(&self) -> usize {
        self.basis.as_ref().map_or(0, |u| {
            let k = u.cols();
            k * (k + 1) / 2
        })
    }

    fn inner_dim(&self) -> usize {
        self.basis.as_ref().map_or(0, Matrix::cols)
    }

    fn inner(&self, x: &[f64]) -> SymMatrix {
        let k = self.inner_dim();
        let mut data = vec![0.0; k * k];
        for (&(i, j), &v) in upper_pairs(k).iter().zip(x) {
            let v = if i == j { v } else { v / std::f64::consts::SQRT_2 };
            data[i * k + j] = v;
            data[j * k + i] = v;
        }
        SymMatrix::from_raw_unchecked(k, data)
    }

    fn expand(&self, x: &[f64], t: usize) -> SymMatrix {
        match &self.basis {
            None => SymMatrix::zeros(t),
            Some(u) => self.inner(x).congruence(u).expect("basis rows match dimension"),
        }
    }

    /// Unit coordinate direction `p` mapped to the full space.
    fn direction(&self, p: usize, t: usize) -> SymMatrix {
        let mut x = vec![0.0; self.params()];
        x[p] = 1.0;
        self.expand(&x, t)
    }

    fn project_psd(&self, x: &mut [f64]) {
        if x.is_empty() {
            return;
        }
        let y = self.inner(x).psd_project();
        x.copy_from_slice(&sym_coords(&y));
    }
}

/// Null space (eigenvalues at or below `thr`) of a slack matrix.
fn null_basis(slack: &SymMatrix, thr: f64) -> Block {
    let basis = slack.eig().ok().and_then(|e| e.basis_where(|l| l <= thr));
    Block { basis }
}

/// Minimum-norm least-squares solver for a small dense system.
struct Pinv {
    n: usize,
    a: Vec<Vec<f64>>,
    vecs: Vec<f64>,
    inv_vals: Vec<f64>,
    condition: f64,
}

impl Pinv {
    fn new(a: Vec<Vec<f64>>, n: usize) -> Self {
        let mut ata = vec![0.0; n * n];
        for row in &a {
            for i in 0..n {
                for j in 0..n {
                    ata[i * n + j] += row[i] * row[j];
                }
            }
        }
        let (vals, vecs) = if n == 0 { (vec![], vec![]) } else { jacobi::eigh(n, &ata) };
        let top = vals.iter().fold(0.0f64, |m, &v| m.max(v));
        // Eigenvalues of the Gram below its rounding floor are numerically
        // zero; keeping them lets exact dependencies amplify noise.
        let cut = top * 1e-13;
        let kept: Vec<f64> = vals.iter().copied().filter(|&v| v > cut && v > 0.0).collect();
        let condition = match (kept.first(), kept.last()) {
            (Some(lo), Some(hi)) => (hi / lo).sqrt(),
            _ => 1.0,
        };
        let inv_vals = vals.iter().map(|&v| if v > cut && v > 0.0 { 1.0 / v } else { 0.0 }).collect();
        Self {
            n,
            a,
            vecs,
            inv_vals,
            condition,
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    /// `A^+ r`.
    fn solve(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut atr = vec![0.0; n];
        for (row, &ri) in self.a.iter().zip(r) {
            for i in 0..n {
                atr[i] += row[i] * ri;
            }
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            if self.inv_vals[k] == 0.0 {
                continue;
            }
            let c: f64 = (0..n).map(|i| self.vecs[i * n + k] * atr[i]).sum::<f64>() * self.inv_vals[k];
            for i in 0..n {
                out[i] += c * self.vecs[i * n + k];
            }
        }
        out
    }
}

fn tight_branches(ch: &AlignedChannel, split: &CovSplit, r0_target: f64) -> Result<[bool; 2]> {
    let br = ch.f0_branches(&split.b0)?;
    Ok([br[0] - r0_target <= TIGHT_R0, br[1] - r0_target <= TIGHT_R0])
}

struct Layout {
    blocks: [Block; 3],
    offsets: [usize; 4],
    betas: Vec<Receiver>,
}

impl Layout {
    fn len(&self) -> usize {
        self.offsets[3] + self.betas.len()
    }

    fn certificate(&self, x: &[f64], t: usize, w: &Weights) -> KktCertificate {
        let m = |i: usize| self.blocks[i].expand(&x[self.offsets[i]..self.offsets[i + 1]], t);
        let mut beta = [0.0; 2];
        for (k, r) in self.betas.iter().enumerate() {
            beta[r.index()] = x[self.offsets[3] + k];
        }
        KktCertificate {
            m0: m(0),
            m1: m(1),
            m2: m(2),
            beta1: beta[0],
            beta2: beta[1],
            lambda1: w.lambda1,
            lambda2: w.lambda2,
            r0_target: w.r0_target,
            residual: f64::NAN,
            condition: 1.0,
        }
    }

    fn project_feasible(&self, x: &mut [f64]) {
        for i in 0..3 {
            self.blocks[i].project_psd(&mut x[self.offsets[i]..self.offsets[i + 1]]);
        }
        for b in &mut x[self.offsets[3]..] {
            *b = b.max(0.0);
        }
    }
}

fn fit_subset(ch: &AlignedChannel, split: &CovSplit, w: &Weights, thr: f64, betas: Vec<Receiver>) -> Result<KktCertificate> {
    let t = ch.dim();
    let terms = ch.terms(split)?;
    let blocks = [
        null_basis(&split.b0, thr),
        null_basis(&split.b1, thr),
        null_basis(&split.remainder(ch.s()), thr),
    ];
    let mut offsets = [0usize; 4];
    for i in 0..3 {
        offsets[i + 1] = offsets[i] + blocks[i].params();
    }
    let layout = Layout { blocks, offsets, betas };
    let n = layout.len();
    let q = t * (t + 1) / 2;

    // Column j holds the response of [eq_b0; eq_b1] to unknown j.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let zero = vec![0.0; q];
    for i in 0..3 {
        for p in 0..layout.blocks[i].params() {
            let d = sym_coords(&layout.blocks[i].direction(p, t));
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            let col = match i {
                0 => [d, zero.clone()].concat(),
                1 => [zero.clone(), neg].concat(),
                _ => [neg, d].concat(),
            };
            cols.push(col);
        }
    }
    for r in &layout.betas {
        cols.push([sym_coords(&terms.k_inv[r.index()]), zero.clone()].concat());
    }
    let lam = w.weight_sum();
    let rhs0 = (&terms.k_inv[1] - &terms.k_inv[0]).scale(w.lambda2);
    let rhs1 = (&terms.p_inv[0] - &terms.p_inv[1]).scale(lam);
    let b = [sym_coords(&rhs0), sym_coords(&rhs1)].concat();

    let a: Vec<Vec<f64>> = (0..2 * q).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
    let pinv = Pinv::new(a, n);

    let mut x = pinv.solve(&b);
    let mut feas = x.clone();
    for _ in 0..AFFINE_PSD_ROUNDS {
        feas.copy_from_slice(&x);
        layout.project_feasible(&mut feas);
        let moved = feas.iter().zip(&x).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        if moved <= 1e-15 * (1.0 + lam) {
            break;
        }
        let r: Vec<f64> = b.iter().zip(pinv.apply(&feas)).map(|(bi, ai)| bi - ai).collect();
        let corr = pinv.solve(&r);
        x = feas.iter().zip(&corr).map(|(f, c)| f + c).collect();
    }

    let mut cert = layout.certificate(&feas, t, w);
    cert.condition = pinv.condition;
    cert.residual = verify_kkt(ch, split, &cert)?.max();
    Ok(cert)
}

/// Recovers multipliers for a candidate optimum of the weighted program.
///
/// Each `Mi` is confined to the null space of its paired slack matrix, so
/// complementary slackness holds by construction up to the masking
/// threshold. `beta_k` is fitted only on `f0` branches that are tight at
/// the target; among supports with equally small residual the smallest one
/// wins. Returns the minimum-norm solution when multipliers are not unique.
pub fn recover_multipliers(ch: &AlignedChannel, split: &CovSplit, w: &Weights) -> Result<KktCertificate> {
    w.validate()?;
    split.check_feasible(ch.s())?;
    let thr = active_threshold(ch.s());
    let tight = tight_branches(ch, split, w.r0_target)?;
    let candidates: Vec<Receiver> = Receiver::BOTH.into_iter().filter(|r| tight[r.index()]).collect();

    let mut supports: Vec<Vec<Receiver>> = vec![vec![]];
    for &r in &candidates {
        supports.push(vec![r]);
    }
    if candidates.len() == 2 {
        supports.push(candidates.clone());
    }

    let fits = supports
        .into_iter()
        .map(|s| fit_subset(ch, split, w, thr, s))
        .collect::<Result<Vec<_>>>()?;
    let best = fits.iter().map(|c| c.residual).fold(f64::INFINITY, f64::min);
    let accept = best.max(0.0) * (1.0 + 1e-6) + 1e-10;
    let cert = fits
        .into_iter()
        .find(|c| c.residual <= accept)
        .expect("at least one support is fitted");
    if !(cert.residual <= RECOVERY_LIMIT) {
        return Err(Error::NoCertificate {
            residual: cert.residual,
            limit: RECOVERY_LIMIT,
        });
    }
    Ok(cert)
}

fn neg_part(m: &SymMatrix) -> f64 {
    (-m.min_eigenvalue()).max(0.0)
}

fn product_norm(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    Ok(a.matmul(&b.to_matrix())?.max_abs())
}

/// Evaluates every KKT residual of `cert` at `split`.
pub fn verify_kkt(ch: &AlignedChannel, split: &CovSplit, cert: &KktCertificate) -> Result<KktResiduals> {
    let terms = ch.terms(split)?;
    let lam = cert.weight_sum();
    let [k1, k2] = &terms.k_inv;
    let [p1, p2] = &terms.p_inv;

    let lhs0 = &(&k1.scale(cert.beta1 + cert.lambda2) + &k2.scale(cert.beta2)) + &cert.m0;
    let rhs0 = &k2.scale(cert.lambda2) + &cert.m2;
    let r14 = &(&cert.m2 - &cert.m1) - &(p1 - p2).scale(lam);

    let br = ch.f0_branches(&split.b0)?;
    let beta_slack = Receiver::BOTH
        .iter()
        .map(|&r| (cert.beta(r) * (br[r.index()] - cert.r0_target)).abs())
        .fold(0.0, f64::max);

    Ok(KktResiduals {
        stationarity_b0: (&lhs0 - &rhs0).max_abs(),
        stationarity_b1: r14.max_abs(),
        slack_b0: product_norm(&cert.m0, &split.b0)?,
        slack_b1: product_norm(&cert.m1, &split.b1)?,
        slack_sum: product_norm(&cert.m2, &split.remainder(ch.s()))?,
        psd_m0: neg_part(&cert.m0),
        psd_m1: neg_part(&cert.m1),
        psd_m2: neg_part(&cert.m2),
        beta_sign: (-cert.beta1).max(-cert.beta2).max(0.0),
        beta_slack,
    })
}

/// `N~ = (N1^-1 + M1 / (lambda1 + lambda2))^-1`.
pub fn construct_enhanced_noise(ch: &AlignedChannel, cert: &KktCertificate) -> Result<SymMatrix> {
    let lam = cert.weight_sum();
    if !(lam > 0.0) {
        return Err(Error::InvalidWeights("lambda1 + lambda2 must be positive".into()));
    }
    ch.n1().inverse()?.add_scaled(1.0 / lam, &cert.m1).inverse()
}

/// Weighted converse bound evaluated on the enhanced channel at `B0`,
/// minus the weighted achieved triple. Zero at an optimum.
pub fn converse_gap(ch: &AlignedChannel, split: &CovSplit, cert: &KktCertificate, n_tilde: &SymMatrix, achieved: &RateBounds) -> Result<f64> {
    let rem = ch.s() - &split.b0;
    let ld_rem_nt = (&rem + n_tilde).logdet()?;
    let ld_nt = n_tilde.logdet()?;
    let enhanced = 0.5 * (ld_rem_nt - ld_nt);
    let mut bound = 0.0;
    let mut ld_k = [0.0; 2];
    for r in Receiver::BOTH {
        let i = r.index();
        ld_k[i] = (&rem + ch.noise(r)).logdet()?;
        bound += cert.beta(r) * 0.5 * (ch.logdet_full(r) - ld_k[i]);
    }
    let secrecy = |other: Receiver| 0.5 * (ld_k[other.index()] - ch.logdet_noise(other));
    bound += cert.lambda1 * (enhanced - secrecy(Receiver::Two));
    bound += cert.lambda2 * (enhanced - secrecy(Receiver::One));
    let weighted = (cert.beta1 + cert.beta2) * achieved.r0 + cert.lambda1 * achieved.r1 + cert.lambda2 * achieved.r2;
    Ok(bound - weighted)
}

/// Checks dominance of `N~` and the enhancement identities at `split`.
pub fn verify_enhancement(ch: &AlignedChannel, split: &CovSplit, cert: &KktCertificate, n_tilde: &SymMatrix) -> Result<EnhancementReport> {
    let lam = cert.weight_sum();
    let b1 = &split.b1;
    let rem = ch.s() - &split.b0;

    let ld_b1_nt = (b1 + n_tilde).logdet()?;
    let ld_b1_n1 = (b1 + ch.n1()).logdet()?;
    let det_identity = ((ld_b1_nt + ch.logdet_noise(Receiver::One)) - (ld_b1_n1 + n_tilde.logdet()?)).exp_m1().abs();

    let lhs = (&rem + n_tilde).matmul(&(b1 + n_tilde).inverse()?.to_matrix())?;
    let rhs = (&rem + ch.n2()).matmul(&(b1 + ch.n2()).inverse()?.to_matrix())?;
    let ratio_identity = (&lhs - &rhs).max_abs();

    let k1 = (&rem + ch.n1()).inverse()?;
    let k2 = (&rem + ch.n2()).inverse()?;
    let enh = (&rem + n_tilde).inverse()?.scale(lam);
    let combo = &(&k1.scale(cert.lambda2 + cert.beta1) + &k2.scale(cert.lambda1 + cert.beta2)) + &cert.m0;
    let stationarity_enh = (&enh - &combo).max_abs();

    let achieved = ch.rates(split)?;
    let residuals = EnhancementResiduals {
        dominance1: (ch.n1() - n_tilde).min_eigenvalue(),
        dominance2: (ch.n2() - n_tilde).min_eigenvalue(),
        det_identity,
        ratio_identity,
        stationarity_enh,
        converse_gap: converse_gap(ch, split, cert, n_tilde, &achieved)?,
    };
    let passed = residuals.entries().iter().all(|e| e.2);
    Ok(EnhancementReport {
        n_tilde: n_tilde.clone(),
        residuals,
        passed,
    })
}

/// Outcome of the full recovery and verification chain.
#[derive(Debug, Clone)]
pub struct CertificationReport {
    pub certificate: KktCertificate,
    pub kkt: KktResiduals,
    pub enhancement: EnhancementReport,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.kkt.passed() && self.enhancement.passed
    }
}

/// Runs recovery, KKT verification, enhancement and the converse check.
pub fn certify(ch: &AlignedChannel, split: &CovSplit, w: &Weights) -> Result<CertificationReport> {
    let certificate = recover_multipliers(ch, split, w)?;
    let kkt = verify_kkt(ch, split, &certificate)?;
    let n_tilde = construct_enhanced_noise(ch, &certificate)?;
    let enhancement = verify_enhancement(ch, split, &certificate, &n_tilde)?;
    Ok(CertificationReport {
        certificate,
        kkt,
        enhancement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s11(x: f64) -> SymMatrix {
        SymMatrix::scalar(x)
    }

    fn scalar_channel() -> AlignedChannel {
        AlignedChannel::new(s11(1.0), s11(2.0), s11(3.0)).unwrap()
    }

    fn scalar_optimum() -> CovSplit {
        CovSplit::new(s11(0.0), s11(3.0)).unwrap()
    }

    fn manual(m0: f64, m1: f64, m2: f64, l1: f64, l2: f64) -> KktCertificate {
        KktCertificate {
            m0: s11(m0),
            m1: s11(m1),
            m2: s11(m2),
            beta1: 0.0,
            beta2: 0.0,
            lambda1: l1,
            lambda2: l2,
            r0_target: 0.0,
            residual: 0.0,
            condition: 1.0,
        }
    }

    #[test]
    fn equal_noise_interior_needs_no_multipliers() {
        let n = SymMatrix::from_rows(&[[2.0, 0.3], [0.3, 1.0]]).unwrap();
        let ch = AlignedChannel::new(n.clone(), n, SymMatrix::diag(&[4.0, 4.0])).unwrap();
        let split = CovSplit::new(SymMatrix::diag(&[1.0, 1.0]), SymMatrix::diag(&[1.0, 1.5])).unwrap();
        let w = Weights::new(0.7, 0.3, 0.0).unwrap();
        let c = recover_multipliers(&ch, &split, &w).unwrap();
        assert!(c.m0.max_abs() < 1e-14 && c.m1.max_abs() < 1e-14 && c.m2.max_abs() < 1e-14);
        assert_eq!((c.beta1, c.beta2), (0.0, 0.0));
        assert!(c.residual < 1e-14);
        assert!(verify_kkt(&ch, &split, &c).unwrap().max() < 1e-14);
    }

    #[test]
    fn scalar_certificate() {
        let ch = scalar_channel();
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        let c = recover_multipliers(&ch, &scalar_optimum(), &w).unwrap();
        assert!((c.m2.get(0, 0) - 0.05).abs() < 1e-12);
        assert!(c.m1.max_abs() < 1e-14);
        assert!((c.m0.get(0, 0) - 0.05).abs() < 1e-12);
        assert_eq!((c.beta1, c.beta2), (0.0, 0.0));
        assert!(verify_kkt(&ch, &scalar_optimum(), &c).unwrap().max() <= 1e-12);
    }

    #[test]
    fn perturbed_multiplier_shows_in_residual() {
        let ch = scalar_channel();
        let split = scalar_optimum();
        let good = manual(0.05, 0.0, 0.05, 1.0, 0.0);
        assert!(verify_kkt(&ch, &split, &good).unwrap().max() < 1e-15);
        let bad = manual(0.05, 0.0, 0.15, 1.0, 0.0);
        let r = verify_kkt(&ch, &split, &bad).unwrap();
        assert!((r.stationarity_b1 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn enhanced_noise_examples() {
        let ch = scalar_channel();
        assert_eq!(construct_enhanced_noise(&ch, &manual(0.0, 0.0, 0.0, 1.0, 0.0)).unwrap(), s11(1.0));

        let id = AlignedChannel::new(SymMatrix::identity(2), SymMatrix::diag(&[2.0, 2.0]), SymMatrix::identity(2)).unwrap();
        let mut c = manual(0.0, 0.0, 0.0, 0.5, 0.5);
        c.m1 = SymMatrix::identity(2);
        let nt = construct_enhanced_noise(&id, &c).unwrap();
        assert!((&nt - &SymMatrix::diag(&[0.5, 0.5])).max_abs() < 1e-15);

        let ch2 = AlignedChannel::new(s11(2.0), s11(3.0), s11(1.0)).unwrap();
        let nt = construct_enhanced_noise(&ch2, &manual(0.0, 0.5, 0.0, 1.0, 1.0)).unwrap();
        assert!((nt.get(0, 0) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_enhancement_chain() {
        let ch = scalar_channel();
        let split = scalar_optimum();
        let c = manual(0.05, 0.0, 0.05, 1.0, 0.0);
        let nt = construct_enhanced_noise(&ch, &c).unwrap();
        assert_eq!(nt, s11(1.0));
        // (B1 + N~)^-1 = (B1 + N2)^-1 + M2
        assert!((1.0 / (3.0 + nt.get(0, 0)) - (1.0 / 5.0 + 0.05)).abs() < 1e-15);
        let rep = verify_enhancement(&ch, &split, &c, &nt).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.residuals.converse_gap.abs() < 1e-9);
        assert_eq!(rep.residuals.dominance1, 0.0);
    }

    #[test]
    fn suboptimal_split_has_positive_gap_and_no_certificate() {
        let ch = scalar_channel();
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        let opt = scalar_optimum();
        let c = recover_multipliers(&ch, &opt, &w).unwrap();
        let nt = construct_enhanced_noise(&ch, &c).unwrap();
        let half = CovSplit::new(s11(0.0), s11(1.5)).unwrap();
        let achieved = ch.rates(&half).unwrap();
        assert!(converse_gap(&ch, &opt, &c, &nt, &achieved).unwrap() > 1e-3);
        assert!(matches!(recover_multipliers(&ch, &half, &w), Err(Error::NoCertificate { .. })));
    }

    #[test]
    fn equal_noise_zero_gap() {
        let n = SymMatrix::identity(2);
        let ch = AlignedChannel::new(n.clone(), n, SymMatrix::diag(&[3.0, 1.0])).unwrap();
        let split = CovSplit::new(SymMatrix::diag(&[1.0, 0.2]), SymMatrix::diag(&[1.0, 0.3])).unwrap();
        let c = KktCertificate {
            m0: SymMatrix::zeros(2),
            m1: SymMatrix::zeros(2),
            m2: SymMatrix::zeros(2),
            ..manual(0.0, 0.0, 0.0, 1.0, 1.0)
        };
        let nt = construct_enhanced_noise(&ch, &c).unwrap();
        let achieved = RateBounds { r0: 0.0, r1: 0.0, r2: 0.0 };
        assert!(converse_gap(&ch, &split, &c, &nt, &achieved).unwrap().abs() < 1e-15);
    }
}
