//! Interior-point refinement of a covariance split.
//!
//! Maximizes
//!
//! ```text
//! l1 f1 + l2 f2 + mu [ld B0 + ld B1 + ld(S - B0 - B1)] + mu sum_k ln(f0_k - R0)
//! ```
//!
//! by damped Newton steps for a decreasing sequence of `mu`. Every term is
//! a log-det of an affine map of `(B0, B1)`, so the gradient and Hessian are
//! exact. The objective is not concave, so the Hessian is made negative
//! definite by eigenvalue flooring before each solve.

use crate::channel::{AlignedChannel, CovSplit, Receiver};
use crate::matcore::{jacobi, SymMatrix};

use super::Weights;

const ARMIJO: f64 = 1e-4;
const MAX_NEWTON: usize = 80;
const MAX_HALVINGS: usize = 60;
const MU_FACTOR: f64 = 0.1;

/// Which blocks enter an affine argument, with their signs.
#[derive(Clone, Copy)]
struct Uses {
    b0: f64,
    b1: f64,
}

/// `coef * ld(base + uses.b0 B0 + uses.b1 B1)`.
struct LogDet<'a> {
    coef: f64,
    base: &'a SymMatrix,
    uses: Uses,
}

/// Orthonormal basis of the symmetric matrices in coordinates.
fn basis(t: usize) -> Vec<SymMatrix> {
    let mut out = Vec::with_capacity(t * (t + 1) / 2);
    for i in 0..t {
        for j in i..t {
            let mut data = vec![0.0; t * t];
            if i == j {
                data[i * t + i] = 1.0;
            } else {
                let v = std::f64::consts::FRAC_1_SQRT_2;
                data[i * t + j] = v;
                data[j * t + i] = v;
            }
            out.push(SymMatrix::from_raw_unchecked(t, data));
        }
    }
    out
}

fn to_coords(m: &SymMatrix, basis: &[SymMatrix]) -> Vec<f64> {
    basis.iter().map(|e| e.dot(m)).collect()
}

fn from_coords(x: &[f64], basis: &[SymMatrix], t: usize) -> SymMatrix {
    x.iter().zip(basis).fold(SymMatrix::zeros(t), |acc, (&c, e)| acc.add_scaled(c, e))
}

/// Log-det, inverse, or `None` unless strictly positive definite.
fn ld_inv(a: &SymMatrix) -> Option<(f64, SymMatrix)> {
    let e = a.eig().ok()?;
    if !(e.min() > 0.0) {
        return None;
    }
    let ld = e.values.iter().map(|l| l.ln()).sum();
    Some((ld, e.compose(|l| 1.0 / l)))
}

struct Problem<'a> {
    ch: &'a AlignedChannel,
    w: Weights,
    basis: Vec<SymMatrix>,
    zero: SymMatrix,
    s_plus_n: [SymMatrix; 2],
    floor: bool,
}

struct Eval {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(ch: &'a AlignedChannel, w: Weights) -> Self {
        let t = ch.dim();
        Self {
            ch,
            w,
            basis: basis(t),
            zero: SymMatrix::zeros(t),
            s_plus_n: [ch.s() + ch.n1(), ch.s() + ch.n2()],
            floor: w.r0_target > 0.0,
        }
    }

    fn q(&self) -> usize {
        self.basis.len()
    }

    fn split(&self, x: &[f64]) -> CovSplit {
        let t = self.ch.dim();
        let q = self.q();
        CovSplit {
            b0: from_coords(&x[..q], &self.basis, t),
            b1: from_coords(&x[q..], &self.basis, t),
        }
    }

    fn coords(&self, split: &CovSplit) -> Vec<f64> {
        [to_coords(&split.b0, &self.basis), to_coords(&split.b1, &self.basis)].concat()
    }

    fn objective_terms(&self, mu: f64) -> Vec<LogDet<'_>> {
        let (l1, l2) = (self.w.lambda1, self.w.lambda2);
        let lam = l1 + l2;
        let ch = self.ch;
        let (s, n1, n2) = (ch.s(), ch.n1(), ch.n2());
        let b1_only = Uses { b0: 0.0, b1: 1.0 };
        let minus_b0 = Uses { b0: -1.0, b1: 0.0 };
        let mut terms = vec![
            LogDet {
                coef: 0.5 * lam,
                base: n1,
                uses: b1_only,
            },
            LogDet {
                coef: -0.5 * lam,
                base: n2,
                uses: b1_only,
            },
        ];
        if l2 != 0.0 {
            terms.push(LogDet {
                coef: 0.5 * l2,
                base: &self.s_plus_n[1],
                uses: minus_b0,
            });
            terms.push(LogDet {
                coef: -0.5 * l2,
                base: &self.s_plus_n[0],
                uses: minus_b0,
            });
        }
        terms.push(LogDet {
            coef: mu,
            base: &self.zero,
            uses: Uses { b0: 1.0, b1: 0.0 },
        });
        terms.push(LogDet {
            coef: mu,
            base: &self.zero,
            uses: b1_only,
        });
        terms.push(LogDet {
            coef: mu,
            base: s,
            uses: Uses { b0: -1.0, b1: -1.0 },
        });
        terms
    }

    /// Value (and, with `derivs`, gradient and Hessian) of the barrier
    /// objective, or `None` outside the strict interior.
    fn eval(&self, x: &[f64], mu: f64, derivs: bool) -> Option<Eval> {
        let q = self.q();
        let n = 2 * q;
        let split = self.split(x);
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];

        let add_logdet = |coef: f64, a: &SymMatrix, uses: Uses, value: &mut f64, grad: &mut [f64], hess: &mut [f64]| -> Option<()> {
            let (ld, inv) = ld_inv(a)?;
            *value += coef * ld;
            if derivs {
                self.accumulate(coef, &inv, uses, grad, hess);
            }
            Some(())
        };

        for term in self.objective_terms(mu) {
            let a = &(term.base + &split.b0.scale(term.uses.b0)) + &split.b1.scale(term.uses.b1);
            add_logdet(term.coef, &a, term.uses, &mut value, &mut grad, &mut hess)?;
        }

        if self.floor {
            let minus_b0 = Uses { b0: -1.0, b1: 0.0 };
            for k in Receiver::BOTH {
                let a = &(self.ch.s() - &split.b0) + self.ch.noise(k);
                let (ld, inv) = ld_inv(&a)?;
                let g = 0.5 * (self.ch.logdet_full(k) - ld) - self.w.r0_target;
                if !(g > 0.0) {
                    return None;
                }
                value += mu * g.ln();
                if derivs {
                    // g = -(1/2) ld(a): gradient and Hessian of g itself.
                    let mut gg = vec![0.0; n];
                    let mut gh = vec![0.0; n * n];
                    self.accumulate(-0.5, &inv, minus_b0, &mut gg, &mut gh);
                    for p in 0..n {
                        grad[p] += mu * gg[p] / g;
                        for r in 0..n {
                            hess[p * n + r] += mu * (gh[p * n + r] / g - gg[p] * gg[r] / (g * g));
                        }
                    }
                }
            }
        }
        value.is_finite().then_some(Eval { value, grad, hess })
    }

    /// Adds derivatives of `coef * ld(A)` given `inv = A^{-1}`.
    fn accumulate(&self, coef: f64, inv: &SymMatrix, uses: Uses, grad: &mut [f64], hess: &mut [f64]) {
        let q = self.q();
        let n = 2 * q;
        let t = self.ch.dim();
        // Directions: d A / d x_p = sign * E_p for the block the coordinate belongs to.
        let dirs: Vec<(usize, f64)> = (0..n)
            .filter_map(|p| {
                let sign = if p < q { uses.b0 } else { uses.b1 };
                (sign != 0.0).then_some((p, sign))
            })
            .collect();
        let inv_m = inv.to_matrix();
        let prods: Vec<Vec<f64>> = dirs
            .iter()
            .map(|&(p, sign)| {
                let e = &self.basis[p % q];
                let y = inv_m.matmul(&e.to_matrix()).expect("square");
                y.as_slice().iter().map(|v| v * sign).collect()
            })
            .collect();
        for (a, &(p, _)) in dirs.iter().enumerate() {
            // tr(A^{-1} D_p)
            grad[p] += coef * (0..t).map(|i| prods[a][i * t + i]).sum::<f64>();
            for (b, &(r, _)) in dirs.iter().enumerate() {
                let mut tr = 0.0;
                for i in 0..t {
                    for j in 0..t {
                        tr += prods[a][i * t + j] * prods[b][j * t + i];
                    }
                }
                hess[p * n + r] -= coef * tr;
            }
        }
    }
}

/// Solves `(-H_floored) d = g`, returning the ascent direction.
fn newton_direction(e: &Eval, floor: f64) -> Vec<f64> {
    let n = e.grad.len();
    let neg: Vec<f64> = e.hess.iter().map(|h| -h).collect();
    let (vals, vecs) = jacobi::eigh(n, &neg);
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = floor.max(top * 1e-14);
    let mut d = vec![0.0; n];
    for k in 0..n {
        let lam = vals[k].abs().max(cut);
        let c: f64 = (0..n).map(|i| vecs[i * n + k] * e.grad[i]).sum::<f64>() / lam;
        for i in 0..n {
            d[i] += c * vecs[i * n + k];
        }
    }
    d
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome {
    pub split: CovSplit,
    pub iterations: usize,
    pub converged: bool,
}

/// Path-following refinement from a strictly feasible `start`.
pub(crate) fn refine(ch: &AlignedChannel, w: &Weights, start: &CovSplit, mu0: f64, mu_final: f64) -> Option<BarrierOutcome> {
    let prob = Problem::new(ch, *w);
    let mut x = prob.coords(start);
    prob.eval(&x, mu0, false)?;
    let mut mu = mu0;
    let mut iterations = 0;
    let mut converged = true;
    loop {
        let mut stage_done = false;
        for _ in 0..MAX_NEWTON {
            let e = prob.eval(&x, mu, true)?;
            let d = newton_direction(&e, mu * 1e-6);
            let slope: f64 = d.iter().zip(&e.grad).map(|(a, b)| a * b).sum();
            if slope <= 1e-14 * (1.0 + e.value.abs()) {
                stage_done = true;
                break;
            }
            let mut step = 1.0;
            let mut next = None;
            for _ in 0..MAX_HALVINGS {
                let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
                if let Some(ev) = prob.eval(&cand, mu, false) {
                    if ev.value >= e.value + ARMIJO * step * slope {
                        next = Some(cand);
                        break;
                    }
                }
                step *= 0.5;
            }
            iterations += 1;
            match next {
                Some(c) => x = c,
                None => {
                    stage_done = true;
                    break;
                }
            }
        }
        converged &= stage_done;
        if mu <= mu_final {
            break;
        }
        mu = (mu * MU_FACTOR).max(mu_final);
    }
    Some(BarrierOutcome {
        split: prob.split(&x),
        iterations,
        converged,
    })
}
