//! Weighted secrecy-rate maximization and region tracing.
//!
//! The program solved here is
//!
//! ```text
//! maximize   l1 f1(B1) + l2 f2(B0, B1)
//! subject to f0(B0) >= R0_target, B0 >= 0, B1 >= 0, B0 + B1 <= S
//! ```
//!
//! The objective is a difference of log-dets and is not concave in general,
//! so [`maximize_weighted`] runs projected-gradient ascent from several
//! seeded starts and keeps the best feasible result. For `t <= 2`,
//! [`grid_oracle`] provides an exhaustive check of the same program.

mod ascent;
mod barrier;
mod corner;
mod oracle;
mod projection;
mod trace;

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{AlignedChannel, CovSplit, RateTriple, Receiver};
use crate::error::{Error, Result};
use crate::matcore::SymMatrix;
use crate::tolerances::{ACTIVE_EIG, R0_SHORTFALL, TOL_FEAS};

use ascent::{ascend, Objective, Projector};
use projection::{generalized_max, project_split};

pub use corner::{confidential_corner, ConfidentialCorner};
pub use oracle::{grid_oracle, OracleReport};
pub use trace::{slice_at_r0, trace_surface, RegionSample};

/// Objective weights and the common-rate floor (nats).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub r0_target: f64,
}

impl Weights {
    pub fn new(lambda1: f64, lambda2: f64, r0_target: f64) -> Result<Self> {
        let w = Self {
            lambda1,
            lambda2,
            r0_target,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.lambda1, self.lambda2, self.r0_target]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidWeights("non-finite weight".into()));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::InvalidWeights("weights must be nonnegative".into()));
        }
        if self.lambda1 + self.lambda2 <= 0.0 {
            return Err(Error::InvalidWeights("lambda1 + lambda2 must be positive".into()));
        }
        if self.r0_target < 0.0 {
            return Err(Error::InvalidWeights("common-rate target must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn weight_sum(&self) -> f64 {
        self.lambda1 + self.lambda2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub step_shrink: f64,
    /// Initial penalty weight on the common-rate floor; doubled every round.
    pub penalty_weight: f64,
    pub penalty_rounds: usize,
    pub proj_iters: usize,
    pub tol_obj: f64,
    pub seed: u64,
    /// Finish every restart with an interior-point refinement.
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 2000,
            step_init: 0.1,
            step_shrink: 0.5,
            penalty_weight: 100.0,
            penalty_rounds: 6,
            proj_iters: 50,
            tol_obj: 1e-9,
            seed: 0,
            polish: true,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [self.restarts, self.max_iters, self.penalty_rounds, self.proj_iters];
        let reals = [self.step_init, self.penalty_weight, self.tol_obj];
        if counts.iter().any(|&c| c == 0)
            || reals.iter().any(|&r| !(r > 0.0 && r.is_finite()))
            || !(self.step_shrink > 0.0 && self.step_shrink < 1.0)
        {
            return Err(Error::InvalidWeights(format!("invalid solver configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveConstraint {
    B0Psd,
    B1Psd,
    SumCap,
    R0Floor,
}

impl fmt::Display for ActiveConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActiveConstraint::B0Psd => "B0_psd",
            ActiveConstraint::B1Psd => "B1_psd",
            ActiveConstraint::SumCap => "sum_cap",
            ActiveConstraint::R0Floor => "r0_floor",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub split: CovSplit,
    /// `l1 f1 + l2 f2` at `split`, nats.
    pub value: f64,
    pub rates: RateTriple,
    pub converged: bool,
    pub iterations: usize,
    pub active_constraints: BTreeSet<ActiveConstraint>,
}

impl SolverResult {
    pub(crate) fn evaluate(ch: &AlignedChannel, w: &Weights, split: CovSplit, converged: bool, iterations: usize) -> Result<Self> {
        let bounds = ch.rates(&split)?;
        let value = w.lambda1 * bounds.r1 + w.lambda2 * bounds.r2;
        let active_constraints = active_set(ch, w, &split, bounds.r0);
        Ok(Self {
            split,
            value,
            rates: bounds.clamped(),
            converged,
            iterations,
            active_constraints,
        })
    }
}

/// Eigenvalue threshold under which a slack direction counts as tight.
pub fn active_threshold(s: &SymMatrix) -> f64 {
    ACTIVE_EIG * s.eig().map_or(1.0, |e| e.max().max(1.0))
}

fn active_set(ch: &AlignedChannel, w: &Weights, split: &CovSplit, f0: f64) -> BTreeSet<ActiveConstraint> {
    let thr = active_threshold(ch.s());
    let mut out = BTreeSet::new();
    if split.b0.min_eigenvalue() <= thr {
        out.insert(ActiveConstraint::B0Psd);
    }
    if split.b1.min_eigenvalue() <= thr {
        out.insert(ActiveConstraint::B1Psd);
    }
    if split.remainder(ch.s()).min_eigenvalue() <= thr {
        out.insert(ActiveConstraint::SumCap);
    }
    if w.r0_target > 0.0 && f0 - w.r0_target <= crate::tolerances::TIGHT_R0 {
        out.insert(ActiveConstraint::R0Floor);
    }
    out
}

/// Largest achievable common rate, attained at `B0 = S`, `B1 = 0`.
pub fn r0_max(ch: &AlignedChannel) -> f64 {
    ch.r0_max()
}

struct JointProjector<'a> {
    s: &'a SymMatrix,
    iters: usize,
}

impl Projector for JointProjector<'_> {
    fn project(&self, b0: &SymMatrix, b1: &SymMatrix) -> CovSplit {
        project_split(self.s, b0, b1, self.iters)
    }
}

/// Weighted objective with an augmented-Lagrangian term per `f0` branch.
struct Penalized<'a> {
    ch: &'a AlignedChannel,
    w: Weights,
    floor: Option<([f64; 2], f64)>,
}

impl Objective for Penalized<'_> {
    fn eval(&self, x: &CovSplit) -> Option<(f64, SymMatrix, SymMatrix)> {
        let t = self.ch.terms(x).ok()?;
        let (l1, l2) = (self.w.lambda1, self.w.lambda2);
        let mut value = l1 * t.f1() + l2 * t.f2();
        let g1 = t.grad_f1_b1().scale(l1 + l2);
        let mut g0 = t.grad_f2_b0().scale(l2);
        if let Some((mult, mu)) = self.floor {
            for k in Receiver::BOTH {
                let y = mult[k.index()];
                let c = t.f0_branch(k) - self.w.r0_target;
                let z = (y - mu * c).max(0.0);
                value -= (z * z - y * y) / (2.0 * mu);
                if z > 0.0 {
                    g0 = g0.add_scaled(z, &t.grad_f0_b0(k));
                }
            }
        }
        value.is_finite().then_some((value, g0, g1))
    }
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let data: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    SymMatrix::new(n, data).expect("finite gaussian draws").psd_project()
}

/// A random feasible split: PSD-projected symmetric Gaussians scaled under `S`.
pub(crate) fn random_start(rng: &mut ChaCha8Rng, s: &SymMatrix) -> CovSplit {
    let n = s.dim();
    let b0 = random_psd(rng, n);
    let b1 = random_psd(rng, n);
    let ratio = generalized_max(s, &(&b0 + &b1));
    let u: f64 = rng.random_range(0.05..=1.0);
    let k = if ratio > 0.0 { u / ratio } else { 0.0 };
    CovSplit {
        b0: b0.scale(k),
        b1: b1.scale(k),
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Moves `x` along the segment towards `(S, 0)` until `f0(B0) >= r0`.
fn restore_floor(ch: &AlignedChannel, x: CovSplit, r0: f64) -> CovSplit {
    let f0_at = |tau: f64| -> (CovSplit, f64) {
        let p = CovSplit {
            b0: x.b0.scale(1.0 - tau).add_scaled(tau, ch.s()),
            b1: x.b1.scale(1.0 - tau),
        };
        let f = ch.terms(&p).map_or(f64::NEG_INFINITY, |t| t.f0());
        (p, f)
    };
    let (_, f) = f0_at(0.0);
    if f >= r0 {
        return x;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f0_at(mid).1 >= r0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    f0_at(hi).0
}

struct RestartOutcome {
    split: CovSplit,
    value: f64,
    f0: f64,
    iterations: usize,
    converged: bool,
}

fn solve_from(ch: &AlignedChannel, w: &Weights, cfg: &SolverConfig, start: CovSplit) -> Option<RestartOutcome> {
    let proj = JointProjector {
        s: ch.s(),
        iters: cfg.proj_iters,
    };
    let scale = 1.0 + ch.s().max_abs();
    let mut x = project_split(ch.s(), &start.b0, &start.b1, cfg.proj_iters);
    let mut iterations = 0;
    let mut converged = true;

    if w.r0_target > 0.0 {
        let mut mult = [0.0; 2];
        let mut mu = cfg.penalty_weight;
        for _ in 0..cfg.penalty_rounds {
            let obj = Penalized {
                ch,
                w: *w,
                floor: Some((mult, mu)),
            };
            let run = ascend(&obj, &proj, x, cfg, scale);
            iterations += run.iterations;
            converged = run.converged;
            x = run.x;
            let t = ch.terms(&x).ok()?;
            for k in Receiver::BOTH {
                let c = t.f0_branch(k) - w.r0_target;
                mult[k.index()] = (mult[k.index()] - mu * c).max(0.0);
            }
            mu *= 2.0;
        }
        x = restore_floor(ch, x, w.r0_target);
    } else {
        let obj = Penalized { ch, w: *w, floor: None };
        let run = ascend(&obj, &proj, x, cfg, scale);
        iterations = run.iterations;
        converged = run.converged;
        x = run.x;
    }

    if cfg.polish {
        if let Some(p) = polish(ch, w, &x) {
            iterations += p.iterations;
            let better = |a: &CovSplit| ch.terms(a).ok().map(|t| w.lambda1 * t.f1() + w.lambda2 * t.f2());
            if better(&p.split) >= better(&x) {
                x = p.split;
                converged = p.converged;
            }
        }
    }

    let t = ch.terms(&x).ok()?;
    Some(RestartOutcome {
        value: w.lambda1 * t.f1() + w.lambda2 * t.f2(),
        f0: t.f0(),
        split: x,
        iterations,
        converged,
    })
}

/// A strictly feasible split with `f0` halfway between the target and the
/// ceiling: `((1 - 2d) S, d S)` for the largest suitable `d <= 1/3`.
fn interior_anchor(ch: &AlignedChannel, r0: f64) -> CovSplit {
    let s = ch.s();
    let at = |d: f64| CovSplit {
        b0: s.scale(1.0 - 2.0 * d),
        b1: s.scale(d),
    };
    if r0 <= 0.0 {
        return at(1.0 / 3.0);
    }
    let goal = 0.5 * (r0 + ch.r0_max());
    let f0 = |d: f64| ch.f0(&s.scale(1.0 - 2.0 * d)).unwrap_or(f64::NEG_INFINITY);
    if f0(1.0 / 3.0) >= goal {
        return at(1.0 / 3.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0 / 3.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f0(mid) >= goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// Barrier weights, relative to `lambda1 + lambda2`, at the start and end of
/// the refinement path.
const MU_START: f64 = 1.0;
const MU_FINAL: f64 = 1e-13;

/// Pulls `x` slightly into the interior and runs the barrier refinement.
fn polish(ch: &AlignedChannel, w: &Weights, x: &CovSplit) -> Option<barrier::BarrierOutcome> {
    let anchor = interior_anchor(ch, w.r0_target);
    let mut tau = 1e-3;
    let start = loop {
        let mix = CovSplit {
            b0: x.b0.scale(1.0 - tau).add_scaled(tau, &anchor.b0),
            b1: x.b1.scale(1.0 - tau).add_scaled(tau, &anchor.b1),
        };
        let f0 = ch.f0(&mix.b0).unwrap_or(f64::NEG_INFINITY);
        if f0 > w.r0_target || tau >= 1.0 {
            break mix;
        }
        tau = (tau * 4.0).min(1.0);
    };
    let lam = w.weight_sum();
    barrier::refine(ch, w, &start, MU_START * lam, MU_FINAL * lam)
}

fn lexicographic(a: &CovSplit, b: &CovSplit) -> std::cmp::Ordering {
    let lhs = a.b0.as_slice().iter().chain(a.b1.as_slice());
    let rhs = b.b0.as_slice().iter().chain(b.b1.as_slice());
    for (x, y) in lhs.zip(rhs) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn check_target(ch: &AlignedChannel, w: &Weights) -> Result<f64> {
    w.validate()?;
    let ceiling = ch.r0_max();
    if w.r0_target > ceiling + TOL_FEAS {
        return Err(Error::InfeasibleTarget {
            target: w.r0_target,
            ceiling,
        });
    }
    Ok(ceiling)
}

/// Multi-restart maximization of `l1 f1 + l2 f2` under the common-rate floor.
pub fn maximize_weighted(ch: &AlignedChannel, w: &Weights, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    let ceiling = check_target(ch, w)?;
    let n = ch.dim();

    // At the ceiling the floor pins B0 = S, which leaves B1 = 0.
    if ceiling - w.r0_target <= TOL_FEAS {
        let split = CovSplit::new(ch.s().clone(), SymMatrix::zeros(n))?;
        return SolverResult::evaluate(ch, w, split, true, 0);
    }

    let outcomes: Vec<Option<RestartOutcome>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r);
            let start = random_start(&mut rng, ch.s());
            solve_from(ch, w, cfg, start)
        })
        .collect();

    let floor = w.r0_target - R0_SHORTFALL;
    let mut total_iters = 0;
    let mut best: Option<RestartOutcome> = None;
    for o in outcomes.into_iter().flatten() {
        total_iters += o.iterations;
        if o.f0 < floor || !o.split.is_feasible(ch.s()) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => o.value > b.value || (o.value == b.value && lexicographic(&o.split, &b.split).is_lt()),
        };
        if better {
            best = Some(o);
        }
    }
    let best = best.ok_or_else(|| Error::InfeasibleCovariance("no restart reached a feasible split".into()))?;
    SolverResult::evaluate(ch, w, best.split, best.converged, total_iters)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(n1: f64, n2: f64, s: f64) -> AlignedChannel {
        AlignedChannel::new(SymMatrix::scalar(n1), SymMatrix::scalar(n2), SymMatrix::scalar(s)).unwrap()
    }

    #[test]
    fn r0_max_examples() {
        let ch = scalar(1.0, 1.0, 1.0);
        assert!((r0_max(&ch) - 0.5 * 2f64.ln()).abs() < 1e-15);
        let ch = scalar(1.0, 2.0, 3.0);
        assert!((r0_max(&ch) - 0.5 * 2.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn weights_validation() {
        assert!(Weights::new(0.0, 0.0, 0.0).is_err());
        assert!(Weights::new(-1.0, 2.0, 0.0).is_err());
        assert!(Weights::new(1.0, 0.0, -0.1).is_err());
        assert!(Weights::new(1.0, 0.0, f64::NAN).is_err());
        assert!(Weights::new(0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn scalar_pure_first_receiver() {
        let ch = scalar(1.0, 2.0, 3.0);
        let w = Weights::new(1.0, 0.0, 0.0).unwrap();
        let r = maximize_weighted(&ch, &w, &SolverConfig::default()).unwrap();
        assert!((r.value - 0.5 * 1.6f64.ln()).abs() < 1e-9, "{r:?}");
        assert!((r.split.b1.get(0, 0) - 3.0).abs() < 1e-6);
        assert!(r.split.b0.get(0, 0).abs() < 1e-6);
    }

    #[test]
    fn scalar_at_ceiling_forces_full_common_layer() {
        let ch = scalar(1.0, 2.0, 3.0);
        let w = Weights::new(1.0, 0.0, r0_max(&ch)).unwrap();
        let r = maximize_weighted(&ch, &w, &SolverConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.split.b0.get(0, 0), 3.0);
        assert!(r.active_constraints.contains(&ActiveConstraint::R0Floor));
    }

    #[test]
    fn target_above_ceiling_is_rejected() {
        let ch = scalar(1.0, 2.0, 3.0);
        let w = Weights::new(1.0, 0.0, r0_max(&ch) + 1e-3).unwrap();
        assert!(matches!(
            maximize_weighted(&ch, &w, &SolverConfig::default()),
            Err(Error::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn identical_noise_gives_zero_value() {
        let n = SymMatrix::from_rows(&[[1.0, 0.3], [0.3, 2.0]]).unwrap();
        let ch = AlignedChannel::new(n.clone(), n, SymMatrix::identity(2)).unwrap();
        let w = Weights::new(0.4, 0.6, 0.0).unwrap();
        let r = maximize_weighted(&ch, &w, &SolverConfig::default()).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn floor_is_respected() {
        let ch = scalar(1.0, 2.0, 3.0);
        let target = 0.5 * r0_max(&ch);
        let w = Weights::new(1.0, 0.0, target).unwrap();
        let r = maximize_weighted(&ch, &w, &SolverConfig::default()).unwrap();
        let f0 = ch.f0(&r.split.b0).unwrap();
        assert!(f0 >= target - R0_SHORTFALL, "f0 {f0} < {target}");
        // f1 is increasing in B1 here, so the floor binds and the sum cap is tight.
        assert!(r.active_constraints.contains(&ActiveConstraint::R0Floor));
        assert!(r.active_constraints.contains(&ActiveConstraint::SumCap));
    }

    #[test]
    fn same_seed_same_answer() {
        let ch = AlignedChannel::new(
            SymMatrix::from_rows(&[[1.0, 0.2], [0.2, 0.5]]).unwrap(),
            SymMatrix::from_rows(&[[0.4, -0.1], [-0.1, 1.5]]).unwrap(),
            SymMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap(),
        )
        .unwrap();
        let w = Weights::new(0.3, 0.7, 0.1).unwrap();
        let cfg = SolverConfig::with_seed(7);
        let a = maximize_weighted(&ch, &w, &cfg).unwrap();
        let b = maximize_weighted(&ch, &w, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.split, b.split);
    }
}
