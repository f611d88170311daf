//! Exhaustive grid search over `(B0, B1)` for `t <= 2`.
//!
//! Both blocks are scanned relative to the room left for them:
//! `B0 = S^{1/2} Y S^{1/2}` and `B1 = C^{1/2} Z C^{1/2}` with `C = S - B0`
//! and `Y, Z` ranging over `0 <= Y, Z <= I`. Each of `Y, Z` is gridded in
//! eigen-coordinates `R(phi) diag(p, q) R(phi)^T` with `p, q` in `[0, 1]`
//! and `phi` in `[0, pi]`. This covers the whole feasible set and puts the
//! faces where a block takes all remaining room (`p = 1`), where optima
//! live, on the grid. Scalars use `p` alone.
//! After the coarse scan, refinement passes re-grid a neighborhood of the
//! incumbent at successively finer steps.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{AlignedChannel, CovSplit};
use crate::error::{Error, Result};
use crate::matcore::SymMatrix;
use crate::tolerances::TOL_FEAS;

use super::{SolverResult, Weights};

const REFINE_FACTOR: usize = 5;
/// Refinement stops once steps shrink this far below the first fine step,
/// or after `MAX_PASSES` passes.
const MIN_STEP_RATIO: f64 = 1e-8;
const MAX_PASSES: usize = 60;
/// Rounding allowance on the common-rate floor; lets `Y = I` meet the ceiling.
const FLOOR_SLACK: f64 = 1e-12;
const BISECTIONS: usize = 60;

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub best: SolverResult,
    pub coarse_value: f64,
    pub resolution: usize,
    pub points_scanned: usize,
    pub feasible_points: usize,
    /// Per-coordinate `(lo, hi)` of the refinement window in the relative
    /// coordinates, `Y` axes first and then `Z` axes.
    pub refinement_window: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
    /// Angles wrap, so their windows are never clipped.
    periodic: bool,
}

impl Axis {
    fn values(&self) -> Vec<f64> {
        if self.n == 1 || self.hi <= self.lo {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }

    fn spacing(&self) -> f64 {
        if self.n > 1 {
            (self.hi - self.lo) / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

/// Symmetric 2x2 `[[m[0], m[1]], [m[1], m[2]]]`. Scalars live in `m[0]`
/// with a unit noise padding on the second coordinate, which leaves every
/// log-det difference unchanged.
type Sym2 = [f64; 3];

fn det(m: &Sym2) -> f64 {
    m[0] * m[2] - m[1] * m[1]
}

fn add(x: &Sym2, y: &Sym2) -> Sym2 {
    [x[0] + y[0], x[1] + y[1], x[2] + y[2]]
}

fn sub(x: &Sym2, y: &Sym2) -> Sym2 {
    [x[0] - y[0], x[1] - y[1], x[2] - y[2]]
}

/// PSD square root: `(M + sqrt(det) I) / sqrt(tr M + 2 sqrt(det))`.
fn sqrt_psd(m: &Sym2) -> Sym2 {
    let sd = det(m).max(0.0).sqrt();
    let t = (m[0] + m[2] + 2.0 * sd).max(0.0).sqrt();
    if t == 0.0 {
        return [0.0; 3];
    }
    [(m[0] + sd) / t, m[1] / t, (m[2] + sd) / t]
}

/// `R Y R` for symmetric `R`.
fn congruence(r: &Sym2, y: &Sym2) -> Sym2 {
    // (R Y) entries, then right-multiply by R.
    let p00 = r[0] * y[0] + r[1] * y[1];
    let p01 = r[0] * y[1] + r[1] * y[2];
    let p10 = r[1] * y[0] + r[2] * y[1];
    let p11 = r[1] * y[1] + r[2] * y[2];
    [p00 * r[0] + p01 * r[1], p00 * r[1] + p01 * r[2], p10 * r[1] + p11 * r[2]]
}

fn ln_det(m: &Sym2) -> f64 {
    det(m).ln()
}

fn pack(m: &SymMatrix, pad: f64) -> Sym2 {
    if m.dim() == 1 {
        [m.get(0, 0), 0.0, pad]
    } else {
        [m.get(0, 0), m.get(0, 1), m.get(1, 1)]
    }
}

fn unpack(dim: usize, m: &Sym2) -> SymMatrix {
    if dim == 1 {
        SymMatrix::scalar(m[0])
    } else {
        SymMatrix::from_rows(&[[m[0], m[1]], [m[1], m[2]]]).expect("finite grid entries")
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    coords: Vec<f64>,
    rel: Sym2,
}

/// `R(phi) diag(p, q) R(phi)^T`; scalars ignore `q` and `phi`.
fn eigen_form(dim: usize, p: f64, q: f64, phi: f64) -> Sym2 {
    if dim == 1 {
        return [p, 0.0, 0.0];
    }
    let (sn, cs) = phi.sin_cos();
    [p * cs * cs + q * sn * sn, (p - q) * cs * sn, p * sn * sn + q * cs * cs]
}

fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().map(Axis::values).fold(vec![Vec::new()], |acc, vals| {
        acc.iter()
            .flat_map(|prefix| {
                vals.iter().map(move |&v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect()
    })
}

/// Confidential blocks `Z = R(phi) diag(p, q) R(phi)^T`, coordinates `(p, q, phi)`.
fn confidential_candidates(dim: usize, axes: &[Axis]) -> Vec<Candidate> {
    grid_points(axes)
        .into_iter()
        .map(|c| {
            let rel = if dim == 1 { eigen_form(1, c[0], 0.0, 0.0) } else { eigen_form(2, c[0], c[1], c[2]) };
            Candidate { coords: c, rel }
        })
        .collect()
}

/// Common blocks with the floor folded into the grid. The last eigenvalue
/// `q` (the only one for scalars) runs over `[q_min, 1]`, where `q_min` is
/// the smallest value meeting `f0 >= R0`; the grid coordinate `u` in
/// `[0, 1]` maps to `q_min + u (1 - q_min)`. `f0` grows with `q`, so the
/// floor face sits at `u = 0` and nothing infeasible is generated.
fn common_candidates(dim: usize, axes: &[Axis], pk: &Packed, r0: f64) -> Vec<Candidate> {
    grid_points(axes)
        .into_iter()
        .filter_map(|c| {
            let (p, u, phi) = if dim == 1 { (0.0, c[0], 0.0) } else { (c[0], c[1], c[2]) };
            let form = |q: f64| if dim == 1 { eigen_form(1, q, 0.0, 0.0) } else { eigen_form(2, p, q, phi) };
            let q_min = floor_root(|q| pk.f0(&form(q)), r0)?;
            let rel = form(q_min + u * (1.0 - q_min));
            Some(Candidate { coords: c, rel })
        })
        .collect()
}

/// Smallest `q` in `[0, 1]` with `f(q) >= r0` for increasing `f`, or `None`
/// when even `q = 1` falls short.
fn floor_root(f: impl Fn(f64) -> f64, r0: f64) -> Option<f64> {
    if f(0.0) >= r0 {
        return Some(0.0);
    }
    if f(1.0) < r0 - FLOOR_SLACK {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= r0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

struct Packed {
    s: Sym2,
    root_s: Sym2,
    n1: Sym2,
    n2: Sym2,
    ld_n1: f64,
    ld_n2: f64,
    ld_full: [f64; 2],
}

impl Packed {
    fn f0(&self, y: &Sym2) -> f64 {
        let c = sub(&self.s, &congruence(&self.root_s, y));
        let l1 = self.ld_full[0] - ln_det(&add(&c, &self.n1));
        let l2 = self.ld_full[1] - ln_det(&add(&c, &self.n2));
        0.5 * l1.min(l2)
    }

    fn new(ch: &AlignedChannel) -> Self {
        // Padding S with 0 and the noises with 1 keeps scalar rates exact.
        let s = pack(ch.s(), 0.0);
        let n1 = pack(ch.n1(), 1.0);
        let n2 = pack(ch.n2(), 1.0);
        Self {
            s,
            root_s: sqrt_psd(&s),
            n1,
            n2,
            ld_n1: ln_det(&n1),
            ld_n2: ln_det(&n2),
            ld_full: [ln_det(&add(&s, &n1)), ln_det(&add(&s, &n2))],
        }
    }
}

struct Common {
    index: usize,
    b0: Sym2,
    root_c: Sym2,
    ld_k1: f64,
    ld_k2: f64,
}

struct ScanBest {
    value: f64,
    b0: Sym2,
    b1: Sym2,
    y: usize,
    z: usize,
    scanned: usize,
    feasible: usize,
}

fn scan(p: &Packed, w: &Weights, ys: &[Candidate], zs: &[Candidate]) -> Option<ScanBest> {
    let commons: Vec<Common> = ys
        .iter()
        .enumerate()
        .filter_map(|(index, y)| {
            let b0 = congruence(&p.root_s, &y.rel);
            let c = sub(&p.s, &b0);
            let ld_k1 = ln_det(&add(&c, &p.n1));
            let ld_k2 = ln_det(&add(&c, &p.n2));
            let f0 = 0.5 * (p.ld_full[0] - ld_k1).min(p.ld_full[1] - ld_k2);
            (f0 >= w.r0_target - FLOOR_SLACK).then(|| Common {
                index,
                b0,
                root_c: sqrt_psd(&c),
                ld_k1,
                ld_k2,
            })
        })
        .collect();

    let per_b0: Vec<(f64, usize, usize, Sym2, Sym2)> = commons
        .par_iter()
        .filter_map(|cm| {
            let mut best: Option<(f64, usize, usize, Sym2, Sym2)> = None;
            for (iz, z) in zs.iter().enumerate() {
                let b1 = congruence(&cm.root_c, &z.rel);
                let ld_p1 = ln_det(&add(&b1, &p.n1));
                let ld_p2 = ln_det(&add(&b1, &p.n2));
                let f1 = 0.5 * ((ld_p1 - p.ld_n1) - (ld_p2 - p.ld_n2));
                let f2 = 0.5 * ((cm.ld_k2 - ld_p2) - (cm.ld_k1 - ld_p1));
                let v = w.lambda1 * f1 + w.lambda2 * f2;
                if best.as_ref().is_none_or(|b| v > b.0) {
                    best = Some((v, cm.index, iz, cm.b0, b1));
                }
            }
            best
        })
        .collect();

    let feasible = commons.len() * zs.len();
    per_b0
        .into_iter()
        .fold(None::<ScanBest>, |acc, (value, y, z, b0, b1)| match acc {
            Some(a) if a.value >= value => Some(a),
            _ => Some(ScanBest {
                value,
                b0,
                b1,
                y,
                z,
                scanned: ys.len() * zs.len(),
                feasible,
            }),
        })
        .map(|mut b| {
            b.scanned = ys.len() * zs.len();
            b.feasible = feasible;
            b
        })
}

fn block_axes(dim: usize, n: usize) -> Vec<Axis> {
    let unit = Axis {
        lo: 0.0,
        hi: 1.0,
        n,
        periodic: false,
    };
    if dim == 1 {
        vec![unit]
    } else {
        let angle = Axis {
            hi: std::f64::consts::PI,
            periodic: true,
            ..unit
        };
        vec![unit, unit, angle]
    }
}

/// Neighborhood of `center` reaching `REFINE_FACTOR` steps of `step` to
/// each side, clipped to `domain` except along angles.
fn window(domain: &[Axis], step: &[f64], center: &[f64]) -> Vec<Axis> {
    domain
        .iter()
        .zip(step)
        .zip(center)
        .map(|((dom, &h), &x)| {
            let reach = REFINE_FACTOR as f64;
            let (below, above) = if h == 0.0 {
                (0, 0)
            } else if dom.periodic {
                (REFINE_FACTOR, REFINE_FACTOR)
            } else {
                (
                    ((x - dom.lo) / h).round().clamp(0.0, reach) as usize,
                    ((dom.hi - x) / h).round().clamp(0.0, reach) as usize,
                )
            };
            let (mut lo, mut hi) = (x - below as f64 * h, x + above as f64 * h);
            if !dom.periodic {
                lo = lo.max(dom.lo);
                hi = hi.min(dom.hi);
            }
            Axis {
                lo,
                hi,
                n: below + above + 1,
                periodic: dom.periodic,
            }
        })
        .collect()
}

/// Best grid point of the weighted program. After the coarse scan a
/// pattern search keeps re-gridding the neighborhood of the incumbent: the
/// first pass is five times finer than the coarse grid, later passes keep
/// their step while the incumbent improves and shrink it fivefold otherwise.
pub fn grid_oracle(ch: &AlignedChannel, w: &Weights, resolution: usize) -> Result<OracleReport> {
    w.validate()?;
    let dim = ch.dim();
    if dim > 2 {
        return Err(Error::UnsupportedDim(dim));
    }
    if resolution < 2 {
        return Err(Error::InvalidResolution(resolution));
    }
    let ceiling = ch.r0_max();
    if w.r0_target > ceiling + TOL_FEAS {
        return Err(Error::InfeasibleTarget {
            target: w.r0_target,
            ceiling,
        });
    }

    let p = Packed::new(ch);
    let axes = block_axes(dim, resolution);
    let ys = common_candidates(dim, &axes, &p, w.r0_target);
    let zs = confidential_candidates(dim, &axes);
    let coarse = scan(&p, w, &ys, &zs).ok_or_else(|| Error::InfeasibleCovariance("no feasible grid point".into()))?;

    let mut scanned = coarse.scanned;
    let mut feasible = coarse.feasible;
    let mut best = (coarse.value, coarse.b0, coarse.b1);
    let (mut cy, mut cz) = (ys[coarse.y].coords.clone(), zs[coarse.z].coords.clone());
    let fine: Vec<f64> = axes.iter().map(|a| a.spacing() / REFINE_FACTOR as f64).collect();
    let mut step = fine.clone();
    let (mut ay, mut az) = (window(&axes, &step, &cy), window(&axes, &step, &cz));
    for _ in 0..MAX_PASSES {
        ay = window(&axes, &step, &cy);
        az = window(&axes, &step, &cz);
        let ry = common_candidates(dim, &ay, &p, w.r0_target);
        let rz = confidential_candidates(dim, &az);
        let Some(r) = scan(&p, w, &ry, &rz) else { break };
        scanned += r.scanned;
        feasible += r.feasible;
        if r.value > best.0 {
            // Moved: search again around the new point at the same step.
            best = (r.value, r.b0, r.b1);
            cy = ry[r.y].coords.clone();
            cz = rz[r.z].coords.clone();
        } else {
            step.iter_mut().for_each(|h| *h /= REFINE_FACTOR as f64);
            if step.iter().zip(&fine).all(|(h, f)| *h <= f * MIN_STEP_RATIO) {
                break;
            }
        }
    }
    let (coarse_value, b0, b1) = (coarse.value, best.1, best.2);

    let split = CovSplit::new(unpack(dim, &b0), unpack(dim, &b1))?;
    let best = SolverResult::evaluate(ch, w, split, true, scanned)?;
    let refinement_window = ay.iter().chain(&az).map(|a| (a.lo, a.hi)).collect();
    Ok(OracleReport {
        best,
        coarse_value,
        resolution,
        points_scanned: scanned,
        feasible_points: feasible,
        refinement_window,
    })
}
