//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use std::io::Write;
use std::time::Duration;

use mimo_secrecy::channel::{AlignedChannel, GeneralChannel};
use mimo_secrecy::matcore::{Matrix, SymMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn reference_h1() -> Matrix {
    Matrix::from_rows(&[[1.8, 2.0], [1.0, 3.0]]).unwrap()
}

pub fn reference_h2() -> Matrix {
    Matrix::from_rows(&[[3.3, 1.3], [2.0, -1.5]]).unwrap()
}

pub fn reference_s() -> SymMatrix {
    SymMatrix::from_rows(&[[5.0, 1.25], [1.25, 10.0]]).unwrap()
}

pub fn reference_general() -> GeneralChannel {
    GeneralChannel::new(reference_h1(), reference_h2(), reference_s()).unwrap()
}

pub fn reference_aligned() -> AlignedChannel {
    reference_general().to_aligned().unwrap()
}

pub fn scalar(n1: f64, n2: f64, s: f64) -> AlignedChannel {
    AlignedChannel::new(SymMatrix::scalar(n1), SymMatrix::scalar(n2), SymMatrix::scalar(s)).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// `G G^T / t + floor I` with Gaussian-like uniform entries.
pub fn random_pd(rng: &mut ChaCha8Rng, t: usize, floor: f64) -> SymMatrix {
    let g = random_matrix(rng, t, t, -1.0, 1.0);
    let gram = SymMatrix::identity(t).congruence(&g).unwrap();
    &gram.scale(1.0 / t as f64) + &SymMatrix::identity(t).scale(floor)
}

/// Square gains with entries in `[-2, 2]` and `|det| >= 0.1`.
pub fn random_gain(rng: &mut ChaCha8Rng, t: usize) -> Matrix {
    loop {
        let h = random_matrix(rng, t, t, -2.0, 2.0);
        if h.det().unwrap().abs() >= 0.1 {
            return h;
        }
    }
}

/// Positive definite `(B0, B1)` with `B0 + B1 <= (1 - margin) S`.
pub fn random_split(rng: &mut ChaCha8Rng, s: &SymMatrix, margin: f64) -> (SymMatrix, SymMatrix) {
    let t = s.dim();
    let root = s.eig().unwrap().compose(f64::sqrt);
    // The floor keeps both blocks strictly inside the cone.
    let y = random_pd(rng, t, 0.05);
    let z = random_pd(rng, t, 0.05);
    let total = y.trace() + z.trace();
    let k = (1.0 - margin) * rng.random_range(0.2..1.0) / total.max(1e-12);
    let b0 = y.scale(k).congruence(&root.to_matrix()).unwrap();
    let b1 = z.scale(k).congruence(&root.to_matrix()).unwrap();
    (b0, b1)
}

/// One unbuffered line on stderr, visible through the harness capture.
pub fn report(id: &str, passed: bool, detail: &str, elapsed: Duration) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{verdict} [{id}] {detail} ({:.3} s)", elapsed.as_secs_f64());
}
