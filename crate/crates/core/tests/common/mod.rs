#![allow(dead_code)]

use dspca::data::UniformStream;
use dspca::SymMatrix;

/// Symmetric matrix with entries uniform on `[-scale, scale)`.
pub fn random_symmetric(n: usize, seed: u64, scale: f64) -> SymMatrix {
    let mut s = UniformStream::new(seed);
    SymMatrix::from_lower_fn(n, |_, _| scale * (2.0 * s.next_f64() - 1.0))
}

/// `GᵀG/n` with a standard normal-ish `G` (sum of uniforms), full rank.
pub fn random_psd(n: usize, seed: u64) -> SymMatrix {
    let mut s = UniformStream::new(seed ^ 0x5eed);
    let g = s.matrix(n + 2, n).map(|v| 2.0 * v - 1.0);
    SymMatrix::symmetrize(g.transpose() * &g / n as f64)
}

pub fn unit_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut s = UniformStream::new(seed);
    let v: Vec<f64> = (0..n).map(|_| 2.0 * s.next_f64() - 1.0).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

pub fn max_abs_diff(a: &SymMatrix, b: &SymMatrix) -> f64 {
    a.sub(b).max_abs()
}
