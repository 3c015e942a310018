//! Orthonormal 2-D DCT-II on square tiles.

use std::f64::consts::PI;

/// Row `k` holds the `k`-th orthonormal cosine basis vector of length `n`.
#[derive(Debug, Clone)]
pub struct DctBasis {
    n: usize,
    matrix: Vec<f64>,
}

impl DctBasis {
    pub fn new(n: usize) -> Self {
        let mut matrix = vec![0.0; n * n];
        let nf = n as f64;
        for k in 0..n {
            let alpha = if k == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            for i in 0..n {
                matrix[k * n + i] = alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos();
            }
        }
        DctBasis { n, matrix }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `B · X · Bᵀ` for a row-major `n × n` tile.
    pub fn forward(&self, tile: &[f64]) -> Vec<f64> {
        let tmp = self.apply_rows(tile, false);
        self.apply_cols(&tmp, false)
    }

    /// `Bᵀ · Y · B`.
    pub fn inverse(&self, coefficients: &[f64]) -> Vec<f64> {
        let tmp = self.apply_rows(coefficients, true);
        self.apply_cols(&tmp, true)
    }

    fn basis(&self, k: usize, i: usize, transpose: bool) -> f64 {
        if transpose {
            self.matrix[i * self.n + k]
        } else {
            self.matrix[k * self.n + i]
        }
    }

    // transform along each row: out[r][k] = Σ_i M[k][i] x[r][i]
    fn apply_rows(&self, x: &[f64], transpose: bool) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for r in 0..n {
            let row = &x[r * n..(r + 1) * n];
            for k in 0..n {
                out[r * n + k] = row
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.basis(k, i, transpose) * v)
                    .sum();
            }
        }
        out
    }

    // transform along each column: out[k][c] = Σ_i M[k][i] x[i][c]
    fn apply_cols(&self, x: &[f64], transpose: bool) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for i in 0..n {
                let m = self.basis(k, i, transpose);
                for c in 0..n {
                    out[k * n + c] += m * x[i * n + c];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct quadruple-sum DCT-II, the textbook definition.
    fn naive_dct(x: &[f64], n: usize) -> Vec<f64> {
        let a = |k: usize| {
            if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            }
        };
        let c = |k: usize, i: usize| (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n as f64)).cos();
        let mut out = vec![0.0; n * n];
        for u in 0..n {
            for v in 0..n {
                let mut s = 0.0;
                for r in 0..n {
                    for col in 0..n {
                        s += x[r * n + col] * c(u, r) * c(v, col);
                    }
                }
                out[u * n + v] = a(u) * a(v) * s;
            }
        }
        out
    }

    #[test]
    fn matches_textbook_definition() {
        let n = 8;
        let x: Vec<f64> = (0..n * n).map(|i| ((i * 37) % 23) as f64 - 11.0).collect();
        let fast = DctBasis::new(n).forward(&x);
        for (a, b) in fast.iter().zip(naive_dct(&x, n)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_round_trips_and_preserves_energy() {
        let basis = DctBasis::new(16);
        let x: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin() * 100.0).collect();
        let y = basis.forward(&x);
        let back = basis.inverse(&y);
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ey: f64 = y.iter().map(|v| v * v).sum();
        assert!((ex - ey).abs() < 1e-6 * ex);
    }

    #[test]
    fn constant_tile_has_only_dc() {
        let y = DctBasis::new(4).forward(&[3.0; 16]);
        assert!((y[0] - 12.0).abs() < 1e-12);
        assert!(y[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
