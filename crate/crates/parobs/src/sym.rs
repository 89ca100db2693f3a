//! Dense symmetric matrices with an exact-enough spectral factorization.
//!
//! The matrices here are tiny (spatial Hessians up to 3×3, Gram matrices up
//! to 7×7), so a cyclic Jacobi iteration is simpler and more predictable
//! than pulling in a linear-algebra dependency: it is unconditionally
//! convergent for symmetric matrices, fully deterministic, and accurate to
//! machine precision.

use crate::error::{Error, Result};

/// Symmetric matrix stored dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from row-major data, symmetrizing `(A + Aᵀ)/2`.
    pub fn from_rows(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Precondition(format!(
                "symmetric matrix needs {}x{} = {} entries, got {}",
                n,
                n,
                n * n,
                data.len()
            )));
        }
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = 0.5 * (data[i * n + j] + data[j * n + i]);
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn rows(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_distance(&self, other: &SymMat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Eigenvalues ascending with matching orthonormal eigenvectors
    /// (column `k` of the returned basis pairs with eigenvalue `k`).
    pub fn eigen(&self) -> Eigen {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        // Cyclic Jacobi sweeps; off-diagonal mass decays quadratically.
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
            if off.sqrt() < 1e-15 * (1.0 + frob(&a)) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
        let mut vectors = vec![0.0; n * n];
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                vectors[k * n + col] = v[k * n + src];
            }
        }
        Eigen {
            n,
            values,
            vectors,
        }
    }

    /// Largest eigenvalue (for Lipschitz constants of quadratic objectives).
    pub fn max_eigenvalue(&self) -> f64 {
        *self
            .eigen()
            .values
            .last()
            .expect("eigenvalues of a nonempty matrix")
    }

    /// Nearest positive-semidefinite matrix with trace clamped to
    /// `[0, trace_cap]`: eigenvalues are floored at zero, then uniformly
    /// shifted down (water-filling) when their sum exceeds the cap. This is
    /// the exact Euclidean (Frobenius) projection onto that spectral set.
    pub fn project_psd_trace_capped(&self, trace_cap: f64) -> SymMat {
        let eig = self.eigen();
        let mut vals: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
        let total: f64 = vals.iter().sum();
        if total > trace_cap {
            // Find the shift ν with Σ max(0, λ_i - ν) = cap.
            let mut sorted = vals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = sorted.len();
            let mut nu = 0.0;
            let mut suffix: f64 = sorted.iter().sum();
            for (k, &l) in sorted.iter().enumerate() {
                let active = (n - k) as f64;
                let candidate = (suffix - trace_cap) / active;
                if candidate <= l {
                    nu = candidate;
                    break;
                }
                suffix -= l;
            }
            for v in vals.iter_mut() {
                *v = (*v - nu).max(0.0);
            }
        }
        eig.reassemble(&vals)
    }
}

fn frob(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Spectral factorization `A = V diag(λ) Vᵀ`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    n: usize,
    pub values: Vec<f64>,
    /// Row-major orthonormal basis; column `k` is the eigenvector for `values[k]`.
    pub vectors: Vec<f64>,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + k]).collect()
    }

    /// `V diag(vals) Vᵀ` with replaced eigenvalues.
    pub fn reassemble(&self, vals: &[f64]) -> SymMat {
        let n = self.n;
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += vals[k] * self.vectors[i * n + k] * self.vectors[j * n + k];
                }
                m.set(i, j, acc);
            }
        }
        m
    }

    /// Projector onto the span of the first `j` eigenvectors.
    pub fn span_projector(&self, j: usize) -> SymMat {
        let ones: Vec<f64> = (0..self.n).map(|k| if k < j { 1.0 } else { 0.0 }).collect();
        self.reassemble(&ones)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigen_reproduces_known_spectrum() {
        // Eigenvalues of [[2,1],[1,2]] are 1 and 3.
        let m = SymMat::from_rows(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = m.eigen();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-13);
        assert_relative_eq!(e.values[1], 3.0, epsilon = 1e-13);
        // Factorization reassembles the matrix.
        let back = e.reassemble(&e.values);
        assert!(m.frobenius_distance(&back) < 1e-12);
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let m = SymMat::from_rows(
            3,
            &[4.0, -1.0, 0.5, -1.0, 3.0, 0.2, 0.5, 0.2, 1.0],
        )
        .unwrap();
        let e = m.eigen();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = e.vector(i).iter().zip(e.vector(j)).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(dot, want, epsilon = 1e-12);
            }
        }
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn psd_projection_floors_and_caps() {
        // diag(-1, 0.7, 0.8): floor gives (0, 0.7, 0.8), sum 1.5 > 1,
        // water-filling shifts by 0.25 → (0, 0.45, 0.55).
        let m = SymMat::from_rows(
            3,
            &[-1.0, 0.0, 0.0, 0.0, 0.7, 0.0, 0.0, 0.0, 0.8],
        )
        .unwrap();
        let p = m.project_psd_trace_capped(1.0);
        assert_relative_eq!(p.trace(), 1.0, epsilon = 1e-12);
        let e = p.eigen();
        assert_relative_eq!(e.values[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], 0.45, epsilon = 1e-12);
        assert_relative_eq!(e.values[2], 0.55, epsilon = 1e-12);
    }

    #[test]
    fn psd_projection_is_identity_on_feasible_input() {
        let m = SymMat::from_rows(2, &[0.3, 0.1, 0.1, 0.2]).unwrap();
        let p = m.project_psd_trace_capped(1.0);
        assert!(m.frobenius_distance(&p) < 1e-13);
    }
}
