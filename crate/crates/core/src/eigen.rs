//! Dense Hermitian matrices and a cyclic Jacobi eigensolver.
//!
//! The matrices handled here are small (a few dozen rows at most), so the
//! quadratic-convergence Jacobi iteration is accurate and fast enough.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const CONVERGENCE: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-9;

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries without checking Hermiticity.
    pub fn from_rows(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(HermitianMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|k| self[(k, k)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest |H_ij − conj(H_ji)|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.max_asymmetry() <= rel_tol * self.frobenius_norm().max(f64::MIN_POSITIVE)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    acc += self[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for HermitianMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    /// `vectors[k]` is the eigenvector belonging to `values[k]`.
    pub vectors: Vec<Vec<Complex64>>,
    pub sweeps: usize,
}

impl Eigensystem {
    /// ‖H·v − λ·v‖ maximised over all eigenpairs.
    pub fn max_residual(&self, h: &HermitianMatrix) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lambda, v)| {
                let hv = h.mul_vec(v);
                hv.iter()
                    .zip(v)
                    .map(|(a, b)| (a - b * lambda).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// ‖H − VΛV†‖_F.
    pub fn reconstruction_error(&self, h: &HermitianMatrix) -> f64 {
        let n = h.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut z = h[(i, j)];
                for (lambda, v) in self.values.iter().zip(&self.vectors) {
                    z -= v[i] * v[j].conj() * *lambda;
                }
                acc += z.norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Diagonalizes a Hermitian matrix with cyclic complex Jacobi rotations.
pub fn diagonalize(h: &HermitianMatrix) -> Result<Eigensystem> {
    let n = h.dim();
    let norm = h.frobenius_norm();
    let asym = h.max_asymmetry();
    let tolerance = HERMITIAN_TOL * norm.max(f64::MIN_POSITIVE);
    if asym > tolerance {
        return Err(Error::NotHermitian {
            asymmetry: asym,
            tolerance,
        });
    }

    // Symmetrize so roundoff in the input cannot bias the rotations.
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = HermitianMatrix::from_real_diagonal(&vec![1.0; n]);

    let threshold = CONVERGENCE * norm;
    let mut sweeps = 0;
    while a.off_diagonal_norm() > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: a.off_diagonal_norm(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|row| v[(row, k)]).collect())
        .collect();
    Ok(Eigensystem {
        values,
        vectors,
        sweeps,
    })
}

/// Annihilates a[p][q] with the unitary U = diag(1, e^{-iφ}) · [[c, s], [-s, c]].
fn rotate(a: &mut HermitianMatrix, v: &mut HermitianMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    let n = a.dim();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}
