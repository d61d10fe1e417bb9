//! Small dense linear-algebra kernels shared by the covariance and matching
//! modules: Hermitian Cholesky, a cyclic Jacobi eigensolver, polynomial root
//! finding via companion matrices, and seeded random unitaries.
//!
//! Matrices at experiment scale are tiny (tens of rows), so every routine
//! here favours determinism and clarity over asymptotic speed.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Failure modes of the dense kernels.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// A Hermitian factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite {
        /// Real part of the offending pivot.
        pivot: f64,
        /// Row at which the factorization failed.
        row: usize,
    },
    /// An iterative eigenvalue or root computation failed to converge.
    #[error("iteration failed to converge after {iterations} steps")]
    NoConvergence {
        /// Number of iterations performed before giving up.
        iterations: usize,
    },
}

/// Conjugate transpose.
pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Largest absolute entry of `m`.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Max-norm unitarity defect `max |U^† U - I|`.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let n = u.nrows();
    let gram = adjoint(u).dot(u);
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            defect = defect.max((gram[[i, j]] - expect).norm());
        }
    }
    defect
}

/// Cholesky factorization `A = L L^†` of a Hermitian positive-definite
/// complex matrix, with real positive diagonal.
pub struct Cholesky {
    l: Array2<C64>,
}

impl Cholesky {
    /// Factors a Hermitian positive-definite matrix. Fails with
    /// [`LinalgError::NotPositiveDefinite`] on a non-positive pivot.
    pub fn new(a: &Array2<C64>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky input must be square");
        let mut l = Array2::<C64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]].conj();
            }
            if d.re <= 0.0 || !d.re.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { pivot: d.re, row: j });
            }
            let ljj = d.re.sqrt();
            l[[j, j]] = C64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]].conj();
                }
                l[[i, j]] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &Array1<C64>) -> Array1<C64> {
        let n = self.l.nrows();
        let mut y = b.clone();
        for i in 0..n {
            for k in 0..i {
                let t = self.l[[i, k]] * y[k];
                y[i] -= t;
            }
            y[i] /= self.l[[i, i]];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = self.l[[k, i]].conj() * y[k];
                y[i] -= t;
            }
            y[i] /= self.l[[i, i]];
        }
        y
    }

    /// Inverse of the factored matrix.
    pub fn inverse(&self) -> Array2<C64> {
        let n = self.l.nrows();
        let mut inv = Array2::<C64>::zeros((n, n));
        for j in 0..n {
            let mut e = Array1::<C64>::zeros(n);
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve(&e);
            for i in 0..n {
                inv[[i, j]] = col[i];
            }
        }
        inv
    }

    /// `sqrt(det A) = prod L_jj`, real and positive for positive-definite input.
    pub fn sqrt_det(&self) -> f64 {
        (0..self.l.nrows()).map(|j| self.l[[j, j]].re).product()
    }
}

/// Eigenvalues and eigenvectors of a real symmetric matrix by cyclic Jacobi
/// rotations. Returns `(values, vectors)` with eigenvectors in columns,
/// sorted by ascending eigenvalue.
pub fn jacobi_eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigh input must be square");
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = (1e-14 * norm).max(1e-300);
    let max_sweeps = 100;
    for _sweep in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&i, &j| m[[i, i]].total_cmp(&m[[j, j]]));
            let values: Vec<f64> = idx.iter().map(|&i| m[[i, i]]).collect();
            let mut vectors = Array2::<f64>::zeros((n, n));
            for (col, &i) in idx.iter().enumerate() {
                for row in 0..n {
                    vectors[[row, col]] = v[[row, i]];
                }
            }
            return Ok((values, vectors));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol / (n as f64 * n as f64) {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence { iterations: max_sweeps })
}

/// Eigenvalues of a Hermitian matrix via the real symmetric embedding
/// `[[Re H, -Im H], [Im H, Re H]]`, whose spectrum is that of `H` doubled.
pub fn hermitian_eigenvalues(h: &Array2<C64>) -> Result<Vec<f64>, LinalgError> {
    let n = h.nrows();
    let mut emb = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            emb[[i, j]] = h[[i, j]].re;
            emb[[i, n + j]] = -h[[i, j]].im;
            emb[[n + i, j]] = h[[i, j]].im;
            emb[[n + i, n + j]] = h[[i, j]].re;
        }
    }
    let (vals, _) = jacobi_eigh(&emb)?;
    // Each eigenvalue of H appears twice; keep every other entry.
    Ok(vals.into_iter().step_by(2).collect())
}

/// Roots of the polynomial `c[0] + c[1] x + ... + c[n] x^n` (leading
/// coefficient non-zero), found as companion-matrix eigenvalues with one
/// Newton polish step per root, sorted by `(re, im)`.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>, LinalgError> {
    let n = coeffs.len().saturating_sub(1);
    assert!(
        !coeffs.is_empty() && coeffs[n].norm() > 0.0,
        "leading coefficient must be non-zero"
    );
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let monic: Vec<C64> = coeffs.iter().map(|c| c / lead).collect();
    let mut h = Array2::<C64>::zeros((n, n));
    for i in 0..n - 1 {
        h[[i + 1, i]] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        h[[i, n - 1]] = -monic[i];
    }
    let mut roots = hessenberg_eigenvalues(h)?;
    for r in roots.iter_mut() {
        let (p, dp) = horner_with_derivative(&monic, *r);
        if dp.norm() > 1e-300 {
            let step = p / dp;
            if step.norm() < 1.0 {
                *r -= step;
            }
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Evaluates a polynomial and its derivative at `x` by Horner's rule.
pub fn horner_with_derivative(coeffs: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Eigenvalues of a complex upper-Hessenberg matrix by explicitly shifted
/// QR iteration with Givens rotations.
fn hessenberg_eigenvalues(mut h: Array2<C64>) -> Result<Vec<C64>, LinalgError> {
    let n = h.nrows();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n;
    let eps = 1e-14;
    let mut stall = 0usize;
    let mut total_iters = 0usize;
    let max_total = 60 * n + 200;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[[0, 0]]);
            hi = 0;
            continue;
        }
        let sub = h[[hi - 1, hi - 2]].norm();
        let scale = h[[hi - 1, hi - 1]].norm() + h[[hi - 2, hi - 2]].norm();
        if sub <= eps * scale.max(1e-300) {
            eigs.push(h[[hi - 1, hi - 1]]);
            hi -= 1;
            stall = 0;
            continue;
        }
        total_iters += 1;
        if total_iters > max_total {
            return Err(LinalgError::NoConvergence { iterations: total_iters });
        }
        stall += 1;
        let mu = if stall % 16 == 0 {
            // Exceptional shift to break symmetric stalls.
            h[[hi - 1, hi - 1]] + C64::new(1.5, 0.75) * h[[hi - 1, hi - 2]]
        } else {
            wilkinson_shift(
                h[[hi - 2, hi - 2]],
                h[[hi - 2, hi - 1]],
                h[[hi - 1, hi - 2]],
                h[[hi - 1, hi - 1]],
            )
        };
        for d in 0..hi {
            h[[d, d]] -= mu;
        }
        let mut rots: Vec<(C64, C64)> = Vec::with_capacity(hi - 1);
        for k in 0..hi - 1 {
            let a = h[[k, k]];
            let b = h[[k + 1, k]];
            let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (c, s) = if r < 1e-300 {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (a.conj() / r, b.conj() / r)
            };
            for col in k..hi {
                let x = h[[k, col]];
                let y = h[[k + 1, col]];
                h[[k, col]] = c * x + s * y;
                h[[k + 1, col]] = -s.conj() * x + c.conj() * y;
            }
            rots.push((c, s));
        }
        for (k, &(c, s)) in rots.iter().enumerate() {
            for row in 0..(k + 2).min(hi) {
                let x = h[[row, k]];
                let y = h[[row, k + 1]];
                h[[row, k]] = x * c.conj() + y * s.conj();
                h[[row, k + 1]] = -x * s + y * c;
            }
        }
        for d in 0..hi {
            h[[d, d]] += mu;
        }
    }
    Ok(eigs)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr = a + d;
    let disc = ((a - d) * (a - d) + 4.0 * b * c).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Haar-like random unitary: Gram-Schmidt of a seeded complex Gaussian
/// matrix. Deterministic in `seed`.
pub fn random_unitary(n: usize, seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = C64::new(standard_normal(&mut rng), standard_normal(&mut rng));
        }
    }
    // Modified Gram-Schmidt with one re-orthogonalization pass.
    for j in 0..n {
        for _ in 0..2 {
            for k in 0..j {
                let mut proj = C64::new(0.0, 0.0);
                for i in 0..n {
                    proj += m[[i, k]].conj() * m[[i, j]];
                }
                for i in 0..n {
                    let t = proj * m[[i, k]];
                    m[[i, j]] -= t;
                }
            }
        }
        let norm: f64 = (0..n).map(|i| m[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            m[[i, j]] /= norm;
        }
    }
    m
}

/// One standard-normal draw by Box-Muller.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
