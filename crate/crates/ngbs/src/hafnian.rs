//! Hafnian and loop-hafnian evaluation over matchings, the photon-pattern
//! submatrix construction, normalization absorption by rescaling, and a
//! low-rank fast path.
//!
//! The loop hafnian of a symmetric `N x N` matrix `A` with loop vector `F`
//! sums over all ways to partition the `N` vertices into pairs and
//! singletons, weighting a pair `(i, j)` by `A_ij` and a singleton `i` by
//! `F_i`. Probabilities of photon patterns are loop hafnians of submatrices
//! of the matching pair built by [`crate::gaussian::GaussianState::build_af`],
//! divided by the pattern factorial and the covariance prefactor.
//!
//! Enumeration cost grows factorially and is kept as the trusted reference;
//! the low-rank path expands a product of linear forms instead and is the
//! only optimized kernel.

use crate::circuit::PhotonPattern;
use crate::error::{Error, Result};
use crate::gaussian::AfPair;
use crate::linalg;
use crate::C64;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Default cap on matching-enumeration dimension.
pub const DEFAULT_DIM_CAP: usize = 20;

/// Max-norm symmetry tolerance on matching matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Max-norm residual allowed between a low-rank factor and its matrix.
pub const FACTOR_TOL: f64 = 1e-8;

fn c0() -> C64 {
    C64::new(0.0, 0.0)
}

fn c1() -> C64 {
    C64::new(1.0, 0.0)
}

/// A loop-hafnian instance: symmetric matrix `A` plus loop vector `F`.
#[derive(Clone, Debug)]
pub struct MatchingInstance {
    /// Symmetric `N x N` matrix.
    pub a: Array2<C64>,
    /// Loop weights, length `N`.
    pub f: Array1<C64>,
}

impl MatchingInstance {
    /// Builds an instance, checking shape and symmetry (tolerance
    /// [`SYMMETRY_TOL`]).
    pub fn new(a: Array2<C64>, f: Array1<C64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "matching matrix must be square");
        assert_eq!(n, f.len(), "loop vector length must match matrix");
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                defect = defect.max((a[[i, j]] - a[[j, i]]).norm());
            }
        }
        assert!(
            defect <= SYMMETRY_TOL,
            "matching matrix asymmetric (defect {defect:.3e})"
        );
        Self { a, f }
    }

    /// Dimension `N`.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Submatrix instance for a photon pattern.
///
/// For each mode `j` detected with `n_j` photons, `n_j` copies of index `j`
/// and `n_j` copies of index `M + j` are selected from the matching pair, so
/// the instance dimension is twice the photon total.
pub fn submatrix_for_pattern(af: &AfPair, pattern: &PhotonPattern) -> MatchingInstance {
    assert_eq!(pattern.0.len(), af.modes, "pattern length must match modes");
    let mut idx = Vec::with_capacity(2 * pattern.total());
    for (j, &nj) in pattern.0.iter().enumerate() {
        idx.extend(std::iter::repeat_n(j, nj));
    }
    for (j, &nj) in pattern.0.iter().enumerate() {
        idx.extend(std::iter::repeat_n(af.modes + j, nj));
    }
    let n = idx.len();
    let mut a = Array2::<C64>::zeros((n, n));
    let mut f = Array1::<C64>::zeros(n);
    for (p, &ip) in idx.iter().enumerate() {
        f[p] = af.f[ip];
        for (q, &iq) in idx.iter().enumerate() {
            a[[p, q]] = af.a[[ip, iq]];
        }
    }
    MatchingInstance::new(a, f)
}

/// Hafnian of a symmetric matrix by perfect-matching enumeration.
///
/// Odd dimension returns 0 by convention. Cost is `(N-1)!!` terms; refuses
/// dimensions above [`DEFAULT_DIM_CAP`].
pub fn hafnian(a: &Array2<C64>) -> Result<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "hafnian input must be square");
    if n > DEFAULT_DIM_CAP {
        return Err(Error::DimensionTooLarge { dim: n, cap: DEFAULT_DIM_CAP });
    }
    if n % 2 == 1 {
        return Ok(c0());
    }
    let mut verts: Vec<usize> = (0..n).collect();
    Ok(haf_rec(a, &mut verts))
}

fn haf_rec(a: &Array2<C64>, verts: &mut Vec<usize>) -> C64 {
    let v = match verts.pop() {
        Some(v) => v,
        None => return c1(),
    };
    let mut acc = c0();
    for i in 0..verts.len() {
        let w = verts[i];
        let last = verts.len() - 1;
        verts.swap(i, last);
        verts.pop();
        acc += a[[v, w]] * haf_rec(a, verts);
        verts.push(w);
        let last = verts.len() - 1;
        verts.swap(i, last);
    }
    verts.push(v);
    acc
}

/// Loop hafnian by enumeration of matchings with loops, capped at
/// [`DEFAULT_DIM_CAP`].
pub fn loop_hafnian(inst: &MatchingInstance) -> Result<C64> {
    loop_hafnian_capped(inst, DEFAULT_DIM_CAP)
}

/// Loop hafnian by enumeration with an explicit dimension cap.
///
/// The empty instance evaluates to 1. Every vertex is either paired
/// (weight `A_ij`) or looped (weight `F_i`); both branches are always
/// enumerated, so cost follows the telephone numbers of `N`.
pub fn loop_hafnian_capped(inst: &MatchingInstance, cap: usize) -> Result<C64> {
    let n = inst.dim();
    if n > cap {
        return Err(Error::DimensionTooLarge { dim: n, cap });
    }
    let mut verts: Vec<usize> = (0..n).collect();
    Ok(lhaf_rec(&inst.a, &inst.f, &mut verts))
}

fn lhaf_rec(a: &Array2<C64>, f: &Array1<C64>, verts: &mut Vec<usize>) -> C64 {
    let v = match verts.pop() {
        Some(v) => v,
        None => return c1(),
    };
    let mut acc = f[v] * lhaf_rec(a, f, verts);
    for i in 0..verts.len() {
        let w = verts[i];
        let last = verts.len() - 1;
        verts.swap(i, last);
        verts.pop();
        acc += a[[v, w]] * lhaf_rec(a, f, verts);
        verts.push(w);
        let last = verts.len() - 1;
        verts.swap(i, last);
    }
    verts.push(v);
    acc
}

/// Rescales an instance so that its loop hafnian absorbs a normalization
/// factor `p^{-K}`.
///
/// By the homogeneity law `Lhaf(c^2 A, c F) = c^N Lhaf(A, F)` with `N` the
/// instance dimension, choosing `c = p^{-K/N}` gives
/// `Lhaf(scaled) = p^{-K} Lhaf(original)` exactly. The exponent is computed
/// in the log domain so small `p` cannot lose precision; if the scale
/// factor itself overflows the floating range the call fails with
/// [`Error::InvalidP`].
pub fn scale_absorb(inst: &MatchingInstance, p: f64, k: u32) -> Result<MatchingInstance> {
    let n = inst.dim();
    assert!(n >= 1, "scaling needs a non-empty instance");
    if p <= 0.0 || !p.is_finite() {
        return Err(Error::InvalidP { p });
    }
    let log_c = -(k as f64) * p.ln() / (n as f64);
    let c = log_c.exp();
    let c2 = (2.0 * log_c).exp();
    if !c.is_finite() || !c2.is_finite() {
        return Err(Error::InvalidP { p });
    }
    Ok(MatchingInstance {
        a: inst.a.mapv(|z| z * c2),
        f: inst.f.mapv(|z| z * c),
    })
}

/// Symmetric low-rank factorization `A = g g^T` of a matching instance.
#[derive(Clone, Debug)]
pub struct LowRankFactor {
    /// `N x R` factor with `A = g g^T`.
    pub g: Array2<C64>,
    /// Loop weights carried over from the instance.
    pub f: Array1<C64>,
}

impl LowRankFactor {
    /// Factors `A = g g^T` through the eigendecomposition of the real
    /// symmetric embedding `[[Re A, Im A], [Im A, -Re A]]`.
    ///
    /// Each positive eigenvalue `s` with embedded vector `[x; y]` yields a
    /// column `sqrt(s) (x + i y)`; eigenvalues below `1e-10` of the largest
    /// are truncated. Fails with [`Error::FactorMismatch`] if the rebuilt
    /// matrix misses `A` by more than [`FACTOR_TOL`] in max norm.
    pub fn from_instance(inst: &MatchingInstance) -> Result<Self> {
        let n = inst.dim();
        let mut emb = Array2::<f64>::zeros((2 * n, 2 * n));
        for i in 0..n {
            for j in 0..n {
                let re = inst.a[[i, j]].re;
                let im = inst.a[[i, j]].im;
                emb[[i, j]] = re;
                emb[[i, n + j]] = im;
                emb[[n + i, j]] = im;
                emb[[n + i, n + j]] = -re;
            }
        }
        let (vals, vecs) = linalg::jacobi_eigh(&emb).map_err(Error::from)?;
        let smax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut cols: Vec<Array1<C64>> = Vec::new();
        // Ascending eigenvalues: walk the positive end, largest first.
        for k in (0..2 * n).rev() {
            let s = vals[k];
            if s <= 0.0 || s <= 1e-10 * smax {
                break;
            }
            let mut col = Array1::<C64>::zeros(n);
            for i in 0..n {
                col[i] = C64::new(vecs[[i, k]], vecs[[n + i, k]]) * s.sqrt();
            }
            cols.push(col);
        }
        let r = cols.len();
        let mut g = Array2::<C64>::zeros((n, r));
        for (k, col) in cols.iter().enumerate() {
            for i in 0..n {
                g[[i, k]] = col[i];
            }
        }
        let mut residual = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = c0();
                for k in 0..r {
                    acc += g[[i, k]] * g[[j, k]];
                }
                residual = residual.max((acc - inst.a[[i, j]]).norm());
            }
        }
        if residual > FACTOR_TOL {
            return Err(Error::FactorMismatch { residual });
        }
        Ok(Self { g, f: inst.f.clone() })
    }

    /// Number of factor columns `R`.
    pub fn rank(&self) -> usize {
        self.g.ncols()
    }
}

/// Loop hafnian through the low-rank factor, by expanding a product of
/// linear forms.
///
/// With `A = g g^T`, the loop hafnian equals the Gaussian expectation
/// `E[prod_j (F_j + sum_k g_jk xi_k)]` over independent standard normals
/// `xi_k`. The product is expanded exactly over monomials in `R + 1`
/// formal variables (one bookkeeping variable for the loop weights), and
/// each monomial contributes the moment `prod_k (m_k - 1)!!` for even
/// `m_k`, zero otherwise. Cost is polynomial in `N` for fixed `R`.
pub fn loop_hafnian_low_rank(factor: &LowRankFactor) -> C64 {
    let n = factor.f.len();
    let r = factor.rank();
    // coefficients of the expanded product, keyed by exponent vector over
    // (loop var, xi_1 .. xi_R)
    let mut coeffs: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
    coeffs.insert(vec![0u8; r + 1], c1());
    for j in 0..n {
        let mut next: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
        for (m, &cm) in &coeffs {
            let mut bump = |slot: usize, w: C64| {
                if w == c0() {
                    return;
                }
                let mut key = m.clone();
                key[slot] += 1;
                *next.entry(key).or_insert_with(c0) += cm * w;
            };
            bump(0, factor.f[j]);
            for k in 0..r {
                bump(k + 1, factor.g[[j, k]]);
            }
        }
        coeffs = next;
    }
    let mut total = c0();
    'outer: for (m, &cm) in &coeffs {
        let mut weight = 1.0f64;
        for &mk in &m[1..] {
            if mk % 2 == 1 {
                continue 'outer;
            }
            weight *= gaussian_moment(mk as u64);
        }
        total += cm * weight;
    }
    total
}

/// Even-order standard-normal moment `(m - 1)!!`.
fn gaussian_moment(m: u64) -> f64 {
    debug_assert!(m % 2 == 0);
    if m == 0 {
        1.0
    } else {
        double_factorial(m - 1) as f64
    }
}

/// Double factorial `n!!` in exact integer arithmetic.
pub fn double_factorial(n: u64) -> u128 {
    let mut acc: u128 = 1;
    let mut k = n as u128;
    while k > 1 {
        acc = acc.checked_mul(k).expect("double factorial overflow");
        k -= 2;
    }
    acc
}

/// Photon-pattern probability of a Gaussian state.
///
/// Evaluates `gauss_weight / (pattern! sqrt(det sigma_Q))` times the loop
/// hafnian of the pattern submatrix. The loop hafnian must come out real:
/// an imaginary residue beyond 1e-8 relative (with a 1e-12 absolute floor
/// on the probability scale) fails with [`Error::ImaginaryResidual`], and a
/// value below `-1e-9` fails with [`Error::NegativeProbability`]; values in
/// `[-1e-9, 0)` are rounding residue and clamp to zero.
pub fn probability(af: &AfPair, pattern: &PhotonPattern) -> Result<f64> {
    let inst = submatrix_for_pattern(af, pattern);
    let lh = loop_hafnian(&inst)?;
    let prefactor = af.gauss_weight / (pattern.factorial_product() * af.sqrt_det_sigma_q);
    finalize_probability(lh * prefactor)
}

/// Applies the realness and positivity guards to a probability candidate.
///
/// Shared by every evaluation route, including ones that fold extra scale
/// factors into the loop hafnian before calling this.
pub fn finalize_probability(value: C64) -> Result<f64> {
    if value.im.abs() > (1e-8 * value.re.abs()).max(1e-12) {
        return Err(Error::ImaginaryResidual { residual: value.im, scale: value.re });
    }
    let p = value.re;
    if p < -1e-9 {
        return Err(Error::NegativeProbability { value: p });
    }
    Ok(p.max(0.0))
}

/// Deterministic random instance with entries uniform in the unit square,
/// for cross-checks and benchmarks.
pub fn random_instance(n: usize, seed: u64) -> MatchingInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let z = C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
            a[[i, j]] = z;
            a[[j, i]] = z;
        }
    }
    let f = Array1::from_iter(
        (0..n).map(|_| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)),
    );
    MatchingInstance::new(a, f)
}

/// Deterministic random instance of exact rank `min(rank, n)`, built as
/// `g g^T` from a random factor.
pub fn random_low_rank_instance(n: usize, rank: usize, seed: u64) -> MatchingInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rank.min(n);
    let mut g = Array2::<C64>::zeros((n, r));
    for i in 0..n {
        for k in 0..r {
            g[[i, k]] =
                C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
        }
    }
    let mut a = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = c0();
            for k in 0..r {
                acc += g[[i, k]] * g[[j, k]];
            }
            a[[i, j]] = acc;
        }
    }
    // Exact symmetry by construction up to rounding; symmetrize the dust.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (a[[i, j]] + a[[j, i]]) / 2.0;
            a[[i, j]] = s;
            a[[j, i]] = s;
        }
    }
    let f = Array1::from_iter(
        (0..n).map(|_| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)),
    );
    MatchingInstance::new(a, f)
}
