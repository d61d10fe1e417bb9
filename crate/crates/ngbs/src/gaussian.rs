//! Multimode Gaussian states in the doubled annihilation/creation ordering,
//! and their reduction to the matching form consumed by the hafnian module.
//!
//! An `M`-mode state is described by a `2M x 2M` covariance matrix `sigma`
//! and a length-`2M` displacement vector `disp`, both indexed in the order
//! `[a_1 .. a_M, a^+_1 .. a^+_M]`. The covariance matrix has the block form
//! `[[C, S], [conj(S), conj(C)]]` with `C` Hermitian and `S` symmetric, and
//! the displacement satisfies `disp[M + j] = conj(disp[j])`. The vacuum is
//! `sigma = I/2`, `disp = 0`.
//!
//! Probabilities come from the shifted matrix `sigma_Q = sigma + I/2`
//! through the matching pair `A = X (I - sigma_Q^{-1})`, with `X` the
//! block-swap permutation, and `F = disp^+ sigma_Q^{-1}`; this module builds
//! that pair together with the scalar prefactor ingredients.

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};
use crate::C64;
use ndarray::{Array1, Array2};

/// Tolerance for covariance structure checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Condition-number ceiling beyond which `sigma_Q` is treated as singular.
pub const CONDITION_CAP: f64 = 1e12;

fn c0() -> C64 {
    C64::new(0.0, 0.0)
}

/// An `M`-mode Gaussian state: covariance matrix plus displacement vector.
#[derive(Clone, Debug)]
pub struct GaussianState {
    modes: usize,
    sigma: Array2<C64>,
    disp: Array1<C64>,
}

/// Matching-form data of a Gaussian state: the symmetric matrix `A`, the
/// loop vector `F`, and the scalar prefactor ingredients of the probability
/// formula.
#[derive(Clone, Debug)]
pub struct AfPair {
    /// Mode count `M` of the originating state.
    pub modes: usize,
    /// Symmetric `2M x 2M` matrix `X (I - sigma_Q^{-1})`.
    pub a: Array2<C64>,
    /// Loop vector `disp^+ sigma_Q^{-1}` of length `2M`.
    pub f: Array1<C64>,
    /// Positive square root of `det sigma_Q`.
    pub sqrt_det_sigma_q: f64,
    /// Gaussian weight `exp(-disp^+ sigma_Q^{-1} disp / 2)`.
    pub gauss_weight: f64,
}

impl GaussianState {
    /// The `M`-mode vacuum: `sigma = I/2`, zero displacement.
    pub fn vacuum(modes: usize) -> Self {
        assert!(modes >= 1, "state needs at least one mode");
        let mut sigma = Array2::<C64>::zeros((2 * modes, 2 * modes));
        for i in 0..2 * modes {
            sigma[[i, i]] = C64::new(0.5, 0.0);
        }
        Self { modes, sigma, disp: Array1::zeros(2 * modes) }
    }

    /// Mode count.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Covariance matrix, `2M x 2M`.
    pub fn sigma(&self) -> &Array2<C64> {
        &self.sigma
    }

    /// Displacement vector, length `2M`.
    pub fn disp(&self) -> &Array1<C64> {
        &self.disp
    }

    /// Applies a doubled-space linear map: `sigma -> W sigma W^+`,
    /// `disp -> W disp`.
    fn transform(&self, w: &Array2<C64>) -> Self {
        let sigma = w.dot(&self.sigma).dot(&linalg::adjoint(w));
        let disp = w.dot(&self.disp);
        Self { modes: self.modes, sigma, disp }
    }

    /// Single-mode squeezer with parameter `r` on `mode`.
    ///
    /// Doubled-space action on the `(mode, M+mode)` pair:
    /// `[[cosh r, -sinh r], [-sinh r, cosh r]]`.
    pub fn squeeze(&self, mode: usize, r: f64) -> Self {
        assert!(mode < self.modes, "mode {mode} out of range");
        let m = self.modes;
        let (ch, sh) = (r.cosh(), r.sinh());
        let mut w = Array2::<C64>::eye(2 * m);
        w[[mode, mode]] = C64::new(ch, 0.0);
        w[[mode, m + mode]] = C64::new(-sh, 0.0);
        w[[m + mode, mode]] = C64::new(-sh, 0.0);
        w[[m + mode, m + mode]] = C64::new(ch, 0.0);
        self.transform(&w)
    }

    /// Displaces `mode` by `alpha`; covariance unchanged.
    pub fn displace(&self, mode: usize, alpha: C64) -> Self {
        assert!(mode < self.modes, "mode {mode} out of range");
        let mut out = self.clone();
        out.disp[mode] += alpha;
        out.disp[self.modes + mode] += alpha.conj();
        out
    }

    /// Beamsplitter of transmission `t` on modes `(i, j)`:
    /// `a_i -> sqrt(t) a_i + sqrt(1-t) a_j`,
    /// `a_j -> -sqrt(1-t) a_i + sqrt(t) a_j`.
    pub fn beamsplitter(&self, i: usize, j: usize, t: f64) -> Self {
        assert!(i != j && i < self.modes && j < self.modes, "bad mode pair");
        assert!((0.0..=1.0).contains(&t), "transmission out of [0,1]");
        let (tau, rho) = (t.sqrt(), (1.0 - t).sqrt());
        let mut u = Array2::<C64>::eye(self.modes);
        u[[i, i]] = C64::new(tau, 0.0);
        u[[i, j]] = C64::new(rho, 0.0);
        u[[j, i]] = C64::new(-rho, 0.0);
        u[[j, j]] = C64::new(tau, 0.0);
        self.transform(&doubled(&u))
    }

    /// Applies a unitary `u` on the listed modes (identity elsewhere).
    ///
    /// Fails with [`Error::NonUnitary`] when `max |u^+ u - I|` exceeds
    /// 1e-10.
    pub fn apply_unitary(&self, u: &Array2<C64>, modes: &[usize]) -> Result<Self> {
        let k = u.nrows();
        assert_eq!(k, u.ncols(), "unitary must be square");
        assert_eq!(k, modes.len(), "one target mode per unitary row");
        let mut seen = vec![false; self.modes];
        for &mo in modes {
            assert!(mo < self.modes && !seen[mo], "modes must be distinct and in range");
            seen[mo] = true;
        }
        let defect = linalg::unitarity_defect(u);
        if defect > crate::circuit::UNITARITY_TOL {
            return Err(Error::NonUnitary { defect, tol: crate::circuit::UNITARITY_TOL });
        }
        let mut emb = Array2::<C64>::eye(self.modes);
        for (a, &ma) in modes.iter().enumerate() {
            for (b, &mb) in modes.iter().enumerate() {
                emb[[ma, mb]] = u[[a, b]];
            }
        }
        Ok(self.transform(&doubled(&emb)))
    }

    /// Marginal state on the kept modes (rows and columns `j` and `M + j`
    /// for each kept `j`).
    pub fn reduce(&self, keep: &[usize]) -> Self {
        assert!(!keep.is_empty(), "must keep at least one mode");
        let m = self.modes;
        let k = keep.len();
        let idx: Vec<usize> = keep
            .iter()
            .map(|&j| {
                assert!(j < m, "mode {j} out of range");
                j
            })
            .chain(keep.iter().map(|&j| m + j))
            .collect();
        let mut sigma = Array2::<C64>::zeros((2 * k, 2 * k));
        let mut disp = Array1::<C64>::zeros(2 * k);
        for (a, &ia) in idx.iter().enumerate() {
            disp[a] = self.disp[ia];
            for (b, &ib) in idx.iter().enumerate() {
                sigma[[a, b]] = self.sigma[[ia, ib]];
            }
        }
        Self { modes: k, sigma, disp }
    }

    /// Embeds this state into a larger register: mode `j` of `self` becomes
    /// mode `map[j]` of the result, all other modes vacuum.
    pub fn embed(&self, total: usize, map: &[usize]) -> Self {
        let mut out = Self::vacuum(total);
        self.embed_into(&mut out, map);
        out
    }

    /// Copies this state's blocks over the listed modes of `base`. Those
    /// modes are overwritten wholesale, so they must be uncorrelated with
    /// the rest of `base` beforehand.
    pub fn embed_into(&self, base: &mut Self, map: &[usize]) {
        assert_eq!(map.len(), self.modes, "one target slot per mode");
        let total = base.modes;
        let mut seen = vec![false; total];
        for &mo in map {
            assert!(mo < total && !seen[mo], "embedding slots must be distinct");
            seen[mo] = true;
        }
        let full: Vec<usize> =
            map.iter().copied().chain(map.iter().map(|&j| total + j)).collect();
        for (a, &ta) in full.iter().enumerate() {
            base.disp[ta] = self.disp[a];
            for (b, &tb) in full.iter().enumerate() {
                base.sigma[[ta, tb]] = self.sigma[[a, b]];
            }
        }
    }

    /// Checks the covariance block structure, the conjugate-pair property of
    /// the displacement, and positive definiteness of `sigma_Q`, all at
    /// [`STRUCTURE_TOL`].
    pub fn validate(&self) -> Result<()> {
        let m = self.modes;
        let mut defect = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let c = self.sigma[[i, j]];
                let s = self.sigma[[i, m + j]];
                defect = defect.max((c - self.sigma[[j, i]].conj()).norm());
                defect = defect.max((s - self.sigma[[j, m + i]]).norm());
                defect = defect.max((self.sigma[[m + i, m + j]] - c.conj()).norm());
                defect = defect.max((self.sigma[[m + i, j]] - s.conj()).norm());
            }
            defect = defect.max((self.disp[m + i] - self.disp[i].conj()).norm());
        }
        if defect > STRUCTURE_TOL {
            return Err(Error::StructureViolation { defect, tol: STRUCTURE_TOL });
        }
        self.build_af().map(|_| ())
    }

    /// Builds the matching pair `(A, F)` and the scalar prefactor
    /// ingredients from `sigma_Q = sigma + I/2`.
    ///
    /// Fails with [`Error::SingularSigmaQ`] when `sigma_Q` is not positive
    /// definite or its condition number exceeds [`CONDITION_CAP`].
    pub fn build_af(&self) -> Result<AfPair> {
        let m = self.modes;
        let n = 2 * m;
        let mut sigma_q = self.sigma.clone();
        for i in 0..n {
            sigma_q[[i, i]] += 0.5;
        }
        let evals = linalg::hermitian_eigenvalues(&sigma_q)?;
        let min = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = evals.iter().cloned().fold(0.0f64, f64::max);
        if min <= 0.0 {
            return Err(Error::SingularSigmaQ { cond: f64::INFINITY });
        }
        let cond = max / min;
        if cond > CONDITION_CAP {
            return Err(Error::SingularSigmaQ { cond });
        }
        let ch = Cholesky::new(&sigma_q).map_err(Error::from)?;
        let inv = ch.inverse();
        // A = X (I - sigma_Q^{-1}): row i of A is row (i xor block) of the
        // bracket. Exactly symmetric in exact arithmetic; symmetrized here.
        let mut a = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            let src = (i + m) % n;
            for j in 0..n {
                let idm = if src == j { C64::new(1.0, 0.0) } else { c0() };
                a[[i, j]] = idm - inv[[src, j]];
            }
        }
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asym = asym.max((a[[i, j]] - a[[j, i]]).norm());
                let s = (a[[i, j]] + a[[j, i]]) / 2.0;
                a[[i, j]] = s;
                a[[j, i]] = s;
            }
        }
        debug_assert!(asym <= 1e-9, "A asymmetry {asym:.3e} exceeds tolerance");
        let mut f = Array1::<C64>::zeros(n);
        for k in 0..n {
            let mut acc = c0();
            for j in 0..n {
                acc += self.disp[j].conj() * inv[[j, k]];
            }
            f[k] = acc;
        }
        let quad: C64 = (0..n).map(|k| f[k] * self.disp[k]).sum();
        debug_assert!(
            quad.im.abs() <= 1e-9 * quad.re.abs().max(1.0),
            "displacement quadratic form has imaginary residue {:.3e}",
            quad.im
        );
        Ok(AfPair {
            modes: m,
            a,
            f,
            sqrt_det_sigma_q: ch.sqrt_det(),
            gauss_weight: (-0.5 * quad.re).exp(),
        })
    }
}

/// Doubled-space matrix `U (+) conj(U)` of a mode-space linear map.
fn doubled(u: &Array2<C64>) -> Array2<C64> {
    let m = u.nrows();
    let mut w = Array2::<C64>::zeros((2 * m, 2 * m));
    for i in 0..m {
        for j in 0..m {
            w[[i, j]] = u[[i, j]];
            w[[m + i, m + j]] = u[[i, j]].conj();
        }
    }
    w
}
