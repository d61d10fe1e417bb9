//! Circuit-level description of heralded sources and sampling experiments.
//!
//! This module owns the data types shared by the covariance pipeline and the
//! Fock-space oracle: source parameters, gate sequences, experiment layout,
//! and photon patterns. Both evaluation routes consume the same gate list, so
//! conventions are fixed here once.
//!
//! Mode convention for a single source: mode 0 is the system mode, modes
//! `1..=N` are herald modes, each ultimately measured in the single-photon
//! state. A source with `N` displacement parameters uses `N + 1` modes.

use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;
use ndarray::Array2;

/// Parameters of one heralded non-Gaussian source.
///
/// The source squeezes its system mode by `r`, couples it to `N` displaced
/// vacuum ancillas through beamsplitters of transmission `t`, heralds one
/// photon on every ancilla, and finally unsqueezes the system mode. In the
/// `t -> 1` limit the heralded system state approaches the normalized state
/// with creation-polynomial roots `-alphas`, i.e. `prod_j (adag + alpha_j)`
/// applied to vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    /// Squeezing parameter of the system mode.
    pub r: f64,
    /// Beamsplitter transmission, strictly inside (0, 1).
    pub t: f64,
    /// Displacement parameters of the target creation polynomial.
    pub alphas: Vec<C64>,
}

impl SourceSpec {
    /// Builds a source spec. `t` must lie strictly inside (0, 1).
    pub fn new(r: f64, t: f64, alphas: Vec<C64>) -> Self {
        assert!(
            t > 0.0 && t < 1.0,
            "beamsplitter transmission must be in (0,1), got {t}"
        );
        Self { r, t, alphas }
    }

    /// Number of herald modes.
    pub fn herald_count(&self) -> usize {
        self.alphas.len()
    }

    /// Total modes of the source circuit: one system mode plus heralds.
    pub fn mode_count(&self) -> usize {
        self.alphas.len() + 1
    }
}

/// One Gaussian gate in a source circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    /// Single-mode squeezer with parameter `r`.
    Squeeze {
        /// Mode index.
        mode: usize,
        /// Squeezing parameter.
        r: f64,
    },
    /// Single-mode displacement by `alpha`.
    Displace {
        /// Mode index.
        mode: usize,
        /// Displacement amplitude.
        alpha: C64,
    },
    /// Two-mode beamsplitter with transmission `t`.
    ///
    /// Acting on annihilation operators: `a_i -> sqrt(t) a_i + sqrt(1-t) a_j`
    /// and `a_j -> -sqrt(1-t) a_i + sqrt(t) a_j`.
    BeamSplitter {
        /// First mode (kept on the transmitted arm).
        a: usize,
        /// Second mode.
        b: usize,
        /// Transmission in [0, 1].
        t: f64,
    },
}

/// Ancilla displacement amplitudes realizing the target polynomial.
///
/// Each herald stage at transmission `t` applies, conditioned on its
/// single-photon click and up to normalization, the operator
/// `b_j - a` on the squeezed frame, where `b_j = beta_j sqrt(t) / sqrt(1-t)`
/// and `beta_j` is the coherent amplitude injected into the ancilla. After
/// the surrounding squeezers the stage chain acts on vacuum as
/// `prod_j (b_j + sinh(r) adag - cosh(r) a)`.
///
/// Writing the monic target polynomial `P(u) = prod_j (u + alpha_j)` in the
/// basis `phi_0 = 1, phi_1 = u, phi_{k+1} = u phi_k - k lambda phi_{k-1}`
/// with `lambda = coth(r)` gives coefficients `p_k`; the `b_j` are then
/// `-sinh(r)` times the roots of `sum_k p_k y^k`. This makes the chain
/// reproduce `P(adag)` on vacuum exactly in the `t -> 1` limit.
///
/// For `r = 0` the chain cannot emit photons and all amplitudes are zero.
pub fn ancilla_displacements(alphas: &[C64], r: f64, t: f64) -> Result<Vec<C64>> {
    let n = alphas.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let sh = r.sinh();
    if sh.abs() < 1e-12 {
        return Ok(vec![C64::new(0.0, 0.0); n]);
    }
    let lambda = r.cosh() / sh;
    // Monic coefficients of prod_j (u + alpha_j), ascending.
    let mut mono = vec![C64::new(1.0, 0.0)];
    for &a in alphas {
        let mut next = vec![C64::new(0.0, 0.0); mono.len() + 1];
        for (i, &ci) in mono.iter().enumerate() {
            next[i + 1] += ci;
            next[i] += ci * a;
        }
        mono = next;
    }
    // Monomial coefficient table of the phi basis.
    let mut phi: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for k in 1..n {
        let mut next = vec![0.0; k + 2];
        for (i, &c) in phi[k].iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, &c) in phi[k - 1].iter().enumerate() {
            next[i] -= k as f64 * lambda * c;
        }
        phi.push(next);
    }
    // Back-substitute: both P and phi_k are monic of their degree.
    let mut p = vec![C64::new(0.0, 0.0); n + 1];
    for k in (0..=n).rev() {
        let pk = mono[k];
        p[k] = pk;
        for (i, &c) in phi[k].iter().enumerate() {
            mono[i] -= pk * c;
        }
    }
    let roots = linalg::polynomial_roots(&p).map_err(Error::from)?;
    let ratio = (1.0 - t).sqrt() / t.sqrt();
    Ok(roots.iter().map(|y| -sh * y * ratio).collect())
}

/// Gate sequence of a heralded source circuit.
///
/// Layout: squeeze the system mode, then for each herald stage displace the
/// ancilla and beamsplit it with the system mode, and finally unsqueeze the
/// system mode. Ancilla amplitudes come from [`ancilla_displacements`].
pub fn source_circuit(spec: &SourceSpec) -> Result<Vec<Gate>> {
    let betas = ancilla_displacements(&spec.alphas, spec.r, spec.t)?;
    let mut gates = Vec::with_capacity(2 * betas.len() + 2);
    gates.push(Gate::Squeeze { mode: 0, r: spec.r });
    for (j, &beta) in betas.iter().enumerate() {
        gates.push(Gate::Displace { mode: j + 1, alpha: beta });
        gates.push(Gate::BeamSplitter { a: 0, b: j + 1, t: spec.t });
    }
    gates.push(Gate::Squeeze { mode: 0, r: -spec.r });
    Ok(gates)
}

/// A complete sampling experiment: heralded sources feeding an
/// interferometer.
///
/// Construction validates the wiring and the interferometer; the fields are
/// immutable afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    sources: Vec<SourceSpec>,
    interferometer: Array2<C64>,
    wiring: Vec<usize>,
    cutoff: usize,
}

/// Unitarity tolerance applied to interferometer matrices.
pub const UNITARITY_TOL: f64 = 1e-10;

impl Experiment {
    /// Builds and validates an experiment.
    ///
    /// `wiring[k]` is the interferometer input mode receiving source `k`'s
    /// system mode; indices must be distinct and in range. The
    /// interferometer must be unitary to [`UNITARITY_TOL`].
    pub fn new(
        sources: Vec<SourceSpec>,
        interferometer: Array2<C64>,
        wiring: Vec<usize>,
        cutoff: usize,
    ) -> Result<Self> {
        let m = interferometer.nrows();
        assert_eq!(
            m,
            interferometer.ncols(),
            "interferometer matrix must be square"
        );
        assert!(m >= 1, "interferometer needs at least one mode");
        assert_eq!(
            wiring.len(),
            sources.len(),
            "one wiring entry per source required"
        );
        let mut used = vec![false; m];
        for &w in &wiring {
            if w >= m || used[w] {
                return Err(Error::WiringConflict { mode: w });
            }
            used[w] = true;
        }
        let defect = linalg::unitarity_defect(&interferometer);
        if defect > UNITARITY_TOL {
            return Err(Error::NonUnitary { defect, tol: UNITARITY_TOL });
        }
        Ok(Self { sources, interferometer, wiring, cutoff })
    }

    /// Source specs, in wiring order.
    pub fn sources(&self) -> &[SourceSpec] {
        &self.sources
    }

    /// The interferometer unitary.
    pub fn interferometer(&self) -> &Array2<C64> {
        &self.interferometer
    }

    /// Interferometer input mode of each source's system mode.
    pub fn wiring(&self) -> &[usize] {
        &self.wiring
    }

    /// Maximum total photon count enumerated over the output modes.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Number of interferometer modes.
    pub fn system_modes(&self) -> usize {
        self.interferometer.nrows()
    }

    /// Total herald modes across all sources.
    pub fn herald_modes(&self) -> usize {
        self.sources.iter().map(|s| s.herald_count()).sum()
    }

    /// Total mode count: interferometer modes plus herald modes.
    pub fn total_modes(&self) -> usize {
        self.system_modes() + self.herald_modes()
    }

    /// True when every source has identical parameters, allowing the herald
    /// normalization to be computed once and raised to the `K`-th power.
    pub fn identical_sources(&self) -> bool {
        self.sources.windows(2).all(|w| w[0] == w[1])
    }
}

/// Photon counts per mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhotonPattern(pub Vec<usize>);

impl PhotonPattern {
    /// Total photon number.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Product of count factorials, exact in integer arithmetic.
    pub fn factorial_product(&self) -> f64 {
        let mut acc: u128 = 1;
        for &n in &self.0 {
            for k in 2..=n as u128 {
                acc = acc.checked_mul(k).expect("pattern factorial overflow");
            }
        }
        acc as f64
    }
}

impl std::fmt::Display for PhotonPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for n in &self.0 {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{n}")?;
            first = false;
        }
        Ok(())
    }
}

/// All patterns on `modes` modes with total photon number at most
/// `max_total`, in colexicographic order (first mode varies fastest).
pub fn patterns_up_to(modes: usize, max_total: usize) -> Vec<PhotonPattern> {
    if modes == 0 {
        return vec![PhotonPattern(Vec::new())];
    }
    let mut out = Vec::new();
    let mut counts = vec![0usize; modes];
    loop {
        out.push(PhotonPattern(counts.clone()));
        let mut i = 0;
        loop {
            let sum: usize = counts.iter().sum();
            if sum < max_total {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
            i += 1;
            if i == modes {
                return out;
            }
        }
    }
}

/// Balanced two-mode splitter matrix `[[1, 1], [-1, 1]] / sqrt(2)`.
pub fn balanced_splitter() -> Array2<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ndarray::array![[s, s], [-s, s]]
}

/// Discrete-Fourier-transform interferometer on `n` modes.
pub fn dft_matrix(n: usize) -> Array2<C64> {
    assert!(n > 0, "need at least one mode");
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(j, k)| {
        C64::from_polar(scale, std::f64::consts::TAU * (j * k) as f64 / n as f64)
    })
}
