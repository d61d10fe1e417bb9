//! Target states and heralded-source preparation.
//!
//! A target is a finite superposition of Fock states on one mode. Writing it
//! as a polynomial in the creation operator acting on vacuum, `sum_n q_n
//! (adag)^n |0>`, the roots of that polynomial fix the ancilla displacements
//! of a source circuit that heralds the target: each root contributes one
//! displaced ancilla and one strong-transmission beamsplitter stage. The
//! functions here compute those parameters, build the Gaussian picture of
//! the source, and score the prepared state against the target with the
//! Fock-space simulator.

use crate::circuit::{self, PhotonPattern, SourceSpec};
use crate::error::{Error, Result};
use crate::fock;
use crate::gaussian::GaussianState;
use crate::hafnian;
use crate::linalg;
use crate::C64;

/// Norm-squared mass the heralded state may carry above the reporting
/// cutoff.
pub const HERALD_TAIL_TOL: f64 = 1e-6;

/// Extra levels kept internally above the reporting cutoff when simulating
/// a heralded state.
const CUTOFF_MARGIN: usize = 8;

/// Single-mode target state with finite photon-number support.
#[derive(Clone, Debug)]
pub struct TargetState {
    amplitudes: Vec<C64>,
}

impl TargetState {
    /// Builds a target from Fock amplitudes `c_n`, `n = 0..`; the vector is
    /// normalized and trailing (near-)zero entries are trimmed.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let peak = amplitudes.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if peak == 0.0 || !peak.is_finite() {
            return Err(Error::DegenerateTarget);
        }
        let degree = amplitudes
            .iter()
            .rposition(|z| z.norm() > 1e-14 * peak)
            .ok_or(Error::DegenerateTarget)?;
        let mut amplitudes = amplitudes[..=degree].to_vec();
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes })
    }

    /// Builds a target from creation-operator coefficients: the state
    /// `sum_n q_n (adag)^n |0>`, i.e. Fock amplitudes `q_n sqrt(n!)`.
    pub fn from_creation_coeffs(coeffs: Vec<C64>) -> Result<Self> {
        let mut fact = 1.0f64;
        let amplitudes = coeffs
            .into_iter()
            .enumerate()
            .map(|(n, q)| {
                if n > 0 {
                    fact *= n as f64;
                }
                q * fact.sqrt()
            })
            .collect();
        Self::new(amplitudes)
    }

    /// Normalized Fock amplitudes up to the degree.
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Highest occupied photon number.
    pub fn degree(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Creation-operator coefficients `q_n = c_n / sqrt(n!)` of the
    /// normalized state.
    pub fn creation_coeffs(&self) -> Vec<C64> {
        let mut fact = 1.0f64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, &c)| {
                if n > 0 {
                    fact *= n as f64;
                }
                c / fact.sqrt()
            })
            .collect()
    }
}

/// Ancilla displacement parameters for a target: the negated roots of its
/// monic creation polynomial, sorted by real then imaginary part. One entry
/// per herald stage; a vacuum target needs none.
pub fn displacement_params(target: &TargetState) -> Result<Vec<C64>> {
    let q = target.creation_coeffs();
    let n = target.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = q[n];
    let monic: Vec<C64> = q.iter().map(|&c| c / lead).collect();
    let roots = linalg::polynomial_roots(&monic).map_err(Error::from)?;
    let mut alphas: Vec<C64> = roots.into_iter().map(|z| -z).collect();
    alphas.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(alphas)
}

/// Assembles the source description that heralds `target` using squeezing
/// `r` and per-stage beamsplitter transmission `t`.
pub fn build_source(target: &TargetState, r: f64, t: f64) -> Result<SourceSpec> {
    Ok(SourceSpec::new(r, t, displacement_params(target)?))
}

/// Gaussian state of the full source register (system mode 0 plus one mode
/// per herald) after the source circuit runs on vacuum.
pub fn source_gaussian_state(spec: &SourceSpec) -> Result<GaussianState> {
    let mut state = GaussianState::vacuum(spec.mode_count());
    for gate in circuit::source_circuit(spec)? {
        state = match gate {
            circuit::Gate::Squeeze { mode, r } => state.squeeze(mode, r),
            circuit::Gate::Displace { mode, alpha } => state.displace(mode, alpha),
            circuit::Gate::BeamSplitter { a, b, t } => state.beamsplitter(a, b, t),
        };
    }
    Ok(state)
}

/// Probability that every herald mode of a source register reports exactly
/// one photon, computed from the Gaussian picture. Mode 0 is the system
/// mode and is traced out first.
pub fn herald_probability(state: &GaussianState) -> Result<f64> {
    let modes = state.modes();
    if modes == 1 {
        return Ok(1.0);
    }
    let keep: Vec<usize> = (1..modes).collect();
    let heralds = state.reduce(&keep);
    let af = heralds.build_af()?;
    hafnian::probability(&af, &PhotonPattern(vec![1; modes - 1]))
}

/// Normalized Fock amplitudes of the heralded system mode, reported up to
/// `cutoff`. The simulation itself keeps extra headroom; the result errs
/// with [`Error::CutoffTooSmall`] if more than [`HERALD_TAIL_TOL`] of the
/// state lives above the reporting cutoff.
pub fn heralded_state(spec: &SourceSpec, cutoff: usize) -> Result<Vec<C64>> {
    let (_, amps) = fock::simulate_source(spec, cutoff + CUTOFF_MARGIN)?;
    let kept: f64 = amps[..=cutoff].iter().map(|z| z.norm_sqr()).sum();
    let tail = 1.0 - kept;
    if tail > HERALD_TAIL_TOL {
        return Err(Error::CutoffTooSmall { tail, tol: HERALD_TAIL_TOL });
    }
    Ok(amps[..=cutoff].to_vec())
}

/// Overlap `|<target|prepared>|^2` between a target and the heralded state
/// of a source, evaluated at the given reporting cutoff.
pub fn fidelity(target: &TargetState, spec: &SourceSpec, cutoff: usize) -> Result<f64> {
    assert!(cutoff >= target.degree(), "cutoff below target degree");
    let amps = heralded_state(spec, cutoff)?;
    let overlap: C64 = target
        .amplitudes
        .iter()
        .zip(amps.iter())
        .map(|(t, a)| t.conj() * a)
        .sum();
    Ok(overlap.norm_sqr())
}
