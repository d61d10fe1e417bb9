//! Brute-force truncated Fock-space simulator.
//!
//! This is the verification oracle: it evolves dense state vectors with
//! truncated-generator matrix exponentials and never touches covariance
//! matrices or hafnians, so its numbers are an independent derivation of
//! every probability the main pipeline produces. It is allowed to be slow.
//!
//! A state over `M` modes with per-mode levels `0..=d` is a dense vector of
//! length `(d+1)^M`, mode 0 varying slowest. Interferometers are applied as
//! a mesh of two-mode rotations and phase gates obtained from a Givens
//! decomposition of the unitary, which is re-verified against the input
//! matrix on every call.

use crate::circuit::{self, Experiment, Gate, PhotonPattern, SourceSpec};
use crate::error::{Error, Result};
use crate::C64;
use ndarray::Array2;

/// Cap on the dense state-vector length.
pub const DIMENSION_CAP: usize = 10_000_000;

/// Norm-squared mass allowed on the top level of any mode after a source
/// circuit runs.
pub const SOURCE_TAIL_TOL: f64 = 1e-8;

fn c0() -> C64 {
    C64::new(0.0, 0.0)
}

fn c1() -> C64 {
    C64::new(1.0, 0.0)
}

/// Dense truncated Fock state.
#[derive(Clone, Debug)]
pub struct FockState {
    modes: usize,
    levels: usize,
    amps: Vec<C64>,
}

impl FockState {
    /// Vacuum state on `modes` modes with per-mode photon cutoff `cutoff`.
    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        ensure_dimension(modes, cutoff)?;
        let levels = cutoff + 1;
        let mut amps = vec![c0(); levels.pow(modes as u32)];
        amps[0] = c1();
        Ok(Self { modes, levels, amps })
    }

    /// Mode count.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Per-mode photon cutoff `d`.
    pub fn cutoff(&self) -> usize {
        self.levels - 1
    }

    /// Amplitude vector, mode 0 slowest.
    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Squared norm.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    fn stride(&self, mode: usize) -> usize {
        self.levels.pow((self.modes - 1 - mode) as u32)
    }

    /// Applies a `(d+1) x (d+1)` operator on one mode.
    pub fn apply_one_mode(&mut self, op: &Array2<C64>, mode: usize) {
        assert!(mode < self.modes, "mode {mode} out of range");
        assert_eq!(op.nrows(), self.levels, "operator size mismatch");
        let s = self.stride(mode);
        let block = s * self.levels;
        let mut scratch = vec![c0(); self.levels];
        for base_hi in (0..self.amps.len()).step_by(block) {
            for lo in 0..s {
                let base = base_hi + lo;
                for (n, slot) in scratch.iter_mut().enumerate() {
                    *slot = self.amps[base + n * s];
                }
                for r in 0..self.levels {
                    let mut acc = c0();
                    for (n, &v) in scratch.iter().enumerate() {
                        acc += op[[r, n]] * v;
                    }
                    self.amps[base + r * s] = acc;
                }
            }
        }
    }

    /// Applies a `(d+1)^2 x (d+1)^2` operator on a mode pair, first mode
    /// major in the operator index.
    pub fn apply_two_mode(&mut self, op: &Array2<C64>, i: usize, j: usize) {
        assert!(i != j && i < self.modes && j < self.modes, "bad mode pair");
        assert_eq!(op.nrows(), self.levels * self.levels, "operator size mismatch");
        let si = self.stride(i);
        let sj = self.stride(j);
        let l = self.levels;
        let mut scratch = vec![c0(); l * l];
        for idx in 0..self.amps.len() {
            if (idx / si) % l != 0 || (idx / sj) % l != 0 {
                continue;
            }
            for ni in 0..l {
                for nj in 0..l {
                    scratch[ni * l + nj] = self.amps[idx + ni * si + nj * sj];
                }
            }
            for ri in 0..l {
                for rj in 0..l {
                    let mut acc = c0();
                    for (col, &v) in scratch.iter().enumerate() {
                        acc += op[[ri * l + rj, col]] * v;
                    }
                    self.amps[idx + ri * si + rj * sj] = acc;
                }
            }
        }
    }

    /// Applies the phase gate `n -> exp(i n phi)` on one mode.
    pub fn apply_phase(&mut self, mode: usize, phi: f64) {
        let s = self.stride(mode);
        let l = self.levels;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let n = (idx / s) % l;
            *amp *= C64::from_polar(1.0, phi * n as f64);
        }
    }

    /// Projects one mode onto the single-photon state and removes it,
    /// returning the unnormalized remainder.
    pub fn project_single_photon(&self, mode: usize) -> Self {
        assert!(mode < self.modes, "mode {mode} out of range");
        assert!(self.modes > 1, "cannot remove the last mode");
        let s = self.stride(mode);
        let l = self.levels;
        let mut amps = Vec::with_capacity(self.amps.len() / l);
        for (idx, &amp) in self.amps.iter().enumerate() {
            if (idx / s) % l == 1 {
                amps.push(amp);
            }
        }
        Self { modes: self.modes - 1, levels: l, amps }
    }

    /// Norm-squared mass sitting exactly on the top level of `mode`.
    pub fn top_level_mass(&self, mode: usize) -> f64 {
        let s = self.stride(mode);
        let l = self.levels;
        self.amps
            .iter()
            .enumerate()
            .filter(|(idx, _)| (idx / s) % l == l - 1)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Applies one source-circuit gate.
    pub fn apply_gate(&mut self, gate: &Gate) {
        let d = self.cutoff();
        match *gate {
            Gate::Squeeze { mode, r } => self.apply_one_mode(&op_squeeze(r, d), mode),
            Gate::Displace { mode, alpha } => self.apply_one_mode(&op_displace(alpha, d), mode),
            Gate::BeamSplitter { a, b, t } => {
                let theta = (1.0 - t).sqrt().atan2(t.sqrt());
                self.apply_two_mode(&op_two_mode_rotation(theta, d), a, b);
            }
        }
    }

    /// Applies an `M x M` unitary across all modes through its mesh
    /// decomposition.
    pub fn apply_interferometer(&mut self, u: &Array2<C64>) {
        assert_eq!(u.nrows(), self.modes, "interferometer size mismatch");
        let mesh = mesh_decompose(u);
        for (mode, &phi) in mesh.phases.iter().enumerate() {
            self.apply_phase(mode, phi);
        }
        let d = self.cutoff();
        for stage in mesh.stages.iter().rev() {
            // stage matrix acts on modes (m, m+1): factor as
            // D1 R(theta) D2 and apply right to left.
            let (theta, a, b, dd) = factor_two_by_two(&stage.v);
            self.apply_phase(stage.row + 1, dd);
            if theta != 0.0 {
                self.apply_two_mode(&op_two_mode_rotation(theta, d), stage.row, stage.row + 1);
            }
            self.apply_phase(stage.row, a);
            self.apply_phase(stage.row + 1, b);
        }
    }
}

fn ensure_dimension(modes: usize, cutoff: usize) -> Result<()> {
    let levels = cutoff + 1;
    let dim = (levels as f64).powi(modes as i32);
    if dim > DIMENSION_CAP as f64 {
        return Err(Error::DimensionTooLarge {
            dim: dim.min(usize::MAX as f64) as usize,
            cap: DIMENSION_CAP,
        });
    }
    Ok(())
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(m: &Array2<C64>) -> Array2<C64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "exponential input must be square");
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m[[i, j]].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = m.mapv(|z| z / 2f64.powi(s as i32));
    let mut acc = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=24u32 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        acc += &term;
    }
    for _ in 0..s {
        acc = acc.dot(&acc);
    }
    acc
}

/// Truncated squeezer `exp[(r/2)(a^2 - adag^2)]` on `d + 1` levels.
pub fn op_squeeze(r: f64, d: usize) -> Array2<C64> {
    let l = d + 1;
    let mut gen = Array2::<C64>::zeros((l, l));
    for n in 0..l {
        if n >= 2 {
            // a^2 |n> = sqrt(n(n-1)) |n-2>
            gen[[n - 2, n]] += C64::new(r / 2.0 * ((n * (n - 1)) as f64).sqrt(), 0.0);
        }
        if n + 2 < l {
            gen[[n + 2, n]] -= C64::new(r / 2.0 * (((n + 1) * (n + 2)) as f64).sqrt(), 0.0);
        }
    }
    expm(&gen)
}

/// Truncated displacement `exp(alpha adag - conj(alpha) a)` on `d + 1`
/// levels.
pub fn op_displace(alpha: C64, d: usize) -> Array2<C64> {
    let l = d + 1;
    let mut gen = Array2::<C64>::zeros((l, l));
    for n in 0..l {
        if n + 1 < l {
            gen[[n + 1, n]] += alpha * ((n + 1) as f64).sqrt();
        }
        if n >= 1 {
            gen[[n - 1, n]] -= alpha.conj() * (n as f64).sqrt();
        }
    }
    expm(&gen)
}

/// Truncated two-mode rotation `exp[theta (adag_i a_j - a_i adag_j)]`,
/// exponentiated per total-photon sector so every block is exactly unitary.
///
/// Its annihilation-operator action is
/// `a_i -> cos(theta) a_i + sin(theta) a_j`,
/// `a_j -> -sin(theta) a_i + cos(theta) a_j`; `theta = atan2(sqrt(1-t),
/// sqrt(t))` reproduces a beamsplitter of transmission `t`.
pub fn op_two_mode_rotation(theta: f64, d: usize) -> Array2<C64> {
    let l = d + 1;
    let mut out = Array2::<C64>::zeros((l * l, l * l));
    for total in 0..=(2 * d) {
        let k_lo = total.saturating_sub(d);
        let k_hi = total.min(d);
        let width = k_hi - k_lo + 1;
        let mut gen = Array2::<C64>::zeros((width, width));
        for (slot, k) in (k_lo..=k_hi).enumerate() {
            // adag_i a_j |k, total-k> = sqrt((k+1)(total-k)) |k+1, ...>
            if k < k_hi {
                let w = (((k + 1) * (total - k)) as f64).sqrt();
                gen[[slot + 1, slot]] += C64::new(theta * w, 0.0);
                gen[[slot, slot + 1]] -= C64::new(theta * w, 0.0);
            }
        }
        let block = expm(&gen);
        for (sa, ka) in (k_lo..=k_hi).enumerate() {
            for (sb, kb) in (k_lo..=k_hi).enumerate() {
                out[[ka * l + (total - ka), kb * l + (total - kb)]] = block[[sa, sb]];
            }
        }
    }
    out
}

/// One mesh stage: a 2x2 unitary acting on adjacent modes
/// `(row, row + 1)`.
struct MeshStage {
    row: usize,
    v: [[C64; 2]; 2],
}

/// Mesh form of a unitary: residual per-mode phases plus adjacent-pair
/// stages. Applying the phases first and then the stages in reverse listed
/// order reproduces the unitary.
struct Mesh {
    phases: Vec<f64>,
    stages: Vec<MeshStage>,
}

/// Givens decomposition of `u` into adjacent-row rotations and a diagonal,
/// verified against the input to 1e-10 before returning.
fn mesh_decompose(u: &Array2<C64>) -> Mesh {
    let m = u.nrows();
    let mut work = u.clone();
    let mut rots: Vec<(usize, [[C64; 2]; 2])> = Vec::new();
    for col in 0..m {
        for row in (col + 1..m).rev() {
            let a = work[[row - 1, col]];
            let b = work[[row, col]];
            if b.norm() < 1e-14 {
                continue;
            }
            let h = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let g = [
                [a.conj() / h, b.conj() / h],
                [-b / h, a / h],
            ];
            for c in 0..m {
                let x = work[[row - 1, c]];
                let y = work[[row, c]];
                work[[row - 1, c]] = g[0][0] * x + g[0][1] * y;
                work[[row, c]] = g[1][0] * x + g[1][1] * y;
            }
            rots.push((row - 1, g));
        }
    }
    let phases: Vec<f64> = (0..m).map(|i| work[[i, i]].arg()).collect();
    // Stages are the adjoints of the eliminations, applied after the
    // diagonal: u = g_1^+ g_2^+ ... g_L^+ D.
    let stages: Vec<MeshStage> = rots
        .iter()
        .map(|&(row, g)| MeshStage {
            row,
            v: [
                [g[0][0].conj(), g[1][0].conj()],
                [g[0][1].conj(), g[1][1].conj()],
            ],
        })
        .collect();
    // Verify the reconstruction before trusting the mesh.
    let mut rebuilt = Array2::<C64>::zeros((m, m));
    for (i, &phi) in phases.iter().enumerate() {
        rebuilt[[i, i]] = C64::from_polar(1.0, phi);
    }
    for stage in stages.iter().rev() {
        for c in 0..m {
            let x = rebuilt[[stage.row, c]];
            let y = rebuilt[[stage.row + 1, c]];
            rebuilt[[stage.row, c]] = stage.v[0][0] * x + stage.v[0][1] * y;
            rebuilt[[stage.row + 1, c]] = stage.v[1][0] * x + stage.v[1][1] * y;
        }
    }
    let defect = rebuilt
        .iter()
        .zip(u.iter())
        .fold(0.0f64, |acc, (r, o)| acc.max((r - o).norm()));
    assert!(
        defect <= 1e-10,
        "mesh reconstruction defect {defect:.3e} exceeds tolerance"
    );
    Mesh { phases, stages }
}

/// Splits a 2x2 unitary as `diag(e^{ia}, e^{ib}) R(theta) diag(1, e^{id})`
/// with a real rotation core; returns `(theta, a, b, d)`.
fn factor_two_by_two(v: &[[C64; 2]; 2]) -> (f64, f64, f64, f64) {
    let theta = v[1][0].norm().atan2(v[0][0].norm());
    if v[1][0].norm() < 1e-14 {
        return (0.0, v[0][0].arg(), v[1][1].arg(), 0.0);
    }
    let a = v[0][0].arg();
    let b = (-v[1][0]).arg();
    let d = if v[0][1].norm() < 1e-14 { 0.0 } else { v[0][1].arg() - a };
    (theta, a, b, d)
}

/// Runs one source circuit and heralds every ancilla on a single photon.
///
/// Returns the herald success probability and the normalized system-mode
/// amplitudes (zeros when the herald probability vanishes). Fails with
/// [`Error::CutoffTooSmall`] when any mode holds more than
/// [`SOURCE_TAIL_TOL`] mass on its top level after the circuit.
pub fn simulate_source(spec: &SourceSpec, cutoff: usize) -> Result<(f64, Vec<C64>)> {
    let modes = spec.mode_count();
    let mut state = FockState::vacuum(modes, cutoff)?;
    for gate in circuit::source_circuit(spec)? {
        state.apply_gate(&gate);
    }
    for mode in 0..modes {
        let tail = state.top_level_mass(mode);
        if tail > SOURCE_TAIL_TOL {
            return Err(Error::CutoffTooSmall { tail, tol: SOURCE_TAIL_TOL });
        }
    }
    let mut reduced = state;
    for herald in (1..modes).rev() {
        reduced = reduced.project_single_photon(herald);
    }
    let p = reduced.norm_sqr();
    let amps = if p > 0.0 {
        let scale = 1.0 / p.sqrt();
        reduced.amps.iter().map(|z| z * scale).collect()
    } else {
        vec![c0(); cutoff + 1]
    };
    Ok((p, amps))
}

/// Full conditional output distribution of an experiment by direct
/// state-vector evolution.
///
/// Each source circuit is simulated on its own register and its heralds are
/// projected out before the interferometer; herald modes are untouched by
/// the interferometer, so the projections commute with it. The heralded
/// system states are then tensored into the interferometer register
/// (vacuum on unused inputs), the mesh of the unitary is applied, and the
/// probabilities of all patterns with total at most `exp.cutoff()` are read
/// off. Returns colex-ordered `(pattern, probability)` pairs; amplitudes
/// are already conditioned on the heralds.
pub fn simulate_experiment(exp: &Experiment, cutoff: usize) -> Result<Vec<(PhotonPattern, f64)>> {
    assert!(exp.cutoff() <= cutoff, "enumeration cutoff exceeds register levels");
    let m = exp.system_modes();
    let levels = cutoff + 1;
    let mut sys_states: Vec<Option<Vec<C64>>> = vec![None; m];
    for (k, spec) in exp.sources().iter().enumerate() {
        let (_, amps) = simulate_source(spec, cutoff)?;
        sys_states[exp.wiring()[k]] = Some(amps);
    }
    let mut register = FockState::vacuum(m, cutoff)?;
    for (idx, slot) in register.amps.iter_mut().enumerate() {
        let mut acc = c1();
        let mut rest = idx;
        for mode in (0..m).rev() {
            let n = rest % levels;
            rest /= levels;
            match &sys_states[mode] {
                Some(amps) => acc *= amps[n],
                None => {
                    if n != 0 {
                        acc = c0();
                    }
                }
            }
        }
        *slot = acc;
    }
    register.apply_interferometer(exp.interferometer());
    let patterns = circuit::patterns_up_to(m, exp.cutoff());
    let mut out = Vec::with_capacity(patterns.len());
    for pat in patterns {
        let idx: usize = pat.0.iter().fold(0, |acc, &n| acc * levels + n);
        out.push((pat, register.amps[idx].norm_sqr()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sub_block_defect(op: &Array2<C64>, keep: usize) -> f64 {
        // max |(U^+U - I)_{ij}| over the low-photon sub-block
        let l = op.nrows();
        let mut defect = 0.0f64;
        for i in 0..keep {
            for j in 0..keep {
                let mut acc = c0();
                for k in 0..l {
                    acc += op[[k, i]].conj() * op[[k, j]];
                }
                let expect = if i == j { c1() } else { c0() };
                defect = defect.max((acc - expect).norm());
            }
        }
        defect
    }

    #[test]
    fn zero_displacement_is_identity() {
        let op = op_displace(c(0.0, 0.0), 6);
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j { c1() } else { c0() };
                assert_eq!(op[[i, j]], expect);
            }
        }
    }

    #[test]
    fn squeeze_inverse_cancels_on_low_levels() {
        let d = 16;
        let prod = op_squeeze(-0.4, d).dot(&op_squeeze(0.4, d));
        let mut defect = 0.0f64;
        for i in 0..=d / 2 {
            for j in 0..=d / 2 {
                let expect = if i == j { c1() } else { c0() };
                defect = defect.max((prod[[i, j]] - expect).norm());
            }
        }
        assert!(defect < 1e-8, "defect {defect:.3e}");
    }

    #[test]
    fn truncated_operators_are_unitary_on_low_levels() {
        let d = 12;
        assert!(sub_block_defect(&op_squeeze(0.5, d), d / 2) < 1e-8);
        assert!(sub_block_defect(&op_displace(c(0.4, -0.2), d), d / 2) < 1e-8);
        // sector-wise exponential is unitary on the whole space
        assert!(sub_block_defect(&op_two_mode_rotation(0.7, d), 0) <= 0.0 + 1e-15);
    }

    #[test]
    fn balanced_splitter_cancels_coincidences() {
        // |1,1> through a 50:50 splitter bunches into (|2,0> - |0,2>)/sqrt(2).
        let d = 5;
        let mut st = FockState::vacuum(2, d).unwrap();
        let l = d + 1;
        st.amps[1 * l + 1] = c1();
        st.amps[0] = c0();
        st.apply_gate(&Gate::BeamSplitter { a: 0, b: 1, t: 0.5 });
        let amp11 = st.amps[1 * l + 1];
        let amp20 = st.amps[2 * l];
        let amp02 = st.amps[2];
        assert!(amp11.norm() < 1e-12, "coincidence amplitude {amp11}");
        assert!((amp20.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((amp02.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((amp20 + amp02).norm() < 1e-12, "expected opposite signs");
    }

    #[test]
    fn single_photon_splits_evenly() {
        let d = 4;
        let mut st = FockState::vacuum(2, d).unwrap();
        let l = d + 1;
        st.amps[1 * l] = c1();
        st.amps[0] = c0();
        st.apply_gate(&Gate::BeamSplitter { a: 0, b: 1, t: 0.5 });
        assert!((st.amps[1 * l].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((st.amps[1].norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_distribution_matches_closed_form() {
        let r = 0.5f64;
        let d = 20;
        let mut st = FockState::vacuum(1, d).unwrap();
        st.apply_one_mode(&op_squeeze(r, d), 0);
        let fact = |m: u32| (1..=m as u128).product::<u128>() as f64;
        for n in 0..4u32 {
            let got = st.amps[2 * n as usize].norm_sqr();
            let expect = fact(2 * n) * r.tanh().powi(2 * n as i32)
                / (4f64.powi(n as i32) * fact(n).powi(2) * r.cosh());
            assert!(
                (got - expect).abs() < 1e-9,
                "n = {n}: {got} vs {expect}"
            );
            assert!(st.amps[2 * n as usize + 1].norm() < 1e-12);
        }
    }

    #[test]
    fn coherent_distribution_matches_poisson() {
        let alpha = c(0.5, 0.3);
        let mean = alpha.norm_sqr();
        let d = 14;
        let mut st = FockState::vacuum(1, d).unwrap();
        st.apply_one_mode(&op_displace(alpha, d), 0);
        let mut fact = 1.0;
        for n in 0..5usize {
            if n > 0 {
                fact *= n as f64;
            }
            let got = st.amps[n].norm_sqr();
            let expect = (-mean).exp() * mean.powi(n as i32) / fact;
            assert!((got - expect).abs() < 1e-10, "n = {n}: {got} vs {expect}");
        }
    }

    #[test]
    fn interferometer_maps_single_photon_to_matrix_column() {
        let u = crate::linalg::random_unitary(3, 42);
        let d = 3;
        let l = d + 1;
        for input in 0..3usize {
            let mut st = FockState::vacuum(3, d).unwrap();
            st.amps[0] = c0();
            let idx = l.pow((3 - 1 - input) as u32);
            st.amps[idx] = c1();
            st.apply_interferometer(&u);
            for out in 0..3usize {
                let odx = l.pow((3 - 1 - out) as u32);
                let got = st.amps[odx];
                let expect = u[[out, input]];
                assert!(
                    (got - expect).norm() < 1e-10,
                    "U[{out},{input}]: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn interferometer_preserves_norm_and_photon_number() {
        let u = crate::linalg::random_unitary(3, 7);
        let d = 6;
        let mut st = FockState::vacuum(3, d).unwrap();
        st.apply_one_mode(&op_displace(c(0.4, 0.1), d), 0);
        st.apply_one_mode(&op_squeeze(0.3, d), 1);
        let before = st.norm_sqr();
        // total-photon distribution before
        let l = d + 1;
        let total_of = |idx: usize| {
            let mut rest = idx;
            let mut tot = 0;
            for _ in 0..3 {
                tot += rest % l;
                rest /= l;
            }
            tot
        };
        let mut dist_before = vec![0.0f64; 3 * d + 1];
        for (idx, a) in st.amps.iter().enumerate() {
            dist_before[total_of(idx)] += a.norm_sqr();
        }
        st.apply_interferometer(&u);
        assert!((st.norm_sqr() - before).abs() < 1e-10);
        let mut dist_after = vec![0.0f64; 3 * d + 1];
        for (idx, a) in st.amps.iter().enumerate() {
            dist_after[total_of(idx)] += a.norm_sqr();
        }
        for (n, (b, a)) in dist_before.iter().zip(dist_after.iter()).enumerate() {
            // truncation breaks strict conservation only near the cutoff
            if n <= d / 2 {
                assert!((b - a).abs() < 1e-9, "total {n}: {b} vs {a}");
            }
        }
    }

    #[test]
    fn heralded_single_photon_source_converges_to_fock_one() {
        let spec = SourceSpec::new(0.15, 0.999, vec![c(0.0, 0.0)]);
        let (p, amps) = simulate_source(&spec, 10).unwrap();
        assert!(p > 0.0, "herald probability must be positive");
        let fidelity = amps[1].norm_sqr();
        assert!(fidelity > 0.99, "fidelity to |1> was {fidelity}");
    }

    #[test]
    fn unsqueezed_source_cannot_herald() {
        let spec = SourceSpec::new(0.0, 0.9, vec![c(0.0, 0.0)]);
        let (p, amps) = simulate_source(&spec, 6).unwrap();
        assert_eq!(p, 0.0);
        assert!(amps.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn source_probabilities_converge_in_cutoff() {
        let spec = SourceSpec::new(0.15, 0.99, vec![c(0.5, 0.2)]);
        let (p_lo, amps_lo) = simulate_source(&spec, 12).unwrap();
        let (p_hi, amps_hi) = simulate_source(&spec, 24).unwrap();
        assert!(
            (p_lo - p_hi).abs() < 1e-8 * p_hi,
            "herald probability drifted: {p_lo:.15e} vs {p_hi:.15e}"
        );
        for n in 0..4 {
            assert!(
                (amps_lo[n].norm_sqr() - amps_hi[n].norm_sqr()).abs() < 1e-8,
                "level {n} drifted"
            );
        }
    }

    #[test]
    fn dimension_cap_is_enforced() {
        assert!(matches!(
            FockState::vacuum(4, 100),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn vacuum_experiment_is_certain_empty() {
        let exp = Experiment::new(vec![], Array2::<C64>::eye(2), vec![], 2).unwrap();
        let dist = simulate_experiment(&exp, 4).unwrap();
        assert_eq!(dist[0].0 .0, vec![0, 0]);
        assert!((dist[0].1 - 1.0).abs() < 1e-12);
        let rest: f64 = dist[1..].iter().map(|(_, p)| p).sum();
        assert!(rest < 1e-12);
    }
}
