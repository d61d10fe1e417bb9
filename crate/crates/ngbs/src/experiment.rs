//! End-to-end sampling experiments: several heralded sources feeding one
//! interferometer.
//!
//! The register layout is system modes `[0, M)` first, then each source's
//! herald block in source order. All outputs are conditioned on every
//! herald firing; the heavy lifting is one covariance assembly plus one
//! loop-hafnian evaluation per output pattern, with the herald normalization
//! absorbed into the matching instance as a scale factor rather than divided
//! out afterwards.

use crate::circuit::{self, Experiment, PhotonPattern};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::hafnian;
use crate::state_prep;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Smallest herald probability treated as physically reachable.
pub const HERALD_FLOOR: f64 = 1e-300;

/// Gaussian register of the whole experiment before propagation.
///
/// Every source circuit runs on its own block: system mode at the wired
/// slot, heralds appended after all system modes in source order.
pub fn assemble(exp: &Experiment) -> Result<GaussianState> {
    let mut state = GaussianState::vacuum(exp.total_modes());
    let mut herald_base = exp.system_modes();
    for (k, spec) in exp.sources().iter().enumerate() {
        let src = state_prep::source_gaussian_state(spec)?;
        let mut map = Vec::with_capacity(spec.mode_count());
        map.push(exp.wiring()[k]);
        map.extend(herald_base..herald_base + spec.herald_count());
        src.embed_into(&mut state, &map);
        herald_base += spec.herald_count();
    }
    Ok(state)
}

/// Applies the interferometer across the system modes, leaving heralds
/// untouched.
pub fn propagate(exp: &Experiment, state: &GaussianState) -> Result<GaussianState> {
    let modes: Vec<usize> = (0..exp.system_modes()).collect();
    state.apply_unitary(exp.interferometer(), &modes)
}

fn full_pattern(exp: &Experiment, pattern: &PhotonPattern) -> PhotonPattern {
    assert_eq!(pattern.0.len(), exp.system_modes(), "pattern length mismatch");
    let mut v = pattern.0.clone();
    v.extend(std::iter::repeat_n(1usize, exp.herald_modes()));
    PhotonPattern(v)
}

/// Probability of reading `pattern` on the system modes jointly with one
/// photon on every herald mode.
pub fn joint_probability(
    exp: &Experiment,
    propagated: &GaussianState,
    pattern: &PhotonPattern,
) -> Result<f64> {
    let af = propagated.build_af()?;
    hafnian::probability(&af, &full_pattern(exp, pattern))
}

/// Herald success probability of each source, from the Gaussian picture.
/// Fails with [`Error::HeraldImpossible`] below [`HERALD_FLOOR`].
pub fn herald_probabilities(exp: &Experiment) -> Result<Vec<f64>> {
    let sources = exp.sources();
    let probs = if exp.identical_sources() && !sources.is_empty() {
        let state = state_prep::source_gaussian_state(&sources[0])?;
        vec![state_prep::herald_probability(&state)?; sources.len()]
    } else {
        sources
            .iter()
            .map(|spec| {
                let state = state_prep::source_gaussian_state(spec)?;
                state_prep::herald_probability(&state)
            })
            .collect::<Result<Vec<f64>>>()?
    };
    for &p in &probs {
        if p < HERALD_FLOOR {
            return Err(Error::HeraldImpossible { p });
        }
    }
    Ok(probs)
}

/// Conditional probability of `pattern` given all heralds, by explicit
/// division.
pub fn conditional_probability(
    exp: &Experiment,
    propagated: &GaussianState,
    pattern: &PhotonPattern,
) -> Result<f64> {
    let joint = joint_probability(exp, propagated, pattern)?;
    let denom: f64 = herald_probabilities(exp)?.iter().product();
    Ok(joint / denom)
}

/// Conditional probability of `pattern` with the herald normalization
/// absorbed into the matching instance before evaluation, avoiding the
/// explicit division by a possibly tiny joint herald probability.
pub fn conditional_probability_absorbed(
    exp: &Experiment,
    propagated: &GaussianState,
    pattern: &PhotonPattern,
) -> Result<f64> {
    let af = propagated.build_af()?;
    let herald_probs = herald_probabilities(exp)?;
    conditional_from_af(exp, &af, &herald_probs, pattern)
}

fn conditional_from_af(
    exp: &Experiment,
    af: &crate::gaussian::AfPair,
    herald_probs: &[f64],
    pattern: &PhotonPattern,
) -> Result<f64> {
    let full = full_pattern(exp, pattern);
    let inst = hafnian::submatrix_for_pattern(af, &full);
    let prefactor = af.gauss_weight / (full.factorial_product() * af.sqrt_det_sigma_q);
    if exp.herald_modes() == 0 {
        return hafnian::finalize_probability(hafnian::loop_hafnian(&inst)? * prefactor);
    }
    let scaled = if exp.identical_sources() {
        hafnian::scale_absorb(&inst, herald_probs[0], herald_probs.len() as u32)?
    } else {
        let prod: f64 = herald_probs.iter().product();
        hafnian::scale_absorb(&inst, prod, 1)?
    };
    hafnian::finalize_probability(hafnian::loop_hafnian(&scaled)? * prefactor)
}

/// Conditional probabilities of every system pattern with total photon
/// number at most the experiment cutoff, in colexicographic order, plus
/// the tail mass left unassigned.
pub fn full_distribution(exp: &Experiment) -> Result<(Vec<(PhotonPattern, f64)>, f64)> {
    let propagated = propagate(exp, &assemble(exp)?)?;
    let af = propagated.build_af()?;
    let herald_probs = herald_probabilities(exp)?;
    let patterns = circuit::patterns_up_to(exp.system_modes(), exp.cutoff());
    let probs = patterns
        .par_iter()
        .map(|pat| conditional_from_af(exp, &af, &herald_probs, pat))
        .collect::<Result<Vec<f64>>>()?;
    let covered: f64 = probs.iter().sum();
    Ok((patterns.into_iter().zip(probs).collect(), 1.0 - covered))
}

/// Draws `shots` patterns from the enumerated conditional distribution,
/// renormalized over the enumerated set. Deterministic in `seed`.
pub fn sample(exp: &Experiment, shots: usize, seed: u64) -> Result<Vec<PhotonPattern>> {
    let (dist, _) = full_distribution(exp)?;
    let covered: f64 = dist.iter().map(|(_, p)| p).sum();
    assert!(covered > 0.0, "no probability mass below the cutoff");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(shots);
    for _ in 0..shots {
        let mut u = rng.random::<f64>() * covered;
        let mut pick = dist.len() - 1;
        for (i, (_, p)) in dist.iter().enumerate() {
            if u < *p {
                pick = i;
                break;
            }
            u -= p;
        }
        out.push(dist[pick].0.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{balanced_splitter, dft_matrix, SourceSpec};
    use crate::fock;
    use crate::linalg;
    use crate::C64;
    use ndarray::Array2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_photon_spec(t: f64) -> SourceSpec {
        SourceSpec::new(0.12, t, vec![c(0.0, 0.0)])
    }

    fn hom_experiment(t: f64, cutoff: usize) -> Experiment {
        Experiment::new(
            vec![single_photon_spec(t), single_photon_spec(t)],
            balanced_splitter(),
            vec![0, 1],
            cutoff,
        )
        .unwrap()
    }

    #[test]
    fn absorbed_route_matches_explicit_division() {
        // identical sources take the power path, distinct ones the product
        let identical = hom_experiment(0.99, 3);
        let distinct = Experiment::new(
            vec![single_photon_spec(0.99), SourceSpec::new(0.12, 0.99, vec![c(1.0, 0.0)])],
            dft_matrix(2),
            vec![0, 1],
            3,
        )
        .unwrap();
        for exp in [identical, distinct] {
            let propagated = propagate(&exp, &assemble(&exp).unwrap()).unwrap();
            for pat in circuit::patterns_up_to(2, exp.cutoff()) {
                let divided = conditional_probability(&exp, &propagated, &pat).unwrap();
                let absorbed =
                    conditional_probability_absorbed(&exp, &propagated, &pat).unwrap();
                assert!(
                    (divided - absorbed).abs() <= 1e-9 * divided.max(1.0),
                    "{pat}: {divided:.15e} vs {absorbed:.15e}"
                );
            }
        }
    }

    #[test]
    fn interferometer_conserves_total_photon_distribution() {
        let sources =
            vec![single_photon_spec(0.95), SourceSpec::new(0.10, 0.95, vec![c(0.3, -0.2)])];
        let by_total = |u: Array2<C64>| {
            let exp = Experiment::new(sources.clone(), u, vec![0, 1], 4).unwrap();
            let (dist, _) = full_distribution(&exp).unwrap();
            let mut totals = vec![0.0f64; 5];
            for (pat, p) in dist {
                totals[pat.total()] += p;
            }
            totals
        };
        let ident = by_total(Array2::eye(2));
        let mixed = by_total(linalg::random_unitary(2, 11));
        for (n, (a, b)) in ident.iter().zip(mixed.iter()).enumerate() {
            assert!((a - b).abs() < 1e-9, "total {n}: {a} vs {b}");
        }
    }

    #[test]
    fn permuted_rows_permute_the_distribution() {
        let u = linalg::random_unitary(2, 3);
        let mut swapped = Array2::zeros((2, 2));
        for col in 0..2 {
            swapped[[0, col]] = u[[1, col]];
            swapped[[1, col]] = u[[0, col]];
        }
        let sources = vec![single_photon_spec(0.9), SourceSpec::new(0.15, 0.9, vec![c(0.5, 0.1)])];
        let base = Experiment::new(sources.clone(), u, vec![0, 1], 3).unwrap();
        let perm = Experiment::new(sources, swapped, vec![0, 1], 3).unwrap();
        let (dist_base, _) = full_distribution(&base).unwrap();
        let (dist_perm, _) = full_distribution(&perm).unwrap();
        for (pat, p) in dist_base.iter() {
            let flipped = PhotonPattern(vec![pat.0[1], pat.0[0]]);
            let (_, p_flipped) = dist_perm
                .iter()
                .find(|(other, _)| other.0 == flipped.0)
                .unwrap();
            assert!((p - p_flipped).abs() < 1e-12, "{pat}: {p} vs {p_flipped}");
        }
    }

    #[test]
    fn distribution_is_normalized_within_tail() {
        let exp = hom_experiment(0.999, 6);
        let (dist, tail) = full_distribution(&exp).unwrap();
        let covered: f64 = dist.iter().map(|(_, p)| p).sum();
        assert!(tail > -1e-9, "tail {tail}");
        assert!(tail < 1e-3, "tail {tail}");
        assert!((covered + tail - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_splitter_cancels_coincidences() {
        let exp = hom_experiment(0.999, 2);
        let propagated = propagate(&exp, &assemble(&exp).unwrap()).unwrap();
        let p11 =
            conditional_probability_absorbed(&exp, &propagated, &PhotonPattern(vec![1, 1]))
                .unwrap();
        let p20 =
            conditional_probability_absorbed(&exp, &propagated, &PhotonPattern(vec![2, 0]))
                .unwrap();
        let p02 =
            conditional_probability_absorbed(&exp, &propagated, &PhotonPattern(vec![0, 2]))
                .unwrap();
        assert!(p11 <= 1e-3, "coincidence survived: {p11}");
        assert!((p20 - p02).abs() <= 1e-9, "{p20} vs {p02}");
        assert!(p20 > 0.3, "bunching missing: {p20}");
    }

    #[test]
    fn sampling_is_deterministic_and_supported() {
        let exp = hom_experiment(0.99, 2);
        let a = sample(&exp, 64, 7).unwrap();
        let b = sample(&exp, 64, 7).unwrap();
        assert_eq!(a, b);
        let (dist, _) = full_distribution(&exp).unwrap();
        for pat in &a {
            let (_, p) = dist.iter().find(|(other, _)| other.0 == pat.0).unwrap();
            assert!(*p > 0.0, "sampled a zero-probability pattern {pat}");
        }
        let c = sample(&exp, 64, 8).unwrap();
        assert_ne!(a, c, "different seeds produced identical samples");
    }

    #[test]
    fn dead_source_is_rejected() {
        let exp = Experiment::new(
            vec![SourceSpec::new(0.0, 0.9, vec![c(0.0, 0.0)])],
            Array2::eye(1),
            vec![0],
            2,
        )
        .unwrap();
        assert!(matches!(
            full_distribution(&exp),
            Err(Error::HeraldImpossible { .. })
        ));
    }

    #[test]
    fn matches_fock_oracle_on_plus_state_source() {
        let exp = Experiment::new(
            vec![SourceSpec::new(0.12, 0.99, vec![c(1.0, 0.0)])],
            balanced_splitter(),
            vec![0],
            3,
        )
        .unwrap();
        let (dist, _) = full_distribution(&exp).unwrap();
        let oracle = fock::simulate_experiment(&exp, 12).unwrap();
        let mut tv = 0.0f64;
        for ((pat, p), (opat, q)) in dist.iter().zip(oracle.iter()) {
            assert_eq!(pat.0, opat.0, "pattern order differs");
            tv += (p - q).abs();
        }
        tv /= 2.0;
        assert!(tv <= 1e-7, "total variation {tv:.3e}");
    }
}
