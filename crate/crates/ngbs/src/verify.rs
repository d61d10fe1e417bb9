//! Cross-validation of the covariance pipeline against the Fock oracle.
//!
//! The reference suite spans source counts, target degrees, interferometer
//! shapes, and beamsplitter transmissions at sizes where the brute-force
//! simulator is exact to well below the comparison tolerance. Every
//! configuration must agree between the two evaluation routes within
//! [`TV_TOL`] total variation.

use crate::circuit::{balanced_splitter, dft_matrix, Experiment, PhotonPattern, SourceSpec};
use crate::error::Result;
use crate::experiment;
use crate::fock;
use crate::linalg;
use crate::C64;
use ndarray::Array2;

/// Total-variation agreement required of every reference configuration.
pub const TV_TOL: f64 = 1e-7;

/// Per-mode Fock levels used when the oracle replays a configuration.
///
/// Herald conditioning divides by probabilities as small as 1e-12, which
/// amplifies truncation error; sixteen levels leave two orders of margin
/// below [`TV_TOL`] on the deepest reference source.
pub const ORACLE_CUTOFF: usize = 16;

/// A named experiment in the reference suite.
pub struct ReferenceConfig {
    /// Stable identifier used in reports.
    pub name: &'static str,
    /// The experiment itself.
    pub experiment: Experiment,
}

/// Agreement metrics for one replayed configuration.
#[derive(Clone, Debug)]
pub struct ConfigReport {
    /// Configuration name.
    pub name: &'static str,
    /// Number of enumerated patterns.
    pub patterns: usize,
    /// Total-variation distance between pipeline and oracle.
    pub tv_distance: f64,
    /// Largest absolute per-pattern difference.
    pub max_abs_diff: f64,
    /// Tail mass the pipeline left unassigned.
    pub pipeline_tail: f64,
}

/// Suite outcome: per-configuration metrics plus the overall verdict.
#[derive(Clone, Debug)]
pub struct SelftestReport {
    /// One report per configuration, in suite order.
    pub configs: Vec<ConfigReport>,
    /// Worst total-variation distance across the suite.
    pub max_tv: f64,
}

impl SelftestReport {
    /// True when every configuration met [`TV_TOL`].
    pub fn pass(&self) -> bool {
        self.max_tv <= TV_TOL
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn single_photon(r: f64, t: f64) -> SourceSpec {
    SourceSpec::new(r, t, vec![c(0.0, 0.0)])
}

fn plus_state(r: f64, t: f64) -> SourceSpec {
    SourceSpec::new(r, t, vec![c(1.0, 0.0)])
}

/// Reference configurations covering one and two sources, target degrees
/// zero through three, interferometers on up to three modes, and
/// transmissions from 0.9 to 0.999.
pub fn reference_suite() -> Vec<ReferenceConfig> {
    let cfg = |name, experiment| ReferenceConfig { name, experiment };
    vec![
        cfg(
            "single_photon_identity",
            Experiment::new(vec![single_photon(0.12, 0.9)], Array2::eye(1), vec![0], 4).unwrap(),
        ),
        cfg(
            "single_photon_sharp",
            Experiment::new(vec![single_photon(0.12, 0.999)], Array2::eye(1), vec![0], 4)
                .unwrap(),
        ),
        cfg(
            "plus_state_splitter",
            Experiment::new(vec![plus_state(0.12, 0.99)], balanced_splitter(), vec![0], 4)
                .unwrap(),
        ),
        cfg(
            "fock_two_identity",
            Experiment::new(
                vec![SourceSpec::new(0.15, 0.99, vec![c(0.0, 0.0); 2])],
                Array2::eye(1),
                vec![0],
                4,
            )
            .unwrap(),
        ),
        cfg(
            "even_pair_splitter",
            Experiment::new(
                vec![SourceSpec::new(0.12, 0.99, vec![c(0.0, -1.0), c(0.0, 1.0)])],
                balanced_splitter(),
                vec![0],
                4,
            )
            .unwrap(),
        ),
        cfg(
            "fock_three_identity",
            Experiment::new(
                vec![SourceSpec::new(0.10, 0.99, vec![c(0.0, 0.0); 3])],
                Array2::eye(1),
                vec![0],
                3,
            )
            .unwrap(),
        ),
        cfg(
            "degree_three_mixed",
            Experiment::new(
                vec![SourceSpec::new(0.10, 0.9, vec![c(1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0)])],
                Array2::eye(1),
                vec![0],
                3,
            )
            .unwrap(),
        ),
        cfg(
            "hom_dip",
            Experiment::new(
                vec![single_photon(0.12, 0.999); 2],
                balanced_splitter(),
                vec![0, 1],
                2,
            )
            .unwrap(),
        ),
        cfg(
            "hom_coarse",
            Experiment::new(
                vec![single_photon(0.12, 0.9); 2],
                balanced_splitter(),
                vec![0, 1],
                2,
            )
            .unwrap(),
        ),
        cfg(
            "distinct_pair_dft",
            Experiment::new(
                vec![single_photon(0.12, 0.99), plus_state(0.10, 0.95)],
                dft_matrix(2),
                vec![0, 1],
                2,
            )
            .unwrap(),
        ),
        cfg(
            "dft_three_offset_input",
            Experiment::new(vec![single_photon(0.12, 0.99)], dft_matrix(3), vec![1], 3).unwrap(),
        ),
        cfg(
            "random_three_plus_state",
            Experiment::new(
                vec![plus_state(0.12, 0.99)],
                linalg::random_unitary(3, 17),
                vec![2],
                3,
            )
            .unwrap(),
        ),
        cfg(
            "random_three_pair",
            Experiment::new(
                vec![single_photon(0.12, 0.99); 2],
                linalg::random_unitary(3, 23),
                vec![0, 2],
                2,
            )
            .unwrap(),
        ),
        cfg(
            "vacuum_target_passthrough",
            Experiment::new(
                vec![SourceSpec::new(0.12, 0.9, vec![])],
                balanced_splitter(),
                vec![1],
                2,
            )
            .unwrap(),
        ),
    ]
}

/// Total-variation distance between two distributions enumerated over the
/// same patterns in the same order.
pub fn tv_distance(p: &[(PhotonPattern, f64)], q: &[(PhotonPattern, f64)]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions must share support");
    p.iter()
        .zip(q.iter())
        .map(|((pat, a), (qat, b))| {
            assert_eq!(pat.0, qat.0, "pattern order differs");
            (a - b).abs()
        })
        .sum::<f64>()
        / 2.0
}

/// Replays one configuration on both routes and reports the agreement.
pub fn run_config(cfg: &ReferenceConfig) -> Result<ConfigReport> {
    let (dist, tail) = experiment::full_distribution(&cfg.experiment)?;
    let oracle = fock::simulate_experiment(&cfg.experiment, ORACLE_CUTOFF)?;
    let tv = tv_distance(&dist, &oracle);
    let max_abs_diff = dist
        .iter()
        .zip(oracle.iter())
        .map(|((_, a), (_, b))| (a - b).abs())
        .fold(0.0f64, f64::max);
    Ok(ConfigReport {
        name: cfg.name,
        patterns: dist.len(),
        tv_distance: tv,
        max_abs_diff,
        pipeline_tail: tail,
    })
}

/// Runs the whole reference suite.
pub fn run_selftest() -> Result<SelftestReport> {
    let mut configs = Vec::new();
    let mut max_tv = 0.0f64;
    for cfg in reference_suite() {
        let report = run_config(&cfg)?;
        max_tv = max_tv.max(report.tv_distance);
        configs.push(report);
    }
    Ok(SelftestReport { configs, max_tv })
}
