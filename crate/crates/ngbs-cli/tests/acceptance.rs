//! Acceptance gate. One test per release criterion, each asserting the
//! criterion at its stated tolerance and printing a summary line (shown
//! with `--nocapture`). A failing criterion fails its test.

use ndarray::Array2;
use ngbs::circuit::{balanced_splitter, Experiment, PhotonPattern};
use ngbs::gaussian::GaussianState;
use ngbs::hafnian::{self, LowRankFactor, MatchingInstance};
use ngbs::state_prep::{self, TargetState};
use ngbs::{experiment, verify, C64};
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rel_err(got: C64, want: C64) -> f64 {
    (got - want).norm() / want.norm().max(f64::MIN_POSITIVE)
}

/// Conditional loop-Hafnian distributions match the truncated Fock oracle
/// across the reference suite: >= 12 configurations spanning one and two
/// sources, one to three system modes, target degrees up to 3, and
/// transmissions {0.9, 0.99, 0.999}, each within total variation 1e-7,
/// in under five minutes.
#[test]
fn criterion_1_oracle_equivalence() {
    let t0 = Instant::now();
    let report = verify::run_selftest().expect("selftest evaluation failed");
    let elapsed = t0.elapsed();

    assert!(report.configs.len() >= 12, "only {} configs", report.configs.len());
    for cfg in &report.configs {
        assert!(
            cfg.tv_distance <= verify::TV_TOL,
            "{}: tv {:.3e} exceeds {:.1e}",
            cfg.name,
            cfg.tv_distance,
            verify::TV_TOL
        );
    }
    assert!(report.pass());
    assert!(elapsed <= Duration::from_secs(300), "took {elapsed:?}");

    let suite = verify::reference_suite();
    let mut sources = BTreeSet::new();
    let mut modes = BTreeSet::new();
    let mut transmissions = BTreeSet::new();
    for cfg in &suite {
        let exp = &cfg.experiment;
        sources.insert(exp.sources().len());
        modes.insert(exp.system_modes());
        assert!(exp.cutoff() <= 6, "{}: cutoff {}", cfg.name, exp.cutoff());
        for spec in exp.sources() {
            transmissions.insert(format!("{:.3}", spec.t));
            assert!(spec.alphas.len() <= 3, "{}: degree {}", cfg.name, spec.alphas.len());
        }
    }
    for k in [1, 2] {
        assert!(sources.contains(&k), "no {k}-source config");
    }
    for m in [1, 2, 3] {
        assert!(modes.contains(&m), "no {m}-mode config");
    }
    for t in ["0.900", "0.990", "0.999"] {
        assert!(transmissions.contains(t), "no t = {t} config");
    }

    println!(
        "criterion 1 (oracle equivalence): PASS - {} configs, max tv {:.3e}, {:.1?}",
        report.configs.len(),
        report.max_tv,
        elapsed
    );
}

/// Rescaling (A, F) -> (p^[-2K/N] A, p^[-K/N] F) multiplies the loop
/// Hafnian by exactly p^[-K]: 100 random instances, N <= 10,
/// p in [1e-4, 1], relative error <= 1e-9.
#[test]
fn criterion_2_scaling_absorption() {
    let mut max_rel = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 10;
        let inst = hafnian::random_instance(n, 2000 + i as u64);
        let p = 10f64.powf(-4.0 + 4.0 * i as f64 / 99.0);
        let k = 1 + (i % 3) as u32;
        let scaled = hafnian::scale_absorb(&inst, p, k).unwrap();
        let got = hafnian::loop_hafnian(&scaled).unwrap();
        let want = hafnian::loop_hafnian(&inst).unwrap() / p.powi(k as i32);
        max_rel = max_rel.max(rel_err(got, want));
    }
    assert!(max_rel <= 1e-9, "max relative error {max_rel:.3e}");
    println!("criterion 2 (scaling absorption): PASS - max relative error {max_rel:.3e}");
}

/// Homogeneity: Lhaf(c^2 A, c F) = c^N Lhaf(A, F) for random complex c,
/// 100 instances, relative error <= 1e-9.
#[test]
fn criterion_3_homogeneity() {
    let mut max_rel = 0.0f64;
    for i in 0..100 {
        let n = 1 + i % 10;
        let inst = hafnian::random_instance(n, 3000 + i as u64);
        let magnitude = 0.5 + 1.5 * i as f64 / 99.0;
        let phase = std::f64::consts::TAU * ((i as f64 * 0.618_033_988_749_894_9) % 1.0);
        let scale = C64::from_polar(magnitude, phase);
        let scaled = MatchingInstance::new(&inst.a * (scale * scale), &inst.f * scale);
        let got = hafnian::loop_hafnian(&scaled).unwrap();
        let want = scale.powu(n as u32) * hafnian::loop_hafnian(&inst).unwrap();
        max_rel = max_rel.max(rel_err(got, want));
    }
    assert!(max_rel <= 1e-9, "max relative error {max_rel:.3e}");
    println!("criterion 3 (homogeneity): PASS - max relative error {max_rel:.3e}");
}

/// The low-rank loop Hafnian equals matching enumeration on random
/// rank-R instances (R <= 3, N <= 12) within 1e-8 relative error, and the
/// plain hafnian of the all-ones matrix reproduces (N-1)!! exactly.
#[test]
fn criterion_4_low_rank_matches_enumeration() {
    let mut max_rel = 0.0f64;
    let mut cases = 0;
    for n in 2..=12 {
        for rank in 1..=3usize.min(n) {
            let inst = hafnian::random_low_rank_instance(n, rank, (4000 + 31 * n + rank) as u64);
            let factor = LowRankFactor::from_instance(&inst).unwrap();
            assert!(factor.rank() <= rank);
            let fast = hafnian::loop_hafnian_low_rank(&factor);
            let brute = hafnian::loop_hafnian(&inst).unwrap();
            max_rel = max_rel.max(rel_err(fast, brute));
            cases += 1;
        }
    }
    assert!(max_rel <= 1e-8, "max relative error {max_rel:.3e}");

    for n in [2usize, 4, 6, 8, 10] {
        let ones = Array2::from_elem((n, n), c(1.0, 0.0));
        let h = hafnian::hafnian(&ones).unwrap();
        let want = hafnian::double_factorial(n as u64 - 1);
        assert_eq!(h.re.round() as u128, want, "all-ones {n}x{n}");
        assert!((h.re - want as f64).abs() < 1e-9 * want as f64);
        assert!(h.im.abs() < 1e-12);
    }

    println!(
        "criterion 4 (low-rank correctness): PASS - {cases} instances, max relative error {max_rel:.3e}, (N-1)!! exact"
    );
}

/// At N = 16, R = 1, the low-rank path (factorization + evaluation) beats
/// matching enumeration by at least 10x.
#[test]
fn criterion_5_low_rank_speedup() {
    let inst = hafnian::random_low_rank_instance(16, 1, 77);

    let t0 = Instant::now();
    let brute = hafnian::loop_hafnian(&inst).unwrap();
    let enum_seconds = t0.elapsed().as_secs_f64();

    let trials = 10;
    let mut fast = C64::new(0.0, 0.0);
    let mut lowrank_seconds = f64::INFINITY;
    for _ in 0..trials {
        let t1 = Instant::now();
        let factor = LowRankFactor::from_instance(&inst).unwrap();
        fast = hafnian::loop_hafnian_low_rank(&factor);
        lowrank_seconds = lowrank_seconds.min(t1.elapsed().as_secs_f64());
    }

    assert!(rel_err(fast, brute) <= 1e-8);
    let ratio = enum_seconds / lowrank_seconds;
    assert!(
        ratio >= 10.0,
        "enumeration {enum_seconds:.3}s vs low-rank {lowrank_seconds:.6}s (ratio {ratio:.1})"
    );
    println!(
        "criterion 5 (low-rank speed): PASS - enumeration {enum_seconds:.3}s, low-rank {lowrank_seconds:.2e}s, ratio {ratio:.0}x"
    );
}

/// Two heralded single photons on a balanced beamsplitter at t = 0.999:
/// the coincidence probability is <= 1e-3 and the bunched outcomes agree
/// within 1e-9.
#[test]
fn criterion_6_hom_dip() {
    let target = TargetState::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let spec = state_prep::build_source(&target, 0.12, 0.999).unwrap();
    let exp = Experiment::new(
        vec![spec.clone(), spec],
        balanced_splitter(),
        vec![0, 1],
        2,
    )
    .unwrap();
    let (dist, _) = experiment::full_distribution(&exp).unwrap();
    let prob = |pattern: &[usize]| {
        dist.iter()
            .find(|(q, _)| q.0 == pattern)
            .unwrap_or_else(|| panic!("pattern {pattern:?} missing"))
            .1
    };
    let coincidence = prob(&[1, 1]);
    let bunching_gap = (prob(&[2, 0]) - prob(&[0, 2])).abs();
    assert!(coincidence <= 1e-3, "Pr([1,1]) = {coincidence:.3e}");
    assert!(bunching_gap <= 1e-9, "|Pr([2,0]) - Pr([0,2])| = {bunching_gap:.3e}");
    println!(
        "criterion 6 (HOM dip): PASS - Pr([1,1]) = {coincidence:.3e}, bunching gap {bunching_gap:.3e}"
    );
}

/// Heralding fidelity approaches unity: for |1>, |2>, and (|0>+|2>)/sqrt(2),
/// fidelity at t = 0.999 exceeds 0.99 and beats fidelity at t = 0.9.
#[test]
fn criterion_7_heralding_fidelity() {
    let targets = [
        ("|1>", TargetState::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap()),
        ("|2>", TargetState::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap()),
        ("(|0>+|2>)/sqrt2", TargetState::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap()),
    ];
    let mut worst = 1.0f64;
    for (label, target) in &targets {
        let sharp = state_prep::build_source(target, 0.12, 0.999).unwrap();
        let loose = state_prep::build_source(target, 0.12, 0.9).unwrap();
        let f_sharp = state_prep::fidelity(target, &sharp, 6).unwrap();
        let f_loose = state_prep::fidelity(target, &loose, 6).unwrap();
        assert!(f_sharp > 0.99, "{label}: fidelity {f_sharp}");
        assert!(f_sharp > f_loose, "{label}: {f_sharp} vs {f_loose} at t = 0.9");
        worst = worst.min(f_sharp);
    }
    println!("criterion 7 (heralding fidelity): PASS - min fidelity at t = 0.999 is {worst:.6}");
}

/// Squeezed vacuum without displacement has exactly even parity: odd
/// photon-count probabilities <= 1e-12 through the loop-Hafnian pipeline.
/// Every enumerated conditional distribution is nonnegative and sums to 1
/// within its reported tail mass + 1e-9.
#[test]
fn criterion_8_parity_and_normalization() {
    let mut max_odd = 0.0f64;
    for r in [0.5, 1.0] {
        let af = GaussianState::vacuum(1).squeeze(0, r).build_af().unwrap();
        for n in [1usize, 3, 5] {
            let p = hafnian::probability(&af, &PhotonPattern(vec![n])).unwrap();
            max_odd = max_odd.max(p);
        }
    }
    assert!(max_odd <= 1e-12, "odd-photon probability {max_odd:.3e}");

    let mut max_defect = 0.0f64;
    for cfg in &verify::reference_suite() {
        let (dist, tail) = experiment::full_distribution(&cfg.experiment).unwrap();
        let mut sum = 0.0;
        for (pattern, p) in &dist {
            assert!(*p >= 0.0, "{}: negative probability at {pattern}", cfg.name);
            sum += p;
        }
        let defect = (sum - 1.0).abs();
        assert!(
            defect <= tail.max(0.0) + 1e-9,
            "{}: sum {sum} with tail {tail:.3e}",
            cfg.name
        );
        max_defect = max_defect.max((sum + tail - 1.0).abs());
    }
    assert!(max_defect <= 1e-12, "sum + tail drifts from 1 by {max_defect:.3e}");

    println!(
        "criterion 8 (parity and normalization): PASS - max odd-photon probability {max_odd:.3e}, max normalization defect {max_defect:.3e}"
    );
}

/// Sampling with a fixed seed is byte-identical across two runs of the
/// installed binary.
#[test]
fn criterion_9_sampling_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("experiment.toml");
    std::fs::write(
        &config_path,
        r#"
targets = ["single_photon", "cat_even"]
wiring = [0, 1]
cutoff = 4
seed = 4242

[source_params]
r = 0.12
t = 0.99

[interferometer]
preset = "dft"
size = 2
"#,
    )
    .unwrap();

    let mut outputs = Vec::new();
    for name in ["a.txt", "b.txt"] {
        let out_path = dir.path().join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ngbs"))
            .args([
                "sample",
                "--config",
                config_path.to_str().unwrap(),
                "--count",
                "500",
                "--out",
                out_path.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1], "sample output differs between runs");
    println!("criterion 9 (determinism): PASS - two runs byte-identical ({} bytes)", outputs[0].len());
}
