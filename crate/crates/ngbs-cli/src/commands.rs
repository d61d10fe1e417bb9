//! Subcommand implementations.
//!
//! Every command is deterministic given its inputs, writes to `--out` when
//! given and stdout otherwise, and reports failures through [`CliError`]
//! so the exit-code contract stays in one place.

use crate::config::{self, ExperimentConfig};
use crate::CliError;
use ngbs::circuit::Experiment;
use ngbs::hafnian::{self, LowRankFactor};
use ngbs::state_prep;
use ngbs::{experiment, fock, verify};
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Oracle disagreement allowed under `--strict`.
pub const STRICT_TOL: f64 = 1e-6;

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match out {
        None => Ok(Box::new(std::io::stdout().lock())),
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| {
                CliError::Config(format!("cannot create {}: {e}", path.display()))
            })?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
    }
}

fn write_failed(e: std::io::Error) -> CliError {
    CliError::Config(format!("write failed: {e}"))
}

fn pairs(zs: &[ngbs::C64]) -> Vec<[f64; 2]> {
    zs.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Serialize)]
struct PrepareReport {
    source: Vec<SourceReport>,
}

#[derive(Serialize)]
struct SourceReport {
    target: String,
    r: f64,
    t: f64,
    alphas: Vec<[f64; 2]>,
    herald_probability: f64,
    fidelity: f64,
    amplitudes: Vec<[f64; 2]>,
}

/// Per-source preparation report: displacement parameters, herald
/// probability, heralded amplitudes, and fidelity against the target.
pub fn prepare(
    cfg: &ExperimentConfig,
    cutoff_override: Option<usize>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let targets = cfg.target_states()?;
    let exp = cfg.to_experiment(cutoff_override)?;
    let mut report = PrepareReport { source: Vec::new() };
    for ((target, spec), toml_spec) in
        targets.iter().zip(exp.sources()).zip(cfg.targets.iter())
    {
        let cutoff = exp.cutoff().max(target.degree());
        let gauss = state_prep::source_gaussian_state(spec)?;
        report.source.push(SourceReport {
            target: config::target_label(toml_spec),
            r: spec.r,
            t: spec.t,
            alphas: pairs(&spec.alphas),
            herald_probability: state_prep::herald_probability(&gauss)?,
            fidelity: state_prep::fidelity(target, spec, cutoff)?,
            amplitudes: pairs(&state_prep::heralded_state(spec, cutoff)?),
        });
    }
    let text = toml::to_string(&report).expect("report serialization cannot fail");
    let mut w = open_out(out)?;
    w.write_all(text.as_bytes()).map_err(write_failed)?;
    Ok(())
}

/// Conditional probability table, optionally with oracle columns.
pub fn probs(
    cfg: &ExperimentConfig,
    cutoff_override: Option<usize>,
    oracle: bool,
    strict: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let exp = cfg.to_experiment(cutoff_override)?;
    let (dist, tail) = experiment::full_distribution(&exp)?;
    let oracle_dist = if oracle {
        Some(fock::simulate_experiment(&exp, oracle_levels(&exp))?)
    } else {
        None
    };
    let mut w = open_out(out)?;
    let mut max_diff = 0.0f64;
    match &oracle_dist {
        None => {
            writeln!(w, "pattern\tprobability").map_err(write_failed)?;
            for (pat, p) in &dist {
                writeln!(w, "{pat}\t{p:.12e}").map_err(write_failed)?;
            }
        }
        Some(oracle_dist) => {
            writeln!(w, "pattern\tprobability\toracle\tabs_diff").map_err(write_failed)?;
            for ((pat, p), (_, q)) in dist.iter().zip(oracle_dist.iter()) {
                let diff = (p - q).abs();
                max_diff = max_diff.max(diff);
                writeln!(w, "{pat}\t{p:.12e}\t{q:.12e}\t{diff:.3e}").map_err(write_failed)?;
            }
        }
    }
    writeln!(w, "tail\t{tail:.12e}").map_err(write_failed)?;
    drop(w);
    if strict && oracle && max_diff > STRICT_TOL {
        return Err(CliError::Numeric(format!(
            "oracle disagreement {max_diff:.3e} exceeds {STRICT_TOL:.1e}"
        )));
    }
    Ok(())
}

fn oracle_levels(exp: &Experiment) -> usize {
    verify::ORACLE_CUTOFF.max(exp.cutoff() + 8)
}

/// Draws samples and writes one space-separated pattern per line.
pub fn sample(
    cfg: &ExperimentConfig,
    count: usize,
    seed_override: Option<u64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let exp = cfg.to_experiment(None)?;
    let seed = seed_override.unwrap_or(cfg.seed);
    let draws = experiment::sample(&exp, count, seed)?;
    let mut w = open_out(out)?;
    for pat in draws {
        writeln!(w, "{pat}").map_err(write_failed)?;
    }
    Ok(())
}

/// Times enumeration against the low-rank path on random instances and
/// reports the relative residual of each pair.
pub fn bench_rank(
    sizes: &[usize],
    ranks: &[usize],
    trials: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    for &n in sizes {
        if n > hafnian::DEFAULT_DIM_CAP {
            return Err(CliError::Config(format!(
                "size {n} exceeds the enumeration cap {}",
                hafnian::DEFAULT_DIM_CAP
            )));
        }
    }
    let mut w = open_out(out)?;
    writeln!(w, "n\trank\ttrial\tenum_seconds\tlowrank_seconds\trel_residual")
        .map_err(write_failed)?;
    for &n in sizes {
        for &r in ranks {
            for trial in 0..trials {
                let inst_seed = seed
                    .wrapping_mul(1_000_003)
                    .wrapping_add((n * 100 + r * 10 + trial) as u64);
                let inst = hafnian::random_low_rank_instance(n, r, inst_seed);
                let t0 = Instant::now();
                let brute = hafnian::loop_hafnian(&inst).map_err(CliError::from)?;
                let enum_seconds = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let factor = LowRankFactor::from_instance(&inst).map_err(CliError::from)?;
                let fast = hafnian::loop_hafnian_low_rank(&factor);
                let lowrank_seconds = t1.elapsed().as_secs_f64();
                let residual = (fast - brute).norm() / brute.norm().max(f64::MIN_POSITIVE);
                writeln!(
                    w,
                    "{n}\t{r}\t{trial}\t{enum_seconds:.6e}\t{lowrank_seconds:.6e}\t{residual:.3e}"
                )
                .map_err(write_failed)?;
            }
        }
    }
    Ok(())
}

/// Replays the oracle-equivalence suite and prints one line per
/// configuration.
pub fn selftest(out: Option<&Path>) -> Result<(), CliError> {
    let report = verify::run_selftest()?;
    let mut w = open_out(out)?;
    for cfg in &report.configs {
        let verdict = if cfg.tv_distance <= verify::TV_TOL { "pass" } else { "FAIL" };
        writeln!(
            w,
            "{}\tpatterns={}\ttv={:.3e}\ttail={:.3e}\t{verdict}",
            cfg.name, cfg.patterns, cfg.tv_distance, cfg.pipeline_tail
        )
        .map_err(write_failed)?;
    }
    writeln!(w, "max_tv\t{:.3e}", report.max_tv).map_err(write_failed)?;
    drop(w);
    if !report.pass() {
        return Err(CliError::Numeric(format!(
            "oracle equivalence failed: max tv {:.3e} exceeds {:.1e}",
            report.max_tv,
            verify::TV_TOL
        )));
    }
    Ok(())
}
