//! Experiment configuration files.
//!
//! The on-disk format is TOML with complex numbers written as `[re, im]`
//! pairs. Targets are either amplitude lists or named presets; the
//! interferometer is a named preset with a size or an explicit matrix.
//! The full schema is documented in the guide's CLI chapter (`book/src/cli.md`).

use crate::CliError;
use ndarray::Array2;
use ngbs::circuit::{balanced_splitter, dft_matrix, Experiment, SourceSpec};
use ngbs::state_prep::{self, TargetState};
use ngbs::C64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Top-level configuration document.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// One entry per source: a preset name or a Fock amplitude list.
    pub targets: Vec<TargetSpec>,
    /// Squeezing and beamsplitter transmission shared by all sources.
    pub source_params: SourceParams,
    /// Interferometer preset or explicit matrix.
    pub interferometer: InterferometerSpec,
    /// Interferometer input mode of each source's system mode.
    pub wiring: Vec<usize>,
    /// Maximum total photons enumerated on the output modes.
    pub cutoff: usize,
    /// Sampling seed; overridable with `--seed`.
    #[serde(default)]
    pub seed: u64,
}

/// A target state: preset name or explicit amplitudes.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum TargetSpec {
    /// `"vacuum"`, `"single_photon"`, `"cat_even"`, or `"fock_<n>"`.
    Preset(String),
    /// Fock amplitudes as `[re, im]` pairs, index = photon number.
    Amplitudes(Vec<[f64; 2]>),
}

/// Shared source parameters.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Squeezing applied to (and removed from) each system mode.
    pub r: f64,
    /// Herald beamsplitter transmission, strictly inside (0, 1).
    pub t: f64,
}

/// Interferometer description.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerSpec {
    /// `"identity"`, `"dft"`, or `"bs50"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Mode count for presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    /// Explicit unitary, row-major, entries as `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl ExperimentConfig {
    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Serializes back to TOML. Parsing the result must reproduce the same
    /// experiment; the round-trip test holds this invariant.
    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }

    /// Target states in source order.
    pub fn target_states(&self) -> Result<Vec<TargetState>, CliError> {
        self.targets.iter().map(target_state).collect()
    }

    /// Builds the validated experiment, optionally overriding the cutoff.
    pub fn to_experiment(&self, cutoff_override: Option<usize>) -> Result<Experiment, CliError> {
        if self.targets.is_empty() {
            return Err(CliError::Config("at least one target is required".into()));
        }
        let params = &self.source_params;
        if !(params.t > 0.0 && params.t < 1.0) {
            return Err(CliError::Config(format!(
                "source_params.t must lie strictly inside (0, 1), got {}",
                params.t
            )));
        }
        let sources = self
            .target_states()?
            .iter()
            .map(|target| {
                state_prep::build_source(target, params.r, params.t)
                    .map_err(|e| CliError::Config(format!("target calibration failed: {e}")))
            })
            .collect::<Result<Vec<SourceSpec>, CliError>>()?;
        let u = self.unitary()?;
        Experiment::new(sources, u, self.wiring.clone(), cutoff_override.unwrap_or(self.cutoff))
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Resolves the interferometer matrix.
    pub fn unitary(&self) -> Result<Array2<C64>, CliError> {
        let spec = &self.interferometer;
        match (&spec.preset, &spec.matrix) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "interferometer takes either a preset or a matrix, not both".into(),
            )),
            (None, None) => Err(CliError::Config(
                "interferometer needs a preset or a matrix".into(),
            )),
            (None, Some(rows)) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config(
                        "interferometer.matrix must be square and non-empty".into(),
                    ));
                }
                Ok(Array2::from_shape_fn((n, n), |(i, j)| {
                    C64::new(rows[i][j][0], rows[i][j][1])
                }))
            }
            (Some(name), None) => match name.as_str() {
                "identity" => Ok(Array2::eye(self.preset_size(1)?)),
                "dft" => Ok(dft_matrix(self.preset_size(1)?)),
                "bs50" => {
                    let size = self.preset_size(2)?;
                    if size != 2 {
                        return Err(CliError::Config(format!(
                            "bs50 is a two-mode preset, got size {size}"
                        )));
                    }
                    Ok(balanced_splitter())
                }
                other => Err(CliError::Config(format!(
                    "unknown interferometer preset {other:?}; known: identity, dft, bs50"
                ))),
            },
        }
    }

    fn preset_size(&self, default: usize) -> Result<usize, CliError> {
        let size = self.interferometer.size.unwrap_or(default);
        if size == 0 {
            return Err(CliError::Config("interferometer.size must be positive".into()));
        }
        Ok(size)
    }
}

/// Resolves one target entry to a normalized state.
pub fn target_state(spec: &TargetSpec) -> Result<TargetState, CliError> {
    let amps = match spec {
        TargetSpec::Amplitudes(pairs) => {
            pairs.iter().map(|&[re, im]| C64::new(re, im)).collect()
        }
        TargetSpec::Preset(name) => preset_amplitudes(name)?,
    };
    TargetState::new(amps)
        .map_err(|e| CliError::Config(format!("invalid target amplitudes: {e}")))
}

/// Short display form of a target entry for reports.
pub fn target_label(spec: &TargetSpec) -> String {
    match spec {
        TargetSpec::Preset(name) => name.clone(),
        TargetSpec::Amplitudes(_) => "custom".into(),
    }
}

fn preset_amplitudes(name: &str) -> Result<Vec<C64>, CliError> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    if let Some(n) = name.strip_prefix("fock_").and_then(|s| s.parse::<usize>().ok()) {
        if n > 8 {
            return Err(CliError::Config(format!(
                "fock_{n} exceeds the supported photon number 8"
            )));
        }
        let mut amps = vec![zero; n + 1];
        amps[n] = one;
        return Ok(amps);
    }
    match name {
        "vacuum" => Ok(vec![one]),
        "single_photon" => Ok(vec![zero, one]),
        "cat_even" => Ok(vec![one, zero, one]),
        other => Err(CliError::Config(format!(
            "unknown target preset {other:?}; known: vacuum, single_photon, cat_even, fock_<n>"
        ))),
    }
}
