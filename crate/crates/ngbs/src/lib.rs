//! Exact probabilities and sampling for boson sampling with heralded
//! non-Gaussian input states.
//!
//! Arbitrary single-mode input states with finite Fock support are prepared
//! by heralded source circuits: squeezed light mixed with displaced vacuum
//! ancillas on high-transmission beamsplitters, with one photon detected on
//! every ancilla. Because every gate is Gaussian, the full experiment,
//! sources plus interferometer, stays Gaussian until the detectors, and
//! every output probability is an exact loop-hafnian expression in the
//! state's covariance matrix and displacement vector. Conditioning on the
//! herald clicks reduces to dividing by the herald probability, which can be
//! absorbed into the loop hafnian by rescaling its matrix and vector.
//!
//! Modules:
//!
//! - [`circuit`]: source specs, gate sequences, experiments, photon patterns.
//! - [`gaussian`]: covariance-matrix algebra and the matching-form reduction.
//! - [`hafnian`]: hafnian and loop-hafnian evaluation, scaling absorption,
//!   and the low-rank fast path.
//! - [`state_prep`]: target states, displacement parameters, herald
//!   probabilities, and fidelity diagnostics.
//! - [`experiment`]: the assembled sampling pipeline, distributions, and the
//!   exact sampler.
//! - [`fock`]: an independent truncated Fock-space simulator used as the
//!   verification oracle.
//! - [`verify`]: the oracle-equivalence reference suite.
//! - [`linalg`]: small dense kernels shared by the above.

#![warn(missing_docs)]

pub mod circuit;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod gaussian;
pub mod hafnian;
pub mod linalg;
pub mod state_prep;
pub mod verify;

pub use circuit::{Experiment, Gate, PhotonPattern, SourceSpec};
pub use error::{Error, Result};
pub use gaussian::{AfPair, GaussianState};
pub use hafnian::{LowRankFactor, MatchingInstance};
pub use state_prep::TargetState;

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;

#[cfg(doctest)]
mod book {
    //! Compiles every code snippet in the guide as a doc-test.

    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(gaussian_states, "../../../book/src/gaussian-states.md");
    chapter!(hafnians, "../../../book/src/hafnians.md");
    chapter!(heralded_sources, "../../../book/src/heralded-sources.md");
    chapter!(experiments, "../../../book/src/experiments.md");
    chapter!(fock_oracle, "../../../book/src/fock-oracle.md");
    chapter!(cli, "../../../book/src/cli.md");
}
