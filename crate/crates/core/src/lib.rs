//! Simulation and verification of projective energy measurements for
//! Hamiltonians that are only accessible as black-box evolutions.
//!
//! The crate covers the whole pipeline at desk scale:
//!
//! - [`linalg`]: dense complex kernels, spectral data, Haar sampling.
//! - [`channel`]: superoperator representation of quantum channels.
//! - [`controllization`]: the pseudo-controlled gate, the randomised
//!   decoupling channel and its closed form.
//! - [`pea`]: phase estimation with ideal or controllised gates, analytic
//!   outcome statistics and the induced measurement instrument.
//! - [`metrics`]: outcome-fluctuation and eigenstate-irreproducibility
//!   functionals, their bounds and the runtime ledger.
//! - [`trace_estimation`]: one-clean-qubit coherence estimation and the
//!   spectral-diameter search built on it.
//! - [`cue`]: circular-unitary-ensemble trace moments and concentration
//!   bounds.

pub mod channel;
pub mod controllization;
pub mod cue;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pea;
pub mod rng;
pub mod trace_estimation;

pub use error::{Error, Result};
pub use channel::QuantumChannel;
pub use controllization::{ControllizationSpec, RandomizingSet};
pub use pea::{Dyadic, MeasurementInstrument, OutcomeDistribution, PeaConfig, PeaMode};
pub use metrics::{MetricReport, ResourceLedger};
pub use linalg::{ComplexMatrix, DensityMatrix, Hamiltonian, Unitary, C64};
pub use trace_estimation::{CoherenceEstimate, DeltaMaxResult, EvolutionOracle};
pub use cue::{BoundSpec, ConcentrationReport, MomentReport};
pub use rng::{seeded, SimRng, StreamSeed};

