//! Meta-learned developmental encodings for quality-diversity search.
//!
//! The library trains a DNA-conditioned Neural Cellular Automata (NCA) so
//! that a short discrete genome string, decoded through attention during
//! growth, produces diverse solvable 2D mazes. An outer CMA-ES loop
//! optimizes the NCA weights against the quality-diversity score that a
//! MAP-Elites inner loop achieves over the genome space.
//!
//! Module map:
//! - [`genome`]: discrete DNA genomes, the continuous-vector control
//!   genotype, and their variation operators.
//! - [`nca`]: the developmental substrate — attention-based DNA decoding,
//!   gated state updates, and maze growth.
//! - [`maze`]: phenotype metrics (connectivity, path length, symmetry).
//! - [`qd`]: the MAP-Elites archive, emitters, and the inner loop.
//! - [`cma`]: a self-contained CMA-ES used by the outer loop and the
//!   optional inner-loop emitter.
//! - [`meta`]: outer-loop training, checkpointing, evolvability snapshots.
//! - [`analysis`]: representation-structure metrics (disentanglement,
//!   position/character information gaps).

pub mod analysis;
pub mod cma;
pub mod config;
pub mod genome;
pub mod maze;
pub mod meta;
pub mod nca;
pub mod pgm;
pub mod qd;
pub mod seeds;

use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration; the message names the offending field.
    #[error("config: {0}")]
    Config(String),
    /// Mismatched vector/matrix dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    /// A growth step produced a non-finite cell state.
    #[error("non-finite state at step {step}, cell ({row}, {col})")]
    NonFinite { step: usize, row: usize, col: usize },
    /// Malformed input data (genome strings, parameter files, ...).
    #[error("parse: {0}")]
    Parse(String),
    /// A required run artifact is missing.
    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
