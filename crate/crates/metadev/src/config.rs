//! Experiment configuration: grid, genome, inner/outer loop, and analysis
//! settings, with JSON (de)serialization and field-level validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Cell-grid and update-rule settings for the developmental substrate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub height: usize,
    pub width: usize,
    /// Per-cell state channels. Channel 0 gates aliveness, channel 1 is the
    /// tile readout.
    pub channels: usize,
    /// Growth steps per developmental run.
    pub steps: usize,
    /// Probability that a cell commits its update on a given step.
    pub fire_rate: f64,
    /// A cell is alive iff the 3x3 max of channel 0 exceeds this.
    pub alive_threshold: f32,
    /// Renormalize cell states to unit euclidean norm after each update.
    pub normalize: bool,
    /// Hidden width of the update MLP.
    pub mlp_hidden: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            height: 16,
            width: 16,
            channels: 9,
            steps: 50,
            fire_rate: 0.5,
            alive_threshold: 0.1,
            normalize: true,
            mlp_hidden: 32,
        }
    }
}

/// Which genotype the inner loop evolves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenomeKind {
    /// Fixed-length string over a small symbol alphabet.
    Dna,
    /// A real matrix substituted directly for the token-embedding lookup.
    Continuous,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GenomeConfig {
    pub kind: GenomeKind,
    /// Genome length L (number of positions).
    pub length: usize,
    /// Alphabet size A.
    pub alphabet: usize,
    /// Token embedding width.
    pub embed_dim: usize,
    /// Gaussian mutation scale for the continuous genotype.
    pub sigma: f64,
}

impl Default for GenomeConfig {
    fn default() -> Self {
        Self {
            kind: GenomeKind::Dna,
            length: 8,
            alphabet: 4,
            embed_dim: 8,
            sigma: 0.1,
        }
    }
}

/// Inner-loop emitter choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitterKind {
    /// Point mutation + uniform crossover, half the batch each.
    Ga,
    /// CMA-ES sampling over a continuous relaxation of the genotype.
    Cma,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    /// MAP-Elites iterations per evaluation.
    pub iterations: usize,
    /// Candidates emitted per iteration.
    pub batch: usize,
    /// Archive bins along the path-length axis.
    pub path_bins: usize,
    /// Archive bins along the symmetry axis.
    pub symmetry_bins: usize,
    pub emitter: EmitterKind,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            iterations: 10,
            batch: 100,
            path_bins: 25,
            symmetry_bins: 20,
            emitter: EmitterKind::Ga,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OuterConfig {
    /// CMA-ES population size.
    pub lambda: usize,
    /// Outer-loop generations.
    pub iterations: usize,
    /// Initial CMA-ES step size.
    pub sigma0: f64,
    /// Checkpoint cadence in generations; 0 disables checkpoints.
    pub ckpt_every: usize,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            lambda: 100,
            iterations: 1000,
            sigma0: 0.5,
            ckpt_every: 100,
        }
    }
}

/// How `analysis::collect_dataset` samples genomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetMode {
    RandomGenomes,
    ArchiveElites,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Dataset rows for the structure metrics.
    pub samples: usize,
    /// Equal-width bins used to discretize descriptor targets for MI.
    pub target_bins: usize,
    /// Trees per random forest.
    pub trees: usize,
    /// Maximum tree depth.
    pub max_depth: usize,
    pub mode: DatasetMode,
    /// Independent inner-loop seeds averaged by evolvability snapshots.
    pub snapshot_seeds: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            target_bins: 16,
            trees: 50,
            max_depth: 6,
            mode: DatasetMode::RandomGenomes,
            snapshot_seeds: 5,
        }
    }
}

/// Full experiment configuration. `Default` reproduces the reference
/// setup: 16x16 grid with 9 state channels grown for 50 steps, DNA length
/// 8 over a 4-symbol alphabet, a 500-cell archive filled in 10 iterations
/// of batch 100, and an outer CMA-ES population of 100.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub genome: GenomeConfig,
    pub inner: InnerConfig,
    pub outer: OuterConfig,
    pub analysis: AnalysisConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Small preset for desk-scale experiments: 8x8 grid, 16 growth steps,
    /// a thinner update MLP, batch 40, and a 16-individual outer loop run
    /// for 50 generations without checkpoints.
    pub fn desk() -> Self {
        let mut cfg = Self::default();
        cfg.grid.height = 8;
        cfg.grid.width = 8;
        cfg.grid.steps = 16;
        cfg.grid.mlp_hidden = 16;
        cfg.inner.batch = 40;
        cfg.outer.lambda = 16;
        cfg.outer.iterations = 50;
        cfg.outer.ckpt_every = 0;
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Validates every field, naming the offending one in the error.
    pub fn validate(&self) -> Result<()> {
        fn fail(field: &str, why: &str) -> Result<()> {
            Err(Error::Config(format!("{field}: {why}")))
        }
        let g = &self.grid;
        if g.height < 3 || g.width < 3 {
            return fail("grid.height/width", "must be at least 3");
        }
        if g.channels < 2 {
            return fail("grid.channels", "needs an alive channel and a tile channel");
        }
        if g.steps == 0 {
            return fail("grid.steps", "must be at least 1");
        }
        if !(g.fire_rate > 0.0 && g.fire_rate <= 1.0) {
            return fail("grid.fire_rate", "must be in (0, 1]");
        }
        if !g.alive_threshold.is_finite() || g.alive_threshold <= 0.0 {
            return fail("grid.alive_threshold", "must be positive and finite");
        }
        if g.mlp_hidden == 0 {
            return fail("grid.mlp_hidden", "must be at least 1");
        }
        let ge = &self.genome;
        if ge.length == 0 {
            return fail("genome.length", "must be at least 1");
        }
        if !(2..=26).contains(&ge.alphabet) {
            return fail("genome.alphabet", "must be in [2, 26]");
        }
        if ge.embed_dim == 0 {
            return fail("genome.embed_dim", "must be at least 1");
        }
        if !(ge.sigma > 0.0) {
            return fail("genome.sigma", "must be positive");
        }
        let inner = &self.inner;
        if inner.iterations == 0 {
            return fail("inner.iterations", "must be at least 1");
        }
        if inner.batch == 0 {
            return fail("inner.batch", "must be at least 1");
        }
        if inner.path_bins == 0 || inner.symmetry_bins == 0 {
            return fail("inner.path_bins/symmetry_bins", "must be at least 1");
        }
        let outer = &self.outer;
        if outer.lambda < 2 {
            return fail("outer.lambda", "must be at least 2");
        }
        if outer.iterations == 0 {
            return fail("outer.iterations", "must be at least 1");
        }
        if !(outer.sigma0 > 0.0) {
            return fail("outer.sigma0", "must be positive");
        }
        let a = &self.analysis;
        if a.samples == 0 {
            return fail("analysis.samples", "must be at least 1");
        }
        if a.target_bins < 2 {
            return fail("analysis.target_bins", "must be at least 2");
        }
        if a.trees == 0 || a.max_depth == 0 {
            return fail("analysis.trees/max_depth", "must be at least 1");
        }
        if a.snapshot_seeds == 0 {
            return fail("analysis.snapshot_seeds", "must be at least 1");
        }
        Ok(())
    }

    /// Descriptor-space extents implied by the grid: the longest shortest
    /// path a single-width corridor can realize (H*W/2 + H) and the
    /// perfect-mirror symmetry count ((H*(W/2) + (H/2)*W) / 2).
    pub fn descriptor_ranges(&self) -> (f64, f64) {
        let (h, w) = (self.grid.height, self.grid.width);
        let path_max = (h * w / 2 + h) as f64;
        let sym_max = (h * (w / 2) + (h / 2) * w) as f64 / 2.0;
        (path_max, sym_max)
    }
}
