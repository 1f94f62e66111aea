//! Genotypes evolved by the inner loop: discrete DNA strings and the
//! continuous-matrix control genotype, with their variation operators.
//!
//! Operators are value-semantic: inputs are never modified.

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{seeds, Error, Result};

/// A fixed-length string over a small symbol alphabet. Symbols render as
/// letters 'A', 'B', ... in every serialized form.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DnaGenome {
    symbols: Vec<u8>,
}

impl DnaGenome {
    pub fn new(symbols: Vec<u8>, alphabet: usize) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Config("genome.length: must be at least 1".into()));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| (s as usize) >= alphabet) {
            return Err(Error::Parse(format!(
                "symbol {bad} outside alphabet of size {alphabet}"
            )));
        }
        Ok(Self { symbols })
    }

    /// Uniformly random genome of length `len` over `alphabet` symbols.
    pub fn random(rng: &mut ChaCha8Rng, len: usize, alphabet: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("genome.length: must be at least 1".into()));
        }
        if alphabet < 2 {
            return Err(Error::Config("genome.alphabet: must be at least 2".into()));
        }
        let symbols = (0..len)
            .map(|_| rng.random_range(0..alphabet) as u8)
            .collect();
        Ok(Self { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Each position independently mutates with probability 1/L; a mutated
    /// position takes one of the other `alphabet - 1` symbols uniformly.
    pub fn point_mutate(&self, rng: &mut ChaCha8Rng, alphabet: usize) -> Self {
        let rate = 1.0 / self.symbols.len() as f64;
        let symbols = self
            .symbols
            .iter()
            .map(|&s| {
                if rng.random::<f64>() < rate {
                    let shift = rng.random_range(1..alphabet) as u8;
                    (s + shift) % alphabet as u8
                } else {
                    s
                }
            })
            .collect();
        Self { symbols }
    }

    /// Swaps the symbols of exactly floor(L/2) positions, chosen uniformly
    /// without replacement, between the two offspring.
    pub fn uniform_crossover(
        a: &Self,
        b: &Self,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Self, Self)> {
        if a.len() != b.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                got: b.len(),
            });
        }
        let mut child_a = a.symbols.clone();
        let mut child_b = b.symbols.clone();
        for pos in index::sample(rng, a.len(), a.len() / 2) {
            std::mem::swap(&mut child_a[pos], &mut child_b[pos]);
        }
        Ok((Self { symbols: child_a }, Self { symbols: child_b }))
    }

    pub fn content_hash(&self) -> u64 {
        seeds::hash_bytes(&self.symbols)
    }
}

impl From<DnaGenome> for String {
    fn from(g: DnaGenome) -> String {
        g.symbols.iter().map(|&s| char::from(b'A' + s)).collect()
    }
}

impl TryFrom<String> for DnaGenome {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        let symbols: Vec<u8> = text
            .chars()
            .map(|ch| match ch {
                'A'..='Z' => Ok(ch as u8 - b'A'),
                other => Err(Error::Parse(format!("bad genome char {other:?}"))),
            })
            .collect::<Result<_>>()?;
        if symbols.is_empty() {
            return Err(Error::Parse("empty genome string".into()));
        }
        Ok(Self { symbols })
    }
}

impl std::fmt::Display for DnaGenome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &s in &self.symbols {
            write!(f, "{}", char::from(b'A' + s))?;
        }
        Ok(())
    }
}

/// The continuous control genotype: a real matrix with the same shape as
/// the token-embedding matrix it substitutes for (L x embed_dim).
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ContinuousGenome {
    pub values: Array2<f32>,
}

impl ContinuousGenome {
    pub fn zeros(len: usize, embed_dim: usize) -> Self {
        Self {
            values: Array2::zeros((len, embed_dim)),
        }
    }

    pub fn random(rng: &mut ChaCha8Rng, len: usize, embed_dim: usize, scale: f64) -> Self {
        let normal = Normal::new(0.0, scale).expect("scale must be positive");
        let values =
            Array2::from_shape_fn((len, embed_dim), |_| normal.sample(rng) as f32);
        Self { values }
    }

    /// Adds i.i.d. zero-mean Gaussian noise of standard deviation `sigma`
    /// to every entry.
    pub fn gaussian_mutate(&self, sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, sigma).expect("sigma must be positive");
        Self {
            values: self.values.map(|&v| v + normal.sample(rng) as f32),
        }
    }

    /// Swaps floor(L/2) whole rows between the two offspring.
    pub fn crossover(a: &Self, b: &Self, rng: &mut ChaCha8Rng) -> Result<(Self, Self)> {
        if a.values.dim() != b.values.dim() {
            return Err(Error::Dimension {
                expected: a.values.len(),
                got: b.values.len(),
            });
        }
        let mut child_a = a.values.clone();
        let mut child_b = b.values.clone();
        let rows = a.values.nrows();
        for row in index::sample(rng, rows, rows / 2) {
            for col in 0..a.values.ncols() {
                std::mem::swap(&mut child_a[(row, col)], &mut child_b[(row, col)]);
            }
        }
        Ok((Self { values: child_a }, Self { values: child_b }))
    }

    pub fn content_hash(&self) -> u64 {
        let mut h = seeds::mix(self.values.len() as u64);
        for &v in self.values.iter() {
            h = seeds::mix(h ^ u64::from(v.to_bits()));
        }
        h
    }
}

/// Either genotype, as selected by the experiment config.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Genome {
    Dna { symbols: DnaGenome },
    Continuous { values: ContinuousGenome },
}

impl Genome {
    pub fn content_hash(&self) -> u64 {
        match self {
            Genome::Dna { symbols } => symbols.content_hash(),
            Genome::Continuous { values } => values.content_hash(),
        }
    }
}
