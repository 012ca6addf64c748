//! Demonstration samples, the resampleable pool with its 4:1 split, the
//! on-disk record format and expert data collection.

mod codec;
mod collect;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::intention::{Dlm, LpeIntention};
use crate::world::Control;

pub use codec::{decode_pool, encode_pool, read_pool, write_pool};
pub use collect::{collect, collect_episode, CollectConfig, CollectReport, EpisodeOutcome};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset file: {0}")]
    Format(String),
    #[error("train partition is empty")]
    EmptyTrain,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub map_id: String,
    pub task_id: String,
    /// Episode time of the sample (s).
    pub time: f64,
}

/// One imitation tuple. The control is stored at `f32` precision, the
/// precision of the record format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Camera image bytes, `H x W x 3`.
    pub obs: Vec<u8>,
    pub dlm: Dlm,
    pub lpe: LpeIntention,
    pub v: f32,
    pub steer: f32,
    pub meta: SampleMeta,
}

impl Sample {
    pub fn control(&self) -> Control {
        Control::new(self.v as f64, self.steer as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetPool {
    pub obs_h: usize,
    pub obs_w: usize,
    pub lpe_size: usize,
    samples: Vec<Sample>,
    is_eval: Vec<bool>,
}

impl DatasetPool {
    pub fn new(obs_h: usize, obs_w: usize, lpe_size: usize) -> Self {
        Self {
            obs_h,
            obs_w,
            lpe_size,
            samples: Vec::new(),
            is_eval: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Sample) -> Result<(), DatasetError> {
        if s.obs.len() != self.obs_h * self.obs_w * 3 || s.lpe.size != self.lpe_size {
            return Err(DatasetError::Invalid("sample dimensions differ from the pool's".into()));
        }
        if !(s.v.abs() <= 1.0 && s.steer.abs() <= 1.0) {
            return Err(DatasetError::Invalid(format!(
                "control ({}, {}) outside [-1, 1]",
                s.v, s.steer
            )));
        }
        self.samples.push(s);
        self.is_eval.push(false);
        Ok(())
    }

    pub(crate) fn push_with_split(&mut self, s: Sample, eval: bool) -> Result<(), DatasetError> {
        self.push(s)?;
        *self.is_eval.last_mut().unwrap() = eval;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn is_eval(&self, i: usize) -> bool {
        self.is_eval[i]
    }

    /// Random 4:1 train/eval assignment: exactly `round(n / 5)` eval samples,
    /// chosen by a seeded shuffle.
    pub fn split(&mut self, seed: u64) {
        let n = self.samples.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_eval = (n as f64 / 5.0).round() as usize;
        self.is_eval = vec![false; n];
        for &i in &idx[..n_eval] {
            self.is_eval[i] = true;
        }
    }

    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_eval[i]).collect()
    }

    pub fn eval_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_eval[i]).collect()
    }

    /// `n` uniform draws with replacement from the train partition, as
    /// sample indices.
    pub fn draw_indices(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>, DatasetError> {
        let train = self.train_indices();
        if train.is_empty() {
            return Err(DatasetError::EmptyTrain);
        }
        Ok((0..n).map(|_| train[rng.gen_range(0..train.len())]).collect())
    }

    pub fn extend(&mut self, other: DatasetPool) -> Result<(), DatasetError> {
        for s in other.samples {
            self.push(s)?;
        }
        Ok(())
    }
}

/// `n` uniform draws with replacement from the train partition.
pub fn sample_epoch(pool: &DatasetPool, n: usize, seed: u64) -> Result<Vec<&Sample>, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(pool
        .draw_indices(n, &mut rng)?
        .into_iter()
        .map(|i| pool.get(i))
        .collect())
}
