use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::DatasetPool;
use crate::intention::Dlm;

use super::layers::mse;
use super::net::{images_to_tensor, lpe_to_tensor, IntentBatch, IntentionNet, NetKind};
use super::optim::{lr_at, RmsProp};
use super::tensor::{Real, Tensor};
use super::NetError;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    /// Weight-decay coefficient on `|w|^2` (weights only).
    pub l2: f64,
    pub batch: usize,
    /// Draws per epoch, uniform with replacement from the train partition.
    pub epoch_samples: usize,
    pub epochs: usize,
    pub rho: f64,
    pub eps: f64,
    /// Cap on eval samples scored per epoch; 0 scores the whole partition.
    pub eval_max: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-4,
            l2: 1e-4,
            batch: 8,
            epoch_samples: 20_000,
            epochs: 6,
            rho: 0.9,
            eps: 1e-8,
            eval_max: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.lr0 > 0.0 && self.l2 >= 0.0 && self.eps > 0.0 && (0.0..1.0).contains(&self.rho)) {
            return Err(NetError::Config("need lr0 > 0, l2 >= 0, eps > 0, 0 <= rho < 1".into()));
        }
        if self.batch == 0 {
            return Err(NetError::Config("batch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    pub eval_mse: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochLog>,
    /// Minibatch sizes in the order they were applied.
    pub batch_sizes: Vec<usize>,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_mse,eval_mse,lr\n");
        for e in &self.history {
            let _ = writeln!(s, "{},{},{},{}", e.epoch, e.train_mse, e.eval_mse, e.lr);
        }
        s
    }
}

/// Owned intention input for a batch.
pub enum BatchIntent<T> {
    Dlm(Vec<Dlm>),
    Lpe(Tensor<T>),
    None,
}

impl<T> BatchIntent<T> {
    pub fn as_batch(&self) -> IntentBatch<'_, T> {
        match self {
            BatchIntent::Dlm(l) => IntentBatch::Dlm(l),
            BatchIntent::Lpe(t) => IntentBatch::Lpe(t),
            BatchIntent::None => IntentBatch::None,
        }
    }
}

/// Observation tensor, intention input and `(N, 2)` control targets for the
/// pool samples `idx`.
pub fn batch_inputs<T: Real>(
    pool: &DatasetPool,
    idx: &[usize],
    kind: NetKind,
) -> (Tensor<T>, BatchIntent<T>, Tensor<T>) {
    let imgs: Vec<&[u8]> = idx.iter().map(|&i| pool.get(i).obs.as_slice()).collect();
    let obs = images_to_tensor(&imgs, pool.obs_h, pool.obs_w);
    let intent = match kind {
        NetKind::Dlm => BatchIntent::Dlm(idx.iter().map(|&i| pool.get(i).dlm).collect()),
        NetKind::Lpe => {
            let r: Vec<&[u8]> = idx.iter().map(|&i| pool.get(i).lpe.indices.as_slice()).collect();
            BatchIntent::Lpe(lpe_to_tensor(&r, pool.lpe_size))
        }
        NetKind::NonIntention => BatchIntent::None,
    };
    let mut t = Vec::with_capacity(idx.len() * 2);
    for &i in idx {
        let s = pool.get(i);
        t.push(T::of(s.v as f64));
        t.push(T::of(s.steer as f64));
    }
    (obs, intent, Tensor::from_vec(&[idx.len(), 2], t))
}

/// Mean squared control error over the samples `idx` (per output component).
pub fn evaluate<T: Real>(
    net: &IntentionNet<T>,
    pool: &DatasetPool,
    idx: &[usize],
    batch: usize,
) -> Result<f64, NetError> {
    if idx.is_empty() {
        return Ok(f64::NAN);
    }
    let mut sum = 0.0;
    for chunk in idx.chunks(batch.max(1)) {
        let (x, it, t) = batch_inputs::<T>(pool, chunk, net.kind);
        let (y, _) = net.forward(&x, &it.as_batch())?;
        let (l, _) = mse(&y, &t);
        sum += l.as_f64() * chunk.len() as f64;
    }
    Ok(sum / idx.len() as f64)
}

/// Trains `net` on the pool's train partition: each epoch draws
/// `epoch_samples` indices uniformly with replacement, applies RMSprop per
/// minibatch with learning rate `lr0 / (1 + epoch)`, then scores the eval
/// partition.
pub fn train<T: Real>(
    net: &mut IntentionNet<T>,
    pool: &DatasetPool,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainReport, NetError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = RmsProp::<T>::new(cfg.rho, cfg.eps);
    let mut eval_idx = pool.eval_indices();
    if cfg.eval_max > 0 && eval_idx.len() > cfg.eval_max {
        // deterministic stride subsample
        let step = eval_idx.len() as f64 / cfg.eval_max as f64;
        eval_idx = (0..cfg.eval_max)
            .map(|k| eval_idx[(k as f64 * step) as usize])
            .collect();
    }
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        let lr = lr_at(cfg.lr0, epoch);
        let draws = pool
            .draw_indices(cfg.epoch_samples, &mut rng)
            .map_err(|e| NetError::Data(e.to_string()))?;
        let mut sum = 0.0;
        for chunk in draws.chunks(cfg.batch) {
            let (x, it, t) = batch_inputs::<T>(pool, chunk, net.kind);
            net.zero_grad();
            let (y, cache) = net.forward(&x, &it.as_batch())?;
            let (l, g) = mse(&y, &t);
            let l = l.as_f64();
            if !l.is_finite() {
                return Err(NetError::Diverged { epoch, loss: l });
            }
            sum += l * chunk.len() as f64;
            net.backward(&cache, &g);
            opt.step(net, lr, cfg.l2);
            report.batch_sizes.push(chunk.len());
        }
        let train_mse = if draws.is_empty() {
            f64::NAN
        } else {
            sum / draws.len() as f64
        };
        let eval_mse = evaluate(net, pool, &eval_idx, 32)?;
        let log = EpochLog {
            epoch,
            train_mse,
            eval_mse,
            lr,
        };
        log::info!("epoch {epoch}: train {train_mse:.5} eval {eval_mse:.5} lr {lr:e}");
        on_epoch(&log);
        report.history.push(log);
    }
    Ok(report)
}
