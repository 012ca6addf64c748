use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    concat, concat_backward, mean_pool, mean_pool_backward, relu, relu_backward, tanh, tanh_backward, Conv2d,
    ConvCache, Linear,
};
use super::tensor::{Real, Tensor};
use super::NetError;
use crate::intention::{Dlm, PALETTE};
use crate::world::Control;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NetKind {
    Dlm,
    Lpe,
    NonIntention,
}

impl NetKind {
    pub fn tag(self) -> u8 {
        match self {
            NetKind::Dlm => 1,
            NetKind::Lpe => 2,
            NetKind::NonIntention => 3,
        }
    }

    pub fn from_tag(t: u8) -> Option<Self> {
        match t {
            1 => Some(NetKind::Dlm),
            2 => Some(NetKind::Lpe),
            3 => Some(NetKind::NonIntention),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NetKind::Dlm => "dlm",
            NetKind::Lpe => "lpe",
            NetKind::NonIntention => "nointent",
        }
    }
}

impl std::str::FromStr for NetKind {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, NetError> {
        match s {
            "dlm" => Ok(NetKind::Dlm),
            "lpe" => Ok(NetKind::Lpe),
            "nointent" => Ok(NetKind::NonIntention),
            _ => Err(NetError::Config(format!("unknown net kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub in_channels: usize,
    /// Output channels of each stride-2 conv.
    pub channels: Vec<usize>,
    pub kernels: Vec<usize>,
    pub feature_dim: usize,
    pub embed_dim: usize,
    /// ReLU on the feature vector.
    pub feature_relu: bool,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            in_channels: 3,
            channels: vec![16, 32, 64, 64],
            kernels: vec![5, 3, 3, 3],
            feature_dim: 128,
            embed_dim: 64,
            feature_relu: true,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.channels.is_empty() || self.channels.len() != self.kernels.len() {
            return Err(NetError::Config("need one kernel size per conv layer".into()));
        }
        if self.channels.iter().chain(&self.kernels).any(|&c| c == 0) || self.in_channels == 0 {
            return Err(NetError::Config(
                "channel counts and kernel sizes must be positive".into(),
            ));
        }
        if !(self.feature_dim > self.embed_dim && self.embed_dim > 0) {
            return Err(NetError::Config(format!(
                "need feature_dim > embed_dim > 0, got {} / {}",
                self.feature_dim, self.embed_dim
            )));
        }
        Ok(())
    }
}

/// Mutable view of one parameter tensor and its gradient.
pub struct ParamMut<'a, T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: &'a mut Vec<T>,
    pub grad: &'a mut Vec<T>,
    /// Weights take L2 decay, biases do not.
    pub decay: bool,
}

/// Strided conv stack, global mean pool and a linear feature layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder<T> {
    pub convs: Vec<Conv2d<T>>,
    pub fc: Linear<T>,
    pub feature_relu: bool,
}

pub struct EncoderCache<T> {
    convs: Vec<ConvCache<T>>,
    acts: Vec<Tensor<T>>,
    pooled: Tensor<T>,
    feat: Tensor<T>,
}

impl<T: Real> Encoder<T> {
    pub fn new(cfg: &NetConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut cin = cfg.in_channels;
        let mut convs = Vec::new();
        for (&c, &k) in cfg.channels.iter().zip(&cfg.kernels) {
            convs.push(Conv2d::new(cin, c, k, 2, rng));
            cin = c;
        }
        Self {
            convs,
            fc: Linear::new(cin, cfg.feature_dim, rng),
            feature_relu: cfg.feature_relu,
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> (Tensor<T>, EncoderCache<T>) {
        let mut caches = Vec::with_capacity(self.convs.len());
        let mut acts = Vec::with_capacity(self.convs.len());
        let mut h = x.clone();
        for conv in &self.convs {
            let (y, c) = conv.forward(&h);
            caches.push(c);
            h = relu(&y);
            acts.push(h.clone());
        }
        let pooled = mean_pool(&h);
        let mut feat = self.fc.forward(&pooled);
        if self.feature_relu {
            feat = relu(&feat);
        }
        (
            feat.clone(),
            EncoderCache {
                convs: caches,
                acts,
                pooled,
                feat,
            },
        )
    }

    pub fn backward(&mut self, cache: &EncoderCache<T>, dfeat: &Tensor<T>) {
        let dfeat = if self.feature_relu {
            relu_backward(&cache.feat, dfeat)
        } else {
            dfeat.clone()
        };
        let dpool = self.fc.backward(&cache.pooled, &dfeat, true).unwrap();
        let mut dh = mean_pool_backward(&cache.acts.last().unwrap().shape, &dpool);
        for l in (0..self.convs.len()).rev() {
            let dy = relu_backward(&cache.acts[l], &dh);
            match self.convs[l].backward(&cache.convs[l], &dy, l > 0) {
                Some(dx) => dh = dx,
                None => break,
            }
        }
    }

    fn params_mut(&mut self, prefix: &str) -> Vec<ParamMut<'_, T>> {
        let mut out = Vec::new();
        for (i, c) in self.convs.iter_mut().enumerate() {
            let ws = vec![c.cout, c.cin, c.k, c.k];
            out.push(ParamMut {
                name: format!("{prefix}.conv{i}.w"),
                shape: ws,
                value: &mut c.w,
                grad: &mut c.gw,
                decay: true,
            });
            out.push(ParamMut {
                name: format!("{prefix}.conv{i}.b"),
                shape: vec![c.cout],
                value: &mut c.b,
                grad: &mut c.gb,
                decay: false,
            });
        }
        out.extend(linear_params(&mut self.fc, &format!("{prefix}.fc")));
        out
    }
}

fn linear_params<'a, T>(l: &'a mut Linear<T>, prefix: &str) -> Vec<ParamMut<'a, T>> {
    vec![
        ParamMut {
            name: format!("{prefix}.w"),
            shape: vec![l.out, l.inp],
            value: &mut l.w,
            grad: &mut l.gw,
            decay: true,
        },
        ParamMut {
            name: format!("{prefix}.b"),
            shape: vec![l.out],
            value: &mut l.b,
            grad: &mut l.gb,
            decay: false,
        },
    ]
}

/// Per-batch intention input matching the net kind.
pub enum IntentBatch<'a, T> {
    Dlm(&'a [Dlm]),
    /// `(N, 3, S, S)` rendered LPE images.
    Lpe(&'a Tensor<T>),
    None,
}

pub struct NetCache<T> {
    enc_x: EncoderCache<T>,
    enc_i: Option<EncoderCache<T>>,
    labels: Vec<usize>,
    head_in: Tensor<T>,
    out_full: Tensor<T>,
}

impl<T> NetCache<T> {
    /// Input of the output layer: the visual feature followed by the
    /// intention feature (if any).
    pub fn head_input(&self) -> &Tensor<T> {
        &self.head_in
    }
}

/// Intention-conditioned controller net (or its no-intention ablation).
#[derive(Clone, Debug, PartialEq)]
pub struct IntentionNet<T> {
    pub kind: NetKind,
    pub cfg: NetConfig,
    pub encoder: Encoder<T>,
    pub embed: Option<Linear<T>>,
    pub head: Linear<T>,
}

impl<T: Real> IntentionNet<T> {
    pub fn new(kind: NetKind, cfg: &NetConfig) -> Result<Self, NetError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let encoder = Encoder::new(cfg, &mut rng);
        let f = cfg.feature_dim;
        let (embed, head) = match kind {
            NetKind::Dlm => (
                Some(Linear::new(4, cfg.embed_dim, &mut rng)),
                Linear::new(f + cfg.embed_dim, 8, &mut rng),
            ),
            NetKind::Lpe => (None, Linear::new(2 * f, 2, &mut rng)),
            NetKind::NonIntention => (None, Linear::new(f, 2, &mut rng)),
        };
        Ok(Self {
            kind,
            cfg: cfg.clone(),
            encoder,
            embed,
            head,
        })
    }

    fn check_image(&self, x: &Tensor<T>, what: &str) -> Result<(), NetError> {
        if x.shape.len() != 4 || x.shape[1] != self.cfg.in_channels || x.shape[2] == 0 || x.shape[3] == 0 {
            return Err(NetError::Shape(format!(
                "{what} must be (N, {}, H, W), got {:?}",
                self.cfg.in_channels, x.shape
            )));
        }
        Ok(())
    }

    /// Batched forward pass; returns `(N, 2)` outputs in `[-1, 1]`.
    pub fn forward(&self, obs: &Tensor<T>, intent: &IntentBatch<T>) -> Result<(Tensor<T>, NetCache<T>), NetError> {
        self.check_image(obs, "observation")?;
        let n = obs.batch();
        let (feat_x, enc_x) = self.encoder.forward(obs);
        let mut enc_i = None;
        let mut labels = Vec::new();
        let head_in = match (self.kind, intent) {
            (NetKind::Dlm, IntentBatch::Dlm(l)) => {
                if l.len() != n {
                    return Err(NetError::Shape(format!("{} labels for batch of {n}", l.len())));
                }
                labels = l.iter().map(|d| d.index()).collect();
                let emb = self.embed.as_ref().unwrap().forward_one_hot(&labels);
                concat(&feat_x, &emb)
            }
            (NetKind::Lpe, IntentBatch::Lpe(img)) => {
                self.check_image(img, "intention image")?;
                if img.batch() != n {
                    return Err(NetError::Shape(format!(
                        "{} intention images for batch of {n}",
                        img.batch()
                    )));
                }
                let (feat_i, c) = self.encoder.forward(img);
                enc_i = Some(c);
                concat(&feat_x, &feat_i)
            }
            (NetKind::NonIntention, IntentBatch::None) => feat_x,
            _ => {
                return Err(NetError::Shape(format!(
                    "intention input does not match a {:?} net",
                    self.kind
                )))
            }
        };
        let out_full = tanh(&self.head.forward(&head_in));
        let out = if self.kind == NetKind::Dlm {
            let mut d = Vec::with_capacity(2 * n);
            for (i, &l) in labels.iter().enumerate() {
                d.extend_from_slice(&out_full.item(i)[2 * l..2 * l + 2]);
            }
            Tensor::from_vec(&[n, 2], d)
        } else {
            out_full.clone()
        };
        Ok((
            out,
            NetCache {
                enc_x,
                enc_i,
                labels,
                head_in,
                out_full,
            },
        ))
    }

    /// Accumulates gradients of a loss whose gradient w.r.t. the `(N, 2)`
    /// output is `dout`.
    pub fn backward(&mut self, cache: &NetCache<T>, dout: &Tensor<T>) {
        let n = dout.batch();
        let dfull = if self.kind == NetKind::Dlm {
            let mut d = Tensor::zeros(&[n, 8]);
            for (i, &l) in cache.labels.iter().enumerate() {
                d.data[i * 8 + 2 * l] = dout.data[2 * i];
                d.data[i * 8 + 2 * l + 1] = dout.data[2 * i + 1];
            }
            d
        } else {
            dout.clone()
        };
        let dz = tanh_backward(&cache.out_full, &dfull);
        let dhead_in = self.head.backward(&cache.head_in, &dz, true).unwrap();
        let f = self.cfg.feature_dim;
        match self.kind {
            NetKind::Dlm => {
                let (dfx, demb) = concat_backward(&dhead_in, f);
                self.embed.as_mut().unwrap().backward_one_hot(&cache.labels, &demb);
                self.encoder.backward(&cache.enc_x, &dfx);
            }
            NetKind::Lpe => {
                let (dfx, dfi) = concat_backward(&dhead_in, f);
                self.encoder.backward(&cache.enc_x, &dfx);
                self.encoder.backward(cache.enc_i.as_ref().unwrap(), &dfi);
            }
            NetKind::NonIntention => self.encoder.backward(&cache.enc_x, &dhead_in),
        }
    }

    /// Single-sample inference.
    pub fn predict(&self, obs: &Tensor<T>, intent: &IntentBatch<T>) -> Result<Control, NetError> {
        let (y, _) = self.forward(obs, intent)?;
        Ok(Control::new(y.data[0].as_f64(), y.data[1].as_f64()))
    }

    /// Parameters in a fixed order (checkpoint and optimizer order).
    pub fn params_mut(&mut self) -> Vec<ParamMut<'_, T>> {
        let mut out = self.encoder.params_mut("enc");
        if let Some(e) = self.embed.as_mut() {
            out.extend(linear_params(e, "embed"));
        }
        out.extend(linear_params(&mut self.head, "head"));
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(T::zero());
        }
    }

    pub fn param_count(&mut self) -> usize {
        self.params_mut().iter().map(|p| p.value.len()).sum()
    }

    /// Sum of squared decayed weights.
    pub fn weight_sq_norm(&mut self) -> f64 {
        self.params_mut()
            .iter()
            .filter(|p| p.decay)
            .flat_map(|p| p.value.iter())
            .map(|v| v.as_f64().powi(2))
            .sum()
    }

    pub fn cast<U: Real>(&self) -> IntentionNet<U> {
        let conv = |c: &Conv2d<T>| Conv2d {
            cin: c.cin,
            cout: c.cout,
            k: c.k,
            stride: c.stride,
            pad: c.pad,
            w: cast_vec(&c.w),
            b: cast_vec(&c.b),
            gw: cast_vec(&c.gw),
            gb: cast_vec(&c.gb),
        };
        let lin = |l: &Linear<T>| Linear {
            inp: l.inp,
            out: l.out,
            w: cast_vec(&l.w),
            b: cast_vec(&l.b),
            gw: cast_vec(&l.gw),
            gb: cast_vec(&l.gb),
        };
        IntentionNet {
            kind: self.kind,
            cfg: self.cfg.clone(),
            encoder: Encoder {
                convs: self.encoder.convs.iter().map(conv).collect(),
                fc: lin(&self.encoder.fc),
                feature_relu: self.encoder.feature_relu,
            },
            embed: self.embed.as_ref().map(lin),
            head: lin(&self.head),
        }
    }
}

fn cast_vec<T: Real, U: Real>(v: &[T]) -> Vec<U> {
    v.iter().map(|&x| U::of(x.as_f64())).collect()
}

fn normalize<T: Real>(b: u8) -> T {
    T::of(b as f64 / 255.0 - 0.5)
}

/// Stacks HWC byte images into a normalized `(N, 3, H, W)` tensor.
pub fn images_to_tensor<T: Real>(images: &[&[u8]], h: usize, w: usize) -> Tensor<T> {
    let plane = h * w;
    let mut data = vec![T::zero(); images.len() * 3 * plane];
    for (n, img) in images.iter().enumerate() {
        assert_eq!(img.len(), 3 * plane, "image size mismatch");
        let dst = &mut data[n * 3 * plane..(n + 1) * 3 * plane];
        for p in 0..plane {
            for c in 0..3 {
                dst[c * plane + p] = normalize(img[p * 3 + c]);
            }
        }
    }
    Tensor::from_vec(&[images.len(), 3, h, w], data)
}

/// Stacks LPE palette-index rasters into a normalized `(N, 3, S, S)` tensor.
pub fn lpe_to_tensor<T: Real>(rasters: &[&[u8]], s: usize) -> Tensor<T> {
    let plane = s * s;
    let mut data = vec![T::zero(); rasters.len() * 3 * plane];
    for (n, r) in rasters.iter().enumerate() {
        assert_eq!(r.len(), plane, "raster size mismatch");
        let dst = &mut data[n * 3 * plane..(n + 1) * 3 * plane];
        for (p, &idx) in r.iter().enumerate() {
            let rgb = PALETTE[idx as usize];
            for c in 0..3 {
                dst[c * plane + p] = normalize(rgb[c]);
            }
        }
    }
    Tensor::from_vec(&[rasters.len(), 3, s, s], data)
}
