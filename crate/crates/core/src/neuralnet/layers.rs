use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::{gemm, Real, Tensor};

/// 2-D convolution over `(N, C, H, W)` tensors via im2col and gemm.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d<T> {
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    /// `cout x (cin * k * k)`
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub gw: Vec<T>,
    pub gb: Vec<T>,
}

pub struct ConvCache<T> {
    cols: Vec<T>,
    in_shape: [usize; 4],
    out_hw: (usize, usize),
}

impl<T: Real> Conv2d<T> {
    /// He-normal weights, zero bias. Padding keeps `ceil(H / stride)` outputs.
    pub fn new(cin: usize, cout: usize, k: usize, stride: usize, rng: &mut impl Rng) -> Self {
        let fan_in = cin * k * k;
        let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
        let w = (0..cout * fan_in).map(|_| T::of(dist.sample(rng))).collect();
        Self {
            cin,
            cout,
            k,
            stride,
            pad: k / 2,
            w,
            b: vec![T::zero(); cout],
            gw: vec![T::zero(); cout * fan_in],
            gb: vec![T::zero(); cout],
        }
    }

    pub fn out_size(&self, h: usize) -> usize {
        (h + 2 * self.pad - self.k) / self.stride + 1
    }

    fn im2col(&self, x: &[T], h: usize, w: usize, ho: usize, wo: usize, cols: &mut [T]) {
        let (k, s, p) = (self.k, self.stride, self.pad as isize);
        let plane = ho * wo;
        for c in 0..self.cin {
            let xc = &x[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst = &mut cols[row * plane..(row + 1) * plane];
                    for oh in 0..ho {
                        let ih = (oh * s) as isize + ki as isize - p;
                        let line = &mut dst[oh * wo..(oh + 1) * wo];
                        if ih < 0 || ih >= h as isize {
                            line.fill(T::zero());
                            continue;
                        }
                        let src = &xc[ih as usize * w..(ih as usize + 1) * w];
                        for (ow, v) in line.iter_mut().enumerate() {
                            let iw = (ow * s) as isize + kj as isize - p;
                            *v = if iw < 0 || iw >= w as isize {
                                T::zero()
                            } else {
                                src[iw as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[T], h: usize, w: usize, ho: usize, wo: usize, dx: &mut [T]) {
        let (k, s, p) = (self.k, self.stride, self.pad as isize);
        let plane = ho * wo;
        for c in 0..self.cin {
            let dxc = &mut dx[c * h * w..(c + 1) * h * w];
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src = &cols[row * plane..(row + 1) * plane];
                    for oh in 0..ho {
                        let ih = (oh * s) as isize + ki as isize - p;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        for ow in 0..wo {
                            let iw = (ow * s) as isize + kj as isize - p;
                            if iw >= 0 && iw < w as isize {
                                dxc[ih as usize * w + iw as usize] += src[oh * wo + ow];
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> (Tensor<T>, ConvCache<T>) {
        assert_eq!(x.shape.len(), 4, "conv input must be NCHW");
        let [n, c, h, w] = [x.shape[0], x.shape[1], x.shape[2], x.shape[3]];
        assert_eq!(c, self.cin, "conv expects {} channels, got {c}", self.cin);
        let (ho, wo) = (self.out_size(h), self.out_size(w));
        let kk = self.cin * self.k * self.k;
        let plane = ho * wo;
        let mut cols = vec![T::zero(); n * kk * plane];
        let mut y = vec![T::zero(); n * self.cout * plane];
        for i in 0..n {
            let col = &mut cols[i * kk * plane..(i + 1) * kk * plane];
            self.im2col(x.item(i), h, w, ho, wo, col);
            let yi = &mut y[i * self.cout * plane..(i + 1) * self.cout * plane];
            for (o, row) in yi.chunks_mut(plane).enumerate() {
                row.fill(self.b[o]);
            }
            gemm(false, false, self.cout, plane, kk, &self.w, col, T::one(), yi);
        }
        (
            Tensor::from_vec(&[n, self.cout, ho, wo], y),
            ConvCache {
                cols,
                in_shape: [n, c, h, w],
                out_hw: (ho, wo),
            },
        )
    }

    /// Accumulates parameter gradients; returns the input gradient if asked.
    pub fn backward(&mut self, cache: &ConvCache<T>, dy: &Tensor<T>, need_dx: bool) -> Option<Tensor<T>> {
        let [n, c, h, w] = cache.in_shape;
        let (ho, wo) = cache.out_hw;
        let plane = ho * wo;
        let kk = self.cin * self.k * self.k;
        let mut dx = need_dx.then(|| Tensor::zeros(&[n, c, h, w]));
        let mut dcols = vec![T::zero(); if need_dx { kk * plane } else { 0 }];
        for i in 0..n {
            let col = &cache.cols[i * kk * plane..(i + 1) * kk * plane];
            let dyi = dy.item(i);
            gemm(false, true, self.cout, kk, plane, dyi, col, T::one(), &mut self.gw);
            for (o, row) in dyi.chunks(plane).enumerate() {
                let mut s = T::zero();
                for &v in row {
                    s += v;
                }
                self.gb[o] += s;
            }
            if let Some(dx) = dx.as_mut() {
                gemm(true, false, kk, plane, self.cout, &self.w, dyi, T::zero(), &mut dcols);
                let len = c * h * w;
                self.col2im(&dcols, h, w, ho, wo, &mut dx.data[i * len..(i + 1) * len]);
            }
        }
        dx
    }
}

/// Fully connected layer over `(N, in)` tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub inp: usize,
    pub out: usize,
    /// `out x in`
    pub w: Vec<T>,
    pub b: Vec<T>,
    pub gw: Vec<T>,
    pub gb: Vec<T>,
}

impl<T: Real> Linear<T> {
    /// Glorot-uniform weights, zero bias.
    pub fn new(inp: usize, out: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (inp + out) as f64).sqrt();
        let w = (0..inp * out).map(|_| T::of(rng.gen_range(-a..a))).collect();
        Self {
            inp,
            out,
            w,
            b: vec![T::zero(); out],
            gw: vec![T::zero(); inp * out],
            gb: vec![T::zero(); out],
        }
    }

    pub fn forward(&self, x: &Tensor<T>) -> Tensor<T> {
        let n = x.batch();
        assert_eq!(x.item_len(), self.inp, "linear expects {} inputs", self.inp);
        let mut y = Vec::with_capacity(n * self.out);
        for _ in 0..n {
            y.extend_from_slice(&self.b);
        }
        gemm(false, true, n, self.out, self.inp, &x.data, &self.w, T::one(), &mut y);
        Tensor::from_vec(&[n, self.out], y)
    }

    pub fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>, need_dx: bool) -> Option<Tensor<T>> {
        let n = x.batch();
        gemm(
            true,
            false,
            self.out,
            self.inp,
            n,
            &dy.data,
            &x.data,
            T::one(),
            &mut self.gw,
        );
        for row in dy.data.chunks(self.out) {
            for (g, &d) in self.gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        need_dx.then(|| {
            let mut dx = vec![T::zero(); n * self.inp];
            gemm(
                false,
                false,
                n,
                self.inp,
                self.out,
                &dy.data,
                &self.w,
                T::zero(),
                &mut dx,
            );
            Tensor::from_vec(&x.shape, dx)
        })
    }

    /// Same layer applied to one-hot rows: picks weight columns.
    pub fn forward_one_hot(&self, idx: &[usize]) -> Tensor<T> {
        let mut y = Vec::with_capacity(idx.len() * self.out);
        for &i in idx {
            assert!(i < self.inp, "one-hot index {i} out of range");
            for o in 0..self.out {
                y.push(self.w[o * self.inp + i] + self.b[o]);
            }
        }
        Tensor::from_vec(&[idx.len(), self.out], y)
    }

    pub fn backward_one_hot(&mut self, idx: &[usize], dy: &Tensor<T>) {
        for (&i, row) in idx.iter().zip(dy.data.chunks(self.out)) {
            for (o, &d) in row.iter().enumerate() {
                self.gw[o * self.inp + i] += d;
                self.gb[o] += d;
            }
        }
    }
}

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    Tensor::from_vec(&x.shape, x.data.iter().map(|&v| v.max(T::zero())).collect())
}

/// Gradient through a ReLU given its output.
pub fn relu_backward<T: Real>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let data = y
        .data
        .iter()
        .zip(&dy.data)
        .map(|(&o, &d)| if o > T::zero() { d } else { T::zero() })
        .collect();
    Tensor::from_vec(&dy.shape, data)
}

pub fn tanh<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    Tensor::from_vec(&x.shape, x.data.iter().map(|v| v.tanh()).collect())
}

/// Gradient through tanh given its output.
pub fn tanh_backward<T: Real>(y: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let data = y
        .data
        .iter()
        .zip(&dy.data)
        .map(|(&o, &d)| d * (T::one() - o * o))
        .collect();
    Tensor::from_vec(&dy.shape, data)
}

/// `(N, C, H, W) -> (N, C)` spatial average.
pub fn mean_pool<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let (n, c) = (x.shape[0], x.shape[1]);
    let hw: usize = x.shape[2..].iter().product();
    let inv = T::of(1.0 / hw as f64);
    let data = x
        .data
        .chunks(hw)
        .map(|p| {
            let mut s = T::zero();
            for &v in p {
                s += v;
            }
            s * inv
        })
        .collect();
    Tensor::from_vec(&[n, c], data)
}

pub fn mean_pool_backward<T: Real>(in_shape: &[usize], dy: &Tensor<T>) -> Tensor<T> {
    let hw: usize = in_shape[2..].iter().product();
    let inv = T::of(1.0 / hw as f64);
    let mut data = Vec::with_capacity(dy.len() * hw);
    for &d in &dy.data {
        data.extend(std::iter::repeat(d * inv).take(hw));
    }
    Tensor::from_vec(in_shape, data)
}

/// Row-wise concatenation of two `(N, *)` tensors.
pub fn concat<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let n = a.batch();
    assert_eq!(n, b.batch(), "concat batch mismatch");
    let (p, q) = (a.item_len(), b.item_len());
    let mut data = Vec::with_capacity(n * (p + q));
    for i in 0..n {
        data.extend_from_slice(a.item(i));
        data.extend_from_slice(b.item(i));
    }
    Tensor::from_vec(&[n, p + q], data)
}

pub fn concat_backward<T: Real>(dy: &Tensor<T>, p: usize) -> (Tensor<T>, Tensor<T>) {
    let n = dy.batch();
    let q = dy.item_len() - p;
    let mut a = Vec::with_capacity(n * p);
    let mut b = Vec::with_capacity(n * q);
    for i in 0..n {
        let row = dy.item(i);
        a.extend_from_slice(&row[..p]);
        b.extend_from_slice(&row[p..]);
    }
    (Tensor::from_vec(&[n, p], a), Tensor::from_vec(&[n, q], b))
}

/// Mean of squared errors over all elements, and its gradient.
pub fn mse<T: Real>(y: &Tensor<T>, target: &Tensor<T>) -> (T, Tensor<T>) {
    assert_eq!(y.shape, target.shape, "mse shape mismatch");
    let inv = T::of(1.0 / y.len() as f64);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(y.len());
    for (&a, &b) in y.data.iter().zip(&target.data) {
        let d = a - b;
        loss += d * d;
        grad.push(T::of(2.0) * d * inv);
    }
    (loss * inv, Tensor::from_vec(&y.shape, grad))
}
