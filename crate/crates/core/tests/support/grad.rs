//! Central finite-difference checks for every layer and the full nets.

use intentnav::intention::Dlm;
use intentnav::neuralnet::{
    concat, concat_backward, mean_pool, mean_pool_backward, mse, relu, relu_backward, tanh, tanh_backward, Conv2d,
    IntentBatch, IntentionNet, Linear, NetConfig, NetKind, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const H: f64 = 1e-5;

/// Relative error with the denominator floored at 1e-6, so gradients that
/// are numerically zero compare by absolute error.
pub fn rel(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

pub fn rand_tensor(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
}

/// Central differences of `loss` with respect to each entry of `x`.
fn numeric(x: &Tensor<f64>, loss: impl Fn(&Tensor<f64>) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.clone();
            p.data[i] += H;
            let mut m = x.clone();
            m.data[i] -= H;
            (loss(&p) - loss(&m)) / (2.0 * H)
        })
        .collect()
}

fn assert_close(what: &str, analytic: &[f64], numeric: &[f64], tol: f64) {
    assert_eq!(analytic.len(), numeric.len());
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        assert!(rel(*a, *n) < tol, "{what}[{i}]: analytic {a} numeric {n}");
    }
}

pub fn conv_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (k, size) in [(3, 7), (5, 8), (3, 8)] {
        let conv = Conv2d::<f64>::new(2, 3, k, 2, &mut rng);
        let x = rand_tensor(&[2, 2, size, size], &mut rng);
        let (y, _) = conv.forward(&x);
        let r = rand_tensor(&y.shape, &mut rng);
        let mut c = conv.clone();
        let (_, cache) = c.forward(&x);
        let dx = c.backward(&cache, &r, true).unwrap();
        let nx = numeric(&x, |x| dot(&conv.forward(x).0, &r));
        assert_close("conv dx", &dx.data, &nx, 1e-4);
        let w = Tensor::from_vec(&[conv.w.len()], conv.w.clone());
        let nw = numeric(&w, |w| {
            let mut q = conv.clone();
            q.w = w.data.clone();
            dot(&q.forward(&x).0, &r)
        });
        assert_close("conv dw", &c.gw, &nw, 1e-4);
        let b = Tensor::from_vec(&[conv.b.len()], conv.b.clone());
        let nb = numeric(&b, |b| {
            let mut q = conv.clone();
            q.b = b.data.clone();
            dot(&q.forward(&x).0, &r)
        });
        assert_close("conv db", &c.gb, &nb, 1e-4);
    }
}

pub fn linear_and_one_hot_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lin = Linear::<f64>::new(5, 4, &mut rng);
    let x = rand_tensor(&[3, 5], &mut rng);
    let r = rand_tensor(&[3, 4], &mut rng);
    let mut l = lin.clone();
    let dx = l.backward(&x, &r, true).unwrap();
    assert_close("linear dx", &dx.data, &numeric(&x, |x| dot(&lin.forward(x), &r)), 1e-4);
    let w = Tensor::from_vec(&[20], lin.w.clone());
    let nw = numeric(&w, |w| {
        let mut q = lin.clone();
        q.w = w.data.clone();
        dot(&q.forward(&x), &r)
    });
    assert_close("linear dw", &l.gw, &nw, 1e-4);
    let b = Tensor::from_vec(&[4], lin.b.clone());
    let nb = numeric(&b, |b| {
        let mut q = lin.clone();
        q.b = b.data.clone();
        dot(&q.forward(&x), &r)
    });
    assert_close("linear db", &l.gb, &nb, 1e-4);

    // one-hot embedding equals the dense layer on one-hot rows
    let idx = [2usize, 0, 2];
    let emb = Linear::<f64>::new(4, 3, &mut rng);
    let r = rand_tensor(&[3, 3], &mut rng);
    let mut e = emb.clone();
    e.backward_one_hot(&idx, &r);
    let w = Tensor::from_vec(&[12], emb.w.clone());
    let nw = numeric(&w, |w| {
        let mut q = emb.clone();
        q.w = w.data.clone();
        dot(&q.forward_one_hot(&idx), &r)
    });
    assert_close("embed dw", &e.gw, &nw, 1e-4);
    let b = Tensor::from_vec(&[3], emb.b.clone());
    let nb = numeric(&b, |b| {
        let mut q = emb.clone();
        q.b = b.data.clone();
        dot(&q.forward_one_hot(&idx), &r)
    });
    assert_close("embed db", &e.gb, &nb, 1e-4);
    let mut dense = Vec::new();
    for &i in &idx {
        dense.extend((0..4).map(|k| if k == i { 1.0 } else { 0.0 }));
    }
    let dense = emb.forward(&Tensor::from_vec(&[3, 4], dense));
    let sparse = emb.forward_one_hot(&idx);
    for (a, b) in dense.data.iter().zip(&sparse.data) {
        assert!((a - b).abs() < 1e-15);
    }
}

pub fn elementwise_pool_concat_and_loss_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // keep ReLU inputs away from the kink
    let mut x = rand_tensor(&[2, 3, 4, 4], &mut rng);
    for v in &mut x.data {
        if v.abs() < 1e-3 {
            *v = 0.5;
        }
    }
    let r = rand_tensor(&x.shape, &mut rng);
    let y = relu(&x);
    assert_close(
        "relu",
        &relu_backward(&y, &r).data,
        &numeric(&x, |x| dot(&relu(x), &r)),
        1e-4,
    );
    let y = tanh(&x);
    assert_close(
        "tanh",
        &tanh_backward(&y, &r).data,
        &numeric(&x, |x| dot(&tanh(x), &r)),
        1e-4,
    );
    let rp = rand_tensor(&[2, 3], &mut rng);
    assert_close(
        "mean_pool",
        &mean_pool_backward(&x.shape, &rp).data,
        &numeric(&x, |x| dot(&mean_pool(x), &rp)),
        1e-4,
    );
    let a = rand_tensor(&[2, 3], &mut rng);
    let b = rand_tensor(&[2, 4], &mut rng);
    let rc = rand_tensor(&[2, 7], &mut rng);
    let (da, db) = concat_backward(&rc, 3);
    assert_close("concat a", &da.data, &numeric(&a, |a| dot(&concat(a, &b), &rc)), 1e-4);
    assert_close("concat b", &db.data, &numeric(&b, |b| dot(&concat(&a, b), &rc)), 1e-4);
    let t = rand_tensor(&[2, 7], &mut rng);
    let (_, g) = mse(&rc, &t);
    assert_close("mse", &g.data, &numeric(&rc, |y| mse(y, &t).0), 1e-4);
}

pub fn toy_two_parameter_net_gradient() {
    // y = tanh(w x + b), loss = mean (y - t)^2
    let mut l = Linear::<f64> {
        inp: 1,
        out: 1,
        w: vec![0.7],
        b: vec![-0.3],
        gw: vec![0.0],
        gb: vec![0.0],
    };
    let x = Tensor::from_vec(&[3, 1], vec![0.5, -1.2, 2.0]);
    let t = Tensor::from_vec(&[3, 1], vec![0.1, -0.4, 0.9]);
    let loss = |w: f64, b: f64| {
        (0..3)
            .map(|i| ((w * x.data[i] + b).tanh() - t.data[i]).powi(2))
            .sum::<f64>()
            / 3.0
    };
    let z = l.forward(&x);
    let y = tanh(&z);
    let (_, g) = mse(&y, &t);
    l.backward(&x, &tanh_backward(&y, &g), false);
    let nw = (loss(0.7 + H, -0.3) - loss(0.7 - H, -0.3)) / (2.0 * H);
    let nb = (loss(0.7, -0.3 + H) - loss(0.7, -0.3 - H)) / (2.0 * H);
    assert!(rel(l.gw[0], nw) < 1e-6, "{} vs {nw}", l.gw[0]);
    assert!(rel(l.gb[0], nb) < 1e-6, "{} vs {nb}", l.gb[0]);
}

pub fn tiny_cfg(seed: u64) -> NetConfig {
    NetConfig {
        in_channels: 3,
        channels: vec![4, 4, 6, 6],
        kernels: vec![5, 3, 3, 3],
        feature_dim: 10,
        embed_dim: 5,
        feature_relu: true,
        seed,
    }
}

fn net_loss(net: &IntentionNet<f64>, x: &Tensor<f64>, intent: &IntentBatch<f64>, t: &Tensor<f64>) -> f64 {
    let (y, _) = net.forward(x, intent).unwrap();
    mse(&y, t).0
}

pub fn full_net_check(kind: NetKind) {
    let mut rng = ChaCha8Rng::seed_from_u64(7 + kind.tag() as u64);
    let mut net = IntentionNet::<f64>::new(kind, &tiny_cfg(5)).unwrap();
    // nonzero biases so no ReLU sits exactly at its kink for all inputs
    for p in net.params_mut() {
        if !p.decay {
            for v in p.value.iter_mut() {
                *v = rng.gen_range(-0.1..0.1);
            }
        }
    }
    let x = rand_tensor(&[2, 3, 8, 8], &mut rng);
    let lpe = rand_tensor(&[2, 3, 8, 8], &mut rng);
    let labels = [Dlm::TurnLeft, Dlm::Stop];
    let intent = match kind {
        NetKind::Dlm => IntentBatch::Dlm(&labels),
        NetKind::Lpe => IntentBatch::Lpe(&lpe),
        NetKind::NonIntention => IntentBatch::None,
    };
    let t = rand_tensor(&[2, 2], &mut rng);
    net.zero_grad();
    let (y, cache) = net.forward(&x, &intent).unwrap();
    let (_, g) = mse(&y, &t);
    net.backward(&cache, &g);
    let grads: Vec<(String, Vec<f64>)> = net
        .params_mut()
        .iter()
        .map(|p| (p.name.clone(), p.grad.clone()))
        .collect();
    let mut checked = 0;
    for (pi, (name, grad)) in grads.iter().enumerate() {
        for j in 0..grad.len() {
            let orig = net.params_mut()[pi].value[j];
            net.params_mut()[pi].value[j] = orig + H;
            let lp = net_loss(&net, &x, &intent, &t);
            net.params_mut()[pi].value[j] = orig - H;
            let lm = net_loss(&net, &x, &intent, &t);
            net.params_mut()[pi].value[j] = orig;
            let n = (lp - lm) / (2.0 * H);
            assert!(
                rel(grad[j], n) < 1e-4,
                "{kind:?} {name}[{j}]: analytic {} numeric {n}",
                grad[j]
            );
            checked += 1;
        }
    }
    assert_eq!(checked, net.param_count());
}
