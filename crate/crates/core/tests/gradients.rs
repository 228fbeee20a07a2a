//! Finite-difference checks of every backward pass.

mod common;

use common::{central_difference, relative_error, TestRng};
use spectral_forge::nn::{
    build_fishcnn, dropout_forward, huber_loss, relu_backward, relu_forward, Conv1d, ConvBackend, Dense, Mode,
    Network, Padding,
};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const PROBES: usize = 24;

/// Compares `analytic[i]` against a central difference of `loss` for
/// `PROBES` random coordinates of `x`.
fn check(label: &str, loss: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64], rng: &mut TestRng) {
    assert_eq!(x.len(), analytic.len(), "{label}: gradient length");
    let mut worst = 0.0f64;
    for _ in 0..PROBES {
        let i = rng.below(x.len());
        let numeric = central_difference(loss, x, i, H);
        let err = relative_error(analytic[i], numeric);
        assert!(
            err <= TOL,
            "{label}[{i}]: analytic {} numeric {numeric} rel err {err:.3e}",
            analytic[i]
        );
        worst = worst.max(err);
    }
    eprintln!("{label}: worst rel err {worst:.2e}");
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conv_case(backend: ConvBackend, kernel: usize, stride: usize, padding: Padding, seed: u64) {
    let (cin, cout, len, batch) = (3, 4, 40, 2);
    let conv = Conv1d::with_backend(cin, cout, kernel, stride, padding, len, backend).unwrap();
    let mut rng = TestRng::new(seed);
    let x = rng.vec(batch * cin * len);
    let w = rng.vec(conv.weight_len());
    let b = rng.vec(cout);
    let probe = rng.vec(batch * cout * conv.out_len);

    let (_, cache) = conv.forward(&x, batch, &w, &b).unwrap();
    let grads = conv.backward(&cache, &probe, &w, true).unwrap();
    let label = format!("conv {backend:?} k{kernel} s{stride} {padding:?}");

    check(
        &format!("{label} input"),
        &mut |xp| dot(&conv.forward(xp, batch, &w, &b).unwrap().0, &probe),
        &x,
        grads.input.as_ref().unwrap(),
        &mut rng,
    );
    check(
        &format!("{label} weight"),
        &mut |wp| dot(&conv.forward(&x, batch, wp, &b).unwrap().0, &probe),
        &w,
        &grads.weight,
        &mut rng,
    );
    check(
        &format!("{label} bias"),
        &mut |bp| dot(&conv.forward(&x, batch, &w, bp).unwrap().0, &probe),
        &b,
        &grads.bias,
        &mut rng,
    );
}

#[test]
fn conv_direct_gradients() {
    conv_case(ConvBackend::Direct, 5, 1, Padding::Same, 1);
    conv_case(ConvBackend::Direct, 4, 1, Padding::Same, 2);
    conv_case(ConvBackend::Direct, 5, 2, Padding::None, 3);
}

#[test]
fn conv_fft_gradients() {
    conv_case(ConvBackend::Fft, 16, 1, Padding::Same, 4);
    conv_case(ConvBackend::Fft, 21, 1, Padding::None, 5);
    conv_case(ConvBackend::Fft, 5, 1, Padding::Same, 6);
}

#[test]
fn dense_gradients() {
    let (din, dout, batch) = (17, 6, 3);
    let dense = Dense::new(din, dout).unwrap();
    let mut rng = TestRng::new(7);
    let x = rng.vec(batch * din);
    let w = rng.vec(dense.weight_len());
    let b = rng.vec(dout);
    let probe = rng.vec(batch * dout);
    let grads = dense.backward(&x, batch, &probe, &w, true).unwrap();

    check("dense input", &mut |xp| dot(&dense.forward(xp, batch, &w, &b).unwrap(), &probe), &x, grads.input.as_ref().unwrap(), &mut rng);
    check("dense weight", &mut |wp| dot(&dense.forward(&x, batch, wp, &b).unwrap(), &probe), &w, &grads.weight, &mut rng);
    check("dense bias", &mut |bp| dot(&dense.forward(&x, batch, &w, bp).unwrap(), &probe), &b, &grads.bias, &mut rng);
}

#[test]
fn relu_gradient() {
    let mut rng = TestRng::new(8);
    // keep inputs away from the kink so the difference quotient is smooth
    let x: Vec<f64> = rng.vec(200).into_iter().map(|v| if v.abs() < 0.01 { 0.5 } else { v }).collect();
    let probe = rng.vec(x.len());
    let analytic = relu_backward(&x, &probe);
    check("relu", &mut |xp| dot(&relu_forward(xp), &probe), &x, &analytic, &mut rng);
}

#[test]
fn dropout_gradient() {
    let mut rng = TestRng::new(9);
    let x = rng.vec(300);
    let probe = rng.vec(x.len());
    let (_, mask) = dropout_forward(&x, 0.3, Mode::Train, 99);
    let mask = mask.unwrap();
    let analytic: Vec<f64> = probe.iter().zip(&mask).map(|(g, m)| g * m).collect();
    check(
        "dropout",
        &mut |xp| dot(&dropout_forward(xp, 0.3, Mode::Train, 99).0, &probe),
        &x,
        &analytic,
        &mut rng,
    );
}

#[test]
fn huber_gradient_in_both_regimes() {
    let mut rng = TestRng::new(10);
    let pred: Vec<f64> = rng.vec(60).into_iter().map(|v| 3.0 * v).collect();
    let target = rng.vec(60);
    // shift residuals that sit too close to ±delta
    let pred: Vec<f64> = pred
        .iter()
        .zip(&target)
        .map(|(p, t)| if ((p - t).abs() - 1.0).abs() < 0.01 { p + 0.1 } else { *p })
        .collect();
    let (_, analytic) = huber_loss(&pred, &target, 1.0).unwrap();
    let n_linear = pred.iter().zip(&target).filter(|(p, t)| (*p - *t).abs() > 1.0).count();
    assert!(n_linear > 0 && n_linear < pred.len(), "both regimes exercised");
    check("huber", &mut |pp| huber_loss(pp, &target, 1.0).unwrap().0, &pred, &analytic, &mut rng);
}

#[test]
fn fishcnn_end_to_end_gradients() {
    let spec = build_fishcnn(64).unwrap();
    let net = Network::new(&spec).unwrap();
    let mut state = net.init(2024);
    let mut rng = TestRng::new(11);
    // non-zero biases so no unit sits exactly at a kink
    for (g, p) in state.params.iter_mut().enumerate() {
        if g % 2 == 1 {
            p.iter_mut().for_each(|v| *v = 0.05 * rng.symmetric());
        }
    }
    let batch = 2;
    let x = rng.vec(batch * 64);
    let target = rng.vec(batch * 3);
    let seed = 5;

    let loss_with = |state: &spectral_forge::nn::ModelState| {
        let pass = net.forward(state, &x, batch, Mode::Train, seed).unwrap();
        huber_loss(pass.output(), &target, 1.0).unwrap().0
    };
    let pass = net.forward(&state, &x, batch, Mode::Train, seed).unwrap();
    let (_, upstream) = huber_loss(pass.output(), &target, 1.0).unwrap();
    net.backward(&mut state, pass, &upstream).unwrap();

    let mut probes = 0;
    for group in 0..state.params.len() {
        let base = state.clone();
        let analytic = state.grads[group].clone();
        check(
            &format!("fishcnn group {group}"),
            &mut |values| {
                let mut s = base.clone();
                s.params[group] = values.to_vec();
                loss_with(&s)
            },
            &base.params[group],
            &analytic,
            &mut rng,
        );
        probes += PROBES;
    }
    assert!(probes >= 20);
}
