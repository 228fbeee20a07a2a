//! 1-D convolution (cross-correlation) with zero padding.
//!
//! Two interchangeable backends compute the same function:
//!
//! * `Direct` – explicit loops over output positions, any stride.
//! * `Fft` – stride-1 only; correlations are evaluated as products of real
//!   FFTs of length `n ≥ in_len + kernel − 1`, which rules out circular
//!   wrap-around for the forward pass and both gradients.

use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernels at least this wide use the FFT backend when the stride is 1.
pub const FFT_MIN_KERNEL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Output length `ceil(len / stride)`; for stride 1 the length is preserved.
    Same,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvBackend {
    Direct,
    Fft,
}

struct FftEngine {
    n: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

/// Reusable buffers for one sequence of transforms.
struct FftScratch {
    time: Vec<f64>,
    spec: Vec<Complex<f64>>,
    work: Vec<Complex<f64>>,
}

impl FftEngine {
    fn new(n: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    fn scratch(&self) -> FftScratch {
        let work = self.forward.get_scratch_len().max(self.inverse.get_scratch_len());
        FftScratch {
            time: vec![0.0; self.n],
            spec: vec![Complex::new(0.0, 0.0); self.bins()],
            work: vec![Complex::new(0.0, 0.0); work],
        }
    }

    /// Spectrum of `signal` zero-padded to `n`, split into real and
    /// imaginary parts.
    fn rfft(&self, signal: &[f64], s: &mut FftScratch, re: &mut [f64], im: &mut [f64]) {
        s.time[..signal.len()].copy_from_slice(signal);
        s.time[signal.len()..].fill(0.0);
        self.forward
            .process_with_scratch(&mut s.time, &mut s.spec, &mut s.work)
            .expect("fft lengths match");
        for ((r, i), c) in re.iter_mut().zip(im.iter_mut()).zip(&s.spec) {
            *r = c.re;
            *i = c.im;
        }
    }

    /// Unnormalised inverse transform into `s.time`.
    fn irfft(&self, re: &[f64], im: &[f64], s: &mut FftScratch) {
        for ((c, &r), &i) in s.spec.iter_mut().zip(re).zip(im) {
            *c = Complex::new(r, i);
        }
        s.spec[0].im = 0.0;
        if self.n % 2 == 0 {
            s.spec[self.n / 2].im = 0.0;
        }
        self.inverse
            .process_with_scratch(&mut s.spec, &mut s.time, &mut s.work)
            .expect("fft lengths match");
    }
}

/// Complex spectra stored as separate real and imaginary planes of `bins`
/// values per signal.
struct Spectra {
    bins: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Spectra {
    fn zeros(count: usize, bins: usize) -> Self {
        Self {
            bins,
            re: vec![0.0; count * bins],
            im: vec![0.0; count * bins],
        }
    }

    fn get(&self, i: usize) -> Planes<'_> {
        let r = i * self.bins..(i + 1) * self.bins;
        (&self.re[r.clone()], &self.im[r])
    }

    fn get_mut(&mut self, i: usize) -> (&mut [f64], &mut [f64]) {
        let r = i * self.bins..(i + 1) * self.bins;
        (&mut self.re[r.clone()], &mut self.im[r])
    }
}

type Planes<'a> = (&'a [f64], &'a [f64]);

/// `acc += x · conj(w)`, element-wise.
#[inline(always)]
fn mac_conj_body(ar: &mut [f64], ai: &mut [f64], (xr, xi): Planes<'_>, (wr, wi): Planes<'_>) {
    let n = ar.len();
    let (ai, xr, xi, wr, wi) = (&mut ai[..n], &xr[..n], &xi[..n], &wr[..n], &wi[..n]);
    for f in 0..n {
        ar[f] += xr[f] * wr[f] + xi[f] * wi[f];
        ai[f] += xi[f] * wr[f] - xr[f] * wi[f];
    }
}

/// `acc += x · w`, element-wise.
#[inline(always)]
fn mac_body(ar: &mut [f64], ai: &mut [f64], (xr, xi): Planes<'_>, (wr, wi): Planes<'_>) {
    let n = ar.len();
    let (ai, xr, xi, wr, wi) = (&mut ai[..n], &xr[..n], &xi[..n], &wr[..n], &wi[..n]);
    for f in 0..n {
        ar[f] += xr[f] * wr[f] - xi[f] * wi[f];
        ai[f] += xr[f] * wi[f] + xi[f] * wr[f];
    }
}

// The same loops compiled for wider vectors. Rust never contracts `a·b + c`
// into a fused multiply-add on its own, so both paths round identically.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn mac_conj_avx2(ar: &mut [f64], ai: &mut [f64], x: Planes<'_>, w: Planes<'_>) {
    mac_conj_body(ar, ai, x, w)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn mac_avx2(ar: &mut [f64], ai: &mut [f64], x: Planes<'_>, w: Planes<'_>) {
    mac_body(ar, ai, x, w)
}

fn mac_conj(ar: &mut [f64], ai: &mut [f64], x: Planes<'_>, w: Planes<'_>) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        return unsafe { mac_conj_avx2(ar, ai, x, w) };
    }
    mac_conj_body(ar, ai, x, w)
}

fn mac(ar: &mut [f64], ai: &mut [f64], x: Planes<'_>, w: Planes<'_>) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2, checked just above.
        return unsafe { mac_avx2(ar, ai, x, w) };
    }
    mac_body(ar, ai, x, w)
}

/// A convolution layer's geometry and execution plan. Parameters live
/// outside: weights `[out_ch, in_ch, kernel]`, bias `[out_ch]`.
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: Padding,
    pub in_len: usize,
    pub out_len: usize,
    pub pad_left: usize,
    padded_len: usize,
    fft: Option<FftEngine>,
}

impl fmt::Debug for Conv1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Conv1d")
            .field("in_channels", &self.in_channels)
            .field("out_channels", &self.out_channels)
            .field("kernel", &self.kernel)
            .field("stride", &self.stride)
            .field("padding", &self.padding)
            .field("in_len", &self.in_len)
            .field("out_len", &self.out_len)
            .field("backend", &self.backend())
            .finish()
    }
}

/// Forward state needed by the backward pass.
pub struct ConvCache {
    batch: usize,
    input: Vec<f64>,
    /// FFT backend only: spectra of the inputs `[batch, in_ch]` and of the
    /// weights `[out_ch, in_ch]`.
    spectra: Option<(Spectra, Spectra)>,
}

pub struct ConvGrads {
    pub input: Option<Vec<f64>>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        in_len: usize,
    ) -> Result<Self> {
        let backend = if stride == 1 && kernel >= FFT_MIN_KERNEL {
            ConvBackend::Fft
        } else {
            ConvBackend::Direct
        };
        Self::with_backend(in_channels, out_channels, kernel, stride, padding, in_len, backend)
    }

    pub fn with_backend(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        in_len: usize,
        backend: ConvBackend,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0 || in_len == 0 {
            return Err(Error::InvalidArgument(
                "convolution channels, kernel, stride and length must be ≥ 1".into(),
            ));
        }
        let (pad_left, pad_total) = match padding {
            Padding::None => (0, 0),
            Padding::Same => {
                let out = in_len.div_ceil(stride);
                let total = ((out - 1) * stride + kernel).saturating_sub(in_len);
                (total / 2, total)
            }
        };
        let padded_len = in_len + pad_total;
        if kernel > padded_len {
            return Err(Error::Shape(format!(
                "kernel {kernel} exceeds padded input length {padded_len}"
            )));
        }
        let out_len = (padded_len - kernel) / stride + 1;
        let fft = match backend {
            ConvBackend::Direct => None,
            ConvBackend::Fft => {
                if stride != 1 {
                    return Err(Error::InvalidArgument("FFT convolution requires stride 1".into()));
                }
                Some(FftEngine::new((in_len + kernel - 1).next_power_of_two()))
            }
        };
        Ok(Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            in_len,
            out_len,
            pad_left,
            padded_len,
            fft,
        })
    }

    pub fn backend(&self) -> ConvBackend {
        if self.fft.is_some() {
            ConvBackend::Fft
        } else {
            ConvBackend::Direct
        }
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel
    }

    fn check(&self, input: &[f64], batch: usize, weight: &[f64], bias: &[f64]) -> Result<()> {
        if input.len() != batch * self.in_channels * self.in_len {
            return Err(Error::Shape(format!(
                "conv input has {} values, expected {batch}×{}×{}",
                input.len(),
                self.in_channels,
                self.in_len
            )));
        }
        if weight.len() != self.weight_len() || bias.len() != self.out_channels {
            return Err(Error::Shape("conv parameter size mismatch".into()));
        }
        Ok(())
    }

    /// `out[b,o,i] = bias[o] + Σ_c Σ_j w[o,c,j] · x̂[b,c,i·stride + j]` where
    /// `x̂` is the zero-padded input. Input `[batch, in_ch, in_len]`, output
    /// `[batch, out_ch, out_len]`.
    pub fn forward(&self, input: &[f64], batch: usize, weight: &[f64], bias: &[f64]) -> Result<(Vec<f64>, ConvCache)> {
        self.check(input, batch, weight, bias)?;
        match &self.fft {
            Some(engine) => Ok(self.forward_fft(engine, input, batch, weight, bias)),
            None => Ok(self.forward_direct(input, batch, weight, bias)),
        }
    }

    pub fn backward(&self, cache: &ConvCache, upstream: &[f64], weight: &[f64], need_input: bool) -> Result<ConvGrads> {
        if upstream.len() != cache.batch * self.out_channels * self.out_len {
            return Err(Error::Shape(format!(
                "conv upstream gradient has {} values, expected {}×{}×{}",
                upstream.len(),
                cache.batch,
                self.out_channels,
                self.out_len
            )));
        }
        match &self.fft {
            Some(engine) => Ok(self.backward_fft(engine, cache, upstream, need_input)),
            None => Ok(self.backward_direct(cache, upstream, weight, need_input)),
        }
    }

    fn pad_sample(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.in_channels * self.padded_len, 0.0);
        for c in 0..self.in_channels {
            let dst = c * self.padded_len + self.pad_left;
            out[dst..dst + self.in_len].copy_from_slice(&x[c * self.in_len..(c + 1) * self.in_len]);
        }
    }

    fn forward_direct(&self, input: &[f64], batch: usize, weight: &[f64], bias: &[f64]) -> (Vec<f64>, ConvCache) {
        let (ci, co, k, s, lo) = (self.in_channels, self.out_channels, self.kernel, self.stride, self.out_len);
        let mut out = vec![0.0; batch * co * lo];
        let mut xpad = Vec::new();
        for b in 0..batch {
            self.pad_sample(&input[b * ci * self.in_len..(b + 1) * ci * self.in_len], &mut xpad);
            for o in 0..co {
                let y = &mut out[(b * co + o) * lo..(b * co + o + 1) * lo];
                y.fill(bias[o]);
                for c in 0..ci {
                    let xc = &xpad[c * self.padded_len..(c + 1) * self.padded_len];
                    for j in 0..k {
                        let w = weight[(o * ci + c) * k + j];
                        if s == 1 {
                            for (yi, xi) in y.iter_mut().zip(&xc[j..j + lo]) {
                                *yi += w * xi;
                            }
                        } else {
                            for (i, yi) in y.iter_mut().enumerate() {
                                *yi += w * xc[i * s + j];
                            }
                        }
                    }
                }
            }
        }
        let cache = ConvCache {
            batch,
            input: input.to_vec(),
            spectra: None,
        };
        (out, cache)
    }

    fn backward_direct(&self, cache: &ConvCache, dy: &[f64], weight: &[f64], need_input: bool) -> ConvGrads {
        let (ci, co, k, s, lo) = (self.in_channels, self.out_channels, self.kernel, self.stride, self.out_len);
        let batch = cache.batch;
        let mut dw = vec![0.0; self.weight_len()];
        let mut db = vec![0.0; co];
        let mut dx = need_input.then(|| vec![0.0; batch * ci * self.in_len]);
        let mut xpad = Vec::new();
        let mut dxpad = vec![0.0; ci * self.padded_len];
        for b in 0..batch {
            self.pad_sample(&cache.input[b * ci * self.in_len..(b + 1) * ci * self.in_len], &mut xpad);
            dxpad.fill(0.0);
            for o in 0..co {
                let g = &dy[(b * co + o) * lo..(b * co + o + 1) * lo];
                db[o] += g.iter().sum::<f64>();
                for c in 0..ci {
                    let xc = &xpad[c * self.padded_len..(c + 1) * self.padded_len];
                    let dxc = &mut dxpad[c * self.padded_len..(c + 1) * self.padded_len];
                    for j in 0..k {
                        let widx = (o * ci + c) * k + j;
                        let w = weight[widx];
                        let mut acc = 0.0;
                        if s == 1 {
                            for (gi, xi) in g.iter().zip(&xc[j..j + lo]) {
                                acc += gi * xi;
                            }
                            if need_input {
                                for (d, gi) in dxc[j..j + lo].iter_mut().zip(g) {
                                    *d += w * gi;
                                }
                            }
                        } else {
                            for (i, gi) in g.iter().enumerate() {
                                acc += gi * xc[i * s + j];
                                if need_input {
                                    dxc[i * s + j] += w * gi;
                                }
                            }
                        }
                        dw[widx] += acc;
                    }
                }
            }
            if let Some(dx) = dx.as_mut() {
                for c in 0..ci {
                    let src = c * self.padded_len + self.pad_left;
                    dx[(b * ci + c) * self.in_len..(b * ci + c + 1) * self.in_len]
                        .copy_from_slice(&dxpad[src..src + self.in_len]);
                }
            }
        }
        ConvGrads {
            input: dx,
            weight: dw,
            bias: db,
        }
    }

    fn forward_fft(&self, e: &FftEngine, input: &[f64], batch: usize, weight: &[f64], bias: &[f64]) -> (Vec<f64>, ConvCache) {
        let (ci, co, k, lo, n) = (self.in_channels, self.out_channels, self.kernel, self.out_len, e.n);
        let nb = e.bins();
        let mut s = e.scratch();

        let mut ws = Spectra::zeros(co * ci, nb);
        for oc in 0..co * ci {
            let (re, im) = ws.get_mut(oc);
            e.rfft(&weight[oc * k..(oc + 1) * k], &mut s, re, im);
        }
        let mut xs = Spectra::zeros(batch * ci, nb);
        for bc in 0..batch * ci {
            let (re, im) = xs.get_mut(bc);
            e.rfft(&input[bc * self.in_len..(bc + 1) * self.in_len], &mut s, re, im);
        }

        // out[i] = IFFT(X · conj(W))[(i − pad_left) mod n] / n
        let scale = 1.0 / n as f64;
        let mut out = vec![0.0; batch * co * lo];
        let (mut ar, mut ai) = (vec![0.0; nb], vec![0.0; nb]);
        for o in 0..co {
            for b in 0..batch {
                ar.fill(0.0);
                ai.fill(0.0);
                for c in 0..ci {
                    mac_conj(&mut ar, &mut ai, xs.get(b * ci + c), ws.get(o * ci + c));
                }
                e.irfft(&ar, &ai, &mut s);
                let y = &mut out[(b * co + o) * lo..(b * co + o + 1) * lo];
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = bias[o] + s.time[(i + n - self.pad_left) % n] * scale;
                }
            }
        }
        let cache = ConvCache {
            batch,
            input: Vec::new(),
            spectra: Some((xs, ws)),
        };
        (out, cache)
    }

    fn backward_fft(&self, e: &FftEngine, cache: &ConvCache, dy: &[f64], need_input: bool) -> ConvGrads {
        let (ci, co, k, lo, n) = (self.in_channels, self.out_channels, self.kernel, self.out_len, e.n);
        let nb = e.bins();
        let batch = cache.batch;
        let (xs, ws) = cache.spectra.as_ref().expect("FFT forward cache");
        let scale = 1.0 / n as f64;
        let mut s = e.scratch();

        let mut db = vec![0.0; co];
        let mut ds = Spectra::zeros(batch * co, nb);
        for bo in 0..batch * co {
            let g = &dy[bo * lo..(bo + 1) * lo];
            db[bo % co] += g.iter().sum::<f64>();
            let (re, im) = ds.get_mut(bo);
            e.rfft(g, &mut s, re, im);
        }

        // G[o,c] = Σ_b X[b,c] · conj(DY[b,o]);  dw[o,c,j] = IFFT(G)[(j − pad_left) mod n] / n
        let mut dw = vec![0.0; self.weight_len()];
        let (mut ar, mut ai) = (vec![0.0; nb], vec![0.0; nb]);
        for o in 0..co {
            for c in 0..ci {
                ar.fill(0.0);
                ai.fill(0.0);
                for b in 0..batch {
                    mac_conj(&mut ar, &mut ai, xs.get(b * ci + c), ds.get(b * co + o));
                }
                e.irfft(&ar, &ai, &mut s);
                let oc = o * ci + c;
                for j in 0..k {
                    dw[oc * k + j] = s.time[(j + n - self.pad_left) % n] * scale;
                }
            }
        }

        // dx[c,t] = IFFT(Σ_o DY[o] · W[o,c])[t + pad_left] / n
        let dx = need_input.then(|| {
            let mut dx = vec![0.0; batch * ci * self.in_len];
            for c in 0..ci {
                for b in 0..batch {
                    ar.fill(0.0);
                    ai.fill(0.0);
                    for o in 0..co {
                        mac(&mut ar, &mut ai, ds.get(b * co + o), ws.get(o * ci + c));
                    }
                    e.irfft(&ar, &ai, &mut s);
                    let dst = &mut dx[(b * ci + c) * self.in_len..(b * ci + c + 1) * self.in_len];
                    for (t, d) in dst.iter_mut().enumerate() {
                        *d = s.time[t + self.pad_left] * scale;
                    }
                }
            }
            dx
        });
        ConvGrads {
            input: dx,
            weight: dw,
            bias: db,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Reference cross-correlation straight from the definition.
    fn naive(conv: &Conv1d, x: &[f64], batch: usize, w: &[f64], bias: &[f64]) -> Vec<f64> {
        let (ci, co, k) = (conv.in_channels, conv.out_channels, conv.kernel);
        let mut out = vec![0.0; batch * co * conv.out_len];
        for b in 0..batch {
            for o in 0..co {
                for i in 0..conv.out_len {
                    let mut v = bias[o];
                    for c in 0..ci {
                        for j in 0..k {
                            let p = (i * conv.stride + j) as isize - conv.pad_left as isize;
                            if p >= 0 && (p as usize) < conv.in_len {
                                v += w[(o * ci + c) * k + j] * x[(b * ci + c) * conv.in_len + p as usize];
                            }
                        }
                    }
                    out[(b * co + o) * conv.out_len + i] = v;
                }
            }
        }
        out
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = rng::stream(seed);
        (0..n).map(|_| 2.0 * rng::unit(&mut s) - 1.0).collect()
    }

    #[test]
    fn hand_evaluated_examples() {
        let conv = Conv1d::new(1, 1, 3, 1, Padding::None, 4).unwrap();
        let (y, _) = conv.forward(&[1.0, 2.0, 3.0, 4.0], 1, &[1.0, 0.0, -1.0], &[0.0]).unwrap();
        assert_eq!(y, vec![-2.0, -2.0]);

        let x = [0.5, -1.0, 2.0, 7.0, 3.0];
        let conv = Conv1d::new(1, 1, 3, 1, Padding::Same, 5).unwrap();
        let (y, _) = conv.forward(&x, 1, &[0.0, 1.0, 0.0], &[0.0]).unwrap();
        assert_eq!(y, x.to_vec());
    }

    #[test]
    fn fishcnn_shape() {
        let conv = Conv1d::new(1, 16, 64, 1, Padding::Same, 427).unwrap();
        assert_eq!(conv.backend(), ConvBackend::Fft);
        let x = random(427, 1);
        let (y, _) = conv.forward(&x, 1, &random(16 * 64, 2), &[0.0; 16]).unwrap();
        assert_eq!(y.len(), 16 * 427);
    }

    #[test]
    fn backends_agree_with_definition() {
        let cases = [
            (2, 3, 5, 1, Padding::Same, 17),
            (3, 2, 4, 1, Padding::Same, 9),
            (1, 4, 64, 1, Padding::Same, 70),
            (2, 2, 6, 1, Padding::None, 20),
            (3, 2, 3, 2, Padding::Same, 11),
            (2, 3, 4, 3, Padding::None, 14),
        ];
        for (idx, &(ci, co, k, s, pad, len)) in cases.iter().enumerate() {
            let seed = idx as u64 * 10;
            let batch = 3;
            let x = random(batch * ci * len, seed);
            let w = random(co * ci * k, seed + 1);
            let bias = random(co, seed + 2);
            let direct = Conv1d::with_backend(ci, co, k, s, pad, len, ConvBackend::Direct).unwrap();
            let expect = naive(&direct, &x, batch, &w, &bias);
            let (y, _) = direct.forward(&x, batch, &w, &bias).unwrap();
            for (a, b) in y.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12, "direct case {idx}");
            }
            if s == 1 {
                let fft = Conv1d::with_backend(ci, co, k, s, pad, len, ConvBackend::Fft).unwrap();
                let (y, _) = fft.forward(&x, batch, &w, &bias).unwrap();
                for (a, b) in y.iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-12, "fft case {idx}: {a} vs {b}");
                }
                // gradients of both backends agree too
                let dy = random(batch * co * direct.out_len, seed + 3);
                let (_, cd) = direct.forward(&x, batch, &w, &bias).unwrap();
                let (_, cf) = fft.forward(&x, batch, &w, &bias).unwrap();
                let gd = direct.backward(&cd, &dy, &w, true).unwrap();
                let gf = fft.backward(&cf, &dy, &w, true).unwrap();
                for (a, b) in gd.weight.iter().zip(&gf.weight) {
                    assert!((a - b).abs() < 1e-11);
                }
                for (a, b) in gd.input.unwrap().iter().zip(&gf.input.unwrap()) {
                    assert!((a - b).abs() < 1e-11);
                }
                assert_eq!(gd.bias.len(), gf.bias.len());
            }
        }
    }

    #[test]
    fn same_padding_preserves_length() {
        for len in 1..40 {
            for k in [1, 2, 3, 4, 7, 16] {
                let c = Conv1d::new(1, 1, k, 1, Padding::Same, len).unwrap();
                assert_eq!(c.out_len, len, "len {len} kernel {k}");
            }
        }
    }

    #[test]
    fn kernel_longer_than_input_is_rejected() {
        assert!(Conv1d::new(1, 1, 8, 1, Padding::None, 5).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        for backend in [ConvBackend::Direct, ConvBackend::Fft] {
            let c = Conv1d::with_backend(2, 3, 5, 1, Padding::Same, 12, backend).unwrap();
            let x = random(2 * 2 * 12, 5);
            let w = random(30, 6);
            let (_, cache) = c.forward(&x, 2, &w, &[0.1, 0.2, 0.3]).unwrap();
            let g = c.backward(&cache, &vec![0.0; 2 * 3 * 12], &w, true).unwrap();
            assert!(g.weight.iter().chain(&g.bias).chain(g.input.as_ref().unwrap()).all(|v| *v == 0.0));
        }
    }
}
