//! Independent reference implementations used as test oracles. Nothing in
//! here calls into the library's numerical code.

#![allow(dead_code)]

/// Solves `A x = b` by Gauss–Jordan elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-300, "singular system");
        for j in col..n {
            a[col][j] /= p;
        }
        b[col] /= p;
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in col..n {
                        a[i][j] -= f * a[col][j];
                    }
                    b[i] -= f * b[col];
                }
            }
        }
    }
    b
}

/// Least-squares coefficients of `y ≈ Σ_j c_j · columns[j]` via the normal
/// equations.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = columns.len();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let a: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| dot(&columns[i], &columns[j])).collect())
        .collect();
    let b: Vec<f64> = (0..p).map(|i| dot(&columns[i], y)).collect();
    solve(a, b)
}

/// Savitzky–Golay weights for the derivative of `order` at offset `at`
/// (relative to the window start) from a least-squares polynomial fit of
/// degree `polyorder`, built from the raw Vandermonde normal equations.
pub fn savgol_weights(window: usize, polyorder: usize, order: usize, at: usize) -> Vec<f64> {
    let t: Vec<f64> = (0..window).map(|i| i as f64 - at as f64).collect();
    let columns: Vec<Vec<f64>> = (0..=polyorder).map(|k| t.iter().map(|x| x.powi(k as i32)).collect()).collect();
    let factorial: f64 = (1..=order).map(|v| v as f64).product();
    // weight for sample i = d^order/dx^order of the fitted polynomial at 0
    // = order! · (coefficient `order` of the fit to the unit vector e_i)
    (0..window)
        .map(|i| {
            let mut e = vec![0.0; window];
            e[i] = 1.0;
            factorial * least_squares(&columns, &e)[order]
        })
        .collect()
}

/// Two-sided Mann–Whitney p-value by enumerating every assignment of the
/// pooled ranks to the first sample (no ties assumed).
pub fn mann_whitney_enumerated(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (n, m) = (a.len(), b.len());
    let u_obs: f64 = a
        .iter()
        .map(|x| b.iter().map(|y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 }).sum::<f64>())
        .sum();
    let total = n + m;
    let (mut le, mut ge, mut count) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        // positions set in `mask` hold the first sample; U counts pairs where
        // a first-sample rank exceeds a second-sample rank
        let mut u = 0usize;
        let mut seconds_below = 0usize;
        for pos in 0..total {
            if mask >> pos & 1 == 1 {
                u += seconds_below;
            } else {
                seconds_below += 1;
            }
        }
        count += 1;
        if u as f64 <= u_obs {
            le += 1;
        }
        if u as f64 >= u_obs {
            ge += 1;
        }
    }
    let p = (2.0 * le.min(ge) as f64 / count as f64).min(1.0);
    (u_obs, p)
}

/// Plain scalar Adam without weight decay.
pub fn scalar_adam(theta0: f64, grads: &[f64], lr: f64) -> f64 {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let (mut theta, mut m, mut v) = (theta0, 0.0, 0.0);
    for (t, &g) in grads.iter().enumerate() {
        let t = t as i32 + 1;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let m_hat = m / (1.0 - b1.powi(t));
        let v_hat = v / (1.0 - b2.powi(t));
        theta -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    theta
}

/// Central finite difference of `f` at `x` along coordinate `i`.
pub fn central_difference(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    p[i] = x[i] + h;
    let up = f(&p);
    p[i] = x[i] - h;
    let down = f(&p);
    (up - down) / (2.0 * h)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Small deterministic generator for test inputs (xorshift64*).
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.symmetric()).collect()
    }
}
