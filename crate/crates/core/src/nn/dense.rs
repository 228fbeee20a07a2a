use crate::error::{Error, Result};

/// Fully connected layer. Weights are stored `[out_dim, in_dim]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
}

pub struct DenseGrads {
    pub input: Option<Vec<f64>>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// `c[m×n] = alpha·a·b + beta·c` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: every index `i·rs + j·cs` with i, j inside the stated extents is
    // within the slices; callers pass strides that describe dense row-major or
    // transposed views of buffers of exactly those sizes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Dense {
    pub fn new(in_dim: usize, out_dim: usize) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidArgument("dense dimensions must be ≥ 1".into()));
        }
        Ok(Self { in_dim, out_dim })
    }

    pub fn weight_len(&self) -> usize {
        self.in_dim * self.out_dim
    }

    /// `y = x·Wᵀ + b` for `x` of shape `[batch, in_dim]`.
    pub fn forward(&self, x: &[f64], batch: usize, weight: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
        if x.len() != batch * self.in_dim {
            return Err(Error::Shape(format!(
                "dense input has {} values, expected {batch}×{}",
                x.len(),
                self.in_dim
            )));
        }
        if weight.len() != self.weight_len() || bias.len() != self.out_dim {
            return Err(Error::Shape("dense parameter size mismatch".into()));
        }
        let (i, o) = (self.in_dim as isize, self.out_dim);
        let mut y: Vec<f64> = (0..batch).flat_map(|_| bias.iter().copied()).collect();
        gemm(batch, self.in_dim, o, x, (i, 1), weight, (1, i), 1.0, &mut y);
        Ok(y)
    }

    pub fn backward(&self, x: &[f64], batch: usize, upstream: &[f64], weight: &[f64], need_input: bool) -> Result<DenseGrads> {
        if upstream.len() != batch * self.out_dim || x.len() != batch * self.in_dim {
            return Err(Error::Shape("dense backward shape mismatch".into()));
        }
        let (i, o) = (self.in_dim, self.out_dim);
        // dW[o×i] = dYᵀ · X
        let mut dw = vec![0.0; self.weight_len()];
        gemm(o, batch, i, upstream, (1, o as isize), x, (i as isize, 1), 0.0, &mut dw);
        let mut db = vec![0.0; o];
        for row in upstream.chunks_exact(o) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let dx = need_input.then(|| {
            // dX[batch×i] = dY · W
            let mut dx = vec![0.0; batch * i];
            gemm(batch, o, i, upstream, (o as isize, 1), weight, (i as isize, 1), 0.0, &mut dx);
            dx
        });
        Ok(DenseGrads {
            input: dx,
            weight: dw,
            bias: db,
        })
    }
}
