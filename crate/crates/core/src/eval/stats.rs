//! Two-sided Mann–Whitney U test.

use serde::{Deserialize, Serialize};

/// Exact enumeration is used when the smaller sample has at most this many
/// values and there are no ties.
pub const EXACT_MAX_SMALLER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    /// U of the first sample: pairs with `a > b`, ties counting one half.
    pub u: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    pub method: Method,
}

/// Midranks (1-based) of the pooled sample and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Coefficients of the Gaussian binomial `[n+m choose n]_q`: entry `u` counts
/// the rank arrangements whose U statistic equals `u`.
fn u_counts(n: usize, m: usize) -> Vec<u128> {
    let (small, large) = if n <= m { (n, m) } else { (m, n) };
    let mut poly: Vec<i128> = vec![1];
    for i in 1..=small {
        // multiply by (1 − q^{large+i})
        let shift = large + i;
        let mut next = vec![0i128; poly.len() + shift];
        for (d, &c) in poly.iter().enumerate() {
            next[d] += c;
            next[d + shift] -= c;
        }
        // divide by (1 − q^i): exact, so a running sum with stride i works
        for d in i..next.len() {
            next[d] += next[d - i];
        }
        next.truncate(small * large + 1);
        poly = next;
    }
    poly.into_iter().map(|c| c as u128).collect()
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> ComparisonResult {
    let (n, m) = (a.len(), b.len());
    assert!(n > 0 && m > 0, "Mann–Whitney needs two nonempty samples");
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n].iter().sum();
    let u = rank_sum_a - (n * (n + 1)) as f64 / 2.0;

    if ties.is_empty() && n.min(m) <= EXACT_MAX_SMALLER {
        let counts = u_counts(n, m);
        let total: u128 = counts.iter().sum();
        let k = u.round() as usize;
        let le: u128 = counts[..=k].iter().sum();
        let ge: u128 = counts[k..].iter().sum();
        let p = (2.0 * le.min(ge) as f64 / total as f64).min(1.0);
        return ComparisonResult {
            u,
            p_value: p,
            n,
            m,
            method: Method::Exact,
        };
    }

    let (nf, mf) = (n as f64, m as f64);
    let big_n = nf + mf;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / (big_n * (big_n - 1.0));
    let var = nf * mf / 12.0 * ((big_n + 1.0) - tie_term);
    let mu = nf * mf / 2.0;
    let p = if var > 0.0 {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    } else {
        1.0
    };
    ComparisonResult {
        u,
        p_value: p,
        n,
        m,
        method: Method::Normal,
    }
}
