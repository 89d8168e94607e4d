//! Correlation tests with Fisher-z p-values, and Gaussian moment fits.

use statrs::function::erf::{erfc, erfc_inv};

use crate::{Error, Result};

/// Residual variances at or below this fraction of the original variance
/// count as zero.
const RELATIVE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// A tested variable had no variance left; the result is `(0, 1)`.
    pub degenerate: bool,
    /// Conditioning columns dropped as collinear.
    pub dropped: usize,
}

impl TestResult {
    const DEGENERATE: TestResult = TestResult {
        statistic: 0.0,
        p_value: 1.0,
        degenerate: true,
        dropped: 0,
    };
}

/// Two-sided p-value of a correlation through the Fisher transform with
/// `n_eff` effective samples.
pub fn fisher_z_pvalue(r: f64, n_eff: usize) -> f64 {
    if n_eff <= 3 {
        return 1.0;
    }
    let z = r.clamp(-1.0, 1.0).atanh() * ((n_eff - 3) as f64).sqrt();
    if z.is_infinite() {
        return 0.0;
    }
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Population covariance (1/n) of the given columns, row-major `k x k`.
/// Columns whose values are all identical get exactly zero variance.
pub fn covariance(columns: &[&[f64]]) -> Vec<f64> {
    let k = columns.len();
    let n = columns.first().map_or(0, |c| c.len());
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(k);
    for col in columns {
        let first = col.first().copied().unwrap_or(0.0);
        if col.iter().all(|&v| v == first) {
            centered.push(vec![0.0; n]);
            continue;
        }
        let mean = col.iter().sum::<f64>() / n as f64;
        centered.push(col.iter().map(|&v| v - mean).collect());
    }
    let mut cov = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let s: f64 = centered[a].iter().zip(&centered[b]).map(|(u, v)| u * v).sum();
            cov[a * k + b] = s / n as f64;
            cov[b * k + a] = s / n as f64;
        }
    }
    cov
}

/// Partial correlation of variables 0 and 1 given variables `2..k` from a
/// `k x k` covariance matrix over `n` samples.
///
/// Conditioning variables are swept out in order; one whose residual
/// variance has vanished is collinear with the earlier ones and is dropped.
pub fn partial_corr_from_cov(cov: &[f64], k: usize, n: usize) -> TestResult {
    debug_assert!(k >= 2 && cov.len() == k * k);
    let mut c = cov.to_vec();
    let mut dropped = 0;
    for m in 2..k {
        let pivot = c[m * k + m];
        let orig = cov[m * k + m];
        if !(pivot > RELATIVE_TOL * orig) || orig <= 0.0 {
            dropped += 1;
            continue;
        }
        for i in 0..k {
            if i == m {
                continue;
            }
            let f = c[i * k + m] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                if j != m {
                    c[i * k + j] -= f * c[m * k + j];
                }
            }
        }
        for j in 0..k {
            c[m * k + j] = 0.0;
            c[j * k + m] = 0.0;
        }
    }
    let (vx, vy, cxy) = (c[0], c[k + 1], c[1]);
    if cov[0] <= 0.0 || cov[k + 1] <= 0.0 || vx <= RELATIVE_TOL * cov[0] || vy <= RELATIVE_TOL * cov[k + 1] {
        return TestResult { dropped, ..TestResult::DEGENERATE };
    }
    let r = (cxy / (vx * vy).sqrt()).clamp(-1.0, 1.0);
    let used = k - 2 - dropped;
    TestResult {
        statistic: r,
        p_value: fisher_z_pvalue(r, n.saturating_sub(used)),
        degenerate: false,
        dropped,
    }
}

fn check_lengths(n: usize, others: impl Iterator<Item = usize>) -> Result<()> {
    for len in others {
        if len != n {
            return Err(Error::Shape(format!("sample vectors of lengths {n} and {len}")));
        }
    }
    Ok(())
}

pub fn pearson_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    partial_corr_test(x, y, &[])
}

/// Correlation of the residuals of `x` and `y` after regressing both on
/// `[1, S]`, with `n - |S|` effective samples.
pub fn partial_corr_test(x: &[f64], y: &[f64], s: &[&[f64]]) -> Result<TestResult> {
    let n = x.len();
    check_lengths(n, std::iter::once(y.len()).chain(s.iter().map(|c| c.len())))?;
    if n < s.len() + 3 {
        return Err(Error::InsufficientSamples { needed: s.len() + 3, got: n });
    }
    let mut cols: Vec<&[f64]> = vec![x, y];
    cols.extend_from_slice(s);
    let cov = covariance(&cols);
    Ok(partial_corr_from_cov(&cov, cols.len(), n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFit {
    pub mu: f64,
    pub sigma: f64,
}

/// Mean and population (1/T) standard deviation.
pub fn fit_gaussian(x: &[f64]) -> Result<GaussianFit> {
    if x.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    Ok(GaussianFit { mu, sigma: var.sqrt() })
}

/// Standard normal quantile.
pub fn normal_quantile(q: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * q)
}

pub fn gaussian_percentile(fit: GaussianFit, q: f64) -> f64 {
    if fit.sigma == 0.0 {
        return fit.mu;
    }
    fit.mu + fit.sigma * normal_quantile(q)
}
