//! Distribution diagnostics for fitted block maxima: Gaussian kernel
//! density estimates and quantile-quantile data.

use crate::gevfit::{gev_quantile, GevParams};
use crate::{Error, Result};

/// Gaussian kernel density estimate evaluated on `grid`:
/// f(g) = (n h)^-1 sum_i K((g - x_i)/h) with the standard normal kernel.
pub fn kernel_density(values: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "kernel bandwidth must be positive, got {bandwidth}"
        )));
    }
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample { index: bad as u64 });
    }
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            let sum: f64 = values
                .iter()
                .map(|&x| {
                    let z = (g - x) / bandwidth;
                    (-0.5 * z * z).exp()
                })
                .sum();
            norm * sum
        })
        .collect())
}

/// Uniform evaluation grid covering the sample range padded by
/// `pad_bandwidths * bandwidth` on both sides.
pub fn density_grid(
    values: &[f64],
    bandwidth: f64,
    pad_bandwidths: f64,
    n_points: usize,
) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    if n_points < 2 {
        return Err(Error::InvalidParams("density grid needs at least 2 points".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFiniteState);
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let pad = pad_bandwidths * bandwidth;
    let (a, b) = (lo - pad, hi + pad);
    let step = (b - a) / (n_points - 1) as f64;
    Ok((0..n_points).map(|i| a + step * i as f64).collect())
}

/// Silverman's rule-of-thumb bandwidth,
/// 0.9 min(sd, IQR/1.34) n^(-1/5), for a default when none is given.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: n as u64 });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let quantile = |p: f64| -> f64 {
        let pos = p * (nf - 1.0);
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < n {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[n - 1]
        }
    };
    let iqr = quantile(0.75) - quantile(0.25);

    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::DegenerateSample);
    }
    Ok(0.9 * spread * nf.powf(-0.2))
}

/// Quantile-quantile data: maxima sorted ascending, paired with the model
/// quantiles at plotting positions (i - 0.5)/n.
pub fn qq_data(maxima: &[f64], params: &GevParams) -> Result<Vec<(f64, f64)>> {
    let n = maxima.len();
    if n == 0 {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite maxima"));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let p = (i as f64 + 0.5) / n as f64;
            Ok((x, gev_quantile(params, p)?))
        })
        .collect()
}

/// Strict interior local maxima of a sampled curve, as (x, y) pairs in
/// x order. Plateau points are not reported.
pub fn local_maxima(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    debug_assert_eq!(x.len(), y.len());
    let mut peaks = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] > y[i + 1] {
            peaks.push((x[i], y[i]));
        }
    }
    peaks
}
