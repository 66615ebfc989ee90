//! Growth-exponent fits of power-norm series and the lower-bound
//! certification `||T^k|| ≥ (1/3)(k+1)^{1-ε}`.

use kreisslab_core::norm::NormSeries;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// Fits start here by default, clear of the initial transient.
pub const DEFAULT_WINDOW_START: usize = 16;
pub const MIN_WINDOW_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthWindow {
    pub k_min: usize,
    pub k_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub k: usize,
    pub norm: f64,
    pub lower_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub k_range: (usize, usize),
    pub values: Vec<(usize, f64)>,
    pub window: GrowthWindow,
    /// Slope of `log ||T^k||` against `log k` over the window.
    pub beta: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub epsilon: Option<f64>,
    /// Per-`k` comparison against `(1/3)(k+1)^{1-ε}`, when `ε` is given.
    pub lower_bound: Vec<BoundPoint>,
    /// `max_k ||T^k|| √(ln k) / k` over `k ≥ 2`; logged, never fitted.
    pub ceiling_ratio: f64,
}

impl GrowthReport {
    pub fn lower_bound_failures(&self) -> usize {
        self.lower_bound.iter().filter(|p| !p.pass).count()
    }
}

pub fn shields_lower_bound(k: usize, epsilon: f64) -> f64 {
    ((k + 1) as f64).powf(1.0 - epsilon) / 3.0
}

/// Ordinary least squares of `(log k, log ||T^k||)` over `window`.
pub fn growth_fit(series: &NormSeries, window: GrowthWindow, epsilon: Option<f64>) -> Result<GrowthReport> {
    let values: Vec<(usize, f64)> = series.points.iter().map(|p| (p.k, p.estimate.value)).collect();
    let (Some(first), Some(last)) = (values.first(), values.last()) else {
        return Err(usage("empty norm series"));
    };
    let k_range = (first.0, last.0);
    if window.k_min > window.k_max || window.k_min < k_range.0 || window.k_max > k_range.1 {
        return Err(usage(format!(
            "fit window [{}, {}] is not inside the series range [{}, {}]",
            window.k_min, window.k_max, k_range.0, k_range.1
        )));
    }
    let pts: Vec<(f64, f64)> = values
        .iter()
        .filter(|(k, _)| (window.k_min..=window.k_max).contains(k))
        .map(|&(k, v)| (k as f64, v))
        .collect();
    if pts.len() < MIN_WINDOW_POINTS {
        return Err(usage(format!(
            "fit window holds {} points, need at least {MIN_WINDOW_POINTS}",
            pts.len()
        )));
    }
    if let Some((k, v)) = pts.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(usage(format!("norm at k = {k} is {v}, fit needs positive values")));
    }
    if let Some(e) = epsilon {
        if !(e > 0.0 && e < 1.0) {
            return Err(usage(format!("epsilon = {e} must lie in (0, 1)")));
        }
    }

    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(k, _)| k.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + beta * x);
            r * r
        })
        .sum();

    let lower_bound = match epsilon {
        Some(e) => values
            .iter()
            .map(|&(k, norm)| {
                let lb = shields_lower_bound(k, e);
                BoundPoint {
                    k,
                    norm,
                    lower_bound: lb,
                    pass: norm >= lb,
                }
            })
            .collect(),
        None => Vec::new(),
    };
    let ceiling_ratio = values
        .iter()
        .filter(|(k, _)| *k >= 2)
        .map(|&(k, v)| v * (k as f64).ln().sqrt() / k as f64)
        .fold(0.0, f64::max);

    Ok(GrowthReport {
        k_range,
        values,
        window,
        beta,
        intercept,
        residual_rms: (rss / n).sqrt(),
        epsilon,
        lower_bound,
        ceiling_ratio,
    })
}
