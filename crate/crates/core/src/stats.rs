//! Descriptive wind statistics: Weibull fits, windroses and summary moments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::WindSeries;

pub const WEIBULL_MIN_SAMPLES: usize = 100;
const WEIBULL_TOL: f64 = 1e-10;
const WEIBULL_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeibullFit {
    pub scale: f64,
    pub shape: f64,
    pub n_samples: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Two-parameter Weibull maximum-likelihood fit.
///
/// Zero speeds are dropped before fitting. The shape solves the profile
/// likelihood equation
///
/// ```text
/// g(k) = sum(x^k ln x) / sum(x^k) - 1/k - mean(ln x) = 0
/// ```
///
/// by safeguarded Newton steps (bisection whenever a step leaves the current
/// bracket); the scale then follows in closed form as `mean(x^k)^(1/k)`.
/// Data are divided by their mean first so `x^k` stays well scaled.
pub fn fit_weibull(speeds: &[f64]) -> Result<WeibullFit> {
    let x: Vec<f64> = speeds.iter().copied().filter(|v| *v > 0.0 && v.is_finite()).collect();
    let n = x.len();
    if n < WEIBULL_MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "Weibull fit needs at least {WEIBULL_MIN_SAMPLES} positive samples, got {n}"
        )));
    }
    let nf = n as f64;
    let norm = x.iter().sum::<f64>() / nf;
    let ln_y: Vec<f64> = x.iter().map(|v| (v / norm).ln()).collect();
    let mean_ln = ln_y.iter().sum::<f64>() / nf;
    let var_ln = ln_y.iter().map(|l| (l - mean_ln).powi(2)).sum::<f64>() / nf;
    if var_ln <= 1e-24 {
        return Err(Error::Degenerate("all samples are equal".into()));
    }

    // g(k) and g'(k)
    let eval = |k: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &ln_y {
            let w = (k * l).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        let g = s1 / s0 - 1.0 / k - mean_ln;
        let dg = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
        (g, dg)
    };

    // std(ln X) = pi / (k sqrt 6) for a Weibull variable
    let mut k = std::f64::consts::PI / (6.0f64.sqrt() * var_ln.sqrt());
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > WEIBULL_MAX_ITER {
            return Err(Error::NonConvergence(WEIBULL_MAX_ITER));
        }
        let (g, dg) = eval(k);
        if !g.is_finite() {
            hi = k;
            k = 0.5 * (lo + hi);
            continue;
        }
        if g > 0.0 {
            hi = hi.min(k);
        } else {
            lo = lo.max(k);
        }
        let mut next = k - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * k };
        }
        if (next - k).abs() < WEIBULL_TOL {
            k = next;
            break;
        }
        k = next;
    }

    let mean_pow = ln_y.iter().map(|l| (k * l).exp()).sum::<f64>() / nf;
    let scale = norm * mean_pow.powf(1.0 / k);
    let sum_ln_x: f64 = x.iter().map(|v| v.ln()).sum();
    let sum_pow: f64 = x.iter().map(|v| (v / scale).powf(k)).sum();
    let log_likelihood = nf * k.ln() - nf * k * scale.ln() + (k - 1.0) * sum_ln_x - sum_pow;
    Ok(WeibullFit {
        scale,
        shape: k,
        n_samples: n,
        log_likelihood,
        iterations,
    })
}

pub const DEFAULT_SECTORS: usize = 16;
/// Speed-bin width of the windrose histogram; the last bin is open-ended.
pub const WINDROSE_SPEED_STEP: f64 = 2.0;
pub const WINDROSE_SPEED_BINS: usize = 11;

const COMPASS_16: [&str; 16] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW", "NNW",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindroseTable {
    pub n_sectors: usize,
    pub sector_width_deg: f64,
    pub labels: Vec<String>,
    pub total: u64,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// Lower edges of the speed bins in m/s.
    pub speed_bin_edges: Vec<f64>,
    /// `speed_counts[sector][bin]`.
    pub speed_counts: Vec<Vec<u64>>,
}

impl WindroseTable {
    /// True when the series carried no usable direction data.
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Sector containing `direction_deg`, sector 0 centred on north.
pub fn sector_of(direction_deg: f64, n_sectors: usize) -> usize {
    let width = 360.0 / n_sectors as f64;
    let shifted = (direction_deg + width / 2.0).rem_euclid(360.0);
    ((shifted / width).floor() as usize).min(n_sectors - 1)
}

pub fn windrose(series: &WindSeries, n_sectors: usize) -> Result<WindroseTable> {
    if n_sectors == 0 {
        return Err(Error::Config("windrose needs at least one sector".into()));
    }
    let width = 360.0 / n_sectors as f64;
    let mut counts = vec![0u64; n_sectors];
    let mut speed_counts = vec![vec![0u64; WINDROSE_SPEED_BINS]; n_sectors];
    for (speed, dir) in series.speeds().iter().zip(series.directions()) {
        if let (Some(v), Some(d)) = (speed, dir) {
            let s = sector_of(*d, n_sectors);
            let b = ((v / WINDROSE_SPEED_STEP).floor() as usize).min(WINDROSE_SPEED_BINS - 1);
            counts[s] += 1;
            speed_counts[s][b] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let frequencies = counts
        .iter()
        .map(|c| if total == 0 { 0.0 } else { *c as f64 / total as f64 })
        .collect();
    let labels = (0..n_sectors)
        .map(|i| {
            if n_sectors == 16 {
                COMPASS_16[i].to_string()
            } else {
                format!("{}", i as f64 * width)
            }
        })
        .collect();
    Ok(WindroseTable {
        n_sectors,
        sector_width_deg: width,
        labels,
        total,
        counts,
        frequencies,
        speed_bin_edges: (0..WINDROSE_SPEED_BINS).map(|b| b as f64 * WINDROSE_SPEED_STEP).collect(),
        speed_counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Population (1/N) standard deviation.
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summary_of(values: &[f64]) -> Option<SummaryStats> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(SummaryStats {
        n: values.len(),
        mean,
        std,
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

pub fn summary_stats(series: &WindSeries) -> Result<SummaryStats> {
    let values: Vec<f64> = series.speeds().iter().flatten().copied().collect();
    summary_of(&values).ok_or_else(|| Error::AllMissing(series.site_id().to_string()))
}
