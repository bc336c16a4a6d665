//! Estimation utilities shared by the experiment modules: exponential-rate
//! fits with bootstrap intervals, batch-means standard errors, a chi-square
//! uniformity test, and numerically safe log-sum-exp.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("burn-in fraction must lie in [0, 0.5), got {0}")]
    BadBurnIn(f64),
    #[error("need at least 10 points after burn-in, got {0}")]
    TooFewPoints(usize),
    #[error("rate fits act on positive values; found {value} at step {step}")]
    NonPositive { step: f64, value: f64 },
    #[error("logged rate fits need finite ordinates; found {value} at step {step}")]
    NonFinite { step: f64, value: f64 },
}

/// An exponential rate fitted to a positive series: slope of ln(value)
/// against step, with a residual-bootstrap confidence interval.
#[derive(Debug, Clone, Serialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub r2: f64,
    pub burn_in: f64,
    #[serde(skip)]
    pub intercept: f64,
}

const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0x0f17_5eed;

/// Ordinary least squares of ln(value) on step after discarding the first
/// `burn_in` fraction of the series. The 95% confidence interval comes from
/// a residual bootstrap with a fixed internal seed, so fits are reproducible.
pub fn fit_rate(series: &[(f64, f64)], burn_in: f64) -> Result<RateEstimate, FitError> {
    if !(0.0..0.5).contains(&burn_in) {
        return Err(FitError::BadBurnIn(burn_in));
    }
    let skip = (burn_in * series.len() as f64).ceil() as usize;
    let kept = &series[skip.min(series.len())..];
    if kept.len() < 10 {
        return Err(FitError::TooFewPoints(kept.len()));
    }
    for &(step, value) in kept {
        if !(value > 0.0) {
            return Err(FitError::NonPositive { step, value });
        }
    }
    let xs: Vec<f64> = kept.iter().map(|&(s, _)| s).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, v)| v.ln()).collect();
    Ok(fit_logged_core(&xs, &ys, burn_in))
}

/// Same fit as `fit_rate` for a series whose ordinates are already
/// logarithms, so values spanning thousands of e-folds never leave log
/// scale.
pub fn fit_rate_logged(series: &[(f64, f64)], burn_in: f64) -> Result<RateEstimate, FitError> {
    if !(0.0..0.5).contains(&burn_in) {
        return Err(FitError::BadBurnIn(burn_in));
    }
    let skip = (burn_in * series.len() as f64).ceil() as usize;
    let kept = &series[skip.min(series.len())..];
    if kept.len() < 10 {
        return Err(FitError::TooFewPoints(kept.len()));
    }
    for &(step, value) in kept {
        if !value.is_finite() {
            return Err(FitError::NonFinite { step, value });
        }
    }
    let xs: Vec<f64> = kept.iter().map(|&(s, _)| s).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, v)| v).collect();
    Ok(fit_logged_core(&xs, &ys, burn_in))
}

fn fit_logged_core(xs: &[f64], ys: &[f64], burn_in: f64) -> RateEstimate {
    let (slope, intercept, r2, residuals) = ols(xs, ys);
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resampled = vec![0.0; xs.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for (i, r) in resampled.iter_mut().enumerate() {
            let pick = residuals[rng.gen_range(0..residuals.len())];
            *r = intercept + slope * xs[i] + pick;
        }
        let (s, _, _, _) = ols(&xs, &resampled);
        slopes.push(s);
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ci_lo = percentile_sorted(&slopes, 2.5);
    let ci_hi = percentile_sorted(&slopes, 97.5);
    RateEstimate { slope, ci_lo, ci_hi, r2, burn_in, intercept }
}

pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, Vec<f64>) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            ss_res += r * r;
            ss_tot += (y - my) * (y - my);
            r
        })
        .collect();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, r2, residuals)
}

/// Mean and batch-means standard error of a correlated series.
///
/// Consecutive values are grouped into batches of `batch_len`; the standard
/// error of the overall mean is estimated from the spread of batch means,
/// which absorbs short-range correlation. Returns (mean, se, batches used).
pub fn batch_means(series: &[f64], batch_len: usize) -> (f64, f64, usize) {
    assert!(batch_len > 0, "batch length must be positive");
    let nb = series.len() / batch_len;
    if nb < 2 {
        let mean = series.iter().sum::<f64>() / series.len().max(1) as f64;
        return (mean, f64::NAN, nb);
    }
    let means: Vec<f64> = (0..nb)
        .map(|b| series[b * batch_len..(b + 1) * batch_len].iter().sum::<f64>() / batch_len as f64)
        .collect();
    let (mean, sd) = mean_sd(&means);
    (mean, sd / (nb as f64).sqrt(), nb)
}

/// Pools batch means from several independent series into one estimate.
/// Returns (mean, se, total batches).
pub fn pooled_batch_means(series: &[Vec<f64>], batch_len: usize) -> (f64, f64, usize) {
    let mut pooled = Vec::new();
    for s in series {
        let nb = s.len() / batch_len;
        for b in 0..nb {
            pooled.push(s[b * batch_len..(b + 1) * batch_len].iter().sum::<f64>() / batch_len as f64);
        }
    }
    let (mean, sd) = mean_sd(&pooled);
    (mean, sd / (pooled.len() as f64).sqrt(), pooled.len())
}

/// Sample mean and standard deviation (n-1 normalization).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// ln Σ exp(x_i), shifted by the maximum so it never overflows. An input
/// of all zeros returns exactly ln(n).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Chi-square test of uniformity over equally likely bins.
/// Returns the statistic and the p-value under k-1 degrees of freedom.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let k = counts.len();
    assert!(k >= 2, "need at least two bins");
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / k as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = ChiSquared::new((k - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}

/// Linear-interpolation percentile of an unsorted sample, p in [0, 100].
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    percentile_sorted(&v, p)
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = (p / 100.0).clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}
