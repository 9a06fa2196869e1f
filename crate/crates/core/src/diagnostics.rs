//! Moment-convergence and memory diagnostics on raw series: MS plots,
//! max-to-sum contributions, kurtosis under aggregation, excess conditional
//! expectations, record counts and drawdowns.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{require, Result};
use crate::rng;
use crate::sample::Sample;
use crate::special::{harmonic, harmonic2};

/// Exceedance count below which an excess-expectation entry is flagged.
pub const LOW_CONFIDENCE_COUNT: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct MsCurve {
    pub p: f64,
    /// (n, R_n^p) for n = 1..len.
    pub ratios: Vec<(usize, f64)>,
}

impl MsCurve {
    pub fn last(&self) -> f64 {
        self.ratios.last().map_or(0.0, |r| r.1)
    }
}

/// Running max of |x|^p over running sum of |x|^p.
pub fn ms_plot(sample: &Sample, p: f64) -> Result<MsCurve> {
    require(p > 0.0, || format!("p must be positive, got {p}"))?;
    let mut max = 0.0f64;
    let mut sum = 0.0f64;
    let ratios = sample
        .values
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let v = x.abs().powf(p);
            max = max.max(v);
            sum += v;
            (i + 1, if sum > 0.0 { max / sum } else { 0.0 })
        })
        .collect();
    Ok(MsCurve { p, ratios })
}

/// Share of Σ|x|^p contributed by the single largest term.
pub fn max_moment_contribution(sample: &Sample, p: f64) -> Result<f64> {
    Ok(ms_plot(sample, p)?.last())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LagKurtosis {
    pub lag: usize,
    pub kurtosis: f64,
    pub excess: f64,
    pub blocks: usize,
}

/// Raw fourth standardized moment of a slice.
pub fn kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    m4 * n / (m2 * m2)
}

/// Kurtosis of non-overlapping k-sums for each lag k.
pub fn kurtosis_under_aggregation(sample: &Sample, lags: &[usize]) -> Result<Vec<LagKurtosis>> {
    lags.iter()
        .map(|&lag| {
            require(lag >= 1, || "lags must be at least 1".into())?;
            let sums: Vec<f64> = sample.values.chunks_exact(lag).map(|c| c.iter().sum()).collect();
            require(sums.len() >= 4, || format!("lag {lag} leaves fewer than 4 blocks"))?;
            let k = kurtosis(&sums);
            Ok(LagKurtosis { lag, kurtosis: k, excess: k - 3.0, blocks: sums.len() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExcessEntry {
    pub k: f64,
    /// E(X | X > K)/K, or the mirrored E(−X | X < −K)/K on the left.
    pub phi: f64,
    pub count: usize,
    pub low_confidence: bool,
}

/// Relative excess conditional expectation at each threshold K > 0.
pub fn excess_conditional_expectation(sample: &Sample, ks: &[f64], side: Side) -> Result<Vec<ExcessEntry>> {
    ks.iter()
        .map(|&k| {
            require(k > 0.0, || format!("thresholds must be positive, got {k}"))?;
            let sign = if side == Side::Right { 1.0 } else { -1.0 };
            let (mut sum, mut count) = (0.0, 0usize);
            for &x in &sample.values {
                let y = sign * x;
                if y > k {
                    sum += y;
                    count += 1;
                }
            }
            let phi = if count > 0 { sum / count as f64 / k } else { f64::NAN };
            Ok(ExcessEntry { k, phi, count, low_confidence: count < LOW_CONFIDENCE_COUNT })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Records {
    pub count: usize,
    /// H_t, the expected count for i.i.d. continuous data.
    pub expected: f64,
    /// √(H_t − H_t⁽²⁾).
    pub stderr: f64,
}

/// Number of running maxima, with the i.i.d. expectation.
pub fn gumbel_records(sample: &Sample) -> Result<Records> {
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    for &x in &sample.values {
        if x > best {
            best = x;
            count += 1;
        }
    }
    let t = sample.len() as u64;
    let h = harmonic(t)?;
    let var = h - harmonic2(t)?;
    Ok(Records { count, expected: h, stderr: var.max(0.0).sqrt() })
}

/// For each start t with a full window, min(0, min_{t<s<t+w} x_s − x_t); on
/// price series flagged as returns the log ratio ln(min/x_t) is used instead.
pub fn max_drawdown(sample: &Sample, window: usize) -> Result<Vec<f64>> {
    require(window >= 2, || format!("window must be at least 2, got {window}"))?;
    let xs = &sample.values;
    require(xs.len() >= window, || "series shorter than the window".into())?;
    if sample.is_returns {
        sample.require_positive()?;
    }
    let starts = xs.len() - window + 1;
    // forward minimum over (t, t+w) with a monotone deque, scanned right to left
    let mut out = vec![0.0; starts];
    let mut dq: VecDeque<usize> = VecDeque::new();
    for t in (0..xs.len()).rev() {
        if t < starts {
            while dq.front().is_some_and(|&i| i >= t + window) {
                dq.pop_front();
            }
            let m = xs[*dq.front().expect("window holds at least one point")];
            out[t] = if sample.is_returns { (m / xs[t]).ln().min(0.0) } else { (m - xs[t]).min(0.0) };
        }
        while dq.back().is_some_and(|&i| xs[i] >= xs[t]) {
            dq.pop_back();
        }
        dq.push_back(t);
    }
    Ok(out)
}

/// Lag-k sample autocorrelation.
pub fn autocorrelation(sample: &Sample, lag: usize) -> Result<f64> {
    let xs = &sample.values;
    require(lag < xs.len(), || "lag exceeds series length".into())?;
    let m = sample.mean();
    let den: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let num: f64 = xs.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    Ok(num / den)
}

/// Seeded permutation that destroys temporal structure.
pub fn reshuffle(sample: &Sample, seed: u64) -> Sample {
    let mut values = sample.values.clone();
    values.shuffle(&mut rng::stream(seed, 0));
    Sample { values, name: format!("{} (reshuffled)", sample.name), is_returns: sample.is_returns }
}

/// Zipf plot of the upper tail: (ln x, ln survival) for the top fraction of
/// positive values, with the least-squares slope and R².
#[derive(Debug, Clone, Serialize)]
pub struct ZipfFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub r2: f64,
}

pub fn zipf_fit(values: &[f64], top_fraction: f64) -> Result<ZipfFit> {
    require(top_fraction > 0.0 && top_fraction <= 1.0, || "top fraction must be in (0, 1]".into())?;
    let mut xs: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    xs.sort_by(|a, b| b.total_cmp(a));
    let n = xs.len();
    let k = ((n as f64 * top_fraction) as usize).min(n);
    require(k >= 3, || "too few positive values for a Zipf fit".into())?;
    let points: Vec<(f64, f64)> = xs[..k].iter().enumerate().map(|(i, &x)| (x.ln(), ((i + 1) as f64 / n as f64).ln())).collect();
    let (slope, r2) = least_squares(&points);
    Ok(ZipfFit { points, slope, r2 })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn constant_series_ms_is_one_over_n() {
        let c = ms_plot(&s(&[2.0; 6]), 3.0).unwrap();
        for (n, r) in c.ratios {
            assert!((r - 1.0 / n as f64).abs() < 1e-15);
        }
        assert_eq!(max_moment_contribution(&s(&[1.0; 4]), 4.0).unwrap(), 0.25);
    }

    #[test]
    fn zero_prefix_ratio_is_zero() {
        let c = ms_plot(&s(&[0.0, 0.0, 1.0]), 2.0).unwrap();
        assert_eq!(c.ratios[0].1, 0.0);
        assert_eq!(c.ratios[2].1, 1.0);
    }

    #[test]
    fn excess_expectation_arithmetic() {
        let e = excess_conditional_expectation(&s(&[5.0, 10.0, 1.0]), &[4.0], Side::Right).unwrap();
        assert_eq!(e[0].phi, 1.875);
        assert!(e[0].low_confidence);
        let l = excess_conditional_expectation(&s(&[-5.0, -10.0, 1.0]), &[4.0], Side::Left).unwrap();
        assert_eq!(l[0].phi, 1.875);
    }

    #[test]
    fn records_on_monotone_series() {
        let up: Vec<f64> = (0..50).map(f64::from).collect();
        assert_eq!(gumbel_records(&s(&up)).unwrap().count, 50);
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert_eq!(gumbel_records(&s(&down)).unwrap().count, 1);
    }

    #[test]
    fn drawdown_examples() {
        assert_eq!(max_drawdown(&s(&[10.0, 5.0, 8.0]), 3).unwrap(), vec![-5.0]);
        let up: Vec<f64> = (1..20).map(f64::from).collect();
        assert!(max_drawdown(&s(&up), 4).unwrap().iter().all(|&d| d == 0.0));
        let d = max_drawdown(&s(&[10.0, 5.0, 8.0]).with_returns(true), 2).unwrap();
        assert!((d[0] - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn drawdown_matches_brute_force() {
        let xs = [3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0];
        for w in 2..6 {
            let fast = max_drawdown(&s(&xs), w).unwrap();
            for (t, d) in fast.iter().enumerate() {
                let m = xs[t + 1..t + w].iter().cloned().fold(f64::INFINITY, f64::min);
                assert_eq!(*d, (m - xs[t]).min(0.0));
            }
        }
    }
}
