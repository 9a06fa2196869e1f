//! Gini index and top-q share estimation for fat-tailed positive data.
//!
//! The stable-limit helpers assume a pure Pareto data generating process, for
//! which the slowly varying normaliser L₀(n) reduces to C_α^{−1/α}.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::dists::{stable_mode, StableParams};
use crate::error::{invalid, require, Error, Result};
use crate::sample::Sample;
use crate::special::gamma;

#[derive(Debug, Clone, Serialize)]
pub struct GiniReport {
    pub g_np: f64,
    pub g_corrected: f64,
    pub g_mle: Option<f64>,
    pub alpha_used: f64,
    pub gamma_n: f64,
    pub mode_shift: f64,
}

impl GiniReport {
    /// Attach the tail-based estimate 1/(2α̂−1).
    pub fn with_mle(mut self, alpha_hat: f64) -> Result<Self> {
        self.g_mle = Some(gini_mle_pareto(alpha_hat)?);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuantileContribution {
    pub q: f64,
    pub kappa_q_hat: f64,
    pub kappa_q_theory: Option<f64>,
}

fn positive_sample(sample: &Sample) -> Result<()> {
    sample.require_positive()?;
    if sample.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, have: sample.len() });
    }
    Ok(())
}

/// Σ_{i<j}|x_i − x_j| / ((n−1)Σx), from the order statistics in O(n log n).
pub fn gini_nonparametric(sample: &Sample) -> Result<f64> {
    positive_sample(sample)?;
    let x = sample.sorted();
    Ok(gini_sorted(&x))
}

/// Same estimator on an ascending slice; no validation.
pub fn gini_sorted(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut num, mut tot) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        num += (2.0 * (i as f64 + 1.0) - n - 1.0) * v;
        tot += v;
    }
    num / ((n - 1.0) * tot)
}

/// The literal pairwise form. Quadratic; kept for cross-checks on small n.
pub fn gini_pairwise(sample: &Sample) -> Result<f64> {
    positive_sample(sample)?;
    require(sample.len() <= 20_000, || "pairwise Gini is quadratic; use gini_nonparametric".into())?;
    let x = &sample.values;
    let mut num = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            num += (x[i] - x[j]).abs();
        }
    }
    let n = x.len() as f64;
    Ok(num / ((n - 1.0) * x.iter().sum::<f64>()))
}

/// Gini of a Pareto law, 1/(2α−1), evaluated at the tail estimate.
pub fn gini_mle_pareto(alpha_hat: f64) -> Result<f64> {
    require(alpha_hat > 0.5 && alpha_hat.is_finite(), || format!("Gini needs alpha > 1/2, got {alpha_hat}"))?;
    Ok(1.0 / (2.0 * alpha_hat - 1.0))
}

/// Asymptotic standard deviation of the tail-based Gini, 2α/(√n(2α−1)²).
pub fn gini_mle_stderr(alpha: f64, n: usize) -> Result<f64> {
    gini_mle_pareto(alpha)?;
    require(n > 0, || "n must be positive".into())?;
    Ok(2.0 * alpha / ((n as f64).sqrt() * (2.0 * alpha - 1.0).powi(2)))
}

/// Γ(2−α)|cos(πα/2)|/(α−1), the domain-of-attraction constant.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    require(alpha > 1.0 && alpha < 2.0, || format!("alpha must lie in (1,2), got {alpha}"))?;
    Ok(gamma(2.0 - alpha) * (FRAC_PI_2 * alpha).cos().abs() / (alpha - 1.0))
}

/// Scale of the stable law approximating G^NP − g for n draws with mean μ.
pub fn gini_stable_scale(alpha: f64, n: usize, mu: f64) -> Result<f64> {
    let c = c_alpha(alpha)?;
    require(n >= 2, || "n must be at least 2".into())?;
    require(mu > 0.0 && mu.is_finite(), || "mean must be positive".into())?;
    Ok(c.powf(-1.0 / alpha) / (mu * (n as f64).powf((alpha - 1.0) / alpha)))
}

/// Limit law of G^NP − g for unit-minimum Pareto data: S(α, 1, γ(n), 0).
pub fn gini_stable_limit(alpha: f64, n: usize) -> Result<StableParams> {
    require(alpha > 1.0 && alpha < 2.0, || format!("alpha must lie in (1,2), got {alpha}"))?;
    let sigma = gini_stable_scale(alpha, n, alpha / (alpha - 1.0))?;
    Ok(StableParams { alpha_s: alpha, beta: 1.0, mu: 0.0, sigma })
}

/// Same limit with the scale from the delta method on Z − gX, whose right
/// tail is (1−g)X: γ = (1−g)·C_α^{1/α}/(μ n^{(α−1)/α}). Tracks Monte Carlo
/// quantiles of G^NP − g much more closely than `gini_stable_limit`.
pub fn gini_stable_limit_delta(alpha: f64, n: usize) -> Result<StableParams> {
    let p = gini_stable_limit(alpha, n)?;
    let g = 1.0 / (2.0 * alpha - 1.0);
    let c = c_alpha(alpha)?;
    Ok(StableParams { sigma: p.sigma * (1.0 - g) * c.powf(2.0 / alpha), ..p })
}

/// |mode| of the zero-mean S(α, 1, γ, 0).
pub fn gini_mode_shift(alpha: f64, gamma_n: f64) -> Result<f64> {
    let p = StableParams { alpha_s: alpha, beta: 1.0, mu: 0.0, sigma: gamma_n };
    Ok(stable_mode(&p)?.abs())
}

/// Nonparametric Gini shifted by the mode-mean distance of its stable limit.
pub fn gini_corrected(sample: &Sample, alpha: f64, mu: f64) -> Result<GiniReport> {
    let g_np = gini_nonparametric(sample)?;
    let gamma_n = gini_stable_scale(alpha, sample.len(), mu)?;
    let mode_shift = gini_mode_shift(alpha, gamma_n)?;
    Ok(GiniReport { g_np, g_corrected: g_np + mode_shift, g_mle: None, alpha_used: alpha, gamma_n, mode_shift })
}

/// q^{(α−1)/α}, the top-q share of a Pareto law.
pub fn kappa_q_theory(alpha: f64, q: f64) -> Result<f64> {
    require(alpha > 1.0, || format!("top share needs a finite mean, alpha = {alpha}"))?;
    check_q(q)?;
    Ok(q.powf((alpha - 1.0) / alpha))
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("q must lie in (0,1), got {q}")))
    }
}

/// Number of observations counted as the top q of n.
fn top_count(n: usize, q: f64) -> usize {
    // n − ⌈(1−q)n⌉, guarded against 0.99·100 = 98.99999…
    let below = ((1.0 - q) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    n - below.min(n)
}

/// Share of the sum held by the k = n − ⌈(1−q)n⌉ largest values, on an
/// ascending slice.
pub fn kappa_q_sorted(x: &[f64], q: f64) -> f64 {
    let k = top_count(x.len(), q);
    let tot: f64 = x.iter().sum();
    x[x.len() - k..].iter().sum::<f64>() / tot
}

pub fn quantile_contribution(sample: &Sample, q: f64, alpha: Option<f64>) -> Result<QuantileContribution> {
    check_q(q)?;
    positive_sample(sample)?;
    let kappa_q_hat = kappa_q_sorted(&sample.sorted(), q);
    let kappa_q_theory = alpha.map(|a| kappa_q_theory(a, q)).transpose()?;
    Ok(QuantileContribution { q, kappa_q_hat, kappa_q_theory })
}

/// (Σ (S_i/S)·κ̂_q(N_i), κ̂_q(pooled)).
pub fn superadditivity_check(samples: &[Sample], q: f64) -> Result<(f64, f64)> {
    require(!samples.is_empty(), || "need at least one subsample".into())?;
    let mut pooled = Vec::new();
    let mut parts = Vec::with_capacity(samples.len());
    for s in samples {
        let k = quantile_contribution(s, q, None)?.kappa_q_hat;
        let sum: f64 = s.values.iter().sum();
        parts.push((sum, k));
        pooled.extend_from_slice(&s.values);
    }
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let weighted = parts.iter().map(|(s, k)| s / total * k).sum();
    pooled.sort_by(f64::total_cmp);
    Ok((weighted, kappa_q_sorted(&pooled, q)))
}
