//! Dual-distribution machinery for bounded variables whose observed tail
//! looks like an infinite-mean power law: the log transform that removes the
//! upper bound, the shadow mean, quantiles and expected shortfall, and the
//! rescaling pipeline for historical counts.

use rand::seq::index::sample as sample_indices;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{domain, require, Error, Result};
use crate::rng;
use crate::sample::Sample;
use crate::special::{exponential_integral, upper_incomplete_gamma};
use crate::tailfit::{gpd_fit_mle, GpdFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSpec {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Lstar")]
    pub lstar: f64,
}

impl DualSpec {
    pub fn new(l: f64, h: f64, lstar: f64) -> Result<Self> {
        let s = Self { l, h, lstar };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        require(self.l > 0.0 && self.l.is_finite(), || format!("L must be positive, got {}", self.l))?;
        require(self.h > self.l && self.h.is_finite(), || format!("H must be finite and exceed L, got {}", self.h))?;
        require(self.lstar >= self.l && self.lstar < self.h, || format!("need L <= L* < H, got L*={}", self.lstar))
    }
}

fn phi(anchor: f64, h: f64, y: f64) -> f64 {
    // ln((H−a)/(H−y)) written to keep precision when y ≪ H
    anchor + h * ((y - anchor) / (h - y)).ln_1p()
}

fn phi_inv(anchor: f64, h: f64, z: f64) -> f64 {
    anchor - (h - anchor) * (-(z - anchor) / h).exp_m1()
}

/// φ(y) = L − H log((H − y)/(H − L)).
pub fn dual_transform(y: f64, spec: &DualSpec) -> Result<f64> {
    spec.validate()?;
    if !(y >= spec.l && y < spec.h) {
        return Err(domain(format!("y={y} outside [L, H) = [{}, {})", spec.l, spec.h)));
    }
    Ok(phi(spec.l, spec.h, y))
}

/// (L − H)e^{(L−z)/H} + H.
pub fn dual_inverse(z: f64, spec: &DualSpec) -> Result<f64> {
    spec.validate()?;
    if !(z >= spec.l) || z.is_nan() {
        return Err(domain(format!("z={z} below L={}", spec.l)));
    }
    Ok(phi_inv(spec.l, spec.h, z))
}

fn check_tail(alpha: f64, sigma: f64) -> Result<()> {
    require(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be positive, got {alpha}"))?;
    require(sigma > 0.0 && sigma.is_finite(), || format!("sigma must be positive, got {sigma}"))
}

/// S(x) = e^x x^α Γ(1−α, x), which tends to 1 as x grows.
fn tail_factor(alpha: f64, x: f64) -> Result<f64> {
    if x > 40.0 {
        // e^x x^α Γ(1−α, x) ~ Σ (−1)^k (α)_k / x^k
        let (mut sum, mut term) = (1.0, 1.0);
        for k in 0..200 {
            let next = -term * (alpha + k as f64) / x;
            if next.abs() >= term.abs() || next.abs() < 1e-17 {
                break;
            }
            term = next;
            sum += term;
        }
        return Ok(sum);
    }
    let g = upper_incomplete_gamma(1.0 - alpha, x)?;
    Ok((alpha * x.ln() + x).exp() * g)
}

/// Density of Y above L*, from a GPD(1/α, σ) tail on the dual.
pub fn shadow_pdf(y: f64, spec: &DualSpec, alpha: f64, sigma: f64) -> Result<f64> {
    spec.validate()?;
    check_tail(alpha, sigma)?;
    if y < spec.lstar || y >= spec.h {
        return Ok(0.0);
    }
    let w = phi(spec.lstar, spec.h, y) - spec.lstar;
    Ok(spec.h * (-(alpha + 1.0) * (w / (alpha * sigma)).ln_1p()).exp() / (sigma * (spec.h - y)))
}

/// 1 − (1 + H log((H − L*)/(H − y))/(ασ))^{−α}.
pub fn shadow_cdf(y: f64, spec: &DualSpec, alpha: f64, sigma: f64) -> Result<f64> {
    spec.validate()?;
    check_tail(alpha, sigma)?;
    if y <= spec.lstar {
        return Ok(0.0);
    }
    if y >= spec.h {
        return Ok(1.0);
    }
    let w = phi(spec.lstar, spec.h, y) - spec.lstar;
    Ok(-(-alpha * (w / (alpha * sigma)).ln_1p()).exp_m1())
}

/// E[Y | Y > L*] = (H − L*)e^{ασ/H}(ασ/H)^α Γ(1 − α, ασ/H) + L*.
///
/// Finite for every α > 0 because the support stops at H.
pub fn shadow_mean(spec: &DualSpec, alpha: f64, sigma: f64) -> Result<f64> {
    spec.validate()?;
    check_tail(alpha, sigma)?;
    let c = alpha * sigma / spec.h;
    Ok(spec.lstar + (spec.h - spec.lstar) * tail_factor(alpha, c)?)
}

/// Quantile of Y given Y ≥ L*.
pub fn shadow_quantile(p: f64, spec: &DualSpec, alpha: f64, sigma: f64) -> Result<f64> {
    spec.validate()?;
    check_tail(alpha, sigma)?;
    require((0.0..1.0).contains(&p), || format!("p must be in [0, 1), got {p}"))?;
    let c = alpha * sigma / spec.h;
    // γ(p) − c = c((1−p)^{−1/α} − 1)
    let x = c * (-(-p).ln_1p() / alpha).exp_m1();
    Ok(spec.lstar - (spec.h - spec.lstar) * (-x).exp_m1())
}

/// Mean excess e_u = E[Y − u | Y > u] for u ≥ L*.
pub fn shadow_mean_excess(u: f64, spec: &DualSpec, alpha: f64, sigma: f64) -> Result<f64> {
    spec.validate()?;
    check_tail(alpha, sigma)?;
    require(u >= spec.lstar && u < spec.h, || format!("u must be in [L*, H), got {u}"))?;
    let c = alpha * sigma / spec.h + ((u - spec.lstar) / (spec.h - u)).ln_1p();
    Ok((spec.h - u) * tail_factor(alpha, c)?)
}

/// E[Y | Y > u] = u + e_u.
pub fn shadow_expected_shortfall(u: f64, spec: &DualSpec, alpha: f64, sigma: f64) -> Result<f64> {
    Ok(u + shadow_mean_excess(u, spec, alpha, sigma)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShadowResult {
    pub alpha: f64,
    pub sigma: f64,
    pub shadow_mean: f64,
    pub sample_mean: f64,
    pub ratio: f64,
}

/// Fit a GPD to the dual of the observations above L* and report the shadow
/// mean next to the sample mean of the same observations.
pub fn shadow_from_sample(sample: &Sample, spec: &DualSpec) -> Result<(ShadowResult, GpdFit)> {
    spec.validate()?;
    let ys: Vec<f64> = sample.values.iter().copied().filter(|&y| y > spec.lstar).collect();
    if let Some(&bad) = ys.iter().find(|&&y| y >= spec.h) {
        return Err(domain(format!("observation {bad} at or above H={}", spec.h)));
    }
    require(ys.len() >= 3, || format!("need at least 3 observations above L*, have {}", ys.len()))?;
    let zs: Vec<f64> = ys.iter().map(|&y| phi(spec.lstar, spec.h, y)).collect();
    let fit = gpd_fit_mle(&Sample::new(zs)?, spec.lstar)?;
    if fit.xi <= 0.0 {
        return Err(Error::Degenerate(format!("dual tail has xi={} <= 0; no power-law tail to extrapolate", fit.xi)));
    }
    let alpha = 1.0 / fit.xi;
    let sm = shadow_mean(spec, alpha, fit.beta)?;
    let sample_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    Ok((ShadowResult { alpha, sigma: fit.beta, shadow_mean: sm, sample_mean, ratio: sm / sample_mean }, fit))
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdChoice {
    pub u: f64,
    /// (u, ξ̂, se ξ̂) for every candidate that could be fitted.
    pub path: Vec<(f64, f64, f64)>,
}

/// Lowest candidate threshold whose GPD shape agrees, within the larger of
/// the two standard errors, with the fit at every higher candidate.
pub fn select_threshold(sample: &Sample, candidates: &[f64]) -> Result<ThresholdChoice> {
    let mut us = candidates.to_vec();
    us.sort_by(f64::total_cmp);
    let path: Vec<(f64, f64, f64)> =
        us.iter().filter_map(|&u| gpd_fit_mle(sample, u).ok().map(|f| (u, f.xi, f.stderrs.0))).collect();
    require(!path.is_empty(), || "no candidate threshold leaves a fittable tail".into())?;
    let u = path
        .iter()
        .enumerate()
        .find(|(i, (_, xi, se))| path[i + 1..].iter().all(|(_, x2, s2)| (x2 - xi).abs() <= se.max(*s2)))
        .map(|(_, p)| p.0)
        .expect("the last candidate always qualifies");
    Ok(ThresholdChoice { u, path })
}

/// Naive rescaling x_t·(today/pop_t).
pub fn rescale_series(raw: &Sample, populations: &Sample, today_pop: f64) -> Result<Sample> {
    require(today_pop > 0.0 && today_pop.is_finite(), || format!("today's population must be positive, got {today_pop}"))?;
    require(raw.len() == populations.len(), || {
        format!("{} observations but {} population values", raw.len(), populations.len())
    })?;
    populations.require_positive()?;
    let values = raw.values.iter().zip(&populations.values).map(|(x, p)| x * (today_pop / p)).collect();
    Sample::named(values, format!("{} (rescaled)", raw.name))
}

/// φ applied pointwise.
pub fn smooth_rescale(sample: &Sample, spec: &DualSpec) -> Result<Sample> {
    let values = sample.values.iter().map(|&y| dual_transform(y, spec)).collect::<Result<Vec<_>>>()?;
    Sample::named(values, format!("{} (log-rescaled)", sample.name))
}

/// Replace each value by a uniform draw from its [low, high] bounds.
pub fn perturb_within_bounds(lows: &[f64], highs: &[f64], seed: u64) -> Result<Sample> {
    require(lows.len() == highs.len(), || "bounds must have equal length".into())?;
    let mut r = rng::stream(seed, 0);
    let values = lows
        .iter()
        .zip(highs)
        .map(|(&lo, &hi)| {
            require(lo <= hi, || format!("low bound {lo} above high bound {hi}"))?;
            Ok(if lo == hi { lo } else { r.random_range(lo..=hi) })
        })
        .collect::<Result<Vec<_>>>()?;
    Sample::named(values, "perturbed")
}

/// Mean of a Pareto–Lomax(α, σ) above L pushed back onto [L, H]:
/// αH(1/α − (H−L)e^{σ/H}E_{α+1}(σ/H)/H).
pub fn lomax_bounded_mean(l: f64, h: f64, sigma: f64, alpha: f64) -> Result<f64> {
    DualSpec::new(l, h, l)?;
    check_tail(alpha, sigma)?;
    let s = sigma / h;
    if s > 40.0 {
        return Ok(l + (h - l) * tail_factor(alpha, s)?);
    }
    // αe^sE_{α+1}(s) = 1 − s e^s E_α(s); the right side avoids cancelling H
    Ok(l + (h - l) * s * s.exp() * exponential_integral(alpha, s)?)
}

/// Mean of the Lomax truncated to [L, H] by an indicator instead of the
/// smooth map.
pub fn heaviside_conditional_mean(l: f64, h: f64, sigma: f64, alpha: f64) -> Result<f64> {
    DualSpec::new(l, h, l)?;
    check_tail(alpha, sigma)?;
    let t = (h - l + sigma) / sigma;
    if (alpha - 1.0).abs() < 1e-9 {
        // limit of the closed form at α = 1
        let inv = 1.0 - 1.0 / t;
        return Ok(l - sigma + sigma * t.ln() / inv);
    }
    // ασ^α(H−L)/(σ^α − (H−L+σ)^α), scaled by σ^α
    let ratio = alpha * (h - l) / (1.0 - t.powf(alpha));
    Ok((ratio + (alpha - 1.0) * l + sigma) / (alpha - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ShadowBootstrap {
    pub xi: Vec<f64>,
    pub shadow_mean: Vec<f64>,
    /// (5%, 50%, 95%) percentiles of ξ.
    pub xi_interval: (f64, f64, f64),
    pub shadow_interval: (f64, f64, f64),
}

fn percentiles(v: &[f64]) -> (f64, f64, f64) {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let at = |q: f64| s[((s.len() - 1) as f64 * q).round() as usize];
    (at(0.05), at(0.5), at(0.95))
}

/// Refit on random subsamples (without replacement) of a fraction of the data.
/// Failed refits are skipped.
pub fn bootstrap_shadow(sample: &Sample, spec: &DualSpec, reps: usize, frac: f64, seed: u64) -> Result<ShadowBootstrap> {
    require(reps >= 2, || "need at least 2 replications".into())?;
    require(frac > 0.0 && frac <= 1.0, || format!("fraction must be in (0, 1], got {frac}"))?;
    let n = sample.len();
    let m = ((n as f64 * frac).round() as usize).max(1);
    let fits = rng::par_shards(reps, 1, seed, |r, _, _| {
        let idx = sample_indices(r, n, m);
        let values: Vec<f64> = idx.iter().map(|i| sample.values[i]).collect();
        Sample::new(values).and_then(|s| shadow_from_sample(&s, spec)).ok()
    });
    let (xi, shadow): (Vec<f64>, Vec<f64>) = fits.into_iter().flatten().map(|(r, f)| (f.xi, r.shadow_mean)).unzip();
    if xi.len() < 2 {
        return Err(Error::Convergence("fewer than two bootstrap refits succeeded".into()));
    }
    Ok(ShadowBootstrap { xi_interval: percentiles(&xi), shadow_interval: percentiles(&shadow), xi, shadow_mean: shadow })
}

/// Parameters of a synthetic casualty tail, in units of 10⁴ people.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WarParams {
    pub xi: f64,
    pub beta: f64,
    pub n_exceed: usize,
    pub lstar: f64,
    pub h: f64,
}

impl Default for WarParams {
    /// Rescaled casualties above 50k with H the present world population.
    fn default() -> Self {
        Self { xi: 1.8718, beta: 14.3254, n_exceed: 524, lstar: 5.0, h: 7.2e5 }
    }
}

/// Draw dual-GPD exceedances, map them into [L*, H) and run the shadow fit.
pub fn synthetic_war_pipeline(p: &WarParams, seed: u64) -> Result<ShadowResult> {
    let spec = DualSpec::new(p.lstar, p.h, p.lstar)?;
    let excess = crate::tailfit::gpd_sample(p.xi, p.beta, p.n_exceed, seed)?;
    let ys: Vec<f64> = excess
        .values
        .iter()
        .map(|w| phi_inv(p.lstar, p.h, p.lstar + w))
        // keep draws that round onto H inside the support
        .map(|y| if y < p.h { y } else { p.h * (1.0 - f64::EPSILON) })
        .filter(|&y| y > p.lstar)
        .collect();
    Ok(shadow_from_sample(&Sample::named(ys, "synthetic war tail")?, &spec)?.0)
}
