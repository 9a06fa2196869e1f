//! Test-bed distributions: samplers, analytic moments and the tail-fattening
//! heuristics (two-state variance switching, bimodal mixtures, crossovers).
//!
//! Stable laws use the S1 parameterization: for α ≠ 1 the characteristic
//! function is exp(iμt − |σt|^α (1 − iβ tan(πα/2) sgn t)). At α = 2 this is a
//! Gaussian with variance 2σ², not σ².

use std::f64::consts::{FRAC_PI_2, PI};

use rand_distr::{Distribution, Exp, Gamma, LogNormal, Normal, StandardNormal, StudentT as StudentTDist};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require, Error, Result};
use crate::optim::golden_max;
use crate::quad::{integrate_pieces, QuadOptions};
use crate::rng::{self, open01, Rng};
use crate::sample::Sample;
use crate::special::{gamma, ln_gamma, norm_cdf, reg_incomplete_beta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoI {
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentT {
    pub alpha: f64,
    pub scale: f64,
    pub location: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lognormal {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha_s: f64,
    pub beta: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Gaussian whose variance is σ²(1+a) with probability p and σ²(1+b)
/// otherwise, b = −ap/(1−p) so that the overall variance stays σ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStateGaussian {
    pub sigma: f64,
    pub a: f64,
    pub p: f64,
}

impl TwoStateGaussian {
    pub fn b(&self) -> f64 {
        -self.a * self.p / (1.0 - self.p)
    }
}

/// Every distribution the estimators are exercised against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dist {
    Gaussian { mu: f64, sigma: f64 },
    Exponential { lambda: f64 },
    Pareto(ParetoI),
    Student(StudentT),
    Lognormal(Lognormal),
    Stable(StableParams),
    TwoState(TwoStateGaussian),
    /// Equal-weight mixture of N(μ₁, σ₁²) and N(μ₂, σ₂²).
    Mixture { mu1: f64, mu2: f64, sigma1: f64, sigma2: f64 },
    /// Centered Gaussian with Gamma(shape, mean/shape) distributed variance.
    GammaVariance { mean_var: f64, shape: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    require(v > 0.0 && v.is_finite(), || format!("{name} must be positive and finite, got {v}"))
}

fn finite(name: &str, v: f64) -> Result<()> {
    require(v.is_finite(), || format!("{name} must be finite, got {v}"))
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Dist::Gaussian { mu, sigma } => {
                finite("mu", mu)?;
                positive("sigma", sigma)
            }
            Dist::Exponential { lambda } => positive("lambda", lambda),
            Dist::Pareto(p) => {
                positive("alpha", p.alpha)?;
                positive("L", p.l)
            }
            Dist::Student(s) => {
                positive("alpha", s.alpha)?;
                positive("scale", s.scale)?;
                finite("location", s.location)
            }
            Dist::Lognormal(l) => {
                finite("mu", l.mu)?;
                positive("sigma", l.sigma)
            }
            Dist::Stable(s) => {
                require(s.alpha_s > 0.0 && s.alpha_s <= 2.0, || format!("alpha_s must be in (0, 2], got {}", s.alpha_s))?;
                require((-1.0..=1.0).contains(&s.beta), || format!("beta must be in [-1, 1], got {}", s.beta))?;
                finite("mu", s.mu)?;
                positive("sigma", s.sigma)
            }
            Dist::TwoState(t) => {
                positive("sigma", t.sigma)?;
                require(t.a >= 0.0 && t.a.is_finite(), || format!("a must be nonnegative, got {}", t.a))?;
                require(t.p > 0.0 && t.p < 1.0, || format!("p must be in (0, 1), got {}", t.p))?;
                require(t.b() > -1.0, || "second-state variance must stay positive".into())
            }
            Dist::Mixture { mu1, mu2, sigma1, sigma2 } => {
                finite("mu1", mu1)?;
                finite("mu2", mu2)?;
                positive("sigma1", sigma1)?;
                positive("sigma2", sigma2)
            }
            Dist::GammaVariance { mean_var, shape } => {
                positive("mean_var", mean_var)?;
                positive("shape", shape)
            }
        }
    }

    /// E(X) when finite.
    pub fn mean(&self) -> Result<f64> {
        self.validate()?;
        let no_mean = |alpha: f64| Err(Error::InfiniteMoment { order: 1.0, alpha });
        Ok(match *self {
            Dist::Gaussian { mu, .. } => mu,
            Dist::Exponential { lambda } => 1.0 / lambda,
            Dist::Pareto(p) if p.alpha > 1.0 => p.l * p.alpha / (p.alpha - 1.0),
            Dist::Pareto(p) => return no_mean(p.alpha),
            Dist::Student(s) if s.alpha > 1.0 => s.location,
            Dist::Student(s) => return no_mean(s.alpha),
            Dist::Lognormal(l) => (l.mu + 0.5 * l.sigma * l.sigma).exp(),
            Dist::Stable(s) if s.alpha_s > 1.0 => s.mu,
            Dist::Stable(s) => return no_mean(s.alpha_s),
            Dist::TwoState(_) | Dist::GammaVariance { .. } => 0.0,
            Dist::Mixture { mu1, mu2, .. } => 0.5 * (mu1 + mu2),
        })
    }

    /// Analytic CDF where one is cheap to evaluate.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        self.validate().ok()?;
        Some(match *self {
            Dist::Gaussian { mu, sigma } => norm_cdf((x - mu) / sigma),
            Dist::Exponential { lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-lambda * x).exp_m1()
                }
            }
            Dist::Pareto(p) => {
                if x <= p.l {
                    0.0
                } else {
                    1.0 - (p.l / x).powf(p.alpha)
                }
            }
            Dist::Student(s) => student_cdf((x - s.location) / s.scale, s.alpha),
            Dist::Lognormal(l) => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - l.mu) / l.sigma)
                }
            }
            Dist::Stable(s) if s.alpha_s == 2.0 => norm_cdf((x - s.mu) / (s.sigma * 2f64.sqrt())),
            Dist::Stable(_) | Dist::GammaVariance { .. } => return None,
            Dist::TwoState(t) => {
                let s1 = t.sigma * (1.0 + t.a).sqrt();
                let s2 = t.sigma * (1.0 + t.b()).sqrt();
                t.p * norm_cdf(x / s1) + (1.0 - t.p) * norm_cdf(x / s2)
            }
            Dist::Mixture { mu1, mu2, sigma1, sigma2 } => {
                0.5 * norm_cdf((x - mu1) / sigma1) + 0.5 * norm_cdf((x - mu2) / sigma2)
            }
        })
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        let bad = |e: &dyn std::fmt::Display| invalid(e.to_string());
        Ok(match *self {
            Dist::Gaussian { mu, sigma } => Sampler::Normal(Normal::new(mu, sigma).map_err(|e| bad(&e))?),
            Dist::Exponential { lambda } => Sampler::Exp(Exp::new(lambda).map_err(|e| bad(&e))?),
            Dist::Pareto(p) => Sampler::Pareto(p),
            Dist::Student(s) => Sampler::Student(StudentTDist::new(s.alpha).map_err(|e| bad(&e))?, s.scale, s.location),
            Dist::Lognormal(l) => Sampler::Lognormal(LogNormal::new(l.mu, l.sigma).map_err(|e| bad(&e))?),
            Dist::Stable(s) => Sampler::Stable(s),
            Dist::TwoState(t) => Sampler::TwoState {
                p: t.p,
                s1: t.sigma * (1.0 + t.a).sqrt(),
                s2: t.sigma * (1.0 + t.b()).sqrt(),
            },
            Dist::Mixture { mu1, mu2, sigma1, sigma2 } => Sampler::Mixture { mu1, mu2, sigma1, sigma2 },
            Dist::GammaVariance { mean_var, shape } => {
                Sampler::GammaVariance(Gamma::new(shape, mean_var / shape).map_err(|e| bad(&e))?)
            }
        })
    }

    /// n draws, deterministic in (self, n, seed) and in the number of workers.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        if n == 0 {
            return Err(Error::InsufficientData { needed: 1, have: 0 });
        }
        let sampler = self.sampler()?;
        let chunks = rng::par_shards(n, rng::SHARD, seed, |r, _, len| {
            (0..len).map(|_| sampler.draw(r)).collect::<Vec<f64>>()
        });
        Sample::named(chunks.concat(), self.label())
    }

    fn label(&self) -> String {
        match self {
            Dist::Gaussian { .. } => "gaussian",
            Dist::Exponential { .. } => "exponential",
            Dist::Pareto(_) => "pareto",
            Dist::Student(_) => "student",
            Dist::Lognormal(_) => "lognormal",
            Dist::Stable(_) => "stable",
            Dist::TwoState(_) => "two_state",
            Dist::Mixture { .. } => "mixture",
            Dist::GammaVariance { .. } => "gamma_variance",
        }
        .to_string()
    }
}

/// A validated distribution ready for repeated draws.
#[derive(Debug, Clone)]
pub enum Sampler {
    Normal(Normal<f64>),
    Exp(Exp<f64>),
    Pareto(ParetoI),
    Student(StudentTDist<f64>, f64, f64),
    Lognormal(LogNormal<f64>),
    Stable(StableParams),
    TwoState { p: f64, s1: f64, s2: f64 },
    Mixture { mu1: f64, mu2: f64, sigma1: f64, sigma2: f64 },
    GammaVariance(Gamma<f64>),
}

impl Sampler {
    #[inline]
    pub fn draw(&self, r: &mut Rng) -> f64 {
        match self {
            Sampler::Normal(d) => d.sample(r),
            Sampler::Exp(d) => d.sample(r),
            Sampler::Pareto(p) => p.l * open01(r).powf(-1.0 / p.alpha),
            Sampler::Student(d, scale, loc) => loc + scale * d.sample(r),
            Sampler::Lognormal(d) => d.sample(r),
            Sampler::Stable(s) => stable_draw(s, r),
            Sampler::TwoState { p, s1, s2 } => {
                let z: f64 = StandardNormal.sample(r);
                if open01(r) < *p {
                    s1 * z
                } else {
                    s2 * z
                }
            }
            Sampler::Mixture { mu1, mu2, sigma1, sigma2 } => {
                let z: f64 = StandardNormal.sample(r);
                if open01(r) < 0.5 {
                    mu1 + sigma1 * z
                } else {
                    mu2 + sigma2 * z
                }
            }
            Sampler::GammaVariance(g) => {
                let v = g.sample(r);
                let z: f64 = StandardNormal.sample(r);
                v.sqrt() * z
            }
        }
    }
}

/// Chambers–Mallows–Stuck in the S1 parameterization.
fn stable_draw(s: &StableParams, r: &mut Rng) -> f64 {
    let v = PI * (open01(r) - 0.5);
    let w = -open01(r).ln();
    let a = s.alpha_s;
    if (a - 1.0).abs() < 1e-12 {
        let h = FRAC_PI_2 + s.beta * v;
        let x = (h * v.tan() - s.beta * (FRAC_PI_2 * w * v.cos() / h).ln()) / FRAC_PI_2;
        return s.sigma * x + s.mu + s.beta * s.sigma * s.sigma.ln() / FRAC_PI_2;
    }
    let t = s.beta * (FRAC_PI_2 * a).tan();
    let b = t.atan() / a;
    let scale = (1.0 + t * t).powf(0.5 / a);
    let x = scale * (a * (v + b)).sin() / v.cos().powf(1.0 / a) * ((v - a * (v + b)).cos() / w).powf((1.0 - a) / a);
    s.sigma * x + s.mu
}

/// CDF of the standard Student t with ν degrees of freedom.
pub fn student_cdf(t: f64, nu: f64) -> f64 {
    let x = nu / (nu + t * t);
    let tail = 0.5 * reg_incomplete_beta(x, 0.5 * nu, 0.5).unwrap_or(0.0);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Raw kurtosis of the variance-preserving two-state Gaussian.
pub fn two_state_kurtosis(a: f64, p: f64) -> Result<f64> {
    require(a >= 0.0 && a.is_finite(), || format!("a must be nonnegative, got {a}"))?;
    require(p > 0.0 && p < 1.0, || format!("p must be in (0, 1), got {p}"))?;
    if p == 0.5 {
        return Ok(3.0 * (a * a + 1.0));
    }
    Ok(3.0 * ((1.0 - a * a) * p - 1.0) / (p - 1.0))
}

/// Raw kurtosis of the equal-weight two-Gaussian mixture.
pub fn mixture_kurtosis(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<f64> {
    positive("sigma1", sigma1)?;
    positive("sigma2", sigma2)?;
    let d2 = (mu1 - mu2).powi(2);
    let dv = sigma1 * sigma1 - sigma2 * sigma2;
    let den = d2 + 2.0 * (sigma1 * sigma1 + sigma2 * sigma2);
    Ok(3.0 - 2.0 * (d2 * d2 - 6.0 * dv * dv) / (den * den))
}

/// Mean separation at which the mixture has Gaussian kurtosis.
pub fn mixture_neutral_separation(sigma1: f64, sigma2: f64) -> f64 {
    let (hi, lo) = (sigma1.max(sigma2), sigma1.min(sigma2));
    6f64.powf(0.25) * (hi * hi - lo * lo).sqrt()
}

/// Points where a variance-preserving fattening of N(μ, σ²) crosses the
/// original density, ascending.
pub fn gaussian_crossovers(mu: f64, sigma: f64) -> Result<[f64; 4]> {
    positive("sigma", sigma)?;
    let r17 = 17f64.sqrt();
    let inner = (0.5 * (5.0 - r17)).sqrt();
    let outer = (0.5 * (5.0 + r17)).sqrt();
    Ok([mu - outer * sigma, mu - inner * sigma, mu + inner * sigma, mu + outer * sigma])
}

/// Crossovers for the cubic (α = 3) Student t with scale s.
pub fn student_cubic_crossovers(mu: f64, s: f64) -> Result<[f64; 4]> {
    positive("scale", s)?;
    let r13 = 13f64.sqrt();
    let inner = (4.0 - r13).sqrt();
    let outer = (4.0 + r13).sqrt();
    Ok([mu - outer * s, mu - inner * s, mu + inner * s, mu + outer * s])
}

/// Standard deviation over mean absolute deviation (both about the mean).
pub fn std_over_mad(dist: &Dist) -> Result<f64> {
    dist.validate()?;
    match *dist {
        Dist::Gaussian { .. } => Ok(FRAC_PI_2.sqrt()),
        Dist::Pareto(p) => {
            let a = p.alpha;
            if a <= 2.0 {
                return Err(Error::InfiniteMoment { order: 2.0, alpha: a });
            }
            // E|X−m| = 2 L α^{1−α} (α−1)^{α−2}; σ = Lα^{1/2}/((α−1)(α−2)^{1/2})
            Ok(((a - 0.5) * a.ln() - (a - 1.0) * (a - 1.0).ln()).exp() / (2.0 * (a - 2.0).sqrt()))
        }
        Dist::Student(s) => {
            let a = s.alpha;
            if a <= 2.0 {
                return Err(Error::InfiniteMoment { order: 2.0, alpha: a });
            }
            let sd = (a / (a - 2.0)).sqrt();
            let mad = 2.0 * a.sqrt() * (ln_gamma(0.5 * (a + 1.0)) - ln_gamma(0.5 * a)).exp() / (PI.sqrt() * (a - 1.0));
            Ok(sd / mad)
        }
        _ => Err(invalid("std_over_mad supports gaussian, pareto and student")),
    }
}

fn stable_tan(p: &StableParams) -> f64 {
    p.beta * (FRAC_PI_2 * p.alpha_s).tan()
}

/// E|X − μ| for a stable law with α_s ∈ (1, 2].
pub fn stable_mean_abs_dev(p: &StableParams) -> Result<f64> {
    Dist::Stable(*p).validate()?;
    if p.alpha_s <= 1.0 {
        return Err(Error::InfiniteMoment { order: 1.0, alpha: p.alpha_s });
    }
    let a = p.alpha_s;
    // (1 ± iβ tan)^{1/α} are conjugates; their sum is twice the real part
    let t = stable_tan(p);
    let re = (1.0 + t * t).powf(0.5 / a) * (t.atan() / a).cos();
    Ok(p.sigma / PI * gamma((a - 1.0) / a) * 2.0 * re)
}

/// Density of the S1 stable law by inversion of the characteristic function.
pub fn stable_pdf(p: &StableParams, x: f64) -> Result<f64> {
    Dist::Stable(*p).validate()?;
    let a = p.alpha_s;
    let z = (x - p.mu) / p.sigma;
    let c = if (a - 1.0).abs() < 1e-12 { 0.0 } else { stable_tan(p) };
    let f = |t: f64| {
        if t == 0.0 {
            return 1.0;
        }
        let ta = t.powf(a);
        (-ta).exp() * (ta * c - t * z).cos()
    };
    if (a - 1.0).abs() < 1e-12 && p.beta != 0.0 {
        return Err(invalid("stable_pdf does not cover the skewed alpha = 1 case"));
    }
    // e^{−t^α} < 1e−18 beyond t_max; break the range so each piece holds a
    // bounded number of oscillations
    let t_max = 42f64.powf(1.0 / a);
    let freq = z.abs() + c.abs() * a * t_max.powf(a - 1.0) + 1.0;
    let pieces = ((t_max * freq / PI).ceil() as usize).clamp(8, 4000);
    let pts: Vec<f64> = (0..=pieces).map(|i| t_max * i as f64 / pieces as f64).collect();
    let r = integrate_pieces(f, &pts, QuadOptions::tol(1e-15, 1e-12))?;
    Ok(r.value / (PI * p.sigma))
}

/// Mode of the S1 stable density by golden section.
pub fn stable_mode(p: &StableParams) -> Result<f64> {
    Dist::Stable(*p).validate()?;
    let unit = StableParams { mu: 0.0, sigma: 1.0, ..*p };
    let t = if (p.alpha_s - 1.0).abs() < 1e-12 { 0.0 } else { stable_tan(&unit) };
    // the mode sits between 0 and the S0 shift −β tan(πα/2)
    let (lo, hi) = (t.min(0.0) - 3.0 - t.abs(), t.max(0.0) + 3.0 + t.abs());
    let dens = |x: f64| stable_pdf(&unit, x).unwrap_or(f64::NEG_INFINITY);
    let m = golden_max(dens, lo, hi, 1e-10);
    if !(lo + 1e-6..=hi - 1e-6).contains(&m) {
        return Err(Error::Convergence(format!("stable mode search hit the bracket edge at {m}")));
    }
    Ok(p.mu + p.sigma * m)
}
