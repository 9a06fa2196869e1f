//! Tail-exponent inference: Pareto MLE and its exact sampling law, threshold
//! sweeps, GPD fits on exceedances, Fréchet calibration of sample maxima,
//! hidden-tail accounting and the mean bias from an uncertain exponent.

use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::optim::golden_max;
use crate::quad::{integrate, QuadOptions};
use crate::rng::{self, open01};
use crate::sample::Sample;
use crate::special::{gamma, gamma_p, gamma_q, ln_erfc, ln_gamma, norm_pdf};

/// Below this many exceedances a GPD fit is flagged.
pub const GPD_MIN_EXCEEDANCES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub alpha_hat: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub n_exceed: usize,
    pub stderr: f64,
    pub debiased: bool,
}

/// Pareto MLE α̂ = n/Σ log(x_i/L) over the x_i > L. With `debiased` the
/// estimate is scaled by (n−1)/n, which removes the n/(n−1) bias.
pub fn pareto_mle(sample: &Sample, l: f64, debiased: bool) -> Result<TailFit> {
    require(l > 0.0 && l.is_finite(), || format!("threshold must be positive, got {l}"))?;
    let (mut s, mut n) = (0.0, 0usize);
    for &x in &sample.values {
        if x > l {
            s += (x / l).ln();
            n += 1;
        }
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, have: n });
    }
    let nf = n as f64;
    let mut alpha_hat = nf / s;
    if debiased {
        alpha_hat *= (nf - 1.0) / nf;
    }
    Ok(TailFit { alpha_hat, l, n_exceed: n, stderr: alpha_hat / nf.sqrt(), debiased })
}

/// Hill-style sweep: for each k the threshold is the (k+1)-th largest value
/// and the fit uses the top k observations.
pub fn hill_sweep(sample: &Sample, ks: &[usize]) -> Result<Vec<TailFit>> {
    let mut xs = sample.values.clone();
    xs.sort_by(|a, b| b.total_cmp(a));
    ks.iter()
        .map(|&k| {
            require(k >= 2 && k < xs.len(), || format!("k must be in [2, {}), got {k}", xs.len()))?;
            let l = xs[k];
            require(l > 0.0, || "threshold order statistic is not positive".into())?;
            let s: f64 = xs[..k].iter().map(|x| (x / l).ln()).sum();
            let kf = k as f64;
            Ok(TailFit { alpha_hat: kf / s, l, n_exceed: k, stderr: kf / s / kf.sqrt(), debiased: false })
        })
        .collect()
}

/// Sampling law of the debiased MLE: inverse gamma with shape n and scale
/// α(n−1), optionally renormalized above a truncation point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaDensity {
    pub alpha: f64,
    pub n: usize,
    pub shape: f64,
    pub scale: f64,
    /// Lower end of the support; 0 when untruncated.
    pub lower: f64,
    /// Mass of the untruncated law above `lower`.
    pub mass: f64,
}

pub fn alpha_sampling_density(alpha_true: f64, n: usize, truncate_at: Option<f64>) -> Result<AlphaDensity> {
    require(alpha_true > 1.0 && alpha_true.is_finite(), || format!("alpha must exceed 1, got {alpha_true}"))?;
    require(n >= 2, || format!("n must be at least 2, got {n}"))?;
    let shape = n as f64;
    let scale = alpha_true * (shape - 1.0);
    let (lower, mass) = match truncate_at {
        None => (0.0, 1.0),
        Some(t) => {
            require(t >= 1.0 && t.is_finite(), || format!("truncation point must be at least 1, got {t}"))?;
            (t, gamma_p(shape, scale / t)?)
        }
    };
    require(mass > 0.0, || "no mass above the truncation point".into())?;
    Ok(AlphaDensity { alpha: alpha_true, n, shape, scale, lower, mass })
}

impl AlphaDensity {
    pub fn pdf(&self, a: f64) -> f64 {
        if a <= self.lower || a <= 0.0 {
            return 0.0;
        }
        let ln = self.shape * self.scale.ln() - (self.shape + 1.0) * a.ln() - self.scale / a - ln_gamma(self.shape);
        ln.exp() / self.mass
    }

    pub fn cdf(&self, a: f64) -> f64 {
        if a <= self.lower || a <= 0.0 {
            return 0.0;
        }
        // P(α̂ ≤ a) = Q(n, c/a); truncation subtracts the mass below `lower`
        let q = gamma_q(self.shape, self.scale / a).unwrap_or(f64::NAN);
        ((q - (1.0 - self.mass)) / self.mass).clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        let m = self.scale / (self.shape - 1.0);
        if self.lower > 0.0 {
            m * gamma_p(self.shape - 1.0, self.scale / self.lower).unwrap_or(f64::NAN) / self.mass
        } else {
            m
        }
    }

    pub fn mode(&self) -> f64 {
        (self.scale / (self.shape + 1.0)).max(self.lower)
    }
}

/// L·α̂/(α̂−1).
pub fn plugin_pareto_mean(fit: &TailFit) -> Result<f64> {
    if fit.alpha_hat <= 1.0 {
        return Err(Error::InfiniteMoment { order: 1.0, alpha: fit.alpha_hat });
    }
    Ok(fit.l * fit.alpha_hat / (fit.alpha_hat - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub xi: f64,
    pub beta: f64,
    pub u: f64,
    pub n_exceed: usize,
    /// (se ξ, se β).
    pub stderrs: (f64, f64),
    /// Fewer than [`GPD_MIN_EXCEEDANCES`] exceedances.
    pub low_count: bool,
}

/// GPD density of an excess w ≥ 0.
pub fn gpd_pdf(w: f64, xi: f64, beta: f64) -> f64 {
    if w < 0.0 || beta <= 0.0 {
        return 0.0;
    }
    if xi.abs() < 1e-12 {
        return (-w / beta).exp() / beta;
    }
    let z = 1.0 + xi * w / beta;
    if z <= 0.0 {
        return 0.0;
    }
    (-(1.0 / xi + 1.0) * z.ln()).exp() / beta
}

pub fn gpd_cdf(w: f64, xi: f64, beta: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if xi.abs() < 1e-12 {
        return -(-w / beta).exp_m1();
    }
    let z = 1.0 + xi * w / beta;
    if z <= 0.0 {
        return 1.0;
    }
    -(-z.ln() / xi).exp_m1()
}

pub fn gpd_quantile(p: f64, xi: f64, beta: f64) -> Result<f64> {
    require((0.0..1.0).contains(&p), || format!("p must be in [0, 1), got {p}"))?;
    require(beta > 0.0, || format!("beta must be positive, got {beta}"))?;
    let l = -(-p).ln_1p();
    Ok(if xi.abs() < 1e-12 { beta * l } else { beta * (xi * l).exp_m1() / xi })
}

/// n excesses drawn from GPD(ξ, β) by inversion.
pub fn gpd_sample(xi: f64, beta: f64, n: usize, seed: u64) -> Result<Sample> {
    require(beta > 0.0 && xi.is_finite(), || "need finite xi and positive beta".into())?;
    let mut r = rng::stream(seed, 0);
    let values = (0..n)
        .map(|_| {
            let e = -open01(&mut r).ln();
            if xi.abs() < 1e-12 {
                beta * e
            } else {
                beta * (xi * e).exp_m1() / xi
            }
        })
        .collect();
    Sample::named(values, format!("GPD(xi={xi}, beta={beta})"))
}

/// ln(1+θw)/θ, continuous through θ = 0.
fn log1p_over(theta: f64, w: f64) -> f64 {
    let t = theta * w;
    if t.abs() < 1e-10 {
        w * (1.0 - 0.5 * t)
    } else {
        t.ln_1p() / theta
    }
}

fn gpd_loglik(ws: &[f64], xi: f64, beta: f64) -> f64 {
    if beta <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = ws.len() as f64;
    let theta = xi / beta;
    let mut s = 0.0;
    for &w in ws {
        if 1.0 + theta * w <= 0.0 {
            return f64::NEG_INFINITY;
        }
        s += theta * log1p_over(theta, w);
    }
    // Σ ln(1+ξw/β) / ξ, with the ξ→0 limit Σ w/β
    let tail = if xi.abs() < 1e-12 { ws.iter().sum::<f64>() / beta } else { s / xi };
    -n * beta.ln() - s - tail
}

/// MLE of (ξ, β) on the excesses above u.
///
/// The likelihood is profiled over θ = ξ/β: for fixed θ the optimum is
/// ξ = mean ln(1+θw) and β = ξ/θ, which leaves a 1-D search.
pub fn gpd_fit_mle(sample: &Sample, u: f64) -> Result<GpdFit> {
    require(u.is_finite(), || "threshold must be finite".into())?;
    let ws: Vec<f64> = sample.values.iter().filter(|&&x| x > u).map(|x| x - u).collect();
    if ws.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, have: ws.len() });
    }
    let n = ws.len() as f64;
    let wmax = ws.iter().cloned().fold(0.0, f64::max);
    let profile = |tau: f64| -> f64 {
        let theta = tau / wmax;
        let mut sxi = 0.0;
        let mut sb = 0.0;
        for &w in &ws {
            let l = log1p_over(theta, w);
            sb += l;
            sxi += theta * l;
        }
        let xi = sxi / n;
        if xi < -1.0 {
            return f64::NEG_INFINITY;
        }
        -n * (sb / n).ln() - sxi - n
    };
    // τ = θ·max(w) lives in (−1, ∞)
    let mut grid: Vec<f64> = [-0.999, -0.99, -0.95, -0.9, -0.8, -0.6, -0.4, -0.2, -0.1, -0.03, -0.01, -1e-3].to_vec();
    grid.push(0.0);
    grid.extend((0..=64).map(|i| 10f64.powf(-3.0 + i as f64 / 8.0)));
    let mut vals: Vec<f64> = grid.iter().map(|&t| profile(t)).collect();
    let mut best = (0..grid.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("grid is nonempty");
    // very heavy tails push the optimum beyond the initial grid
    while best == grid.len() - 1 && grid[best] < 1e15 {
        let t = grid[best] * 10f64.powf(0.125);
        grid.push(t);
        vals.push(profile(t));
        if vals[best + 1] > vals[best] {
            best += 1;
        }
    }
    if best == grid.len() - 1 {
        return Err(Error::Convergence(format!(
            "GPD likelihood still rising at the boundary theta*max(w) = {:e}; tail too heavy for the excesses",
            grid[best]
        )));
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[best + 1];
    let tau = golden_max(profile, lo, hi, 1e-12 * (1.0 + hi.abs()));
    let tau = if profile(tau) >= vals[best] { tau } else { grid[best] };
    let theta = tau / wmax;
    let xi = ws.iter().map(|&w| theta * log1p_over(theta, w)).sum::<f64>() / n;
    let beta = ws.iter().map(|&w| log1p_over(theta, w)).sum::<f64>() / n;
    if !(xi.is_finite() && beta.is_finite() && beta > 0.0) {
        return Err(Error::Convergence(format!("GPD fit left the parameter space: xi={xi}, beta={beta}")));
    }
    let stderrs = gpd_observed_stderrs(&ws, xi, beta).unwrap_or_else(|| {
        let v_xi = (1.0 + xi).powi(2) / n;
        let v_beta = 2.0 * beta * beta * (1.0 + xi) / n;
        (v_xi.max(0.0).sqrt(), v_beta.max(0.0).sqrt())
    });
    Ok(GpdFit { xi, beta, u, n_exceed: ws.len(), stderrs, low_count: ws.len() < GPD_MIN_EXCEEDANCES })
}

/// Inverse of the numerical observed information, or None when it is not
/// positive definite.
fn gpd_observed_stderrs(ws: &[f64], xi: f64, beta: f64) -> Option<(f64, f64)> {
    let hx = 1e-4 * xi.abs().max(0.1);
    let hb = 1e-4 * beta;
    let f = |dx: f64, db: f64| gpd_loglik(ws, xi + dx, beta + db);
    let f0 = f(0.0, 0.0);
    let hxx = (f(hx, 0.0) - 2.0 * f0 + f(-hx, 0.0)) / (hx * hx);
    let hbb = (f(0.0, hb) - 2.0 * f0 + f(0.0, -hb)) / (hb * hb);
    let hxb = (f(hx, hb) - f(hx, -hb) - f(-hx, hb) + f(-hx, -hb)) / (4.0 * hx * hb);
    let (a, b, c) = (-hxx, -hxb, -hbb);
    let det = a * c - b * b;
    if !(a > 0.0 && c > 0.0 && det > 0.0 && det.is_finite()) {
        return None;
    }
    Some(((c / det).sqrt(), (a / det).sqrt()))
}

/// Law of the maximum of n Pareto(α, L) draws and its Fréchet approximation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrechetMax {
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub n: usize,
    /// Fréchet scale L·n^{1/α}.
    pub beta: f64,
}

pub fn frechet_max_calibration(alpha: f64, l: f64, n: usize) -> Result<FrechetMax> {
    require(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be positive, got {alpha}"))?;
    require(l > 0.0 && l.is_finite(), || format!("L must be positive, got {l}"))?;
    require(n >= 1, || "n must be at least 1".into())?;
    Ok(FrechetMax { alpha, l, n, beta: l * (n as f64).powf(1.0 / alpha) })
}

impl FrechetMax {
    /// exp(−β^α x^{−α}).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (-(self.beta / x).powf(self.alpha)).exp()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let t = (self.beta / x).powf(self.alpha);
        self.alpha * t * (-t).exp() / x
    }

    /// F(x)^n with F the Pareto CDF.
    pub fn exact_cdf(&self, x: f64) -> f64 {
        if x <= self.l {
            return 0.0;
        }
        (self.n as f64 * (-(self.l / x).powf(self.alpha)).ln_1p()).exp()
    }

    /// αn(L/x)^α(1−(L/x)^α)^{n−1}/x.
    pub fn exact_pdf(&self, x: f64) -> f64 {
        if x <= self.l {
            return 0.0;
        }
        let u = (self.l / x).powf(self.alpha);
        let n = self.n as f64;
        self.alpha * n * u * ((n - 1.0) * (-u).ln_1p()).exp() / x
    }
}

/// Exact law of the maximum of n standard Gaussians.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianMax {
    pub n: usize,
}

pub fn gaussian_exact_max_density(n: usize) -> Result<GaussianMax> {
    require(n >= 1, || "n must be at least 1".into())?;
    Ok(GaussianMax { n })
}

impl GaussianMax {
    /// ln Φ(k), accurate in the far left tail.
    fn ln_phi(k: f64) -> f64 {
        ln_erfc(-k / std::f64::consts::SQRT_2) - std::f64::consts::LN_2
    }

    /// n φ(K) Φ(K)^{n−1}, i.e. e^{−K²/2} 2^{½−n} n erfc(−K/√2)^{n−1}/√π.
    pub fn pdf(&self, k: f64) -> f64 {
        let n = self.n as f64;
        (n.ln() + norm_pdf(k).ln() + (n - 1.0) * Self::ln_phi(k)).exp()
    }

    pub fn cdf(&self, k: f64) -> f64 {
        (self.n as f64 * Self::ln_phi(k)).exp()
    }

    pub fn mode(&self) -> f64 {
        golden_max(|k| self.pdf(k), -3.0, 8.0, 1e-10)
    }
}

/// E of the p-th moment of a Pareto(α, L) beyond K: αL^αK^{p−α}/(α−p).
pub fn hidden_tail_moment(alpha: f64, l: f64, k: f64, p: f64) -> Result<f64> {
    check_tail_args(alpha, l, p)?;
    require(k > l, || format!("K must exceed L, got K={k} L={l}"))?;
    if p >= alpha {
        return Err(Error::InfiniteMoment { order: p, alpha });
    }
    Ok(alpha / (alpha - p) * (l / k).powf(alpha) * k.powf(p))
}

/// The complementary part below K: α(L^p − L^αK^{p−α})/(α−p), with the
/// log limit αL^α ln(K/L) at p = α.
pub fn visible_tail_moment(alpha: f64, l: f64, k: f64, p: f64) -> Result<f64> {
    check_tail_args(alpha, l, p)?;
    require(k > l, || format!("K must exceed L, got K={k} L={l}"))?;
    if ((alpha - p) / alpha).abs() < 1e-12 {
        return Ok(alpha * l.powf(alpha) * (k / l).ln());
    }
    Ok(alpha * (l.powf(p) - l.powf(alpha) * k.powf(p - alpha)) / (alpha - p))
}

fn check_tail_args(alpha: f64, l: f64, p: f64) -> Result<()> {
    require(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be positive, got {alpha}"))?;
    require(l > 0.0 && l.is_finite(), || format!("L must be positive, got {l}"))?;
    require(p >= 0.0 && p.is_finite(), || format!("p must be nonnegative, got {p}"))
}

/// Law of the hidden p-th moment when K is the maximum of n draws, taking
/// the Fréchet law for K. At p = 0 this is exponential with rate n.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HiddenTailLaw {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

pub fn hidden_tail_density(n: usize, p: f64, alpha: f64, l: f64) -> Result<HiddenTailLaw> {
    check_tail_args(alpha, l, p)?;
    require(n >= 1, || "n must be at least 1".into())?;
    if p >= alpha {
        return Err(Error::InfiniteMoment { order: p, alpha });
    }
    Ok(HiddenTailLaw { n, p, alpha, l })
}

impl HiddenTailLaw {
    /// n L^{αp/(p−α)} and the inner scale (α−p)/α.
    fn parts(&self) -> (f64, f64, f64) {
        let (a, p) = (self.alpha, self.p);
        let c = self.n as f64 * self.l.powf(a * p / (p - a));
        (c, (a - p) / a, a / (a - p))
    }

    /// n L^{αp/(p−α)} (z − pz/α)^{p/(α−p)} exp(−n L^{αp/(p−α)} (z − pz/α)^{α/(α−p)}).
    pub fn pdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let (c, s, q) = self.parts();
        let y = z * s;
        c * y.powf(q - 1.0) * (-c * y.powf(q)).exp()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let (c, s, q) = self.parts();
        -(-c * (z * s).powf(q)).exp_m1()
    }

    /// α L^α β^{p−α} Γ(2 − p/α)/(α−p) with β = L n^{1/α}.
    pub fn mean(&self) -> f64 {
        let (a, p) = (self.alpha, self.p);
        let beta = self.l * (self.n as f64).powf(1.0 / a);
        a / (a - p) * self.l.powf(a) * beta.powf(p - a) * gamma(2.0 - p / a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaLaw {
    /// α − b lognormal with mean α₀ − b and log-scale σ.
    Lognormal,
    /// α − b gamma with mean α₀ − b and standard deviation s.
    Gamma,
}

/// Mean of a Pareto with scale λ whose exponent is itself random.
///
/// Closed forms hold at floor b = 1: λ(α₀ + e^{σ²} − 1)/(α₀ − 1) for the
/// lognormal and λα₀/(α₀−1) + λs²/((α₀−1)(α₀−s−1)(α₀+s−1)) for the gamma.
/// Other floors are integrated numerically.
pub fn stochastic_alpha_mean(kind: AlphaLaw, alpha0: f64, spread: f64, b: f64, lambda: f64) -> Result<f64> {
    require(b >= 1.0 && b.is_finite(), || format!("floor must be at least 1, got {b}"))?;
    require(alpha0 > b && alpha0.is_finite(), || format!("alpha0 must exceed the floor {b}, got {alpha0}"))?;
    require(spread >= 0.0 && spread.is_finite(), || format!("spread must be nonnegative, got {spread}"))?;
    require(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be positive, got {lambda}"))?;
    let m = alpha0 - b;
    if spread == 0.0 {
        return Ok(lambda * alpha0 / (alpha0 - 1.0));
    }
    let opts = QuadOptions::tol(1e-14, 1e-12);
    // E[1/(α−1)] with α = b + Y
    let inv = match kind {
        AlphaLaw::Lognormal => {
            let s2 = spread * spread;
            if b == 1.0 {
                s2.exp() / m
            } else {
                let mu = m.ln() - 0.5 * s2;
                integrate(|z| norm_pdf(z) / (b - 1.0 + (mu + spread * z).exp()), -40.0, 40.0, opts)?.value
            }
        }
        AlphaLaw::Gamma => {
            let shape = m * m / (spread * spread);
            let rate = m / (spread * spread);
            if b == 1.0 {
                if shape <= 1.0 {
                    return Err(Error::InfiniteMoment { order: 1.0, alpha: 1.0 });
                }
                rate / (shape - 1.0)
            } else {
                // y = e^t keeps small shapes integrable
                let lg = ln_gamma(shape);
                let f = |t: f64| {
                    let y = t.exp();
                    (shape * (rate * y).ln() - rate * y - lg).exp() / (b - 1.0 + y)
                };
                let c = (m).ln();
                integrate(f, c - 60.0, c + 10.0 + 10.0 * (spread / m), opts)?.value
            }
        }
    };
    Ok(lambda * (1.0 + inv))
}
