//! Option prices in the Karamata zone of a power-law tail, anchored on one
//! observed price, and the call-spread bound on α where such a tail is
//! glued to a Black–Scholes body.

use serde::{Deserialize, Serialize};

use crate::error::{domain, require, Error, Result};
use crate::sample::Sample;
use crate::special::{norm_cdf, norm_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// S itself is Pareto beyond l.
    CallOnPrice,
    /// (S − S₀)/S₀ is Pareto beyond l.
    CallOnReturn,
    /// S = (1 − r)S₀ with r Pareto on [l, 1].
    PutOnReturn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPricingSpec {
    pub alpha: f64,
    pub anchor_strike: f64,
    pub anchor_price: f64,
    pub spot: f64,
    pub side: Side,
    /// Treat the put-side normaliser 1/(1 − l^α) as one.
    #[serde(default)]
    pub lambda_approx: bool,
}

impl TailPricingSpec {
    pub fn validate(&self) -> Result<()> {
        require(self.alpha > 1.0 && self.alpha.is_finite(), || format!("tail pricing needs alpha > 1, got {}", self.alpha))?;
        require(self.anchor_price > 0.0 && self.anchor_price.is_finite(), || "anchor price must be positive".into())?;
        require(self.spot > 0.0 && self.spot.is_finite(), || "spot must be positive".into())?;
        require(self.anchor_strike.is_finite(), || "anchor strike must be finite".into())?;
        match self.side {
            Side::CallOnPrice => require(self.anchor_strike > 0.0, || "anchor strike must be positive".into()),
            Side::CallOnReturn => require(self.anchor_strike > self.spot, || "return-call anchor must lie above spot".into()),
            Side::PutOnReturn => require(
                self.anchor_strike > 0.0 && self.anchor_strike < self.spot,
                || "put anchor must lie in (0, spot)".into(),
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceCurve {
    pub strikes: Vec<f64>,
    pub prices: Vec<f64>,
    pub implied_l: f64,
    /// Indices of strikes outside the tail zone of the implied l.
    pub outside_zone: Vec<usize>,
}

/// Bracket of the put-side payoff integral: S₀^α(S₀−K)^{1−α} − (α−1)K − S₀.
fn put_kernel(k: f64, s0: f64, alpha: f64) -> f64 {
    s0.powf(alpha) * (s0 - k).powf(1.0 - alpha) - (alpha - 1.0) * k - s0
}

/// The l that reproduces the anchor price.
pub fn implied_karamata_constant(spec: &TailPricingSpec) -> Result<f64> {
    spec.validate()?;
    let (a, k, c, s0) = (spec.alpha, spec.anchor_strike, spec.anchor_price, spec.spot);
    let l = match spec.side {
        Side::CallOnPrice => ((a - 1.0) * c * k.powf(a - 1.0)).powf(1.0 / a),
        Side::CallOnReturn => ((a - 1.0) * c).powf(1.0 / a) * (k - s0).powf(1.0 - 1.0 / a) / s0,
        Side::PutOnReturn => {
            let y = c * (a - 1.0) / put_kernel(k, s0, a);
            if spec.lambda_approx { y.powf(1.0 / a) } else { (y / (1.0 + y)).powf(1.0 / a) }
        }
    };
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::Degenerate(format!("anchor implies a non-positive Karamata constant ({l})")));
    }
    Ok(l)
}

/// Whether strike k lies in the tail zone for constant l.
pub fn in_zone(k: f64, l: f64, spec: &TailPricingSpec) -> bool {
    match spec.side {
        Side::CallOnPrice => k > l,
        Side::CallOnReturn => k >= spec.spot * (1.0 + l),
        Side::PutOnReturn => k > 0.0 && k <= spec.spot * (1.0 - l),
    }
}

/// K^{1−α} l^α/(α−1), or (lS₀)^α (K−S₀)^{1−α}/(α−1) on returns.
pub fn call_price_closed(k: f64, l: f64, alpha: f64, spot: Option<f64>) -> Result<f64> {
    require(alpha > 1.0, || format!("tail pricing needs alpha > 1, got {alpha}"))?;
    match spot {
        None => {
            if k <= l {
                return Err(domain(format!("strike {k} is below the Karamata constant {l}")));
            }
            Ok(k.powf(1.0 - alpha) * l.powf(alpha) / (alpha - 1.0))
        }
        Some(s0) => {
            if k < s0 * (1.0 + l) {
                return Err(domain(format!("strike {k} is below S0(1+l) = {}", s0 * (1.0 + l))));
            }
            Ok((l * s0).powf(alpha) * (k - s0).powf(1.0 - alpha) / (alpha - 1.0))
        }
    }
}

/// E(K − S)⁺ for S = (1−r)S₀, r Pareto(l, α) truncated to [l, 1].
pub fn put_price_closed(k: f64, l: f64, alpha: f64, spot: f64, lambda_approx: bool) -> Result<f64> {
    require(alpha > 1.0, || format!("tail pricing needs alpha > 1, got {alpha}"))?;
    require(l > 0.0 && l < 1.0, || format!("put-side l must lie in (0,1), got {l}"))?;
    if !(k > 0.0 && k <= spot * (1.0 - l)) {
        return Err(domain(format!("strike {k} is outside (0, (1-l)S0]")));
    }
    let lambda = if lambda_approx { 1.0 } else { 1.0 / (1.0 - l.powf(alpha)) };
    Ok(lambda * l.powf(alpha) / (alpha - 1.0) * put_kernel(k, spot, alpha))
}

/// Call at strike k relative to the anchor; l cancels.
pub fn price_call(k: f64, spec: &TailPricingSpec) -> Result<f64> {
    spec.validate()?;
    let a = spec.alpha;
    let l = implied_karamata_constant(spec)?;
    match spec.side {
        Side::CallOnPrice => {
            if k <= l {
                return Err(domain(format!("strike {k} is below the Karamata constant {l}")));
            }
            Ok((k / spec.anchor_strike).powf(1.0 - a) * spec.anchor_price)
        }
        Side::CallOnReturn => {
            if !in_zone(k, l, spec) {
                return Err(domain(format!("strike {k} is below S0(1+l)")));
            }
            let s0 = spec.spot;
            Ok(((k - s0) / (spec.anchor_strike - s0)).powf(1.0 - a) * spec.anchor_price)
        }
        Side::PutOnReturn => Err(domain("price_call needs a call-side spec")),
    }
}

/// Put at k2 from a put at k1 with price p1; l and λ cancel.
pub fn price_put(k2: f64, k1: f64, p1: f64, spec: &TailPricingSpec) -> Result<f64> {
    spec.validate()?;
    let (a, s0) = (spec.alpha, spec.spot);
    for k in [k1, k2] {
        require(k > 0.0 && k < s0, || format!("put strike {k} must lie in (0, spot)"))?;
    }
    Ok(p1 * put_kernel(k2, s0, a) / put_kernel(k1, s0, a))
}

/// Prices on a strike grid, flagging strikes outside the tail zone.
pub fn price_curve(spec: &TailPricingSpec, strikes: &[f64]) -> Result<PriceCurve> {
    spec.validate()?;
    let l = implied_karamata_constant(spec)?;
    let mut ks = strikes.to_vec();
    ks.sort_by(f64::total_cmp);
    let mut prices = Vec::with_capacity(ks.len());
    let mut outside = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        if !in_zone(k, l, spec) {
            outside.push(i);
        }
        let p = match spec.side {
            Side::CallOnPrice => (k / spec.anchor_strike).powf(1.0 - spec.alpha) * spec.anchor_price,
            Side::CallOnReturn => {
                require(k > spec.spot, || format!("return-call strike {k} must exceed spot"))?;
                ((k - spec.spot) / (spec.anchor_strike - spec.spot)).powf(1.0 - spec.alpha) * spec.anchor_price
            }
            Side::PutOnReturn => price_put(k, spec.anchor_strike, spec.anchor_price, spec)?,
        };
        prices.push(p);
    }
    Ok(PriceCurve { strikes: ks, prices, implied_l: l, outside_zone: outside })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveReport {
    /// i where a call gets dearer from strike i to i+1.
    pub spread_violations: Vec<usize>,
    /// Interior i where the second divided difference is negative.
    pub butterfly_violations: Vec<usize>,
    /// (strike, second divided difference) at interior points.
    pub implied_density: Vec<(f64, f64)>,
    pub ok: bool,
}

/// No-arbitrage checks on a call curve. Puts should be passed through
/// put–call parity first; spreads are checked for calls only.
pub fn curve_diagnostics(curve: &PriceCurve) -> Result<CurveReport> {
    let (k, c) = (&curve.strikes, &curve.prices);
    require(k.len() == c.len(), || "strikes and prices differ in length".into())?;
    require(k.len() >= 3, || "need at least three strikes".into())?;
    require(k.windows(2).all(|w| w[1] > w[0]), || "strikes must be strictly increasing".into())?;
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let spread_violations: Vec<usize> = (0..k.len() - 1).filter(|&i| c[i + 1] > c[i] + tol).collect();
    let mut butterfly_violations = Vec::new();
    let mut implied_density = Vec::with_capacity(k.len() - 2);
    for i in 1..k.len() - 1 {
        let (h0, h1) = (k[i] - k[i - 1], k[i + 1] - k[i]);
        let d2 = 2.0 * (c[i - 1] / (h0 * (h0 + h1)) - c[i] / (h0 * h1) + c[i + 1] / (h1 * (h0 + h1)));
        // the same scale judged on the payoff differences
        let slack = tol * (1.0 / (h0 * h1));
        if d2 < -slack {
            butterfly_violations.push(i);
        }
        implied_density.push((k[i], d2));
    }
    let ok = curve_violation_free(&spread_violations, &butterfly_violations);
    Ok(CurveReport { spread_violations, butterfly_violations, implied_density, ok })
}

fn curve_violation_free(a: &[usize], b: &[usize]) -> bool {
    a.is_empty() && b.is_empty()
}

/// Black–Scholes call at zero rates.
pub fn bs_call(s0: f64, k: f64, sigma: f64, t: f64) -> f64 {
    let v = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + 0.5 * v * v) / v;
    s0 * norm_cdf(d1) - k * norm_cdf(d1 - v)
}

/// dBSC(K, σ(K))/dK at zero rates: −N(d₂) + S₀√t φ(d₁) σ'(K).
pub fn bs_call_strike_slope(s0: f64, k: f64, sigma: f64, sigma_slope: f64, t: f64) -> f64 {
    let v = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + 0.5 * v * v) / v;
    -norm_cdf(d1 - v) + s0 * t.sqrt() * norm_pdf(d1) * sigma_slope
}

/// Smallest α for which the returns-mode tail glued at strike K to a
/// Black–Scholes body with smile σ(K), σ'(K) keeps the call convex there:
/// α ≥ log(N(d₂) − S₀√t φ(d₁)σ') / log(lS₀/(K − S₀)).
pub fn min_alpha_no_arbitrage(k: f64, sigma_of_k: f64, sigma_slope: f64, s0: f64, t: f64, l: f64) -> Result<f64> {
    require(s0 > 0.0 && k > 0.0, || "spot and strike must be positive".into())?;
    require(sigma_of_k > 0.0 && t > 0.0, || "volatility and maturity must be positive".into())?;
    require(l > 0.0, || "l must be positive".into())?;
    let x = l * s0 / (k - s0);
    if !(k > s0 * (1.0 + l)) {
        return Err(domain(format!("strike {k} is not beyond S0(1+l) = {}", s0 * (1.0 + l))));
    }
    let r = -bs_call_strike_slope(s0, k, sigma_of_k, sigma_slope, t);
    if r <= 0.0 {
        return Err(Error::Degenerate("the smile slope makes the Black-Scholes call increase in strike".into()));
    }
    if r >= 1.0 {
        return Err(Error::Degenerate("call-spread slope is at least one; no tail index satisfies the bound".into()));
    }
    Ok(r.ln() / x.ln())
}

/// x^α·(empirical survival at x) along the upper order statistics. A flat
/// stretch marks where the slowly varying part has settled; advisory only.
pub fn karamata_plateau(sample: &Sample, alpha: f64, top: usize) -> Result<Vec<(f64, f64)>> {
    sample.require_positive()?;
    require(alpha > 0.0, || "alpha must be positive".into())?;
    let x = sample.sorted();
    let n = x.len();
    let top = top.clamp(1, n);
    Ok((n - top..n).map(|i| (x[i], x[i].powf(alpha) * (n - i) as f64 / n as f64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(alpha: f64, k: f64, c: f64) -> TailPricingSpec {
        TailPricingSpec { alpha, anchor_strike: k, anchor_price: c, spot: 1.0, side: Side::CallOnPrice, lambda_approx: false }
    }

    #[test]
    fn unit_l_inversion() {
        for &(a, k) in &[(1.5f64, 3.0f64), (2.0, 7.0), (3.0, 1.2)] {
            let c = k.powf(1.0 - a) / (a - 1.0);
            assert!((implied_karamata_constant(&call(a, k, c)).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((implied_karamata_constant(&call(2.0, 2.0, 0.125)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn put_kernel_vanishes_at_zero_strike() {
        assert!(put_kernel(0.0, 1.3, 2.5).abs() < 1e-15);
    }
}
