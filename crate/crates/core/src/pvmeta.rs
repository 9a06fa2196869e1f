//! Meta-distribution of one-tailed p-values across statistically identical
//! replications, indexed by the median p-value p_M.
//!
//! The test statistic is ζ̄ + T_n with T_n a Student t on n degrees of
//! freedom (standard normal in the large-n limit) and p = P(T_n > ζ).

use rand_distr::{Distribution, StandardNormal, StudentT as StudentTDist};
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, require, Error, Result};
use crate::optim::brent_root;
use crate::quad::{integrate_pieces, QuadOptions};
use crate::rng;
use crate::sample::Sample;
use crate::special::{erfc, erfc_inv, inv_reg_incomplete_beta_pair, reg_incomplete_beta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvMetaSpec {
    pub p_median: f64,
    /// Sample size of each study; `None` is the large-n limit.
    pub n: Option<u32>,
}

impl PvMetaSpec {
    pub fn limit(p_median: f64) -> Result<Self> {
        let s = Self { p_median, n: None };
        s.validate()?;
        Ok(s)
    }

    pub fn finite(p_median: f64, n: u32) -> Result<Self> {
        let s = Self { p_median, n: Some(n) };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p_median;
        require(p > 0.0 && p < 1.0, || format!("median p-value must lie in (0,1), got {p}"))?;
        require(p != 0.5, || "p_M = 1/2 is the uniform law; use a value beside it".into())?;
        if let Some(n) = self.n {
            require(n >= 2, || format!("n must be at least 2, got {n}"))?;
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("p must lie in (0,1), got {p}")))
    }
}

/// P(T_n > ζ).
pub fn student_survival(zeta: f64, n: u32) -> f64 {
    let n = n as f64;
    let tail = 0.5 * reg_incomplete_beta(n / (zeta * zeta + n), 0.5 * n, 0.5).unwrap_or(0.0);
    if zeta >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// ζ with P(T_n > ζ) = p, or the Gaussian quantile when n is `None`.
pub fn zeta_of_p(p: f64, n: Option<u32>) -> Result<f64> {
    check_p(p)?;
    let Some(n) = n else {
        return Ok(std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)?);
    };
    let n = n as f64;
    if p < 0.5 {
        let (lam, one_minus) = inv_reg_incomplete_beta_pair(2.0 * p, 1.0 - 2.0 * p, 0.5 * n, 0.5)?;
        Ok((n * one_minus / lam).sqrt())
    } else if p > 0.5 {
        let (lam, one_minus) = inv_reg_incomplete_beta_pair(2.0 * p - 1.0, 2.0 - 2.0 * p, 0.5, 0.5 * n)?;
        Ok(-(n * lam / one_minus).sqrt())
    } else {
        Ok(0.0)
    }
}

/// Density of the realised p-value.
pub fn pv_density(p: f64, spec: &PvMetaSpec) -> Result<f64> {
    spec.validate()?;
    check_p(p)?;
    match spec.n {
        None => {
            let a = erfc_inv(2.0 * p)?;
            let b = erfc_inv(2.0 * spec.p_median)?;
            Ok((-b * (b - 2.0 * a)).exp())
        }
        // reflecting ζ → −ζ maps (p, p_M) to (1−p, 1−p_M)
        Some(n) if spec.p_median > 0.5 => finite_density(1.0 - p, p, 1.0 - spec.p_median, spec.p_median, n),
        Some(n) => finite_density(p, 1.0 - p, spec.p_median, 1.0 - spec.p_median, n),
    }
}

/// The two-branch small-sample density for p_M < 1/2, written in the
/// inverse-beta variables λ_p, λ_{p_M} and λ'_p. The complements pc = 1 − p
/// and pmc = 1 − p_M are passed in so reflected tiny values keep precision.
fn finite_density(p: f64, pc: f64, pm: f64, pmc: f64, n: u32) -> Result<f64> {
    if p == 0.5 {
        return Err(domain("the finite-n density is evaluated by branch and excludes p = 1/2"));
    }
    let nf = n as f64;
    let (lm, lm_c) = inv_reg_incomplete_beta_pair(pmc - pm, 2.0 * pm, 0.5, 0.5 * nf)?;
    let root_m = (lm * lm_c).sqrt();
    let e = 0.5 * (nf + 1.0);
    if p < 0.5 {
        let (lp, lp_c) = inv_reg_incomplete_beta_pair(2.0 * p, pc - p, 0.5 * nf, 0.5)?;
        let d = 1.0 / lp - 2.0 * (lp_c / lp).sqrt() * (lm / lm_c).sqrt() + 1.0 / lm_c - 1.0;
        Ok((lp * d).powf(-e))
    } else {
        let (lq, lq_c) = inv_reg_incomplete_beta_pair(p - pc, 2.0 * pc, 0.5, 0.5 * nf)?;
        let den = 1.0 - lq * lm + 2.0 * (lq * lq_c).sqrt() * root_m;
        Ok((lm_c / den).powf(e))
    }
}

/// Limiting CDF ½·erfc(erfc⁻¹(2k) − erfc⁻¹(2p_M)).
pub fn pv_cdf(k: f64, p_median: f64) -> Result<f64> {
    PvMetaSpec::limit(p_median)?;
    if k <= 0.0 {
        return Ok(0.0);
    }
    if k >= 1.0 {
        return Ok(1.0);
    }
    Ok(0.5 * erfc(erfc_inv(2.0 * k)? - erfc_inv(2.0 * p_median)?))
}

/// CDF at any sample size: P(p < k) = P(T_n > ζ(k) − ζ̄).
pub fn pv_cdf_at(k: f64, spec: &PvMetaSpec) -> Result<f64> {
    spec.validate()?;
    if k <= 0.0 {
        return Ok(0.0);
    }
    if k >= 1.0 {
        return Ok(1.0);
    }
    let Some(n) = spec.n else {
        return pv_cdf(k, spec.p_median);
    };
    let x = zeta_of_p(k, spec.n)? - zeta_of_p(spec.p_median, spec.n)?;
    Ok(student_survival(x, n))
}

/// Density of the smallest of m independent p-values under the limit law.
pub fn pv_min_density(p: f64, p_median: f64, m: u32) -> Result<f64> {
    require(m >= 1, || "m must be at least 1".into())?;
    let spec = PvMetaSpec::limit(p_median)?;
    let f = pv_density(p, &spec)?;
    let above = 1.0 - pv_cdf(p, p_median)?;
    Ok(m as f64 * f * above.powi(m as i32 - 1))
}

/// Breakpoints that resolve the steep ends of the p-value laws.
fn grid() -> Vec<f64> {
    let mut g = vec![0.0, 1e-12, 1e-8, 1e-5, 1e-3, 0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98, 0.999];
    g.extend([1.0 - 1e-5, 1.0 - 1e-8, 1.0 - 1e-12, 1.0]);
    g
}

/// Integral of the density over (0, 1) by adaptive quadrature.
pub fn pv_total_mass(spec: &PvMetaSpec) -> Result<f64> {
    spec.validate()?;
    let f = |p: f64| pv_density(p, spec).unwrap_or(0.0);
    let mut pts = grid();
    if spec.n.is_some() {
        // the finite-n form is evaluated by branch and never at 1/2
        pts.retain(|&x| x != 0.5);
        let lo = integrate_pieces(f, &pts.iter().copied().filter(|&x| x < 0.5).chain([0.5]).collect::<Vec<_>>(), opts())?;
        let hi = integrate_pieces(f, &[0.5].into_iter().chain(pts.iter().copied().filter(|&x| x > 0.5)).collect::<Vec<_>>(), opts())?;
        return Ok(lo.value + hi.value);
    }
    Ok(integrate_pieces(f, &pts, opts())?.value)
}

fn opts() -> QuadOptions {
    QuadOptions { max_intervals: 5000, ..QuadOptions::tol(1e-12, 1e-10) }
}

/// E[min of m p-values] = ∫₀¹ (1 − Φ(p))^m dp, at any sample size.
pub fn pv_min_expectation(spec: &PvMetaSpec, m: u32) -> Result<f64> {
    spec.validate()?;
    require(m >= 1, || "m must be at least 1".into())?;
    let f = |p: f64| (1.0 - pv_cdf_at(p, spec).unwrap_or(0.0)).powi(m as i32);
    Ok(integrate_pieces(f, &grid(), opts())?.value)
}

/// Mean p-value, the "true" p_s.
pub fn pv_mean(spec: &PvMetaSpec) -> Result<f64> {
    pv_min_expectation(spec, 1)
}

/// The median p_M whose meta-distribution has mean p_s.
pub fn median_for_mean(p_s: f64, n: Option<u32>) -> Result<f64> {
    require(p_s > 0.0 && p_s < 0.5, || format!("mean p-value must lie in (0, 1/2), got {p_s}"))?;
    let f = |pm: f64| pv_mean(&PvMetaSpec { p_median: pm, n }).map(|m| m - p_s).unwrap_or(f64::NAN);
    brent_root(f, 1e-12, 0.5 - 1e-9, 1e-12, 200)
}

/// Small-p expansion of the limiting density, intended for p < 1/(2π).
pub fn pv_density_small_p(p: f64, p_median: f64) -> Result<f64> {
    PvMetaSpec::limit(p_median)?;
    check_p(p)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let u = |x: f64| -(two_pi * (1.0 / (two_pi * x * x)).ln()).ln() - 2.0 * x.ln();
    let (up, um) = (u(p), u(p_median));
    if !(up > 0.0 && um > 0.0) {
        return Err(domain("small-p expansion is outside its range"));
    }
    Ok(two_pi.sqrt() * p_median * (1.0 / (two_pi * p_median * p_median)).ln().sqrt() * (up.sqrt() * um.sqrt()).exp())
}

/// Realised one-tailed p-values from `reps` replications of a t test on n
/// observations (Gaussian when n is `None`) whose median p-value is p_M.
pub fn pv_simulate(p_median: f64, n: Option<u32>, reps: usize, seed: u64) -> Result<Sample> {
    require(p_median > 0.0 && p_median < 1.0, || format!("median p-value must lie in (0,1), got {p_median}"))?;
    if let Some(n) = n {
        require(n >= 2, || format!("n must be at least 2, got {n}"))?;
    }
    if reps == 0 {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    let zbar = zeta_of_p(p_median, n)?;
    let t = n.map(|n| StudentTDist::new(n as f64)).transpose().map_err(|e| invalid(e.to_string()))?;
    let chunks = rng::par_shards(reps, rng::SHARD, seed, |r, _, len| {
        (0..len)
            .map(|_| match (&t, n) {
                (Some(t), Some(n)) => student_survival(zbar + t.sample(r), n),
                _ => {
                    let z: f64 = StandardNormal.sample(r);
                    0.5 * erfc((zbar + z) / std::f64::consts::SQRT_2)
                }
            })
            .collect::<Vec<f64>>()
    });
    Sample::named(chunks.concat(), "p_values")
}
