//! The κ metric: how fast the mean absolute deviation of partial sums grows
//! relative to the Gaussian √n rate.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dists::Dist;
use crate::error::{require, Error, Result};
use crate::rng;
use crate::sample::Sample;
use crate::special::{erf, gamma_q, ln_gamma};

/// Number of path batches behind the Monte Carlo error bars.
pub const BATCHES: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct KappaReport {
    pub n0: usize,
    pub ns: Vec<usize>,
    pub kappa: Vec<f64>,
    pub mc_stderr: Vec<f64>,
    /// (n, M(n)) for n0 followed by every n in `ns`.
    pub mad_curve: Vec<(usize, f64)>,
    pub paths: usize,
}

/// κ(n0, n) = 2 − (log n − log n0) / log(M(n)/M(n0)).
pub fn kappa_from_mad(m_n0: f64, m_n: f64, n0: usize, n: usize) -> Result<f64> {
    require(m_n0 > 0.0 && m_n > 0.0, || "mean absolute deviations must be positive".into())?;
    require(n0 >= 1 && n > n0, || format!("need 1 <= n0 < n, got n0={n0} n={n}"))?;
    let lr = (m_n / m_n0).ln();
    if lr == 0.0 {
        return Err(Error::Degenerate("M(n) equals M(n0)".into()));
    }
    Ok(2.0 - ((n as f64).ln() - (n0 as f64).ln()) / lr)
}

/// κ(1, n) for exponential summands, whose sums are gamma distributed.
pub fn kappa_exponential_exact(n: usize) -> Result<f64> {
    require(n >= 2, || format!("n must be at least 2, got {n}"))?;
    let x = n as f64;
    Ok(2.0 - x.ln() / (x * x.ln() - x - ln_gamma(x) + 1.0))
}

/// M(n) for exponential(λ) summands.
pub fn mad_exponential(n: usize, lambda: f64) -> f64 {
    let x = n as f64;
    2.0 * (x * x.ln() - x - ln_gamma(x)).exp() / lambda
}

/// M(n)/M(1) for the unit-variance cubic Student t: eⁿn⁻ⁿΓ(n+1, n) − 1.
pub fn cubic_student_mad_ratio(n: usize) -> Result<f64> {
    require(n >= 1, || "n must be positive".into())?;
    let x = n as f64;
    // Γ(n+1, n) = n! Q(n+1, n); keep everything in logs for large n
    let q = gamma_q(x + 1.0, x)?;
    Ok((x - x * x.ln() + ln_gamma(x + 1.0) + q.ln()).exp() - 1.0)
}

/// κ(1, n) for the cubic Student t.
pub fn kappa_cubic_student_exact(n: usize) -> Result<f64> {
    require(n >= 2, || format!("n must be at least 2, got {n}"))?;
    Ok(2.0 - (n as f64).ln() / cubic_student_mad_ratio(n)?.ln())
}

/// κ₁ for the Student t with tail exponent α > 1, from M(2)/M(1) in closed form.
pub fn kappa1_student(alpha: f64) -> Result<f64> {
    require(alpha > 1.0, || format!("alpha must exceed 1, got {alpha}"))?;
    // log(2^{2−α} Γ(α − 1/2) / Γ(α/2)²), doubled, plus log π
    let l = (2.0 - alpha) * 2f64.ln() + ln_gamma(alpha - 0.5) - 2.0 * ln_gamma(0.5 * alpha);
    Ok(2.0 - 2.0 * 2f64.ln() / (2.0 * l + PI.ln()))
}

/// κ₁ for the equal-weight mixture N(±d/2, σ²), which can be negative.
pub fn kappa_bimodal_exact(d: f64, sigma: f64) -> Result<f64> {
    require(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
    let d = d.abs();
    if d == 0.0 {
        return Ok(0.0);
    }
    let sp = PI.sqrt();
    let m1 = 0.5 * d * erf(d / (2.0 * 2f64.sqrt() * sigma)) + sigma * (2.0 / PI).sqrt() * (-d * d / (8.0 * sigma * sigma)).exp();
    let m2 = sigma / sp * (1.0 + (-d * d / (4.0 * sigma * sigma)).exp()) + 0.5 * d * erf(d / (2.0 * sigma));
    kappa_from_mad(m1, m2, 1, 2)
}

/// n_v = n_g^{1/(1−κ₁)}: summands needed to match a Gaussian sample of n_g.
pub fn equivalent_sample_size(kappa1: f64, n_g: usize) -> Result<f64> {
    require((0.0..1.0).contains(&kappa1), || format!("kappa must be in [0, 1), got {kappa1}"))?;
    require(n_g > 1, || format!("n_g must exceed 1, got {n_g}"))?;
    Ok((n_g as f64).powf(1.0 / (1.0 - kappa1)))
}

fn check_ns(n0: usize, ns: &[usize], paths: usize) -> Result<()> {
    require(n0 >= 1, || "n0 must be at least 1".into())?;
    require(!ns.is_empty(), || "ns must not be empty".into())?;
    require(ns.iter().all(|&n| n > n0), || format!("every n must exceed n0={n0}"))?;
    require(paths >= BATCHES, || format!("need at least {BATCHES} paths"))
}

/// Per-batch means of the block MAD estimate for each n.
type BatchMeans = Vec<Vec<f64>>;

/// Accumulate, per path, the mean over disjoint blocks of |block sum − n·m|.
fn batch_mads<F>(sizes: &[usize], paths: usize, seed: u64, center: f64, draw_path: F) -> BatchMeans
where
    F: Fn(&mut rng::Rng, &mut [f64]) + Sync,
{
    let len = *sizes.iter().max().expect("nonempty");
    let per_batch = paths.div_ceil(BATCHES);
    rng::par_shards(paths, per_batch, seed, |r, _, count| {
        let mut buf = vec![0.0; len];
        let mut acc = vec![0.0; sizes.len()];
        for _ in 0..count {
            draw_path(r, &mut buf);
            for (j, &n) in sizes.iter().enumerate() {
                let blocks = len / n;
                let mut s = 0.0;
                for b in 0..blocks {
                    let sum: f64 = buf[b * n..(b + 1) * n].iter().sum();
                    s += (sum - n as f64 * center).abs();
                }
                acc[j] += s / blocks as f64;
            }
        }
        acc.iter().map(|a| a / count as f64).collect()
    })
}

fn report_from_batches(n0: usize, ns: &[usize], batches: &BatchMeans, paths: usize) -> Result<KappaReport> {
    let k = batches.len() as f64;
    let sizes = batches[0].len();
    let mads: Vec<f64> = (0..sizes).map(|j| batches.iter().map(|b| b[j]).sum::<f64>() / k).collect();
    let mut kappa = Vec::with_capacity(ns.len());
    let mut stderr = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let j = i + 1;
        let kap = kappa_from_mad(mads[0], mads[j], n0, n)?;
        // delta method on log M(n) − log M(n0) with batch-level covariance
        let dl: Vec<f64> = batches.iter().map(|b| b[j] / mads[j] - b[0] / mads[0]).collect();
        let mean = dl.iter().sum::<f64>() / k;
        let var = dl.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0) / k;
        let lr = (mads[j] / mads[0]).ln();
        let slope = ((n as f64) / (n0 as f64)).ln() / (lr * lr);
        kappa.push(kap);
        stderr.push(slope * var.sqrt());
    }
    let mut curve = vec![(n0, mads[0])];
    curve.extend(ns.iter().zip(&mads[1..]).map(|(&n, &m)| (n, m)));
    Ok(KappaReport { n0, ns: ns.to_vec(), kappa, mc_stderr: stderr, mad_curve: curve, paths })
}

/// Monte Carlo κ(n0, n) for each n in `ns`, centering on the analytic mean.
///
/// Every path holds max(ns) draws; M(n) for smaller n averages over the
/// disjoint blocks of that path, so one path feeds every size.
pub fn kappa_empirical(dist: &Dist, n0: usize, ns: &[usize], paths: usize, seed: u64) -> Result<KappaReport> {
    check_ns(n0, ns, paths)?;
    let center = dist.mean()?;
    let sampler = dist.sampler()?;
    let sizes: Vec<usize> = std::iter::once(n0).chain(ns.iter().copied()).collect();
    let batches = batch_mads(&sizes, paths, seed, center, |r, buf| {
        for v in buf.iter_mut() {
            *v = sampler.draw(r);
        }
    });
    report_from_batches(n0, ns, &batches, paths)
}

/// κ from data: paths are bootstrap resamples and the center is the grand mean.
pub fn kappa_from_sample(sample: &Sample, n0: usize, ns: &[usize], paths: usize, seed: u64) -> Result<KappaReport> {
    check_ns(n0, ns, paths)?;
    require(sample.len() >= 2, || "need at least two observations".into())?;
    let xs = &sample.values;
    let center = sample.mean();
    let sizes: Vec<usize> = std::iter::once(n0).chain(ns.iter().copied()).collect();
    let batches = batch_mads(&sizes, paths, seed, center, |r, buf| {
        use rand::Rng as _;
        for v in buf.iter_mut() {
            *v = xs[r.random_range(0..xs.len())];
        }
    });
    report_from_batches(n0, ns, &batches, paths)
}
