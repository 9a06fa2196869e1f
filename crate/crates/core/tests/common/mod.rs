//! Independent oracles for the integration tests. Nothing here calls the
//! library's own quadrature or special functions.

#![allow(dead_code)]

/// Double-exponential (tanh-sinh) quadrature on [a, b]. Handles endpoint
/// singularities well, which is what most of our integrands have.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h2 = 0.5 * (b - a);
    let mut prev = f64::NAN;
    let mut step = 0.5f64;
    let mut est = 0.0;
    for _level in 0..12 {
        let mut sum = 0.0;
        let kmax = (6.5 / step) as i64;
        for k in -kmax..=kmax {
            let t = k as f64 * step;
            let s = std::f64::consts::FRAC_PI_2 * t.sinh();
            let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (s.cosh() * s.cosh());
            // distance to the nearer endpoint without cancellation
            let x = if s >= 0.0 {
                b - h2 / (s.exp() * s.cosh())
            } else {
                a + h2 / ((-s).exp() * s.cosh())
            };
            if x <= a || x >= b || w == 0.0 {
                continue;
            }
            let v = f(x);
            if v.is_finite() {
                sum += w * v;
            }
        }
        est = sum * step * h2;
        if (est - prev).abs() <= 1e-14 * est.abs().max(1e-300) {
            return est;
        }
        prev = est;
        step *= 0.5;
    }
    est
}

/// ∫_a^∞ via x = a + t/(1−t).
pub fn tanh_sinh_inf<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    tanh_sinh(|t| {
        let u = 1.0 - t;
        f(a + t / u) / (u * u)
    }, 0.0, 1.0)
}

/// Bisection root of an increasing or decreasing function on [lo, hi].
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let flo = f(lo);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sample Kolmogorov–Smirnov distance against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}
