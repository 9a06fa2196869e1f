mod common;

use common::{ks_statistic, mean_se, tanh_sinh, tanh_sinh_inf};
use fattail::dists::{Dist, ParetoI};
use fattail::rng;
use fattail::special::norm_cdf;
use fattail::tailfit::*;
use fattail::Sample;
use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::distribution::{Continuous, InverseGamma};

fn pareto(alpha: f64, l: f64, n: usize, seed: u64) -> Sample {
    Dist::Pareto(ParetoI { alpha, l }).sample(n, seed).unwrap()
}

fn pareto_draw(r: &mut rng::Rng, alpha: f64, l: f64) -> f64 {
    l * rng::open01(r).powf(-1.0 / alpha)
}

#[test]
fn mle_recovers_alpha() {
    let f = pareto_mle(&pareto(2.0, 1.0, 10_000, 7), 1.0, false).unwrap();
    assert!((f.alpha_hat - 2.0).abs() < 3.0 * 2.0 / 100.0, "{}", f.alpha_hat);
    assert!((f.stderr - f.alpha_hat / 100.0).abs() < 1e-15);
    assert_eq!(f.n_exceed, 10_000);
}

#[test]
fn debiasing_removes_small_sample_bias() {
    let (n, reps) = (20, 1000);
    let mut biased = Vec::new();
    let mut debiased = Vec::new();
    for s in 0..reps {
        let x = pareto(2.0, 1.0, n, 500 + s);
        biased.push(pareto_mle(&x, 1.0, false).unwrap().alpha_hat);
        debiased.push(pareto_mle(&x, 1.0, true).unwrap().alpha_hat);
    }
    let (mb, sb) = mean_se(&biased);
    let (md, sd) = mean_se(&debiased);
    assert!((md - 2.0).abs() < 3.0 * sd, "debiased mean {md} ± {sd}");
    assert!((mb - 2.0 * 20.0 / 19.0).abs() < 3.0 * sb, "biased mean {mb} ± {sb}");
}

#[test]
fn debiased_estimates_follow_the_sampling_density() {
    let d = alpha_sampling_density(2.0, 20, None).unwrap();
    let est: Vec<f64> = (0..4000).map(|s| pareto_mle(&pareto(2.0, 1.0, 20, 9000 + s), 1.0, true).unwrap().alpha_hat).collect();
    let ks = ks_statistic(&est, |a| d.cdf(a));
    assert!(ks < 0.03, "KS {ks}");
}

#[test]
fn sampling_density_matches_inverse_gamma_oracle() {
    let d = alpha_sampling_density(2.0, 100, None).unwrap();
    let oracle = InverseGamma::new(100.0, 2.0 * 99.0).unwrap();
    for &a in &[1.2, 1.7, 2.0, 2.4, 3.5] {
        let want = oracle.pdf(a);
        assert!((d.pdf(a) - want).abs() <= 1e-10 * want.max(1e-300), "a={a}");
    }
}

#[test]
fn sampling_density_normalization_and_moments() {
    let d = alpha_sampling_density(2.0, 100, None).unwrap();
    let mass = tanh_sinh_inf(|a| d.pdf(a), 0.0);
    assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    let mean = tanh_sinh_inf(|a| a * d.pdf(a), 0.0);
    assert!((mean - 2.0).abs() < 1e-6, "mean {mean}");
    assert!((d.mean() - 2.0).abs() < 1e-12);
    assert!(d.mode() < d.mean());
    let mode = common::bisect(|a| d.pdf(a - 1e-6) - d.pdf(a + 1e-6), 1.5, 2.0, 100);
    assert!((mode - d.mode()).abs() < 1e-5);
}

#[test]
fn truncated_density_renormalizes_above_the_cut() {
    // small n puts visible mass below 1
    for &cut in &[1.0, 1.3] {
        let d = alpha_sampling_density(1.4, 5, Some(cut)).unwrap();
        let full = alpha_sampling_density(1.4, 5, None).unwrap();
        let below = tanh_sinh(|a| full.pdf(a), 0.0, cut);
        assert!((d.mass - (1.0 - below)).abs() < 1e-10);
        let mass = tanh_sinh_inf(|a| d.pdf(a), cut);
        assert!((mass - 1.0).abs() < 1e-6, "cut {cut} mass {mass}");
        let mean = tanh_sinh_inf(|a| a * d.pdf(a), cut);
        assert!((mean - d.mean()).abs() < 1e-6, "cut {cut}: {mean} vs {}", d.mean());
        assert_eq!(d.pdf(0.99 * cut), 0.0);
        assert!(d.pdf(1.5) > full.pdf(1.5));
        assert!((d.cdf(cut + 2.0) - tanh_sinh(|a| d.pdf(a), cut, cut + 2.0)).abs() < 1e-8);
    }
}

#[test]
fn sampling_density_approaches_gaussian() {
    let n = 500;
    let d = alpha_sampling_density(2.0, n, None).unwrap();
    let sd = 2.0 / (n as f64).sqrt();
    let worst = (0..=400)
        .map(|i| 2.0 + sd * (-5.0 + 10.0 * i as f64 / 400.0))
        .map(|a| (d.cdf(a) - norm_cdf((a - 2.0) / sd)).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.05, "KS {worst}");
}

#[test]
fn plugin_mean_beats_sample_mean() {
    let reps = 1000;
    let wins = (0..reps)
        .filter(|&s| {
            let x = pareto(1.2, 1.0, 1000, 20_000 + s);
            let plug = plugin_pareto_mean(&pareto_mle(&x, 1.0, false).unwrap()).unwrap_or(f64::INFINITY);
            (plug - 6.0).abs() < (x.mean() - 6.0).abs()
        })
        .count();
    // the long-run rate is about 0.79 (10⁴ replications), not 0.8
    assert!(wins >= 750, "plug-in closer in {wins}/{reps}");
}

#[test]
fn hill_sweep_matches_top_k_mle() {
    let x = pareto(3.0, 1.0, 5000, 3);
    let sweep = hill_sweep(&x, &[50, 200, 1000]).unwrap();
    let sorted = x.sorted();
    for f in &sweep {
        let l = sorted[sorted.len() - 1 - f.n_exceed];
        let direct = pareto_mle(&x, l, false).unwrap();
        assert_eq!(direct.n_exceed, f.n_exceed);
        assert!((direct.alpha_hat - f.alpha_hat).abs() < 1e-12);
    }
    assert!((sweep[2].alpha_hat - 3.0).abs() < 3.0 * sweep[2].stderr);
}

fn loglik(ws: &[f64], xi: f64, beta: f64) -> f64 {
    ws.iter().map(|&w| gpd_pdf(w, xi, beta).ln()).sum()
}

#[test]
fn gpd_recovers_war_parameters() {
    // shape and scale of the fitted casualty tail, 307 exceedances
    let (xi, beta) = (1.5886, 3.6254);
    for seed in 0..10 {
        let s = gpd_sample(xi, beta, 307, 40 + seed).unwrap();
        let f = gpd_fit_mle(&s, 0.0).unwrap();
        assert!((f.xi - xi).abs() < 3.0 * 0.1467, "seed {seed}: xi {}", f.xi);
        assert!(!f.low_count);
    }
}

#[test]
fn gpd_fit_is_a_local_maximum() {
    let s = gpd_sample(0.8, 2.0, 400, 11).unwrap();
    let f = gpd_fit_mle(&s, 0.0).unwrap();
    let best = loglik(&s.values, f.xi, f.beta);
    for (dx, db) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3), (1e-3, 1e-3), (-1e-3, -1e-3)] {
        assert!(loglik(&s.values, f.xi + dx, f.beta + db) <= best + 1e-9);
    }
    // coarse brute-force grid never beats the fit
    for i in 0..60 {
        for j in 0..60 {
            let (x, b) = (0.1 + 0.03 * i as f64, 0.5 + 0.08 * j as f64);
            assert!(loglik(&s.values, x, b) <= best + 1e-9);
        }
    }
}

#[test]
fn gpd_exponential_subfamily() {
    let s = Dist::Exponential { lambda: 0.5 }.sample(10_000, 5).unwrap();
    let f = gpd_fit_mle(&s, 0.0).unwrap();
    assert!(f.xi.abs() < 3.0 * f.stderrs.0, "xi {} se {}", f.xi, f.stderrs.0);
    assert!((f.beta - 2.0).abs() < 3.0 * f.stderrs.1);
}

#[test]
fn gpd_on_pareto_tail_gives_inverse_alpha() {
    let s = pareto(2.0, 1.0, 100_000, 17);
    let f = gpd_fit_mle(&s, 10.0).unwrap();
    assert!((f.xi - 0.5).abs() < 3.0 * f.stderrs.0, "xi {} se {}", f.xi, f.stderrs.0);
    // the excess over u of a Pareto is GPD with β = u/α
    assert!((f.beta - 5.0).abs() < 3.0 * f.stderrs.1);
}

#[test]
fn gpd_short_tail_and_flags() {
    let s = gpd_sample(-0.3, 1.0, 2000, 2).unwrap();
    let f = gpd_fit_mle(&s, 0.0).unwrap();
    assert!((f.xi + 0.3).abs() < 3.0 * f.stderrs.0, "xi {}", f.xi);
    let few = gpd_fit_mle(&gpd_sample(0.5, 1.0, 12, 3).unwrap(), 0.0).unwrap();
    assert!(few.low_count);
    assert!(gpd_fit_mle(&Sample::new(vec![1.0, 2.0]).unwrap(), 0.0).is_err());
}

#[test]
fn gpd_density_integrates_to_one() {
    for &xi in &[0.0, 0.3, 1.5886] {
        let m = tanh_sinh_inf(|w| gpd_pdf(w, xi, 3.6254), 0.0);
        assert!((m - 1.0).abs() < 1e-8, "xi {xi}: {m}");
    }
    let m = tanh_sinh(|w| gpd_pdf(w, -0.5, 2.0), 0.0, 4.0);
    assert!((m - 1.0).abs() < 1e-10);
}

#[test]
fn gpd_recovery_rate_over_replications() {
    let (xi, beta) = (0.6, 2.0);
    let mut ok_xi = 0;
    let mut ok_beta = 0;
    for s in 0..200 {
        let f = gpd_fit_mle(&gpd_sample(xi, beta, 500, 7000 + s).unwrap(), 0.0).unwrap();
        ok_xi += usize::from((f.xi - xi).abs() < 3.0 * f.stderrs.0);
        ok_beta += usize::from((f.beta - beta).abs() < 3.0 * f.stderrs.1);
    }
    assert!(ok_xi >= 190 && ok_beta >= 190, "{ok_xi} {ok_beta}");
}

#[test]
fn frechet_tail_ratio() {
    let m = frechet_max_calibration(2.0, 1.0, 30).unwrap();
    let x = 1e3;
    assert!((m.exact_pdf(x) / m.pdf(x) - 1.0).abs() < 0.01);
}

#[test]
fn exact_max_law_matches_simulated_maxima() {
    let (alpha, n) = (1.5, 50);
    let m = frechet_max_calibration(alpha, 1.0, n).unwrap();
    let mut r = rng::stream(99, 0);
    let maxima: Vec<f64> = (0..10_000).map(|_| (0..n).map(|_| pareto_draw(&mut r, alpha, 1.0)).fold(0.0, f64::max)).collect();
    let ks = ks_statistic(&maxima, |x| m.exact_cdf(x));
    assert!(ks < 0.02, "KS {ks}");
    let mass = tanh_sinh_inf(|x| m.exact_pdf(x), 1.0);
    assert!((mass - 1.0).abs() < 1e-8);
    let fm = tanh_sinh_inf(|x| m.pdf(x), 0.0);
    assert!((fm - 1.0).abs() < 1e-8);
}

#[test]
fn block_maxima_keep_the_tail_exponent() {
    let (alpha, block) = (2.0, 50);
    let mut r = rng::stream(123, 0);
    let maxima: Vec<f64> = (0..20_000).map(|_| (0..block).map(|_| pareto_draw(&mut r, alpha, 1.0)).fold(0.0, f64::max)).collect();
    let f = hill_sweep(&Sample::new(maxima).unwrap(), &[500]).unwrap()[0];
    assert!((f.alpha_hat - alpha).abs() < 3.0 * f.stderr, "alpha {} se {}", f.alpha_hat, f.stderr);
}

#[test]
fn gaussian_max_density() {
    let g = gaussian_exact_max_density(100).unwrap();
    let mass = tanh_sinh(|k| g.pdf(k), -12.0, 12.0);
    assert!((mass - 1.0).abs() < 1e-8, "mass {mass}");
    let mode = g.mode();
    assert!((mode - 2.5).abs() < 0.2, "mode {mode}");
    let mut r = rng::stream(5, 0);
    let maxima: Vec<f64> = (0..10_000)
        .map(|_| (0..100).map(|_| r.sample::<f64, _>(StandardNormal)).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    assert!(ks_statistic(&maxima, |k| g.cdf(k)) < 0.02);
    // the simulated histogram peaks in the same bin
    let bins = 40;
    let mut h = vec![0usize; bins];
    for &m in &maxima {
        let b = ((m - 1.5) / 0.05).floor();
        if b >= 0.0 && (b as usize) < bins {
            h[b as usize] += 1;
        }
    }
    let peak = (0..bins).max_by_key(|&i| h[i]).unwrap();
    assert!((1.5 + 0.05 * (peak as f64 + 0.5) - mode).abs() < 0.2);
}

#[test]
fn hidden_mass_is_exponential() {
    let (alpha, n) = (1.3, 100);
    let law = hidden_tail_density(n, 0.0, alpha, 1.0).unwrap();
    let mut r = rng::stream(77, 0);
    let zs: Vec<f64> = (0..10_000)
        .map(|_| {
            let k = (0..n).map(|_| pareto_draw(&mut r, alpha, 1.0)).fold(0.0, f64::max);
            hidden_tail_moment(alpha, 1.0, k, 0.0).unwrap()
        })
        .collect();
    let ks = ks_statistic(&zs, |z| law.cdf(z));
    assert!(ks < 0.02, "KS {ks}");
    let (m, se) = mean_se(&zs);
    assert!((m - 1.0 / n as f64).abs() < 3.0 * se + 1e-4);
}

#[test]
fn hidden_mean_share_matches_simulation() {
    let (alpha, n) = (1.2, 1000);
    let law = hidden_tail_density(n, 1.0, alpha, 1.0).unwrap();
    let mass = tanh_sinh_inf(|z| law.pdf(z), 0.0);
    assert!((mass - 1.0).abs() < 1e-6);
    let mut r = rng::stream(31, 0);
    let zs: Vec<f64> = (0..4000)
        .map(|_| {
            let k = (0..n).map(|_| pareto_draw(&mut r, alpha, 1.0)).fold(0.0, f64::max);
            hidden_tail_moment(alpha, 1.0, k, 1.0).unwrap()
        })
        .collect();
    let total = alpha / (alpha - 1.0);
    let (m, _) = mean_se(&zs);
    let share = law.mean() / total;
    assert!((share / (m / total) - 1.0).abs() < 0.1, "law {share} mc {}", m / total);
    let quad_mean = tanh_sinh_inf(|z| z * law.pdf(z), 0.0);
    assert!((quad_mean - law.mean()).abs() < 1e-6 * law.mean());
}

#[test]
fn lognormal_alpha_mean_matches_simulation() {
    let (a0, sigma) = (2.0, 0.5);
    let want = stochastic_alpha_mean(AlphaLaw::Lognormal, a0, sigma, 1.0, 1.0).unwrap();
    let mu = (a0 - 1.0f64).ln() - 0.5 * sigma * sigma;
    let mut r = rng::stream(8, 0);
    let xs: Vec<f64> = (0..1_000_000)
        .map(|_| {
            let a = 1.0 + (mu + sigma * r.sample::<f64, _>(StandardNormal)).exp();
            a / (a - 1.0)
        })
        .collect();
    let (m, _) = mean_se(&xs);
    assert!((m / want - 1.0).abs() < 0.01, "mc {m} formula {want}");
}

#[test]
fn shifted_floors_match_simulation() {
    let mut r = rng::stream(12, 0);
    let (a0, b) = (3.0, 1.5);
    let want = stochastic_alpha_mean(AlphaLaw::Lognormal, a0, 0.4, b, 2.0).unwrap();
    let mu = (a0 - b).ln() - 0.08;
    let xs: Vec<f64> = (0..400_000)
        .map(|_| {
            let a = b + (mu + 0.4 * r.sample::<f64, _>(StandardNormal)).exp();
            2.0 * a / (a - 1.0)
        })
        .collect();
    let (m, se) = mean_se(&xs);
    assert!((m - want).abs() < 4.0 * se, "mc {m} quad {want}");

    let want = stochastic_alpha_mean(AlphaLaw::Gamma, a0, 0.5, b, 1.0).unwrap();
    let g = Gamma::new((a0 - b).powi(2) / 0.25, 0.25 / (a0 - b)).unwrap();
    let xs: Vec<f64> = (0..400_000).map(|_| {
        let a = b + g.sample(&mut r);
        a / (a - 1.0)
    }).collect();
    let (m, se) = mean_se(&xs);
    assert!((m - want).abs() < 4.0 * se, "mc {m} quad {want}");
}

#[test]
fn gamma_alpha_mean_exceeds_fixed_and_matches_simulation() {
    let (a0, s) = (2.0, 0.3);
    let v = stochastic_alpha_mean(AlphaLaw::Gamma, a0, s, 1.0, 1.0).unwrap();
    let fixed = a0 / (a0 - 1.0);
    let excess = s * s / ((a0 - 1.0) * (a0 - s - 1.0) * (a0 + s - 1.0));
    assert!(v > fixed);
    assert!((v - fixed - excess).abs() < 1e-14);
    let g = Gamma::new((a0 - 1.0).powi(2) / (s * s), s * s / (a0 - 1.0)).unwrap();
    let mut r = rng::stream(4, 0);
    let xs: Vec<f64> = (0..400_000).map(|_| {
        let a = 1.0 + g.sample(&mut r);
        a / (a - 1.0)
    }).collect();
    let (m, se) = mean_se(&xs);
    assert!((m - v).abs() < 4.0 * se, "mc {m} formula {v}");
}

proptest! {
    #[test]
    fn mle_is_scale_equivariant(seed in 0u64..1000, c in 0.01f64..100.0) {
        let x = pareto(1.7, 2.0, 200, seed);
        let y = Sample::new(x.values.iter().map(|v| v * c).collect()).unwrap();
        let a = pareto_mle(&x, 2.0, false).unwrap();
        let b = pareto_mle(&y, 2.0 * c, false).unwrap();
        prop_assert_eq!(a.n_exceed, b.n_exceed);
        prop_assert!((a.alpha_hat - b.alpha_hat).abs() < 1e-10 * a.alpha_hat);
    }

    #[test]
    fn jensen_two_point_alpha(alpha in 1.2f64..5.0, frac in 0.0f64..0.99) {
        let delta = frac * (alpha - 1.0);
        let mean = |a: f64| plugin_pareto_mean(&TailFit { alpha_hat: a, l: 1.0, n_exceed: 2, stderr: 0.0, debiased: false }).unwrap();
        let mixed = 0.5 * (mean(alpha - delta) + mean(alpha + delta));
        prop_assert!(mixed >= mean(alpha) - 1e-12);
    }

    #[test]
    fn sampling_cdf_is_monotone(alpha in 1.1f64..4.0, n in 2usize..300, a in 0.2f64..6.0, da in 0.0f64..1.0) {
        let d = alpha_sampling_density(alpha, n, None).unwrap();
        prop_assert!(d.cdf(a) <= d.cdf(a + da) + 1e-15);
        let t = alpha_sampling_density(alpha, n, Some(1.0)).unwrap();
        prop_assert!(t.cdf(a) <= t.cdf(a + da) + 1e-15);
    }

    #[test]
    fn hidden_plus_visible_is_total(alpha in 0.5f64..4.0, p in 0.0f64..0.45, k in 1.5f64..1e4) {
        let p = p * alpha;
        let total = alpha / (alpha - p) * 2f64.powf(p);
        let sum = hidden_tail_moment(alpha, 2.0, 2.0 * k, p).unwrap() + visible_tail_moment(alpha, 2.0, 2.0 * k, p).unwrap();
        prop_assert!((sum / total - 1.0).abs() < 1e-12);
    }
}
