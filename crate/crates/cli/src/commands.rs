use std::fmt;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fattail::diagnostics as dg;
use fattail::dists::{Dist, Lognormal, ParetoI, StableParams, StudentT, TwoStateGaussian};
use fattail::{inequality as ineq, kappa as kp, pvmeta as pv, shadow as sh, tailfit as tf, tailoptions as to};
use fattail::{Error, Sample};
use serde::Serialize;
use serde_json::{json, Value};

use crate::ingest::{ingest_csv, IngestError};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::InvalidParameter(_) => CliError::Usage(m),
            Error::Domain(_) | Error::InsufficientData { .. } => CliError::Data(m),
            Error::Degenerate(_) | Error::InfiniteMoment { .. } | Error::Convergence(_) => CliError::Numeric(m),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// What a subcommand hands back for rendering.
pub struct Outcome {
    pub args: Value,
    pub input_path: Option<String>,
    pub results: Value,
    pub warnings: Vec<String>,
    pub plot: Vec<(f64, f64, String)>,
}

impl Outcome {
    fn new(args: &impl Serialize, input: Option<&PathBuf>, results: Value) -> Self {
        Outcome {
            args: serde_json::to_value(args).expect("arguments serialize"),
            input_path: input.map(|p| p.display().to_string()),
            results,
            warnings: Vec::new(),
            plot: Vec::new(),
        }
    }
}

fn val(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistName {
    Gaussian,
    Exponential,
    Pareto,
    Student,
    Lognormal,
    Stable,
    TwoState,
}

/// A reference distribution from flags, or from a JSON object with `kind`.
#[derive(Args, Debug, Serialize)]
pub struct DistArgs {
    #[arg(long, value_enum)]
    pub dist: Option<DistName>,
    /// Tail index (pareto, student, stable).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Pareto minimum.
    #[arg(long = "l", default_value_t = 1.0)]
    pub l: f64,
    /// Location.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Scale.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Exponential rate.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Stable skewness.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Two-state variance jump a and its probability p.
    #[arg(long, default_value_t = 0.0)]
    pub jump: f64,
    #[arg(long, default_value_t = 0.5)]
    pub jump_prob: f64,
    /// Full distribution as JSON, e.g. '{"kind":"pareto","alpha":2,"L":1}'.
    #[arg(long, conflicts_with = "dist")]
    pub dist_json: Option<String>,
}

impl DistArgs {
    pub fn build(&self) -> Result<Option<Dist>, CliError> {
        if let Some(j) = &self.dist_json {
            let d: Dist = serde_json::from_str(j).map_err(|e| CliError::Usage(format!("--dist-json: {e}")))?;
            d.validate()?;
            return Ok(Some(d));
        }
        let Some(name) = self.dist else { return Ok(None) };
        let alpha = || self.alpha.ok_or_else(|| CliError::Usage(format!("--dist {name:?} needs --alpha")));
        let d = match name {
            DistName::Gaussian => Dist::Gaussian { mu: self.mu, sigma: self.sigma },
            DistName::Exponential => Dist::Exponential { lambda: self.lambda },
            DistName::Pareto => Dist::Pareto(ParetoI { alpha: alpha()?, l: self.l }),
            DistName::Student => Dist::Student(StudentT { alpha: alpha()?, scale: self.sigma, location: self.mu }),
            DistName::Lognormal => Dist::Lognormal(Lognormal { mu: self.mu, sigma: self.sigma }),
            DistName::Stable => {
                Dist::Stable(StableParams { alpha_s: alpha()?, beta: self.beta, mu: self.mu, sigma: self.sigma })
            }
            DistName::TwoState => Dist::TwoState(TwoStateGaussian { sigma: self.sigma, a: self.jump, p: self.jump_prob }),
        };
        d.validate()?;
        Ok(Some(d))
    }
}

fn load(input: &Option<PathBuf>) -> Result<Sample, CliError> {
    match input {
        Some(p) => Ok(ingest_csv(p)?),
        None => Err(CliError::Usage("--input is required".into())),
    }
}

/// Data from --input, else n draws from the flag distribution.
fn data_or_draws(input: &Option<PathBuf>, d: &DistArgs, n: usize, seed: u64) -> Result<Sample, CliError> {
    if input.is_some() {
        return load(input);
    }
    match d.build()? {
        Some(dist) => Ok(dist.sample(n, seed)?),
        None => Err(CliError::Usage("give --input or --dist".into())),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct KappaArgs {
    /// Bootstrap from this file instead of sampling a distribution.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 1)]
    pub n0: usize,
    /// Comma-separated sample sizes.
    #[arg(long = "n", value_delimiter = ',', default_value = "2")]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
}

pub fn kappa(a: &KappaArgs, seed: u64) -> Result<Outcome, CliError> {
    let report = match (&a.input, a.dist.build()?) {
        (Some(_), _) => kp::kappa_from_sample(&load(&a.input)?, a.n0, &a.ns, a.paths, seed)?,
        (None, Some(d)) => kp::kappa_empirical(&d, a.n0, &a.ns, a.paths, seed)?,
        (None, None) => return Err(CliError::Usage("give --input or --dist".into())),
    };
    let mut o = Outcome::new(a, a.input.as_ref(), val(&report));
    for (&n, &k) in report.ns.iter().zip(&report.kappa) {
        o.plot.push((n as f64, k, "kappa".into()));
    }
    for &(n, m) in &report.mad_curve {
        o.plot.push((n as f64, m, "mad".into()));
    }
    Ok(o)
}

#[derive(Args, Debug, Serialize)]
pub struct DiagArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Moment orders for the maximum-to-sum curves.
    #[arg(long = "ms-p", value_delimiter = ',', default_value = "1,2,3,4")]
    pub ms_p: Vec<f64>,
    /// Aggregation lags for the kurtosis table.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub lags: Vec<usize>,
    /// Upper fraction of the data used in the Zipf fit.
    #[arg(long, default_value_t = 0.1)]
    pub zipf_top: f64,
}

pub fn diag(a: &DiagArgs) -> Result<Outcome, CliError> {
    let s = load(&a.input)?;
    let mut warnings = Vec::new();
    let mut plot = Vec::new();
    let mut curves = Vec::new();
    for &p in &a.ms_p {
        let c = dg::ms_plot(&s, p)?;
        plot.extend(c.ratios.iter().map(|&(n, r)| (n as f64, r, format!("ms_p{p}"))));
        curves.push(c);
    }
    let mut kurt = Vec::new();
    for &lag in &a.lags {
        match dg::kurtosis_under_aggregation(&s, &[lag]) {
            Ok(mut v) => kurt.append(&mut v),
            Err(e) => warnings.push(format!("kurtosis at lag {lag} skipped: {e}")),
        }
    }
    let zipf = match dg::zipf_fit(&s.values, a.zipf_top) {
        Ok(z) => {
            plot.extend(z.points.iter().map(|&(x, y)| (x, y, "zipf".to_string())));
            Some(z)
        }
        Err(e) => {
            warnings.push(format!("zipf fit skipped: {e}"));
            None
        }
    };
    let results = json!({
        "n": s.len(),
        "ms_curves": curves,
        "kurtosis": kurt,
        "records": dg::gumbel_records(&s)?,
        "zipf": zipf,
    });
    let mut o = Outcome::new(a, a.input.as_ref(), results);
    o.warnings = warnings;
    o.plot = plot;
    Ok(o)
}

#[derive(Args, Debug, Serialize)]
pub struct TailfitArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Pareto threshold L; defaults to the sample minimum.
    #[arg(long = "l")]
    pub l: Option<f64>,
    #[arg(long)]
    pub debiased: bool,
    /// Comma-separated order statistics for the Hill sweep.
    #[arg(long, value_delimiter = ',')]
    pub hill_k: Vec<usize>,
    /// GPD threshold u.
    #[arg(long)]
    pub gpd_u: Option<f64>,
}

pub fn tailfit(a: &TailfitArgs) -> Result<Outcome, CliError> {
    let s = load(&a.input)?;
    let l = a.l.unwrap_or_else(|| s.values.iter().copied().fold(f64::INFINITY, f64::min));
    let fit = tf::pareto_mle(&s, l, a.debiased)?;
    let mut warnings = Vec::new();
    let mean = match tf::plugin_pareto_mean(&fit) {
        Ok(m) => Some(m),
        Err(e) => {
            warnings.push(format!("plug-in mean unavailable: {e}"));
            None
        }
    };
    let hill = tf::hill_sweep(&s, &a.hill_k)?;
    let gpd = a.gpd_u.map(|u| tf::gpd_fit_mle(&s, u)).transpose()?;
    if gpd.is_some_and(|g| g.low_count) {
        warnings.push(format!("GPD fit rests on fewer than {} exceedances", tf::GPD_MIN_EXCEEDANCES));
    }
    let mut o = Outcome::new(a, a.input.as_ref(), json!({ "pareto": fit, "plugin_mean": mean, "hill": hill, "gpd": gpd }));
    o.plot = hill.iter().map(|f| (f.n_exceed as f64, f.alpha_hat, "hill".to_string())).collect();
    o.warnings = warnings;
    Ok(o)
}

#[derive(Args, Debug, Serialize)]
pub struct ShadowArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Lower bound L of the variable.
    #[arg(long)]
    pub lower: f64,
    /// Upper bound H of the variable.
    #[arg(long)]
    pub upper: f64,
    /// Threshold L* above which the tail is fitted.
    #[arg(long)]
    pub lstar: f64,
    /// Subsample refits for intervals; 0 skips them.
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.5)]
    pub frac: f64,
}

pub fn shadow(a: &ShadowArgs, seed: u64) -> Result<Outcome, CliError> {
    let s = load(&a.input)?;
    let spec = sh::DualSpec::new(a.lower, a.upper, a.lstar)?;
    let (res, gpd) = sh::shadow_from_sample(&s, &spec)?;
    let boot = (a.bootstrap > 0).then(|| sh::bootstrap_shadow(&s, &spec, a.bootstrap, a.frac, seed)).transpose()?;
    let boot = boot.map(|b| json!({ "xi_interval": b.xi_interval, "shadow_interval": b.shadow_interval, "refits": b.xi.len() }));
    let mut o = Outcome::new(a, a.input.as_ref(), json!({ "spec": spec, "shadow": res, "gpd": gpd, "bootstrap": boot }));
    if gpd.low_count {
        o.warnings.push(format!("GPD fit rests on fewer than {} exceedances", tf::GPD_MIN_EXCEEDANCES));
    }
    Ok(o)
}

#[derive(Args, Debug, Serialize)]
pub struct GiniArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub dist: DistArgs,
    /// Draws when sampling --dist.
    #[arg(long = "n", default_value_t = 1000)]
    pub n: usize,
    /// Tail index for the mode correction; defaults to --alpha of the distribution.
    #[arg(long)]
    pub tail_alpha: Option<f64>,
    /// Mean used in the correction; defaults to the sample mean.
    #[arg(long)]
    pub mean: Option<f64>,
    /// Fit a Pareto above this threshold and report 1/(2α̂−1).
    #[arg(long)]
    pub mle_l: Option<f64>,
}

pub fn gini(a: &GiniArgs, seed: u64) -> Result<Outcome, CliError> {
    let s = data_or_draws(&a.input, &a.dist, a.n, seed)?;
    let g_np = ineq::gini_nonparametric(&s)?;
    let alpha = a.tail_alpha.or(a.dist.alpha);
    let mut warnings = Vec::new();
    let mut results = json!({ "n": s.len(), "g_np": g_np });
    match alpha {
        Some(al) if al > 1.0 && al < 2.0 => {
            let rep = ineq::gini_corrected(&s, al, a.mean.unwrap_or_else(|| s.mean()))?;
            results["corrected"] = val(&rep);
        }
        Some(al) => warnings.push(format!("no mode correction outside 1 < alpha < 2 (alpha = {al})")),
        None => {}
    }
    if let Some(l) = a.mle_l {
        let fit = tf::pareto_mle(&s, l, true)?;
        results["mle"] = json!({ "alpha_hat": fit.alpha_hat, "g_mle": ineq::gini_mle_pareto(fit.alpha_hat)?,
            "stderr": ineq::gini_mle_stderr(fit.alpha_hat, fit.n_exceed)? });
    }
    let mut o = Outcome::new(a, a.input.as_ref(), results);
    o.warnings = warnings;
    Ok(o)
}

#[derive(Args, Debug, Serialize)]
pub struct KqArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long = "n", default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub q: f64,
    /// Tail index for the theoretical share; defaults to --alpha.
    #[arg(long)]
    pub tail_alpha: Option<f64>,
    /// Split the data into this many consecutive parts and compare pooled with weighted shares.
    #[arg(long, default_value_t = 0)]
    pub split: usize,
}

pub fn kq(a: &KqArgs, seed: u64) -> Result<Outcome, CliError> {
    let s = data_or_draws(&a.input, &a.dist, a.n, seed)?;
    let qc = ineq::quantile_contribution(&s, a.q, a.tail_alpha.or(a.dist.alpha))?;
    let mut results = json!({ "n": s.len(), "share": qc });
    if a.split >= 2 {
        let size = s.len().div_ceil(a.split);
        let parts = s.values.chunks(size).map(|c| Sample::new(c.to_vec())).collect::<Result<Vec<_>, _>>()?;
        let (w, p) = ineq::superadditivity_check(&parts, a.q)?;
        results["pooling"] = json!({ "parts": parts.len(), "weighted": w, "pooled": p });
    }
    Ok(Outcome::new(a, a.input.as_ref(), results))
}

#[derive(Args, Debug, Serialize)]
pub struct PvmetaArgs {
    /// Median p-value of the replications.
    #[arg(long)]
    pub p_median: f64,
    /// Per-study sample size; omit for the large-sample law.
    #[arg(long = "n")]
    pub n: Option<u32>,
    /// Points at which to report the CDF.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05")]
    pub k: Vec<f64>,
    /// Numbers of trials for the expected minimum p-value.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub m: Vec<u32>,
    /// Simulated replications to report next to the closed forms; 0 skips.
    #[arg(long, default_value_t = 0)]
    pub simulate: usize,
    /// Density grid size for plot data.
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
}

pub fn pvmeta(a: &PvmetaArgs, seed: u64) -> Result<Outcome, CliError> {
    let spec = pv::PvMetaSpec { p_median: a.p_median, n: a.n };
    spec.validate()?;
    let cdf = a.k.iter().map(|&k| Ok(json!({ "k": k, "cdf": pv::pv_cdf_at(k, &spec)? }))).collect::<Result<Vec<_>, Error>>()?;
    let mins =
        a.m.iter().map(|&m| Ok(json!({ "m": m, "expected_min": pv::pv_min_expectation(&spec, m)? }))).collect::<Result<Vec<_>, Error>>()?;
    let mut results = json!({ "spec": spec, "mean": pv::pv_mean(&spec)?, "cdf": cdf, "min_p": mins });
    if a.simulate > 0 {
        let sim = pv::pv_simulate(a.p_median, a.n, a.simulate, seed)?;
        let below: Vec<Value> = a
            .k
            .iter()
            .map(|&k| json!({ "k": k, "share": sim.values.iter().filter(|&&p| p < k).count() as f64 / sim.len() as f64 }))
            .collect();
        results["simulated"] = json!({ "reps": sim.len(), "mean": sim.mean(), "below": below });
    }
    let mut o = Outcome::new(a, None, results);
    let g = a.grid.max(2);
    for i in 0..g {
        let p = (i as f64 + 0.5) / g as f64;
        // the finite-n density is not defined at exactly one half
        if let Ok(d) = pv::pv_density(p, &spec) {
            o.plot.push((p, d, "density".into()));
        }
    }
    Ok(o)
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SideArg {
    CallOnPrice,
    CallOnReturn,
    PutOnReturn,
}

#[derive(Args, Debug, Serialize)]
pub struct TailpriceArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub anchor_k: f64,
    #[arg(long)]
    pub anchor_c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub spot: f64,
    #[arg(long, value_enum, default_value_t = SideArg::CallOnPrice)]
    pub side: SideArg,
    /// Comma-separated strikes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub strikes: Vec<f64>,
    /// Take the put normaliser 1/(1 − l^α) as one.
    #[arg(long)]
    pub lambda_approx: bool,
    /// Black–Scholes volatility at the anchor, for the lower bound on α.
    #[arg(long)]
    pub bs_sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub bs_sigma_slope: f64,
    #[arg(long, default_value_t = 1.0)]
    pub maturity: f64,
}

pub fn tailprice(a: &TailpriceArgs) -> Result<Outcome, CliError> {
    let side = match a.side {
        SideArg::CallOnPrice => to::Side::CallOnPrice,
        SideArg::CallOnReturn => to::Side::CallOnReturn,
        SideArg::PutOnReturn => to::Side::PutOnReturn,
    };
    let spec = to::TailPricingSpec {
        alpha: a.alpha,
        anchor_strike: a.anchor_k,
        anchor_price: a.anchor_c,
        spot: a.spot,
        side,
        lambda_approx: a.lambda_approx,
    };
    let curve = to::price_curve(&spec, &a.strikes)?;
    let mut warnings: Vec<String> =
        curve.outside_zone.iter().map(|&i| format!("strike {} lies outside the tail zone", curve.strikes[i])).collect();
    // puts are checked as calls through parity at zero rates
    let checked = match side {
        to::Side::PutOnReturn => to::PriceCurve {
            prices: curve.strikes.iter().zip(&curve.prices).map(|(k, p)| p + a.spot - k).collect(),
            ..curve.clone()
        },
        _ => curve.clone(),
    };
    let report = if checked.strikes.len() >= 3 {
        Some(to::curve_diagnostics(&checked)?)
    } else {
        warnings.push("fewer than three strikes: no arbitrage checks".into());
        None
    };
    let bound = match a.bs_sigma {
        Some(_) if side != to::Side::CallOnReturn => {
            return Err(CliError::Usage("--bs-sigma needs --side call-on-return".into()));
        }
        Some(sig) => Some(to::min_alpha_no_arbitrage(a.anchor_k, sig, a.bs_sigma_slope, a.spot, a.maturity, curve.implied_l)?),
        None => None,
    };
    if bound.is_some_and(|b| a.alpha < b) {
        warnings.push(format!("alpha {} is below the no-arbitrage bound {}", a.alpha, bound.unwrap_or(f64::NAN)));
    }
    let mut o = Outcome::new(a, None, json!({ "spec": spec, "curve": curve, "diagnostics": report, "min_alpha": bound }));
    o.plot = curve.strikes.iter().zip(&curve.prices).map(|(&k, &p)| (k, p, "price".to_string())).collect();
    o.warnings = warnings;
    Ok(o)
}

#[derive(Args, Debug, Serialize)]
pub struct DistCmdArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long = "n", default_value_t = 1000)]
    pub n: usize,
}

pub fn dist(a: &DistCmdArgs, seed: u64) -> Result<Outcome, CliError> {
    let d = a.dist.build()?.ok_or_else(|| CliError::Usage("--dist or --dist-json is required".into()))?;
    let s = d.sample(a.n, seed)?;
    let mean = d.mean().ok();
    let mut o = Outcome::new(a, None, json!({ "dist": d, "mean": mean, "sample_mean": s.mean(), "values": s.values }));
    o.plot = s.values.iter().enumerate().map(|(i, &x)| (i as f64, x, "sample".to_string())).collect();
    Ok(o)
}
