use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spdelab::integrate::{
    contraction_budget, picard_solve, run_ensemble, run_path_frozen, BudgetParams, FrozenNoise, PicardOptions,
    StepperConfig,
};
use spdelab::model::{certify_h2, certify_h3, H2Options, HypothesisCertificate, Verdict};
use spdelab::noise::RngStream;
use spdelab::probe::{
    brownian_dyadic_path, check_dissipativity, check_energy_inequality, check_kolmogorov, estimate_moments,
    regularity_probe, BoundReport, DyadicPath,
};
use spdelab::Error;

use crate::config::{ExperimentConfig, KolmogorovSource, Setup};
use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const CERTIFICATE_FILE: &str = "certificate.json";
pub const MOMENTS_FILE: &str = "moments.csv";
pub const REPORTS_FILE: &str = "reports.json";
pub const PICARD_FILE: &str = "picard.json";
pub const KOLMOGOROV_FILE: &str = "kolmogorov.json";
pub const SUMMARY_FILE: &str = "summary.json";

const DEFAULT_H3_RADIUS: f64 = 10.0;
/// Floor on the time grid when the horizon is far below `stepper.dt`.
const MIN_PICARD_STEPS: usize = 16;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Falsified,
    BoundFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Falsified => 2,
            Status::BoundFailure => 3,
        }
    }

    fn worst(self, other: Status) -> Status {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

pub struct Options {
    pub out: PathBuf,
    pub allow_grid: bool,
}

fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(dir.join(name), s)?;
    Ok(())
}

fn certificate(cfg: &ExperimentConfig, s: &Setup) -> Result<HypothesisCertificate, CliError> {
    let q = cfg.model.q;
    let cert = certify_h2(&s.model, q, s.noise.theta, H2Options::default())?;
    if cfg.model.h3 {
        let radius = cfg.model.h3_radius.unwrap_or(DEFAULT_H3_RADIUS);
        let h3 = certify_h3(&s.model, q, s.noise.theta, radius)?;
        return Ok(cert.merge(h3));
    }
    Ok(cert)
}

fn verdict_status(v: Verdict, allow_grid: bool) -> Status {
    match v {
        Verdict::Verified => Status::Pass,
        Verdict::GridVerifiedOnly if allow_grid => Status::Pass,
        _ => Status::Falsified,
    }
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

pub fn certify(cfg: &ExperimentConfig, opts: &Options) -> Result<Status, CliError> {
    let s = cfg.setup()?;
    let cert = certificate(cfg, &s)?;
    write_json(&opts.out, CERTIFICATE_FILE, &cert)?;
    let overall = cert.status.overall();
    println!(
        "certificate: h2 {}, growth {}, h3 {} -> {}",
        verdict_name(cert.status.h2),
        verdict_name(cert.status.growth),
        verdict_name(cert.status.h3),
        verdict_name(overall)
    );
    if let (Some(c1), Some(c2)) = (cert.c1, cert.c2) {
        println!("c1 = {c1}, c2 = {c2}, theta = {}", cert.theta);
    }
    let status = verdict_status(overall, opts.allow_grid);
    if overall == Verdict::GridVerifiedOnly && !opts.allow_grid {
        eprintln!("grid-verified-only certificate; pass --allow-grid to accept it");
    }
    Ok(status)
}

pub fn simulate(cfg: &ExperimentConfig, opts: &Options) -> Result<Status, CliError> {
    let s = cfg.setup()?;
    let cert = certificate(cfg, &s)?;
    write_json(&opts.out, CERTIFICATE_FILE, &cert)?;
    let q = cfg.model.q;
    let r = cfg.growth_exponent();
    let rhos = cfg.energy_rhos();

    let ens = run_ensemble(
        &cfg.stepper,
        &s.basis,
        &s.model,
        &s.noise,
        &s.u0,
        cfg.ensemble.master_seed,
        cfg.ensemble.paths,
    )?;
    let blown = ens.iter().filter(|p| p.blown_up).count();
    let series = estimate_moments(&s.basis, &ens, q, &rhos)?;
    fs::create_dir_all(&opts.out)?;
    fs::write(opts.out.join(MOMENTS_FILE), series.to_csv())?;

    let needs_h2 = cfg.checks.names.iter().any(|n| n == "energy" || n == "dissipativity");
    if needs_h2 && !cert.is_h2_verified() {
        eprintln!("coercivity is not verified; energy and dissipativity checks need a certificate");
        write_json(&opts.out, REPORTS_FILE, &Vec::<BoundReport>::new())?;
        return Ok(Status::Falsified);
    }
    let mut reports = Vec::new();
    for name in &cfg.checks.names {
        match name.as_str() {
            "energy" => {
                for &rho in &rhos {
                    let m0 = s.basis.lq_norm_pow(&s.u0, rho)?;
                    reports.push(check_energy_inequality(&series, &cert, rho, m0, s.basis.length())?);
                }
            }
            "dissipativity" => {
                let m0 = s.basis.lq_norm_pow(&s.u0, q * r as f64)?;
                reports.push(check_dissipativity(&series, &cert, q, r as f64, m0)?);
            }
            "regularity" => {
                let kappa_max = cfg.checks.kappa_max.unwrap_or(q - 1.0);
                reports.push(regularity_probe(&series, kappa_max)?);
            }
            other => return Err(CliError::Config(format!("unknown check {other:?}"))),
        }
    }
    write_json(&opts.out, REPORTS_FILE, &reports)?;
    println!(
        "{} paths, {} record times, {} blown up",
        ens.len(),
        series.times.len(),
        blown
    );
    let mut status = Status::Pass;
    for rep in &reports {
        println!(
            "{}: {} (margin {:e})",
            rep.bound_name,
            if rep.passed() { "pass" } else { "fail" },
            rep.margin
        );
        if !rep.passed() {
            status = Status::BoundFailure;
        }
    }
    Ok(status)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub lipschitz: f64,
    pub budget_t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
    pub converged: bool,
    pub iterations: usize,
    #[serde(with = "spdelab::serde_ext::vec")]
    pub distances: Vec<f64>,
    #[serde(with = "spdelab::serde_ext::vec")]
    pub contraction_factors: Vec<f64>,
    /// Largest observed contraction factor; absent without convergence.
    pub max_factor: Option<f64>,
    /// Sup distance of the fixed point to the stepper on the same noise.
    pub fixed_point_distance: Option<f64>,
    pub within_budget: bool,
    pub contraction_ok: bool,
}

pub fn picard(cfg: &ExperimentConfig, opts: &Options) -> Result<Status, CliError> {
    let s = cfg.setup()?;
    if s.model.cutoff_n.is_none() {
        return Err(CliError::Config("picard needs model.cutoff_n".into()));
    }
    let p = &cfg.picard;
    let lip = s.model.truncated_lipschitz(200_001).unwrap_or(0.0);
    let mut params = BudgetParams::new(lip, cfg.model.q, p.alpha, p.gamma, p.xi_prime, s.noise.theta, s.basis.spectral_gap());
    params.c_emb = p.c_emb;
    params.domain_size = s.basis.length();
    params.horizon = cfg.stepper.horizon;
    let budget = contraction_budget(&params)?;
    let horizon = p.horizon.unwrap_or(budget);
    if !(horizon > 0.0) {
        return Err(CliError::Config("picard.horizon must be positive".into()));
    }
    let steps = ((horizon / cfg.stepper.dt).ceil() as usize).max(MIN_PICARD_STEPS);
    let dt = horizon / steps as f64;
    let noise = FrozenNoise::sample(&s.noise, dt, steps, &mut RngStream::new(cfg.ensemble.master_seed, 0));
    let popts = PicardOptions {
        scheme: cfg.stepper.scheme,
        tol: p.tol,
        max_iter: p.max_iter,
    };
    let within_budget = horizon <= budget;
    let report = match picard_solve(&s.basis, &s.model, &s.u0, &noise, popts) {
        Ok(out) => {
            let scfg = StepperConfig::new(cfg.stepper.scheme, dt, noise.horizon())?;
            let path = run_path_frozen(&scfg, &s.basis, &s.model, &s.u0, &noise)?;
            let dist = out
                .trajectory
                .iter()
                .zip(&path.states)
                .map(|(a, b)| {
                    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
                    d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
                })
                .fold(0.0f64, f64::max);
            let max_factor = out.max_factor();
            PicardReport {
                lipschitz: lip,
                budget_t0: budget,
                horizon,
                dt,
                steps,
                converged: true,
                iterations: out.iterations,
                max_factor: Some(max_factor),
                fixed_point_distance: Some(dist),
                within_budget,
                contraction_ok: max_factor < 1.0,
                distances: out.distances,
                contraction_factors: out.contraction_factors,
            }
        }
        Err(Error::NoConvergence { iterations, distance }) => PicardReport {
            lipschitz: lip,
            budget_t0: budget,
            horizon,
            dt,
            steps,
            converged: false,
            iterations,
            distances: vec![distance],
            contraction_factors: Vec::new(),
            max_factor: None,
            fixed_point_distance: None,
            within_budget,
            contraction_ok: false,
        },
        Err(e) => return Err(e.into()),
    };
    write_json(&opts.out, PICARD_FILE, &report)?;
    println!(
        "Lip = {lip}, budget T0 = {budget:e}, horizon {horizon:e}: {} after {} iterations, max rho = {}",
        if report.converged { "converged" } else { "no convergence" },
        report.iterations,
        fmt_factor(report.max_factor)
    );
    if let Some(d) = report.fixed_point_distance {
        println!("fixed point vs stepper: {d:e}");
    }
    Ok(if within_budget && !report.contraction_ok {
        Status::BoundFailure
    } else {
        Status::Pass
    })
}

fn fmt_factor(f: Option<f64>) -> String {
    f.map_or_else(|| "n/a".into(), |v| format!("{v:e}"))
}

fn simulated_dyadic_paths(cfg: &ExperimentConfig) -> Result<Vec<DyadicPath>, CliError> {
    let s = cfg.setup()?;
    let ens = run_ensemble(
        &cfg.stepper,
        &s.basis,
        &s.model,
        &s.noise,
        &s.u0,
        cfg.ensemble.master_seed,
        cfg.kolmogorov.paths,
    )?;
    let n = ens[0].states.len() - 1;
    if !n.is_power_of_two() {
        return Err(CliError::Config(format!(
            "simulation source needs 2^k + 1 records, got {}; adjust stepper.T, dt and record_every",
            n + 1
        )));
    }
    Ok(ens
        .iter()
        .map(|p| DyadicPath {
            horizon: cfg.stepper.horizon,
            dim: s.basis.grid_size(),
            data: p.states.iter().flat_map(|f| f.values().iter().copied()).collect(),
        })
        .collect())
}

pub fn kolmogorov(cfg: &ExperimentConfig, opts: &Options) -> Result<Status, CliError> {
    let k = &cfg.kolmogorov;
    let paths: Vec<DyadicPath> = match k.source {
        KolmogorovSource::Brownian => (0..k.paths as u64)
            .map(|i| brownian_dyadic_path(k.depth, k.horizon, &mut RngStream::new(cfg.ensemble.master_seed, i)))
            .collect(),
        KolmogorovSource::Simulation => simulated_dyadic_paths(cfg)?,
    };
    let horizon = match k.source {
        KolmogorovSource::Brownian => k.horizon,
        KolmogorovSource::Simulation => cfg.stepper.horizon,
    };
    let rep = check_kolmogorov(&paths, k.c, k.q, k.xi, k.eta, horizon)?;
    write_json(&opts.out, KOLMOGOROV_FILE, &rep)?;
    println!(
        "E K^q = {:e} vs B = {:e} (ratio {:e}); E sup |v|^q = {:e} vs {:e}: {}",
        rep.lhs[0],
        rep.rhs[0],
        rep.constants["margin_ratio"],
        rep.lhs[1],
        rep.rhs[1],
        if rep.passed() { "pass" } else { "fail" }
    );
    Ok(if rep.passed() { Status::Pass } else { Status::BoundFailure })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub artifact: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<Option<T>, CliError> {
    let path = dir.join(name);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    Ok(Some(serde_json::from_str(&text)?))
}

/// Collects the artifacts found in the output directory into one summary.
pub fn report(opts: &Options) -> Result<Status, CliError> {
    let dir = &opts.out;
    let mut entries = Vec::new();
    let mut status = Status::Pass;
    if let Some(cert) = read_json::<HypothesisCertificate>(dir, CERTIFICATE_FILE)? {
        let overall = cert.status.overall();
        let st = verdict_status(overall, opts.allow_grid);
        status = status.worst(st);
        entries.push(SummaryEntry {
            artifact: CERTIFICATE_FILE.into(),
            name: "certificate".into(),
            passed: st == Status::Pass,
            detail: verdict_name(overall),
        });
    }
    let reports = read_json::<Vec<BoundReport>>(dir, REPORTS_FILE)?.unwrap_or_default();
    let kolmo = read_json::<BoundReport>(dir, KOLMOGOROV_FILE)?;
    for (artifact, rep) in reports
        .iter()
        .map(|r| (REPORTS_FILE, r))
        .chain(kolmo.iter().map(|r| (KOLMOGOROV_FILE, r)))
    {
        if !rep.passed() {
            status = status.worst(Status::BoundFailure);
        }
        entries.push(SummaryEntry {
            artifact: artifact.into(),
            name: rep.bound_name.clone(),
            passed: rep.passed(),
            detail: format!("margin {:e}", rep.margin),
        });
    }
    if let Some(p) = read_json::<PicardReport>(dir, PICARD_FILE)? {
        let ok = !p.within_budget || p.contraction_ok;
        if !ok {
            status = status.worst(Status::BoundFailure);
        }
        entries.push(SummaryEntry {
            artifact: PICARD_FILE.into(),
            name: "picard".into(),
            passed: ok,
            detail: format!("max rho {} at horizon {:e} (budget {:e})", fmt_factor(p.max_factor), p.horizon, p.budget_t0),
        });
    }
    if entries.is_empty() {
        return Err(CliError::Config(format!("no artifacts found in {}", dir.display())));
    }
    for e in &entries {
        println!("{:<24} {:<4} {}", e.name, if e.passed { "pass" } else { "fail" }, e.detail);
    }
    write_json(dir, SUMMARY_FILE, &entries)?;
    Ok(status)
}
