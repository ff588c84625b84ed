//! Monte Carlo moments and checks of the explicit moment, energy and
//! continuity bounds.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::error::{invalid, Error, Result};
use crate::integrate::PathResult;
use crate::model::HypothesisCertificate;
use crate::noise::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub q: f64,
    /// `E‖u(t)‖^q_{C0}`
    pub m_c0_q: Vec<f64>,
    pub se_c0_q: Vec<f64>,
    pub rhos: Vec<f64>,
    /// `E‖u(t)‖^ϱ_{L^ϱ}`, one row per entry of `rhos`.
    pub m_lrho_rho: Vec<Vec<f64>>,
    pub se_lrho_rho: Vec<Vec<f64>>,
    /// `E‖A^{1/2}u(t)‖^q_{L^q}`
    pub m_h1_q: Vec<f64>,
    pub se_h1_q: Vec<f64>,
    pub paths: usize,
}

/// Mean and standard error (`sample std / √M`), summed in index order.
fn mean_se(samples: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = samples.len();
    let mut it = samples.clone();
    let x0 = it.next().unwrap_or(0.0);
    if it.all(|x| x == x0) {
        return (x0, 0.0);
    }
    let mean = samples.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

impl MomentSeries {
    pub fn rho_index(&self, rho: f64) -> Option<usize> {
        self.rhos.iter().position(|&r| (r - rho).abs() < 1e-12)
    }

    /// Rows `t,norm_id,rho,estimate,stderr`, one per (time, norm).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,norm_id,rho,estimate,stderr\n");
        for (i, t) in self.times.iter().enumerate() {
            let _ = writeln!(s, "{t},c0,{},{},{}", self.q, self.m_c0_q[i], self.se_c0_q[i]);
            for (k, rho) in self.rhos.iter().enumerate() {
                let _ = writeln!(s, "{t},lrho,{rho},{},{}", self.m_lrho_rho[k][i], self.se_lrho_rho[k][i]);
            }
            if !self.m_h1_q.is_empty() {
                let _ = writeln!(s, "{t},h1,{},{},{}", self.q, self.m_h1_q[i], self.se_h1_q[i]);
            }
        }
        s
    }
}

/// Per-path norms at every recorded time: `[c0^q, lrho..., h1^q]`.
fn path_norms(b: &SpectralBasis, path: &PathResult, q: f64, rhos: &[f64]) -> Result<Vec<Vec<f64>>> {
    let sqrt_l: Vec<f64> = b.lambda().iter().map(|l| l.sqrt()).collect();
    let mut grad = vec![0.0; b.grid_size()];
    path.states
        .iter()
        .map(|s| {
            let mut row = Vec::with_capacity(rhos.len() + 2);
            row.push(b.sup_norm(s).powf(q));
            for &rho in rhos {
                row.push(b.lq_norm_pow(s, rho)?);
            }
            let c: Vec<f64> = s.coeffs().iter().zip(&sqrt_l).map(|(c, l)| c * l).collect();
            b.to_grid_into(&c, &mut grad);
            row.push(crate::basis::lq_pow_values(&grad, b.dx(), q)?);
            Ok(row)
        })
        .collect()
}

/// Empirical moments of an ensemble at its common record times.
pub fn estimate_moments(b: &SpectralBasis, ensemble: &[PathResult], q: f64, rhos: &[f64]) -> Result<MomentSeries> {
    let first = ensemble.first().ok_or(Error::EmptyEnsemble)?;
    if ensemble.iter().any(|p| p.times != first.times) {
        return Err(invalid("ensemble", "paths do not share record times"));
    }
    if !(q >= 1.0) || rhos.iter().any(|&r| !(r >= 1.0)) {
        return Err(invalid("q/rho", "norm exponents must be at least 1"));
    }
    let norms: Vec<Vec<Vec<f64>>> = ensemble
        .par_iter()
        .map(|p| path_norms(b, p, q, rhos))
        .collect::<Result<_>>()?;
    let nt = first.times.len();
    let cols = rhos.len() + 2;
    let mut means = vec![vec![0.0; nt]; cols];
    let mut ses = vec![vec![0.0; nt]; cols];
    for i in 0..nt {
        for c in 0..cols {
            let (m, s) = mean_se(norms.iter().map(|p| p[i][c]));
            means[c][i] = m;
            ses[c][i] = s;
        }
    }
    let m_h1_q = means.pop().unwrap();
    let se_h1_q = ses.pop().unwrap();
    let m_c0_q = means.remove(0);
    let se_c0_q = ses.remove(0);
    Ok(MomentSeries {
        times: first.times.clone(),
        q,
        m_c0_q,
        se_c0_q,
        rhos: rhos.to_vec(),
        m_lrho_rho: means,
        se_lrho_rho: ses,
        m_h1_q,
        se_h1_q,
        paths: ensemble.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    #[serde(with = "crate::serde_ext::vec")]
    pub lhs: Vec<f64>,
    #[serde(with = "crate::serde_ext::vec")]
    pub rhs: Vec<f64>,
    #[serde(with = "crate::serde_ext::vec")]
    pub stderr: Vec<f64>,
    /// `min(rhs − lhs)`
    #[serde(with = "crate::serde_ext::scalar")]
    pub margin: f64,
    pub verdict: CheckVerdict,
    /// Verdict qualifier, e.g. the confidence band used.
    pub qualifier: String,
    #[serde(with = "crate::serde_ext::map")]
    pub constants: BTreeMap<String, f64>,
}

impl BoundReport {
    fn new(name: &str, times: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, stderr: Vec<f64>) -> Self {
        let margin = lhs
            .iter()
            .zip(&rhs)
            .map(|(l, r)| r - l)
            .fold(f64::INFINITY, f64::min);
        let within = lhs
            .iter()
            .zip(&rhs)
            .zip(&stderr)
            .all(|((l, r), s)| *l <= r + 2.0 * s);
        Self {
            bound_name: name.into(),
            times,
            labels: Vec::new(),
            lhs,
            rhs,
            stderr,
            margin,
            verdict: if within { CheckVerdict::Pass } else { CheckVerdict::Fail },
            qualifier: "lhs <= rhs + 2 stderr at every point".into(),
            constants: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == CheckVerdict::Pass
    }

    fn constant(mut self, key: &str, v: f64) -> Self {
        self.constants.insert(key.into(), v);
        self
    }
}

/// `(c̃₁ϱ, c̃₂ϱ)` of the `L^ϱ` energy estimate.
pub fn energy_constants(c1: f64, c2: f64, rho: f64, domain_size: f64) -> (f64, f64) {
    let c1t = rho * c1 / 2.0;
    let c2t = 2.0 * (2.0 * (rho - 2.0) / (rho * c1)).powf((rho - 2.0) / rho) * c2.powf(rho / 2.0) * domain_size;
    (c1t, c2t)
}

fn h2_constants(cert: &HypothesisCertificate) -> Result<(f64, f64)> {
    match (cert.is_h2_verified(), cert.c1, cert.c2) {
        (true, Some(c1), Some(c2)) => Ok((c1, c2)),
        _ => Err(invalid("certificate", "coercivity is not verified")),
    }
}

/// `E‖u(t)‖^ϱ_{L^ϱ} ≤ E‖u0‖^ϱ_{L^ϱ} e^{−c̃₁ϱ t} + c̃₂ϱ/c̃₁ϱ`.
pub fn check_energy_inequality(
    series: &MomentSeries,
    cert: &HypothesisCertificate,
    rho: f64,
    u0_moment: f64,
    domain_size: f64,
) -> Result<BoundReport> {
    let (c1, c2) = h2_constants(cert)?;
    if !(rho > 2.0) {
        return Err(invalid("rho", "energy exponent must exceed 2"));
    }
    let k = series.rho_index(rho).ok_or(Error::MissingMoment(rho))?;
    let (c1t, c2t) = energy_constants(c1, c2, rho, domain_size);
    let plateau = c2t / c1t;
    let rhs = series
        .times
        .iter()
        .map(|t| u0_moment * (-c1t * t).exp() + plateau)
        .collect();
    Ok(BoundReport::new(
        &format!("energy_L{rho}"),
        series.times.clone(),
        series.m_lrho_rho[k].clone(),
        rhs,
        series.se_lrho_rho[k].clone(),
    )
    .constant("rho", rho)
    .constant("c1_tilde", c1t)
    .constant("c2_tilde", c2t)
    .constant("plateau", plateau))
}

/// Envelope fit of `E‖u(t)‖^q_{C0} ≤ Ĉ(E‖u0‖^{qr}_{L^{qr}} e^{−c̄₁(t−1)} + 1)`, `t ≥ 1`,
/// with `c̄₁ = qrc₁/2`. Passes when `Ĉ` is finite and the normalized moment
/// `m/envelope` does not grow over the second half of the horizon, up to two
/// standard errors.
pub fn check_dissipativity(
    series: &MomentSeries,
    cert: &HypothesisCertificate,
    q: f64,
    r: f64,
    u0_qr_moment: f64,
) -> Result<BoundReport> {
    let (c1, _) = h2_constants(cert)?;
    let t_end = series.times.last().copied().unwrap_or(0.0);
    if t_end < 1.0 {
        return Err(Error::Horizon(format!("series ends at t = {t_end}, needs t >= 1")));
    }
    let rate = q * r * c1 / 2.0;
    let idx: Vec<usize> = (0..series.times.len()).filter(|&i| series.times[i] >= 1.0).collect();
    let env: Vec<f64> = idx
        .iter()
        .map(|&i| u0_qr_moment * (-rate * (series.times[i] - 1.0)).exp() + 1.0)
        .collect();
    let lhs: Vec<f64> = idx.iter().map(|&i| series.m_c0_q[i]).collect();
    let se: Vec<f64> = idx.iter().map(|&i| series.se_c0_q[i]).collect();
    let ratio: Vec<f64> = lhs.iter().zip(&env).map(|(m, e)| m / e).collect();
    let c_hat = ratio.iter().copied().fold(0.0, f64::max);
    // second half of the horizon, split again into an early and a late part
    let t_half = (0.5 * t_end).max(1.0);
    let t_mid = 0.5 * (t_half + t_end);
    let mut first_hi = 0.0f64;
    let mut second_lo = 0.0f64;
    for (k, &i) in idx.iter().enumerate() {
        if series.times[i] < t_half {
            continue;
        }
        if series.times[i] < t_mid {
            first_hi = first_hi.max((lhs[k] + 2.0 * se[k]) / env[k]);
        } else {
            second_lo = second_lo.max((lhs[k] - 2.0 * se[k]) / env[k]);
        }
    }
    let expanding = second_lo > first_hi && first_hi > 0.0;
    let rhs: Vec<f64> = env.iter().map(|e| c_hat * e).collect();
    let mut rep = BoundReport::new(
        "dissipativity_C0",
        idx.iter().map(|&i| series.times[i]).collect(),
        lhs,
        rhs,
        se,
    )
    .constant("c_bar_1", rate)
    .constant("C_hat", c_hat);
    rep.qualifier = "finite envelope, non-expanding over the second half of the horizon".into();
    if !c_hat.is_finite() || expanding {
        rep.verdict = CheckVerdict::Fail;
    }
    Ok(rep)
}

/// Samples of a vector-valued process on the dyadic grid `kT2^{-depth}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPath {
    pub horizon: f64,
    pub dim: usize,
    /// Row-major `(2^depth + 1) × dim`.
    pub data: Vec<f64>,
}

impl DyadicPath {
    pub fn scalar(horizon: f64, samples: Vec<f64>) -> Self {
        Self {
            horizon,
            dim: 1,
            data: samples,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `sup_t ‖v_t‖` over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_at(&self, i: usize) -> f64 {
        self.row(i).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `sup_{s<t} ‖v_t − v_s‖ / |t − s|^η` over every pair of dyadic sample times,
/// with the max-norm on the state.
pub fn holder_seminorm(path: &DyadicPath, eta: f64) -> Result<f64> {
    let n = path.len();
    if n < 2 {
        return Err(invalid("path", "need at least two samples"));
    }
    let h = path.horizon / (n - 1) as f64;
    let mut best = 0.0f64;
    for lag in 1..n {
        let w = (lag as f64 * h).powf(-eta);
        let mut m = 0.0f64;
        for i in 0..n - lag {
            m = m.max(path.dist(i + lag, i));
        }
        best = best.max(m * w);
    }
    Ok(best)
}

/// `B = 4^q C T^ξ / (1 − 2^{−δ})^q`, `δ = (ξ − 1)/q − η`.
pub fn kolmogorov_bound(c: f64, q: f64, xi: f64, eta: f64, horizon: f64) -> Result<f64> {
    if !(q > 1.0 && xi > 1.0) {
        return Err(Error::Inadmissible(format!("need q, xi > 1, got q = {q}, xi = {xi}")));
    }
    let delta = (xi - 1.0) / q - eta;
    if !(eta > 0.0 && delta > 0.0) {
        return Err(Error::Inadmissible(format!("need 0 < eta < (xi-1)/q = {}", (xi - 1.0) / q)));
    }
    if !(c >= 0.0 && horizon > 0.0) {
        return Err(invalid("C/T", "need C >= 0 and T > 0"));
    }
    Ok(4f64.powf(q) * c * horizon.powf(xi) / (1.0 - 2f64.powf(-delta)).powf(q))
}

/// `E sup ‖v_t‖^q ≤ 2^{q−1}(C C_{q,ξ,ξ'} T^{ξ'} + M₀)` with `C_{q,ξ,ξ'} = 4^q/(1 − 2^{−δ'})^q`,
/// `δ' = (2ξ − 1 − ξ')/q`.
pub fn sup_moment_bound(c: f64, q: f64, xi: f64, xi_prime: f64, horizon: f64, m0: f64) -> Result<f64> {
    if !(xi < xi_prime && xi_prime < 2.0 * xi - 1.0) {
        return Err(Error::Inadmissible(format!("need xi < xi' < 2xi - 1, got xi' = {xi_prime}")));
    }
    let delta = (2.0 * xi - 1.0 - xi_prime) / q;
    let cq = 4f64.powf(q) / (1.0 - 2f64.powf(-delta)).powf(q);
    Ok(2f64.powf(q - 1.0) * (c * cq * horizon.powf(xi_prime) + m0))
}

/// Compares the empirical `E K^q` with `B`, and `E sup‖v_t‖^q` with the sup bound
/// at `ξ' = (3ξ − 1)/2` (midpoint of the admissible range).
pub fn check_kolmogorov(paths: &[DyadicPath], c: f64, q: f64, xi: f64, eta: f64, horizon: f64) -> Result<BoundReport> {
    if paths.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let bound = kolmogorov_bound(c, q, xi, eta, horizon)?;
    let ks: Vec<f64> = paths
        .par_iter()
        .map(|p| holder_seminorm(p, eta).map(|k| k.powf(q)))
        .collect::<Result<_>>()?;
    let (ek, se_k) = mean_se(ks.iter().copied());
    let sups: Vec<f64> = paths.iter().map(|p| p.sup_norm().powf(q)).collect();
    let (es, se_s) = mean_se(sups.iter().copied());
    let len = paths[0].len();
    let m0 = (0..len)
        .map(|i| paths.iter().map(|p| p.norm_at(i).powf(q)).sum::<f64>() / paths.len() as f64)
        .fold(0.0, f64::max);
    let xi_prime = 0.5 * (3.0 * xi - 1.0);
    let sup_bound = sup_moment_bound(c, q, xi, xi_prime, horizon, m0)?;
    let mut rep = BoundReport::new(
        "kolmogorov",
        vec![horizon, horizon],
        vec![ek, es],
        vec![bound, sup_bound],
        vec![se_k, se_s],
    )
    .constant("B", bound)
    .constant("E_K_q", ek)
    .constant("margin_ratio", if ek > 0.0 { bound / ek } else { f64::INFINITY })
    .constant("M0", m0)
    .constant("xi_prime", xi_prime);
    rep.labels = vec!["E K^q <= B".into(), "E sup |v|^q <= corollary bound".into()];
    Ok(rep)
}

/// Scalar Brownian motion sampled at depth `depth` on `[0, T]`.
pub fn brownian_dyadic_path(depth: u32, horizon: f64, rng: &mut RngStream) -> DyadicPath {
    let n = 1usize << depth;
    let h = horizon / n as f64;
    let z = rng.normals(n);
    let mut v = Vec::with_capacity(n + 1);
    v.push(0.0);
    let mut acc = 0.0;
    for x in z {
        acc += h.sqrt() * x;
        v.push(acc);
    }
    DyadicPath::scalar(horizon, v)
}

/// Envelope fit `E‖A^{1/2}u(t)‖^q ≤ Ĉ(t^κ + 1)` over `κ ∈ (0, min(κ_max, q − 1))`,
/// choosing the `κ` whose envelope has the least total height over the record times.
pub fn regularity_probe(series: &MomentSeries, kappa_max: f64) -> Result<BoundReport> {
    if series.m_h1_q.is_empty() {
        return Err(invalid("series", "no A^{1/2} moments recorded"));
    }
    let upper = kappa_max.min(series.q - 1.0);
    if !(upper > 0.0) {
        return Err(invalid("kappa_max", "must be positive"));
    }
    let grid = 200;
    let mut best: Option<(f64, f64, f64)> = None; // (score, κ, Ĉ)
    for i in 1..grid {
        let kappa = upper * i as f64 / grid as f64;
        let env: Vec<f64> = series.times.iter().map(|t| t.powf(kappa) + 1.0).collect();
        let c_hat = series
            .m_h1_q
            .iter()
            .zip(&env)
            .map(|(m, e)| m / e)
            .fold(0.0, f64::max);
        let score: f64 = env.iter().map(|e| c_hat * e).sum();
        if best.is_none_or(|b| score < b.0) {
            best = Some((score, kappa, c_hat));
        }
    }
    let (_, kappa, c_hat) = best.unwrap();
    let rhs: Vec<f64> = series.times.iter().map(|t| c_hat * (t.powf(kappa) + 1.0)).collect();
    let mut rep = BoundReport::new(
        "regularity_A_half",
        series.times.clone(),
        series.m_h1_q.clone(),
        rhs,
        series.se_h1_q.clone(),
    )
    .constant("C_hat", c_hat)
    .constant("kappa_hat", kappa);
    rep.qualifier = "finite envelope with kappa_hat < q - 1".into();
    if !(c_hat.is_finite() && kappa < series.q - 1.0) {
        rep.verdict = CheckVerdict::Fail;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{run_ensemble, Scheme, StepperConfig};
    use crate::model::{certify_h2, H2Options, PolyModel};
    use crate::noise::{NoiseFamily, NoiseSpec};
    use approx::assert_abs_diff_eq;

    fn toy_series(values: Vec<f64>, times: Vec<f64>) -> MomentSeries {
        let n = times.len();
        MomentSeries {
            times,
            q: 8.0,
            m_c0_q: values.clone(),
            se_c0_q: vec![0.0; n],
            rhos: vec![8.0],
            m_lrho_rho: vec![values.clone()],
            se_lrho_rho: vec![vec![0.0; n]],
            m_h1_q: values,
            se_h1_q: vec![0.0; n],
            paths: 1,
        }
    }

    #[test]
    fn energy_constants_examples() {
        let (c1t, c2t) = energy_constants(1.0, 0.25, 8.0, 1.0);
        assert_eq!(c1t, 4.0);
        let want = 2.0 * 1.5f64.powf(0.75) / 256.0;
        assert_abs_diff_eq!(c2t, want, epsilon = 1e-15);
        assert_abs_diff_eq!(c2t, 0.0105891, epsilon = 1e-7);
    }

    #[test]
    fn zero_ensemble_moments() {
        let b = SpectralBasis::new(1.0, 1.0, 8, 12).unwrap();
        let m = PolyModel::new(vec![0.0, 0.0, -1.0], vec![]).unwrap();
        let spec = NoiseSpec::new(NoiseFamily::Power { c: 0.1, s: 2.0 }, &b).unwrap();
        let cfg = StepperConfig::new(Scheme::TamedExplicit, 1e-2, 1.0).unwrap().with_record_every(10);
        let ens = run_ensemble(&cfg, &b, &m, &spec, &b.zero_field(), 0, 4).unwrap();
        let s = estimate_moments(&b, &ens, 8.0, &[8.0, 24.0]).unwrap();
        assert!(s.m_c0_q.iter().chain(&s.m_h1_q).all(|&x| x == 0.0));
        assert!(s.m_lrho_rho.iter().flatten().all(|&x| x == 0.0));
        let cert = certify_h2(&m, 8.0, spec.theta, H2Options::default()).unwrap();
        let rep = check_energy_inequality(&s, &cert, 8.0, 0.0, 1.0).unwrap();
        assert!(rep.passed());
        let d = check_dissipativity(&s, &cert, 8.0, 3.0, 0.0).unwrap();
        assert!(d.passed());
        assert_eq!(d.constants["C_hat"], 0.0);
        let reg = regularity_probe(&s, 7.0).unwrap();
        assert!(reg.passed());
        assert_eq!(reg.constants["C_hat"], 0.0);
        assert!(estimate_moments(&b, &[], 8.0, &[8.0]).is_err());
        assert!(matches!(
            check_energy_inequality(&s, &cert, 12.0, 0.0, 1.0),
            Err(Error::MissingMoment(_))
        ));
    }

    #[test]
    fn deterministic_ensemble_has_zero_stderr() {
        let b = SpectralBasis::new(1.0, 1.0, 8, 12).unwrap();
        let m = PolyModel::allen_cahn(0.0);
        let spec = NoiseSpec::new(NoiseFamily::Power { c: 0.1, s: 2.0 }, &b).unwrap();
        let cfg = StepperConfig::new(Scheme::ExponentialEuler, 1e-2, 0.5).unwrap().with_record_every(5);
        let u0 = b.mode_field(1, 1.0).unwrap();
        let ens = run_ensemble(&cfg, &b, &m, &spec, &u0, 0, 3).unwrap();
        let s = estimate_moments(&b, &ens, 8.0, &[8.0]).unwrap();
        assert!(s.se_c0_q.iter().all(|&x| x == 0.0));
        for (i, st) in ens[0].states.iter().enumerate() {
            assert_abs_diff_eq!(s.m_c0_q[i], b.sup_norm(st).powf(8.0), epsilon = 1e-12);
        }
        // heat flow from a smooth state: A^{1/2} moments fall, regularity probe passes
        assert!(s.m_h1_q.windows(2).all(|w| w[1] <= w[0]));
        assert!(regularity_probe(&s, 7.0).unwrap().passed());
    }

    #[test]
    fn dissipativity_rate_and_horizon() {
        let mut m = PolyModel::allen_cahn(0.0);
        m.r = 3;
        let cert = certify_h2(&m, 8.0, 0.0, H2Options::default()).unwrap();
        let s = toy_series(vec![1.0, 0.5, 0.2, 0.1], vec![0.0, 1.0, 2.0, 3.0]);
        let rep = check_dissipativity(&s, &cert, 8.0, 3.0, 10.0).unwrap();
        assert_eq!(rep.constants["c_bar_1"], 12.0);
        assert!(rep.passed());
        let short = toy_series(vec![1.0, 0.5], vec![0.0, 0.5]);
        assert!(matches!(check_dissipativity(&short, &cert, 8.0, 3.0, 1.0), Err(Error::Horizon(_))));
        let growing = toy_series(vec![0.0, 0.1, 0.2, 5.0, 9.0], vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(!check_dissipativity(&growing, &cert, 8.0, 3.0, 1.0).unwrap().passed());
    }

    #[test]
    fn linear_path_seminorm() {
        let n = 1usize << 8;
        let v: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let k = holder_seminorm(&DyadicPath::scalar(1.0, v), 0.125).unwrap();
        assert_abs_diff_eq!(k, 1.0, epsilon = 1e-12);
        let k0 = holder_seminorm(&DyadicPath::scalar(1.0, vec![3.0; 9]), 0.125).unwrap();
        assert_eq!(k0, 0.0);
        assert!(holder_seminorm(&DyadicPath::scalar(1.0, vec![1.0]), 0.1).is_err());
    }

    #[test]
    fn kolmogorov_bound_examples() {
        let b = kolmogorov_bound(3.0, 4.0, 2.0, 0.125, 1.0).unwrap();
        let two = 2f64.powf(-0.125);
        assert_abs_diff_eq!(two, 0.917004, epsilon = 1e-6);
        assert_abs_diff_eq!(b, 768.0 / (1.0 - two).powi(4), epsilon = 1e-6);
        assert!(kolmogorov_bound(3.0, 4.0, 2.0, 0.125, 1e-3).unwrap() < 1e-6 * b * 1.01);
        let near = kolmogorov_bound(3.0, 4.0, 2.0, 0.25 - 1e-6, 1.0).unwrap();
        assert!(near > 1e20);
        assert!(kolmogorov_bound(3.0, 4.0, 2.0, 0.25, 1.0).is_err());
    }

    #[test]
    fn kolmogorov_zero_constant_fails_on_brownian() {
        let paths: Vec<DyadicPath> = (0..20)
            .map(|i| brownian_dyadic_path(6, 1.0, &mut RngStream::new(3, i)))
            .collect();
        let rep = check_kolmogorov(&paths, 0.0, 4.0, 2.0, 0.125, 1.0).unwrap();
        assert!(!rep.passed());
        let zeros = vec![DyadicPath::scalar(1.0, vec![0.0; 65]); 3];
        let rep = check_kolmogorov(&zeros, 3.0, 4.0, 2.0, 0.125, 1.0).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.lhs[0], 0.0);
    }

    #[test]
    fn csv_layout() {
        let s = toy_series(vec![1.0, 2.0], vec![0.0, 0.5]);
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,norm_id,rho,estimate,stderr");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1], "0,c0,8,1,0");
    }
}
