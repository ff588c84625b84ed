//! Time stepping of `du = (Au + f(u))dt + σ(u)dW`, stopped paths, and the
//! Picard iteration of the mild formulation.
//!
//! Every scheme is a diagonal update in coefficient space
//!
//! ```text
//! û⁺ = P ⊙ û + D ⊙ f̂(u) + E ⊙ [σ(u)ΔW]^
//! ```
//!
//! with nonlinear terms evaluated pointwise on the grid (σ at the left point),
//! so a path unrolls to the discrete convolution
//! `û_i = P^i û_0 + Σ_{j<i} P^{i-1-j}(D f̂_j + E n̂_j)` that [`picard_solve`]
//! iterates on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::basis::{sup_norm_values, Field, SpectralBasis};
use crate::error::{invalid, Error, Result};
use crate::model::PolyModel;
use crate::noise::{NoiseSpec, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SemiImplicit,
    ExponentialEuler,
    TamedExplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub dt: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default)]
    pub stop_radius_n: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_record_every() -> usize {
    1
}

impl StepperConfig {
    pub fn new(scheme: Scheme, dt: f64, horizon: f64) -> Result<Self> {
        let cfg = Self {
            scheme,
            dt,
            horizon,
            stop_radius_n: None,
            record_every: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stop_radius(mut self, n: f64) -> Self {
        self.stop_radius_n = if n.is_finite() { Some(n) } else { None };
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) {
            return Err(invalid("T", format!("horizon {} shorter than dt {}", self.horizon, self.dt)));
        }
        if self.record_every < 1 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if let Some(n) = self.stop_radius_n {
            if !(n > 0.0) {
                return Err(invalid("stop_radius_n", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Per-mode multipliers `(P, D, E)` of a scheme.
#[derive(Debug, Clone)]
pub struct Multipliers {
    pub propagate: Vec<f64>,
    pub drift: Vec<f64>,
    pub noise: Vec<f64>,
}

impl Multipliers {
    pub fn new(scheme: Scheme, lambda: &[f64], dt: f64) -> Self {
        Self::with_linear(scheme, lambda, 0.0, dt)
    }

    /// Multipliers with a linear drift part `lin·u` moved into the operator.
    /// Only the exponential scheme uses it: with `ℓ = λ − lin` it propagates by
    /// `e^{−ℓdt}`, integrates the rest of the drift exactly in time and weights
    /// the noise by `√((1 − e^{−2ℓdt})/(2ℓdt))`, the standard deviation ratio of
    /// the exact stochastic convolution over one step.
    pub fn with_linear(scheme: Scheme, lambda: &[f64], lin: f64, dt: f64) -> Self {
        let mut m = Self {
            propagate: Vec::with_capacity(lambda.len()),
            drift: Vec::with_capacity(lambda.len()),
            noise: Vec::with_capacity(lambda.len()),
        };
        for &l in lambda {
            let (p, d, e) = match scheme {
                Scheme::SemiImplicit => {
                    let p = 1.0 / (1.0 + dt * l);
                    (p, dt * p, p)
                }
                Scheme::ExponentialEuler => {
                    let l = l - lin;
                    if l == 0.0 {
                        (1.0, dt, 1.0)
                    } else {
                        // expm1 avoids cancellation for small ℓdt
                        let d = -(-l * dt).exp_m1() / l;
                        let e = (-(-2.0 * l * dt).exp_m1() / (2.0 * l * dt)).sqrt();
                        ((-l * dt).exp(), d, e)
                    }
                }
                Scheme::TamedExplicit => ((-l * dt).exp(), dt, 1.0),
            };
            m.propagate.push(p);
            m.drift.push(d);
            m.noise.push(e);
        }
        m
    }
}

/// Reusable buffers for stepping one path.
struct Workspace<'a> {
    basis: &'a SpectralBasis,
    model: &'a PolyModel,
    scheme: Scheme,
    dt: f64,
    mult: Multipliers,
    /// Linear drift coefficient carried by `mult` instead of `f_hat`.
    lin: f64,
    f_grid: Vec<f64>,
    f_hat: Vec<f64>,
    dw_grid: Vec<f64>,
    n_hat: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn new(basis: &'a SpectralBasis, model: &'a PolyModel, scheme: Scheme, dt: f64) -> Self {
        let (n, g) = (basis.modes(), basis.grid_size());
        // a cutoff makes the linear term state dependent, so it stays explicit
        let lin = match (scheme, model.cutoff_n, model.f_coeffs.first()) {
            (Scheme::ExponentialEuler, None, Some(&b1)) => b1,
            _ => 0.0,
        };
        Self {
            basis,
            model,
            scheme,
            dt,
            mult: Multipliers::with_linear(scheme, basis.lambda(), lin, dt),
            lin,
            f_grid: vec![0.0; g],
            f_hat: vec![0.0; n],
            dw_grid: vec![0.0; g],
            n_hat: vec![0.0; n],
        }
    }

    /// Fills `f_hat` and `n_hat` from the grid state and the noise coefficients `dw`.
    fn nonlinear_terms(&mut self, values: &[f64], dw: Option<&[f64]>) {
        let m = self.model;
        let w = m.cutoff_weight(sup_norm_values(values));
        if m.f_coeffs.is_empty() || w == 0.0 {
            self.f_hat.fill(0.0);
        } else {
            let tamed = self.scheme == Scheme::TamedExplicit;
            let dt = self.dt;
            let lin = self.lin;
            for (o, &u) in self.f_grid.iter_mut().zip(values) {
                let f = w * m.f(u);
                *o = if tamed { f / (1.0 + dt * f.abs()) } else { f - lin * u };
            }
            self.basis.to_spectral_into(&self.f_grid, &mut self.f_hat);
        }
        match dw {
            Some(dw) if !m.sigma_is_zero() && w != 0.0 => {
                if m.sigma_is_constant() {
                    let s = w * m.sigma_coeffs[0];
                    for (o, &d) in self.n_hat.iter_mut().zip(dw) {
                        *o = s * d;
                    }
                } else {
                    self.basis.to_grid_into(dw, &mut self.dw_grid);
                    for (d, &u) in self.dw_grid.iter_mut().zip(values) {
                        *d *= w * m.sigma(u);
                    }
                    self.basis.to_spectral_into(&self.dw_grid, &mut self.n_hat);
                }
            }
            _ => self.n_hat.fill(0.0),
        }
    }

    /// One step in place. Returns `false` if the new state is not finite.
    fn advance(&mut self, coeffs: &mut [f64], values: &mut [f64], dw: Option<&[f64]>) -> bool {
        self.nonlinear_terms(values, dw);
        let mut finite = true;
        for j in 0..coeffs.len() {
            let c = self.mult.propagate[j] * coeffs[j]
                + self.mult.drift[j] * self.f_hat[j]
                + self.mult.noise[j] * self.n_hat[j];
            finite &= c.is_finite();
            coeffs[j] = c;
        }
        self.basis.to_grid_into(coeffs, values);
        finite && values.iter().all(|v| v.is_finite())
    }
}

/// One step of `cfg.scheme` from `u`, drawing the increment from `rng`.
///
/// Overflow is not an error: the returned field is then non-finite.
pub fn step(
    cfg: &StepperConfig,
    b: &SpectralBasis,
    m: &PolyModel,
    spec: &NoiseSpec,
    u: &Field,
    rng: &mut RngStream,
) -> Result<Field> {
    cfg.validate()?;
    if u.basis_id() != b.id() {
        return Err(Error::BasisMismatch);
    }
    let mut ws = Workspace::new(b, m, cfg.scheme, cfg.dt);
    let mut dw = vec![0.0; b.modes()];
    spec.sample_coeffs_into(cfg.dt, rng, &mut dw);
    let (mut c, mut v) = u.clone().into_parts();
    ws.advance(&mut c, &mut v, Some(&dw));
    Ok(Field::from_parts(c, v, b.id()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// Discrete first time with `‖u‖_{C0} ≥ n`.
    pub tau_n_hit: Option<f64>,
    /// `‖u(τ_n)‖_{C0} − n`, the overshoot of the discrete stopping time.
    pub tau_overshoot: Option<f64>,
    pub sup_history: Vec<f64>,
    pub blown_up: bool,
}

impl PathResult {
    pub fn final_state(&self) -> &Field {
        self.states.last().expect("at least the initial state is recorded")
    }
}

/// Pre-drawn noise coefficients, one vector per step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenNoise {
    pub dt: f64,
    pub increments: Vec<Vec<f64>>,
}

impl FrozenNoise {
    /// Draws `steps` increments exactly as [`run_path`] would from the same stream.
    pub fn sample(spec: &NoiseSpec, dt: f64, steps: usize, rng: &mut RngStream) -> Self {
        let increments = (0..steps)
            .map(|_| {
                let mut v = vec![0.0; spec.mu.len()];
                spec.sample_coeffs_into(dt, rng, &mut v);
                v
            })
            .collect();
        Self { dt, increments }
    }

    pub fn steps(&self) -> usize {
        self.increments.len()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.increments.len() as f64
    }
}

fn run_with(
    cfg: &StepperConfig,
    b: &SpectralBasis,
    m: &PolyModel,
    u0: &Field,
    mut draw: impl FnMut(usize, &mut [f64]) -> bool,
) -> Result<PathResult> {
    cfg.validate()?;
    if u0.basis_id() != b.id() {
        return Err(Error::BasisMismatch);
    }
    let steps = cfg.steps();
    let capacity = steps / cfg.record_every + 2;
    let mut out = PathResult {
        times: Vec::with_capacity(capacity),
        states: Vec::with_capacity(capacity),
        tau_n_hit: None,
        tau_overshoot: None,
        sup_history: Vec::with_capacity(capacity),
        blown_up: !u0.is_finite(),
    };
    let (mut coeffs, mut values) = u0.clone().into_parts();
    let mut sup = sup_norm_values(&values);
    let mut frozen = out.blown_up;
    if let Some(n) = cfg.stop_radius_n {
        if sup >= n {
            out.tau_n_hit = Some(0.0);
            out.tau_overshoot = Some(sup - n);
            frozen = true;
        }
    }
    out.times.push(0.0);
    out.states.push(u0.clone());
    out.sup_history.push(sup);

    let mut ws = Workspace::new(b, m, cfg.scheme, cfg.dt);
    let mut dw = vec![0.0; b.modes()];
    let (mut next_c, mut next_v) = (coeffs.clone(), values.clone());
    for k in 1..=steps {
        if !frozen {
            let has_noise = draw(k - 1, &mut dw);
            next_c.copy_from_slice(&coeffs);
            next_v.copy_from_slice(&values);
            if ws.advance(&mut next_c, &mut next_v, has_noise.then_some(&dw[..])) {
                std::mem::swap(&mut coeffs, &mut next_c);
                std::mem::swap(&mut values, &mut next_v);
                sup = sup_norm_values(&values);
                if let Some(n) = cfg.stop_radius_n {
                    if sup >= n {
                        out.tau_n_hit = Some(k as f64 * cfg.dt);
                        out.tau_overshoot = Some(sup - n);
                        frozen = true;
                    }
                }
            } else {
                out.blown_up = true;
                frozen = true;
            }
        }
        if k % cfg.record_every == 0 || k == steps {
            out.times.push(k as f64 * cfg.dt);
            out.states
                .push(Field::from_parts(coeffs.clone(), values.clone(), b.id()));
            out.sup_history.push(sup);
        }
    }
    Ok(out)
}

/// Integrates one path to `T`. With a stop radius the state is frozen from the
/// first step whose sup norm reaches `n`, realizing `u(t ∧ τ_n)`.
pub fn run_path(
    cfg: &StepperConfig,
    b: &SpectralBasis,
    m: &PolyModel,
    spec: &NoiseSpec,
    u0: &Field,
    rng: &mut RngStream,
) -> Result<PathResult> {
    let quiet = spec.is_zero() || m.sigma_is_zero();
    run_with(cfg, b, m, u0, |_, dw| {
        if quiet {
            rng.fill_normals(&mut []);
            false
        } else {
            spec.sample_coeffs_into(cfg.dt, rng, dw);
            true
        }
    })
}

/// [`run_path`] driven by pre-drawn increments (`cfg.dt` must match).
pub fn run_path_frozen(
    cfg: &StepperConfig,
    b: &SpectralBasis,
    m: &PolyModel,
    u0: &Field,
    noise: &FrozenNoise,
) -> Result<PathResult> {
    if (noise.dt - cfg.dt).abs() > 1e-15 * cfg.dt || noise.steps() < cfg.steps() {
        return Err(invalid("noise", "frozen increments do not cover the stepper grid"));
    }
    run_with(cfg, b, m, u0, |k, dw| {
        dw.copy_from_slice(&noise.increments[k]);
        true
    })
}

/// Runs `paths` independent paths with streams `(master_seed, i)`, in parallel.
/// Results are ordered by path index.
pub fn run_ensemble(
    cfg: &StepperConfig,
    b: &SpectralBasis,
    m: &PolyModel,
    spec: &NoiseSpec,
    u0: &Field,
    master_seed: u64,
    paths: usize,
) -> Result<Vec<PathResult>> {
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(master_seed, i as u64);
            run_path(cfg, b, m, spec, u0, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    /// Fixed-point trajectory at `t_i = i·dt`, `i = 0..=K`.
    pub trajectory: Vec<Field>,
    /// `d_k = max_i ‖u^{(k+1)}(t_i) − u^{(k)}(t_i)‖_{C0}`.
    pub distances: Vec<f64>,
    /// `ρ_k = d_{k+1} / d_k`.
    pub contraction_factors: Vec<f64>,
    pub iterations: usize,
}

impl PicardOutcome {
    pub fn max_factor(&self) -> f64 {
        self.contraction_factors.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub scheme: Scheme,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::ExponentialEuler,
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Fixed-point iteration of the discrete mild map
/// `Φ(u)_i = P^i û_0 + Σ_{j<i} P^{i-1-j}(D f̂_n(u_j) + E [σ_n(u_j)ΔW_j]^)`
/// on the frozen noise path, starting from the free evolution `u_i = P^i u_0`.
pub fn picard_solve(
    b: &SpectralBasis,
    m: &PolyModel,
    u0: &Field,
    noise: &FrozenNoise,
    opts: PicardOptions,
) -> Result<PicardOutcome> {
    if u0.basis_id() != b.id() {
        return Err(Error::BasisMismatch);
    }
    if m.cutoff_n.is_none() {
        return Err(invalid("model", "picard iteration needs a cutoff radius"));
    }
    if !(opts.tol > 0.0) || opts.max_iter < 1 {
        return Err(invalid("tol/max_iter", "tolerance must be positive and max_iter at least 1"));
    }
    let steps = noise.steps();
    let mut ws = Workspace::new(b, m, opts.scheme, noise.dt);
    let (c0, v0) = u0.clone().into_parts();
    // start from the free linear evolution
    let mut current: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(steps + 1);
    current.push((c0.clone(), v0.clone()));
    for _ in 0..steps {
        let c: Vec<f64> = current
            .last()
            .unwrap()
            .0
            .iter()
            .zip(&ws.mult.propagate)
            .map(|(c, p)| c * p)
            .collect();
        let mut v = vec![0.0; b.grid_size()];
        b.to_grid_into(&c, &mut v);
        current.push((c, v));
    }
    let mut distances = Vec::new();
    let mut factors = Vec::new();
    let mut diff = vec![0.0; b.grid_size()];

    for iter in 1..=opts.max_iter {
        let mut next = Vec::with_capacity(steps + 1);
        next.push((c0.clone(), v0.clone()));
        let mut acc = c0.clone();
        for (j, dw) in noise.increments.iter().enumerate() {
            ws.nonlinear_terms(&current[j].1, Some(dw));
            for i in 0..acc.len() {
                acc[i] = ws.mult.propagate[i] * acc[i]
                    + ws.mult.drift[i] * ws.f_hat[i]
                    + ws.mult.noise[i] * ws.n_hat[i];
            }
            let mut vals = vec![0.0; b.grid_size()];
            b.to_grid_into(&acc, &mut vals);
            next.push((acc.clone(), vals));
        }
        let mut d = 0.0f64;
        for (a, c) in next.iter().zip(&current) {
            for ((x, y), z) in a.1.iter().zip(&c.1).zip(diff.iter_mut()) {
                *z = x - y;
            }
            d = d.max(sup_norm_values(&diff));
        }
        if !d.is_finite() {
            return Err(Error::NoConvergence {
                iterations: iter,
                distance: d,
            });
        }
        if let Some(&prev) = distances.last() {
            if prev > 0.0 {
                factors.push(d / prev);
            }
        }
        distances.push(d);
        current = next;
        if d < opts.tol {
            return Ok(PicardOutcome {
                trajectory: current
                    .into_iter()
                    .map(|(c, v)| Field::from_parts(c, v, b.id()))
                    .collect(),
                distances,
                contraction_factors: factors,
                iterations: iter,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        distance: *distances.last().unwrap_or(&f64::INFINITY),
    })
}

/// Inputs to [`contraction_budget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetParams {
    pub lip: f64,
    pub q: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub xi_prime: f64,
    pub theta: f64,
    pub lambda_gap: f64,
    /// Bound on the embedding constant of `D(A^α)` into `C0`.
    pub c_emb: f64,
    pub domain_size: f64,
    /// Largest `T0` returned; the dyadic search runs `horizon · 2^{-k}`.
    pub horizon: f64,
}

impl BudgetParams {
    pub fn new(lip: f64, q: f64, alpha: f64, gamma: f64, xi_prime: f64, theta: f64, lambda_gap: f64) -> Self {
        Self {
            lip,
            q,
            alpha,
            gamma,
            xi_prime,
            theta,
            lambda_gap,
            c_emb: 10.0,
            domain_size: 1.0,
            horizon: 1.0,
        }
    }

    pub fn check_admissible(&self) -> Result<()> {
        let d = 1.0;
        let (q, a, g, x) = (self.q, self.alpha, self.gamma, self.xi_prime);
        if !(q > d + 2.0) {
            return Err(Error::Inadmissible(format!("q = {q} must exceed d + 2")));
        }
        if !(a > 0.0 && a < 0.5 && g > 0.0 && g < 0.5) {
            return Err(Error::Inadmissible("alpha and gamma must lie in (0, 1/2)".into()));
        }
        if !(2.0 / q < 2.0 * g && 2.0 * g < 1.0 - 2.0 * a && 1.0 - 2.0 * a < 1.0 - d / q) {
            return Err(Error::Inadmissible(format!(
                "need 2/q < 2γ < 1−2α < 1−d/q, got {} < {} < {} < {}",
                2.0 / q,
                2.0 * g,
                1.0 - 2.0 * a,
                1.0 - d / q
            )));
        }
        if !(q * g < x && x < 2.0 * q * g - 1.0) {
            return Err(Error::Inadmissible(format!(
                "need qγ < ξ' < 2qγ − 1, got {} < {x} < {}",
                q * g,
                2.0 * q * g - 1.0
            )));
        }
        if !(self.lip >= 0.0 && self.theta >= 0.0 && self.lambda_gap > 0.0 && self.c_emb > 0.0) {
            return Err(Error::Inadmissible("Lip, Θ ≥ 0 and λ, C_emb > 0 required".into()));
        }
        if !(self.horizon > 0.0 && self.domain_size > 0.0) {
            return Err(Error::Inadmissible("horizon and domain size must be positive".into()));
        }
        Ok(())
    }

    /// Constant `C` in `‖Φu − Φv‖^q ≤ C(T^q + T^{(1−2α)q/2} + T^{ξ'})‖u − v‖^q`.
    ///
    /// Assembled from the Lipschitz drift piece `Lip^q` and the stochastic piece
    /// `C_emb^q 2^{q−1} max(C₁, C₂ C_{q,γ,ξ'})`, where
    /// `C₁ = C_BDG C_α^q |O| Θ^{q/2} Lip^q (1−2α)^{−q/2}`,
    /// `C₂ = 2^q C_BDG C_α^q |O| Θ^{q/2} Lip^q Γ(1−2α)^{q/2} (2λ)^{q(α−1/2)}` and
    /// `C_{q,γ,ξ'} = 4^q / (1 − 2^{−δ})^q`, `δ = (2qγ − 1 − ξ')/q`.
    /// `C_BDG = (q(q−1)/2)^{q/2}`, `C_α = (2α)^α e^{−α}` (discrete smoothing constant).
    pub fn assembled_constant(&self) -> f64 {
        let q = self.q;
        let a = self.alpha;
        let lip_q = self.lip.powf(q);
        let bdg = (q * (q - 1.0) / 2.0).powf(q / 2.0);
        let smoothing = ((2.0 * a).powf(a) * (-a).exp()).powf(q);
        let base = bdg * smoothing * self.domain_size * self.theta.powf(q / 2.0) * lip_q;
        let c1 = base * (1.0 - 2.0 * a).powf(-q / 2.0);
        let c2 = 2f64.powf(q)
            * base
            * gamma(1.0 - 2.0 * a).powf(q / 2.0)
            * (2.0 * self.lambda_gap).powf(q * (a - 0.5));
        let xi = q * self.gamma;
        let delta = (2.0 * xi - 1.0 - self.xi_prime) / q;
        let chaining = 4f64.powf(q) / (1.0 - 2f64.powf(-delta)).powf(q);
        let c3 = 2f64.powf(q - 1.0) * c1.max(c2 * chaining);
        let c4 = self.c_emb.powf(q) * c3;
        2f64.powf(q - 1.0) * lip_q.max(c4)
    }

    pub fn budget_function(&self, t0: f64) -> f64 {
        let q = self.q;
        self.assembled_constant()
            * (t0.powf(q) + t0.powf((1.0 - 2.0 * self.alpha) * q / 2.0) + t0.powf(self.xi_prime))
    }
}

/// Largest `T0 = horizon · 2^{-k}` with `C(T0^q + T0^{(1−2α)q/2} + T0^{ξ'}) ≤ 1/2`.
pub fn contraction_budget(p: &BudgetParams) -> Result<f64> {
    p.check_admissible()?;
    let mut t0 = p.horizon;
    for _ in 0..1100 {
        if p.budget_function(t0) <= 0.5 {
            return Ok(t0);
        }
        t0 *= 0.5;
    }
    Err(Error::Inadmissible("no dyadic T0 satisfies the contraction budget".into()))
}
