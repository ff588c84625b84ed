//! Trace-class Q-Wiener noise `W(t,x) = Σ √μ_j e_j(x) B_j(t)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{Field, SpectralBasis};
use crate::error::{invalid, Error, Result};

/// Default `δ` for the weighted trace `Θ' = Σ λ_j^δ μ_j ‖e_j‖²` of an untruncated spec.
pub const DEFAULT_DELTA: f64 = 0.5;

/// Words of keystream reserved per step; bounds the modes drawable per increment.
const STEP_WORD_SHIFT: u32 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NoiseFamily {
    /// `μ_j = c · j^{-s}`
    Power { c: f64, s: f64 },
    /// Explicit eigenvalues; missing entries beyond the list are zero.
    List { values: Vec<f64> },
}

impl NoiseFamily {
    fn mu(&self, j: usize) -> f64 {
        match self {
            NoiseFamily::Power { c, s } => c * (j as f64).powf(-s),
            NoiseFamily::List { values } => values.get(j - 1).copied().unwrap_or(0.0),
        }
    }

    /// `Σ_{j>n} μ_j`, infinite for power laws with `s ≤ 1`.
    fn tail_sum(&self, n: usize) -> f64 {
        match self {
            NoiseFamily::Power { c, s } => {
                if *c == 0.0 {
                    return 0.0;
                }
                if *s <= 1.0 {
                    return f64::INFINITY;
                }
                let explicit = 100_000usize;
                let partial: f64 = (n + 1..=n + explicit).rev().map(|j| (j as f64).powf(-s)).sum();
                let x = (n + explicit) as f64 + 0.5;
                c * (partial + x.powf(1.0 - s) / (s - 1.0))
            }
            NoiseFamily::List { values } => values.iter().skip(n).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// Effective eigenvalues (after truncation, if any).
    pub mu: Vec<f64>,
    /// Eigenvalues of the untruncated family, `j ≤ N`.
    pub base_mu: Vec<f64>,
    /// `Θ = Σ μ_j ‖e_j‖²_{C0}` over the effective eigenvalues.
    pub theta: f64,
    /// `Θ' = Σ λ_j^δ μ_j ‖e_j‖²_{C0}`.
    pub theta_delta: f64,
    pub delta: f64,
    pub truncation_m: Option<u32>,
    /// `Σ_{j>N} μ_j ‖e_j‖²_{C0}` of the untruncated family.
    pub tail_trace: f64,
}

fn trace(mu: &[f64], e2: f64) -> f64 {
    mu.iter().sum::<f64>() * e2
}

fn weighted_trace(mu: &[f64], lambda: &[f64], delta: f64, e2: f64) -> f64 {
    mu.iter()
        .zip(lambda)
        .map(|(m, l)| l.powf(delta) * m)
        .sum::<f64>()
        * e2
}

/// `μ_jm`: unchanged where `λ_j ≤ 1`, damped by `λ_j^{-1/m}` otherwise.
pub fn truncated_mu(mu: f64, lambda: f64, m: u32) -> f64 {
    if lambda <= 1.0 {
        mu
    } else {
        lambda.powf(-1.0 / m as f64) * mu
    }
}

impl NoiseSpec {
    pub fn new(family: NoiseFamily, b: &SpectralBasis) -> Result<Self> {
        let base_mu: Vec<f64> = (1..=b.modes()).map(|j| family.mu(j)).collect();
        for (i, &m) in base_mu.iter().enumerate() {
            if !(m >= 0.0) {
                return Err(Error::NegativeEigenvalue {
                    index: i + 1,
                    value: m,
                });
            }
        }
        if let NoiseFamily::List { values } = &family {
            if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                return Err(Error::NegativeEigenvalue { index: i + 1, value: v });
            }
        }
        let e2 = b.supnorm_e().powi(2);
        let tail_trace = family.tail_sum(b.modes()) * e2;
        Ok(Self {
            theta: trace(&base_mu, e2),
            theta_delta: weighted_trace(&base_mu, b.lambda(), DEFAULT_DELTA, e2),
            delta: DEFAULT_DELTA,
            mu: base_mu.clone(),
            base_mu,
            family,
            truncation_m: None,
            tail_trace,
        })
    }

    /// Applies the schedule `μ_jm` to the untruncated eigenvalues, setting `δ = 1/m`.
    pub fn truncate(&self, b: &SpectralBasis, m: u32) -> Result<Self> {
        if m < 1 {
            return Err(invalid("m", "truncation index must be at least 1"));
        }
        let mu: Vec<f64> = self
            .base_mu
            .iter()
            .zip(b.lambda())
            .map(|(&mu, &l)| truncated_mu(mu, l, m))
            .collect();
        let e2 = b.supnorm_e().powi(2);
        let delta = 1.0 / m as f64;
        Ok(Self {
            theta: trace(&mu, e2),
            theta_delta: weighted_trace(&mu, b.lambda(), delta, e2),
            delta,
            mu,
            truncation_m: Some(m),
            ..self.clone()
        })
    }

    /// Multiplies every eigenvalue by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return Err(invalid("factor", "noise scale must be non-negative"));
        }
        let s = |v: &[f64]| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        Ok(Self {
            mu: s(&self.mu),
            base_mu: s(&self.base_mu),
            theta: self.theta * factor,
            theta_delta: self.theta_delta * factor,
            tail_trace: self.tail_trace * factor,
            ..self.clone()
        })
    }

    pub fn is_zero(&self) -> bool {
        self.mu.iter().all(|&m| m == 0.0)
    }

    /// `Θ_m`, the trace after the `m`-th truncation.
    pub fn theta_m(&self, b: &SpectralBasis, m: u32) -> Result<f64> {
        Ok(self.truncate(b, m)?.theta)
    }

    /// `Θ_mn = Σ |μ_jm − μ_jn| ‖e_j‖²`.
    pub fn theta_mn(&self, b: &SpectralBasis, m: u32, n: u32) -> Result<f64> {
        if m < 1 || n < 1 {
            return Err(invalid("m, n", "truncation indices must be at least 1"));
        }
        let e2 = b.supnorm_e().powi(2);
        Ok(self
            .base_mu
            .iter()
            .zip(b.lambda())
            .map(|(&mu, &l)| (truncated_mu(mu, l, m) - truncated_mu(mu, l, n)).abs())
            .sum::<f64>()
            * e2)
    }

    /// Draws `ΔW` over a step of length `dt`, advancing the stream by one step.
    pub fn sample_increment(&self, b: &SpectralBasis, dt: f64, rng: &mut RngStream) -> Result<Field> {
        if !(dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let mut coeffs = vec![0.0; self.mu.len()];
        self.sample_coeffs_into(dt, rng, &mut coeffs);
        b.field_from_coeffs(coeffs)
    }

    pub(crate) fn sample_coeffs_into(&self, dt: f64, rng: &mut RngStream, out: &mut [f64]) {
        rng.fill_normals(out);
        for (o, &m) in out.iter_mut().zip(&self.mu) {
            *o *= (m * dt).sqrt();
        }
    }
}

/// Counter-addressed normal stream keyed by `(master_seed, path_index, step_counter)`.
///
/// Each step reads from its own keystream window, so a step can be replayed
/// from the triple alone, independent of how many draws earlier steps made.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    path_index: u64,
    step_counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self::at_step(master_seed, path_index, 0)
    }

    pub fn at_step(master_seed: u64, path_index: u64, step_counter: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(path_index);
        Self {
            master_seed,
            path_index,
            step_counter,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn step_counter(&self) -> u64 {
        self.step_counter
    }

    /// Fills `out` with standard normals for the current step and advances the counter.
    pub fn fill_normals(&mut self, out: &mut [f64]) {
        assert!(out.len() < 1 << (STEP_WORD_SHIFT - 2), "too many draws per step");
        self.rng
            .set_word_pos((self.step_counter as u128) << STEP_WORD_SHIFT);
        for o in out.iter_mut() {
            *o = StandardNormal.sample(&mut self.rng);
        }
        self.step_counter += 1;
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_normals(&mut v);
        v
    }
}
