//! Polynomial drift and diffusion, smooth cutoffs, and hypothesis certificates.
//!
//! The drift is `f(u) = Σ_{j=1}^{β} b_j u|u|^{j-1}` and the diffusion `σ` is an
//! ordinary polynomial. On each half-line `f` is a polynomial, which is what
//! makes exact critical-point isolation possible for the coercivity check.

use serde::{Deserialize, Serialize};

use crate::basis::{sup_norm_values, Field, SpectralBasis};
use crate::error::{invalid, Result};
use crate::poly::{bisect, Poly};

/// Smallest value reported for a constant that must be strictly positive.
pub const POSITIVE_FLOOR: f64 = 1e-9;

/// Upper end of the `c₁` search when the leading behavior does not constrain it.
pub const DEFAULT_C1_CAP: f64 = 2.0;

const LEAD_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    /// `b_1..b_β`
    pub f_coeffs: Vec<f64>,
    /// `s_0..s_k` with `σ(u) = Σ s_i u^i`
    pub sigma_coeffs: Vec<f64>,
    pub beta: usize,
    pub gamma: usize,
    pub r: usize,
    pub cutoff_n: Option<f64>,
}

fn trim_trailing(mut v: Vec<f64>) -> Vec<f64> {
    while v.last() == Some(&0.0) {
        v.pop();
    }
    v
}

impl PolyModel {
    pub fn new(f_coeffs: Vec<f64>, sigma_coeffs: Vec<f64>) -> Result<Self> {
        if f_coeffs.iter().chain(&sigma_coeffs).any(|c| !c.is_finite()) {
            return Err(invalid("coefficients", "must be finite"));
        }
        let f_coeffs = trim_trailing(f_coeffs);
        let sigma_coeffs = trim_trailing(sigma_coeffs);
        let beta = f_coeffs.len();
        let gamma = sigma_coeffs.len().saturating_sub(1);
        Ok(Self {
            r: beta.max(gamma).max(1),
            f_coeffs,
            sigma_coeffs,
            beta,
            gamma,
            cutoff_n: None,
        })
    }

    /// `f(u) = u − u³`, `σ(u) = κu`.
    pub fn allen_cahn(kappa: f64) -> Self {
        Self::new(vec![1.0, 0.0, -1.0], vec![0.0, kappa]).expect("finite coefficients")
    }

    pub fn with_growth_exponent(mut self, r: usize) -> Result<Self> {
        if r < self.beta.max(self.gamma).max(1) {
            return Err(invalid("r", format!("growth exponent {r} below polynomial degrees")));
        }
        self.r = r;
        Ok(self)
    }

    pub fn with_cutoff(mut self, n: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(invalid("cutoff_n", format!("must be positive, got {n}")));
        }
        self.cutoff_n = Some(n);
        Ok(self)
    }

    pub fn without_cutoff(mut self) -> Self {
        self.cutoff_n = None;
        self
    }

    /// Example conditions: `b_β < 0`, `γ ≥ 1`, `β + 1 > 2γ`.
    pub fn satisfies_example_conditions(&self) -> bool {
        self.f_coeffs.last().is_some_and(|&b| b < 0.0)
            && self.gamma >= 1
            && self.beta + 1 > 2 * self.gamma
    }

    pub fn f(&self, u: f64) -> f64 {
        let a = u.abs();
        let mut pow = 1.0; // |u|^{j-1}
        let mut s = 0.0;
        for &b in &self.f_coeffs {
            s += b * pow;
            pow *= a;
        }
        u * s
    }

    pub fn f_prime(&self, u: f64) -> f64 {
        let a = u.abs();
        let mut pow = 1.0;
        let mut s = 0.0;
        for (j, &b) in self.f_coeffs.iter().enumerate() {
            s += b * (j + 1) as f64 * pow;
            pow *= a;
        }
        s
    }

    pub fn sigma(&self, u: f64) -> f64 {
        self.sigma_coeffs.iter().rev().fold(0.0, |acc, &a| acc * u + a)
    }

    pub fn sigma_prime(&self, u: f64) -> f64 {
        self.sigma_coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &a)| acc * u + i as f64 * a)
    }

    pub fn sigma_is_zero(&self) -> bool {
        self.sigma_coeffs.is_empty()
    }

    pub fn sigma_is_constant(&self) -> bool {
        self.sigma_coeffs.len() <= 1
    }

    /// `χ_n(‖u‖)` for the configured cutoff, `1` without one.
    pub fn cutoff_weight(&self, sup: f64) -> f64 {
        match self.cutoff_n {
            Some(n) => cutoff_chi(n, sup).unwrap_or(1.0),
            None => 1.0,
        }
    }

    /// Scalar truncated drift `χ_n(|u|) f(u)`.
    pub fn f_truncated(&self, u: f64) -> f64 {
        self.cutoff_weight(u.abs()) * self.f(u)
    }

    pub fn sigma_truncated(&self, u: f64) -> f64 {
        self.cutoff_weight(u.abs()) * self.sigma(u)
    }

    /// `f` on `u ≥ 0` (`sign = 1`) or `u ≤ 0` (`sign = -1`) as a polynomial.
    pub fn f_half_poly(&self, sign: f64) -> Poly {
        let mut c = vec![0.0; self.f_coeffs.len() + 1];
        for (j, &b) in self.f_coeffs.iter().enumerate() {
            // u|u|^{j} on u ≤ 0 equals (-1)^j u^{j+1}
            c[j + 1] = if sign < 0.0 && j % 2 == 1 { -b } else { b };
        }
        Poly::new(c)
    }

    pub fn sigma_poly(&self) -> Poly {
        Poly::new(self.sigma_coeffs.clone())
    }

    /// Pointwise `f` on grid values.
    pub fn eval_f_values(&self, values: &[f64]) -> Vec<f64> {
        let w = self.cutoff_weight(sup_norm_values(values));
        values.iter().map(|&u| w * self.f(u)).collect()
    }

    pub fn eval_sigma_values(&self, values: &[f64]) -> Vec<f64> {
        let w = self.cutoff_weight(sup_norm_values(values));
        values.iter().map(|&u| w * self.sigma(u)).collect()
    }

    /// `f(u)` (or `χ_n(‖u‖_{C0}) f(u)` with a cutoff) projected back onto the basis.
    pub fn eval_f(&self, b: &SpectralBasis, u: &Field) -> Result<Field> {
        b.field_from_values(&self.eval_f_values(u.values()))
    }

    pub fn eval_sigma(&self, b: &SpectralBasis, u: &Field) -> Result<Field> {
        b.field_from_values(&self.eval_sigma_values(u.values()))
    }

    /// Largest difference quotient of the scalar truncated drift and diffusion
    /// on a uniform grid over `[-3n, 3n]`.
    pub fn truncated_lipschitz(&self, points: usize) -> Option<f64> {
        let n = self.cutoff_n?;
        let h = 6.0 * n / (points - 1) as f64;
        let mut best = 0.0f64;
        let mut prev = (-3.0 * n, self.f_truncated(-3.0 * n), self.sigma_truncated(-3.0 * n));
        for i in 1..points {
            let u = -3.0 * n + i as f64 * h;
            let cur = (u, self.f_truncated(u), self.sigma_truncated(u));
            best = best.max(((cur.1 - prev.1).abs() + (cur.2 - prev.2).abs()) / h);
            prev = cur;
        }
        Some(best)
    }
}

fn bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth monotone cutoff: `1` on `[0, n]`, `0` on `[2n, ∞)`.
pub fn cutoff_chi(n: f64, s: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(invalid("n", format!("cutoff radius must be positive, got {n}")));
    }
    if s <= n {
        return Ok(1.0);
    }
    if s >= 2.0 * n {
        return Ok(0.0);
    }
    let x = (2.0 * n - s) / n;
    let (p, q) = (bump(x), bump(1.0 - x));
    Ok(p / (p + q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Verified,
    GridVerifiedOnly,
    Falsified,
    NotChecked,
}

impl Verdict {
    fn rank(self) -> u8 {
        match self {
            Verdict::Verified | Verdict::NotChecked => 0,
            Verdict::GridVerifiedOnly => 1,
            Verdict::Falsified => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateStatus {
    pub h2: Verdict,
    pub growth: Verdict,
    pub h3: Verdict,
}

impl CertificateStatus {
    /// Worst verdict across the checked hypotheses.
    pub fn overall(&self) -> Verdict {
        [self.h2, self.growth, self.h3]
            .into_iter()
            .filter(|v| *v != Verdict::NotChecked)
            .max_by_key(|v| v.rank())
            .unwrap_or(Verdict::NotChecked)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub constant: String,
    /// Infinite when the supremum is the limit at infinity.
    #[serde(with = "crate::serde_ext::vec")]
    pub point: Vec<f64>,
    #[serde(with = "crate::serde_ext::scalar")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCertificate {
    pub q: f64,
    pub r: usize,
    pub theta: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub witnesses: Vec<Witness>,
    pub status: CertificateStatus,
}

impl HypothesisCertificate {
    fn empty(q: f64, r: usize, theta: f64) -> Self {
        Self {
            q,
            r,
            theta,
            c1: None,
            c2: None,
            c3: None,
            c4: None,
            c5: None,
            witnesses: Vec::new(),
            status: CertificateStatus {
                h2: Verdict::NotChecked,
                growth: Verdict::NotChecked,
                h3: Verdict::NotChecked,
            },
        }
    }

    /// `(qr² − 1)Θ`, the noise weight in both coercivity inequalities.
    pub fn noise_weight(&self) -> f64 {
        noise_weight(self.q, self.r, self.theta)
    }

    /// Combines an (H2) and an (H3) certificate for the same `(q, r, Θ)`.
    pub fn merge(mut self, h3: HypothesisCertificate) -> Self {
        self.c4 = h3.c4;
        self.c5 = h3.c5;
        self.status.h3 = h3.status.h3;
        self.witnesses.extend(h3.witnesses);
        self
    }

    pub fn is_h2_verified(&self) -> bool {
        self.status.h2 == Verdict::Verified
    }
}

pub fn noise_weight(q: f64, r: usize, theta: f64) -> f64 {
    (q * (r * r) as f64 - 1.0) * theta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Options {
    pub c1_cap: f64,
    /// Fixes `c₁` instead of running the selection policy.
    pub c1: Option<f64>,
}

impl Default for H2Options {
    fn default() -> Self {
        Self {
            c1_cap: DEFAULT_C1_CAP,
            c1: None,
        }
    }
}

/// `g_{c₁}(u) = f(u)u + (qr²−1)Θσ(u)² + c₁u²` restricted to one half-line.
fn coercivity_half(m: &PolyModel, k: f64, c1: f64, sign: f64) -> Poly {
    let x = Poly::monomial(1, 1.0);
    let s = m.sigma_poly();
    x.mul(&m.f_half_poly(sign))
        .add(&s.mul(&s).scale(k))
        .add(&Poly::monomial(2, c1))
}

/// Whether `p` stays bounded above as `u → sign·∞`.
fn bounded_above(p: &Poly, sign: f64) -> bool {
    let t = p.trimmed(LEAD_TOL);
    if t.degree() == 0 {
        return true;
    }
    let dir = if sign < 0.0 && t.degree() % 2 == 1 { -1.0 } else { 1.0 };
    t.leading() * dir < 0.0
}

fn h2_feasible(m: &PolyModel, k: f64, c1: f64) -> bool {
    bounded_above(&coercivity_half(m, k, c1, 1.0), 1.0)
        && bounded_above(&coercivity_half(m, k, c1, -1.0), -1.0)
}

/// The coercivity function `g_{c₁}` evaluated directly.
pub fn coercivity_g(m: &PolyModel, q: f64, theta: f64, c1: f64, u: f64) -> f64 {
    let k = noise_weight(q, m.r, theta);
    let s = m.sigma(u);
    m.f(u) * u + k * s * s + c1 * u * u
}

/// Maximizer and maximum of `g_{c₁}` over ℝ via critical-point isolation.
fn coercivity_max(m: &PolyModel, k: f64, c1: f64) -> (f64, f64) {
    let g = |u: f64| {
        let s = m.sigma(u);
        m.f(u) * u + k * s * s + c1 * u * u
    };
    let mut best = (0.0, g(0.0));
    for sign in [1.0, -1.0] {
        let d = coercivity_half(m, k, c1, sign).trimmed(LEAD_TOL).derivative();
        if d.degree() == 0 {
            continue;
        }
        let r = d.cauchy_bound();
        let (lo, hi) = if sign > 0.0 { (0.0, r) } else { (-r, 0.0) };
        for u in d.real_roots_in(lo, hi, ROOT_TOL) {
            let v = g(u);
            if v > best.1 {
                best = (u, v);
            }
        }
    }
    best
}

/// Growth constant `c₃` with `|f| + |σ| ≤ c₃(|u|^r + 1)` and its witness.
fn growth_constant(m: &PolyModel) -> (f64, f64, bool) {
    let r = m.r as i32;
    let ratio = |u: f64| (m.f(u).abs() + m.sigma(u).abs()) / (u.abs().powi(r) + 1.0);
    let fpos = m.f_half_poly(1.0);
    let s = m.sigma_poly();
    let bounded = fpos.degree() <= m.r && s.degree() <= m.r;
    let scale = 1.0 + fpos.cauchy_bound().max(s.cauchy_bound());
    let radius = 20.0 * scale;
    let n = 40_001;
    let mut best = (0.0, ratio(0.0));
    for i in 0..n {
        let u = -radius + 2.0 * radius * i as f64 / (n - 1) as f64;
        let v = ratio(u);
        if v > best.1 {
            best = (u, v);
        }
    }
    // asymptotic limits at ±∞
    let coeff = |p: &Poly| p.coeffs().get(m.r).copied().unwrap_or(0.0).abs();
    let asym = coeff(&fpos) + coeff(&s);
    if asym > best.1 {
        best = (f64::INFINITY, asym);
    }
    (best.0, best.1, bounded)
}

/// Certifies the weak coercivity inequality
/// `f(u)u + (qr²−1)Θσ(u)² ≤ −c₁u² + c₂` and the growth bound.
///
/// `c₁` is half the largest feasible value in `(0, c1_cap]`; `c₂` is the exact
/// maximum of `g_{c₁}`, attained at the recorded witness.
pub fn certify_h2(m: &PolyModel, q: f64, theta: f64, opts: H2Options) -> Result<HypothesisCertificate> {
    if !(q > 6.0) {
        return Err(invalid("q", format!("moment exponent must exceed 2(d+2) = 6, got {q}")));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(invalid("theta", "trace must be finite and non-negative"));
    }
    let k = noise_weight(q, m.r, theta);
    let mut cert = HypothesisCertificate::empty(q, m.r, theta);

    let (wu, c3, bounded) = growth_constant(m);
    cert.c3 = Some(c3.max(POSITIVE_FLOOR));
    cert.status.growth = if bounded { Verdict::Verified } else { Verdict::Falsified };
    cert.witnesses.push(Witness {
        constant: "c3".into(),
        point: vec![wu],
        value: c3,
    });

    let c1 = match opts.c1 {
        Some(c1) => {
            if !(c1 > 0.0) {
                return Err(invalid("c1", "must be positive"));
            }
            h2_feasible(m, k, c1).then_some(c1)
        }
        None => select_c1(m, k, opts.c1_cap),
    };
    let Some(c1) = c1 else {
        cert.status.h2 = Verdict::Falsified;
        return Ok(cert);
    };
    let (u_star, g_max) = coercivity_max(m, k, c1);
    cert.c1 = Some(c1);
    cert.c2 = Some(g_max.max(POSITIVE_FLOOR));
    cert.witnesses.push(Witness {
        constant: "c2".into(),
        point: vec![u_star],
        value: g_max,
    });
    cert.status.h2 = Verdict::Verified;
    Ok(cert)
}

fn select_c1(m: &PolyModel, k: f64, cap: f64) -> Option<f64> {
    if h2_feasible(m, k, cap) {
        return Some(0.5 * cap);
    }
    if !h2_feasible(m, k, 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if h2_feasible(m, k, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo > 1e-12).then_some(0.5 * lo)
}

/// `[(f(u)−f(v))(u−v) + K(σ(u)−σ(v))²]/(u−v)²`, with the diagonal limit.
pub fn one_sided_quotient(m: &PolyModel, k: f64, u: f64, v: f64) -> f64 {
    let d = u - v;
    if d.abs() <= 1e-12 * (1.0 + u.abs()) {
        let sp = m.sigma_prime(u);
        return m.f_prime(u) + k * sp * sp;
    }
    let ds = m.sigma(u) - m.sigma(v);
    ((m.f(u) - m.f(v)) * d + k * ds * ds) / (d * d)
}

/// `(|f(u)−f(v)| + |σ(u)−σ(v)|)/((1 + |u|^{r−1} + |v|^{r−1})|u−v|)`.
pub fn poly_lipschitz_quotient(m: &PolyModel, u: f64, v: f64) -> f64 {
    let e = m.r as i32 - 1;
    let w = 1.0 + u.abs().powi(e) + v.abs().powi(e);
    let d = u - v;
    if d.abs() <= 1e-12 * (1.0 + u.abs()) {
        return (m.f_prime(u).abs() + m.sigma_prime(u).abs()) / w;
    }
    ((m.f(u) - m.f(v)).abs() + (m.sigma(u) - m.sigma(v)).abs()) / (w * d.abs())
}

/// `p(a·s)` as a polynomial in `s`.
fn dilate(p: &Poly, a: f64) -> Poly {
    let mut pow = 1.0;
    Poly::new(
        p.coeffs()
            .iter()
            .map(|&c| {
                let v = c * pow;
                pow *= a;
                v
            })
            .collect(),
    )
}

/// Whether the one-sided quotient stays bounded along the ray `(a s, b s)`, `s → ∞`.
fn ray_bounded(m: &PolyModel, k: f64, a: f64, b: f64) -> bool {
    let half = |x: f64| dilate(&m.f_half_poly(if x < 0.0 { -1.0 } else { 1.0 }), x);
    let df = half(a).sub(&half(b));
    let s = m.sigma_poly();
    let ds = dilate(&s, a).sub(&dilate(&s, b));
    let num = df
        .mul(&Poly::monomial(1, a - b))
        .add(&ds.mul(&ds).scale(k))
        .trimmed(LEAD_TOL);
    num.degree() <= 2 || num.leading() < 0.0
}

const H3_RAYS: [(f64, f64); 8] = [
    (1.0, -1.0),
    (1.0, 0.0),
    (-1.0, 0.0),
    (1.0, 0.5),
    (-1.0, -0.5),
    (1.0, -0.5),
    (-1.0, 0.5),
    (1.0, 2.0),
];

/// Grid audit of the one-sided and polynomial Lipschitz conditions on `[-R, R]²`
/// with asymptotic ray checks. A falsification is sound; a pass is grid-level only.
pub fn certify_h3(m: &PolyModel, q: f64, theta: f64, radius: f64) -> Result<HypothesisCertificate> {
    certify_h3_with_grid(m, q, theta, radius, 401)
}

pub fn certify_h3_with_grid(
    m: &PolyModel,
    q: f64,
    theta: f64,
    radius: f64,
    points: usize,
) -> Result<HypothesisCertificate> {
    if !(radius > 0.0) {
        return Err(invalid("R", format!("audit radius must be positive, got {radius}")));
    }
    if points < 3 {
        return Err(invalid("points", "audit grid needs at least 3 points per axis"));
    }
    let k = noise_weight(q, m.r, theta);
    let mut cert = HypothesisCertificate::empty(q, m.r, theta);
    let h = 2.0 * radius / (points - 1) as f64;
    let mut best4 = (0.0, 0.0, f64::NEG_INFINITY);
    let mut best5 = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..points {
        let u = -radius + i as f64 * h;
        for j in 0..points {
            let v = -radius + j as f64 * h;
            let q4 = one_sided_quotient(m, k, u, v);
            if q4 > best4.2 {
                best4 = (u, v, q4);
            }
            let q5 = poly_lipschitz_quotient(m, u, v);
            if q5 > best5.2 {
                best5 = (u, v, q5);
            }
        }
    }
    let rays_ok = H3_RAYS.iter().all(|&(a, b)| ray_bounded(m, k, a, b));
    let degrees_ok = m.f_half_poly(1.0).degree() <= m.r && m.sigma_poly().degree() <= m.r;
    cert.c4 = Some(best4.2.max(POSITIVE_FLOOR));
    cert.c5 = Some(best5.2.max(POSITIVE_FLOOR));
    cert.witnesses.push(Witness {
        constant: "c4".into(),
        point: vec![best4.0, best4.1],
        value: best4.2,
    });
    cert.witnesses.push(Witness {
        constant: "c5".into(),
        point: vec![best5.0, best5.1],
        value: best5.2,
    });
    cert.status.h3 = if rays_ok && degrees_ok {
        Verdict::GridVerifiedOnly
    } else {
        Verdict::Falsified
    };
    Ok(cert)
}

/// Radius beyond which `f(u)u ≤ (b_β/2)|u|^{β+1}`, by bisection on the gap.
pub fn dominance_radius(m: &PolyModel) -> Option<f64> {
    let lead = *m.f_coeffs.last()?;
    if lead >= 0.0 {
        return None;
    }
    let p = m.beta as i32 + 1;
    let gap = |u: f64| m.f(u) * u - 0.5 * lead * u.abs().powi(p);
    let mut hi = 1.0;
    while gap(hi) > 0.0 || gap(-hi) > 0.0 {
        hi *= 2.0;
    }
    // scan for the largest sign change so the bracket holds the outermost root
    let n = 10_000;
    let mut outer = 0.0f64;
    for sign in [1.0, -1.0] {
        let g = |u: f64| gap(sign * u);
        let mut prev = (0.0, g(0.0));
        for i in 1..=n {
            let x = hi * i as f64 / n as f64;
            let gx = g(x);
            if prev.1 > 0.0 && gx <= 0.0 {
                let root = if gx == 0.0 { x } else { bisect(g, prev.0, x, prev.1, 1e-13) };
                outer = outer.max(root);
            }
            prev = (x, gx);
        }
    }
    Some(outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn drift_examples() {
        let m = PolyModel::allen_cahn(0.0);
        assert_eq!(m.eval_f_values(&[2.0, 2.0]), vec![-6.0, -6.0]);
        assert_eq!(m.f(0.0), 0.0);
        for u in [-3.0, -0.7, 0.2, 1.9] {
            assert_abs_diff_eq!(m.f(-u), -m.f(u), epsilon = 1e-14);
        }
        // even-index terms use u|u|
        let e = PolyModel::new(vec![0.0, 1.0], vec![]).unwrap();
        assert_eq!(e.f(-2.0), -4.0);
        assert_eq!(e.f(2.0), 4.0);
        assert_abs_diff_eq!(e.f_prime(-2.0), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn sigma_examples() {
        let m = PolyModel::new(vec![-1.0], vec![0.0, 0.25]).unwrap();
        assert_eq!(m.eval_sigma_values(&[4.0]), vec![1.0]);
        let z = PolyModel::new(vec![-1.0], vec![]).unwrap();
        assert!(z.eval_sigma_values(&[1.0, -3.0]).iter().all(|&s| s == 0.0));
        assert_eq!(m.sigma_prime(3.0), 0.25);
    }

    #[test]
    fn half_line_polynomials_match() {
        let m = PolyModel::new(vec![0.3, -1.2, 0.5, -2.0], vec![1.0, -0.5, 0.25]).unwrap();
        let (p, n) = (m.f_half_poly(1.0), m.f_half_poly(-1.0));
        for i in 0..50 {
            let u = i as f64 * 0.1;
            assert_abs_diff_eq!(p.eval(u), m.f(u), epsilon = 1e-12);
            assert_abs_diff_eq!(n.eval(-u), m.f(-u), epsilon = 1e-12);
        }
    }

    #[test]
    fn dominance_radius_allen_cahn() {
        // u² − u⁴ ≤ −u⁴/2 exactly when |u| ≥ √2
        let m = PolyModel::allen_cahn(0.0);
        let r = dominance_radius(&m).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-10);
        for i in 0..1000 {
            let u = r + i as f64 * 0.01;
            assert!(m.f(u) * u <= -0.5 * u.powi(4) + 1e-12);
        }
    }

    #[test]
    fn cutoff_examples() {
        let n = 2.0;
        assert_eq!(cutoff_chi(n, n / 2.0).unwrap(), 1.0);
        assert_eq!(cutoff_chi(n, n).unwrap(), 1.0);
        assert_eq!(cutoff_chi(n, 3.0 * n).unwrap(), 0.0);
        assert_eq!(cutoff_chi(n, 2.0 * n).unwrap(), 0.0);
        let mid = cutoff_chi(n, 1.5 * n).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        assert_abs_diff_eq!(mid, 0.5, epsilon = 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let s = n + n * i as f64 / 1000.0;
            let v = cutoff_chi(n, s).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(cutoff_chi(0.0, 1.0).is_err());
    }

    #[test]
    fn truncated_model_agrees_inside_radius() {
        let m = PolyModel::allen_cahn(0.3).with_cutoff(2.0).unwrap();
        let full = PolyModel::allen_cahn(0.3);
        for i in -200..=200 {
            let u = i as f64 * 0.01;
            assert_eq!(m.f_truncated(u), full.f(u));
            assert_eq!(m.sigma_truncated(u), full.sigma(u));
        }
        assert_eq!(m.f_truncated(4.5), 0.0);
        let lip = m.truncated_lipschitz(200_001).unwrap();
        let lip_coarse = m.truncated_lipschitz(20_001).unwrap();
        assert!(lip.is_finite() && lip > 1.0);
        assert!((lip - lip_coarse).abs() / lip < 0.05);
    }

    #[test]
    fn h2_pure_cubic() {
        let m = PolyModel::new(vec![0.0, 0.0, -1.0], vec![]).unwrap();
        let opts = H2Options {
            c1: Some(1.0),
            ..Default::default()
        };
        let c = certify_h2(&m, 8.0, 0.0, opts).unwrap();
        assert_eq!(c.status.h2, Verdict::Verified);
        assert_abs_diff_eq!(c.c2.unwrap(), 0.25, epsilon = 1e-12);
        let w = &c.witnesses.iter().find(|w| w.constant == "c2").unwrap().point;
        assert_abs_diff_eq!(w[0].abs(), 0.5f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn h2_allen_cahn_closed_form() {
        let kappa = 0.25;
        let theta = 0.3;
        let m = PolyModel::allen_cahn(kappa);
        let c = certify_h2(&m, 8.0, theta, H2Options::default()).unwrap();
        assert_eq!(c.status.h2, Verdict::Verified);
        let c1 = c.c1.unwrap();
        assert_abs_diff_eq!(c1, 1.0, epsilon = 1e-15);
        let k = noise_weight(8.0, 3, theta);
        let a = 1.0 + k * kappa * kappa + c1;
        assert_abs_diff_eq!(c.c2.unwrap(), a * a / 4.0, epsilon = 1e-10);
        // grid-search cross-check
        let grid_max = (0..200_001)
            .map(|i| -5.0 + i as f64 * 5e-5)
            .map(|u| a * u * u - u.powi(4))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(grid_max <= c.c2.unwrap() + 1e-12);
        assert!((grid_max - c.c2.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn h2_boundary_balance() {
        // f = −u³, σ = u²: leading coefficient of g is K − 1
        let m = PolyModel::new(vec![0.0, 0.0, -1.0], vec![0.0, 0.0, 1.0]).unwrap();
        let q = 8.0;
        let k_per_theta = noise_weight(q, m.r, 1.0);
        let small = certify_h2(&m, q, 0.5 / k_per_theta, H2Options::default()).unwrap();
        assert_eq!(small.status.h2, Verdict::Verified);
        let large = certify_h2(&m, q, 2.0 / k_per_theta, H2Options::default()).unwrap();
        assert_eq!(large.status.h2, Verdict::Falsified);
        assert_eq!(large.c1, None);
    }

    #[test]
    fn h2_linear_drift_caps_c1() {
        // f = −u, σ ≡ 1: g = (c₁ − 1)u² + K, feasible for c₁ < 1
        let m = PolyModel::new(vec![-1.0], vec![1.0]).unwrap();
        let c = certify_h2(&m, 8.0, 0.1, H2Options::default()).unwrap();
        assert_abs_diff_eq!(c.c1.unwrap(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(c.c2.unwrap(), noise_weight(8.0, 1, 0.1), epsilon = 1e-12);
        let none = PolyModel::new(vec![], vec![]).unwrap();
        assert_eq!(
            certify_h2(&none, 8.0, 0.1, H2Options::default()).unwrap().status.h2,
            Verdict::Falsified
        );
        assert!(certify_h2(&m, 6.0, 0.1, H2Options::default()).is_err());
    }

    #[test]
    fn growth_audit() {
        let m = PolyModel::allen_cahn(0.25);
        let c = certify_h2(&m, 8.0, 0.1, H2Options::default()).unwrap();
        let c3 = c.c3.unwrap();
        for i in 0..100_001 {
            let u = -50.0 + i as f64 * 1e-3;
            assert!(m.f(u).abs() + m.sigma(u).abs() <= c3 * (u.abs().powi(3) + 1.0) + 1e-12);
        }
        let s = PolyModel::new(vec![-1.0], vec![0.5, 0.0, 2.0]).unwrap();
        let cs = certify_h2(&s, 8.0, 0.0, H2Options::default()).unwrap().c3.unwrap();
        let dense = (0..200_001)
            .map(|i| -100.0 + i as f64 * 1e-3)
            .map(|u: f64| s.sigma(u).abs() / (u.abs().powi(2) + 1.0))
            .fold(0.0, f64::max);
        assert!(dense <= cs + 1e-12);
    }

    #[test]
    fn h3_examples() {
        let cubic = PolyModel::new(vec![0.0, 0.0, -1.0], vec![]).unwrap();
        let c = certify_h3(&cubic, 8.0, 0.0, 3.0).unwrap();
        assert!(c.c4.unwrap() <= 1e-9 + 1e-12);
        assert_eq!(c.status.h3, Verdict::GridVerifiedOnly);

        let lin = PolyModel::new(vec![1.0], vec![]).unwrap();
        let c = certify_h3(&lin, 8.0, 0.0, 3.0).unwrap();
        assert_abs_diff_eq!(c.c4.unwrap(), 1.0, epsilon = 1e-12);

        let kappa = 0.25;
        let theta = 0.3;
        let ac = PolyModel::allen_cahn(kappa);
        let c = certify_h3(&ac, 8.0, theta, 3.0).unwrap();
        let k = noise_weight(8.0, 3, theta);
        assert_abs_diff_eq!(c.c4.unwrap(), 1.0 + k * kappa * kappa, epsilon = 1e-10);
        let w = c.witnesses.iter().find(|w| w.constant == "c4").unwrap();
        assert_abs_diff_eq!(one_sided_quotient(&ac, k, w.point[0], w.point[1]), c.c4.unwrap(), epsilon = 1e-8);
    }

    #[test]
    fn h3_ray_falsifies_superlinear_noise() {
        // σ = u², f = −u: quotient grows like K(u+v)² along u = v direction rays
        let m = PolyModel::new(vec![-1.0], vec![0.0, 0.0, 1.0]).unwrap();
        let c = certify_h3(&m, 8.0, 0.5, 2.0).unwrap();
        assert_eq!(c.status.h3, Verdict::Falsified);
    }

    #[test]
    fn example_conditions() {
        assert!(PolyModel::allen_cahn(0.25).satisfies_example_conditions());
        let boundary = PolyModel::new(vec![0.0, 0.0, -1.0], vec![0.0, 0.0, 1.0]).unwrap();
        assert!(!boundary.satisfies_example_conditions());
    }

    #[test]
    fn certificate_json_shape() {
        let m = PolyModel::allen_cahn(0.25);
        let c = certify_h2(&m, 8.0, 0.3, H2Options::default()).unwrap();
        let c = c.merge(certify_h3_with_grid(&m, 8.0, 0.3, 2.0, 41).unwrap());
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        for key in ["q", "r", "theta", "c1", "c2", "c3", "c4", "c5", "witnesses", "status"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["status"]["h2"], "verified");
        assert_eq!(v["status"]["h3"], "grid-verified-only");
        assert_eq!(c.status.overall(), Verdict::GridVerifiedOnly);
    }
}
