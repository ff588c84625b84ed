//! Dirichlet sine basis for `A = -a0 d²/dx²` on `(0, L)`.
//!
//! Eigenpairs are closed-form: `λ_j = a0 (jπ/L)²`, `e_j(x) = √(2/L) sin(jπx/L)`.
//! The collocation grid is the interior of a uniform mesh, `x_k = kL/(G+1)`
//! for `k = 1..=G`, so the discrete sine transform is exactly orthonormal for
//! every mode `j ≤ G` and the boundary values vanish identically.
//!
//! Semigroup and fractional powers act diagonally on spectral coefficients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Minimum collocation size for `n` modes (the 3/2 dealiasing rule).
pub fn min_grid_size(n: usize) -> usize {
    (3 * n).div_ceil(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub length: f64,
    pub a0: f64,
    pub modes: usize,
    pub grid: usize,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    params: BasisParams,
    id: u64,
    lambda: Vec<f64>,
    grid: Vec<f64>,
    dx: f64,
    /// Row `j` holds `e_{j+1}` sampled on the grid (`modes × grid`, row-major).
    table: Vec<f64>,
}

/// Solution state carried in both spectral and grid form.
///
/// Fields are only built through a [`SpectralBasis`], which keeps the two
/// representations synchronized.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    coeffs: Vec<f64>,
    values: Vec<f64>,
    basis_id: u64,
}

impl Field {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite()) && self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn from_parts(coeffs: Vec<f64>, values: Vec<f64>, basis_id: u64) -> Self {
        Self {
            coeffs,
            values,
            basis_id,
        }
    }

    pub(crate) fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.coeffs, self.values)
    }
}

fn fingerprint(p: &BasisParams) -> u64 {
    // splitmix64 over the parameter bits
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for word in [
        p.length.to_bits(),
        p.a0.to_bits(),
        p.modes as u64,
        p.grid as u64,
    ] {
        h ^= word;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl SpectralBasis {
    pub fn new(length: f64, a0: f64, modes: usize, grid: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("L", format!("must be positive, got {length}")));
        }
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(invalid("a0", format!("must be positive, got {a0}")));
        }
        if modes < 1 {
            return Err(Error::InvalidDimension("mode count must be at least 1".into()));
        }
        if grid < min_grid_size(modes) {
            return Err(Error::InvalidDimension(format!(
                "grid size {grid} below dealiasing minimum {} for {modes} modes",
                min_grid_size(modes)
            )));
        }
        let params = BasisParams {
            length,
            a0,
            modes,
            grid,
        };
        let lambda = (1..=modes)
            .map(|j| a0 * (j as f64 * PI / length).powi(2))
            .collect();
        let h = length / (grid + 1) as f64;
        let grid_pts = (1..=grid).map(|k| k as f64 * h).collect();
        let amp = (2.0 / length).sqrt();
        let mut table = Vec::with_capacity(modes * grid);
        for j in 1..=modes {
            for k in 1..=grid {
                // reduce the phase mod 2(G+1) before sin() for accuracy at high modes
                let phase = (j * k) % (2 * (grid + 1));
                table.push(amp * (PI * phase as f64 / (grid + 1) as f64).sin());
            }
        }
        Ok(Self {
            id: fingerprint(&params),
            params,
            lambda,
            grid: grid_pts,
            dx: h,
            table,
        })
    }

    pub fn from_params(p: &BasisParams) -> Result<Self> {
        Self::new(p.length, p.a0, p.modes, p.grid)
    }

    pub fn params(&self) -> &BasisParams {
        &self.params
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn length(&self) -> f64 {
        self.params.length
    }

    pub fn modes(&self) -> usize {
        self.params.modes
    }

    pub fn grid_size(&self) -> usize {
        self.params.grid
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// `‖e_j‖_{C0} = √(2/L)`, identical for all modes.
    pub fn supnorm_e(&self) -> f64 {
        (2.0 / self.params.length).sqrt()
    }

    /// The spectral gap parameter, fixed at `λ₁/2`.
    pub fn spectral_gap(&self) -> f64 {
        0.5 * self.lambda[0]
    }

    /// Samples of mode `j` (1-based) on the grid.
    pub fn mode_samples(&self, j: usize) -> &[f64] {
        let g = self.params.grid;
        &self.table[(j - 1) * g..j * g]
    }

    pub fn to_spectral(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values.len(), self.params.grid)?;
        let mut out = vec![0.0; self.params.modes];
        self.to_spectral_into(values, &mut out);
        Ok(out)
    }

    pub fn to_grid(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len(), self.params.modes)?;
        let mut out = vec![0.0; self.params.grid];
        self.to_grid_into(coeffs, &mut out);
        Ok(out)
    }

    pub(crate) fn to_spectral_into(&self, values: &[f64], out: &mut [f64]) {
        let g = self.params.grid;
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.dx * dot(&self.table[j * g..(j + 1) * g], values);
        }
    }

    pub(crate) fn to_grid_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let g = self.params.grid;
        out.fill(0.0);
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.table[j * g..(j + 1) * g];
            for (o, &e) in out.iter_mut().zip(row) {
                *o += c * e;
            }
        }
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<()> {
        if got != expected {
            return Err(Error::LengthMismatch { expected, got });
        }
        Ok(())
    }

    fn check_field(&self, u: &Field) -> Result<()> {
        if u.basis_id != self.id {
            return Err(Error::BasisMismatch);
        }
        Ok(())
    }

    pub fn field_from_coeffs(&self, coeffs: Vec<f64>) -> Result<Field> {
        let values = self.to_grid(&coeffs)?;
        Ok(Field {
            coeffs,
            values,
            basis_id: self.id,
        })
    }

    /// Projects grid samples onto the span of the first `N` modes.
    ///
    /// The stored grid values are re-synthesized from the projection, so
    /// content above mode `N` is discarded.
    pub fn field_from_values(&self, values: &[f64]) -> Result<Field> {
        let coeffs = self.to_spectral(values)?;
        self.field_from_coeffs(coeffs)
    }

    pub fn field_from_fn(&self, f: impl Fn(f64) -> f64) -> Field {
        let values: Vec<f64> = self.grid.iter().map(|&x| f(x)).collect();
        self.field_from_values(&values).expect("grid length")
    }

    pub fn zero_field(&self) -> Field {
        Field {
            coeffs: vec![0.0; self.params.modes],
            values: vec![0.0; self.params.grid],
            basis_id: self.id,
        }
    }

    /// `amplitude · e_j` for 1-based `j`.
    pub fn mode_field(&self, j: usize, amplitude: f64) -> Result<Field> {
        if j < 1 || j > self.params.modes {
            return Err(invalid("j", format!("mode index {j} outside 1..={}", self.params.modes)));
        }
        let mut c = vec![0.0; self.params.modes];
        c[j - 1] = amplitude;
        self.field_from_coeffs(c)
    }

    fn scale_modes(&self, u: &Field, mult: impl Fn(f64) -> f64) -> Result<Field> {
        self.check_field(u)?;
        let coeffs = u
            .coeffs
            .iter()
            .zip(&self.lambda)
            .map(|(&c, &l)| c * mult(l))
            .collect();
        self.field_from_coeffs(coeffs)
    }

    /// `S(t)u`: coefficient `j` scaled by `exp(-λ_j t)`.
    pub fn apply_semigroup(&self, t: f64, u: &Field) -> Result<Field> {
        if !(t >= 0.0) {
            return Err(invalid("t", format!("semigroup time must be non-negative, got {t}")));
        }
        if t == 0.0 {
            self.check_field(u)?;
            return Ok(u.clone());
        }
        self.scale_modes(u, |l| (-l * t).exp())
    }

    /// `A^α u`: coefficient `j` scaled by `λ_j^α`.
    pub fn apply_fractional(&self, alpha: f64, u: &Field) -> Result<Field> {
        if alpha == 0.0 {
            self.check_field(u)?;
            return Ok(u.clone());
        }
        self.scale_modes(u, |l| l.powf(alpha))
    }

    /// Discrete `L^q` norm on the grid, `(Σ |u(x_k)|^q Δx)^{1/q}`.
    pub fn lq_norm(&self, u: &Field, q: f64) -> Result<f64> {
        self.check_field(u)?;
        lq_norm_values(&u.values, self.dx, q)
    }

    /// `‖u‖^q_{L^q}` without the final root.
    pub fn lq_norm_pow(&self, u: &Field, q: f64) -> Result<f64> {
        self.check_field(u)?;
        lq_pow_values(&u.values, self.dx, q)
    }

    /// Sup norm from grid values with one quadratic refinement at the argmax.
    pub fn sup_norm(&self, u: &Field) -> f64 {
        sup_norm_values(&u.values)
    }

    /// `max_{j ≤ N} λ_j^α e^{-λ_j t}`, the exact discrete norm of `A^α S(t)`.
    pub fn semigroup_operator_bound(&self, alpha: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid("t", format!("must be positive, got {t}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        Ok(self
            .lambda
            .iter()
            .map(|&l| l.powf(alpha) * (-l * t).exp())
            .fold(0.0, f64::max))
    }

    /// Coefficient-space `ℓ²` norm, equal to the discrete `L²` norm of band-limited fields.
    pub fn l2_coeff_norm(&self, u: &Field) -> f64 {
        dot(&u.coeffs, &u.coeffs).sqrt()
    }
}

pub(crate) fn lq_pow_values(values: &[f64], dx: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(invalid("q", format!("L^q exponent must be at least 1, got {q}")));
    }
    let s: f64 = if q == 2.0 {
        dot(values, values)
    } else {
        values.iter().map(|v| v.abs().powf(q)).sum()
    };
    Ok(s * dx)
}

pub(crate) fn lq_norm_values(values: &[f64], dx: f64, q: f64) -> Result<f64> {
    Ok(lq_pow_values(values, dx, q)?.powf(1.0 / q))
}

pub(crate) fn sup_norm_values(values: &[f64]) -> f64 {
    let Some((k, &vk)) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    else {
        return 0.0;
    };
    if vk == 0.0 || !vk.is_finite() {
        return vk.abs();
    }
    let s = vk.signum();
    let y0 = vk * s;
    // boundary neighbours are the homogeneous Dirichlet zeros
    let ym = if k == 0 { 0.0 } else { values[k - 1] * s };
    let yp = values.get(k + 1).map_or(0.0, |v| v * s);
    let curv = ym - 2.0 * y0 + yp;
    if curv >= 0.0 {
        return y0;
    }
    let shift = 0.5 * (ym - yp) / curv;
    if shift.abs() > 1.0 {
        return y0;
    }
    (y0 - 0.25 * (ym - yp) * shift).max(y0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> SpectralBasis {
        SpectralBasis::new(1.0, 1.0, 4, 8).unwrap()
    }

    #[test]
    fn eigenvalues_closed_form() {
        let b = unit();
        let pi2 = PI * PI;
        for (j, &l) in b.lambda().iter().enumerate() {
            let k = (j + 1) as f64;
            assert_abs_diff_eq!(l, k * k * pi2, epsilon = 1e-12);
        }
        let b2 = SpectralBasis::new(2.0, 0.5, 1, 2).unwrap();
        assert_abs_diff_eq!(b2.lambda()[0], pi2 / 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.supnorm_e(), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_aliasing_grid() {
        assert!(matches!(
            SpectralBasis::new(1.0, 1.0, 4, 5),
            Err(Error::InvalidDimension(_))
        ));
        assert!(SpectralBasis::new(1.0, 1.0, 4, 6).is_ok());
        assert!(SpectralBasis::new(0.0, 1.0, 4, 6).is_err());
        assert!(SpectralBasis::new(1.0, -1.0, 4, 6).is_err());
        assert!(SpectralBasis::new(1.0, 1.0, 0, 6).is_err());
    }

    #[test]
    fn discrete_orthonormality() {
        let b = SpectralBasis::new(1.3, 1.0, 16, 24).unwrap();
        for i in 1..=16 {
            for j in 1..=16 {
                let q = b.dx() * dot(b.mode_samples(i), b.mode_samples(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(q, want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn transforms_of_modes() {
        let b = unit();
        let c = b.to_spectral(b.mode_samples(2)).unwrap();
        for (j, &cj) in c.iter().enumerate() {
            assert_abs_diff_eq!(cj, if j == 1 { 1.0 } else { 0.0 }, epsilon = 1e-13);
        }
        assert!(b.to_spectral(&[0.0; 8]).unwrap().iter().all(|&x| x == 0.0));
        let v: Vec<f64> = b
            .mode_samples(1)
            .iter()
            .zip(b.mode_samples(3))
            .map(|(a, c)| 3.0 * a - 2.0 * c)
            .collect();
        let c = b.to_spectral(&v).unwrap();
        for (got, want) in c.iter().zip([3.0, 0.0, -2.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let g = b.to_grid(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        for (a, e) in g.iter().zip(b.mode_samples(3)) {
            assert_abs_diff_eq!(*a, *e, epsilon = 1e-15);
        }
        assert!(b.to_grid(&[0.0; 4]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn length_mismatch() {
        let b = unit();
        assert_eq!(
            b.to_spectral(&[1.0; 3]),
            Err(Error::LengthMismatch {
                expected: 8,
                got: 3
            })
        );
        assert!(b.to_grid(&[1.0; 5]).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let b = unit();
        let u = b.mode_field(1, 1.0).unwrap();
        assert_eq!(b.apply_semigroup(0.0, &u).unwrap(), u);
        let s = b.apply_semigroup(0.1, &u).unwrap();
        assert_abs_diff_eq!(s.coeffs()[0], (-PI * PI * 0.1).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.coeffs()[0], 0.372708, epsilon = 1e-6);
        assert!(b.apply_semigroup(-0.1, &u).is_err());
        for j in 1..=4 {
            let e = b.mode_field(j, 1.0).unwrap();
            let s = b.apply_semigroup(0.01, &e).unwrap();
            let want = (-b.lambda()[j - 1] * 0.01).exp();
            assert_abs_diff_eq!(s.coeffs()[j - 1], want, epsilon = 1e-16);
        }
    }

    #[test]
    fn fractional_examples() {
        let b = unit();
        let u = b.mode_field(1, 1.0).unwrap();
        assert_eq!(b.apply_fractional(0.0, &u).unwrap(), u);
        let h = b.apply_fractional(0.5, &u).unwrap();
        assert_abs_diff_eq!(h.coeffs()[0], PI, epsilon = 1e-14);
        let w = b.field_from_coeffs(vec![1.0, -0.5, 0.25, 2.0]).unwrap();
        let twice = b
            .apply_fractional(0.5, &b.apply_fractional(0.5, &w).unwrap())
            .unwrap();
        let once = b.apply_fractional(1.0, &w).unwrap();
        for (a, c) in twice.coeffs().iter().zip(once.coeffs()) {
            assert_abs_diff_eq!(*a, *c, epsilon = 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn lq_norm_examples() {
        let b = SpectralBasis::new(1.0, 1.0, 4, 16).unwrap();
        assert_eq!(b.lq_norm(&b.zero_field(), 3.0).unwrap(), 0.0);
        let e1 = b.mode_field(1, 1.0).unwrap();
        assert_abs_diff_eq!(b.lq_norm(&e1, 2.0).unwrap(), 1.0, epsilon = 1e-6);
        // ∫ 4 sin⁴(πx) dx = 3/2
        assert_abs_diff_eq!(b.lq_norm(&e1, 4.0).unwrap(), 1.5f64.powf(0.25), epsilon = 1e-6);
        assert_abs_diff_eq!(b.lq_norm(&e1, 4.0).unwrap(), 1.10668, epsilon = 1e-5);
        assert!(b.lq_norm(&e1, 0.5).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let b = SpectralBasis::new(1.0, 1.0, 8, 128).unwrap();
        assert_eq!(b.sup_norm(&b.zero_field()), 0.0);
        let e1 = b.mode_field(1, 1.0).unwrap();
        assert_abs_diff_eq!(b.sup_norm(&e1), 2f64.sqrt(), epsilon = 1e-4);
        // dense-grid oracle for √2 (sin πx + sin 2πx)
        let mut best = (0.0, 0.0);
        let n = 1_000_000;
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let v = (2f64.sqrt() * ((PI * x).sin() + (2.0 * PI * x).sin())).abs();
            if v > best.0 {
                best = (v, x);
            }
        }
        assert_abs_diff_eq!(best.0, 2.48926, epsilon = 1e-5);
        assert_abs_diff_eq!(best.1, 0.2979, epsilon = 1e-4);
        let u = b.field_from_coeffs(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(b.sup_norm(&u), best.0, epsilon = 1e-5);
    }

    #[test]
    fn refinement_beats_raw_grid_max() {
        let b = SpectralBasis::new(1.0, 1.0, 2, 10).unwrap();
        let e1 = b.mode_field(1, 1.0).unwrap();
        let raw = e1.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let refined = b.sup_norm(&e1);
        assert!(refined >= raw);
        assert!((refined - 2f64.sqrt()).abs() < (raw - 2f64.sqrt()).abs());
    }

    #[test]
    fn operator_bound_examples() {
        let b = SpectralBasis::new(1.0, 1.0, 64, 96).unwrap();
        let l1 = b.lambda()[0];
        // α/t < λ₁: the first mode dominates
        let t = 0.5 / l1;
        let got = b.semigroup_operator_bound(1.0, t).unwrap();
        assert_abs_diff_eq!(got, l1 * (-l1 * t).exp(), epsilon = 1e-12);
        let got0 = b.semigroup_operator_bound(0.0, 0.3).unwrap();
        assert_abs_diff_eq!(got0, (-l1 * 0.3).exp(), epsilon = 1e-15);
        assert!(b.semigroup_operator_bound(0.5, 0.0).is_err());
        assert!(b.semigroup_operator_bound(1.5, 0.1).is_err());
    }

    #[test]
    fn smoothing_with_gap() {
        // λ^α e^{-λt} = λ^α e^{-λt/2} e^{-λt/2} ≤ (2α/t)^α e^{-α} e^{-λ₁t/2}
        let b = SpectralBasis::new(1.0, 1.0, 64, 96).unwrap();
        let gap = b.spectral_gap();
        for alpha in [0.25f64, 0.5] {
            let c = (2.0 * alpha).powf(alpha) * (-alpha).exp();
            for i in 0..=400 {
                let t = 1e-4 * 1e4f64.powf(i as f64 / 400.0);
                let v = t.powf(alpha) * b.semigroup_operator_bound(alpha, t).unwrap() * (gap * t).exp();
                assert!(v <= c + 1e-9, "alpha={alpha} t={t} v={v} c={c}");
            }
        }
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let a = unit();
        let b = SpectralBasis::new(2.0, 1.0, 4, 8).unwrap();
        let u = a.mode_field(1, 1.0).unwrap();
        assert_eq!(b.apply_semigroup(0.1, &u), Err(Error::BasisMismatch));
        assert_eq!(b.lq_norm(&u, 2.0), Err(Error::BasisMismatch));
    }
}
