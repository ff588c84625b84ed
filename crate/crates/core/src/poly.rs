//! Dense univariate polynomials with real-root isolation.
//!
//! Roots are isolated recursively: the critical points of `p` (roots of `p'`)
//! split the search interval into pieces on which `p` is monotone, and each
//! piece holds at most one sign-changing root, refined by bisection.

/// Coefficients in ascending order: `c[i]` multiplies `x^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    c: Vec<f64>,
}

impl Poly {
    pub fn new(mut c: Vec<f64>) -> Self {
        while c.len() > 1 && c.last() == Some(&0.0) {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Self { c }
    }

    pub fn zero() -> Self {
        Self { c: vec![0.0] }
    }

    /// `coeff · x^k`
    pub fn monomial(k: usize, coeff: f64) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = coeff;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.c.last().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.c.len() == 1 && self.c[0] == 0.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    pub fn derivative(&self) -> Self {
        if self.c.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| i as f64 * a)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.c.len().max(other.c.len());
        Self::new(
            (0..n)
                .map(|i| self.c.get(i).unwrap_or(&0.0) + other.c.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.c.iter().map(|a| a * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.c.len() + other.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in other.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `p(-x)`
    pub fn reflect(&self) -> Self {
        Self::new(
            self.c
                .iter()
                .enumerate()
                .map(|(i, &a)| if i % 2 == 1 { -a } else { a })
                .collect(),
        )
    }

    /// Drops leading coefficients negligible relative to the coefficient scale.
    pub fn trimmed(&self, rel_tol: f64) -> Self {
        let scale = self.c.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let mut c = self.c.clone();
        while c.len() > 1 && c.last().unwrap().abs() <= rel_tol * scale {
            c.pop();
        }
        Self::new(c)
    }

    /// Cauchy bound `1 + max |a_i / a_n|`: every real root lies in `[-R, R]`.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.leading();
        if self.degree() == 0 || lead == 0.0 {
            return 1.0;
        }
        1.0 + self.c[..self.c.len() - 1]
            .iter()
            .fold(0.0f64, |m, a| m.max((a / lead).abs()))
    }

    /// Sign-changing real roots in `[lo, hi]`, ascending, refined to `tol`.
    pub fn real_roots_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        if self.degree() == 0 || lo >= hi {
            return Vec::new();
        }
        if self.degree() == 1 {
            let r = -self.c[0] / self.c[1];
            return if (lo..=hi).contains(&r) { vec![r] } else { Vec::new() };
        }
        let crit = self.derivative().real_roots_in(lo, hi, tol);
        let mut knots = Vec::with_capacity(crit.len() + 2);
        knots.push(lo);
        knots.extend(crit.into_iter().filter(|&x| x > lo && x < hi));
        knots.push(hi);
        let mut roots: Vec<f64> = Vec::new();
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            let root = if fa == 0.0 {
                Some(a)
            } else if fb == 0.0 {
                Some(b)
            } else if fa.signum() != fb.signum() {
                Some(bisect(|x| self.eval(x), a, b, fa, tol))
            } else {
                None
            };
            if let Some(r) = root {
                if roots.last().is_none_or(|&last| (r - last).abs() > tol) {
                    roots.push(r);
                }
            }
        }
        roots
    }

    /// All sign-changing real roots, searched within the Cauchy bound.
    pub fn real_roots(&self, tol: f64) -> Vec<f64> {
        let r = self.cauchy_bound();
        self.real_roots_in(-r, r, tol)
    }
}

pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol || m == a || m == b {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn arithmetic() {
        let p = Poly::new(vec![1.0, 0.0, -1.0]); // 1 - x²
        let q = Poly::new(vec![0.0, 2.0]); // 2x
        assert_eq!(p.mul(&q).coeffs(), &[0.0, 2.0, 0.0, -2.0]);
        assert_eq!(p.derivative().coeffs(), &[0.0, -2.0]);
        assert_eq!(p.add(&q).coeffs(), &[1.0, 2.0, -1.0]);
        assert_eq!(p.sub(&p), Poly::zero());
        assert_eq!(q.reflect().coeffs(), &[0.0, -2.0]);
        assert_eq!(p.eval(3.0), -8.0);
    }

    #[test]
    fn roots_of_product() {
        // (x+2)(x-0.5)(x-1)(x-3)
        let p = [-2.0, 0.5, 1.0, 3.0]
            .iter()
            .fold(Poly::new(vec![1.0]), |acc, &r| acc.mul(&Poly::new(vec![-r, 1.0])));
        let roots = p.real_roots(1e-12);
        assert_eq!(roots.len(), 4);
        for (got, want) in roots.iter().zip([-2.0, 0.5, 1.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn close_roots_are_separated() {
        // roots 1 and 1 + 1e-4 would merge under a coarse sign scan
        let p = Poly::new(vec![-1.0, 1.0]).mul(&Poly::new(vec![-(1.0 + 1e-4), 1.0]));
        let roots = p.real_roots(1e-13);
        assert_eq!(roots.len(), 2);
        assert_abs_diff_eq!(roots[1] - roots[0], 1e-4, epsilon = 1e-9);
    }

    #[test]
    fn no_real_roots() {
        assert!(Poly::new(vec![1.0, 0.0, 1.0]).real_roots(1e-12).is_empty());
        assert!(Poly::new(vec![3.0]).real_roots(1e-12).is_empty());
    }

    #[test]
    fn trimming_and_bounds() {
        let p = Poly::new(vec![1.0, 2.0, 1e-18]);
        assert_eq!(p.trimmed(1e-14).degree(), 1);
        let q = Poly::new(vec![-6.0, 1.0, 1.0]); // roots -3, 2
        assert!(q.cauchy_bound() >= 3.0);
    }
}
