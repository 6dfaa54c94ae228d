//! Complex values carrying a bound on their total error.
//!
//! Propagation rules (first order, plus one rounding term per operation):
//!
//! * `a + b`: `err_a + err_b`
//! * `a * b`: `|a| err_b + |b| err_a + err_a err_b`
//! * `exp(a)`: `|exp(a)| (e^{err_a} - 1)`

use num_complex::Complex;

use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifiedValue<T: Real> {
    pub value: Complex<T>,
    pub err: T,
    /// False when some bound rests on an empirical rather than proven input.
    pub certified: bool,
}

impl<T: Real> CertifiedValue<T> {
    pub fn new(value: Complex<T>, err: T, certified: bool) -> Self {
        CertifiedValue {
            value,
            err,
            certified,
        }
    }

    pub fn exact(value: Complex<T>) -> Self {
        CertifiedValue::new(value, T::zero(), true)
    }

    fn rounding(v: Complex<T>) -> T {
        lit::<T>(2.0) * T::epsilon() * v.norm()
    }

    pub fn add(&self, other: &Self) -> Self {
        let value = self.value + other.value;
        CertifiedValue::new(
            value,
            self.err + other.err + Self::rounding(value),
            self.certified && other.certified,
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let value = self.value - other.value;
        CertifiedValue::new(
            value,
            self.err + other.err + Self::rounding(value),
            self.certified && other.certified,
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        let value = self.value * other.value;
        let err = self.value.norm() * other.err
            + other.value.norm() * self.err
            + self.err * other.err
            + lit::<T>(2.0) * Self::rounding(value);
        CertifiedValue::new(value, err, self.certified && other.certified)
    }

    pub fn scale(&self, k: T) -> Self {
        let value = self.value * k;
        CertifiedValue::new(value, self.err * k.abs() + Self::rounding(value), self.certified)
    }

    pub fn exp(&self) -> Self {
        let value = self.value.exp();
        let err = value.norm() * self.err.exp_m1() + lit::<T>(4.0) * Self::rounding(value);
        CertifiedValue::new(value, err, self.certified)
    }

    /// Adds `extra` to the error radius.
    pub fn widen(mut self, extra: T) -> Self {
        self.err = self.err + extra;
        self
    }

    pub fn with_certified(mut self, certified: bool) -> Self {
        self.certified = self.certified && certified;
        self
    }

    /// Whether `other` lies within the two error radii of `self`.
    pub fn agrees_with(&self, other: &Self) -> bool {
        (self.value - other.value).norm() <= self.err + other.err
    }
}

/// Neumaier-compensated complex sum with a running bound on the rounding
/// error: `(2ε + 4nε²) Σ|x_i|` for the additions plus caller-supplied
/// per-term errors.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T: Real> {
    re: (T, T),
    im: (T, T),
    abs_sum: T,
    term_err: T,
    n: u64,
}

impl<T: Real> Default for CompensatedSum<T> {
    fn default() -> Self {
        CompensatedSum {
            re: (T::zero(), T::zero()),
            im: (T::zero(), T::zero()),
            abs_sum: T::zero(),
            term_err: T::zero(),
            n: 0,
        }
    }
}

#[inline]
fn neumaier<T: Real>(acc: &mut (T, T), x: T) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 = acc.1 + ((acc.0 - t) + x);
    } else {
        acc.1 = acc.1 + ((x - t) + acc.0);
    }
    acc.0 = t;
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: Complex<T>, err: T) {
        neumaier(&mut self.re, x.re);
        neumaier(&mut self.im, x.im);
        self.abs_sum = self.abs_sum + x.re.abs() + x.im.abs();
        self.term_err = self.term_err + err;
        self.n += 1;
    }

    pub fn merge(&mut self, other: &CompensatedSum<T>) {
        neumaier(&mut self.re, other.re.0);
        neumaier(&mut self.re, other.re.1);
        neumaier(&mut self.im, other.im.0);
        neumaier(&mut self.im, other.im.1);
        self.abs_sum = self.abs_sum + other.abs_sum;
        self.term_err = self.term_err + other.term_err;
        self.n += other.n;
    }

    pub fn value(&self) -> Complex<T> {
        Complex::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }

    pub fn abs_sum(&self) -> T {
        self.abs_sum
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Bound on |computed − exact sum of the exact terms|.
    pub fn err(&self) -> T {
        let eps = T::epsilon();
        let n = T::from_u64(self.n).unwrap_or_else(T::max_value);
        self.term_err + (lit::<T>(2.0) * eps + lit::<T>(4.0) * n * eps * eps) * self.abs_sum
    }

    pub fn finish(&self, certified: bool) -> CertifiedValue<T> {
        CertifiedValue::new(self.value(), self.err(), certified)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn propagation_rules() {
        let a = CertifiedValue::new(c(1.0, 2.0), 1e-3, true);
        let b = CertifiedValue::new(c(-3.0, 0.5), 2e-3, false);
        let s = a.add(&b);
        assert_eq!(s.value, c(-2.0, 2.5));
        assert!((s.err - 3e-3).abs() < 1e-12);
        assert!(!s.certified);
        let p = a.mul(&b);
        let expect = a.value.norm() * 2e-3 + b.value.norm() * 1e-3 + 2e-6;
        assert!((p.err - expect).abs() < 1e-12);
        let e = a.exp();
        assert!((e.err - a.value.exp().norm() * (1e-3f64).exp_m1()).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_perturbations_stay_inside_radius() {
        // deterministic LCG so the test is reproducible without extra deps
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut uniform = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let a = CertifiedValue::new(c(0.7, -1.3), 0.05, true);
        let b = CertifiedValue::new(c(2.1, 0.4), 0.02, true);
        let sum = a.add(&b);
        let prod = a.mul(&b);
        let ex = a.exp();
        for _ in 0..10_000 {
            let mut perturb = |v: &CertifiedValue<f64>| {
                let r = v.err * uniform().sqrt();
                let th = std::f64::consts::TAU * uniform();
                v.value + Complex::from_polar(r, th)
            };
            let (pa, pb) = (perturb(&a), perturb(&b));
            assert!((pa + pb - sum.value).norm() <= sum.err);
            assert!((pa * pb - prod.value).norm() <= prod.err);
            assert!((pa.exp() - ex.value).norm() <= ex.err);
        }
    }

    #[test]
    fn compensated_sum_is_accurate() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(c(1e16, 0.0), 0.0);
        for _ in 0..1000 {
            s.add(c(1.0, -1.0), 0.0);
        }
        s.add(c(-1e16, 0.0), 0.0);
        assert_eq!(s.value(), c(1000.0, -1000.0));
        assert!(s.err() < 10.0);

        let mut f = CompensatedSum::<f32>::new();
        for n in 1..=10_000u32 {
            f.add(Complex::new(1.0 / (n as f32 * n as f32), 0.0), 0.0);
        }
        let exact = std::f64::consts::PI.powi(2) / 6.0 - 1.0 / 10_000.5;
        assert!((f.value().re as f64 - exact).abs() <= f.err() as f64 + 1e-7);
    }
}
