//! Seeded random signs `X_p`, iterated-logarithm statistics and the random
//! Euler product `L(s, X) = ∏ (1 − X_p p^{−s})^{−1}`.

use num_complex::Complex;

use crate::certified::{CertifiedValue, CompensatedSum};
use crate::error::{domain, Result};
use crate::prime_engine::PrimeTable;
use crate::scalar::{lit, Real};
use crate::thin_sets::Sign;
use crate::zeta::{neg_log1m, prime_power_neg};

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sign of the prime with 1-based index `index`: bit 63 of
/// `splitmix64(seed ^ index)`, 0 → `+1`.
#[inline]
pub fn sign_for_index(seed: u64, index: u64) -> Sign {
    if splitmix64(seed ^ index) >> 63 == 0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignSource {
    Splitmix { seed: u64 },
    /// Every prime gets the same sign.
    Constant(Sign),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignAssignment {
    pub source: SignSource,
}

impl SignAssignment {
    pub fn seeded(seed: u64) -> Self {
        SignAssignment {
            source: SignSource::Splitmix { seed },
        }
    }

    pub fn constant(sign: Sign) -> Self {
        SignAssignment {
            source: SignSource::Constant(sign),
        }
    }

    #[inline]
    pub fn sign_at_index(&self, index: u64) -> Sign {
        match self.source {
            SignSource::Splitmix { seed } => sign_for_index(seed, index),
            SignSource::Constant(s) => s,
        }
    }

    pub fn sign_of(&self, p: u64, table: &PrimeTable) -> Result<Sign> {
        Ok(self.sign_at_index(table.prime_index(p)? as u64))
    }

    /// Signs of the first `n` primes as `±1`.
    pub fn signs(&self, n: usize) -> Vec<i8> {
        (1..=n as u64).map(|i| self.sign_at_index(i).value() as i8).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LilPoint {
    pub x: u64,
    /// `Σ_{p <= x} X_p`
    pub s: i64,
    /// `S / sqrt(2 π(x) log log π(x))`
    pub t: f64,
}

pub fn lil_statistic(a: &SignAssignment, grid: &[u64], table: &PrimeTable) -> Result<Vec<LilPoint>> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return domain("grid must be ascending");
    }
    let mut out = Vec::with_capacity(grid.len());
    let (mut i, mut s) = (0usize, 0i64);
    for &x in grid {
        let n = table.pi(x)?;
        if n < 16 {
            return domain(format!("π({x}) = {n} < 16; log log π(x) is too small"));
        }
        while i < n {
            i += 1;
            s += a.sign_at_index(i as u64).value();
        }
        let nf = n as f64;
        let t = s as f64 / (2.0 * nf * nf.ln().ln()).sqrt();
        out.push(LilPoint { x, s, t });
    }
    Ok(out)
}

fn require_sigma_above_one<T: Real>(s: Complex<T>) -> Result<()> {
    if s.re > T::one() {
        Ok(())
    } else {
        domain("the Euler product needs Re(s) > 1")
    }
}

/// `Σ_{n > X} n^{−σ} / (1 − 2^{−σ})`, bounding `Σ_{p > X} |log(1 − ±p^{−s})|`.
pub(crate) fn euler_tail_bound<T: Real>(sigma: T, x: u64) -> T {
    let xf: T = lit(x as f64);
    let two: T = lit(2.0);
    xf.powf(T::one() - sigma) / ((sigma - T::one()) * (T::one() - two.powf(-sigma)))
}

/// `Σ_{p <= X} −log(1 − X_p p^{−s})` with the geometric tail bound.
pub fn log_l_random<T: Real>(
    a: &SignAssignment,
    s: Complex<T>,
    x: u64,
    table: &PrimeTable,
) -> Result<CertifiedValue<T>> {
    require_sigma_above_one(s)?;
    let primes = table.primes_up_to(x)?;
    let mut acc = CompensatedSum::new();
    for (i, &p) in primes.iter().enumerate() {
        let (z, rel) = prime_power_neg(p, s);
        let z = if a.sign_at_index(i as u64 + 1) == Sign::Plus { z } else { -z };
        let (v, e) = neg_log1m(z, rel);
        acc.add(v, e);
    }
    Ok(acc.finish(true).widen(euler_tail_bound(s.re, x)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck<T: Real> {
    pub residual: T,
    /// Rounding bound for the four truncated sums.
    pub rounding: T,
}

/// Residual of `L(s,X)² = ζ⁺(s) ζ⁻(2s) ζ⁻(s)^{−1}` in logarithmic form,
/// where `ζ^±(s) = ∏_{X_p = ±1} (1 − p^{−s})^{−2}`; every product is cut at
/// the same `X`, so the identity holds factor by factor.
pub fn identity_check<T: Real>(
    a: &SignAssignment,
    s: Complex<T>,
    x: u64,
    table: &PrimeTable,
) -> Result<IdentityCheck<T>> {
    require_sigma_above_one(s)?;
    let primes = table.primes_up_to(x)?;
    let two: T = lit(2.0);
    let (mut l, mut plus_s, mut minus_s, mut minus_2s) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for (i, &p) in primes.iter().enumerate() {
        let sign = a.sign_at_index(i as u64 + 1);
        let (z, rel) = prime_power_neg(p, s);
        let (z2, rel2) = prime_power_neg(p, s * two);
        let zs = if sign == Sign::Plus { z } else { -z };
        let (v, e) = neg_log1m(zs, rel);
        l.add(v, e);
        let (v1, e1) = neg_log1m(z, rel);
        match sign {
            Sign::Plus => plus_s.add(v1 * two, e1 * two),
            Sign::Minus => {
                minus_s.add(v1 * two, e1 * two);
                let (v2, e2) = neg_log1m(z2, rel2);
                minus_2s.add(v2 * two, e2 * two);
            }
        }
    }
    let combined = l.value() * two + minus_s.value() - minus_2s.value() - plus_s.value();
    let rounding = two * l.err() + plus_s.err() + minus_s.err() + minus_2s.err();
    Ok(IdentityCheck {
        residual: combined.norm(),
        rounding,
    })
}
