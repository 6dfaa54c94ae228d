//! Primitive quadratic characters `χ(n) = (D|n)` and signed prime counts.

use crate::error::{domain, Error, Result};
use crate::prime_engine::PrimeTable;
use crate::thin_sets::{ErrorSample, ErrorTermProfile, SetDescriptor};

/// Periods up to this size get a lookup table.
const TABLE_MAX_MODULUS: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterSpec {
    disc: i64,
    modulus: u64,
    values: Vec<i8>,
}

fn is_squarefree(mut m: u64) -> bool {
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// Whether `d` is the discriminant of a quadratic field. `1` is excluded:
/// it would give the principal character.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    let r = d.rem_euclid(4);
    if r == 1 {
        return is_squarefree(d.unsigned_abs());
    }
    if r == 0 {
        let m = d / 4;
        return matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs());
    }
    false
}

/// Jacobi symbol `(a|n)` for odd `n >= 1` and `0 <= a < n`.
fn jacobi(mut a: u64, mut n: u64) -> i8 {
    let mut result = 1i8;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Kronecker symbol `(d|n)` for `n >= 0`.
pub fn kronecker(d: i64, n: u64) -> i8 {
    if n == 0 {
        return if d.unsigned_abs() == 1 { 1 } else { 0 };
    }
    let v = n.trailing_zeros();
    if v > 0 && d % 2 == 0 {
        return 0;
    }
    let mut result = 1i8;
    if v % 2 == 1 && matches!(d.rem_euclid(8), 3 | 5) {
        result = -result;
    }
    let odd = n >> v;
    let a = d.rem_euclid(odd as i64) as u64;
    result * jacobi(a, odd)
}

impl CharacterSpec {
    pub fn new(disc: i64) -> Result<Self> {
        if !is_fundamental_discriminant(disc) {
            return domain(format!("{disc} is not a fundamental discriminant"));
        }
        let modulus = disc.unsigned_abs();
        let values = if modulus <= TABLE_MAX_MODULUS {
            (0..modulus).map(|n| kronecker(disc, n)).collect()
        } else {
            Vec::new()
        };
        Ok(CharacterSpec {
            disc,
            modulus,
            values,
        })
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    #[inline]
    pub fn chi(&self, n: u64) -> i8 {
        if self.values.is_empty() {
            kronecker(self.disc, n)
        } else {
            self.values[(n % self.modulus) as usize]
        }
    }

    /// Even characters have `χ(−1) = +1`, i.e. `D > 0`.
    pub fn is_even(&self) -> bool {
        self.disc > 0
    }
}

/// `π^−(x; χ)`: primes `p <= x` with `χ(p) = −1`.
pub fn pi_minus(x: u64, chi: &CharacterSpec, table: &PrimeTable) -> Result<usize> {
    Ok(table.primes_up_to(x)?.iter().filter(|&&p| chi.chi(p) == -1).count())
}

/// `π_P^−(x; χ)`: members `p <= x` of the set with `χ(p) = −1`.
pub fn pi_minus_thin(
    d: &SetDescriptor,
    x: u64,
    chi: &CharacterSpec,
    table: &PrimeTable,
) -> Result<usize> {
    let n = table.pi(x)?;
    let mask = d.membership_mask(n, table)?;
    Ok(table.primes()[..n]
        .iter()
        .zip(mask)
        .filter(|&(&p, m)| m && chi.chi(p) == -1)
        .count())
}

/// Counts of the set's members `<= x` split by `χ(p) ∈ {+1, −1, 0}`.
pub fn thin_character_split(
    d: &SetDescriptor,
    x: u64,
    chi: &CharacterSpec,
    table: &PrimeTable,
) -> Result<[usize; 3]> {
    let n = table.pi(x)?;
    let mask = d.membership_mask(n, table)?;
    let mut out = [0usize; 3];
    for (&p, m) in table.primes()[..n].iter().zip(mask) {
        if m {
            match chi.chi(p) {
                1 => out[0] += 1,
                -1 => out[1] += 1,
                _ => out[2] += 1,
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoEstimate {
    pub rho_hat: f64,
    pub residual_profile: ErrorTermProfile,
}

/// `ρ̂ = π_P^−(x_max)/π^−(x_max)` and the residuals `π_P^− − ρ̂ π^−` on the grid.
pub fn rho_estimate(
    d: &SetDescriptor,
    chi: &CharacterSpec,
    grid: &[u64],
    table: &PrimeTable,
) -> Result<RhoEstimate> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] > w[1]) {
        return domain("grid must be non-empty and ascending");
    }
    let x_max = *grid.last().unwrap();
    let n = table.pi(x_max)?;
    let mask = d.membership_mask(n, table)?;
    let primes = &table.primes()[..n];

    let mut counts = Vec::with_capacity(grid.len());
    let (mut i, mut all_minus, mut thin_minus) = (0usize, 0u64, 0u64);
    for &x in grid {
        while i < n && primes[i] <= x {
            if chi.chi(primes[i]) == -1 {
                all_minus += 1;
                if mask[i] {
                    thin_minus += 1;
                }
            }
            i += 1;
        }
        counts.push((x, thin_minus, all_minus));
    }
    if all_minus == 0 {
        return Err(Error::Degenerate("no primes with χ(p) = −1 up to x_max".into()));
    }
    let rho_hat = thin_minus as f64 / all_minus as f64;
    let mut sup = 0.0f64;
    let samples: Vec<ErrorSample> = counts
        .into_iter()
        .map(|(x, t, a)| {
            let e = t as f64 - rho_hat * a as f64;
            sup = sup.max(e.abs());
            ErrorSample {
                x,
                e,
                running_sup: sup,
            }
        })
        .collect();
    Ok(RhoEstimate {
        rho_hat,
        residual_profile: ErrorTermProfile {
            sup_abs: sup,
            fitted_exponent: crate::thin_sets::fitted_exponent(&samples),
            samples,
        },
    })
}

/// `#{p <= x : χ(p) = κ(p)}` with `κ(p) = +1` on the set and `−1` off it.
pub fn sign_agreement_count(
    d: &SetDescriptor,
    chi: &CharacterSpec,
    x: u64,
    table: &PrimeTable,
) -> Result<usize> {
    let n = table.pi(x)?;
    let mask = d.membership_mask(n, table)?;
    Ok(table.primes()[..n]
        .iter()
        .zip(mask)
        .filter(|&(&p, m)| chi.chi(p) == if m { 1 } else { -1 })
        .count())
}
