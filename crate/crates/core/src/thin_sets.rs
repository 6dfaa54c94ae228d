//! Thin prime sets: membership, enumeration, exact counting and the error
//! term `E(u) = π_P(u)/δ − π(u)`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::ToPrimitive;

use crate::error::{domain, Error, Result};
use crate::highprec::{Enclosure, DEFAULT_PRECISION_BITS};
use crate::prime_engine::{is_prime_u64, PrimeTable};
use crate::random_model::sign_for_index;
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum SetKind {
    /// Primes whose index is `≡ b (mod k)`, with `b` normalized into `[1, k]`.
    IndexProgression { k: u64, b: u64 },
    /// Primes whose index lies in `{⌊κm + λ⌋ : m ∈ ℤ}`.
    BeattyIndex {
        kappa: Enclosure,
        lambda: Enclosure,
        precision_bits: u32,
    },
    /// Primes `p` with random sign `X_p` equal to `sign`.
    RandomSign { seed: u64, sign: Sign },
    Explicit { primes: Vec<u64> },
}

/// Nominal relative density δ.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Rational(Ratio<u64>),
    /// Irrational density, stored through its reciprocal.
    Real { inverse: f64 },
}

impl Density {
    pub fn value(&self) -> f64 {
        match self {
            Density::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            Density::Real { inverse } => 1.0 / inverse,
        }
    }

    /// 1/δ.
    pub fn inverse_f64(&self) -> f64 {
        match self {
            Density::Rational(r) => *r.denom() as f64 / *r.numer() as f64,
            Density::Real { inverse } => *inverse,
        }
    }

    pub fn inverse<T: Real>(&self) -> T {
        match self {
            Density::Rational(r) => T::from_u64(*r.denom()).unwrap() / T::from_u64(*r.numer()).unwrap(),
            Density::Real { inverse } => lit(*inverse),
        }
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Density::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Density::Real { inverse } => write!(f, "1/{inverse:.17e}"),
        }
    }
}

/// `|E(u)| <= constant * u^exponent` for every `u` beyond the truncation point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBound {
    pub constant: f64,
    pub exponent: f64,
    /// False when the constant is an empirical sup rather than a proof.
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetDescriptor {
    pub kind: SetKind,
    pub delta: Density,
    pub sigma0: f64,
    pub error_const: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorSample {
    pub x: u64,
    pub e: f64,
    /// max |E(u)| over u <= x
    pub running_sup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTermProfile {
    pub samples: Vec<ErrorSample>,
    pub sup_abs: f64,
    /// Least-squares slope of `log running_sup` against `log x`.
    pub fitted_exponent: Option<f64>,
}

impl SetDescriptor {
    pub fn index_progression(k: u64, b: i64) -> Result<Self> {
        if k == 0 {
            return domain("index progression needs k >= 1");
        }
        let b = (b - 1).rem_euclid(k as i64) as u64 + 1;
        // E(x) = k - b - ((π(x) - b) mod k) once π(x) >= b, and -π(x) before
        let sup = (b - 1).max(k - b) as f64;
        Ok(SetDescriptor {
            kind: SetKind::IndexProgression { k, b },
            delta: Density::Rational(Ratio::new(1, k)),
            sigma0: 0.0,
            error_const: Some(sup),
        })
    }

    pub fn beatty(kappa: Enclosure, lambda: Enclosure, precision_bits: u32) -> Result<Self> {
        let one = Enclosure::from_integer(1);
        if kappa.lo() < one.lo() {
            return domain("Beatty set needs kappa >= 1");
        }
        // |κ·#{m: 1 <= ⌊κm+λ⌋ <= N} − N| < κ
        let error_const = kappa.hi_f64();
        Ok(SetDescriptor {
            delta: Density::Real {
                inverse: kappa.mid_f64(),
            },
            kind: SetKind::BeattyIndex {
                kappa,
                lambda,
                precision_bits,
            },
            sigma0: 0.0,
            error_const: Some(error_const),
        })
    }

    pub fn beatty_str(kappa: &str, lambda: &str, precision_bits: Option<u32>) -> Result<Self> {
        let bits = precision_bits.unwrap_or(DEFAULT_PRECISION_BITS);
        SetDescriptor::beatty(
            Enclosure::parse(kappa, bits)?,
            Enclosure::parse(lambda, bits)?,
            bits,
        )
    }

    pub fn random_sign(seed: u64, sign: Sign) -> Self {
        SetDescriptor {
            kind: SetKind::RandomSign { seed, sign },
            delta: Density::Rational(Ratio::new(1, 2)),
            sigma0: 0.5,
            error_const: None,
        }
    }

    /// An explicit finite list with a caller-chosen nominal density.
    pub fn explicit(primes: Vec<u64>, delta: Ratio<u64>) -> Result<Self> {
        if primes.windows(2).any(|w| w[0] >= w[1]) {
            return domain("explicit prime list must be strictly ascending");
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime_u64(p)) {
            return Err(Error::NotPrime(p));
        }
        if *delta.numer() == 0 {
            return domain("density must be positive");
        }
        Ok(SetDescriptor {
            kind: SetKind::Explicit { primes },
            delta: Density::Rational(delta),
            sigma0: 1.0,
            error_const: None,
        })
    }

    pub fn inv_delta(&self) -> f64 {
        self.delta.inverse_f64()
    }

    /// Membership of the prime with 1-based index `index`.
    fn member_by_index(&self, p: u64, index: usize) -> Result<bool> {
        Ok(match &self.kind {
            SetKind::IndexProgression { k, b } => index as u64 % k == b % k,
            SetKind::BeattyIndex { kappa, lambda, .. } => {
                beatty_contains(kappa, lambda, index as u64)?
            }
            SetKind::RandomSign { seed, sign } => sign_for_index(*seed, index as u64) == *sign,
            SetKind::Explicit { primes } => primes.binary_search(&p).is_ok(),
        })
    }

    pub fn is_member(&self, p: u64, table: &PrimeTable) -> Result<bool> {
        let index = table.prime_index(p)?;
        self.member_by_index(p, index)
    }

    /// Membership flags for the first `n` primes of the table.
    pub fn membership_mask(&self, n: usize, table: &PrimeTable) -> Result<Vec<bool>> {
        if n > table.count() {
            return Err(Error::OutOfRange(format!(
                "{n} primes requested, table has {}",
                table.count()
            )));
        }
        let primes = &table.primes()[..n];
        Ok(match &self.kind {
            SetKind::IndexProgression { k, b } => {
                (1..=n as u64).map(|i| i % k == b % k).collect()
            }
            SetKind::BeattyIndex { kappa, lambda, .. } => {
                let mut mask = vec![false; n];
                for idx in beatty_elements(kappa, lambda, n as u64)? {
                    mask[idx as usize - 1] = true;
                }
                mask
            }
            SetKind::RandomSign { seed, sign } => (1..=n as u64)
                .map(|i| sign_for_index(*seed, i) == *sign)
                .collect(),
            SetKind::Explicit { primes: list } => {
                let mut mask = vec![false; n];
                for &q in list {
                    if let Ok(i) = primes.binary_search(&q) {
                        mask[i] = true;
                    }
                }
                mask
            }
        })
    }

    /// All members `<= x_max`, ascending.
    pub fn enumerate(&self, x_max: u64, table: &PrimeTable) -> Result<Vec<u64>> {
        let n = table.pi(x_max)?;
        let mask = self.membership_mask(n, table)?;
        Ok(table.primes()[..n]
            .iter()
            .zip(mask)
            .filter_map(|(&p, m)| m.then_some(p))
            .collect())
    }

    /// π_P(x), exact.
    pub fn count_up_to(&self, x: u64, table: &PrimeTable) -> Result<usize> {
        let n = table.pi(x)?;
        if let SetKind::IndexProgression { k, b } = self.kind {
            let n = n as u64;
            return Ok(if n >= b { ((n - b) / k + 1) as usize } else { 0 });
        }
        Ok(self.membership_mask(n, table)?.into_iter().filter(|&m| m).count())
    }

    pub fn error_term_profile(&self, grid: &[u64], table: &PrimeTable) -> Result<ErrorTermProfile> {
        if grid.is_empty() {
            return domain("error term profile needs a non-empty grid");
        }
        if grid.windows(2).any(|w| w[0] > w[1]) {
            return domain("grid must be ascending");
        }
        let x_max = *grid.last().unwrap();
        let n = table.pi(x_max)?;
        let mask = self.membership_mask(n, table)?;
        let primes = &table.primes()[..n];
        let inv = self.inv_delta();

        let mut samples = Vec::with_capacity(grid.len());
        let (mut i, mut in_set, mut running) = (0usize, 0u64, 0.0f64);
        for &x in grid {
            while i < n && primes[i] <= x {
                if mask[i] {
                    in_set += 1;
                }
                i += 1;
                running = running.max((inv * in_set as f64 - i as f64).abs());
            }
            let e = inv * in_set as f64 - i as f64;
            samples.push(ErrorSample { x, e, running_sup: running });
        }
        let sup_abs = samples.iter().fold(0.0f64, |m, s| m.max(s.e.abs()));
        let fitted_exponent = fitted_exponent(&samples);
        Ok(ErrorTermProfile {
            samples,
            sup_abs,
            fitted_exponent,
        })
    }

    /// Bound on `|E(u)|` used for tails beyond `x`. Proven constants are
    /// used when known; otherwise `max |E(p)| / p^σ0` over the primes `<= x`,
    /// flagged uncertified.
    pub fn tail_error_bound(&self, x: u64, table: &PrimeTable) -> Result<ErrorBound> {
        if let Some(c) = self.error_const {
            return Ok(ErrorBound {
                constant: c,
                exponent: 0.0,
                certified: true,
            });
        }
        let n = table.pi(x)?;
        let mask = self.membership_mask(n, table)?;
        let inv = self.inv_delta();
        let alpha = self.sigma0;
        let mut in_set = 0u64;
        let mut c = 0.0f64;
        for (i, (&p, m)) in table.primes()[..n].iter().zip(mask).enumerate() {
            if m {
                in_set += 1;
            }
            let e = (inv * in_set as f64 - (i + 1) as f64).abs();
            c = c.max(e / (p as f64).powf(alpha));
        }
        Ok(ErrorBound {
            constant: c,
            exponent: alpha,
            certified: false,
        })
    }

    pub fn contains_two(&self, table: &PrimeTable) -> Result<bool> {
        self.is_member(2, table)
    }

    /// Text export: `#` header lines, then one prime per line.
    pub fn export_text(&self, x_max: u64, table: &PrimeTable) -> Result<String> {
        let primes = self.enumerate(x_max, table)?;
        let mut out = String::new();
        for line in self.header_lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# xmax = {x_max}");
        let _ = writeln!(out, "# count = {}", primes.len());
        for p in primes {
            let _ = writeln!(out, "{p}");
        }
        Ok(out)
    }

    pub fn header_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        match &self.kind {
            SetKind::IndexProgression { k, b } => {
                lines.push("kind = index".into());
                lines.push(format!("k = {k}"));
                lines.push(format!("b = {b}"));
            }
            SetKind::BeattyIndex {
                kappa,
                lambda,
                precision_bits,
            } => {
                lines.push("kind = beatty".into());
                lines.push(format!("kappa = [{:.17e}, {:.17e}]", kappa.lo_f64(), kappa.hi_f64()));
                lines.push(format!("lambda = [{:.17e}, {:.17e}]", lambda.lo_f64(), lambda.hi_f64()));
                lines.push(format!("precision_bits = {precision_bits}"));
            }
            SetKind::RandomSign { seed, sign } => {
                lines.push("kind = random".into());
                lines.push(format!("seed = {seed}"));
                lines.push(format!("sign = {}", if *sign == Sign::Plus { "+" } else { "-" }));
            }
            SetKind::Explicit { primes } => {
                lines.push("kind = explicit".into());
                lines.push(format!("size = {}", primes.len()));
            }
        }
        lines.push(format!("delta = {}", self.delta));
        lines
    }
}

/// Least-squares slope of `log running_sup` against `log x`, over samples
/// with `running_sup >= 1`.
pub fn fitted_exponent(samples: &[ErrorSample]) -> Option<f64> {
    log_log_slope(
        samples
            .iter()
            .filter(|s| s.running_sup >= 1.0 && s.x > 1)
            .map(|s| ((s.x as f64).ln(), s.running_sup.ln())),
    )
}

fn log_log_slope(points: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Whether `n` lies in the Beatty sequence `{⌊κm + λ⌋ : m ∈ ℤ}`: true iff
/// `[(n − λ)/κ, (n + 1 − λ)/κ)` contains an integer.
pub fn beatty_contains(kappa: &Enclosure, lambda: &Enclosure, n: u64) -> Result<bool> {
    let n_enc = Enclosure::from_integer(n as i64);
    let lower = n_enc.sub(lambda).div(kappa)?;
    let upper = n_enc.add(&Enclosure::from_integer(1)).sub(lambda).div(kappa)?;
    let m = lower.ceil()?;
    upper_exceeds(&upper, &m)
}

fn upper_exceeds(upper: &Enclosure, m: &BigInt) -> Result<bool> {
    let m_r = num_rational::BigRational::from_integer(m.clone());
    if upper.lo() > &m_r {
        Ok(true)
    } else if upper.hi() <= &m_r {
        Ok(false)
    } else {
        Err(Error::Precision("Beatty interval endpoint ambiguous".into()))
    }
}

/// Elements of the Beatty sequence in `[1, n_max]`, ascending, computed by
/// walking `m`. A double-precision bracket decides most floors; ambiguous
/// ones fall back to the exact enclosure.
pub fn beatty_elements(kappa: &Enclosure, lambda: &Enclosure, n_max: u64) -> Result<Vec<u64>> {
    let (k_lo, k_hi) = (kappa.lo_f64(), kappa.hi_f64());
    let (l_lo, l_hi) = (lambda.lo_f64(), lambda.hi_f64());
    if !(k_lo.is_finite() && k_hi.is_finite() && l_lo.is_finite() && l_hi.is_finite()) {
        return domain("Beatty parameters must be finite");
    }
    let mut out = Vec::with_capacity((n_max as f64 / k_lo) as usize + 2);
    let start = ((1.0 - l_hi) / k_hi).floor() as i64 - 2;
    let eps = f64::EPSILON;
    let mut m = start;
    loop {
        let mf = m as f64;
        let (a, b) = if m >= 0 { (k_lo * mf, k_hi * mf) } else { (k_hi * mf, k_lo * mf) };
        let lo = a + l_lo;
        let hi = b + l_hi;
        let slack = 4.0 * eps * (a.abs() + l_lo.abs().max(l_hi.abs()) + 1.0);
        let (f_lo, f_hi) = ((lo - slack).floor(), (hi + slack).floor());
        let v = if f_lo == f_hi {
            f_lo as i64
        } else {
            kappa.mul_int(m).add(lambda).to_bigint_floor_i64()?
        };
        if v > n_max as i64 {
            break;
        }
        if v >= 1 {
            out.push(v as u64);
        }
        m += 1;
    }
    Ok(out)
}

/// Exact rational ⌊κm + λ⌋, used by tests and small queries.
pub fn beatty_term(kappa: &Enclosure, lambda: &Enclosure, m: i64) -> Result<i64> {
    kappa.mul_int(m).add(lambda).floor()?.to_i64().ok_or_else(|| Error::OutOfRange("term".into()))
}
