//! ζ(s) and L(s, χ) by Euler–Maclaurin, thin Euler products, the kernel
//! `f_P(s) = Σ_j f_{P,j}(s)/j`, and the two relation checks.
//!
//! Tails over primes `p > X` are split into an all-prime part, evaluated
//! through the Möbius inversion `P(w) = Σ_m μ(m)/m · log ζ(mw)`, and the
//! deviation `Σ_{p>X} w_p p^{−js}` with `w_p = (1/δ)·1_P(p) − 1`. The latter
//! is written as a Stieltjes integral against `E`, integrated by parts: the
//! boundary term `−X^{−js} E(X)` is known exactly and folded into the value,
//! and the remaining integral is bounded through `|E(u)| <= C u^α`.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::certified::{CertifiedValue, CompensatedSum};
use crate::characters::CharacterSpec;
use crate::error::{domain, Error, Result};
use crate::prime_engine::{sieve, PrimeTable};
use crate::random_model::euler_tail_bound;
use crate::scalar::{lit, Real};
use crate::thin_sets::{SetDescriptor, SetKind};

pub const DEFAULT_X: u64 = 10_000_000;
pub const DEFAULT_J: u32 = 64;
pub const DEFAULT_EM_TERMS: u32 = 8;
pub const MAX_EM_TERMS: u32 = 15;

/// Below this real part, `log ζ(s)` may leave the principal branch.
const PRINCIPAL_LOG_SIGMA: f64 = 1.05;
/// At or above this real part, `log ζ` and `log L` come from a short Euler product.
const DIRECT_PRODUCT_SIGMA: f64 = 8.0;
const SMALL_PRIME_LIMIT: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationParams {
    /// Prime cutoff.
    pub x: u64,
    /// Cutoff of the series over `j`.
    pub j: u32,
    /// Euler–Maclaurin split point.
    pub em_m: u64,
    /// Bernoulli correction terms.
    pub em_terms: u32,
}

impl TruncationParams {
    pub fn default_for<T: Real>(s: Complex<T>) -> Self {
        TruncationParams {
            x: DEFAULT_X,
            j: DEFAULT_J,
            em_m: default_em_m(s),
            em_terms: DEFAULT_EM_TERMS,
        }
    }

    pub fn with_x(mut self, x: u64) -> Self {
        self.x = x;
        self
    }

    pub fn with_j(mut self, j: u32) -> Self {
        self.j = j;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.x < 2 {
            return domain("X must be at least 2");
        }
        if self.j < 1 {
            return domain("J must be at least 1");
        }
        if self.em_m < 1 {
            return domain("em_M must be at least 1");
        }
        if !(1..=MAX_EM_TERMS).contains(&self.em_terms) {
            return domain(format!("em_terms must lie in 1..={MAX_EM_TERMS}"));
        }
        Ok(())
    }
}

fn default_em_m<T: Real>(s: Complex<T>) -> u64 {
    let twice = (2.0 * s.norm().to_f64().unwrap_or(0.0)).ceil();
    (twice as u64).max(64)
}

fn bernoulli_coefficients() -> &'static [f64; MAX_EM_TERMS as usize] {
    // B_{2r} / (2r)!
    static TABLE: OnceLock<[f64; MAX_EM_TERMS as usize]> = OnceLock::new();
    TABLE.get_or_init(|| {
        const B: [(f64, f64); MAX_EM_TERMS as usize] = [
            (1.0, 6.0),
            (-1.0, 30.0),
            (1.0, 42.0),
            (-1.0, 30.0),
            (5.0, 66.0),
            (-691.0, 2730.0),
            (7.0, 6.0),
            (-3617.0, 510.0),
            (43867.0, 798.0),
            (-174611.0, 330.0),
            (854513.0, 138.0),
            (-236364091.0, 2730.0),
            (8553103.0, 6.0),
            (-23749461029.0, 870.0),
            (8615841276005.0, 14322.0),
        ];
        let mut out = [0.0; MAX_EM_TERMS as usize];
        let mut fact = 1.0f64;
        for (r, (num, den)) in B.iter().enumerate() {
            let two_r = 2 * (r + 1);
            fact *= ((two_r - 1) * two_r) as f64;
            out[r] = num / den / fact;
        }
        out
    })
}

fn small_primes() -> &'static [u64] {
    static TABLE: OnceLock<PrimeTable> = OnceLock::new();
    TABLE
        .get_or_init(|| sieve(SMALL_PRIME_LIMIT).expect("small sieve"))
        .primes()
}

fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// Relative error bound for `n^{−s}` computed as `exp(−s ln n)`.
#[inline]
fn pow_rel_err<T: Real>(s_abs: T, ln_n: T) -> T {
    T::epsilon() * (lit::<T>(8.0) + lit::<T>(4.0) * s_abs * ln_n.abs())
}

/// `n^{−s}` together with a bound on its relative error.
#[inline]
pub(crate) fn prime_power_neg<T: Real>(n: u64, s: Complex<T>) -> (Complex<T>, T) {
    let ln_n: T = lit((n as f64).ln());
    ((-s * ln_n).exp(), pow_rel_err(s.norm(), ln_n))
}

/// `−log(1 − z)` for `|z| < 1`, with an absolute error bound given that `z`
/// carries relative error `rel`.
pub(crate) fn neg_log1m<T: Real>(z: Complex<T>, rel: T) -> (Complex<T>, T) {
    let eps = T::epsilon();
    let r = z.norm();
    let gap = T::one() - r;
    let sensitivity = (rel + lit::<T>(6.0) * eps) * r / gap;
    if r < lit(0.25) {
        let (mut term, mut acc, mut k) = (z, z, 1u32);
        let mut rk = r;
        loop {
            let rest = rk * r / (lit::<T>((k + 1) as f64) * gap);
            if rest <= eps * lit::<T>(1e-3) * acc.norm() || k >= 200 {
                return (acc, sensitivity + rest + lit::<T>(2.0) * eps * acc.norm());
            }
            k += 1;
            term = term * z;
            rk = rk * r;
            acc = acc + term / lit::<T>(k as f64);
        }
    }
    let v = -(one::<T>() - z).ln();
    (v, sensitivity + lit::<T>(4.0) * eps * (v.norm() + T::one() / gap))
}

/// `(e^w − 1)/w`, accurate near `w = 0`.
fn exprel<T: Real>(w: Complex<T>) -> Complex<T> {
    if w.norm() < lit(0.5) {
        let (mut term, mut acc) = (one::<T>(), one::<T>());
        for k in 2..40u32 {
            term = term * w / lit::<T>(k as f64);
            acc = acc + term;
            if term.norm() < T::epsilon() * lit::<T>(1e-3) {
                break;
            }
        }
        acc
    } else {
        (w.exp() - one::<T>()) / w
    }
}

/// Euler–Maclaurin tail `Σ_{k>=0} (a + k)^{−s}` for real `a > 0`, with or
/// without the integral term `a^{1−s}/(s−1)`. Returns the value and a bound
/// on remainder plus rounding.
fn em_tail<T: Real>(s: Complex<T>, a: T, terms: u32, with_pole: bool) -> Result<(Complex<T>, T)> {
    let sigma = s.re;
    let last = lit::<T>((2 * terms - 1) as f64);
    if !(sigma + last > T::zero()) {
        return domain("Euler–Maclaurin needs Re(s) > 1 − 2·em_terms");
    }
    let eps = T::epsilon();
    let ln_a = a.ln();
    let a_ms = (-s * ln_a).exp();
    let mut value = a_ms * lit::<T>(0.5);
    let mut abs = value.norm();
    if with_pole {
        let pole = a_ms * a / (s - one::<T>());
        value = value + pole;
        abs = abs + pole.norm();
    }
    let coeffs = bernoulli_coefficients();
    let mut poch = s;
    let mut apow = a_ms / a;
    let mut remainder = T::zero();
    for r in 1..=terms {
        let c: T = lit(coeffs[r as usize - 1]);
        let term = poch * apow * c;
        value = value + term;
        abs = abs + term.norm();
        let two_r: T = lit((2 * r) as f64);
        let next = poch * (s + two_r - T::one());
        if r == terms {
            remainder = c.abs() * next.norm() * apow.norm() / (sigma + two_r - T::one());
        }
        poch = next * (s + two_r);
        apow = apow / (a * a);
    }
    let rounding = (pow_rel_err(s.norm(), ln_a) + lit::<T>((4 * terms + 8) as f64) * eps) * abs;
    Ok((value, remainder + rounding))
}

/// ζ(s) by Euler–Maclaurin summation.
pub fn zeta_em<T: Real>(s: Complex<T>, params: &TruncationParams) -> Result<CertifiedValue<T>> {
    params.validate()?;
    if s == one::<T>() {
        return Err(Error::Pole);
    }
    let k = params.em_terms;
    if !(s.re > -lit::<T>((2 * k - 1) as f64)) {
        return domain(format!("zeta_em needs Re(s) > {}", -(2 * k as i64 - 1)));
    }
    if (params.em_m as f64) < s.norm().to_f64().unwrap_or(f64::INFINITY) {
        return domain("zeta_em needs em_M >= |s|");
    }
    let s_abs = s.norm();
    let mut acc = CompensatedSum::new();
    for n in 1..params.em_m {
        let ln_n: T = lit((n as f64).ln());
        let t = (-s * ln_n).exp();
        acc.add(t, t.norm() * pow_rel_err(s_abs, ln_n));
    }
    let (tail, tail_err) = em_tail(s, lit(params.em_m as f64), k, true)?;
    acc.add(tail, tail_err);
    Ok(acc.finish(true))
}

/// L(s, χ) for `Re(s) > 0`: a direct sum over whole periods up to at least
/// `n`, then the tail as `q^{−s} Σ_a χ(a) ζ(s, α_a)` with each Hurwitz zeta
/// by Euler–Maclaurin. The integral terms cancel to first order because
/// `Σ_a χ(a) = 0`; they are evaluated in a form that stays finite at `s = 1`.
pub fn dirichlet_l<T: Real>(chi: &CharacterSpec, s: Complex<T>, n: u64) -> Result<CertifiedValue<T>> {
    if !(s.re > T::zero()) {
        return domain("dirichlet_L needs Re(s) > 0");
    }
    let q = chi.modulus();
    let s_abs = s.norm();
    let min_blocks = (2.0 * s_abs.to_f64().unwrap_or(0.0)).ceil() as u64 + 8;
    let blocks = n.div_ceil(q).max(min_blocks);
    let mut direct = CompensatedSum::new();
    for m in 1..=blocks * q {
        let c = chi.chi(m);
        if c == 0 {
            continue;
        }
        let (t, rel) = prime_power_neg(m, s);
        let t = if c > 0 { t } else { -t };
        direct.add(t, t.norm() * rel);
    }

    let mf: T = lit(blocks as f64);
    let qf: T = lit(q as f64);
    let (m_ms, m_rel) = prime_power_neg(blocks, s);
    let m_pow = m_ms * mf;
    let mut tail = CompensatedSum::new();
    for a in 1..=q {
        let c = chi.chi(a);
        if c == 0 {
            continue;
        }
        let alpha = mf + lit::<T>(a as f64) / qf;
        let (h, h_err) = em_tail(s, alpha, DEFAULT_EM_TERMS, false)?;
        let l = (lit::<T>(a as f64) / (qf * mf)).ln_1p();
        let pole = m_pow * exprel((one::<T>() - s) * l) * (-l);
        let term = h + pole;
        let term = if c > 0 { term } else { -term };
        let pole_err = pole.norm() * (m_rel + lit::<T>(16.0) * T::epsilon() * (T::one() + s_abs));
        tail.add(term, h_err + pole_err);
    }
    let (q_ms, q_rel) = prime_power_neg(q, s);
    let tail_value = q_ms * tail.value();
    let tail_err = q_ms.norm() * tail.err() + tail_value.norm() * (q_rel + lit::<T>(2.0) * T::epsilon());
    let mut total = direct;
    total.add(tail_value, tail_err);
    Ok(total.finish(true))
}

fn log_certified<T: Real>(
    v: CertifiedValue<T>,
    reference: Option<(Complex<T>, T)>,
) -> Result<CertifiedValue<T>> {
    let r = v.value.norm();
    if !(v.err < r * lit(0.5)) {
        return Err(Error::Precision(
            "value too close to zero for a certified logarithm".into(),
        ));
    }
    let principal = v.value.ln();
    let err = -(T::one() - v.err / r).ln() + lit::<T>(4.0) * T::epsilon() * (principal.norm() + T::one());
    let Some((center, radius)) = reference else {
        return Ok(CertifiedValue::new(principal, err, v.certified));
    };
    let tau = T::PI() + T::PI();
    let k = ((center.im - principal.im) / tau).round();
    let value = principal + cplx(T::zero(), tau * k);
    Ok(CertifiedValue::new(value, err, v.certified && radius + err < T::PI()))
}

/// A character attached to prime sums: trivial, principal mod q, or
/// quadratic.
#[derive(Clone, Copy, Debug)]
enum Twist<'a> {
    Trivial,
    Principal(&'a CharacterSpec),
    Quadratic(&'a CharacterSpec),
}

impl<'a> Twist<'a> {
    fn power(self, m: u64) -> Twist<'a> {
        match self {
            Twist::Quadratic(c) if m.is_multiple_of(2) => Twist::Principal(c),
            other => other,
        }
    }

    #[inline]
    fn at(self, p: u64) -> i8 {
        match self {
            Twist::Trivial => 1,
            Twist::Principal(c) => (c.chi(p) != 0) as i8,
            Twist::Quadratic(c) => c.chi(p),
        }
    }
}

fn signed<T: Real>(z: Complex<T>, c: i8) -> Complex<T> {
    match c {
        1 => z,
        -1 => -z,
        _ => Complex::new(T::zero(), T::zero()),
    }
}

/// `log L(v, ψ)` with `ψ` trivial (ζ), principal or quadratic.
fn log_l_twist<T: Real>(
    v: Complex<T>,
    twist: Twist<'_>,
    reference: Option<(Complex<T>, T)>,
) -> Result<CertifiedValue<T>> {
    if v.re >= lit(DIRECT_PRODUCT_SIGMA) {
        let mut acc = CompensatedSum::new();
        for &p in small_primes() {
            let c = twist.at(p);
            if c == 0 {
                continue;
            }
            let (z, rel) = prime_power_neg(p, v);
            let (val, e) = neg_log1m(signed(z, c), rel);
            acc.add(val, e);
        }
        return Ok(acc.finish(true).widen(euler_tail_bound(v.re, SMALL_PRIME_LIMIT)));
    }
    let reference = if v.re >= lit(PRINCIPAL_LOG_SIGMA) { None } else { reference };
    let uncertain_branch = v.re < lit(PRINCIPAL_LOG_SIGMA) && reference.is_none();
    let base = match twist {
        Twist::Trivial | Twist::Principal(_) => zeta_em(v, &TruncationParams::default_for(v))?,
        Twist::Quadratic(c) => {
            let n = c.modulus() * default_em_m(v);
            dirichlet_l(c, v, n)?
        }
    };
    let mut out = log_certified(base, reference)?;
    if let Twist::Principal(c) = twist {
        for &p in small_primes().iter().take_while(|&&p| p <= c.modulus()) {
            if c.modulus() % p == 0 {
                let (z, rel) = prime_power_neg(p, v);
                let (val, e) = neg_log1m(z, rel);
                out = CertifiedValue::new(out.value - val, out.err + e, out.certified);
            }
        }
        if c.modulus() > SMALL_PRIME_LIMIT * SMALL_PRIME_LIMIT {
            return domain("principal characters are limited to moduli below 10^6");
        }
        let mut rest = c.modulus();
        for &p in small_primes() {
            while rest % p == 0 {
                rest /= p;
            }
        }
        if rest > 1 {
            let (z, rel) = prime_power_neg(rest, v);
            let (val, e) = neg_log1m(z, rel);
            out = CertifiedValue::new(out.value - val, out.err + e, out.certified);
        }
    }
    Ok(out.with_certified(!uncertain_branch))
}

fn mobius(mut m: u64) -> i8 {
    let mut result = 1i8;
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if m > 1 {
        -result
    } else {
        result
    }
}

/// `Σ_p ψ(p) p^{−w}` over all primes, by `Σ_m μ(m)/m · log L(mw, ψ^m)`.
fn prime_zeta<T: Real>(
    w: Complex<T>,
    twist: Twist<'_>,
    reference: Option<(Complex<T>, T)>,
) -> Result<CertifiedValue<T>> {
    let sigma = w.re;
    if !(sigma > T::one()) {
        return domain("prime zeta needs Re(w) > 1");
    }
    // |log L(v, ψ)| <= log ζ(Re v) <= 3·2^{−Re v} once Re v >= 2
    let two: T = lit(2.0);
    let target = T::epsilon() * lit::<T>(1e-3);
    let tail_after = |m: u64| {
        let mf: T = lit((m + 1) as f64);
        lit::<T>(3.0) * two.powf(-mf * sigma) / (mf * (T::one() - two.powf(-sigma)))
    };
    let mut m_max = (2.0 / sigma.to_f64().unwrap_or(1.0)).ceil() as u64;
    while tail_after(m_max) > target {
        m_max += 1;
    }
    let mut acc = CompensatedSum::new();
    let mut certified = true;
    for m in 1..=m_max {
        let mu = mobius(m);
        if mu == 0 {
            continue;
        }
        let r = if m == 1 { reference } else { None };
        let l = log_l_twist(w * lit::<T>(m as f64), twist.power(m), r)?;
        certified &= l.certified;
        let k = lit::<T>(mu as f64) / lit::<T>(m as f64);
        acc.add(l.value * k, l.err * k.abs());
    }
    Ok(acc.finish(certified).widen(tail_after(m_max)))
}

/// `Σ_{p > X} ψ(p)^j p^{−js}` for `j = 1, 2, …` until negligible.
struct TailSeries<T: Real> {
    terms: Vec<CertifiedValue<T>>,
    /// Bound on `Σ_{j > terms.len()} |term_j| / j`.
    rest: T,
}

impl<T: Real> TailSeries<T> {
    /// `Σ_{j <= j_max} term_j / j`.
    fn partial(&self, j_max: usize) -> CertifiedValue<T> {
        let mut acc = CompensatedSum::new();
        let mut certified = true;
        for (i, t) in self.terms.iter().take(j_max).enumerate() {
            let k: T = lit(1.0 / (i + 1) as f64);
            acc.add(t.value * k, t.err * k);
            certified &= t.certified;
        }
        let extra = if j_max > self.terms.len() { self.rest } else { T::zero() };
        acc.finish(certified).widen(extra)
    }

    fn total(&self) -> CertifiedValue<T> {
        self.partial(usize::MAX)
    }
}

/// `Σ_{p > X} p^{−σ'}`-type bound `X^{1−σ'}/(σ'−1)`.
fn prime_tail_bound<T: Real>(sigma: T, x: u64) -> T {
    let xf: T = lit(x as f64);
    xf.powf(T::one() - sigma) / (sigma - T::one())
}

fn truncated_prime_sum<T: Real>(w: Complex<T>, primes: &[u64], twist: Twist<'_>) -> CompensatedSum<T> {
    let mut acc = CompensatedSum::new();
    for &p in primes {
        let c = twist.at(p);
        if c == 0 {
            continue;
        }
        let (z, rel) = prime_power_neg(p, w);
        acc.add(signed(z, c), z.norm() * rel);
    }
    acc
}

fn truncated_log_product<T: Real>(s: Complex<T>, primes: &[u64], twist: Twist<'_>) -> CompensatedSum<T> {
    let mut acc = CompensatedSum::new();
    for &p in primes {
        let c = twist.at(p);
        if c == 0 {
            continue;
        }
        let (z, rel) = prime_power_neg(p, s);
        let (v, e) = neg_log1m(signed(z, c), rel);
        acc.add(v, e);
    }
    acc
}

/// `T_ψ(w) = Σ_{p > X} ψ(p) p^{−w}`.
fn prime_tail<T: Real>(w: Complex<T>, x: u64, primes: &[u64], twist: Twist<'_>) -> Result<CertifiedValue<T>> {
    let bound = prime_tail_bound(w.re, x);
    if bound < T::epsilon() {
        return Ok(CertifiedValue::new(Complex::new(T::zero(), T::zero()), bound, true));
    }
    let reference = if w.re < lit(PRINCIPAL_LOG_SIGMA) {
        let head = truncated_log_product(w, primes, twist);
        Some((head.value(), head.err() + euler_tail_bound(w.re, x)))
    } else {
        None
    };
    let full = prime_zeta(w, twist, reference)?;
    let head = truncated_prime_sum(w, primes, twist);
    Ok(CertifiedValue::new(
        full.value - head.value(),
        full.err + head.err() + lit::<T>(2.0) * T::epsilon() * full.value.norm(),
        full.certified,
    ))
}

/// All-prime tail of the Euler product for `ψ`, term by term in `j`.
fn tail_series<T: Real>(s: Complex<T>, x: u64, primes: &[u64], twist: Twist<'_>) -> Result<TailSeries<T>> {
    let mut terms = Vec::new();
    let xs: T = lit::<T>(x as f64).powf(-s.re);
    for j in 1u64.. {
        let jf: T = lit(j as f64);
        let w = s * jf;
        let bound = prime_tail_bound(w.re, x);
        if bound < T::epsilon() {
            let next: T = lit((j + 1) as f64);
            let rest = prime_tail_bound(s.re * next, x) / (next * (T::one() - xs));
            terms.push(CertifiedValue::new(Complex::new(T::zero(), T::zero()), bound, true));
            return Ok(TailSeries { terms, rest });
        }
        terms.push(prime_tail(w, x, primes, twist.power(j))?);
    }
    unreachable!()
}

/// `Σ_{p > X} p^{−s}` over all primes, by Möbius inversion of `log ζ`.
pub fn prime_sum_tail<T: Real>(s: Complex<T>, x: u64, table: &PrimeTable) -> Result<CertifiedValue<T>> {
    prime_tail(s, x, table.primes_up_to(x)?, Twist::Trivial)
}

/// `log ζ(s)` (principal branch for `Re(s) >= 1.05`).
pub fn log_zeta<T: Real>(s: Complex<T>, params: &TruncationParams) -> Result<CertifiedValue<T>> {
    let z = zeta_em(s, params)?;
    let certified = s.re >= lit(PRINCIPAL_LOG_SIGMA);
    Ok(log_certified(z, None)?.with_certified(certified))
}

/// `log ζ(s)` with the branch fixed by the truncated Euler product when
/// `Re(s)` is close to 1.
fn log_zeta_anchored<T: Real>(
    s: Complex<T>,
    params: &TruncationParams,
    primes: &[u64],
) -> Result<CertifiedValue<T>> {
    if s.re >= lit(PRINCIPAL_LOG_SIGMA) {
        return log_certified(zeta_em(s, params)?, None);
    }
    let head = truncated_log_product(s, primes, Twist::Trivial);
    let radius = head.err() + euler_tail_bound(s.re, params.x);
    log_certified(zeta_em(s, params)?, Some((head.value(), radius)))
}

/// Everything about the set needed for prime sums up to `X`.
struct ThinData<'a, T: Real> {
    primes: &'a [u64],
    mask: Vec<bool>,
    inv: T,
    /// `E(X)`
    e_x: T,
    e_bound: DevBound<T>,
    /// `w_p = 0` for every prime (the set of all primes).
    zero_weights: bool,
}

/// `|E(u)| <= c u^α` for `u > X`.
#[derive(Clone, Copy, Debug)]
struct DevBound<T: Real> {
    c: T,
    alpha: T,
    certified: bool,
}

impl<T: Real> DevBound<T> {
    /// Bound on `|js ∫_X^∞ u^{−js−1} E(u) du| / j`.
    fn single(&self, s: Complex<T>, x: u64, j: u64) -> T {
        let jf: T = lit(j as f64);
        let xf: T = lit(x as f64);
        self.c * s.norm() * xf.powf(self.alpha - jf * s.re) / (jf * s.re - self.alpha)
    }

    /// `Σ_{j >= j0}` of [`DevBound::single`], in closed form.
    fn from(&self, s: Complex<T>, x: u64, j0: u64) -> T {
        if self.c == T::zero() {
            return T::zero();
        }
        let xf: T = lit(x as f64);
        self.single(s, x, j0) / (T::one() - xf.powf(-s.re))
    }

    /// `Σ_{j = 1..=j_max}` of [`DevBound::single`].
    fn up_to(&self, s: Complex<T>, x: u64, j_max: u64) -> T {
        if self.c == T::zero() {
            return T::zero();
        }
        let mut total = T::zero();
        for j in 1..=j_max {
            let t = self.single(s, x, j);
            total = total + t;
            if t < total * T::epsilon() * lit::<T>(1e-3) {
                return total + self.from(s, x, j + 1);
            }
        }
        total
    }
}

fn thin_data<'a, T: Real>(d: &SetDescriptor, x: u64, table: &'a PrimeTable) -> Result<ThinData<'a, T>> {
    let primes = table.primes_up_to(x)?;
    let mask = d.membership_mask(primes.len(), table)?;
    let inv: T = d.delta.inverse();
    let count = mask.iter().filter(|&&m| m).count();
    let e_x = inv * lit::<T>(count as f64) - lit::<T>(primes.len() as f64);
    let b = d.tail_error_bound(x, table)?;
    Ok(ThinData {
        primes,
        inv,
        e_x,
        e_bound: DevBound {
            c: lit(b.constant),
            alpha: lit(b.exponent),
            certified: b.certified,
        },
        zero_weights: d.error_const == Some(0.0),
        mask,
    })
}

impl<'a, T: Real> ThinData<'a, T> {
    #[inline]
    fn weight(&self, i: usize) -> T {
        if self.mask[i] {
            self.inv - T::one()
        } else {
            -T::one()
        }
    }

    /// Bound and endpoint value for `G(u) = Σ_{p <= u} w_p χ(p)`, measured
    /// on the primes up to `X` with exponent `max(σ0, 1/2)`.
    fn twisted(&self, chi: &CharacterSpec, sigma0: f64) -> (DevBound<T>, T) {
        if self.zero_weights {
            let zero = DevBound {
                c: T::zero(),
                alpha: T::zero(),
                certified: true,
            };
            return (zero, T::zero());
        }
        let alpha = sigma0.max(0.5);
        let inv = self.inv.to_f64().unwrap_or(f64::NAN);
        let (mut g, mut c) = (0.0f64, 0.0f64);
        for (i, &p) in self.primes.iter().enumerate() {
            let w = if self.mask[i] { inv - 1.0 } else { -1.0 };
            g += w * chi.chi(p) as f64;
            c = c.max(g.abs() / (p as f64).powf(alpha));
        }
        let bound = DevBound {
            c: lit(c),
            alpha: lit(alpha),
            certified: false,
        };
        (bound, lit(g))
    }
}

fn require_sigma_above_one<T: Real>(s: Complex<T>) -> Result<()> {
    if s.re > T::one() {
        Ok(())
    } else {
        domain("the Euler product needs Re(s) > 1")
    }
}

/// Pieces of a completed thin log-product.
struct Completed<T: Real> {
    value: Complex<T>,
    /// Rounding and truncation of everything computed explicitly.
    numeric: T,
    certified: bool,
}

/// Finite Euler product for an explicit list: exact up to rounding once
/// every listed prime is `<= X`.
fn explicit_log_product<T: Real>(
    list: &[u64],
    inv: T,
    s: Complex<T>,
    x: u64,
    chi: Option<&CharacterSpec>,
) -> CertifiedValue<T> {
    let mut acc = CompensatedSum::new();
    let mut beyond = T::zero();
    for &p in list {
        let c = chi.map_or(1, |c| c.chi(p));
        if c == 0 {
            continue;
        }
        let (z, rel) = prime_power_neg(p, s);
        let (v, e) = neg_log1m(signed(z, c), rel);
        if p <= x {
            acc.add(v * inv, e * inv);
        } else {
            beyond = beyond + (v.norm() + e) * inv;
        }
    }
    acc.finish(true).widen(beyond)
}

/// `(1/δ) Σ_{p∈P} −log(1 − ψ(p) p^{−s})`: truncated sum + all-prime tail +
/// boundary term; the deviation integral is left to the caller.
fn completed_thin_log<T: Real>(
    td: &ThinData<'_, T>,
    s: Complex<T>,
    x: u64,
    chi: Option<(&CharacterSpec, T)>,
) -> Result<Completed<T>> {
    let twist = chi.map_or(Twist::Trivial, |(c, _)| Twist::Quadratic(c));
    let mut head = CompensatedSum::new();
    for (i, &p) in td.primes.iter().enumerate() {
        if !td.mask[i] {
            continue;
        }
        let c = twist.at(p);
        if c == 0 {
            continue;
        }
        let (z, rel) = prime_power_neg(p, s);
        let (v, e) = neg_log1m(signed(z, c), rel);
        head.add(v * td.inv, e * td.inv);
    }
    let tails = tail_series(s, x, td.primes, twist)?.total();

    // boundary −Σ_j X^{−js} E_j(X)/j with E_j = E (ψ^j principal) or G (ψ^j = χ)
    let (y, y_rel) = prime_power_neg(x, s);
    let (l1, e1) = neg_log1m(y, y_rel);
    let (boundary, b_err) = match chi {
        None => (-l1 * td.e_x, e1 * td.e_x.abs()),
        Some((_, g_x)) => {
            let (l2, e2) = neg_log1m(-y, y_rel);
            let (l3, e3) = neg_log1m(y * y, y_rel * lit(2.0));
            let half: T = lit(0.5);
            // atanh(y) = (l1 − l2)/2,  log(1 − y²) = −l3
            let v = -(l1 - l2) * half * g_x - l3 * half * td.e_x;
            (v, (e1 + e2) * half * g_x.abs() + e3 * half * td.e_x.abs())
        }
    };
    let value = head.value() + tails.value + boundary;
    let numeric = head.err() + tails.err + b_err + lit::<T>(4.0) * T::epsilon() * value.norm();
    Ok(Completed {
        value,
        numeric,
        certified: tails.certified,
    })
}

/// `log ζ_P(s) = (1/δ) Σ_{p∈P} −log(1 − p^{−s})` for `Re(s) > 1`.
///
/// The product is cut at `X`; the primes beyond contribute the all-prime
/// tail plus a deviation term bounded through `|E(u)| <= C u^α`, so the
/// reported error is the deviation bound rather than the much larger size
/// of the whole tail. Explicit lists are finite and summed exactly.
pub fn log_euler_product_thin<T: Real>(
    d: &SetDescriptor,
    s: Complex<T>,
    x: u64,
    table: &PrimeTable,
) -> Result<CertifiedValue<T>> {
    require_sigma_above_one(s)?;
    if let SetKind::Explicit { primes } = &d.kind {
        table.primes_up_to(x)?;
        return Ok(explicit_log_product(primes, d.delta.inverse(), s, x, None));
    }
    let td = thin_data::<T>(d, x, table)?;
    let c = completed_thin_log(&td, s, x, None)?;
    let dev = td.e_bound.from(s, x, 1);
    Ok(CertifiedValue::new(c.value, c.numeric + dev, c.certified && td.e_bound.certified))
}

/// `log L_P(s, χ) = (1/δ) Σ_{p∈P} −log(1 − χ(p) p^{−s})` for `Re(s) > 1`,
/// completed like [`log_euler_product_thin`]. Odd powers of `χ` use the
/// twisted counting function `G`, whose bound is empirical.
pub fn log_l_thin<T: Real>(
    d: &SetDescriptor,
    chi: &CharacterSpec,
    s: Complex<T>,
    x: u64,
    table: &PrimeTable,
) -> Result<CertifiedValue<T>> {
    require_sigma_above_one(s)?;
    if let SetKind::Explicit { primes } = &d.kind {
        table.primes_up_to(x)?;
        return Ok(explicit_log_product(primes, d.delta.inverse(), s, x, Some(chi)));
    }
    if x <= chi.modulus() {
        return domain("X must exceed the modulus of the character");
    }
    let td = thin_data::<T>(d, x, table)?;
    let (g_bound, g_x) = td.twisted(chi, d.sigma0);
    let c = completed_thin_log(&td, s, x, Some((chi, g_x)))?;
    let dev = td.e_bound.from(s, x, 1) + g_bound.from(s, x, 1);
    let certified = c.certified && td.e_bound.certified && g_bound.certified;
    Ok(CertifiedValue::new(c.value, c.numeric + dev, certified))
}

/// `Σ_{j>J} (1/j)·c·(2^{−jσ} + 2^{1−jσ}/(jσ−1))`, summed as a geometric series.
fn j_tail_bound<T: Real>(c: T, sigma: T, j: u32) -> T {
    let two: T = lit(2.0);
    let next: T = lit((j + 1) as f64);
    let first = two.powf(-next * sigma);
    c / next * first / (T::one() - two.powf(-sigma)) * (T::one() + two / (next * sigma - T::one()))
}

/// Kernel value with its error split by origin.
struct Kernel<T: Real> {
    value: Complex<T>,
    numeric: T,
    /// Deviation integrals for `j <= J`.
    x_tail: T,
    /// Terms `j > J`.
    j_tail: T,
    certified: bool,
}

impl<T: Real> Kernel<T> {
    fn certified_value(&self) -> CertifiedValue<T> {
        CertifiedValue::new(self.value, self.numeric + self.x_tail + self.j_tail, self.certified)
    }
}

/// `Σ_{j=1..J} z^j / j` with early exit once the remaining terms are below
/// rounding; returns the sum, the number of terms used and the dropped mass.
#[inline]
fn log_series_partial<T: Real>(z: Complex<T>, j_max: u32) -> (Complex<T>, u32, T) {
    let r = z.norm();
    let gap = T::one() - r;
    let (mut zj, mut g, mut rj) = (z, z, r);
    let mut j = 1u32;
    while j < j_max {
        let rest = rj * r / (lit::<T>((j + 1) as f64) * gap);
        if rest <= T::epsilon() * lit::<T>(1e-3) * g.norm() {
            return (g, j, rest);
        }
        j += 1;
        zj = zj * z;
        rj = rj * r;
        g = g + zj / lit::<T>(j as f64);
    }
    (g, j, T::zero())
}

fn kernel<T: Real>(d: &SetDescriptor, s: Complex<T>, params: &TruncationParams, table: &PrimeTable) -> Result<Kernel<T>> {
    params.validate()?;
    let sigma = s.re;
    if !(sigma > lit(d.sigma0)) {
        return domain(format!("f_P needs Re(s) > σ0 = {}", d.sigma0));
    }
    let jf: T = lit((params.j + 1) as f64);
    if !(jf * sigma > T::one()) {
        return domain(format!(
            "(J+1)·Re(s) must exceed 1; raise J above {}",
            (1.0 / sigma.to_f64().unwrap_or(1.0)).ceil() as i64 - 1
        ));
    }
    let x = params.x;
    let td = thin_data::<T>(d, x, table)?;
    if !(sigma > td.e_bound.alpha) {
        return domain("Re(s) must exceed the exponent of the error-term bound");
    }
    let eps = T::epsilon();
    let mut acc = CompensatedSum::new();
    if !td.zero_weights {
        for (i, &p) in td.primes.iter().enumerate() {
            let w = td.weight(i);
            let (z, rel) = prime_power_neg(p, s);
            let (g, used, dropped) = log_series_partial(z, params.j);
            let r = z.norm();
            let series_err = (rel + lit::<T>(2.0) * eps * lit::<T>(used as f64 + 1.0)) * r / (T::one() - r) + dropped;
            acc.add(g * w, series_err * w.abs());
        }
        // boundary terms −X^{−js} E(X) for j <= J
        let (y, y_rel) = prime_power_neg(x, s);
        let (g, used, dropped) = log_series_partial(y, params.j);
        let r = y.norm();
        let err = (y_rel + lit::<T>(2.0) * eps * lit::<T>(used as f64 + 1.0)) * r / (T::one() - r) + dropped;
        acc.add(-g * td.e_x, err * td.e_x.abs());
    }
    let inv = td.inv;
    Ok(Kernel {
        value: acc.value(),
        numeric: acc.err(),
        x_tail: td.e_bound.up_to(s, x, params.j as u64),
        j_tail: j_tail_bound(T::one() + inv, sigma, params.j),
        certified: td.e_bound.certified,
    })
}

/// `f_{P,j}(s) = Σ_p w_p p^{−js}` truncated at `X`, with the integration by
/// parts boundary term at `X` included, so the error is the deviation
/// integral `|js| ∫_X^∞ u^{−jσ−1} |E(u)| du` plus rounding.
pub fn f_pj<T: Real>(d: &SetDescriptor, j: u32, s: Complex<T>, x: u64, table: &PrimeTable) -> Result<CertifiedValue<T>> {
    if j == 0 {
        return domain("j must be at least 1");
    }
    let js = s * lit::<T>(j as f64);
    if !(js.re > lit(d.sigma0)) {
        return domain(format!("f_P,j diverges unless j·Re(s) > σ0 = {}", d.sigma0));
    }
    let td = thin_data::<T>(d, x, table)?;
    if !(js.re > td.e_bound.alpha) {
        return domain("j·Re(s) must exceed the exponent of the error-term bound");
    }
    let mut acc = CompensatedSum::new();
    if !td.zero_weights {
        for (i, &p) in td.primes.iter().enumerate() {
            let w = td.weight(i);
            let (z, rel) = prime_power_neg(p, js);
            acc.add(z * w, z.norm() * rel * w.abs());
        }
        let (y, y_rel) = prime_power_neg(x, js);
        acc.add(-y * td.e_x, y.norm() * y_rel * td.e_x.abs());
    }
    let dev = td.e_bound.single(js, x, 1);
    Ok(acc.finish(td.e_bound.certified).widen(dev))
}

/// `f_P(s) = Σ_{j<=J} f_{P,j}(s)/j` plus the bound for `j > J`.
pub fn f_p<T: Real>(d: &SetDescriptor, s: Complex<T>, params: &TruncationParams, table: &PrimeTable) -> Result<CertifiedValue<T>> {
    Ok(kernel(d, s, params, table)?.certified_value())
}

/// `ζ_P(s) = ζ(s) exp(f_P(s))`, valid for `Re(s) > σ0`, `s ≠ 1`.
pub fn zeta_thin<T: Real>(d: &SetDescriptor, s: Complex<T>, params: &TruncationParams, table: &PrimeTable) -> Result<CertifiedValue<T>> {
    if s == one::<T>() {
        return Err(Error::Pole);
    }
    let f = f_p(d, s, params, table)?;
    let z = zeta_em(s, params)?;
    Ok(z.mul(&f.exp()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelationCheck<T: Real> {
    /// `|log ζ_P(s) − log ζ(s) − f_P(s)|`
    pub residual: T,
    /// Bound on the residual: every error that does not cancel between the
    /// two sides (rounding, truncation in `j`, the deviation for `j > J`).
    pub budget: T,
    /// Sum of the full error bounds of the three quantities.
    pub value_budget: T,
    /// Whether `value_budget` rests only on proven inputs.
    pub certified: bool,
    pub pass: bool,
    pub lhs: CertifiedValue<T>,
    pub rhs: CertifiedValue<T>,
}

/// Compares the completed thin Euler product with `log ζ(s) + f_P(s)` for
/// `Re(s) > 1`. The two sides share the primes `<= X` and the same
/// deviation beyond `X`, which cancels up to the terms `j > J`.
pub fn relation_check<T: Real>(
    d: &SetDescriptor,
    s: Complex<T>,
    params: &TruncationParams,
    table: &PrimeTable,
) -> Result<RelationCheck<T>> {
    require_sigma_above_one(s)?;
    params.validate()?;
    if let SetKind::Explicit { .. } = d.kind {
        return domain("relation checks need an infinite set; explicit lists are finite products");
    }
    let x = params.x;
    let td = thin_data::<T>(d, x, table)?;
    let lhs_parts = completed_thin_log(&td, s, x, None)?;
    let log_z = log_zeta_anchored(s, params, td.primes)?;
    let k = kernel(d, s, params, table)?;

    let lhs_dev = td.e_bound.from(s, x, 1);
    let lhs = CertifiedValue::new(
        lhs_parts.value,
        lhs_parts.numeric + lhs_dev,
        lhs_parts.certified && td.e_bound.certified,
    );
    let kv = k.certified_value();
    let rhs = CertifiedValue::new(log_z.value + k.value, log_z.err + kv.err, log_z.certified && kv.certified);

    let residual = (lhs.value - rhs.value).norm();
    let combine = lit::<T>(4.0) * T::epsilon() * (lhs.value.norm() + rhs.value.norm());
    let budget = lhs_parts.numeric
        + log_z.err
        + k.numeric
        + k.j_tail
        + td.e_bound.from(s, x, params.j as u64 + 1)
        + combine;
    let value_budget = lhs.err + rhs.err + combine;
    Ok(RelationCheck {
        residual,
        budget,
        value_budget,
        certified: lhs.certified && rhs.certified,
        pass: residual <= budget,
        lhs,
        rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticCheck<T: Real> {
    /// `|B(log ζ + log L_P) − A(log ζ + log L) − Σ_j f_{P,j}(s,χ)/j|`
    pub residual: T,
    pub budget: T,
    pub value_budget: T,
    /// False: the twisted error term has only an empirical bound.
    pub certified: bool,
    pub pass: bool,
    /// `π_P^−(X)/π^−(X)`
    pub rho_hat: f64,
    /// `ρ̂/δ` differs from `A/B` by more than 5%.
    pub model_mismatch: bool,
    /// Largest `|f_{P,j}(s,χ)|` difference between the direct assembly
    /// `f1 + (−1)^j f2 + f4` and the case split through `f_{P,j}(s)` and `f3`.
    pub case_split_gap: T,
    pub case_split_bound: T,
}

/// Per-`j` prime sums split by membership and `χ(p)`.
struct CategorySums<T: Real> {
    /// `[in_set][χ + 1]`
    sums: Vec<[[CompensatedSum<T>; 3]; 2]>,
    dropped: T,
}

fn category_sums<T: Real>(td: &ThinData<'_, T>, chi: &CharacterSpec, s: Complex<T>, j_max: u32) -> CategorySums<T> {
    let eps = T::epsilon();
    let mut sums = vec![[[CompensatedSum::new(); 3]; 2]; j_max as usize];
    let mut dropped = T::zero();
    for (i, &p) in td.primes.iter().enumerate() {
        let (z, rel) = prime_power_neg(p, s);
        let r = z.norm();
        let (m, c) = (td.mask[i] as usize, (chi.chi(p) + 1) as usize);
        let mut zj = z;
        let mut rj = r;
        for j in 1..=j_max {
            let jf: T = lit(j as f64);
            sums[j as usize - 1][m][c].add(zj, rj * jf * (rel + lit::<T>(2.0) * eps));
            let rest = rj * r / (T::one() - r);
            if j < j_max && rest <= eps * lit::<T>(1e-3) * r {
                dropped = dropped + rest;
                break;
            }
            zj = zj * z;
            rj = rj * r;
        }
    }
    CategorySums { sums, dropped }
}

/// Checks `B(log ζ + log L_P) = A(log ζ + log L) + Σ_j f_{P,j}(s,χ)/j` for
/// `Re(s) > 1`, with `f_{P,j}(s,χ)` assembled from explicit prime sums.
#[allow(clippy::too_many_arguments)]
pub fn quadratic_relation_check<T: Real>(
    d: &SetDescriptor,
    chi: &CharacterSpec,
    a: u64,
    b: u64,
    s: Complex<T>,
    params: &TruncationParams,
    table: &PrimeTable,
) -> Result<QuadraticCheck<T>> {
    require_sigma_above_one(s)?;
    params.validate()?;
    if a == 0 || b == 0 {
        return domain("A and B must be positive");
    }
    if let SetKind::Explicit { .. } = d.kind {
        return domain("relation checks need an infinite set; explicit lists are finite products");
    }
    let x = params.x;
    if x <= chi.modulus() {
        return domain("X must exceed the modulus of the character");
    }
    let eps = T::epsilon();
    let (af, bf): (T, T) = (lit(a as f64), lit(b as f64));
    let td = thin_data::<T>(d, x, table)?;
    let inv = td.inv;
    let (g_bound, g_x) = td.twisted(chi, d.sigma0);

    let log_z = log_zeta_anchored(s, params, td.primes)?;
    let l_reference = if s.re < lit(PRINCIPAL_LOG_SIGMA) {
        let head = truncated_log_product(s, td.primes, Twist::Quadratic(chi));
        Some((head.value(), head.err() + euler_tail_bound(s.re, x)))
    } else {
        None
    };
    let log_l = log_l_twist(s, Twist::Quadratic(chi), l_reference)?;
    let thin = completed_thin_log(&td, s, x, Some((chi, g_x)))?;

    let lhs_value = (log_z.value + thin.value) * bf;
    let lhs_numeric = (log_z.err + thin.numeric) * bf;

    // f_{P,j}(s,χ) from explicit prime sums
    let j_max = params.j;
    let cats = category_sums(&td, chi, s, j_max);
    let tails_chi = tail_series(s, x, td.primes, Twist::Quadratic(chi))?;
    let tails_all = tail_series(s, x, td.primes, Twist::Trivial)?;
    let (y, y_rel) = prime_power_neg(x, s);

    let coef_max = bf * inv + af + lit::<T>(2.0) * (bf - af).abs();
    let mut f_sum = CompensatedSum::new();
    let mut boundary = CompensatedSum::new();
    let mut gap = T::zero();
    let mut gap_bound = T::zero();
    let mut yj = one::<T>();
    for j in 1..=j_max as usize {
        let cs = &cats.sums[j - 1];
        let v = |m: usize, c: usize| cs[m][c].value();
        let cat_err: T = cs.iter().flatten().fold(T::zero(), |acc, c| acc + c.err());
        let cat_abs: T = cs.iter().flatten().fold(T::zero(), |acc, c| acc + c.abs_sum());
        // index 0: χ = −1, 1: χ = 0, 2: χ = +1
        let piece = |c: usize| (v(1, c) * inv) * bf - (v(0, c) + v(1, c)) * af;
        let all = (0..3).fold(Complex::new(T::zero(), T::zero()), |acc, c| acc + v(0, c) + v(1, c));
        let thin_all = (0..3).fold(Complex::new(T::zero(), T::zero()), |acc, c| acc + v(1, c));
        let (f1, f2, f3) = (piece(2), piece(0), piece(1));
        let f4 = all * (bf - af);
        let odd = j % 2 == 1;
        let direct = if odd { f1 - f2 + f4 } else { f1 + f2 + f4 };
        let f_pj = thin_all * inv - all;
        let big_s = f_pj * bf + all * (lit::<T>(2.0) * (bf - af));
        let split = if odd { big_s - f2 * lit::<T>(2.0) - f3 } else { big_s - f3 };
        gap = gap.max((direct - split).norm());
        let piece_err = coef_max * (cat_err + lit::<T>(8.0) * eps * cat_abs);
        gap_bound = gap_bound.max(lit::<T>(2.0) * piece_err);

        let jf: T = lit(j as f64);
        f_sum.add(direct / jf, piece_err / jf);

        yj = yj * y;
        let e_j = if odd { g_x } else { td.e_x };
        let bterm = -yj * (e_j * bf / jf);
        boundary.add(bterm, bterm.norm() * (y_rel + lit::<T>(2.0) * eps) * jf);
    }
    let f_err_dropped = coef_max * cats.dropped;

    let tail_chi = tails_chi.partial(j_max as usize);
    let tail_all = tails_all.partial(j_max as usize);
    let correction = (tail_chi.value + tail_all.value) * (bf - af);
    let correction_err = (tail_chi.err + tail_all.err) * (bf - af).abs();

    let rhs_value = (log_z.value + log_l.value) * af + f_sum.value() + boundary.value() + correction;
    let rhs_numeric = (log_z.err + log_l.err) * af + f_sum.err() + f_err_dropped + boundary.err() + correction_err;

    let residual = (lhs_value - rhs_value).norm();
    let combine = lit::<T>(8.0) * eps * (lhs_value.norm() + rhs_value.norm());
    let sigma = s.re;
    let j_next = j_max as u64 + 1;
    let unmatched_dev = bf * (td.e_bound.from(s, x, j_next) + g_bound.from(s, x, j_next));
    let budget = lhs_numeric + rhs_numeric + unmatched_dev + j_tail_bound(coef_max, sigma, j_max) + combine;
    let full_dev = bf * (td.e_bound.from(s, x, 1) + g_bound.from(s, x, 1));
    let value_budget = budget + lit::<T>(2.0) * full_dev;

    let mut minus_all = 0usize;
    let mut minus_thin = 0usize;
    for (i, &p) in td.primes.iter().enumerate() {
        if chi.chi(p) == -1 {
            minus_all += 1;
            minus_thin += td.mask[i] as usize;
        }
    }
    if minus_all == 0 {
        return Err(Error::Degenerate("no primes with χ(p) = −1 up to X".into()));
    }
    let rho_hat = minus_thin as f64 / minus_all as f64;
    let ratio = a as f64 / b as f64;
    let model_mismatch = ((rho_hat * d.inv_delta() - ratio) / ratio).abs() > 0.05;

    Ok(QuadraticCheck {
        residual,
        budget,
        value_budget,
        certified: log_z.certified && log_l.certified && thin.certified && td.e_bound.certified && g_bound.certified,
        pass: residual <= budget,
        rho_hat,
        model_mismatch,
        case_split_gap: gap,
        case_split_bound: gap_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prime_engine::sieve;
    use num_rational::Ratio;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn params(s: Complex<f64>) -> TruncationParams {
        TruncationParams::default_for(s)
    }

    #[test]
    fn zeta_special_values() {
        let z2 = zeta_em(c(2.0, 0.0), &params(c(2.0, 0.0))).unwrap();
        assert!((z2.value - c(std::f64::consts::PI.powi(2) / 6.0, 0.0)).norm() < 1e-13);
        assert!(z2.err < 1e-10);
        let z0 = zeta_em(c(0.0, 0.0), &params(c(0.0, 0.0))).unwrap();
        assert!((z0.value - c(-0.5, 0.0)).norm() < 1e-12);
        // ζ(−1) = −1/12, ζ(4) = π⁴/90
        let zm1 = zeta_em(c(-1.0, 0.0), &params(c(-1.0, 0.0))).unwrap();
        assert!((zm1.value.re + 1.0 / 12.0).abs() < 1e-12);
        let z4 = zeta_em(c(4.0, 0.0), &params(c(4.0, 0.0))).unwrap();
        assert!((z4.value.re - std::f64::consts::PI.powi(4) / 90.0).abs() <= z4.err + 1e-15);
        assert!(matches!(zeta_em(c(1.0, 0.0), &params(c(1.0, 0.0))), Err(Error::Pole)));
        let mut p = params(c(2.0, 0.0));
        p.em_m = 1;
        assert!(zeta_em(c(2.0, 0.0), &p).is_err());
        assert!(zeta_em(c(-20.0, 0.0), &params(c(-20.0, 0.0))).is_err());
    }

    #[test]
    fn zeta_independent_split_points_agree() {
        for s in [c(0.5, 14.134725), c(1.1, 10.0), c(-3.5, 2.0), c(3.0, -40.0), c(0.25, 0.0)] {
            let a = zeta_em(s, &params(s)).unwrap();
            let mut p = params(s);
            p.em_m = 3 * p.em_m + 17;
            p.em_terms = 12;
            let b = zeta_em(s, &p).unwrap();
            assert!(a.agrees_with(&b), "s = {s}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn zeta_first_zero() {
        let mut p = params(c(0.5, 14.134725));
        p.em_m = 10_000;
        let z = zeta_em(c(0.5, 14.134725), &p).unwrap();
        assert!(z.value.norm() < 1e-4);
    }

    #[test]
    fn zeta_f32_budget_covers_f64_value() {
        for s in [c(2.0, 0.0), c(1.5, 3.0), c(0.75, 5.0)] {
            let s32 = Complex::new(s.re as f32, s.im as f32);
            let a = zeta_em(s32, &TruncationParams::default_for(s32)).unwrap();
            let b = zeta_em(s, &params(s)).unwrap();
            let diff = Complex::new(a.value.re as f64 - b.value.re, a.value.im as f64 - b.value.im).norm();
            assert!(diff <= a.err as f64 + b.err, "s = {s}");
        }
    }

    #[test]
    fn l_function_constants() {
        let chi = CharacterSpec::new(-4).unwrap();
        let l1 = dirichlet_l(&chi, c(1.0, 0.0), 1000).unwrap();
        assert!((l1.value - c(std::f64::consts::FRAC_PI_4, 0.0)).norm() < 1e-12);
        assert!(l1.err < 1e-6);
        let l2 = dirichlet_l(&chi, c(2.0, 0.0), 1000).unwrap();
        assert!((l2.value.re - 0.915_965_594_177_219).abs() < 1e-12);
        let chi5 = CharacterSpec::new(5).unwrap();
        // L(1, χ_5) = 2 log(φ)/√5
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let l = dirichlet_l(&chi5, c(1.0, 0.0), 100).unwrap();
        assert!((l.value.re - 2.0 * phi.ln() / 5f64.sqrt()).abs() < 1e-12);
        let a = dirichlet_l(&chi5, c(2.0, 0.0), 100_000).unwrap();
        let b = dirichlet_l(&chi5, c(2.0, 0.0), 1_000_000).unwrap();
        assert!(a.agrees_with(&b));
        assert!(dirichlet_l(&chi5, c(0.0, 1.0), 100).is_err());
        // independent route: truncated Euler product at σ = 3
        let t = sieve(200_000).unwrap();
        let s = c(3.0, 1.0);
        let mut prod = c(0.0, 0.0);
        for &p in t.primes() {
            let z = (-s * (p as f64).ln()).exp() * chi5.chi(p) as f64;
            prod -= (c(1.0, 0.0) - z).ln();
        }
        let l = dirichlet_l(&chi5, s, 100).unwrap();
        assert!((l.value.ln() - prod).norm() < 1e-10);
    }

    #[test]
    fn mobius_values() {
        let expect = [1i8, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0, -1, 1, 1, 0];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(mobius(i as u64 + 1), e);
        }
    }

    #[test]
    fn prime_zeta_tail_consistency() {
        let t = sieve(2_000_000).unwrap();
        for s in [c(2.0, 0.0), c(1.1, 10.0), c(1.02, 3.0)] {
            let small = prime_sum_tail(s, 1000, &t).unwrap();
            let large = prime_sum_tail(s, 2_000_000, &t).unwrap();
            let mut between = c(0.0, 0.0);
            for &p in t.primes().iter().filter(|&&p| p > 1000) {
                between += (-s * (p as f64).ln()).exp();
            }
            assert!((small.value - between - large.value).norm() <= small.err + large.err + 1e-13, "s = {s}");
        }
        // P(2) from the mpmath oracle primezeta(2)
        let p2 = prime_sum_tail(c(2.0, 0.0), 1, &t);
        assert!(p2.is_ok());
        let sum_to_2: f64 = 0.25;
        let tail2 = prime_sum_tail(c(2.0, 0.0), 2, &t).unwrap();
        assert!((tail2.value.re + sum_to_2 - 0.452_247_420_041_065_5).abs() < 1e-14);
    }

    #[test]
    fn euler_products_for_all_primes() {
        let t = sieve(1_000_000).unwrap();
        let all = SetDescriptor::index_progression(1, 1).unwrap();
        let v = log_euler_product_thin(&all, c(2.0, 0.0), 1_000_000, &t).unwrap();
        assert!((v.value.exp().re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-6);
        let ex = SetDescriptor::explicit(vec![2], Ratio::new(1, 1)).unwrap();
        let v = log_euler_product_thin(&ex, c(2.0, 0.0), 1000, &t).unwrap();
        assert!((v.value.re + (0.75f64).ln()).abs() < 1e-15 && v.value.im == 0.0);
        assert!(log_euler_product_thin(&all, c(1.0, 2.0), 1000, &t).is_err());
    }

    #[test]
    fn thin_product_error_budgets() {
        let t = sieve(1_000_000).unwrap();
        let half = SetDescriptor::index_progression(2, 1).unwrap();
        let s = c(1.5, 3.0);
        let v = log_euler_product_thin(&half, s, 1_000_000, &t).unwrap();
        // deviation bound C|s| X^{−σ}/σ with C = 1
        assert!(v.err < 2.0 * 1.0 * s.norm() * 1e-9 / 1.5);
        // the same product cut at two heights agrees
        let w = log_euler_product_thin(&half, s, 200_000, &t).unwrap();
        assert!(v.agrees_with(&w));
        // compare with the naive product far out: truncated sum plus crude tail
        let mut naive = c(0.0, 0.0);
        for (i, &p) in t.primes().iter().enumerate() {
            if i % 2 == 0 {
                naive -= (c(1.0, 0.0) - (-s * (p as f64).ln()).exp()).ln() * 2.0;
            }
        }
        let crude = 2.0 * 1e6f64.powf(-0.5) / (0.5 * (1.0 - 2f64.powf(-1.5)));
        assert!((v.value - naive).norm() <= v.err + crude);
    }

    #[test]
    fn kernel_basics() {
        let t = sieve(1_000_000).unwrap();
        let all = SetDescriptor::index_progression(1, 1).unwrap();
        let f = f_pj(&all, 1, c(2.0, 0.0), 1_000_000, &t).unwrap();
        assert_eq!((f.value, f.err), (c(0.0, 0.0), 0.0));
        let p = params(c(2.0, 0.0)).with_x(1_000_000);
        let fp = f_p(&all, c(2.0, 0.0), &p, &t).unwrap();
        assert_eq!(fp.value, c(0.0, 0.0));
        assert!(fp.err > 0.0 && fp.err < 1e-30);

        let half = SetDescriptor::index_progression(2, 1).unwrap();
        let a = f_pj(&half, 1, c(2.0, 0.0), 1_000_000, &t).unwrap();
        let b = f_pj(&half, 1, c(2.0, 0.0), 100_000, &t).unwrap();
        assert!(a.agrees_with(&b));
        let s = c(0.6, 1.0);
        let f3 = f_pj(&half, 3, s, 1_000_000, &t).unwrap();
        let limit = 2.0 * (s * 3.0).norm() * 1e6f64.powf(-1.8) / 1.8;
        assert!(f3.err < limit && f3.value.norm().is_finite());
        assert!(f_pj(&half, 1, c(0.0, 1.0), 1000, &t).is_err());

        let few_j = params(c(0.3, 0.0)).with_x(1000).with_j(2);
        assert!(matches!(f_p(&half, c(0.3, 0.0), &few_j, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_monotone_certification() {
        let t = sieve(1_000_000).unwrap();
        let half = SetDescriptor::index_progression(2, 1).unwrap();
        let s = c(0.75, 5.0);
        let mut prev: Option<CertifiedValue<f64>> = None;
        for (x, j) in [(10_000u64, 40u32), (100_000, 60), (1_000_000, 80)] {
            let p = params(s).with_x(x).with_j(j);
            let f = f_p(&half, s, &p, &t).unwrap();
            if let Some(q) = prev {
                assert!(f.err <= q.err);
                assert!(f.agrees_with(&q));
            }
            prev = Some(f);
        }
    }

    #[test]
    fn zeta_thin_consistency() {
        let t = sieve(1_000_000).unwrap();
        let all = SetDescriptor::index_progression(1, 1).unwrap();
        let s = c(0.8, 7.0);
        let p = params(s).with_x(1_000_000);
        let a = zeta_thin(&all, s, &p, &t).unwrap();
        let b = zeta_em(s, &p).unwrap();
        assert!(a.agrees_with(&b));

        let half = SetDescriptor::index_progression(2, 1).unwrap();
        let s = c(2.0, 0.0);
        let p = params(s).with_x(1_000_000);
        let a = zeta_thin(&half, s, &p, &t).unwrap();
        let b = log_euler_product_thin(&half, s, 1_000_000, &t).unwrap().exp();
        assert!(a.agrees_with(&b));
        assert!(matches!(zeta_thin(&half, c(1.0, 0.0), &p, &t), Err(Error::Pole)));

        // (s − 1) ζ_P(s) stays bounded as s → 1+
        for sigma in [1.1, 1.01, 1.001, 1.0001] {
            let s = c(sigma, 0.0);
            let p = params(s).with_x(100_000);
            let z = zeta_thin(&half, s, &p, &t).unwrap();
            let scaled = z.value.norm() * (sigma - 1.0);
            assert!(scaled > 0.1 && scaled < 10.0, "σ = {sigma}: {scaled}");
        }
    }

    #[test]
    fn relation_checks_small() {
        let t = sieve(1_000_000).unwrap();
        let all = SetDescriptor::index_progression(1, 1).unwrap();
        let s = c(2.0, 0.0);
        let p = params(s).with_x(1_000_000);
        let r = relation_check(&all, s, &p, &t).unwrap();
        assert!(r.residual <= 1e-12 && r.pass);
        for d in [
            SetDescriptor::index_progression(3, 2).unwrap(),
            SetDescriptor::beatty_str("sqrt(2)", "0", None).unwrap(),
            SetDescriptor::random_sign(5, crate::thin_sets::Sign::Plus),
        ] {
            for s in [c(2.0, 0.0), c(1.5, 3.0), c(1.02, 4.0)] {
                let p = params(s).with_x(1_000_000);
                let r = relation_check(&d, s, &p, &t).unwrap();
                assert!(r.pass, "{:?} s={s}: {} > {}", d.kind, r.residual, r.budget);
                assert!(r.budget <= r.value_budget);
            }
        }
    }

    #[test]
    fn twisted_products() {
        let t = sieve(1_000_000).unwrap();
        let chi = CharacterSpec::new(-4).unwrap();
        let all = SetDescriptor::index_progression(1, 1).unwrap();
        let s = c(2.0, 0.0);
        let lp = log_l_thin(&all, &chi, s, 1_000_000, &t).unwrap();
        let l = dirichlet_l(&chi, s, 1000).unwrap();
        assert!((lp.value.exp() - l.value).norm() <= 1e-12 + lp.err * 2.0 + l.err);
        assert!(lp.certified);

        let half = SetDescriptor::index_progression(2, 1).unwrap();
        let v = log_l_thin(&half, &chi, s, 1_000_000, &t).unwrap();
        assert!(!v.certified && v.err < 1e-7);
        let ex = SetDescriptor::explicit(vec![2, 3], Ratio::new(1, 1)).unwrap();
        let v = log_l_thin(&ex, &chi, s, 1000, &t).unwrap();
        assert!((v.value.re + (1.0f64 + 1.0 / 9.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn quadratic_checks_small() {
        let t = sieve(1_000_000).unwrap();
        let chi = CharacterSpec::new(-4).unwrap();
        let all = SetDescriptor::index_progression(1, 1).unwrap();
        let s = c(2.0, 0.0);
        let p = params(s).with_x(1_000_000);
        let q = quadratic_relation_check(&all, &chi, 1, 1, s, &p, &t).unwrap();
        assert!(q.residual <= 1e-10 && q.pass && !q.model_mismatch);
        assert!(q.case_split_gap <= q.case_split_bound);

        let half = SetDescriptor::index_progression(2, 1).unwrap();
        for s in [c(2.0, 0.0), c(1.5, 3.0)] {
            let p = params(s).with_x(1_000_000);
            let q = quadratic_relation_check(&half, &chi, 1, 1, s, &p, &t).unwrap();
            assert!(q.pass, "s={s}: {} > {}", q.residual, q.budget);
            assert!(!q.certified && !q.model_mismatch);
            assert!(q.case_split_gap <= q.case_split_bound);
            assert!((q.rho_hat - 0.5).abs() < 0.02);
        }
        // A ≠ B still balances algebraically, but ρ̂/δ disagrees with A/B
        let p = params(c(2.0, 0.0)).with_x(1_000_000);
        let q = quadratic_relation_check(&half, &chi, 1, 2, c(2.0, 0.0), &p, &t).unwrap();
        assert!(q.pass && q.model_mismatch);
    }
}
