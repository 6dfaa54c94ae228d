//! h-fold sumsets of prime sets, residue reachability, runs of consecutive
//! primes in a progression and localized three-prime decompositions.

use std::io::{BufReader, BufWriter, Read, Write};

use num_integer::Integer;

use crate::error::{domain, Error, Result};
use crate::prime_engine::{euler_phi, PrimeTable};
use crate::thin_sets::SetDescriptor;

const COVERAGE_MAGIC: &[u8; 4] = b"TZCV";
const COVERAGE_VERSION: u8 = 1;

/// Below this, [`vinny_decompose`] skips the constructive route and searches directly.
pub const VINNY_CONSTRUCTIVE_MIN: u64 = 1000;
/// Localization exponent used by the constructive route of [`vinny_decompose`].
pub const VINNY_THETA: f64 = 0.99;

/// One bit per integer in `0..=n_max`.
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmap {
    words: Vec<u64>,
    n_max: u64,
}

impl std::fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bitmap(n_max = {}, ones = {})", self.n_max, self.count_ones())
    }
}

impl Bitmap {
    pub fn new(n_max: u64) -> Self {
        Bitmap {
            words: vec![0; (n_max / 64 + 1) as usize],
            n_max,
        }
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    #[inline]
    pub fn get(&self, n: u64) -> bool {
        n <= self.n_max && self.words[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, n: u64) {
        debug_assert!(n <= self.n_max);
        self.words[(n / 64) as usize] |= 1 << (n % 64);
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of set bits in `lo..=hi`.
    pub fn count_range(&self, lo: u64, hi: u64) -> u64 {
        (lo..=hi.min(self.n_max)).filter(|&n| self.get(n)).count() as u64
    }

    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(i as u64 * 64 + b)
            })
        })
    }

    fn clear_tail(&mut self) {
        let used = self.n_max % 64 + 1;
        if used < 64 {
            *self.words.last_mut().unwrap() &= (1u64 << used) - 1;
        }
    }

    /// `self |= src << shift`, cut at `n_max`. Walks words upward.
    pub fn or_shifted(&mut self, src: &Bitmap, shift: u64) {
        let (ws, bs) = ((shift / 64) as usize, (shift % 64) as u32);
        let len = self.words.len();
        if ws >= len {
            return;
        }
        if bs == 0 {
            for i in ws..len {
                self.words[i] |= src.words[i - ws];
            }
        } else {
            self.words[ws] |= src.words[0] << bs;
            for i in ws + 1..len {
                self.words[i] |= src.words[i - ws] << bs | src.words[i - ws - 1] >> (64 - bs);
            }
        }
        self.clear_tail();
    }

    /// The 64 bits starting at bit `offset` (possibly negative), zero outside.
    fn window64(&self, offset: i64) -> u64 {
        let word = |k: i64| {
            if k < 0 || k as usize >= self.words.len() {
                0
            } else {
                self.words[k as usize]
            }
        };
        let (k, b) = (offset.div_euclid(64), offset.rem_euclid(64) as u32);
        if b == 0 {
            word(k)
        } else {
            word(k) >> b | word(k + 1) << (64 - b)
        }
    }

    /// Same as [`Bitmap::or_shifted`], walking words downward and reading
    /// each word as an unaligned window of the source.
    fn or_shifted_descending(&mut self, src: &Bitmap, shift: u64) {
        for i in (0..self.words.len()).rev() {
            let lo = i as i64 * 64;
            if lo + 63 < shift as i64 {
                break;
            }
            self.words[i] |= src.window64(lo - shift as i64);
        }
        self.clear_tail();
    }

    /// Writes `"TZCV"`, version byte, little-endian u64 `h` and `n_max`,
    /// then `ceil((n_max+1)/8)` bytes with bit `n` at byte `n/8`, bit `n%8`.
    pub fn write_coverage<W: Write>(&self, h: u64, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(COVERAGE_MAGIC)?;
        w.write_all(&[COVERAGE_VERSION])?;
        w.write_all(&h.to_le_bytes())?;
        w.write_all(&self.n_max.to_le_bytes())?;
        let n_bytes = self.n_max / 8 + 1;
        let bytes: Vec<u8> = self.words.iter().flat_map(|x| x.to_le_bytes()).take(n_bytes as usize).collect();
        w.write_all(&bytes)?;
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`Bitmap::write_coverage`], returning `(h, bitmap)`.
    pub fn read_coverage<R: Read>(r: R) -> Result<(u64, Bitmap)> {
        let mut r = BufReader::new(r);
        let mut header = [0u8; 21];
        r.read_exact(&mut header)
            .map_err(|e| Error::Cache(format!("truncated coverage header: {e}")))?;
        if &header[..4] != COVERAGE_MAGIC {
            return Err(Error::Cache("bad coverage magic".into()));
        }
        if header[4] != COVERAGE_VERSION {
            return Err(Error::Cache(format!("unsupported coverage version {}", header[4])));
        }
        let h = u64::from_le_bytes(header[5..13].try_into().unwrap());
        let n_max = u64::from_le_bytes(header[13..21].try_into().unwrap());
        let n_bytes = n_max / 8 + 1;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() as u64 != n_bytes {
            return Err(Error::Cache(format!("expected {n_bytes} bitmap bytes, found {}", bytes.len())));
        }
        let mut out = Bitmap::new(n_max);
        for (i, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            out.words[i] = u64::from_le_bytes(buf);
        }
        let before = out.count_ones();
        out.clear_tail();
        if out.count_ones() != before {
            return Err(Error::Cache("bits set beyond n_max".into()));
        }
        Ok((h, out))
    }
}

fn check_layer_input(primes: &[u64], n_max: u64, h_max: u32) -> Result<()> {
    if n_max < 2 {
        return domain("sumsets need N >= 2");
    }
    if h_max < 1 {
        return domain("h_max must be at least 1");
    }
    if primes.is_empty() {
        return domain("sumsets need a non-empty prime list");
    }
    if primes.windows(2).any(|w| w[0] >= w[1]) {
        return domain("prime list must be strictly ascending");
    }
    Ok(())
}

fn first_layer(primes: &[u64], n_max: u64) -> Bitmap {
    let mut b = Bitmap::new(n_max);
    for &p in primes.iter().take_while(|&&p| p <= n_max) {
        b.set(p);
    }
    b
}

fn next_layer(prev: &Bitmap, primes: &[u64]) -> Bitmap {
    let mut next = Bitmap::new(prev.n_max);
    for &p in primes.iter().take_while(|&&p| p <= prev.n_max) {
        next.or_shifted(prev, p);
    }
    next
}

fn next_layer_descending(prev: &Bitmap, primes: &[u64]) -> Bitmap {
    let mut next = Bitmap::new(prev.n_max);
    for &p in primes.iter().rev().filter(|&&p| p <= prev.n_max) {
        next.or_shifted_descending(prev, p);
    }
    next
}

/// Bitmaps of `hP ∩ [0, N]` for `h = 1..=h_max` (index `h − 1`), sums with
/// repetition.
pub fn sumset_layers(primes: &[u64], n_max: u64, h_max: u32) -> Result<Vec<Bitmap>> {
    check_layer_input(primes, n_max, h_max)?;
    let mut layers = vec![first_layer(primes, n_max)];
    for _ in 1..h_max {
        let next = next_layer(layers.last().unwrap(), primes);
        layers.push(next);
    }
    Ok(layers)
}

/// Layer `h` alone.
pub fn sumset_layer(primes: &[u64], n_max: u64, h: u32) -> Result<Bitmap> {
    check_layer_input(primes, n_max, h)?;
    let mut layer = first_layer(primes, n_max);
    for _ in 1..h {
        layer = next_layer(&layer, primes);
    }
    Ok(layer)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HCoverage {
    pub h: u32,
    /// Share of the window lying in `hP`.
    pub covered_fraction: f64,
    pub exceptional_count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    /// The minimal covering h, or `h_max` when none was found.
    pub h: u32,
    pub n_max: u64,
    pub window: (u64, u64),
    pub covered_in_window: bool,
    /// `n ∈ [1, n1]` outside `hP`, ascending.
    pub exceptional: Vec<u64>,
    pub minimal_h: Option<u32>,
    pub per_h: Vec<HCoverage>,
}

fn exceptional_in(layer: &Bitmap, lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| !layer.get(n)).collect()
}

/// Smallest `h <= h_max` with `[n0, n1] ⊆ hP`.
pub fn minimal_h_cover(
    d: &SetDescriptor,
    n_max: u64,
    window: (u64, u64),
    h_max: u32,
    table: &PrimeTable,
) -> Result<CoverageReport> {
    let (n0, n1) = window;
    if n0 > n1 || n1 > n_max {
        return domain("window must satisfy n0 <= n1 <= N");
    }
    let primes = d.enumerate(n_max, table)?;
    check_layer_input(&primes, n_max, h_max)?;
    let width = (n1 - n0 + 1) as f64;
    let mut layer = first_layer(&primes, n_max);
    let mut per_h = Vec::new();
    for h in 1..=h_max {
        if h > 1 {
            layer = next_layer(&layer, &primes);
        }
        let covered = layer.count_range(n0, n1);
        let missing = (n1 - n0 + 1) - covered;
        per_h.push(HCoverage {
            h,
            covered_fraction: covered as f64 / width,
            exceptional_count: n1 - layer.count_range(1, n1),
        });
        if missing == 0 || h == h_max {
            return Ok(CoverageReport {
                h,
                n_max,
                window,
                covered_in_window: missing == 0,
                exceptional: exceptional_in(&layer, 1, n1),
                minimal_h: (missing == 0).then_some(h),
                per_h,
            });
        }
    }
    unreachable!("h_max >= 1 was checked")
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisCertificate {
    pub h: u32,
    pub n_max: u64,
    pub n0: u64,
    pub verified: bool,
    /// `n ∈ [n0, N]` outside `hP`.
    pub window_gap: Vec<u64>,
    /// `n ∈ [1, n0)` outside `hP`.
    pub exceptional_below_n0: Vec<u64>,
}

/// Recomputes layer `h` with prime shifts in descending order and a
/// bit-by-bit shift, compares it with [`sumset_layer`], and checks
/// `[n0, N] ⊆ hP`.
pub fn basis_certificate(
    d: &SetDescriptor,
    h: u32,
    n_max: u64,
    n0: u64,
    table: &PrimeTable,
) -> Result<BasisCertificate> {
    if n0 > n_max {
        return domain("n0 must not exceed N");
    }
    let primes = d.enumerate(n_max, table)?;
    let ascending = sumset_layer(&primes, n_max, h)?;
    let mut descending = first_layer(&primes, n_max);
    for _ in 1..h {
        descending = next_layer_descending(&descending, &primes);
    }
    if ascending != descending {
        return Err(Error::InternalConsistency(format!(
            "layer {h} differs between ascending and descending shift order"
        )));
    }
    let window_gap = exceptional_in(&descending, n0, n_max);
    Ok(BasisCertificate {
        h,
        n_max,
        n0,
        verified: window_gap.is_empty(),
        window_gap,
        exceptional_below_n0: exceptional_in(&descending, 1, n0.saturating_sub(1)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResidueMode {
    /// Residues of the members `<= x`.
    Empirical { x: u64 },
    /// Every unit mod b, plus the residue of 2 when `2 ∈ P`.
    Theoretical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolvabilityTable {
    pub b: u64,
    pub residues: Vec<u64>,
    /// `reachable[s − 1][a]`: `a` is a sum of `s` residues mod b.
    pub reachable: Vec<Vec<bool>>,
    /// First `s` from which every residue is reachable, once that state is
    /// seen to repeat within the table.
    pub s1: Option<u32>,
    /// `(start, length)`: `reachable[start + length] = reachable[start]`,
    /// so the sequence is periodic from `start` on.
    pub period: Option<(u32, u32)>,
    pub s_max: u32,
}

impl SolvabilityTable {
    pub fn is_full(&self, s: u32) -> bool {
        self.reachable[s as usize - 1].iter().all(|&r| r)
    }
}

/// Reachability of `p_1 + … + p_s ≡ a (mod b)` for `s <= s_max`, given the
/// residues available.
pub fn solvability_from_residues(b: u64, residues: &[u64], s_max: u32) -> Result<SolvabilityTable> {
    if b == 0 {
        return domain("modulus b must be at least 1");
    }
    if s_max < 1 {
        return domain("s_max must be at least 1");
    }
    let mut res: Vec<u64> = residues.iter().map(|&r| r % b).collect();
    res.sort_unstable();
    res.dedup();
    if res.is_empty() {
        return domain("residue set is empty");
    }
    let bu = b as usize;
    let mut first = vec![false; bu];
    for &r in &res {
        first[r as usize] = true;
    }
    let mut reachable = vec![first];
    for _ in 1..s_max {
        let prev = reachable.last().unwrap();
        let mut next = vec![false; bu];
        for (a, _) in prev.iter().enumerate().filter(|(_, &x)| x) {
            for &r in &res {
                next[(a + r as usize) % bu] = true;
            }
        }
        reachable.push(next);
    }
    let mut period = None;
    'outer: for s in 1..reachable.len() {
        for t in 0..s {
            if reachable[t] == reachable[s] {
                period = Some((t as u32 + 1, (s - t) as u32));
                break 'outer;
            }
        }
    }
    let s1 = reachable
        .iter()
        .position(|r| r.iter().all(|&x| x))
        .map(|i| i as u32 + 1)
        .filter(|&s| matches!(period, Some((start, 1)) if start <= s) && s < s_max);
    Ok(SolvabilityTable {
        b,
        residues: res,
        reachable,
        s1,
        period,
        s_max,
    })
}

pub fn congruence_solvability(
    d: &SetDescriptor,
    b: u64,
    s_max: u32,
    mode: ResidueMode,
    table: &PrimeTable,
) -> Result<SolvabilityTable> {
    if b == 0 {
        return domain("modulus b must be at least 1");
    }
    let residues: Vec<u64> = match mode {
        ResidueMode::Empirical { x } => {
            let members = d.enumerate(x, table)?;
            if members.is_empty() {
                return domain(format!("no members of the set up to {x}"));
            }
            members.iter().map(|&p| p % b).collect()
        }
        ResidueMode::Theoretical => {
            let mut r: Vec<u64> = (0..b).filter(|&u| u.gcd(&b) == 1).collect();
            if d.contains_two(table)? {
                r.push(2 % b);
            }
            r
        }
    };
    solvability_from_residues(b, &residues, s_max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShiuRun {
    /// Index of the prime just before the run.
    pub r: u64,
    pub start_prime: u64,
    pub length: u64,
    pub c: u64,
    pub d: u64,
    /// `length / (L2·L4/L3²)^{1/φ(d)}` with `Lk` the k-fold iterated log of
    /// `r`; absent while `log log log log r <= 0`.
    pub ratio: Option<f64>,
}

fn shiu_ratio(r: u64, length: u64, phi: u64) -> Option<f64> {
    let l2 = (r as f64).ln().ln();
    let l3 = l2.ln();
    let l4 = l3.ln();
    if !(l4 > 0.0) {
        return None;
    }
    Some(length as f64 / (l2 * l4 / (l3 * l3)).powf(1.0 / phi as f64))
}

/// Record-setting maximal runs of consecutive primes `≡ c (mod d)` over the table.
pub fn shiu_scan(c: u64, d: u64, table: &PrimeTable) -> Result<Vec<ShiuRun>> {
    if d == 0 {
        return domain("modulus d must be at least 1");
    }
    if c.gcd(&d) != 1 {
        return domain(format!("gcd({c}, {d}) must be 1"));
    }
    let c = c % d;
    let phi = euler_phi(d)?;
    let primes = table.primes();
    let mut records: Vec<ShiuRun> = Vec::new();
    let mut i = 0usize;
    while i < primes.len() {
        if primes[i] % d != c {
            i += 1;
            continue;
        }
        let start = i;
        while i < primes.len() && primes[i] % d == c {
            i += 1;
        }
        let length = (i - start) as u64;
        if records.last().is_none_or(|best| length > best.length) {
            let r = start as u64;
            records.push(ShiuRun {
                r,
                start_prime: primes[start],
                length,
                c,
                d,
                ratio: shiu_ratio(r, length, phi),
            });
        }
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressionHits {
    pub primes: Vec<u64>,
    /// The table ran out before `count` members were found.
    pub exhausted: bool,
}

/// First `count` members of the set that are `≡ c (mod m)`.
pub fn prop_statue_check(d: &SetDescriptor, c: u64, m: u64, count: usize, table: &PrimeTable) -> Result<ProgressionHits> {
    if m == 0 {
        return domain("modulus must be at least 1");
    }
    if c.gcd(&m) != 1 {
        return domain(format!("gcd({c}, {m}) must be 1"));
    }
    let c = c % m;
    let mask = d.membership_mask(table.count(), table)?;
    let primes: Vec<u64> = table
        .primes()
        .iter()
        .zip(mask)
        .filter_map(|(&p, inside)| (inside && p % m == c).then_some(p))
        .take(count)
        .collect();
    Ok(ProgressionHits {
        exhausted: primes.len() < count,
        primes,
    })
}

/// `n = p1 + p2 + p3` with `|p_j − n/3| < n^θ`. `p1` runs down from `n/3`,
/// `p2` up from `p1`, and `p3 = n − p1 − p2 >= p2` is tested for primality.
pub fn haselgrove_decompose(n: u64, theta: f64, table: &PrimeTable) -> Result<Option<[u64; 3]>> {
    if n.is_multiple_of(2) || n < 7 {
        return domain("n must be odd and at least 7");
    }
    if !(theta > 63.0 / 64.0 && theta < 1.0) {
        return domain("θ must lie in (63/64, 1)");
    }
    if n > table.limit() {
        return Err(Error::OutOfRange(format!("{n} exceeds the sieve limit {}", table.limit())));
    }
    let third = n as f64 / 3.0;
    let radius = (n as f64).powf(theta);
    let inside = |p: u64| ((p as f64) - third).abs() < radius;
    let primes = table.primes();
    let top = primes.partition_point(|&p| p <= n / 3);
    for i in (0..top).rev() {
        let p1 = primes[i];
        if !inside(p1) {
            break;
        }
        for &p2 in &primes[i..] {
            if p2 > (n - p1) / 2 {
                break;
            }
            let p3 = n - p1 - p2;
            if inside(p2) && inside(p3) && table.is_prime(p3)? {
                return Ok(Some([p1, p2, p3]));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub parts: Vec<u64>,
    /// Found by the constructive route rather than the direct search.
    pub constructive: bool,
}

fn part_ok(p: u64, n: u64) -> bool {
    p == 2 || 12 * p >= n
}

fn twos(k: u64) -> impl Iterator<Item = u64> {
    std::iter::repeat_n(2, k as usize)
}

fn constructive(n: u64, s: u64, table: &PrimeTable) -> Result<Option<Vec<u64>>> {
    let mut parts = Vec::with_capacity(s as usize);
    if n % 2 == 1 {
        let Some(three) = haselgrove_decompose(n - 2 * (s - 3), VINNY_THETA, table)? else {
            return Ok(None);
        };
        parts.extend(three);
        parts.extend(twos(s - 3));
    } else {
        let m = n - 2 * (s - 6);
        let half = m / 2;
        let a = if half % 2 == 1 { half } else { half - 1 };
        for odd in [a, m - a] {
            let Some(three) = haselgrove_decompose(odd, VINNY_THETA, table)? else {
                return Ok(None);
            };
            parts.extend(three);
        }
        parts.extend(twos(s - 6));
    }
    Ok(parts.iter().all(|&p| part_ok(p, n)).then_some(parts))
}

/// `m` primes, each `>= lo`, summing to `r`.
fn search_parts(r: u64, m: u64, lo: u64, table: &PrimeTable) -> Result<Option<Vec<u64>>> {
    let primes = table.primes();
    let from = primes.partition_point(|&p| p < lo);
    match m {
        0 => Ok((r == 0).then(Vec::new)),
        1 => Ok((r >= lo && table.is_prime(r)?).then(|| vec![r])),
        2 => {
            for &p in &primes[from..] {
                if p > r / 2 {
                    break;
                }
                if table.is_prime(r - p)? {
                    return Ok(Some(vec![p, r - p]));
                }
            }
            Ok(None)
        }
        _ => {
            let top = primes.partition_point(|&p| p <= r / m);
            for &q in primes[from..top].iter().rev().take(64) {
                let rest = r - (m - 2) * q;
                if let Some(pair) = search_parts(rest, 2, lo, table)? {
                    let mut out = vec![q; (m - 2) as usize];
                    out.extend(pair);
                    return Ok(Some(out));
                }
            }
            Ok(None)
        }
    }
}

fn direct_search(n: u64, s: u64, table: &PrimeTable) -> Result<Option<Vec<u64>>> {
    let lo = n.div_ceil(12);
    for k in (0..s).rev() {
        if 2 * k > n {
            continue;
        }
        if let Some(mut parts) = search_parts(n - 2 * k, s - k, lo, table)? {
            parts.extend(twos(k));
            return Ok(Some(parts));
        }
    }
    Ok(None)
}

/// `N` as a sum of `s >= 6` primes, each equal to 2 or at least `N/12`.
///
/// Odd `N`: three localized primes for `N − 2(s−3)` and `s − 3` twos. Even
/// `N`: `N − 2(s−6)` split into two odd halves near `N/2`, three primes for
/// each, and `s − 6` twos. Falls back to a direct search when that fails or
/// `N < VINNY_CONSTRUCTIVE_MIN`.
pub fn vinny_decompose(n: u64, s: u64, table: &PrimeTable) -> Result<Option<Decomposition>> {
    if s < 6 {
        return domain("s must be at least 6");
    }
    if n < 2 * s {
        return domain(format!("N must be at least 2s = {}", 2 * s));
    }
    if n > table.limit() {
        return Err(Error::OutOfRange(format!("{n} exceeds the sieve limit {}", table.limit())));
    }
    let mut found = None;
    if n >= VINNY_CONSTRUCTIVE_MIN {
        found = constructive(n, s, table)?.map(|parts| (parts, true));
    }
    if found.is_none() {
        found = direct_search(n, s, table)?.map(|parts| (parts, false));
    }
    let Some((mut parts, constructive)) = found else {
        return Ok(None);
    };
    parts.sort_unstable_by(|a, b| b.cmp(a));
    let valid = parts.len() as u64 == s
        && parts.iter().sum::<u64>() == n
        && parts.iter().all(|&p| part_ok(p, n) && table.is_prime(p).unwrap_or(false));
    if !valid {
        return Err(Error::InternalConsistency(format!("bad decomposition of {n}: {parts:?}")));
    }
    Ok(Some(Decomposition { parts, constructive }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prime_engine::sieve;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn layer_set(b: &Bitmap) -> Vec<u64> {
        b.ones().collect()
    }

    /// All sums of exactly `h` elements with repetition, by recursion over
    /// non-decreasing index sequences.
    fn multiset_sums(p: &[u64], h: u32, n_max: u64) -> Vec<u64> {
        fn go(p: &[u64], from: usize, left: u32, acc: u64, n_max: u64, out: &mut Vec<u64>) {
            if acc > n_max {
                return;
            }
            if left == 0 {
                out.push(acc);
                return;
            }
            for i in from..p.len() {
                go(p, i, left - 1, acc + p[i], n_max, out);
            }
        }
        let mut out = Vec::new();
        go(p, 0, h, 0, n_max, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    #[test]
    fn small_layers() {
        let l = sumset_layers(&[2, 3], 10, 2).unwrap();
        assert_eq!(layer_set(&l[1]), vec![4, 5, 6]);
        let l = sumset_layers(&[2], 100, 5).unwrap();
        assert_eq!(layer_set(&l[4]), vec![10]);
        let l = sumset_layers(&[2, 3], 200, 30).unwrap();
        for (i, layer) in l.iter().enumerate() {
            let h = i as u64 + 1;
            assert_eq!(layer_set(layer), (2 * h..=3 * h).collect::<Vec<_>>());
        }
        assert!(sumset_layers(&[], 10, 2).is_err());
        assert!(sumset_layers(&[2], 1, 2).is_err());
    }

    #[test]
    fn word_boundaries() {
        let n = 1000;
        let mut src = Bitmap::new(n);
        for k in [0, 1, 63, 64, 65, 127, 128, 500, 999, 1000] {
            src.set(k);
        }
        for shift in [0, 1, 63, 64, 65, 128, 129, 937, 1000, 1001] {
            let mut a = Bitmap::new(n);
            let mut b = Bitmap::new(n);
            a.or_shifted(&src, shift);
            b.or_shifted_descending(&src, shift);
            let expect: Vec<u64> = src.ones().map(|k| k + shift).filter(|&k| k <= n).collect();
            assert_eq!(layer_set(&a), expect);
            assert_eq!(a, b);
        }
    }

    proptest! {
        #[test]
        fn layers_match_multiset_enumeration(
            picks in proptest::sample::subsequence(vec![2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47], 1..=5),
            h in 1u32..=4,
            n_max in 2u64..=200,
        ) {
            let layers = sumset_layers(&picks, n_max, h).unwrap();
            prop_assert_eq!(layer_set(&layers[h as usize - 1]), multiset_sums(&picks, h, n_max));
        }

        #[test]
        fn shifting_by_a_member_moves_up_a_layer(
            picks in proptest::sample::subsequence(vec![2u64, 3, 5, 7, 11, 13, 17, 19, 23], 1..=4),
            h in 1u32..=4,
        ) {
            let layers = sumset_layers(&picks, 300, h + 1).unwrap();
            for n in layers[h as usize - 1].ones() {
                for &p in &picks {
                    if n + p <= 300 {
                        prop_assert!(layers[h as usize].get(n + p));
                    }
                }
            }
        }
    }

    #[test]
    fn coverage_reports() {
        let t = sieve(1000).unwrap();
        let d = SetDescriptor::explicit(vec![2, 3], Ratio::new(1, 1)).unwrap();
        let r = minimal_h_cover(&d, 100, (20, 30), 10, &t).unwrap();
        assert_eq!(r.minimal_h, Some(10));
        assert!(r.covered_in_window);
        assert_eq!(r.exceptional, (1..20).collect::<Vec<_>>());
        let r = minimal_h_cover(&d, 100, (20, 61), 20, &t).unwrap();
        assert_eq!(r.minimal_h, None);
        assert_eq!(r.per_h.len(), 20);
        assert!(!r.covered_in_window);
        assert!(minimal_h_cover(&d, 100, (20, 101), 20, &t).is_err());
    }

    #[test]
    fn certificates() {
        let t = sieve(1000).unwrap();
        let d = SetDescriptor::explicit(vec![2, 3], Ratio::new(1, 1)).unwrap();
        let c = basis_certificate(&d, 10, 30, 20, &t).unwrap();
        assert!(c.verified && c.window_gap.is_empty());
        assert_eq!(c.exceptional_below_n0.len(), 19);
        let c = basis_certificate(&d, 9, 30, 20, &t).unwrap();
        assert!(!c.verified);
        assert_eq!(c.window_gap, (28..=30).collect::<Vec<_>>());

        let thin = SetDescriptor::index_progression(3, 1).unwrap();
        let r = minimal_h_cover(&thin, 1000, (500, 1000), 20, &t).unwrap();
        let h = r.minimal_h.unwrap();
        assert!(basis_certificate(&thin, h, 1000, 500, &t).unwrap().verified);
        assert!(!basis_certificate(&thin, h - 1, 1000, 500, &t).unwrap().verified);
    }

    #[test]
    fn coverage_file_round_trip() {
        let layers = sumset_layers(&[2, 3], 17, 3).unwrap();
        let mut bytes = Vec::new();
        layers[2].write_coverage(3, &mut bytes).unwrap();
        let mut golden = b"TZCV\x01".to_vec();
        golden.extend_from_slice(&3u64.to_le_bytes());
        golden.extend_from_slice(&17u64.to_le_bytes());
        // bits 6..=9 over 18 bits: three bytes
        golden.extend_from_slice(&[0b1100_0000, 0b0000_0011, 0]);
        assert_eq!(bytes, golden);
        let (h, back) = Bitmap::read_coverage(&bytes[..]).unwrap();
        assert_eq!((h, back), (3, layers[2].clone()));
        let mut bad = golden.clone();
        bad[0] = b'X';
        assert!(Bitmap::read_coverage(&bad[..]).is_err());
        assert!(Bitmap::read_coverage(&golden[..golden.len() - 1]).is_err());
        let mut stray = golden.clone();
        *stray.last_mut().unwrap() = 0b0000_0100;
        assert!(Bitmap::read_coverage(&stray[..]).is_err());

        let b = Bitmap::new(15);
        let mut bytes = Vec::new();
        b.write_coverage(1, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 21 + 2);
    }

    #[test]
    fn residue_tables() {
        let t = solvability_from_residues(3, &[1, 2], 6).unwrap();
        // oracle: every 2-fold sum of {1, 2} mod 3
        let mut two = [false; 3];
        for a in [1, 2] {
            for b in [1, 2] {
                two[(a + b) % 3] = true;
            }
        }
        assert_eq!(t.reachable[1], two.to_vec());
        assert_eq!(t.s1, Some(2));
        let t = solvability_from_residues(2, &[0], 10).unwrap();
        assert_eq!(t.s1, None);
        assert_eq!(t.period, Some((1, 1)));
        let t = solvability_from_residues(1, &[0], 3).unwrap();
        assert_eq!(t.s1, Some(1));
        // units mod 8 alone keep the parity of s
        let t = solvability_from_residues(8, &[1, 3, 5, 7], 20).unwrap();
        assert_eq!(t.s1, None);
        assert_eq!(t.period.map(|p| p.1), Some(2));
        assert!(solvability_from_residues(5, &[], 3).is_err());
        // full is only reported once the table shows it persisting
        assert_eq!(solvability_from_residues(3, &[1, 2], 2).unwrap().s1, None);
    }

    proptest! {
        #[test]
        fn reachability_is_the_sumset_recursion(
            b in 1u64..30,
            res in proptest::collection::vec(0u64..30, 1..5),
            s_max in 1u32..12,
        ) {
            let t = solvability_from_residues(b, &res, s_max).unwrap();
            for s in 1..s_max as usize {
                for a in 0..b as usize {
                    let expect = t.reachable[s - 1]
                        .iter()
                        .enumerate()
                        .any(|(x, &on)| on && t.residues.iter().any(|&r| (x + r as usize) % b as usize == a));
                    prop_assert_eq!(t.reachable[s][a], expect);
                }
            }
            if let Some(s1) = t.s1 {
                prop_assert!((s1..=s_max).all(|s| t.is_full(s)));
                prop_assert!(s1 == 1 || !t.is_full(s1 - 1));
            }
        }
    }

    #[test]
    fn theoretical_and_empirical_modes() {
        let t = sieve(100_000).unwrap();
        let p100 = SetDescriptor::index_progression(100, 1).unwrap();
        let tab = congruence_solvability(&p100, 4, 20, ResidueMode::Theoretical, &t).unwrap();
        assert_eq!(tab.residues, vec![1, 2, 3]);
        assert!(tab.s1.is_some());
        let emp = congruence_solvability(&p100, 4, 20, ResidueMode::Empirical { x: 100_000 }, &t).unwrap();
        assert_eq!(emp.residues, vec![1, 2, 3]);
        let only_two = SetDescriptor::explicit(vec![2], Ratio::new(1, 1)).unwrap();
        let tab = congruence_solvability(&only_two, 2, 10, ResidueMode::Empirical { x: 1000 }, &t).unwrap();
        assert_eq!(tab.s1, None);
        let none = SetDescriptor::explicit(vec![99_991], Ratio::new(1, 1)).unwrap();
        assert!(congruence_solvability(&none, 3, 5, ResidueMode::Empirical { x: 1000 }, &t).is_err());
    }

    #[test]
    fn shiu_runs() {
        let t = sieve(100_000).unwrap();
        let runs = shiu_scan(1, 2, &t).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!((runs[0].r, runs[0].start_prime), (1, 3));
        assert_eq!(runs[0].length as usize, t.count() - 1);
        assert!(shiu_scan(2, 4, &t).is_err());

        let runs = shiu_scan(1, 4, &t).unwrap();
        let primes = t.primes();
        for w in runs.windows(2) {
            assert!(w[0].length < w[1].length && w[0].r <= w[1].r);
        }
        for run in &runs {
            let r = run.r as usize;
            assert!(primes[r..r + run.length as usize].iter().all(|p| p % 4 == 1));
            assert!(r == 0 || primes[r - 1] % 4 != 1);
            assert!(r + (run.length as usize) == primes.len() || primes[r + run.length as usize] % 4 != 1);
        }
        // oracle: longest run by a separate pass
        let mut best = 0;
        let mut cur = 0;
        for p in primes {
            cur = if p % 4 == 1 { cur + 1 } else { 0 };
            best = best.max(cur);
        }
        assert_eq!(runs.last().unwrap().length, best);
    }

    #[test]
    fn progression_hits() {
        let t = sieve(1000).unwrap();
        let all = SetDescriptor::index_progression(1, 1).unwrap();
        let hits = prop_statue_check(&all, 1, 4, 3, &t).unwrap();
        assert_eq!(hits.primes, vec![5, 13, 17]);
        assert!(!hits.exhausted);
        let hits = prop_statue_check(&all, 1, 4, 10_000, &t).unwrap();
        assert!(hits.exhausted);
        assert!(prop_statue_check(&all, 2, 4, 3, &t).is_err());
    }

    #[test]
    fn three_prime_decompositions() {
        let t = sieve(200_000).unwrap();
        let [a, b, c] = haselgrove_decompose(21, 0.99, &t).unwrap().unwrap();
        assert_eq!(a + b + c, 21);
        for p in [a, b, c] {
            assert!(t.is_prime(p).unwrap() && (p as f64 - 7.0).abs() < 21f64.powf(0.99));
        }
        assert!(haselgrove_decompose(22, 0.99, &t).is_err());
        assert!(haselgrove_decompose(21, 0.9, &t).is_err());
        assert!(haselgrove_decompose(300_001, 0.99, &t).is_err());
        // brute-force oracle for small odd n: a decomposition exists exactly
        // when some triple of primes in the window exists
        for n in (7..400u64).step_by(2) {
            let w = (n as f64).powf(0.99);
            let ps: Vec<u64> = t.primes_up_to(n).unwrap().iter().copied().filter(|&p| (p as f64 - n as f64 / 3.0).abs() < w).collect();
            let exists = ps.iter().any(|&x| ps.iter().any(|&y| x + y < n && ps.contains(&(n - x - y))));
            assert_eq!(haselgrove_decompose(n, 0.99, &t).unwrap().is_some(), exists, "n = {n}");
        }
    }

    #[test]
    fn many_prime_decompositions() {
        let t = sieve(200_000).unwrap();
        let d = vinny_decompose(100_001, 6, &t).unwrap().unwrap();
        assert!(d.constructive);
        assert_eq!(&d.parts[3..], &[2, 2, 2]);
        for &p in &d.parts[..3] {
            assert!((p as f64 - 99_995.0 / 3.0).abs() < 1000.0);
        }
        for n in [12u64, 13, 40, 101, 998, 999, 1000, 1001, 5000] {
            for s in [6u64, 7, 9] {
                if n < 2 * s {
                    continue;
                }
                if let Some(d) = vinny_decompose(n, s, &t).unwrap() {
                    assert_eq!(d.parts.iter().sum::<u64>(), n);
                    assert!(d.parts.iter().all(|&p| p == 2 || 12 * p >= n));
                }
            }
        }
        assert!(vinny_decompose(1000, 6, &t).unwrap().is_some());
        assert!(vinny_decompose(100, 5, &t).is_err());
        assert!(vinny_decompose(11, 6, &t).is_err());
    }
}
