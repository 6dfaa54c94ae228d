//! Prime generation, indexing and the on-disk prime cache.
//!
//! Primes are produced by a segmented, odd-only sieve of Eratosthenes. The
//! resulting [`PrimeTable`] is immutable and shared read-only by every other
//! module; `primes[i]` is the `(i + 1)`-th prime, so prime indices are 1-based.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{domain, Error, Result};

/// Odd numbers per sieve segment.
pub const SEGMENT_ENTRIES: usize = 1 << 20;

/// Largest limit accepted by [`sieve`]. At 10^10 the table alone is about
/// 3.6 GB of `u64`s, which is the practical ceiling for a desk machine.
pub const MAX_SIEVE_LIMIT: u64 = 10_000_000_000;

const CACHE_MAGIC: &[u8; 4] = b"TZPT";
const CACHE_VERSION: u8 = 1;

#[derive(Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl std::fmt::Debug for PrimeTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrimeTable")
            .field("limit", &self.limit)
            .field("count", &self.primes.len())
            .finish()
    }
}

/// Sieves all primes `<= limit`.
pub fn sieve(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return domain(format!("sieve limit must be at least 2, got {limit}"));
    }
    if limit > MAX_SIEVE_LIMIT {
        return Err(Error::Resource(format!(
            "sieve limit {limit} exceeds the memory ceiling {MAX_SIEVE_LIMIT}"
        )));
    }
    Ok(PrimeTable {
        limit,
        primes: segmented_sieve(limit),
    })
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Plain odd-only sieve used for the base primes.
fn small_odd_primes(limit: u64) -> Vec<u64> {
    if limit < 3 {
        return Vec::new();
    }
    // index i represents 2i + 1
    let n = ((limit - 1) / 2) as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 1..=n {
        if composite[i] {
            continue;
        }
        let p = 2 * i as u64 + 1;
        out.push(p);
        let start = (p * p - 1) / 2;
        if start as usize <= n {
            let mut j = start as usize;
            while j <= n {
                composite[j] = true;
                j += p as usize;
            }
        }
    }
    out
}

fn segmented_sieve(limit: u64) -> Vec<u64> {
    let estimate = (limit as f64 / (limit as f64).ln() * 1.15) as usize + 16;
    let mut primes = Vec::with_capacity(estimate);
    primes.push(2);
    if limit < 3 {
        return primes;
    }
    let base = small_odd_primes(isqrt(limit));
    // next odd index to strike for each base prime, starting at p^2
    let mut next: Vec<u64> = base.iter().map(|&p| (p * p - 1) / 2).collect();
    let last_index = (limit - 1) / 2;
    let mut buf = vec![true; SEGMENT_ENTRIES];
    let mut lo = 1u64;
    while lo <= last_index {
        let hi = (lo + SEGMENT_ENTRIES as u64).min(last_index + 1);
        let len = (hi - lo) as usize;
        buf[..len].fill(true);
        for (k, &p) in base.iter().enumerate() {
            let mut j = next[k];
            if j >= hi {
                continue;
            }
            while j < hi {
                buf[(j - lo) as usize] = false;
                j += p;
            }
            next[k] = j;
        }
        primes.extend(
            buf[..len]
                .iter()
                .enumerate()
                .filter(|(_, &is_p)| is_p)
                .map(|(i, _)| 2 * (lo + i as u64) + 1),
        );
        lo = hi;
    }
    primes
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn count(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Primes `<= x` as a slice. `x` must not exceed the limit.
    pub fn primes_up_to(&self, x: u64) -> Result<&[u64]> {
        let n = self.pi(x)?;
        Ok(&self.primes[..n])
    }

    fn check_range(&self, x: u64) -> Result<()> {
        if x > self.limit {
            return Err(Error::OutOfRange(format!(
                "{x} exceeds the sieve limit {}",
                self.limit
            )));
        }
        Ok(())
    }

    /// π(x) for integer x.
    pub fn pi(&self, x: u64) -> Result<usize> {
        self.check_range(x)?;
        Ok(self.primes.partition_point(|&p| p <= x))
    }

    /// π(x) for real x.
    pub fn pi_real(&self, x: f64) -> Result<usize> {
        if x.is_nan() || x < 0.0 {
            return domain(format!("pi requires x >= 0, got {x}"));
        }
        if x > self.limit as f64 {
            return Err(Error::OutOfRange(format!(
                "{x} exceeds the sieve limit {}",
                self.limit
            )));
        }
        self.pi(x.floor() as u64)
    }

    /// The n-th prime p_n (1-based).
    pub fn nth_prime(&self, n: usize) -> Result<u64> {
        if n == 0 || n > self.primes.len() {
            return Err(Error::OutOfRange(format!(
                "prime index {n} outside 1..={}",
                self.primes.len()
            )));
        }
        Ok(self.primes[n - 1])
    }

    /// The index n with p_n = p.
    pub fn prime_index(&self, p: u64) -> Result<usize> {
        self.check_range(p)?;
        self.primes
            .binary_search(&p)
            .map(|i| i + 1)
            .map_err(|_| Error::NotPrime(p))
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        self.check_range(n)?;
        Ok(self.primes.binary_search(&n).is_ok())
    }

    /// The table restricted to primes `<= limit`.
    pub fn truncated(&self, limit: u64) -> Result<PrimeTable> {
        if limit < 2 {
            return domain(format!("sieve limit must be at least 2, got {limit}"));
        }
        let n = self.pi(limit)?;
        Ok(PrimeTable {
            limit,
            primes: self.primes[..n].to_vec(),
        })
    }

    /// Writes the cache format: `"TZPT"`, version byte, then little-endian
    /// u64 limit, u64 count and `count` u64 primes.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&[CACHE_VERSION])?;
        w.write_all(&self.limit.to_le_bytes())?;
        w.write_all(&(self.primes.len() as u64).to_le_bytes())?;
        let mut chunk = Vec::with_capacity(8 * 8192);
        for block in self.primes.chunks(8192) {
            chunk.clear();
            for p in block {
                chunk.extend_from_slice(&p.to_le_bytes());
            }
            w.write_all(&chunk)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<PrimeTable> {
        let mut r = BufReader::new(r);
        let mut header = [0u8; 21];
        r.read_exact(&mut header)
            .map_err(|e| Error::Cache(format!("truncated header: {e}")))?;
        if &header[..4] != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        if header[4] != CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported version {}", header[4])));
        }
        let limit = u64::from_le_bytes(header[5..13].try_into().unwrap());
        let count = u64::from_le_bytes(header[13..21].try_into().unwrap());
        if count > limit / 2 + 1 {
            return Err(Error::Cache(format!(
                "count {count} impossible for limit {limit}"
            )));
        }
        let mut primes = Vec::with_capacity(count as usize);
        let mut chunk = vec![0u8; 8 * 8192];
        let mut remaining = count as usize;
        while remaining > 0 {
            let n = remaining.min(8192);
            r.read_exact(&mut chunk[..8 * n])
                .map_err(|e| Error::Cache(format!("truncated body: {e}")))?;
            primes.extend(
                chunk[..8 * n]
                    .chunks_exact(8)
                    .map(|b| u64::from_le_bytes(b.try_into().unwrap())),
            );
            remaining -= n;
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Cache("trailing bytes after prime list".into()));
        }
        if primes.windows(2).any(|w| w[0] >= w[1]) || primes.last().is_some_and(|&p| p > limit) {
            return Err(Error::Cache("prime list not ascending within limit".into()));
        }
        Ok(PrimeTable { limit, primes })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        self.write_to(fs::File::create(&tmp)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PrimeTable> {
        PrimeTable::read_from(fs::File::open(path)?)
    }
}

/// Directory of cached tables, one file per sieved limit.
#[derive(Debug, Clone)]
pub struct PrimeCache {
    dir: PathBuf,
}

impl PrimeCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        PrimeCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, limit: u64) -> PathBuf {
        self.dir.join(format!("primes-{limit}.tzpt"))
    }

    fn cached_limits(&self) -> Vec<u64> {
        let Ok(entries) = fs::read_dir(&self.dir) else {
            return Vec::new();
        };
        let mut limits: Vec<u64> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_prefix("primes-")?
                    .strip_suffix(".tzpt")?
                    .parse()
                    .ok()
            })
            .collect();
        limits.sort_unstable();
        limits
    }

    /// Returns a table for `limit`, reusing the smallest cached table whose
    /// limit covers the request. Sieves and stores a new file otherwise.
    pub fn get(&self, limit: u64) -> Result<PrimeTable> {
        if limit < 2 {
            return domain(format!("sieve limit must be at least 2, got {limit}"));
        }
        for cached in self.cached_limits().into_iter().filter(|&c| c >= limit) {
            if let Ok(table) = PrimeTable::load(&self.path_for(cached)) {
                return if cached == limit {
                    Ok(table)
                } else {
                    table.truncated(limit)
                };
            }
        }
        let table = sieve(limit)?;
        fs::create_dir_all(&self.dir)?;
        table.save(&self.path_for(limit))?;
        Ok(table)
    }
}

/// Euler's totient by trial-division factorization.
pub fn euler_phi(d: u64) -> Result<u64> {
    if d < 1 {
        return domain("euler_phi requires d >= 1");
    }
    let mut n = d;
    let mut phi = d;
    let mut f = 2u64;
    while f * f <= n {
        if n.is_multiple_of(f) {
            while n.is_multiple_of(f) {
                n /= f;
            }
            phi -= phi / f;
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if n > 1 {
        phi -= phi / n;
    }
    Ok(phi)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
