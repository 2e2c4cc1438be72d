//! Prime sieve and von Mangoldt tables.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

const CACHE_MAGIC: &[u8; 8] = b"SPFCACH1";

/// Smallest-prime-factor table with derived von Mangoldt values and
/// prime flags for `x <= N`.
pub struct SieveTable {
    pub n: u64,
    /// smallest prime factor, spf[0] = spf[1] = 0
    pub spf: Vec<u64>,
    /// Lambda(x): log p on prime powers p^k, 0 otherwise
    pub lambda: Vec<f64>,
    pub is_prime: Vec<bool>,
}

impl SieveTable {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadArgument(format!("sieve bound {n} < 2")));
        }
        let spf = sieve_spf(n);
        Ok(Self::from_spf(n, spf))
    }

    fn from_spf(n: u64, spf: Vec<u64>) -> Self {
        let size = (n + 1) as usize;
        let mut lambda = vec![0.0f64; size];
        let mut is_prime = vec![false; size];
        for x in 2..=n {
            let xi = x as usize;
            let p = spf[xi];
            is_prime[xi] = p == x;
            // x is a prime power iff dividing out p repeatedly reaches 1
            let mut y = x;
            while y % p == 0 {
                y /= p;
            }
            if y == 1 {
                lambda[xi] = (p as f64).ln();
            }
        }
        SieveTable {
            n,
            spf,
            lambda,
            is_prime,
        }
    }

    pub fn lambda(&self, x: u64) -> f64 {
        self.lambda[x as usize]
    }

    /// Chebyshev psi(m) = sum_{x <= m} Lambda(x), pairwise-summed.
    pub fn psi(&self, m: u64) -> f64 {
        pairwise_sum(&self.lambda[..=(m as usize)])
    }

    /// psi restricted to the residue class `l mod q`.
    pub fn psi_residue(&self, m: u64, q: u64, l: u64) -> f64 {
        let vals: Vec<f64> = (1..=m)
            .filter(|x| x % q == l % q)
            .map(|x| self.lambda[x as usize])
            .collect();
        pairwise_sum(&vals)
    }

    pub fn primes(&self) -> Vec<u64> {
        (2..=self.n).filter(|&x| self.is_prime[x as usize]).collect()
    }

    /// Cache format: 16-byte header (magic, N as u64 LE), then the spf
    /// array as little-endian u64. Lambda is recomputed on load.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(CACHE_MAGIC)?;
        f.write_all(&self.n.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.spf.len() * 8);
        for &v in &self.spf {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut header = [0u8; 16];
        f.read_exact(&mut header)?;
        if &header[..8] != CACHE_MAGIC {
            return Err(Error::Parse("bad sieve cache magic".into()));
        }
        let n = u64::from_le_bytes(header[8..16].try_into().unwrap());
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        if buf.len() != ((n + 1) as usize) * 8 {
            return Err(Error::Parse("sieve cache truncated".into()));
        }
        let spf: Vec<u64> = buf
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self::from_spf(n, spf))
    }
}

/// Linear (Euler) sieve for smallest prime factors.
fn sieve_spf(n: u64) -> Vec<u64> {
    let size = (n + 1) as usize;
    let mut spf = vec![0u64; size];
    let mut primes: Vec<u64> = Vec::new();
    for x in 2..=n {
        if spf[x as usize] == 0 {
            spf[x as usize] = x;
            primes.push(x);
        }
        for &p in &primes {
            if p > spf[x as usize] || p * x > n {
                break;
            }
            spf[(p * x) as usize] = p;
        }
    }
    spf
}

/// Pairwise (cascade) summation for stable accumulation of long float sums.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1..=8 => v.iter().sum(),
        len => {
            let mid = len / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Kahan compensated accumulator for complex sums built incrementally.
#[derive(Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_small_values() {
        let s = SieveTable::new(10).unwrap();
        assert_eq!(s.lambda(8), 2f64.ln());
        assert_eq!(s.lambda(9), 3f64.ln());
        assert_eq!(s.lambda(7), 7f64.ln());
        assert_eq!(s.lambda(6), 0.0);
        assert_eq!(s.lambda(1), 0.0);
    }

    #[test]
    fn psi_10_is_log_2520() {
        // psi(10) = 3 log 2 + 2 log 3 + log 5 + log 7 = log 2520
        let s = SieveTable::new(10).unwrap();
        let oracle = 3.0 * 2f64.ln() + 2.0 * 3f64.ln() + 5f64.ln() + 7f64.ln();
        assert!((s.psi(10) - oracle).abs() < 1e-12);
        assert!((s.psi(10) - 2520f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn psi_matches_direct_prime_enumeration() {
        // cross-check against a direct enumeration at N = 10^4
        let n = 10_000u64;
        let s = SieveTable::new(n).unwrap();
        let mut direct = 0.0;
        for p in s.primes() {
            let mut pk = p;
            while pk <= n {
                direct += (p as f64).ln();
                pk = pk.saturating_mul(p);
            }
        }
        assert!((s.psi(n) - direct).abs() < 1e-6 * direct);
    }

    #[test]
    fn psi_residue_partition() {
        let s = SieveTable::new(1000).unwrap();
        let q = 7;
        let total: f64 = (0..q).map(|l| s.psi_residue(1000, q, l)).sum();
        assert!((total - s.psi(1000)).abs() < 1e-9);
    }

    #[test]
    fn cache_roundtrip() {
        let dir = std::env::temp_dir().join("circle-core-test-sieve");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("spf_100.bin");
        let s = SieveTable::new(100).unwrap();
        s.write_cache(&path).unwrap();
        let back = SieveTable::read_cache(&path).unwrap();
        assert_eq!(back.n, 100);
        assert_eq!(back.spf, s.spf);
        assert_eq!(back.lambda, s.lambda);
    }
}
