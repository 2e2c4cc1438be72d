//! The weighted prime-point count M_{p,s}(N) and the end-to-end
//! comparison against the local-times-archimedean prediction.
//!
//! Diagonal scalar systems count through per-variable value histograms
//! convolved along the variables (dense arrays when the value range is
//! small, hashed accumulation otherwise); everything else enumerates
//! tuples over the von Mangoldt support directly, under a strict budget.

use std::collections::HashMap;

use crate::arch::singular_integral;
use crate::local::singular_series;
use crate::poly::PolynomialSystem;
use crate::sieve::SieveTable;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    Weighted,
    PrimeOnly,
}

#[derive(Clone, Debug)]
pub struct CountResult {
    pub n_bound: u64,
    pub s: Vec<i64>,
    /// M_{p,s}(N) with the full Lambda weight
    pub weighted: f64,
    /// unweighted count over prime coordinates only
    pub prime_only: u64,
    /// the part of `weighted` with at least one proper prime-power coordinate
    pub prime_power_weighted: f64,
}

impl CountResult {
    pub fn by_mode(&self, mode: CountMode) -> f64 {
        match mode {
            CountMode::Weighted => self.weighted,
            CountMode::PrimeOnly => self.prime_only as f64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PredictionComparison {
    pub n_bound: u64,
    pub s: Vec<i64>,
    pub count_weighted: f64,
    pub count_prime_only: u64,
    pub prime_power_weighted: f64,
    /// S(s,Q) * J(N^{-d}s; Phi) * N^{n-D}
    pub predicted: f64,
    pub singular_series: f64,
    pub singular_integral: f64,
    pub relative_error: f64,
    /// the (log N)^{-1} heuristic scale of the neglected error term
    pub log_error_scale: f64,
}

impl PredictionComparison {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "N": self.n_bound,
            "s": self.s,
            "count_weighted": self.count_weighted,
            "count_prime_only": self.count_prime_only,
            "prime_power_weighted": self.prime_power_weighted,
            "predicted": self.predicted,
            "singular_series": self.singular_series,
            "singular_integral": self.singular_integral,
            "relative_error": self.relative_error,
            "log_error_scale": self.log_error_scale,
        })
    }
}

/// Per-variable accumulator triple: Lambda weight, Lambda restricted to
/// primes, prime indicator count.
#[derive(Clone, Copy, Default)]
struct Acc {
    w: f64,
    wp: f64,
    np: u64,
}

impl Acc {
    fn mul(self, o: Acc) -> Acc {
        Acc {
            w: self.w * o.w,
            wp: self.wp * o.wp,
            np: self.np * o.np,
        }
    }

    fn add(&mut self, o: Acc) {
        self.w += o.w;
        self.wp += o.wp;
        self.np += o.np;
    }
}

const DENSE_LIMIT: i128 = 1 << 27;
const ENUM_BUDGET: u128 = 40_000_000;

/// Key-sorted view of a value map; convolution loops run in this order
/// so float accumulation is deterministic across runs.
fn sorted_entries(m: &HashMap<i128, Acc>) -> Vec<(i128, Acc)> {
    let mut v: Vec<(i128, Acc)> = m.iter().map(|(&k, &a)| (k, a)).collect();
    v.sort_unstable_by_key(|&(k, _)| k);
    v
}

fn hashed_convolve(a: &[(i128, Acc)], b: &[(i128, Acc)]) -> HashMap<i128, Acc> {
    let mut out: HashMap<i128, Acc> = HashMap::with_capacity(a.len().max(b.len()));
    for &(va, ca) in a {
        for &(vb, cb) in b {
            out.entry(va + vb).or_default().add(ca.mul(cb));
        }
    }
    out
}

/// Diagonal r=1 fast path: histogram of slice values per coordinate,
/// then value-space convolution.
fn count_diagonal(
    system: &PolynomialSystem,
    s: i64,
    n_bound: u64,
    sieve: &SieveTable,
) -> Result<CountResult> {
    let slices = &system.diagonal_slices()[0];
    // per-variable value maps over the Lambda support
    let mut maps: Vec<HashMap<i128, Acc>> = Vec::with_capacity(system.n);
    for u in slices.iter() {
        let mut m: HashMap<i128, Acc> = HashMap::new();
        for x in 2..=n_bound {
            let lam = sieve.lambda(x);
            if lam == 0.0 {
                continue;
            }
            let v = u
                .evaluate::<i128>(&[x as i128])
                .map_err(|_| Error::BadArgument("diagonal slice evaluation failed".into()))?;
            let acc = m.entry(v).or_default();
            acc.w += lam;
            if sieve.is_prime[x as usize] {
                acc.wp += lam;
                acc.np += 1;
            }
        }
        maps.push(m);
    }
    maps.sort_by_key(|m| m.len());
    let maps: Vec<Vec<(i128, Acc)>> = maps.iter().map(sorted_entries).collect();
    let mut acc: Vec<(i128, Acc)> = vec![(0, Acc { w: 1.0, wp: 1.0, np: 1 })];
    for m in &maps {
        // dense when the combined value range is small enough
        let (lo_a, hi_a) = span(&acc);
        let (lo_m, hi_m) = span(m);
        let range = (hi_a + hi_m) - (lo_a + lo_m) + 1;
        if range > 0 && range <= DENSE_LIMIT && acc.len() as i128 * m.len() as i128 > range {
            let lo = lo_a + lo_m;
            let mut dense = vec![Acc::default(); range as usize];
            for &(va, ca) in &acc {
                for &(vb, cb) in m {
                    dense[(va + vb - lo) as usize].add(ca.mul(cb));
                }
            }
            acc = dense
                .into_iter()
                .enumerate()
                .filter(|(_, a)| a.w != 0.0 || a.np != 0)
                .map(|(i, a)| (lo + i as i128, a))
                .collect();
        } else {
            acc = sorted_entries(&hashed_convolve(&acc, m));
        }
    }
    let hit = acc
        .binary_search_by_key(&(s as i128), |&(k, _)| k)
        .map(|i| acc[i].1)
        .unwrap_or_default();
    Ok(CountResult {
        n_bound,
        s: vec![s],
        weighted: hit.w,
        prime_only: hit.np,
        prime_power_weighted: hit.w - hit.wp,
    })
}

fn span(m: &[(i128, Acc)]) -> (i128, i128) {
    let lo = m.first().map_or(0, |&(k, _)| k);
    let hi = m.last().map_or(0, |&(k, _)| k);
    (lo, hi)
}

pub fn count_prime_points(
    system: &PolynomialSystem,
    s: &[i64],
    n_bound: u64,
    sieve: &SieveTable,
) -> Result<CountResult> {
    if s.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: s.len(),
        });
    }
    if sieve.n < n_bound {
        return Err(Error::BadArgument(format!(
            "sieve covers {} < N = {n_bound}",
            sieve.n
        )));
    }
    if system.is_diagonal() && system.r() == 1 {
        return count_diagonal(system, s[0], n_bound, sieve);
    }
    // direct enumeration over the Lambda support
    let support: Vec<u64> = (2..=n_bound).filter(|&x| sieve.lambda(x) > 0.0).collect();
    let total = (support.len() as u128)
        .checked_pow(system.n as u32)
        .unwrap_or(u128::MAX);
    if system.n > 4 || n_bound > 300 || total > ENUM_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "general systems need n <= 4 and N <= 300; got n = {}, N = {n_bound}",
            system.n
        )));
    }
    let s128: Vec<i128> = s.iter().map(|&x| x as i128).collect();
    let n = system.n;
    let mut idx = vec![0usize; n];
    let mut point = vec![support[0] as i128; n];
    let mut weighted = 0.0f64;
    let mut prime_weighted = 0.0f64;
    let mut prime_only = 0u64;
    if support.is_empty() {
        return Ok(CountResult {
            n_bound,
            s: s.to_vec(),
            weighted: 0.0,
            prime_only: 0,
            prime_power_weighted: 0.0,
        });
    }
    loop {
        let vals = system
            .evaluate::<i128>(&point)
            .map_err(|_| Error::BadArgument("evaluation failed".into()))?;
        if vals == s128 {
            let mut w = 1.0f64;
            let mut all_prime = true;
            for &xi in &point {
                w *= sieve.lambda(xi as u64);
                all_prime &= sieve.is_prime[xi as usize];
            }
            weighted += w;
            if all_prime {
                prime_weighted += w;
                prime_only += 1;
            }
        }
        let mut j = 0;
        loop {
            if j == n {
                return Ok(CountResult {
                    n_bound,
                    s: s.to_vec(),
                    weighted,
                    prime_only,
                    prime_power_weighted: weighted - prime_weighted,
                });
            }
            idx[j] += 1;
            if idx[j] < support.len() {
                point[j] = support[idx[j]] as i128;
                break;
            }
            idx[j] = 0;
            point[j] = support[0] as i128;
            j += 1;
        }
    }
}

pub fn compare_with_prediction(
    system: &PolynomialSystem,
    s: &[i64],
    n_bound: u64,
    q_max: u64,
    phi: f64,
    sieve: &SieveTable,
) -> Result<PredictionComparison> {
    let count = count_prime_points(system, s, n_bound, sieve)?;
    let series = singular_series(system, s, q_max)?;
    let top = system.top_forms();
    let mu: Vec<f64> = top
        .polys
        .iter()
        .zip(s)
        .map(|(p, &si)| si as f64 / (n_bound as f64).powi(p.degree().unwrap_or(1) as i32))
        .collect();
    let j = singular_integral(&top, &mu, phi)?;
    let d_total = system.total_degree();
    let exponent = system.n as i64 - d_total as i64;
    let scale = (n_bound as f64).powi(exponent as i32);
    let predicted = series.value * j.value * scale;
    let denom = predicted.abs().max(1e-12 * scale);
    let relative_error = (count.weighted - predicted).abs() / denom;
    Ok(PredictionComparison {
        n_bound,
        s: s.to_vec(),
        count_weighted: count.weighted,
        count_prime_only: count.prime_only,
        prime_power_weighted: count.prime_power_weighted,
        predicted,
        singular_series: series.value,
        singular_integral: j.value,
        relative_error,
        log_error_scale: 1.0 / (n_bound as f64).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    fn sys(src: &str, n: usize) -> PolynomialSystem {
        parse_system(src, n).unwrap()
    }

    fn ternary() -> PolynomialSystem {
        sys("x1 + x2 + x3", 3)
    }

    #[test]
    fn ternary_small_oracles() {
        let sieve = SieveTable::new(10).unwrap();
        // 9 = 2+2+5 (3 orders) + 3+3+3
        let c = count_prime_points(&ternary(), &[9], 10, &sieve).unwrap();
        assert_eq!(c.prime_only, 4);
        // 10 = 2+3+5 in 6 orders; plus prime powers 4+3+3, 2+4+4, 8+...
        let c = count_prime_points(&ternary(), &[10], 10, &sieve).unwrap();
        assert_eq!(c.prime_only, 6);
        assert!(c.prime_power_weighted > 0.0);
        // below the minimum attainable value
        let c = count_prime_points(&ternary(), &[5], 10, &sieve).unwrap();
        assert_eq!(c.prime_only, 0);
        assert_eq!(c.weighted, 0.0);
    }

    #[test]
    fn fast_path_matches_enumeration() {
        let sieve = SieveTable::new(60).unwrap();
        let systems = [
            sys("x1 + 2*x2 + x3", 3),
            sys("x1^2 + x2^2", 2),
            sys("x1^2 + x2 + x3", 3),
        ];
        for s in &systems {
            for target in [20i64, 29, 50, 101] {
                let fast = count_prime_points(s, &[target], 60, &sieve).unwrap();
                // force the general path with a structurally identical
                // non-diagonal copy: add and subtract a mixed term
                let mut general_weighted = 0.0f64;
                let mut general_prime = 0u64;
                let support: Vec<u64> =
                    (2..=60).filter(|&x| sieve.lambda(x) > 0.0).collect();
                let n = s.n;
                let mut idx = vec![0usize; n];
                loop {
                    let point: Vec<i128> = idx.iter().map(|&i| support[i] as i128).collect();
                    let vals = s.evaluate::<i128>(&point).unwrap();
                    if vals[0] == target as i128 {
                        let w: f64 = point.iter().map(|&x| sieve.lambda(x as u64)).product();
                        general_weighted += w;
                        if point.iter().all(|&x| sieve.is_prime[x as usize]) {
                            general_prime += 1;
                        }
                    }
                    let mut j = 0;
                    loop {
                        if j == n {
                            break;
                        }
                        idx[j] += 1;
                        if idx[j] < support.len() {
                            break;
                        }
                        idx[j] = 0;
                        j += 1;
                    }
                    if idx.iter().all(|&i| i == 0) {
                        break;
                    }
                }
                assert_eq!(fast.prime_only, general_prime, "s={target}");
                assert!(
                    (fast.weighted - general_weighted).abs()
                        <= 1e-9 * general_weighted.abs().max(1.0),
                    "s={target}"
                );
            }
        }
    }

    #[test]
    fn coefficient_permutation_symmetry() {
        let sieve = SieveTable::new(100).unwrap();
        let a = sys("x1^2 + 3*x2^2", 2);
        let b = sys("3*x1^2 + x2^2", 2);
        for target in [28i64, 75, 172] {
            let ca = count_prime_points(&a, &[target], 100, &sieve).unwrap();
            let cb = count_prime_points(&b, &[target], 100, &sieve).unwrap();
            assert_eq!(ca.prime_only, cb.prime_only);
            assert!((ca.weighted - cb.weighted).abs() < 1e-9);
        }
    }

    #[test]
    fn weighted_count_monotone_in_n() {
        let sieve = SieveTable::new(200).unwrap();
        let s = ternary();
        let mut prev = 0.0;
        for nb in [50u64, 100, 150, 200] {
            let c = count_prime_points(&s, &[97], nb, &sieve).unwrap();
            assert!(c.weighted >= prev * (1.0 - 1e-9) - 1e-9);
            prev = c.weighted;
        }
    }

    #[test]
    fn budget_rejects_large_general_system() {
        let sieve = SieveTable::new(400).unwrap();
        let s = sys("x1*x2 + x3*x4", 4);
        assert!(matches!(
            count_prime_points(&s, &[100], 400, &sieve),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn ternary_goldbach_prediction_smoke() {
        // small-scale version of the end-to-end comparison
        let sieve = SieveTable::new(2000).unwrap();
        let c = compare_with_prediction(&ternary(), &[3001], 2000, 60, 32.0, &sieve).unwrap();
        assert!(c.count_weighted > 0.0);
        assert!(c.predicted > 0.0);
        assert!(c.relative_error < 0.2, "{}", c.relative_error);
        // even target: 2-adic factor suppresses the prediction and the
        // all-prime count is dominated by pairs involving 2
        let c = compare_with_prediction(&ternary(), &[3000], 2000, 60, 32.0, &sieve).unwrap();
        assert!(c.predicted.abs() < 0.05 * 2000.0f64.powi(2), "{}", c.predicted);
    }
}
