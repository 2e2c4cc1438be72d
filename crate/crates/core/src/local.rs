//! Complete exponential sums over reduced residues, local factors and
//! the truncated singular series.
//!
//! All phases are exact: polynomial values are reduced mod q in integers
//! and mapped through a precomputed q-th root-of-unity table, so the
//! only floating error is in the final compensated summation. Diagonal
//! systems take a per-variable value-table fast path.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;

use crate::poly::PolynomialSystem;
use crate::sieve::Kahan;
use crate::{Complex64, Error, Result};

/// Enumeration budget for sums over `U_q^n` without a fast path.
const ENUM_BUDGET: u128 = 4_000_000;

pub fn units(q: u64) -> Vec<u64> {
    if q == 1 {
        return vec![0];
    }
    (1..q).filter(|&u| u.gcd(&q) == 1).collect()
}

pub fn euler_phi(q: u64) -> u64 {
    units(q).len() as u64
}

/// e(k/q) for k = 0..q.
pub fn roots_of_unity(q: u64) -> Vec<Complex64> {
    (0..q)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (q as f64);
            Complex64::new(th.cos(), th.sin())
        })
        .collect()
}

/// `W_{a,q} = sum_{g in U_q^n} e(p(g) . a / q)`.
#[derive(Clone, Debug)]
pub struct ResidueSum {
    pub q: u64,
    pub a: Vec<u64>,
    pub value: Complex64,
    /// phi(q)^n, the number of terms
    pub n_terms: f64,
}

/// Per-variable value tables for diagonal systems: with
/// `p_i(g) = c_i + sum_j s_{ij}(g_j)`, stores `s_{ij}(u) mod q` for every
/// unit u.
struct DiagTables {
    q: u64,
    /// constant term of each form mod q
    consts: Vec<u64>,
    /// [variable][unit index][form]
    slice: Vec<Vec<Vec<u64>>>,
}

fn diag_tables(system: &PolynomialSystem, q: u64) -> Option<DiagTables> {
    if !system.is_diagonal() {
        return None;
    }
    let us = units(q);
    let zero = vec![0u64; system.n];
    let consts = system.evaluate_mod(&zero, q);
    let mut slice = Vec::with_capacity(system.n);
    for j in 0..system.n {
        let mut per_unit = Vec::with_capacity(us.len());
        for &u in &us {
            let mut point = zero.clone();
            point[j] = u % q;
            let vals = system.evaluate_mod(&point, q);
            per_unit.push(
                vals.iter()
                    .zip(&consts)
                    .map(|(v, c)| (v + q - c) % q)
                    .collect(),
            );
        }
        slice.push(per_unit);
    }
    Some(DiagTables { q, consts, slice })
}

impl DiagTables {
    /// `W_{a,q}` as a product of one-variable unit sums.
    fn residue_sum(&self, a: &[u64], roots: &[Complex64]) -> Complex64 {
        let q = self.q as u128;
        let phase = |vals: &[u64]| -> usize {
            let acc: u128 = vals
                .iter()
                .zip(a)
                .map(|(&v, &ai)| (v as u128 * ai as u128) % q)
                .sum::<u128>()
                % q;
            acc as usize
        };
        let mut w = roots[phase(&self.consts)];
        for per_unit in &self.slice {
            let mut re = Kahan::default();
            let mut im = Kahan::default();
            for vals in per_unit {
                let z = roots[phase(vals)];
                re.add(z.re);
                im.add(z.im);
            }
            w *= Complex64::new(re.value(), im.value());
        }
        w
    }
}

fn check_reduced(system: &PolynomialSystem, q: u64, a: &[u64]) -> Result<()> {
    if a.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: a.len(),
        });
    }
    for &ai in a {
        if ai >= q.max(1) {
            return Err(Error::BadArgument(format!("a = {ai} not reduced mod {q}")));
        }
        if q > 1 && ai.gcd(&q) != 1 {
            return Err(Error::BadArgument(format!("a = {ai} not a unit mod {q}")));
        }
    }
    Ok(())
}

/// Iterate over `U_q^n` as an odometer over unit indices.
fn for_each_unit_point(us: &[u64], n: usize, mut f: impl FnMut(&[u64])) {
    let mut idx = vec![0usize; n];
    let mut point: Vec<u64> = vec![us[0]; n];
    loop {
        f(&point);
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            idx[k] += 1;
            if idx[k] < us.len() {
                point[k] = us[idx[k]];
                break;
            }
            idx[k] = 0;
            point[k] = us[0];
            k += 1;
        }
    }
}

pub fn residue_sum(system: &PolynomialSystem, q: u64, a: &[u64]) -> Result<ResidueSum> {
    if q == 0 {
        return Err(Error::BadArgument("modulus must be positive".into()));
    }
    check_reduced(system, q, a)?;
    let n = system.n;
    let phi = euler_phi(q);
    let n_terms = (phi as f64).powi(n as i32);
    let roots = roots_of_unity(q);

    let value = if let Some(tab) = diag_tables(system, q) {
        tab.residue_sum(a, &roots)
    } else {
        let total = (phi as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if total > ENUM_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "phi({q})^{n} = {total} terms exceeds the enumeration budget"
            )));
        }
        let us = units(q);
        let mut re = Kahan::default();
        let mut im = Kahan::default();
        for_each_unit_point(&us, n, |point| {
            let vals = system.evaluate_mod(point, q);
            let phase: u128 = vals
                .iter()
                .zip(a)
                .map(|(&v, &ai)| (v as u128 * ai as u128) % q as u128)
                .sum::<u128>()
                % q as u128;
            let z = roots[phase as usize];
            re.add(z.re);
            im.add(z.im);
        });
        Complex64::new(re.value(), im.value())
    };
    Ok(ResidueSum {
        q,
        a: a.to_vec(),
        value,
        n_terms,
    })
}

/// `B(s,q) = sum_{a in U_q^r} phi(q)^{-n} W_{a,q} e(-s.a/q)`; the value
/// is real by conjugation symmetry, and a non-real result is an error.
pub fn b_coefficient(system: &PolynomialSystem, s: &[i64], q: u64) -> Result<f64> {
    if q == 0 {
        return Err(Error::BadArgument("modulus must be positive".into()));
    }
    let r = system.r();
    if s.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: s.len(),
        });
    }
    if q == 1 {
        return Ok(1.0);
    }
    let n = system.n;
    let us = units(q);
    let phi = us.len() as u64;
    let roots = roots_of_unity(q);
    let s_mod: Vec<u64> = s.iter().map(|&si| si.rem_euclid(q as i64) as u64).collect();
    let norm = (phi as f64).powi(n as i32);

    let tab = diag_tables(system, q);
    if tab.is_none() {
        let total = (phi as u128)
            .checked_pow((n + r) as u32)
            .unwrap_or(u128::MAX);
        if total > ENUM_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "phi({q})^{} terms exceeds the enumeration budget",
                n + r
            )));
        }
    }

    let mut re = Kahan::default();
    let mut im = Kahan::default();
    for_each_unit_point(&us, r, |a| {
        let w = match &tab {
            Some(t) => t.residue_sum(a, &roots),
            None => residue_sum(system, q, a).expect("validated above").value,
        };
        let twist: u128 = s_mod
            .iter()
            .zip(a)
            .map(|(&si, &ai)| (si as u128 * ai as u128) % q as u128)
            .sum::<u128>()
            % q as u128;
        // e(-s.a/q)
        let z = w * roots[((q as u128 - twist) % q as u128) as usize];
        re.add(z.re);
        im.add(z.im);
    });
    let value = re.value() / norm;
    let imag = im.value() / norm;
    if imag.abs() > 1e-9 * norm.max(1.0) {
        return Err(Error::BadArgument(format!(
            "B(s,{q}) has non-negligible imaginary part {imag}"
        )));
    }
    Ok(value)
}

#[derive(Clone, Debug)]
pub struct LocalFactorTerm {
    pub t: u32,
    /// M(p^t): solutions of p(g) = s over U_{p^t}^n
    pub count: BigInt,
    /// (p^t)^r M(p^t) / phi(p^t)^n
    pub normalized: BigRational,
}

#[derive(Clone, Debug)]
pub struct LocalFactorEstimate {
    pub p: u64,
    pub terms: Vec<LocalFactorTerm>,
    /// first t with normalized(t) = normalized(t+1), exactly
    pub stabilized: Option<u32>,
}

impl LocalFactorEstimate {
    /// Last normalized value as the working estimate of mu_p.
    pub fn value(&self) -> f64 {
        self.terms.last().map_or(1.0, |t| rat_to_f64(&t.normalized))
    }

    pub fn limit(&self) -> Option<BigRational> {
        self.stabilized?;
        self.terms.last().map(|t| t.normalized.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.p,
            "stabilized": self.stabilized,
            "terms": self.terms.iter().map(|t| serde_json::json!({
                "t": t.t,
                "count": t.count.to_string(),
                "normalized": t.normalized.to_string(),
                "normalized_f64": rat_to_f64(&t.normalized),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// M(p^t) by dense histogram convolution over `(Z/p^t)^r`, available for
/// diagonal systems.
fn count_diagonal(system: &PolynomialSystem, s_mod: &[u64], m: u64) -> Option<u128> {
    let r = system.r();
    let size = (m as u128).checked_pow(r as u32)?;
    if size > 40_000_000 || size.checked_mul(size).is_none() {
        return None;
    }
    let tab = diag_tables(system, m)?;
    let size = size as usize;
    let index = |vals: &[u64]| -> usize {
        let mut acc = 0usize;
        for &v in vals.iter().rev() {
            acc = acc * m as usize + v as usize;
        }
        acc
    };
    // start from the constant offset
    let mut acc = vec![0u128; size];
    acc[index(&tab.consts)] = 1;
    for per_unit in &tab.slice {
        let mut hist = vec![0u128; size];
        for vals in per_unit {
            hist[index(vals)] += 1;
        }
        // cyclic convolution per coordinate, implemented as a full
        // r-dimensional convolution over the product group
        let mut next = vec![0u128; size];
        for (ia, &ca) in acc.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            let mut av = vec![0u64; r];
            let mut rest = ia;
            for slot in av.iter_mut() {
                *slot = (rest % m as usize) as u64;
                rest /= m as usize;
            }
            for (ih, &ch) in hist.iter().enumerate() {
                if ch == 0 {
                    continue;
                }
                let mut rest = ih;
                let mut sum = vec![0u64; r];
                for (k, slot) in sum.iter_mut().enumerate() {
                    let hv = (rest % m as usize) as u64;
                    rest /= m as usize;
                    *slot = (av[k] + hv) % m;
                }
                next[index(&sum)] += ca * ch;
            }
        }
        acc = next;
    }
    Some(acc[index(s_mod)])
}

/// Normalized unit-solution counts `(p^t)^r M(p^t) / phi(p^t)^n` for
/// t = 1..t_max, with exact-rational stabilization detection.
pub fn local_factor(
    system: &PolynomialSystem,
    s: &[i64],
    p: u64,
    t_max: u32,
) -> Result<LocalFactorEstimate> {
    if p < 2 {
        return Err(Error::BadArgument(format!("{p} is not prime")));
    }
    if t_max < 1 {
        return Err(Error::BadArgument("t_max must be at least 1".into()));
    }
    let r = system.r();
    if s.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: s.len(),
        });
    }
    let n = system.n;
    let mut terms = Vec::new();
    for t in 1..=t_max {
        let Some(m) = (p as u128).checked_pow(t).and_then(|m| u64::try_from(m).ok()) else {
            break;
        };
        let s_mod: Vec<u64> = s.iter().map(|&si| si.rem_euclid(m as i64) as u64).collect();
        let count: u128 = match count_diagonal(system, &s_mod, m) {
            Some(c) => c,
            None => {
                let us = units(m);
                let total = (us.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
                if total > ENUM_BUDGET {
                    break; // partial sequence
                }
                let mut c = 0u128;
                for_each_unit_point(&us, n, |point| {
                    if system.evaluate_mod(point, m) == s_mod {
                        c += 1;
                    }
                });
                c
            }
        };
        let count = BigInt::from(count);
        let phi = BigInt::from(euler_phi(m));
        let normalized = BigRational::new(
            BigInt::from(m).pow(r as u32) * &count,
            phi.pow(n as u32),
        );
        terms.push(LocalFactorTerm {
            t,
            count,
            normalized,
        });
    }
    if terms.is_empty() {
        return Err(Error::BudgetExceeded(format!(
            "no local count fits the budget at p = {p}"
        )));
    }
    let stabilized = terms
        .windows(2)
        .find(|w| w[0].normalized == w[1].normalized)
        .map(|w| w[0].t);
    Ok(LocalFactorEstimate {
        p,
        terms,
        stabilized,
    })
}

#[derive(Clone, Debug)]
pub struct SingularSeriesEstimate {
    pub s: Vec<i64>,
    pub q_max: u64,
    /// 1 + sum_{2 <= q <= Q} B(s,q)
    pub value: f64,
    /// Euler-product form over p <= Q, t <= log_p Q
    pub euler: f64,
    pub per_q: BTreeMap<u64, f64>,
}

/// Truncated singular series, in both the direct-sum and the truncated
/// Euler-product forms.
pub fn singular_series(
    system: &PolynomialSystem,
    s: &[i64],
    q_max: u64,
) -> Result<SingularSeriesEstimate> {
    if q_max < 1 {
        return Err(Error::BadArgument("Q must be at least 1".into()));
    }
    let mut per_q = BTreeMap::new();
    let mut sum = Kahan::default();
    sum.add(1.0);
    for q in 2..=q_max {
        let b = b_coefficient(system, s, q)?;
        per_q.insert(q, b);
        sum.add(b);
    }
    let mut euler = 1.0f64;
    for p in 2..=q_max {
        if !is_prime_u64(p) {
            continue;
        }
        let mut factor = Kahan::default();
        factor.add(1.0);
        let mut pt = p;
        while pt <= q_max {
            factor.add(per_q[&pt]);
            match pt.checked_mul(p) {
                Some(next) => pt = next,
                None => break,
            }
        }
        euler *= factor.value();
    }
    Ok(SingularSeriesEstimate {
        s: s.to_vec(),
        q_max,
        value: sum.value(),
        euler,
        per_q,
    })
}

pub fn is_prime_u64(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solubility {
    /// a unit solution mod p^t that passes the nonsingularity checks
    NonsingularSolution { t: u32, witness: Vec<u64> },
    /// no unit solution mod this modulus at all
    NoSolutionMod { modulus: u64 },
    Inconclusive,
}

/// Search `U_{p^t}^n`, t <= t_cap, for a unit solution of `p(g) = s`
/// that is nonsingular: the Jacobian mod p has full rank r at the
/// witness, or the witness lifts to the next three moduli (Hensel
/// step-doubling proxy for p where the rank test degenerates, e.g.
/// squares at p = 2).
pub fn local_solubility(
    system: &PolynomialSystem,
    s: &[i64],
    p: u64,
    t_cap: u32,
) -> Result<Solubility> {
    if p < 2 {
        return Err(Error::BadArgument(format!("{p} is not prime")));
    }
    let r = system.r();
    if s.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: s.len(),
        });
    }
    let n = system.n;
    let jac = system.jacobian();
    for t in 1..=t_cap {
        let Some(m) = (p as u128).checked_pow(t).and_then(|m| u64::try_from(m).ok()) else {
            break;
        };
        let us = units(m);
        let total = (us.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if total > ENUM_BUDGET {
            break;
        }
        let s_mod: Vec<u64> = s.iter().map(|&si| si.rem_euclid(m as i64) as u64).collect();
        let mut any = false;
        let mut witness: Option<Vec<u64>> = None;
        for_each_unit_point(&us, n, |point| {
            if witness.is_some() || system.evaluate_mod(point, m) != s_mod {
                return;
            }
            any = true;
            let rows: Vec<Vec<u64>> = jac
                .iter()
                .map(|row| row.iter().map(|d| d.evaluate_mod(point, p)).collect())
                .collect();
            if crate::ratmat::rank_mod(&rows, p) == r || hensel_lifts(system, s, point, p, t, 3) {
                witness = Some(point.to_vec());
            }
        });
        if let Some(w) = witness {
            return Ok(Solubility::NonsingularSolution { t, witness: w });
        }
        if !any {
            return Ok(Solubility::NoSolutionMod { modulus: m });
        }
    }
    Ok(Solubility::Inconclusive)
}

/// Check that the witness lifts `steps` times from p^t upward by direct
/// search over the p^n corrections per step.
fn hensel_lifts(
    system: &PolynomialSystem,
    s: &[i64],
    point: &[u64],
    p: u64,
    t: u32,
    steps: u32,
) -> bool {
    let n = system.n;
    if (p as u128).checked_pow(n as u32).map_or(true, |c| c > 200_000) {
        return false;
    }
    let mut frontier = vec![point.to_vec()];
    for step in 0..steps {
        let tt = t + step + 1;
        let Some(m) = (p as u128)
            .checked_pow(tt)
            .and_then(|m| u64::try_from(m).ok())
        else {
            return false;
        };
        let base = m / p;
        let s_mod: Vec<u64> = s.iter().map(|&si| si.rem_euclid(m as i64) as u64).collect();
        let mut next = Vec::new();
        for x in &frontier {
            let mut corr = vec![0u64; n];
            loop {
                let y: Vec<u64> = x.iter().zip(&corr).map(|(&xi, &e)| xi + base * e).collect();
                if system.evaluate_mod(&y, m) == s_mod {
                    next.push(y);
                    if next.len() > 50 {
                        break;
                    }
                }
                let mut k = 0;
                loop {
                    if k == n {
                        corr.clear();
                        break;
                    }
                    corr[k] += 1;
                    if corr[k] < p {
                        break;
                    }
                    corr[k] = 0;
                    k += 1;
                }
                if corr.is_empty() {
                    break;
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        frontier = next;
        frontier.truncate(50);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;
    use num_traits::{One, Zero};

    fn sys(src: &str, n: usize) -> PolynomialSystem {
        parse_system(src, n).unwrap()
    }

    fn ternary() -> PolynomialSystem {
        sys("x1 + x2 + x3", 3)
    }

    fn seven_squares() -> PolynomialSystem {
        sys("x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2 + x7^2", 7)
    }

    #[test]
    fn residue_sum_q1_convention() {
        let w = residue_sum(&ternary(), 1, &[0]).unwrap();
        assert!((w.value.re - 1.0).abs() < 1e-15);
        assert!(w.value.im.abs() < 1e-15);
        assert_eq!(b_coefficient(&ternary(), &[5], 1).unwrap(), 1.0);
    }

    #[test]
    fn residue_sum_ternary_q2() {
        // U_2 = {1}: single term e(3/2) = -1
        let w = residue_sum(&ternary(), 2, &[1]).unwrap();
        assert!((w.value.re + 1.0).abs() < 1e-12);
        assert!(w.value.im.abs() < 1e-12);
    }

    #[test]
    fn residue_sum_ternary_q3_direct_oracle() {
        let w = residue_sum(&ternary(), 3, &[1]).unwrap();
        let mut expect = Complex64::new(0.0, 0.0);
        for g1 in [1u64, 2] {
            for g2 in [1u64, 2] {
                for g3 in [1u64, 2] {
                    let th = 2.0 * std::f64::consts::PI * ((g1 + g2 + g3) % 3) as f64 / 3.0;
                    expect += Complex64::new(th.cos(), th.sin());
                }
            }
        }
        assert!((w.value - expect).norm() < 1e-12);
    }

    #[test]
    fn residue_sum_conjugation_symmetry() {
        let s = sys("x1^2 + 2*x2^2 + x2", 2);
        for q in [5u64, 7, 12] {
            for &a in units(q).iter() {
                let w1 = residue_sum(&s, q, &[a]).unwrap();
                let w2 = residue_sum(&s, q, &[(q - a) % q]).unwrap();
                assert!((w1.value - w2.value.conj()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn diagonal_fast_path_matches_enumeration() {
        // force the general path by comparing against a manual sum
        let s = sys("x1^2 + 3*x2^2", 2);
        for q in [5u64, 7, 9] {
            let us = units(q);
            for &a in &[1u64, q - 1] {
                let w = residue_sum(&s, q, &[a]).unwrap();
                let mut expect = Complex64::new(0.0, 0.0);
                for &g1 in &us {
                    for &g2 in &us {
                        let v = (g1 * g1 + 3 * g2 * g2) % q;
                        let th = 2.0 * std::f64::consts::PI * ((v * a) % q) as f64 / q as f64;
                        expect += Complex64::new(th.cos(), th.sin());
                    }
                }
                assert!((w.value - expect).norm() < 1e-9, "q={q} a={a}");
            }
        }
    }

    #[test]
    fn b_ternary_q2_parity() {
        assert!((b_coefficient(&ternary(), &[5], 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((b_coefficient(&ternary(), &[4], 2).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn b_multiplicative() {
        let systems = [ternary(), seven_squares()];
        for s in &systems {
            let sv = vec![31i64; s.r()];
            for (q1, q2) in [(2u64, 3u64), (3, 4), (4, 5), (5, 6), (3, 8)] {
                let b1 = b_coefficient(s, &sv, q1).unwrap();
                let b2 = b_coefficient(s, &sv, q2).unwrap();
                let b12 = b_coefficient(s, &sv, q1 * q2).unwrap();
                let scale = b1.abs().max(b2.abs()).max(1e-12);
                assert!(
                    (b12 - b1 * b2).abs() <= 1e-9 * scale.max(1.0),
                    "q1={q1} q2={q2}: {b12} vs {}",
                    b1 * b2
                );
            }
        }
    }

    #[test]
    fn local_factor_ternary_examples() {
        // p=3, s = 1 mod 3: M(3) = 3 over {1,2}^3, normalized 3*3/2^3
        let lf = local_factor(&ternary(), &[1], 3, 3).unwrap();
        assert_eq!(lf.terms[0].count, BigInt::from(3));
        assert_eq!(
            lf.terms[0].normalized,
            BigRational::new(BigInt::from(9), BigInt::from(8))
        );
        // p=2, s odd: M(2) = 1
        let lf = local_factor(&ternary(), &[5], 2, 3).unwrap();
        assert_eq!(lf.terms[0].count, BigInt::from(1));
        assert_eq!(
            lf.terms[0].normalized,
            BigRational::from_integer(BigInt::from(2))
        );
    }

    #[test]
    fn local_factor_ternary_stabilizes_immediately() {
        for p in [2u64, 3, 5, 7] {
            let lf = local_factor(&ternary(), &[31], p, 3).unwrap();
            assert_eq!(lf.terms.len(), 3);
            assert_eq!(lf.terms[0].normalized, lf.terms[1].normalized, "p={p}");
            assert_eq!(lf.terms[1].normalized, lf.terms[2].normalized, "p={p}");
            assert_eq!(lf.stabilized, Some(1));
        }
    }

    #[test]
    fn seven_squares_mod_8_obstruction() {
        // odd squares are 1 mod 8, so seven of them sum to 7 mod 8
        let s7 = seven_squares();
        let good = local_factor(&s7, &[31], 2, 3).unwrap();
        assert!(good.terms[2].normalized > BigRational::zero());
        let bad = local_factor(&s7, &[30], 2, 3).unwrap();
        assert!(bad.terms[2].normalized.is_zero());
    }

    #[test]
    fn seven_squares_p2_stabilizes_by_t4() {
        let s7 = seven_squares();
        let lf = local_factor(&s7, &[31], 2, 5).unwrap();
        assert!(lf.stabilized.is_some_and(|t| t <= 4), "{:?}", lf.stabilized);
    }

    #[test]
    fn mu_p_equals_one_plus_b_tail() {
        // mu_p = 1 + sum_t B(s, p^t) once both sides stabilize
        let s7 = seven_squares();
        let p = 3u64;
        let lf = local_factor(&s7, &[31], p, 3).unwrap();
        let mut acc = 1.0;
        for t in 1..=3u32 {
            acc += b_coefficient(&s7, &[31], p.pow(t)).unwrap();
        }
        assert!((lf.value() - acc).abs() < 1e-6, "{} vs {acc}", lf.value());
    }

    #[test]
    fn singular_series_ternary() {
        let odd = singular_series(&ternary(), &[31], 30).unwrap();
        assert!(odd.value > 0.5, "{}", odd.value);
        let odd60 = singular_series(&ternary(), &[31], 60).unwrap();
        assert!((odd.value - odd60.value).abs() < 0.05 * odd60.value.abs());
        // s even: the 2-adic factor kills the series
        let even = singular_series(&ternary(), &[30], 30).unwrap();
        assert!(even.euler.abs() < 0.2, "{}", even.euler);
        // sum and Euler product agree to truncation accuracy
        assert!(
            (odd60.value - odd60.euler).abs() < 0.02 * odd60.euler.abs(),
            "{} vs {}",
            odd60.value,
            odd60.euler
        );
    }

    #[test]
    fn solubility_examples() {
        let s7 = seven_squares();
        match local_solubility(&s7, &[31], 2, 4).unwrap() {
            Solubility::NonsingularSolution { t, witness } => {
                assert!(t <= 3);
                let m = 2u64.pow(t);
                let v = s7.evaluate_mod(&witness, m);
                assert_eq!(v[0], 31 % m);
            }
            other => panic!("expected solution, got {other:?}"),
        }
        match local_solubility(&s7, &[30], 2, 4).unwrap() {
            Solubility::NoSolutionMod { modulus } => assert!(modulus <= 8),
            other => panic!("expected obstruction, got {other:?}"),
        }
        // trivially satisfied congruence at t=1 with full-rank Jacobian
        let lin = ternary();
        match local_solubility(&lin, &[3], 3, 2).unwrap() {
            Solubility::NonsingularSolution { t, .. } => assert_eq!(t, 1),
            other => panic!("expected solution, got {other:?}"),
        }
    }

    #[test]
    fn b_rejects_bad_tuple() {
        assert!(residue_sum(&ternary(), 4, &[2]).is_err());
        assert!(residue_sum(&ternary(), 4, &[5]).is_err());
        let one = BigRational::one();
        assert!(one.is_one()); // keep the import exercised
    }
}
