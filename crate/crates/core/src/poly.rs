//! Exact integer polynomial systems: representation, evaluation, grading,
//! differentiation and variable-split decomposition.
//!
//! Coefficients are arbitrary-precision integers. Monomials are dense
//! exponent vectors in graded lexicographic order, so equal monomials
//! compare equal and serialization is deterministic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::scalar::Scalar;
use crate::{Error, Result};

/// A monomial as a dense exponent vector of length `n`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    pub exps: SmallVec<[u16; 8]>,
}

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial {
            exps: smallvec::smallvec![0; n],
        }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut m = Self::one(n);
        m.exps[i] = 1;
        m
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(other.exps.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Restriction of the exponent vector to an index set (others zeroed).
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> Monomial {
        Monomial {
            exps: self
                .exps
                .iter()
                .enumerate()
                .map(|(i, &e)| if keep.contains(&i) { e } else { 0 })
                .collect(),
        }
    }
}

// Graded lexicographic order: total degree first, then lex on exponents.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// An exact integer-coefficient polynomial in `n` variables.
///
/// Invariant: no zero coefficients are stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polynomial {
    pub n: usize,
    pub terms: BTreeMap<Monomial, BigInt>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(n), c.into());
        p
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::var(n, i), BigInt::from(1));
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximal monomial degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        debug_assert_eq!(m.exps.len(), self.n);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &BigInt) -> Polynomial {
        if k.is_zero() {
            return Polynomial::zero(self.n);
        }
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.exps[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.exps[i] = e - 1;
            out.add_term(m2, c * BigInt::from(e));
        }
        out
    }

    /// Homogeneous part of the given degree.
    pub fn homogeneous_part(&self, d: u32) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            if m.degree() == d {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|m| m.degree());
        match degs.next() {
            None => true,
            Some(d0) => degs.all(|d| d == d0),
        }
    }

    /// Generic evaluation over any scalar ring.
    pub fn evaluate<T: Scalar>(&self, point: &[T]) -> Result<T> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: point.len(),
            });
        }
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut term = T::from_int(c);
            for (i, &e) in m.exps.iter().enumerate() {
                if e > 0 {
                    term = term * point[i].pow_u(e as u32);
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Evaluation modulo `m` (coefficients reduced, exponentiation by squaring).
    pub fn evaluate_mod(&self, point: &[u64], modulus: u64) -> u64 {
        debug_assert_eq!(point.len(), self.n);
        let mut acc: u128 = 0;
        let md = modulus as u128;
        for (mono, c) in &self.terms {
            let mut term = mod_reduce(c, modulus) as u128;
            for (i, &e) in mono.exps.iter().enumerate() {
                if e > 0 {
                    term = term * pow_mod(point[i] % modulus, e as u64, modulus) as u128 % md;
                }
            }
            acc = (acc + term) % md;
        }
        acc as u64
    }

    /// Substitute polynomials for variables: `self(q_1,...,q_n)`.
    ///
    /// The `subs` slice must have one entry per variable of `self`; all
    /// entries share a common variable count.
    pub fn substitute(&self, subs: &[Polynomial]) -> Polynomial {
        assert_eq!(subs.len(), self.n);
        let out_n = subs.first().map(|p| p.n).unwrap_or(0);
        let mut out = Polynomial::zero(out_n);
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(out_n, c.clone());
            for (i, &e) in m.exps.iter().enumerate() {
                for _ in 0..e {
                    term = term.mul(&subs[i]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Largest absolute value `|p(x)|` can attain for `|x_i| <= bound`,
    /// overestimated as `bound^deg * sum |coeff|`. Used to certify the
    /// i64 evaluation fast path.
    pub fn magnitude_bound(&self, bound: u64) -> BigInt {
        let d = self.degree().unwrap_or(0);
        let coeff_sum: BigInt = self.terms.values().map(|c| c.abs()).sum();
        num_traits::Pow::pow(&BigInt::from(bound), d) * coeff_sum
    }

    /// Variables that actually occur.
    pub fn support(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        for m in self.terms.keys() {
            s.extend(m.support());
        }
        s
    }
}

fn mod_reduce(c: &BigInt, modulus: u64) -> u64 {
    use num_integer::Integer;
    let m = BigInt::from(modulus);
    c.mod_floor(&m).to_u64().unwrap()
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc: u64 = 1;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

/// A graded system of polynomials sharing a variable count.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolynomialSystem {
    pub n: usize,
    pub polys: Vec<Polynomial>,
}

impl PolynomialSystem {
    pub fn new(n: usize, polys: Vec<Polynomial>) -> Self {
        assert!(polys.iter().all(|p| p.n == n));
        PolynomialSystem { n, polys }
    }

    pub fn r(&self) -> usize {
        self.polys.len()
    }

    /// Common degree `d` of the system (maximum over members).
    pub fn degree(&self) -> Option<u32> {
        self.polys.iter().filter_map(|p| p.degree()).max()
    }

    /// Map degree -> indices of the member polynomials of that degree.
    pub fn grading(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut g: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, p) in self.polys.iter().enumerate() {
            if let Some(d) = p.degree() {
                g.entry(d).or_default().push(i);
            }
        }
        g
    }

    /// Total degree `D = sum_i i * r_i`.
    pub fn total_degree(&self) -> u64 {
        self.grading()
            .iter()
            .map(|(d, idx)| *d as u64 * idx.len() as u64)
            .sum()
    }

    /// The system of highest-degree homogeneous parts.
    pub fn top_forms(&self) -> PolynomialSystem {
        let polys = self
            .polys
            .iter()
            .map(|p| p.homogeneous_part(p.degree().unwrap_or(0)))
            .collect();
        PolynomialSystem::new(self.n, polys)
    }

    pub fn evaluate<T: Scalar>(&self, point: &[T]) -> Result<Vec<T>> {
        self.polys.iter().map(|p| p.evaluate(point)).collect()
    }

    pub fn evaluate_mod(&self, point: &[u64], modulus: u64) -> Vec<u64> {
        self.polys
            .iter()
            .map(|p| p.evaluate_mod(point, modulus))
            .collect()
    }

    /// Exact evaluation with an i64 fast path certified by a magnitude bound.
    pub fn evaluate_int(&self, point: &[BigInt]) -> Result<Vec<BigInt>> {
        let bound = point
            .iter()
            .map(|x| x.abs().to_u64())
            .collect::<Option<Vec<_>>>();
        if let Some(bs) = bound {
            let bmax = bs.into_iter().max().unwrap_or(0);
            let fits = self
                .polys
                .iter()
                .all(|p| p.magnitude_bound(bmax) < BigInt::from(i64::MAX));
            if fits {
                let pt: Vec<i64> = point.iter().map(|x| x.to_i64().unwrap()).collect();
                return Ok(self
                    .polys
                    .iter()
                    .map(|p| p.evaluate::<i64>(&pt).map(BigInt::from))
                    .collect::<Result<Vec<_>>>()?);
            }
        }
        self.evaluate(point)
    }

    /// Jacobian matrix of partial derivatives, entry `(k, j) = d p_k / d x_j`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.polys
            .iter()
            .map(|p| (0..self.n).map(|j| p.derivative(j)).collect())
            .collect()
    }

    /// True if every monomial of every member has support in one variable.
    /// Such systems admit per-variable separation of exponential sums and
    /// value-histogram convolution counting.
    pub fn is_diagonal(&self) -> bool {
        self.polys
            .iter()
            .all(|p| p.terms.keys().all(|m| m.support().count() <= 1))
    }

    /// The univariate slices `u_{k,i}` with `p_k(x) = sum_i u_{k,i}(x_i)`,
    /// constants assigned to the slice of variable 0. Only meaningful when
    /// `is_diagonal()`.
    pub fn diagonal_slices(&self) -> Vec<Vec<Polynomial>> {
        self.polys
            .iter()
            .map(|p| {
                let mut slices = vec![Polynomial::zero(1); self.n];
                for (m, c) in &p.terms {
                    let (var, e) = m
                        .support()
                        .next()
                        .map(|i| (i, m.exps[i]))
                        .unwrap_or((0, 0));
                    let mut mono = Monomial::one(1);
                    mono.exps[0] = e;
                    slices[var].add_term(mono, c.clone());
                }
                slices
            })
            .collect()
    }
}

/// A partition of the variable indices into a distinguished block, a
/// y-block and a z-block.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct VariableSplit {
    pub k_block: BTreeSet<usize>,
    pub y_block: BTreeSet<usize>,
    pub z_block: BTreeSet<usize>,
}

impl VariableSplit {
    /// Two-block split y / z with empty distinguished block.
    pub fn yz(y: impl IntoIterator<Item = usize>, z: impl IntoIterator<Item = usize>) -> Self {
        VariableSplit {
            k_block: BTreeSet::new(),
            y_block: y.into_iter().collect(),
            z_block: z.into_iter().collect(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for block in [&self.k_block, &self.y_block, &self.z_block] {
            for &i in block {
                if i >= n {
                    return Err(Error::BadSplit(format!("index {i} out of range for n={n}")));
                }
                if !seen.insert(i) {
                    return Err(Error::BadSplit(format!("index {i} appears in two blocks")));
                }
            }
        }
        if seen.len() != n {
            return Err(Error::BadSplit(format!(
                "blocks cover {} of {} indices",
                seen.len(),
                n
            )));
        }
        Ok(())
    }

    /// The distinguished block counts towards the y-side of the
    /// `f1(y) + g(y,z) + f2(z)` decomposition.
    pub fn y_side(&self) -> BTreeSet<usize> {
        self.k_block.union(&self.y_block).copied().collect()
    }
}

/// The decomposition `f = f1(y) + g(y,z) + f2(z)` induced by a split.
#[derive(Clone, Debug)]
pub struct SplitDecomposition {
    pub f1: PolynomialSystem,
    pub g: PolynomialSystem,
    pub f2: PolynomialSystem,
}

impl SplitDecomposition {
    pub fn recombine(&self) -> PolynomialSystem {
        let polys = self
            .f1
            .polys
            .iter()
            .zip(&self.g.polys)
            .zip(&self.f2.polys)
            .map(|((a, b), c)| a.add(b).add(c))
            .collect();
        PolynomialSystem::new(self.f1.n, polys)
    }
}

/// Split a system along a variable partition. The pieces keep the full
/// variable count so that recombination is literal term addition.
pub fn split(system: &PolynomialSystem, sp: &VariableSplit) -> Result<SplitDecomposition> {
    sp.validate(system.n)?;
    let y = sp.y_side();
    let z = &sp.z_block;
    let mut f1 = Vec::new();
    let mut g = Vec::new();
    let mut f2 = Vec::new();
    for p in &system.polys {
        let mut p1 = Polynomial::zero(system.n);
        let mut pg = Polynomial::zero(system.n);
        let mut p2 = Polynomial::zero(system.n);
        for (m, c) in &p.terms {
            let in_y = m.support().any(|i| y.contains(&i));
            let in_z = m.support().any(|i| z.contains(&i));
            let target = match (in_y, in_z) {
                (true, true) => &mut pg,
                (false, true) => &mut p2,
                // constants go with f1
                _ => &mut p1,
            };
            target.terms.insert(m.clone(), c.clone());
        }
        f1.push(p1);
        g.push(pg);
        f2.push(p2);
    }
    Ok(SplitDecomposition {
        f1: PolynomialSystem::new(system.n, f1),
        g: PolynomialSystem::new(system.n, g),
        f2: PolynomialSystem::new(system.n, f2),
    })
}

/// Group each member polynomial by its y-monomial: the coefficient forms
/// in the z variables. Re-expanding the map reproduces the input.
pub fn coefficient_forms(
    system: &PolynomialSystem,
    sp: &VariableSplit,
) -> Result<BTreeMap<Monomial, PolynomialSystem>> {
    sp.validate(system.n)?;
    let y = sp.y_side();
    let mut out: BTreeMap<Monomial, Vec<Polynomial>> = BTreeMap::new();
    let r = system.r();
    for (k, p) in system.polys.iter().enumerate() {
        for (m, c) in &p.terms {
            let my = m.restrict(&y);
            let mz = m.restrict(&sp.z_block);
            let entry = out
                .entry(my)
                .or_insert_with(|| vec![Polynomial::zero(system.n); r]);
            entry[k].add_term(mz, c.clone());
        }
    }
    Ok(out
        .into_iter()
        .map(|(m, polys)| (m, PolynomialSystem::new(system.n, polys)))
        .collect())
}

/// A polynomial with rational coefficients, stored as an integer
/// polynomial over a common positive denominator. Used for rank
/// certificates and regularization output, where rational linear
/// combinations of integer forms arise.
#[derive(Clone, Debug)]
pub struct RatPoly {
    pub num: Polynomial,
    pub den: BigInt,
}

impl RatPoly {
    pub fn zero(n: usize) -> Self {
        RatPoly {
            num: Polynomial::zero(n),
            den: BigInt::from(1),
        }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RatPoly {
            num: p,
            den: BigInt::from(1),
        }
    }

    /// Homogeneous linear form from a rational coefficient vector.
    pub fn linear(coeffs: &[num_rational::BigRational]) -> Self {
        use num_integer::Integer;
        let n = coeffs.len();
        let den = coeffs
            .iter()
            .fold(BigInt::from(1), |acc, c| acc.lcm(c.denom()));
        let mut num = Polynomial::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            let coef = c.numer() * (&den / c.denom());
            num.add_term(Monomial::var(n, i), coef);
        }
        RatPoly { num, den }
    }

    pub fn n(&self) -> usize {
        self.num.n
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn degree(&self) -> Option<u32> {
        self.num.degree()
    }

    fn normalize(mut self) -> Self {
        use num_integer::Integer;
        if self.num.is_zero() {
            self.den = BigInt::from(1);
            return self;
        }
        let mut g = self.den.clone();
        for c in self.num.terms.values() {
            g = g.gcd(c);
            if g == BigInt::from(1) {
                break;
            }
        }
        if g > BigInt::from(1) {
            self.den /= &g;
            let terms = std::mem::take(&mut self.num.terms);
            self.num.terms = terms.into_iter().map(|(m, c)| (m, c / &g)).collect();
        }
        self
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let num = self
            .num
            .scale(&other.den)
            .add(&other.num.scale(&self.den));
        RatPoly {
            num,
            den: &self.den * &other.den,
        }
        .normalize()
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let num = self
            .num
            .scale(&other.den)
            .sub(&other.num.scale(&self.den));
        RatPoly {
            num,
            den: &self.den * &other.den,
        }
        .normalize()
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        RatPoly {
            num: self.num.mul(&other.num),
            den: &self.den * &other.den,
        }
        .normalize()
    }

    pub fn scale(&self, k: &num_rational::BigRational) -> RatPoly {
        RatPoly {
            num: self.num.scale(k.numer()),
            den: &self.den * k.denom(),
        }
        .normalize()
    }

    pub fn eq_exact(&self, other: &RatPoly) -> bool {
        self.num.scale(&other.den) == other.num.scale(&self.den)
    }

    pub fn evaluate_rat(&self, point: &[num_rational::BigRational]) -> crate::Result<num_rational::BigRational> {
        let v = self.num.evaluate::<num_rational::BigRational>(point)?;
        Ok(v / num_rational::BigRational::from_integer(self.den.clone()))
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.num.support()
    }
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == BigInt::from(1) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / {}", self.num, self.den)
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization: JSON schema {n, polys:[{terms:[{exps, coef}]}]} with
// coefficients as decimal strings, and the `c * x1^a1 ...` text format.

#[derive(Serialize, Deserialize)]
struct TermJson {
    exps: Vec<u16>,
    coef: String,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    n: usize,
    polys: Vec<PolyJson>,
}

impl Serialize for PolynomialSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let js = SystemJson {
            n: self.n,
            polys: self
                .polys
                .iter()
                .map(|p| PolyJson {
                    terms: p
                        .terms
                        .iter()
                        .map(|(m, c)| TermJson {
                            exps: m.exps.to_vec(),
                            coef: c.to_string(),
                        })
                        .collect(),
                })
                .collect(),
        };
        js.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolynomialSystem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let js = SystemJson::deserialize(d)?;
        let mut polys = Vec::new();
        for pj in js.polys {
            let mut p = Polynomial::zero(js.n);
            for t in pj.terms {
                if t.exps.len() != js.n {
                    return Err(D::Error::custom("exponent vector length != n"));
                }
                let c: BigInt = t
                    .coef
                    .parse()
                    .map_err(|e| D::Error::custom(format!("bad coefficient: {e}")))?;
                p.add_term(
                    Monomial {
                        exps: t.exps.into(),
                    },
                    c,
                );
            }
            polys.push(p);
        }
        Ok(PolynomialSystem::new(js.n, polys))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        // highest terms first
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let vars: Vec<String> = m
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == BigInt::from(1) {
                write!(f, "{}", vars.join(" "))?;
            } else {
                write!(f, "{} * {}", mag, vars.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Parse the `c * x1^a1 x2^a2` text format, terms joined by `+` / `-`.
pub fn parse_polynomial(input: &str, n: usize) -> Result<Polynomial> {
    let mut p = Polynomial::zero(n);
    let s = input.trim();
    if s.is_empty() || s == "0" {
        return Ok(p);
    }
    // split into signed terms
    let mut terms: Vec<(i8, String)> = Vec::new();
    let mut cur = String::new();
    let mut sign: i8 = 1;
    let mut chars = s.chars().peekable();
    // leading sign
    if let Some(&c) = chars.peek() {
        if c == '-' {
            sign = -1;
            chars.next();
        } else if c == '+' {
            chars.next();
        }
    }
    let mut prev_was_op = true;
    for c in chars {
        match c {
            '+' | '-' if !prev_was_op => {
                terms.push((sign, cur.trim().to_string()));
                cur = String::new();
                sign = if c == '-' { -1 } else { 1 };
                prev_was_op = true;
            }
            '^' | '*' => {
                cur.push(c);
                prev_was_op = true;
            }
            _ => {
                if !c.is_whitespace() {
                    prev_was_op = false;
                }
                cur.push(c);
            }
        }
    }
    terms.push((sign, cur.trim().to_string()));

    for (sg, t) in terms {
        if t.is_empty() {
            return Err(Error::Parse(format!("empty term in '{input}'")));
        }
        let mut coef = BigInt::from(sg);
        let mut mono = Monomial::one(n);
        for factor in t.split('*').map(str::trim) {
            if factor.is_empty() {
                return Err(Error::Parse(format!("empty factor in '{t}'")));
            }
            for atom in factor.split_whitespace() {
                if let Some(rest) = atom.strip_prefix('x') {
                    let (idx_s, exp) = match rest.split_once('^') {
                        Some((i, e)) => (
                            i,
                            e.parse::<u16>()
                                .map_err(|_| Error::Parse(format!("bad exponent in '{atom}'")))?,
                        ),
                        None => (rest, 1),
                    };
                    let idx: usize = idx_s
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad variable '{atom}'")))?;
                    if idx == 0 || idx > n {
                        return Err(Error::Parse(format!("variable x{idx} out of range (n={n})")));
                    }
                    mono.exps[idx - 1] += exp;
                } else {
                    let c: BigInt = atom
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad coefficient '{atom}'")))?;
                    coef *= c;
                }
            }
        }
        p.add_term(mono, coef);
    }
    Ok(p)
}

/// Parse one polynomial per line into a system.
pub fn parse_system(input: &str, n: usize) -> Result<PolynomialSystem> {
    let polys = input
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_polynomial(l, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolynomialSystem::new(n, polys))
}
