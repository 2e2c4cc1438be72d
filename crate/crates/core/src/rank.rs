//! Birch and Schmidt rank bounds with certificates.
//!
//! Every report carries a lower and an upper bound plus the method that
//! produced them. Exact paths (linear systems, single quadratic forms)
//! return equal bounds; the finite-field path is an estimate and always
//! reports an infinite upper bound. Decomposition witnesses are exact
//! polynomial identities and are re-verified before being returned.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::poly::{Monomial, Polynomial, PolynomialSystem, RatPoly, VariableSplit};
use crate::ratmat::{self, RatMat};
use crate::{Error, Result};

/// A one-sided rank bound; `Infinite` is the sentinel for empty systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankBound {
    Finite(i64),
    Infinite,
}

impl Serialize for RankBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RankBound::Finite(v) => s.serialize_i64(*v),
            RankBound::Infinite => s.serialize_str("inf"),
        }
    }
}

impl fmt::Display for RankBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankBound::Finite(v) => write!(f, "{v}"),
            RankBound::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMethod {
    ExactLinear,
    ExactQuadraticMatrix,
    DecompositionWitness,
    FiniteFieldEstimate,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    LinearCombination { lambda: Vec<String> },
    ProductDecomposition {
        lambda: Vec<String>,
        products: Vec<[String; 2]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        remainder: Option<String>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub lower: RankBound,
    pub upper: RankBound,
    pub method: RankMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl RankReport {
    pub fn exact(v: i64, method: RankMethod) -> Self {
        RankReport {
            lower: RankBound::Finite(v),
            upper: RankBound::Finite(v),
            method,
            witness: None,
            notes: None,
        }
    }

    pub fn infinite(method: RankMethod, note: &str) -> Self {
        RankReport {
            lower: RankBound::Infinite,
            upper: RankBound::Infinite,
            method,
            witness: None,
            notes: Some(note.to_string()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rank report serializes")
    }
}

/// An exact identity `lambda . f = sum_k U_k V_k + remainder`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub lambda: Vec<BigRational>,
    pub products: Vec<(RatPoly, RatPoly)>,
    pub remainder: RatPoly,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    /// The left-hand side `lambda . f` as a rational polynomial.
    pub fn combination(&self, sys: &PolynomialSystem) -> RatPoly {
        let mut acc = RatPoly::zero(sys.n);
        for (l, p) in self.lambda.iter().zip(&sys.polys) {
            acc = acc.add(&RatPoly::from_poly(p.clone()).scale(l));
        }
        acc
    }

    /// The right-hand side `sum U_k V_k + remainder`.
    pub fn sum(&self) -> RatPoly {
        let mut acc = self.remainder.clone();
        for (u, v) in &self.products {
            acc = acc.add(&u.mul(v));
        }
        acc
    }

    pub fn verify_exact(&self, sys: &PolynomialSystem) -> bool {
        self.sum().eq_exact(&self.combination(sys))
    }

    /// Numerical spot-check of the identity at random small rational points.
    pub fn verify_points(&self, sys: &PolynomialSystem, samples: u32, seed: u64) -> Result<bool> {
        let lhs = self.combination(sys);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let point: Vec<BigRational> = (0..sys.n)
                .map(|_| {
                    BigRational::new(
                        BigInt::from(rng.gen_range(-50i64..=50)),
                        BigInt::from(rng.gen_range(1i64..=7)),
                    )
                })
                .collect();
            let mut rhs = self.remainder.evaluate_rat(&point)?;
            for (u, v) in &self.products {
                rhs += u.evaluate_rat(&point)? * v.evaluate_rat(&point)?;
            }
            if rhs != lhs.evaluate_rat(&point)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn witness(&self) -> Witness {
        Witness::ProductDecomposition {
            lambda: self.lambda.iter().map(|l| l.to_string()).collect(),
            products: self
                .products
                .iter()
                .map(|(u, v)| [u.to_string(), v.to_string()])
                .collect(),
            remainder: if self.remainder.is_zero() {
                None
            } else {
                Some(self.remainder.to_string())
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Linear systems

/// Exact rank of a linear system: the minimum number of nonzero
/// coefficients over all nontrivial rational combinations of the forms,
/// computed as `n - max{|Z| : rank(A_Z) < r}` over column subsets `Z`.
pub fn linear_rank(sys: &PolynomialSystem) -> Result<RankReport> {
    let r = sys.r();
    let n = sys.n;
    if r == 0 {
        return Ok(RankReport::infinite(RankMethod::ExactLinear, "empty system"));
    }
    let mut a = vec![vec![BigRational::zero(); n]; r];
    for (i, p) in sys.polys.iter().enumerate() {
        for (m, c) in &p.terms {
            if m.degree() != 1 {
                return Err(Error::Degree(format!(
                    "form {i} is not homogeneous linear"
                )));
            }
            let j = m.support().next().unwrap();
            a[i][j] = BigRational::from_integer(c.clone());
        }
    }
    let cols: Vec<Vec<BigRational>> = (0..n)
        .map(|j| (0..r).map(|i| a[i][j].clone()).collect())
        .collect();

    let mut budget = 1u64;
    for k in 0..r {
        budget = budget.saturating_mul(1 + binom(n, k));
    }
    if budget > 500_000 {
        return randomized_linear_upper(sys, &a);
    }

    let mut best: Option<(usize, Vec<BigRational>)> = None;
    let mut consider = |lam: &[BigRational]| {
        let w = combination_weight(lam, &a);
        if best.as_ref().map_or(true, |(bw, _)| w < *bw) {
            best = Some((w, lam.to_vec()));
        }
    };

    for k in 0..r {
        for subset in combinations(n, k) {
            let base: RatMat = subset.iter().map(|&j| cols[j].clone()).collect();
            let rank_s = ratmat::rank(&base);
            // all columns in the span of the subset
            let z: Vec<usize> = (0..n)
                .filter(|&j| {
                    let mut m = base.clone();
                    m.push(cols[j].clone());
                    ratmat::rank(&m) == rank_s
                })
                .collect();
            let lam = if z.is_empty() {
                let mut e = vec![BigRational::zero(); r];
                e[0] = BigRational::one();
                e
            } else {
                let t: RatMat = z.iter().map(|&j| cols[j].clone()).collect();
                let ker = ratmat::kernel(&t);
                match ker.into_iter().next() {
                    Some(v) => v,
                    None => continue,
                }
            };
            consider(&lam);
        }
    }

    let (w, lam) = best.expect("at least the empty subset is considered");
    Ok(RankReport {
        lower: RankBound::Finite(w as i64),
        upper: RankBound::Finite(w as i64),
        method: RankMethod::ExactLinear,
        witness: Some(Witness::LinearCombination {
            lambda: lam.iter().map(|l| l.to_string()).collect(),
        }),
        notes: None,
    })
}

fn combination_weight(lam: &[BigRational], a: &[Vec<BigRational>]) -> usize {
    let n = a[0].len();
    (0..n)
        .filter(|&j| {
            let dot: BigRational = lam.iter().zip(a.iter()).map(|(l, row)| l * &row[j]).sum();
            !dot.is_zero()
        })
        .count()
}

fn randomized_linear_upper(sys: &PolynomialSystem, a: &[Vec<BigRational>]) -> Result<RankReport> {
    let r = sys.r();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best_w = usize::MAX;
    let mut best_lam = vec![BigRational::one(); r];
    for _ in 0..5000 {
        let lam: Vec<BigRational> = (0..r)
            .map(|_| BigRational::from_integer(BigInt::from(rng.gen_range(-20i64..=20))))
            .collect();
        if lam.iter().all(|l| l.is_zero()) {
            continue;
        }
        let w = combination_weight(&lam, a);
        if w < best_w {
            best_w = w;
            best_lam = lam;
        }
    }
    Ok(RankReport {
        lower: RankBound::Finite(0),
        upper: RankBound::Finite(best_w as i64),
        method: RankMethod::ExactLinear,
        witness: Some(Witness::LinearCombination {
            lambda: best_lam.iter().map(|l| l.to_string()).collect(),
        }),
        notes: Some("combination space too large for exact enumeration; randomized upper bound".into()),
    })
}

fn binom(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Quadratic forms

/// Symmetric matrix of a homogeneous quadratic form: `A_ii = coef(x_i^2)`,
/// `A_ij = coef(x_i x_j) / 2`.
pub fn quadratic_matrix(form: &Polynomial) -> Result<RatMat> {
    let n = form.n;
    let mut a = vec![vec![BigRational::zero(); n]; n];
    for (m, c) in &form.terms {
        if m.degree() != 2 {
            return Err(Error::Degree("form is not homogeneous quadratic".into()));
        }
        let sup: Vec<usize> = m.support().collect();
        if sup.len() == 1 {
            a[sup[0]][sup[0]] = BigRational::from_integer(c.clone());
        } else {
            let half = BigRational::new(c.clone(), BigInt::from(2));
            a[sup[0]][sup[1]] = half.clone();
            a[sup[1]][sup[0]] = half;
        }
    }
    Ok(a)
}

/// Symmetric matrix of a rational quadratic polynomial.
fn quadratic_matrix_rat(q: &RatPoly) -> Result<RatMat> {
    let a = quadratic_matrix(&q.num)?;
    let den = BigRational::from_integer(q.den.clone());
    Ok(a
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / &den).collect())
        .collect())
}

/// Quadratic polynomial of a symmetric rational matrix.
fn matrix_to_poly(a: &RatMat) -> RatPoly {
    let n = a.len();
    let mut acc = RatPoly::zero(n);
    for i in 0..n {
        for j in i..n {
            let c = if i == j {
                a[i][i].clone()
            } else {
                &a[i][j] + &a[j][i]
            };
            if c.is_zero() {
                continue;
            }
            let mut m = Monomial::one(n);
            m.exps[i] += 1;
            m.exps[j] += 1;
            let mut term = Polynomial::zero(n);
            term.add_term(m, BigInt::one());
            acc = acc.add(&RatPoly::from_poly(term).scale(&c));
        }
    }
    acc
}

enum Step {
    /// `c * L(x)^2`, recorded for later square pairing.
    Square(BigRational, Vec<BigRational>),
    /// a ready product `U * V`
    Product(Vec<BigRational>, Vec<BigRational>),
}

/// Lagrange decomposition of a symmetric matrix into linear products,
/// eliminating only the rows in `eliminate`. Returns the steps and the
/// remainder matrix, whose `eliminate` rows and columns are zero.
fn decompose_matrix(mut m: RatMat, eliminate: &BTreeSet<usize>) -> (Vec<Step>, RatMat) {
    let n = m.len();
    let mut steps = Vec::new();
    loop {
        let active = |m: &RatMat, i: usize| m[i].iter().any(|v| !v.is_zero());
        // prefer a diagonal pivot among rows to eliminate
        let sq = eliminate
            .iter()
            .copied()
            .find(|&i| !m[i][i].is_zero());
        if let Some(i) = sq {
            let c = m[i][i].clone();
            let l: Vec<BigRational> = (0..n).map(|j| &m[i][j] / &c).collect();
            for a in 0..n {
                for b in 0..n {
                    let delta = &c * &l[a] * &l[b];
                    m[a][b] -= delta;
                }
            }
            steps.push(Step::Square(c, l));
            continue;
        }
        let Some(i) = eliminate.iter().copied().find(|&i| active(&m, i)) else {
            break;
        };
        let j = (0..n).find(|&j| j != i && !m[i][j].is_zero()).unwrap();
        let c = BigRational::from_integer(BigInt::from(2)) * &m[i][j];
        let b = m[j][j].clone();
        let mut u = vec![BigRational::zero(); n];
        let mut v = vec![BigRational::zero(); n];
        u[i] = BigRational::one();
        u[j] = &b / &c;
        v[j] = c.clone();
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            u[k] = &m[j][k] / &m[i][j];
            v[k] = BigRational::from_integer(BigInt::from(2)) * &m[i][k];
        }
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        for a in 0..n {
            for bb in 0..n {
                let delta = (&u[a] * &v[bb] + &u[bb] * &v[a]) * &half;
                m[a][bb] -= delta;
            }
        }
        debug_assert!(m[i].iter().all(|x| x.is_zero()));
        steps.push(Step::Product(u, v));
    }
    (steps, m)
}

/// Rational square root, if one exists.
fn sqrt_rational(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() || r.is_zero() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

/// Turn decomposition steps into linear products, merging pairs of square
/// terms `c_i L_i^2 + c_j L_j^2` with `-c_j/c_i` a rational square into a
/// single product `c_i (L_i - rho L_j)(L_i + rho L_j)`.
fn steps_to_products(steps: Vec<Step>) -> Vec<(RatPoly, RatPoly)> {
    let mut squares: Vec<(BigRational, Vec<BigRational>)> = Vec::new();
    let mut products: Vec<(Vec<BigRational>, Vec<BigRational>)> = Vec::new();
    for s in steps {
        match s {
            Step::Square(c, l) => squares.push((c, l)),
            Step::Product(u, v) => products.push((u, v)),
        }
    }
    let mut used = vec![false; squares.len()];
    for i in 0..squares.len() {
        if used[i] {
            continue;
        }
        let mut paired = false;
        for j in i + 1..squares.len() {
            if used[j] {
                continue;
            }
            let ratio = -(&squares[j].0 / &squares[i].0);
            if let Some(rho) = sqrt_rational(&ratio) {
                let (ci, li) = &squares[i];
                let lj = &squares[j].1;
                let u: Vec<BigRational> = li
                    .iter()
                    .zip(lj)
                    .map(|(a, b)| ci * &(a - &(&rho * b)))
                    .collect();
                let v: Vec<BigRational> = li.iter().zip(lj).map(|(a, b)| a + &(&rho * b)).collect();
                products.push((u, v));
                used[i] = true;
                used[j] = true;
                paired = true;
                break;
            }
        }
        if !paired {
            let (c, l) = &squares[i];
            let u: Vec<BigRational> = l.iter().map(|a| c * a).collect();
            products.push((u, l.clone()));
            used[i] = true;
        }
    }
    products
        .into_iter()
        .map(|(u, v)| (RatPoly::linear(&u), RatPoly::linear(&v)))
        .collect()
}

/// Product decomposition of a rational quadratic polynomial with the
/// rows in `eliminate` cleared: `q = sum U_k V_k + remainder`, where the
/// remainder involves none of the eliminated variables.
pub fn quadratic_products(
    q: &RatPoly,
    eliminate: &BTreeSet<usize>,
) -> Result<(Vec<(RatPoly, RatPoly)>, RatPoly)> {
    let a = quadratic_matrix_rat(q)?;
    let (steps, rem) = decompose_matrix(a, eliminate);
    Ok((steps_to_products(steps), matrix_to_poly(&rem)))
}

/// Exact Birch rank of a single quadratic form: the rank of its
/// symmetric matrix.
pub fn quadratic_birch_rank(form: &Polynomial) -> Result<RankReport> {
    let a = quadratic_matrix(form)?;
    Ok(RankReport::exact(
        ratmat::rank(&a) as i64,
        RankMethod::ExactQuadraticMatrix,
    ))
}

/// Full decomposition of a quadratic form into linear products over the
/// rationals, with the complex Schmidt rank `ceil(rank/2)`.
pub fn schmidt_decomposition(form: &Polynomial) -> Result<(i64, Decomposition)> {
    let a = quadratic_matrix(form)?;
    let rho = ratmat::rank(&a) as i64;
    let h_c = (rho + 1) / 2;
    let all: BTreeSet<usize> = (0..form.n).collect();
    let (steps, rem) = decompose_matrix(a, &all);
    debug_assert!(rem.iter().all(|row| row.iter().all(|v| v.is_zero())));
    let products = steps_to_products(steps);
    let dec = Decomposition {
        lambda: vec![BigRational::one()],
        products,
        remainder: RatPoly::zero(form.n),
    };
    Ok((h_c, dec))
}

/// Schmidt rank bracket for a single quadratic form: the complex rank
/// `ceil(rank A / 2)` is an exact lower bound for the rational rank, and
/// a verified product decomposition gives the upper bound.
pub fn quadratic_schmidt_rank_complex(form: &Polynomial) -> Result<RankReport> {
    let (h_c, dec) = schmidt_decomposition(form)?;
    let sys = PolynomialSystem::new(form.n, vec![form.clone()]);
    if !dec.verify_exact(&sys) {
        return Err(Error::BadArgument(
            "internal: decomposition identity failed verification".into(),
        ));
    }
    Ok(RankReport {
        lower: RankBound::Finite(h_c),
        upper: RankBound::Finite(dec.len() as i64),
        method: RankMethod::DecompositionWitness,
        witness: Some(dec.witness()),
        notes: Some("lower bound is the complex Schmidt rank".into()),
    })
}

// ---------------------------------------------------------------------------
// Modified Schmidt rank

/// Decomposition achieving the best found upper bound for the modified
/// Schmidt rank `h(.; z)` of a homogeneous system: the minimum over
/// nontrivial rational `lambda` of the number of products `U_k V_k` needed
/// to write `lambda . f - W(z)` with every `U_k, V_k` of positive degree.
pub fn modified_schmidt_decomposition(
    sys: &PolynomialSystem,
    split: &VariableSplit,
    budget: u64,
) -> Result<(i64, Decomposition)> {
    split.validate(sys.n)?;
    let r = sys.r();
    if r == 0 {
        return Err(Error::BadArgument("empty system has infinite rank".into()));
    }
    let d = sys
        .degree()
        .ok_or_else(|| Error::Degree("zero system".into()))?;
    for p in &sys.polys {
        if !p.is_zero() && (!p.is_homogeneous() || p.degree() != Some(d)) {
            return Err(Error::Degree(
                "modified Schmidt rank needs a homogeneous system of one degree".into(),
            ));
        }
    }
    if d < 2 {
        return Err(Error::Degree("degree must be at least 2".into()));
    }
    let y_side = split.y_side();
    let z_set = &split.z_block;

    let mut best: Option<(i64, Decomposition)> = None;
    let mut tried = 0u64;
    let height = 3i64;
    for lam_int in lattice(r, height) {
        if tried >= budget.max(1) {
            break;
        }
        if !is_primitive(&lam_int) {
            continue;
        }
        tried += 1;
        let mut q = Polynomial::zero(sys.n);
        for (l, p) in lam_int.iter().zip(&sys.polys) {
            q = q.add(&p.scale(&BigInt::from(*l)));
        }
        let lambda: Vec<BigRational> = lam_int
            .iter()
            .map(|&l| BigRational::from_integer(BigInt::from(l)))
            .collect();
        let qr = RatPoly::from_poly(q.clone());
        let dec = if q.is_zero() || q.support().is_subset(z_set) {
            Decomposition {
                lambda,
                products: vec![],
                remainder: qr,
            }
        } else if d == 2 {
            let a = quadratic_matrix_rat(&qr)?;
            let (steps, rem) = decompose_matrix(a, &y_side);
            Decomposition {
                lambda,
                products: steps_to_products(steps),
                remainder: matrix_to_poly(&rem),
            }
        } else {
            peel_decomposition(&q, &y_side, lambda)
        };
        if !dec.remainder.support().is_subset(z_set) {
            continue;
        }
        if !dec.verify_exact(sys) {
            continue;
        }
        let l = dec.len() as i64;
        if best.as_ref().map_or(true, |(bl, _)| l < *bl) {
            best = Some((l, dec));
        }
        if matches!(best, Some((0, _))) {
            break;
        }
    }
    best.ok_or_else(|| Error::BudgetExceeded("no decomposition found within budget".into()))
}

/// Upper bound report for the modified Schmidt rank.
pub fn modified_schmidt_upper(
    sys: &PolynomialSystem,
    split: &VariableSplit,
    budget: u64,
) -> Result<RankReport> {
    let (l, dec) = modified_schmidt_decomposition(sys, split, budget)?;
    Ok(RankReport {
        lower: RankBound::Finite(0),
        upper: RankBound::Finite(l),
        method: RankMethod::DecompositionWitness,
        witness: Some(dec.witness()),
        notes: None,
    })
}

/// Generic-degree fallback: peel one product `x_i * V_i` per variable on
/// the y side, grouping each monomial under its smallest y-side variable.
fn peel_decomposition(
    q: &Polynomial,
    y_side: &BTreeSet<usize>,
    lambda: Vec<BigRational>,
) -> Decomposition {
    let n = q.n;
    let mut groups: std::collections::BTreeMap<usize, Polynomial> = Default::default();
    let mut remainder = Polynomial::zero(n);
    for (m, c) in &q.terms {
        match m.support().find(|i| y_side.contains(i)) {
            Some(i) => {
                let mut div = m.clone();
                div.exps[i] -= 1;
                groups
                    .entry(i)
                    .or_insert_with(|| Polynomial::zero(n))
                    .add_term(div, c.clone());
            }
            None => remainder.add_term(m.clone(), c.clone()),
        }
    }
    let products = groups
        .into_iter()
        .map(|(i, v)| {
            (
                RatPoly::from_poly(Polynomial::var(n, i)),
                RatPoly::from_poly(v),
            )
        })
        .collect();
    Decomposition {
        lambda,
        products,
        remainder: RatPoly::from_poly(remainder),
    }
}

fn lattice(r: usize, height: i64) -> impl Iterator<Item = Vec<i64>> {
    let base = 2 * height + 1;
    let total = (base as u128)
        .checked_pow(r as u32)
        .unwrap_or(u128::MAX);
    (0..total).filter_map(move |mut idx| {
        let mut v = vec![0i64; r];
        for slot in v.iter_mut() {
            *slot = (idx % base as u128) as i64 - height;
            idx /= base as u128;
        }
        if v.iter().all(|&x| x == 0) {
            None
        } else {
            Some(v)
        }
    })
}

fn is_primitive(v: &[i64]) -> bool {
    // canonical representative: content 1, first nonzero entry positive
    let g = v.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    if g != 1 {
        return false;
    }
    v.iter().find(|&&x| x != 0).map_or(false, |&x| x > 0)
}

// ---------------------------------------------------------------------------
// Finite-field Birch rank estimate

/// Birch rank estimate by counting points of the singular locus
/// `rank Jac(x) < r` over small prime fields. The count in `F_p^n` gives a
/// dimension estimate `floor(log_p count)` and hence a codimension lower
/// bound; the upper bound is always reported as infinite.
pub fn birch_rank_estimate(
    sys: &PolynomialSystem,
    primes: &[u64],
    budget: u64,
    seed: u64,
) -> Result<RankReport> {
    let r = sys.r();
    let n = sys.n;
    if r == 0 {
        return Ok(RankReport::infinite(
            RankMethod::FiniteFieldEstimate,
            "empty system",
        ));
    }
    if primes.is_empty() {
        return Err(Error::BadArgument("no primes given".into()));
    }
    let jac = sys.jacobian();
    let mut per_prime = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &p in primes {
        if p < 2 {
            return Err(Error::BadArgument(format!("{p} is not prime")));
        }
        let total = (p as u128).checked_pow(n as u32);
        let full = matches!(total, Some(t) if t <= budget as u128);
        let (count, samples) = if full {
            let mut count = 0u64;
            let mut point = vec![0u64; n];
            loop {
                if singular_at(&jac, &point, p, r) {
                    count += 1;
                }
                if !increment(&mut point, p) {
                    break;
                }
            }
            (count, total.unwrap() as u64)
        } else {
            let mut count = 0u64;
            for _ in 0..budget {
                let point: Vec<u64> = (0..n).map(|_| rng.gen_range(0..p)).collect();
                if singular_at(&jac, &point, p, r) {
                    count += 1;
                }
            }
            (count, budget)
        };
        let codim = if full {
            if count == 0 {
                n as i64
            } else {
                n as i64 - ilog(p, count) as i64
            }
        } else {
            // scaled estimate: dim ~ n - log_p(samples / count)
            let est = if count == 0 {
                (samples as f64).ln() / (p as f64).ln()
            } else {
                ((samples as f64) / (count as f64)).ln() / (p as f64).ln()
            };
            (est.floor() as i64).clamp(0, n as i64)
        };
        per_prime.push((p, codim, full));
    }
    let lower = per_prime.iter().map(|&(_, c, _)| c).max().unwrap();
    let spread = lower - per_prime.iter().map(|&(_, c, _)| c).min().unwrap();
    let mut notes = per_prime
        .iter()
        .map(|&(p, c, full)| {
            format!(
                "p={p}: codim>={c}{}",
                if full { "" } else { " (sampled)" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    if spread > 0 {
        notes.push_str("; primes disagree, kept the max");
    }
    Ok(RankReport {
        lower: RankBound::Finite(lower),
        upper: RankBound::Infinite,
        method: RankMethod::FiniteFieldEstimate,
        witness: None,
        notes: Some(notes),
    })
}

fn singular_at(jac: &[Vec<Polynomial>], point: &[u64], p: u64, r: usize) -> bool {
    let rows: Vec<Vec<u64>> = jac
        .iter()
        .map(|row| row.iter().map(|d| d.evaluate_mod(point, p)).collect())
        .collect();
    ratmat::rank_mod(&rows, p) < r
}

fn increment(point: &mut [u64], p: u64) -> bool {
    for slot in point.iter_mut() {
        *slot += 1;
        if *slot < p {
            return true;
        }
        *slot = 0;
    }
    false
}

fn ilog(p: u64, count: u64) -> u32 {
    let mut t = 0;
    let mut acc = 1u128;
    while acc * p as u128 <= count as u128 {
        acc *= p as u128;
        t += 1;
    }
    t
}
