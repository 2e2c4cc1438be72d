//! Regularization of graded systems of degrees at most 2, and
//! variable-split selection.
//!
//! The core loop replaces a quadratic that admits a short product
//! decomposition (below the configured rank target) by the linear factors
//! of that decomposition, keeping an exact expression of every input form
//! in the output forms. The parametric variant measures quadratics by the
//! modified rank `h(.; z)` and adjoins the pure-z remainder as a new
//! quadratic, so the number of y-involving quadratics strictly decreases.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::poly::{Polynomial, PolynomialSystem, RatPoly, VariableSplit, SplitDecomposition};
use crate::rank::{self, RankReport};
use crate::ratmat::{self};
use crate::{Error, Result};

/// A non-decreasing integer target function: an explicit table extended
/// affinely past its last entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TargetFn {
    pub table: Vec<i64>,
    pub slope: i64,
}

impl TargetFn {
    pub fn constant(c: i64) -> Self {
        TargetFn {
            table: vec![c],
            slope: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.table.is_empty() {
            return Err(Error::BadArgument("empty target table".into()));
        }
        if self.table.windows(2).any(|w| w[1] < w[0]) || self.slope < 0 {
            return Err(Error::BadArgument("target function must be non-decreasing".into()));
        }
        Ok(())
    }

    pub fn eval(&self, r: usize) -> i64 {
        if r < self.table.len() {
            self.table[r]
        } else {
            self.table[self.table.len() - 1] + self.slope * (r + 1 - self.table.len()) as i64
        }
    }

    /// Accepts `const:C` and `table:a,b,c[+slope]`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad target function: {s}"));
        if let Some(c) = s.strip_prefix("const:") {
            return Ok(TargetFn::constant(c.trim().parse().map_err(|_| bad())?));
        }
        if let Some(body) = s.strip_prefix("table:") {
            let (tbl, slope) = match body.split_once('+') {
                Some((t, sl)) => (t, sl.trim().parse().map_err(|_| bad())?),
                None => (body, 0),
            };
            let table = tbl
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| bad()))
                .collect::<Result<Vec<i64>>>()?;
            let f = TargetFn { table, slope };
            f.validate()?;
            return Ok(f);
        }
        Err(bad())
    }
}

/// One target function per degree.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RankTargetFamily {
    pub f: std::collections::BTreeMap<u32, TargetFn>,
}

impl RankTargetFamily {
    pub fn constant2(c: i64) -> Self {
        let mut f = std::collections::BTreeMap::new();
        f.insert(2, TargetFn::constant(c));
        RankTargetFamily { f }
    }

    pub fn validate(&self) -> Result<()> {
        for t in self.f.values() {
            t.validate()?;
        }
        Ok(())
    }

    /// `F_d(r)`, zero when no target is configured for the degree.
    pub fn eval(&self, degree: u32, r: usize) -> i64 {
        self.f.get(&degree).map_or(0, |t| t.eval(r))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReplacementStep {
    pub degree: u32,
    pub lambda: Vec<i64>,
    pub pivot: String,
    pub adjoined: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remainder: Option<String>,
}

/// Result of a regularization run: the output system, an exact
/// expression of every input form as a rational polynomial in the output
/// forms (variable `i` of the expression stands for output form `i`),
/// and the replacement log.
#[derive(Clone, Debug)]
pub struct Regularization {
    pub input: PolynomialSystem,
    pub output: PolynomialSystem,
    pub expressibility: Vec<RatPoly>,
    pub log: Vec<ReplacementStep>,
}

impl Regularization {
    /// Symbolic check: substituting the output forms into each
    /// expression reproduces the corresponding input form exactly.
    pub fn verify_expressibility(&self) -> bool {
        self.input.polys.iter().zip(&self.expressibility).all(|(f, e)| {
            e.num.substitute(&self.output.polys) == f.scale(&e.den)
        })
    }

    /// Point check at random integer points: expressions evaluated at
    /// `g(x)` reproduce `f(x)`, and equal output values force equal
    /// input values (level-set refinement).
    pub fn verify_level_sets(&self, pairs: u32, seed: u64) -> Result<bool> {
        let n = self.input.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = |rng: &mut ChaCha8Rng| -> Vec<BigInt> {
            (0..n).map(|_| BigInt::from(rng.gen_range(-5i64..=5))).collect()
        };
        for _ in 0..pairs {
            let x = sample(&mut rng);
            let xp = if rng.gen_bool(0.25) { x.clone() } else { sample(&mut rng) };
            let gx = self.output.evaluate_int(&x)?;
            let gxp = self.output.evaluate_int(&xp)?;
            let fx = self.input.evaluate_int(&x)?;
            let fxp = self.input.evaluate_int(&xp)?;
            if gx == gxp && fx != fxp {
                return Ok(false);
            }
            let gq: Vec<BigRational> = gx.into_iter().map(BigRational::from_integer).collect();
            for (f, e) in fx.iter().zip(&self.expressibility) {
                if e.evaluate_rat(&gq)? != BigRational::from_integer(f.clone()) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Re-runs the pivot search on the output: true when no combination
    /// in the search lattice admits a witness below the target.
    pub fn verify_rank_bound(
        &self,
        targets: &RankTargetFamily,
        split: Option<&VariableSplit>,
    ) -> Result<bool> {
        let n = self.output.n;
        let all: BTreeSet<usize> = (0..n).collect();
        let (eliminate, searchable) = searchable_quadratics(&self.output.polys, split, &all);
        let threshold = targets.eval(2, self.output.r());
        let pivot = find_pivot(&searchable, n, &eliminate, threshold, 10, split.is_none())?;
        Ok(pivot.is_none())
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "input": self.input,
            "output": self.output,
            "expressibility": self.expressibility.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "log": self.log,
        })
        .to_string()
    }
}

/// Regularize a graded system of degrees 1 and 2 against the target
/// family: the output refines the input's level sets and its quadratic
/// part admits no short decomposition witness in the search lattice.
pub fn regularize(system: &PolynomialSystem, targets: &RankTargetFamily) -> Result<Regularization> {
    regularize_inner(system, None, targets)
}

/// Parametric variant: quadratics are measured by the modified rank
/// `h(.; z)` and the pure-z remainder of a replaced combination is
/// adjoined as a new quadratic.
pub fn regularize_parametric(
    system: &PolynomialSystem,
    split: &VariableSplit,
    targets: &RankTargetFamily,
) -> Result<Regularization> {
    split.validate(system.n)?;
    regularize_inner(system, Some(split), targets)
}

fn regularize_inner(
    system: &PolynomialSystem,
    split: Option<&VariableSplit>,
    targets: &RankTargetFamily,
) -> Result<Regularization> {
    targets.validate()?;
    let n = system.n;
    for (i, p) in system.polys.iter().enumerate() {
        match p.degree() {
            Some(1) | Some(2) => {}
            _ => {
                return Err(Error::Degree(format!(
                    "form {i} must be homogeneous of degree 1 or 2"
                )))
            }
        }
        if !p.is_homogeneous() {
            return Err(Error::Degree(format!("form {i} is not homogeneous")));
        }
    }

    let mut forms: Vec<Polynomial> = system.polys.clone();
    let mut exprs: Vec<RatPoly> = (0..forms.len())
        .map(|i| RatPoly::from_poly(Polynomial::var(forms.len(), i)))
        .collect();
    let mut log = Vec::new();
    let all: BTreeSet<usize> = (0..n).collect();

    reselect_linear(n, &mut forms, &mut exprs)?;

    let max_steps = forms.iter().filter(|p| p.degree() == Some(2)).count() + 1;
    for step in 0..=max_steps {
        let (eliminate, searchable) = searchable_quadratics(&forms, split, &all);
        if searchable.is_empty() {
            break;
        }
        let threshold = targets.eval(2, forms.len());
        let Some(pivot) = find_pivot(&searchable, n, &eliminate, threshold, 10, split.is_none())?
        else {
            break;
        };
        if step == max_steps {
            return Err(Error::BudgetExceeded(
                "regularization exceeded its induction measure".into(),
            ));
        }
        apply_replacement(&mut forms, &mut exprs, &mut log, &searchable, pivot)?;
        reselect_linear(n, &mut forms, &mut exprs)?;
    }

    let reg = Regularization {
        input: system.clone(),
        output: PolynomialSystem::new(n, forms),
        expressibility: exprs,
        log,
    };
    debug_assert!(reg.verify_expressibility());
    Ok(reg)
}

/// Quadratics eligible as pivots: all of them in the standard loop, only
/// those involving y-side variables in the parametric one.
fn searchable_quadratics(
    forms: &[Polynomial],
    split: Option<&VariableSplit>,
    all: &BTreeSet<usize>,
) -> (BTreeSet<usize>, Vec<(usize, Polynomial)>) {
    let eliminate = split.map_or_else(|| all.clone(), |s| s.y_side());
    let searchable = forms
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            p.degree() == Some(2) && p.support().iter().any(|v| eliminate.contains(v))
        })
        .map(|(i, p)| (i, p.clone()))
        .collect();
    (eliminate, searchable)
}

struct Pivot {
    lambda: Vec<i64>,
    pivot_pos: usize,
    products: Vec<(RatPoly, RatPoly)>,
    remainder: RatPoly,
}

/// Scan the lattice of integer combinations (heights up to `height`,
/// lexicographic order, primitive representatives) for the shortest
/// decomposition witness below `threshold`.
fn find_pivot(
    quads: &[(usize, Polynomial)],
    n: usize,
    eliminate: &BTreeSet<usize>,
    threshold: i64,
    mut height: i64,
    prefilter: bool,
) -> Result<Option<Pivot>> {
    if quads.is_empty() || threshold <= 0 {
        return Ok(None);
    }
    let r = quads.len();
    while height > 1
        && (2 * height as u128 + 1)
            .checked_pow(r as u32)
            .map_or(true, |v| v > 2_000_000)
    {
        height -= 1;
    }

    // mod-p doubled matrices for the complex-rank prefilter
    const P: u64 = 101;
    let bmats: Vec<Vec<Vec<u64>>> = if prefilter {
        quads.iter().map(|(_, q)| doubled_matrix_mod(q, n, P)).collect()
    } else {
        vec![]
    };

    let mut best: Option<(usize, Vec<i64>, Vec<(RatPoly, RatPoly)>, RatPoly)> = None;
    for lam in lex_lattice(r, height) {
        let cutoff = best
            .as_ref()
            .map_or(threshold, |(l, ..)| threshold.min(*l as i64));
        if prefilter {
            let mut rows = vec![vec![0u64; n]; n];
            for (k, b) in bmats.iter().enumerate() {
                let lk = lam[k].rem_euclid(P as i64) as u64;
                if lk == 0 {
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        rows[i][j] = (rows[i][j] + lk * b[i][j]) % P;
                    }
                }
            }
            let lb = (ratmat::rank_mod(&rows, P) as i64 + 1) / 2;
            if lb >= cutoff {
                continue;
            }
        }
        let mut q = Polynomial::zero(n);
        for (l, (_, f)) in lam.iter().zip(quads) {
            q = q.add(&f.scale(&BigInt::from(*l)));
        }
        let (products, remainder) = rank::quadratic_products(&RatPoly::from_poly(q), eliminate)?;
        let len = products.len();
        if (len as i64) < cutoff {
            best = Some((len, lam, products, remainder));
            if len == 0 {
                break;
            }
        }
    }
    Ok(best.map(|(_, lambda, products, remainder)| {
        let pivot_pos = lambda.iter().position(|&l| l != 0).unwrap();
        Pivot {
            lambda,
            pivot_pos,
            products,
            remainder,
        }
    }))
}

fn doubled_matrix_mod(q: &Polynomial, n: usize, p: u64) -> Vec<Vec<u64>> {
    let mut b = vec![vec![0u64; n]; n];
    for (m, c) in &q.terms {
        let sup: Vec<usize> = m.support().collect();
        let cm: u64 = c.mod_floor(&BigInt::from(p)).try_into().unwrap();
        if sup.len() == 1 {
            b[sup[0]][sup[0]] = (2 * cm) % p;
        } else {
            b[sup[0]][sup[1]] = cm;
            b[sup[1]][sup[0]] = cm;
        }
    }
    b
}

/// Lattice points in lexicographic order, primitive with positive first
/// nonzero coordinate.
fn lex_lattice(r: usize, height: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-height; r];
    loop {
        let g = cur.iter().fold(0i64, |acc, &x| acc.gcd(&x));
        if g == 1 && cur.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
            out.push(cur.clone());
        }
        let mut k = r;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < height {
                cur[k] += 1;
                for slot in cur.iter_mut().skip(k + 1) {
                    *slot = -height;
                }
                break;
            }
        }
    }
}

/// Primitive integer scaling of a rational polynomial: returns
/// `(P, s)` with the input equal to `s * P`, the content of `P` one and
/// its leading coefficient positive.
fn primitive_int(l: &RatPoly) -> Option<(Polynomial, BigRational)> {
    if l.is_zero() {
        return None;
    }
    let mut g = BigInt::zero();
    for c in l.num.terms.values() {
        g = g.gcd(c);
    }
    let lead_neg = l.num.terms.iter().next_back().map(|(_, c)| c.is_negative())?;
    if lead_neg {
        g = -g;
    }
    let inv = BigRational::new(BigInt::one(), g.clone());
    let p = RatPoly {
        num: l.num.clone(),
        den: BigInt::one(),
    }
    .scale(&inv);
    debug_assert!(p.den.is_one());
    Some((p.num, BigRational::new(g, l.den.clone())))
}

fn apply_replacement(
    forms: &mut Vec<Polynomial>,
    exprs: &mut Vec<RatPoly>,
    log: &mut Vec<ReplacementStep>,
    quads: &[(usize, Polynomial)],
    pivot: Pivot,
) -> Result<()> {
    let m = forms.len();
    let p_idx = quads[pivot.pivot_pos].0;
    let lam_p = BigRational::from_integer(BigInt::from(pivot.lambda[pivot.pivot_pos]));

    // new form list: all but the pivot, then the primitive factors and
    // the primitive remainder
    let mut new_forms: Vec<Polynomial> = Vec::with_capacity(m + 2 * pivot.products.len());
    let mut new_index = vec![usize::MAX; m];
    for (j, f) in forms.iter().enumerate() {
        if j != p_idx {
            new_index[j] = new_forms.len();
            new_forms.push(f.clone());
        }
    }
    let mut adjoined = Vec::new();
    let mut factor_terms: Vec<(BigRational, usize, usize)> = Vec::new();
    for (u, v) in &pivot.products {
        let (pu, su) = primitive_int(u).ok_or_else(|| {
            Error::BadArgument("internal: zero factor in decomposition".into())
        })?;
        let (pv, sv) = primitive_int(v).ok_or_else(|| {
            Error::BadArgument("internal: zero factor in decomposition".into())
        })?;
        let iu = adjoin(&mut new_forms, pu, &mut adjoined);
        let iv = adjoin(&mut new_forms, pv, &mut adjoined);
        factor_terms.push((&su * &sv, iu, iv));
    }
    let remainder_term = match primitive_int(&pivot.remainder) {
        Some((pw, sw)) => {
            let iw = adjoin(&mut new_forms, pw, &mut adjoined);
            Some((sw, iw))
        }
        None => None,
    };

    // lambda_p g_p = sum s_u s_v U V + s_w W - sum_{t != pivot} lambda_t g_t
    let mm = new_forms.len();
    let mut expr_p = RatPoly::zero(mm);
    for (s, iu, iv) in &factor_terms {
        let t = RatPoly::from_poly(
            Polynomial::var(mm, *iu).mul(&Polynomial::var(mm, *iv)),
        );
        expr_p = expr_p.add(&t.scale(s));
    }
    if let Some((sw, iw)) = &remainder_term {
        expr_p = expr_p.add(&RatPoly::from_poly(Polynomial::var(mm, *iw)).scale(sw));
    }
    for (t, (idx, _)) in quads.iter().enumerate() {
        if t == pivot.pivot_pos || pivot.lambda[t] == 0 {
            continue;
        }
        let c = BigRational::from_integer(BigInt::from(-pivot.lambda[t]));
        expr_p = expr_p.add(&RatPoly::from_poly(Polynomial::var(mm, new_index[*idx])).scale(&c));
    }
    expr_p = expr_p.scale(&lam_p.recip());

    let subs: Vec<RatPoly> = (0..m)
        .map(|j| {
            if j == p_idx {
                expr_p.clone()
            } else {
                RatPoly::from_poly(Polynomial::var(mm, new_index[j]))
            }
        })
        .collect();
    for e in exprs.iter_mut() {
        *e = substitute_rat(e, &subs, mm);
    }

    log.push(ReplacementStep {
        degree: 2,
        lambda: pivot.lambda.clone(),
        pivot: forms[p_idx].to_string(),
        adjoined,
        remainder: remainder_term
            .as_ref()
            .map(|(_, iw)| new_forms[*iw].to_string()),
    });
    *forms = new_forms;
    Ok(())
}

fn adjoin(forms: &mut Vec<Polynomial>, p: Polynomial, adjoined: &mut Vec<String>) -> usize {
    if let Some(i) = forms.iter().position(|f| *f == p) {
        return i;
    }
    adjoined.push(p.to_string());
    forms.push(p);
    forms.len() - 1
}

/// Keep a maximal linearly independent subset of the degree-1 forms
/// (leftmost pivots); dropped forms are expressed in the kept ones.
fn reselect_linear(n: usize, forms: &mut Vec<Polynomial>, exprs: &mut Vec<RatPoly>) -> Result<()> {
    let m = forms.len();
    let linear: Vec<usize> = (0..m).filter(|&j| forms[j].degree() == Some(1)).collect();
    let vectors: Vec<Vec<BigRational>> = linear
        .iter()
        .map(|&j| linear_coeffs(&forms[j], n))
        .collect();
    let kept_rel = ratmat::independent_subset(&vectors);
    if kept_rel.len() == linear.len() {
        return Ok(());
    }
    let kept: BTreeSet<usize> = kept_rel.iter().map(|&k| linear[k]).collect();
    let basis: Vec<Vec<BigRational>> = kept_rel.iter().map(|&k| vectors[k].clone()).collect();

    let mut new_forms = Vec::new();
    let mut new_index = vec![usize::MAX; m];
    for j in 0..m {
        if forms[j].degree() != Some(1) || kept.contains(&j) {
            new_index[j] = new_forms.len();
            new_forms.push(forms[j].clone());
        }
    }
    let mm = new_forms.len();
    let subs: Vec<RatPoly> = (0..m)
        .map(|j| {
            if new_index[j] != usize::MAX {
                return Ok(RatPoly::from_poly(Polynomial::var(mm, new_index[j])));
            }
            let rel = linear.iter().position(|&x| x == j).unwrap();
            let c = ratmat::solve_combination(&basis, &vectors[rel]).ok_or_else(|| {
                Error::BadArgument("internal: dropped form not in kept span".into())
            })?;
            let mut e = RatPoly::zero(mm);
            for (ck, &kr) in c.iter().zip(&kept_rel) {
                if !ck.is_zero() {
                    e = e.add(
                        &RatPoly::from_poly(Polynomial::var(mm, new_index[linear[kr]])).scale(ck),
                    );
                }
            }
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    for e in exprs.iter_mut() {
        *e = substitute_rat(e, &subs, mm);
    }
    *forms = new_forms;
    Ok(())
}

fn linear_coeffs(p: &Polynomial, n: usize) -> Vec<BigRational> {
    let mut v = vec![BigRational::zero(); n];
    for (m, c) in &p.terms {
        let j = m.support().next().unwrap();
        v[j] = BigRational::from_integer(c.clone());
    }
    v
}

/// Substitute `subs[j]` for variable `j` of the expression.
fn substitute_rat(expr: &RatPoly, subs: &[RatPoly], n_out: usize) -> RatPoly {
    let mut acc = RatPoly::zero(n_out);
    for (mono, c) in &expr.num.terms {
        let mut term = RatPoly::from_poly(Polynomial::constant(n_out, c.clone()));
        for (j, &e) in mono.exps.iter().enumerate() {
            for _ in 0..e {
                term = term.mul(&subs[j]);
            }
        }
        acc = acc.add(&term);
    }
    acc.scale(&BigRational::new(BigInt::one(), expr.den.clone()))
}

// ---------------------------------------------------------------------------
// Variable-split selection

/// Select a small variable set `I` by the greedy minor procedure so that
/// the split `y = x_I`, `z = rest` gives `rank(f1 + g) >= c1` and
/// `rank(f2) >= c2`; requires the system rank to exceed the threshold
/// `c2 + c1 (r^2 + r)`.
pub fn select_split(
    system: &PolynomialSystem,
    c1: i64,
    c2: i64,
) -> Result<(VariableSplit, SplitDecomposition, (RankReport, RankReport))> {
    let r = system.r();
    let n = system.n;
    if r == 0 {
        return Err(Error::BadArgument("empty system".into()));
    }
    if c1 <= 0 || c2 < 0 {
        return Err(Error::BadArgument("thresholds must be positive".into()));
    }
    let d = system
        .degree()
        .ok_or_else(|| Error::Degree("zero system".into()))?;
    for p in &system.polys {
        if !p.is_homogeneous() || p.degree() != Some(d) {
            return Err(Error::Degree("system must be homogeneous of one degree".into()));
        }
    }
    if d > 2 {
        return Err(Error::Degree("select_split supports degrees 1 and 2".into()));
    }

    let wanted = c2 + c1 * ((r * r + r) as i64);
    let achieved = lower_of(&system_rank(system)?);
    if achieved < wanted {
        return Err(Error::ThresholdNotMet { wanted, achieved });
    }

    let i_set = if d == 1 {
        linear_blocks(system, c1 as usize)?
    } else {
        greedy_minors(system, c1 as usize)?
    };
    if i_set.len() > (c1 as usize) * r {
        return Err(Error::BadArgument("internal: selected set too large".into()));
    }
    let rest: Vec<usize> = (0..n).filter(|j| !i_set.contains(j)).collect();
    let split = VariableSplit::yz(i_set.iter().copied(), rest);
    let dec = crate::poly::split(system, &split)?;

    let s1 = PolynomialSystem::new(
        n,
        dec.f1
            .polys
            .iter()
            .zip(&dec.g.polys)
            .map(|(a, b)| a.add(b))
            .collect(),
    );
    let rank1 = system_rank(&s1)?;
    let rank2 = system_rank(&dec.f2)?;
    if lower_of(&rank1) < c1 {
        return Err(Error::ThresholdNotMet {
            wanted: c1,
            achieved: lower_of(&rank1),
        });
    }
    if lower_of(&rank2) < c2 {
        return Err(Error::ThresholdNotMet {
            wanted: c2,
            achieved: lower_of(&rank2),
        });
    }
    Ok((split, dec, (rank1, rank2)))
}

fn lower_of(rep: &RankReport) -> i64 {
    match rep.lower {
        rank::RankBound::Finite(v) => v,
        rank::RankBound::Infinite => i64::MAX,
    }
}

fn system_rank(sys: &PolynomialSystem) -> Result<RankReport> {
    let live: Vec<Polynomial> = sys.polys.iter().filter(|p| !p.is_zero()).cloned().collect();
    if live.is_empty() {
        return Ok(RankReport::exact(0, rank::RankMethod::ExactLinear));
    }
    let live_sys = PolynomialSystem::new(sys.n, live);
    match live_sys.degree() {
        Some(1) => rank::linear_rank(&live_sys),
        Some(2) if live_sys.r() == 1 => rank::quadratic_birch_rank(&live_sys.polys[0]),
        Some(2) => rank::birch_rank_estimate(&live_sys, &[101, 103], 200_000, 7),
        _ => Err(Error::Degree("unsupported degree in rank oracle".into())),
    }
}

/// Linear case: the block decomposition, taking `c1` disjoint column
/// sets that are each full-rank r x r blocks, scanning left to right.
fn linear_blocks(system: &PolynomialSystem, c1: usize) -> Result<BTreeSet<usize>> {
    let r = system.r();
    let n = system.n;
    let cols: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            system
                .polys
                .iter()
                .map(|p| linear_coeffs(p, n)[j].clone())
                .collect()
        })
        .collect();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..c1 {
        let mut block: Vec<usize> = Vec::new();
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        for j in 0..n {
            if used.contains(&j) || block.len() == r {
                continue;
            }
            let mut cand = rows.clone();
            cand.push(cols[j].clone());
            if ratmat::rank(&cand) > rows.len() {
                rows = cand;
                block.push(j);
            }
        }
        if block.len() < r {
            break;
        }
        used.extend(block);
    }
    Ok(used)
}

/// Quadratic case: greedily add r-column minors of the Jacobian whose
/// determinant is nonzero at some sampled point where all previously
/// selected minors vanish.
fn greedy_minors(system: &PolynomialSystem, c1: usize) -> Result<BTreeSet<usize>> {
    const P: u64 = 101;
    let r = system.r();
    let n = system.n;
    let jac = system.jacobian();
    let mut rng = ChaCha8Rng::seed_from_u64(0x517);
    let points: Vec<Vec<u64>> = (0..4000)
        .map(|_| (0..n).map(|_| rng.gen_range(0..P)).collect())
        .collect();
    let jac_at: Vec<Vec<Vec<u64>>> = points
        .iter()
        .map(|x| {
            jac.iter()
                .map(|row| row.iter().map(|d| d.evaluate_mod(x, P)).collect())
                .collect()
        })
        .collect();
    let minor_full = |jv: &Vec<Vec<u64>>, cols: &[usize]| -> bool {
        let sub: Vec<Vec<u64>> = jv
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        ratmat::rank_mod(&sub, P) == r
    };
    let mut selected: Vec<Vec<usize>> = Vec::new();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..c1 {
        let free: Vec<usize> = (0..n).filter(|j| !used.contains(j)).collect();
        let mut found = None;
        'cand: for cand in combinations_of(&free, r) {
            for jv in &jac_at {
                if selected.iter().all(|s| !minor_full(jv, s)) && minor_full(jv, &cand) {
                    found = Some(cand);
                    break 'cand;
                }
            }
        }
        let Some(cand) = found else { break };
        used.extend(cand.iter().copied());
        selected.push(cand);
    }
    Ok(used)
}

fn combinations_of(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], start: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, i + 1, k, cur, out);
            cur.pop();
        }
    }
    rec(items, 0, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;

    fn sys(src: &str, n: usize) -> PolynomialSystem {
        parse_system(src, n).unwrap()
    }

    #[test]
    fn single_hyperbolic_becomes_linear() {
        let s = sys("x1*x2", 2);
        let reg = regularize(&s, &RankTargetFamily::constant2(2)).unwrap();
        assert!(reg.verify_expressibility());
        assert_eq!(reg.log.len(), 1);
        let degs: Vec<_> = reg.output.polys.iter().map(|p| p.degree()).collect();
        assert_eq!(degs, vec![Some(1), Some(1)]);
        assert!(reg.verify_level_sets(500, 1).unwrap());
    }

    #[test]
    fn high_rank_diagonal_unchanged() {
        let s = sys("x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2", 6);
        let reg = regularize(&s, &RankTargetFamily::constant2(2)).unwrap();
        assert!(reg.log.is_empty());
        assert_eq!(reg.output.polys, s.polys);
    }

    #[test]
    fn hidden_hyperbolic_difference() {
        let s = sys(
            "x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2\n\
             x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2 + x7*x8",
            8,
        );
        let reg = regularize(&s, &RankTargetFamily::constant2(4)).unwrap();
        assert!(reg.verify_expressibility());
        assert_eq!(reg.log.len(), 1);
        // one quadratic of rank >= 6 survives, x7 and x8 are adjoined
        let quads: Vec<_> = reg
            .output
            .polys
            .iter()
            .filter(|p| p.degree() == Some(2))
            .collect();
        assert_eq!(quads.len(), 1);
        let lins: Vec<_> = reg
            .output
            .polys
            .iter()
            .filter(|p| p.degree() == Some(1))
            .collect();
        assert_eq!(lins.len(), 2);
        assert!(reg.verify_level_sets(2000, 3).unwrap());
        assert!(reg
            .verify_rank_bound(&RankTargetFamily::constant2(4), None)
            .unwrap());
    }

    #[test]
    fn dependent_quadratics_collapse() {
        let s = sys("x1^2 + x2^2\nx1^2 + x2^2", 2);
        let reg = regularize(&s, &RankTargetFamily::constant2(1)).unwrap();
        assert!(reg.verify_expressibility());
        assert!(reg.verify_level_sets(500, 5).unwrap());
        let quads = reg
            .output
            .polys
            .iter()
            .filter(|p| p.degree() == Some(2))
            .count();
        assert_eq!(quads, 1);
    }

    #[test]
    fn dependent_linears_reselected() {
        let s = sys("x1 + x2\n2*x1 + 2*x2\nx2", 2);
        let reg = regularize(&s, &RankTargetFamily::constant2(2)).unwrap();
        assert!(reg.verify_expressibility());
        assert_eq!(reg.output.r(), 2);
        assert!(reg.verify_level_sets(300, 2).unwrap());
    }

    #[test]
    fn parametric_example() {
        // y1 z1 + z2^2 with z = {z1, z2}: adjoin y1, z1 and the pure-z
        // quadratic z2^2
        let s = sys("x1*x2 + x3^2", 3);
        let split = VariableSplit::yz([0], [1, 2]);
        let reg = regularize_parametric(&s, &split, &RankTargetFamily::constant2(2)).unwrap();
        assert!(reg.verify_expressibility());
        assert_eq!(reg.log.len(), 1);
        let mut degs: Vec<_> = reg.output.polys.iter().filter_map(|p| p.degree()).collect();
        degs.sort();
        assert_eq!(degs, vec![1, 1, 2]);
        // the surviving quadratic is pure-z
        let quad = reg
            .output
            .polys
            .iter()
            .find(|p| p.degree() == Some(2))
            .unwrap();
        assert!(quad.support().is_subset(&split.z_block));
        assert!(reg.verify_level_sets(500, 9).unwrap());
    }

    #[test]
    fn parametric_pure_z_unchanged() {
        let s = sys("x2^2 + x3^2", 3);
        let split = VariableSplit::yz([0], [1, 2]);
        let reg = regularize_parametric(&s, &split, &RankTargetFamily::constant2(5)).unwrap();
        assert!(reg.log.is_empty());
        assert_eq!(reg.output.polys, s.polys);
    }

    #[test]
    fn parametric_high_modified_rank_unchanged() {
        // full-rank quadratic in y alone: h(.; z) equals the usual rank
        // bound and stays above a small target
        let s = sys("x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2", 6);
        let split = VariableSplit::yz([0, 1, 2, 3, 4, 5], Vec::<usize>::new());
        let reg = regularize_parametric(&s, &split, &RankTargetFamily::constant2(2)).unwrap();
        assert!(reg.log.is_empty());
    }

    #[test]
    fn degree_three_rejected() {
        let s = sys("x1^3", 2);
        assert!(regularize(&s, &RankTargetFamily::constant2(2)).is_err());
    }

    #[test]
    fn target_fn_parse_and_eval() {
        let f = TargetFn::parse("const:4").unwrap();
        assert_eq!(f.eval(0), 4);
        assert_eq!(f.eval(10), 4);
        let g = TargetFn::parse("table:1,2,3+2").unwrap();
        assert_eq!(g.eval(1), 2);
        assert_eq!(g.eval(4), 7);
        assert!(TargetFn::parse("table:3,1").is_err());
        assert!(TargetFn::parse("junk").is_err());
    }

    #[test]
    fn select_split_diagonal_quadratic() {
        let s = sys(
            "x1^2 + x2^2 + x3^2 + x4^2 + x5^2 + x6^2 + x7^2 + x8^2",
            8,
        );
        let (split, dec, (r1, r2)) = select_split(&s, 2, 3).unwrap();
        assert_eq!(split.y_block.len(), 2);
        assert_eq!(dec.recombine().polys, s.polys);
        assert!(lower_of(&r1) >= 2);
        assert!(lower_of(&r2) >= 3);
        // mixed part vanishes for a diagonal form
        assert!(dec.g.polys.iter().all(|p| p.is_zero()));
    }

    #[test]
    fn select_split_linear_blocks() {
        // A = [I2 I2 ... I2] with 14 blocks: every combination touches
        // all 14 blocks, so the rank threshold 1 + 2(4+2) = 13 is met
        let n = 28;
        let mut rows = vec![Polynomial::zero(n), Polynomial::zero(n)];
        for b in 0..14 {
            rows[0].add_term(crate::poly::Monomial::var(n, 2 * b), BigInt::one());
            rows[1].add_term(crate::poly::Monomial::var(n, 2 * b + 1), BigInt::one());
        }
        let s = PolynomialSystem::new(n, rows);
        let (split, dec, (r1, r2)) = select_split(&s, 2, 1).unwrap();
        let want: BTreeSet<usize> = [0, 1, 2, 3].into_iter().collect();
        assert_eq!(split.y_block, want);
        assert_eq!(dec.recombine().polys, s.polys);
        assert!(lower_of(&r1) >= 2);
        assert!(lower_of(&r2) >= 1);
    }

    #[test]
    fn select_split_threshold_error() {
        let s = sys("x1^2 + x2^2", 4);
        match select_split(&s, 2, 3) {
            Err(Error::ThresholdNotMet { wanted, achieved }) => {
                assert_eq!(wanted, 3 + 2 * 2);
                assert_eq!(achieved, 2);
            }
            other => panic!("expected threshold error, got {other:?}"),
        }
    }

    #[test]
    fn fuzzed_regularization_terminates_and_refines() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..40 {
            let n = rng.gen_range(2..=6);
            let r2 = rng.gen_range(1..=3);
            let mut polys = Vec::new();
            for _ in 0..r2 {
                let mut p = Polynomial::zero(n);
                for _ in 0..rng.gen_range(1..=4) {
                    let i = rng.gen_range(0..n);
                    let j = rng.gen_range(0..n);
                    let mut m = crate::poly::Monomial::one(n);
                    m.exps[i] += 1;
                    m.exps[j] += 1;
                    p.add_term(m, BigInt::from(rng.gen_range(-3i64..=3)));
                }
                if p.is_zero() {
                    p.add_term(crate::poly::Monomial::var(n, 0).mul(&crate::poly::Monomial::var(n, 0)), BigInt::one());
                }
                polys.push(p);
            }
            let s = PolynomialSystem::new(n, polys);
            let reg = regularize(&s, &RankTargetFamily::constant2(2)).unwrap();
            assert!(reg.log.len() <= r2);
            assert!(reg.verify_expressibility());
            assert!(reg.verify_level_sets(200, 11).unwrap());
        }
    }
}
