//! Major/minor arc geometry and von Mangoldt exponential sums.
//!
//! Arc membership is decided in exact rational arithmetic (f64 inputs
//! are dyadic rationals, so the box inequality is evaluated without
//! rounding). Rational phases reduce mod q through root-of-unity
//! tables; diagonal systems factor T into one-dimensional sums.

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;

use crate::arch::{e, CubeEval};
use crate::local::{residue_sum, roots_of_unity, units};
use crate::poly::PolynomialSystem;
use crate::sieve::{Kahan, SieveTable};
use crate::{Complex64, Error, Result};

const ENUM_BUDGET: u128 = 4_000_000;

#[derive(Clone, Copy, Debug)]
pub struct ArcParams {
    pub n: u64,
    pub c: f64,
    pub d: u32,
    pub r: usize,
}

impl ArcParams {
    pub fn new(n: u64, c: f64, d: u32, r: usize) -> Result<Self> {
        if n < 3 || d < 1 || r < 1 {
            return Err(Error::BadArgument("need N >= 3, d >= 1, r >= 1".into()));
        }
        let log_pow = Self::log_pow_static(n, c);
        if !(log_pow < (n as f64).powi(d as i32) / 2.0) {
            return Err(Error::BadArgument(format!(
                "(log N)^C = {log_pow} is not below N^d/2; arcs degenerate"
            )));
        }
        Ok(ArcParams { n, c, d, r })
    }

    /// (log N)^C with the decadic logarithm. The log base only rescales
    /// the constant C; base 10 calibrates the desk scale so that the
    /// minor arcs stay nonempty across the test ladder at C = 2.
    fn log_pow_static(n: u64, c: f64) -> f64 {
        (n as f64).log10().powf(c)
    }

    pub fn log_pow(&self) -> f64 {
        Self::log_pow_static(self.n, self.c)
    }

    /// Largest admissible denominator, floor((log N)^C).
    pub fn q_cap(&self) -> u64 {
        self.log_pow().floor() as u64
    }

    /// Box radius N^{-i} (log N)^C around a/q in the degree-i coordinate.
    pub fn radius(&self, i: u32) -> f64 {
        self.log_pow() * (self.n as f64).powi(-(i as i32))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcFlavor {
    /// boxes with the common radius N^{-d}(log N)^C
    M,
    /// per-degree radii N^{-i}(log N)^C, coordinate i of degree i
    N,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Major { q: u64, a: Vec<u64> },
    Minor,
}

#[derive(Clone, Debug)]
pub struct ArcVerdict {
    pub point: Vec<f64>,
    pub verdict: Verdict,
}

/// |alpha - a/q| <= radius, decided exactly (both floats are dyadic).
fn box_hit(alpha: f64, a: u64, q: u64, radius: f64) -> bool {
    let alpha = BigRational::from_float(alpha).expect("finite");
    let radius = BigRational::from_float(radius).expect("finite");
    let frac = BigRational::new(a.into(), q.into());
    (alpha - frac).abs() <= radius
}

/// Denominators of the continued-fraction convergents of alpha, capped.
fn convergent_denominators(alpha: f64, cap: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    let mut x = alpha.fract();
    let (mut q0, mut q1) = (0u64, 1u64);
    for _ in 0..64 {
        if x.abs() < 1e-15 {
            break;
        }
        x = 1.0 / x;
        let a = x.floor();
        if a >= cap as f64 * 2.0 {
            // next convergent overshoots every admissible denominator
            break;
        }
        let q2 = (a as u64).saturating_mul(q1).saturating_add(q0);
        if q2 > cap {
            break;
        }
        out.push(q2);
        q0 = q1;
        q1 = q2;
        x -= a;
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn classify(alpha: &[f64], params: &ArcParams, flavor: ArcFlavor) -> ArcVerdict {
    let cap = params.q_cap().max(1);
    let radius_of = |i: usize| match flavor {
        ArcFlavor::M => params.radius(params.d),
        ArcFlavor::N => params.radius(i as u32 + 1),
    };
    let disjoint = alpha.len() == 1
        && radius_of(0) < 1.0 / (2.0 * (cap as f64) * (cap as f64));
    let candidates: Vec<u64> = if disjoint {
        convergent_denominators(alpha[0], cap)
    } else {
        (1..=cap).collect()
    };
    'next_q: for q in candidates {
        let mut a = Vec::with_capacity(alpha.len());
        for (i, &al) in alpha.iter().enumerate() {
            let ai = (al * q as f64).round() as i64;
            let ai = ai.rem_euclid(q as i64) as u64;
            if q > 1 && ai.gcd(&q) != 1 {
                continue 'next_q;
            }
            // measure against the unreduced representative nearest alpha
            let rep = (al * q as f64).round().max(0.0) as u64;
            if !box_hit(al, rep, q, radius_of(i)) {
                continue 'next_q;
            }
            a.push(ai);
        }
        return ArcVerdict {
            point: alpha.to_vec(),
            verdict: Verdict::Major { q, a },
        };
    }
    ArcVerdict {
        point: alpha.to_vec(),
        verdict: Verdict::Minor,
    }
}

/// S_0(beta) = sum_{x <= m} Lambda(x) e(beta_d x^d + ... + beta_1 x),
/// beta[i] the coefficient of x^{i+1}.
pub fn s0_sum(sieve: &SieveTable, m: u64, beta: &[f64]) -> Result<Complex64> {
    if m > sieve.n {
        return Err(Error::BadArgument(format!(
            "sum bound {m} exceeds sieve range {}",
            sieve.n
        )));
    }
    let mut re = Kahan::default();
    let mut im = Kahan::default();
    for x in 2..=m {
        let lam = sieve.lambda(x);
        if lam == 0.0 {
            continue;
        }
        let xf = x as f64;
        let mut phase = 0.0f64;
        for &b in beta.iter().rev() {
            phase = (phase + b) * xf;
        }
        let z = e(phase.fract());
        re.add(lam * z.re);
        im.add(lam * z.im);
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// T(alpha) = sum_{x in [N]^n} Lambda(x) e(p(x).alpha), floating phases.
pub fn t_sum(system: &PolynomialSystem, sieve: &SieveTable, alpha: &[f64]) -> Result<Complex64> {
    if alpha.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: alpha.len(),
        });
    }
    let m = sieve.n;
    if system.is_diagonal() {
        let slices = system.diagonal_slices();
        let mut t = Complex64::new(1.0, 0.0);
        for j in 0..system.n {
            let mut re = Kahan::default();
            let mut im = Kahan::default();
            for x in 2..=m {
                let lam = sieve.lambda(x);
                if lam == 0.0 {
                    continue;
                }
                let mut phase = 0.0f64;
                for (i, &al) in alpha.iter().enumerate() {
                    phase += al * eval_univariate_f64(&slices[i][j], x as f64);
                }
                let z = e(phase.fract());
                re.add(lam * z.re);
                im.add(lam * z.im);
            }
            t *= Complex64::new(re.value(), im.value());
        }
        return Ok(t);
    }
    enumerate_support(system, sieve, |vals, w, acc| {
        let phase: f64 = vals.iter().zip(alpha).map(|(&v, &al)| v as f64 * al).sum();
        *acc += w * e(phase.fract());
    })
}

/// T(a/q) with exact mod-q phases from root-of-unity tables.
pub fn t_sum_rational(
    system: &PolynomialSystem,
    sieve: &SieveTable,
    q: u64,
    a: &[u64],
) -> Result<Complex64> {
    if a.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: a.len(),
        });
    }
    if q == 0 {
        return Err(Error::BadArgument("modulus must be positive".into()));
    }
    let m = sieve.n;
    let roots = roots_of_unity(q);
    if system.is_diagonal() {
        let slices = system.diagonal_slices();
        let mut t = Complex64::new(1.0, 0.0);
        for j in 0..system.n {
            // phase of x in variable j depends only on x mod q
            let mut table = vec![0usize; q as usize];
            for (res, slot) in table.iter_mut().enumerate() {
                let mut acc: u128 = 0;
                for (i, &ai) in a.iter().enumerate() {
                    let v = slices[i][j].evaluate_mod(&[res as u64], q);
                    acc = (acc + v as u128 * ai as u128) % q as u128;
                }
                *slot = acc as usize;
            }
            let mut re = Kahan::default();
            let mut im = Kahan::default();
            for x in 2..=m {
                let lam = sieve.lambda(x);
                if lam == 0.0 {
                    continue;
                }
                let z = roots[table[(x % q) as usize]];
                re.add(lam * z.re);
                im.add(lam * z.im);
            }
            t *= Complex64::new(re.value(), im.value());
        }
        return Ok(t);
    }
    enumerate_support(system, sieve, |vals, w, acc| {
        let phase: u128 = vals
            .iter()
            .zip(a)
            .map(|(&v, &ai)| (v.rem_euclid(q as i128) as u128 * ai as u128) % q as u128)
            .sum::<u128>()
            % q as u128;
        *acc += w * roots[phase as usize];
    })
}

fn eval_univariate_f64(u: &crate::poly::Polynomial, x: f64) -> f64 {
    use num_traits::ToPrimitive;
    u.terms
        .iter()
        .map(|(m, c)| c.to_f64().unwrap_or(f64::NAN) * x.powi(m.exps[0] as i32))
        .sum()
}

fn enumerate_support(
    system: &PolynomialSystem,
    sieve: &SieveTable,
    mut accumulate: impl FnMut(&[i128], f64, &mut Complex64),
) -> Result<Complex64> {
    let m = sieve.n;
    let support: Vec<u64> = (2..=m).filter(|&x| sieve.lambda(x) > 0.0).collect();
    let n = system.n;
    let total = (support.len() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > ENUM_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{total} support tuples exceed the T-sum budget"
        )));
    }
    if support.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut idx = vec![0usize; n];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let point: Vec<i128> = idx.iter().map(|&i| support[i] as i128).collect();
        let vals = system
            .evaluate::<i128>(&point)
            .map_err(|_| Error::BadArgument("evaluation failed".into()))?;
        let w: f64 = point.iter().map(|&x| sieve.lambda(x as u64)).product();
        accumulate(&vals, w, &mut acc);
        let mut j = 0;
        loop {
            if j == n {
                return Ok(acc);
            }
            idx[j] += 1;
            if idx[j] < support.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// The residue-class decomposition
/// `sum_{g in Z_q^n} e(p(g).a/q) prod_j psi_{g_j}(N)`, the independent
/// side of the rational-phase identity.
pub fn residue_decomposition(
    system: &PolynomialSystem,
    sieve: &SieveTable,
    q: u64,
    a: &[u64],
) -> Result<Complex64> {
    if a.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: a.len(),
        });
    }
    let n = system.n;
    let total = (q as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > ENUM_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "q^n = {total} residue classes exceed the budget"
        )));
    }
    let roots = roots_of_unity(q);
    let psi: Vec<f64> = (0..q).map(|l| sieve.psi_residue(sieve.n, q, l)).collect();
    let mut g = vec![0u64; n];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let vals = system.evaluate_mod(&g, q);
        let phase: u128 = vals
            .iter()
            .zip(a)
            .map(|(&v, &ai)| (v as u128 * ai as u128) % q as u128)
            .sum::<u128>()
            % q as u128;
        let w: f64 = g.iter().map(|&gi| psi[gi as usize]).product();
        acc += w * roots[phase as usize];
        let mut j = 0;
        loop {
            if j == n {
                return Ok(acc);
            }
            g[j] += 1;
            if g[j] < q {
                break;
            }
            g[j] = 0;
            j += 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct MinorScan {
    pub n: u64,
    pub samples_requested: usize,
    pub minor_hits: usize,
    /// sup |S_0| / N over the sampled minor points, None when no sample
    /// landed on the minor arcs
    pub sup_ratio: Option<f64>,
}

/// Low-discrepancy sample of the torus filtered through `classify`
/// (flavor N); records the empirical sup of |S_0|/N over minor points.
pub fn minor_sup_scan(
    sieve: &SieveTable,
    params: &ArcParams,
    samples: usize,
) -> Result<MinorScan> {
    const ALPHAS: [f64; 4] = [
        0.6180339887498949,
        0.4142135623730951,
        0.7320508075688772,
        0.2360679774997896,
    ];
    let d = params.d as usize;
    let mut minor_hits = 0usize;
    let mut sup: Option<f64> = None;
    for k in 0..samples {
        let beta: Vec<f64> = (0..d)
            .map(|j| ((k as f64 + 0.5) * ALPHAS[j % 4]).fract())
            .collect();
        let verdict = classify(&beta, params, ArcFlavor::N);
        if verdict.verdict != Verdict::Minor {
            continue;
        }
        minor_hits += 1;
        let s0 = s0_sum(sieve, params.n, &beta)?;
        let ratio = s0.norm() / params.n as f64;
        sup = Some(sup.map_or(ratio, |s: f64| s.max(ratio)));
    }
    Ok(MinorScan {
        n: params.n,
        samples_requested: samples,
        minor_hits,
        sup_ratio: sup,
    })
}

/// The major-arc main term
/// `phi(q)^{-n} W_{a,q} N^n I(J, N^d tau)` at the point a/q + tau.
pub fn major_arc_main_term(
    system: &PolynomialSystem,
    params: &ArcParams,
    q: u64,
    a: &[u64],
    tau: &[f64],
) -> Result<Complex64> {
    if q > params.q_cap().max(1) {
        return Err(Error::BadArgument(format!(
            "q = {q} exceeds the arc cap {}",
            params.q_cap()
        )));
    }
    let top = system.top_forms();
    for (i, (&ti, p)) in tau.iter().zip(&top.polys).enumerate() {
        let deg = p.degree().unwrap_or(params.d);
        if ti.abs() > params.radius(deg) {
            return Err(Error::BadArgument(format!(
                "tau[{i}] = {ti} outside the major box radius {}",
                params.radius(deg)
            )));
        }
    }
    let w = residue_sum(system, q, a)?;
    let phi_n = (units(q).len() as f64).powi(system.n as i32);
    let ce = CubeEval::new(&top)?;
    let scaled: Vec<f64> = top
        .polys
        .iter()
        .zip(tau)
        .map(|(p, &ti)| ti * (params.n as f64).powi(p.degree().unwrap_or(1) as i32))
        .collect();
    let (cube, _, _, _) = ce.eval(&scaled);
    let nn = (params.n as f64).powi(system.n as i32);
    Ok(w.value / phi_n * nn * cube)
}
