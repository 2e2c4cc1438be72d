//! The archimedean side: oscillatory integrals over the unit cube, the
//! truncated singular integral J(mu; Phi) and the density mu_infinity.
//!
//! Diagonal systems separate into products of one-dimensional
//! oscillatory integrals, which is the workhorse path; small
//! non-diagonal systems fall back to tensor Gauss-Legendre and larger
//! ones to a low-discrepancy lattice rule. Every value carries an error
//! estimate from two nested rules.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::poly::PolynomialSystem;
use crate::{Complex64, Error, Result};

/// e(x) = exp(2 pi i x)
#[inline]
pub fn e(x: f64) -> Complex64 {
    let th = 2.0 * std::f64::consts::PI * x;
    Complex64::new(th.cos(), th.sin())
}

#[derive(Clone, Debug)]
pub struct QuadratureSpec {
    pub rule: String,
    pub nodes: usize,
    pub error_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct OscillatoryIntegral {
    pub tau: Vec<f64>,
    pub value: Complex64,
    pub quadrature: QuadratureSpec,
}

#[derive(Clone, Debug)]
pub struct SingularIntegralEstimate {
    pub mu: Vec<f64>,
    pub phi: f64,
    pub value: f64,
    /// estimated bound c * Phi^{-1/2} on the truncation tail
    pub tail_bound: f64,
    pub quad_error: f64,
    /// |Im| of the outer integral; the exact value is real
    pub imag_residual: f64,
}

/// Gauss-Legendre nodes and weights on [0,1], cached per order.
struct GlRule {
    x: Vec<f64>,
    w: Vec<f64>,
}

fn gl_rule(k: usize) -> &'static GlRule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GlRule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(k).or_insert_with(|| {
        let mut x = Vec::with_capacity(k);
        let mut w = Vec::with_capacity(k);
        for i in 0..k {
            // Newton iteration from the Chebyshev initial guess
            let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
            for _ in 0..60 {
                let (mut p0, mut p1) = (1.0f64, t);
                for j in 2..=k {
                    let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = k as f64 * (t * p1 - p0) / (t * t - 1.0);
                let step = p1 / dp;
                t -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0f64, t);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = k as f64 * (t * p1 - p0) / (t * t - 1.0);
            x.push(0.5 * (1.0 - t));
            w.push(1.0 / ((1.0 - t * t) * dp * dp));
        }
        Box::leak(Box::new(GlRule { x, w }))
    })
}

/// Horner evaluation of a degree-indexed coefficient vector.
#[inline]
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// `int_0^1 e(phi(z)) dz` for a polynomial phase, by panelized GL.
fn osc1d(coeffs: &[f64], order: usize) -> Complex64 {
    let amp: f64 = coeffs.iter().skip(1).map(|c| c.abs()).sum();
    let panels = ((amp / 1.5).ceil() as usize).clamp(1, 8000);
    let rule = gl_rule(order);
    let h = 1.0 / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let a = p as f64 * h;
        for (&x, &w) in rule.x.iter().zip(&rule.w) {
            acc += w * e(horner(coeffs, a + h * x));
        }
    }
    acc * h
}

/// Evaluation context for `I(J, tau) = int_{[0,1]^n} e(f(z).tau) dz`.
pub struct CubeEval {
    system: PolynomialSystem,
    /// per-form, per-variable univariate coefficient vectors (diagonal)
    diag: Option<Vec<Vec<Vec<f64>>>>,
    /// per-form sum of |coefficients|, a bound for |f_i| on the cube
    pub amp: Vec<f64>,
}

impl CubeEval {
    pub fn new(system: &PolynomialSystem) -> Result<Self> {
        for p in &system.polys {
            if !p.is_homogeneous() {
                return Err(Error::Degree(
                    "oscillatory cube integral requires homogeneous forms".into(),
                ));
            }
        }
        let amp = system
            .polys
            .iter()
            .map(|p| {
                p.terms
                    .values()
                    .map(|c| {
                        use num_traits::ToPrimitive;
                        c.to_f64().unwrap_or(f64::INFINITY).abs()
                    })
                    .sum()
            })
            .collect();
        let diag = if system.is_diagonal() {
            let slices = system.diagonal_slices();
            Some(
                slices
                    .iter()
                    .map(|per_var| {
                        per_var
                            .iter()
                            .map(|u| {
                                let deg = u.degree().unwrap_or(0) as usize;
                                let mut c = vec![0.0; deg + 1];
                                for (m, coef) in &u.terms {
                                    use num_traits::ToPrimitive;
                                    c[m.exps[0] as usize] = coef.to_f64().unwrap_or(f64::NAN);
                                }
                                c
                            })
                            .collect()
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(CubeEval {
            system: system.clone(),
            diag,
            amp,
        })
    }

    pub fn n(&self) -> usize {
        self.system.n
    }

    pub fn r(&self) -> usize {
        self.system.r()
    }

    /// Total phase amplitude `sum_i |tau_i| |f_i|_1`.
    pub fn phase_amp(&self, tau: &[f64]) -> f64 {
        tau.iter().zip(&self.amp).map(|(t, a)| t.abs() * a).sum()
    }

    /// (value, error estimate, rule name, node count)
    pub fn eval(&self, tau: &[f64]) -> (Complex64, f64, &'static str, usize) {
        if tau.iter().all(|&t| t == 0.0) {
            return (Complex64::new(1.0, 0.0), 0.0, "exact", 0);
        }
        if let Some(diag) = &self.diag {
            let n = self.system.n;
            let mut coarse = Complex64::new(1.0, 0.0);
            let mut fine = Complex64::new(1.0, 0.0);
            let mut nodes = 0;
            for j in 0..n {
                // phase in variable j: sum_i tau_i u_{i,j}
                let deg = diag
                    .iter()
                    .map(|per_var| per_var[j].len())
                    .max()
                    .unwrap_or(1);
                let mut c = vec![0.0; deg];
                for (i, per_var) in diag.iter().enumerate() {
                    for (k, &ck) in per_var[j].iter().enumerate() {
                        c[k] += tau[i] * ck;
                    }
                }
                coarse *= osc1d(&c, 10);
                fine *= osc1d(&c, 16);
                let amp: f64 = c.iter().skip(1).map(|x| x.abs()).sum();
                nodes += 16 * ((amp / 1.5).ceil() as usize).clamp(1, 8000);
            }
            return (fine, (fine - coarse).norm(), "gl-diagonal", nodes);
        }
        let a = self.phase_amp(tau);
        let n = self.system.n;
        let k = (12 + (2.0 * a).ceil() as usize).min(40);
        if n <= 4 && (k as f64).powi(n as i32) <= 3.0e6 {
            let fine = self.tensor(tau, k);
            let coarse = self.tensor(tau, k - 3);
            return (fine, (fine - coarse).norm(), "gl-tensor", k.pow(n as u32));
        }
        let total = 1usize << 20;
        let fine = self.qmc(tau, total);
        let coarse = self.qmc(tau, total / 2);
        (fine, (fine - coarse).norm(), "qmc-lattice", total)
    }

    fn tensor(&self, tau: &[f64], k: usize) -> Complex64 {
        let n = self.system.n;
        let rule = gl_rule(k);
        let mut idx = vec![0usize; n];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut point = vec![0.0f64; n];
        loop {
            let mut w = 1.0;
            for (j, &i) in idx.iter().enumerate() {
                point[j] = rule.x[i];
                w *= rule.w[i];
            }
            let vals = self.system.evaluate::<f64>(&point).expect("dimension ok");
            let phase: f64 = vals.iter().zip(tau).map(|(v, t)| v * t).sum();
            acc += w * e(phase);
            let mut j = 0;
            loop {
                if j == n {
                    return acc;
                }
                idx[j] += 1;
                if idx[j] < k {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    fn qmc(&self, tau: &[f64], points: usize) -> Complex64 {
        const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        let n = self.system.n;
        let alphas: Vec<f64> = (0..n).map(|j| (PRIMES[j % 12] as f64).sqrt().fract()).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut point = vec![0.0f64; n];
        for kk in 0..points {
            for j in 0..n {
                point[j] = ((kk as f64 + 0.5) * alphas[j]).fract();
            }
            let vals = self.system.evaluate::<f64>(&point).expect("dimension ok");
            let phase: f64 = vals.iter().zip(tau).map(|(v, t)| v * t).sum();
            acc += e(phase);
        }
        acc / points as f64
    }
}

pub fn cube_integral(system: &PolynomialSystem, tau: &[f64]) -> Result<OscillatoryIntegral> {
    if tau.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: tau.len(),
        });
    }
    let ce = CubeEval::new(system)?;
    let (value, err, rule, nodes) = ce.eval(tau);
    Ok(OscillatoryIntegral {
        tau: tau.to_vec(),
        value,
        quadrature: QuadratureSpec {
            rule: rule.to_string(),
            nodes,
            error_estimate: err,
        },
    })
}

/// One outer panel: whole-interval rule versus two halves for the error
/// estimate; Filon-type quadratic-amplitude weighting beyond |tau| > 16
/// when the twist oscillates fast across the panel.
struct OuterPanel {
    value: Complex64,
    err: f64,
}

fn filon_moments(theta: f64) -> (Complex64, Complex64, f64) {
    if theta.abs() < 0.5 {
        let t2 = theta * theta;
        let m0 = 2.0 * (1.0 - t2 / 6.0 + t2 * t2 / 120.0);
        let m1 = 2.0 * (theta / 3.0 - theta * t2 / 30.0 + theta * t2 * t2 / 840.0);
        let m2 = 2.0 * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0);
        (
            Complex64::new(m0, 0.0),
            Complex64::new(0.0, m1),
            m2,
        )
    } else {
        let (s, c) = theta.sin_cos();
        let m0 = 2.0 * s / theta;
        let m1 = 2.0 * (s - theta * c) / (theta * theta);
        let m2 = 2.0 * ((theta * theta - 2.0) * s + 2.0 * theta * c) / (theta * theta * theta);
        (
            Complex64::new(m0, 0.0),
            Complex64::new(0.0, m1),
            m2,
        )
    }
}

/// `int_{a}^{b} A(tau) e(-mu tau) dtau` for a single panel with the
/// amplitude sampled at the three Chebyshev-like points.
fn filon_panel(amp_at: &mut dyn FnMut(f64) -> Complex64, a: f64, b: f64, mu: f64) -> Complex64 {
    let h = 0.5 * (b - a);
    let tc = 0.5 * (a + b);
    let al = amp_at(a);
    let am = amp_at(tc);
    let ar = amp_at(b);
    let a0 = am;
    let a1 = (ar - al) * 0.5;
    let a2 = (ar + al - 2.0 * am) * 0.5;
    let theta = -2.0 * std::f64::consts::PI * mu * h;
    let (m0, m1, m2) = filon_moments(theta);
    h * e(-mu * tc) * (a0 * m0 + a1 * m1 + a2 * m2)
}

fn gl_panel(f: &mut dyn FnMut(f64) -> Complex64, a: f64, b: f64, order: usize) -> Complex64 {
    let rule = gl_rule(order);
    let h = b - a;
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &w) in rule.x.iter().zip(&rule.w) {
        acc += w * f(a + h * x);
    }
    acc * h
}

fn outer_panel(
    ce: &CubeEval,
    mu: f64,
    a: f64,
    b: f64,
    err_accum: &mut f64,
) -> OuterPanel {
    let mut inner_err = 0.0f64;
    let mut amp_at = |t: f64| {
        let (v, err, _, _) = ce.eval(&[t]);
        inner_err += err * (b - a) / 3.0;
        v
    };
    let use_filon = a.abs().min(b.abs()) > 16.0
        && (mu * (b - a)).abs() > 0.5;
    let (whole, halves) = if use_filon {
        let m = 0.5 * (a + b);
        (
            filon_panel(&mut amp_at, a, b, mu),
            filon_panel(&mut amp_at, a, m, mu) + filon_panel(&mut amp_at, m, b, mu),
        )
    } else {
        let mut f = |t: f64| amp_at(t) * e(-mu * t);
        let m = 0.5 * (a + b);
        (
            gl_panel(&mut f, a, b, 7),
            gl_panel(&mut f, a, m, 7) + gl_panel(&mut f, m, b, 7),
        )
    };
    *err_accum += inner_err;
    OuterPanel {
        value: halves,
        err: (whole - halves).norm(),
    }
}

/// Integral of `I(J,tau) e(-mu tau)` over `[lo, hi]` for scalar tau.
fn integrate_interval(ce: &CubeEval, mu: f64, lo: f64, hi: f64) -> (Complex64, f64) {
    let amp = ce.amp.first().copied().unwrap_or(0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0f64;
    let mut cuts = vec![lo];
    for c in [-16.0f64, 16.0] {
        if c > lo && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let oscillatory = a.abs().min(b.abs()) > 16.0;
        // Filon panels only need the amplitude to be smooth; plain GL
        // panels must also resolve the twist.
        let freq = if oscillatory && mu.abs() > amp {
            (3.0 * amp.max(0.2)).max(0.5)
        } else {
            2.0 * (amp + mu.abs() + 0.5)
        };
        let panels = (((b - a) * freq).ceil() as usize).clamp(1, 40_000);
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let pa = a + p as f64 * h;
            let panel = outer_panel(ce, mu, pa, pa + h, &mut err);
            acc += panel.value;
            err += panel.err;
        }
    }
    (acc, err)
}

/// Tensor outer quadrature for r >= 2, nested GL orders for the error.
fn integrate_box(ce: &CubeEval, mu: &[f64], phi: f64) -> Result<(Complex64, f64)> {
    let r = mu.len();
    let mut axes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(r);
    for (i, &mi) in mu.iter().enumerate() {
        let freq = 2.0 * (ce.amp[i] + mi.abs() + 0.5);
        let panels = ((2.0 * phi * freq).ceil() as usize).clamp(1, 2000);
        let h = 2.0 * phi / panels as f64;
        let rule = gl_rule(5);
        let mut nodes = Vec::new();
        for p in 0..panels {
            let a = -phi + p as f64 * h;
            for (&x, &w) in rule.x.iter().zip(&rule.w) {
                nodes.push((a + h * x, w * h));
            }
        }
        axes.push(nodes);
    }
    let total: usize = axes.iter().map(|a| a.len()).product();
    if total > 600_000 {
        return Err(Error::BudgetExceeded(format!(
            "outer quadrature needs {total} nodes for r = {r}"
        )));
    }
    let mut idx = vec![0usize; r];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut err = 0.0f64;
    let mut tau = vec![0.0f64; r];
    loop {
        let mut w = 1.0;
        for (i, &k) in idx.iter().enumerate() {
            tau[i] = axes[i][k].0;
            w *= axes[i][k].1;
        }
        let (v, ev, _, _) = ce.eval(&tau);
        let twist: f64 = mu.iter().zip(&tau).map(|(m, t)| m * t).sum();
        acc += w * v * e(-twist);
        err += w.abs() * ev;
        let mut j = 0;
        loop {
            if j == r {
                return Ok((acc, err));
            }
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

pub fn singular_integral(
    system: &PolynomialSystem,
    mu: &[f64],
    phi: f64,
) -> Result<SingularIntegralEstimate> {
    if phi <= 0.0 {
        return Err(Error::BadArgument("Phi must be positive".into()));
    }
    if mu.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: mu.len(),
        });
    }
    let ce = CubeEval::new(system)?;
    let (value, ring, err) = if mu.len() == 1 {
        let (inner, e1) = integrate_interval(&ce, mu[0], -phi / 2.0, phi / 2.0);
        let (low, e2) = integrate_interval(&ce, mu[0], -phi, -phi / 2.0);
        let (high, e3) = integrate_interval(&ce, mu[0], phi / 2.0, phi);
        (inner + low + high, (low + high).norm(), e1 + e2 + e3)
    } else {
        let (full, e1) = integrate_box(&ce, mu, phi)?;
        let (half, e2) = integrate_box(&ce, mu, phi / 2.0)?;
        ((full), (full - half).norm(), e1 + e2)
    };
    // |J - J(Phi)| <~ c Phi^{-1/2}; calibrate c from the outer ring
    let c_hat = ring * (phi / 2.0).sqrt() / (1.0 - 0.5f64.sqrt());
    let tail_bound = (c_hat / phi.sqrt()).max(2.0 * err).max(1e-12);
    Ok(SingularIntegralEstimate {
        mu: mu.to_vec(),
        phi,
        value: value.re,
        tail_bound,
        quad_error: err,
        imag_residual: value.im.abs(),
    })
}

/// `mu_infinity(N, s) = J(N^{-d} s; Phi*)` with the cutoff grown until
/// the estimated tail is at most 1e-3.
pub fn mu_infinity(system: &PolynomialSystem, s: &[f64], n_scale: f64) -> Result<SingularIntegralEstimate> {
    if s.len() != system.r() {
        return Err(Error::DimensionMismatch {
            expected: system.r(),
            got: s.len(),
        });
    }
    let mu: Vec<f64> = system
        .polys
        .iter()
        .zip(s)
        .map(|(p, &si)| si / n_scale.powi(p.degree().unwrap_or(1) as i32))
        .collect();
    let mut phi = 8.0f64;
    loop {
        let est = singular_integral(system, &mu, phi)?;
        if est.tail_bound <= 1e-3 || phi >= 4096.0 {
            return Ok(est);
        }
        phi *= 2.0;
    }
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
    fn tau_zero_is_exactly_one() {
        for s in [ternary(), sys("x1^2 + x2^2", 2)] {
            let v = cube_integral(&s, &[0.0]).unwrap();
            assert_eq!(v.value, Complex64::new(1.0, 0.0));
            assert_eq!(v.quadrature.error_estimate, 0.0);
        }
    }

    #[test]
    fn linear_closed_form() {
        for tau in [0.7f64, 3.2, -1.4] {
            let v = cube_integral(&ternary(), &[tau]).unwrap();
            let one_d = (e(tau) - 1.0) / (Complex64::new(0.0, 2.0 * std::f64::consts::PI * tau));
            let oracle = one_d * one_d * one_d;
            assert!((v.value - oracle).norm() < 1e-8, "tau={tau}");
        }
    }

    #[test]
    fn fresnel_oracle() {
        // adaptive 1-D oracle: Simpson on a fine uniform grid
        let s = sys("x1^2", 1);
        let v = cube_integral(&s, &[1.0]).unwrap();
        let m = 200_000usize;
        let h = 1.0 / m as f64;
        let mut oracle = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let a = i as f64 * h;
            let f0 = e(a * a);
            let f1 = e((a + 0.5 * h) * (a + 0.5 * h));
            let f2 = e((a + h) * (a + h));
            oracle += h / 6.0 * (f0 + 4.0 * f1 + f2);
        }
        assert!((v.value - oracle).norm() < 1e-8);
    }

    #[test]
    fn unimodular_bound() {
        for tau in [0.3f64, 2.0, 17.5] {
            for s in [ternary(), sys("x1^2 + 2*x2^2 + x3^2", 3)] {
                let v = cube_integral(&s, &[tau]).unwrap();
                assert!(v.value.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn tensor_path_matches_grid_oracle() {
        let s = sys("x1^2 + x1*x2 + x2^2", 2);
        let tau = 0.8f64;
        let v = cube_integral(&s, &[tau]).unwrap();
        assert_eq!(v.quadrature.rule, "gl-tensor");
        let m = 600usize;
        let h = 1.0 / m as f64;
        let mut oracle = Complex64::new(0.0, 0.0);
        for i in 0..m {
            let x = (i as f64 + 0.5) * h;
            for j in 0..m {
                let y = (j as f64 + 0.5) * h;
                oracle += e(tau * (x * x + x * y + y * y));
            }
        }
        oracle *= h * h;
        assert!((v.value - oracle).norm() < 1e-4);
    }

    #[test]
    fn qmc_path_matches_product_oracle() {
        // x1 x2 + x3 x4 + x5^2 factors as (int e(tau xy))^2 int e(tau z^2)
        let s = sys("x1*x2 + x3*x4 + x5^2", 5);
        let tau = 0.3f64;
        let v = cube_integral(&s, &[tau]).unwrap();
        assert_eq!(v.quadrature.rule, "qmc-lattice");
        let m = 40_000usize;
        let h = 1.0 / m as f64;
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let inner = |x: f64| {
            if x.abs() < 1e-12 {
                Complex64::new(1.0, 0.0)
            } else {
                (e(x) - 1.0) / Complex64::new(0.0, 2.0 * std::f64::consts::PI * x)
            }
        };
        for i in 0..m {
            let x = (i as f64 + 0.5) * h;
            a += inner(tau * x);
            b += e(tau * x * x);
        }
        let oracle = (a * h) * (a * h) * (b * h);
        assert!((v.value - oracle).norm() < 2e-4, "{}", (v.value - oracle).norm());
    }

    #[test]
    fn rejects_non_homogeneous() {
        let s = sys("x1^2 + x2", 2);
        assert!(matches!(cube_integral(&s, &[1.0]), Err(Error::Degree(_))));
    }

    #[test]
    fn ternary_density_values() {
        // density of the sum of three uniforms: t^2/2 on [0,1], peak
        // value 3/4 at t = 3/2
        let j = singular_integral(&ternary(), &[0.5], 64.0).unwrap();
        assert!((j.value - 0.125).abs() < 5e-3, "{}", j.value);
        assert!(j.imag_residual < 1e-6 + 100.0 * j.quad_error);
        let j = singular_integral(&ternary(), &[1.5], 64.0).unwrap();
        assert!((j.value - 0.75).abs() < 5e-3, "{}", j.value);
        let j = singular_integral(&ternary(), &[5.0], 64.0).unwrap();
        assert!(j.value.abs() < 0.02, "{}", j.value);
    }

    #[test]
    fn doubling_difference_within_tail_bound() {
        let mu = [0.7f64];
        let mut prev: Option<SingularIntegralEstimate> = None;
        for phi in [8.0f64, 16.0, 32.0, 64.0] {
            let j = singular_integral(&ternary(), &mu, phi).unwrap();
            if let Some(p) = &prev {
                let diff = (j.value - p.value).abs();
                assert!(
                    diff <= p.tail_bound + p.quad_error + j.quad_error + 1e-9,
                    "phi={phi} diff={diff} bound={}",
                    p.tail_bound
                );
            }
            prev = Some(j);
        }
    }

    #[test]
    fn mu_infinity_lattice_oracle_linear() {
        let n = 400u64;
        let s = 600f64; // t = 1.5
        let est = mu_infinity(&ternary(), &[s], n as f64).unwrap();
        // lattice oracle: exact solution count / N^{n-d}
        let mut count = 0u64;
        for x1 in 1..=n {
            for x2 in 1..=n {
                let rest = 600i64 - x1 as i64 - x2 as i64;
                if rest >= 1 && rest <= n as i64 {
                    count += 1;
                }
            }
        }
        let oracle = count as f64 / (n as f64).powi(2);
        assert!(
            (est.value - oracle).abs() <= 0.02 * oracle,
            "{} vs {oracle}",
            est.value
        );
    }

    #[test]
    fn mu_infinity_diagonal_quadratic_oracle() {
        // f = x1^2 + x2^2 + x3^2 at level t = 1.5: finite-difference of
        // the lattice count within a window
        let s = sys("x1^2 + x2^2 + x3^2", 3);
        let n = 160u64;
        let t = 1.5f64;
        let est = mu_infinity(&s, &[t * (n * n) as f64], n as f64).unwrap();
        let w = 0.01 * (n * n) as f64;
        let target = t * (n * n) as f64;
        let mut count = 0u64;
        for x1 in 1..=n {
            for x2 in 1..=n {
                for x3 in 1..=n {
                    let v = (x1 * x1 + x2 * x2 + x3 * x3) as f64;
                    if (v - target).abs() <= w {
                        count += 1;
                    }
                }
            }
        }
        let oracle = count as f64 / (2.0 * w * n as f64);
        assert!(
            (est.value - oracle).abs() <= 0.02 * oracle.max(0.1),
            "{} vs {oracle}",
            est.value
        );
    }

    #[test]
    fn mu_infinity_out_of_range_vanishes() {
        let est = mu_infinity(&ternary(), &[5.0 * 100.0], 100.0).unwrap();
        assert!(est.value.abs() < 5e-3, "{}", est.value);
    }
}
