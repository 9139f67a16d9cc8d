//! Gaussian quadrature with arbitrary-precision nodes, plus an adaptive
//! panel integrator with geometric endpoint grading.
//!
//! Rules are computed once at a guard precision above the request (f64 root
//! scan, then Newton polish in MPFR) and cached by kind, size, and precision.
//! The adaptive integrator estimates each panel's error by order doubling
//! (24- vs 48-point Gauss–Legendre) and refines the worst panel first.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rug::Float;
use thiserror::Error;

use crate::mp::{Cplx, Real};

#[derive(Debug, Error)]
pub enum QuadError {
    #[error(
        "adaptive integration stalled at the panel cap: estimated error {achieved:.3e} \
         exceeds requested {requested:.3e}"
    )]
    AccuracyFailure { achieved: f64, requested: f64 },
    #[error("root scan found {found} sign changes for a degree-{expected} rule")]
    RootCount { expected: usize, found: usize },
}

/// Nodes and weights on [-1, 1], stored in ascending node order.
#[derive(Debug)]
pub struct QuadRule<R> {
    pub nodes: Vec<R>,
    pub weights: Vec<R>,
}

impl<R: Real> QuadRule<R> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Apply the rule to f over [-1, 1].
    pub fn integrate(&self, mut f: impl FnMut(&R) -> Cplx<R>) -> Cplx<R> {
        let prec = self.nodes[0].prec();
        let mut acc = Cplx::zero(prec);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc.add_scaled(&f(x), w);
        }
        acc
    }
}

/// Keyed by (n, precision, α bits, β bits); Gauss–Legendre is (α, β) = (0, 0).
pub type RuleKey = (usize, u32, u64, u64);

/// Scalar admitted to the quadrature rule cache; implemented for `f64` and
/// `rug::Float`. Every generic kernel downstream takes this bound.
pub trait Scalar: Real {
    #[doc(hidden)]
    fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<QuadRule<Self>>>>;
}

static CACHE_F64: Lazy<Mutex<HashMap<RuleKey, Arc<QuadRule<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));
static CACHE_MP: Lazy<Mutex<HashMap<RuleKey, Arc<QuadRule<Float>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl Scalar for f64 {
    fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<QuadRule<f64>>>> {
        &CACHE_F64
    }
}

impl Scalar for Float {
    fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<QuadRule<Float>>>> {
        &CACHE_MP
    }
}

/// n-point Gauss–Legendre rule at the given precision.
pub fn gauss_legendre<R: Scalar>(
    n: usize,
    prec: u32,
) -> Result<Arc<QuadRule<R>>, QuadError> {
    gauss_jacobi(n, 0.0, 0.0, prec)
}

/// n-point Gauss–Jacobi rule for the weight (1-x)^α (1+x)^β, α, β > -1.
pub fn gauss_jacobi<R: Scalar>(
    n: usize,
    alpha: f64,
    beta: f64,
    prec: u32,
) -> Result<Arc<QuadRule<R>>, QuadError> {
    assert!(n >= 1, "quadrature rule needs at least one node");
    assert!(alpha > -1.0 && beta > -1.0, "Jacobi weight must be integrable");
    let key: RuleKey = (n, prec, alpha.to_bits(), beta.to_bits());
    if let Some(rule) = R::cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let rule = Arc::new(compute_rule::<R>(n, alpha, beta, prec)?);
    R::cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert(rule.clone());
    Ok(rule)
}

/// Jacobi polynomial value pair (P_n, P_{n-1}) by the three-term recurrence.
fn jacobi_pair<R: Real>(n: usize, alpha: &R, beta: &R, x: &R) -> (R, R) {
    let prec = x.prec();
    let one = R::one(prec);
    let two = R::from_f64(2.0, prec);
    let half = R::from_f64(0.5, prec);
    let mut pnm1 = one.clone();
    if n == 0 {
        return (pnm1, R::zero(prec));
    }
    // P_1 = (α+1) + (α+β+2)(x-1)/2
    let mut pn = alpha.clone()
        + &one
        + (alpha.clone() + beta + &two) * (x.clone() - &one) * &half;
    for m in 1..n {
        let mf = R::from_u64(m as u64, prec);
        let s = mf.clone() * &two + alpha + beta; // 2m+α+β
        let c0 = (mf.clone() + &one) * (mf.clone() + alpha + beta + &one) * &s * &two;
        let c1 = (s.clone() + &one)
            * ((s.clone() + &two) * &s * x + (alpha.clone() * alpha - beta.clone() * beta));
        let c2 = (mf.clone() + alpha) * (mf.clone() + beta) * (s.clone() + &two) * &two;
        let pnext = (c1 * &pn - c2 * &pnm1) / &c0;
        pnm1 = pn;
        pn = pnext;
    }
    (pn, pnm1)
}

/// P'_n from (P_n, P_{n-1}) at an interior point:
/// (2n+α+β)(1-x²) P'_n = n[(α-β) - (2n+α+β)x] P_n + 2(n+α)(n+β) P_{n-1}.
fn jacobi_deriv<R: Real>(n: usize, alpha: &R, beta: &R, x: &R, pn: &R, pnm1: &R) -> R {
    let prec = x.prec();
    let one = R::one(prec);
    let two = R::from_f64(2.0, prec);
    let nf = R::from_u64(n as u64, prec);
    let s = nf.clone() * &two + alpha + beta;
    let num = nf.clone() * (alpha.clone() - beta - s.clone() * x) * pn
        + (nf.clone() + alpha) * (nf + beta) * pnm1 * &two;
    let den = s * (one - x.clone() * x);
    num / &den
}

/// Bracket the n interior roots of P_n from sign changes on a Chebyshev grid,
/// then sharpen each with bisection and a short Newton run, all in f64.
fn f64_roots(n: usize, alpha: f64, beta: f64) -> Result<Vec<(f64, f64, f64)>, QuadError> {
    let eval = |x: f64| jacobi_pair(n, &alpha, &beta, &x).0;
    let mut m = (8 * n).max(64);
    for _ in 0..4 {
        // Chebyshev-spaced samples, ascending in x.
        let xs: Vec<f64> = (0..=m)
            .map(|k| -(std::f64::consts::PI * k as f64 / m as f64).cos())
            .collect();
        let vals: Vec<f64> = xs.iter().map(|&x| eval(x)).collect();
        let mut brackets = Vec::with_capacity(n);
        for k in 0..m {
            if vals[k] == 0.0 {
                brackets.push((xs[k], xs[k]));
            } else if vals[k] * vals[k + 1] < 0.0 {
                brackets.push((xs[k], xs[k + 1]));
            }
        }
        if brackets.len() != n {
            m *= 2;
            continue;
        }
        let mut out = Vec::with_capacity(n);
        for (mut lo, mut hi) in brackets {
            let (mut flo, _) = (eval(lo), ());
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                let fmid = eval(mid);
                if fmid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fmid < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fmid;
                }
            }
            let mut x = 0.5 * (lo + hi);
            for _ in 0..20 {
                let (pn, pnm1) = jacobi_pair(n, &alpha, &beta, &x);
                let d = jacobi_deriv(n, &alpha, &beta, &x, &pn, &pnm1);
                let step = pn / d;
                x -= step;
                if step.abs() <= 4e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            out.push((x, lo, hi));
        }
        return Ok(out);
    }
    // Final scan size determines the reported count.
    let xs: Vec<f64> = (0..=m)
        .map(|k| -(std::f64::consts::PI * k as f64 / m as f64).cos())
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| eval(x)).collect();
    let found = (0..m).filter(|&k| vals[k] * vals[k + 1] < 0.0).count();
    Err(QuadError::RootCount { expected: n, found })
}

/// Full rule construction: f64 seeds, MPFR Newton polish, closed-form weight
/// normalization, and a single rounding to the target scalar.
fn compute_rule<R: Real>(
    n: usize,
    alpha: f64,
    beta: f64,
    prec: u32,
) -> Result<QuadRule<R>, QuadError> {
    let wprec = prec.max(64) + 32;
    let a = Float::with_val(wprec, alpha);
    let b = Float::with_val(wprec, beta);
    let one = Float::with_val(wprec, 1);
    let two = Float::with_val(wprec, 2);
    let stop = Float::exp2i(-(wprec as i64) + 4, wprec);

    let seeds = f64_roots(n, alpha, beta)?;

    // Σ w_i over each root: w_i = Λ / ((1-x²) P'_n(x)²) with
    // Λ = μ₀ (α+β+1) Π_{j=1..n} (j+α)(j+β) / ((j+α+β) j),
    // μ₀ = 2^{α+β+1} Γ(α+1) Γ(β+1) / Γ(α+β+2).
    let mut lam = Float::with_val(wprec, &a + &b) + &one;
    lam *= (Float::with_val(wprec, &a + 1).gamma() * Float::with_val(wprec, &b + 1).gamma()
        / (a.clone() + &b + &two).gamma())
        * Pow::pow(two.clone(), a.clone() + &b + &one);
    for j in 1..=n {
        let jf = Float::with_val(wprec, j as u64);
        lam *= Float::with_val(wprec, &jf + &a) * Float::with_val(wprec, &jf + &b)
            / (Float::with_val(wprec, &jf + &a) + &b)
            / jf;
    }

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (seed, _, _) in seeds {
        let mut x = Float::with_val(wprec, seed);
        let mut converged = false;
        for _ in 0..64 {
            let (pn, pnm1) = jacobi_pair(n, &a, &b, &x);
            let d = jacobi_deriv(n, &a, &b, &x, &pn, &pnm1);
            let step = pn / d;
            x -= &step;
            if step.abs() <= Float::with_val(wprec, x.clone().abs().max(&one)) * &stop {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(QuadError::RootCount {
                expected: n,
                found: 0,
            });
        }
        let (pn, pnm1) = jacobi_pair(n, &a, &b, &x);
        let d = jacobi_deriv(n, &a, &b, &x, &pn, &pnm1);
        let w = Float::with_val(wprec, &lam)
            / ((Float::with_val(wprec, 1) - Float::with_val(wprec, &x * &x)) * &d * &d);
        nodes.push(R::from_mp(&x, prec));
        weights.push(R::from_mp(&w, prec));
    }
    Ok(QuadRule { nodes, weights })
}

use rug::ops::Pow;

/// One open panel of the adaptive integrator.
struct Panel<R: Real> {
    lo: R,
    hi: R,
    value: Cplx<R>,
    err: R,
}

pub(crate) struct HeapItem {
    pub(crate) key: f64,
    pub(crate) idx: usize,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

const PANEL_CAP: usize = 1 << 16;

/// Evaluate one panel with the 24/48-point pair; the difference of the two
/// estimates is the panel error.
fn eval_panel<R: Scalar>(
    f: &dyn Fn(&R) -> Cplx<R>,
    lo: R,
    hi: R,
    g24: &QuadRule<R>,
    g48: &QuadRule<R>,
    prec: u32,
) -> Panel<R> {
    let half = R::from_f64(0.5, prec);
    let c = (lo.clone() + &hi) * &half;
    let h = (hi.clone() - &lo) * &half;
    let apply = |rule: &QuadRule<R>| {
        let mut acc = Cplx::zero(prec);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = c.clone() + h.clone() * x;
            acc.add_scaled(&f(&t), w);
        }
        acc.scale(&h)
    };
    let i24 = apply(g24);
    let i48 = apply(g48);
    let err = i48.sub(&i24).abs();
    Panel {
        lo,
        hi,
        value: i48,
        err,
    }
}

/// Split [lo, hi] into geometrically graded panels (ratio 1/2) toward the
/// flagged endpoints; ungraded spans stay whole.
pub(crate) fn initial_breakpoints<R: Real>(
    lo: &R,
    hi: &R,
    grade_lo: bool,
    grade_hi: bool,
    levels: u32,
    prec: u32,
) -> Vec<R> {
    let mut pts = vec![lo.clone()];
    let width = hi.clone() - lo;
    match (grade_lo, grade_hi) {
        (false, false) => {}
        (true, false) => {
            for k in (1..=levels).rev() {
                pts.push(lo.clone() + width.clone() * R::exp2i(-(k as i64), prec));
            }
        }
        (false, true) => {
            for k in 1..=levels {
                pts.push(hi.clone() - width.clone() * R::exp2i(-(k as i64), prec));
            }
        }
        (true, true) => {
            for k in (1..=levels).rev() {
                pts.push(lo.clone() + width.clone() * R::exp2i(-(k as i64 + 1), prec));
            }
            for k in 1..=levels {
                pts.push(hi.clone() - width.clone() * R::exp2i(-(k as i64 + 1), prec));
            }
        }
    }
    pts.push(hi.clone());
    pts
}

/// Integrate f over [lo, hi] to absolute tolerance `tol`, refining the worst
/// panel until the summed error estimate drops below it. Returns the value
/// and the final error estimate.
pub fn adaptive_integrate<R: Scalar>(
    f: &dyn Fn(&R) -> Cplx<R>,
    lo: f64,
    hi: f64,
    grade_lo: bool,
    grade_hi: bool,
    tol: &R,
    prec: u32,
) -> Result<(Cplx<R>, R), QuadError> {
    let g24 = gauss_legendre::<R>(24, prec)?;
    let g48 = gauss_legendre::<R>(48, prec)?;
    let lo_r = R::from_f64(lo, prec);
    let hi_r = R::from_f64(hi, prec);

    let levels = grading_levels(tol);
    let pts = initial_breakpoints(&lo_r, &hi_r, grade_lo, grade_hi, levels, prec);
    let mut panels: Vec<Panel<R>> = Vec::new();
    for w in pts.windows(2) {
        panels.push(eval_panel(f, w[0].clone(), w[1].clone(), &g24, &g48, prec));
    }

    let mut heap = BinaryHeap::new();
    let mut total_err = R::zero(prec);
    for (i, p) in panels.iter().enumerate() {
        heap.push(HeapItem {
            key: p.err.log2_magnitude(),
            idx: i,
        });
        total_err += &p.err;
    }

    let half = R::from_f64(0.5, prec);
    let mut splits: usize = 0;
    while total_err > *tol {
        if panels.len() >= PANEL_CAP {
            return Err(QuadError::AccuracyFailure {
                achieved: total_err.to_f64(),
                requested: tol.to_f64(),
            });
        }
        let worst = heap.pop().expect("nonempty panel heap");
        let Panel { lo, hi, err, .. } = {
            let p = &panels[worst.idx];
            Panel {
                lo: p.lo.clone(),
                hi: p.hi.clone(),
                value: Cplx::zero(prec),
                err: p.err.clone(),
            }
        };
        let mid = (lo.clone() + &hi) * &half;
        let left = eval_panel(f, lo, mid.clone(), &g24, &g48, prec);
        let right = eval_panel(f, mid, hi, &g24, &g48, prec);
        total_err -= &err;
        total_err += &left.err;
        total_err += &right.err;
        heap.push(HeapItem {
            key: left.err.log2_magnitude(),
            idx: worst.idx,
        });
        heap.push(HeapItem {
            key: right.err.log2_magnitude(),
            idx: panels.len(),
        });
        panels[worst.idx] = left;
        panels.push(right);

        // Periodically rebuild the error sum to shed accumulated rounding.
        splits += 1;
        if splits.is_multiple_of(256) {
            total_err = R::zero(prec);
            for p in &panels {
                total_err += &p.err;
            }
        }
    }

    let mut value = Cplx::zero(prec);
    let mut err = R::zero(prec);
    for p in &panels {
        value.add_assign(&p.value);
        err += &p.err;
    }
    Ok((value, err))
}

/// Number of geometric grading levels needed for the requested tolerance.
pub(crate) fn grading_levels<R: Real>(tol: &R) -> u32 {
    let lg = tol.log2_magnitude();
    let scaled = if lg.is_finite() {
        (-lg * 2.0 / 3.0).ceil() as i64 + 10
    } else {
        0
    };
    (scaled.max(40)) as u32
}
