//! Approximants built from truncated frame systems: exact and ε-regularized
//! projections, oversampled least squares, canonical-dual expansions via the
//! frame algorithm, the σ-orthogonal ξ functions, and L² error measurement.

use thiserror::Error;

use crate::frames::{
    evaluate, index_set, ortho_coeff, FrameError, FrameIndex, FrameSpec, TargetFunction,
};
use crate::gram::{
    assemble_rect, assemble_square, bind_target, forecast_log2_kappa, target_inner_products,
    GramSystem, RowEvaluator,
};
use crate::mp::{cvec_zero, inner, norm2, Cplx, Real};
use crate::quadrature::{adaptive_integrate, gauss_legendre, initial_breakpoints, Scalar};
use crate::regsolve::{
    hermitian_eig, rect_svd, solve_exact, solve_regularized, SolveError,
    SpectralFactorization,
};

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(
        "frame algorithm stalled after {iterations} iterations; \
         last update norm {residual:.3e}"
    )]
    FrameAlgorithmStalled { iterations: usize, residual: f64 },
}

/// How an approximant's coefficients were produced.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    /// Direct synthesis of supplied coefficients.
    Synthesis,
    /// Exact projection: solve of the square Gram system.
    Exact,
    /// ε-truncated solve of the square system.
    Tsvd { eps: f64 },
    /// ε-truncated least squares on the M×N system.
    Oversampled { eps: f64, m: usize },
    /// Canonical-dual expansion coefficients.
    Dual,
}

/// A member of the truncated span: Σ_n z_n φ_n.
#[derive(Clone, Debug)]
pub struct FrameApproximant<R> {
    pub spec: FrameSpec,
    pub indices: Vec<FrameIndex>,
    pub coeffs: Vec<Cplx<R>>,
    pub method: Method,
    pub prec: u32,
    /// Singular values kept by the regularized methods; None otherwise.
    pub rank_kept: Option<usize>,
}

impl<R: Real> FrameApproximant<R> {
    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    /// ℓ² norm of the coefficient vector.
    pub fn coeff_norm(&self) -> R {
        norm2(&self.coeffs)
    }

    /// Pointwise value Σ z_n φ_n(t).
    pub fn eval(&self, t: &R) -> Result<Cplx<R>, FrameError> {
        let mut acc = Cplx::zero(self.prec);
        for (z, idx) in self.coeffs.iter().zip(&self.indices) {
            let phi = evaluate(&self.spec, *idx, t, self.prec)?;
            acc.add_mul(z, &phi);
        }
        Ok(acc)
    }

    /// Same coefficients carried to another scalar type through double.
    /// Exact when the source is double precision (the intended direction:
    /// re-measuring a double-precision approximant under multiprecision
    /// quadrature).
    pub fn lift<R2: Real>(&self, prec: u32) -> FrameApproximant<R2> {
        FrameApproximant {
            spec: self.spec.clone(),
            indices: self.indices.clone(),
            coeffs: self.coeffs.iter().map(|c| c.convert(prec)).collect(),
            method: self.method.clone(),
            prec,
            rank_kept: self.rank_kept,
        }
    }
}

/// Quadrature tolerance used for right-hand sides when only a working
/// precision is given: a fixed margin above the rounding floor of the
/// batched integrator, but never deeper than the solve itself can exploit.
/// An rhs error δy reaches the coefficients as at most δy/A_N, so pushing
/// the quadrature past 2^{-74-log₂κ} buys nothing and makes the adaptive
/// splitter chase precision the solve will round away.
pub fn default_rhs_tol<R: Real>(spec: &FrameSpec, n: usize, prec: u32) -> R {
    let back: i64 = if R::NATIVE { 6 } else { 16 };
    let floor = -(prec as i64) + back;
    let relaxed = -(74 + forecast_log2_kappa(spec, n).ceil() as i64);
    R::exp2i(floor.max(relaxed), prec)
}

/// T_N z as an approximant.
pub fn synthesize<R: Real>(
    spec: &FrameSpec,
    n: usize,
    z: &[Cplx<R>],
    prec: u32,
) -> Result<FrameApproximant<R>, ApproxError> {
    let indices = index_set(spec, n).map_err(ApproxError::Frame)?;
    if z.len() != n {
        return Err(ApproxError::LengthMismatch {
            expected: n,
            got: z.len(),
        });
    }
    Ok(FrameApproximant {
        spec: spec.clone(),
        indices,
        coeffs: z.to_vec(),
        method: Method::Synthesis,
        prec,
        rank_kept: None,
    })
}

fn bound_square_system<R: Scalar>(
    spec: &FrameSpec,
    n: usize,
    f: &TargetFunction,
    prec: u32,
) -> Result<GramSystem<R>, ApproxError> {
    let sys = assemble_square::<R>(spec, n, prec)?;
    Ok(bind_target(sys, f, &default_rhs_tol::<R>(spec, n, prec))?)
}

/// Best approximation from the truncated span: coefficients of the square
/// solve, guarded by the precision rule.
pub fn project_exact<R: Scalar>(
    spec: &FrameSpec,
    n: usize,
    f: &TargetFunction,
    prec: u32,
) -> Result<FrameApproximant<R>, ApproxError> {
    let sys = bound_square_system(spec, n, f, prec)?;
    let coeffs = solve_exact(&sys)?;
    Ok(FrameApproximant {
        spec: spec.clone(),
        indices: sys.cols,
        coeffs,
        method: Method::Exact,
        prec,
        rank_kept: None,
    })
}

/// ε-truncated projection from the square system.
pub fn project_tsvd<R: Scalar>(
    spec: &FrameSpec,
    n: usize,
    f: &TargetFunction,
    eps: f64,
    prec: u32,
) -> Result<FrameApproximant<R>, ApproxError> {
    let sys = bound_square_system(spec, n, f, prec)?;
    let fact = hermitian_eig(&sys.matrix, prec)?;
    let y = sys.rhs.as_ref().expect("target just bound");
    let sol = solve_regularized(&fact, y, eps);
    Ok(FrameApproximant {
        spec: spec.clone(),
        indices: sys.cols,
        coeffs: sol.coeffs,
        method: Method::Tsvd { eps },
        prec,
        rank_kept: Some(sol.rank_kept),
    })
}

/// ε-truncated least squares on the oversampled M×N system.
pub fn project_oversampled<R: Scalar>(
    spec: &FrameSpec,
    m: usize,
    n: usize,
    f: &TargetFunction,
    eps: f64,
    prec: u32,
) -> Result<FrameApproximant<R>, ApproxError> {
    let sys = assemble_rect::<R>(spec, m, n, prec)?;
    let sys = bind_target(sys, f, &default_rhs_tol::<R>(spec, n, prec))?;
    let fact = rect_svd(&sys.matrix, prec)?;
    let y = sys.rhs.as_ref().expect("target just bound");
    let sol = solve_regularized(&fact, y, eps);
    Ok(FrameApproximant {
        spec: spec.clone(),
        indices: sys.cols,
        coeffs: sol.coeffs,
        method: Method::Oversampled { eps, m },
        prec,
        rank_kept: Some(sol.rank_kept),
    })
}

/// Quadrature grid and reference truncation of the frame algorithm.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    /// Composite 16-point Gauss panels across the domain.
    pub panels: usize,
    /// Reference truncation M approximating the frame operator.
    pub m_ref: usize,
}

/// Grid representation of S^{−1}f produced by the frame algorithm.
pub struct FrameInverse<R> {
    pub spec: FrameSpec,
    pub grid: GridSpec,
    nodes: Vec<R>,
    weights: Vec<R>,
    values: Vec<Cplx<R>>,
    /// Applied Richardson updates until convergence.
    pub iterations: usize,
    /// Norm of every computed update, including the final discarded one.
    pub update_norms: Vec<f64>,
    /// True when iteration stopped because updates stagnated at the bias
    /// floor set by the reference truncation, rather than reaching `tol`.
    pub hit_floor: bool,
}

impl<R: Real> FrameInverse<R> {
    /// ⟨S^{−1}f, φ_i⟩ by the grid rule, for each listed index.
    pub fn analysis(&self, indices: &[FrameIndex]) -> Vec<Cplx<R>> {
        let prec = self.nodes.first().map_or(53, |x| x.prec());
        let rower = RowEvaluator::new(&self.spec, indices, prec);
        let mut acc = cvec_zero::<R>(indices.len(), prec);
        let mut scratch: Vec<Cplx<R>> = Vec::with_capacity(indices.len());
        for ((t, w), u) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let uw = u.scale(w);
            rower.conj_values(t, &mut scratch);
            for (a, phi) in acc.iter_mut().zip(&scratch) {
                a.add_mul(&uw, phi);
            }
        }
        acc
    }

    /// Worst per-iteration contraction during the bulk phase: consecutive
    /// update-norm ratios, counted only while both norms sit above twice
    /// the final (floor) level. Components outside the well-conditioned
    /// part of the reference span are never damped, so ratios degrade
    /// toward 1 once the floor is reached; those are excluded. Falls back
    /// to the first ratio when the floor is hit immediately.
    pub fn measured_contraction(&self) -> Option<f64> {
        let n = self.update_norms.len();
        if n < 2 {
            return None;
        }
        let cutoff = 2.0 * self.update_norms[n - 1];
        let mut worst: Option<f64> = None;
        for w in self.update_norms.windows(2) {
            if w[0] >= cutoff && w[1] >= cutoff {
                let r = w[1] / w[0];
                worst = Some(worst.map_or(r, |x: f64| x.max(r)));
            }
        }
        worst.or(Some(self.update_norms[1] / self.update_norms[0]))
    }

    /// Grid-rule L² distance to a pointwise function (diagnostics).
    pub fn grid_distance(&self, f: impl Fn(&R) -> Cplx<R>) -> R {
        let prec = self.nodes.first().map_or(53, |x| x.prec());
        let mut acc = R::zero(prec);
        for ((t, w), u) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            acc += u.sub(&f(t)).norm_sqr() * w;
        }
        acc.sqrt()
    }
}

/// Composite Gauss grid over the domain; a geometric stack replaces the
/// first panel when the family carries an endpoint singularity.
fn composite_grid<R: Scalar>(
    spec: &FrameSpec,
    panels: usize,
    prec: u32,
) -> Result<(Vec<R>, Vec<R>), ApproxError> {
    let (lo, hi) = spec.domain().ok_or(FrameError::AbstractFamily {
        family: spec.family_name(),
    })?;
    let rule = gauss_legendre::<R>(16, prec).map_err(FrameError::from)?;
    let width = (hi - lo) / panels as f64;
    let mut breaks: Vec<R> = Vec::new();
    if spec.singular_lo() {
        let lo_r = R::from_f64(lo, prec);
        let first_hi = R::from_f64(lo + width, prec);
        breaks.extend(initial_breakpoints(&lo_r, &first_hi, true, false, 40, prec));
    } else {
        breaks.push(R::from_f64(lo, prec));
        breaks.push(R::from_f64(lo + width, prec));
    }
    for k in 2..=panels {
        breaks.push(R::from_f64(lo + width * k as f64, prec));
    }
    let half = R::from_f64(0.5, prec);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let c = (w[0].clone() + &w[1]) * &half;
        let h = (w[1].clone() - &w[0]) * &half;
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(c.clone() + h.clone() * x);
            weights.push(h.clone() * wt);
        }
    }
    Ok((nodes, weights))
}

const FRAME_ALGO_CAP: usize = 600;

/// Richardson iteration u ← u + ω(f − S_M u) toward S^{−1}f, with S_M the
/// frame operator truncated at the reference size. The relaxation defaults
/// to 2/(A+B) from the family's frame bounds, giving contraction factor
/// (B−A)/(B+A) on the well-resolved components. Stops when an update's grid
/// norm is at or below `tol`, or when updates stagnate at the bias floor of
/// the reference truncation (components outside its span are never damped);
/// the final update is discarded either way.
pub fn frame_algorithm_inverse<R: Scalar>(
    spec: &FrameSpec,
    f: &TargetFunction,
    relax: Option<f64>,
    tol: f64,
    grid: GridSpec,
    prec: u32,
) -> Result<FrameInverse<R>, ApproxError> {
    let (a_bound, b_bound) = spec.relaxation_bounds();
    let omega = R::from_f64(relax.unwrap_or(2.0 / (a_bound + b_bound)), prec);
    let (nodes, weights) = composite_grid::<R>(spec, grid.panels, prec)?;

    // Smallest admissible truncation at or above the requested reference.
    let indices = (grid.m_ref..grid.m_ref + 4)
        .find_map(|m| index_set(spec, m).ok())
        .ok_or(FrameError::InadmissibleSize {
            family: spec.family_name(),
            rule: "an admissible reference truncation within 4 of the request",
            n: grid.m_ref,
        })?;
    let rower = RowEvaluator::new(spec, &indices, prec);
    // Frozen conj(φ_m) per node: the grid is fixed, so this trades memory
    // for the dominant per-iteration cost (double precision only; the
    // multiprecision footprint would be prohibitive).
    let cache: Option<Vec<Vec<Cplx<R>>>> = if R::NATIVE {
        let mut all = Vec::with_capacity(nodes.len());
        let mut scratch = Vec::new();
        for t in &nodes {
            rower.conj_values(t, &mut scratch);
            all.push(scratch.clone());
        }
        Some(all)
    } else {
        None
    };

    let fvals: Result<Vec<Cplx<R>>, FrameError> =
        nodes.iter().map(|t| f.eval(t, prec)).collect();
    let fvals = fvals?;

    let mut u = cvec_zero::<R>(nodes.len(), prec);
    let mut update_norms: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let mut stagnant = 0usize;
    let mut scratch: Vec<Cplx<R>> = Vec::new();
    for _ in 0..FRAME_ALGO_CAP {
        // c_m = ⟨u, φ_m⟩ by the grid rule.
        let mut c = cvec_zero::<R>(indices.len(), prec);
        for (i, (t, w)) in nodes.iter().zip(&weights).enumerate() {
            let conj = match &cache {
                Some(all) => &all[i],
                None => {
                    rower.conj_values(t, &mut scratch);
                    &scratch
                }
            };
            let uw = u[i].scale(w);
            for (a, phi) in c.iter_mut().zip(conj) {
                a.add_mul(&uw, phi);
            }
        }
        // update = ω(f − S_M u) with (S_M u)(t) = Σ_m c_m φ_m(t).
        let mut update = Vec::with_capacity(nodes.len());
        let mut norm_sq = R::zero(prec);
        for (i, (t, w)) in nodes.iter().zip(&weights).enumerate() {
            let conj = match &cache {
                Some(all) => &all[i],
                None => {
                    rower.conj_values(t, &mut scratch);
                    &scratch
                }
            };
            let mut s = Cplx::zero(prec);
            for (cm, phi) in c.iter().zip(conj) {
                s.add_mul_conj(phi, cm);
            }
            let su = s.conj();
            let upd = fvals[i].sub(&su).scale(&omega);
            norm_sq += upd.norm_sqr() * w;
            update.push(upd);
        }
        let norm = norm_sq.sqrt().to_f64();
        let prev = update_norms.last().copied();
        update_norms.push(norm);
        // Once updates stop shrinking they are dominated by the component
        // of f outside the reference span, which the iteration re-adds
        // verbatim every step; further passes add bias, not accuracy.
        stagnant = match prev {
            Some(p) if norm > 0.9 * p => stagnant + 1,
            _ => 0,
        };
        let floored = iterations >= 4 && stagnant >= 3;
        if norm <= tol || floored {
            return Ok(FrameInverse {
                spec: spec.clone(),
                grid,
                nodes,
                weights,
                values: u,
                iterations,
                update_norms,
                hit_floor: floored,
            });
        }
        for (ui, upd) in u.iter_mut().zip(&update) {
            ui.add_assign(upd);
        }
        iterations += 1;
    }
    Err(ApproxError::FrameAlgorithmStalled {
        iterations,
        residual: update_norms.last().copied().unwrap_or(f64::NAN),
    })
}

/// Canonical-dual expansion coefficients a_n = ⟨S^{−1}f, φ_n⟩.
///
/// The tight family needs no inversion (S = I); the coefficient-space
/// family has the rank-one closed form S^{−1}f = f − ½⟨f,g⟩g; the other
/// families run the frame algorithm against a reference truncation of 8N.
pub fn dual_coefficients<R: Scalar>(
    spec: &FrameSpec,
    n: usize,
    f: &TargetFunction,
    tol: f64,
    prec: u32,
) -> Result<FrameApproximant<R>, ApproxError> {
    let indices = index_set(spec, n)?;
    let coeffs = match spec {
        FrameSpec::FourierExt { .. } => {
            let rtol = R::from_f64(tol, prec);
            target_inner_products::<R>(spec, &indices, f, &rtol, prec)?
        }
        FrameSpec::AugOrtho => {
            // y = (⟨f,g⟩, b_1, …): a_0 = ⟨f,g⟩/2, a_k = b_k − a_0 c_k.
            let rtol = R::from_f64(tol, prec);
            let y = target_inner_products::<R>(spec, &indices, f, &rtol, prec)?;
            let half = R::from_f64(0.5, prec);
            let a0 = y[0].scale(&half);
            let mut out = Vec::with_capacity(n);
            out.push(a0.clone());
            for (k, yk) in y.iter().enumerate().skip(1) {
                let c = ortho_coeff::<R>(k as u32, prec);
                out.push(yk.sub(&a0.scale(&c)));
            }
            out
        }
        _ => {
            let grid = GridSpec {
                panels: 256,
                m_ref: 8 * n,
            };
            let inv = frame_algorithm_inverse::<R>(spec, f, None, tol, grid, prec)?;
            inv.analysis(&indices)
        }
    };
    Ok(FrameApproximant {
        spec: spec.clone(),
        indices,
        coeffs,
        method: Method::Dual,
        prec,
        rank_kept: None,
    })
}

/// The σ-orthogonal functions ξ_n = Σ_m (v_n)_m φ_m built from a square
/// factorization: ⟨ξ_n, ξ_m⟩ = σ_n δ_{nm}, so ‖ξ_n‖ = √σ_n.
pub struct XiBasis<R> {
    pub spec: FrameSpec,
    pub indices: Vec<FrameIndex>,
    pub fact: SpectralFactorization<R>,
}

pub fn xi_basis<R: Real>(
    spec: &FrameSpec,
    n: usize,
    fact: SpectralFactorization<R>,
) -> Result<XiBasis<R>, ApproxError> {
    if fact.rows != n || fact.cols != n {
        return Err(ApproxError::LengthMismatch {
            expected: n,
            got: fact.cols,
        });
    }
    Ok(XiBasis {
        spec: spec.clone(),
        indices: index_set(spec, n)?,
        fact,
    })
}

impl<R: Scalar> XiBasis<R> {
    pub fn len(&self) -> usize {
        self.fact.cols
    }

    pub fn is_empty(&self) -> bool {
        self.fact.cols == 0
    }

    /// ξ_k(t).
    pub fn eval(&self, k: usize, t: &R) -> Result<Cplx<R>, FrameError> {
        let prec = self.fact.prec;
        let mut acc = Cplx::zero(prec);
        for (m, idx) in self.indices.iter().enumerate() {
            let phi = evaluate(&self.spec, *idx, t, prec)?;
            acc.add_mul(self.fact.vectors.at(m, k), &phi);
        }
        Ok(acc)
    }

    /// ⟨ξ_k, ξ_l⟩ by adaptive quadrature — the independent check of the
    /// σ-orthogonality invariant.
    pub fn gram_entry_by_quadrature(
        &self,
        k: usize,
        l: usize,
        tol: &R,
    ) -> Result<Cplx<R>, FrameError> {
        let (lo, hi) = self.spec.domain().ok_or(FrameError::AbstractFamily {
            family: self.spec.family_name(),
        })?;
        let prec = self.fact.prec;
        let g = |t: &R| -> Cplx<R> {
            let a = self.eval(k, t).expect("domain point");
            let b = self.eval(l, t).expect("domain point");
            a.mul_conj(&b)
        };
        let (val, _) =
            adaptive_integrate(&g, lo, hi, self.spec.singular_lo(), false, tol, prec)?;
        Ok(val)
    }
}

/// ‖f − T_N z‖ from a bound square system and ‖f‖²:
/// ‖f‖² − 2 Re Σ z_m ȳ_m + z*G z, clamped at zero before the root.
pub fn error_l2_via_system<R: Real>(
    sys: &GramSystem<R>,
    norm_sq_f: &R,
    z: &[Cplx<R>],
) -> R {
    let y = sys.rhs.as_ref().expect("system must have a bound target");
    assert!(sys.matrix.is_square(), "identity needs the square system");
    let prec = sys.prec;
    let gz = sys.matrix.mul_vec(z);
    let quad = inner(&gz, z).re;
    let cross = inner(z, y).re;
    let mut err_sq = norm_sq_f.clone() - (cross.clone() + &cross) + &quad;
    if err_sq < R::zero(prec) {
        err_sq = R::zero(prec);
    }
    err_sq.sqrt()
}

/// Tail sums Σ_{n≥N} n^{−s} at working precision: ζ(s) minus the partial sum.
fn zeta_tail<R: Real>(s: u64, n: usize, prec: u32) -> R {
    let mut partial = R::zero(prec);
    for k in (1..n as u64).rev() {
        partial += R::from_u64(k, prec).powi(-(s as i32));
    }
    let mut tail = R::from_u64(s, prec).zeta() - &partial;
    if tail < R::zero(prec) {
        tail = R::zero(prec);
    }
    tail
}

/// Coefficient-space error for the abstract family: the approximant is
/// z_0 g + Σ_{k<N} z_k e_k against a target with known coefficients t_n.
fn coefficient_error_sq<R: Real>(
    f: &TargetFunction,
    coeffs: &[Cplx<R>],
    prec: u32,
) -> Result<R, ApproxError> {
    let n = coeffs.len();
    let z0 = &coeffs[0];
    // Finite part: n = 1..N−1.
    let target_at = |k: u32| -> Result<R, ApproxError> {
        Ok(match f {
            TargetFunction::SyntheticP51 => TargetFunction::synthetic_coeff::<R>(k, prec),
            TargetFunction::Zero => R::zero(prec),
            TargetFunction::Element {
                idx: FrameIndex::Extra,
                ..
            } => ortho_coeff::<R>(k, prec),
            TargetFunction::Element {
                idx: FrameIndex::Ortho(j),
                ..
            } => {
                if *j == k {
                    R::one(prec)
                } else {
                    R::zero(prec)
                }
            }
            other => {
                return Err(ApproxError::Frame(FrameError::AbstractFamily {
                    family: format!("{other:?} has no coefficient law").leak(),
                }))
            }
        })
    };
    let mut err = R::zero(prec);
    for (k, zk) in coeffs.iter().enumerate().skip(1) {
        let t = target_at(k as u32)?;
        let c = ortho_coeff::<R>(k as u32, prec);
        let mut d = Cplx::real(t);
        d.sub_assign(&z0.scale(&c));
        d.sub_assign(zk);
        err += d.norm_sqr();
    }
    // Tail part: Σ_{n≥N} |t_n − z0 c_n|² = T2b − 2 Re z0 · T2bc + |z0|² T2c.
    let scale_c = {
        // c_n = √90/π² n⁻²; c_n² = 90/π⁴ n⁻⁴.
        let pi = R::pi(prec);
        R::from_u64(90, prec) / (pi.clone() * &pi * &pi * &pi)
    };
    let t2c = scale_c.clone() * zeta_tail::<R>(4, n, prec);
    let (t2b, t2bc) = match f {
        TargetFunction::SyntheticP51 => {
            let pi = R::pi(prec);
            // b_n² = 6/π² n⁻²; b_n c_n = √540/π³ n⁻³.
            let sb = R::from_u64(6, prec) / (pi.clone() * &pi);
            let sbc = R::from_u64(540, prec).sqrt() / (pi.clone() * &pi * &pi);
            (
                sb * zeta_tail::<R>(2, n, prec),
                sbc * zeta_tail::<R>(3, n, prec),
            )
        }
        TargetFunction::Zero => (R::zero(prec), R::zero(prec)),
        TargetFunction::Element {
            idx: FrameIndex::Extra,
            ..
        } => (t2c.clone(), t2c.clone()),
        TargetFunction::Element {
            idx: FrameIndex::Ortho(j),
            ..
        } => {
            if (*j as usize) >= n {
                let c = ortho_coeff::<R>(*j, prec);
                (R::one(prec), c)
            } else {
                (R::zero(prec), R::zero(prec))
            }
        }
        _ => unreachable!("filtered by target_at"),
    };
    let two = R::from_f64(2.0, prec);
    err += t2b - two * z0.re.clone() * &t2bc + z0.norm_sqr() * &t2c;
    if err < R::zero(prec) {
        err = R::zero(prec);
    }
    Ok(err)
}

/// L² error ‖f − approximant‖ over the family's domain, to quadrature
/// tolerance `tol` on the squared integral. The coefficient-space family
/// evaluates the error exactly through its series tails.
pub fn error_l2<R: Scalar>(
    f: &TargetFunction,
    a: &FrameApproximant<R>,
    tol: &R,
) -> Result<R, ApproxError> {
    let prec = a.prec;
    if matches!(a.spec, FrameSpec::AugOrtho) {
        return Ok(coefficient_error_sq(f, &a.coeffs, prec)?.sqrt());
    }
    if f.is_abstract() {
        return Err(ApproxError::Frame(FrameError::AbstractTarget { id: f.id() }));
    }
    let (lo, hi) = a.spec.domain().ok_or(FrameError::AbstractFamily {
        family: a.spec.family_name(),
    })?;
    let rower = RowEvaluator::new(&a.spec, &a.indices, prec);
    let integrand = |t: &R| -> Cplx<R> {
        let fv = f.eval(t, prec).expect("concrete target");
        let mut s = Cplx::zero(prec);
        let mut scratch = Vec::with_capacity(a.coeffs.len());
        rower.conj_values(t, &mut scratch);
        for (phi, z) in scratch.iter().zip(&a.coeffs) {
            s.add_mul_conj(phi, z);
        }
        let av = s.conj();
        Cplx::real(fv.sub(&av).norm_sqr())
    };
    let grade_lo = a.spec.singular_lo() || f.singular_lo();
    let pieces: Vec<(f64, f64, bool)> = if matches!(f, TargetFunction::Abs5) {
        vec![(lo, 0.0, grade_lo), (0.0, hi, false)]
    } else {
        vec![(lo, hi, grade_lo)]
    };
    let mut total = R::zero(prec);
    for (plo, phi, glo) in pieces {
        let (val, _) = adaptive_integrate(&integrand, plo, phi, glo, false, tol, prec)
            .map_err(FrameError::from)?;
        total += val.re;
    }
    if total < R::zero(prec) {
        total = R::zero(prec);
    }
    Ok(total.sqrt())
}
