//! Spectral factorization at configurable precision, ε-truncation, and the
//! exact and regularized solves built on it.
//!
//! Real symmetric input goes through Householder tridiagonalization followed
//! by implicit-shift QL — the classic tred2/tqli pair — which costs a small
//! multiple of n³ scalar operations at any precision and so stays usable for
//! the large multiprecision matrices the sweep drivers produce. Complex
//! Hermitian input uses two-sided cyclic Jacobi and rectangular input
//! one-sided Jacobi; their relative rotation-skip rule follows the
//! Demmel–Veselić analysis of Jacobi's accuracy on graded matrices. The
//! precision rule upstream always buys enough headroom that the QL path's
//! absolute accuracy ~2^{-prec}·‖A‖ resolves the smallest eigenvalue.

use thiserror::Error;

use crate::gram::{required_bits, GramSystem};
use crate::mp::{cvec_zero, inner, CMat, Cplx, Real};
use crate::quadrature::Scalar;

const MAX_SWEEPS: usize = 40;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(
        "Jacobi iteration did not converge in {sweeps} sweeps; \
         worst off-diagonal residual {residual:.3e}"
    )]
    ConvergenceFailure { sweeps: usize, residual: f64 },
    #[error("matrix shape {rows}×{cols} is not valid here: {what}")]
    ShapeError {
        rows: usize,
        cols: usize,
        what: &'static str,
    },
    #[error(
        "precision {available} bits cannot resolve this system; \
         the conditioning forecast demands at least {required} bits"
    )]
    PrecisionRefusal { required: u32, available: u32 },
    #[error("right-hand side is not bound; bind a target before solving")]
    MissingRhs,
}

/// Eigen- or singular-value factorization, values sorted descending
/// (ties keep their original order).
#[derive(Clone, Debug)]
pub struct SpectralFactorization<R> {
    /// Eigenvalues of the Hermitian input, or singular values.
    pub values: Vec<R>,
    /// Right (eigen-)vectors as columns.
    pub vectors: CMat<R>,
    /// Left singular vectors in the rectangular case.
    pub left: Option<CMat<R>>,
    pub rows: usize,
    pub cols: usize,
    pub prec: u32,
}

impl<R: Real> SpectralFactorization<R> {
    /// Number of values strictly above ε (values are a descending prefix).
    pub fn rank_above(&self, eps: f64) -> usize {
        let threshold = R::from_f64(eps, self.prec);
        self.values.iter().take_while(|s| **s > threshold).count()
    }

    /// Smallest kept value at threshold ε.
    pub fn min_kept(&self, eps: f64) -> Option<&R> {
        match self.rank_above(eps) {
            0 => None,
            r => Some(&self.values[r - 1]),
        }
    }
}

/// Regularized least-squares coefficients.
#[derive(Clone, Debug)]
pub struct RegularizedSolution<R> {
    pub coeffs: Vec<Cplx<R>>,
    pub eps: f64,
    pub rank_kept: usize,
    pub sigma_min_kept: Option<R>,
    pub sigma_max: R,
}

/// t = tan θ of the annihilating rotation from τ = (γ−α)/(2|β|):
/// the root of t² + 2τt − 1 = 0 smaller in magnitude.
fn rotation_tangent<R: Real>(tau: &R) -> R {
    let prec = tau.prec();
    let one = R::one(prec);
    if tau.is_zero() {
        return one;
    }
    let mag = (one.clone() + tau.clone() * tau).sqrt() + tau.clone().abs();
    let t = mag.recip();
    if *tau < R::zero(prec) {
        -t
    } else {
        t
    }
}

/// |r| carrying the sign of g (the Fortran SIGN intrinsic).
fn sign_of<R: Real>(r: &R, g: &R) -> R {
    let mag = r.clone().abs();
    if *g < R::zero(g.prec()) {
        -mag
    } else {
        mag
    }
}

/// Householder reduction of a real symmetric matrix (given as rows) to
/// tridiagonal form. On return `a` holds the accumulated orthogonal
/// transform, `d` the diagonal and `e` the subdiagonal (e[0] = 0).
/// Written in index form to stay recognizably the textbook algorithm.
#[allow(clippy::needless_range_loop, clippy::assign_op_pattern)]
fn householder_tridiag<R: Real>(a: &mut [Vec<R>], d: &mut [R], e: &mut [R], prec: u32) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = R::zero(prec);
        if l > 0 {
            let mut scale = R::zero(prec);
            for k in 0..=l {
                scale = scale + a[i][k].clone().abs();
            }
            if scale.is_zero() {
                e[i] = a[i][l].clone();
            } else {
                for k in 0..=l {
                    a[i][k] = a[i][k].clone() / &scale;
                    h = h + a[i][k].clone() * &a[i][k];
                }
                let f = a[i][l].clone();
                let g = if f < R::zero(prec) {
                    h.clone().sqrt()
                } else {
                    -h.clone().sqrt()
                };
                e[i] = scale.clone() * &g;
                h = h - f.clone() * &g;
                a[i][l] = f - &g;
                let mut f_acc = R::zero(prec);
                for j in 0..=l {
                    a[j][i] = a[i][j].clone() / &h;
                    let mut g_sum = R::zero(prec);
                    for k in 0..=j {
                        g_sum = g_sum + a[j][k].clone() * &a[i][k];
                    }
                    for k in (j + 1)..=l {
                        g_sum = g_sum + a[k][j].clone() * &a[i][k];
                    }
                    e[j] = g_sum / &h;
                    f_acc = f_acc + e[j].clone() * &a[i][j];
                }
                let hh = f_acc / &(h.clone() + &h);
                for j in 0..=l {
                    let fj = a[i][j].clone();
                    let gj = e[j].clone() - hh.clone() * &fj;
                    e[j] = gj.clone();
                    for k in 0..=j {
                        let delta = fj.clone() * &e[k] + gj.clone() * &a[i][k];
                        a[j][k] = a[j][k].clone() - &delta;
                    }
                }
            }
        } else {
            e[i] = a[i][l].clone();
        }
        d[i] = h;
    }
    d[0] = R::zero(prec);
    e[0] = R::zero(prec);
    for i in 0..n {
        // d[i] still holds the Householder scalar h for stage i; a zero h
        // means the stage was skipped and contributes the identity.
        if !d[i].is_zero() {
            for j in 0..i {
                let mut g = R::zero(prec);
                for k in 0..i {
                    g = g + a[i][k].clone() * &a[k][j];
                }
                for k in 0..i {
                    a[k][j] = a[k][j].clone() - g.clone() * &a[k][i];
                }
            }
        }
        d[i] = a[i][i].clone();
        a[i][i] = R::one(prec);
        for j in 0..i {
            a[j][i] = R::zero(prec);
            a[i][j] = R::zero(prec);
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix, rotations
/// folded into the eigenvector rows `z` (columns of `z` end up as
/// eigenvectors). `d` enters as the diagonal and leaves as the eigenvalues;
/// `e` enters as the subdiagonal in positions 1..n.
fn tridiag_ql<R: Real>(
    d: &mut [R],
    e: &mut [R],
    z: &mut [Vec<R>],
    prec: u32,
) -> Result<(), SolveError> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i].clone();
    }
    e[n - 1] = R::zero(prec);
    let eps = R::exp2i(-(prec as i64) + 3, prec);
    let one = R::one(prec);
    let two = R::from_f64(2.0, prec);
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].clone().abs() + d[m + 1].clone().abs();
                if e[m].clone().abs() <= eps.clone() * &dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(SolveError::ConvergenceFailure {
                    sweeps: iter,
                    residual: e[l].to_f64(),
                });
            }
            // Wilkinson shift from the leading 2×2 block.
            let mut g = (d[l + 1].clone() - &d[l]) / &(two.clone() * &e[l]);
            let r0 = g.clone().hypot(&one);
            g = d[m].clone() - &d[l] + e[l].clone() / &(g.clone() + &sign_of(&r0, &g));
            let mut s = one.clone();
            let mut c = one.clone();
            let mut p = R::zero(prec);
            let mut restart = false;
            for i in (l..m).rev() {
                let f = s.clone() * &e[i];
                let b = c.clone() * &e[i];
                let r = f.clone().hypot(&g);
                e[i + 1] = r.clone();
                if r.is_zero() {
                    // Rotation underflow: recover the shift and retry.
                    d[i + 1] = d[i + 1].clone() - &p;
                    e[m] = R::zero(prec);
                    restart = true;
                    break;
                }
                s = f.clone() / &r;
                c = g.clone() / &r;
                g = d[i + 1].clone() - &p;
                let t = (d[i].clone() - &g) * &s + two.clone() * &c * &b;
                p = s.clone() * &t;
                d[i + 1] = g.clone() + &p;
                g = c.clone() * &t - &b;
                for row in z.iter_mut() {
                    let zf = row[i + 1].clone();
                    row[i + 1] = s.clone() * &row[i] + c.clone() * &zf;
                    row[i] = c.clone() * &row[i] - s.clone() * &zf;
                }
            }
            if restart {
                continue;
            }
            d[l] = d[l].clone() - &p;
            e[l] = g;
            e[m] = R::zero(prec);
        }
    }
    Ok(())
}

/// Full eigensystem of a real symmetric matrix via tred2/tqli.
fn real_symmetric_eig<R: Real>(
    mut a: Vec<Vec<R>>,
    prec: u32,
) -> Result<(Vec<R>, Vec<Vec<R>>), SolveError> {
    let n = a.len();
    let mut d = vec![R::zero(prec); n];
    let mut e = vec![R::zero(prec); n];
    householder_tridiag(&mut a, &mut d, &mut e, prec);
    tridiag_ql(&mut d, &mut e, &mut a, prec)?;
    Ok((d, a))
}

/// Complex Hermitian cyclic Jacobi. The 2×2 pivot [[α, β],[β̄, γ]] is
/// reduced through the phase factorization β = |β|e^{iφ}, which turns the
/// rotation into the real one with an extra unit phase on the off-diagonal.
fn jacobi_hermitian<R: Real>(
    a: &mut CMat<R>,
    prec: u32,
) -> Result<(Vec<R>, CMat<R>), SolveError> {
    let n = a.rows;
    let mut v = CMat::identity(n, prec);
    let skip = R::exp2i(-(prec as i64) + 2, prec);
    let skip_sq = skip.clone() * &skip;
    let term = R::exp2i(-(prec as i64) + 8, prec);
    let one = R::one(prec);
    let half = R::from_f64(0.5, prec);

    let mut residual = R::zero(prec);
    let mut converged = n < 2;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let beta = a.at(p, q).clone();
                if beta.is_zero() {
                    continue;
                }
                let alpha = a.at(p, p).re.clone();
                let gamma = a.at(q, q).re.clone();
                let bsq = beta.norm_sqr();
                if bsq <= skip_sq.clone() * (alpha.clone() * &gamma).abs() {
                    continue;
                }
                rotated = true;
                let b = bsq.sqrt();
                let z = beta.unscale(&b); // e^{iφ}
                let zbar = z.conj();
                let tau = (gamma - &alpha) * &half / &b;
                let t = rotation_tangent(&tau);
                let c = (one.clone() + t.clone() * &t).sqrt().recip();
                let s = t * &c;

                // A ← AU: col_p' = c·col_p − s·z̄·col_q, col_q' = s·z·col_p + c·col_q.
                let sz = z.scale(&s);
                let szbar = zbar.scale(&s);
                let (col_p, col_q) = a.two_cols_mut(p, q);
                for i in 0..n {
                    let x = col_p[i].clone();
                    let y = col_q[i].clone();
                    col_p[i] = x.scale(&c).sub(&szbar.mul(&y));
                    col_q[i] = sz.mul(&x).add(&y.scale(&c));
                }
                // A ← U*A: row_p' = c·row_p − s·z·row_q, row_q' = s·z̄·row_p + c·row_q.
                for j in 0..n {
                    let x = a.at(p, j).clone();
                    let y = a.at(q, j).clone();
                    *a.at_mut(p, j) = x.scale(&c).sub(&sz.mul(&y));
                    *a.at_mut(q, j) = szbar.mul(&x).add(&y.scale(&c));
                }
                // The rotated diagonal pair is real by construction.
                let dp = a.at(p, p).re.clone();
                *a.at_mut(p, p) = Cplx::real(dp);
                let dq = a.at(q, q).re.clone();
                *a.at_mut(q, q) = Cplx::real(dq);
                let sym = a.at(p, q).clone().conj();
                *a.at_mut(q, p) = sym;

                let (vp, vq) = v.two_cols_mut(p, q);
                for i in 0..n {
                    let x = vp[i].clone();
                    let y = vq[i].clone();
                    vp[i] = x.scale(&c).sub(&szbar.mul(&y));
                    vq[i] = sz.mul(&x).add(&y.scale(&c));
                }
            }
        }
        let mut max_off = R::zero(prec);
        let mut max_diag = R::zero(prec);
        for i in 0..n {
            let d = a.at(i, i).abs();
            if d > max_diag {
                max_diag = d;
            }
            for j in (i + 1)..n {
                let o = a.at(i, j).abs();
                if o > max_off {
                    max_off = o;
                }
            }
        }
        residual = max_off.clone();
        if !rotated || max_off <= term.clone() * &max_diag {
            converged = true;
        }
    }
    if !converged {
        return Err(SolveError::ConvergenceFailure {
            sweeps: MAX_SWEEPS,
            residual: residual.to_f64(),
        });
    }
    let values = (0..n).map(|i| a.at(i, i).re.clone()).collect();
    Ok((values, v))
}

/// Stable descending order of `values`, ties by original index.
fn descending_order<R: Real>(values: &[R]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| {
        values[j]
            .partial_cmp(&values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}

fn permute_columns<R: Real>(m: &CMat<R>, order: &[usize]) -> CMat<R> {
    CMat::from_fn(m.rows, order.len(), |i, j| m.at(i, order[j]).clone())
}

/// Eigendecomposition of a Hermitian matrix: all-real inputs go through
/// real-arithmetic tred2/tqli, genuinely complex ones through cyclic Jacobi.
pub fn hermitian_eig<R: Real>(
    g: &CMat<R>,
    prec: u32,
) -> Result<SpectralFactorization<R>, SolveError> {
    if !g.is_square() {
        return Err(SolveError::ShapeError {
            rows: g.rows,
            cols: g.cols,
            what: "eigendecomposition needs a square matrix",
        });
    }
    let n = g.rows;
    let (values, vectors) = if g.is_real() {
        let a: Vec<Vec<R>> = (0..n)
            .map(|i| (0..n).map(|j| g.at(i, j).re.clone()).collect())
            .collect();
        let (vals, z) = real_symmetric_eig(a, prec)?;
        let vc = CMat::from_fn(n, n, |i, j| Cplx::real(z[i][j].clone()));
        (vals, vc)
    } else {
        let mut a = g.clone();
        jacobi_hermitian(&mut a, prec)?
    };
    let order = descending_order(&values);
    Ok(SpectralFactorization {
        values: order.iter().map(|&i| values[i].clone()).collect(),
        vectors: permute_columns(&vectors, &order),
        left: None,
        rows: n,
        cols: n,
        prec,
    })
}

/// Singular value decomposition of a tall matrix by one-sided Jacobi:
/// right rotations orthogonalize column pairs until every pair passes the
/// relative test |⟨a_p,a_q⟩| ≤ tol·‖a_p‖‖a_q‖.
pub fn rect_svd<R: Real>(
    a: &CMat<R>,
    prec: u32,
) -> Result<SpectralFactorization<R>, SolveError> {
    if a.rows < a.cols {
        return Err(SolveError::ShapeError {
            rows: a.rows,
            cols: a.cols,
            what: "one-sided SVD expects at least as many rows as columns",
        });
    }
    let (m, n) = (a.rows, a.cols);
    let mut u = a.clone();
    let mut v = CMat::identity(n, prec);
    let skip = R::exp2i(-(prec as i64) + 2, prec);
    let skip_sq = skip.clone() * &skip;
    let one = R::one(prec);
    let half = R::from_f64(0.5, prec);

    let mut converged = n < 2;
    let mut residual = R::zero(prec);
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        residual = R::zero(prec);
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                // 2×2 block of U*U at (p,q).
                let w = inner(u.col(q), u.col(p));
                let alpha = {
                    let mut acc = R::zero(prec);
                    for x in u.col(p) {
                        acc += x.norm_sqr();
                    }
                    acc
                };
                let gamma = {
                    let mut acc = R::zero(prec);
                    for x in u.col(q) {
                        acc += x.norm_sqr();
                    }
                    acc
                };
                let wsq = w.norm_sqr();
                if wsq > residual {
                    residual = wsq.clone();
                }
                if wsq <= skip_sq.clone() * alpha.clone() * &gamma {
                    continue;
                }
                rotated = true;
                let b = wsq.sqrt();
                let z = w.unscale(&b);
                let zbar = z.conj();
                let tau = (gamma - &alpha) * &half / &b;
                let t = rotation_tangent(&tau);
                let c = (one.clone() + t.clone() * &t).sqrt().recip();
                let s = t * &c;
                let sz = z.scale(&s);
                let szbar = zbar.scale(&s);

                let (col_p, col_q) = u.two_cols_mut(p, q);
                for i in 0..m {
                    let x = col_p[i].clone();
                    let y = col_q[i].clone();
                    col_p[i] = x.scale(&c).sub(&szbar.mul(&y));
                    col_q[i] = sz.mul(&x).add(&y.scale(&c));
                }
                let (vp, vq) = v.two_cols_mut(p, q);
                for i in 0..n {
                    let x = vp[i].clone();
                    let y = vq[i].clone();
                    vp[i] = x.scale(&c).sub(&szbar.mul(&y));
                    vq[i] = sz.mul(&x).add(&y.scale(&c));
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(SolveError::ConvergenceFailure {
            sweeps: MAX_SWEEPS,
            residual: residual.to_f64(),
        });
    }

    let mut values = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = R::zero(prec);
        for x in u.col(j) {
            acc += x.norm_sqr();
        }
        let sigma = acc.sqrt();
        if !sigma.is_zero() {
            let col = u.col_mut(j);
            for x in col.iter_mut() {
                *x = x.unscale(&sigma);
            }
        }
        values.push(sigma);
    }
    let order = descending_order(&values);
    Ok(SpectralFactorization {
        values: order.iter().map(|&i| values[i].clone()).collect(),
        vectors: permute_columns(&v, &order),
        left: Some(permute_columns(&u, &order)),
        rows: m,
        cols: n,
        prec,
    })
}

/// x^ε = Σ_{σ_n>ε} ⟨y, w_n⟩/σ_n · v_n, with w_n the left vectors when the
/// factorization is rectangular and the eigenvectors otherwise.
pub fn solve_regularized<R: Real>(
    fact: &SpectralFactorization<R>,
    y: &[Cplx<R>],
    eps: f64,
) -> RegularizedSolution<R> {
    assert_eq!(y.len(), fact.rows, "rhs length must match rows");
    let prec = fact.prec;
    let rank = fact.rank_above(eps);
    let projector = fact.left.as_ref().unwrap_or(&fact.vectors);
    let mut x = cvec_zero::<R>(fact.cols, prec);
    for k in 0..rank {
        let coef = inner(y, projector.col(k)).unscale(&fact.values[k]);
        for (xi, vi) in x.iter_mut().zip(fact.vectors.col(k)) {
            xi.add_mul(&coef, vi);
        }
    }
    RegularizedSolution {
        coeffs: x,
        eps,
        rank_kept: rank,
        sigma_min_kept: fact.min_kept(eps).cloned(),
        sigma_max: fact
            .values
            .first()
            .cloned()
            .unwrap_or_else(|| R::zero(prec)),
    }
}

/// Exact coefficients of the square system (ε = 0), guarded by the
/// precision-selection rule: the working precision must dominate the
/// forecast condition number, else the smallest eigenvalues are garbage.
pub fn solve_exact<R: Scalar>(sys: &GramSystem<R>) -> Result<Vec<Cplx<R>>, SolveError> {
    if sys.matrix.rows != sys.matrix.cols {
        return Err(SolveError::ShapeError {
            rows: sys.matrix.rows,
            cols: sys.matrix.cols,
            what: "exact solve needs the square Gram system",
        });
    }
    let required = required_bits(&sys.spec, sys.cols.len());
    if sys.prec < required {
        return Err(SolveError::PrecisionRefusal {
            required,
            available: sys.prec,
        });
    }
    let y = sys.rhs.as_ref().ok_or(SolveError::MissingRhs)?;
    let fact = hermitian_eig(&sys.matrix, sys.prec)?;
    Ok(solve_regularized(&fact, y, 0.0).coeffs)
}

/// Attained amplification bound of the ε-truncated solve: 1/√(min kept σ),
/// or 0 when nothing is kept (the zero map).
pub fn tsvd_condition_bound<R: Real>(fact: &SpectralFactorization<R>, eps: f64) -> R {
    match fact.min_kept(eps) {
        None => R::zero(fact.prec),
        Some(s) => s.clone().sqrt().recip(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{index_set, pair_inner_product, FrameSpec};
    use crate::gram::assemble_square;
    use proptest::prelude::*;
    use rug::Float;

    #[test]
    fn identity_eigenvalues_are_ones() {
        let g = CMat::<f64>::identity(5, 53);
        let f = hermitian_eig(&g, 53).unwrap();
        for v in &f.values {
            assert_eq!(*v, 1.0);
        }
    }

    #[test]
    fn arrow_matrix_has_closed_form_spectrum() {
        // [[1, c*],[c, I]]: eigenvalues 1 ± ‖c‖ and 1 with multiplicity N−2.
        let n = 8;
        let spec = FrameSpec::aug_ortho();
        let idx = index_set(&spec, n).unwrap();
        let mut g = CMat::<f64>::zero(n, n, 53);
        for i in 0..n {
            for j in 0..n {
                *g.at_mut(i, j) = pair_inner_product(&spec, idx[i], idx[j], 53).unwrap();
            }
        }
        let r = {
            let mut acc = 0.0f64;
            for k in 1..n as u32 {
                let c = crate::frames::ortho_coeff::<f64>(k, 53);
                acc += c * c;
            }
            acc.sqrt()
        };
        let f = hermitian_eig(&g, 53).unwrap();
        assert!((f.values[0] - (1.0 + r)).abs() < 1e-14);
        assert!((f.values[n - 1] - (1.0 - r)).abs() < 1e-14);
        for k in 1..n - 1 {
            assert!((f.values[k] - 1.0).abs() < 1e-14, "middle value {}", f.values[k]);
        }
    }

    /// Independent oracle: eigenvalues as sign changes of det(A − xI),
    /// determinant via complex LU with partial pivoting.
    #[allow(clippy::needless_range_loop)]
    fn det_shift(a: &CMat<f64>, x: f64) -> f64 {
        let n = a.rows;
        let mut m: Vec<Vec<Cplx<f64>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut v = a.at(i, j).clone();
                        if i == j {
                            v.re -= x;
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let mut det = Cplx::<f64>::one(53);
        let mut sign = 1.0;
        for k in 0..n {
            let (pivot_row, _) = (k..n)
                .map(|i| (i, m[i][k].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if m[pivot_row][k].abs() == 0.0 {
                return 0.0;
            }
            if pivot_row != k {
                m.swap(pivot_row, k);
                sign = -sign;
            }
            det = det.mul(&m[k][k]);
            for i in (k + 1)..n {
                let factor = Cplx::new(
                    (m[i][k].re * m[k][k].re + m[i][k].im * m[k][k].im)
                        / m[k][k].norm_sqr(),
                    (m[i][k].im * m[k][k].re - m[i][k].re * m[k][k].im)
                        / m[k][k].norm_sqr(),
                );
                for j in k..n {
                    let sub = factor.mul(&m[k][j]);
                    m[i][j] = m[i][j].sub(&sub);
                }
            }
        }
        sign * det.re
    }

    fn bisection_eigenvalues(a: &CMat<f64>) -> Vec<f64> {
        let n = a.rows;
        // Gershgorin interval.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let c = a.at(i, i).re;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    r += a.at(i, j).abs();
                }
            }
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        let grid = 4096;
        let mut roots = Vec::new();
        let mut prev = det_shift(a, lo);
        for k in 1..=grid {
            let x = lo + (hi - lo) * k as f64 / grid as f64;
            let cur = det_shift(a, x);
            if prev * cur < 0.0 {
                let (mut xl, mut xr) = (lo + (hi - lo) * (k - 1) as f64 / grid as f64, x);
                let mut fl = prev;
                for _ in 0..80 {
                    let xm = 0.5 * (xl + xr);
                    let fm = det_shift(a, xm);
                    if fl * fm <= 0.0 {
                        xr = xm;
                    } else {
                        xl = xm;
                        fl = fm;
                    }
                }
                roots.push(0.5 * (xl + xr));
            }
            prev = cur;
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots
    }

    #[test]
    fn random_hermitian_matches_bisection_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED);
        let n = 6;
        let mut g = CMat::<f64>::zero(n, n, 53);
        for i in 0..n {
            *g.at_mut(i, i) = Cplx::real(rng.random_range(-1.0..1.0));
            for j in (i + 1)..n {
                let v = Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                *g.at_mut(i, j) = v.clone();
                *g.at_mut(j, i) = v.conj();
            }
        }
        let oracle = bisection_eigenvalues(&g);
        assert_eq!(oracle.len(), n, "oracle must isolate all eigenvalues");
        let f = hermitian_eig(&g, 53).unwrap();
        for (got, want) in f.values.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn random_real_symmetric_matches_bisection_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xB15EC);
        let n = 7;
        let mut g = CMat::<f64>::zero(n, n, 53);
        for i in 0..n {
            *g.at_mut(i, i) = Cplx::real(rng.random_range(-1.0..1.0));
            for j in (i + 1)..n {
                let v = Cplx::real(rng.random_range(-1.0..1.0));
                *g.at_mut(i, j) = v.clone();
                *g.at_mut(j, i) = v;
            }
        }
        let oracle = bisection_eigenvalues(&g);
        assert_eq!(oracle.len(), n, "oracle must isolate all eigenvalues");
        let f = hermitian_eig(&g, 53).unwrap();
        for (got, want) in f.values.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        check_orthonormal(&f.vectors, 1e-13);
        check_reconstruction(&g, &f, 1e-13);
    }

    fn check_orthonormal(v: &CMat<f64>, tol: f64) {
        let id = v.gram_of_columns();
        for i in 0..id.rows {
            for j in 0..id.cols {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (id.at(i, j).re - want).abs() < tol && id.at(i, j).im.abs() < tol,
                    "V*V deviates at ({i},{j}): {:?}",
                    id.at(i, j)
                );
            }
        }
    }

    fn check_reconstruction(g: &CMat<f64>, f: &SpectralFactorization<f64>, tol: f64) {
        let n = g.rows;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Cplx::<f64>::zero(53);
                for k in 0..n {
                    let term = f
                        .vectors
                        .at(i, k)
                        .scale(&f.values[k])
                        .mul_conj(f.vectors.at(j, k));
                    acc.add_assign(&term);
                }
                let d = acc.sub(g.at(i, j)).abs();
                assert!(d < tol, "reconstruction off at ({i},{j}) by {d}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn factorization_invariants_hold(seed in 0u64..1 << 48, n in 2usize..9) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut g = CMat::<f64>::zero(n, n, 53);
            for i in 0..n {
                *g.at_mut(i, i) = Cplx::real(rng.random_range(-1.0..1.0));
                for j in (i + 1)..n {
                    let v = Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    *g.at_mut(i, j) = v.clone();
                    *g.at_mut(j, i) = v.conj();
                }
            }
            let f = hermitian_eig(&g, 53).unwrap();
            let sigma1 = f.values[0].abs().max(f.values[n-1].abs());
            check_orthonormal(&f.vectors, 1e-13);
            check_reconstruction(&g, &f, 1e-13 * sigma1.max(1.0));
            // Descending order.
            for k in 1..n {
                prop_assert!(f.values[k - 1] >= f.values[k]);
            }
        }
    }

    #[test]
    fn mp_eigendecomposition_reaches_precision() {
        // Arrow system at 256 bits: closed-form extremes to 2^{-240}.
        let prec = 256;
        let n = 16;
        let spec = FrameSpec::aug_ortho();
        let sys = assemble_square::<Float>(&spec, n, prec).unwrap();
        let f = hermitian_eig(&sys.matrix, prec).unwrap();
        let mut rsq = Float::new(prec);
        for k in 1..n as u32 {
            let c = crate::frames::ortho_coeff::<Float>(k, prec);
            rsq += c.clone() * &c;
        }
        let r = rsq.sqrt();
        let want_top = Float::with_val(prec, 1) + &r;
        let want_bot = Float::with_val(prec, 1) - &r;
        let tol = Float::exp2i(-240, prec);
        let dt = Float::with_val(prec, &f.values[0] - &want_top).abs();
        let db = Float::with_val(prec, &f.values[n - 1] - &want_bot).abs();
        assert!(dt < tol, "top eigenvalue off by {dt}");
        assert!(db < tol, "bottom eigenvalue off by {db}");
    }

    #[test]
    fn stacked_identity_has_unit_singular_values() {
        let mut a = CMat::<f64>::zero(7, 4, 53);
        for i in 0..4 {
            *a.at_mut(i, i) = Cplx::one(53);
        }
        let f = rect_svd(&a, 53).unwrap();
        for s in &f.values {
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rect_svd_squares_match_gram_eigenvalues() {
        // σ(G_{M,N})² = λ(G* G), the independent two-sided route.
        let spec = FrameSpec::fourier_ext(2.0).unwrap();
        let sys = crate::gram::assemble_rect::<f64>(&spec, 16, 8, 53).unwrap();
        let f = rect_svd(&sys.matrix, 53).unwrap();
        let gtg = sys.matrix.gram_of_columns();
        let eig = hermitian_eig(&gtg, 53).unwrap();
        for (s, l) in f.values.iter().zip(&eig.values) {
            assert!((s * s - l).abs() < 1e-13, "{} vs {}", s * s, l);
        }
        // Left vectors orthonormal.
        let utu = f.left.as_ref().unwrap().gram_of_columns();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((utu.at(i, j).re - want).abs() < 1e-13);
                assert!(utu.at(i, j).im.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn square_pd_svd_agrees_with_eig() {
        let spec = FrameSpec::fourier_ext(2.0).unwrap();
        let sys = assemble_square::<f64>(&spec, 8, 53).unwrap();
        let e = hermitian_eig(&sys.matrix, 53).unwrap();
        let s = rect_svd(&sys.matrix, 53).unwrap();
        for (a, b) in e.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    fn diag_fact(values: &[f64]) -> SpectralFactorization<f64> {
        let n = values.len();
        SpectralFactorization {
            values: values.to_vec(),
            vectors: CMat::identity(n, 53),
            left: None,
            rows: n,
            cols: n,
            prec: 53,
        }
    }

    #[test]
    fn truncation_is_strict_and_monotone() {
        let f = diag_fact(&[1.0, 1e-4, 1e-8, 1e-12]);
        assert_eq!(f.rank_above(0.0), 4);
        assert_eq!(f.rank_above(1e-8), 2, "ties at ε are discarded");
        assert_eq!(f.rank_above(1e-9), 3);
        assert_eq!(f.rank_above(2.0), 0);
        let mut prev = usize::MAX;
        for eps in [0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 2.0] {
            let r = f.rank_above(eps);
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn solve_regularized_handles_eigenvector_rhs() {
        let f = diag_fact(&[2.0, 0.5, 1e-9]);
        // y = σ_1 v_1 → x = v_1.
        let y = vec![
            Cplx::real(2.0),
            Cplx::<f64>::zero(53),
            Cplx::<f64>::zero(53),
        ];
        let sol = solve_regularized(&f, &y, 1e-6);
        assert!((sol.coeffs[0].re - 1.0).abs() < 1e-15);
        assert!(sol.coeffs[1].is_zero() && sol.coeffs[2].is_zero());
        // y along a discarded direction → 0.
        let y = vec![
            Cplx::<f64>::zero(53),
            Cplx::<f64>::zero(53),
            Cplx::real(1e-9),
        ];
        let sol = solve_regularized(&f, &y, 1e-6);
        assert_eq!(sol.rank_kept, 2);
        assert!(sol.coeffs.iter().all(|c| c.is_zero()));
    }

    #[test]
    fn regularized_solution_converges_to_exact_as_eps_shrinks() {
        let spec = FrameSpec::fourier_ext(2.0).unwrap();
        let sys = assemble_square::<f64>(&spec, 6, 53).unwrap();
        let f = hermitian_eig(&sys.matrix, 53).unwrap();
        let y: Vec<Cplx<f64>> = (0..6).map(|i| Cplx::real(1.0 / (i + 1) as f64)).collect();
        let exact = solve_regularized(&f, &y, 0.0);
        let mut prev_err = f64::INFINITY;
        for eps in [1e-1, 1e-3, 1e-6, 1e-12] {
            let sol = solve_regularized(&f, &y, eps);
            let err: f64 = sol
                .coeffs
                .iter()
                .zip(&exact.coeffs)
                .map(|(a, b)| a.sub(b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err <= prev_err + 1e-14);
            prev_err = err;
        }
        assert!(prev_err < 1e-12);
    }

    #[test]
    fn solve_exact_requires_forecast_precision() {
        let spec = FrameSpec::fourier_ext(2.0).unwrap();
        let mut sys = assemble_square::<f64>(&spec, 40, 53).unwrap();
        sys.rhs = Some(vec![Cplx::<f64>::zero(53); 40]);
        let e = solve_exact(&sys).unwrap_err();
        match e {
            SolveError::PrecisionRefusal { required, available } => {
                assert!(required > 100, "forecast should exceed {required}");
                assert_eq!(available, 53);
            }
            other => panic!("expected precision refusal, got {other}"),
        }
    }

    #[test]
    fn solve_exact_on_orthonormal_block_returns_rhs() {
        let spec = FrameSpec::aug_ortho();
        let mut sys = assemble_square::<Float>(&spec, 5, 128).unwrap();
        let y: Vec<Cplx<Float>> = (0..5)
            .map(|i| Cplx::real(Float::with_val(128, i as f64 / 3.0)))
            .collect();
        sys.rhs = Some(y.clone());
        let x = solve_exact(&sys).unwrap();
        // Not orthonormal (arrow), so check the residual instead: G x = y.
        let gx = sys.matrix.mul_vec(&x);
        for (a, b) in gx.iter().zip(&y) {
            let d = a.sub(b).abs();
            assert!(d < Float::exp2i(-100, 128), "residual {d}");
        }
    }

    #[test]
    fn condition_bound_edge_cases() {
        let f = diag_fact(&[1.0, 1.0, 1.0]);
        assert_eq!(tsvd_condition_bound(&f, 0.5), 1.0);
        assert_eq!(tsvd_condition_bound(&f, 1.0), 0.0);
        let f = diag_fact(&[4.0, 1e-8]);
        assert!((tsvd_condition_bound(&f, 1e-6) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perturbation_amplification_respects_theory_bound() {
        use rand::{Rng, SeedableRng};
        let spec = FrameSpec::fourier_ext(2.0).unwrap();
        let n = 20;
        let sys = assemble_square::<f64>(&spec, n, 53).unwrap();
        let f = hermitian_eig(&sys.matrix, 53).unwrap();
        let eps = 1e-6;
        let bound = tsvd_condition_bound(&f, eps);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut delta: Vec<Cplx<f64>> = (0..n)
                .map(|_| Cplx::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let nrm = crate::mp::norm2(&delta);
            for d in delta.iter_mut() {
                *d = d.unscale(&nrm);
            }
            let sol = solve_regularized(&f, &delta, eps);
            // ‖T z‖² = z* G z.
            let gz = sys.matrix.mul_vec(&sol.coeffs);
            let image_norm_sq = inner(&gz, &sol.coeffs).re;
            assert!(
                image_norm_sq.sqrt() <= bound * (1.0 + 1e-6),
                "amplification {} exceeds bound {bound}",
                image_norm_sq.sqrt()
            );
        }
    }
}
