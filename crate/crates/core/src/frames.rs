//! Frame families, their truncation index sets, pointwise evaluation, and
//! analytic inner products between frame elements.
//!
//! Four families are provided: the restricted Fourier basis on a subinterval,
//! the Fourier basis augmented by finitely many Legendre polynomials, paired
//! plain/weighted Legendre polynomials, and an abstract orthonormal-basis
//! family augmented by one extra unit vector given through its coefficients.
//! The first three live on a real interval; the last is handled entirely in
//! coefficient space.

use thiserror::Error;

use crate::mp::{Cplx, Real};
use crate::quadrature::{adaptive_integrate, gauss_jacobi, gauss_legendre, QuadError, Scalar};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("{family}: {what}")]
    InvalidParameter { family: &'static str, what: String },
    #[error("{family} requires {rule}; got N = {n}")]
    InadmissibleSize {
        family: &'static str,
        rule: &'static str,
        n: usize,
    },
    #[error("index {idx:?} is not legal for {family}")]
    IllegalIndex { family: &'static str, idx: FrameIndex },
    #[error("t = {t} lies outside the domain closure [{lo}, {hi}]")]
    OutsideDomain { t: f64, lo: f64, hi: f64 },
    #[error("{family} has no pointwise realization; it is defined in coefficient space")]
    AbstractFamily { family: &'static str },
    #[error("target '{id}' is defined by coefficients, not pointwise values")]
    AbstractTarget { id: String },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// A frame family with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum FrameSpec {
    /// Fourier basis of L²(−1,1) restricted to (−1/T, 1/T); `t_ratio` is T > 1.
    FourierExt { t_ratio: f64 },
    /// Fourier basis of L²(−1,1) plus the first K normalized Legendre
    /// polynomials (k = 1..K).
    AugFourier { k_extra: u32 },
    /// Pairs {φ_n, (1+t)^α φ_n} of normalized Legendre polynomials, n ≥ 1.
    WeightedLegendre { alpha: f64 },
    /// Orthonormal basis {φ_n} plus one extra unit vector g = Σ c_n φ_n with
    /// c_n = (√90/π²) n^{−2}; coefficient space only.
    AugOrtho,
}

impl FrameSpec {
    pub fn fourier_ext(t_ratio: f64) -> Result<Self, FrameError> {
        if !t_ratio.is_finite() || t_ratio <= 1.0 {
            return Err(FrameError::InvalidParameter {
                family: "fourier-ext",
                what: format!("extension ratio must satisfy T > 1, got {t_ratio}"),
            });
        }
        Ok(FrameSpec::FourierExt { t_ratio })
    }

    pub fn aug_fourier(k_extra: u32) -> Result<Self, FrameError> {
        if k_extra < 1 {
            return Err(FrameError::InvalidParameter {
                family: "aug-fourier",
                what: format!("needs at least one extra element, got K = {k_extra}"),
            });
        }
        Ok(FrameSpec::AugFourier { k_extra })
    }

    pub fn weighted_legendre(alpha: f64) -> Result<Self, FrameError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(FrameError::InvalidParameter {
                family: "weighted-legendre",
                what: format!("weight exponent must lie in (0,1), got α = {alpha}"),
            });
        }
        Ok(FrameSpec::WeightedLegendre { alpha })
    }

    pub fn aug_ortho() -> Self {
        FrameSpec::AugOrtho
    }

    /// Short family id used in records: fe, augf, wl, synth.
    pub fn family_id(&self) -> &'static str {
        match self {
            FrameSpec::FourierExt { .. } => "fe",
            FrameSpec::AugFourier { .. } => "augf",
            FrameSpec::WeightedLegendre { .. } => "wl",
            FrameSpec::AugOrtho => "synth",
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            FrameSpec::FourierExt { .. } => "fourier-ext",
            FrameSpec::AugFourier { .. } => "aug-fourier",
            FrameSpec::WeightedLegendre { .. } => "weighted-legendre",
            FrameSpec::AugOrtho => "aug-ortho",
        }
    }

    /// Parameter string for records, e.g. "T=2".
    pub fn params_string(&self) -> String {
        match self {
            FrameSpec::FourierExt { t_ratio } => format!("T={t_ratio}"),
            FrameSpec::AugFourier { k_extra } => format!("K={k_extra}"),
            FrameSpec::WeightedLegendre { alpha } => format!("alpha={alpha}"),
            FrameSpec::AugOrtho => String::new(),
        }
    }

    /// Interval the family lives on; None for the coefficient-space family.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            FrameSpec::FourierExt { t_ratio } => Some((-1.0 / t_ratio, 1.0 / t_ratio)),
            FrameSpec::AugFourier { .. } | FrameSpec::WeightedLegendre { .. } => {
                Some((-1.0, 1.0))
            }
            FrameSpec::AugOrtho => None,
        }
    }

    /// Upper frame bound B of the infinite family.
    pub fn upper_frame_bound(&self) -> f64 {
        match self {
            FrameSpec::FourierExt { .. } => 1.0,
            FrameSpec::AugFourier { .. } => 2.0,
            FrameSpec::WeightedLegendre { alpha } => 1.0 + 4f64.powf(*alpha),
            FrameSpec::AugOrtho => 2.0,
        }
    }

    /// (A, B) pair driving the relaxation step 2/(A+B) of the dual-element
    /// iteration. A is the best a-priori lower bound used for stepping; the
    /// iteration converges for any positive spectrum below B.
    pub fn relaxation_bounds(&self) -> (f64, f64) {
        match self {
            FrameSpec::FourierExt { .. } => (1.0, 1.0),
            _ => (1.0, self.upper_frame_bound()),
        }
    }

    /// True when elements have unbounded derivatives at the left endpoint.
    pub fn singular_lo(&self) -> bool {
        matches!(self, FrameSpec::WeightedLegendre { .. })
    }
}

/// Index of one element within a family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameIndex {
    /// Fourier mode e^{iπnt}/√2.
    Fourier(i64),
    /// Normalized Legendre polynomial √(k+½) P_k, k ≥ 1.
    Legendre(u32),
    /// Weighted Legendre element (1+t)^α √(n+½) P_n, n ≥ 1.
    Weighted(u32),
    /// The extra unit vector g of the coefficient-space family.
    Extra,
    /// Orthonormal basis element φ_n of the coefficient-space family, n ≥ 1.
    Ortho(u32),
}

/// Fourier mode of position p in the nested order 0, −1, 1, −2, 2, …
fn fourier_mode_at(p: usize) -> i64 {
    if p == 0 {
        0
    } else if p % 2 == 1 {
        -((p as i64 + 1) / 2)
    } else {
        p as i64 / 2
    }
}

/// First N indices of the family in its nested truncation order.
pub fn index_set(spec: &FrameSpec, n: usize) -> Result<Vec<FrameIndex>, FrameError> {
    match spec {
        FrameSpec::FourierExt { .. } => {
            if n == 0 || !n.is_multiple_of(2) {
                return Err(FrameError::InadmissibleSize {
                    family: "fourier-ext",
                    rule: "an even number of modes (symmetric truncation)",
                    n,
                });
            }
            Ok((0..n).map(|p| FrameIndex::Fourier(fourier_mode_at(p))).collect())
        }
        FrameSpec::AugFourier { k_extra } => {
            let k = *k_extra as usize;
            if n < k || !(n - k).is_multiple_of(2) {
                return Err(FrameError::InadmissibleSize {
                    family: "aug-fourier",
                    rule: "N ≥ K with N − K even",
                    n,
                });
            }
            let mut out: Vec<_> = (1..=*k_extra).map(FrameIndex::Legendre).collect();
            out.extend((0..n - k).map(|p| FrameIndex::Fourier(fourier_mode_at(p))));
            Ok(out)
        }
        FrameSpec::WeightedLegendre { .. } => {
            if n == 0 || !n.is_multiple_of(2) {
                return Err(FrameError::InadmissibleSize {
                    family: "weighted-legendre",
                    rule: "an even number of elements (complete pairs)",
                    n,
                });
            }
            let mut out = Vec::with_capacity(n);
            for m in 1..=(n as u32 / 2) {
                out.push(FrameIndex::Legendre(m));
                out.push(FrameIndex::Weighted(m));
            }
            Ok(out)
        }
        FrameSpec::AugOrtho => {
            if n == 0 {
                return Err(FrameError::InadmissibleSize {
                    family: "aug-ortho",
                    rule: "at least the extra element",
                    n,
                });
            }
            let mut out = vec![FrameIndex::Extra];
            out.extend((1..n as u32).map(FrameIndex::Ortho));
            Ok(out)
        }
    }
}

/// Whether the index belongs to the family's index alphabet.
pub fn index_legal(spec: &FrameSpec, idx: FrameIndex) -> bool {
    match (spec, idx) {
        (FrameSpec::FourierExt { .. }, FrameIndex::Fourier(_)) => true,
        (FrameSpec::AugFourier { .. }, FrameIndex::Fourier(_)) => true,
        (FrameSpec::AugFourier { k_extra }, FrameIndex::Legendre(k)) => {
            k >= 1 && k <= *k_extra
        }
        (FrameSpec::WeightedLegendre { .. }, FrameIndex::Legendre(k)) => k >= 1,
        (FrameSpec::WeightedLegendre { .. }, FrameIndex::Weighted(k)) => k >= 1,
        (FrameSpec::AugOrtho, FrameIndex::Extra) => true,
        (FrameSpec::AugOrtho, FrameIndex::Ortho(k)) => k >= 1,
        _ => false,
    }
}

fn check_index(spec: &FrameSpec, idx: FrameIndex) -> Result<(), FrameError> {
    if index_legal(spec, idx) {
        Ok(())
    } else {
        Err(FrameError::IllegalIndex {
            family: spec.family_name(),
            idx,
        })
    }
}

/// Legendre polynomial P_k(t) by the three-term recurrence.
pub fn legendre_p<R: Real>(k: u32, t: &R) -> R {
    let prec = t.prec();
    let mut pm1 = R::one(prec);
    if k == 0 {
        return pm1;
    }
    let mut p = t.clone();
    for m in 1..k {
        let mf = R::from_u64(m as u64, prec);
        let a = mf.clone() * R::from_f64(2.0, prec) + R::one(prec);
        let next = (a * t.clone() * &p - mf.clone() * &pm1) / (mf + R::one(prec));
        pm1 = p;
        p = next;
    }
    p
}

/// √(k+½), the L²(−1,1) normalization of P_k.
pub fn legendre_norm<R: Real>(k: u32, prec: u32) -> R {
    (R::from_u64(k as u64, prec) + R::from_f64(0.5, prec)).sqrt()
}

/// e^{iθ}.
fn unit_phase<R: Real>(theta: R) -> Cplx<R> {
    let (s, c) = theta.sin_cos();
    Cplx::new(c, s)
}

/// Fourier element e^{iπnt}/√2 of L²(−1,1).
fn fourier_value<R: Real>(n: i64, t: &R, prec: u32) -> Cplx<R> {
    let theta = R::pi(prec) * R::from_i64(n, prec) * t;
    let inv_sqrt2 = R::from_f64(0.5, prec).sqrt();
    unit_phase(theta).scale(&inv_sqrt2)
}

/// Coefficient c_n = (√90/π²) n^{−2} of the extra element g.
pub fn ortho_coeff<R: Real>(n: u32, prec: u32) -> R {
    let pi = R::pi(prec);
    let n2 = R::from_u64(n as u64 * n as u64, prec);
    R::from_u64(90, prec).sqrt() / (pi.clone() * pi) / n2
}

/// Pointwise value of one frame element. The coefficient-space family has no
/// pointwise realization and reports an error.
pub fn evaluate<R: Real>(
    spec: &FrameSpec,
    idx: FrameIndex,
    t: &R,
    prec: u32,
) -> Result<Cplx<R>, FrameError> {
    check_index(spec, idx)?;
    let (lo, hi) = spec.domain().ok_or(FrameError::AbstractFamily {
        family: spec.family_name(),
    })?;
    let tf = t.to_f64();
    // Closed-interval check with a few ulps of slack for rounded endpoints.
    let pad = 4.0 * f64::EPSILON;
    if tf < lo - pad || tf > hi + pad {
        return Err(FrameError::OutsideDomain { t: tf, lo, hi });
    }
    Ok(match idx {
        FrameIndex::Fourier(n) => fourier_value(n, t, prec),
        FrameIndex::Legendre(k) => {
            Cplx::real(legendre_norm::<R>(k, prec) * legendre_p(k, t))
        }
        FrameIndex::Weighted(k) => {
            let alpha = match spec {
                FrameSpec::WeightedLegendre { alpha } => *alpha,
                _ => unreachable!("index legality filters the family"),
            };
            let w = (R::one(prec) + t).pow(&R::from_f64(alpha, prec));
            Cplx::real(w * legendre_norm::<R>(k, prec) * legendre_p(k, t))
        }
        FrameIndex::Extra | FrameIndex::Ortho(_) => unreachable!("abstract family"),
    })
}

/// Number of Gauss–Legendre nodes resolving ∫ P_k(t) e^{−inπt} dt at the
/// stated precision: polynomial degree plus oscillation plus a precision-
/// dependent pad (the oscillatory factor converges geometrically once the
/// rule resolves the wavelength, so the pad buys the extra bits).
fn cross_node_count(k: u32, n: i64, prec: u32) -> usize {
    (2 * k as usize).max(4 * n.unsigned_abs() as usize) + 16 + (prec as usize).div_ceil(2)
}

/// ⟨ψ_k, φ_n⟩ on (−1,1): ψ_k = √(k+½)P_k, φ_n = e^{iπnt}/√2.
fn augf_cross<R: Scalar>(k: u32, n: i64, prec: u32) -> Result<Cplx<R>, QuadError> {
    if n == 0 {
        // ∫ P_k = 0 for k ≥ 1.
        return Ok(Cplx::zero(prec));
    }
    let rule = gauss_legendre::<R>(cross_node_count(k, n, prec), prec)?;
    let norm = legendre_norm::<R>(k, prec) * R::from_f64(0.5, prec).sqrt();
    let pi = R::pi(prec);
    let nf = R::from_i64(n, prec);
    let mut acc = Cplx::zero(prec);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        // conj(φ_n) = e^{−iπnt}/√2 with the norm factored out.
        let phase = unit_phase(-(pi.clone() * &nf * x));
        let val = phase.scale(&legendre_p(k, x));
        acc.add_scaled(&val, w);
    }
    Ok(acc.scale(&norm))
}

/// ∫ (1+t)^{aw} P_m P_n √(m+½)√(n+½) dt via an exact Gauss–Jacobi rule.
fn wl_weighted_product<R: Scalar>(
    m: u32,
    n: u32,
    weight_exp: f64,
    prec: u32,
) -> Result<R, QuadError> {
    // Canonical degree order keeps swapped arguments bitwise symmetric.
    let (m, n) = (m.min(n), m.max(n));
    let nodes = ((m + n) as usize).div_ceil(2) + 1;
    let rule = gauss_jacobi::<R>(nodes, 0.0, weight_exp, prec)?;
    let mut acc = R::zero(prec);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += legendre_p(m, x) * legendre_p(n, x) * w;
    }
    Ok(acc * legendre_norm::<R>(m, prec) * legendre_norm::<R>(n, prec))
}

/// Exact inner product ⟨φ_j, φ_i⟩ of two frame elements.
///
/// Hermitian symmetry holds bitwise: swapped arguments return the exact
/// conjugate because both orientations evaluate one canonical kernel.
pub fn pair_inner_product<R: Scalar>(
    spec: &FrameSpec,
    i: FrameIndex,
    j: FrameIndex,
    prec: u32,
) -> Result<Cplx<R>, FrameError> {
    check_index(spec, i)?;
    check_index(spec, j)?;
    let delta = |a: bool| {
        if a {
            Cplx::one(prec)
        } else {
            Cplx::zero(prec)
        }
    };
    match spec {
        FrameSpec::FourierExt { t_ratio } => {
            let (FrameIndex::Fourier(m), FrameIndex::Fourier(n)) = (i, j) else {
                unreachable!("index legality filters the family")
            };
            // ⟨φ_n, φ_m⟩ over (−1/T, 1/T): 1/T on the diagonal, else
            // sin(π(n−m)/T)/(π(n−m)).
            let d = n - m;
            if d == 0 {
                return Ok(Cplx::real(R::one(prec) / R::from_f64(*t_ratio, prec)));
            }
            let pd = R::pi(prec) * R::from_i64(d, prec);
            let val = (pd.clone() / R::from_f64(*t_ratio, prec)).sin() / pd;
            Ok(Cplx::real(val))
        }
        FrameSpec::AugFourier { .. } => match (i, j) {
            (FrameIndex::Fourier(m), FrameIndex::Fourier(n)) => Ok(delta(m == n)),
            (FrameIndex::Legendre(k), FrameIndex::Legendre(l)) => Ok(delta(k == l)),
            // ⟨φ_j, φ_i⟩ with j = ψ_k, i = φ_n.
            (FrameIndex::Fourier(n), FrameIndex::Legendre(k)) => {
                Ok(augf_cross::<R>(k, n, prec)?)
            }
            (FrameIndex::Legendre(k), FrameIndex::Fourier(n)) => {
                Ok(augf_cross::<R>(k, n, prec)?.conj())
            }
            _ => unreachable!("index legality filters the family"),
        },
        FrameSpec::WeightedLegendre { alpha } => {
            let (deg_i, wt_i) = match i {
                FrameIndex::Legendre(k) => (k, false),
                FrameIndex::Weighted(k) => (k, true),
                _ => unreachable!("index legality filters the family"),
            };
            let (deg_j, wt_j) = match j {
                FrameIndex::Legendre(k) => (k, false),
                FrameIndex::Weighted(k) => (k, true),
                _ => unreachable!("index legality filters the family"),
            };
            if !wt_i && !wt_j {
                return Ok(delta(deg_i == deg_j));
            }
            let wexp = alpha * (wt_i as u8 + wt_j as u8) as f64;
            Ok(Cplx::real(wl_weighted_product::<R>(
                deg_i, deg_j, wexp, prec,
            )?))
        }
        FrameSpec::AugOrtho => match (i, j) {
            (FrameIndex::Extra, FrameIndex::Extra) => {
                // ⟨g,g⟩ = (90/π⁴) ζ(4); the law is normalized so this is 1.
                let pi = R::pi(prec);
                let z4 = R::from_u64(4, prec).zeta();
                let val = R::from_u64(90, prec) * z4 / (pi.clone() * &pi * &pi * &pi);
                Ok(Cplx::real(val))
            }
            (FrameIndex::Extra, FrameIndex::Ortho(n))
            | (FrameIndex::Ortho(n), FrameIndex::Extra) => {
                Ok(Cplx::real(ortho_coeff::<R>(n, prec)))
            }
            (FrameIndex::Ortho(m), FrameIndex::Ortho(n)) => Ok(delta(m == n)),
            _ => unreachable!("index legality filters the family"),
        },
    }
}

/// Built-in target functions.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetFunction {
    /// e^t.
    Exp,
    /// 1/(1+16t²).
    Runge16,
    /// 1/(1+25t²).
    Runge25,
    /// |t|⁵.
    Abs5,
    /// 1/(10−9t).
    Pole,
    /// e^{sin(3t+½)}√(1+t) + cos(5t).
    Mixed,
    /// Coefficient-space target b_n = (√6/π)/n against the orthonormal part
    /// of the abstract family; unit norm.
    SyntheticP51,
    /// Identically zero.
    Zero,
    /// One frame element as a target (reproducing-property checks).
    Element { spec: FrameSpec, idx: FrameIndex },
}

impl TargetFunction {
    pub fn id(&self) -> String {
        match self {
            TargetFunction::Exp => "exp".into(),
            TargetFunction::Runge16 => "runge16".into(),
            TargetFunction::Runge25 => "runge25".into(),
            TargetFunction::Abs5 => "abs5".into(),
            TargetFunction::Pole => "pole".into(),
            TargetFunction::Mixed => "mixed".into(),
            TargetFunction::SyntheticP51 => "synthetic-p51".into(),
            TargetFunction::Zero => "zero".into(),
            TargetFunction::Element { idx, .. } => format!("element-{idx:?}"),
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Some(match id {
            "exp" => TargetFunction::Exp,
            "runge16" => TargetFunction::Runge16,
            "runge25" => TargetFunction::Runge25,
            "abs5" => TargetFunction::Abs5,
            "pole" => TargetFunction::Pole,
            "mixed" => TargetFunction::Mixed,
            "synthetic-p51" => TargetFunction::SyntheticP51,
            "zero" => TargetFunction::Zero,
            _ => return None,
        })
    }

    /// True when the target is given by coefficients, not pointwise values.
    pub fn is_abstract(&self) -> bool {
        matches!(self, TargetFunction::SyntheticP51)
    }

    /// Derivative blow-up at t = −1 (drives endpoint grading).
    pub fn singular_lo(&self) -> bool {
        matches!(self, TargetFunction::Mixed)
    }

    /// Coefficient b_n of the synthetic target against the orthonormal basis.
    pub fn synthetic_coeff<R: Real>(n: u32, prec: u32) -> R {
        R::from_u64(6, prec).sqrt() / R::pi(prec) / R::from_u64(n as u64, prec)
    }

    pub fn eval<R: Real>(&self, t: &R, prec: u32) -> Result<Cplx<R>, FrameError> {
        let one = R::one(prec);
        Ok(match self {
            TargetFunction::Exp => Cplx::real(t.clone().exp()),
            TargetFunction::Runge16 => {
                let d = one.clone() + R::from_u64(16, prec) * t.clone() * t;
                Cplx::real(d.recip())
            }
            TargetFunction::Runge25 => {
                let d = one.clone() + R::from_u64(25, prec) * t.clone() * t;
                Cplx::real(d.recip())
            }
            TargetFunction::Abs5 => Cplx::real(t.clone().abs().powi(5)),
            TargetFunction::Pole => {
                let d = R::from_u64(10, prec) - R::from_u64(9, prec) * t.clone();
                Cplx::real(d.recip())
            }
            TargetFunction::Mixed => {
                let three_t = R::from_u64(3, prec) * t.clone() + R::from_f64(0.5, prec);
                let envelope = three_t.sin().exp() * (one.clone() + t).sqrt();
                let ripple = (R::from_u64(5, prec) * t.clone()).cos();
                Cplx::real(envelope + &ripple)
            }
            TargetFunction::SyntheticP51 => {
                return Err(FrameError::AbstractTarget { id: self.id() })
            }
            TargetFunction::Zero => Cplx::zero(prec),
            TargetFunction::Element { spec, idx } => evaluate(spec, *idx, t, prec)?,
        })
    }

    /// ‖f‖² over the family's domain. Concrete targets integrate adaptively;
    /// the synthetic target has unit norm by construction of its law.
    pub fn norm_sq<R: Scalar>(
        &self,
        spec: &FrameSpec,
        tol: &R,
        prec: u32,
    ) -> Result<R, FrameError> {
        if self.is_abstract() {
            // Σ b_n² = (6/π²) ζ(2) = 1.
            return Ok(R::one(prec));
        }
        let (lo, hi) = spec.domain().ok_or(FrameError::AbstractFamily {
            family: spec.family_name(),
        })?;
        let f = |t: &R| -> Cplx<R> {
            let v = self.eval(t, prec).expect("concrete target");
            Cplx::real(v.norm_sqr())
        };
        let (val, _) = adaptive_integrate(&f, lo, hi, self.singular_lo(), false, tol, prec)?;
        Ok(val.re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rug::Float;

    fn fe2() -> FrameSpec {
        FrameSpec::fourier_ext(2.0).unwrap()
    }

    #[test]
    fn constructors_validate_parameters() {
        assert!(FrameSpec::fourier_ext(1.0).is_err());
        assert!(FrameSpec::fourier_ext(f64::NAN).is_err());
        assert!(FrameSpec::aug_fourier(0).is_err());
        assert!(FrameSpec::weighted_legendre(0.0).is_err());
        assert!(FrameSpec::weighted_legendre(1.0).is_err());
        assert!(FrameSpec::weighted_legendre(0.5).is_ok());
    }

    #[test]
    fn fe_index_set_matches_symmetric_truncation() {
        let set = index_set(&fe2(), 4).unwrap();
        let modes: Vec<i64> = set
            .iter()
            .map(|i| match i {
                FrameIndex::Fourier(n) => *n,
                _ => panic!(),
            })
            .collect();
        let mut sorted = modes.clone();
        sorted.sort();
        assert_eq!(sorted, vec![-2, -1, 0, 1]);
    }

    #[test]
    fn augf_index_set_places_extras_first() {
        let spec = FrameSpec::aug_fourier(2).unwrap();
        let set = index_set(&spec, 6).unwrap();
        assert_eq!(set[0], FrameIndex::Legendre(1));
        assert_eq!(set[1], FrameIndex::Legendre(2));
        let mut modes: Vec<i64> = set[2..]
            .iter()
            .map(|i| match i {
                FrameIndex::Fourier(n) => *n,
                _ => panic!(),
            })
            .collect();
        modes.sort();
        assert_eq!(modes, vec![-2, -1, 0, 1]);
    }

    #[test]
    fn wl_smallest_truncation_is_one_pair() {
        let spec = FrameSpec::weighted_legendre(0.5).unwrap();
        let set = index_set(&spec, 2).unwrap();
        assert_eq!(set, vec![FrameIndex::Legendre(1), FrameIndex::Weighted(1)]);
    }

    #[test]
    fn inadmissible_sizes_name_the_rule() {
        let e = index_set(&fe2(), 3).unwrap_err();
        assert!(e.to_string().contains("even"), "{e}");
        let spec = FrameSpec::aug_fourier(2).unwrap();
        let e = index_set(&spec, 5).unwrap_err();
        assert!(e.to_string().contains("N − K even"), "{e}");
        let e = index_set(&spec, 1).unwrap_err();
        assert!(e.to_string().contains("N ≥ K"), "{e}");
        let spec = FrameSpec::weighted_legendre(0.5).unwrap();
        assert!(index_set(&spec, 7).is_err());
    }

    proptest! {
        #[test]
        fn index_sets_are_nested_prefixes(half in 1usize..40, extra in 1u32..6) {
            for spec in [
                fe2(),
                FrameSpec::aug_fourier(extra).unwrap(),
                FrameSpec::weighted_legendre(0.5).unwrap(),
                FrameSpec::aug_ortho(),
            ] {
                // Walk admissible sizes from the smallest upward.
                let sizes: Vec<usize> = match &spec {
                    FrameSpec::FourierExt { .. } | FrameSpec::WeightedLegendre { .. } =>
                        (1..=half).map(|m| 2 * m).collect(),
                    FrameSpec::AugFourier { k_extra } =>
                        (0..=half).map(|m| *k_extra as usize + 2 * m).collect(),
                    FrameSpec::AugOrtho => (1..=half).collect(),
                };
                let largest = index_set(&spec, *sizes.last().unwrap()).unwrap();
                for &n in &sizes {
                    let set = index_set(&spec, n).unwrap();
                    prop_assert_eq!(set.len(), n);
                    prop_assert_eq!(&set[..], &largest[..n]);
                }
            }
        }
    }

    #[test]
    fn evaluate_constant_fourier_element() {
        let v = evaluate(&fe2(), FrameIndex::Fourier(0), &0.3f64, 53).unwrap();
        assert!((v.re - 0.5f64.sqrt()).abs() < 1e-16);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn evaluate_legendre_element_at_right_endpoint() {
        let spec = FrameSpec::aug_fourier(2).unwrap();
        let v = evaluate(&spec, FrameIndex::Legendre(1), &1.0f64, 53).unwrap();
        assert!((v.re - 1.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn evaluate_weighted_element_matches_direct_product() {
        // Independent formula: (1+t)^α √(k+½) P_2(t), P_2 = (3t²−1)/2.
        let spec = FrameSpec::weighted_legendre(0.5).unwrap();
        let t = 0.5f64;
        let v = evaluate(&spec, FrameIndex::Weighted(2), &t, 53).unwrap();
        let want = 1.5f64.sqrt() * 2.5f64.sqrt() * (3.0 * t * t - 1.0) / 2.0;
        assert!((v.re - want).abs() < 1e-15, "{} vs {want}", v.re);
    }

    #[test]
    fn evaluate_rejects_points_outside_domain() {
        let e = evaluate(&fe2(), FrameIndex::Fourier(1), &0.75f64, 53).unwrap_err();
        assert!(matches!(e, FrameError::OutsideDomain { .. }));
    }

    #[test]
    fn fe_gram_entries_match_closed_form() {
        let g00 = pair_inner_product::<f64>(&fe2(), FrameIndex::Fourier(0), FrameIndex::Fourier(0), 53)
            .unwrap();
        assert_eq!(g00.re, 0.5);
        let g01 = pair_inner_product::<f64>(&fe2(), FrameIndex::Fourier(0), FrameIndex::Fourier(1), 53)
            .unwrap();
        assert!((g01.re - 1.0 / std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn augf_trivial_inner_products() {
        let spec = FrameSpec::aug_fourier(3).unwrap();
        let d = pair_inner_product::<f64>(&spec, FrameIndex::Fourier(2), FrameIndex::Fourier(2), 53)
            .unwrap();
        assert_eq!((d.re, d.im), (1.0, 0.0));
        let z = pair_inner_product::<f64>(&spec, FrameIndex::Fourier(5), FrameIndex::Fourier(-3), 53)
            .unwrap();
        assert!(z.is_zero());
        let z = pair_inner_product::<f64>(&spec, FrameIndex::Fourier(0), FrameIndex::Legendre(2), 53)
            .unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn synthetic_family_entries_follow_the_law() {
        let spec = FrameSpec::aug_ortho();
        let gg = pair_inner_product::<f64>(&spec, FrameIndex::Extra, FrameIndex::Extra, 53).unwrap();
        assert!((gg.re - 1.0).abs() < 1e-15);
        let g3 = pair_inner_product::<f64>(&spec, FrameIndex::Extra, FrameIndex::Ortho(3), 53)
            .unwrap();
        assert!((g3.re - 90f64.sqrt() / std::f64::consts::PI.powi(2) / 9.0).abs() < 1e-16);
        let oo = pair_inner_product::<f64>(&spec, FrameIndex::Ortho(2), FrameIndex::Ortho(2), 53)
            .unwrap();
        assert_eq!((oo.re, oo.im), (1.0, 0.0));
    }

    /// Oracle: the defining integral ∫_Ω φ_j conj(φ_i) dt by adaptive
    /// quadrature at a tolerance well below the comparison threshold.
    fn quadrature_oracle(spec: &FrameSpec, i: FrameIndex, j: FrameIndex) -> Cplx<f64> {
        let (lo, hi) = spec.domain().unwrap();
        let grade = matches!(i, FrameIndex::Weighted(_)) || matches!(j, FrameIndex::Weighted(_));
        let f = |t: &f64| {
            let a = evaluate(spec, j, t, 53).unwrap();
            let b = evaluate(spec, i, t, 53).unwrap();
            a.mul_conj(&b)
        };
        let tol = 1e-15;
        let (val, _) = adaptive_integrate(&f, lo, hi, grade, false, &tol, 53).unwrap();
        val
    }

    fn rel_close(a: &Cplx<f64>, b: &Cplx<f64>, tol: f64) -> bool {
        let scale = a.abs().max(b.abs()).max(1e-3);
        a.sub(b).abs() <= tol * scale
    }

    #[test]
    fn representative_inner_products_match_quadrature_oracle() {
        let fe = fe2();
        for (i, j) in [(0i64, 0i64), (1, 1), (0, 3), (-2, 5), (4, -4)] {
            let got =
                pair_inner_product::<f64>(&fe, FrameIndex::Fourier(i), FrameIndex::Fourier(j), 53)
                    .unwrap();
            let want = quadrature_oracle(&fe, FrameIndex::Fourier(i), FrameIndex::Fourier(j));
            assert!(rel_close(&got, &want, 1e-13), "fe ({i},{j}): {got:?} vs {want:?}");
        }

        let augf = FrameSpec::aug_fourier(4).unwrap();
        for (k, n) in [(1u32, 1i64), (2, -3), (3, 2), (4, 7), (2, 0)] {
            let got = pair_inner_product::<f64>(
                &augf,
                FrameIndex::Fourier(n),
                FrameIndex::Legendre(k),
                53,
            )
            .unwrap();
            let want = quadrature_oracle(&augf, FrameIndex::Fourier(n), FrameIndex::Legendre(k));
            assert!(rel_close(&got, &want, 1e-13), "augf ({k},{n}): {got:?} vs {want:?}");
        }

        let wl = FrameSpec::weighted_legendre(0.5).unwrap();
        for (m, n) in [(1u32, 1u32), (1, 2), (3, 5), (2, 2)] {
            let got = pair_inner_product::<f64>(
                &wl,
                FrameIndex::Weighted(m),
                FrameIndex::Weighted(n),
                53,
            )
            .unwrap();
            let want = quadrature_oracle(&wl, FrameIndex::Weighted(m), FrameIndex::Weighted(n));
            assert!(rel_close(&got, &want, 1e-13), "wl ψψ ({m},{n}): {got:?} vs {want:?}");

            let got = pair_inner_product::<f64>(
                &wl,
                FrameIndex::Legendre(m),
                FrameIndex::Weighted(n),
                53,
            )
            .unwrap();
            let want = quadrature_oracle(&wl, FrameIndex::Legendre(m), FrameIndex::Weighted(n));
            assert!(rel_close(&got, &want, 1e-13), "wl φψ ({m},{n}): {got:?} vs {want:?}");
        }
    }

    proptest! {
        #[test]
        fn hermitian_symmetry_is_exact(m in -8i64..8, n in -8i64..8, k in 1u32..5, l in 1u32..5) {
            let fe = fe2();
            let a = pair_inner_product::<f64>(&fe, FrameIndex::Fourier(m), FrameIndex::Fourier(n), 53).unwrap();
            let b = pair_inner_product::<f64>(&fe, FrameIndex::Fourier(n), FrameIndex::Fourier(m), 53).unwrap();
            prop_assert_eq!(a.re, b.re);
            prop_assert_eq!(a.im, -b.im);

            let augf = FrameSpec::aug_fourier(4).unwrap();
            let a = pair_inner_product::<f64>(&augf, FrameIndex::Fourier(m), FrameIndex::Legendre(k), 53).unwrap();
            let b = pair_inner_product::<f64>(&augf, FrameIndex::Legendre(k), FrameIndex::Fourier(m), 53).unwrap();
            prop_assert_eq!(a.re, b.re);
            prop_assert_eq!(a.im, -b.im);

            let wl = FrameSpec::weighted_legendre(0.5).unwrap();
            let a = pair_inner_product::<f64>(&wl, FrameIndex::Legendre(k), FrameIndex::Weighted(l), 53).unwrap();
            let b = pair_inner_product::<f64>(&wl, FrameIndex::Weighted(l), FrameIndex::Legendre(k), 53).unwrap();
            prop_assert_eq!(a.re, b.re);
            prop_assert_eq!(a.im, -b.im);
        }
    }

    #[test]
    fn mp_inner_products_agree_with_f64_to_double_accuracy() {
        let spec = FrameSpec::aug_fourier(3).unwrap();
        let a = pair_inner_product::<f64>(&spec, FrameIndex::Fourier(4), FrameIndex::Legendre(3), 53)
            .unwrap();
        let b = pair_inner_product::<Float>(
            &spec,
            FrameIndex::Fourier(4),
            FrameIndex::Legendre(3),
            192,
        )
        .unwrap();
        assert!((a.re - b.re.to_f64()).abs() < 1e-14);
        assert!((a.im - b.im.to_f64()).abs() < 1e-14);
    }

    /// Partial sums of |⟨f,φ_n⟩|² for f supported inside Ω approach ‖f‖²
    /// from below (the restricted Fourier family is tight with A = B = 1).
    #[test]
    fn fe_partial_frame_sums_approach_norm_from_below() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5EED);
        let t_ratio = 2.0;
        // Smooth bump vanishing quadratically at ±1/T keeps Fourier
        // coefficients O(n^{-2}) so the tail beyond |n| = 2000 is tiny.
        let coeffs: Vec<(f64, f64)> =
            (0..5).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.0..3.0))).collect();
        let f = |t: f64| -> f64 {
            let window = (1.0 - (t_ratio * t).powi(2)).powi(2);
            let mut v = 0.0;
            for (j, (a, th)) in coeffs.iter().enumerate() {
                v += a * ((j as f64 + 1.0) * t + th).cos();
            }
            window * v
        };

        // Composite fixed Gauss–Legendre grid over Ω, fine enough to resolve
        // mode 2000 (≥ 6 nodes per wavelength).
        let panels = 256;
        let rule = gauss_legendre::<f64>(24, 53).unwrap();
        let lo = -1.0 / t_ratio;
        let h = (2.0 / t_ratio) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * rule.len());
        let mut wts = Vec::with_capacity(panels * rule.len());
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push(c + 0.5 * h * x);
                wts.push(0.5 * h * w);
            }
        }
        let fvals: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
        let norm_sq: f64 = fvals.iter().zip(&wts).map(|(v, w)| v * v * w).sum();

        // ⟨f, φ_n⟩ for all |n| ≤ 2000 by phase recurrence at each node.
        let nmax = 2000i64;
        let mut sum_sq = 0.0;
        let inv_sqrt2 = 0.5f64.sqrt();
        let mut phase: Vec<(f64, f64)> = nodes
            .iter()
            .map(|&t| {
                let th = std::f64::consts::PI * nmax as f64 * t;
                // Start at e^{-iπ(-nmax)t} and step down by e^{-iπt}… the
                // recurrence multiplies by conj(step) each mode.
                (th.cos(), th.sin())
            })
            .collect();
        let steps: Vec<(f64, f64)> = nodes
            .iter()
            .map(|&t| {
                let th = std::f64::consts::PI * t;
                (th.cos(), -th.sin())
            })
            .collect();
        for _n in -nmax..=nmax {
            let mut re = 0.0;
            let mut im = 0.0;
            for i in 0..nodes.len() {
                let w = wts[i] * fvals[i] * inv_sqrt2;
                re += w * phase[i].0;
                im += w * phase[i].1;
            }
            sum_sq += re * re + im * im;
            for i in 0..nodes.len() {
                let (c, s) = phase[i];
                let (sc, ss) = steps[i];
                phase[i] = (c * sc - s * ss, c * ss + s * sc);
            }
        }

        let rel = (norm_sq - sum_sq) / norm_sq;
        assert!(rel > -1e-12, "partial sum exceeded the norm: rel = {rel}");
        assert!(rel < 1e-7, "tail too large: rel = {rel}");
    }
}
