//! Sweep drivers over the (family, target, N, M, ε, method) grid: spectrum
//! dumps, condition-number growth with theoretical overlays, coefficient-norm
//! tables, and error/oversampling sweeps. Each driver walks its parameter
//! grid through a work pool, assembles the results in deterministic grid
//! order, and hands back flat records ready for CSV serialization.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use rug::Float;
use thiserror::Error;

use crate::approx::{
    default_rhs_tol, dual_coefficients, error_l2, project_exact, project_oversampled,
    project_tsvd, ApproxError, FrameApproximant, Method,
};
use crate::frames::{index_set, FrameError, FrameSpec, TargetFunction};
use crate::gram::{
    assemble_square, auto_precision, bind_target, forecast_log2_kappa, required_bits,
};
use crate::mp::{norm2, Real};
use crate::quadrature::Scalar;
use crate::regsolve::{hermitian_eig, solve_regularized, SolveError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error("no admissible grid points: {what}")]
    EmptyGrid { what: &'static str },
}

/// How each grid point picks its working precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecisionRule {
    /// IEEE double (53 bits).
    Double,
    /// A fixed bit count for every point.
    Fixed(u32),
    /// The per-N default that doubles the conditioning forecast.
    Auto,
}

impl PrecisionRule {
    pub fn bits_for(&self, spec: &FrameSpec, n: usize) -> u32 {
        match self {
            PrecisionRule::Double => 53,
            PrecisionRule::Fixed(bits) => *bits,
            PrecisionRule::Auto => auto_precision(spec, n),
        }
    }
}

/// Options shared by the sweep drivers. Wall times go into the records only
/// when `timing` is set, so that a default run of the same configuration
/// serializes to a byte-identical file; progress messages always carry the
/// measured time (they are diagnostics, not artifacts).
#[derive(Clone, Copy, Default)]
pub struct SweepOptions<'a> {
    pub timing: bool,
    pub progress: Option<&'a (dyn Fn(&str) + Sync)>,
}

impl SweepOptions<'_> {
    fn report(&self, msg: &str) {
        if let Some(p) = self.progress {
            p(msg);
        }
    }

    fn stamp(&self, started: Instant) -> Option<u64> {
        self.timing.then(|| started.elapsed().as_millis() as u64)
    }
}

/// One row of sweep output. `None` fields serialize as `NA`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub family: String,
    pub params: String,
    pub f_id: Option<String>,
    pub n: usize,
    pub m: Option<usize>,
    pub eps: Option<f64>,
    pub method: Option<&'static str>,
    pub l2_error: Option<f64>,
    pub coeff_norm: Option<f64>,
    pub a_n: Option<f64>,
    pub b_n: Option<f64>,
    pub kappa: Option<f64>,
    pub rank_kept: Option<usize>,
    pub precision_bits: u32,
    pub wall_time_ms: Option<u64>,
}

pub const CSV_HEADER: &str = "family,params,f_id,N,M,eps,method,l2_error,coeff_norm,\
A_N,B_N,kappa,rank_kept,precision_bits,wall_time_ms";

fn na_real(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| format!("{v:e}"))
}

fn na_int<T: std::fmt::Display>(x: Option<T>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

fn na_str(x: Option<&str>) -> String {
    match x {
        Some(s) if !s.is_empty() => s.into(),
        _ => "NA".into(),
    }
}

impl SweepRecord {
    /// Identity-only row for a grid point; numeric fields start absent.
    pub fn blank(spec: &FrameSpec, n: usize, prec: u32) -> Self {
        SweepRecord {
            family: spec.family_id().into(),
            params: spec.params_string(),
            f_id: None,
            n,
            m: None,
            eps: None,
            method: None,
            l2_error: None,
            coeff_norm: None,
            a_n: None,
            b_n: None,
            kappa: None,
            rank_kept: None,
            precision_bits: prec,
            wall_time_ms: None,
        }
    }

    /// Comma-separated row under [`CSV_HEADER`]; reals print as shortest
    /// round-trip decimals in scientific form, absent fields as `NA`.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.family,
            na_str(Some(&self.params)),
            na_str(self.f_id.as_deref()),
            self.n,
            na_int(self.m),
            na_real(self.eps),
            na_str(self.method),
            na_real(self.l2_error),
            na_real(self.coeff_norm),
            na_real(self.a_n),
            na_real(self.b_n),
            na_real(self.kappa),
            na_int(self.rank_kept),
            self.precision_bits,
            na_int(self.wall_time_ms),
        )
    }
}

/// Serializes records as CSV: exact header, LF line ends, UTF-8.
pub fn write_csv(records: &[SweepRecord], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    Ok(())
}

/// Gram spectrum of the truncated family, descending. No precision gate:
/// watching the plunge region collapse into rounding noise at low precision
/// is exactly what this experiment is for.
pub fn spectrum_experiment<R: Scalar>(
    spec: &FrameSpec,
    n: usize,
    prec: u32,
) -> Result<Vec<f64>, ExperimentError> {
    let sys = assemble_square::<R>(spec, n, prec)?;
    let fact = hermitian_eig(&sys.matrix, prec)?;
    Ok(fact.values.iter().map(Real::to_f64).collect())
}

/// Eigenvalue-resolution gate for condition studies: the precision must
/// cover the spectrum's dynamic range with a little headroom, or A_N comes
/// back as rounding noise and κ is fiction.
fn spectrum_precision_gate(spec: &FrameSpec, n: usize, prec: u32) -> Result<(), SolveError> {
    let needed = forecast_log2_kappa(spec, n).ceil().max(0.0) as i64 + 8;
    if (prec as i64) < needed {
        return Err(SolveError::PrecisionRefusal {
            required: needed as u32,
            available: prec,
        });
    }
    Ok(())
}

/// The family's conditioning growth law, evaluated at N: E(T)^N for the
/// extended Fourier family, N^{2K−1} for the augmented one, 4^N for the
/// weighted pairs, and the exact arrow-matrix value for the
/// coefficient-space family.
pub fn theory_lower_bound(spec: &FrameSpec, n: usize) -> f64 {
    match spec {
        FrameSpec::FourierExt { t_ratio } => {
            let theta = std::f64::consts::PI / (4.0 * t_ratio);
            let e = (theta.cos() / theta.sin()).powi(2);
            e.powi(n as i32)
        }
        FrameSpec::AugFourier { k_extra } => (n as f64).powi(2 * *k_extra as i32 - 1),
        FrameSpec::WeightedLegendre { .. } => 4f64.powi(n as i32),
        FrameSpec::AugOrtho => forecast_log2_kappa(spec, n).exp2(),
    }
}

/// Condition-number sweep across N.
#[derive(Clone, Debug)]
pub struct ConditionSweep {
    pub records: Vec<SweepRecord>,
    /// Growth-law overlay, one value per record.
    pub theory: Vec<f64>,
}

/// A_N, B_N and κ = B_N/A_N per admissible N, plus the growth-law overlay.
/// Inadmissible N are skipped; insufficient precision is refused.
pub fn condition_sweep<R: Scalar>(
    spec: &FrameSpec,
    n_list: &[usize],
    rule: PrecisionRule,
    opts: &SweepOptions,
) -> Result<ConditionSweep, ExperimentError> {
    let grid: Vec<usize> = n_list
        .iter()
        .copied()
        .filter(|&n| index_set(spec, n).is_ok())
        .collect();
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid {
            what: "no N in the list is admissible for this family",
        });
    }
    let records = grid
        .par_iter()
        .map(|&n| {
            let started = Instant::now();
            let prec = rule.bits_for(spec, n);
            spectrum_precision_gate(spec, n, prec)?;
            let sys = assemble_square::<R>(spec, n, prec)?;
            let fact = hermitian_eig(&sys.matrix, prec)?;
            let a_n = fact.values.last().expect("nonempty spectrum").to_f64();
            let b_n = fact.values[0].to_f64();
            let mut rec = SweepRecord::blank(spec, n, prec);
            rec.a_n = Some(a_n);
            rec.b_n = Some(b_n);
            rec.kappa = Some(b_n / a_n);
            rec.wall_time_ms = opts.stamp(started);
            opts.report(&format!(
                "N={n} done ({} ms)",
                started.elapsed().as_millis()
            ));
            Ok(rec)
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let theory = grid.iter().map(|&n| theory_lower_bound(spec, n)).collect();
    Ok(ConditionSweep { records, theory })
}

/// Least-squares line y ≈ slope·x + intercept.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "a line fit needs at least two points");
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}

fn kappa_points(records: &[SweepRecord]) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter_map(|r| r.kappa.map(|k| (r.n as f64, k.ln())))
        .collect()
}

/// Fitted per-unit-N growth of ln κ over the last `window` κ-carrying
/// records (geometric growth shows up as a constant slope here).
pub fn log_kappa_slope_per_n(records: &[SweepRecord], window: usize) -> Option<f64> {
    let pts = kappa_points(records);
    if pts.len() < 2 {
        return None;
    }
    let tail = &pts[pts.len().saturating_sub(window.max(2))..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    Some(fit_line(&xs, &ys).0)
}

/// Fitted slope of ln κ against ln N over the last `window` κ-carrying
/// records (algebraic growth N^p shows up as slope p).
pub fn log_log_kappa_slope(records: &[SweepRecord], window: usize) -> Option<f64> {
    let pts = kappa_points(records);
    if pts.len() < 2 {
        return None;
    }
    let tail = &pts[pts.len().saturating_sub(window.max(2))..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = tail.iter().map(|(x, y)| (x.ln(), *y)).unzip();
    Some(fit_line(&xs, &ys).0)
}

/// Coefficient-norm table: ‖x‖ of the exact projection for each target at
/// each N, with the per-N condition number alongside. A grid point whose
/// precision fails the solve gate is kept as a refusal row (numeric fields
/// NA) rather than aborting the table.
pub fn coefficient_table<R: Scalar>(
    spec: &FrameSpec,
    targets: &[TargetFunction],
    n_list: &[usize],
    rule: PrecisionRule,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>, ExperimentError> {
    let grid: Vec<usize> = n_list
        .iter()
        .copied()
        .filter(|&n| index_set(spec, n).is_ok())
        .collect();
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid {
            what: "no N in the list is admissible for this family",
        });
    }
    let nested = grid
        .par_iter()
        .map(|&n| {
            let started = Instant::now();
            let prec = rule.bits_for(spec, n);
            let required = required_bits(spec, n);
            if prec < required {
                opts.report(&format!(
                    "N={n} refused: exact solve needs ≥ {required} bits, have {prec}"
                ));
                let rows = targets
                    .iter()
                    .map(|f| {
                        let mut rec = SweepRecord::blank(spec, n, prec);
                        rec.f_id = Some(f.id());
                        rec.method = Some("exact");
                        rec.wall_time_ms = opts.stamp(started);
                        rec
                    })
                    .collect::<Vec<_>>();
                return Ok(rows);
            }
            let sys = assemble_square::<R>(spec, n, prec)?;
            let fact = hermitian_eig(&sys.matrix, prec)?;
            let a_n = fact.values.last().expect("nonempty spectrum").to_f64();
            let b_n = fact.values[0].to_f64();
            let tol = default_rhs_tol::<R>(spec, n, prec);
            let mut rows = Vec::with_capacity(targets.len());
            for f in targets {
                let bound = bind_target(sys.clone(), f, &tol)?;
                let y = bound.rhs.as_ref().expect("target just bound");
                let sol = solve_regularized(&fact, y, 0.0);
                let mut rec = SweepRecord::blank(spec, n, prec);
                rec.f_id = Some(f.id());
                rec.method = Some("exact");
                rec.coeff_norm = Some(norm2(&sol.coeffs).to_f64());
                rec.a_n = Some(a_n);
                rec.b_n = Some(b_n);
                rec.kappa = Some(b_n / a_n);
                rec.wall_time_ms = opts.stamp(started);
                rows.push(rec);
            }
            opts.report(&format!(
                "N={n} done ({} ms)",
                started.elapsed().as_millis()
            ));
            Ok(rows)
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Approximation methods an error sweep can exercise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMethod {
    /// Exact projection at the precision rule (multiprecision).
    Exact,
    /// ε-truncated square solve at double precision.
    Tsvd,
    /// Canonical-dual analysis coefficients at double precision.
    Dual,
}

impl SweepMethod {
    pub fn id(&self) -> &'static str {
        match self {
            SweepMethod::Exact => "exact",
            SweepMethod::Tsvd => "tsvd",
            SweepMethod::Dual => "dual",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Some(match id {
            "exact" => SweepMethod::Exact,
            "tsvd" => SweepMethod::Tsvd,
            "dual" => SweepMethod::Dual,
            _ => return None,
        })
    }
}

/// Stop tolerance handed to the dual-coefficient path: analysis quadrature
/// tolerance for tight families, update-norm stop for the frame algorithm
/// (which halts earlier on its own if it hits the truncation floor).
const DUAL_SWEEP_TOL: f64 = 1e-13;

/// L² error of a double-precision approximant, measured after the exact
/// lift to 128 bits so quadrature noise sits far below any plateau the
/// sweep could exhibit.
fn measure_error_f64(
    f: &TargetFunction,
    a: &FrameApproximant<f64>,
) -> Result<f64, ExperimentError> {
    let lifted = a.lift::<Float>(128);
    let tol = Float::with_val(128, 1e-40);
    Ok(error_l2(f, &lifted, &tol)?.to_f64())
}

/// L² error of a multiprecision approximant at its own precision.
fn measure_error_mp(
    f: &TargetFunction,
    a: &FrameApproximant<Float>,
) -> Result<f64, ExperimentError> {
    let tol = Float::with_val(a.prec, 1e-40);
    Ok(error_l2(f, a, &tol)?.to_f64())
}

/// Error-versus-N sweep. The exact method runs at `exact_rule` (Auto unless
/// told otherwise); the regularized and dual methods run at double, with one
/// factorization per N shared across every ε. Emits records grouped by N in
/// grid order: exact first, then tsvd per ε, then dual.
pub fn error_sweep(
    spec: &FrameSpec,
    f: &TargetFunction,
    n_list: &[usize],
    eps_list: &[f64],
    methods: &[SweepMethod],
    exact_rule: PrecisionRule,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>, ExperimentError> {
    let grid: Vec<usize> = n_list
        .iter()
        .copied()
        .filter(|&n| index_set(spec, n).is_ok())
        .collect();
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid {
            what: "no N in the list is admissible for this family",
        });
    }
    let nested = grid
        .par_iter()
        .map(|&n| {
            let started = Instant::now();
            let mut rows = Vec::new();
            if methods.contains(&SweepMethod::Exact) {
                let prec = exact_rule.bits_for(spec, n);
                let approximant = project_exact::<Float>(spec, n, f, prec)?;
                let mut rec = SweepRecord::blank(spec, n, prec);
                rec.f_id = Some(f.id());
                rec.method = Some(SweepMethod::Exact.id());
                rec.l2_error = Some(measure_error_mp(f, &approximant)?);
                rec.coeff_norm = Some(approximant.coeff_norm().to_f64());
                rec.wall_time_ms = opts.stamp(started);
                rows.push(rec);
            }
            if methods.contains(&SweepMethod::Tsvd) {
                let sys = assemble_square::<f64>(spec, n, 53)?;
                let sys = bind_target(sys, f, &default_rhs_tol::<f64>(spec, n, 53))?;
                let fact = hermitian_eig(&sys.matrix, 53)?;
                let y = sys.rhs.as_ref().expect("target just bound");
                for &eps in eps_list {
                    let sol = solve_regularized(&fact, y, eps);
                    let approximant = FrameApproximant {
                        spec: spec.clone(),
                        indices: sys.cols.clone(),
                        coeffs: sol.coeffs,
                        method: Method::Tsvd { eps },
                        prec: 53,
                        rank_kept: Some(sol.rank_kept),
                    };
                    let mut rec = SweepRecord::blank(spec, n, 53);
                    rec.f_id = Some(f.id());
                    rec.eps = Some(eps);
                    rec.method = Some(SweepMethod::Tsvd.id());
                    rec.l2_error = Some(measure_error_f64(f, &approximant)?);
                    rec.coeff_norm = Some(approximant.coeff_norm().to_f64());
                    rec.rank_kept = Some(sol.rank_kept);
                    rec.wall_time_ms = opts.stamp(started);
                    rows.push(rec);
                }
            }
            if methods.contains(&SweepMethod::Dual) {
                let approximant = dual_coefficients::<f64>(spec, n, f, DUAL_SWEEP_TOL, 53)?;
                let mut rec = SweepRecord::blank(spec, n, 53);
                rec.f_id = Some(f.id());
                rec.method = Some(SweepMethod::Dual.id());
                rec.l2_error = Some(measure_error_f64(f, &approximant)?);
                rec.coeff_norm = Some(approximant.coeff_norm().to_f64());
                rec.wall_time_ms = opts.stamp(started);
                rows.push(rec);
            }
            opts.report(&format!(
                "N={n} done ({} ms)",
                started.elapsed().as_millis()
            ));
            Ok(rows)
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Oversampling sweep at fixed ε: for each γ and N, the ε-truncated least
/// squares on the γN×N system, at double precision. γ = 1 goes through the
/// square-solve path itself, so its records reproduce an error sweep's tsvd
/// rows bit for bit. Records are grouped by γ, then N.
pub fn oversample_sweep(
    spec: &FrameSpec,
    f: &TargetFunction,
    gammas: &[u32],
    n_list: &[usize],
    eps: f64,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>, ExperimentError> {
    let mut grid: Vec<(u32, usize)> = Vec::new();
    for &gamma in gammas {
        for &n in n_list {
            let m = gamma as usize * n;
            if gamma >= 1 && index_set(spec, n).is_ok() && index_set(spec, m).is_ok() {
                grid.push((gamma, n));
            }
        }
    }
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid {
            what: "no (gamma, N) pair is admissible for this family",
        });
    }
    grid.par_iter()
        .map(|&(gamma, n)| {
            let started = Instant::now();
            let m = gamma as usize * n;
            let approximant = if m == n {
                project_tsvd::<f64>(spec, n, f, eps, 53)?
            } else {
                project_oversampled::<f64>(spec, m, n, f, eps, 53)?
            };
            let mut rec = SweepRecord::blank(spec, n, 53);
            rec.f_id = Some(f.id());
            rec.m = Some(m);
            rec.eps = Some(eps);
            rec.method = Some(if m == n { "tsvd" } else { "oversampled" });
            rec.l2_error = Some(measure_error_f64(f, &approximant)?);
            rec.coeff_norm = Some(approximant.coeff_norm().to_f64());
            rec.rank_kept = approximant.rank_kept;
            rec.wall_time_ms = opts.stamp(started);
            opts.report(&format!(
                "N={n} done ({} ms)",
                started.elapsed().as_millis()
            ));
            Ok(rec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::TargetFunction as TF;

    fn fe2() -> FrameSpec {
        FrameSpec::fourier_ext(2.0).unwrap()
    }

    fn quiet() -> SweepOptions<'static> {
        SweepOptions::default()
    }

    #[test]
    fn csv_header_matches_the_interface_contract() {
        assert_eq!(
            CSV_HEADER,
            "family,params,f_id,N,M,eps,method,l2_error,coeff_norm,A_N,B_N,kappa,\
rank_kept,precision_bits,wall_time_ms"
        );
    }

    #[test]
    fn csv_line_encodes_absent_fields_as_na() {
        let mut rec = SweepRecord::blank(&fe2(), 12, 53);
        rec.f_id = Some("exp".into());
        rec.eps = Some(1e-8);
        rec.method = Some("tsvd");
        rec.l2_error = Some(0.001953125);
        rec.rank_kept = Some(7);
        assert_eq!(
            rec.csv_line(),
            "fe,T=2,exp,12,NA,1e-8,tsvd,1.953125e-3,NA,NA,NA,NA,7,53,NA"
        );
        let blank = SweepRecord::blank(&FrameSpec::aug_ortho(), 4, 256);
        assert_eq!(blank.csv_line(), "synth,NA,NA,4,NA,NA,NA,NA,NA,NA,NA,NA,NA,256,NA");
    }

    #[test]
    fn identity_block_spectrum_is_flat_one() {
        // The 1×1 orthonormal block of the augmented family is exactly the
        // identity, entry assembled from the closed-form delta.
        let spec = FrameSpec::aug_fourier(1).unwrap();
        let sigma = spectrum_experiment::<f64>(&spec, 1, 53).unwrap();
        assert_eq!(sigma, vec![1.0]);
        // ⟨g,g⟩ = 1 of the coefficient-space family holds to rounding only:
        // it is 90ζ(4)/π⁴ evaluated in floating point.
        let one = spectrum_experiment::<f64>(&FrameSpec::aug_ortho(), 1, 53).unwrap();
        assert!((one[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn abstract_family_spectrum_matches_arrow_closed_form() {
        let spec = FrameSpec::aug_ortho();
        let n = 50;
        let sigma = spectrum_experiment::<rug::Float>(&spec, n, 192).unwrap();
        let r = {
            let mut acc = 0.0f64;
            for k in 1..n as u32 {
                let c = crate::frames::ortho_coeff::<f64>(k, 53);
                acc += c * c;
            }
            acc.sqrt()
        };
        assert_eq!(sigma.len(), n);
        assert!((sigma[0] - (1.0 + r)).abs() < 1e-13);
        assert!((sigma[n - 1] - (1.0 - r)).abs() < 1e-13);
        for s in &sigma[1..n - 1] {
            assert!((s - 1.0).abs() < 1e-13, "middle eigenvalue {s}");
        }
    }

    #[test]
    fn extension_spectrum_clusters_at_one_and_zero() {
        // Half the modes live on Ω when T = 2: a near-1 cluster of ~N/2,
        // a near-0 cluster, and a thin plunge between them.
        let sigma = spectrum_experiment::<f64>(&fe2(), 50, 53).unwrap();
        let near_one = sigma.iter().filter(|s| **s > 0.9).count();
        let near_zero = sigma.iter().filter(|s| **s < 0.1).count();
        assert!(
            (20..=30).contains(&near_one),
            "near-1 cluster has {near_one} values"
        );
        assert!(
            (14..=26).contains(&near_zero),
            "near-0 cluster has {near_zero} values"
        );
        assert!(
            near_one + near_zero >= 50 - 12,
            "plunge region too wide: {} values",
            50 - near_one - near_zero
        );
        // Descending order and the B ≤ 1 cap.
        for w in sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(sigma[0] <= 1.0 + 1e-12);
    }

    #[test]
    fn condition_growth_matches_the_extension_rate() {
        let sweep = condition_sweep::<f64>(
            &fe2(),
            &[8, 10, 12, 14, 16],
            PrecisionRule::Double,
            &quiet(),
        )
        .unwrap();
        assert_eq!(sweep.records.len(), 5);
        assert_eq!(sweep.theory.len(), 5);
        // κ is exactly B/A of the same record.
        for r in &sweep.records {
            assert_eq!(r.kappa.unwrap(), r.b_n.unwrap() / r.a_n.unwrap());
        }
        // Per-step growth κ(N+2)/κ(N) approaches E(2)² = (3+2√2)².
        let e2 = (3.0 + 2.0 * 2.0f64.sqrt()).powi(2);
        let last = sweep.records[4].kappa.unwrap() / sweep.records[3].kappa.unwrap();
        assert!(
            (last / e2 - 1.0).abs() < 0.15,
            "growth ratio {last} vs E² {e2}"
        );
        // Fitted slope of ln κ per unit N reproduces ln E(2).
        let slope = log_kappa_slope_per_n(&sweep.records, 5).unwrap();
        let want = (3.0 + 2.0 * 2.0f64.sqrt()).ln();
        assert!(
            (slope / want - 1.0).abs() < 0.10,
            "slope {slope} vs ln E {want}"
        );
        // Overlay matches the closed form at N = 8.
        let theta = std::f64::consts::PI / 8.0;
        let e_exact = (theta.cos() / theta.sin()).powi(2);
        assert!((sweep.theory[0] / e_exact.powi(8) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn condition_sweep_refuses_unresolvable_precision() {
        let err = condition_sweep::<f64>(&fe2(), &[40], PrecisionRule::Double, &quiet());
        match err {
            Err(ExperimentError::Solve(SolveError::PrecisionRefusal {
                required,
                available,
            })) => {
                assert_eq!(available, 53);
                assert!(required > 53);
            }
            other => panic!("expected precision refusal, got {other:?}"),
        }
    }

    #[test]
    fn augmented_growth_is_algebraic_with_the_forecast_exponent() {
        let spec = FrameSpec::aug_fourier(2).unwrap();
        let sweep = condition_sweep::<f64>(
            &spec,
            &[16, 24, 32, 48, 64],
            PrecisionRule::Double,
            &quiet(),
        )
        .unwrap();
        let slope = log_log_kappa_slope(&sweep.records, 5).unwrap();
        assert!(
            (2.0..=4.5).contains(&slope),
            "log-log slope {slope}, expected ≈ 2K−1 = 3"
        );
    }

    #[test]
    fn weighted_growth_dominates_its_geometric_floor() {
        let spec = FrameSpec::weighted_legendre(0.5).unwrap();
        let sweep = condition_sweep::<rug::Float>(
            &spec,
            &[6, 8, 10, 12, 14],
            PrecisionRule::Fixed(256),
            &quiet(),
        )
        .unwrap();
        // The 4^N law is a floor: ln κ − N ln 4 must not decrease. (The
        // actual growth is much faster; the floor is what the theory pins.)
        let margins: Vec<f64> = sweep
            .records
            .iter()
            .map(|r| r.kappa.unwrap().ln() - r.n as f64 * 4.0f64.ln())
            .collect();
        for w in margins.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "margin fell: {} -> {}", w[0], w[1]);
        }
        // Overlay column is the floor itself.
        assert!((sweep.theory[1] / 4f64.powi(8) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_rows_follow_the_reference_norms() {
        let table = coefficient_table::<rug::Float>(
            &fe2(),
            &[TF::Exp, TF::Runge16],
            &[10, 20],
            PrecisionRule::Auto,
            &quiet(),
        )
        .unwrap();
        assert_eq!(table.len(), 4);
        // Rows come out N-major in grid order.
        let ids: Vec<(usize, &str)> = table
            .iter()
            .map(|r| (r.n, r.f_id.as_deref().unwrap()))
            .collect();
        assert_eq!(
            ids,
            vec![(10, "exp"), (10, "runge16"), (20, "exp"), (20, "runge16")]
        );
        let norm = |n: usize, id: &str| {
            table
                .iter()
                .find(|r| r.n == n && r.f_id.as_deref() == Some(id))
                .unwrap()
                .coeff_norm
                .unwrap()
        };
        // Reference values for the T = 2 extension at these sizes.
        assert!((norm(10, "exp") / 1.77 - 1.0).abs() < 0.01);
        assert!((norm(20, "exp") / 1.81 - 1.0).abs() < 0.01);
        assert!((norm(10, "runge16") / 2.27 - 1.0).abs() < 0.01);
        assert!((norm(20, "runge16") / 50.5 - 1.0).abs() < 0.01);
        // κ(G₁₀) ≈ 1.84e6 rides along on every N = 10 row.
        let kappa10 = table[0].kappa.unwrap();
        assert!((kappa10 / 1.84e6 - 1.0).abs() < 0.01, "kappa {kappa10}");
    }

    #[test]
    fn refused_table_cells_are_na_with_a_reason() {
        use std::sync::Mutex;
        let lines = Mutex::new(Vec::<String>::new());
        let sink = |msg: &str| lines.lock().unwrap().push(msg.to_string());
        let opts = SweepOptions {
            timing: false,
            progress: Some(&sink),
        };
        let table = coefficient_table::<rug::Float>(
            &fe2(),
            &[TF::Exp],
            &[4, 40],
            PrecisionRule::Fixed(128),
            &opts,
        )
        .unwrap();
        assert_eq!(table.len(), 2);
        // N = 4 fits in 128 bits, N = 40 does not.
        assert!(table[0].coeff_norm.is_some());
        assert!(table[1].coeff_norm.is_none());
        assert!(table[1].kappa.is_none());
        assert_eq!(table[1].csv_line().matches("NA").count(), 9);
        let seen = lines.lock().unwrap().join("\n");
        assert!(seen.contains("N=40 refused"), "progress said: {seen}");
    }

    #[test]
    fn error_sweep_produces_the_expected_rows() {
        let records = error_sweep(
            &fe2(),
            &TF::Runge25,
            &[8, 16],
            &[1e-8],
            &[SweepMethod::Exact, SweepMethod::Tsvd, SweepMethod::Dual],
            PrecisionRule::Auto,
            &quiet(),
        )
        .unwrap();
        assert_eq!(records.len(), 6);
        let at = |n: usize, m: &str| {
            records
                .iter()
                .find(|r| r.n == n && r.method == Some(m))
                .unwrap()
        };
        for r in &records {
            let e = r.l2_error.unwrap();
            assert!(e > 0.0 && e < 1.0, "error {e} out of range");
        }
        // ε below σ_min at N = 8 keeps full rank, so tsvd ≍ exact there.
        assert_eq!(at(8, "tsvd").rank_kept, Some(8));
        let gap = (at(8, "tsvd").l2_error.unwrap() - at(8, "exact").l2_error.unwrap()).abs();
        assert!(gap < 1e-9, "full-rank tsvd strays from exact by {gap}");
        // Exact projections improve with N; dual analysis lags truncation.
        assert!(at(16, "exact").l2_error.unwrap() < at(8, "exact").l2_error.unwrap());
        assert!(at(16, "dual").l2_error.unwrap() > at(16, "tsvd").l2_error.unwrap());
        // Method-absent fields are NA-encoded.
        assert!(at(16, "exact").eps.is_none());
        assert!(at(16, "exact").rank_kept.is_none());
        assert!(at(16, "dual").eps.is_none());
        assert!(at(16, "tsvd").eps.is_some());
    }

    #[test]
    fn unit_oversampling_reuses_the_square_path_bit_for_bit() {
        let spec = fe2();
        let f = TF::Runge25;
        let eps = 1e-8;
        let square = error_sweep(
            &spec,
            &f,
            &[8, 16],
            &[eps],
            &[SweepMethod::Tsvd],
            PrecisionRule::Auto,
            &quiet(),
        )
        .unwrap();
        let over = oversample_sweep(&spec, &f, &[1], &[8, 16], eps, &quiet()).unwrap();
        assert_eq!(square.len(), over.len());
        for (s, o) in square.iter().zip(&over) {
            assert_eq!(o.method, Some("tsvd"));
            assert_eq!(o.m, Some(s.n));
            // Bitwise equality: same computation path end to end.
            assert_eq!(s.l2_error.unwrap().to_bits(), o.l2_error.unwrap().to_bits());
            assert_eq!(
                s.coeff_norm.unwrap().to_bits(),
                o.coeff_norm.unwrap().to_bits()
            );
            assert_eq!(s.rank_kept, o.rank_kept);
        }
    }

    #[test]
    fn oversampling_does_not_hurt_the_error() {
        let records =
            oversample_sweep(&fe2(), &TF::Runge25, &[1, 2], &[16], 1e-8, &quiet()).unwrap();
        assert_eq!(records.len(), 2);
        let e1 = records[0].l2_error.unwrap();
        let e2 = records[1].l2_error.unwrap();
        assert_eq!(records[1].m, Some(32));
        assert_eq!(records[1].method, Some("oversampled"));
        assert!(e2 <= 2.0 * e1, "γ=2 error {e2} vs γ=1 error {e1}");
    }

    #[test]
    fn reruns_serialize_bit_identically() {
        let run = || {
            let records = error_sweep(
                &fe2(),
                &TF::Runge25,
                &[8, 12],
                &[1e-6],
                &[SweepMethod::Tsvd, SweepMethod::Dual],
                PrecisionRule::Auto,
                &quiet(),
            )
            .unwrap();
            let mut buf = Vec::new();
            write_csv(&records, &mut buf).unwrap();
            buf
        };
        assert_eq!(run(), run());
        let sweep = || {
            let s = condition_sweep::<f64>(&fe2(), &[8, 12], PrecisionRule::Double, &quiet())
                .unwrap();
            let mut buf = Vec::new();
            write_csv(&s.records, &mut buf).unwrap();
            buf
        };
        assert_eq!(sweep(), sweep());
    }

    #[test]
    fn fitted_line_recovers_exact_affine_data() {
        let xs = [1.0, 2.0, 3.0, 5.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.5 * x + 0.75).collect();
        let (slope, intercept) = fit_line(&xs, &ys);
        assert!((slope + 2.5).abs() < 1e-12);
        assert!((intercept - 0.75).abs() < 1e-12);
    }

    #[test]
    fn precision_rules_resolve_as_documented() {
        let spec = fe2();
        assert_eq!(PrecisionRule::Double.bits_for(&spec, 40), 53);
        assert_eq!(PrecisionRule::Fixed(192).bits_for(&spec, 40), 192);
        assert_eq!(
            PrecisionRule::Auto.bits_for(&spec, 40),
            auto_precision(&spec, 40)
        );
    }
}
