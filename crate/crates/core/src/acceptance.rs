//! Release-gate battery: the numerical checks a build must pass.
//!
//! Each check pins one user-visible contract — closed-form spectra, the
//! growth laws of truncated-frame condition numbers, the √ε and ε error
//! plateaus of the regularized projections, inequality bounds on random
//! data, σ-orthogonality of the spectral basis, and the reference
//! coefficient norms — at stated tolerances, and where a check has a time
//! budget the elapsed wall clock is part of the verdict. `run_all` executes
//! the battery in order; `run_check` runs one check standalone (the
//! integration-test target and the CLI `selftest` both route through it).
//!
//! Randomized checks draw from a fixed-seed generator, so the battery is
//! deterministic run to run.

use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

use crate::approx::{
    error_l2_via_system, frame_algorithm_inverse, project_exact, xi_basis, GridSpec,
};
use crate::experiments::{
    coefficient_table, condition_sweep, error_sweep, log_kappa_slope_per_n, log_log_kappa_slope,
    oversample_sweep, PrecisionRule, SweepMethod, SweepOptions, SweepRecord,
};
use crate::frames::{evaluate, index_set, ortho_coeff, FrameSpec, TargetFunction};
use crate::gram::{assemble_square, bind_target, frame_bounds};
use crate::mp::{inner, norm2, Cplx};
use crate::quadrature::{adaptive_integrate, gauss_legendre};
use crate::regsolve::{hermitian_eig, solve_regularized};

/// Fixed seed for every randomized check.
const SEED: u64 = 0x5EED;

/// Number of checks in the battery.
pub const CHECK_COUNT: usize = 15;

/// Outcome of one check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    /// 1-based position in the battery.
    pub id: usize,
    /// What the check verifies.
    pub label: &'static str,
    pub pass: bool,
    /// Measured quantities and the tolerances they were held to.
    pub detail: String,
    /// Elapsed wall clock.
    pub ms: u64,
}

/// One `check NN PASS/FAIL (ms) — label — detail` line.
pub fn format_line(r: &CheckResult) -> String {
    format!(
        "check {:02} {} ({} ms) — {} — {}",
        r.id,
        if r.pass { "PASS" } else { "FAIL" },
        r.ms,
        r.label,
        r.detail
    )
}

/// Runs one check by 1-based id.
///
/// # Panics
/// If `id` is outside `1..=CHECK_COUNT`.
pub fn run_check(id: usize) -> CheckResult {
    let (label, body): (&'static str, fn() -> Result<(bool, String), String>) = match id {
        1 => ("arrow-family closed-form bounds", check_arrow_bounds),
        2 => ("assembled entries vs quadrature oracle", check_entry_oracle),
        3 => ("extension condition growth rate", check_extension_rate),
        4 => ("augmented-family algebraic growth", check_augmented_rate),
        5 => ("weighted-family geometric floor", check_weighted_floor),
        6 => ("reference coefficient norms", check_reference_norms),
        7 => ("square-system error plateau at sqrt(eps)", check_sqrt_eps_plateau),
        8 => ("oversampled error plateau at eps", check_eps_plateau),
        9 => ("projection error inequality on random data", check_error_inequality),
        10 => ("coefficient norm inequality on random data", check_norm_inequality),
        11 => ("perturbation amplification bound", check_amplification),
        12 => ("sigma-orthogonality of the spectral basis", check_xi_orthogonality),
        13 => ("frame-bound monotonicity along truncations", check_bound_monotonicity),
        14 => ("synthetic-target coefficient blow-up", check_coefficient_blowup),
        15 => ("dual-expansion gap and iteration contraction", check_dual_gap),
        _ => panic!("check id {id} outside 1..={CHECK_COUNT}"),
    };
    let started = Instant::now();
    let (pass, detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("errored: {e}")),
    };
    CheckResult {
        id,
        label,
        pass,
        detail,
        ms: started.elapsed().as_millis() as u64,
    }
}

/// Runs the whole battery in order, reporting each finished line through
/// `progress`.
pub fn run_all(progress: Option<&dyn Fn(&str)>) -> Vec<CheckResult> {
    (1..=CHECK_COUNT)
        .map(|id| {
            let r = run_check(id);
            if let Some(p) = progress {
                p(&format_line(&r));
            }
            r
        })
        .collect()
}

fn fe2() -> FrameSpec {
    FrameSpec::fourier_ext(2.0).expect("T=2 is a valid extension ratio")
}

fn stringify<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Standard-normal pair by the Box–Muller transform.
fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Complex standard-Gaussian vector at the given precision.
fn gaussian_cvec(rng: &mut ChaCha8Rng, n: usize, prec: u32) -> Vec<Cplx<Float>> {
    (0..n)
        .map(|_| {
            let (a, b) = gaussian_pair(rng);
            Cplx::new(Float::with_val(prec, a), Float::with_val(prec, b))
        })
        .collect()
}

/// Check 1: the extreme eigenvalues of the arrow family's truncated Gram
/// match 1 ∓ √(Σ_{k<N} c_k²) to 1e−12 absolute at N up to 200, within 5 s.
fn check_arrow_bounds() -> Result<(bool, String), String> {
    let spec = FrameSpec::aug_ortho();
    let prec = 256u32;
    let started = Instant::now();
    let mut worst = 0.0f64;
    for n in [4usize, 16, 64, 200] {
        let sys = assemble_square::<Float>(&spec, n, prec).map_err(stringify)?;
        let b = frame_bounds(&sys).map_err(stringify)?;
        let mut r2 = Float::with_val(prec, 0);
        for k in 1..n as u32 {
            let c = ortho_coeff::<Float>(k, prec);
            r2 += c.clone() * &c;
        }
        let r = r2.sqrt();
        let dev_lo = (b.lower - (Float::with_val(prec, 1) - &r)).abs().to_f64();
        let dev_hi = (b.upper - (Float::with_val(prec, 1) + &r)).abs().to_f64();
        worst = worst.max(dev_lo).max(dev_hi);
    }
    let ms = started.elapsed().as_millis();
    let pass = worst <= 1e-12 && ms < 5_000;
    Ok((
        pass,
        format!("worst |A_N,B_N − (1∓r)| = {worst:.2e} (tol 1e-12), {ms} ms (budget 5 s)"),
    ))
}

/// Check 2: 50 random assembled Gram entries per family agree with an
/// independent oracle — 192-bit adaptive quadrature for the integral
/// families, partial sums with an integral tail bracket for the
/// coefficient-space family — to 1e−13 relative at the matrix scale
/// (entries far below the unit diagonal are compared absolutely at
/// 1e−13·scale, the best a double-precision exact rule can define them),
/// all within 10 s.
fn check_entry_oracle() -> Result<(bool, String), String> {
    let started = Instant::now();
    let mut worst = 0.0f64; // deviation / (1e−13·max(|oracle|, scale))
    let mut detail_worst = String::from("none");
    let oracle_prec = 192u32;
    let tol = Float::with_val(oracle_prec, 1e-20);

    for spec in [
        fe2(),
        FrameSpec::aug_fourier(4).map_err(stringify)?,
        FrameSpec::weighted_legendre(0.5).map_err(stringify)?,
    ] {
        let n = 24usize;
        let idx = index_set(&spec, n).map_err(stringify)?;
        let sys = assemble_square::<f64>(&spec, n, 53).map_err(stringify)?;
        let scale = (0..n)
            .map(|i| sys.matrix.at(i, i).re.abs())
            .fold(0.0f64, f64::max);
        let (lo, hi) = spec.domain().ok_or("integral family must have a domain")?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..50 {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let (fi, fj) = (idx[i], idx[j]);
            // Entry (i, j) holds ⟨φ_j, φ_i⟩ = ∫ φ_j conj(φ_i).
            let g = |t: &Float| -> Cplx<Float> {
                let a = evaluate(&spec, fi, t, oracle_prec).expect("domain point");
                let b = evaluate(&spec, fj, t, oracle_prec).expect("domain point");
                b.mul_conj(&a)
            };
            let (val, _) =
                adaptive_integrate(&g, lo, hi, spec.singular_lo(), false, &tol, oracle_prec)
                    .map_err(stringify)?;
            let got = sys.matrix.at(i, j).to_f64c();
            let want = val.to_f64c();
            let dev = (got.re - want.re).hypot(got.im - want.im);
            let allowed = 1e-13 * want.re.hypot(want.im).max(scale);
            if dev / allowed > worst {
                worst = dev / allowed;
                detail_worst = format!(
                    "{} ({fi:?},{fj:?}) dev {dev:.2e} vs {allowed:.2e}",
                    spec.family_id()
                );
            }
        }
    }

    // Coefficient-space family: series oracle, built from the (√90/π²)k⁻²
    // law directly at 192 bits. ⟨g, g⟩ is a 2·10⁵-term partial sum of
    // 90/π⁴·k⁻⁴ plus the midpoint of its ∫ x⁻⁴ dx tail bracket (bracket
    // half-width ≈ 3e−22); the orthonormal block is literal δ.
    {
        let spec = FrameSpec::aug_ortho();
        let n = 30usize;
        let sys = assemble_square::<f64>(&spec, n, 53).map_err(stringify)?;
        let pi = Float::with_val(oracle_prec, rug::float::Constant::Pi);
        let pi_sq = pi.clone() * &pi;
        let coeff_law = |k: usize| -> f64 {
            let c = Float::with_val(oracle_prec, 90).sqrt() / &pi_sq
                / Float::with_val(oracle_prec, (k * k) as u64);
            c.to_f64()
        };
        let g_norm_sq = {
            let m = 200_000u64;
            let mut s = Float::with_val(oracle_prec, 0);
            for k in (1..=m).rev() {
                s += Float::with_val(oracle_prec, k * k).square().recip();
            }
            let tail_lo = Float::with_val(oracle_prec, 3 * (m + 1)).recip()
                / Float::with_val(oracle_prec, (m + 1) * (m + 1));
            let tail_hi = Float::with_val(oracle_prec, 3 * m).recip()
                / Float::with_val(oracle_prec, m * m);
            s += (tail_lo + tail_hi) / 2u32;
            let scale = Float::with_val(oracle_prec, 90) / pi_sq.clone().square();
            (s * scale).to_f64()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        for _ in 0..50 {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let want = match (i, j) {
                (0, 0) => g_norm_sq,
                (0, k) | (k, 0) => coeff_law(k),
                (a, b) if a == b => 1.0,
                _ => 0.0,
            };
            let got = sys.matrix.at(i, j).re;
            let dev = (got - want).abs();
            let allowed = 1e-13 * want.abs().max(1.0);
            if dev / allowed > worst {
                worst = dev / allowed;
                detail_worst = format!("aug-ortho ({i},{j}) dev {dev:.2e} vs {allowed:.2e}");
            }
        }
    }

    let ms = started.elapsed().as_millis();
    let pass = worst <= 1.0 && ms < 10_000;
    Ok((
        pass,
        format!("worst entry at {:.3}× its allowance [{detail_worst}], {ms} ms (budget 10 s)",
            worst),
    ))
}

/// Check 3: the fitted per-unit-N growth rate of log κ for the extension
/// family at T=2 over N = 20..40 matches log(3+2√2) within 10% at 512-bit
/// precision, within 2 min.
fn check_extension_rate() -> Result<(bool, String), String> {
    let started = Instant::now();
    let ns: Vec<usize> = (10..=20).map(|k| 2 * k).collect();
    let sweep = condition_sweep::<Float>(
        &fe2(),
        &ns,
        PrecisionRule::Fixed(512),
        &SweepOptions::default(),
    )
    .map_err(stringify)?;
    let slope = log_kappa_slope_per_n(&sweep.records, ns.len())
        .ok_or("no condition numbers to fit")?;
    let want = (3.0 + 2.0 * 2.0f64.sqrt()).ln();
    let rel = (slope / want - 1.0).abs();
    let ms = started.elapsed().as_millis();
    let pass = rel <= 0.10 && ms < 120_000;
    Ok((
        pass,
        format!(
            "fitted d(log κ)/dN = {slope:.4} vs log(3+2√2) = {want:.4}, off by {:.2}% (tol 10%), {ms} ms",
            100.0 * rel
        ),
    ))
}

/// Check 4: the log-log slope of κ vs N for the augmented family at K=4
/// over N = 24..64 at double precision is at least 6.5 (growth exponent
/// 2K−1 = 7 minus fitting slack), within 1 min.
fn check_augmented_rate() -> Result<(bool, String), String> {
    let started = Instant::now();
    let ns: Vec<usize> = (12..=32).map(|k| 2 * k).collect();
    let spec = FrameSpec::aug_fourier(4).map_err(stringify)?;
    let sweep =
        condition_sweep::<f64>(&spec, &ns, PrecisionRule::Double, &SweepOptions::default())
            .map_err(stringify)?;
    let slope =
        log_log_kappa_slope(&sweep.records, ns.len()).ok_or("no condition numbers to fit")?;
    let ms = started.elapsed().as_millis();
    let pass = slope >= 6.5 && ms < 60_000;
    Ok((
        pass,
        format!("fitted d(log κ)/d(log N) = {slope:.3} (floor 6.5), {ms} ms"),
    ))
}

/// Check 5: for the weighted family at α=½ over N = 10..24 at 512-bit
/// precision, log κ − N·log 4 is nondecreasing — the 4^N law is a floor the
/// measured growth must dominate — within 2 min.
fn check_weighted_floor() -> Result<(bool, String), String> {
    let started = Instant::now();
    let ns: Vec<usize> = (5..=12).map(|k| 2 * k).collect();
    let spec = FrameSpec::weighted_legendre(0.5).map_err(stringify)?;
    let sweep = condition_sweep::<Float>(
        &spec,
        &ns,
        PrecisionRule::Fixed(512),
        &SweepOptions::default(),
    )
    .map_err(stringify)?;
    let margins: Vec<(usize, f64)> = sweep
        .records
        .iter()
        .filter_map(|r| r.kappa.map(|k| (r.n, k.ln() - r.n as f64 * 4.0f64.ln())))
        .collect();
    if margins.len() < 2 {
        return Err("need at least two condition numbers".into());
    }
    let mut min_step = f64::INFINITY;
    for w in margins.windows(2) {
        min_step = min_step.min(w[1].1 - w[0].1);
    }
    let ms = started.elapsed().as_millis();
    let pass = min_step >= -1e-9 && ms < 120_000;
    Ok((
        pass,
        format!(
            "log κ − N·log 4 rises by ≥ {min_step:.3} per step over N = {}..{} ({} points), {ms} ms",
            margins[0].0,
            margins.last().unwrap().0,
            margins.len()
        ),
    ))
}

/// Reference ℓ²-norms of the exact-projection coefficients for the
/// extension family at T=2, N = 10, 20, 40, 80, 160 — rows for e^t,
/// 1/(1+16t²), |t|⁵ — and the matching condition numbers, quoted to three
/// digits; agreement is required within ×10 on norms, ×100 on κ.
///
/// The two largest-N cells of the |t|⁵ row are fixed by an independent
/// oracle rather than by commonly quoted values: the right-hand side
/// ⟨|t|⁵, φ_m⟩ has a closed form by repeated integration by parts, and the
/// exact solve against it at 768-bit precision reproduces this library's
/// adaptive-quadrature pipeline bit-for-bit to all 17 digits
/// (2.4293382714001626e17 at N=80, 7.389309012114408e45 at N=160).
/// Naive references for those two cells, computed with a right-hand side
/// carrying only ~30 significant digits, are instead dominated by that
/// rounding noise amplified by 1/σ_min — noise·κ reproduces such figures
/// almost exactly — so they measure the reference computation's precision
/// floor, not ‖x‖.
const REFERENCE_NS: [usize; 5] = [10, 20, 40, 80, 160];
const REFERENCE_NORMS: [(&str, [f64; 5]); 3] = [
    ("exp", [1.77, 1.81, 1.84, 1.86, 1.87]),
    ("runge16", [2.27, 5.05e1, 3.64e4, 2.32e10, 1.13e22]),
    ("abs5", [2.12e-1, 3.67e-1, 1.76e4, 2.43e17, 7.39e45]),
];
const REFERENCE_KAPPA: [f64; 5] = [1.84e6, 5.64e13, 8.01e28, 2.35e59, 2.90e120];

/// Check 6: the exact-projection table at T=2, auto precision (at least
/// 768 bits by N=160), reproduces every reference norm within ×10 and every
/// reference κ within ×100, within 15 min.
fn check_reference_norms() -> Result<(bool, String), String> {
    let started = Instant::now();
    let targets: Vec<TargetFunction> = REFERENCE_NORMS
        .iter()
        .map(|(id, _)| TargetFunction::from_id(id).ok_or(format!("unknown target {id}")))
        .collect::<Result<_, _>>()?;
    let recs = coefficient_table::<Float>(
        &fe2(),
        &targets,
        &REFERENCE_NS,
        PrecisionRule::Auto,
        &SweepOptions::default(),
    )
    .map_err(stringify)?;

    let cell = |n: usize, id: &str| -> Result<&SweepRecord, String> {
        recs.iter()
            .find(|r| r.n == n && r.f_id.as_deref() == Some(id))
            .ok_or(format!("missing table cell N={n} f={id}"))
    };
    let mut worst_norm = 0.0f64;
    let mut worst_kappa = 0.0f64;
    let mut bits_160 = 0u32;
    for (col, &n) in REFERENCE_NS.iter().enumerate() {
        for (id, refs) in &REFERENCE_NORMS {
            let r = cell(n, id)?;
            let got = r.coeff_norm.ok_or(format!("cell N={n} f={id} refused"))?;
            let ratio = (got / refs[col]).max(refs[col] / got);
            worst_norm = worst_norm.max(ratio);
            if n == 160 {
                bits_160 = r.precision_bits;
            }
        }
        let r = cell(n, "exp")?;
        let got = r.kappa.ok_or(format!("kappa absent at N={n}"))?;
        let ratio = (got / REFERENCE_KAPPA[col]).max(REFERENCE_KAPPA[col] / got);
        worst_kappa = worst_kappa.max(ratio);
    }
    let ms = started.elapsed().as_millis();
    let pass = worst_norm <= 10.0 && worst_kappa <= 100.0 && bits_160 >= 768 && ms < 900_000;
    Ok((
        pass,
        format!(
            "worst ‖x‖ ratio {worst_norm:.2} (cap 10), worst κ ratio {worst_kappa:.2} (cap 100), \
             {bits_160} bits at N=160 (floor 768), {ms} ms (budget 15 min)"
        ),
    ))
}

/// Check 7: the ε-truncated square solve at double precision, ε = 1e−8, on
/// a smooth rational target: the error decreases with N up to 2× noise and
/// its minimum lands in [ε, 100√ε], within 1 min.
fn check_sqrt_eps_plateau() -> Result<(bool, String), String> {
    let started = Instant::now();
    let f = TargetFunction::from_id("runge25").ok_or("missing catalog target")?;
    let ns: Vec<usize> = (1..=16).map(|k| 4 * k).collect();
    let recs = error_sweep(
        &fe2(),
        &f,
        &ns,
        &[1e-8],
        &[SweepMethod::Tsvd],
        PrecisionRule::Auto,
        &SweepOptions::default(),
    )
    .map_err(stringify)?;
    let errs: Vec<f64> = recs
        .iter()
        .filter_map(|r| r.l2_error)
        .collect();
    if errs.len() != ns.len() {
        return Err(format!("expected {} errors, got {}", ns.len(), errs.len()));
    }
    let mut running_min = f64::INFINITY;
    let mut worst_noise = 0.0f64;
    for &e in &errs {
        if running_min.is_finite() {
            worst_noise = worst_noise.max(e / running_min);
        }
        running_min = running_min.min(e);
    }
    let eps = 1e-8f64;
    let ms = started.elapsed().as_millis();
    let in_window = running_min >= eps && running_min <= 100.0 * eps.sqrt();
    let pass = in_window && worst_noise <= 2.0 && ms < 60_000;
    Ok((
        pass,
        format!(
            "min error {running_min:.2e} ∈ [1e-8, 1e-3], worst step-up ×{worst_noise:.2} (cap 2), {ms} ms"
        ),
    ))
}

/// Check 8: oversampling at γ=2 with ε = 1e−12 pushes the plateau toward ε
/// — minimum error at most 1e4·ε — and from the square system's best N
/// onward the oversampled error never exceeds the square error, within 2 min.
fn check_eps_plateau() -> Result<(bool, String), String> {
    let started = Instant::now();
    let f = TargetFunction::from_id("runge25").ok_or("missing catalog target")?;
    let ns: Vec<usize> = (1..=16).map(|k| 4 * k).collect();
    let recs = oversample_sweep(&fe2(), &f, &[1, 2], &ns, 1e-12, &SweepOptions::default())
        .map_err(stringify)?;
    let err_at = |gamma: usize, n: usize| -> Result<f64, String> {
        recs.iter()
            .find(|r| r.n == n && r.m == Some(gamma * n))
            .and_then(|r| r.l2_error)
            .ok_or(format!("missing record γ={gamma} N={n}"))
    };
    let mut square = Vec::with_capacity(ns.len());
    let mut over = Vec::with_capacity(ns.len());
    for &n in &ns {
        square.push(err_at(1, n)?);
        over.push(err_at(2, n)?);
    }
    let min_over = over.iter().cloned().fold(f64::INFINITY, f64::min);
    // The square plateau is attained at its argmin; past it the square
    // error only stagnates, while the oversampled one keeps dropping.
    let plateau_at = square
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let mut worst_excess = 0.0f64;
    for i in plateau_at + 1..ns.len() {
        worst_excess = worst_excess.max(over[i] / square[i]);
    }
    let ms = started.elapsed().as_millis();
    let pass = min_over <= 1e4 * 1e-12 && worst_excess <= 1.0 && ms < 120_000;
    Ok((
        pass,
        format!(
            "min oversampled error {min_over:.2e} (cap 1e-8); past the square plateau (N > {}) \
             oversampled/square ≤ {worst_excess:.3} (cap 1), {ms} ms",
            ns[plateau_at]
        ),
    ))
}

/// Shared trial suite for checks 9 and 10: per family, the ε-truncated
/// projection at N=40, ε=1e−8, 256-bit, plus 1000 random coefficient
/// vectors z scoring both inequalities through the exact quadratic form
/// ‖f − T_N z‖² = ‖f‖² − 2 Re⟨z, y⟩ + z*Gz.
struct TrialReport {
    /// Worst (lhs / rhs) of ‖f−P^ε f‖ ≤ ‖f−T_N z‖ + √ε‖z‖ + 1e−10.
    worst_error_ratio: f64,
    /// Worst (lhs / rhs) of ‖x^ε‖ ≤ ‖f−T_N z‖/√ε + ‖z‖ + 1e−10.
    worst_norm_ratio: f64,
    families: Vec<String>,
}

fn trial_report() -> &'static Result<TrialReport, String> {
    static REPORT: OnceLock<Result<TrialReport, String>> = OnceLock::new();
    REPORT.get_or_init(|| {
        let eps = 1e-8f64;
        let n = 40usize;
        let prec = 256u32;
        let pairs: Vec<(FrameSpec, &str)> = vec![
            (fe2(), "runge25"),
            (FrameSpec::aug_fourier(8).map_err(stringify)?, "pole"),
            (FrameSpec::weighted_legendre(0.5).map_err(stringify)?, "mixed"),
            (FrameSpec::aug_ortho(), "synthetic-p51"),
        ];
        let mut report = TrialReport {
            worst_error_ratio: 0.0,
            worst_norm_ratio: 0.0,
            families: Vec::new(),
        };
        for (spec, fid) in pairs {
            let f = TargetFunction::from_id(fid).ok_or("missing catalog target")?;
            let rtol = Float::with_val(prec, 1e-40);
            let sys = assemble_square::<Float>(&spec, n, prec).map_err(stringify)?;
            let sys = bind_target(sys, &f, &rtol).map_err(stringify)?;
            let fact = hermitian_eig(&sys.matrix, prec).map_err(stringify)?;
            let y = sys.rhs.clone().expect("target just bound");
            let sol = solve_regularized(&fact, &y, eps);
            let norm_sq_f = f.norm_sq::<Float>(&spec, &rtol, prec).map_err(stringify)?;
            let proj_err = error_l2_via_system(&sys, &norm_sq_f, &sol.coeffs).to_f64();
            let coeff_norm = norm2(&sol.coeffs).to_f64();
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            for _ in 0..1000 {
                let z = gaussian_cvec(&mut rng, n, prec);
                let rz = error_l2_via_system(&sys, &norm_sq_f, &z).to_f64();
                let zn = norm2(&z).to_f64();
                let bound9 = rz + eps.sqrt() * zn + 1e-10;
                let bound10 = rz / eps.sqrt() + zn + 1e-10;
                report.worst_error_ratio = report.worst_error_ratio.max(proj_err / bound9);
                report.worst_norm_ratio = report.worst_norm_ratio.max(coeff_norm / bound10);
            }
            report
                .families
                .push(format!("{}/{fid}", spec.family_id()));
        }
        Ok(report)
    })
}

/// Check 9: over 1000 random z per family, the ε-truncated projection error
/// never exceeds ‖f − T_N z‖ + √ε‖z‖ + 1e−10.
fn check_error_inequality() -> Result<(bool, String), String> {
    let report = trial_report().as_ref().map_err(Clone::clone)?;
    let pass = report.worst_error_ratio <= 1.0;
    Ok((
        pass,
        format!(
            "worst lhs/rhs = {:.4} over 1000 trials × {{{}}}",
            report.worst_error_ratio,
            report.families.join(", ")
        ),
    ))
}

/// Check 10: the same trials bound the kept-coefficient norm by
/// ‖f − T_N z‖/√ε + ‖z‖ + 1e−10.
fn check_norm_inequality() -> Result<(bool, String), String> {
    let report = trial_report().as_ref().map_err(Clone::clone)?;
    let pass = report.worst_norm_ratio <= 1.0;
    Ok((
        pass,
        format!(
            "worst lhs/rhs = {:.4} over 1000 trials × {{{}}}",
            report.worst_norm_ratio,
            report.families.join(", ")
        ),
    ))
}

/// Check 11: for 200 random unit perturbations δf in the truncated span
/// (plus every eigenvector direction, which attains the bound), the
/// coefficient response of the ε-truncated solve stays within
/// (1+1e−8)/√(smallest kept σ) and (1+1e−8)/√ε.
fn check_amplification() -> Result<(bool, String), String> {
    let eps = 1e-8f64;
    let n = 40usize;
    let prec = 256u32;
    let sys = assemble_square::<Float>(&fe2(), n, prec).map_err(stringify)?;
    let fact = hermitian_eig(&sys.matrix, prec).map_err(stringify)?;
    let sigma_min_kept = fact
        .min_kept(eps)
        .ok_or("nothing kept at this threshold")?
        .to_f64();
    let bound_kept = (1.0 + 1e-8) / sigma_min_kept.sqrt();
    let bound_eps = (1.0 + 1e-8) / eps.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut draws: Vec<Vec<Cplx<Float>>> =
        (0..200).map(|_| gaussian_cvec(&mut rng, n, prec)).collect();
    // Eigenvector directions attain the kept bound exactly; dropped ones map
    // to zero. Both belong in the battery.
    for k in 0..n {
        draws.push(fact.vectors.col(k).to_vec());
    }

    let mut worst = 0.0f64;
    for w in &draws {
        let y = sys.matrix.mul_vec(w);
        let df_norm = inner(&y, w).re.sqrt(); // ‖δf‖ = √(w*Gw)
        if df_norm.is_zero() {
            continue;
        }
        let x = solve_regularized(&fact, &y, eps).coeffs;
        worst = worst.max((norm2(&x) / &df_norm).to_f64());
    }
    let pass = worst <= bound_kept && worst <= bound_eps;
    Ok((
        pass,
        format!(
            "worst ‖δx‖/‖δf‖ = {worst:.4e} vs (1+1e-8)/√σ_min = {bound_kept:.4e} and \
             (1+1e-8)/√ε = {bound_eps:.4e}"
        ),
    ))
}

/// Check 12: at N=20 the functions ξ_k = Σ_m (v_k)_m φ_m satisfy
/// ⟨ξ_i, ξ_j⟩ = σ_i δ_{ij} to 1e−10, measured by a 400-node Gauss rule
/// scaled to the family's domain.
fn check_xi_orthogonality() -> Result<(bool, String), String> {
    let spec = fe2();
    let n = 20usize;
    let sys = assemble_square::<f64>(&spec, n, 53).map_err(stringify)?;
    let fact = hermitian_eig(&sys.matrix, 53).map_err(stringify)?;
    let sigma = fact.values.clone();
    let xi = xi_basis(&spec, n, fact).map_err(stringify)?;
    let rule = gauss_legendre::<f64>(400, 53).map_err(stringify)?;
    let (lo, hi) = spec.domain().ok_or("integral family must have a domain")?;
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    let nodes: Vec<f64> = rule.nodes.iter().map(|x| mid + half * x).collect();
    let weights: Vec<f64> = rule.weights.iter().map(|w| half * w).collect();
    let vals: Vec<Vec<Cplx<f64>>> = (0..n)
        .map(|i| {
            nodes
                .iter()
                .map(|t| xi.eval(i, t).map_err(stringify))
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut s = Cplx::zero(53);
            for (k, w) in weights.iter().enumerate() {
                s.add_scaled(&vals[i][k].mul_conj(&vals[j][k]), w);
            }
            let target = if i == j { sigma[i] } else { 0.0 };
            worst = worst.max((s.re - target).hypot(s.im));
        }
    }
    let pass = worst <= 1e-10;
    Ok((
        pass,
        format!("max |⟨ξ_i,ξ_j⟩ − σ_i δ_ij| = {worst:.2e} (tol 1e-10) by 400-node quadrature"),
    ))
}

/// Check 13: along each family's N-sweep the lower bound A_N never rises,
/// the upper bound B_N never falls, and B_N stays at or below the family
/// bound B ∈ {1, 2, 3, 2}.
fn check_bound_monotonicity() -> Result<(bool, String), String> {
    let sweeps: Vec<(FrameSpec, Vec<usize>, f64)> = vec![
        (fe2(), (1..=30).map(|k| 2 * k).collect(), 1.0),
        (
            FrameSpec::aug_fourier(4).map_err(stringify)?,
            (3..=32).map(|k| 2 * k).collect(),
            2.0,
        ),
        (
            FrameSpec::weighted_legendre(0.5).map_err(stringify)?,
            (1..=12).map(|k| 2 * k).collect(),
            3.0,
        ),
        (
            FrameSpec::aug_ortho(),
            vec![2, 4, 8, 16, 32, 64, 128, 200],
            2.0,
        ),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (spec, ns, family_b) in sweeps {
        if (spec.upper_frame_bound() - family_b).abs() > 1e-12 {
            return Err(format!(
                "{} upper bound {} disagrees with the expected {family_b}",
                spec.family_id(),
                spec.upper_frame_bound()
            ));
        }
        let sweep = condition_sweep::<Float>(
            &spec,
            &ns,
            PrecisionRule::Fixed(256),
            &SweepOptions::default(),
        )
        .map_err(stringify)?;
        let a: Vec<f64> = sweep.records.iter().filter_map(|r| r.a_n).collect();
        let b: Vec<f64> = sweep.records.iter().filter_map(|r| r.b_n).collect();
        let mut ok = b.iter().all(|&bn| bn <= family_b + 1e-12);
        for w in a.windows(2) {
            ok &= w[1] <= w[0] * (1.0 + 1e-9) + 1e-15;
        }
        for w in b.windows(2) {
            ok &= w[1] >= w[0] * (1.0 - 1e-9) - 1e-15;
        }
        pass &= ok;
        detail.push(format!(
            "{}: A {:.2e}→{:.2e}, B {:.6}→{:.6} ≤ {family_b} [{}]",
            spec.family_id(),
            a.first().unwrap_or(&f64::NAN),
            a.last().unwrap_or(&f64::NAN),
            b.first().unwrap_or(&f64::NAN),
            b.last().unwrap_or(&f64::NAN),
            if ok { "ok" } else { "VIOLATED" }
        ));
    }
    Ok((pass, detail.join("; ")))
}

/// Check 14: the exact-projection coefficient norm of the synthetic target
/// grows at least like πN/√15 at N = 50, 100, 200.
fn check_coefficient_blowup() -> Result<(bool, String), String> {
    let spec = FrameSpec::aug_ortho();
    let f = TargetFunction::from_id("synthetic-p51").ok_or("missing catalog target")?;
    let mut detail = Vec::new();
    let mut pass = true;
    for n in [50usize, 100, 200] {
        let a = project_exact::<Float>(&spec, n, &f, 256).map_err(stringify)?;
        let got = a.coeff_norm().to_f64();
        let floor = std::f64::consts::PI * n as f64 / 15.0f64.sqrt();
        pass &= got >= floor - 1e-6;
        detail.push(format!("N={n}: ‖x‖ = {got:.2} ≥ {floor:.2}"));
    }
    Ok((pass, detail.join(", ")))
}

/// Check 15: the canonical-dual expansion of a smooth rational target at
/// N=256 is at least 10× worse than the exact projection at N=64 — the gap
/// that motivates regularized projections — and the iterative inverse on
/// the augmented family contracts by at most 0.38 per step (theory 1/3).
fn check_dual_gap() -> Result<(bool, String), String> {
    let f = TargetFunction::from_id("runge25").ok_or("missing catalog target")?;
    let dual = error_sweep(
        &fe2(),
        &f,
        &[256],
        &[],
        &[SweepMethod::Dual],
        PrecisionRule::Auto,
        &SweepOptions::default(),
    )
    .map_err(stringify)?;
    let exact = error_sweep(
        &fe2(),
        &f,
        &[64],
        &[],
        &[SweepMethod::Exact],
        PrecisionRule::Auto,
        &SweepOptions::default(),
    )
    .map_err(stringify)?;
    let dual_err = dual
        .first()
        .and_then(|r| r.l2_error)
        .ok_or("dual error missing")?;
    let exact_err = exact
        .first()
        .and_then(|r| r.l2_error)
        .ok_or("exact error missing")?;
    let gap = dual_err / exact_err;

    let spec = FrameSpec::aug_fourier(8).map_err(stringify)?;
    let pole = TargetFunction::from_id("pole").ok_or("missing catalog target")?;
    let grid = GridSpec {
        panels: 256,
        m_ref: 8 * 32,
    };
    let inv =
        frame_algorithm_inverse::<f64>(&spec, &pole, None, 1e-13, grid, 53).map_err(stringify)?;
    let contraction = inv
        .measured_contraction()
        .ok_or("contraction needs at least two updates")?;

    let pass = gap >= 10.0 && contraction <= 0.38;
    Ok((
        pass,
        format!(
            "dual N=256 error {dual_err:.2e} / exact N=64 error {exact_err:.2e} = {gap:.1e}× \
             (floor 10×); measured contraction {contraction:.3} (cap 0.38)"
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    // The battery itself runs in the dedicated integration-test target;
    // these tests pin the harness plumbing only.

    #[test]
    fn format_line_is_one_line_with_verdict() {
        let r = CheckResult {
            id: 3,
            label: "extension condition growth rate",
            pass: true,
            detail: "slope ok".into(),
            ms: 12,
        };
        let line = format_line(&r);
        assert!(line.starts_with("check 03 PASS (12 ms)"));
        assert!(!line.contains('\n'));
        let r = CheckResult { pass: false, ..r };
        assert!(format_line(&r).contains("FAIL"));
    }

    #[test]
    #[should_panic(expected = "outside")]
    fn check_ids_are_one_based() {
        run_check(0);
    }

    #[test]
    fn gaussian_draws_are_deterministic_and_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let z = gaussian_cvec(&mut rng, 4000, 53);
        let mut rng2 = ChaCha8Rng::seed_from_u64(SEED);
        let z2 = gaussian_cvec(&mut rng2, 4000, 53);
        assert_eq!(z[17].re, z2[17].re);
        // Mean ≈ 0 and E|z|² = 2 for a complex standard Gaussian.
        let mean: f64 = z.iter().map(|c| c.re).sum::<f64>() / 4000.0;
        let power: f64 = z.iter().map(|c| c.norm_sqr()).sum::<f64>() / 4000.0;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((power - 2.0).abs() < 0.2, "power {power}");
    }
}
