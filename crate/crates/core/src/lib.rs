//! Numerical approximation in redundant spanning families.
//!
//! A frame is a spanning family that need not be a basis; truncating one to
//! finitely many elements yields Gram systems whose conditioning grows without
//! bound, yet whose regularized least-squares solutions still converge to
//! machine-level accuracy. This crate assembles those systems in double or
//! arbitrary precision, factorizes them spectrally, and exposes the
//! approximation and conditioning experiments built on top.

pub mod acceptance;
pub mod frames;
pub mod approx;
pub mod experiments;
pub mod gram;
pub mod mp;
pub mod quadrature;
pub mod regsolve;

pub use acceptance::{format_line, run_all, run_check, CheckResult, CHECK_COUNT};
pub use approx::{
    dual_coefficients, error_l2, error_l2_via_system, frame_algorithm_inverse, project_exact,
    project_oversampled, project_tsvd, synthesize, xi_basis, ApproxError, FrameApproximant,
    FrameInverse, GridSpec, Method, XiBasis,
};
pub use experiments::{
    coefficient_table, condition_sweep, error_sweep, fit_line, log_kappa_slope_per_n,
    log_log_kappa_slope, oversample_sweep, spectrum_experiment, theory_lower_bound, write_csv,
    ConditionSweep, ExperimentError, PrecisionRule, SweepMethod, SweepOptions, SweepRecord,
    CSV_HEADER,
};
pub use frames::{
    evaluate, index_set, pair_inner_product, FrameError, FrameIndex, FrameSpec, TargetFunction,
};
pub use gram::{
    assemble_rect, assemble_square, auto_precision, bind_target, dump_matrix, forecast_log2_kappa,
    frame_bounds, required_bits, synthetic_target_overlap, target_inner_products, FrameBounds,
    GramSystem,
};
pub use mp::{inner, norm2, CMat, Cplx, RMat, Real};
pub use quadrature::{
    adaptive_integrate, gauss_jacobi, gauss_legendre, QuadError, QuadRule, Scalar,
};
pub use regsolve::{
    hermitian_eig, rect_svd, solve_exact, solve_regularized, tsvd_condition_bound,
    RegularizedSolution, SolveError, SpectralFactorization,
};
