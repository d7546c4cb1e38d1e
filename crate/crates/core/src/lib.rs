//! Riemannian inexact augmented Lagrangian (RiAL) method for nonsmooth
//! composite problems
//!
//! ```text
//! min_{x ∈ M}  f(x) + h(A(x))
//! ```
//!
//! where `M` is a (generalized) Stiefel manifold or a product of them, `f` is
//! smooth, `A` is a smooth mapping and `h` is convex, Lipschitz and has a cheap
//! proximal mapping.
//!
//! The outer loop ([`rial_solve`]) minimizes the Moreau-envelope form of the
//! augmented Lagrangian with Riemannian gradient descent ([`rgd_solve`]), then
//! performs the auxiliary update, a dual update (classical full step or the
//! damped baseline) and a geometric penalty/tolerance schedule.
//!
//! ```no_run
//! use rial_core::{build_sparse_pca, generate_pca_data, rial_solve, OuterConfig, PcaInstance};
//!
//! let data = generate_pca_data(100, 50, 1);
//! let problem = build_sparse_pca(&PcaInstance::new(data, 0.5, 5)?)?;
//! let run = rial_solve(&problem, &OuterConfig::default())?;
//! println!("{:?} after {} outer iterations", run.status, run.records.len());
//! # Ok::<(), rial_core::Error>(())
//! ```

pub mod error;
pub mod inner;
pub mod linalg;
pub mod manifold;
pub mod nonsmooth;
pub mod outer;
pub mod problem;
pub mod problems;

pub use error::{Error, Result};
pub use inner::{
    bb_stepsize, rgd_solve, theoretical_stepsize, InnerConfig, InnerResult, InnerStatus,
    StepsizeMode,
};
pub use manifold::{Manifold, Retraction, SgMetric, FRESH_TOL, INPUT_TOL};
pub use nonsmooth::{NonsmoothTerm, ProxFunction};
pub use outer::{
    dual_update, predict_outer_iterations, rial_solve, rial_solve_from, schedule_update, AlState,
    DualMode, IterationRecord, OuterConfig, RialOutput, RunStatus,
};
pub use problem::{
    AugmentedLagrangian, CompositeProblem, InvariantKind, InvariantViolation, OracleCounter,
    OracleCounts, SmoothFunction, SmoothMapping, SmoothnessConstants,
};
pub use problems::{
    build_nonlinear_instance, build_nonlinear_problem, build_nonlinear_test, build_sparse_cca,
    build_sparse_pca, canonical_correlations, generate_cca_data, generate_cca_data_with,
    generate_pca_data, sparsity, CcaDataSpec, CcaInstance, PcaInstance, SPARSITY_TOL,
};

/// Dense real matrix used for points, tangent vectors and data.
pub type Mat = nalgebra::DMatrix<f64>;
