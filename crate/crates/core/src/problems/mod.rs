//! Benchmark problems: sparse PCA on a Stiefel manifold, sparse CCA on a
//! product of generalized Stiefel manifolds, and a synthetic instance with a
//! nonlinear mapping `A(X) = XᵀDX`.

mod cca;
mod data;
pub mod io;
mod nonlinear;
mod pca;

pub use cca::{build_sparse_cca, canonical_correlations, CcaInstance};
pub use data::{generate_cca_data, generate_cca_data_with, generate_pca_data, CcaDataSpec};
pub use nonlinear::{
    build_nonlinear_instance, build_nonlinear_problem, build_nonlinear_test, QuadraticFormMap,
    NONLINEAR_MU,
};
pub use pca::{build_sparse_pca, PcaInstance};

use crate::Mat;

/// Entries with magnitude below this count as zero in [`sparsity`].
pub const SPARSITY_TOL: f64 = 1e-5;

/// Percentage of entries of `x` with `|x_ij| < tol`.
pub fn sparsity(x: &Mat, tol: f64) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let zeros = x.iter().filter(|v| v.abs() < tol).count();
    100.0 * zeros as f64 / x.len() as f64
}
