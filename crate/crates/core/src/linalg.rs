//! Small dense helpers shared by the manifold and problem code.

use nalgebra::{Cholesky, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Mat, Result};

/// Frobenius inner product `tr(aᵀ b)`.
pub fn inner(a: &Mat, b: &Mat) -> f64 {
    a.dot(b)
}

/// Symmetric part `(s + sᵀ) / 2`.
pub fn sym(s: &Mat) -> Mat {
    (s + s.transpose()) * 0.5
}

/// `‖m − I‖_F` for a square `m`.
pub fn identity_residual(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = m[(i, j)] - target;
            acc += d * d;
        }
    }
    acc.sqrt()
}

pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    // Column-major fill keeps the draw order stable for a given seed.
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn cholesky(m: &Mat, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::Conditioning(format!("{what} is not positive definite")))
}

/// Solves `x Lᵀ = b` for `x`, i.e. returns `b L⁻ᵀ`, with `L` lower triangular.
pub fn right_solve_lower_transpose(b: &Mat, l: &Mat) -> Mat {
    // x Lᵀ = b  ⇔  L xᵀ = bᵀ
    let xt = l
        .solve_lower_triangular(&b.transpose())
        .expect("Cholesky factor has a nonzero diagonal");
    xt.transpose()
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn inv_sqrt_spd(m: &Mat) -> Result<Mat> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return Err(Error::RankDeficient);
    }
    let d = Mat::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Thin Q factor of `m` (tall, full column rank) with the diagonal of R forced
/// positive, which makes the factorization unique.
pub fn qf(m: &Mat) -> Result<Mat> {
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m.ncols() {
        let d = r[(j, j)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::RankDeficient);
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(q)
}
