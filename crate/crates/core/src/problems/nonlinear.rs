use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{gaussian, sym};
use crate::manifold::Manifold;
use crate::nonsmooth::NonsmoothTerm;
use crate::problem::{CompositeProblem, FnSmooth, SmoothMapping};
use crate::{Error, Mat, Result};

/// ℓ1 weight used by [`build_nonlinear_test`].
pub const NONLINEAR_MU: f64 = 0.1;

/// `A(X) = XᵀDX` for symmetric `D`, with `∇A(X)ᵀZ = D X (Z + Zᵀ)`.
#[derive(Clone, Debug)]
pub struct QuadraticFormMap {
    d: Mat,
    r: usize,
}

impl QuadraticFormMap {
    pub fn new(d: Mat, r: usize) -> Result<Self> {
        if d.nrows() != d.ncols() {
            return Err(Error::param("D must be square"));
        }
        Ok(QuadraticFormMap { d: sym(&d), r })
    }
}

impl SmoothMapping for QuadraticFormMap {
    fn output_shape(&self) -> (usize, usize) {
        (self.r, self.r)
    }

    fn apply(&self, x: &Mat) -> Mat {
        x.transpose() * (&self.d * x)
    }

    fn adjoint(&self, x: &Mat, z: &Mat) -> Mat {
        &self.d * x * (z + z.transpose())
    }
}

/// `min_{X∈S(p,r)} ⟨C, X⟩ + μ‖XᵀDX‖₁`.
pub fn build_nonlinear_problem(c: Mat, d: Mat, mu: f64) -> Result<CompositeProblem> {
    let (p, r) = c.shape();
    if d.shape() != (p, p) {
        return Err(Error::Dimension {
            context: "nonlinear test (D must be p × p)",
            expected: (p, p),
            got: d.shape(),
        });
    }
    let c2 = c.clone();
    CompositeProblem::new(
        Manifold::stiefel(p, r)?,
        Arc::new(FnSmooth::new(
            move |x: &Mat| c.dot(x),
            move |_: &Mat| c2.clone(),
        )),
        Arc::new(QuadraticFormMap::new(d, r)?),
        NonsmoothTerm::l1(mu, r, r)?,
    )
}

/// Random instance: Gaussian `C`, `D = GGᵀ/p` with Gaussian `G`, `μ = 0.1`.
pub fn build_nonlinear_test(p: usize, r: usize, seed: u64) -> Result<CompositeProblem> {
    build_nonlinear_instance(p, r, NONLINEAR_MU, seed)
}

/// [`build_nonlinear_test`] with a caller-chosen `μ`.
pub fn build_nonlinear_instance(
    p: usize,
    r: usize,
    mu: f64,
    seed: u64,
) -> Result<CompositeProblem> {
    if r == 0 || r > p {
        return Err(Error::param(format!(
            "nonlinear test needs 1 ≤ r ≤ p, got p={p}, r={r}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = gaussian(p, r, &mut rng);
    let g = gaussian(p, p, &mut rng);
    let d = &g * g.transpose() / p as f64;
    build_nonlinear_problem(c, d, mu)
}
