use std::sync::Arc;

use crate::manifold::Manifold;
use crate::nonsmooth::NonsmoothTerm;
use crate::problem::{CompositeProblem, IdentityMap, SmoothFunction};
use crate::{Error, Mat, Result};

/// `min_{X ∈ S(d,r)} −⟨AAᵀ, XXᵀ⟩ + μ‖X‖₁` for a `d × N` data matrix `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaInstance {
    pub data: Mat,
    pub mu: f64,
    pub r: usize,
}

impl PcaInstance {
    pub fn new(data: Mat, mu: f64, r: usize) -> Result<Self> {
        let inst = PcaInstance { data, mu, r };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let (d, n) = self.data.shape();
        if self.r == 0 || n == 0 {
            return Err(Error::param("sparse PCA needs r ≥ 1 and N ≥ 1"));
        }
        if self.r > d {
            return Err(Error::Dimension {
                context: "sparse PCA (r must not exceed d)",
                expected: (d, d),
                got: (d, self.r),
            });
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::param(format!("μ must be ≥ 0, got {}", self.mu)));
        }
        Ok(())
    }
}

/// `f(X) = −‖AᵀX‖²_F`, `∇f(X) = −2A(AᵀX)`.
struct PcaObjective {
    data: Mat,
    data_t: Mat,
}

impl SmoothFunction for PcaObjective {
    fn value(&self, x: &Mat) -> f64 {
        -(&self.data_t * x).norm_squared()
    }

    fn gradient(&self, x: &Mat) -> Mat {
        &self.data * (&self.data_t * x) * -2.0
    }
}

pub fn build_sparse_pca(inst: &PcaInstance) -> Result<CompositeProblem> {
    inst.validate()?;
    let d = inst.data.nrows();
    CompositeProblem::new(
        Manifold::stiefel(d, inst.r)?,
        Arc::new(PcaObjective {
            data_t: inst.data.transpose(),
            data: inst.data.clone(),
        }),
        Arc::new(IdentityMap { shape: (d, inst.r) }),
        NonsmoothTerm::l1(inst.mu, d, inst.r)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::OracleCounter;

    #[test]
    fn rank_exceeding_dimension_is_rejected() {
        let err = PcaInstance::new(Mat::zeros(3, 5), 0.5, 4).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn zero_mu_objective_is_negative_trace() {
        let a = Mat::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        let p = build_sparse_pca(&PcaInstance::new(a.clone(), 0.0, 2).unwrap()).unwrap();
        let x = p.manifold().random_point(9);
        let expected = -((&a * a.transpose()) * (&x * x.transpose())).trace();
        let got = p.phi_value(&x, &OracleCounter::new()).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }
}
