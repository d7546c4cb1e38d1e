use std::sync::Arc;

use crate::linalg;
use crate::manifold::{Manifold, SgMetric};
use crate::nonsmooth::{NonsmoothTerm, RowBlock};
use crate::problem::{CompositeProblem, IdentityMap, SmoothFunction};
use crate::{Error, Mat, Result};

/// Smallest admissible eigenvalue of a ridged covariance.
const MIN_EIGENVALUE: f64 = 1e-8;

/// `min −tr(UᵀΣ_ab V) + μ₁‖U‖₁ + μ₂‖V‖₁` over `U ∈ S_{Σ_aa}(p,r)`,
/// `V ∈ S_{Σ_bb}(q,r)`, with `Σ_aa = AᵀA/d`, `Σ_bb = BᵀB/d`, `Σ_ab = AᵀB/d`.
///
/// The variable is the stacked `(p+q) × r` matrix `[U; V]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CcaInstance {
    pub a: Mat,
    pub b: Mat,
    pub mu1: f64,
    pub mu2: f64,
    pub r: usize,
    /// Ridge added to both covariances; `None` uses `1e-6 · trace(Σ)/dim`
    /// per block.
    pub ridge: Option<f64>,
    /// Metric on both factors. Defaults to the ambient (Euclidean) one: under
    /// the G-metric the ℓ1 subproblems become far worse conditioned.
    pub metric: SgMetric,
}

impl CcaInstance {
    pub fn new(a: Mat, b: Mat, mu1: f64, mu2: f64, r: usize) -> Result<Self> {
        let inst = CcaInstance {
            a,
            b,
            mu1,
            mu2,
            r,
            ridge: None,
            metric: SgMetric::Euclidean,
        };
        inst.validate_shapes()?;
        Ok(inst)
    }

    pub(crate) fn validate_shapes(&self) -> Result<()> {
        if self.a.nrows() != self.b.nrows() {
            return Err(Error::Dimension {
                context: "sparse CCA (A and B need the same number of samples)",
                expected: (self.a.nrows(), self.b.ncols()),
                got: self.b.shape(),
            });
        }
        let (p, q) = (self.a.ncols(), self.b.ncols());
        if self.r == 0 || self.r > p.min(q) {
            return Err(Error::param(format!(
                "sparse CCA needs 1 ≤ r ≤ min(p, q), got r={}, p={p}, q={q}",
                self.r
            )));
        }
        for mu in [self.mu1, self.mu2] {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(Error::param(format!("μ must be ≥ 0, got {mu}")));
            }
        }
        if let Some(d) = self.ridge {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::param(format!("ridge must be ≥ 0, got {d}")));
            }
        }
        Ok(())
    }

    /// Ridged `(Σ_aa, Σ_bb, Σ_ab)`.
    pub fn covariances(&self) -> (Mat, Mat, Mat) {
        let d = self.a.nrows() as f64;
        let at = self.a.transpose();
        let ridge = |s: Mat| {
            let n = s.nrows();
            let delta = self.ridge.unwrap_or(1e-6 * s.trace() / n as f64);
            s + Mat::identity(n, n) * delta
        };
        let saa = ridge(linalg::sym(&(&at * &self.a / d)));
        let sbb = ridge(linalg::sym(&(self.b.transpose() * &self.b / d)));
        let sab = &at * &self.b / d;
        (saa, sbb, sab)
    }
}

struct CcaObjective {
    sab: Mat,
    p: usize,
    q: usize,
}

impl SmoothFunction for CcaObjective {
    fn value(&self, w: &Mat) -> f64 {
        let u = w.rows(0, self.p);
        let v = w.rows(self.p, self.q);
        -(u.transpose() * &self.sab * v).trace()
    }

    fn gradient(&self, w: &Mat) -> Mat {
        let u = w.rows(0, self.p);
        let v = w.rows(self.p, self.q);
        let mut g = Mat::zeros(self.p + self.q, w.ncols());
        g.rows_mut(0, self.p).copy_from(&(&self.sab * v * -1.0));
        g.rows_mut(self.p, self.q)
            .copy_from(&(self.sab.transpose() * u * -1.0));
        g
    }
}

fn check_pd(s: &Mat, what: &str) -> Result<()> {
    let min = s.clone().symmetric_eigen().eigenvalues.min();
    if min > MIN_EIGENVALUE {
        Ok(())
    } else {
        Err(Error::Conditioning(format!(
            "{what} has smallest eigenvalue {min:e} after ridging"
        )))
    }
}

pub fn build_sparse_cca(inst: &CcaInstance) -> Result<CompositeProblem> {
    inst.validate_shapes()?;
    let (saa, sbb, sab) = inst.covariances();
    check_pd(&saa, "Σ_aa")?;
    check_pd(&sbb, "Σ_bb")?;
    let (p, q, r) = (inst.a.ncols(), inst.b.ncols(), inst.r);
    let manifold = Manifold::product(vec![
        Manifold::generalized_stiefel(saa, r)?,
        Manifold::generalized_stiefel(sbb, r)?,
    ])?
    .with_sg_metric(inst.metric);
    let h = NonsmoothTerm::block_l1(
        vec![
            RowBlock {
                rows: p,
                mu: inst.mu1,
            },
            RowBlock {
                rows: q,
                mu: inst.mu2,
            },
        ],
        r,
    )?;
    CompositeProblem::new(
        manifold,
        Arc::new(CcaObjective { sab, p, q }),
        Arc::new(IdentityMap { shape: (p + q, r) }),
        h,
    )
}

/// Canonical correlations in decreasing order: singular values of
/// `L_a⁻¹ Σ_ab L_b⁻ᵀ` with `Σ_aa = L_a L_aᵀ`, `Σ_bb = L_b L_bᵀ`.
pub fn canonical_correlations(saa: &Mat, sbb: &Mat, sab: &Mat) -> Result<Vec<f64>> {
    let la = linalg::cholesky(saa, "Σ_aa")?.l();
    let lb = linalg::cholesky(sbb, "Σ_bb")?.l();
    let left = la
        .solve_lower_triangular(sab)
        .ok_or_else(|| Error::Conditioning("Σ_aa factor is singular".into()))?;
    let whitened = linalg::right_solve_lower_transpose(&left, &lb);
    let mut sv: Vec<f64> = whitened.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}
