//! Stiefel, generalized Stiefel and product manifolds as embedded submanifolds
//! of ℝ^{n×p}.
//!
//! * `S(n,p) = {X : XᵀX = I}` with the Euclidean metric `⟨U,V⟩ = tr(UᵀV)`.
//! * `S_G(n,p) = {X : XᵀGX = I}`, by default with the G-metric
//!   `⟨U,V⟩_G = tr(UᵀGV)`, under which the tangent projection and the
//!   Riemannian gradient are closed-form: `P_X(V) = V − X sym(XᵀGV)` and
//!   `grad f = P_X(G⁻¹∇f)`. [`SgMetric::Euclidean`] selects the metric induced
//!   from the ambient space instead; its projection needs an `r × r`
//!   Lyapunov solve.
//! * Products of the above sharing the same column count. A product point is
//!   the vertical stack of its factor points, so every point is still a single
//!   dense matrix.
//!
//! Points and tangent vectors are plain [`Mat`]s; the manifold instance is the
//! owner that knows how to validate and move them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, gaussian, identity_residual, inner, qf, sym};
use crate::{Error, Mat, Result};

/// Feasibility bound for points produced by [`Manifold::retract`] and
/// [`Manifold::random_point`].
pub const FRESH_TOL: f64 = 1e-10;
/// Feasibility bound for points accepted as solver inputs.
pub const INPUT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Retraction {
    /// Q factor with positive R diagonal (Cholesky normalization for `S_G`).
    #[default]
    Qr,
    /// `(X+V) M^{-1/2}` with `M = (X+V)ᵀG(X+V)`.
    Polar,
}

/// Riemannian metric of a generalized Stiefel manifold.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SgMetric {
    /// `⟨U,V⟩ = tr(UᵀGV)`.
    #[default]
    G,
    /// `⟨U,V⟩ = tr(UᵀV)`.
    Euclidean,
}

#[derive(Clone, Debug)]
pub struct Stiefel {
    rows: usize,
    cols: usize,
    retraction: Retraction,
}

#[derive(Clone, Debug)]
pub struct GeneralizedStiefel {
    cols: usize,
    g: Mat,
    /// Lower Cholesky factor of `g`.
    g_chol: Mat,
    retraction: Retraction,
    metric: SgMetric,
}

#[derive(Clone, Debug)]
pub struct Product {
    factors: Vec<Manifold>,
    offsets: Vec<usize>,
    rows: usize,
    cols: usize,
}

#[derive(Clone, Debug)]
pub enum Manifold {
    Stiefel(Stiefel),
    GeneralizedStiefel(GeneralizedStiefel),
    Product(Product),
}

impl Manifold {
    pub fn stiefel(rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 || cols > rows {
            return Err(Error::param(format!(
                "Stiefel manifold needs 1 ≤ p ≤ n, got n={rows}, p={cols}"
            )));
        }
        Ok(Manifold::Stiefel(Stiefel {
            rows,
            cols,
            retraction: Retraction::Qr,
        }))
    }

    /// `{X ∈ ℝ^{n×cols} : XᵀGX = I}` for a symmetric positive definite `G`.
    pub fn generalized_stiefel(g: Mat, cols: usize) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::check_shape("metric matrix", (n, n), g.shape()).unwrap_err());
        }
        if cols == 0 || cols > n {
            return Err(Error::param(format!(
                "generalized Stiefel manifold needs 1 ≤ p ≤ n, got n={n}, p={cols}"
            )));
        }
        let asym = (&g - g.transpose()).norm();
        if asym > 1e-12 * (1.0 + g.norm()) {
            return Err(Error::Conditioning(format!(
                "metric matrix is not symmetric (‖G−Gᵀ‖ = {asym:e})"
            )));
        }
        let g_chol = linalg::cholesky(&g, "metric matrix G")?.l();
        let diag_min = g_chol.diagonal().min();
        let diag_max = g_chol.diagonal().max();
        if diag_min <= f64::EPSILON.sqrt() * diag_max {
            return Err(Error::Conditioning(
                "metric matrix G is singular to working precision".into(),
            ));
        }
        Ok(Manifold::GeneralizedStiefel(GeneralizedStiefel {
            cols,
            g,
            g_chol,
            retraction: Retraction::Qr,
            metric: SgMetric::G,
        }))
    }

    pub fn product(factors: Vec<Manifold>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::param("product manifold needs at least one factor"));
        };
        let cols = first.shape().1;
        let mut offsets = Vec::with_capacity(factors.len());
        let mut rows = 0;
        for f in &factors {
            if f.shape().1 != cols {
                return Err(Error::param(
                    "product factors must share the same number of columns",
                ));
            }
            offsets.push(rows);
            rows += f.shape().0;
        }
        Ok(Manifold::Product(Product {
            factors,
            offsets,
            rows,
            cols,
        }))
    }

    /// Selects the retraction for every (factor) manifold.
    pub fn with_retraction(mut self, retraction: Retraction) -> Self {
        match &mut self {
            Manifold::Stiefel(s) => s.retraction = retraction,
            Manifold::GeneralizedStiefel(s) => s.retraction = retraction,
            Manifold::Product(p) => {
                p.factors = std::mem::take(&mut p.factors)
                    .into_iter()
                    .map(|f| f.with_retraction(retraction))
                    .collect();
            }
        }
        self
    }

    /// Selects the metric of every generalized Stiefel (factor) manifold.
    /// Stiefel factors keep the Euclidean metric.
    pub fn with_sg_metric(mut self, metric: SgMetric) -> Self {
        match &mut self {
            Manifold::Stiefel(_) => {}
            Manifold::GeneralizedStiefel(s) => s.metric = metric,
            Manifold::Product(p) => {
                p.factors = std::mem::take(&mut p.factors)
                    .into_iter()
                    .map(|f| f.with_sg_metric(metric))
                    .collect();
            }
        }
        self
    }

    /// Ambient shape `(rows, cols)` of a point.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Manifold::Stiefel(s) => (s.rows, s.cols),
            Manifold::GeneralizedStiefel(s) => (s.g.nrows(), s.cols),
            Manifold::Product(p) => (p.rows, p.cols),
        }
    }

    /// Factor manifolds with their row offsets; a non-product manifold is its
    /// own single factor.
    pub fn factors(&self) -> Vec<(usize, &Manifold)> {
        match self {
            Manifold::Product(p) => p.offsets.iter().copied().zip(p.factors.iter()).collect(),
            other => vec![(0, other)],
        }
    }

    fn check_ambient(&self, context: &'static str, m: &Mat) -> Result<()> {
        Error::check_shape(context, self.shape(), m.shape())
    }

    /// `‖XᵀX − I‖_F`, `‖XᵀGX − I‖_F`, or the maximum over product factors.
    pub fn check_feasibility(&self, x: &Mat) -> Result<f64> {
        self.check_ambient("check_feasibility", x)?;
        Ok(match self {
            Manifold::Stiefel(_) => identity_residual(&(x.transpose() * x)),
            Manifold::GeneralizedStiefel(s) => identity_residual(&(x.transpose() * &s.g * x)),
            Manifold::Product(p) => p
                .blocks(x)
                .map(|(f, b)| f.check_feasibility(&b))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max),
        })
    }

    /// Errors unless `x` is feasible within `tol`.
    pub fn ensure_feasible(&self, x: &Mat, tol: f64) -> Result<()> {
        let residual = self.check_feasibility(x)?;
        if residual <= tol {
            Ok(())
        } else {
            Err(Error::Infeasible {
                residual,
                tolerance: tol,
            })
        }
    }

    /// Orthogonal projection of `v` onto `T_x M` with respect to the manifold's
    /// metric.
    pub fn tangent_project(&self, x: &Mat, v: &Mat) -> Result<Mat> {
        self.check_ambient("tangent_project (point)", x)?;
        self.check_ambient("tangent_project (vector)", v)?;
        Ok(match self {
            Manifold::Stiefel(_) => v - x * sym(&(x.transpose() * v)),
            Manifold::GeneralizedStiefel(s) => match s.metric {
                SgMetric::G => v - x * sym(&(x.transpose() * (&s.g * v))),
                SgMetric::Euclidean => s.euclidean_project(x, v),
            },
            Manifold::Product(p) => p.map_pairs(x, v, |f, xb, vb| f.tangent_project(xb, vb))?,
        })
    }

    /// Riemannian gradient from a Euclidean gradient.
    pub fn riemannian_gradient(&self, x: &Mat, egrad: &Mat) -> Result<Mat> {
        self.check_ambient("riemannian_gradient (point)", x)?;
        self.check_ambient("riemannian_gradient (gradient)", egrad)?;
        match self {
            Manifold::Stiefel(_) => self.tangent_project(x, egrad),
            Manifold::GeneralizedStiefel(s) => match s.metric {
                SgMetric::G => self.tangent_project(x, &s.solve_g(egrad)),
                SgMetric::Euclidean => self.tangent_project(x, egrad),
            },
            Manifold::Product(p) => {
                p.map_pairs(x, egrad, |f, xb, gb| f.riemannian_gradient(xb, gb))
            }
        }
    }

    /// Riemannian metric `⟨u, v⟩_x`.
    pub fn metric(&self, u: &Mat, v: &Mat) -> f64 {
        match self {
            Manifold::Stiefel(_) => inner(u, v),
            Manifold::GeneralizedStiefel(s) => match s.metric {
                SgMetric::G => inner(u, &(&s.g * v)),
                SgMetric::Euclidean => inner(u, v),
            },
            Manifold::Product(p) => p
                .factors
                .iter()
                .zip(&p.offsets)
                .map(|(f, &o)| {
                    let n = f.shape().0;
                    f.metric(&u.rows(o, n).into_owned(), &v.rows(o, n).into_owned())
                })
                .sum(),
        }
    }

    pub fn retract(&self, x: &Mat, v: &Mat) -> Result<Mat> {
        self.check_ambient("retract (point)", x)?;
        self.check_ambient("retract (vector)", v)?;
        match self {
            Manifold::Stiefel(s) => {
                let y = x + v;
                match s.retraction {
                    Retraction::Qr => qf(&y),
                    Retraction::Polar => {
                        let m = y.transpose() * &y;
                        Ok(&y * linalg::inv_sqrt_spd(&m)?)
                    }
                }
            }
            Manifold::GeneralizedStiefel(s) => s.normalize(&(x + v)),
            Manifold::Product(p) => p.map_pairs(x, v, |f, xb, vb| f.retract(xb, vb)),
        }
    }

    /// Deterministic random point drawn from a Gaussian matrix.
    pub fn random_point(&self, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_point_with(&mut rng)
    }

    pub fn random_point_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let (rows, cols) = self.shape();
        // A Gaussian matrix has full column rank with probability one; retry
        // covers the measure-zero failure.
        loop {
            let out = match self {
                Manifold::Stiefel(_) => qf(&gaussian(rows, cols, rng)),
                Manifold::GeneralizedStiefel(s) => s.normalize(&gaussian(rows, cols, rng)),
                Manifold::Product(p) => {
                    let mut out = Mat::zeros(rows, cols);
                    for (f, &o) in p.factors.iter().zip(&p.offsets) {
                        let b = f.random_point_with(rng);
                        out.rows_mut(o, b.nrows()).copy_from(&b);
                    }
                    Ok(out)
                }
            };
            if let Ok(point) = out {
                return point;
            }
        }
    }
}

impl GeneralizedStiefel {
    pub fn metric_matrix(&self) -> &Mat {
        &self.g
    }

    pub fn sg_metric(&self) -> SgMetric {
        self.metric
    }

    /// Frobenius-orthogonal projection onto `T_X = {V : sym(XᵀGV) = 0}`.
    /// The normal space is `{GXS : S symmetric}`; `S` solves the Lyapunov
    /// equation `MS + SM = 2 sym(XᵀGV)` with `M = (GX)ᵀGX`.
    fn euclidean_project(&self, x: &Mat, v: &Mat) -> Mat {
        let gx = &self.g * x;
        let m = gx.transpose() * &gx;
        let rhs = sym(&(gx.transpose() * v)) * 2.0;
        let eig = sym(&m).symmetric_eigen();
        let q = &eig.eigenvectors;
        let mut s = q.transpose() * rhs * q;
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                s[(i, j)] /= eig.eigenvalues[i] + eig.eigenvalues[j];
            }
        }
        v - gx * (q * s * q.transpose())
    }

    fn solve_g(&self, b: &Mat) -> Mat {
        let y = self
            .g_chol
            .solve_lower_triangular(b)
            .expect("validated Cholesky factor");
        self.g_chol
            .tr_solve_lower_triangular(&y)
            .expect("validated Cholesky factor")
    }

    /// Maps a full-rank `y` onto `S_G` via `y L⁻ᵀ` (`LLᵀ = yᵀGy`) or the polar
    /// factor.
    fn normalize(&self, y: &Mat) -> Result<Mat> {
        let m = y.transpose() * (&self.g * y);
        let m = sym(&m);
        match self.retraction {
            Retraction::Qr => {
                let l = nalgebra::Cholesky::new(m).ok_or(Error::RankDeficient)?.l();
                Ok(linalg::right_solve_lower_transpose(y, &l))
            }
            Retraction::Polar => Ok(y * linalg::inv_sqrt_spd(&m)?),
        }
    }
}

impl Product {
    fn blocks<'a>(&'a self, m: &'a Mat) -> impl Iterator<Item = (&'a Manifold, Mat)> + 'a {
        self.factors
            .iter()
            .zip(&self.offsets)
            .map(move |(f, &o)| (f, m.rows(o, f.shape().0).into_owned()))
    }

    fn map_pairs(
        &self,
        a: &Mat,
        b: &Mat,
        op: impl Fn(&Manifold, &Mat, &Mat) -> Result<Mat>,
    ) -> Result<Mat> {
        let mut out = Mat::zeros(self.rows, self.cols);
        for (f, &o) in self.factors.iter().zip(&self.offsets) {
            let n = f.shape().0;
            let r = op(f, &a.rows(o, n).into_owned(), &b.rows(o, n).into_owned())?;
            out.rows_mut(o, n).copy_from(&r);
        }
        Ok(out)
    }
}
