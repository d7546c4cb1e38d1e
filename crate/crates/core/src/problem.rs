//! Composite problems `min_{x∈M} Φ(x) = f(x) + h(A(x))` and the augmented
//! Lagrangian envelope minimized by the inner solver:
//!
//! ```text
//! L_k(x)  = f(x) + M_{h/σ}(A(x) + z/σ)
//! ∇L_k(x) = ∇f(x) + ∇A(x)ᵀ B(x),   B(x) = σ (w − prox_{h/σ}(w)),  w = A(x) + z/σ
//! ```
//!
//! Oracle calls (`f`, `∇f`, `A`, `∇Aᵀ·`, `prox`) are counted through an
//! [`OracleCounter`]. [`AugmentedLagrangian`] caches everything it evaluates
//! at the most recent `x`, so a value and a gradient at the same point cost
//! one call of each oracle.

use std::fmt;
use std::ops::Sub;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::manifold::{Manifold, INPUT_TOL};
use crate::nonsmooth::NonsmoothTerm;
use crate::{Error, Mat, Result};

/// Smooth `f : E₁ → ℝ` with its Euclidean gradient.
pub trait SmoothFunction: Send + Sync {
    fn value(&self, x: &Mat) -> f64;
    fn gradient(&self, x: &Mat) -> Mat;
}

/// Smooth mapping `A : E₁ → E₂` with the adjoint action of its Jacobian.
pub trait SmoothMapping: Send + Sync {
    fn output_shape(&self) -> (usize, usize);
    fn apply(&self, x: &Mat) -> Mat;
    /// `∇A(x)ᵀ z`.
    fn adjoint(&self, x: &Mat, z: &Mat) -> Mat;
    fn is_linear(&self) -> bool {
        false
    }
}

/// Closure-backed [`SmoothFunction`].
pub struct FnSmooth<F, G> {
    value: F,
    gradient: G,
}

impl<F, G> FnSmooth<F, G>
where
    F: Fn(&Mat) -> f64 + Send + Sync,
    G: Fn(&Mat) -> Mat + Send + Sync,
{
    pub fn new(value: F, gradient: G) -> Self {
        FnSmooth { value, gradient }
    }
}

impl<F, G> SmoothFunction for FnSmooth<F, G>
where
    F: Fn(&Mat) -> f64 + Send + Sync,
    G: Fn(&Mat) -> Mat + Send + Sync,
{
    fn value(&self, x: &Mat) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &Mat) -> Mat {
        (self.gradient)(x)
    }
}

/// `f ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFunction;

impl SmoothFunction for ZeroFunction {
    fn value(&self, _: &Mat) -> f64 {
        0.0
    }
    fn gradient(&self, x: &Mat) -> Mat {
        Mat::zeros(x.nrows(), x.ncols())
    }
}

/// `A(x) = x`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityMap {
    pub shape: (usize, usize),
}

impl SmoothMapping for IdentityMap {
    fn output_shape(&self) -> (usize, usize) {
        self.shape
    }
    fn apply(&self, x: &Mat) -> Mat {
        x.clone()
    }
    fn adjoint(&self, _: &Mat, z: &Mat) -> Mat {
        z.clone()
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// `A ≡ 0` into a space of the given shape.
#[derive(Clone, Copy, Debug)]
pub struct ZeroMap {
    pub output: (usize, usize),
}

impl SmoothMapping for ZeroMap {
    fn output_shape(&self) -> (usize, usize) {
        self.output
    }
    fn apply(&self, _: &Mat) -> Mat {
        Mat::zeros(self.output.0, self.output.1)
    }
    fn adjoint(&self, x: &Mat, _: &Mat) -> Mat {
        Mat::zeros(x.nrows(), x.ncols())
    }
    fn is_linear(&self) -> bool {
        true
    }
}

/// Constants of the smoothness assumptions, used by the theoretical stepsize
/// `1/L_k(x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessConstants {
    /// Descent-lemma constant of `f` over the manifold.
    pub lf: f64,
    /// Lipschitz constant of `h`.
    pub lh: f64,
    /// Lipschitz constant of `A`.
    pub la0: f64,
    /// Lipschitz constant of `∇A`.
    pub la1: f64,
    /// Bound on `‖∇A(x)‖`.
    pub rho_a: f64,
    /// `‖R_x(v) − x‖ ≤ α₁‖v‖`.
    pub alpha1: f64,
    /// `‖R_x(v) − x − v‖ ≤ α₂‖v‖²`.
    pub alpha2: f64,
}

impl SmoothnessConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lf,
            self.lh,
            self.la0,
            self.la1,
            self.rho_a,
            self.alpha1,
            self.alpha2,
        ];
        if all.iter().all(|c| c.is_finite() && *c >= 0.0) {
            Ok(())
        } else {
            Err(Error::param("smoothness constants must be finite and ≥ 0"))
        }
    }

    /// `ℓ_k = L_f + L_h L_A¹ + σ ρ_A L_A⁰`.
    pub fn euclidean_lipschitz(&self, sigma: f64) -> f64 {
        self.lf + self.lh * self.la1 + sigma * self.rho_a * self.la0
    }

    /// `L_k(x) = ℓ_k α₁² + 2(‖∇f(x)‖ + ρ_A L_h) α₂`.
    pub fn riemannian_lipschitz(&self, sigma: f64, grad_f_norm: f64) -> f64 {
        self.euclidean_lipschitz(sigma) * self.alpha1 * self.alpha1
            + 2.0 * (grad_f_norm + self.rho_a * self.lh) * self.alpha2
    }
}

/// Snapshot of oracle counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleCounts {
    pub f: u64,
    pub grad_f: u64,
    pub a: u64,
    pub grad_a: u64,
    pub prox: u64,
}

impl OracleCounts {
    pub fn total(&self) -> u64 {
        self.f + self.grad_f + self.a + self.grad_a + self.prox
    }
}

impl Sub for OracleCounts {
    type Output = OracleCounts;
    fn sub(self, rhs: Self) -> Self {
        OracleCounts {
            f: self.f - rhs.f,
            grad_f: self.grad_f - rhs.grad_f,
            a: self.a - rhs.a,
            grad_a: self.grad_a - rhs.grad_a,
            prox: self.prox - rhs.prox,
        }
    }
}

/// Monotone first-order oracle counters.
#[derive(Debug, Default)]
pub struct OracleCounter {
    f: AtomicU64,
    grad_f: AtomicU64,
    a: AtomicU64,
    grad_a: AtomicU64,
    prox: AtomicU64,
}

impl OracleCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> OracleCounts {
        OracleCounts {
            f: self.f.load(Ordering::Relaxed),
            grad_f: self.grad_f.load(Ordering::Relaxed),
            a: self.a.load(Ordering::Relaxed),
            grad_a: self.grad_a.load(Ordering::Relaxed),
            prox: self.prox.load(Ordering::Relaxed),
        }
    }

    fn bump(c: &AtomicU64) {
        c.fetch_add(1, Ordering::Relaxed);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InvariantKind {
    /// `‖B(x)‖ ≤ L_h`.
    MultiplierEstimate,
    /// `Φ(x) − 3L_h²/(2σ) ≤ L(x)`.
    SandwichLower,
    /// `L(x) ≤ Φ(x) + L_h²/σ`.
    SandwichUpper,
    /// `L(x_t) − L(x_{t+1}) ≥ ‖grad L(x_t)‖² / (2 L_k(x_t))`.
    DescentBound,
    /// `‖z_k‖ ≤ L_h`.
    DualBound,
    /// `‖A(x_{k+1}) − y_{k+1}‖ ≤ 2L_h/σ_k`.
    FeasibilityBound,
    /// `r_grad ≤ ε_k` after a converged inner solve.
    GradientBound,
    /// `z_{k+1} ∈ ∂h(y_{k+1})`.
    SubgradientMembership,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantViolation {
    pub kind: InvariantKind,
    /// Outer iteration (1-based) when known.
    pub outer: Option<usize>,
    /// Value that should not exceed `bound`.
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {:e} > {:e}", self.kind, self.value, self.bound)?;
        if let Some(k) = self.outer {
            write!(f, " (outer {k})")?;
        }
        Ok(())
    }
}

/// `value ≤ bound` up to roundoff.
pub(crate) fn within(value: f64, bound: f64) -> bool {
    value <= bound + 1e-9 * (1.0 + bound.abs().max(value.abs()))
}

#[derive(Clone)]
pub struct CompositeProblem {
    manifold: Manifold,
    smooth: Arc<dyn SmoothFunction>,
    mapping: Arc<dyn SmoothMapping>,
    nonsmooth: NonsmoothTerm,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("manifold", &self.manifold)
            .field("nonsmooth", &self.nonsmooth)
            .field("linear_mapping", &self.mapping.is_linear())
            .finish()
    }
}

impl CompositeProblem {
    /// Binds the pieces after checking that `A` maps the manifold's ambient
    /// space into the argument space of `h` and that `∇Aᵀ` maps back.
    pub fn new(
        manifold: Manifold,
        smooth: Arc<dyn SmoothFunction>,
        mapping: Arc<dyn SmoothMapping>,
        nonsmooth: NonsmoothTerm,
    ) -> Result<Self> {
        Error::check_shape(
            "mapping output vs nonsmooth argument",
            nonsmooth.shape(),
            mapping.output_shape(),
        )?;
        let probe = manifold.random_point(0);
        let ax = mapping.apply(&probe);
        Error::check_shape("A(x)", nonsmooth.shape(), ax.shape())?;
        let back = mapping.adjoint(&probe, &ax);
        Error::check_shape("∇A(x)ᵀz", manifold.shape(), back.shape())?;
        Error::check_shape("∇f(x)", manifold.shape(), smooth.gradient(&probe).shape())?;
        Ok(CompositeProblem {
            manifold,
            smooth,
            mapping,
            nonsmooth,
        })
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }
    pub fn nonsmooth(&self) -> &NonsmoothTerm {
        &self.nonsmooth
    }
    pub fn smooth(&self) -> &dyn SmoothFunction {
        self.smooth.as_ref()
    }
    pub fn mapping(&self) -> &dyn SmoothMapping {
        self.mapping.as_ref()
    }
    /// Shape of `E₂`.
    pub fn dual_shape(&self) -> (usize, usize) {
        self.nonsmooth.shape()
    }

    /// `L_h` of the nonsmooth term.
    pub fn lipschitz_h(&self) -> Result<f64> {
        self.nonsmooth.lipschitz_bound()
    }

    /// `Φ(x) = f(x) + h(A(x))`.
    pub fn phi_value(&self, x: &Mat, counter: &OracleCounter) -> Result<f64> {
        self.manifold.ensure_feasible(x, INPUT_TOL)?;
        OracleCounter::bump(&counter.f);
        OracleCounter::bump(&counter.a);
        let f = self.smooth.value(x);
        Ok(f + self.nonsmooth.value(&self.mapping.apply(x))?)
    }

    pub fn augmented_lagrangian<'p>(
        &'p self,
        sigma: f64,
        z: Mat,
        counter: &'p OracleCounter,
    ) -> Result<AugmentedLagrangian<'p>> {
        AugmentedLagrangian::new(self, sigma, z, counter)
    }

    /// `L(x) = f(x) + M_{h/σ}(A(x) + z/σ)`; defined on the whole ambient space.
    pub fn al_value(&self, sigma: f64, z: &Mat, x: &Mat, counter: &OracleCounter) -> Result<f64> {
        self.augmented_lagrangian(sigma, z.clone(), counter)?
            .value(x)
    }

    pub fn al_euclidean_gradient(
        &self,
        sigma: f64,
        z: &Mat,
        x: &Mat,
        counter: &OracleCounter,
    ) -> Result<Mat> {
        self.augmented_lagrangian(sigma, z.clone(), counter)?
            .euclidean_gradient(x)
    }

    pub fn al_riemannian_gradient(
        &self,
        sigma: f64,
        z: &Mat,
        x: &Mat,
        counter: &OracleCounter,
    ) -> Result<Mat> {
        self.manifold.ensure_feasible(x, INPUT_TOL)?;
        self.augmented_lagrangian(sigma, z.clone(), counter)?
            .riemannian_gradient(x)
    }

    /// `(‖proj_{T_x M}(∇f(x) + ∇A(x)ᵀz)‖, ‖A(x) − y‖)`. The caller is
    /// responsible for `z ∈ ∂h(y)`.
    pub fn stationarity_residuals(
        &self,
        x: &Mat,
        y: &Mat,
        z: &Mat,
        counter: &OracleCounter,
    ) -> Result<(f64, f64)> {
        OracleCounter::bump(&counter.grad_f);
        OracleCounter::bump(&counter.a);
        let grad_f = self.smooth.gradient(x);
        let ax = self.mapping.apply(x);
        self.residuals_from(x, &grad_f, &ax, y, z, counter)
    }

    fn residuals_from(
        &self,
        x: &Mat,
        grad_f: &Mat,
        ax: &Mat,
        y: &Mat,
        z: &Mat,
        counter: &OracleCounter,
    ) -> Result<(f64, f64)> {
        Error::check_shape("stationarity y", self.dual_shape(), y.shape())?;
        Error::check_shape("stationarity z", self.dual_shape(), z.shape())?;
        OracleCounter::bump(&counter.grad_a);
        let kkt = grad_f + self.mapping.adjoint(x, z);
        let r_grad = self.manifold.riemannian_gradient(x, &kkt)?.norm();
        Ok((r_grad, (ax - y).norm()))
    }
}

struct PointCache {
    x: Mat,
    ax: Mat,
    prox: Mat,
    /// `B = σ(w − prox(w))`.
    mult: Mat,
    envelope: f64,
    f: Option<f64>,
    grad_f: Option<Mat>,
    egrad: Option<Mat>,
}

/// Augmented Lagrangian envelope `L(x)` for a fixed `(σ, z)`, with a
/// single-point oracle cache.
pub struct AugmentedLagrangian<'p> {
    problem: &'p CompositeProblem,
    sigma: f64,
    z: Mat,
    counter: &'p OracleCounter,
    cache: Option<PointCache>,
    checks: bool,
    /// `L_h` when invariant checks are on and a bound is known.
    check_lh: Option<f64>,
    violations: Vec<InvariantViolation>,
}

impl<'p> AugmentedLagrangian<'p> {
    pub fn new(
        problem: &'p CompositeProblem,
        sigma: f64,
        z: Mat,
        counter: &'p OracleCounter,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!(
                "penalty σ must be positive, got {sigma}"
            )));
        }
        Error::check_shape("multiplier z", problem.dual_shape(), z.shape())?;
        Ok(AugmentedLagrangian {
            problem,
            sigma,
            z,
            counter,
            cache: None,
            checks: false,
            check_lh: None,
            violations: Vec::new(),
        })
    }

    /// Turns on the runtime checks of `‖B(x)‖ ≤ L_h` and, while `‖z‖ ≤ L_h`,
    /// the sandwich `Φ − 3L_h²/(2σ) ≤ L ≤ Φ + L_h²/σ`. Silently stays off when
    /// no Lipschitz bound is available.
    pub fn with_invariant_checks(mut self, enabled: bool) -> Self {
        self.checks = enabled;
        self.check_lh = if enabled {
            self.problem.lipschitz_h().ok()
        } else {
            None
        };
        self
    }

    pub fn problem(&self) -> &'p CompositeProblem {
        self.problem
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn multiplier(&self) -> &Mat {
        &self.z
    }
    pub fn counter(&self) -> &'p OracleCounter {
        self.counter
    }
    pub fn checks_enabled(&self) -> bool {
        self.checks
    }
    pub fn violations(&self) -> &[InvariantViolation] {
        &self.violations
    }
    pub(crate) fn record_violation(&mut self, v: InvariantViolation) {
        self.violations.push(v);
    }
    pub fn take_violations(&mut self) -> Vec<InvariantViolation> {
        std::mem::take(&mut self.violations)
    }

    fn entry(&mut self, x: &Mat) -> Result<&mut PointCache> {
        let hit = self.cache.as_ref().is_some_and(|c| c.x == *x);
        if !hit {
            Error::check_shape("AL argument", self.problem.manifold.shape(), x.shape())?;
            OracleCounter::bump(&self.counter.a);
            let ax = self.problem.mapping.apply(x);
            let shifted = &ax + &self.z / self.sigma;
            OracleCounter::bump(&self.counter.prox);
            let h = &self.problem.nonsmooth;
            let lambda = 1.0 / self.sigma;
            let prox = h.prox(lambda, &shifted)?;
            let mult = h.scaled_residual(lambda, &(&ax * self.sigma + &self.z), &prox)?;
            // ‖prox − w‖²/(2λ) = ‖B‖²/(2σ)
            let envelope = h.value(&prox)? + mult.norm_squared() / (2.0 * self.sigma);
            self.cache = Some(PointCache {
                x: x.clone(),
                ax,
                prox,
                mult,
                envelope,
                f: None,
                grad_f: None,
                egrad: None,
            });
        }
        Ok(self.cache.as_mut().expect("cache populated above"))
    }

    pub fn value(&mut self, x: &Mat) -> Result<f64> {
        let counter = self.counter;
        let smooth = &self.problem.smooth;
        let entry = self.entry(x)?;
        let f = *entry.f.get_or_insert_with(|| {
            OracleCounter::bump(&counter.f);
            smooth.value(x)
        });
        let value = f + entry.envelope;
        if let Some(lh) = self.check_lh {
            self.check_sandwich(lh, value)?;
        }
        Ok(value)
    }

    fn check_sandwich(&mut self, lh: f64, value: f64) -> Result<()> {
        if self.z.norm() > lh {
            return Ok(());
        }
        let entry = self.cache.as_ref().expect("value populated the cache");
        // Φ(x) from cached pieces; h(·) is not an oracle call.
        let phi = entry.f.expect("value populated f") + self.problem.nonsmooth.value(&entry.ax)?;
        let lower = phi - 1.5 * lh * lh / self.sigma;
        let upper = phi + lh * lh / self.sigma;
        if !within(lower, value) {
            self.violations.push(InvariantViolation {
                kind: InvariantKind::SandwichLower,
                outer: None,
                value: lower,
                bound: value,
            });
        }
        if !within(value, upper) {
            self.violations.push(InvariantViolation {
                kind: InvariantKind::SandwichUpper,
                outer: None,
                value,
                bound: upper,
            });
        }
        Ok(())
    }

    pub fn euclidean_gradient(&mut self, x: &Mat) -> Result<Mat> {
        let counter = self.counter;
        let problem = self.problem;
        let check_lh = self.check_lh;
        let entry = self.entry(x)?;
        if let Some(g) = &entry.egrad {
            return Ok(g.clone());
        }
        let grad_f = entry
            .grad_f
            .get_or_insert_with(|| {
                OracleCounter::bump(&counter.grad_f);
                problem.smooth.gradient(x)
            })
            .clone();
        let b = entry.mult.clone();
        OracleCounter::bump(&counter.grad_a);
        let g = grad_f + problem.mapping.adjoint(x, &b);
        entry.egrad = Some(g.clone());
        if let Some(lh) = check_lh {
            let nb = b.norm();
            if !within(nb, lh) {
                self.violations.push(InvariantViolation {
                    kind: InvariantKind::MultiplierEstimate,
                    outer: None,
                    value: nb,
                    bound: lh,
                });
            }
        }
        Ok(g)
    }

    pub fn riemannian_gradient(&mut self, x: &Mat) -> Result<Mat> {
        let g = self.euclidean_gradient(x)?;
        self.problem.manifold.riemannian_gradient(x, &g)
    }

    /// `‖∇f(x)‖`, sharing the cached gradient.
    pub fn smooth_gradient_norm(&mut self, x: &Mat) -> Result<f64> {
        let counter = self.counter;
        let smooth = &self.problem.smooth;
        let entry = self.entry(x)?;
        Ok(entry
            .grad_f
            .get_or_insert_with(|| {
                OracleCounter::bump(&counter.grad_f);
                smooth.gradient(x)
            })
            .norm())
    }

    /// `(A(x), prox_{h/σ}(A(x) + z/σ))` at `x`, sharing the cache.
    pub fn mapping_and_prox(&mut self, x: &Mat) -> Result<(Mat, Mat)> {
        let entry = self.entry(x)?;
        Ok((entry.ax.clone(), entry.prox.clone()))
    }

    /// `B(x) = σ(A(x) + z/σ − prox)`, which is `z + σ(A(x) − y)` for the
    /// returned prox `y`.
    pub fn multiplier_at(&mut self, x: &Mat) -> Result<Mat> {
        Ok(self.entry(x)?.mult.clone())
    }

    /// Stationarity residuals at `x` for the pair `(y, z)`, reusing the cached
    /// `∇f(x)` and `A(x)`.
    pub fn stationarity_residuals(&mut self, x: &Mat, y: &Mat, z: &Mat) -> Result<(f64, f64)> {
        self.smooth_gradient_norm(x)?;
        let entry = self.cache.as_ref().expect("populated above");
        let grad_f = entry.grad_f.clone().expect("populated above");
        let ax = entry.ax.clone();
        self.problem
            .residuals_from(x, &grad_f, &ax, y, z, self.counter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    /// f(x) = x², A = id, h = |·| on Stiefel(1,1) = {±1}.
    fn toy() -> CompositeProblem {
        CompositeProblem::new(
            Manifold::stiefel(1, 1).unwrap(),
            Arc::new(FnSmooth::new(
                |x: &Mat| x[(0, 0)].powi(2),
                |x: &Mat| x * 2.0,
            )),
            Arc::new(IdentityMap { shape: (1, 1) }),
            NonsmoothTerm::l1(1.0, 1, 1).unwrap(),
        )
        .unwrap()
    }

    /// f = 0, A = id, h = |·|.
    fn huber_toy() -> CompositeProblem {
        CompositeProblem::new(
            Manifold::stiefel(1, 1).unwrap(),
            Arc::new(ZeroFunction),
            Arc::new(IdentityMap { shape: (1, 1) }),
            NonsmoothTerm::l1(1.0, 1, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn phi_examples() {
        let c = OracleCounter::new();
        assert_eq!(toy().phi_value(&scalar(1.0), &c).unwrap(), 2.0);
        assert_eq!(c.snapshot().f, 1);
        assert_eq!(c.snapshot().a, 1);

        let p = CompositeProblem::new(
            Manifold::stiefel(3, 2).unwrap(),
            Arc::new(ZeroFunction),
            Arc::new(IdentityMap { shape: (3, 2) }),
            NonsmoothTerm::zero(3, 2),
        )
        .unwrap();
        let x = p.manifold().random_point(1);
        assert_eq!(p.phi_value(&x, &c).unwrap(), 0.0);
    }

    #[test]
    fn phi_rejects_infeasible_points() {
        let c = OracleCounter::new();
        assert!(matches!(
            toy().phi_value(&scalar(1.5), &c),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn al_examples() {
        let p = huber_toy();
        let c = OracleCounter::new();
        let z = scalar(0.0);
        assert!((p.al_value(1.0, &z, &scalar(0.2), &c).unwrap() - 0.02).abs() < 1e-15);
        let g = p.al_euclidean_gradient(1.0, &z, &scalar(0.2), &c).unwrap();
        assert!((g[(0, 0)] - 0.2).abs() < 1e-15);
        assert!(p.al_value(0.0, &z, &scalar(0.2), &c).is_err());
        assert!(p.al_value(-1.0, &z, &scalar(0.2), &c).is_err());
    }

    #[test]
    fn al_with_zero_h_is_f() {
        let p = CompositeProblem::new(
            Manifold::stiefel(2, 1).unwrap(),
            Arc::new(FnSmooth::new(
                |x: &Mat| x.sum(),
                |x: &Mat| Mat::from_element(x.nrows(), 1, 1.0),
            )),
            Arc::new(ZeroMap { output: (1, 1) }),
            NonsmoothTerm::zero(1, 1),
        )
        .unwrap();
        let c = OracleCounter::new();
        let x = Mat::from_column_slice(2, 1, &[0.6, 0.8]);
        let z = scalar(0.3);
        assert!((p.al_value(2.0, &z, &x, &c).unwrap() - 1.4).abs() < 1e-15);
        let g = p.al_euclidean_gradient(2.0, &z, &x, &c).unwrap();
        assert_eq!(g, Mat::from_element(2, 1, 1.0));
    }

    #[test]
    fn riemannian_gradient_projects() {
        // f(x) = 3x₁ + 4x₂, h = 0: Euclidean gradient (3, 4), tangent at e₁ is e₂.
        let p = CompositeProblem::new(
            Manifold::stiefel(2, 1).unwrap(),
            Arc::new(FnSmooth::new(
                |x: &Mat| 3.0 * x[(0, 0)] + 4.0 * x[(1, 0)],
                |_: &Mat| Mat::from_column_slice(2, 1, &[3.0, 4.0]),
            )),
            Arc::new(ZeroMap { output: (1, 1) }),
            NonsmoothTerm::zero(1, 1),
        )
        .unwrap();
        let c = OracleCounter::new();
        let x = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let g = p.al_riemannian_gradient(1.0, &scalar(0.0), &x, &c).unwrap();
        assert_eq!(g, Mat::from_column_slice(2, 1, &[0.0, 4.0]));
    }

    #[test]
    fn value_and_gradient_share_oracle_calls() {
        let p = toy();
        let c = OracleCounter::new();
        let mut al = p.augmented_lagrangian(2.0, scalar(0.1), &c).unwrap();
        let x = scalar(1.0);
        al.value(&x).unwrap();
        al.euclidean_gradient(&x).unwrap();
        al.value(&x).unwrap();
        al.riemannian_gradient(&x).unwrap();
        assert_eq!(
            c.snapshot(),
            OracleCounts {
                f: 1,
                grad_f: 1,
                a: 1,
                grad_a: 1,
                prox: 1
            }
        );
        al.value(&scalar(-1.0)).unwrap();
        assert_eq!(c.snapshot().a, 2);
    }

    #[test]
    fn stationarity_residual_at_smooth_stationary_point() {
        // f(x) = −x₁ on the circle: minimizer e₁, h = 0, A = 0.
        let p = CompositeProblem::new(
            Manifold::stiefel(2, 1).unwrap(),
            Arc::new(FnSmooth::new(
                |x: &Mat| -x[(0, 0)],
                |_: &Mat| Mat::from_column_slice(2, 1, &[-1.0, 0.0]),
            )),
            Arc::new(ZeroMap { output: (1, 1) }),
            NonsmoothTerm::zero(1, 1),
        )
        .unwrap();
        let c = OracleCounter::new();
        let x = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let (rg, rf) = p
            .stationarity_residuals(&x, &scalar(0.0), &scalar(0.0), &c)
            .unwrap();
        assert_eq!((rg, rf), (0.0, 0.0));
    }

    #[test]
    fn invariant_checks_pass_on_toy() {
        let p = toy();
        let c = OracleCounter::new();
        let mut al = p
            .augmented_lagrangian(1.5, scalar(0.7), &c)
            .unwrap()
            .with_invariant_checks(true);
        for x in [-1.0, 1.0] {
            al.value(&scalar(x)).unwrap();
            al.euclidean_gradient(&scalar(x)).unwrap();
        }
        assert!(al.violations().is_empty());
    }

    #[test]
    fn theoretical_constants() {
        let k = SmoothnessConstants {
            lf: 1.0,
            lh: 2.0,
            la0: 1.0,
            la1: 0.5,
            rho_a: 1.0,
            alpha1: 1.0,
            alpha2: 0.5,
        };
        assert_eq!(k.euclidean_lipschitz(3.0), 1.0 + 1.0 + 3.0);
        assert_eq!(k.riemannian_lipschitz(3.0, 1.0), 5.0 + 2.0 * 3.0 * 0.5);
        let bad = SmoothnessConstants { lf: -1.0, ..k };
        assert!(bad.validate().is_err());
    }
}
