//! Riemannian gradient descent for the augmented Lagrangian subproblem
//! `min_{x∈M} L(x)`:
//!
//! ```text
//! x_{t+1} = R_{x_t}(−ζ_t grad L(x_t)),   stop once ‖grad L(x_t)‖ ≤ ε
//! ```
//!
//! Stepsizes come either from alternating Barzilai–Borwein guesses refined by
//! (optionally nonmonotone) Armijo backtracking, or from the constant-free
//! theoretical rule `ζ_t = 1/L_k(x_t)`.

use std::collections::VecDeque;

use crate::problem::{
    within, AugmentedLagrangian, InvariantKind, InvariantViolation, SmoothnessConstants,
};
use crate::{linalg::inner, Error, Mat, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StepsizeMode {
    #[default]
    BbBacktracking,
    /// `ζ = 1/L_k(x)`; needs [`InnerConfig::constants`].
    Theoretical,
}

#[derive(Clone, Debug)]
pub struct InnerConfig {
    pub stepsize_mode: StepsizeMode,
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub shrink: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Number of recent values the Armijo reference is taken over; 1 is
    /// monotone.
    pub nonmonotone_window: usize,
    pub max_halvings: usize,
    pub constants: Option<SmoothnessConstants>,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            stepsize_mode: StepsizeMode::BbBacktracking,
            max_iters: 5000,
            armijo: 1e-4,
            shrink: 0.5,
            step_min: 1e-10,
            step_max: 1e10,
            nonmonotone_window: 1,
            max_halvings: 60,
            constants: None,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::param("shrink factor must lie in (0, 1)"));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::param("Armijo constant must lie in (0, 1)"));
        }
        if !(self.step_min > 0.0 && self.step_min < self.step_max) {
            return Err(Error::param("need 0 < step_min < step_max"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be ≥ 1"));
        }
        if self.nonmonotone_window == 0 {
            return Err(Error::param("nonmonotone window must be ≥ 1"));
        }
        if self.stepsize_mode == StepsizeMode::Theoretical {
            match &self.constants {
                Some(c) => c.validate()?,
                None => {
                    return Err(Error::Unsupported(
                        "theoretical stepsize needs smoothness constants".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    fn clamp(&self, step: f64) -> f64 {
        if step.is_nan() {
            1.0
        } else {
            step.clamp(self.step_min, self.step_max)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerStatus {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Clone, Debug)]
pub struct InnerResult {
    pub point: Mat,
    pub grad_norm: f64,
    /// Accepted RGD steps.
    pub iterations: usize,
    /// `L(x_t)` for every iterate, starting with `x₀`.
    pub values: Vec<f64>,
    pub status: InnerStatus,
}

impl InnerResult {
    pub fn converged(&self) -> bool {
        self.status == InnerStatus::Converged
    }
}

/// Alternating Barzilai–Borwein stepsize: `⟨s,s⟩/⟨s,y⟩` for even `t`,
/// `⟨s,y⟩/⟨y,y⟩` for odd `t`, clamped to `[step_min, step_max]`. Falls back to
/// 1 when `⟨s,y⟩ ≤ 0`.
pub fn bb_stepsize(s: &Mat, g_diff: &Mat, t: usize, step_min: f64, step_max: f64) -> f64 {
    bb_from_products(
        inner(s, s),
        inner(s, g_diff),
        inner(g_diff, g_diff),
        t,
        step_min,
        step_max,
    )
}

/// BB step from precomputed `⟨s,s⟩`, `⟨s,y⟩`, `⟨y,y⟩` in any inner product.
fn bb_from_products(ss: f64, sy: f64, yy: f64, t: usize, step_min: f64, step_max: f64) -> f64 {
    if !(sy > 0.0) {
        return 1.0;
    }
    let step = if t % 2 == 0 { ss / sy } else { sy / yy };
    step.clamp(step_min, step_max)
}

/// `1/L_k(x)` with `L_k(x) = ℓ_k α₁² + 2(‖∇f(x)‖ + ρ_A L_h) α₂`. Returns
/// `+∞` when every constant vanishes.
pub fn theoretical_stepsize(
    constants: Option<&SmoothnessConstants>,
    sigma: f64,
    grad_f_norm: f64,
) -> Result<f64> {
    let c = constants.ok_or_else(|| {
        Error::Unsupported("theoretical stepsize needs smoothness constants".into())
    })?;
    if !(sigma > 0.0) {
        return Err(Error::param("σ must be positive"));
    }
    Ok(1.0 / c.riemannian_lipschitz(sigma, grad_f_norm))
}

/// Runs RGD on `al` from `x0` until `‖grad L‖ ≤ tol` or the iteration cap.
///
/// Hitting the cap is not an error; the result carries
/// [`InnerStatus::MaxIterations`]. A backtracking failure returns
/// [`Error::LineSearchStalled`] with the last iterate attached.
pub fn rgd_solve(
    al: &mut AugmentedLagrangian<'_>,
    x0: &Mat,
    tol: f64,
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    cfg.validate()?;
    if !(tol > 0.0) {
        return Err(Error::param("inner tolerance must be positive"));
    }
    let manifold = al.problem().manifold();
    let sigma = al.sigma();

    let mut x = x0.clone();
    let mut value = al.value(&x)?;
    let mut grad = al.riemannian_gradient(&x)?;
    let mut grad_norm = grad.norm();
    let mut values = vec![value];
    let mut window = VecDeque::from([value]);
    let mut bb_pair: Option<(Mat, Mat)> = None;

    let mut t = 0;
    let status = loop {
        if grad_norm <= tol {
            break InnerStatus::Converged;
        }
        if t == cfg.max_iters {
            break InnerStatus::MaxIterations;
        }

        let (next, next_value) = match cfg.stepsize_mode {
            StepsizeMode::Theoretical => {
                let gf = al.smooth_gradient_norm(&x)?;
                let step = cfg.clamp(theoretical_stepsize(cfg.constants.as_ref(), sigma, gf)?);
                let next = manifold.retract(&x, &(&grad * -step))?;
                let next_value = al.value(&next)?;
                if al.checks_enabled() {
                    let required = 0.5 * step * grad_norm * grad_norm;
                    let achieved = value - next_value;
                    if !within(required, achieved) {
                        al.record_violation(InvariantViolation {
                            kind: InvariantKind::DescentBound,
                            outer: None,
                            value: required,
                            bound: achieved,
                        });
                    }
                }
                (next, next_value)
            }
            StepsizeMode::BbBacktracking => {
                let mut step = match &bb_pair {
                    None => cfg.clamp(1.0 / grad_norm),
                    // Inner products in the manifold metric, so the G-metric
                    // case sees the same ratios as its gradient.
                    Some((s, y)) => bb_from_products(
                        manifold.metric(s, s),
                        manifold.metric(s, y),
                        manifold.metric(y, y),
                        t,
                        cfg.step_min,
                        cfg.step_max,
                    ),
                };
                let reference = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                // −d/dζ L(R_x(−ζ grad)) at ζ = 0 is the metric norm², not ‖grad‖²_F.
                let decrease = cfg.armijo * manifold.metric(&grad, &grad);
                let mut accepted = None;
                for _ in 0..=cfg.max_halvings {
                    // A failed retraction counts as a rejected trial.
                    if let Ok(trial) = manifold.retract(&x, &(&grad * -step)) {
                        let trial_value = al.value(&trial)?;
                        if trial_value <= reference - step * decrease {
                            accepted = Some((trial, trial_value));
                            break;
                        }
                    }
                    step *= cfg.shrink;
                }
                match accepted {
                    Some(a) => a,
                    None => {
                        return Err(Error::LineSearchStalled {
                            iteration: t,
                            halvings: cfg.max_halvings,
                            partial: Box::new(InnerResult {
                                point: x,
                                grad_norm,
                                iterations: t,
                                values,
                                status: InnerStatus::Stalled,
                            }),
                        })
                    }
                }
            }
        };

        let next_grad = al.riemannian_gradient(&next)?;
        if cfg.stepsize_mode == StepsizeMode::BbBacktracking {
            let s = &next - &x;
            let y = &next_grad - manifold.tangent_project(&next, &grad)?;
            bb_pair = Some((s, y));
        }
        x = next;
        value = next_value;
        grad_norm = next_grad.norm();
        grad = next_grad;
        values.push(value);
        window.push_back(value);
        while window.len() > cfg.nonmonotone_window {
            window.pop_front();
        }
        t += 1;
    };

    Ok(InnerResult {
        point: x,
        grad_norm,
        iterations: t,
        values,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use crate::nonsmooth::NonsmoothTerm;
    use crate::problem::{CompositeProblem, FnSmooth, IdentityMap, OracleCounter, ZeroMap};
    use std::sync::Arc;

    fn v(x: f64, y: f64) -> Mat {
        Mat::from_column_slice(2, 1, &[x, y])
    }

    #[test]
    fn bb_examples() {
        let s = v(2.0, 0.0);
        let y = v(1.0, 0.0);
        // ⟨s,s⟩/⟨s,y⟩ = 4/2 and ⟨s,y⟩/⟨y,y⟩ = 2/1
        assert_eq!(bb_stepsize(&s, &y, 0, 1e-10, 1e10), 2.0);
        assert_eq!(bb_stepsize(&s, &y, 1, 1e-10, 1e10), 2.0);
        let y2 = v(1.0, 1.0);
        assert_eq!(bb_stepsize(&s, &y2, 0, 1e-10, 1e10), 2.0);
        assert_eq!(bb_stepsize(&s, &y2, 1, 1e-10, 1e10), 1.0);
        let same = v(0.3, -0.4);
        assert!((bb_stepsize(&same, &same, 0, 1e-10, 1e10) - 1.0).abs() < 1e-15);
        assert!((bb_stepsize(&same, &same, 1, 1e-10, 1e10) - 1.0).abs() < 1e-15);
        assert_eq!(bb_stepsize(&v(0.0, 0.0), &v(0.0, 0.0), 0, 1e-10, 1e10), 1.0);
        assert_eq!(bb_stepsize(&s, &(&y * -1.0), 0, 1e-10, 1e10), 1.0);
        assert_eq!(bb_stepsize(&s, &(&y * 1e-20), 0, 1e-10, 1e10), 1e10);
    }

    fn constants(lf: f64, rho_la0: f64, alpha2: f64) -> SmoothnessConstants {
        SmoothnessConstants {
            lf,
            lh: 0.0,
            la0: rho_la0,
            la1: 0.0,
            rho_a: 1.0,
            alpha1: 1.0,
            alpha2,
        }
    }

    #[test]
    fn theoretical_examples() {
        let c = constants(1.0, 0.0, 0.0);
        assert_eq!(theoretical_stepsize(Some(&c), 1.0, 5.0).unwrap(), 1.0);
        let c = constants(0.0, 2.0, 0.0);
        assert_eq!(theoretical_stepsize(Some(&c), 1.0, 0.0).unwrap(), 0.5);
        assert!(
            theoretical_stepsize(Some(&c), 2.0, 0.0).unwrap()
                < theoretical_stepsize(Some(&c), 1.0, 0.0).unwrap()
        );
        assert!(matches!(
            theoretical_stepsize(None, 1.0, 0.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(InnerConfig::default().validate().is_ok());
        for bad in [
            InnerConfig {
                shrink: 1.0,
                ..Default::default()
            },
            InnerConfig {
                armijo: 0.0,
                ..Default::default()
            },
            InnerConfig {
                max_iters: 0,
                ..Default::default()
            },
            InnerConfig {
                step_min: 1.0,
                step_max: 1.0,
                ..Default::default()
            },
            InnerConfig {
                stepsize_mode: StepsizeMode::Theoretical,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    fn quadratic_problem(target: Mat) -> CompositeProblem {
        let t2 = target.clone();
        CompositeProblem::new(
            Manifold::stiefel(target.nrows(), target.ncols()).unwrap(),
            Arc::new(FnSmooth::new(
                move |x: &Mat| 0.5 * (x - &target).norm_squared(),
                move |x: &Mat| x - &t2,
            )),
            Arc::new(ZeroMap { output: (1, 1) }),
            NonsmoothTerm::zero(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn already_stationary_start_takes_no_step() {
        let target = Mat::from_fn(4, 2, |i, j| if i == j { 3.0 } else { 0.0 });
        let p = quadratic_problem(target);
        let c = OracleCounter::new();
        let mut al = p.augmented_lagrangian(1.0, Mat::zeros(1, 1), &c).unwrap();
        let x0 = Mat::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let res = rgd_solve(&mut al, &x0, 1e-8, &InnerConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert!(res.converged());
        assert_eq!(res.point, x0);
    }

    #[test]
    fn quadratic_on_stiefel_converges() {
        let target = Mat::from_fn(5, 2, |i, j| ((i + 2 * j) as f64).cos() * 2.0);
        let p = quadratic_problem(target);
        let c = OracleCounter::new();
        let mut al = p.augmented_lagrangian(1.0, Mat::zeros(1, 1), &c).unwrap();
        let x0 = p.manifold().random_point(4);
        let res = rgd_solve(&mut al, &x0, 1e-6, &InnerConfig::default()).unwrap();
        assert!(res.converged(), "{:?}", res.status);
        assert!(res.grad_norm <= 1e-6);
        assert!(res.iterations <= 5000);
        assert!(p.manifold().check_feasibility(&res.point).unwrap() < 1e-10);
        // Monotone Armijo line search.
        assert!(res.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_cap_is_reported_not_raised() {
        let target = Mat::from_fn(5, 2, |i, j| ((i + 2 * j) as f64).cos() * 2.0);
        let p = quadratic_problem(target);
        let c = OracleCounter::new();
        let mut al = p.augmented_lagrangian(1.0, Mat::zeros(1, 1), &c).unwrap();
        let x0 = p.manifold().random_point(4);
        let cfg = InnerConfig {
            max_iters: 2,
            ..Default::default()
        };
        let res = rgd_solve(&mut al, &x0, 1e-12, &cfg).unwrap();
        assert_eq!(res.status, InnerStatus::MaxIterations);
        assert_eq!(res.iterations, 2);
    }

    #[test]
    fn theoretical_mode_descends_on_circle() {
        // f(x) = ½ xᵀQx on S(2,1), A = id, h = μ‖·‖₁.
        let q = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let q2 = q.clone();
        let mu = 0.3;
        let p = CompositeProblem::new(
            Manifold::stiefel(2, 1).unwrap(),
            Arc::new(FnSmooth::new(
                move |x: &Mat| 0.5 * (x.transpose() * &q * x)[(0, 0)],
                move |x: &Mat| &q2 * x,
            )),
            Arc::new(IdentityMap { shape: (2, 1) }),
            NonsmoothTerm::l1(mu, 2, 1).unwrap(),
        )
        .unwrap();
        let lf = 2.0f64.max(1.0) + 0.6; // ≥ ‖Q‖₂
        let cfg = InnerConfig {
            stepsize_mode: StepsizeMode::Theoretical,
            constants: Some(SmoothnessConstants {
                lf,
                lh: mu * 2f64.sqrt(),
                la0: 1.0,
                la1: 0.0,
                rho_a: 1.0,
                alpha1: 1.0,
                alpha2: 0.5,
            }),
            ..Default::default()
        };
        let c = OracleCounter::new();
        let mut al = p
            .augmented_lagrangian(1.5, Mat::zeros(2, 1), &c)
            .unwrap()
            .with_invariant_checks(true);
        let x0 = Mat::from_column_slice(2, 1, &[0.6, 0.8]);
        let res = rgd_solve(&mut al, &x0, 1e-8, &cfg).unwrap();
        assert!(res.converged());
        assert!(res.values.windows(2).all(|w| w[1] <= w[0]));
        assert!(al.violations().is_empty(), "{:?}", al.violations());
    }
}
