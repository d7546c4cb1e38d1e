//! Outer augmented Lagrangian loop.
//!
//! For `k = 1, 2, …` with `y₁ = z₁ = 0`:
//!
//! 1. `x_{k+1}` ≈ argmin_{x∈M} L_k(x)` by RGD, warm-started at `x_k`, to
//!    tolerance `ε_k`;
//! 2. `y_{k+1} = prox_{h/σ_k}(A(x_{k+1}) + z_k/σ_k)`;
//! 3. `z_{k+1} = z_k + σ_k (A(x_{k+1}) − y_{k+1})` (classical) or the damped
//!    baseline step;
//! 4. `σ_{k+1} = b σ_k`, `ε_{k+1} = ε_k / b`.
//!
//! The loop stops once both stationarity residuals are at most `ε`.

use std::time::Instant;

use crate::inner::{rgd_solve, InnerConfig, InnerStatus};
use crate::manifold::INPUT_TOL;
use crate::problem::{
    within, CompositeProblem, InvariantKind, InvariantViolation, OracleCounter, OracleCounts,
};
use crate::{Error, Mat, Result};

/// Tolerance on the elementwise `z ∈ ∂h(y)` check.
const SUBGRADIENT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DualMode {
    /// Full step `z + σ_k (A(x) − y)`.
    #[default]
    Classical,
    /// Step scaled by `β₀ min(‖A(x₁)−y₁‖ log²2 / (‖A(x)−y‖ (k+1)² log(k+2)), 1)`.
    Damped,
}

#[derive(Clone, Debug)]
pub struct OuterConfig {
    /// Target stationarity `ε`.
    pub eps: f64,
    /// Initial inner tolerance `ε₁`.
    pub eps1: f64,
    /// Initial penalty `σ₁`.
    pub sigma1: f64,
    /// Schedule factor `b > 1`.
    pub b: f64,
    pub max_outer: usize,
    pub dual_mode: DualMode,
    /// Damped-mode scale `β₀`.
    pub beta0: f64,
    pub inner: InnerConfig,
    /// Seed for the random initial point used by [`rial_solve`].
    pub seed: u64,
    /// Record proof-inequality violations; defaults to on in debug builds.
    pub check_invariants: bool,
}

impl Default for OuterConfig {
    fn default() -> Self {
        OuterConfig {
            eps: 1e-5,
            eps1: 1.5,
            sigma1: 1.5,
            b: 1.5,
            max_outer: 100,
            dual_mode: DualMode::Classical,
            beta0: 1.0,
            inner: InnerConfig::default(),
            seed: 0,
            check_invariants: cfg!(debug_assertions),
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 1.0 && self.b.is_finite()) {
            return Err(Error::param(format!(
                "schedule factor b must exceed 1, got {}",
                self.b
            )));
        }
        for (name, v) in [
            ("ε", self.eps),
            ("ε₁", self.eps1),
            ("σ₁", self.sigma1),
            ("β₀", self.beta0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_outer == 0 {
            return Err(Error::param("max_outer must be ≥ 1"));
        }
        self.inner.validate()
    }

    /// `σ_k = σ₁ b^{k−1}`.
    pub fn sigma_at(&self, k: usize) -> f64 {
        self.sigma1 * self.b.powi(k as i32 - 1)
    }

    /// `ε_k = ε₁ / b^{k−1}`.
    pub fn eps_at(&self, k: usize) -> f64 {
        self.eps1 / self.b.powi(k as i32 - 1)
    }
}

/// Outer-iteration state after `k` completed iterations (`k = 0` initially).
#[derive(Clone, Debug)]
pub struct AlState {
    pub k: usize,
    pub x: Mat,
    pub y: Mat,
    pub z: Mat,
    /// Penalty for the next iteration.
    pub sigma: f64,
    /// Inner tolerance for the next iteration.
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub k: usize,
    /// `Φ(x_{k+1})`.
    pub phi: f64,
    pub r_grad: f64,
    pub r_feas: f64,
    pub sigma: f64,
    pub eps_k: f64,
    /// `‖z_{k+1}‖`.
    pub z_norm: f64,
    /// RGD steps `t_k` of this iteration.
    pub inner_iterations: usize,
    pub inner_status: InnerStatus,
    /// `Σ_{j≤k} t_j`.
    pub cumulative_inner_iterations: usize,
    /// Cumulative oracle calls, excluding the `Φ` evaluation for this record.
    pub oracle: OracleCounts,
    /// Seconds since the solve started.
    pub elapsed_secs: f64,
}

impl IterationRecord {
    pub fn inner_converged(&self) -> bool {
        self.inner_status == InnerStatus::Converged
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxOuterReached,
}

#[derive(Clone, Debug)]
pub struct RialOutput {
    pub state: AlState,
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
    /// Empty unless `check_invariants` was set and an inequality failed.
    pub violations: Vec<InvariantViolation>,
}

impl RialOutput {
    pub fn outer_iterations(&self) -> usize {
        self.records.len()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.records
            .last()
            .map_or(0, |r| r.cumulative_inner_iterations)
    }
}

/// Multiplier update.
pub fn dual_update(
    mode: DualMode,
    z: &Mat,
    sigma: f64,
    residual: &Mat,
    k: usize,
    beta0: f64,
    initial_residual_norm: f64,
) -> Mat {
    match mode {
        DualMode::Classical => z + residual * sigma,
        DualMode::Damped => {
            z + residual * (beta0 * damped_factor(k, residual.norm(), initial_residual_norm))
        }
    }
}

fn damped_factor(k: usize, residual_norm: f64, initial_residual_norm: f64) -> f64 {
    if residual_norm == 0.0 {
        // z_{k+1} = z_k whatever the factor.
        return 1.0;
    }
    let k = k as f64;
    let ln2 = std::f64::consts::LN_2;
    let ratio =
        initial_residual_norm * ln2 * ln2 / (residual_norm * (k + 1.0).powi(2) * (k + 2.0).ln());
    ratio.min(1.0)
}

/// `(b σ, ε / b)`.
pub fn schedule_update(sigma: f64, eps: f64, b: f64) -> Result<(f64, f64)> {
    if !(b > 1.0) {
        return Err(Error::param(format!(
            "schedule factor b must exceed 1, got {b}"
        )));
    }
    Ok((b * sigma, eps / b))
}

/// Outer-iteration bound `K = 1 + ⌈log_b(max{2L_h/σ₁, ε₁} / ε)⌉`; 1 when the
/// ratio is at most one.
pub fn predict_outer_iterations(
    lh: f64,
    sigma1: f64,
    eps1: f64,
    b: f64,
    eps: f64,
) -> Result<usize> {
    if !(lh >= 0.0) || !(sigma1 > 0.0) || !(eps1 > 0.0) || !(eps > 0.0) {
        return Err(Error::param(
            "predict_outer_iterations needs L_h ≥ 0 and σ₁, ε₁, ε > 0",
        ));
    }
    if !(b > 1.0) {
        return Err(Error::param(format!(
            "schedule factor b must exceed 1, got {b}"
        )));
    }
    let ratio = (2.0 * lh / sigma1).max(eps1) / eps;
    if ratio <= 1.0 {
        return Ok(1);
    }
    let exponent = ratio.ln() / b.ln();
    // Absorb roundoff when the ratio is an exact power of b.
    let steps = (exponent - 1e-9 * exponent.max(1.0)).ceil().max(0.0);
    Ok(1 + steps as usize)
}

/// Runs RiAL from a random initial point drawn with `cfg.seed`.
pub fn rial_solve(problem: &CompositeProblem, cfg: &OuterConfig) -> Result<RialOutput> {
    let x1 = problem.manifold().random_point(cfg.seed);
    rial_solve_from(problem, &x1, cfg, |_| {})
}

/// Runs RiAL from `x1`, handing every [`IterationRecord`] to `sink` as it is
/// produced.
pub fn rial_solve_from(
    problem: &CompositeProblem,
    x1: &Mat,
    cfg: &OuterConfig,
    mut sink: impl FnMut(&IterationRecord),
) -> Result<RialOutput> {
    cfg.validate()?;
    problem.manifold().ensure_feasible(x1, INPUT_TOL)?;

    let start = Instant::now();
    let counter = OracleCounter::new();
    let lh = problem.lipschitz_h().ok();
    let h = problem.nonsmooth();
    let (m, n) = problem.dual_shape();

    let mut state = AlState {
        k: 0,
        x: x1.clone(),
        y: Mat::zeros(m, n),
        z: Mat::zeros(m, n),
        sigma: cfg.sigma1,
        eps: cfg.eps1,
    };
    let initial_residual_norm = match cfg.dual_mode {
        DualMode::Damped => {
            let probe = problem.augmented_lagrangian(1.0, Mat::zeros(m, n), &counter)?;
            let mut probe = probe;
            (probe.mapping_and_prox(x1)?.0 - &state.y).norm()
        }
        DualMode::Classical => 0.0,
    };

    let mut records = Vec::new();
    let mut violations = Vec::new();
    let mut cumulative = 0;
    let mut status = RunStatus::MaxOuterReached;

    for k in 1..=cfg.max_outer {
        let sigma = cfg.sigma_at(k);
        let eps_k = cfg.eps_at(k);
        let mut al = problem
            .augmented_lagrangian(sigma, state.z.clone(), &counter)?
            .with_invariant_checks(cfg.check_invariants);

        let inner = match rgd_solve(&mut al, &state.x, eps_k, &cfg.inner) {
            Ok(r) => r,
            Err(Error::LineSearchStalled { partial, .. }) => *partial,
            Err(e) => return Err(e),
        };
        let x_next = inner.point;

        let (ax, y_next) = al.mapping_and_prox(&x_next)?;
        let residual = &ax - &y_next;
        // z_k + σ_k(A(x_{k+1}) − y_{k+1}) ∈ ∂h(y_{k+1}) by prox optimality.
        let certificate = al.multiplier_at(&x_next)?;
        let z_next = match cfg.dual_mode {
            DualMode::Classical => certificate.clone(),
            mode => dual_update(
                mode,
                &state.z,
                sigma,
                &residual,
                k,
                cfg.beta0,
                initial_residual_norm,
            ),
        };
        // Residuals use the certificate, which equals z_{k+1} in classical
        // mode. The damped z_{k+1} is generally not in ∂h(y_{k+1}).
        let (r_grad, r_feas) = al.stationarity_residuals(&x_next, &y_next, &certificate)?;

        if cfg.check_invariants {
            violations.extend(
                al.take_violations()
                    .into_iter()
                    .map(|v| InvariantViolation {
                        outer: Some(k),
                        ..v
                    }),
            );
            let mut flag = |kind, value: f64, bound: f64| {
                if !within(value, bound) {
                    violations.push(InvariantViolation {
                        kind,
                        outer: Some(k),
                        value,
                        bound,
                    });
                }
            };
            if cfg.dual_mode == DualMode::Classical && inner.status == InnerStatus::Converged {
                flag(InvariantKind::GradientBound, r_grad, eps_k);
            }
            if let (DualMode::Classical, Some(lh)) = (cfg.dual_mode, lh) {
                if let Some(gap) = h.subgradient_violation(&y_next, &certificate) {
                    flag(InvariantKind::SubgradientMembership, gap, SUBGRADIENT_TOL);
                }
                flag(InvariantKind::DualBound, z_next.norm(), lh);
                flag(InvariantKind::FeasibilityBound, r_feas, 2.0 * lh / sigma);
            }
        }

        cumulative += inner.iterations;
        let oracle = counter.snapshot();
        let phi = problem.phi_value(&x_next, &OracleCounter::new())?;
        let record = IterationRecord {
            k,
            phi,
            r_grad,
            r_feas,
            sigma,
            eps_k,
            z_norm: z_next.norm(),
            inner_iterations: inner.iterations,
            inner_status: inner.status,
            cumulative_inner_iterations: cumulative,
            oracle,
            elapsed_secs: start.elapsed().as_secs_f64(),
        };
        sink(&record);
        records.push(record);

        let (sigma_next, eps_next) = schedule_update(sigma, eps_k, cfg.b)?;
        state = AlState {
            k,
            x: x_next,
            y: y_next,
            z: z_next,
            sigma: sigma_next,
            eps: eps_next,
        };

        if r_grad <= cfg.eps && r_feas <= cfg.eps {
            status = RunStatus::Converged;
            break;
        }
    }

    Ok(RialOutput {
        state,
        records,
        status,
        violations,
    })
}
