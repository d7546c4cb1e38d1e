//! Convex Lipschitz nonsmooth terms `h`: value, proximal mapping, Moreau
//! envelope and a Lipschitz bound.
//!
//! ```text
//! prox_{λh}(w) = argmin_u  h(u) + ‖u − w‖² / (2λ)
//! M_{λh}(w)    = h(prox_{λh}(w)) + ‖prox_{λh}(w) − w‖² / (2λ)
//! ∇M_{λh}(w)   = (w − prox_{λh}(w)) / λ
//! ```
//!
//! Built-ins are the zero function and (row-block weighted) ℓ1 norms.
//! Anything else plugs in through [`ProxFunction`].

use std::fmt;
use std::sync::Arc;

use crate::{Error, Mat, Result};

/// User-supplied convex term. Convexity and Lipschitz continuity are the
/// implementor's obligations.
pub trait ProxFunction: Send + Sync {
    fn shape(&self) -> (usize, usize);
    fn value(&self, w: &Mat) -> f64;
    /// Minimizer of `h(u) + ‖u − w‖²/(2λ)`; `lambda > 0` is guaranteed.
    fn prox(&self, lambda: f64, w: &Mat) -> Mat;
    /// A Lipschitz constant in Frobenius norm, if one is known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }
}

/// Rows `rows` of the argument carry weight `mu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowBlock {
    pub rows: usize,
    pub mu: f64,
}

#[derive(Clone)]
pub enum NonsmoothTerm {
    Zero {
        shape: (usize, usize),
    },
    /// `Σ_b μ_b ‖W_b‖₁` over vertically stacked row blocks `W_b`.
    L1 {
        blocks: Vec<RowBlock>,
        cols: usize,
    },
    Custom(Arc<dyn ProxFunction>),
}

impl fmt::Debug for NonsmoothTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonsmoothTerm::Zero { shape } => f.debug_struct("Zero").field("shape", shape).finish(),
            NonsmoothTerm::L1 { blocks, cols } => f
                .debug_struct("L1")
                .field("blocks", blocks)
                .field("cols", cols)
                .finish(),
            NonsmoothTerm::Custom(c) => {
                f.debug_struct("Custom").field("shape", &c.shape()).finish()
            }
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "prox parameter λ must be positive, got {lambda}"
        )))
    }
}

fn soft_threshold(w: f64, t: f64) -> f64 {
    w.signum() * (w.abs() - t).max(0.0)
}

impl NonsmoothTerm {
    pub fn zero(rows: usize, cols: usize) -> Self {
        NonsmoothTerm::Zero {
            shape: (rows, cols),
        }
    }

    /// `μ ‖W‖₁` on `rows × cols` matrices.
    pub fn l1(mu: f64, rows: usize, cols: usize) -> Result<Self> {
        Self::block_l1(vec![RowBlock { rows, mu }], cols)
    }

    pub fn block_l1(blocks: Vec<RowBlock>, cols: usize) -> Result<Self> {
        if let Some(b) = blocks.iter().find(|b| !(b.mu >= 0.0 && b.mu.is_finite())) {
            return Err(Error::param(format!("ℓ1 weight must be ≥ 0, got {}", b.mu)));
        }
        Ok(NonsmoothTerm::L1 { blocks, cols })
    }

    pub fn custom(term: Arc<dyn ProxFunction>) -> Self {
        NonsmoothTerm::Custom(term)
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            NonsmoothTerm::Zero { shape } => *shape,
            NonsmoothTerm::L1 { blocks, cols } => (blocks.iter().map(|b| b.rows).sum(), *cols),
            NonsmoothTerm::Custom(c) => c.shape(),
        }
    }

    /// Weight of each row for ℓ1 terms.
    fn row_weights(blocks: &[RowBlock]) -> impl Iterator<Item = f64> + '_ {
        blocks
            .iter()
            .flat_map(|b| std::iter::repeat_n(b.mu, b.rows))
    }

    fn check(&self, w: &Mat) -> Result<()> {
        Error::check_shape("nonsmooth term argument", self.shape(), w.shape())
    }

    pub fn value(&self, w: &Mat) -> Result<f64> {
        self.check(w)?;
        Ok(match self {
            NonsmoothTerm::Zero { .. } => 0.0,
            NonsmoothTerm::L1 { blocks, .. } => Self::row_weights(blocks)
                .enumerate()
                .map(|(i, mu)| mu * w.row(i).iter().map(|v| v.abs()).sum::<f64>())
                .sum(),
            NonsmoothTerm::Custom(c) => c.value(w),
        })
    }

    pub fn prox(&self, lambda: f64, w: &Mat) -> Result<Mat> {
        check_lambda(lambda)?;
        self.check(w)?;
        Ok(match self {
            NonsmoothTerm::Zero { .. } => w.clone(),
            NonsmoothTerm::L1 { blocks, .. } => {
                let mut out = w.clone();
                for (i, mu) in Self::row_weights(blocks).enumerate() {
                    let t = lambda * mu;
                    for v in out.row_mut(i).iter_mut() {
                        *v = soft_threshold(*v, t);
                    }
                }
                out
            }
            NonsmoothTerm::Custom(c) => c.prox(lambda, w),
        })
    }

    /// `(w − prox_{λh}(w))/λ` given `v = w/λ` and the prox. For ℓ1 this is
    /// evaluated as the clip of `v` to `[−μ, μ]` (Moreau decomposition), which
    /// stays accurate when `1/λ` is huge.
    pub fn scaled_residual(&self, lambda: f64, v: &Mat, prox: &Mat) -> Result<Mat> {
        check_lambda(lambda)?;
        self.check(v)?;
        Ok(match self {
            NonsmoothTerm::Zero { shape } => Mat::zeros(shape.0, shape.1),
            NonsmoothTerm::L1 { blocks, .. } => {
                let mut out = v.clone();
                for (i, mu) in Self::row_weights(blocks).enumerate() {
                    for e in out.row_mut(i).iter_mut() {
                        *e = e.clamp(-mu, mu);
                    }
                }
                out
            }
            NonsmoothTerm::Custom(_) => v - prox / lambda,
        })
    }

    /// `(prox_{λh}(w), M_{λh}(w))` from a single prox evaluation.
    pub fn prox_and_envelope(&self, lambda: f64, w: &Mat) -> Result<(Mat, f64)> {
        let p = self.prox(lambda, w)?;
        let value = self.value(&p)? + (&p - w).norm_squared() / (2.0 * lambda);
        Ok((p, value))
    }

    pub fn moreau_value(&self, lambda: f64, w: &Mat) -> Result<f64> {
        Ok(self.prox_and_envelope(lambda, w)?.1)
    }

    pub fn moreau_gradient(&self, lambda: f64, w: &Mat) -> Result<Mat> {
        let p = self.prox(lambda, w)?;
        Ok((w - p) / lambda)
    }

    /// Lipschitz constant in Frobenius norm: `sqrt(Σ_b μ_b² · rows_b · cols)`
    /// for ℓ1, which is `μ√(mn)` for a single block.
    pub fn lipschitz_bound(&self) -> Result<f64> {
        match self {
            NonsmoothTerm::Zero { .. } => Ok(0.0),
            NonsmoothTerm::L1 { blocks, cols } => Ok(blocks
                .iter()
                .map(|b| b.mu * b.mu * (b.rows * cols) as f64)
                .sum::<f64>()
                .sqrt()),
            NonsmoothTerm::Custom(c) => c.lipschitz_bound().ok_or_else(|| {
                Error::Unsupported("user-supplied nonsmooth term has no Lipschitz bound".into())
            }),
        }
    }

    /// Largest elementwise violation of `z ∈ ∂h(y)`, when checkable.
    ///
    /// For ℓ1 this is `|z_ij| ≤ μ` everywhere and `z_ij = μ sign(y_ij)` where
    /// `y_ij ≠ 0`. Returns `None` for custom terms.
    pub fn subgradient_violation(&self, y: &Mat, z: &Mat) -> Option<f64> {
        match self {
            NonsmoothTerm::Zero { .. } => Some(z.amax()),
            NonsmoothTerm::L1 { blocks, .. } => {
                let mut worst: f64 = 0.0;
                for (i, mu) in Self::row_weights(blocks).enumerate() {
                    for (&yv, &zv) in y.row(i).iter().zip(z.row(i).iter()) {
                        let v = if yv != 0.0 {
                            (zv - mu * yv.signum()).abs()
                        } else {
                            (zv.abs() - mu).max(0.0)
                        };
                        worst = worst.max(v);
                    }
                }
                Some(worst)
            }
            NonsmoothTerm::Custom(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    fn l1(mu: f64) -> NonsmoothTerm {
        NonsmoothTerm::l1(mu, 1, 1).unwrap()
    }

    #[test]
    fn prox_examples() {
        let h = l1(1.0);
        assert!((h.prox(0.5, &scalar(1.2)).unwrap()[(0, 0)] - 0.7).abs() < 1e-15);
        assert_eq!(h.prox(0.5, &scalar(-0.3)).unwrap()[(0, 0)], 0.0);
        assert_eq!(h.prox(1e-8, &scalar(0.0)).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn envelope_examples() {
        let h = l1(1.0);
        assert!((h.moreau_value(0.5, &scalar(0.2)).unwrap() - 0.04).abs() < 1e-15);
        assert!((h.moreau_value(0.5, &scalar(2.0)).unwrap() - 1.75).abs() < 1e-15);
        assert!((h.moreau_gradient(0.5, &scalar(0.2)).unwrap()[(0, 0)] - 0.4).abs() < 1e-15);

        let z = NonsmoothTerm::zero(2, 2);
        let w = Mat::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 0.5]);
        assert_eq!(z.moreau_value(0.7, &w).unwrap(), 0.0);
        assert_eq!(z.moreau_gradient(0.7, &w).unwrap(), Mat::zeros(2, 2));
    }

    #[test]
    fn nonpositive_lambda_is_rejected() {
        let h = l1(1.0);
        for lambda in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                h.prox(lambda, &scalar(1.0)),
                Err(Error::Parameter(_))
            ));
            assert!(h.moreau_value(lambda, &scalar(1.0)).is_err());
            assert!(h.moreau_gradient(lambda, &scalar(1.0)).is_err());
        }
    }

    #[test]
    fn lipschitz_bounds() {
        let h = NonsmoothTerm::l1(2.0, 3, 4).unwrap();
        assert!((h.lipschitz_bound().unwrap() - 2.0 * 12f64.sqrt()).abs() < 1e-14);
        assert_eq!(NonsmoothTerm::zero(3, 4).lipschitz_bound().unwrap(), 0.0);
        assert_eq!(
            NonsmoothTerm::l1(0.0, 3, 4)
                .unwrap()
                .lipschitz_bound()
                .unwrap(),
            0.0
        );

        let blocks = vec![RowBlock { rows: 2, mu: 1.0 }, RowBlock { rows: 3, mu: 2.0 }];
        let h = NonsmoothTerm::block_l1(blocks, 2).unwrap();
        assert!((h.lipschitz_bound().unwrap() - (4.0f64 + 24.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn block_weights_apply_per_row() {
        let blocks = vec![RowBlock { rows: 1, mu: 1.0 }, RowBlock { rows: 1, mu: 3.0 }];
        let h = NonsmoothTerm::block_l1(blocks, 2).unwrap();
        let w = Mat::from_row_slice(2, 2, &[1.0, -2.0, 1.0, -2.0]);
        assert_eq!(h.value(&w).unwrap(), 3.0 + 9.0);
        let p = h.prox(0.5, &w).unwrap();
        assert_eq!(p, Mat::from_row_slice(2, 2, &[0.5, -1.5, 0.0, -0.5]));
    }

    #[test]
    fn custom_without_bound_is_unsupported() {
        struct Half;
        impl ProxFunction for Half {
            fn shape(&self) -> (usize, usize) {
                (1, 1)
            }
            fn value(&self, w: &Mat) -> f64 {
                0.5 * w.abs().sum()
            }
            fn prox(&self, lambda: f64, w: &Mat) -> Mat {
                w.map(|v| soft_threshold(v, 0.5 * lambda))
            }
        }
        let h = NonsmoothTerm::custom(Arc::new(Half));
        assert!(matches!(h.lipschitz_bound(), Err(Error::Unsupported(_))));
        assert!((h.prox(1.0, &scalar(2.0)).unwrap()[(0, 0)] - 1.5).abs() < 1e-15);
        assert!(h
            .subgradient_violation(&scalar(1.0), &scalar(0.5))
            .is_none());
    }

    #[test]
    fn subgradient_membership() {
        let h = NonsmoothTerm::l1(0.5, 1, 3).unwrap();
        let y = Mat::from_row_slice(1, 3, &[1.0, 0.0, -2.0]);
        let z = Mat::from_row_slice(1, 3, &[0.5, 0.2, -0.5]);
        assert_eq!(h.subgradient_violation(&y, &z), Some(0.0));
        let bad = Mat::from_row_slice(1, 3, &[0.4, 0.7, -0.5]);
        assert!((h.subgradient_violation(&y, &bad).unwrap() - 0.2).abs() < 1e-15);
    }
}
