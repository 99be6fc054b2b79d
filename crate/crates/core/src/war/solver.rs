//! Closed-form coefficient solve `alpha = [(E + lambda M0 + lambda M) K + sigma I]^{-1} E y`.
//!
//! `E K + sigma I` is solved through a Cholesky factorization on the rows
//! with positive loss weight, and the MMD terms enter as a low-rank
//! (Woodbury) correction since `M0` and each `M_c` are outer products.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::domain::LabelValue;
use crate::error::{Error, Result};

use super::problem::StackRows;

const JITTER: f64 = 1e-10;

pub(crate) struct SolveOutput {
    pub alpha: DVector<f64>,
    /// `K alpha` on every stack row.
    pub fitted: DVector<f64>,
    /// Pseudo labels of the unlabeled rows used in the final solve.
    pub pseudo: Vec<LabelValue>,
}

/// Factorization of `D K_PP D + sigma I` with `D = sqrt(E)` restricted to the
/// rows `P` where `E > 0`.
struct BaseSystem<'a> {
    gram: &'a DMatrix<f64>,
    sqrt_w: Vec<f64>,
    active: Vec<usize>,
    chol: Option<Cholesky<f64, Dyn>>,
    sigma: f64,
}

impl<'a> BaseSystem<'a> {
    fn factor(gram: &'a DMatrix<f64>, weights: &[f64], sigma: f64) -> Option<Self> {
        if !(sigma > 0.0) {
            return None;
        }
        let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
        let active: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let p = active.len();
        let chol = if p == 0 {
            None
        } else {
            let mut s = DMatrix::from_fn(p, p, |a, b| {
                let (i, j) = (active[a], active[b]);
                sqrt_w[i] * gram[(i, j)] * sqrt_w[j]
            });
            for a in 0..p {
                s[(a, a)] += sigma;
            }
            match Cholesky::new(s.clone()) {
                Some(c) => Some(c),
                None => {
                    for a in 0..p {
                        s[(a, a)] += JITTER;
                    }
                    Some(Cholesky::new(s)?)
                }
            }
        };
        Some(BaseSystem {
            gram,
            sqrt_w,
            active,
            chol,
            sigma,
        })
    }

    /// `(E K + sigma I)^{-1} b` via `a = (b - D g) / sigma` with
    /// `(D K D + sigma I) g = D K b`.
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut a = b.clone();
        if let Some(chol) = &self.chol {
            let kb = self.gram * b;
            let rhs = DVector::from_iterator(self.active.len(), self.active.iter().map(|&i| self.sqrt_w[i] * kb[i]));
            let g = chol.solve(&rhs);
            for (slot, &i) in self.active.iter().enumerate() {
                a[i] -= self.sqrt_w[i] * g[slot];
            }
        }
        a / self.sigma
    }
}

fn woodbury(
    base: &BaseSystem<'_>,
    gram: &DMatrix<f64>,
    alpha0: &DVector<f64>,
    factors: &[DVector<f64>],
    lambda: f64,
) -> Option<DVector<f64>> {
    if lambda == 0.0 || factors.is_empty() {
        return Some(alpha0.clone());
    }
    let r = factors.len();
    let binv_u: Vec<DVector<f64>> = factors.iter().map(|u| base.solve(u)).collect();
    let v: Vec<DVector<f64>> = factors.iter().map(|u| (gram * u) * lambda).collect();
    let cap = DMatrix::from_fn(r, r, |i, j| if i == j { 1.0 } else { 0.0 } + v[i].dot(&binv_u[j]));
    let rhs = DVector::from_iterator(r, v.iter().map(|vi| vi.dot(alpha0)));
    let t = cap.lu().solve(&rhs)?;
    let mut alpha = alpha0.clone();
    for (j, bu) in binv_u.iter().enumerate() {
        alpha.axpy(-t[j], bu, 1.0);
    }
    alpha.iter().all(|v| v.is_finite()).then_some(alpha)
}

/// Reference path: forms the full system matrix and solves it with LU.
pub(crate) fn dense_solve(
    gram: &DMatrix<f64>,
    weights: &[f64],
    y: &DVector<f64>,
    factors: &[DVector<f64>],
    sigma: f64,
    lambda: f64,
) -> Result<DVector<f64>> {
    let n = gram.nrows();
    let mut omega = DMatrix::from_diagonal(&DVector::from_column_slice(weights));
    for u in factors {
        omega.ger(lambda, u, u, 1.0);
    }
    let mut a = omega * gram;
    for i in 0..n {
        a[(i, i)] += sigma;
    }
    let rhs = DVector::from_iterator(n, weights.iter().zip(y.iter()).map(|(w, v)| w * v));
    if let Some(x) = a.clone().lu().solve(&rhs).filter(|x| x.iter().all(|v| v.is_finite())) {
        return Ok(x);
    }
    for i in 0..n {
        a[(i, i)] += JITTER;
    }
    a.lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularSystem)
}

fn sign_labels(fitted: &DVector<f64>, rows: &[usize]) -> Vec<LabelValue> {
    rows.iter().map(|&i| LabelValue::from_score(fitted[i])).collect()
}

/// Solves the transfer system on a stack in any row order.
///
/// When `pseudo` is `None` the unlabeled rows are first labeled by the
/// weighted kernel ridge fit on the labeled rows alone, which is the same
/// system with the MMD terms dropped. Each extra pass re-estimates the
/// pseudo labels from the previous solution and solves again.
pub(crate) fn solve_stack(
    gram: &DMatrix<f64>,
    rows: &StackRows,
    pseudo: Option<Vec<LabelValue>>,
    w_t: f64,
    sigma: f64,
    lambda: f64,
    passes: usize,
) -> Result<SolveOutput> {
    let n = rows.len();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gram.nrows(),
            context: "gram matrix vs training stack",
        });
    }
    let weights = rows.loss_weights(w_t);
    let unlabeled = rows.unlabeled_rows();
    let y_labeled = rows.targets(&vec![LabelValue::Unknown; unlabeled.len()]);
    let ey = DVector::from_iterator(n, weights.iter().zip(y_labeled.iter()).map(|(w, v)| w * v));

    let base = BaseSystem::factor(gram, &weights, sigma);
    let alpha0 = match &base {
        Some(b) => b.solve(&ey),
        None => dense_solve(gram, &weights, &y_labeled, &[], sigma, 0.0)?,
    };

    let mut pseudo = match pseudo {
        Some(p) => {
            if p.len() != unlabeled.len() {
                return Err(Error::DimensionMismatch {
                    expected: unlabeled.len(),
                    found: p.len(),
                    context: "pseudo labels",
                });
            }
            p
        }
        None => sign_labels(&(gram * &alpha0), &unlabeled),
    };

    let mut alpha = alpha0.clone();
    let mut fitted = gram * &alpha;
    for pass in 0..passes.max(1) {
        if pass > 0 {
            pseudo = sign_labels(&fitted, &unlabeled);
        }
        let factors = rows.mmd_factors(&pseudo);
        let fast = base.as_ref().and_then(|b| woodbury(b, gram, &alpha0, &factors, lambda));
        alpha = match fast {
            Some(a) => a,
            None => dense_solve(gram, &weights, &y_labeled, &factors, sigma, lambda)?,
        };
        fitted = gram * &alpha;
    }
    Ok(SolveOutput { alpha, fitted, pseudo })
}
