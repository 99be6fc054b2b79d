use nalgebra::{DMatrix, DVector};

use crate::domain::{KernelSpec, LabelValue};
use crate::error::{Error, Result};
use crate::evaluation::bca;

use super::kernel::{kernel_with_gamma, resolve_gamma};
use super::problem::{StackRows, WarProblem};
use super::solver::solve_stack;

/// A fitted kernel classifier `f(x) = sum_i alpha_i K(x_i, x)`.
#[derive(Debug, Clone)]
pub struct WarModel {
    pub train_features: DMatrix<f64>,
    pub alpha: DVector<f64>,
    /// Kernel with the bandwidth resolved at fit time.
    pub kernel: KernelSpec,
    /// Balanced accuracy of the fit on its labeled training rows.
    pub train_accuracy: f64,
}

impl WarModel {
    pub fn gamma(&self) -> f64 {
        match self.kernel.gamma {
            crate::domain::Gamma::Fixed(g) => g,
            crate::domain::Gamma::Auto => 0.0,
        }
    }
}

/// A solve together with its by-products on the training stack.
#[derive(Debug, Clone)]
pub struct WarFit {
    pub model: WarModel,
    /// `f` on every training row, in stack order.
    pub fitted: DVector<f64>,
    /// Final pseudo labels of the unlabeled target rows, in stack order.
    pub pseudo_labels: Vec<LabelValue>,
}

pub fn predict(model: &WarModel, x_query: &DMatrix<f64>) -> Result<DVector<f64>> {
    if x_query.ncols() != model.train_features.ncols() {
        return Err(Error::DimensionMismatch {
            expected: model.train_features.ncols(),
            found: x_query.ncols(),
            context: "query features",
        });
    }
    let k = kernel_with_gamma(x_query, &model.train_features, model.kernel.kind, model.gamma())?;
    Ok(k * &model.alpha)
}

pub fn decisions(scores: &DVector<f64>) -> Vec<LabelValue> {
    scores.iter().map(|&s| LabelValue::from_score(s)).collect()
}

/// Balanced accuracy of `sign(f)` on the labeled rows of a stack.
pub(crate) fn labeled_bca(rows: &StackRows, fitted: &DVector<f64>) -> f64 {
    let labeled = rows.labeled_rows();
    let truth: Vec<LabelValue> = labeled.iter().map(|&i| rows.labels[i]).collect();
    let pred: Vec<LabelValue> = labeled.iter().map(|&i| LabelValue::from_score(fitted[i])).collect();
    bca(&truth, &pred).map(|m| m.bca).unwrap_or(0.0)
}

pub(crate) fn assemble_fit(
    features: DMatrix<f64>,
    kernel: KernelSpec,
    rows: &StackRows,
    gram: &DMatrix<f64>,
    pseudo: Option<Vec<LabelValue>>,
    params: &crate::domain::HyperParams,
) -> Result<WarFit> {
    let out = solve_stack(
        gram,
        rows,
        pseudo,
        params.w_t,
        params.sigma,
        params.lambda,
        params.pseudo_label_passes,
    )?;
    let train_accuracy = labeled_bca(rows, &out.fitted);
    Ok(WarFit {
        model: WarModel {
            train_features: features,
            alpha: out.alpha,
            kernel,
            train_accuracy,
        },
        fitted: out.fitted,
        pseudo_labels: out.pseudo,
    })
}

pub fn solve_war_detailed(problem: &WarProblem) -> Result<WarFit> {
    problem.validate()?;
    let x = problem.stacked_features();
    let spec = problem.params.kernel;
    let gamma = resolve_gamma(&spec, &x);
    let gram = kernel_with_gamma(&x, &x, spec.kind, gamma)?;
    let kernel = KernelSpec {
        kind: spec.kind,
        gamma: crate::domain::Gamma::Fixed(if gamma > 0.0 { gamma } else { 1.0 }),
    };
    let rows = problem.stack_rows();
    assemble_fit(x, kernel, &rows, &gram, problem.target_pseudo.clone(), &problem.params)
}

pub fn solve_war(problem: &WarProblem) -> Result<WarModel> {
    solve_war_detailed(problem).map(|fit| fit.model)
}

/// Weighted sum of per-domain classifiers.
#[derive(Debug, Clone)]
pub struct FusedClassifier {
    pub models: Vec<WarModel>,
    pub weights: Vec<f64>,
}

impl FusedClassifier {
    pub fn new(models: Vec<WarModel>, weights: Vec<f64>) -> Result<Self> {
        if models.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: models.len(),
                found: weights.len(),
                context: "fusion weights",
            });
        }
        Ok(FusedClassifier { models, weights })
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        let mut total = DVector::zeros(x.nrows());
        for (m, w) in self.models.iter().zip(&self.weights) {
            total.axpy(*w, &predict(m, x)?, 1.0);
        }
        Ok(total)
    }

    pub fn decide(&self, x: &DMatrix<f64>) -> Result<Vec<LabelValue>> {
        Ok(decisions(&self.predict(x)?))
    }
}

/// Weighted sum of per-model score vectors.
pub fn fuse_scores(scores: &[DVector<f64>], weights: &[f64]) -> Result<DVector<f64>> {
    if scores.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: weights.len(),
            context: "fusion weights",
        });
    }
    let len = scores.first().map_or(0, |s| s.len());
    let mut total = DVector::zeros(len);
    for (s, w) in scores.iter().zip(weights) {
        if s.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: s.len(),
                context: "score vectors",
            });
        }
        total.axpy(*w, s, 1.0);
    }
    Ok(total)
}
