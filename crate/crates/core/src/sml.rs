//! Spectral meta-learner: ranks ensemble members by the leading eigenvector
//! of the covariance of their sign predictions on unlabeled samples.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::war::{predict, FusedClassifier, WarModel};

/// Anything that produces real-valued scores for a batch of rows.
pub trait Scorer {
    fn scores(&self, x: &DMatrix<f64>) -> Result<DVector<f64>>;
}

impl Scorer for WarModel {
    fn scores(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        predict(self, x)
    }
}

impl Scorer for FusedClassifier {
    fn scores(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.predict(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmlEstimate {
    pub q: DMatrix<f64>,
    /// Leading eigenvector of `q`, unit norm, with non-negative sum.
    pub v: DVector<f64>,
    pub eigenvalue: f64,
    /// `clamp((v_z + 1) / 2, 0, 1)`: relative fusion weights, not calibrated accuracies.
    pub pi: Vec<f64>,
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `Z x m` matrix of `sign(score)` with zero mapped to +1.
pub fn sign_matrix(scores: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let m = scores.first().map_or(0, |s| s.len());
    if let Some(bad) = scores.iter().find(|s| s.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: bad.len(),
            context: "per-model score vectors",
        });
    }
    Ok(DMatrix::from_fn(scores.len(), m, |z, j| sign(scores[z][j])))
}

pub fn prediction_matrix<S: Scorer>(models: &[S], x_unlabeled: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scores = models
        .iter()
        .map(|m| m.scores(x_unlabeled))
        .collect::<Result<Vec<_>>>()?;
    sign_matrix(&scores)
}

/// Covariance across samples (divisor `m`) of the rows of a prediction matrix.
pub fn prediction_covariance(predictions: &DMatrix<f64>) -> DMatrix<f64> {
    let (z, m) = predictions.shape();
    let means = predictions.column_mean();
    let mut centered = predictions.clone();
    for r in 0..z {
        for c in 0..m {
            centered[(r, c)] -= means[r];
        }
    }
    (&centered * centered.transpose()) / m as f64
}

/// Leading eigenvector of a symmetric covariance estimate. `None` when the
/// matrix carries no signal (largest eigenvalue not positive).
pub fn sml_from_covariance(q: DMatrix<f64>) -> Option<SmlEstimate> {
    if q.nrows() == 0 || q.nrows() != q.ncols() {
        return None;
    }
    let eig = SymmetricEigen::new(q.clone());
    let lead = eig.eigenvalues.imax();
    let eigenvalue = eig.eigenvalues[lead];
    if !(eigenvalue > 1e-12) {
        return None;
    }
    let mut v = eig.eigenvectors.column(lead).into_owned();
    v /= v.norm();
    if v.sum() < 0.0 {
        v = -v;
    }
    let pi = v.iter().map(|vz| ((vz + 1.0) / 2.0).clamp(0.0, 1.0)).collect();
    Some(SmlEstimate { q, v, eigenvalue, pi })
}

/// Weights from a `Z x m_u` sign matrix. `None` for fewer than two samples
/// or a zero covariance; callers then fall back to training accuracies.
pub fn sml_weights(predictions: &DMatrix<f64>) -> Option<SmlEstimate> {
    if predictions.nrows() == 0 || predictions.ncols() < 2 {
        return None;
    }
    sml_from_covariance(prediction_covariance(predictions))
}

pub fn fuse_sml(models: Vec<WarModel>, pi: &[f64]) -> Result<FusedClassifier> {
    FusedClassifier::new(models, pi.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightSource {
    Sml,
    TrainingAccuracy,
}

/// SML weights when they are estimable, otherwise the supplied fallback.
pub fn sml_or_fallback(predictions: &DMatrix<f64>, fallback: &[f64]) -> (Vec<f64>, WeightSource) {
    match sml_weights(predictions) {
        Some(est) => (est.pi, WeightSource::Sml),
        None => (fallback.to_vec(), WeightSource::TrainingAccuracy),
    }
}
