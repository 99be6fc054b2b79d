use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Principal component projection. `components` is `k x d`, one unit-norm
/// direction per row, ordered by descending explained variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    pub components: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Maps scores back into the original feature space.
    pub fn reconstruct(&self, scores: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = scores * &self.components;
        for mut row in x.row_iter_mut() {
            row += self.mean.transpose();
        }
        x
    }
}

pub fn fit_pca(x: &DMatrix<f64>, k: usize) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::TooFewPoints { required: 2, found: n });
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::Rank {
            requested: k,
            max: n.min(d),
        });
    }
    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = DMatrix::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    for (r, &c) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(c).into_owned();
        v /= v.norm();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v = -v;
        }
        components.set_row(r, &v.transpose());
        explained_variance.push(eig.eigenvalues[c].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

pub fn apply_pca(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: x.ncols(),
            context: "PCA input columns",
        });
    }
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= model.mean.transpose();
    }
    Ok(centered * model.components.transpose())
}
