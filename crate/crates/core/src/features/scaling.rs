use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column affine map onto `[0, 1]`, fit on calibration-time data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxModel {
    pub ranges: Vec<(f64, f64)>,
}

pub fn fit_minmax(x: &DMatrix<f64>) -> Result<MinMaxModel> {
    if x.nrows() == 0 {
        return Err(Error::EmptyDomain);
    }
    let ranges = x
        .column_iter()
        .map(|col| (col.min(), col.max()))
        .collect();
    Ok(MinMaxModel { ranges })
}

/// Applies the fitted map. Constant columns go to 0.5; values outside the
/// fitted range are not clamped.
pub fn apply_minmax(model: &MinMaxModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != model.ranges.len() {
        return Err(Error::DimensionMismatch {
            expected: model.ranges.len(),
            found: x.ncols(),
            context: "min-max input columns",
        });
    }
    Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        let (lo, hi) = model.ranges[j];
        let span = hi - lo;
        if span > 0.0 {
            (x[(i, j)] - lo) / span
        } else {
            0.5
        }
    }))
}
