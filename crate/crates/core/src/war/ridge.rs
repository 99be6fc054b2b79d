//! Single-domain class-weighted kernel ridge classifier (no MMD terms).

use nalgebra::DMatrix;

use crate::domain::{Gamma, KernelSpec, LabelValue};
use crate::error::{Error, Result};

use super::kernel::{kernel_with_gamma, resolve_gamma};
use super::model::{assemble_fit, WarModel};
use super::problem::StackRows;

/// Fits `alpha = (W K + sigma I)^{-1} W y` with class-balancing weights `W`
/// computed on `labels` (Class2 rows weighted by `n1 / n2`).
pub fn fit_weighted_ridge(x: &DMatrix<f64>, labels: &[LabelValue], kernel: KernelSpec, sigma: f64) -> Result<WarModel> {
    if x.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::NoLabeledSamples);
    }
    if labels.iter().any(|l| !l.is_known()) {
        return Err(Error::Schema("ridge training labels contain Unknown".into()));
    }
    let gamma = resolve_gamma(&kernel, x);
    let gram = kernel_with_gamma(x, x, kernel.kind, gamma)?;
    let mut rows = StackRows::default();
    for &l in labels {
        rows.push(true, l);
    }
    let resolved = KernelSpec {
        kind: kernel.kind,
        gamma: Gamma::Fixed(if gamma > 0.0 { gamma } else { 1.0 }),
    };
    let params = crate::domain::HyperParams {
        sigma,
        lambda: 0.0,
        ..Default::default()
    };
    assemble_fit(x.clone(), resolved, &rows, &gram, None, &params).map(|f| f.model)
}
