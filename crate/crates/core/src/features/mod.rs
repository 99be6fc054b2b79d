//! Dataset files, the PCA + min-max feature pipeline, and the synthetic
//! benchmark generator.

mod io;
mod pca;
mod scaling;
mod synth;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use io::{format_domain_csv, parse_domain_csv, read_domain_csv, write_domain_csv};
pub use pca::{apply_pca, fit_pca, PcaModel};
pub use scaling::{apply_minmax, fit_minmax, MinMaxModel};
pub use synth::{generate_synthetic, SynthConfig};

use crate::domain::{check_common_dim, DomainData};
use crate::error::Result;

/// PCA and min-max models fit on the pooled rows of every domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub pca: PcaModel,
    pub minmax: MinMaxModel,
}

impl FeaturePipeline {
    pub fn fit(domains: &[DomainData], k: usize) -> Result<Self> {
        let pooled = stack_features(domains)?;
        let pca = fit_pca(&pooled, k)?;
        let scores = apply_pca(&pca, &pooled)?;
        let minmax = fit_minmax(&scores)?;
        Ok(FeaturePipeline { pca, minmax })
    }

    pub fn transform(&self, domain: &DomainData) -> Result<DomainData> {
        let scores = apply_pca(&self.pca, &domain.features)?;
        let features = apply_minmax(&self.minmax, &scores)?;
        DomainData::new(domain.domain_id.clone(), features, domain.labels.clone())
    }
}

/// Fits the pooled pipeline and transforms every domain with it.
pub fn featurize(domains: &[DomainData], k: usize) -> Result<(FeaturePipeline, Vec<DomainData>)> {
    let pipeline = FeaturePipeline::fit(domains, k)?;
    let out = domains
        .iter()
        .map(|d| pipeline.transform(d))
        .collect::<Result<Vec<_>>>()?;
    Ok((pipeline, out))
}

pub fn stack_features(domains: &[DomainData]) -> Result<DMatrix<f64>> {
    let dim = check_common_dim(domains)?;
    let total: usize = domains.iter().map(DomainData::n_samples).sum();
    let mut pooled = DMatrix::zeros(total, dim);
    let mut row = 0;
    for d in domains {
        pooled.rows_mut(row, d.n_samples()).copy_from(&d.features);
        row += d.n_samples();
    }
    Ok(pooled)
}
