//! Multi-source transfer: one classifier per source domain, each trained on
//! that source plus every target row, fused by a weighted sum.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::domain::{CalibrationState, DomainData, Gamma, HyperParams, KernelSpec, LabelValue};
use crate::error::{Error, Result};

use super::kernel::GramCache;
use super::model::{assemble_fit, fuse_scores, FusedClassifier, WarFit};
use super::problem::StackRows;

/// A source domain by its index in a [`GramCache`], with its (possibly pseudo) labels.
#[derive(Debug, Clone, Copy)]
pub struct SourceRef<'a> {
    pub domain: usize,
    pub labels: &'a [LabelValue],
}

/// Per-source fits and their scores on the target's unlabeled pool.
#[derive(Debug, Clone)]
pub struct EnsembleFit {
    pub fits: Vec<WarFit>,
    /// Unlabeled target rows, ascending.
    pub pool: Vec<usize>,
    /// `pool_scores[z][j]` is model `z`'s score on target row `pool[j]`.
    pub pool_scores: Vec<DVector<f64>>,
}

impl EnsembleFit {
    pub fn train_accuracies(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.model.train_accuracy).collect()
    }

    pub fn fuse_pool(&self, weights: &[f64]) -> Result<DVector<f64>> {
        fuse_scores(&self.pool_scores, weights)
    }

    pub fn into_classifier(self, weights: Vec<f64>) -> Result<FusedClassifier> {
        FusedClassifier::new(self.fits.into_iter().map(|f| f.model).collect(), weights)
    }
}

/// Fits one source against the target using the cached pair Gram matrix.
///
/// `target_labels` holds the installed labels of the target rows, `Unknown`
/// for rows still in the pool.
pub fn fit_source(
    cache: &GramCache,
    source: SourceRef<'_>,
    target: usize,
    target_labels: &[LabelValue],
    params: &HyperParams,
) -> Result<(WarFit, Vec<usize>)> {
    let src_x = cache.features(source.domain);
    let tgt_x = cache.features(target);
    if source.labels.len() != src_x.nrows() || target_labels.len() != tgt_x.nrows() {
        return Err(Error::LengthMismatch {
            left: source.labels.len() + target_labels.len(),
            right: src_x.nrows() + tgt_x.nrows(),
        });
    }
    if source.labels.iter().any(|l| !l.is_known()) {
        return Err(Error::Schema("source domain contains Unknown labels".into()));
    }
    let pair = cache.pair(source.domain, target);
    let mut rows = StackRows::default();
    let (first_labels, first_is_source, second_labels) = if pair.first == source.domain {
        (source.labels, true, target_labels)
    } else {
        (target_labels, false, source.labels)
    };
    for &l in first_labels {
        rows.push(first_is_source, l);
    }
    for &l in second_labels {
        rows.push(!first_is_source, l);
    }

    let (a, b) = (cache.features(pair.first), cache.features(pair.second));
    let mut features = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    features.rows_mut(0, a.nrows()).copy_from(a.as_ref());
    features.rows_mut(a.nrows(), b.nrows()).copy_from(b.as_ref());

    let kernel = KernelSpec {
        kind: cache.spec().kind,
        gamma: Gamma::Fixed(if pair.gamma > 0.0 { pair.gamma } else { 1.0 }),
    };
    let fit = assemble_fit(features, kernel, &rows, &pair.gram, None, params)?;
    let target_positions = (0..tgt_x.nrows()).map(|r| pair.position(target, r)).collect();
    Ok((fit, target_positions))
}

/// Fits every source against the target. Models are returned in source order.
pub fn fit_ensemble(
    cache: &GramCache,
    sources: &[SourceRef<'_>],
    target: usize,
    target_labels: &[LabelValue],
    params: &HyperParams,
) -> Result<EnsembleFit> {
    if sources.is_empty() {
        return Err(Error::Config("at least one source domain is required".into()));
    }
    params.validate()?;
    let pool: Vec<usize> = (0..target_labels.len()).filter(|&i| !target_labels[i].is_known()).collect();
    let results: Vec<(WarFit, Vec<usize>)> = sources
        .par_iter()
        .map(|s| fit_source(cache, *s, target, target_labels, params))
        .collect::<Result<_>>()?;
    let mut fits = Vec::with_capacity(results.len());
    let mut pool_scores = Vec::with_capacity(results.len());
    for (fit, positions) in results {
        pool_scores.push(DVector::from_iterator(pool.len(), pool.iter().map(|&r| fit.fitted[positions[r]])));
        fits.push(fit);
    }
    Ok(EnsembleFit {
        fits,
        pool,
        pool_scores,
    })
}

/// Multi-source transfer fused by training accuracies.
///
/// Returns the fused classifier and its scores on the target's unlabeled
/// pool (ascending row order).
pub fn war_multi(
    sources: &[DomainData],
    state: &CalibrationState,
    params: &HyperParams,
) -> Result<(FusedClassifier, DVector<f64>)> {
    let mut features: Vec<Arc<DMatrix<f64>>> = sources.iter().map(|s| Arc::new(s.features.clone())).collect();
    features.push(Arc::new(state.target().features.clone()));
    let target = sources.len();
    let cache = GramCache::new(features, params.kernel)?;
    let refs: Vec<SourceRef<'_>> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| SourceRef {
            domain: i,
            labels: &s.labels,
        })
        .collect();
    let ensemble = fit_ensemble(&cache, &refs, target, &state.target().labels, params)?;
    let weights = ensemble.train_accuracies();
    let scores = ensemble.fuse_pool(&weights)?;
    Ok((ensemble.into_classifier(weights)?, scores))
}
