//! Core value types shared across the toolkit: labels, domains, calibration
//! state and hyperparameters.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary label with an explicit "not yet known" state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelValue {
    Class1,
    Class2,
    Unknown,
}

impl LabelValue {
    /// Numeric target used by the squared-loss solver: Class1 is +1, Class2 is -1.
    pub fn as_target(self) -> Option<f64> {
        match self {
            LabelValue::Class1 => Some(1.0),
            LabelValue::Class2 => Some(-1.0),
            LabelValue::Unknown => None,
        }
    }

    /// Decision rule for a real-valued score. Ties go to Class1.
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            LabelValue::Class1
        } else {
            LabelValue::Class2
        }
    }

    pub fn is_known(self) -> bool {
        self != LabelValue::Unknown
    }

    /// Code used in the domain CSV format.
    pub fn code(self) -> i32 {
        match self {
            LabelValue::Class1 => 1,
            LabelValue::Class2 => 2,
            LabelValue::Unknown => -1,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(LabelValue::Class1),
            2 => Some(LabelValue::Class2),
            -1 => Some(LabelValue::Unknown),
            _ => None,
        }
    }
}

/// One subject's samples: an `N x d` feature matrix plus a label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainData {
    pub domain_id: String,
    pub features: DMatrix<f64>,
    pub labels: Vec<LabelValue>,
}

impl DomainData {
    /// Builds a domain and checks its invariants.
    pub fn new(
        domain_id: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<LabelValue>,
    ) -> Result<Self> {
        let domain = DomainData {
            domain_id: domain_id.into(),
            features,
            labels,
        };
        validate_domain(&domain)?;
        Ok(domain)
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Copy of this domain with every label replaced by `Unknown`.
    pub fn unlabeled_copy(&self) -> Self {
        DomainData {
            domain_id: self.domain_id.clone(),
            features: self.features.clone(),
            labels: vec![LabelValue::Unknown; self.labels.len()],
        }
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(|l| l.is_known())
    }

    pub fn class_counts(&self) -> (usize, usize, usize) {
        class_counts(self)
    }
}

pub fn validate_domain(d: &DomainData) -> Result<()> {
    if d.features.nrows() != d.labels.len() {
        return Err(Error::DimensionMismatch {
            expected: d.features.nrows(),
            found: d.labels.len(),
            context: "label count vs feature rows",
        });
    }
    if d.labels.is_empty() {
        return Err(Error::EmptyDomain);
    }
    for col in 0..d.features.ncols() {
        for row in 0..d.features.nrows() {
            if !d.features[(row, col)].is_finite() {
                return Err(Error::NonFiniteFeature { row, col });
            }
        }
    }
    Ok(())
}

/// Returns `(Class1, Class2, Unknown)` counts.
pub fn class_counts(d: &DomainData) -> (usize, usize, usize) {
    count_labels(&d.labels)
}

pub(crate) fn count_labels(labels: &[LabelValue]) -> (usize, usize, usize) {
    labels.iter().fold((0, 0, 0), |(c1, c2, u), l| match l {
        LabelValue::Class1 => (c1 + 1, c2, u),
        LabelValue::Class2 => (c1, c2 + 1, u),
        LabelValue::Unknown => (c1, c2, u + 1),
    })
}

/// Checks that every domain in an experiment shares the same feature dimension.
pub fn check_common_dim(domains: &[DomainData]) -> Result<usize> {
    let first = domains.first().ok_or(Error::EmptyDomain)?.dim();
    for d in domains {
        if d.dim() != first {
            return Err(Error::DimensionMismatch {
                expected: first,
                found: d.dim(),
                context: "feature dimension across domains",
            });
        }
    }
    Ok(first)
}

/// Labeled/unlabeled bookkeeping for the target subject during calibration.
///
/// The target's labels start out `Unknown`; labels are installed by
/// [`CalibrationState::install_labels`] which moves rows from the unlabeled
/// pool into the labeled set.
#[derive(Debug, Clone)]
pub struct CalibrationState {
    target: DomainData,
    labeled_idx: Vec<usize>,
    unlabeled_idx: BTreeSet<usize>,
    query_log: Vec<(usize, Vec<usize>)>,
}

impl CalibrationState {
    /// Starts calibration with every target row unlabeled.
    pub fn new(target: &DomainData) -> Self {
        let target = target.unlabeled_copy();
        let unlabeled_idx = (0..target.n_samples()).collect();
        CalibrationState {
            target,
            labeled_idx: Vec::new(),
            unlabeled_idx,
            query_log: Vec::new(),
        }
    }

    pub fn target(&self) -> &DomainData {
        &self.target
    }

    /// Labeled rows in the order they were queried.
    pub fn labeled_idx(&self) -> &[usize] {
        &self.labeled_idx
    }

    /// Unlabeled rows in ascending order.
    pub fn unlabeled_idx(&self) -> Vec<usize> {
        self.unlabeled_idx.iter().copied().collect()
    }

    pub fn m_l(&self) -> usize {
        self.labeled_idx.len()
    }

    pub fn m_u(&self) -> usize {
        self.unlabeled_idx.len()
    }

    pub fn query_log(&self) -> &[(usize, Vec<usize>)] {
        &self.query_log
    }

    pub fn label_of(&self, idx: usize) -> LabelValue {
        self.target.labels[idx]
    }

    /// Moves the queried rows from the unlabeled pool to the labeled set.
    pub fn install_labels(&mut self, iteration: usize, answers: &[(usize, LabelValue)]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &(idx, label) in answers {
            if !label.is_known() {
                return Err(Error::Schema(format!("query answer for row {idx} is Unknown")));
            }
            if !self.unlabeled_idx.contains(&idx) {
                return Err(Error::Config(format!("row {idx} is not in the unlabeled pool")));
            }
            if !seen.insert(idx) {
                return Err(Error::Config(format!("row {idx} queried twice in one batch")));
            }
        }
        let mut queried = Vec::with_capacity(answers.len());
        for &(idx, label) in answers {
            self.unlabeled_idx.remove(&idx);
            self.target.labels[idx] = label;
            self.labeled_idx.push(idx);
            queried.push(idx);
        }
        self.query_log.push((iteration, queried));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gamma {
    /// Median heuristic over pairwise distances of the training stack.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: Gamma,
}

impl KernelSpec {
    pub fn rbf_auto() -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma: Gamma::Auto,
        }
    }

    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!("RBF gamma must be positive, got {gamma}")));
        }
        Ok(KernelSpec {
            kind: KernelKind::Rbf,
            gamma: Gamma::Fixed(gamma),
        })
    }

    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: Gamma::Auto,
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::rbf_auto()
    }
}

/// Regularization and sampling parameters. Loss is always squared loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub w_t: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub p: usize,
    pub kernel: KernelSpec,
    pub pseudo_label_passes: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            w_t: 2.0,
            sigma: 0.1,
            lambda: 10.0,
            p: 5,
            kernel: KernelSpec::default(),
            pseudo_label_passes: 1,
        }
    }
}

impl HyperParams {
    pub fn new(w_t: f64, sigma: f64, lambda: f64, p: usize, kernel: KernelSpec) -> Result<Self> {
        let params = HyperParams {
            w_t,
            sigma,
            lambda,
            p,
            kernel,
            pseudo_label_passes: 1,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_pseudo_label_passes(mut self, passes: usize) -> Result<Self> {
        self.pseudo_label_passes = passes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w_t >= 1.0) {
            return Err(Error::Config(format!("w_t must be >= 1, got {}", self.w_t)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.p < 1 {
            return Err(Error::Config("p must be >= 1".into()));
        }
        if self.pseudo_label_passes < 1 {
            return Err(Error::Config("pseudo_label_passes must be >= 1".into()));
        }
        if let Gamma::Fixed(g) = self.kernel.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("kernel gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use LabelValue::*;

    fn domain(rows: usize, labels: Vec<LabelValue>) -> DomainData {
        DomainData {
            domain_id: "s".into(),
            features: DMatrix::from_fn(rows, 2, |i, j| (i + j) as f64),
            labels,
        }
    }

    #[test]
    fn validate_well_formed() {
        assert!(validate_domain(&domain(3, vec![Class1, Class2, Unknown])).is_ok());
    }

    #[test]
    fn validate_length_mismatch() {
        let err = validate_domain(&domain(3, vec![Class1, Class2])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn validate_non_finite() {
        let mut d = domain(3, vec![Class1, Class2, Unknown]);
        d.features[(1, 1)] = f64::NAN;
        let err = validate_domain(&d).unwrap_err();
        assert!(matches!(err, Error::NonFiniteFeature { row: 1, col: 1 }));
        d.features[(1, 1)] = f64::INFINITY;
        assert!(validate_domain(&d).is_err());
    }

    #[test]
    fn validate_empty() {
        assert!(matches!(validate_domain(&domain(0, vec![])), Err(Error::EmptyDomain)));
    }

    #[test]
    fn class_counts_examples() {
        let d = domain(5, vec![Class1, Class1, Class2, Unknown, Unknown]);
        assert_eq!(class_counts(&d), (2, 1, 2));
        let d = domain(4, vec![Unknown; 4]);
        assert_eq!(class_counts(&d), (0, 0, 4));
        let d = domain(2, vec![Class1, Class2]);
        assert_eq!(class_counts(&d), (1, 1, 0));
    }

    #[test]
    fn hyperparams_reject_invalid() {
        let k = KernelSpec::rbf_auto();
        assert!(HyperParams::new(0.5, 0.1, 10.0, 5, k).is_err());
        assert!(HyperParams::new(2.0, -0.1, 10.0, 5, k).is_err());
        assert!(HyperParams::new(2.0, 0.1, -1.0, 5, k).is_err());
        assert!(HyperParams::new(2.0, 0.1, 10.0, 0, k).is_err());
        assert!(HyperParams::new(1.0, 0.0, 0.0, 1, k).is_ok());
        assert!(KernelSpec::rbf(0.0).is_err());
        assert_eq!(HyperParams::default(), HyperParams::new(2.0, 0.1, 10.0, 5, k).unwrap());
    }

    #[test]
    fn install_labels_moves_rows() {
        let d = domain(4, vec![Class1, Class2, Class1, Class2]);
        let mut state = CalibrationState::new(&d);
        assert_eq!(state.m_u(), 4);
        state.install_labels(0, &[(2, Class1), (0, Class1)]).unwrap();
        assert_eq!(state.labeled_idx(), &[2, 0]);
        assert_eq!(state.unlabeled_idx(), vec![1, 3]);
        assert!(state.install_labels(1, &[(2, Class1)]).is_err());
        assert!(state.install_labels(1, &[(1, Unknown)]).is_err());
        assert!(state.install_labels(1, &[(1, Class2), (1, Class2)]).is_err());
    }

    proptest! {
        #[test]
        fn class_counts_sum_to_n(codes in proptest::collection::vec(0u8..3, 1..40)) {
            let labels: Vec<_> = codes.iter().map(|c| match c { 0 => Class1, 1 => Class2, _ => Unknown }).collect();
            let n = labels.len();
            let (a, b, c) = class_counts(&domain(n, labels));
            prop_assert_eq!(a + b + c, n);
        }

        #[test]
        fn calibration_state_partitions_rows(n in 1usize..30, picks in proptest::collection::vec(0usize..30, 0..30)) {
            let d = domain(n, vec![Class1; n]);
            let mut state = CalibrationState::new(&d);
            for (it, p) in picks.iter().enumerate() {
                let idx = p % n;
                let _ = state.install_labels(it, &[(idx, Class2)]);
                let mut all: Vec<usize> = state.labeled_idx().to_vec();
                all.extend(state.unlabeled_idx());
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                for &l in state.labeled_idx() {
                    prop_assert!(state.label_of(l).is_known());
                }
            }
        }
    }
}
