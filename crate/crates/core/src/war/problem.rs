use nalgebra::{DMatrix, DVector};

use crate::domain::{count_labels, DomainData, HyperParams, LabelValue};
use crate::error::{Error, Result};

/// One source domain transferred to the target.
///
/// The training stack is ordered source rows, labeled target rows, then
/// unlabeled target rows.
#[derive(Debug, Clone)]
pub struct WarProblem {
    pub source: DomainData,
    pub target_labeled: (DMatrix<f64>, Vec<LabelValue>),
    pub target_unlabeled: DMatrix<f64>,
    /// Pseudo labels for the unlabeled target rows. When absent the solver
    /// estimates them with a weighted kernel ridge fit on the labeled rows.
    pub target_pseudo: Option<Vec<LabelValue>>,
    pub params: HyperParams,
}

impl WarProblem {
    pub fn n(&self) -> usize {
        self.source.n_samples()
    }

    pub fn m_l(&self) -> usize {
        self.target_labeled.1.len()
    }

    pub fn m_u(&self) -> usize {
        self.target_unlabeled.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let d = self.source.dim();
        if self.source.n_samples() == 0 {
            return Err(Error::EmptyDomain);
        }
        if !self.source.is_fully_labeled() {
            return Err(Error::Schema("source domain contains Unknown labels".into()));
        }
        let (xl, yl) = &self.target_labeled;
        if xl.nrows() != yl.len() {
            return Err(Error::DimensionMismatch {
                expected: xl.nrows(),
                found: yl.len(),
                context: "labeled target labels",
            });
        }
        if yl.iter().any(|l| !l.is_known()) {
            return Err(Error::Schema("labeled target rows contain Unknown labels".into()));
        }
        if self.m_l() + self.m_u() == 0 {
            return Err(Error::EmptyDomain);
        }
        let blocks = [
            (self.m_l(), xl.ncols(), "labeled target columns"),
            (self.m_u(), self.target_unlabeled.ncols(), "unlabeled target columns"),
        ];
        for (rows, cols, context) in blocks {
            if rows > 0 && cols != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: cols,
                    context,
                });
            }
        }
        if let Some(p) = &self.target_pseudo {
            if p.len() != self.m_u() {
                return Err(Error::DimensionMismatch {
                    expected: self.m_u(),
                    found: p.len(),
                    context: "pseudo labels",
                });
            }
            if p.iter().any(|l| !l.is_known()) {
                return Err(Error::MissingPseudoLabels);
            }
        }
        Ok(())
    }

    /// Stacked feature matrix in source, labeled, unlabeled order.
    pub fn stacked_features(&self) -> DMatrix<f64> {
        let d = self.source.dim();
        let (n, ml, mu) = (self.n(), self.m_l(), self.m_u());
        let mut x = DMatrix::zeros(n + ml + mu, d);
        x.rows_mut(0, n).copy_from(&self.source.features);
        if ml > 0 {
            x.rows_mut(n, ml).copy_from(&self.target_labeled.0);
        }
        if mu > 0 {
            x.rows_mut(n + ml, mu).copy_from(&self.target_unlabeled);
        }
        x
    }

    pub(crate) fn stack_rows(&self) -> StackRows {
        let mut rows = StackRows::default();
        for &l in &self.source.labels {
            rows.push(true, l);
        }
        for &l in &self.target_labeled.1 {
            rows.push(false, l);
        }
        for _ in 0..self.m_u() {
            rows.push(false, LabelValue::Unknown);
        }
        rows
    }
}

/// Per-row bookkeeping of a training stack in arbitrary order.
#[derive(Debug, Clone, Default)]
pub(crate) struct StackRows {
    pub is_source: Vec<bool>,
    /// Known label, or `Unknown` for unlabeled target rows.
    pub labels: Vec<LabelValue>,
}

impl StackRows {
    pub fn push(&mut self, is_source: bool, label: LabelValue) {
        self.is_source.push(is_source);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn unlabeled_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.labels[i].is_known()).collect()
    }

    pub fn labeled_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].is_known()).collect()
    }

    /// Diagonal of `E`: source class weights, `w_t` times target class
    /// weights on labeled target rows, zero elsewhere.
    pub fn loss_weights(&self, w_t: f64) -> Vec<f64> {
        let src: Vec<LabelValue> = self.select(true);
        let tgt: Vec<LabelValue> = self.select(false);
        let (ws1, ws2) = class_weight_pair(&src);
        let (wt1, wt2) = class_weight_pair(&tgt);
        self.labels
            .iter()
            .zip(&self.is_source)
            .map(|(&l, &s)| match (l, s) {
                (LabelValue::Class1, true) => ws1,
                (LabelValue::Class2, true) => ws2,
                (LabelValue::Class1, false) => w_t * wt1,
                (LabelValue::Class2, false) => w_t * wt2,
                (LabelValue::Unknown, _) => 0.0,
            })
            .collect()
    }

    fn select(&self, source: bool) -> Vec<LabelValue> {
        self.labels
            .iter()
            .zip(&self.is_source)
            .filter(|(l, &s)| s == source && l.is_known())
            .map(|(&l, _)| l)
            .collect()
    }

    /// Encoded targets `y` with pseudo labels filling the unlabeled rows.
    pub fn targets(&self, pseudo: &[LabelValue]) -> DVector<f64> {
        let filled = self.filled_labels(pseudo);
        DVector::from_iterator(self.len(), filled.iter().map(|l| l.as_target().unwrap_or(0.0)))
    }

    /// Labels with the unlabeled rows (in row order) replaced by `pseudo`.
    pub fn filled_labels(&self, pseudo: &[LabelValue]) -> Vec<LabelValue> {
        let mut it = pseudo.iter();
        self.labels
            .iter()
            .map(|&l| if l.is_known() { l } else { *it.next().unwrap_or(&LabelValue::Unknown) })
            .collect()
    }

    /// Low-rank factors of the MMD matrices: `M0 = u0 u0^T` and
    /// `M_c = u_c u_c^T`. A factor whose source or target side is empty is
    /// omitted (it contributes nothing).
    pub fn mmd_factors(&self, pseudo: &[LabelValue]) -> Vec<DVector<f64>> {
        let filled = self.filled_labels(pseudo);
        let mut out = Vec::with_capacity(3);
        let n = self.is_source.iter().filter(|&&s| s).count();
        let m = self.len() - n;
        if n > 0 && m > 0 {
            out.push(DVector::from_iterator(
                self.len(),
                self.is_source.iter().map(|&s| if s { 1.0 / n as f64 } else { -1.0 / m as f64 }),
            ));
        }
        for class in [LabelValue::Class1, LabelValue::Class2] {
            let nc = (0..self.len()).filter(|&i| self.is_source[i] && filled[i] == class).count();
            let mc = (0..self.len()).filter(|&i| !self.is_source[i] && filled[i] == class).count();
            if nc == 0 || mc == 0 {
                continue;
            }
            out.push(DVector::from_iterator(
                self.len(),
                (0..self.len()).map(|i| match (filled[i] == class, self.is_source[i]) {
                    (true, true) => 1.0 / nc as f64,
                    (true, false) => -1.0 / mc as f64,
                    _ => 0.0,
                }),
            ));
        }
        out
    }
}

/// Weights for (Class1, Class2) rows: Class1 gets 1, Class2 gets `n1 / n2`.
/// When either class is absent both weights are 1.
fn class_weight_pair(labels: &[LabelValue]) -> (f64, f64) {
    let (n1, n2, _) = count_labels(labels);
    if n1 == 0 || n2 == 0 {
        (1.0, 1.0)
    } else {
        (1.0, n1 as f64 / n2 as f64)
    }
}

pub(crate) fn class_weights(labels: &[LabelValue]) -> Vec<f64> {
    let (w1, w2) = class_weight_pair(labels);
    labels
        .iter()
        .map(|l| match l {
            LabelValue::Class1 => w1,
            LabelValue::Class2 => w2,
            LabelValue::Unknown => 0.0,
        })
        .collect()
}

/// Per-row class-imbalance weights for the source and the labeled target rows.
/// The overall target weight `w_t` is not included.
pub fn sample_weights(labels_source: &[LabelValue], labels_target_labeled: &[LabelValue]) -> (Vec<f64>, Vec<f64>) {
    (class_weights(labels_source), class_weights(labels_target_labeled))
}

/// Dense `E`, `M0` and `M = M1 + M2` for a problem.
#[derive(Debug, Clone)]
pub struct RegMatrices {
    pub e: DVector<f64>,
    pub m0: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

impl RegMatrices {
    pub fn e_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.e)
    }
}

pub fn build_reg_matrices(problem: &WarProblem) -> Result<RegMatrices> {
    problem.validate()?;
    let pseudo = match (&problem.target_pseudo, problem.m_u()) {
        (_, 0) => Vec::new(),
        (Some(p), _) => p.clone(),
        (None, _) => return Err(Error::MissingPseudoLabels),
    };
    let rows = problem.stack_rows();
    Ok(reg_matrices_for(&rows, &pseudo, problem.params.w_t))
}

pub(crate) fn reg_matrices_for(rows: &StackRows, pseudo: &[LabelValue], w_t: f64) -> RegMatrices {
    let total = rows.len();
    let e = DVector::from_vec(rows.loss_weights(w_t));
    let n = rows.is_source.iter().filter(|&&s| s).count();
    let m = total - n;
    let m0 = DMatrix::from_fn(total, total, |i, j| match (rows.is_source[i], rows.is_source[j]) {
        (true, true) => 1.0 / (n * n) as f64,
        (false, false) => 1.0 / (m * m) as f64,
        _ => -1.0 / (n * m) as f64,
    });
    let filled = rows.filled_labels(pseudo);
    let mut mm = DMatrix::zeros(total, total);
    for class in [LabelValue::Class1, LabelValue::Class2] {
        let nc = (0..total).filter(|&i| rows.is_source[i] && filled[i] == class).count();
        let mc = (0..total).filter(|&i| !rows.is_source[i] && filled[i] == class).count();
        if nc == 0 || mc == 0 {
            continue;
        }
        for i in 0..total {
            for j in 0..total {
                if filled[i] != class || filled[j] != class {
                    continue;
                }
                mm[(i, j)] += match (rows.is_source[i], rows.is_source[j]) {
                    (true, true) => 1.0 / (nc * nc) as f64,
                    (false, false) => 1.0 / (mc * mc) as f64,
                    _ => -1.0 / (nc * mc) as f64,
                };
            }
        }
    }
    RegMatrices { e, m0, m: mm }
}
