//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use calibkit::domain::LabelValue;
use nalgebra::{DMatrix, DVector};

pub fn rbf_gram(x: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let mut d = 0.0;
        for c in 0..x.ncols() {
            d += (x[(i, c)] - x[(j, c)]).powi(2);
        }
        (-gamma * d).exp()
    })
}

/// Row roles of a transfer stack laid out as source, labeled target, unlabeled target.
pub struct Stack {
    pub n: usize,
    pub m_l: usize,
    pub m_u: usize,
    /// Labels of every row with pseudo labels on the unlabeled rows.
    pub labels: Vec<LabelValue>,
}

impl Stack {
    fn class_weight(labels: &[LabelValue], l: LabelValue) -> f64 {
        let n1 = labels.iter().filter(|&&v| v == LabelValue::Class1).count() as f64;
        let n2 = labels.iter().filter(|&&v| v == LabelValue::Class2).count() as f64;
        match l {
            _ if n1 == 0.0 || n2 == 0.0 => 1.0,
            LabelValue::Class2 => n1 / n2,
            _ => 1.0,
        }
    }

    pub fn loss_weights(&self, w_t: f64) -> Vec<f64> {
        let src = &self.labels[..self.n];
        let tgt = &self.labels[self.n..self.n + self.m_l];
        (0..self.n + self.m_l + self.m_u)
            .map(|i| {
                if i < self.n {
                    Self::class_weight(src, self.labels[i])
                } else if i < self.n + self.m_l {
                    w_t * Self::class_weight(tgt, self.labels[i])
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// `(mean over source rows of f) - (mean over target rows of f)`.
    pub fn marginal_gap(&self, f: &DVector<f64>) -> f64 {
        let s: f64 = (0..self.n).map(|i| f[i]).sum::<f64>() / self.n as f64;
        let m = self.m_l + self.m_u;
        let t: f64 = (self.n..self.n + m).map(|i| f[i]).sum::<f64>() / m as f64;
        s - t
    }

    /// Same gap restricted to one class; `None` if either side is empty.
    pub fn class_gap(&self, f: &DVector<f64>, class: LabelValue) -> Option<f64> {
        let total = self.n + self.m_l + self.m_u;
        let src: Vec<f64> = (0..self.n).filter(|&i| self.labels[i] == class).map(|i| f[i]).collect();
        let tgt: Vec<f64> = (self.n..total).filter(|&i| self.labels[i] == class).map(|i| f[i]).collect();
        if src.is_empty() || tgt.is_empty() {
            return None;
        }
        Some(src.iter().sum::<f64>() / src.len() as f64 - tgt.iter().sum::<f64>() / tgt.len() as f64)
    }

    /// Squared-loss objective evaluated directly from its definition.
    pub fn objective(&self, k: &DMatrix<f64>, alpha: &DVector<f64>, w_t: f64, sigma: f64, lambda: f64) -> f64 {
        let f = k * alpha;
        let w = self.loss_weights(w_t);
        let mut loss = 0.0;
        for i in 0..self.n + self.m_l {
            let y = self.labels[i].as_target().unwrap();
            loss += w[i] * (y - f[i]).powi(2);
        }
        let ridge = sigma * alpha.dot(&(k * alpha));
        let mut mmd = self.marginal_gap(&f).powi(2);
        for c in [LabelValue::Class1, LabelValue::Class2] {
            if let Some(g) = self.class_gap(&f, c) {
                mmd += g * g;
            }
        }
        loss + ridge + lambda * mmd
    }

    /// Dense matrix `Omega` with `f^T Omega f` equal to the summed squared gaps.
    fn omega(&self) -> DMatrix<f64> {
        let total = self.n + self.m_l + self.m_u;
        let mut om = DMatrix::zeros(total, total);
        let mut add = |u: DVector<f64>| om += &u * u.transpose();
        let m = (self.m_l + self.m_u) as f64;
        add(DVector::from_fn(total, |i, _| if i < self.n { 1.0 / self.n as f64 } else { -1.0 / m }));
        for c in [LabelValue::Class1, LabelValue::Class2] {
            let ns = (0..self.n).filter(|&i| self.labels[i] == c).count() as f64;
            let nt = (self.n..total).filter(|&i| self.labels[i] == c).count() as f64;
            if ns == 0.0 || nt == 0.0 {
                continue;
            }
            add(DVector::from_fn(total, |i, _| match (self.labels[i] == c, i < self.n) {
                (true, true) => 1.0 / ns,
                (true, false) => -1.0 / nt,
                _ => 0.0,
            }));
        }
        om
    }

    /// Minimizes the objective by conjugate gradients on its quadratic form,
    /// with exact line search, restarting every `total` steps.
    pub fn cg_minimizer(&self, k: &DMatrix<f64>, w_t: f64, sigma: f64, lambda: f64) -> DVector<f64> {
        let total = self.n + self.m_l + self.m_u;
        let w = DMatrix::from_diagonal(&DVector::from_vec(self.loss_weights(w_t)));
        let y = DVector::from_fn(total, |i, _| if i < self.n + self.m_l { self.labels[i].as_target().unwrap() } else { 0.0 });
        let h = k * &w * k + k * sigma + k * self.omega() * k * lambda;
        let b = k * &w * &y;
        let mut x = DVector::zeros(total);
        for _ in 0..50 {
            let mut r = &b - &h * &x;
            let mut p = r.clone();
            let mut rr = r.dot(&r);
            for _ in 0..total {
                if rr < 1e-30 {
                    break;
                }
                let hp = &h * &p;
                let denom = p.dot(&hp);
                if denom <= 0.0 {
                    break;
                }
                let step = rr / denom;
                x += &p * step;
                r -= &hp * step;
                let next = r.dot(&r);
                p = &r + &p * (next / rr);
                rr = next;
            }
            if rr < 1e-30 {
                break;
            }
        }
        x
    }
}

pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            out[t] = mid;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
