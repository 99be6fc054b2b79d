//! Kernel evaluation, the median bandwidth heuristic, and a cache of
//! per-domain-pair Gram matrices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::domain::{Gamma, KernelKind, KernelSpec};
use crate::error::{Error, Result};

/// Squared Euclidean distances between the rows of `x` and the rows of `y`.
pub fn squared_distances(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let xn: Vec<f64> = x.row_iter().map(|r| r.norm_squared()).collect();
    let yn: Vec<f64> = y.row_iter().map(|r| r.norm_squared()).collect();
    let mut d = x * y.transpose();
    for j in 0..d.ncols() {
        for i in 0..d.nrows() {
            d[(i, j)] = (xn[i] + yn[j] - 2.0 * d[(i, j)]).max(0.0);
        }
    }
    d
}

/// `1 / (2 m^2)` where `m` is the median pairwise distance between distinct rows.
/// Falls back to 1 when the rows are all identical or there is only one row.
pub fn median_heuristic_gamma(sq_dist: &DMatrix<f64>) -> f64 {
    let n = sq_dist.nrows();
    let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for j in 0..n {
        for i in 0..j {
            upper.push(sq_dist[(i, j)]);
        }
    }
    if upper.is_empty() {
        return 1.0;
    }
    let len = upper.len();
    let mid = len / 2;
    let (_, hi, _) = upper.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = hi.sqrt();
    let median = if len % 2 == 1 {
        hi
    } else {
        let lo = upper[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max).sqrt();
        0.5 * (lo + hi)
    };
    if median > 0.0 {
        1.0 / (2.0 * median * median)
    } else {
        1.0
    }
}

/// Resolves `Gamma::Auto` against a training stack.
pub fn resolve_gamma(spec: &KernelSpec, train: &DMatrix<f64>) -> f64 {
    match (spec.kind, spec.gamma) {
        (KernelKind::Linear, _) => 0.0,
        (KernelKind::Rbf, Gamma::Fixed(g)) => g,
        (KernelKind::Rbf, Gamma::Auto) => median_heuristic_gamma(&squared_distances(train, train)),
    }
}

/// Kernel matrix between the rows of `x` and `y` with an explicit bandwidth.
/// For the linear kernel `gamma` is ignored.
pub fn kernel_with_gamma(x: &DMatrix<f64>, y: &DMatrix<f64>, kind: KernelKind, gamma: f64) -> Result<DMatrix<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
            context: "kernel inputs",
        });
    }
    Ok(match kind {
        KernelKind::Linear => x * y.transpose(),
        KernelKind::Rbf => squared_distances(x, y).map(|d| (-gamma * d).exp()),
    })
}

/// Kernel matrix between the rows of `x` and the rows of `y`.
///
/// With `Gamma::Auto` the bandwidth comes from the median heuristic on `x`.
pub fn kernel_matrix(x: &DMatrix<f64>, y: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: y.ncols(),
            context: "kernel inputs",
        });
    }
    let gamma = resolve_gamma(spec, x);
    kernel_with_gamma(x, y, spec.kind, gamma)
}

/// Gram matrix of the stacked rows of two domains, `[first; second]`.
#[derive(Debug)]
pub struct PairGram {
    pub first: usize,
    pub second: usize,
    pub n_first: usize,
    pub gamma: f64,
    pub gram: DMatrix<f64>,
}

impl PairGram {
    /// Position of `(domain, row)` in the stacked order.
    pub fn position(&self, domain: usize, row: usize) -> usize {
        if domain == self.first {
            row
        } else {
            debug_assert_eq!(domain, self.second);
            self.n_first + row
        }
    }
}

/// Lazily computed Gram matrices for every pair of domains in an experiment.
///
/// Pairs are stored once under `(min, max)` ordering; the bandwidth for
/// `Gamma::Auto` is the median heuristic on the two domains' pooled rows.
pub struct GramCache {
    features: Vec<Arc<DMatrix<f64>>>,
    spec: KernelSpec,
    pairs: Mutex<HashMap<(usize, usize), Arc<PairGram>>>,
}

impl GramCache {
    pub fn new(features: Vec<Arc<DMatrix<f64>>>, spec: KernelSpec) -> Result<Self> {
        if let Some(first) = features.first() {
            for f in &features {
                if f.ncols() != first.ncols() {
                    return Err(Error::DimensionMismatch {
                        expected: first.ncols(),
                        found: f.ncols(),
                        context: "feature dimension across domains",
                    });
                }
            }
        }
        Ok(GramCache {
            features,
            spec,
            pairs: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn features(&self, domain: usize) -> &Arc<DMatrix<f64>> {
        &self.features[domain]
    }

    pub fn n_domains(&self) -> usize {
        self.features.len()
    }

    pub fn pair(&self, a: usize, b: usize) -> Arc<PairGram> {
        assert_ne!(a, b, "a domain is never paired with itself");
        let key = (a.min(b), a.max(b));
        if let Some(hit) = self.pairs.lock().expect("gram cache poisoned").get(&key) {
            return Arc::clone(hit);
        }
        // Computed outside the lock; a concurrent duplicate is harmless.
        let computed = Arc::new(self.compute(key.0, key.1));
        let mut map = self.pairs.lock().expect("gram cache poisoned");
        Arc::clone(map.entry(key).or_insert(computed))
    }

    fn compute(&self, first: usize, second: usize) -> PairGram {
        let a = &self.features[first];
        let b = &self.features[second];
        let mut stacked = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
        stacked.rows_mut(0, a.nrows()).copy_from(a);
        stacked.rows_mut(a.nrows(), b.nrows()).copy_from(b);
        let (gamma, gram) = match self.spec.kind {
            KernelKind::Linear => (0.0, &stacked * stacked.transpose()),
            KernelKind::Rbf => {
                let sq = squared_distances(&stacked, &stacked);
                let gamma = match self.spec.gamma {
                    Gamma::Fixed(g) => g,
                    Gamma::Auto => median_heuristic_gamma(&sq),
                };
                (gamma, sq.map(|d| (-gamma * d).exp()))
            }
        };
        PairGram {
            first,
            second,
            n_first: a.nrows(),
            gamma,
            gram,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_rbf(x: &DMatrix<f64>, y: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), y.nrows(), |i, j| {
            let mut s = 0.0;
            for k in 0..x.ncols() {
                let d = x[(i, k)] - y[(j, k)];
                s += d * d;
            }
            (-gamma * s).exp()
        })
    }

    #[test]
    fn rbf_self_diagonal_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = DMatrix::from_fn(6, 3, |_, _| rng.gen::<f64>());
        let k = kernel_matrix(&x, &x, &KernelSpec::rbf(0.7).unwrap()).unwrap();
        for i in 0..6 {
            assert!((k[(i, i)] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rbf_direct_formula() {
        let x = DMatrix::from_element(1, 1, 0.0);
        let y = DMatrix::from_element(1, 1, 1.0);
        let k = kernel_matrix(&x, &y, &KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert!((k[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k[(0, 0)] - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn rbf_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(5, 3, |_, _| rng.gen::<f64>());
        let y = DMatrix::from_fn(5, 3, |_, _| rng.gen::<f64>());
        let k = kernel_matrix(&x, &y, &KernelSpec::rbf(1.3).unwrap()).unwrap();
        assert!((k - naive_rbf(&x, &y, 1.3)).amax() < 1e-12);
    }

    #[test]
    fn linear_kernel_and_mismatch() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = kernel_matrix(&x, &x, &KernelSpec::linear()).unwrap();
        assert_eq!(k[(0, 1)], 11.0);
        let y = DMatrix::zeros(2, 3);
        assert!(matches!(
            kernel_matrix(&x, &y, &KernelSpec::linear()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn median_heuristic_on_known_points() {
        // distances among {0, 1, 3}: 1, 2, 3 -> median 2 -> gamma 1/8
        let x = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 3.0]);
        let g = median_heuristic_gamma(&squared_distances(&x, &x));
        assert!((g - 0.125).abs() < 1e-15);
        // distances among {0, 1, 3, 6}: 1,2,3,3,5,6 -> median 3
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 3.0, 6.0]);
        let g = median_heuristic_gamma(&squared_distances(&x, &x));
        assert!((g - 1.0 / 18.0).abs() < 1e-15);
        let same = DMatrix::from_element(3, 2, 4.0);
        assert_eq!(median_heuristic_gamma(&squared_distances(&same, &same)), 1.0);
    }

    #[test]
    fn cache_matches_direct_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DMatrix::from_fn(4, 2, |_, _| rng.gen::<f64>());
        let b = DMatrix::from_fn(3, 2, |_, _| rng.gen::<f64>());
        let cache = GramCache::new(vec![Arc::new(a.clone()), Arc::new(b.clone())], KernelSpec::rbf_auto()).unwrap();
        let pg = cache.pair(1, 0);
        assert_eq!((pg.first, pg.second, pg.n_first), (0, 1, 4));
        let stacked = DMatrix::from_fn(7, 2, |i, j| if i < 4 { a[(i, j)] } else { b[(i - 4, j)] });
        let direct = kernel_matrix(&stacked, &stacked, &KernelSpec::rbf_auto()).unwrap();
        assert!((&pg.gram - direct).amax() < 1e-14);
        assert_eq!(pg.position(1, 2), 6);
        assert!(Arc::ptr_eq(&pg, &cache.pair(0, 1)));
    }
}
