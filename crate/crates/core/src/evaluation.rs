//! Balanced accuracy, area under the performance curve, and the rank-based
//! significance tests used to compare calibration algorithms.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::domain::LabelValue;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub a1: f64,
    pub a2: f64,
    pub bca: f64,
    /// Set when one class has no true members in the evaluated set.
    pub degenerate: bool,
}

/// Balanced classification accuracy `(a1 + a2) / 2`.
///
/// When one class is absent from `truth`, its accuracy is 1 if nothing was
/// predicted as that class, and otherwise equals the other class's accuracy
/// (so the BCA reduces to the present class's accuracy).
pub fn bca(truth: &[LabelValue], predicted: &[LabelValue]) -> Result<Metrics> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: predicted.len(),
        });
    }
    if truth.iter().any(|l| !l.is_known()) {
        return Err(Error::Schema("true labels must be Class1 or Class2".into()));
    }
    let mut count = [0usize; 2];
    let mut correct = [0usize; 2];
    let mut predicted_as = [0usize; 2];
    for (&t, &p) in truth.iter().zip(predicted) {
        let ti = usize::from(t == LabelValue::Class2);
        count[ti] += 1;
        if t == p {
            correct[ti] += 1;
        }
        match p {
            LabelValue::Class1 => predicted_as[0] += 1,
            LabelValue::Class2 => predicted_as[1] += 1,
            LabelValue::Unknown => {}
        }
    }
    let acc = |c: usize| correct[c] as f64 / count[c] as f64;
    let (a1, a2, degenerate) = match (count[0], count[1]) {
        (0, 0) => return Err(Error::NoLabeledSamples),
        (0, _) => {
            let a2 = acc(1);
            (if predicted_as[0] == 0 { 1.0 } else { a2 }, a2, true)
        }
        (_, 0) => {
            let a1 = acc(0);
            (a1, if predicted_as[1] == 0 { 1.0 } else { a1 }, true)
        }
        _ => (acc(0), acc(1), false),
    };
    Ok(Metrics {
        a1,
        a2,
        bca: (a1 + a2) / 2.0,
        degenerate,
    })
}

/// Trapezoidal area under a `(m_l, bca)` curve divided by the area of the
/// unit-height rectangle over the same `m_l` span.
pub fn aupc(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            found: curve.len(),
        });
    }
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Config("m_l values must be strictly increasing".into()));
    }
    let area: f64 = curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    let span = curve[curve.len() - 1].0 - curve[0].0;
    Ok(area / span)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
}

/// Mid-ranks (1-based) of one row, ascending by value.
fn mid_ranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn check_table(table: &[Vec<f64>]) -> Result<(usize, usize)> {
    let b = table.len();
    let k = table.first().map_or(0, Vec::len);
    if b < 2 || k < 2 {
        return Err(Error::DegenerateTable(format!(
            "need at least 2 blocks and 2 treatments, got {b} x {k}"
        )));
    }
    if table.iter().any(|r| r.len() != k) {
        return Err(Error::DegenerateTable("rows have different lengths".into()));
    }
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateTable("table contains non-finite values".into()));
    }
    Ok((b, k))
}

/// Per-treatment rank sums and the summed tie term `sum (t^3 - t)`.
fn rank_sums(table: &[Vec<f64>], k: usize) -> (Vec<f64>, f64) {
    let mut sums = vec![0.0; k];
    let mut ties = 0.0;
    for row in table {
        let ranks = mid_ranks(row);
        for (s, r) in sums.iter_mut().zip(&ranks) {
            *s += r;
        }
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            ties += t * t * t - t;
            i = j;
        }
    }
    (sums, ties)
}

/// Friedman's test on a `blocks x treatments` table, with mid-ranks and the
/// usual tie correction. The p-value is the chi-squared upper tail with
/// `k - 1` degrees of freedom.
pub fn friedman_test(table: &[Vec<f64>]) -> Result<FriedmanResult> {
    let (b, k) = check_table(table)?;
    let (sums, ties) = rank_sums(table, k);
    let (bf, kf) = (b as f64, k as f64);
    let raw = 12.0 / (bf * kf * (kf + 1.0)) * sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * bf * (kf + 1.0);
    let correction = 1.0 - ties / (bf * (kf * kf * kf - kf));
    let df = k - 1;
    if correction <= 1e-12 {
        // every block fully tied: no treatment effect
        return Ok(FriedmanResult { chi2: 0.0, df, p: 1.0 });
    }
    let chi2 = (raw / correction).max(0.0);
    let dist = ChiSquared::new(df as f64).expect("df >= 1");
    Ok(FriedmanResult {
        chi2,
        df,
        p: dist.sf(chi2).clamp(0.0, 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub i: usize,
    pub j: usize,
    pub z: f64,
    pub p: f64,
}

/// Dunn's pairwise comparisons on mean within-block ranks:
/// `z = (R_i - R_j) / sqrt(k (k + 1) / (6 b))`, two-sided normal p-values.
pub fn dunn_posthoc(table: &[Vec<f64>]) -> Result<Vec<PairwiseComparison>> {
    let (b, k) = check_table(table)?;
    let (sums, _) = rank_sums(table, k);
    let (bf, kf) = (b as f64, k as f64);
    let se = (kf * (kf + 1.0) / (6.0 * bf)).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            let z = (sums[i] / bf - sums[j] / bf) / se;
            let p = (2.0 * normal.sf(z.abs())).min(1.0);
            out.push(PairwiseComparison { i, j, z, p });
        }
    }
    Ok(out)
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn fdr_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::OutOfRange(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let candidate = (p_values[idx] * m as f64 / (rank + 1) as f64).max(p_values[idx]);
        running = running.min(candidate);
        adjusted[idx] = running.min(1.0);
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub first: String,
    pub second: String,
    pub dunn_z: f64,
    pub raw_p: f64,
    pub fdr_adjusted_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub treatments: Vec<String>,
    pub blocks: usize,
    pub friedman_chi2: f64,
    pub friedman_df: usize,
    pub friedman_p: f64,
    pub pairwise: Vec<PairwiseRow>,
}

/// Friedman test plus Dunn comparisons with FDR-adjusted p-values.
pub fn compare_treatments(names: &[String], table: &[Vec<f64>]) -> Result<StatReport> {
    let (b, k) = check_table(table)?;
    if names.len() != k {
        return Err(Error::LengthMismatch {
            left: names.len(),
            right: k,
        });
    }
    let friedman = friedman_test(table)?;
    let pairs = dunn_posthoc(table)?;
    let raw: Vec<f64> = pairs.iter().map(|c| c.p).collect();
    let adjusted = fdr_adjust(&raw)?;
    let pairwise = pairs
        .iter()
        .zip(adjusted)
        .map(|(c, adj)| PairwiseRow {
            first: names[c.i].clone(),
            second: names[c.j].clone(),
            dunn_z: c.z,
            raw_p: c.p,
            fdr_adjusted_p: adj,
        })
        .collect();
    Ok(StatReport {
        treatments: names.to_vec(),
        blocks: b,
        friedman_chi2: friedman.chi2,
        friedman_df: friedman.df,
        friedman_p: friedman.p,
        pairwise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use LabelValue::{Class1, Class2};

    fn perfect_order() -> Vec<Vec<f64>> {
        vec![vec![0.1, 0.2, 0.3]; 4]
    }

    #[test]
    fn bca_arithmetic() {
        let mut truth = vec![Class1; 10];
        truth.extend(vec![Class2; 10]);
        let mut pred = truth.clone();
        pred[0] = Class2;
        for p in pred.iter_mut().skip(10).take(3) {
            *p = Class1;
        }
        let m = bca(&truth, &pred).unwrap();
        assert!((m.a1 - 0.9).abs() < 1e-15 && (m.a2 - 0.7).abs() < 1e-15);
        assert!((m.bca - 0.8).abs() < 1e-15);
        assert_eq!(bca(&truth, &truth).unwrap().bca, 1.0);
        assert_eq!(bca(&truth, &[Class1; 20]).unwrap().bca, 0.5);
    }

    #[test]
    fn bca_errors_and_degenerate() {
        assert!(matches!(bca(&[Class1], &[]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(bca(&[], &[]), Err(Error::NoLabeledSamples)));
        let m = bca(&[Class2, Class2], &[Class2, Class2]).unwrap();
        assert!(m.degenerate && m.bca == 1.0);
        let m = bca(&[Class2, Class2], &[Class1, Class2]).unwrap();
        assert!(m.degenerate && m.bca == 0.5);
    }

    #[test]
    fn aupc_examples() {
        assert_eq!(aupc(&[(0.0, 1.0), (5.0, 1.0), (10.0, 1.0)]).unwrap(), 1.0);
        assert_eq!(aupc(&[(0.0, 0.5), (5.0, 0.5)]).unwrap(), 0.5);
        assert_eq!(aupc(&[(0.0, 0.5), (10.0, 1.0)]).unwrap(), 0.75);
        assert!(matches!(aupc(&[(0.0, 0.5)]), Err(Error::TooFewPoints { .. })));
        assert!(aupc(&[(0.0, 0.5), (0.0, 0.6)]).is_err());
    }

    #[test]
    fn friedman_perfect_ordering() {
        let r = friedman_test(&perfect_order()).unwrap();
        assert!((r.chi2 - 8.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert!((r.p - (-4.0f64).exp()).abs() < 1e-10);
        assert!((r.p - 0.0183).abs() < 1e-3);
    }

    #[test]
    fn friedman_all_tied() {
        let r = friedman_test(&vec![vec![0.5, 0.5, 0.5]; 5]).unwrap();
        assert_eq!((r.chi2, r.p), (0.0, 1.0));
        assert!(friedman_test(&[vec![1.0, 2.0]]).is_err());
        assert!(friedman_test(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    /// Exact permutation distribution of the uncorrected statistic for a
    /// small tie-free table: every combination of within-block rank orders.
    fn exact_friedman_p(b: usize, k: usize, observed: f64) -> f64 {
        fn perms(k: usize) -> Vec<Vec<f64>> {
            if k == 1 {
                return vec![vec![1.0]];
            }
            let mut out = Vec::new();
            for p in perms(k - 1) {
                for pos in 0..k {
                    let mut q = p.clone();
                    q.insert(pos, k as f64);
                    out.push(q);
                }
            }
            out
        }
        let all = perms(k);
        let total = all.len().pow(b as u32);
        let mut hits = 0usize;
        for code in 0..total {
            let mut c = code;
            let mut sums = vec![0.0; k];
            for _ in 0..b {
                let p = &all[c % all.len()];
                c /= all.len();
                for (s, r) in sums.iter_mut().zip(p) {
                    *s += r;
                }
            }
            let (bf, kf) = (b as f64, k as f64);
            let stat = 12.0 / (bf * kf * (kf + 1.0)) * sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * bf * (kf + 1.0);
            if stat >= observed - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn friedman_exact_cross_check() {
        // b*k = 12: the perfect ordering is the most extreme outcome, reached
        // by the 3! tables that repeat one permutation in all 4 blocks.
        let exact = exact_friedman_p(4, 3, 8.0);
        assert!((exact - 6.0 / 1296.0).abs() < 1e-15);
        let approx = friedman_test(&perfect_order()).unwrap().p;
        assert!(exact < approx && approx < 0.05);

        let table = vec![vec![0.1, 0.3, 0.2], vec![0.2, 0.1, 0.3], vec![0.1, 0.2, 0.3], vec![0.3, 0.1, 0.2]];
        let r = friedman_test(&table).unwrap();
        let exact = exact_friedman_p(4, 3, r.chi2);
        assert!((exact - r.p).abs() < 0.25, "exact {exact} vs approx {}", r.p);
    }

    #[test]
    fn dunn_examples() {
        let pairs = dunn_posthoc(&perfect_order()).unwrap();
        assert_eq!(pairs.len(), 3);
        let extreme = pairs.iter().find(|c| c.i == 0 && c.j == 2).unwrap();
        assert!((extreme.z.abs() - 2.0 / 0.5f64.sqrt()).abs() < 1e-12);
        assert!((extreme.z.abs() - 2.828).abs() < 1e-3);
        assert!((extreme.p - 0.0047).abs() < 1e-4);

        let same = dunn_posthoc(&vec![vec![0.4; 4]; 6]).unwrap();
        assert_eq!(same.len(), 6);
        assert!(same.iter().all(|c| c.z == 0.0 && c.p == 1.0));
    }

    #[test]
    fn fdr_examples() {
        assert_eq!(fdr_adjust(&[0.01, 0.02, 0.03]).unwrap(), vec![0.03, 0.03, 0.03]);
        assert_eq!(fdr_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(fdr_adjust(&[0.04; 5]).unwrap(), vec![0.04; 5]);
        assert!(matches!(fdr_adjust(&[1.2]), Err(Error::OutOfRange(_))));
        // returned in input order
        assert_eq!(fdr_adjust(&[0.03, 0.01, 0.5]).unwrap(), vec![0.045, 0.03, 0.5]);
    }

    #[test]
    fn report_names_pairs() {
        let names: Vec<String> = ["BL2", "WAR", "ASTL"].iter().map(|s| s.to_string()).collect();
        let report = compare_treatments(&names, &perfect_order()).unwrap();
        assert_eq!(report.friedman_df, 2);
        assert_eq!(report.pairwise.len(), 3);
        assert_eq!(report.pairwise[1].first, "BL2");
        assert_eq!(report.pairwise[1].second, "ASTL");
    }

    fn labels_strategy() -> impl Strategy<Value = (Vec<LabelValue>, Vec<LabelValue>)> {
        proptest::collection::vec((any::<bool>(), any::<bool>()), 2..40).prop_map(|v| {
            let mut t: Vec<LabelValue> = v.iter().map(|(a, _)| if *a { Class1 } else { Class2 }).collect();
            t[0] = Class1;
            t[1] = Class2;
            let p = v.iter().map(|(_, b)| if *b { Class1 } else { Class2 }).collect();
            (t, p)
        })
    }

    proptest! {
        #[test]
        fn bca_symmetric_under_class_swap((t, p) in labels_strategy()) {
            let swap = |v: &[LabelValue]| v.iter().map(|l| if *l == Class1 { Class2 } else { Class1 }).collect::<Vec<_>>();
            let a = bca(&t, &p).unwrap().bca;
            let b = bca(&swap(&t), &swap(&p)).unwrap().bca;
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn friedman_rank_invariant(rows in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 2..10)) {
            let a = friedman_test(&rows).unwrap();
            let transformed: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| (3.0 * v).exp() - 7.0).collect()).collect();
            let b = friedman_test(&transformed).unwrap();
            prop_assert!((a.chi2 - b.chi2).abs() < 1e-9);
        }

        #[test]
        fn fdr_bounds_and_idempotence(ps in proptest::collection::vec(0.0f64..=1.0, 1..30)) {
            let adj = fdr_adjust(&ps).unwrap();
            for (a, p) in adj.iter().zip(&ps) {
                prop_assert!(*a >= *p && *a <= 1.0);
            }
            // monotone in the sorted order of the raw p-values
            let mut order: Vec<usize> = (0..ps.len()).collect();
            order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]));
            for w in order.windows(2) {
                prop_assert!(adj[w[0]] <= adj[w[1]] + 1e-15);
            }
            // a second pass can only raise values; it is not a fixed point in general
            let again = fdr_adjust(&adj).unwrap();
            for (a, b) in again.iter().zip(&adj) {
                prop_assert!(*a >= *b - 1e-15);
            }
        }

        #[test]
        fn aupc_dominance(base in proptest::collection::vec(0.0f64..0.9, 2..12), lift in proptest::collection::vec(0.0f64..0.1, 12)) {
            let low: Vec<(f64, f64)> = base.iter().enumerate().map(|(i, v)| (5.0 * i as f64, *v)).collect();
            let high: Vec<(f64, f64)> = low.iter().zip(&lift).map(|((m, v), l)| (*m, v + l)).collect();
            prop_assert!(aupc(&high).unwrap() >= aupc(&low).unwrap());
        }
    }
}
