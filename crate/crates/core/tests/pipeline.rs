mod common;

use calibkit::domain::{DomainData, KernelSpec, LabelValue};
use calibkit::evaluation::bca;
use calibkit::features::{generate_synthetic, SynthConfig};
use calibkit::pipeline::{run_astl, run_bl1, run_bl2, Benchmark, ExperimentConfig};
use calibkit::war::{decisions, fit_weighted_ridge, predict};
use common::mean;

fn synth(shift: f64, seed: u64, subjects: usize, epochs: usize) -> Vec<DomainData> {
    generate_synthetic(&SynthConfig {
        n_subjects: subjects,
        epochs_per_subject: epochs,
        d_raw: 10,
        shift_scale: shift,
        rotation_scale: shift,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn transfer_bca(source: &DomainData, target: &DomainData) -> f64 {
    let model = fit_weighted_ridge(&source.features, &source.labels, KernelSpec::rbf_auto(), 0.1).unwrap();
    bca(&target.labels, &decisions(&predict(&model, &target.features).unwrap())).unwrap().bca
}

#[test]
fn source_to_target_accuracy_drops_as_shift_grows() {
    let levels = [0.0, 0.5, 1.0, 2.0];
    let means: Vec<f64> = levels
        .iter()
        .map(|&s| {
            let v: Vec<f64> = (0..20)
                .map(|seed| {
                    let d = synth(s, seed, 2, 150);
                    transfer_bca(&d[0], &d[1])
                })
                .collect();
            mean(&v)
        })
        .collect();
    for w in means.windows(2) {
        assert!(w[1] < w[0], "mean BCA by shift level: {means:?}");
    }
}

#[test]
fn bl1_without_shift_matches_a_target_trained_classifier() {
    let mut gaps = Vec::new();
    for seed in 0..10 {
        let d = synth(0.0, seed, 4, 200);
        let cfg = ExperimentConfig {
            max_iterations: 1,
            ..ExperimentConfig::default()
        };
        let pooled = run_bl1(&cfg, &d[..3], &d[3], 0).unwrap()[0].bca;
        // target-trained control: fit on one half of the target, score the other
        let t = &d[3];
        let half = t.n_samples() / 2;
        let fit = DomainData::new("a", t.features.rows(0, half).into_owned(), t.labels[..half].to_vec()).unwrap();
        let rest = DomainData::new("b", t.features.rows(half, t.n_samples() - half).into_owned(), t.labels[half..].to_vec()).unwrap();
        gaps.push(pooled - transfer_bca(&fit, &rest));
    }
    assert!(mean(&gaps).abs() < 0.05, "BL1 minus target-trained BCA: {gaps:?}");
}

#[test]
fn bl2_learning_curve_rises_on_average() {
    let d = synth(0.5, 3, 1, 260);
    let cfg = ExperimentConfig {
        max_iterations: 11,
        ..ExperimentConfig::default()
    };
    let mut sums = vec![0.0; 11];
    for run in 0..30 {
        for r in run_bl2(&cfg, &d[0], run).unwrap() {
            assert_eq!(r.m_l, r.iteration * 5);
            if r.iteration == 0 {
                assert_eq!(r.bca, 0.5);
            }
            sums[r.iteration] += r.bca / 30.0;
        }
    }
    for w in sums[1..].windows(2) {
        assert!(w[1] >= w[0], "mean BL2 curve: {sums:?}");
    }
}

#[test]
fn astl_transfers_without_target_labels() {
    let d = synth(0.0, 5, 4, 120);
    let cfg = ExperimentConfig {
        max_iterations: 1,
        ..ExperimentConfig::default()
    };
    let v: Vec<f64> = (0..30)
        .map(|run| run_astl(&cfg, &d[..2], &d[2..3], &d[3], run).unwrap()[0].bca)
        .collect();
    assert!(mean(&v) > 0.6, "mean BCA at m_l = 0: {}", mean(&v));
}

#[test]
fn grid_cells_share_roles_and_query_answers() {
    let d = synth(0.5, 6, 5, 60);
    let cfg = ExperimentConfig {
        n_labeled_sources: 2,
        n_unlabeled_sources: 2,
        runs: 3,
        max_iterations: 2,
        ..ExperimentConfig::default()
    };
    let bench = Benchmark::new(d, cfg).unwrap();
    for t in 0..5 {
        for run in 0..3 {
            let r = bench.roles(t, run).unwrap();
            assert_eq!(r, bench.roles(t, run).unwrap());
            assert!(!r.labeled.contains(&t) && !r.unlabeled.contains(&t));
        }
    }
    let pseudo = bench.pseudo_label(&[0, 1], 2).unwrap();
    assert!(pseudo.iter().all(|l| l.is_known()));
    assert!(pseudo.contains(&LabelValue::Class1) || pseudo.contains(&LabelValue::Class2));
}
