//! Offline calibration experiments: per-run role assignment, pseudo-labeling
//! of the unlabeled source subjects, the iterative transfer + active learning
//! loop, and the three baselines.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{check_common_dim, CalibrationState, DomainData, HyperParams, KernelSpec, LabelValue};
use crate::error::{Error, Result};
use crate::evaluation::bca;
use crate::features::stack_features;
use crate::sampling::{select_random, select_uncertain};
use crate::sml::{sign_matrix, sml_or_fallback};
use crate::war::{decisions, fit_ensemble, fit_weighted_ridge, predict, resolve_gamma, GramCache, SourceRef, WarModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "BL1")]
    Bl1,
    #[serde(rename = "BL2")]
    Bl2,
    #[serde(rename = "WAR")]
    War,
    #[serde(rename = "ASTL")]
    Astl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Bl1, Algorithm::Bl2, Algorithm::War, Algorithm::Astl];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bl1 => "BL1",
            Algorithm::Bl2 => "BL2",
            Algorithm::War => "WAR",
            Algorithm::Astl => "ASTL",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown algorithm '{s}' (expected BL1, BL2, WAR or ASTL)")))
    }
}

/// How per-source scores are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fusion {
    TrainingAccuracy,
    Sml,
}

/// How target samples are queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Uncertainty,
    Random,
}

/// Knobs of the iterative transfer loop. ASTL and the wAR baseline are two
/// settings of the same loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    pub fusion: Fusion,
    pub selection: Selection,
    pub use_unlabeled_sources: bool,
}

impl EngineOptions {
    pub const ASTL: EngineOptions = EngineOptions {
        fusion: Fusion::Sml,
        selection: Selection::Uncertainty,
        use_unlabeled_sources: true,
    };
    pub const WAR: EngineOptions = EngineOptions {
        fusion: Fusion::TrainingAccuracy,
        selection: Selection::Random,
        use_unlabeled_sources: false,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_labeled_sources: usize,
    pub n_unlabeled_sources: usize,
    pub runs: usize,
    /// Evaluations per run; the first is at `m_l = 0`.
    pub max_iterations: usize,
    pub params: HyperParams,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    /// Target subjects to evaluate; empty means every domain.
    pub targets: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_labeled_sources: 7,
            n_unlabeled_sources: 6,
            runs: 30,
            max_iterations: 11,
            params: HyperParams::default(),
            algorithms: Algorithm::ALL.to_vec(),
            seed: 0,
            targets: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, n_domains: usize) -> Result<()> {
        self.params.validate()?;
        if self.runs < 1 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        let needs_sources = self.algorithms.iter().any(|a| *a != Algorithm::Bl2);
        if needs_sources && self.n_labeled_sources < 1 {
            return Err(Error::Config("n_labeled_sources must be >= 1".into()));
        }
        if self.n_labeled_sources + self.n_unlabeled_sources + 1 > n_domains {
            return Err(Error::Config(format!(
                "{} labeled + {} unlabeled sources + 1 target exceeds the {} available domains",
                self.n_labeled_sources, self.n_unlabeled_sources, n_domains
            )));
        }
        Ok(())
    }
}

/// One evaluation point of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    pub target_id: String,
    pub run: usize,
    pub iteration: usize,
    pub m_l: usize,
    pub bca: f64,
    pub wall_ms: u64,
    pub seed: u64,
}

impl RunRecord {
    pub fn cell(&self) -> CellKey {
        (self.algorithm.clone(), self.target_id.clone(), self.run)
    }

    fn sort_key(&self) -> (&str, &str, usize, usize) {
        (&self.algorithm, &self.target_id, self.run, self.iteration)
    }
}

/// `(algorithm, target_id, run)`.
pub type CellKey = (String, String, usize);

pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Seed of an independent random stream for one experiment cell.
pub fn stream_seed(seed: u64, tag: &str, target_id: &str, run: usize) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0100_0000_01b3;
    let mut h = FNV_OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    eat(&seed.to_le_bytes());
    eat(tag.as_bytes());
    eat(&[0xff]);
    eat(target_id.as_bytes());
    eat(&[0xff]);
    eat(&(run as u64).to_le_bytes());
    // splitmix64 finalizer
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, tag: &str, target_id: &str, run: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, tag, target_id, run))
}

/// Source roles for one (target, run) pair, as domain indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roles {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

/// Random split of `candidates` into labeled and unlabeled sources. Depends
/// only on the seed, the target and the run, so every algorithm of a cell
/// sees the same split.
pub fn assign_roles(
    seed: u64,
    target_id: &str,
    run: usize,
    candidates: &[usize],
    n_labeled: usize,
    n_unlabeled: usize,
) -> Result<Roles> {
    if n_labeled + n_unlabeled > candidates.len() {
        return Err(Error::Config(format!(
            "{} sources requested but only {} candidates",
            n_labeled + n_unlabeled,
            candidates.len()
        )));
    }
    let mut order = candidates.to_vec();
    order.shuffle(&mut stream(seed, "roles", target_id, run));
    let mut labeled = order[..n_labeled].to_vec();
    let mut unlabeled = order[n_labeled..n_labeled + n_unlabeled].to_vec();
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    Ok(Roles { labeled, unlabeled })
}

fn elapsed_ms(since: Instant) -> u64 {
    since.elapsed().as_millis() as u64
}

/// BCA of `scores` on target rows `pool` against the hidden labels.
fn pool_bca(truth: &[LabelValue], pool: &[usize], scores: &DVector<f64>) -> Result<f64> {
    let t: Vec<LabelValue> = pool.iter().map(|&i| truth[i]).collect();
    Ok(bca(&t, &decisions(scores))?.bca)
}

/// BL2's classifier: a constant when only one class has been labeled.
#[derive(Debug, Clone)]
pub enum TargetOnlyModel {
    Constant(LabelValue),
    Kernel(WarModel),
}

impl TargetOnlyModel {
    pub fn decide(&self, x: &DMatrix<f64>) -> Result<Vec<LabelValue>> {
        match self {
            TargetOnlyModel::Constant(l) => Ok(vec![*l; x.nrows()]),
            TargetOnlyModel::Kernel(m) => Ok(decisions(&predict(m, x)?)),
        }
    }
}

const BL2_GAMMA_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn fit_or_constant(x: &DMatrix<f64>, labels: &[LabelValue], gamma: f64, sigma: f64) -> Result<TargetOnlyModel> {
    let first = *labels.first().ok_or(Error::NoLabeledSamples)?;
    if labels.iter().all(|&l| l == first) {
        return Ok(TargetOnlyModel::Constant(first));
    }
    Ok(TargetOnlyModel::Kernel(fit_weighted_ridge(x, labels, KernelSpec::rbf(gamma)?, sigma)?))
}

/// Stratified fold index per row: 5 folds when every class has at least 5
/// rows, leave-one-out otherwise.
pub fn stratified_folds(labels: &[LabelValue]) -> (usize, Vec<usize>) {
    let (n1, n2, _) = crate::domain::count_labels(labels);
    if n1.min(n2) < 5 {
        return (labels.len(), (0..labels.len()).collect());
    }
    let (mut c1, mut c2) = (0, 0);
    let folds = labels
        .iter()
        .map(|l| {
            let c = if *l == LabelValue::Class1 { &mut c1 } else { &mut c2 };
            *c += 1;
            (*c - 1) % 5
        })
        .collect();
    (5, folds)
}

/// Target-only weighted kernel classifier with the RBF width chosen by
/// stratified cross-validation over multiples of the median heuristic.
pub fn fit_target_only(x: &DMatrix<f64>, labels: &[LabelValue], sigma: f64) -> Result<TargetOnlyModel> {
    if x.nrows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: labels.len(),
        });
    }
    let base = resolve_gamma(&KernelSpec::rbf_auto(), x);
    let (n1, n2, _) = crate::domain::count_labels(labels);
    if n1 == 0 || n2 == 0 {
        return fit_or_constant(x, labels, base, sigma);
    }
    let (k, folds) = stratified_folds(labels);
    let mut best = (f64::NEG_INFINITY, base);
    for mult in BL2_GAMMA_GRID {
        let gamma = base * mult;
        let mut pred = vec![LabelValue::Unknown; labels.len()];
        for fold in 0..k {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != fold).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == fold).collect();
            if test.is_empty() {
                continue;
            }
            let xt = x.select_rows(&train);
            let yt: Vec<LabelValue> = train.iter().map(|&i| labels[i]).collect();
            let model = fit_or_constant(&xt, &yt, gamma, sigma)?;
            for (&i, l) in test.iter().zip(model.decide(&x.select_rows(&test))?) {
                pred[i] = l;
            }
        }
        let score = bca(labels, &pred)?.bca;
        if score > best.0 {
            best = (score, gamma);
        }
    }
    fit_or_constant(x, labels, best.1, sigma)
}

/// Domains plus a shared cache of pairwise Gram matrices.
pub struct Benchmark {
    domains: Vec<DomainData>,
    cache: GramCache,
    cfg: ExperimentConfig,
}

impl Benchmark {
    /// Every domain must be fully labeled: labels answer the queries and score
    /// the targets, and any domain may serve as a labeled source.
    pub fn new(domains: Vec<DomainData>, cfg: ExperimentConfig) -> Result<Self> {
        if let Some(d) = domains.iter().find(|d| !d.is_fully_labeled()) {
            return Err(Error::Schema(format!("domain '{}' has Unknown labels", d.domain_id)));
        }
        cfg.validate(domains.len())?;
        let mut ids = HashSet::new();
        if let Some(d) = domains.iter().find(|d| !ids.insert(d.domain_id.as_str())) {
            return Err(Error::Schema(format!("duplicate domain id '{}'", d.domain_id)));
        }
        for t in &cfg.targets {
            if !ids.contains(t.as_str()) {
                return Err(Error::Config(format!("unknown target '{t}'")));
            }
        }
        Self::build(domains, cfg)
    }

    fn build(domains: Vec<DomainData>, cfg: ExperimentConfig) -> Result<Self> {
        check_common_dim(&domains)?;
        cfg.params.validate()?;
        let features = domains.iter().map(|d| Arc::new(d.features.clone())).collect();
        let cache = GramCache::new(features, cfg.params.kernel)?;
        Ok(Benchmark { domains, cache, cfg })
    }

    pub fn domains(&self) -> &[DomainData] {
        &self.domains
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn target_indices(&self) -> Vec<usize> {
        if self.cfg.targets.is_empty() {
            return (0..self.domains.len()).collect();
        }
        (0..self.domains.len())
            .filter(|&i| self.cfg.targets.contains(&self.domains[i].domain_id))
            .collect()
    }

    pub fn roles(&self, target: usize, run: usize) -> Result<Roles> {
        let candidates: Vec<usize> = (0..self.domains.len()).filter(|&i| i != target).collect();
        assign_roles(
            self.cfg.seed,
            &self.domains[target].domain_id,
            run,
            &candidates,
            self.cfg.n_labeled_sources,
            self.cfg.n_unlabeled_sources,
        )
    }

    fn record(&self, tag: &str, target: usize, run: usize, iteration: usize, m_l: usize, bca: f64, wall_ms: u64) -> RunRecord {
        RunRecord {
            algorithm: tag.to_string(),
            target_id: self.domains[target].domain_id.clone(),
            run,
            iteration,
            m_l,
            bca,
            wall_ms,
            seed: self.cfg.seed,
        }
    }

    /// Labels every row of domain `u` with the SML-fused ensemble trained on
    /// the `labeled` domains.
    pub fn pseudo_label(&self, labeled: &[usize], u: usize) -> Result<Vec<LabelValue>> {
        let refs: Vec<SourceRef<'_>> = labeled
            .iter()
            .map(|&i| SourceRef {
                domain: i,
                labels: &self.domains[i].labels,
            })
            .collect();
        let unknown = vec![LabelValue::Unknown; self.domains[u].n_samples()];
        let ens = fit_ensemble(&self.cache, &refs, u, &unknown, &self.cfg.params)?;
        let (weights, _) = sml_or_fallback(&sign_matrix(&ens.pool_scores)?, &ens.train_accuracies());
        Ok(decisions(&ens.fuse_pool(&weights)?))
    }

    /// The iterative loop on one target, recorded under `tag`.
    pub fn run_engine(&self, target: usize, run: usize, roles: &Roles, opts: EngineOptions, tag: &str) -> Result<Vec<RunRecord>> {
        let target_id = &self.domains[target].domain_id;
        let params = &self.cfg.params;
        let mut rng = stream(self.cfg.seed, tag, target_id, run);
        let mut clock = Instant::now();

        let mut source_labels: Vec<(usize, Vec<LabelValue>)> =
            roles.labeled.iter().map(|&i| (i, self.domains[i].labels.clone())).collect();
        if opts.use_unlabeled_sources {
            for &u in &roles.unlabeled {
                source_labels.push((u, self.pseudo_label(&roles.labeled, u)?));
            }
        }
        let refs: Vec<SourceRef<'_>> = source_labels
            .iter()
            .map(|(d, l)| SourceRef {
                domain: *d,
                labels: l,
            })
            .collect();

        let truth = &self.domains[target].labels;
        let mut state = CalibrationState::new(&self.domains[target]);
        let mut records = Vec::with_capacity(self.cfg.max_iterations);
        for iteration in 0..self.cfg.max_iterations {
            if state.m_u() == 0 {
                break;
            }
            let ens = fit_ensemble(&self.cache, &refs, target, &state.target().labels, params)?;
            let accuracies = ens.train_accuracies();
            let weights = match opts.fusion {
                Fusion::TrainingAccuracy => accuracies,
                Fusion::Sml => sml_or_fallback(&sign_matrix(&ens.pool_scores)?, &accuracies).0,
            };
            let scores = ens.fuse_pool(&weights)?;
            let value = pool_bca(truth, &ens.pool, &scores)?;
            records.push(self.record(tag, target, run, iteration, state.m_l(), value, elapsed_ms(clock)));
            clock = Instant::now();

            if iteration + 1 < self.cfg.max_iterations {
                let picked: Vec<usize> = match opts.selection {
                    Selection::Uncertainty => select_uncertain(scores.as_slice(), params.p)
                        .into_iter()
                        .map(|j| ens.pool[j])
                        .collect(),
                    Selection::Random => select_random(&ens.pool, params.p, &mut rng),
                };
                let answers: Vec<(usize, LabelValue)> = picked.iter().map(|&i| (i, truth[i])).collect();
                state.install_labels(iteration, &answers)?;
            }
        }
        Ok(records)
    }

    fn run_bl1_indexed(&self, target: usize, run: usize, roles: &Roles) -> Result<Vec<RunRecord>> {
        let clock = Instant::now();
        let pooled: Vec<DomainData> = roles.labeled.iter().map(|&i| self.domains[i].clone()).collect();
        let x = stack_features(&pooled)?;
        let labels: Vec<LabelValue> = pooled.iter().flat_map(|d| d.labels.iter().copied()).collect();
        let model = fit_weighted_ridge(&x, &labels, self.cfg.params.kernel, self.cfg.params.sigma)?;
        let tgt = &self.domains[target];
        let value = bca(&tgt.labels, &decisions(&predict(&model, &tgt.features)?))?.bca;
        let wall = elapsed_ms(clock);
        let p = self.cfg.params.p;
        Ok((0..self.cfg.max_iterations)
            .map(|it| {
                let m_l = (it * p).min(tgt.n_samples());
                self.record("BL1", target, run, it, m_l, value, if it == 0 { wall } else { 0 })
            })
            .collect())
    }

    fn run_bl2_indexed(&self, target: usize, run: usize) -> Result<Vec<RunRecord>> {
        let tgt = &self.domains[target];
        let mut rng = stream(self.cfg.seed, "BL2", &tgt.domain_id, run);
        let mut state = CalibrationState::new(tgt);
        let mut records = Vec::with_capacity(self.cfg.max_iterations);
        records.push(self.record("BL2", target, run, 0, 0, 0.5, 0));
        for iteration in 1..self.cfg.max_iterations {
            let clock = Instant::now();
            let picked = select_random(&state.unlabeled_idx(), self.cfg.params.p, &mut rng);
            let answers: Vec<(usize, LabelValue)> = picked.iter().map(|&i| (i, tgt.labels[i])).collect();
            state.install_labels(iteration - 1, &answers)?;
            let pool = state.unlabeled_idx();
            if pool.is_empty() {
                break;
            }
            let labeled = state.labeled_idx();
            let y: Vec<LabelValue> = labeled.iter().map(|&i| tgt.labels[i]).collect();
            let model = fit_target_only(&tgt.features.select_rows(labeled), &y, self.cfg.params.sigma)?;
            let pred = model.decide(&tgt.features.select_rows(&pool))?;
            let truth: Vec<LabelValue> = pool.iter().map(|&i| tgt.labels[i]).collect();
            let value = bca(&truth, &pred)?.bca;
            records.push(self.record("BL2", target, run, iteration, state.m_l(), value, elapsed_ms(clock)));
        }
        Ok(records)
    }

    pub fn run_cell(&self, algorithm: Algorithm, target: usize, run: usize) -> Result<Vec<RunRecord>> {
        let wrap = |e: Error| Error::Cell {
            algorithm: algorithm.name().to_string(),
            target: self.domains[target].domain_id.clone(),
            run,
            source: Box::new(e),
        };
        let go = || -> Result<Vec<RunRecord>> {
            match algorithm {
                Algorithm::Bl2 => self.run_bl2_indexed(target, run),
                Algorithm::Bl1 => self.run_bl1_indexed(target, run, &self.roles(target, run)?),
                Algorithm::War => self.run_engine(target, run, &self.roles(target, run)?, EngineOptions::WAR, "WAR"),
                Algorithm::Astl => self.run_engine(target, run, &self.roles(target, run)?, EngineOptions::ASTL, "ASTL"),
            }
        };
        go().map_err(wrap)
    }

    /// Number of records a finished cell holds: one per iteration while the
    /// target pool is non-empty.
    pub fn expected_records(&self, algorithm: Algorithm, target: usize) -> usize {
        let max = self.cfg.max_iterations;
        if algorithm == Algorithm::Bl1 {
            return max;
        }
        let n = self.domains[target].n_samples();
        max.min(n.div_ceil(self.cfg.params.p))
    }

    /// Cells of `records` holding exactly their expected number of records.
    pub fn complete_cells(&self, records: &[RunRecord]) -> HashSet<CellKey> {
        let mut counts: std::collections::HashMap<CellKey, usize> = std::collections::HashMap::new();
        for r in records {
            *counts.entry(r.cell()).or_default() += 1;
        }
        counts
            .into_iter()
            .filter(|((a, t, _), c)| {
                let alg = a.parse::<Algorithm>().ok();
                let idx = self.domains.iter().position(|d| &d.domain_id == t);
                matches!((alg, idx), (Some(alg), Some(i)) if self.expected_records(alg, i) == *c)
            })
            .map(|(k, _)| k)
            .collect()
    }

    /// Every (algorithm, target, run) cell of the grid, in a fixed order.
    pub fn cells(&self) -> Vec<(Algorithm, usize, usize)> {
        let mut out = Vec::new();
        for t in self.target_indices() {
            for run in 0..self.cfg.runs {
                for &a in &self.cfg.algorithms {
                    out.push((a, t, run));
                }
            }
        }
        out
    }

    /// Runs every cell not in `done` on `jobs` threads. `sink` receives each
    /// finished cell's records; the returned records are sorted.
    pub fn run_grid<F>(&self, jobs: usize, done: &HashSet<CellKey>, sink: F) -> Result<Vec<RunRecord>>
    where
        F: Fn(&[RunRecord]) -> Result<()> + Sync,
    {
        let pending: Vec<(Algorithm, usize, usize)> = self
            .cells()
            .into_iter()
            .filter(|(a, t, r)| !done.contains(&(a.name().to_string(), self.domains[*t].domain_id.clone(), *r)))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let batches: Vec<Vec<RunRecord>> = pool.install(|| {
            pending
                .par_iter()
                .map(|&(a, t, r)| {
                    let recs = self.run_cell(a, t, r)?;
                    sink(&recs)?;
                    Ok(recs)
                })
                .collect::<Result<_>>()
        })?;
        let mut records: Vec<RunRecord> = batches.into_iter().flatten().collect();
        sort_records(&mut records);
        Ok(records)
    }
}

fn adhoc_benchmark(
    cfg: &ExperimentConfig,
    labeled: &[DomainData],
    unlabeled: &[DomainData],
    target: &DomainData,
) -> Result<(Benchmark, Roles, usize)> {
    let mut domains: Vec<DomainData> = labeled.to_vec();
    domains.extend(unlabeled.iter().cloned());
    domains.push(target.clone());
    let roles = Roles {
        labeled: (0..labeled.len()).collect(),
        unlabeled: (labeled.len()..labeled.len() + unlabeled.len()).collect(),
    };
    let t = domains.len() - 1;
    let cfg = ExperimentConfig {
        n_labeled_sources: labeled.len(),
        n_unlabeled_sources: unlabeled.len(),
        targets: Vec::new(),
        ..cfg.clone()
    };
    Ok((Benchmark::build(domains, cfg)?, roles, t))
}

/// Copy of `unlabeled_source` with every row labeled by the SML-fused
/// ensemble trained on `labeled_sources`.
pub fn pseudo_label_sources(
    labeled_sources: &[DomainData],
    unlabeled_source: &DomainData,
    params: &HyperParams,
) -> Result<DomainData> {
    if labeled_sources.is_empty() {
        return Err(Error::Config("at least one labeled source is required".into()));
    }
    let cfg = ExperimentConfig {
        params: *params,
        ..ExperimentConfig::default()
    };
    let (bench, roles, t) = adhoc_benchmark(&cfg, labeled_sources, &[], unlabeled_source)?;
    let labels = bench.pseudo_label(&roles.labeled, t)?;
    DomainData::new(unlabeled_source.domain_id.clone(), unlabeled_source.features.clone(), labels)
}

/// ASTL on one target. `target` carries the hidden truth used to answer
/// queries and to score the pool.
pub fn run_astl(
    cfg: &ExperimentConfig,
    labeled_sources: &[DomainData],
    unlabeled_sources: &[DomainData],
    target: &DomainData,
    run: usize,
) -> Result<Vec<RunRecord>> {
    let (bench, roles, t) = adhoc_benchmark(cfg, labeled_sources, unlabeled_sources, target)?;
    bench.run_engine(t, run, &roles, EngineOptions::ASTL, "ASTL")
}

pub fn run_war_baseline(
    cfg: &ExperimentConfig,
    labeled_sources: &[DomainData],
    target: &DomainData,
    run: usize,
) -> Result<Vec<RunRecord>> {
    let (bench, roles, t) = adhoc_benchmark(cfg, labeled_sources, &[], target)?;
    bench.run_engine(t, run, &roles, EngineOptions::WAR, "WAR")
}

pub fn run_bl1(cfg: &ExperimentConfig, labeled_sources: &[DomainData], target: &DomainData, run: usize) -> Result<Vec<RunRecord>> {
    let (bench, roles, t) = adhoc_benchmark(cfg, labeled_sources, &[], target)?;
    bench.run_bl1_indexed(t, run, &roles)
}

pub fn run_bl2(cfg: &ExperimentConfig, target: &DomainData, run: usize) -> Result<Vec<RunRecord>> {
    let (bench, _, t) = adhoc_benchmark(cfg, &[], &[], target)?;
    bench.run_bl2_indexed(t, run)
}
