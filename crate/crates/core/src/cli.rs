//! Command-line front end: `synth`, `featurize`, `run` and `analyze`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::domain::{DomainData, Gamma, HyperParams, KernelKind, KernelSpec};
use crate::error::{Error, Result};
use crate::evaluation::{aupc, compare_treatments, StatReport};
use crate::features::{featurize, generate_synthetic, read_domain_csv, write_domain_csv, FeaturePipeline, SynthConfig};
use crate::pipeline::{sort_records, Algorithm, Benchmark, CellKey, ExperimentConfig, RunRecord};

pub const SEED_ENV: &str = "CALIBKIT_SEED";
const MANIFEST: &str = "manifest.json";
const FEATURE_MODELS: &str = "features.json";

#[derive(Debug, Parser)]
#[command(name = "calibkit", version, about = "Offline calibration with active semi-supervised transfer learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-subject dataset.
    Synth(SynthArgs),
    /// Pooled PCA followed by per-dimension min-max scaling.
    Featurize(FeaturizeArgs),
    /// Run the experiment grid and write learning curves.
    Run(RunArgs),
    /// AUPC table, Friedman test and Dunn comparisons for a results file.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 14)]
    pub subjects: usize,
    #[arg(long, default_value_t = 260)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.12)]
    pub target_rate: f64,
    #[arg(long, default_value_t = 40)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub shift_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rotation_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub pca_k: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Results file (one JSON record per line).
    #[arg(long)]
    pub out: PathBuf,
    /// Flat TOML configuration; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Learning-curve CSV; defaults to the results path with a `.curves.csv` extension.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    #[arg(long)]
    pub labeled_sources: Option<usize>,
    #[arg(long)]
    pub unlabeled_sources: Option<usize>,
    #[arg(long)]
    pub w_t: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Keep completed cells of an existing results file and run the rest.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub results: PathBuf,
    /// Algorithms entering the Friedman test; defaults to all present except BL1.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<String>>,
    /// JSON report; defaults to the results path with a `.stats.json` extension.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Io { .. } => 3,
        Error::SingularSystem | Error::MissingPseudoLabels => 4,
        _ => 2,
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Featurize(a) => cmd_featurize(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Analyze(a) => {
            let text = cmd_analyze(&a)?;
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub file: String,
    pub n_samples: usize,
    pub n_class1: usize,
    pub n_class2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub domains: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<String>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Writes one CSV per domain plus the manifest.
pub fn write_dataset(dir: &Path, domains: &[DomainData], synth: Option<SynthConfig>, features: Option<String>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(domains.len());
    for d in domains {
        let file = format!("{}.csv", d.domain_id);
        write_domain_csv(d, dir.join(&file))?;
        let (n1, n2, _) = d.class_counts();
        entries.push(ManifestEntry {
            id: d.domain_id.clone(),
            file,
            n_samples: d.n_samples(),
            n_class1: n1,
            n_class2: n2,
        });
    }
    let manifest = Manifest {
        domains: entries,
        synth,
        features,
    };
    write_text(&dir.join(MANIFEST), &to_json(&manifest))
}

/// Reads the domains listed in `manifest.json`, or every `*.csv` in name order.
pub fn read_dataset(dir: &Path) -> Result<Vec<DomainData>> {
    let manifest_path = dir.join(MANIFEST);
    let files: Vec<PathBuf> = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", manifest_path.display())))?;
        manifest.domains.iter().map(|d| dir.join(&d.file)).collect()
    } else {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        found.sort();
        found
    };
    if files.is_empty() {
        return Err(Error::Config(format!("no domain files in {}", dir.display())));
    }
    files.iter().map(read_domain_csv).collect()
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_subjects: args.subjects,
        epochs_per_subject: args.epochs,
        target_rate: args.target_rate,
        d_raw: args.dim,
        shift_scale: args.shift_scale,
        rotation_scale: args.rotation_scale,
        noise_sigma: args.noise,
        class_separation: args.separation,
        seed: args.seed,
    };
    let domains = generate_synthetic(&cfg)?;
    write_dataset(&args.out, &domains, Some(cfg), None)
}

pub fn cmd_featurize(args: &FeaturizeArgs) -> Result<()> {
    let domains = read_dataset(&args.data)?;
    let (pipeline, out) = featurize(&domains, args.pca_k)?;
    write_dataset(&args.out, &out, None, Some(FEATURE_MODELS.into()))?;
    write_text(&args.out.join(FEATURE_MODELS), &to_json(&pipeline))
}

pub fn read_feature_models(path: &Path) -> Result<FeaturePipeline> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Flat key-value run configuration. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub max_iterations: Option<usize>,
    pub p: Option<usize>,
    pub n_labeled_sources: Option<usize>,
    pub n_unlabeled_sources: Option<usize>,
    pub algorithms: Option<Vec<String>>,
    pub targets: Option<Vec<String>>,
    pub w_t: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    /// `rbf` or `linear`.
    pub kernel: Option<String>,
    /// Fixed RBF width; the median heuristic when absent.
    pub gamma: Option<f64>,
    pub pseudo_label_passes: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Later sources win: `self` is overridden by every `Some` in `other`.
    pub fn overlay(mut self, other: FileConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            seed,
            runs,
            max_iterations,
            p,
            n_labeled_sources,
            n_unlabeled_sources,
            algorithms,
            targets,
            w_t,
            sigma,
            lambda,
            kernel,
            gamma,
            pseudo_label_passes
        );
        self
    }

    pub fn to_experiment(&self) -> Result<ExperimentConfig> {
        let d = ExperimentConfig::default();
        let kind = match self.kernel.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None | Some("rbf") => KernelKind::Rbf,
            Some("linear") => KernelKind::Linear,
            Some(other) => return Err(Error::Config(format!("kernel: unknown kernel '{other}'"))),
        };
        let gamma = match self.gamma {
            Some(g) => Gamma::Fixed(g),
            None => Gamma::Auto,
        };
        let params = HyperParams {
            w_t: self.w_t.unwrap_or(d.params.w_t),
            sigma: self.sigma.unwrap_or(d.params.sigma),
            lambda: self.lambda.unwrap_or(d.params.lambda),
            p: self.p.unwrap_or(d.params.p),
            kernel: KernelSpec { kind, gamma },
            pseudo_label_passes: self.pseudo_label_passes.unwrap_or(d.params.pseudo_label_passes),
        };
        params.validate()?;
        let algorithms = match &self.algorithms {
            Some(names) => names.iter().map(|n| n.parse()).collect::<Result<Vec<Algorithm>>>()?,
            None => d.algorithms,
        };
        Ok(ExperimentConfig {
            n_labeled_sources: self.n_labeled_sources.unwrap_or(d.n_labeled_sources),
            n_unlabeled_sources: self.n_unlabeled_sources.unwrap_or(d.n_unlabeled_sources),
            runs: self.runs.unwrap_or(d.runs),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            params,
            algorithms,
            seed: self.seed.unwrap_or(d.seed),
            targets: self.targets.clone().unwrap_or_default(),
        })
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}: not an unsigned integer: '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Effective configuration: defaults, then the config file, then
/// `CALIBKIT_SEED`, then command-line flags.
pub fn resolve_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(seed) = env_seed()? {
        cfg.seed = Some(seed);
    }
    let flags = FileConfig {
        seed: args.seed,
        runs: args.runs,
        max_iterations: args.max_iterations,
        p: args.p,
        n_labeled_sources: args.labeled_sources,
        n_unlabeled_sources: args.unlabeled_sources,
        algorithms: args.algorithms.clone(),
        targets: args.targets.clone(),
        w_t: args.w_t,
        sigma: args.sigma,
        lambda: args.lambda,
        kernel: None,
        gamma: None,
        pseudo_label_passes: None,
    };
    cfg.overlay(flags).to_experiment()
}

/// Parses a results file. A torn final line (no trailing newline) is
/// ignored; any other malformed line is an error.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text)
}

fn parse_records(text: &str) -> Result<Vec<RunRecord>> {
    let complete = if text.ends_with('\n') { text } else { &text[..text.rfind('\n').map_or(0, |i| i + 1)] };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn record_line(r: &RunRecord) -> String {
    let mut s = serde_json::to_string(r).expect("plain data serializes");
    s.push('\n');
    s
}

/// Keeps the first occurrence of every (algorithm, target, run, iteration).
fn dedup_records(records: Vec<RunRecord>) -> Vec<RunRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert((r.cell(), r.iteration)))
        .collect()
}

fn write_sorted_records(path: &Path, records: &mut Vec<RunRecord>) -> Result<()> {
    sort_records(records);
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        for r in records.iter() {
            w.write_all(record_line(r).as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn default_curves_path(results: &Path) -> PathBuf {
    results.with_extension("curves.csv")
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    let domains = read_dataset(&args.data)?;
    let bench = Benchmark::new(domains, cfg)?;

    let mut existing = Vec::new();
    if args.resume && args.out.exists() {
        let previous = dedup_records(read_records(&args.out)?);
        let complete = bench.complete_cells(&previous);
        existing = previous.into_iter().filter(|r| complete.contains(&r.cell())).collect();
        write_sorted_records(&args.out, &mut existing)?;
    }
    let done: HashSet<CellKey> = existing.iter().map(RunRecord::cell).collect();

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(args.resume)
        .write(true)
        .truncate(!args.resume)
        .open(&args.out)
        .map_err(|e| Error::io(&args.out, e))?;
    let writer = Mutex::new(BufWriter::new(file));
    let out = &args.out;
    let sink = |records: &[RunRecord]| -> Result<()> {
        let mut w = writer.lock().unwrap_or_else(|p| p.into_inner());
        for r in records {
            w.write_all(record_line(r).as_bytes()).map_err(|e| Error::io(out, e))?;
        }
        w.flush().map_err(|e| Error::io(out, e))?;
        if let Some(r) = records.first() {
            eprintln!("done {} {} run {} ({} records)", r.algorithm, r.target_id, r.run, records.len());
        }
        Ok(())
    };
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let fresh = bench.run_grid(jobs, &done, sink)?;
    drop(writer);

    let mut all = existing;
    all.extend(fresh);
    let mut all = dedup_records(all);
    write_sorted_records(&args.out, &mut all)?;
    let curves = args.curves.clone().unwrap_or_else(|| default_curves_path(&args.out));
    write_text(&curves, &curves_csv(&learning_curves(&all)))
}

/// Mean and standard deviation of BCA at one `m_l` checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub algorithm: String,
    /// A subject id, or `ALL` for the pooled curve.
    pub target_id: String,
    pub m_l: usize,
    pub mean_bca: f64,
    pub std_bca: f64,
    pub count: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn learning_curves(records: &[RunRecord]) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(String, String, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.algorithm.clone(), r.target_id.clone(), r.m_l))
            .or_default()
            .push(r.bca);
        groups.entry((r.algorithm.clone(), "ALL".into(), r.m_l)).or_default().push(r.bca);
    }
    groups
        .into_iter()
        .map(|((algorithm, target_id, m_l), v)| {
            let (mean_bca, std_bca) = mean_std(&v);
            CurvePoint {
                algorithm,
                target_id,
                m_l,
                mean_bca,
                std_bca,
                count: v.len(),
            }
        })
        .collect()
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("algorithm,target_id,m_l,mean_bca,std_bca,count\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{},{},{}", p.algorithm, p.target_id, p.m_l, p.mean_bca, p.std_bca, p.count);
    }
    s
}

/// AUPC of every (algorithm, target, run) learning curve.
pub fn cell_aupcs(records: &[RunRecord]) -> Result<BTreeMap<CellKey, f64>> {
    let mut curves: BTreeMap<CellKey, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        curves.entry(r.cell()).or_default().push((r.m_l as f64, r.bca));
    }
    curves
        .into_iter()
        .map(|(k, mut c)| {
            c.sort_by(|a, b| a.0.total_cmp(&b.0));
            aupc(&c).map(|v| (k, v))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AupcSummary {
    pub algorithm: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub aupc: Vec<AupcSummary>,
    pub stats: StatReport,
}

/// Per-algorithm AUPC and the Friedman + Dunn comparison of `algorithms`
/// (all present except BL1 when `None`), blocked by (target, run).
pub fn analyze_records(records: &[RunRecord], algorithms: Option<&[String]>) -> Result<AnalysisReport> {
    let per_cell = cell_aupcs(records)?;
    let present: BTreeSet<String> = per_cell.keys().map(|k| k.0.clone()).collect();
    let chosen: Vec<String> = match algorithms {
        Some(list) => {
            let mut v = Vec::new();
            for a in list {
                let name = a.parse::<Algorithm>()?.name().to_string();
                if !present.contains(&name) {
                    return Err(Error::Config(format!("algorithm {name} has no records")));
                }
                v.push(name);
            }
            v
        }
        None => present.iter().filter(|a| *a != "BL1").cloned().collect(),
    };
    if chosen.len() < 2 {
        return Err(Error::Config(format!(
            "at least two algorithms are needed for comparison, found {}",
            chosen.len()
        )));
    }

    let aupc = present
        .iter()
        .map(|a| {
            let v: Vec<f64> = per_cell.iter().filter(|(k, _)| &k.0 == a).map(|(_, v)| *v).collect();
            let (mean, std) = mean_std(&v);
            AupcSummary {
                algorithm: a.clone(),
                mean,
                std,
                count: v.len(),
            }
        })
        .collect();

    let blocks: BTreeSet<(String, usize)> = per_cell.keys().map(|k| (k.1.clone(), k.2)).collect();
    let table: Vec<Vec<f64>> = blocks
        .iter()
        .filter_map(|(t, r)| {
            chosen
                .iter()
                .map(|a| per_cell.get(&(a.clone(), t.clone(), *r)).copied())
                .collect::<Option<Vec<f64>>>()
        })
        .collect();
    if table.len() < 2 {
        return Err(Error::Config(format!(
            "at least two (target, run) blocks shared by all algorithms are needed, found {}",
            table.len()
        )));
    }
    let stats = compare_treatments(&chosen, &table)?;
    Ok(AnalysisReport { aupc, stats })
}

pub fn format_report(report: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "AUPC by algorithm");
    let _ = writeln!(s, "algorithm\tmean\tstd\tcount");
    for a in &report.aupc {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", a.algorithm, a.mean, a.std, a.count);
    }
    let st = &report.stats;
    let _ = writeln!(s);
    let _ = writeln!(s, "Friedman test over {} blocks: {}", st.blocks, st.treatments.join(", "));
    let _ = writeln!(s, "chi2\t{}", st.friedman_chi2);
    let _ = writeln!(s, "df\t{}", st.friedman_df);
    let _ = writeln!(s, "p\t{}", st.friedman_p);
    let _ = writeln!(s);
    let _ = writeln!(s, "Dunn pairwise comparisons (FDR-adjusted)");
    let _ = writeln!(s, "first\tsecond\tz\tp\tp_adj");
    for r in &st.pairwise {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", r.first, r.second, r.dunn_z, r.raw_p, r.fdr_adjusted_p);
    }
    s
}

/// Writes the JSON report and returns the text report.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String> {
    let records = read_records(&args.results)?;
    let report = analyze_records(&records, args.algorithms.as_deref())?;
    let json = args.json.clone().unwrap_or_else(|| args.results.with_extension("stats.json"));
    write_text(&json, &to_json(&report))?;
    Ok(format_report(&report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(alg: &str, t: &str, run: usize, it: usize, bca: f64) -> RunRecord {
        RunRecord {
            algorithm: alg.into(),
            target_id: t.into(),
            run,
            iteration: it,
            m_l: it * 5,
            bca,
            wall_ms: 3,
            seed: 1,
        }
    }

    #[test]
    fn file_config_overlay_and_conversion() {
        let file = FileConfig::parse("seed = 3\nruns = 4\nalgorithms = [\"bl2\", \"ASTL\"]\nsigma = 0.5\n").unwrap();
        let flags = FileConfig {
            runs: Some(9),
            ..FileConfig::default()
        };
        let cfg = file.overlay(flags).to_experiment().unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.runs, 9);
        assert_eq!(cfg.algorithms, vec![Algorithm::Bl2, Algorithm::Astl]);
        assert_eq!(cfg.params.sigma, 0.5);
        assert_eq!(cfg.params.lambda, 10.0);
        assert!(FileConfig::parse("bogus = 1").is_err());
        assert!(FileConfig::parse("kernel = \"poly\"").unwrap().to_experiment().is_err());
        assert!(FileConfig::parse("w_t = 0.5").unwrap().to_experiment().is_err());
    }

    #[test]
    fn torn_tail_is_ignored() {
        let a = record_line(&rec("BL2", "s01", 0, 0, 0.5));
        let text = format!("{a}{a}{{\"algorithm\":\"BL");
        assert_eq!(parse_records(&text).unwrap().len(), 2);
        assert!(parse_records("not json\n").is_err());
        let dup = dedup_records(parse_records(&format!("{a}{a}")).unwrap());
        assert_eq!(dup.len(), 1);
    }

    #[test]
    fn curves_pool_over_targets() {
        let records = vec![rec("WAR", "s01", 0, 0, 0.6), rec("WAR", "s02", 0, 0, 0.8), rec("WAR", "s01", 1, 0, 0.8)];
        let c = learning_curves(&records);
        let all = c.iter().find(|p| p.target_id == "ALL").unwrap();
        assert_eq!(all.count, 3);
        assert!((all.mean_bca - 2.2 / 3.0).abs() < 1e-12);
        let s01 = c.iter().find(|p| p.target_id == "s01").unwrap();
        assert!((s01.mean_bca - 0.7).abs() < 1e-12);
        assert!((s01.std_bca - 0.02f64.sqrt()).abs() < 1e-12);
        assert!(curves_csv(&c).starts_with("algorithm,target_id,m_l,mean_bca,std_bca,count\n"));
    }

    #[test]
    fn analysis_excludes_bl1_by_default() {
        let mut records = Vec::new();
        for run in 0..4 {
            for (alg, level) in [("BL1", 0.6), ("BL2", 0.5), ("WAR", 0.7), ("ASTL", 0.8)] {
                for it in 0..3 {
                    records.push(rec(alg, "s01", run, it, level + 0.01 * it as f64));
                }
            }
        }
        let report = analyze_records(&records, None).unwrap();
        assert_eq!(report.stats.treatments, vec!["ASTL", "BL2", "WAR"]);
        assert_eq!(report.stats.friedman_df, 2);
        assert_eq!(report.stats.pairwise.len(), 3);
        assert_eq!(report.aupc.len(), 4);
        assert!((report.stats.friedman_chi2 - 8.0).abs() < 1e-12);

        let only = analyze_records(&records, Some(&["ASTL".to_string()]));
        assert!(matches!(only, Err(Error::Config(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::io("f", std::io::Error::other("x"))), 3);
        let cell = Error::Cell {
            algorithm: "ASTL".into(),
            target: "s01".into(),
            run: 2,
            source: Box::new(Error::SingularSystem),
        };
        assert_eq!(exit_code(&cell), 4);
        assert!(cell.to_string().contains("s01"));
    }
}
