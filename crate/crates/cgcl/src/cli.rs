//! Command implementations behind the binary: dataset synthesis, training,
//! evaluation and ablation sweeps.
//!
//! Every run writes a manifest before any training starts; re-running
//! `train` against that manifest reproduces all artifacts byte for byte.
//! Exit codes: 0 success, 2 config/usage, 3 numeric failure, 4 I/O.

use crate::dataset::{dataset_fingerprint, load_dataset, save_dataset};
use crate::eval::{
    clustering_scores, edge_density_score, f1_scores, fuse_predictions, kmeans, probe_fit_predict,
    Split,
};
use crate::graph::{adjacency, GraphError, MultiplexGraph};
use crate::matrix::Matrix;
use crate::sbm::{sbm_generate, SbmConfig};
use crate::train::{
    embed_view, train_multiplex, train_single, EpochRecord, LossTerms, TrainConfig, TrainError,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<crate::eval::EvalError> for CliError {
    fn from(e: crate::eval::EvalError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Artifact paths, relative to the run's output directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifacts {
    pub epoch_log: String,
    pub params: String,
    pub embeddings: Vec<String>,
    pub metrics: String,
}

/// Everything needed to reproduce a training run bit for bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub algorithm: String,
    pub pair_count: usize,
    pub root_seed: u64,
    pub dataset_fingerprint: String,
    pub config: TrainConfig,
    pub artifacts: Artifacts,
}

/// One metric bundle; classification and label-dependent fields are null
/// when the dataset has no labels.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MetricValues {
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub nmi: Option<f64>,
    pub ari: Option<f64>,
    pub ed: f64,
    pub ch: Option<f64>,
    pub modularity: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    #[serde(flatten)]
    pub values: MetricValues,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ViewMetrics {
    pub view: usize,
    #[serde(flatten)]
    pub values: MetricValues,
}

/// Final metrics: seed means at the top level, per-seed and (for multiplex)
/// per-view detail alongside.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub mean: MetricValues,
    pub std: MetricValues,
    pub seed: u64,
    pub per_seed: Vec<SeedMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_view: Option<Vec<ViewMetrics>>,
}

fn aggregate(
    field: impl Fn(&MetricValues) -> Option<f64>,
    rows: &[MetricValues],
) -> (Option<f64>, Option<f64>) {
    let values: Vec<f64> = rows.iter().filter_map(&field).collect();
    if values.len() != rows.len() || values.is_empty() {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (Some(mean), Some(var.sqrt()))
}

fn summarize(rows: &[MetricValues]) -> (MetricValues, MetricValues) {
    let (micro, micro_s) = aggregate(|v| v.micro_f1, rows);
    let (macro_, macro_s) = aggregate(|v| v.macro_f1, rows);
    let (nmi, nmi_s) = aggregate(|v| v.nmi, rows);
    let (ari, ari_s) = aggregate(|v| v.ari, rows);
    let (ed, ed_s) = aggregate(|v| Some(v.ed), rows);
    let (ch, ch_s) = aggregate(|v| v.ch, rows);
    let (modularity, mod_s) = aggregate(|v| v.modularity, rows);
    (
        MetricValues {
            micro_f1: micro,
            macro_f1: macro_,
            nmi,
            ari,
            ed: ed.unwrap_or(0.0),
            ch,
            modularity,
        },
        MetricValues {
            micro_f1: micro_s,
            macro_f1: macro_s,
            nmi: nmi_s,
            ari: ari_s,
            ed: ed_s.unwrap_or(0.0),
            ch: ch_s,
            modularity: mod_s,
        },
    )
}

/// Evaluate per-view embeddings on a dataset: probe + confidence fusion for
/// classification, K-means for clustering, plus density/entropy/modularity
/// diagnostics of the K-means partition. Multiplex classification reports
/// the fused predictions at the top level.
pub fn evaluate_embeddings(
    mg: &MultiplexGraph,
    embeddings: &[Matrix],
    cfg: &TrainConfig,
) -> Result<MetricsReport, CliError> {
    let n = mg.num_nodes();
    if embeddings.len() != mg.num_views() {
        return Err(CliError::Usage(format!(
            "{} embedding files for {} views",
            embeddings.len(),
            mg.num_views()
        )));
    }
    for (r, z) in embeddings.iter().enumerate() {
        if z.rows() != n {
            return Err(CliError::Usage(format!(
                "embedding {r} has {} rows for {n} nodes",
                z.rows()
            )));
        }
    }
    let labels = mg.labels();
    let kmeans_k = match mg.num_classes() {
        Some(c) if c > 0 => c,
        _ => cfg.resolve_k(None)?,
    };
    let raws: Vec<Matrix> = (0..mg.num_views())
        .map(|r| adjacency(n, mg.view_edges(r)))
        .collect();

    let mut per_seed = Vec::with_capacity(cfg.eval_seeds);
    let mut per_view_rows: Vec<Vec<MetricValues>> = vec![Vec::new(); mg.num_views()];
    for s in 0..cfg.eval_seeds {
        let seed = cfg.seed.wrapping_add(s as u64);
        let mut view_values = Vec::with_capacity(mg.num_views());

        // Classification: per-view probes on a shared split, then fusion.
        let mut fused: Option<(f64, f64)> = None;
        let mut view_class: Vec<Option<(f64, f64)>> = vec![None; mg.num_views()];
        if let Some(labels) = labels {
            let split = Split::random(n, cfg.train_fraction, seed)?;
            let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
            let num_classes = mg.num_classes().unwrap();
            let mut outcomes = Vec::with_capacity(mg.num_views());
            for (r, z) in embeddings.iter().enumerate() {
                let out = probe_fit_predict(z, labels, &split, num_classes)?;
                view_class[r] = Some(f1_scores(&out.predictions, &truth)?);
                outcomes.push((out.predictions, out.confidences));
            }
            let fused_pred = fuse_predictions(&outcomes)?;
            fused = Some(f1_scores(&fused_pred, &truth)?);
        }

        // Clustering and partition diagnostics per view.
        for (r, z) in embeddings.iter().enumerate() {
            let clusters = kmeans(z, kmeans_k, seed)?;
            let (nmi, ari) = match labels {
                Some(l) => {
                    let (nmi, ari) = clustering_scores(&clusters, l)?;
                    (Some(nmi), Some(ari))
                }
                None => (None, None),
            };
            let ed = edge_density_score(&raws[r], &clusters, kmeans_k);
            let ch = labels.map(|l| crate::eval::class_entropy_score(&clusters, l, kmeans_k));
            let modularity = crate::community::modularity(&raws[r], &clusters).ok();
            let (micro_f1, macro_f1) = match view_class[r] {
                Some((mi, ma)) => (Some(mi), Some(ma)),
                None => (None, None),
            };
            view_values.push(MetricValues {
                micro_f1,
                macro_f1,
                nmi,
                ari,
                ed,
                ch,
                modularity,
            });
        }
        for (r, v) in view_values.iter().enumerate() {
            per_view_rows[r].push(v.clone());
        }

        // Seed row: fused classification, view-averaged clustering.
        let (mut seed_values, _) = summarize(&view_values);
        if let Some((micro, macro_)) = fused {
            seed_values.micro_f1 = Some(micro);
            seed_values.macro_f1 = Some(macro_);
        }
        per_seed.push(SeedMetrics {
            seed,
            values: seed_values,
        });
    }

    let rows: Vec<MetricValues> = per_seed.iter().map(|s| s.values.clone()).collect();
    let (mean, std) = summarize(&rows);
    let per_view = if mg.num_views() > 1 {
        Some(
            per_view_rows
                .iter()
                .enumerate()
                .map(|(view, rows)| ViewMetrics {
                    view,
                    values: summarize(rows).0,
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(MetricsReport {
        mean,
        std,
        seed: cfg.seed,
        per_seed,
        per_view,
    })
}

/// Load a train config: TOML config file, or the manifest of a previous run
/// (`.json`) to reproduce it.
pub fn load_train_config(
    path: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<TrainConfig, CliError> {
    let mut cfg = match path {
        None => TrainConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            if p.extension().is_some_and(|ext| ext == "json") {
                let manifest: RunManifest = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                manifest.config
            } else {
                toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
        }
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `synth`: generate a planted-partition dataset directory.
pub fn cmd_synth(
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path).map_err(|e| io_err(config_path, e))?;
    let mut cfg: SbmConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", config_path.display())))?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let g = sbm_generate(&cfg)?;
    let blocks = g.labels().expect("generator always plants blocks").to_vec();
    let mg: MultiplexGraph = g.into();
    save_dataset(&mg, out_dir)?;

    // Ground-truth block file, kept even if labels.csv is later stripped
    // for unlabeled experiments.
    let blocks_path = out_dir.join("blocks.csv");
    let mut out = Vec::new();
    for b in &blocks {
        writeln!(out, "{b}").expect("write to vec");
    }
    fs::write(&blocks_path, out).map_err(|e| io_err(&blocks_path, e))?;
    if !quiet {
        println!(
            "wrote dataset: {} nodes, {} edges, {} classes -> {}",
            mg.num_nodes(),
            mg.view_edges(0).len(),
            mg.num_classes().unwrap_or(0),
            out_dir.display()
        );
    }
    Ok(())
}

fn write_embeddings(path: &Path, z: &Matrix) -> Result<(), CliError> {
    let mut out = Vec::new();
    for i in 0..z.rows() {
        let row: Vec<String> = z.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{i},{}", row.join(",")).expect("write to vec");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

fn read_embeddings(path: &Path, n: usize) -> Result<Matrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id: usize = fields
            .next()
            .and_then(|f| f.trim().parse().ok())
            .ok_or_else(|| {
                CliError::Usage(format!("{} line {}: bad node id", path.display(), i + 1))
            })?;
        if id != rows.len() {
            return Err(CliError::Usage(format!(
                "{} line {}: expected node id {}, found {id}",
                path.display(),
                i + 1,
                rows.len()
            )));
        }
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::Usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
        rows.push(values);
    }
    if rows.len() != n {
        return Err(CliError::Usage(format!(
            "{}: {} embedding rows for {n} nodes",
            path.display(),
            rows.len()
        )));
    }
    Ok(Matrix::from_rows(&rows))
}

/// `train`: fit the model on a dataset and write manifest, epoch log,
/// parameters, per-view embeddings and metrics.
pub fn cmd_train(
    dataset_dir: &Path,
    config_path: Option<&Path>,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<(), CliError> {
    let cfg = load_train_config(config_path, seed_override)?;
    let mg = load_dataset(dataset_dir)?;
    let fingerprint = dataset_fingerprint(dataset_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let views = mg.num_views();
    let multiplex = views >= 2;
    let artifacts = Artifacts {
        epoch_log: "epoch_log.jsonl".into(),
        params: "params.json".into(),
        embeddings: (0..views).map(|r| format!("embeddings_{r}.csv")).collect(),
        metrics: "metrics.json".into(),
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        algorithm: if multiplex { "multiplex" } else { "single" }.into(),
        pair_count: if multiplex {
            views * (views - 1) / 2
        } else {
            1
        },
        root_seed: cfg.seed,
        dataset_fingerprint: fingerprint,
        config: cfg.clone(),
        artifacts: artifacts.clone(),
    };
    let manifest_path = out_dir.join("manifest.json");
    let mut manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_json.push('\n');
    fs::write(&manifest_path, manifest_json).map_err(|e| io_err(&manifest_path, e))?;

    // Stream the epoch log line by line so a numeric abort keeps the
    // partial log on disk.
    let log_path = out_dir.join(&artifacts.epoch_log);
    let log_file = fs::File::create(&log_path).map_err(|e| io_err(&log_path, e))?;
    let mut log_writer = std::io::LineWriter::new(log_file);
    let mut log_error: Option<std::io::Error> = None;
    let on_epoch = |record: &EpochRecord| {
        if log_error.is_none() {
            let line = serde_json::to_string(record).expect("record serializes");
            if let Err(e) = writeln!(log_writer, "{line}") {
                log_error = Some(e);
            }
        }
    };

    let result = if multiplex {
        train_multiplex(&mg, &cfg, on_epoch)
    } else {
        train_single(&mg.view(0), &cfg, on_epoch)
    };
    let (params, log) = result?;
    if let Some(e) = log_error {
        return Err(io_err(&log_path, e));
    }

    let params_path = out_dir.join(&artifacts.params);
    let params_json = serde_json::to_string(&params).expect("params serialize");
    fs::write(&params_path, params_json).map_err(|e| io_err(&params_path, e))?;

    let mut embeddings = Vec::with_capacity(views);
    for r in 0..views {
        let z = embed_view(mg.attributes(), mg.view_edges(r), &params);
        write_embeddings(&out_dir.join(&artifacts.embeddings[r]), &z)?;
        embeddings.push(z);
    }

    let metrics = evaluate_embeddings(&mg, &embeddings, &cfg)?;
    let metrics_path = out_dir.join(&artifacts.metrics);
    let mut metrics_json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    metrics_json.push('\n');
    fs::write(&metrics_path, metrics_json).map_err(|e| io_err(&metrics_path, e))?;

    if !quiet {
        let last = log.last();
        println!(
            "trained {} epochs ({}), final loss {}",
            log.len(),
            manifest.algorithm,
            last.map_or("n/a".into(), |r| format!("{:.6}", r.total)),
        );
        print_metrics_summary(&metrics);
    }
    Ok(())
}

/// `eval`: score an embeddings file (or a run directory holding per-view
/// embedding files) against a dataset.
pub fn cmd_eval(
    dataset_dir: &Path,
    embeddings_path: &Path,
    config_path: Option<&Path>,
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<(), CliError> {
    let cfg = load_train_config(config_path, seed_override)?;
    let mg = load_dataset(dataset_dir)?;
    let n = mg.num_nodes();
    let embeddings: Vec<Matrix> = if embeddings_path.is_dir() {
        (0..mg.num_views())
            .map(|r| read_embeddings(&embeddings_path.join(format!("embeddings_{r}.csv")), n))
            .collect::<Result<_, _>>()?
    } else {
        if mg.num_views() != 1 {
            return Err(CliError::Usage(format!(
                "dataset has {} views; pass the run directory containing per-view embeddings",
                mg.num_views()
            )));
        }
        vec![read_embeddings(embeddings_path, n)?]
    };

    let metrics = evaluate_embeddings(&mg, &embeddings, &cfg)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let metrics_path = out_dir.join("metrics.json");
    let mut metrics_json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    metrics_json.push('\n');
    fs::write(&metrics_path, metrics_json).map_err(|e| io_err(&metrics_path, e))?;
    if !quiet {
        print_metrics_summary(&metrics);
    }
    Ok(())
}

fn print_metrics_summary(m: &MetricsReport) {
    let fmt = |v: Option<f64>| v.map_or("null".into(), |x| format!("{x:.4}"));
    println!(
        "micro_f1={} macro_f1={} nmi={} ari={} ed={:.4} ch={} modularity={}",
        fmt(m.mean.micro_f1),
        fmt(m.mean.macro_f1),
        fmt(m.mean.nmi),
        fmt(m.mean.ari),
        m.mean.ed,
        fmt(m.mean.ch),
        fmt(m.mean.modularity),
    );
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub metrics: MetricsReport,
}

fn parse_variant(token: &str) -> Result<LossTerms, CliError> {
    if token == "full" {
        return Ok(LossTerms::default());
    }
    let mut terms = LossTerms {
        node: false,
        deca: false,
        com: false,
    };
    for part in token.split('+') {
        match part.trim() {
            "node" => terms.node = true,
            "deca" => terms.deca = true,
            "com" => terms.com = true,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown variant component {other:?}; expected node, deca, com or full"
                )))
            }
        }
    }
    if !(terms.node || terms.deca || terms.com) {
        return Err(CliError::Usage(format!(
            "variant {token:?} enables no loss terms"
        )));
    }
    Ok(terms)
}

/// `ablate`: train objective-term variants and/or a community-count sweep
/// under the same root seed and emit a metrics table.
pub fn cmd_ablate(
    dataset_dir: &Path,
    config_path: Option<&Path>,
    variants: &[String],
    k_sweep: &[usize],
    out_dir: &Path,
    seed_override: Option<u64>,
    quiet: bool,
) -> Result<(), CliError> {
    if variants.is_empty() && k_sweep.is_empty() {
        return Err(CliError::Usage(
            "ablate needs --variants and/or --k-sweep; nothing to run".into(),
        ));
    }
    let base = load_train_config(config_path, seed_override)?;
    let mg = load_dataset(dataset_dir)?;
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let mut runs: Vec<(String, TrainConfig)> = Vec::new();
    for token in variants {
        let mut cfg = base.clone();
        cfg.terms = parse_variant(token)?;
        runs.push((cfg.terms.label(), cfg));
    }
    for &k in k_sweep {
        let mut cfg = base.clone();
        cfg.k = Some(k);
        runs.push((format!("k={k}"), cfg));
    }

    let mut rows = Vec::with_capacity(runs.len());
    for (variant, cfg) in runs {
        let (params, _log) = if mg.num_views() >= 2 {
            train_multiplex(&mg, &cfg, |_| {})
        } else {
            train_single(&mg.view(0), &cfg, |_| {})
        }?;
        let embeddings: Vec<Matrix> = (0..mg.num_views())
            .map(|r| embed_view(mg.attributes(), mg.view_edges(r), &params))
            .collect();
        let metrics = evaluate_embeddings(&mg, &embeddings, &cfg)?;
        if !quiet {
            print!("{variant:>16}  ");
            print_metrics_summary(&metrics);
        }
        rows.push(AblationRow { variant, metrics });
    }

    let table_path = out_dir.join("ablation.json");
    let mut table_json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    table_json.push('\n');
    fs::write(&table_path, table_json).map_err(|e| io_err(&table_path, e))?;
    Ok(())
}
