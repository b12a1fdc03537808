//! On-disk dataset format.
//!
//! A dataset directory holds:
//!
//! - `meta.json` — `{num_nodes, num_views, feature_dim, num_classes}`;
//! - `features.csv` — N rows of F comma-separated reals;
//! - `labels.csv` — N integers, optional (`num_classes` is 0 without it);
//! - `edges_<k>.tsv` for each view k — one `u<TAB>v` per line, 0-indexed,
//!   undirected, no self-loops or duplicates.
//!
//! All files are UTF-8 with LF line endings. Loading validates everything
//! and reports the offending file and line rather than silently dropping
//! bad records.

use crate::graph::{GraphError, MultiplexGraph};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub num_nodes: usize,
    pub num_views: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
}

fn io_err(path: &Path, source: std::io::Error) -> GraphError {
    GraphError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Format {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Load and validate a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<MultiplexGraph, GraphError> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let meta: DatasetMeta = serde_json::from_str(&meta_text)
        .map_err(|e| format_err(&meta_path, e.line(), e.to_string()))?;
    if meta.num_views == 0 {
        return Err(format_err(&meta_path, 1, "num_views must be at least 1"));
    }

    let features_path = dir.join("features.csv");
    let x = read_features(&features_path, meta.num_nodes, meta.feature_dim)?;

    let labels_path = dir.join("labels.csv");
    let labels = if labels_path.exists() {
        Some(read_labels(&labels_path, meta.num_nodes, meta.num_classes)?)
    } else {
        None
    };

    let mut views = Vec::with_capacity(meta.num_views);
    for k in 0..meta.num_views {
        let path = dir.join(format!("edges_{k}.tsv"));
        views.push(read_edges(&path, meta.num_nodes)?);
    }

    MultiplexGraph::new(meta.num_nodes, views, x, labels)
}

fn read_features(path: &Path, n: usize, f: usize) -> Result<Matrix, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut data = Vec::with_capacity(n * f);
    let mut rows = 0usize;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != f {
            return Err(format_err(
                path,
                lineno,
                format!("expected {} columns, found {}", f, fields.len()),
            ));
        }
        for field in fields {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| format_err(path, lineno, format!("non-numeric field {field:?}")))?;
            data.push(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(format_err(
            path,
            rows + 1,
            format!("expected {n} feature rows, found {rows}"),
        ));
    }
    Ok(Matrix::new(n, f, data))
}

fn read_labels(path: &Path, n: usize, num_classes: usize) -> Result<Vec<usize>, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut labels = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let v: usize = line
            .trim()
            .parse()
            .map_err(|_| format_err(path, lineno, format!("non-numeric label {line:?}")))?;
        if num_classes > 0 && v >= num_classes {
            return Err(format_err(
                path,
                lineno,
                format!("label {v} out of range for {num_classes} classes"),
            ));
        }
        labels.push(v);
    }
    if labels.len() != n {
        return Err(format_err(
            path,
            labels.len() + 1,
            format!("expected {n} labels, found {}", labels.len()),
        ));
    }
    Ok(labels)
}

fn read_edges(path: &Path, n: usize) -> Result<Vec<(usize, usize)>, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut seen = std::collections::BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (u, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(format_err(
                    path,
                    lineno,
                    "expected exactly two tab-separated endpoints",
                ))
            }
        };
        let u: usize = u
            .trim()
            .parse()
            .map_err(|_| format_err(path, lineno, format!("non-numeric endpoint {u:?}")))?;
        let v: usize = v
            .trim()
            .parse()
            .map_err(|_| format_err(path, lineno, format!("non-numeric endpoint {v:?}")))?;
        if u == v {
            return Err(format_err(path, lineno, format!("self-loop at node {u}")));
        }
        if u >= n || v >= n {
            return Err(format_err(
                path,
                lineno,
                format!("endpoint out of range: ({u}, {v}) with {n} nodes"),
            ));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(format_err(
                path,
                lineno,
                format!("duplicate undirected edge ({u}, {v})"),
            ));
        }
    }
    Ok(seen.into_iter().collect())
}

/// Write a dataset directory in the canonical format.
pub fn save_dataset(mg: &MultiplexGraph, dir: &Path) -> Result<(), GraphError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let meta = DatasetMeta {
        num_nodes: mg.num_nodes(),
        num_views: mg.num_views(),
        feature_dim: mg.attributes().cols(),
        num_classes: mg.num_classes().unwrap_or(0),
    };
    let meta_path = dir.join("meta.json");
    let mut meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    meta_json.push('\n');
    fs::write(&meta_path, meta_json).map_err(|e| io_err(&meta_path, e))?;

    let features_path = dir.join("features.csv");
    let mut out = Vec::new();
    let x = mg.attributes();
    for i in 0..x.rows() {
        let row: Vec<String> = x.row(i).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(",")).expect("write to vec");
    }
    fs::write(&features_path, out).map_err(|e| io_err(&features_path, e))?;

    if let Some(labels) = mg.labels() {
        let labels_path = dir.join("labels.csv");
        let mut out = Vec::new();
        for l in labels {
            writeln!(out, "{l}").expect("write to vec");
        }
        fs::write(&labels_path, out).map_err(|e| io_err(&labels_path, e))?;
    }

    for k in 0..mg.num_views() {
        let path = dir.join(format!("edges_{k}.tsv"));
        let mut out = Vec::new();
        for &(u, v) in mg.view_edges(k) {
            writeln!(out, "{u}\t{v}").expect("write to vec");
        }
        fs::write(&path, out).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

/// SHA-256 over the dataset files (name, length, bytes) in name order.
pub fn dataset_fingerprint(dir: &Path) -> Result<String, GraphError> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|name| {
            name == "meta.json"
                || name == "features.csv"
                || name == "labels.csv"
                || (name.starts_with("edges_") && name.ends_with(".tsv"))
        })
        .collect();
    names.sort();
    let mut hasher = Sha256::new();
    for name in names {
        let path = dir.join(&name);
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AttributedGraph;
    use proptest::prelude::*;

    fn sample_graph() -> MultiplexGraph {
        let x = Matrix::from_rows(&[
            vec![0.5, -1.25],
            vec![0.1, 2.0],
            vec![3.5, 0.0],
            vec![-0.75, 1.5],
        ]);
        MultiplexGraph::new(
            4,
            vec![vec![(0, 1), (1, 2), (2, 3)], vec![(0, 3)]],
            x,
            Some(vec![0, 0, 1, 1]),
        )
        .unwrap()
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mg = sample_graph();
        save_dataset(&mg, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded, mg);
    }

    #[test]
    fn self_loop_in_edge_file_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&sample_graph(), dir.path()).unwrap();
        fs::write(dir.path().join("edges_1.tsv"), "5 5\n".replace(' ', "\t")).unwrap();
        match load_dataset(dir.path()) {
            Err(GraphError::Format {
                line: 1, message, ..
            }) => {
                assert!(message.contains("self-loop"), "{message}");
            }
            other => panic!("expected self-loop format error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_feature_row_cites_its_line() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&sample_graph(), dir.path()).unwrap();
        fs::write(dir.path().join("features.csv"), "1,2\n3,4\n5,6,7\n8,9\n").unwrap();
        match load_dataset(dir.path()) {
            Err(GraphError::Format { line: 3, .. }) => {}
            other => panic!("expected line-3 format error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field_cites_its_line() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&sample_graph(), dir.path()).unwrap();
        fs::write(dir.path().join("labels.csv"), "0\nx\n1\n1\n").unwrap();
        match load_dataset(dir.path()) {
            Err(GraphError::Format {
                line: 2, message, ..
            }) => {
                assert!(message.contains("non-numeric"), "{message}");
            }
            other => panic!("expected line-2 format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_names_it() {
        let dir = tempfile::tempdir().unwrap();
        match load_dataset(dir.path()) {
            Err(GraphError::Io { path, .. }) => {
                assert!(path.ends_with("meta.json"));
            }
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn fingerprint_is_stable_and_content_sensitive() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&sample_graph(), dir.path()).unwrap();
        let a = dataset_fingerprint(dir.path()).unwrap();
        let b = dataset_fingerprint(dir.path()).unwrap();
        assert_eq!(a, b);
        fs::write(dir.path().join("labels.csv"), "1\n0\n1\n1\n").unwrap();
        assert_ne!(a, dataset_fingerprint(dir.path()).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip_over_random_graphs(
            n in 1usize..12,
            seed in 0u64..1000,
            labeled in proptest::bool::ANY,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let f = rng.gen_range(1..5);
            let x = Matrix::from_fn(n, f, |_, _| rng.gen_range(-10.0..10.0));
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.3) {
                        edges.push((u, v));
                    }
                }
            }
            let labels = labeled.then(|| (0..n).map(|_| rng.gen_range(0..3)).collect::<Vec<_>>());
            let mg = MultiplexGraph::new(n, vec![edges], x, labels).unwrap();
            let dir = tempfile::tempdir().unwrap();
            save_dataset(&mg, dir.path()).unwrap();
            prop_assert_eq!(load_dataset(dir.path()).unwrap(), mg);
        }
    }

    #[test]
    fn graph_view_round_trip_via_single_view_dataset() {
        let g = AttributedGraph::new(3, vec![(0, 2)], Matrix::ones(3, 1), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&g.clone().into(), dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.view(0), g);
    }
}
