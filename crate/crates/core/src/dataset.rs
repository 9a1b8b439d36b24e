//! Citation dataset loading from plaintext content/cites files, a versioned
//! canonical interchange format, and dataset statistics.
//!
//! `<name>.content` is tab-separated: node-id, feature values, label string.
//! `<name>.cites` holds one whitespace-separated citation pair per line.
//! Node-id strings map to dense 0-based indices in first-appearance order
//! within the content file; cite pairs referencing unknown ids are skipped
//! and counted.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use thiserror::Error;

use crate::graph::Graph;

const CANONICAL_MAGIC: &str = "rrlfsor-dataset v1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("content file {0} is empty")]
    EmptyContent(PathBuf),
    #[error("unsupported format or version in {path}: expected `{expected}`, got `{got}`")]
    VersionMismatch {
        path: PathBuf,
        expected: String,
        got: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}

/// A loaded citation dataset. Features are kept exactly as parsed; apply
/// [`l1_normalize_features`] separately when a run wants normalized rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

/// Loader audit counts: how much of the raw input was skipped or merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub raw_cite_lines: usize,
    pub skipped_unknown_ids: usize,
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
}

/// Statistics record backing the `stats` subcommand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetStats {
    pub nodes: usize,
    pub features: usize,
    pub undirected_edges: usize,
    pub classes: usize,
    pub max_degree: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
}

fn open(path: &Path) -> Result<BufReader<File>, DatasetError> {
    if !path.is_file() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    Ok(BufReader::new(File::open(path)?))
}

/// Load `<dir>/<name>.content` and `<dir>/<name>.cites`.
pub fn load_content_cites(dir: &Path, name: &str) -> Result<(Dataset, LoadReport), DatasetError> {
    let content_path = dir.join(format!("{name}.content"));
    let cites_path = dir.join(format!("{name}.cites"));

    let mut id_index: HashMap<String, usize> = HashMap::new();
    let mut label_index: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut num_features = None;

    for (lineno, line) in open(&content_path)?.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let malformed = |reason: String| DatasetError::Malformed {
            path: content_path.clone(),
            line: lineno + 1,
            reason,
        };
        if fields.len() < 3 {
            return Err(malformed(format!(
                "expected at least 3 tab-separated fields, got {}",
                fields.len()
            )));
        }
        let d = fields.len() - 2;
        match num_features {
            None => num_features = Some(d),
            Some(expected) if expected != d => {
                return Err(malformed(format!(
                    "expected {expected} feature columns, got {d}"
                )))
            }
            _ => {}
        }
        let id = fields[0].to_string();
        if id_index.contains_key(&id) {
            return Err(malformed(format!("duplicate node id `{id}`")));
        }
        id_index.insert(id, rows.len());
        let mut row = Vec::with_capacity(d);
        for raw in &fields[1..fields.len() - 1] {
            let v: f64 = raw
                .parse()
                .map_err(|_| malformed(format!("bad feature value `{raw}`")))?;
            row.push(v);
        }
        rows.push(row);
        let label = fields[fields.len() - 1];
        let next = label_index.len();
        let class = *label_index.entry(label.to_string()).or_insert(next);
        labels.push(class);
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyContent(content_path));
    }
    let num_nodes = rows.len();
    let num_features = num_features.unwrap();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut raw_cite_lines = 0usize;
    let mut skipped_unknown = 0usize;
    for (lineno, line) in open(&cites_path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = match (it.next(), it.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(DatasetError::Malformed {
                    path: cites_path.clone(),
                    line: lineno + 1,
                    reason: "expected two whitespace-separated node ids".into(),
                })
            }
        };
        raw_cite_lines += 1;
        match (id_index.get(a), id_index.get(b)) {
            (Some(&i), Some(&j)) => pairs.push((i, j)),
            _ => skipped_unknown += 1,
        }
    }

    let (graph, edge_stats) = Graph::from_edge_list_with_stats(num_nodes, &pairs)?;
    let features =
        Array2::from_shape_vec((num_nodes, num_features), rows.into_iter().flatten().collect())
            .expect("row lengths validated above");
    let dataset = Dataset {
        name: name.to_string(),
        graph,
        features,
        labels,
        num_classes: label_index.len(),
    };
    let report = LoadReport {
        raw_cite_lines,
        skipped_unknown_ids: skipped_unknown,
        self_loops_dropped: edge_stats.self_loops_dropped,
        duplicates_merged: edge_stats.duplicates_merged,
    };
    Ok((dataset, report))
}

/// Scale each feature row to sum 1; all-zero rows are left untouched.
pub fn l1_normalize_features(features: &mut Array2<f64>) {
    for mut row in features.rows_mut() {
        let sum: f64 = row.sum();
        if sum != 0.0 {
            row.mapv_inplace(|v| v / sum);
        }
    }
}

pub fn dataset_stats(d: &Dataset) -> DatasetStats {
    DatasetStats {
        nodes: d.graph.num_nodes(),
        features: d.features.ncols(),
        undirected_edges: d.graph.num_undirected_edges(),
        classes: d.num_classes,
        max_degree: d.graph.max_degree(),
        degree_histogram: d.graph.degree_histogram(),
    }
}

/// Write the canonical text format: a header (magic, name, dims), the label
/// vector, the canonical edge list, then one feature row per line. Floats are
/// printed in shortest round-trip form, so a load reproduces the exact bits.
pub fn save_canonical(d: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CANONICAL_MAGIC}")?;
    writeln!(w, "name {}", d.name)?;
    writeln!(
        w,
        "nodes {} features {} classes {} edges {}",
        d.graph.num_nodes(),
        d.features.ncols(),
        d.num_classes,
        d.graph.num_undirected_edges()
    )?;
    let labels: Vec<String> = d.labels.iter().map(|l| l.to_string()).collect();
    writeln!(w, "labels {}", labels.join(" "))?;
    for &(i, j) in d.graph.edge_list().iter() {
        writeln!(w, "{i} {j}")?;
    }
    for row in d.features.rows() {
        let mut first = true;
        for v in row.iter() {
            if first {
                first = false;
            } else {
                w.write_all(b" ")?;
            }
            write!(w, "{v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_canonical(path: &Path) -> Result<Dataset, DatasetError> {
    let mut lines = open(path)?.lines().enumerate();
    let path_buf = path.to_path_buf();
    let mut next_line = |what: &str| -> Result<(usize, String), DatasetError> {
        match lines.next() {
            Some((n, Ok(line))) => Ok((n + 1, line)),
            Some((_, Err(e))) => Err(DatasetError::Io(e)),
            None => Err(DatasetError::Malformed {
                path: path_buf.clone(),
                line: 0,
                reason: format!("file truncated: missing {what}"),
            }),
        }
    };
    let malformed = |line: usize, reason: String| DatasetError::Malformed {
        path: path.to_path_buf(),
        line,
        reason,
    };

    let (_, magic) = next_line("header")?;
    if magic != CANONICAL_MAGIC {
        return Err(DatasetError::VersionMismatch {
            path: path.to_path_buf(),
            expected: CANONICAL_MAGIC.to_string(),
            got: magic,
        });
    }
    let (n_line, name_line) = next_line("name")?;
    let name = name_line
        .strip_prefix("name ")
        .ok_or_else(|| malformed(n_line, "expected `name <name>`".into()))?
        .to_string();

    let (d_line, dims) = next_line("dimensions")?;
    let toks: Vec<&str> = dims.split_whitespace().collect();
    if toks.len() != 8
        || toks[0] != "nodes"
        || toks[2] != "features"
        || toks[4] != "classes"
        || toks[6] != "edges"
    {
        return Err(malformed(d_line, "expected `nodes N features D classes K edges M`".into()));
    }
    let parse_dim = |tok: &str| -> Result<usize, DatasetError> {
        tok.parse()
            .map_err(|_| malformed(d_line, format!("bad dimension `{tok}`")))
    };
    let nodes = parse_dim(toks[1])?;
    let num_features = parse_dim(toks[3])?;
    let num_classes = parse_dim(toks[5])?;
    let edges = parse_dim(toks[7])?;

    let (l_line, label_line) = next_line("labels")?;
    let body = label_line
        .strip_prefix("labels")
        .ok_or_else(|| malformed(l_line, "expected `labels ...`".into()))?;
    let labels: Vec<usize> = body
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| malformed(l_line, format!("bad label `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    if labels.len() != nodes {
        return Err(malformed(
            l_line,
            format!("expected {nodes} labels, got {}", labels.len()),
        ));
    }
    if labels.iter().any(|&l| l >= num_classes.max(1)) {
        return Err(malformed(l_line, "label out of class range".into()));
    }

    let mut pairs = Vec::with_capacity(edges);
    for _ in 0..edges {
        let (e_line, line) = next_line("edge line")?;
        let mut it = line.split_whitespace();
        match (it.next().and_then(|t| t.parse().ok()), it.next().and_then(|t| t.parse().ok())) {
            (Some(i), Some(j)) => pairs.push((i, j)),
            _ => return Err(malformed(e_line, format!("bad edge line `{line}`"))),
        }
    }
    let graph = Graph::from_edge_list(nodes, &pairs)?;
    if graph.num_undirected_edges() != edges {
        return Err(malformed(0, "edge section is not canonical".into()));
    }

    let mut values = Vec::with_capacity(nodes * num_features);
    for _ in 0..nodes {
        let (f_line, line) = next_line("feature row")?;
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| malformed(f_line, format!("bad feature value `{tok}`")))?;
            values.push(v);
        }
        if values.len() - before != num_features {
            return Err(malformed(
                f_line,
                format!(
                    "expected {num_features} feature values, got {}",
                    values.len() - before
                ),
            ));
        }
    }
    let features = Array2::from_shape_vec((nodes, num_features), values).expect("validated");
    Ok(Dataset {
        name,
        graph,
        features,
        labels,
        num_classes,
    })
}
