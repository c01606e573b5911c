//! TUDataset flat-file reader and writer.
//!
//! Layout for a dataset called `NAME`:
//! - `NAME_A.txt`: one `a, b` pair of 1-indexed global node ids per line
//! - `NAME_graph_indicator.txt`: line `n` holds the 1-indexed graph id of node `n`
//! - `NAME_node_labels.txt` (optional): line `n` holds the integer label of node `n`
//! - `NAME_graph_labels.txt` (optional): only checked for presence
//!
//! `_A.txt` lists each undirected edge in both directions; pairs are folded
//! to a single undirected edge. Self-loops and repeated pairs are dropped and
//! counted in the [`LoadReport`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSet};

/// Side information gathered while parsing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops_dropped: usize,
    pub duplicate_pairs_dropped: usize,
    pub has_node_labels: bool,
    pub has_graph_labels: bool,
}

pub fn file_path(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}_{suffix}.txt"))
}

fn read_required(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Load {
        path: path.to_path_buf(),
        source,
    })
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(Error::Load {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_int<T: std::str::FromStr>(tok: &str, path: &Path, line: usize) -> Result<T> {
    tok.trim().parse().map_err(|_| Error::Format {
        path: path.to_path_buf(),
        line,
        message: format!("expected an integer, found {tok:?}"),
    })
}

pub fn load_tud_dataset(dir: &Path, name: &str) -> Result<GraphSet> {
    load_tud_dataset_with_report(dir, name).map(|(set, _)| set)
}

pub fn load_tud_dataset_with_report(dir: &Path, name: &str) -> Result<(GraphSet, LoadReport)> {
    let a_path = file_path(dir, name, "A");
    let ind_path = file_path(dir, name, "graph_indicator");
    let ind_text = read_required(&ind_path)?;
    let a_text = read_required(&a_path)?;
    let labels_path = file_path(dir, name, "node_labels");
    let labels_text = read_optional(&labels_path)?;
    let has_graph_labels = file_path(dir, name, "graph_labels").is_file();

    // Global node n (0-based) -> (graph slot, local index).
    let mut slot_of_gid: BTreeMap<usize, usize> = BTreeMap::new();
    let mut node_graph_ids = Vec::new();
    for (line, text) in numbered_lines(&ind_text) {
        let gid: usize = parse_int(text, &ind_path, line)?;
        slot_of_gid.entry(gid).or_insert(0);
        node_graph_ids.push(gid);
    }
    for (slot, v) in slot_of_gid.values_mut().enumerate() {
        *v = slot;
    }
    let num_graphs = slot_of_gid.len();
    let mut sizes = vec![0usize; num_graphs];
    let mut local = Vec::with_capacity(node_graph_ids.len());
    for gid in &node_graph_ids {
        let slot = slot_of_gid[gid];
        local.push((slot, sizes[slot]));
        sizes[slot] += 1;
    }

    let mut report = LoadReport {
        has_graph_labels,
        ..LoadReport::default()
    };
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    let mut seen: Vec<HashSet<(usize, usize)>> = vec![HashSet::new(); num_graphs];
    let mut seen_directed: HashSet<(usize, usize)> = HashSet::new();
    for (line, text) in numbered_lines(&a_text) {
        let (l, r) = text.split_once(',').ok_or_else(|| Error::Format {
            path: a_path.clone(),
            line,
            message: format!("expected `a, b`, found {text:?}"),
        })?;
        let a: usize = parse_int(l, &a_path, line)?;
        let b: usize = parse_int(r, &a_path, line)?;
        let lookup = |node: usize| {
            node.checked_sub(1)
                .and_then(|i| local.get(i))
                .copied()
                .ok_or_else(|| Error::Format {
                    path: a_path.clone(),
                    line,
                    message: format!("node {node} has no graph id in the indicator file"),
                })
        };
        let (ga, la) = lookup(a)?;
        let (gb, lb) = lookup(b)?;
        if ga != gb {
            return Err(Error::Format {
                path: a_path.clone(),
                line,
                message: format!("edge ({a}, {b}) joins two different graphs"),
            });
        }
        if la == lb {
            report.self_loops_dropped += 1;
            continue;
        }
        // The reverse direction of a stored pair is the normal encoding;
        // only a repeated directed pair counts as a duplicate.
        if !seen_directed.insert((a, b)) {
            report.duplicate_pairs_dropped += 1;
            continue;
        }
        let e = (la.min(lb), la.max(lb));
        if seen[ga].insert(e) {
            edges[ga].push(e);
        }
    }

    let mut labels: Option<Vec<Vec<i64>>> = None;
    if let Some(text) = labels_text {
        report.has_node_labels = true;
        let mut per_graph: Vec<Vec<i64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        let mut count = 0;
        for (line, t) in numbered_lines(&text) {
            let (slot, _) = *local.get(count).ok_or_else(|| Error::Format {
                path: labels_path.clone(),
                line,
                message: "more node labels than nodes".into(),
            })?;
            // Some TUDataset label files carry several comma-separated columns;
            // the first one is the node label.
            let first = t.split(',').next().unwrap_or(t);
            per_graph[slot].push(parse_int(first, &labels_path, line)?);
            count += 1;
        }
        if count != local.len() {
            return Err(Error::Format {
                path: labels_path,
                line: count,
                message: format!("{count} node labels for {} nodes", local.len()),
            });
        }
        labels = Some(per_graph);
    }

    let mut graphs = Vec::with_capacity(num_graphs);
    for (gid, &slot) in &slot_of_gid {
        let mut g = Graph::new(*gid, sizes[slot], std::mem::take(&mut edges[slot]))?;
        if let Some(l) = labels.as_mut() {
            g = g.with_labels(std::mem::take(&mut l[slot]))?;
        }
        graphs.push(g);
    }
    Ok((GraphSet::real(graphs), report))
}

/// Write `set` in TUDataset layout. Graph ids are renumbered `1..=len` in set
/// order; both edge directions are written.
pub fn write_tud_dataset(set: &GraphSet, dir: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut a = BufWriter::new(fs::File::create(file_path(dir, name, "A"))?);
    let mut ind = BufWriter::new(fs::File::create(file_path(dir, name, "graph_indicator"))?);
    let all_labeled = !set.is_empty() && set.iter().all(|g| g.node_labels().is_some());
    let mut labels = if all_labeled {
        Some(BufWriter::new(fs::File::create(file_path(dir, name, "node_labels"))?))
    } else {
        None
    };
    let mut offset = 1;
    for (i, g) in set.iter().enumerate() {
        for _ in 0..g.num_nodes() {
            writeln!(ind, "{}", i + 1)?;
        }
        for &(u, v) in g.edges() {
            writeln!(a, "{}, {}", u + offset, v + offset)?;
            writeln!(a, "{}, {}", v + offset, u + offset)?;
        }
        if let (Some(w), Some(ls)) = (labels.as_mut(), g.node_labels()) {
            for l in ls {
                writeln!(w, "{l}")?;
            }
        }
        offset += g.num_nodes();
    }
    a.flush()?;
    ind.flush()?;
    if let Some(w) = labels.as_mut() {
        w.flush()?;
    }
    Ok(())
}
