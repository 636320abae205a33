//! Results CSV, trace JSONL and DOT export.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ltl_explain::search::{MoveType, OracleResult, SearchOutcome, TraceNode, TRACE_SCHEMA_VERSION};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Column order of every results CSV.
pub const CSV_COLUMNS: [&str; 9] = [
    "rank",
    "explanation",
    "wkl",
    "utility",
    "mean_return",
    "filtered",
    "searched_specs_pct",
    "restart_id",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rank: usize,
    pub explanation: String,
    pub wkl: Option<f64>,
    pub utility: Option<f64>,
    pub mean_return: f64,
    pub filtered: bool,
    pub searched_specs_pct: Option<f64>,
    pub restart_id: Option<usize>,
    pub seed: u64,
}

pub fn search_rows(outcome: &SearchOutcome<f64>) -> Vec<ResultRow> {
    outcome
        .top
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (key, _, rec) = r.best.as_ref().expect("top rows have a result");
            ResultRow {
                rank: i + 1,
                explanation: key.clone(),
                wkl: rec.wkl,
                utility: rec.utility,
                mean_return: rec.mean_return,
                filtered: rec.filtered,
                searched_specs_pct: Some(100.0 * r.searched_fraction),
                restart_id: Some(r.restart),
                seed: rec.seed,
            }
        })
        .collect()
}

/// Ranked oracle rows, best (lowest wkl) first.
pub fn oracle_rows(oracle: &OracleResult<f64>) -> Vec<ResultRow> {
    oracle
        .ranked
        .iter()
        .enumerate()
        .map(|(i, rec)| ResultRow {
            rank: i + 1,
            explanation: rec.key.clone(),
            wkl: rec.wkl,
            utility: rec.utility,
            mean_return: rec.mean_return,
            filtered: false,
            searched_specs_pct: None,
            restart_id: None,
            seed: rec.seed,
        })
        .collect()
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let invariant = |e: csv::Error| CliError::Invariant(format!("csv encoding: {e}"));
    w.write_record(CSV_COLUMNS).map_err(invariant)?;
    for r in rows {
        w.serialize(r).map_err(invariant)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Invariant(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Invariant(e.to_string()))
}

/// Oracle CSV: ranked rows followed by a `# filtered,<count>` footer line.
pub fn oracle_csv(oracle: &OracleResult<f64>) -> Result<String, CliError> {
    let mut out = csv_string(&oracle_rows(oracle))?;
    writeln!(out, "# filtered,{}", oracle.filtered.len()).unwrap();
    Ok(out)
}

/// Reads a results CSV, skipping `#` footer lines.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn trace_jsonl<'a>(nodes: impl IntoIterator<Item = &'a TraceNode>) -> Result<String, CliError> {
    let mut out = String::new();
    for n in nodes {
        let line = serde_json::to_string(n).map_err(|e| CliError::Invariant(format!("trace encoding: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceNode>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut nodes = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |m: String| CliError::Config(format!("{}:{}: malformed trace line: {m}", path.display(), i + 1));
        let node: TraceNode = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if node.schema_version != TRACE_SCHEMA_VERSION {
            return Err(malformed(format!("schema_version {} (expected {TRACE_SCHEMA_VERSION})", node.schema_version)));
        }
        nodes.push(node);
    }
    Ok(nodes)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT graph of a trace. Nodes are labelled with the explanation and its wkl
/// (`filtered` when the return filter rejected it); accepted nodes are bold.
/// Edges carry the move type as label: flip edges are solid, expansion edges
/// dotted and extension edges dashed blue.
pub fn trace_dot(nodes: &[TraceNode]) -> Result<String, CliError> {
    let ids: std::collections::HashSet<usize> = nodes.iter().map(|n| n.id).collect();
    let mut out = String::from("digraph search {\n");
    if !nodes.is_empty() {
        out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    }
    for n in nodes {
        let score = match n.wkl {
            Some(w) => format!("wkl={w:.4e}"),
            None => "filtered".to_string(),
        };
        let style = if n.accepted { ", style=bold" } else { "" };
        writeln!(out, "  n{} [label=\"{}\\n{}\"{}];", n.id, escape(&n.key), score, style).unwrap();
    }
    for n in nodes {
        let Some(p) = n.parent else { continue };
        if !ids.contains(&p) {
            return Err(CliError::Config(format!("trace node {} points at missing parent {p}", n.id)));
        }
        let attrs = match n.move_type {
            MoveType::Flip | MoveType::Init => "label=\"flip\"",
            MoveType::Expansion => "label=\"expansion\", style=dotted",
            MoveType::Extension => "label=\"extension\", style=dashed, color=blue",
        };
        writeln!(out, "  n{p} -> n{} [{attrs}];", n.id).unwrap();
    }
    out.push_str("}\n");
    Ok(out)
}

/// Plain-text top-k table: rank, explanation, wkl and searched specs.
pub fn format_table(rows: &[ResultRow]) -> String {
    let width = rows.iter().map(|r| r.explanation.len()).max().unwrap_or(0).max("explanation".len());
    let mut out = String::new();
    writeln!(out, "{:>4}  {:<width$}  {:>11}  {:>9}", "rank", "explanation", "wkl", "searched").unwrap();
    for r in rows {
        let wkl = r.wkl.map_or("filtered".to_string(), |w| format!("{w:.4e}"));
        let searched = r.searched_specs_pct.map_or("-".to_string(), |p| format!("{p:.1}%"));
        writeln!(out, "{:>4}  {:<width$}  {:>11}  {:>9}", r.rank, r.explanation, wkl, searched).unwrap();
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rank: usize, wkl: Option<f64>) -> ResultRow {
        ResultRow {
            rank,
            explanation: "F(a | b) & G(!c)".into(),
            wkl,
            utility: wkl.map(|w| -w),
            mean_return: 0.5,
            filtered: wkl.is_none(),
            searched_specs_pct: Some(12.5),
            restart_id: Some(3),
            seed: 9,
        }
    }

    #[test]
    fn csv_round_trips_with_fixed_header() {
        let rows = vec![row(1, Some(0.25)), row(2, None)];
        let text = csv_string(&rows).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().nth(2).unwrap(), "2,F(a | b) & G(!c),,,0.5,true,12.5,3,9");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_file(&path, &format!("{text}# filtered,1\n")).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
    }

    #[test]
    fn empty_trace_is_an_empty_digraph() {
        assert_eq!(trace_dot(&[]).unwrap(), "digraph search {\n}\n");
    }

    #[test]
    fn table_marks_filtered_rows() {
        let t = format_table(&[row(1, Some(0.25)), row(2, None)]);
        assert_eq!(t.lines().count(), 3);
        assert!(t.lines().nth(2).unwrap().contains("filtered"));
    }
}
