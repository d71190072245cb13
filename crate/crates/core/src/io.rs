//! Input file formats and output writers.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::curve::{Point, SupportCurve};
use crate::error::{Error, Result};
use crate::graph::GraphSpec;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// JSON object `{"cos": [a_0, a_1, …], "sin": [b_1, …]}`; `sin` may be omitted.
pub fn read_curve(path: &Path) -> Result<SupportCurve> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.to_string()))
}

/// CSV with a header naming columns `x` and `y`.
pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(path, format!("missing column '{name}'")))
    };
    let (ix, iy) = (column("x")?, column("y")?);
    let mut points = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(path, e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(path, format!("row {}: bad number '{raw}'", line + 2)))
        };
        points.push([field(ix)?, field(iy)?]);
    }
    if points.is_empty() {
        return Err(parse_error(path, "no points"));
    }
    Ok(points)
}

/// One `u v` pair of 0-based vertex ids per line.
///
/// `# label <id> <name>` names a vertex; other `#` lines and blank lines are ignored.
/// The vertex count is one more than the largest id mentioned.
pub fn read_edge_list(path: &Path) -> Result<GraphSpec> {
    let text = read_text(path)?;
    let mut edges = Vec::new();
    let mut named: Vec<(usize, String)> = Vec::new();
    let mut n = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("label") {
                let id: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| {
                    parse_error(path, format!("line {lineno}: label needs a vertex id"))
                })?;
                let name = parts.collect::<Vec<_>>().join(" ");
                if name.is_empty() {
                    return Err(parse_error(
                        path,
                        format!("line {lineno}: label needs a name"),
                    ));
                }
                n = n.max(id + 1);
                named.push((id, name));
            }
            continue;
        }
        let ids: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_error(path, format!("line {lineno}: bad vertex id '{s}'")))
        };
        match ids.as_slice() {
            [u, v] => {
                let (u, v) = (parse(u)?, parse(v)?);
                n = n.max(u + 1).max(v + 1);
                edges.push((u, v));
            }
            _ => return Err(parse_error(path, format!("line {lineno}: expected 'u v'"))),
        }
    }
    if n == 0 {
        return Err(parse_error(path, "no vertices"));
    }
    let labels = if named.is_empty() {
        None
    } else {
        let mut labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        for (id, name) in named {
            labels[id] = name;
        }
        Some(labels)
    };
    GraphSpec::new(n, edges, labels).map_err(|e| parse_error(path, e.to_string()))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| parse_error(path, e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

/// CSV table from a header and string rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| parse_error(path, e.to_string());
    writer.write_record(header).map_err(io_err)?;
    for row in rows {
        writer.write_record(row).map_err(io_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| parse_error(path, e.to_string()))?;
    write_text(
        path,
        &String::from_utf8(bytes).expect("csv output is utf-8"),
    )
}
