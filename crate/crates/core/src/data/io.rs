//! Text formats for weight and distance sequences.
//!
//! ```text
//! TLPSEQ 1 <N> <T> <max_weight>      TLPDIST 1 <N> <T>
//! SNAPSHOT 1                         SNAPSHOT 1
//! <N lines of N weights>             <N lines of N distances>
//! SNAPSHOT 2                         ...
//! ...
//! ```
//!
//! Blocks are numbered from 1 and must appear in order. Values are written
//! with the shortest decimal form that round-trips (at most 17 significant
//! digits), separated by single spaces, lines ending in `\n`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::{SnapshotSequence, SYMMETRY_TOLERANCE};

const SEQ_MAGIC: &str = "TLPSEQ";
const DIST_MAGIC: &str = "TLPDIST";
const VERSION: &str = "1";

struct Lines<'a> {
    path: PathBuf,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &Path) -> Self {
        Self {
            path: path.to_path_buf(),
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    /// Next non-blank line as `(1-based line number, content)`.
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Ok((i + 1, l));
            }
        }
        Err(self.err(
            self.last + 1,
            format!("unexpected end of file, expected {what}"),
        ))
    }

    fn expect_end(&mut self) -> Result<()> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Err(self.err(i + 1, "trailing content after the last snapshot"));
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(
    lines: &Lines,
    line: usize,
    field: &str,
    what: &str,
) -> Result<T> {
    field
        .parse()
        .map_err(|_| lines.err(line, format!("invalid {what} '{field}'")))
}

/// Reads `t` blocks of `n × n` values. Returns each matrix with the line
/// number of its header.
fn parse_blocks(lines: &mut Lines, n: usize, t: usize) -> Result<Vec<(usize, Matrix)>> {
    let mut out = Vec::with_capacity(t);
    for block in 1..=t {
        let (hline, header) = lines.next("SNAPSHOT header")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 || fields[0] != "SNAPSHOT" {
            return Err(lines.err(
                hline,
                format!("expected 'SNAPSHOT {block}', found '{header}'"),
            ));
        }
        let idx: usize = parse_num(lines, hline, fields[1], "snapshot index")?;
        if idx != block {
            return Err(lines.err(
                hline,
                format!("snapshot index {idx} out of order, expected {block}"),
            ));
        }
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            let (rline, row) = lines.next("matrix row")?;
            let values: Vec<&str> = row.split_whitespace().collect();
            if values.len() != n {
                return Err(lines.err(
                    rline,
                    format!(
                        "row has {} values, expected {n} (non-square snapshot?)",
                        values.len()
                    ),
                ));
            }
            for v in values {
                let x: f64 = parse_num(lines, rline, v, "number")?;
                if !x.is_finite() {
                    return Err(lines.err(rline, format!("non-finite value '{v}'")));
                }
                data.push(x);
            }
        }
        out.push((hline, Matrix::new(n, n, data)?));
    }
    Ok(out)
}

fn parse_header<'a>(
    lines: &mut Lines<'a>,
    magic: &str,
    n_fields: usize,
) -> Result<(usize, Vec<&'a str>)> {
    let (line, header) = lines.next("header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&magic) {
        return Err(lines.err(
            line,
            format!("malformed header, expected '{magic} {VERSION} ...'"),
        ));
    }
    if fields.get(1) != Some(&VERSION) {
        return Err(lines.err(
            line,
            format!("unsupported version '{}'", fields.get(1).unwrap_or(&"")),
        ));
    }
    if fields.len() != n_fields {
        return Err(lines.err(
            line,
            format!("header has {} fields, expected {n_fields}", fields.len()),
        ));
    }
    Ok((line, fields))
}

/// Parses a weight sequence. Snapshots within [`SYMMETRY_TOLERANCE`] of
/// symmetric are symmetrized exactly; larger asymmetry, negative weights,
/// nonzero diagonals and weights above `max_weight` are rejected.
pub fn parse_sequence(text: &str, path: &Path) -> Result<SnapshotSequence> {
    let mut lines = Lines::new(text, path);
    let (hline, fields) = parse_header(&mut lines, SEQ_MAGIC, 5)?;
    let n: usize = parse_num(&lines, hline, fields[2], "node count")?;
    let t: usize = parse_num(&lines, hline, fields[3], "snapshot count")?;
    let max_weight: f64 = parse_num(&lines, hline, fields[4], "max weight")?;
    if n == 0 {
        return Err(lines.err(hline, "node count must be positive"));
    }
    if t == 0 {
        return Err(lines.err(hline, "sequence must contain at least one snapshot"));
    }
    if !(max_weight > 0.0 && max_weight.is_finite()) {
        return Err(lines.err(
            hline,
            format!("max weight must be positive, got {max_weight}"),
        ));
    }
    let blocks = parse_blocks(&mut lines, n, t)?;
    lines.expect_end()?;

    let mut snapshots = Vec::with_capacity(t);
    for (line, mut m) in blocks {
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(lines.err(
                    line + 1 + i,
                    format!("nonzero diagonal entry {}", m[(i, i)]),
                ));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if v < 0.0 {
                    return Err(lines.err(line + 1 + i, format!("negative weight {v}")));
                }
                if v > max_weight {
                    return Err(lines.err(
                        line + 1 + i,
                        format!("weight {v} exceeds max weight {max_weight}"),
                    ));
                }
                if (v - m[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(lines.err(
                        line + 1 + i,
                        format!(
                            "asymmetric snapshot: ({i},{j})={v} but ({j},{i})={}",
                            m[(j, i)]
                        ),
                    ));
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        snapshots.push(m);
    }
    SnapshotSequence::new(snapshots, max_weight)
}

pub fn load_sequence(path: impl AsRef<Path>) -> Result<SnapshotSequence> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sequence(&text, path)
}

fn push_blocks(out: &mut String, blocks: &[Matrix]) {
    for (t, m) in blocks.iter().enumerate() {
        let _ = writeln!(out, "SNAPSHOT {}", t + 1);
        for r in 0..m.rows() {
            let row: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
}

pub fn write_sequence(seq: &SnapshotSequence) -> String {
    let mut out = format!(
        "{SEQ_MAGIC} {VERSION} {} {} {}\n",
        seq.n_nodes(),
        seq.len(),
        seq.max_weight()
    );
    push_blocks(&mut out, seq.snapshots());
    out
}

pub fn save_sequence(seq: &SnapshotSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_sequence(seq)).map_err(|e| Error::io(path, e))
}

/// Parses a distance sequence; only shape and finiteness are checked here.
pub fn parse_distances(text: &str, path: &Path) -> Result<Vec<Matrix>> {
    let mut lines = Lines::new(text, path);
    let (hline, fields) = parse_header(&mut lines, DIST_MAGIC, 4)?;
    let n: usize = parse_num(&lines, hline, fields[2], "node count")?;
    let t: usize = parse_num(&lines, hline, fields[3], "snapshot count")?;
    if n == 0 {
        return Err(lines.err(hline, "node count must be positive"));
    }
    if t == 0 {
        return Err(lines.err(hline, "sequence must contain at least one snapshot"));
    }
    let blocks = parse_blocks(&mut lines, n, t)?;
    lines.expect_end()?;
    Ok(blocks.into_iter().map(|(_, m)| m).collect())
}

pub fn load_distances(path: impl AsRef<Path>) -> Result<Vec<Matrix>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_distances(&text, path)
}

pub fn write_distances(distances: &[Matrix]) -> Result<String> {
    let n = distances.first().map_or(0, |m| m.rows());
    if distances.is_empty() || distances.iter().any(|m| m.shape() != (n, n)) {
        return Err(Error::Validation(
            "distance sequence must hold square matrices of one size".into(),
        ));
    }
    let mut out = format!("{DIST_MAGIC} {VERSION} {n} {}\n", distances.len());
    push_blocks(&mut out, distances);
    Ok(out)
}

pub fn save_distances(distances: &[Matrix], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_distances(distances)?).map_err(|e| Error::io(path, e))
}
