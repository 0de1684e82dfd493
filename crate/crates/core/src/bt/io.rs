//! Text formats for vote matrices and fitted scores.
//!
//! A vote matrix file holds the sample count `m` on the first line followed
//! by `m` rows of `m` space-separated non-negative integers. A score file
//! holds one `index<TAB>gamma<TAB>score` line per sample with six decimals.

use std::fmt::Write as _;

use super::{ScoreVector, VoteMatrix};
use crate::error::{Error, Result};

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

/// Whitespace-separated tokens of a line with their 1-based columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut rest = line;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let start = rest.find(|c: char| !c.is_whitespace())?;
        let tail = &rest[start..];
        let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
        let col = line[..offset + start].chars().count() + 1;
        let tok = &tail[..len];
        offset += start + len;
        rest = &tail[len..];
        Some((col, tok))
    })
}

pub fn parse_vote_matrix(text: &str) -> Result<VoteMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty input"))?;
    let mut head = tokens(header);
    let (col, tok) = head.next().ok_or_else(|| parse_err(ln, 1, "missing sample count"))?;
    let m: usize = tok.parse().map_err(|_| parse_err(ln, col, format!("invalid sample count {tok:?}")))?;
    if let Some((col, tok)) = head.next() {
        return Err(parse_err(ln, col, format!("unexpected token {tok:?} after sample count")));
    }
    if m < 2 {
        return Err(parse_err(ln, col, format!("sample count must be at least 2, got {m}")));
    }

    let mut rows = Vec::with_capacity(m);
    for (ln, line) in lines.by_ref() {
        if rows.len() == m {
            if !line.trim().is_empty() {
                return Err(parse_err(ln, 1, "unexpected content after the last row"));
            }
            continue;
        }
        let mut row = Vec::with_capacity(m);
        for (col, tok) in tokens(line) {
            if row.len() == m {
                return Err(parse_err(ln, col, format!("row has more than {m} entries")));
            }
            let v: u64 = tok.parse().map_err(|_| parse_err(ln, col, format!("invalid count {tok:?}")))?;
            if v != 0 && row.len() == rows.len() {
                return Err(parse_err(ln, col, "diagonal entry must be zero"));
            }
            row.push(v);
        }
        if row.len() != m {
            let end = line.chars().count() + 1;
            return Err(parse_err(ln, end, format!("expected {m} entries, found {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != m {
        let ln = text.lines().count() + 1;
        return Err(parse_err(ln, 1, format!("expected {m} rows, found {}", rows.len())));
    }
    VoteMatrix::from_rows(&rows)
}

pub fn format_vote_matrix(votes: &VoteMatrix) -> String {
    let mut out = format!("{}\n", votes.len());
    for row in votes.rows() {
        let line: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_scores(scores: &ScoreVector) -> String {
    let mut out = String::new();
    for (i, (g, s)) in scores.gamma().iter().zip(scores.scores()).enumerate() {
        writeln!(out, "{i}\t{g:.6}\t{s:.6}").expect("writing to a String");
    }
    out
}

/// Reads the strength column of a score file.
pub fn parse_scores(text: &str) -> Result<ScoreVector> {
    let mut gammas = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(i + 1, 1, "expected index, gamma and score separated by tabs"));
        }
        let index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, 1, format!("invalid index {:?}", fields[0])))?;
        if index != gammas.len() {
            return Err(parse_err(i + 1, 1, format!("expected index {}, found {index}", gammas.len())));
        }
        let col = fields[0].len() + 2;
        let g: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, col, format!("invalid gamma {:?}", fields[1])))?;
        gammas.push(g);
    }
    ScoreVector::from_gammas(gammas)
}

/// Reads positive strengths, one per line. Blank lines and lines starting
/// with `#` are skipped; a score-file line contributes its gamma column.
pub fn parse_gammas(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let (col, field) = match fields.len() {
            1 => (1, fields[0]),
            3 => (fields[0].len() + 2, fields[1]),
            _ => return Err(parse_err(i + 1, 1, "expected one value or a score-file line")),
        };
        let g: f64 =
            field.trim().parse().map_err(|_| parse_err(i + 1, col, format!("invalid strength {field:?}")))?;
        if !(g.is_finite() && g > 0.0) {
            return Err(parse_err(i + 1, col, format!("strength must be positive, got {g}")));
        }
        out.push(g);
    }
    if out.len() < 2 {
        return Err(parse_err(1, 1, "need at least two strengths"));
    }
    Ok(out)
}
