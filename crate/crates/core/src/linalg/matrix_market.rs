//! MatrixMarket coordinate format (real, general, 1-based) for debugging dumps.

use std::io::{BufRead, Write};

use super::SparseMatrix;
use crate::error::{Error, Result};

pub fn write<W: Write>(m: &SparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:e}", i + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn read<R: BufRead>(input: R) -> Result<SparseMatrix> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty input".into()))??;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(Error::Parse(format!("unsupported header: {header}")));
    }
    let symmetric = lower.contains("symmetric");

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let parse_idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad index {s:?}: {e}")))
        };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("bad size line: {t}")));
                }
                size = Some((
                    parse_idx(fields[0])?,
                    parse_idx(fields[1])?,
                    parse_idx(fields[2])?,
                ));
            }
            Some(_) => {
                if fields.len() != 3 {
                    return Err(Error::Parse(format!("bad entry line: {t}")));
                }
                let (i, j) = (parse_idx(fields[0])?, parse_idx(fields[1])?);
                if i == 0 || j == 0 {
                    return Err(Error::Parse("indices are 1-based".into()));
                }
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad value {:?}: {e}", fields[2])))?;
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nrows, ncols, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(Error::Parse(format!(
            "expected {nnz} entries, found {stored}"
        )));
    }
    SparseMatrix::from_triplets(nrows, ncols, &triplets)
}
