//! Plain-text field files: header `x,t,value`, rows ordered by `t` then `x`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fhn_core::field::{Field, FieldMeta};

use crate::error::CliError;

/// 17 significant digits, enough to re-read every `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn field_to_csv(field: &Field) -> Result<String, CliError> {
    field
        .validate()
        .map_err(|e| CliError::Numerical {
            stage: "write field".into(),
            detail: format!("refusing to write '{}': {e}", field.meta.description),
        })?;
    let mut out = String::from("x,t,value\n");
    for (row, &t) in field.values.iter().zip(&field.grid_t) {
        for (&v, &x) in row.iter().zip(&field.grid_x) {
            writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(t), fmt_f64(v)).unwrap();
        }
    }
    Ok(out)
}

pub fn write_field_csv(field: &Field, path: &Path) -> Result<(), CliError> {
    let text = field_to_csv(field)?;
    fs::write(path, text).map_err(|e| CliError::MissingFile(format!("cannot write {}: {e}", path.display())))
}

fn parse_num(s: &str, line: usize, path: &Path) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Syntax(format!("{} line {line}: '{s}' is not a number", path.display())))
}

fn read_rows(path: &Path, header: &str) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::MissingFile(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        other => {
            return Err(CliError::Syntax(format!(
                "{}: expected header '{header}', found '{}'",
                path.display(),
                other.map_or("", |(_, l)| l)
            )))
        }
    }
    let width = header.split(',').count();
    lines
        .map(|(i, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != width {
                return Err(CliError::Syntax(format!(
                    "{} line {}: expected {width} columns, found {}",
                    path.display(),
                    i + 1,
                    cells.len()
                )));
            }
            cells.iter().map(|c| parse_num(c, i + 1, path)).collect()
        })
        .collect()
}

/// Inverse of [`write_field_csv`]; the metadata is not stored in the file.
pub fn read_field_csv(path: &Path, meta: FieldMeta) -> Result<Field, CliError> {
    let rows = read_rows(path, "x,t,value")?;
    let bad = |m: String| CliError::config(format!("{}: {m}", path.display()));
    let Some(t0) = rows.first().map(|r| r[1]) else {
        return Err(bad("no data rows".into()));
    };
    let grid_x: Vec<f64> = rows.iter().take_while(|r| r[1] == t0).map(|r| r[0]).collect();
    let nx = grid_x.len();
    if rows.len() % nx != 0 {
        return Err(bad(format!("{} rows do not fill a grid with {nx} x-nodes", rows.len())));
    }
    let mut grid_t = Vec::new();
    let mut values = Vec::new();
    for block in rows.chunks(nx) {
        let t = block[0][1];
        if block.iter().zip(&grid_x).any(|(r, &x)| r[1] != t || r[0] != x) {
            return Err(bad(format!("rows at t = {t} do not repeat the x-nodes of the first block")));
        }
        grid_t.push(t);
        values.push(block.iter().map(|r| r[2]).collect());
    }
    Field::new(grid_x, grid_t, values, meta).map_err(|e| bad(e.to_string()))
}

/// Two-column file `x,value` for sampled initial data.
pub fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let rows = read_rows(path, "x,value")?;
    Ok(rows.into_iter().map(|r| (r[0], r[1])).unzip())
}
