use std::path::Path;

use crate::error::{CliError, Result};

/// One parsed dataset file: the input column and, when the file carries a
/// `y` column, the output column.
pub struct CsvData {
    pub u: Vec<f64>,
    pub y: Option<Vec<f64>>,
}

/// Write a `k,u[,y]` dataset file. Values use Rust's shortest round-trip
/// float formatting, so a read-back reproduces them bit-exactly.
pub fn write_dataset(path: &Path, u: &[f64], y: Option<&[f64]>) -> Result<()> {
    let mut text = String::from(if y.is_some() { "k,u,y\n" } else { "k,u\n" });
    for (i, ui) in u.iter().enumerate() {
        match y {
            Some(y) => text.push_str(&format!("{},{},{}\n", i + 1, ui, y[i])),
            None => text.push_str(&format!("{},{}\n", i + 1, ui)),
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<CsvData> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::parse(path, 1, "empty file"))?;
    let with_y = match header.trim() {
        "k,u,y" => true,
        "k,u" => false,
        other => {
            return Err(CliError::parse(
                path,
                1,
                format!("expected header 'k,u,y' or 'k,u', got '{other}'"),
            ))
        }
    };
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if with_y { 3 } else { 2 };
        if fields.len() != expected {
            return Err(CliError::parse(
                path,
                line_no,
                format!("expected {expected} fields, got {}", fields.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::parse(path, line_no, format!("bad number '{s}'")))
        };
        u.push(num(fields[1])?);
        if with_y {
            y.push(num(fields[2])?);
        }
    }
    if u.is_empty() {
        return Err(CliError::parse(path, 1, "no data rows"));
    }
    Ok(CsvData {
        u,
        y: with_y.then_some(y),
    })
}

/// Write a generic table with a caller-supplied header line.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = format!("{header}\n");
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
