use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{ColumnSpec, Dataset, EndpointMode, FeatureKind, Role};
use crate::error::{Error, Result};

/// Literal used for missing cells on write; accepted (with the empty cell) on read.
pub const NA: &str = "NA";

/// Loads a comma-separated file with one header row.
///
/// Columns named in `schema` take its kind and role; other columns are
/// inferred as binary when every observed value is 0 or 1, else continuous.
pub fn load_csv(path: impl AsRef<Path>, schema: Option<&[ColumnSpec]>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema).map_err(|e| match e {
        Error::MissingHeader { .. } => Error::MissingHeader { path: path.to_path_buf() },
        other => other,
    })
}

pub fn read_csv<R: Read>(reader: R, schema: Option<&[ColumnSpec]>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Config(format!("csv header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::MissingHeader { path: "<reader>".into() });
    }
    let mut seen = std::collections::HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumnName(h.clone()));
        }
    }

    let n_cols = headers.len();
    let mut values = Vec::new();
    let mut missing = Vec::new();
    let mut n_rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::SchemaMismatch(format!("csv row {r}: {e}")))?;
        if rec.len() != n_cols {
            return Err(Error::SchemaMismatch(format!("row {r} has {} cells, header has {n_cols}", rec.len())));
        }
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() || cell == NA {
                values.push(0.0);
                missing.push(true);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                    row: r,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonNumericCell { row: r, column: headers[c].clone(), value: cell.to_string() });
                }
                values.push(v);
                missing.push(false);
            }
        }
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(Error::MissingData);
    }

    let specs: Vec<ColumnSpec> = headers
        .iter()
        .enumerate()
        .map(|(c, name)| {
            if let Some(s) = schema.and_then(|s| s.iter().find(|s| &s.name == name)) {
                return s.clone();
            }
            let binary = (0..n_rows)
                .filter(|&r| !missing[r * n_cols + c])
                .all(|r| matches!(values[r * n_cols + c], v if v == 0.0 || v == 1.0));
            let kind = if binary { FeatureKind::Binary } else { FeatureKind::Continuous };
            ColumnSpec::new(name.clone(), kind, Role::Feature)
        })
        .collect();
    if let Some(schema) = schema {
        if let Some(s) = schema.iter().find(|s| !headers.contains(&s.name)) {
            return Err(Error::MissingColumn(s.name.clone()));
        }
    }
    let mode = match specs.iter().find(|s| s.role == Role::Outcome) {
        Some(s) if s.kind != FeatureKind::Binary => EndpointMode::Regression,
        _ => EndpointMode::Classification,
    };
    let row_ids = (0..n_rows as u64).collect();
    let ds = Dataset::from_parts(specs, n_rows, values, missing, row_ids, mode)?;
    ds.validate()?;
    Ok(ds)
}

/// Writes the dataset with a header row; missing cells become `NA`.
///
/// Values use the shortest representation that parses back to the same
/// `f64`, so a write/read cycle reproduces the table exactly.
pub fn write_csv_to<W: Write>(ds: &Dataset, mut w: W) -> std::io::Result<()> {
    let header: Vec<&str> = ds.names();
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for r in 0..ds.n_rows() {
        line.clear();
        for c in 0..ds.n_cols() {
            if c > 0 {
                line.push(',');
            }
            match ds.get(r, c) {
                Some(v) => line.push_str(&v.to_string()),
                None => line.push_str(NA),
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv_to(ds, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
