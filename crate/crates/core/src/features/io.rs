//! Domain CSV files: header `f1,...,fd,label`, one sample per line, label in {1, 2, -1}.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::domain::{validate_domain, DomainData, LabelValue};
use crate::error::{Error, Result};

/// Reads one domain. The domain id is the file stem.
pub fn read_domain_csv(path: impl AsRef<Path>) -> Result<DomainData> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_domain_csv(&id, &text)
}

pub fn parse_domain_csv(domain_id: &str, text: &str) -> Result<DomainData> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Schema("missing header row".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.last() != Some(&"label") {
        return Err(Error::Schema("last header column must be `label`".into()));
    }
    let dim = columns.len() - 1;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        for field in &fields[..dim] {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid number `{field}`"),
            })?;
            values.push(v);
        }
        let code: i64 = fields[dim].parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid label `{}`", fields[dim]),
        })?;
        let label = LabelValue::from_code(code)
            .ok_or_else(|| Error::Schema(format!("label {code} on line {line_no} is not one of 1, 2, -1")))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let features = DMatrix::from_row_slice(labels.len(), dim, &values);
    let domain = DomainData {
        domain_id: domain_id.to_string(),
        features,
        labels,
    };
    validate_domain(&domain)?;
    Ok(domain)
}

pub fn format_domain_csv(d: &DomainData) -> Result<String> {
    validate_domain(d)?;
    if d.dim() == 0 {
        return Err(Error::Schema("domain has no feature columns".into()));
    }
    let mut out = String::new();
    for j in 0..d.dim() {
        let _ = write!(out, "f{},", j + 1);
    }
    out.push_str("label\n");
    for i in 0..d.n_samples() {
        for j in 0..d.dim() {
            // `Display` for f64 prints the shortest representation that round-trips.
            let _ = write!(out, "{},", d.features[(i, j)]);
        }
        let _ = writeln!(out, "{}", d.labels[i].code());
    }
    Ok(out)
}

pub fn write_domain_csv(d: &DomainData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_domain_csv(d)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
