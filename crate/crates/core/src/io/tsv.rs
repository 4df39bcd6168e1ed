//! Tab-separated input files with `line:column` diagnostics.

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

/// A parsed TSV: header fields and data rows, each with its 1-based line number.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub header_line: usize,
    pub rows: Vec<(usize, Vec<String>)>,
}

/// Reads a header plus rows; blank lines and lines starting with `#` are skipped.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(path, &text)
}

pub fn parse_table(path: &Path, text: &str) -> Result<Table> {
    let mut header: Option<Vec<String>> = None;
    let mut header_line = 1;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        match &header {
            None => {
                header = Some(fields);
                header_line = i + 1;
            }
            Some(h) => {
                if fields.len() != h.len() {
                    let column = if fields.len() > h.len() {
                        line.split('\t').take(h.len()).map(|f| f.len() + 1).sum::<usize>() + 1
                    } else {
                        line.len() + 1
                    };
                    return Err(Error::format(
                        path,
                        i + 1,
                        column,
                        format!("expected {} fields, found {}", h.len(), fields.len()),
                    ));
                }
                rows.push((i + 1, fields));
            }
        }
    }
    let header = header.ok_or_else(|| Error::format(path, 1, 1, "missing header row"))?;
    Ok(Table { header, header_line, rows })
}

/// 1-based column where field `index` of `fields` starts.
pub fn column_of(fields: &[String], index: usize) -> usize {
    fields[..index].iter().map(|f| f.len() + 1).sum::<usize>() + 1
}

pub fn parse_f64(path: &Path, line: usize, fields: &[String], index: usize) -> Result<f64> {
    let raw = fields[index].trim();
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::format(
            path,
            line,
            column_of(fields, index),
            format!("expected a finite number, found `{raw}`"),
        )),
    }
}

pub fn expect_header(path: &Path, table: &Table, expected: &[&str]) -> Result<()> {
    for (k, want) in expected.iter().enumerate() {
        let found = table.header.get(k).map(String::as_str);
        if found != Some(*want) {
            return Err(Error::format(
                path,
                table.header_line,
                column_of(&table.header, k.min(table.header.len())),
                format!("expected header column `{want}`, found `{}`", found.unwrap_or("")),
            ));
        }
    }
    Ok(())
}

/// An omics matrix keyed by cell id, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct OmicsTable {
    pub ids: Vec<String>,
    pub rows: HashMap<String, Vec<f64>>,
    pub width: usize,
}

/// `cell_id` followed by feature columns.
pub fn read_omics(path: &Path) -> Result<OmicsTable> {
    let table = read_table(path)?;
    expect_header(path, &table, &["cell_id"])?;
    let width = table.header.len() - 1;
    let mut ids = Vec::new();
    let mut rows = HashMap::new();
    for (line, fields) in &table.rows {
        let id = fields[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::format(path, *line, 1, "empty cell id"));
        }
        let values = (1..fields.len())
            .map(|k| parse_f64(path, *line, fields, k))
            .collect::<Result<Vec<_>>>()?;
        if rows.insert(id.clone(), values).is_some() {
            return Err(Error::format(path, *line, 1, format!("duplicate cell id `{id}`")));
        }
        ids.push(id);
    }
    Ok(OmicsTable { ids, rows, width })
}

/// `drug_id<TAB>smiles`.
pub fn read_drugs(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let table = read_table(path)?;
    expect_header(path, &table, &["drug_id", "smiles"])?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (line, fields) in table.rows {
        let id = fields[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::format(path, line, 1, "empty drug id"));
        }
        if seen.insert(id.clone(), line).is_some() {
            return Err(Error::format(path, line, 1, format!("duplicate drug id `{id}`")));
        }
        out.push((line, id, fields[1].trim().to_string()));
    }
    Ok(out)
}

/// `cell_id<TAB>drug_id<TAB>ic50`.
pub fn read_responses(path: &Path) -> Result<Vec<(usize, String, String, f64)>> {
    let table = read_table(path)?;
    expect_header(path, &table, &["cell_id", "drug_id", "ic50"])?;
    table
        .rows
        .iter()
        .map(|(line, fields)| {
            let ic50 = parse_f64(path, *line, fields, 2)?;
            Ok((*line, fields[0].trim().to_string(), fields[1].trim().to_string(), ic50))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnostics_point_at_the_field() {
        let p = Path::new("r.tsv");
        let t = parse_table(p, "cell_id\tdrug_id\tic50\n# note\nc1\td1\t0.5\nc2\td2\n").unwrap_err();
        assert!(matches!(t, Error::Format { line: 4, .. }), "{t}");
        let table = parse_table(p, "cell_id\tdrug_id\tic50\nc1\td1\tabc\n").unwrap();
        let (line, fields) = &table.rows[0];
        let err = parse_f64(p, *line, fields, 2).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, column: 7, .. }), "{err}");
        let err = expect_header(p, &parse_table(p, "cell\tx\n").unwrap(), &["cell_id"]).unwrap_err();
        assert!(matches!(err, Error::Format { line: 1, column: 1, .. }));
    }
}
