//! `t,u,y` data files.
//!
//! Floats are written with 17 significant digits so a write/read cycle is
//! lossless. The time column must be a run of consecutive integers; its
//! starting value is free.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pwarx_core::data::Dataset;

use crate::error::{CliError, Result};

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(file, path)
}

pub fn read_dataset<R: Read>(reader: R, path: &Path) -> Result<Dataset> {
    let malformed = |line: u64, message: String| CliError::MalformedCsv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| malformed(1, format!("missing `{name}` column (expected header t,u,y)")))
    };
    let (ct, cu, cy) = (column("t")?, column("u")?, column("y")?);

    let (mut u, mut y) = (Vec::new(), Vec::new());
    let mut first_t = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| {
            record
                .get(i)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| malformed(line, format!("empty `{name}` field")))
        };
        let t: i64 = field(ct, "t")?
            .parse()
            .map_err(|_| malformed(line, format!("`t` is not an integer: {:?}", &record[ct])))?;
        let expected = *first_t.get_or_insert(t) + u.len() as i64;
        if t != expected {
            return Err(CliError::NonContiguousTime {
                path: path.to_path_buf(),
                line,
                expected,
                found: t,
            });
        }
        let number = |i: usize, name: &str| -> Result<f64> {
            let s = field(i, name)?;
            let v: f64 = s
                .parse()
                .map_err(|_| malformed(line, format!("`{name}` is not a number: {s:?}")))?;
            if !v.is_finite() {
                return Err(malformed(line, format!("`{name}` is not finite")));
            }
            Ok(v)
        };
        u.push(number(cu, "u")?);
        y.push(number(cy, "y")?);
    }
    if u.is_empty() {
        return Err(malformed(1, "no data rows".into()));
    }
    Ok(Dataset::new(u, y)?)
}

pub fn write_csv(path: &Path, data: &Dataset) -> Result<()> {
    let columns = [data.u(), data.y()];
    write_columns(path, &["u", "y"], 0, &columns)
}

/// Writes `t` followed by equally long float columns, `t` starting at `t0`.
pub fn write_columns(path: &Path, names: &[&str], t0: i64, columns: &[&[f64]]) -> Result<()> {
    let mut out = String::from("t");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        out.push_str(&(t0 + i as i64).to_string());
        for c in columns {
            out.push_str(&format!(",{:.16e}", c[i]));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))
}
