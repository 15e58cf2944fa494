//! Plain-text model files.
//!
//! ```text
//! format = pwarx-model/1
//! modes = 2
//! n_a = 1
//! n_b = 1
//! theta_y.1 = -4.0000000000000002e-1 1.0000000000000000e0 1.5000000000000000e0
//! theta_y.2 = ...
//! theta_x.1 = ...
//! theta_x.2 = ...
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Coefficients are in
//! regressor order `y(t-1)..y(t-n_a), u(t-1)..u(t-n_b), 1`.

use std::collections::HashMap;
use std::path::Path;

use pwarx_core::model::PwarxModel;

use crate::csv_io::write_file;
use crate::error::{CliError, Result};

pub const FORMAT_TAG: &str = "pwarx-model/1";

pub fn render_model(model: &PwarxModel) -> String {
    let mut out = format!(
        "format = {FORMAT_TAG}\nmodes = {}\nn_a = {}\nn_b = {}\n",
        model.num_modes(),
        model.n_a(),
        model.n_b()
    );
    for (name, rows) in [("theta_y", model.theta_y()), ("theta_x", model.theta_x())] {
        for (k, row) in rows.iter().enumerate() {
            let coeffs: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&format!("{name}.{} = {}\n", k + 1, coeffs.join(" ")));
        }
    }
    out
}

pub fn parse_model(text: &str, path: &Path) -> Result<PwarxModel> {
    let err = |line: usize, message: String| CliError::ModelFormat {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut fields: HashMap<String, (usize, String)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, "expected `key = value`".into()))?;
        let key = key.trim().to_string();
        if fields.contains_key(&key) {
            return Err(err(i + 1, format!("duplicate key `{key}`")));
        }
        fields.insert(key, (i + 1, value.trim().to_string()));
    }

    let get = |key: &str| fields.get(key).ok_or_else(|| err(0, format!("missing key `{key}`")));
    let (line, tag) = get("format")?;
    if tag != FORMAT_TAG {
        return Err(err(*line, format!("unsupported format {tag:?} (expected {FORMAT_TAG})")));
    }
    let integer = |key: &str| -> Result<usize> {
        let (line, v) = get(key)?;
        v.parse().map_err(|_| err(*line, format!("`{key}` is not a non-negative integer")))
    };
    let (k, n_a, n_b) = (integer("modes")?, integer("n_a")?, integer("n_b")?);
    let vectors = |name: &str| -> Result<Vec<Vec<f64>>> {
        (1..=k)
            .map(|m| {
                let key = format!("{name}.{m}");
                let (line, v) = get(&key)?;
                v.split_whitespace()
                    .map(|s| s.parse::<f64>().map_err(|_| err(*line, format!("bad coefficient {s:?}"))))
                    .collect()
            })
            .collect()
    };
    let (theta_y, theta_x) = (vectors("theta_y")?, vectors("theta_x")?);
    let known = 4 + 2 * k;
    if fields.len() != known {
        let mut extra: Vec<_> = fields
            .iter()
            .filter(|(key, _)| {
                !matches!(key.as_str(), "format" | "modes" | "n_a" | "n_b")
                    && !key
                        .split_once('.')
                        .and_then(|(n, i)| i.parse::<usize>().ok().map(|i| (n, i)))
                        .is_some_and(|(n, i)| (n == "theta_y" || n == "theta_x") && (1..=k).contains(&i))
            })
            .map(|(key, (line, _))| (*line, key.clone()))
            .collect();
        extra.sort();
        if let Some((line, key)) = extra.into_iter().next() {
            return Err(err(line, format!("unexpected key `{key}`")));
        }
    }
    PwarxModel::new(n_a, n_b, theta_y, theta_x).map_err(|e| err(0, e.to_string()))
}

pub fn save_model(path: &Path, model: &PwarxModel) -> Result<()> {
    write_file(path, &render_model(model))
}

pub fn load_model(path: &Path) -> Result<PwarxModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_model(&text, path)
}
