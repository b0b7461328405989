//! Tabular ingestion, feature scaling, key=value config files and CSV export.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! value read back parses to the same bits.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scenarios::SyntheticSample;

/// Feature rows and a target column read from a headed CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub features: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub source: PathBuf,
    pub log_target: bool,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Replaces the target by its natural log; every value must be positive.
    pub fn log_transform_target(mut self) -> Result<Self> {
        if let Some((row, v)) = self.target.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "log transform needs positive targets; row {} has {v}",
                row + 1
            )));
        }
        self.target.iter_mut().for_each(|v| *v = v.ln());
        self.log_target = true;
        Ok(self)
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::from_rows(&self.features, self.target.clone())
    }
}

/// Reads `feature_cols` and `target_col` from a CSV file with a header row.
/// Data rows are numbered from 1 in errors.
pub fn load_csv(path: impl AsRef<Path>, feature_cols: &[&str], target_col: &str) -> Result<TabularDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers()?.clone();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let feature_idx = feature_cols.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?;
    let target_idx = position(target_col)?;

    let mut features = Vec::new();
    let mut target = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedCell {
                    row: r + 1,
                    column: name.to_string(),
                    value: raw.to_string(),
                })
        };
        features.push(
            feature_idx
                .iter()
                .zip(feature_cols)
                .map(|(&i, name)| cell(i, name))
                .collect::<Result<Vec<_>>>()?,
        );
        target.push(cell(target_idx, target_col)?);
    }
    if target.is_empty() {
        return Err(Error::EmptyInput("CSV file has no data rows"));
    }
    Ok(TabularDataset {
        feature_names: feature_cols.iter().map(|s| s.to_string()).collect(),
        target_name: target_col.to_string(),
        features,
        target,
        source: path.to_path_buf(),
        log_target: false,
    })
}

/// Per-column minima and maxima; constant columns map to 0.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MinMaxScaling {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub constant: Vec<bool>,
}

impl MinMaxScaling {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().ok_or(Error::EmptyInput("no rows to scale"))?.len();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                mins[k] = mins[k].min(v);
                maxs[k] = maxs[k].max(v);
            }
        }
        let constant = mins.iter().zip(&maxs).map(|(lo, hi)| !(hi > lo)).collect();
        Ok(Self { mins, maxs, constant })
    }

    pub fn has_constant_column(&self) -> bool {
        self.constant.iter().any(|&c| c)
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, &v)| {
                if self.constant[k] {
                    0.0
                } else {
                    ((v - self.mins[k]) / (self.maxs[k] - self.mins[k])).clamp(0.0, 1.0)
                }
            })
            .collect()
    }

    /// Maps scaled values back; constant columns return their single value.
    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, &v)| {
                if self.constant[k] {
                    self.mins[k]
                } else {
                    self.mins[k] + v * (self.maxs[k] - self.mins[k])
                }
            })
            .collect()
    }
}

/// Scales every feature column to `[0, 1]`.
pub fn minmax_scale(data: &TabularDataset) -> Result<(TabularDataset, MinMaxScaling)> {
    let scaling = MinMaxScaling::fit(&data.features)?;
    let features = data.features.iter().map(|r| scaling.apply(r)).collect();
    Ok((
        TabularDataset {
            features,
            ..data.clone()
        },
        scaling,
    ))
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
/// Keys are normalized to use `_` rather than `-`.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(Error::InvalidConfig(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidConfig(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

pub fn read_config(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    parse_config(&std::fs::read_to_string(path).map_err(Error::io(path))?)
}

/// Columns `x_1..x_d,y,f_star,g_star`.
pub fn write_scenario_csv<W: Write>(sample: &SyntheticSample, out: W) -> Result<()> {
    let data = &sample.dataset;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=data.dim()).map(|k| format!("x_{k}")).collect();
    header.extend(["y", "f_star", "g_star"].map(String::from));
    w.write_record(&header)?;
    for (i, x) in data.rows().enumerate() {
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        row.extend([data.y(i), sample.f_values[i], sample.g_values[i]].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}

/// Writes `rows` under `header`.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush().map_err(Error::io("<csv output>"))?;
    Ok(())
}
