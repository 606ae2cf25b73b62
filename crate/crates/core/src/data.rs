//! Dataset storage, node views and CSV ingestion.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Right-censored survival data with column-major covariates.
///
/// Covariates are finite, times are non-negative and `events[i]` is `true`
/// when the failure of sample `i` was observed (`false` = censored).
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDataset {
    n: usize,
    p: usize,
    /// Column `j` occupies `columns[j * n .. (j + 1) * n]`.
    columns: Vec<f64>,
    times: Vec<f64>,
    events: Vec<bool>,
    feature_names: Vec<String>,
}

impl SurvivalDataset {
    /// Builds a dataset from covariate columns.
    pub fn from_columns(columns: Vec<Vec<f64>>, times: Vec<f64>, events: Vec<bool>) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("x{}", j + 1)).collect();
        Self::from_named_columns(names, columns, times, events)
    }

    pub fn from_named_columns(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        times: Vec<f64>,
        events: Vec<bool>,
    ) -> Result<Self> {
        let n = times.len();
        let p = columns.len();
        if n == 0 {
            return Err(Error::InvalidData("dataset has no samples".into()));
        }
        if p == 0 {
            return Err(Error::InvalidData("dataset has no covariates".into()));
        }
        if events.len() != n {
            return Err(Error::InvalidData(format!(
                "events has length {}, times has length {n}",
                events.len()
            )));
        }
        if feature_names.len() != p {
            return Err(Error::InvalidData("feature name count does not match column count".into()));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidData(format!("time of sample {i} is negative or not finite")));
        }
        let mut flat = Vec::with_capacity(n * p);
        for (j, col) in columns.into_iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidData(format!(
                    "covariate column {j} has length {}, expected {n}",
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("covariate {j} of sample {i} is not finite")));
            }
            flat.extend(col);
        }
        Ok(SurvivalDataset {
            n,
            p,
            columns: flat,
            times,
            events,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.columns[j * self.n + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|j| self.value(i, j)).collect()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn event_count(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    /// Sorted distinct times at which at least one failure was observed.
    pub fn failure_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self
            .times
            .iter()
            .zip(&self.events)
            .filter(|(_, &e)| e)
            .map(|(&t, _)| t)
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// A view over every sample, in dataset order.
    pub fn full_view(&self) -> NodeView<'_> {
        NodeView {
            data: self,
            indices: (0..self.n).collect(),
        }
    }

    /// Copies the given rows into a new dataset, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<SurvivalDataset> {
        let columns = (0..self.p)
            .map(|j| {
                let col = self.column(j);
                indices.iter().map(|&i| col[i]).collect()
            })
            .collect();
        SurvivalDataset::from_named_columns(
            self.feature_names.clone(),
            columns,
            indices.iter().map(|&i| self.times[i]).collect(),
            indices.iter().map(|&i| self.events[i]).collect(),
        )
    }

    /// Row/column counts plus a SHA-256 over the numeric content.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        h.update((self.p as u64).to_le_bytes());
        for v in self.columns.iter().chain(&self.times) {
            h.update(v.to_bits().to_le_bytes());
        }
        for &e in &self.events {
            h.update([e as u8]);
        }
        let digest = h.finalize();
        let mut hash = String::with_capacity(64);
        for b in digest {
            let _ = write!(hash, "{b:02x}");
        }
        Fingerprint {
            rows: self.n,
            cols: self.p,
            hash,
        }
    }

    /// Reads a dataset from a headered CSV file. Every column other than the
    /// time and event columns becomes a covariate, in file order.
    pub fn load_csv(path: impl AsRef<Path>, time_col: &str, event_col: &str) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, time_col, event_col)
    }

    pub fn read_csv<R: std::io::Read>(reader: R, time_col: &str, event_col: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("column '{name}' not found")))
        };
        let time_idx = find(time_col)?;
        let event_idx = find(event_col)?;
        if time_idx == event_idx {
            return Err(Error::Schema("time and event columns must differ".into()));
        }
        let cov_idx: Vec<usize> = (0..headers.len())
            .filter(|&k| k != time_idx && k != event_idx)
            .collect();

        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); cov_idx.len()];
        let mut times = Vec::new();
        let mut events = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let row = r + 1;
            let record = record.map_err(|e| Error::Parse {
                row,
                column: String::new(),
                message: e.to_string(),
            })?;
            if record.len() != headers.len() {
                return Err(Error::Parse {
                    row,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", headers.len(), record.len()),
                });
            }
            let cell = |k: usize| -> Result<f64> {
                let raw = record[k].trim();
                let parse_err = |message: String| Error::Parse {
                    row,
                    column: headers[k].clone(),
                    message,
                };
                if raw.is_empty() {
                    return Err(parse_err("missing value".into()));
                }
                let v: f64 = raw
                    .parse()
                    .map_err(|_| parse_err(format!("'{raw}' is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("'{raw}' is not finite")));
                }
                Ok(v)
            };
            for (c, &k) in cov_idx.iter().enumerate() {
                columns[c].push(cell(k)?);
            }
            let t = cell(time_idx)?;
            if t < 0.0 {
                return Err(Error::Parse {
                    row,
                    column: headers[time_idx].clone(),
                    message: "time must be non-negative".into(),
                });
            }
            times.push(t);
            let e = match record[event_idx].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        row,
                        column: headers[event_idx].clone(),
                        message: format!("event must be 0 or 1, found '{other}'"),
                    })
                }
            };
            events.push(e);
        }
        let names = cov_idx.iter().map(|&k| headers[k].clone()).collect();
        Self::from_named_columns(names, columns, times, events)
    }

    /// Serializes covariates (in order) followed by the time and event columns.
    /// Reals use the shortest representation that parses back to the same bits.
    pub fn to_csv_string(&self, time_col: &str, event_col: &str) -> String {
        let mut out = String::new();
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(time_col);
        header.push(event_col);
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.n {
            for j in 0..self.p {
                let _ = write!(out, "{},", self.value(i, j));
            }
            let _ = writeln!(out, "{},{}", self.times[i], self.events[i] as u8);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, time_col: &str, event_col: &str) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_csv_string(time_col, event_col).as_bytes())
    }
}

/// Identifies the dataset a model was trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub cols: usize,
    pub hash: String,
}

/// Dense per-feature ranks of every row (equal values share a rank), so that
/// node-level sorts compare packed integers instead of floats.
#[derive(Debug, Clone)]
pub struct RankTable {
    ranks: Vec<Vec<u32>>,
}

impl RankTable {
    pub fn new(data: &SurvivalDataset) -> Result<Self> {
        if data.n() > u32::MAX as usize {
            return Err(Error::InvalidData(format!("{} rows exceed the rank table limit", data.n())));
        }
        let ranks = (0..data.p())
            .map(|f| {
                let col = data.column(f);
                let mut order: Vec<u32> = (0..col.len() as u32).collect();
                order.sort_unstable_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                let mut ranks = vec![0u32; col.len()];
                let mut rank = 0u32;
                for k in 1..order.len() {
                    if col[order[k] as usize].total_cmp(&col[order[k - 1] as usize]).is_ne() {
                        rank += 1;
                    }
                    ranks[order[k] as usize] = rank;
                }
                ranks
            })
            .collect();
        Ok(RankTable { ranks })
    }

    pub fn rank(&self, feature: usize, row: usize) -> u32 {
        self.ranks[feature][row]
    }
}

/// A subset of dataset rows that forms one tree node.
#[derive(Debug, Clone)]
pub struct NodeView<'a> {
    data: &'a SurvivalDataset,
    indices: Vec<usize>,
}

impl<'a> NodeView<'a> {
    /// Fails if an index is out of bounds or repeated.
    pub fn new(data: &'a SurvivalDataset, indices: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; data.n()];
        for &i in &indices {
            if i >= data.n() {
                return Err(Error::Usage(format!("sample index {i} out of bounds (n = {})", data.n())));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Usage(format!("sample index {i} repeated")));
            }
        }
        Ok(NodeView { data, indices })
    }

    pub(crate) fn new_unchecked(data: &'a SurvivalDataset, indices: Vec<usize>) -> Self {
        NodeView { data, indices }
    }

    pub fn data(&self) -> &'a SurvivalDataset {
        self.data
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn materialize(&self) -> Result<SurvivalDataset> {
        self.data.subset(&self.indices)
    }

    /// `(value, node position)` pairs for one feature, sorted by value and
    /// then by position so ties are ordered deterministically.
    pub fn sorted_feature(&self, feature: usize) -> Vec<(f64, usize)> {
        let col = self.data.column(feature);
        let mut out: Vec<(f64, usize)> = self
            .indices
            .iter()
            .enumerate()
            .map(|(pos, &i)| (col[i], pos))
            .collect();
        out.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Same result as [`NodeView::sorted_feature`], sorting packed
    /// `(rank, position)` keys. `table` must be built from this view's dataset.
    pub fn sorted_feature_ranked(&self, feature: usize, table: &RankTable) -> Vec<(f64, usize)> {
        let col = self.data.column(feature);
        let ranks = &table.ranks[feature];
        let mut keys: Vec<u64> = self
            .indices
            .iter()
            .enumerate()
            .map(|(pos, &i)| (u64::from(ranks[i]) << 32) | pos as u64)
            .collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|k| {
                let pos = (k & 0xffff_ffff) as usize;
                (col[self.indices[pos]], pos)
            })
            .collect()
    }
}

/// The best split found on one feature of a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub feature: usize,
    /// Samples with `x[feature] <= threshold` go left.
    pub threshold: f64,
    /// Squared criterion value, exact or approximate depending on the scanner.
    pub criterion_sq: f64,
    pub n_left: usize,
}
