//! Canonical on-disk dataset: schema plus records, versioned JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::schema::AttributeSchema;

pub const DATASET_FORMAT: &str = "conjointnet-dataset";
pub const DATASET_VERSION: u32 = 1;

/// How a record's label relates to its options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Two options; `y = 1` means option 0 was chosen.
    Pairwise,
    /// The label is a property of the whole record (e.g. "intervened").
    SingleVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub respondent: String,
    /// Level indices under the dataset schema, one entry per option.
    pub options: Vec<Vec<usize>>,
    /// Optional numeric encoding of the whole record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric: Option<Vec<f64>>,
    /// Respondent attributes as level indices under `context_schema`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<u32>,
    pub y: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    /// Best achievable accuracy under the generating rule (synthetic data).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes_accuracy: Option<f64>,
    /// Whether `bayes_accuracy` was computed exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes_exact: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Generating partworths, for linear synthetic data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_partworths: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub task: Task,
    pub schema: AttributeSchema,
    /// Display names of the option slots (e.g. `int`, `noint`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_schema: Option<AttributeSchema>,
    pub records: Vec<Record>,
    #[serde(default)]
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(name: impl Into<String>, task: Task, schema: AttributeSchema, records: Vec<Record>) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            name: name.into(),
            task,
            schema,
            option_names: None,
            numeric_names: None,
            context_schema: None,
            records,
            meta: DatasetMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_options(&self) -> usize {
        self.records.first().map_or(0, |r| r.options.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != DATASET_FORMAT {
            return Err(Error::Data(format!("not a dataset file (format '{}')", self.format)));
        }
        if self.version != DATASET_VERSION {
            return Err(Error::Data(format!("unsupported dataset version {}", self.version)));
        }
        self.schema.validate()?;
        let n_opt = self.num_options();
        if self.task == Task::Pairwise && n_opt != 2 && !self.records.is_empty() {
            return Err(Error::Data(format!("pairwise dataset records have {n_opt} options")));
        }
        let numeric_width = self.numeric_names.as_ref().map(Vec::len);
        for r in &self.records {
            if r.options.len() != n_opt {
                return Err(Error::Data(format!("record {} has {} options, expected {n_opt}", r.id, r.options.len())));
            }
            for o in &r.options {
                self.schema.check_levels(o).map_err(|e| Error::Data(format!("record {}: {e}", r.id)))?;
            }
            if r.y > 1 {
                return Err(Error::Data(format!("record {} has target {}", r.id, r.y)));
            }
            match (&r.numeric, numeric_width) {
                (Some(v), Some(w)) if v.len() != w => {
                    return Err(Error::Data(format!("record {} numeric width {} != {w}", r.id, v.len())));
                }
                (Some(_), None) => {
                    return Err(Error::Data(format!("record {} has numeric features but dataset declares none", r.id)));
                }
                _ => {}
            }
            if let (Some(c), Some(cs)) = (&r.context, &self.context_schema) {
                cs.check_levels(c).map_err(|e| Error::Data(format!("record {}: {e}", r.id)))?;
            }
        }
        Ok(())
    }

    pub fn targets(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| f64::from(self.records[i].y)).collect()
    }

    /// One-hot matrix of option `opt` for the selected records.
    pub fn option_matrix(&self, idx: &[usize], opt: usize) -> Result<Matrix> {
        self.schema
            .encode_batch(idx.iter().map(|&i| self.records[i].options[opt].as_slice()))
    }

    pub fn numeric_matrix(&self, idx: &[usize]) -> Result<Matrix> {
        let w = self
            .numeric_names
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("dataset '{}' has no numeric features", self.name)))?
            .len();
        let mut data = Vec::with_capacity(idx.len() * w);
        for &i in idx {
            let r = &self.records[i];
            let v = r
                .numeric
                .as_ref()
                .ok_or_else(|| Error::Data(format!("record {} lacks numeric features", r.id)))?;
            data.extend_from_slice(v);
        }
        Matrix::from_vec(idx.len(), w, data)
    }

    pub fn context_matrix(&self, idx: &[usize]) -> Result<Matrix> {
        let cs = self
            .context_schema
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("dataset '{}' has no respondent attributes", self.name)))?;
        let mut rows = Vec::with_capacity(idx.len());
        for &i in idx {
            let r = &self.records[i];
            rows.push(
                r.context
                    .as_deref()
                    .ok_or_else(|| Error::Data(format!("record {} lacks respondent attributes", r.id)))?,
            );
        }
        cs.encode_batch(rows)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer(&mut w, self)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let ds: Dataset = serde_json::from_reader(BufReader::new(f))?;
        ds.validate()?;
        Ok(ds)
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String> {
    use std::io::Read;
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
