//! Model inputs derived from a dataset.

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::schema::{Attribute, AttributeSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Concatenated per-attribute one-hot blocks of each option.
    #[default]
    OneHot,
    /// The record's numeric vector, treated as a single option.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub input: InputKind,
    /// Append the respondent's one-hot attributes to every option.
    pub include_context: bool,
}

/// Per-option input matrices (rows aligned with `y`).
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub options: Vec<Matrix>,
    pub y: Vec<f64>,
}

impl Features {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// All options side by side, option 0 first.
    pub fn concat(&self) -> Result<Matrix> {
        let refs: Vec<&Matrix> = self.options.iter().collect();
        Matrix::hcat(&refs)
    }

    pub fn option_width(&self) -> usize {
        self.options.first().map_or(0, Matrix::cols)
    }

    pub fn select(&self, idx: &[usize]) -> Features {
        Features {
            options: self.options.iter().map(|m| m.select_rows(idx)).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

pub fn featurize(ds: &Dataset, idx: &[usize], spec: &FeatureSpec) -> Result<Features> {
    let mut options = match spec.input {
        InputKind::OneHot => (0..ds.num_options())
            .map(|o| ds.option_matrix(idx, o))
            .collect::<Result<Vec<_>>>()?,
        InputKind::Numeric => vec![ds.numeric_matrix(idx)?],
    };
    if spec.include_context {
        let ctx = ds.context_matrix(idx)?;
        for m in &mut options {
            *m = Matrix::hcat(&[m, &ctx])?;
        }
    }
    Ok(Features { options, y: ds.targets(idx) })
}

/// Attribute layout of one option's input columns, when it is categorical.
pub fn option_schema(ds: &Dataset, spec: &FeatureSpec) -> Result<Option<AttributeSchema>> {
    if spec.input == InputKind::Numeric {
        return Ok(None);
    }
    let mut attrs = ds.schema.attributes.clone();
    if spec.include_context {
        let cs = ds
            .context_schema
            .as_ref()
            .ok_or_else(|| Error::Validation(format!("dataset '{}' has no respondent attributes", ds.name)))?;
        attrs.extend(cs.attributes.iter().map(|a| Attribute { name: format!("user.{}", a.name), levels: a.levels.clone() }));
    }
    AttributeSchema::new(attrs).map(Some)
}

/// Layout of all options side by side, attribute names prefixed by option.
pub fn concat_schema(ds: &Dataset, spec: &FeatureSpec) -> Result<Option<AttributeSchema>> {
    let Some(one) = option_schema(ds, spec)? else {
        return Ok(None);
    };
    let n = ds.num_options();
    if n == 1 {
        return Ok(Some(one));
    }
    let names: Vec<String> = match &ds.option_names {
        Some(v) if v.len() == n => v.clone(),
        _ => (0..n).map(|i| format!("option{i}")).collect(),
    };
    let attrs = names
        .iter()
        .flat_map(|o| {
            one.attributes.iter().map(move |a| Attribute { name: format!("{o}.{}", a.name), levels: a.levels.clone() })
        })
        .collect();
    AttributeSchema::new(attrs).map(Some)
}
