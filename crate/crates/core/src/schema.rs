//! Attribute/level layout of survey items and their one-hot encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub levels: Vec<String>,
}

/// `m` attributes with `k_i >= 2` levels each. The one-hot width is `Σ k_i`,
/// with blocks laid out in attribute order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let s = Self { attributes };
        s.validate()?;
        Ok(s)
    }

    /// Convenience constructor with levels named `"0"`, `"1"`, ...
    pub fn uniform(level_counts: &[usize]) -> Result<Self> {
        Self::new(
            level_counts
                .iter()
                .enumerate()
                .map(|(i, &k)| Attribute {
                    name: format!("attr{i}"),
                    levels: (0..k).map(|j| j.to_string()).collect(),
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        for a in &self.attributes {
            if a.levels.len() < 2 {
                return Err(Error::Schema(format!(
                    "attribute '{}' has {} level(s); at least 2 required",
                    a.name,
                    a.levels.len()
                )));
            }
            for (j, l) in a.levels.iter().enumerate() {
                if a.levels[..j].contains(l) {
                    return Err(Error::Schema(format!(
                        "attribute '{}' repeats level '{l}'",
                        a.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.attributes.iter().map(|a| a.levels.len()).collect()
    }

    pub fn width(&self) -> usize {
        self.attributes.iter().map(|a| a.levels.len()).sum()
    }

    /// Start column of each attribute block.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.attributes
            .iter()
            .map(|a| {
                let o = off;
                off += a.levels.len();
                o
            })
            .collect()
    }

    /// `(attribute index, level index)` of every one-hot column.
    pub fn column_labels(&self) -> Vec<(usize, usize)> {
        self.attributes
            .iter()
            .enumerate()
            .flat_map(|(i, a)| (0..a.levels.len()).map(move |j| (i, j)))
            .collect()
    }

    pub fn check_levels(&self, levels: &[usize]) -> Result<()> {
        if levels.len() != self.attributes.len() {
            return Err(Error::Schema(format!(
                "item has {} attributes, schema has {}",
                levels.len(),
                self.attributes.len()
            )));
        }
        for (a, &l) in self.attributes.iter().zip(levels) {
            if l >= a.levels.len() {
                return Err(Error::Schema(format!(
                    "level index {l} out of range for attribute '{}' ({} levels)",
                    a.name,
                    a.levels.len()
                )));
            }
        }
        Ok(())
    }

    pub fn encode_levels(&self, levels: &[usize]) -> Result<ItemVector> {
        self.check_levels(levels)?;
        let mut v = vec![0.0; self.width()];
        for (off, &l) in self.offsets().iter().zip(levels) {
            v[off + l] = 1.0;
        }
        Ok(ItemVector(v))
    }

    /// Looks up each raw value among its attribute's level names.
    pub fn levels_of(&self, raw: &[&str]) -> Result<Vec<usize>> {
        if raw.len() != self.attributes.len() {
            return Err(Error::Schema(format!(
                "record has {} values, schema has {} attributes",
                raw.len(),
                self.attributes.len()
            )));
        }
        self.attributes
            .iter()
            .zip(raw)
            .map(|(a, v)| {
                a.levels.iter().position(|l| l == v).ok_or_else(|| {
                    Error::Schema(format!("unseen level '{v}' for attribute '{}'", a.name))
                })
            })
            .collect()
    }

    pub fn one_hot(&self, raw: &[&str]) -> Result<ItemVector> {
        self.encode_levels(&self.levels_of(raw)?)
    }

    pub fn decode(&self, x: &ItemVector) -> Result<Vec<String>> {
        Ok(self
            .levels_from_vector(x)?
            .into_iter()
            .zip(&self.attributes)
            .map(|(l, a)| a.levels[l].clone())
            .collect())
    }

    pub fn levels_from_vector(&self, x: &ItemVector) -> Result<Vec<usize>> {
        if x.0.len() != self.width() {
            return Err(Error::Schema(format!(
                "item width {} does not match schema width {}",
                x.0.len(),
                self.width()
            )));
        }
        self.attributes
            .iter()
            .zip(self.offsets())
            .map(|(a, off)| {
                let block = &x.0[off..off + a.levels.len()];
                let ones: Vec<usize> = block
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 1.0)
                    .map(|(j, _)| j)
                    .collect();
                match (ones.as_slice(), block.iter().all(|&v| v == 0.0 || v == 1.0)) {
                    ([j], true) => Ok(*j),
                    _ => Err(Error::Schema(format!(
                        "attribute '{}' block is not one-hot",
                        a.name
                    ))),
                }
            })
            .collect()
    }

    /// Per-attribute argmax of an arbitrary real vector (e.g. a reconstruction).
    pub fn argmax_levels(&self, x: &[f64]) -> Vec<usize> {
        self.attributes
            .iter()
            .zip(self.offsets())
            .map(|(a, off)| argmax(&x[off..off + a.levels.len()]))
            .collect()
    }

    pub fn num_items(&self) -> u128 {
        self.attributes.iter().map(|a| a.levels.len() as u128).product()
    }

    /// Every item of the schema in lexicographic level order.
    pub fn enumerate_levels(&self) -> Vec<Vec<usize>> {
        let counts = self.level_counts();
        let mut out = vec![Vec::new()];
        for k in counts {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..k).map(move |l| {
                        let mut p = prefix.clone();
                        p.push(l);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Stacks the one-hot encodings of several items into a matrix.
    pub fn encode_batch<'a>(&self, items: impl IntoIterator<Item = &'a [usize]>) -> Result<Matrix> {
        let w = self.width();
        let offs = self.offsets();
        let mut data = Vec::new();
        let mut rows = 0;
        for levels in items {
            self.check_levels(levels)?;
            let start = data.len();
            data.resize(start + w, 0.0);
            for (off, &l) in offs.iter().zip(levels) {
                data[start + off + l] = 1.0;
            }
            rows += 1;
        }
        Matrix::from_vec(rows, w, data)
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// One-hot encoding of an item: exactly one active level per attribute block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemVector(Vec<f64>);

impl ItemVector {
    pub fn from_dense(schema: &AttributeSchema, values: Vec<f64>) -> Result<Self> {
        let x = ItemVector(values);
        schema.levels_from_vector(&x)?;
        Ok(x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_row(&self) -> Matrix {
        Matrix::from_vec(1, self.0.len(), self.0.clone()).expect("row")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema() -> AttributeSchema {
        AttributeSchema::new(vec![
            Attribute {
                name: "size".into(),
                levels: vec!["small".into(), "medium".into(), "large".into()],
            },
            Attribute {
                name: "count".into(),
                levels: (0..6).map(|i| i.to_string()).collect(),
            },
        ])
        .unwrap()
    }

    #[test]
    fn one_hot_blocks() {
        let s = schema();
        let x = s.one_hot(&["medium", "5"]).unwrap();
        assert_eq!(&x.as_slice()[..3], &[0.0, 1.0, 0.0]);
        assert_eq!(&x.as_slice()[3..], &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(s.decode(&x).unwrap(), vec!["medium", "5"]);
    }

    #[test]
    fn unseen_level_names_attribute_and_value() {
        let err = schema().one_hot(&["huge", "1"]).unwrap_err().to_string();
        assert!(err.contains("huge") && err.contains("size"), "{err}");
    }

    #[test]
    fn single_level_attribute_rejected() {
        assert!(AttributeSchema::uniform(&[3, 1]).is_err());
    }

    #[test]
    fn not_one_hot_rejected() {
        let s = AttributeSchema::uniform(&[2, 2]).unwrap();
        assert!(ItemVector::from_dense(&s, vec![1.0, 1.0, 0.0, 1.0]).is_err());
        assert!(ItemVector::from_dense(&s, vec![0.0, 1.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn enumerate_counts() {
        let s = AttributeSchema::uniform(&[2, 3, 4]).unwrap();
        let all = s.enumerate_levels();
        assert_eq!(all.len() as u128, s.num_items());
        assert_eq!(all[0], vec![0, 0, 0]);
        assert_eq!(all[23], vec![1, 2, 3]);
    }

    proptest! {
        #[test]
        fn one_hot_has_one_active_level_per_attribute_and_round_trips(
            counts in prop::collection::vec(2usize..6, 1..6),
            seed in any::<u64>(),
        ) {
            let s = AttributeSchema::uniform(&counts).unwrap();
            let levels: Vec<usize> = counts
                .iter()
                .enumerate()
                .map(|(i, &k)| ((seed >> (i * 7)) as usize) % k)
                .collect();
            let x = s.encode_levels(&levels).unwrap();
            prop_assert_eq!(x.as_slice().iter().sum::<f64>() as usize, counts.len());
            prop_assert_eq!(s.levels_from_vector(&x).unwrap(), levels);
        }
    }
}
