use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numcore::seeded_rng;

pub const TEST_FRACTION: f64 = 0.3;
pub const VAL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    pub by_respondent: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { seed: 0, test_fraction: TEST_FRACTION, val_fraction: VAL_FRACTION, by_respondent: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub spec: SplitSpec,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffles units and carves the test then validation portions off the
/// front. Sizes are `floor(fraction * n)`; the remainder stays in train.
fn carve(mut units: Vec<Vec<usize>>, spec: &SplitSpec, n: usize) -> DatasetSplit {
    let mut rng = seeded_rng(spec.seed);
    units.shuffle(&mut rng);
    let n_test = (spec.test_fraction * n as f64).floor() as usize;
    let n_val = (spec.val_fraction * (n - n_test) as f64).floor() as usize;

    let mut test = Vec::new();
    let mut validation = Vec::new();
    let mut train = Vec::new();
    for u in units {
        if test.len() < n_test {
            test.extend(u);
        } else if validation.len() < n_val {
            validation.extend(u);
        } else {
            train.extend(u);
        }
    }
    test.sort_unstable();
    validation.sort_unstable();
    train.sort_unstable();
    DatasetSplit { train, validation, test, spec: *spec }
}

/// 70/30 train/test with 10% of train held out for validation. With
/// `by_respondent`, whole respondents are assigned to one partition (sizes
/// are then approximate).
pub fn split_indices(respondents: &[&str], spec: &SplitSpec) -> Result<DatasetSplit> {
    let n = respondents.len();
    if n < 3 {
        return Err(Error::Validation(format!("cannot split {n} records; at least 3 are needed")));
    }
    if !(0.0..1.0).contains(&spec.test_fraction) || !(0.0..1.0).contains(&spec.val_fraction) {
        return Err(Error::Validation("split fractions must lie in [0, 1)".into()));
    }
    let units = if spec.by_respondent {
        let mut order: Vec<&str> = Vec::new();
        let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, r) in respondents.iter().enumerate() {
            groups
                .entry(r)
                .or_insert_with(|| {
                    order.push(r);
                    Vec::new()
                })
                .push(i);
        }
        order.into_iter().map(|r| groups.remove(r).expect("grouped")).collect()
    } else {
        (0..n).map(|i| vec![i]).collect()
    };
    Ok(carve(units, spec, n))
}

pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<DatasetSplit> {
    let resp: Vec<&str> = ds.records.iter().map(|r| r.respondent.as_str()).collect();
    split_indices(&resp, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{}", i % 13)).collect()
    }

    #[test]
    fn hundred_records_sizes() {
        let r = ids(100);
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        let s = split_indices(&refs, &SplitSpec { seed: 7, ..Default::default() }).unwrap();
        assert_eq!((s.test.len(), s.validation.len(), s.train.len()), (30, 7, 63));
        let all: HashSet<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        assert_eq!(all.len(), 100);
    }

    #[test]
    fn same_seed_same_split() {
        let r = ids(50);
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        let spec = SplitSpec { seed: 3, ..Default::default() };
        assert_eq!(split_indices(&refs, &spec).unwrap(), split_indices(&refs, &spec).unwrap());
        let other = split_indices(&refs, &SplitSpec { seed: 4, ..Default::default() }).unwrap();
        assert_ne!(split_indices(&refs, &spec).unwrap().test, other.test);
    }

    #[test]
    fn by_respondent_never_splits_a_user() {
        let r = ids(200);
        let refs: Vec<&str> = r.iter().map(String::as_str).collect();
        let s = split_indices(&refs, &SplitSpec { seed: 1, by_respondent: true, ..Default::default() }).unwrap();
        let users = |v: &[usize]| v.iter().map(|&i| refs[i]).collect::<HashSet<_>>();
        let (a, b, c) = (users(&s.train), users(&s.validation), users(&s.test));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        assert_eq!(s.len(), 200);
    }

    #[test]
    fn too_few_records() {
        assert!(split_indices(&["a", "b"], &SplitSpec::default()).is_err());
    }
}
