//! Synthetic datasets with known generating rules.

use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Record, Task};
use crate::error::{Error, Result};
use crate::linear_conjoint::{utility_of_levels, PartworthTable};
use crate::numcore::{seeded_rng, sigmoid, Rng};
use crate::schema::{Attribute, AttributeSchema};

/// Above this many item pairs the Bayes accuracy is estimated by sampling.
const EXACT_PAIR_LIMIT: u128 = 10_000_000;
const MC_BAYES_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Xor,
    Threshold,
}

/// Schema file: `{"attributes": [{"name", "levels"}...], "partworths": [[..]..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFile {
    pub attributes: Vec<Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partworths: Option<Vec<Vec<f64>>>,
}

impl SchemaFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: SchemaFile = serde_json::from_str(&text)?;
        f.schema()?;
        Ok(f)
    }

    pub fn schema(&self) -> Result<AttributeSchema> {
        AttributeSchema::new(self.attributes.clone())
    }

    pub fn partworths(&self) -> Result<Option<PartworthTable>> {
        self.partworths
            .clone()
            .map(|v| PartworthTable::new(self.schema()?, v))
            .transpose()
    }
}

pub fn random_levels(schema: &AttributeSchema, rng: &mut Rng) -> Vec<usize> {
    schema.level_counts().into_iter().map(|k| rng.random_range(0..k)).collect()
}

/// Partworths drawn uniformly from `[-scale, scale]`.
pub fn random_partworths(schema: &AttributeSchema, scale: f64, rng: &mut Rng) -> PartworthTable {
    let values = schema
        .level_counts()
        .into_iter()
        .map(|k| (0..k).map(|_| rng.random_range(-scale..=scale)).collect())
        .collect();
    PartworthTable::new(schema.clone(), values).expect("layout follows schema")
}

/// Best achievable accuracy on pairs drawn uniformly from the schema:
/// `E[max(p, 1 - p)]` with `p = σ(U*(a) - U*(b))`. Returns `(value, exact)`.
pub fn linear_bayes_accuracy(w: &PartworthTable, seed: u64) -> (f64, bool) {
    let n_items = w.schema.num_items();
    if n_items.saturating_mul(n_items) <= EXACT_PAIR_LIMIT {
        let utils: Vec<f64> = w.schema.enumerate_levels().iter().map(|l| utility_of_levels(w, l)).collect();
        let mut acc = 0.0;
        for &ua in &utils {
            for &ub in &utils {
                let p = sigmoid(ua - ub);
                acc += p.max(1.0 - p);
            }
        }
        (acc / (utils.len() * utils.len()) as f64, true)
    } else {
        let mut rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut acc = 0.0;
        for _ in 0..MC_BAYES_SAMPLES {
            let a = random_levels(&w.schema, &mut rng);
            let b = random_levels(&w.schema, &mut rng);
            let p = sigmoid(utility_of_levels(w, &a) - utility_of_levels(w, &b));
            acc += p.max(1.0 - p);
        }
        (acc / MC_BAYES_SAMPLES as f64, false)
    }
}

/// Pairwise choices with `P(A) = σ(U*(x_A) - U*(x_B))`, items uniform per
/// attribute.
pub fn synth_linear(w: &PartworthTable, n_pairs: usize, seed: u64) -> Dataset {
    let schema = &w.schema;
    let mut rng = seeded_rng(seed);
    let records = (0..n_pairs)
        .map(|i| {
            let a = random_levels(schema, &mut rng);
            let b = random_levels(schema, &mut rng);
            let p = sigmoid(utility_of_levels(w, &a) - utility_of_levels(w, &b));
            let y = u8::from(rng.random::<f64>() < p);
            Record {
                id: i.to_string(),
                respondent: format!("r{}", i % 100),
                options: vec![a, b],
                numeric: None,
                context: None,
                group: None,
                y,
            }
        })
        .collect();
    let mut ds = Dataset::new("synth-linear", Task::Pairwise, schema.clone(), records);
    let (bayes, exact) = linear_bayes_accuracy(w, seed);
    ds.meta.bayes_accuracy = Some(bayes);
    ds.meta.bayes_exact = Some(exact);
    ds.meta.generator = Some("linear".into());
    ds.meta.seed = Some(seed);
    ds.meta.true_partworths = Some(w.values.clone());
    ds
}

fn binary_attributes(schema: &AttributeSchema) -> Vec<usize> {
    schema.level_counts().iter().enumerate().filter(|(_, &k)| k == 2).map(|(i, _)| i).collect()
}

/// The noiseless rule behind `synth_interaction`.
pub fn interaction_rule(schema: &AttributeSchema, kind: InteractionKind) -> Result<impl Fn(&[usize]) -> u8> {
    let counts = schema.level_counts();
    let (xor_pair, thresholds) = match kind {
        InteractionKind::Xor => {
            let bin = binary_attributes(schema);
            if bin.len() < 2 {
                return Err(Error::Validation("XOR data needs at least two binary attributes".into()));
            }
            (Some((bin[0], bin[1])), Vec::new())
        }
        InteractionKind::Threshold => {
            if counts.is_empty() {
                return Err(Error::Validation("threshold data needs at least one attribute".into()));
            }
            (None, counts.iter().map(|k| k / 2).collect())
        }
    };
    Ok(move |levels: &[usize]| match xor_pair {
        Some((i, j)) => u8::from(levels[i] != levels[j]),
        None => u8::from(levels.iter().zip(&thresholds).all(|(l, t)| l >= t)),
    })
}

/// Single-item records labelled by a non-additive rule, flipped with
/// probability `noise`.
///
/// * XOR: parity of the first two binary attributes; other attributes are
///   irrelevant.
/// * Threshold: `y = 1` iff every attribute sits at or above its middle
///   level (`level >= k_i / 2`), a non-compensatory rule.
pub fn synth_interaction(
    schema: &AttributeSchema,
    kind: InteractionKind,
    n: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(0.0..=0.5).contains(&noise) {
        return Err(Error::Validation(format!("label noise {noise} outside [0, 0.5]")));
    }
    let rule = interaction_rule(schema, kind)?;
    let mut rng = seeded_rng(seed);
    let records = (0..n)
        .map(|i| {
            let l = random_levels(schema, &mut rng);
            let clean = rule(&l);
            let flip = rng.random::<f64>() < noise;
            Record {
                id: i.to_string(),
                respondent: format!("r{}", i % 100),
                options: vec![l],
                numeric: None,
                context: None,
                group: None,
                y: if flip { 1 - clean } else { clean },
            }
        })
        .collect();
    let name = match kind {
        InteractionKind::Xor => "xor",
        InteractionKind::Threshold => "threshold",
    };
    let mut ds = Dataset::new(format!("synth-{name}"), Task::SingleVector, schema.clone(), records);
    ds.meta.bayes_accuracy = Some(1.0 - noise);
    ds.meta.bayes_exact = Some(true);
    ds.meta.generator = Some(name.into());
    ds.meta.seed = Some(seed);
    Ok(ds)
}

/// Items scattered around `n_clusters` random prototypes: each attribute
/// keeps the prototype level except with probability `resample`, when it is
/// drawn uniformly. `group` holds the cluster and `y` its parity.
pub fn synth_clustered(
    schema: &AttributeSchema,
    n_clusters: usize,
    n: usize,
    resample: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_clusters == 0 {
        return Err(Error::Validation("need at least one cluster".into()));
    }
    let mut rng = seeded_rng(seed);
    let protos: Vec<Vec<usize>> = (0..n_clusters).map(|_| random_levels(schema, &mut rng)).collect();
    let counts = schema.level_counts();
    let records = (0..n)
        .map(|i| {
            let c = rng.random_range(0..n_clusters);
            let levels = protos[c]
                .iter()
                .zip(&counts)
                .map(|(&p, &k)| if rng.random::<f64>() < resample { rng.random_range(0..k) } else { p })
                .collect();
            Record {
                id: i.to_string(),
                respondent: format!("r{i}"),
                options: vec![levels],
                numeric: None,
                context: None,
                group: Some(c as u32),
                y: (c % 2) as u8,
            }
        })
        .collect();
    let mut ds = Dataset::new("synth-clustered", Task::SingleVector, schema.clone(), records);
    ds.meta.generator = Some("clustered".into());
    ds.meta.seed = Some(seed);
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> AttributeSchema {
        AttributeSchema::uniform(&[3, 3, 3, 3]).unwrap()
    }

    #[test]
    fn zero_partworths_give_balanced_labels() {
        let w = PartworthTable::zeros(schema());
        let ds = synth_linear(&w, 10_000, 1);
        let ones = ds.records.iter().filter(|r| r.y == 1).count() as f64 / 10_000.0;
        assert!((ones - 0.5).abs() < 0.02, "{ones}");
        assert_eq!(ds.meta.bayes_accuracy, Some(0.5));
    }

    #[test]
    fn large_margin_labels_follow_argmax() {
        let mut rng = seeded_rng(2);
        let mut w = random_partworths(&schema(), 1.0, &mut rng);
        for v in w.values.iter_mut().flatten() {
            *v *= 100.0;
        }
        let ds = synth_linear(&w, 2000, 3);
        let agree = ds
            .records
            .iter()
            .filter(|r| {
                let d = utility_of_levels(&w, &r.options[0]) - utility_of_levels(&w, &r.options[1]);
                d.abs() < 1e-9 || u8::from(d > 0.0) == r.y
            })
            .count();
        assert!(agree >= 1990, "{agree}");
    }

    #[test]
    fn bayes_accuracy_matches_generating_rule() {
        let mut rng = seeded_rng(4);
        let w = random_partworths(&schema(), 1.0, &mut rng);
        let ds = synth_linear(&w, 100_000, 5);
        let (bayes, exact) = linear_bayes_accuracy(&w, 5);
        assert!(exact);
        let correct = ds
            .records
            .iter()
            .filter(|r| {
                let d = utility_of_levels(&w, &r.options[0]) - utility_of_levels(&w, &r.options[1]);
                u8::from(d >= 0.0) == r.y
            })
            .count() as f64
            / 100_000.0;
        assert!((correct - bayes).abs() < 0.01, "{correct} vs {bayes}");
    }

    #[test]
    fn xor_records_bayes_and_needs_binary_attributes() {
        let s = AttributeSchema::uniform(&[2, 2, 3]).unwrap();
        let ds = synth_interaction(&s, InteractionKind::Xor, 1000, 0.05, 1).unwrap();
        assert_eq!(ds.meta.bayes_accuracy, Some(0.95));
        let clean = ds.records.iter().filter(|r| u8::from(r.options[0][0] != r.options[0][1]) == r.y).count();
        assert!((900..=990).contains(&clean), "{clean}");
        assert!(synth_interaction(&schema(), InteractionKind::Xor, 10, 0.0, 1).is_err());
    }

    #[test]
    fn noiseless_threshold_is_a_lookup_table() {
        let s = schema();
        let ds = synth_interaction(&s, InteractionKind::Threshold, 2000, 0.0, 9).unwrap();
        let mut table = std::collections::HashMap::new();
        for r in &ds.records[..1000] {
            table.insert(r.options[0].clone(), r.y);
        }
        let held = &ds.records[1000..];
        let correct = held
            .iter()
            .filter(|r| table.get(&r.options[0]).copied().unwrap_or(0) == r.y)
            .count();
        assert_eq!(correct, held.len());
    }

    #[test]
    fn generators_are_reproducible() {
        let s = AttributeSchema::uniform(&[2, 2, 4]).unwrap();
        let a = synth_interaction(&s, InteractionKind::Xor, 100, 0.1, 11).unwrap();
        let b = synth_interaction(&s, InteractionKind::Xor, 100, 0.1, 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = synth_clustered(&s, 4, 50, 0.1, 2).unwrap();
        assert_eq!(c, synth_clustered(&s, 4, 50, 0.1, 2).unwrap());
    }
}
