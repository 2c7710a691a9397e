//! Additive partworth model: `U(x) = Σ_i Σ_j w_ij x_ij`.
//!
//! Partworths are fitted by penalized binary logit on utility differences,
//! `P(A chosen) = σ(U(x_A) - U(x_B))`, using damped Newton iterations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::linalg::cholesky_solve;
use crate::numcore::{sigmoid, Matrix};
use crate::schema::{argmax, AttributeSchema, ItemVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    Raw,
    EffectsCoded,
}

/// Partworth `w_ij` for every level `j` of every attribute `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartworthTable {
    pub schema: AttributeSchema,
    pub values: Vec<Vec<f64>>,
    pub normalization: Normalization,
}

impl PartworthTable {
    pub fn new(schema: AttributeSchema, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != schema.num_attributes()
            || values
                .iter()
                .zip(schema.level_counts())
                .any(|(v, k)| v.len() != k)
        {
            return Err(Error::Schema("partworth layout does not match schema".into()));
        }
        Ok(Self {
            schema,
            values,
            normalization: Normalization::Raw,
        })
    }

    pub fn zeros(schema: AttributeSchema) -> Self {
        let values = schema.level_counts().into_iter().map(|k| vec![0.0; k]).collect();
        Self {
            schema,
            values,
            normalization: Normalization::Raw,
        }
    }

    /// Unpacks a flat weight vector laid out like the one-hot columns.
    pub fn from_flat(schema: AttributeSchema, flat: &[f64]) -> Result<Self> {
        if flat.len() != schema.width() {
            return Err(Error::Schema(format!(
                "{} weights for schema of width {}",
                flat.len(),
                schema.width()
            )));
        }
        let values = schema
            .offsets()
            .into_iter()
            .zip(schema.level_counts())
            .map(|(o, k)| flat[o..o + k].to_vec())
            .collect();
        Self::new(schema, values)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.concat()
    }
}

/// `Σ_i Σ_j w_ij x_ij`.
pub fn utility(w: &PartworthTable, x: &ItemVector) -> Result<f64> {
    if x.len() != w.schema.width() {
        return Err(Error::Schema(format!(
            "item width {} does not match partworth schema width {}",
            x.len(),
            w.schema.width()
        )));
    }
    Ok(w.flat().iter().zip(x.as_slice()).map(|(a, b)| a * b).sum())
}

/// Utility of an item given by level indices.
pub fn utility_of_levels(w: &PartworthTable, levels: &[usize]) -> f64 {
    w.values.iter().zip(levels).map(|(v, &l)| v[l]).sum()
}

/// Subtracts each attribute's mean level weight.
pub fn effects_code(w: &PartworthTable) -> PartworthTable {
    let values = w
        .values
        .iter()
        .map(|v| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| x - mean).collect()
        })
        .collect();
    PartworthTable {
        schema: w.schema.clone(),
        values,
        normalization: Normalization::EffectsCoded,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    /// `max_j w_ij - min_j w_ij`.
    #[default]
    Range,
    /// `Σ_j |w_ij|`.
    SumAbs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeImportance {
    pub importance: Vec<f64>,
    pub shares: Vec<f64>,
    /// Set when every importance is zero; shares are then uniform.
    pub degenerate: bool,
}

pub fn attribute_importance(w: &PartworthTable, method: ImportanceMethod) -> AttributeImportance {
    let importance: Vec<f64> = w
        .values
        .iter()
        .map(|v| match method {
            ImportanceMethod::Range => {
                let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
                max - min
            }
            ImportanceMethod::SumAbs => v.iter().map(|x| x.abs()).sum(),
        })
        .collect();
    let total: f64 = importance.iter().sum();
    let m = importance.len() as f64;
    let degenerate = total <= 0.0;
    let shares = if degenerate {
        vec![1.0 / m; importance.len()]
    } else {
        importance.iter().map(|u| u / total).collect()
    };
    AttributeImportance {
        importance,
        shares,
        degenerate,
    }
}

/// Highest-partworth level per attribute; ties go to the lowest level index.
pub fn best_option_levels(w: &PartworthTable) -> Vec<usize> {
    w.values.iter().map(|v| argmax(v)).collect()
}

pub fn best_option(w: &PartworthTable, schema: &AttributeSchema) -> Result<ItemVector> {
    if schema != &w.schema {
        return Err(Error::Schema("best_option: schema does not match partworths".into()));
    }
    schema.encode_levels(&best_option_levels(w))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Weight of the `λ ||w||²` penalty added to the mean negative log-likelihood.
    pub lambda: f64,
    pub max_iter: usize,
    /// Convergence when the largest Newton step component falls below this.
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            max_iter: 100,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub weights: Vec<f64>,
    pub intercept: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub warnings: Vec<String>,
}

impl LogitFit {
    pub fn logits(&self, x: &Matrix) -> Vec<f64> {
        let b = self.intercept.unwrap_or(0.0);
        (0..x.rows())
            .map(|r| b + x.row(r).iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>())
            .collect()
    }
}

/// Per-iteration observer: `(iteration, weights, intercept, objective)`.
pub type IterCallback<'a> = dyn FnMut(usize, &[f64], Option<f64>, f64) + 'a;

fn objective(x: &Matrix, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let mut nll = 0.0;
    for r in 0..x.rows() {
        let s = b + x.row(r).iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        nll += s.max(0.0) + (-s.abs()).exp().ln_1p() - y[r] * s;
    }
    nll / n + lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// Penalized logistic regression on a design matrix by damped Newton.
///
/// Minimizes `mean_n[log(1 + e^{s_n}) - y_n s_n] + λ ||w||²` with
/// `s = X w (+ b)`. The intercept, when present, is unpenalized.
pub fn fit_design(
    x: &Matrix,
    y: &[f64],
    intercept: bool,
    config: &FitConfig,
    mut on_iter: Option<&mut IterCallback<'_>>,
) -> Result<LogitFit> {
    if x.rows() == 0 {
        return Err(Error::Validation("cannot fit on empty data".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} targets", x.rows(), y.len())));
    }
    if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Validation(format!("target {v} not in {{0,1}}")));
    }
    if config.lambda < 0.0 {
        return Err(Error::Validation("lambda must be non-negative".into()));
    }
    let mut warnings = Vec::new();
    if y.iter().all(|&v| v == y[0]) {
        let msg = format!("all targets equal {}; fit is degenerate", y[0]);
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let d = x.cols();
    let p = d + usize::from(intercept);
    let n = y.len() as f64;
    let lambda = config.lambda;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut obj = objective(x, y, &w, b, lambda);
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=config.max_iter {
        iterations = it;
        // gradient and Hessian over [w, b]
        let mut grad = vec![0.0; p];
        let mut hess = Matrix::zeros(p, p);
        let mut row = vec![0.0; p];
        for r in 0..x.rows() {
            row[..d].copy_from_slice(x.row(r));
            if intercept {
                row[d] = 1.0;
            }
            let s = b + x.row(r).iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            let prob = sigmoid(s);
            let resid = prob - y[r];
            let wt = prob * (1.0 - prob);
            for i in 0..p {
                if row[i] == 0.0 {
                    continue;
                }
                grad[i] += resid * row[i];
                let hi = row[i] * wt;
                let hrow = hess.row_mut(i);
                for j in 0..p {
                    hrow[j] += hi * row[j];
                }
            }
        }
        for g in &mut grad {
            *g /= n;
        }
        hess.scale(1.0 / n);
        for i in 0..d {
            grad[i] += 2.0 * lambda * w[i];
            let v = hess.get(i, i) + 2.0 * lambda;
            hess.set(i, i, v);
        }

        // Newton direction; ridge the solve (not the objective) when singular
        let mut jitter = 1e-10;
        let step = loop {
            let mut h = hess.clone();
            for i in 0..p {
                h.set(i, i, h.get(i, i) + jitter);
            }
            if let Some(s) = cholesky_solve(&h, &grad) {
                break s;
            }
            jitter *= 100.0;
            if jitter > 1e6 {
                return Err(Error::Numeric("Newton system could not be solved".into()));
            }
        };

        // backtracking line search on the objective
        let mut t = 1.0;
        let mut accepted = false;
        let (mut w_new, mut b_new, mut obj_new) = (w.clone(), b, obj);
        for _ in 0..40 {
            for i in 0..d {
                w_new[i] = w[i] - t * step[i];
            }
            b_new = if intercept { b - t * step[d] } else { 0.0 };
            obj_new = objective(x, y, &w_new, b_new, lambda);
            if obj_new <= obj {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !obj_new.is_finite() {
            return Err(Error::Numeric(format!("objective diverged at iteration {it}")));
        }
        let max_step = step.iter().fold(0.0f64, |m, s| m.max((t * s).abs()));
        if accepted {
            w = w_new;
            b = b_new;
            obj = obj_new;
        }
        if let Some(cb) = on_iter.as_deref_mut() {
            cb(it, &w, intercept.then_some(b), obj);
        }
        if !accepted || max_step < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("stopped at max_iter = {} before convergence", config.max_iter));
    }
    Ok(LogitFit {
        weights: w,
        intercept: intercept.then_some(b),
        iterations,
        converged,
        objective: obj,
        warnings,
    })
}

/// A labeled choice between two items; `y = 1` means `a` was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoicePair {
    pub a: ItemVector,
    pub b: ItemVector,
    pub y: u8,
}

/// Design matrix of utility differences `x_A - x_B`.
pub fn difference_design(pairs: &[ChoicePair]) -> Result<(Matrix, Vec<f64>)> {
    let w = pairs.first().map_or(0, |p| p.a.len());
    let mut data = Vec::with_capacity(pairs.len() * w);
    let mut y = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        if p.a.len() != w || p.b.len() != w {
            return Err(Error::Shape(format!("pair {i} has inconsistent item widths")));
        }
        data.extend(p.a.as_slice().iter().zip(p.b.as_slice()).map(|(a, b)| a - b));
        y.push(f64::from(p.y));
    }
    Ok((Matrix::from_vec(pairs.len(), w, data)?, y))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjointFit {
    /// Effects-coded partworths.
    pub partworths: PartworthTable,
    pub fit: LogitFit,
}

/// Fits partworths from pairwise choices and returns them effects-coded.
pub fn fit(schema: &AttributeSchema, pairs: &[ChoicePair], config: &FitConfig) -> Result<ConjointFit> {
    if pairs.is_empty() {
        return Err(Error::Validation("cannot fit on empty data".into()));
    }
    let (x, y) = difference_design(pairs)?;
    if x.cols() != schema.width() {
        return Err(Error::Schema("pair width does not match schema".into()));
    }
    let fit = fit_design(&x, &y, false, config, None)?;
    let raw = PartworthTable::from_flat(schema.clone(), &fit.weights)?;
    Ok(ConjointFit {
        partworths: effects_code(&raw),
        fit,
    })
}

/// `P(A chosen over B)`.
pub fn choice_probability(w: &PartworthTable, a: &ItemVector, b: &ItemVector) -> Result<f64> {
    Ok(sigmoid(utility(w, a)? - utility(w, b)?))
}

/// Writes `attribute,level,partworth,importance,importance_share` rows.
pub fn write_partworth_csv(path: &Path, w: &PartworthTable, method: ImportanceMethod) -> Result<()> {
    let imp = attribute_importance(w, method);
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["attribute", "level", "partworth", "importance", "importance_share"])?;
    for (i, attr) in w.schema.attributes.iter().enumerate() {
        for (j, level) in attr.levels.iter().enumerate() {
            out.write_record([
                attr.name.as_str(),
                level.as_str(),
                &w.values[i][j].to_string(),
                &imp.importance[i].to_string(),
                &imp.shares[i].to_string(),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(values: Vec<Vec<f64>>) -> PartworthTable {
        let counts: Vec<usize> = values.iter().map(Vec::len).collect();
        PartworthTable::new(AttributeSchema::uniform(&counts).unwrap(), values).unwrap()
    }

    #[test]
    fn zero_partworths_give_zero_utility() {
        let w = table(vec![vec![0.0; 3], vec![0.0; 2]]);
        let x = w.schema.encode_levels(&[2, 1]).unwrap();
        assert_eq!(utility(&w, &x).unwrap(), 0.0);
    }

    #[test]
    fn single_attribute_utility() {
        let w = table(vec![vec![0.3, -0.3]]);
        let x = w.schema.encode_levels(&[0]).unwrap();
        assert_eq!(utility(&w, &x).unwrap(), 0.3);
    }

    #[test]
    fn utility_schema_mismatch() {
        let w = table(vec![vec![0.3, -0.3]]);
        let other = AttributeSchema::uniform(&[3]).unwrap().encode_levels(&[0]).unwrap();
        assert!(utility(&w, &other).is_err());
    }

    #[test]
    fn importance_range() {
        let w = table(vec![vec![1.0, -0.5, 0.2], vec![0.0, 0.5]]);
        let imp = attribute_importance(&w, ImportanceMethod::Range);
        assert!((imp.importance[0] - 1.5).abs() < 1e-15);
        assert!((imp.shares[0] - 0.75).abs() < 1e-15);
        assert!(!imp.degenerate);
    }

    #[test]
    fn importance_all_zero_is_uniform_and_flagged() {
        let w = table(vec![vec![0.0; 3], vec![0.0; 2]]);
        let imp = attribute_importance(&w, ImportanceMethod::Range);
        assert_eq!(imp.importance, vec![0.0, 0.0]);
        assert_eq!(imp.shares, vec![0.5, 0.5]);
        assert!(imp.degenerate);
    }

    #[test]
    fn best_option_examples() {
        let w = table(vec![vec![0.1, 0.9], vec![-1.0, -2.0]]);
        assert_eq!(best_option_levels(&w), vec![1, 0]);
        let tie = table(vec![vec![0.4, 0.4, 0.4]]);
        assert_eq!(best_option_levels(&tie), vec![0]);
        let x = best_option(&w, &w.schema.clone()).unwrap();
        assert_eq!(x.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn effects_code_examples() {
        let w = table(vec![vec![1.0, 2.0, 3.0]]);
        assert_eq!(effects_code(&w).values, vec![vec![-1.0, 0.0, 1.0]]);
        let z = table(vec![vec![-1.0, 0.0, 1.0]]);
        assert_eq!(effects_code(&z).values, z.values);
    }

    #[test]
    fn fit_rejects_empty() {
        let s = AttributeSchema::uniform(&[2]).unwrap();
        assert!(fit(&s, &[], &FitConfig::default()).is_err());
    }

    #[test]
    fn separable_pair_drives_probability_up() {
        let s = AttributeSchema::uniform(&[3, 2]).unwrap();
        let a = s.encode_levels(&[0, 1]).unwrap();
        let b = s.encode_levels(&[2, 0]).unwrap();
        let pairs = vec![ChoicePair { a: a.clone(), b: b.clone(), y: 1 }; 20];
        let cfg = FitConfig {
            lambda: 0.0,
            ..FitConfig::default()
        };
        let f = fit(&s, &pairs, &cfg).unwrap();
        assert!(choice_probability(&f.partworths, &a, &b).unwrap() > 0.99);
        assert!(!f.fit.warnings.is_empty(), "constant targets must warn");
    }

    #[test]
    fn fit_is_deterministic() {
        let s = AttributeSchema::uniform(&[3, 3]).unwrap();
        let items = s.enumerate_levels();
        let pairs: Vec<ChoicePair> = (0..200)
            .map(|i| ChoicePair {
                a: s.encode_levels(&items[i % 9]).unwrap(),
                b: s.encode_levels(&items[(i * 7 + 3) % 9]).unwrap(),
                y: ((i * 31) % 3 == 0) as u8,
            })
            .collect();
        let a = fit(&s, &pairs, &FitConfig::default()).unwrap();
        let b = fit(&s, &pairs, &FitConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_option_maximizes_over_enumeration() {
        let mut rng = crate::numcore::seeded_rng(11);
        use rand::Rng;
        for counts in [vec![2, 3], vec![4, 4, 2], vec![3, 2, 4, 3]] {
            let values: Vec<Vec<f64>> = counts
                .iter()
                .map(|&k| (0..k).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let w = table(values);
            let best = best_option_levels(&w);
            let u_best = utility_of_levels(&w, &best);
            for item in w.schema.enumerate_levels() {
                assert!(utility_of_levels(&w, &item) <= u_best);
            }
        }
    }

    proptest! {
        #[test]
        fn utility_equals_direct_sum(
            vals in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2..5), 1..5),
            pick in any::<u64>(),
        ) {
            let w = table(vals.clone());
            let levels: Vec<usize> = vals.iter().enumerate()
                .map(|(i, v)| ((pick >> (3 * i)) as usize) % v.len()).collect();
            let x = w.schema.encode_levels(&levels).unwrap();
            let direct: f64 = levels.iter().enumerate().map(|(i, &l)| vals[i][l]).sum();
            prop_assert!((utility(&w, &x).unwrap() - direct).abs() < 1e-12);
        }

        #[test]
        fn effects_coding_preserves_differences_and_argmax(
            vals in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2..5), 1..5),
            shifts in prop::collection::vec(-10.0f64..10.0, 5),
            pick in any::<u64>(),
        ) {
            let w = table(vals.clone());
            let ec = effects_code(&w);
            for v in &ec.values {
                prop_assert!(v.iter().sum::<f64>().abs() < 1e-9);
            }
            let la: Vec<usize> = vals.iter().enumerate().map(|(i, v)| ((pick >> (2 * i)) as usize) % v.len()).collect();
            let lb: Vec<usize> = vals.iter().enumerate().map(|(i, v)| ((pick >> (2 * i + 20)) as usize) % v.len()).collect();
            let d0 = utility_of_levels(&w, &la) - utility_of_levels(&w, &lb);
            let d1 = utility_of_levels(&ec, &la) - utility_of_levels(&ec, &lb);
            prop_assert!((d0 - d1).abs() < 1e-9);
            prop_assert_eq!(best_option_levels(&w), best_option_levels(&ec));

            // per-attribute shifts leave pairwise probabilities and importances unchanged
            let shifted = table(vals.iter().zip(&shifts).map(|(v, c)| v.iter().map(|x| x + c).collect()).collect());
            let d2 = utility_of_levels(&shifted, &la) - utility_of_levels(&shifted, &lb);
            prop_assert!((sigmoid(d0) - sigmoid(d2)).abs() < 1e-9);
            let i0 = attribute_importance(&w, ImportanceMethod::Range);
            let i1 = attribute_importance(&shifted, ImportanceMethod::Range);
            for (a, b) in i0.importance.iter().zip(&i1.importance) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
