//! Car Preference ingestion.
//!
//! Two input layouts are accepted per experiment:
//!
//! * a flat CSV with one comparison per row:
//!   `user_id, education, age, gender, region, a_body_type, a_transmission,
//!   a_engine_capacity, a_fuel_consumed, [a_layout], b_..., chosen` where
//!   `chosen = 1` means car A was preferred;
//! * a directory holding the release's `users*.csv`, `items*.csv` and
//!   `prefs*.csv` tables (`prefs` rows name the preferred item first; control
//!   questions are dropped). Pairs are re-ordered so the lower item id is
//!   option A, which makes both target values occur.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Record, Task};
use crate::error::{Error, Result};
use crate::schema::{Attribute, AttributeSchema};

pub const USER_ATTRIBUTES: [&str; 4] = ["education", "age", "gender", "region"];
pub const CAR_ATTRIBUTES: [&str; 5] = ["body_type", "transmission", "engine_capacity", "fuel_consumed", "layout"];
pub const EXP1_COMPARISONS: usize = 2700;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarChoiceRecord {
    pub user_id: String,
    /// Education, Age, Gender, Region as canonical strings.
    pub user_attrs: Vec<String>,
    /// Canonical level names in `CAR_ATTRIBUTES` order; four entries for
    /// experiment 1, five for experiment 2.
    pub car_a: Vec<String>,
    pub car_b: Vec<String>,
    pub chosen: u8,
    pub experiment: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CarLoadStats {
    pub rows_read: usize,
    pub malformed: Vec<(u64, String)>,
    pub control_dropped: usize,
    pub records: usize,
    pub chosen_a: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CarData {
    pub exp1: Vec<CarChoiceRecord>,
    pub exp2: Vec<CarChoiceRecord>,
    pub stats1: CarLoadStats,
    pub stats2: CarLoadStats,
}

fn norm(s: &str) -> String {
    s.chars().filter(|c| c.is_ascii_alphanumeric()).flat_map(char::to_lowercase).collect()
}

fn canon_body(v: &str) -> Option<&'static str> {
    match norm(v).as_str() {
        "1" | "sedan" => Some("sedan"),
        "2" | "suv" => Some("suv"),
        _ => None,
    }
}

fn canon_transmission(v: &str) -> Option<&'static str> {
    match norm(v).as_str() {
        "1" | "manual" => Some("manual"),
        "2" | "automatic" | "auto" => Some("automatic"),
        _ => None,
    }
}

fn canon_fuel(v: &str) -> Option<&'static str> {
    match norm(v).as_str() {
        "1" | "hybrid" => Some("hybrid"),
        "2" | "nonhybrid" => Some("non-hybrid"),
        _ => None,
    }
}

fn canon_layout(v: &str) -> Option<&'static str> {
    match norm(v).as_str() {
        "1" | "front" | "fwd" => Some("front"),
        "2" | "rear" | "rwd" => Some("rear"),
        _ => None,
    }
}

fn canon_engine(v: &str) -> Option<String> {
    let x: f64 = v.trim().parse().ok()?;
    // litres; anything else is a shifted column
    (x > 0.5 && x < 10.0).then(|| format!("{x:.1}"))
}

fn canon_car(values: &[&str]) -> std::result::Result<Vec<String>, String> {
    let mut out = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let c = match i {
            0 => canon_body(v).map(String::from),
            1 => canon_transmission(v).map(String::from),
            2 => canon_engine(v),
            3 => canon_fuel(v).map(String::from),
            _ => canon_layout(v).map(String::from),
        };
        out.push(c.ok_or_else(|| format!("{}='{}' is not a valid value", CAR_ATTRIBUTES[i], v.trim()))?);
    }
    Ok(out)
}

fn canon_user_attr(v: &str) -> std::result::Result<String, String> {
    let t = v.trim();
    if t.is_empty() {
        return Err("empty user attribute".into());
    }
    Ok(t.to_string())
}

fn parse_chosen(v: &str) -> std::result::Result<u8, String> {
    match v.trim() {
        "1" => Ok(1),
        "0" => Ok(0),
        other => Err(format!("chosen='{other}' is not 0 or 1")),
    }
}

fn header_index(headers: &csv::StringRecord, wanted: &[&str]) -> Result<Vec<usize>> {
    let normed: Vec<String> = headers.iter().map(norm).collect();
    let mut idx = Vec::with_capacity(wanted.len());
    let mut missing = Vec::new();
    for w in wanted {
        match normed.iter().position(|h| *h == norm(w)) {
            Some(i) => idx.push(i),
            None => missing.push(*w),
        }
    }
    if missing.is_empty() {
        Ok(idx)
    } else {
        Err(Error::Schema(format!("car file is missing columns: {}", missing.join(", "))))
    }
}

fn flat_columns(with_layout: bool) -> Vec<String> {
    let n_car = if with_layout { 5 } else { 4 };
    let mut cols = vec!["user_id".to_string()];
    cols.extend(USER_ATTRIBUTES.iter().map(|s| s.to_string()));
    for side in ["a", "b"] {
        cols.extend(CAR_ATTRIBUTES[..n_car].iter().map(|a| format!("{side}_{a}")));
    }
    cols.push("chosen".into());
    cols
}

fn load_flat(path: &Path, experiment: u8) -> Result<(Vec<CarChoiceRecord>, CarLoadStats)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let with_layout = experiment == 2;
    let cols = flat_columns(with_layout);
    let want: Vec<&str> = cols.iter().map(String::as_str).collect();
    let idx = header_index(&headers, &want)?;
    let n_car = if with_layout { 5 } else { 4 };

    let mut stats = CarLoadStats::default();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        stats.rows_read += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                stats.malformed.push((line, e.to_string()));
                continue;
            }
        };
        let get = |k: usize| rec.get(idx[k]).unwrap_or("");
        let parsed = (|| -> std::result::Result<CarChoiceRecord, String> {
            let user_id = get(0).trim().to_string();
            if user_id.is_empty() {
                return Err("empty user_id".into());
            }
            let user_attrs = (1..5).map(|k| canon_user_attr(get(k))).collect::<std::result::Result<_, _>>()?;
            let a: Vec<&str> = (5..5 + n_car).map(get).collect();
            let b: Vec<&str> = (5 + n_car..5 + 2 * n_car).map(get).collect();
            Ok(CarChoiceRecord {
                user_id,
                user_attrs,
                car_a: canon_car(&a)?,
                car_b: canon_car(&b)?,
                chosen: parse_chosen(get(5 + 2 * n_car))?,
                experiment,
            })
        })();
        match parsed {
            Ok(r) => out.push(r),
            Err(reason) => stats.malformed.push((line, reason)),
        }
    }
    Ok((out, stats))
}

fn find_table(dir: &Path, prefix: &str) -> Result<PathBuf> {
    let mut hits: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.to_ascii_lowercase().starts_with(prefix) && n.to_ascii_lowercase().ends_with(".csv"))
        })
        .collect();
    hits.sort();
    match hits.len() {
        1 => Ok(hits.pop().expect("one hit")),
        0 => Err(Error::Data(format!("no {prefix}*.csv in {}", dir.display()))),
        _ => Err(Error::Data(format!("several {prefix}*.csv files in {}", dir.display()))),
    }
}

fn load_release_dir(dir: &Path, experiment: u8) -> Result<(Vec<CarChoiceRecord>, CarLoadStats)> {
    let mut stats = CarLoadStats::default();

    let users_path = find_table(dir, "users")?;
    let mut users: HashMap<String, Vec<String>> = HashMap::new();
    let mut rdr = csv::Reader::from_path(&users_path)?;
    let h = rdr.headers()?.clone();
    let ui = header_index(&h, &["user_id", "education", "age", "gender", "region"])?;
    for rec in rdr.records() {
        let rec = rec?;
        let attrs: Vec<String> = ui[1..].iter().map(|&k| rec.get(k).unwrap_or("").trim().to_string()).collect();
        users.insert(rec.get(ui[0]).unwrap_or("").trim().to_string(), attrs);
    }

    let items_path = find_table(dir, "items")?;
    let mut items: HashMap<String, Vec<String>> = HashMap::new();
    let mut rdr = csv::Reader::from_path(&items_path)?;
    let h = rdr.headers()?.clone();
    let mut wanted = vec!["item_id", "body_type", "transmission", "engine_capacity", "fuel_consumed"];
    if experiment == 2 {
        // the second release names this column by engine location
        let layout_col = h
            .iter()
            .find(|c| {
                let n = norm(c);
                n.contains("layout") || n.contains("location")
            })
            .ok_or_else(|| Error::Schema("experiment 2 items table lacks a layout column".into()))?
            .to_string();
        let ii = header_index(&h, &wanted)?;
        let li = h.iter().position(|c| c == layout_col).expect("found above");
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals: Vec<&str> = ii[1..].iter().chain([&li]).map(|&k| rec.get(k).unwrap_or("")).collect();
            let car = canon_car(&vals).map_err(|e| Error::Data(format!("{} line {}: {e}", items_path.display(), i + 2)))?;
            items.insert(rec.get(ii[0]).unwrap_or("").trim().to_string(), car);
        }
    } else {
        wanted.truncate(5);
        let ii = header_index(&h, &wanted)?;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals: Vec<&str> = ii[1..].iter().map(|&k| rec.get(k).unwrap_or("")).collect();
            let car = canon_car(&vals).map_err(|e| Error::Data(format!("{} line {}: {e}", items_path.display(), i + 2)))?;
            items.insert(rec.get(ii[0]).unwrap_or("").trim().to_string(), car);
        }
    }

    let prefs_path = find_table(dir, "prefs")?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(&prefs_path)?;
    let h = rdr.headers()?.clone();
    let pi = header_index(&h, &["user_id", "item1_id", "item2_id"])?;
    let control = h.iter().position(|c| norm(c).contains("control"));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        stats.rows_read += 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                stats.malformed.push((line, e.to_string()));
                continue;
            }
        };
        if let Some(c) = control {
            if rec.get(c).map(str::trim).is_some_and(|v| v == "1") {
                stats.control_dropped += 1;
                continue;
            }
        }
        let user = rec.get(pi[0]).unwrap_or("").trim();
        let (first, second) = (rec.get(pi[1]).unwrap_or("").trim(), rec.get(pi[2]).unwrap_or("").trim());
        let Some(attrs) = users.get(user) else {
            stats.malformed.push((line, format!("unknown user '{user}'")));
            continue;
        };
        let (Some(c1), Some(c2)) = (items.get(first), items.get(second)) else {
            stats.malformed.push((line, format!("unknown item in pair ({first}, {second})")));
            continue;
        };
        // lower item id becomes option A
        let swap = match (first.parse::<u64>(), second.parse::<u64>()) {
            (Ok(a), Ok(b)) => a > b,
            _ => first > second,
        };
        let (car_a, car_b, chosen) = if swap { (c2, c1, 0) } else { (c1, c2, 1) };
        out.push(CarChoiceRecord {
            user_id: user.to_string(),
            user_attrs: attrs.clone(),
            car_a: car_a.clone(),
            car_b: car_b.clone(),
            chosen,
            experiment,
        });
    }
    Ok((out, stats))
}

fn load_one(path: &Path, experiment: u8) -> Result<(Vec<CarChoiceRecord>, CarLoadStats)> {
    let (records, mut stats) = if path.is_dir() {
        load_release_dir(path, experiment)?
    } else {
        load_flat(path, experiment)?
    };
    stats.records = records.len();
    stats.chosen_a = records.iter().filter(|r| r.chosen == 1).count();
    if !stats.malformed.is_empty() {
        log::warn!(
            "{}: skipped {} malformed rows (first at line {})",
            path.display(),
            stats.malformed.len(),
            stats.malformed[0].0
        );
    }
    Ok((records, stats))
}

/// Loads one or both Car Preference experiments. Malformed rows are skipped
/// and reported with their line numbers in the returned stats.
pub fn load_car(exp1: Option<&Path>, exp2: Option<&Path>) -> Result<CarData> {
    if exp1.is_none() && exp2.is_none() {
        return Err(Error::Validation("at least one car experiment file is required".into()));
    }
    let mut data = CarData::default();
    if let Some(p) = exp1 {
        (data.exp1, data.stats1) = load_one(p, 1)?;
        if data.exp1.len() != EXP1_COMPARISONS {
            log::info!(
                "experiment 1 yielded {} comparisons (60 users x 45 pairs would be {EXP1_COMPARISONS})",
                data.exp1.len()
            );
        }
    }
    if let Some(p) = exp2 {
        (data.exp2, data.stats2) = load_one(p, 2)?;
    }
    Ok(data)
}

fn sorted_levels(values: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().collect();
    // numeric-looking levels in numeric order
    if v.iter().all(|s| s.parse::<f64>().is_ok()) {
        v.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    v
}

fn schema_from(names: &[&str], columns: Vec<BTreeSet<String>>) -> Result<AttributeSchema> {
    let attrs = names
        .iter()
        .zip(columns)
        .map(|(n, vals)| {
            let mut levels = sorted_levels(vals);
            if levels.len() < 2 {
                // keep a constant column encodable
                levels.push(format!("{}_unobserved", n));
            }
            Attribute { name: (*n).to_string(), levels }
        })
        .collect();
    AttributeSchema::new(attrs)
}

/// Pairwise dataset for one experiment. Car attributes form the option
/// schema; user attributes go to the context schema.
pub fn car_dataset(records: &[CarChoiceRecord]) -> Result<Dataset> {
    let first = records.first().ok_or_else(|| Error::Data("no car records".into()))?;
    let n_car = first.car_a.len();
    let experiment = first.experiment;
    let mut car_cols = vec![BTreeSet::new(); n_car];
    let mut user_cols = vec![BTreeSet::new(); USER_ATTRIBUTES.len()];
    for r in records {
        if r.car_a.len() != n_car || r.car_b.len() != n_car || r.experiment != experiment {
            return Err(Error::Data("car records from different experiments cannot share a dataset".into()));
        }
        for (c, v) in car_cols.iter_mut().zip(r.car_a.iter()) {
            c.insert(v.clone());
        }
        for (c, v) in car_cols.iter_mut().zip(r.car_b.iter()) {
            c.insert(v.clone());
        }
        for (c, v) in user_cols.iter_mut().zip(r.user_attrs.iter()) {
            c.insert(v.clone());
        }
    }
    let schema = schema_from(&CAR_ATTRIBUTES[..n_car], car_cols)?;
    let context = schema_from(&USER_ATTRIBUTES, user_cols)?;
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let a: Vec<&str> = r.car_a.iter().map(String::as_str).collect();
        let b: Vec<&str> = r.car_b.iter().map(String::as_str).collect();
        let u: Vec<&str> = r.user_attrs.iter().map(String::as_str).collect();
        out.push(Record {
            id: format!("exp{experiment}-{i}"),
            respondent: r.user_id.clone(),
            options: vec![schema.levels_of(&a)?, schema.levels_of(&b)?],
            numeric: None,
            context: Some(context.levels_of(&u)?),
            group: Some(u32::from(experiment)),
            y: r.chosen,
        });
    }
    let mut ds = Dataset::new(format!("car-preference-exp{experiment}"), Task::Pairwise, schema, out);
    ds.context_schema = Some(context);
    ds.option_names = Some(vec!["A".into(), "B".into()]);
    Ok(ds)
}
