//! Moral Machine ingestion: pedestrian-vs-pedestrian dilemmas merged into one
//! record per `ResponseID` (intervention side first).

use std::collections::{BinaryHeap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Record, Task};
use crate::error::{Error, Result};
use crate::schema::{Attribute, AttributeSchema};

pub const AGENT_COLUMNS: [&str; 20] = [
    "Man",
    "Woman",
    "Pregnant",
    "Stroller",
    "OldMan",
    "OldWoman",
    "Boy",
    "Girl",
    "Homeless",
    "LargeWoman",
    "LargeMan",
    "Criminal",
    "MaleExecutive",
    "FemaleExecutive",
    "FemaleAthlete",
    "MaleAthlete",
    "FemaleDoctor",
    "MaleDoctor",
    "Dog",
    "Cat",
];

const ID_COLUMNS: [&str; 7] = [
    "ResponseID",
    "UserID",
    "Intervention",
    "PedPed",
    "Saved",
    "CrossingSignal",
    "LeftHand",
];

/// Width of the one-hot input reported for the evaluated autoencoder.
pub const REFERENCE_ONE_HOT_WIDTH: usize = 276;
const MAX_AGENT_COUNT: u8 = 5;

/// One side of a dilemma: 20 agent counts, crossing signal, left-hand flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmSide {
    pub agents: [u8; 20],
    pub crossing_signal: u8,
    pub left_hand: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmScenarioPair {
    pub response_id: String,
    pub user_id: String,
    pub features_int: MmSide,
    pub features_noint: MmSide,
    pub intervened: u8,
}

impl MmScenarioPair {
    /// The 42-wide numeric encoding: intervention-side agents, no-intervention
    /// side agents, then the shared crossing signal and left-hand flag.
    pub fn numeric(&self) -> Vec<f64> {
        self.features_int
            .agents
            .iter()
            .chain(&self.features_noint.agents)
            .map(|&a| f64::from(a))
            .chain([
                f64::from(self.features_int.crossing_signal),
                f64::from(self.features_int.left_hand),
            ])
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MmLoadStats {
    pub rows_read: usize,
    pub rows_not_pedped: usize,
    pub rows_empty_user: usize,
    /// `(line number, reason)` of rows that failed to parse.
    pub malformed: Vec<(u64, String)>,
    /// Response ids dropped for not having exactly one row per side.
    pub unpaired_dropped: usize,
    pub pairs_before_limit: usize,
    pub pairs: usize,
    pub one_hot_width: usize,
}

#[derive(Debug)]
struct RawRow {
    response_id: String,
    user_id: String,
    intervention: u8,
    saved: u8,
    side: MmSide,
}

fn parse_small(v: &str, col: &str, max: u8) -> std::result::Result<u8, String> {
    let t = v.trim();
    // some exports write integers as floats
    let n: f64 = t.parse().map_err(|_| format!("{col}='{t}' is not numeric"))?;
    if n.fract() != 0.0 || n < 0.0 || n > f64::from(max) {
        return Err(format!("{col}={t} outside 0..={max}"));
    }
    Ok(n as u8)
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Reads a Moral Machine response export.
///
/// Keeps `PedPed == 1` rows with a non-empty `UserID`, merges the
/// intervention and no-intervention rows of each `ResponseID`, and takes the
/// target from the intervention row's `Saved`. With `limit`, keeps the
/// `limit` pairs with the smallest `ResponseID` hash (a uniform, reproducible
/// subsample) in file order.
pub fn load_mm(path: &Path, limit: Option<usize>) -> Result<(Vec<MmScenarioPair>, AttributeSchema, MmLoadStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let missing: Vec<&str> = ID_COLUMNS
        .iter()
        .chain(AGENT_COLUMNS.iter())
        .copied()
        .filter(|c| col(c).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema(format!(
            "Moral Machine file is missing columns: {}",
            missing.join(", ")
        )));
    }
    let ix = |name: &str| col(name).expect("checked above");
    let (c_resp, c_user, c_int, c_pedped, c_saved, c_cross, c_left) = (
        ix("ResponseID"),
        ix("UserID"),
        ix("Intervention"),
        ix("PedPed"),
        ix("Saved"),
        ix("CrossingSignal"),
        ix("LeftHand"),
    );
    let c_agents: Vec<usize> = AGENT_COLUMNS.iter().map(|c| ix(c)).collect();

    let mut stats = MmLoadStats::default();
    let mut groups: Vec<Vec<RawRow>> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();

    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                stats.malformed.push((line, e.to_string()));
                continue;
            }
        };
        stats.rows_read += 1;
        let get = |c: usize| rec.get(c).unwrap_or("").trim();
        if get(c_pedped) != "1" && get(c_pedped).parse::<f64>().ok() != Some(1.0) {
            stats.rows_not_pedped += 1;
            continue;
        }
        let user = get(c_user);
        if user.is_empty() || user.eq_ignore_ascii_case("na") {
            stats.rows_empty_user += 1;
            continue;
        }
        let parsed = (|| -> std::result::Result<RawRow, String> {
            let mut agents = [0u8; 20];
            for (a, &c) in agents.iter_mut().zip(&c_agents) {
                *a = parse_small(get(c), &headers[c], MAX_AGENT_COUNT)?;
            }
            let resp = get(c_resp);
            if resp.is_empty() {
                return Err("empty ResponseID".into());
            }
            Ok(RawRow {
                response_id: resp.to_string(),
                user_id: user.to_string(),
                intervention: parse_small(get(c_int), "Intervention", 1)?,
                saved: parse_small(get(c_saved), "Saved", 1)?,
                side: MmSide {
                    agents,
                    crossing_signal: parse_small(get(c_cross), "CrossingSignal", 2)?,
                    left_hand: parse_small(get(c_left), "LeftHand", 1)?,
                },
            })
        })();
        match parsed {
            Ok(row) => {
                let g = *by_id.entry(row.response_id.clone()).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(row);
            }
            Err(reason) => stats.malformed.push((line, reason)),
        }
    }

    let mut pairs = Vec::new();
    for mut g in groups {
        if g.len() != 2 || g[0].intervention == g[1].intervention || g[0].user_id != g[1].user_id {
            stats.unpaired_dropped += 1;
            continue;
        }
        if g[0].intervention == 0 {
            g.swap(0, 1);
        }
        let noint = g.pop().expect("two rows");
        let int = g.pop().expect("two rows");
        pairs.push(MmScenarioPair {
            response_id: int.response_id,
            user_id: int.user_id,
            features_int: int.side,
            features_noint: noint.side,
            intervened: int.saved,
        });
    }
    stats.pairs_before_limit = pairs.len();

    if let Some(limit) = limit {
        if pairs.len() > limit {
            // max-heap of the `limit` smallest (hash, position)
            let mut heap = BinaryHeap::with_capacity(limit + 1);
            for (pos, p) in pairs.iter().enumerate() {
                heap.push((fnv1a(&p.response_id), pos));
                if heap.len() > limit {
                    heap.pop();
                }
            }
            let mut keep: Vec<usize> = heap.into_iter().map(|(_, pos)| pos).collect();
            keep.sort_unstable();
            let mut it = keep.into_iter().peekable();
            pairs = pairs
                .into_iter()
                .enumerate()
                .filter(|(pos, _)| it.next_if_eq(pos).is_some())
                .map(|(_, p)| p)
                .collect();
        }
    }
    stats.pairs = pairs.len();

    let schema = mm_side_schema(&pairs)?;
    stats.one_hot_width = schema.width();
    if schema.width() * 2 != REFERENCE_ONE_HOT_WIDTH {
        log::info!(
            "Moral Machine one-hot width is {} per side ({} for both sides); reference input width is {}",
            schema.width(),
            2 * schema.width(),
            REFERENCE_ONE_HOT_WIDTH
        );
    }
    if !stats.malformed.is_empty() {
        log::warn!("skipped {} malformed Moral Machine rows", stats.malformed.len());
    }
    Ok((pairs, schema, stats))
}

/// Per-side schema: agent counts `0..=max observed` (at least two levels),
/// crossing signal `{0,1,2}`, left-hand `{0,1}`.
pub fn mm_side_schema(pairs: &[MmScenarioPair]) -> Result<AttributeSchema> {
    let mut max = [1u8; 20];
    for p in pairs {
        for side in [&p.features_int, &p.features_noint] {
            for (m, &a) in max.iter_mut().zip(&side.agents) {
                *m = (*m).max(a);
            }
        }
    }
    let mut attributes: Vec<Attribute> = AGENT_COLUMNS
        .iter()
        .zip(max)
        .map(|(name, m)| Attribute {
            name: (*name).to_string(),
            levels: (0..=m).map(|l| l.to_string()).collect(),
        })
        .collect();
    attributes.push(Attribute {
        name: "CrossingSignal".into(),
        levels: vec!["0".into(), "1".into(), "2".into()],
    });
    attributes.push(Attribute {
        name: "LeftHand".into(),
        levels: vec!["0".into(), "1".into()],
    });
    AttributeSchema::new(attributes)
}

fn side_levels(s: &MmSide) -> Vec<usize> {
    s.agents
        .iter()
        .map(|&a| usize::from(a))
        .chain([usize::from(s.crossing_signal), usize::from(s.left_hand)])
        .collect()
}

pub fn numeric_feature_names() -> Vec<String> {
    AGENT_COLUMNS
        .iter()
        .map(|a| format!("{a}_int"))
        .chain(AGENT_COLUMNS.iter().map(|a| format!("{a}_noint")))
        .chain(["CrossingSignal".to_string(), "LeftHand".to_string()])
        .collect()
}

/// Canonical dataset: options `[int, noint]`, the 42-wide numeric vector, and
/// target `Intervened`.
pub fn mm_dataset(pairs: &[MmScenarioPair], schema: AttributeSchema) -> Dataset {
    let records = pairs
        .iter()
        .map(|p| Record {
            id: p.response_id.clone(),
            respondent: p.user_id.clone(),
            options: vec![side_levels(&p.features_int), side_levels(&p.features_noint)],
            numeric: Some(p.numeric()),
            context: None,
            group: None,
            y: p.intervened,
        })
        .collect();
    let mut ds = Dataset::new("moral-machine", Task::SingleVector, schema, records);
    ds.option_names = Some(vec!["int".into(), "noint".into()]);
    ds.numeric_names = Some(numeric_feature_names());
    ds.meta.notes.push(format!(
        "one-hot width per side {}, both sides {}; reference width {}",
        ds.schema.width(),
        2 * ds.schema.width(),
        REFERENCE_ONE_HOT_WIDTH
    ));
    ds
}
