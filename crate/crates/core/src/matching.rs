//! Video-level scoring of query/reference descriptor sets.
//!
//! Frame pairs are compared by cosine. With a background pool, each query
//! frame's similarities are lowered by `beta` times its best similarity to
//! the pool, which suppresses frames that look like everything. The video
//! score aggregates the adjusted frame-pair similarities by the mean of the
//! `top_k` largest (`top_k = 1` is the plain maximum).

use std::collections::HashSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{dot, DescriptorSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_beta() -> f64 {
    1.0
}

fn default_top_k() -> usize {
    1
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            beta: default_beta(),
            top_k: default_top_k(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PoolEntry {
    source: String,
    vector: Vec<f64>,
}

/// Descriptors of distractor videos used for score normalization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackgroundPool {
    entries: Vec<PoolEntry>,
}

impl BackgroundPool {
    pub fn from_sets<'a>(sets: impl IntoIterator<Item = &'a DescriptorSet>) -> Self {
        let entries = sets
            .into_iter()
            .flat_map(|s| {
                s.descriptors.iter().filter(|d| !d.flat).map(|d| PoolEntry {
                    source: s.video_id.clone(),
                    vector: d.vector.clone(),
                })
            })
            .collect();
        BackgroundPool { entries }
    }

    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Self {
        BackgroundPool {
            entries: vectors
                .into_iter()
                .map(|vector| PoolEntry {
                    source: String::new(),
                    vector,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Best similarity of `v` to the pool, skipping entries taken from the
    /// video `exclude` (a distractor is never normalized against itself).
    /// Zero for an empty pool.
    pub fn nearest(&self, v: &[f64], exclude: Option<&str>) -> f64 {
        self.entries
            .iter()
            .filter(|e| exclude != Some(e.source.as_str()))
            .map(|e| dot(v, &e.vector))
            .fold(None, |best: Option<f64>, s| {
                Some(best.map_or(s, |b| b.max(s)))
            })
            .unwrap_or(0.0)
    }
}

fn check_set(set: &DescriptorSet) -> Result<usize> {
    set.dim()
        .ok_or_else(|| Error::EmptyDescriptorSet(set.video_id.clone()))
}

/// Per-query-frame pool offsets, `beta * nearest(frame)`.
fn pool_offsets(q: &DescriptorSet, pool: Option<&BackgroundPool>, beta: f64) -> Vec<f64> {
    match pool {
        Some(pool) if beta != 0.0 && !pool.is_empty() => q
            .descriptors
            .iter()
            .map(|d| beta * pool.nearest(&d.vector, Some(&q.video_id)))
            .collect(),
        _ => vec![0.0; q.len()],
    }
}

fn aggregate(q: &DescriptorSet, r: &DescriptorSet, offsets: &[f64], top_k: usize) -> f64 {
    if top_k <= 1 {
        let mut best = f64::NEG_INFINITY;
        for (qd, off) in q.descriptors.iter().zip(offsets) {
            for rd in &r.descriptors {
                best = best.max(dot(&qd.vector, &rd.vector) - off);
            }
        }
        return best;
    }
    let mut all: Vec<f64> = q
        .descriptors
        .iter()
        .zip(offsets)
        .flat_map(|(qd, off)| {
            r.descriptors
                .iter()
                .map(move |rd| dot(&qd.vector, &rd.vector) - off)
        })
        .collect();
    all.sort_by(|a, b| b.total_cmp(a));
    let k = top_k.min(all.len());
    all[..k].iter().sum::<f64>() / k as f64
}

pub fn pair_score(
    q: &DescriptorSet,
    r: &DescriptorSet,
    pool: Option<&BackgroundPool>,
    config: &MatchConfig,
) -> Result<f64> {
    let qd = check_set(q)?;
    let rd = check_set(r)?;
    if qd != rd {
        return Err(Error::VectorDimension(qd, rd));
    }
    let offsets = pool_offsets(q, pool, config.beta);
    Ok(aggregate(q, r, &offsets, config.top_k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub query_id: String,
    pub reference_id: String,
    pub score: f64,
}

/// Scored pairs, best first; equal scores fall back to (query, reference).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionList {
    entries: Vec<Prediction>,
}

impl PredictionList {
    /// Sort and check for duplicate pairs.
    pub fn new(mut entries: Vec<Prediction>) -> Result<Self> {
        entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.query_id.cmp(&b.query_id))
                .then_with(|| a.reference_id.cmp(&b.reference_id))
        });
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert((e.query_id.as_str(), e.reference_id.as_str())) {
                return Err(Error::DuplicateId(format!(
                    "{},{}",
                    e.query_id, e.reference_id
                )));
            }
        }
        Ok(PredictionList { entries })
    }

    pub fn entries(&self) -> &[Prediction] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prediction> {
        self.entries.iter()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        out.write_record(["query_id", "reference_id", "score"])
            .map_err(csv_err)?;
        for e in &self.entries {
            out.write_record([
                e.query_id.as_str(),
                e.reference_id.as_str(),
                format_significant(e.score, 9).as_str(),
            ])
            .map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["query_id", "reference_id", "score"] {
            return Err(Error::Csv(format!(
                "expected header query_id,reference_id,score, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = Vec::new();
        for rec in rdr.deserialize() {
            let p: Prediction = rec.map_err(|e| Error::Csv(e.to_string()))?;
            if !p.score.is_finite() {
                return Err(Error::Csv(format!(
                    "non-finite score for {},{}",
                    p.query_id, p.reference_id
                )));
            }
            entries.push(p);
        }
        PredictionList::new(entries)
    }
}

fn unique_ids(sets: &[DescriptorSet]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in sets {
        if !seen.insert(s.video_id.as_str()) {
            return Err(Error::DuplicateId(s.video_id.clone()));
        }
    }
    Ok(())
}

/// Score every query against every reference. Work is split over queries;
/// each score is computed by the same sequential loop regardless of the
/// number of workers, so the output does not depend on parallelism.
pub fn match_all(
    queries: &[DescriptorSet],
    references: &[DescriptorSet],
    pool: Option<&BackgroundPool>,
    config: &MatchConfig,
) -> Result<PredictionList> {
    unique_ids(queries)?;
    unique_ids(references)?;
    let dims: HashSet<usize> = queries
        .iter()
        .chain(references)
        .map(check_set)
        .collect::<Result<_>>()?;
    if dims.len() > 1 {
        let mut d: Vec<_> = dims.into_iter().collect();
        d.sort();
        return Err(Error::VectorDimension(d[0], d[1]));
    }
    let rows: Vec<Vec<Prediction>> = queries
        .par_iter()
        .map(|q| {
            let offsets = pool_offsets(q, pool, config.beta);
            references
                .iter()
                .map(|r| Prediction {
                    query_id: q.video_id.clone(),
                    reference_id: r.video_id.clone(),
                    score: aggregate(q, r, &offsets, config.top_k),
                })
                .collect()
        })
        .collect();
    PredictionList::new(rows.into_iter().flatten().collect())
}

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros trimmed, scientific notation for very large or small magnitudes.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
