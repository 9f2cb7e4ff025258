//! Micro-average precision over one pooled ranking, plus run reports.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::PredictionList;

/// Labeled (query, reference) copy pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    positives: BTreeMap<String, BTreeSet<String>>,
    count: usize,
}

impl GroundTruth {
    pub fn new<I, Q, R>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Q, R)>,
        Q: Into<String>,
        R: Into<String>,
    {
        let mut gt = GroundTruth::default();
        for (q, r) in pairs {
            gt.insert(q.into(), r.into());
        }
        gt
    }

    pub fn insert(&mut self, query: String, reference: String) {
        if self.positives.entry(query).or_default().insert(reference) {
            self.count += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, query: &str, reference: &str) -> bool {
        self.positives
            .get(query)
            .is_some_and(|refs| refs.contains(reference))
    }

    /// Pairs in (query, reference) order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.positives
            .iter()
            .flat_map(|(q, refs)| refs.iter().map(move |r| (q.as_str(), r.as_str())))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .clone();
        if headers.len() < 2 || &headers[0] != "query_id" || &headers[1] != "reference_id" {
            return Err(Error::Csv(
                "ground truth needs a query_id,reference_id header".into(),
            ));
        }
        let mut gt = GroundTruth::default();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            gt.insert(rec[0].to_string(), rec[1].to_string());
        }
        Ok(gt)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let e = |e: csv::Error| Error::Csv(e.to_string());
        out.write_record(["query_id", "reference_id"]).map_err(e)?;
        for (q, r) in self.pairs() {
            out.write_record([q, r]).map_err(e)?;
        }
        out.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// Walk the ranking; at every positive add precision-at-rank. Divide by the
/// number of ground-truth pairs, so positives never retrieved count as misses.
pub fn micro_average_precision(predictions: &PredictionList, gt: &GroundTruth) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, p) in predictions.iter().enumerate() {
        if gt.contains(&p.query_id, &p.reference_id) {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(total / gt.len() as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub selected_frames_total: usize,
    pub reduction_factor_mean: f64,
    pub descriptor_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub videos_per_second: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub uap: f64,
    pub positives_total: usize,
    pub predictions_total: usize,
    pub per_method_stats: BTreeMap<String, MethodStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn compute(
        predictions: &PredictionList,
        gt: &GroundTruth,
        per_method_stats: BTreeMap<String, MethodStats>,
    ) -> Result<Self> {
        let uap = micro_average_precision(predictions, gt)?;
        let queries: HashSet<&str> = predictions.iter().map(|p| p.query_id.as_str()).collect();
        let refs: HashSet<&str> = predictions
            .iter()
            .map(|p| p.reference_id.as_str())
            .collect();
        let mut warnings = Vec::new();
        for (q, r) in gt.pairs() {
            if !queries.contains(q) {
                warnings.push(format!("ground-truth query {q:?} has no predictions"));
            }
            if !refs.contains(r) {
                warnings.push(format!("ground-truth reference {r:?} has no predictions"));
            }
        }
        warnings.dedup();
        Ok(EvalReport {
            uap,
            positives_total: gt.len(),
            predictions_total: predictions.len(),
            per_method_stats,
            warnings,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Evaluate a scores CSV against a ground-truth CSV.
pub fn evaluate_run(
    scores_path: &Path,
    gt_path: &Path,
    stats: BTreeMap<String, MethodStats>,
) -> Result<EvalReport> {
    let open = |p: &Path| std::fs::File::open(p).map_err(|e| Error::io(p, e));
    let predictions = PredictionList::read_csv(std::io::BufReader::new(open(scores_path)?))?;
    let gt = GroundTruth::read_csv(std::io::BufReader::new(open(gt_path)?))?;
    EvalReport::compute(&predictions, &gt, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::Prediction;

    fn preds(rows: &[(&str, &str, f64)]) -> PredictionList {
        PredictionList::new(
            rows.iter()
                .map(|&(q, r, s)| Prediction {
                    query_id: q.into(),
                    reference_id: r.into(),
                    score: s,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn hand_examples() {
        let gt = GroundTruth::new([("q1", "r1"), ("q2", "r2")]);
        let perfect = preds(&[("q1", "r1", 0.9), ("q2", "r2", 0.8), ("q1", "r2", 0.1)]);
        assert_eq!(micro_average_precision(&perfect, &gt).unwrap(), 1.0);

        let gt1 = GroundTruth::new([("q1", "r1")]);
        let second = preds(&[("q1", "r2", 0.9), ("q1", "r1", 0.5)]);
        assert_eq!(micro_average_precision(&second, &gt1).unwrap(), 0.5);

        let mixed = preds(&[("q1", "r1", 0.9), ("q1", "r2", 0.5), ("q2", "r2", 0.2)]);
        let v = micro_average_precision(&mixed, &gt).unwrap();
        assert!((v - 0.5 * (1.0 + 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn trapezoid_cross_check() {
        // Area under the PR curve by trapezoids, starting from (0, 1).
        let gt = GroundTruth::new([("q1", "r1"), ("q2", "r2")]);
        let mixed = preds(&[("q1", "r1", 0.9), ("q1", "r2", 0.5), ("q2", "r2", 0.2)]);
        let (mut r0, mut p0, mut area, mut tp) = (0.0, 1.0, 0.0, 0.0);
        for (k, p) in mixed.iter().enumerate() {
            if gt.contains(&p.query_id, &p.reference_id) {
                tp += 1.0;
            }
            let r = tp / 2.0;
            let prec = tp / (k + 1) as f64;
            area += (r - r0) * (prec + p0) / 2.0;
            r0 = r;
            p0 = prec;
        }
        let ap = micro_average_precision(&mixed, &gt).unwrap();
        assert!((ap - area).abs() < 0.05, "{ap} vs {area}");
    }

    #[test]
    fn missing_positives_and_empty_truth() {
        let gt = GroundTruth::new([("q1", "r1"), ("q9", "r9")]);
        let p = preds(&[("q1", "r1", 0.9)]);
        assert_eq!(micro_average_precision(&p, &gt).unwrap(), 0.5);
        let report = EvalReport::compute(&p, &gt, BTreeMap::new()).unwrap();
        assert_eq!(report.warnings.len(), 2);
        assert!(matches!(
            micro_average_precision(&p, &GroundTruth::default()),
            Err(Error::EmptyGroundTruth)
        ));
    }

    #[test]
    fn monotone_score_transform_keeps_uap() {
        let gt = GroundTruth::new([("a", "x"), ("b", "y"), ("c", "z")]);
        let rows = [
            ("a", "x", 0.7),
            ("a", "y", 0.75),
            ("b", "y", 0.2),
            ("c", "x", 0.4),
            ("c", "z", 0.41),
        ];
        let shifted: Vec<_> = rows
            .iter()
            .map(|&(q, r, s)| (q, r, 2.0 * s + 5.0))
            .collect();
        assert_eq!(
            micro_average_precision(&preds(&rows), &gt).unwrap(),
            micro_average_precision(&preds(&shifted), &gt).unwrap()
        );
    }

    #[test]
    fn single_prediction() {
        let gt = GroundTruth::new([("a", "x"), ("b", "y"), ("c", "z"), ("d", "w")]);
        assert_eq!(
            micro_average_precision(&preds(&[("a", "x", 1.0)]), &gt).unwrap(),
            0.25
        );
        assert_eq!(
            micro_average_precision(&preds(&[("a", "y", 1.0)]), &gt).unwrap(),
            0.0
        );
    }

    #[test]
    fn evaluate_files_order_independent() {
        let tmp = tempfile::tempdir().unwrap();
        let gt_path = tmp.path().join("gt.csv");
        std::fs::write(&gt_path, "query_id,reference_id\nq1,r1\nq2,r2\n").unwrap();
        let sorted = tmp.path().join("a.csv");
        std::fs::write(
            &sorted,
            "query_id,reference_id,score\nq1,r1,0.9\nq2,r1,0.5\nq2,r2,0.3\n",
        )
        .unwrap();
        let shuffled = tmp.path().join("b.csv");
        std::fs::write(
            &shuffled,
            "query_id,reference_id,score\nq2,r2,0.3\nq1,r1,0.9\nq2,r1,0.5\n",
        )
        .unwrap();
        let a = evaluate_run(&sorted, &gt_path, BTreeMap::new()).unwrap();
        let b = evaluate_run(&shuffled, &gt_path, BTreeMap::new()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!((a.uap - 0.5 * (1.0 + 2.0 / 3.0)).abs() < 1e-15);

        let indicator = tmp.path().join("c.csv");
        std::fs::write(
            &indicator,
            "query_id,reference_id,score\nq1,r1,1\nq2,r1,0\nq2,r2,1\n",
        )
        .unwrap();
        assert_eq!(
            evaluate_run(&indicator, &gt_path, BTreeMap::new())
                .unwrap()
                .uap,
            1.0
        );
    }
}
