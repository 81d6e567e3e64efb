//! Evaluation harness: normalized edit distance and per-scenario benchmark
//! reporting. The score for one case is `1 - editdist / max(len)`; higher is
//! better.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One benchmark case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCase {
    pub id: String,
    /// Scenario tag, e.g. "handwritten_cn".
    pub scenario: String,
    pub prediction: String,
    pub ground_truth: String,
}

/// Aggregated benchmark results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean metric per scenario, sorted by scenario name.
    pub scenarios: BTreeMap<String, ScenarioReport>,
    /// Macro average over scenario means.
    pub overall: f64,
    pub case_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub mean: f64,
    pub cases: usize,
}

/// Metric options.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    /// Collapse runs of whitespace to one space (and trim) before scoring.
    pub collapse_whitespace: bool,
}

/// Levenshtein distance over unicode scalar values with unit costs.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut current = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        current[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            current[j + 1] = substitute.min(prev[j + 1] + 1).min(current[j] + 1);
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `1 - editdist / max(|pred|, |gt|)`, clamped to [0, 1]; two empty strings
/// score 1.0.
pub fn one_minus_edit(pred: &str, gt: &str) -> f64 {
    let denominator = pred.chars().count().max(gt.chars().count());
    if denominator == 0 {
        return 1.0;
    }
    let d = levenshtein(pred, gt) as f64;
    (1.0 - d / denominator as f64).clamp(0.0, 1.0)
}

fn case_metric(case: &EvalCase, opts: &EvalOptions) -> f64 {
    if opts.collapse_whitespace {
        one_minus_edit(&collapse_ws(&case.prediction), &collapse_ws(&case.ground_truth))
    } else {
        one_minus_edit(&case.prediction, &case.ground_truth)
    }
}

/// Scores all cases: unweighted mean per scenario, overall macro average of
/// the scenario means. Reordering cases does not change the report.
pub fn run_benchmark(cases: &[EvalCase], opts: &EvalOptions) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::EmptyBenchmark);
    }
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for case in cases {
        let entry = sums.entry(case.scenario.clone()).or_insert((0.0, 0));
        entry.0 += case_metric(case, opts);
        entry.1 += 1;
    }
    let scenarios: BTreeMap<String, ScenarioReport> = sums
        .into_iter()
        .map(|(name, (sum, count))| {
            (
                name,
                ScenarioReport {
                    mean: sum / count as f64,
                    cases: count,
                },
            )
        })
        .collect();
    let overall = scenarios.values().map(|s| s.mean).sum::<f64>() / scenarios.len() as f64;
    Ok(EvalReport {
        scenarios,
        overall,
        case_count: cases.len(),
    })
}

/// Record shape of the benchmark CSV: id, scenario, ground truth inline,
/// prediction read from a text file path.
#[derive(Debug, Deserialize)]
struct CaseRecord {
    id: String,
    scenario: String,
    ground_truth: String,
    prediction_path: String,
}

/// Loads benchmark cases from a CSV file with header
/// `id,scenario,ground_truth,prediction_path`; predictions are read from
/// the referenced text files (relative paths resolve against the CSV
/// location).
pub fn load_cases(path: &Path) -> Result<Vec<EvalCase>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    let mut cases = Vec::new();
    for record in reader.deserialize::<CaseRecord>() {
        let record = record.map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let pred_path = {
            let p = Path::new(&record.prediction_path);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let prediction = std::fs::read_to_string(&pred_path)?;
        cases.push(EvalCase {
            id: record.id,
            scenario: record.scenario,
            prediction: prediction.trim_end_matches('\n').to_string(),
            ground_truth: record.ground_truth,
        });
    }
    Ok(cases)
}

/// Canonical JSON rendering of a report (stable key order, 6-decimal means).
pub fn report_json(report: &EvalReport) -> String {
    let mut out = String::from("{\"overall\":");
    out.push_str(&format!("{:.6}", report.overall));
    out.push_str(",\"case_count\":");
    out.push_str(&report.case_count.to_string());
    out.push_str(",\"scenarios\":[");
    for (i, (name, s)) in report.scenarios.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("{\"scenario\":");
        out.push_str(&serde_json::to_string(name).expect("string"));
        out.push_str(&format!(",\"mean\":{:.6},\"cases\":{}}}", s.mean, s.cases));
    }
    out.push_str("]}");
    out
}

/// Plain-text table rendering of a report.
pub fn report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<24} {:>8} {:>8}\n", "scenario", "mean", "cases"));
    for (name, s) in &report.scenarios {
        out.push_str(&format!("{:<24} {:>8.4} {:>8}\n", name, s.mean, s.cases));
    }
    out.push_str(&format!(
        "{:<24} {:>8.4} {:>8}\n",
        "overall (macro)", report.overall, report.case_count
    ));
    out
}
