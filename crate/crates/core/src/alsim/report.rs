use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Metric, RunReport};
use crate::error::{Error, Result};
use crate::uncertainty::Strategy;

/// Mean and population standard deviation across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateIteration {
    pub iteration: usize,
    pub labeled_count: MeanStd,
    pub metrics: BTreeMap<Metric, MeanStd>,
    pub overlap_full_pct: MeanStd,
    pub overlap_partial_pct: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub strategy: Strategy,
    pub runs: usize,
    pub iterations: Vec<AggregateIteration>,
}

impl AggregateReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("aggregate serializes");
        s.push('\n');
        s
    }

    fn metric_columns(&self) -> Vec<Metric> {
        self.iterations
            .first()
            .map(|it| it.metrics.keys().copied().collect())
            .unwrap_or_default()
    }
}

/// Per-iteration mean and standard deviation over runs of one config.
pub fn aggregate_runs(reports: &[RunReport]) -> Result<AggregateReport> {
    let first = reports.first().ok_or(Error::Empty("run reports"))?;
    let n_iter = first.iterations.len();
    for r in reports {
        if r.iterations.len() != n_iter {
            return Err(Error::Validation(format!(
                "run reports have different iteration counts ({} vs {})",
                n_iter,
                r.iterations.len()
            )));
        }
        if r.config.strategy != first.config.strategy {
            return Err(Error::Validation("run reports mix strategies".into()));
        }
    }

    let mut iterations = Vec::with_capacity(n_iter);
    for i in 0..n_iter {
        let rows: Vec<_> = reports.iter().map(|r| &r.iterations[i]).collect();
        let keys: Vec<Metric> = rows[0].metrics.keys().copied().collect();
        if rows
            .iter()
            .any(|r| r.metrics.keys().copied().collect::<Vec<_>>() != keys)
        {
            return Err(Error::Validation(format!(
                "iteration {}: run reports have different metric sets",
                i + 1
            )));
        }
        let column = |f: &dyn Fn(&super::IterationReport) -> f64| {
            MeanStd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
        };
        iterations.push(AggregateIteration {
            iteration: rows[0].iteration,
            labeled_count: column(&|r| r.labeled_count as f64),
            metrics: keys.iter().map(|m| (*m, column(&|r| r.metrics[m]))).collect(),
            overlap_full_pct: column(&|r| r.overlap_full_pct),
            overlap_partial_pct: column(&|r| r.overlap_partial_pct),
        });
    }
    Ok(AggregateReport {
        strategy: first.config.strategy,
        runs: reports.len(),
        iterations,
    })
}

/// Fixed-width text table, one row per iteration.
pub fn render_table(agg: &AggregateReport) -> String {
    let metrics = agg.metric_columns();
    let mut out = String::new();
    let _ = write!(out, "{:>9} {:>9}", "iteration", "labeled");
    for m in &metrics {
        let _ = write!(out, " {:>17}", m.name());
    }
    let _ = writeln!(out, " {:>9} {:>9}", "full%", "partial%");
    for it in &agg.iterations {
        let _ = write!(out, "{:>9} {:>9.1}", it.iteration, it.labeled_count.mean);
        for m in &metrics {
            let ms = it.metrics[m];
            let _ = write!(out, " {:>17}", format!("{:.4}±{:.4}", ms.mean, ms.std));
        }
        let _ = writeln!(
            out,
            " {:>9.1} {:>9.1}",
            it.overlap_full_pct.mean, it.overlap_partial_pct.mean
        );
    }
    out
}

/// CSV with a header row; quoting follows RFC 4180.
pub fn render_csv(agg: &AggregateReport) -> Result<String> {
    let metrics = agg.metric_columns();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iteration".to_owned(), "labeled_count".to_owned()];
    for m in &metrics {
        header.push(format!("{}_mean", m.name()));
        header.push(format!("{}_std", m.name()));
    }
    header.extend(
        ["overlap_full_pct", "overlap_partial_pct"]
            .iter()
            .map(|s| s.to_string()),
    );
    let to_validation = |e: csv::Error| Error::Validation(e.to_string());
    w.write_record(&header).map_err(to_validation)?;
    for it in &agg.iterations {
        let mut row = vec![it.iteration.to_string(), it.labeled_count.mean.to_string()];
        for m in &metrics {
            row.push(it.metrics[m].mean.to_string());
            row.push(it.metrics[m].std.to_string());
        }
        row.push(it.overlap_full_pct.mean.to_string());
        row.push(it.overlap_partial_pct.mean.to_string());
        w.write_record(&row).map_err(to_validation)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::super::{ALConfig, IterationReport};
    use super::*;

    fn run(values: &[f64]) -> RunReport {
        RunReport {
            config: ALConfig::default(),
            pool_size: 10,
            iterations: values
                .iter()
                .enumerate()
                .map(|(i, v)| IterationReport {
                    iteration: i + 1,
                    query_ids: vec![],
                    labeled_count: 10 * (i + 2),
                    metrics: [(Metric::Rouge1, *v)].into_iter().collect(),
                    overlap_full_pct: 0.0,
                    overlap_partial_pct: 0.0,
                    pseudo_kept: None,
                })
                .collect(),
            wall_time_s: None,
        }
    }

    #[test]
    fn mean_and_population_std() {
        let agg = aggregate_runs(&[run(&[0.4]), run(&[0.6])]).unwrap();
        let ms = agg.iterations[0].metrics[&Metric::Rouge1];
        assert!((ms.mean - 0.5).abs() < 1e-15);
        assert!((ms.std - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identical_or_single_runs_have_zero_std() {
        let agg = aggregate_runs(&[run(&[0.3, 0.5]), run(&[0.3, 0.5])]).unwrap();
        assert!(agg
            .iterations
            .iter()
            .all(|it| it.metrics[&Metric::Rouge1].std == 0.0));
        let agg = aggregate_runs(&[run(&[0.3, 0.5])]).unwrap();
        assert_eq!(agg.iterations[1].metrics[&Metric::Rouge1].std, 0.0);
    }

    #[test]
    fn mismatched_runs_rejected() {
        assert!(aggregate_runs(&[run(&[0.1]), run(&[0.1, 0.2])]).is_err());
        assert!(aggregate_runs(&[]).is_err());
    }

    #[test]
    fn renderers() {
        let agg = aggregate_runs(&[run(&[0.4, 0.5, 0.6]), run(&[0.6, 0.5, 0.4])]).unwrap();
        let table = render_table(&agg);
        assert_eq!(table.lines().count(), 4);
        assert!(table.contains("0.5000±0.1000"));
        let csv = render_csv(&agg).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,labeled_count,rouge1_mean,rouge1_std,overlap_full_pct,overlap_partial_pct"
        );
        assert_eq!(lines.count(), 3);
    }
}
