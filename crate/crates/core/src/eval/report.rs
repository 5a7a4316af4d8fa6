//! Aggregation, ranking and serialization of cross-validation results.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::eval::cv::RunRecord;
use crate::eval::stats::{
    average_ranks, bonferroni_dunn, chi_square_critical_05, five_number_summary,
    friedman_statistic, rank_matrix, rank_row, robustness_ratios, BonferroniDunn, FriedmanResult,
    RobustnessRatios,
};

/// Mean metrics of one classifier on one dataset, with its rank among the
/// classifiers run on that dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub dataset: String,
    pub classifier: String,
    pub amr: f64,
    pub af1: f64,
    pub rank_amr: f64,
    pub rank_af1: f64,
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    items
        .filter(|s| seen.insert(*s))
        .map(str::to_string)
        .collect()
}

/// Average per-run rows into one row per (dataset, classifier). Output order
/// follows first appearance of datasets, then classifiers.
pub fn aggregate(runs: &[RunRecord]) -> Vec<Aggregate> {
    let datasets = first_appearance(runs.iter().map(|r| r.dataset.as_str()));
    let mut out = Vec::new();
    for ds in &datasets {
        let rows: Vec<&RunRecord> = runs.iter().filter(|r| &r.dataset == ds).collect();
        let classifiers = first_appearance(rows.iter().map(|r| r.classifier.as_str()));
        let mut block: Vec<Aggregate> = classifiers
            .iter()
            .map(|c| {
                let mine: Vec<&&RunRecord> = rows.iter().filter(|r| &r.classifier == c).collect();
                let n = mine.len() as f64;
                Aggregate {
                    dataset: ds.clone(),
                    classifier: c.clone(),
                    amr: mine.iter().map(|r| r.mr).sum::<f64>() / n,
                    af1: mine.iter().map(|r| r.f1).sum::<f64>() / n,
                    rank_amr: 0.0,
                    rank_af1: 0.0,
                }
            })
            .collect();
        let amr: Vec<f64> = block.iter().map(|a| a.amr).collect();
        let af1: Vec<f64> = block.iter().map(|a| a.af1).collect();
        for ((a, ra), rf) in block.iter_mut().zip(rank_row(&amr, true)).zip(rank_row(&af1, false)) {
            a.rank_amr = ra;
            a.rank_af1 = rf;
        }
        out.extend(block);
    }
    out
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_runs_csv<W: Write>(runs: &[RunRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["dataset", "classifier", "repeat", "fold", "mr", "f1"])?;
    for r in runs {
        wtr.write_record([
            r.dataset.clone(),
            r.classifier.clone(),
            r.repeat.to_string(),
            r.fold.to_string(),
            f6(r.mr),
            f6(r.f1),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(aggs: &[Aggregate], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["dataset", "classifier", "amr", "af1", "rank_amr", "rank_af1"])?;
    for a in aggs {
        wtr.write_record([
            a.dataset.clone(),
            a.classifier.clone(),
            f6(a.amr),
            f6(a.af1),
            f6(a.rank_amr),
            f6(a.rank_af1),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parse an aggregate CSV as written by [`write_aggregate_csv`].
pub fn read_aggregate_csv<R: Read>(r: R) -> Result<Vec<Aggregate>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("aggregate CSV lacks column `{name}`")))
    };
    let (ci_d, ci_c, ci_amr, ci_af1) = (col("dataset")?, col("classifier")?, col("amr")?, col("af1")?);
    let (ci_ra, ci_rf) = (headers.iter().position(|h| h == "rank_amr"), headers.iter().position(|h| h == "rank_af1"));
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("").trim();
            s.parse::<f64>().map_err(|_| Error::Parse {
                row: i + 1,
                column: c,
                value: s.to_string(),
            })
        };
        out.push(Aggregate {
            dataset: rec.get(ci_d).unwrap_or("").to_string(),
            classifier: rec.get(ci_c).unwrap_or("").to_string(),
            amr: num(ci_amr)?,
            af1: num(ci_af1)?,
            rank_amr: ci_ra.map(num).transpose()?.unwrap_or(0.0),
            rank_af1: ci_rf.map(num).transpose()?.unwrap_or(0.0),
        });
    }
    Ok(out)
}

/// Per-run rows together with their aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl EvaluationReport {
    pub fn from_runs(runs: Vec<RunRecord>) -> Self {
        let aggregates = aggregate(&runs);
        Self { runs, aggregates }
    }

    /// Datasets as rows and classifiers as columns, an AMR block in percent
    /// followed by an AF1 block; the best entry of each row is bold.
    pub fn summary_markdown(&self) -> String {
        summary_markdown(&self.aggregates)
    }
}

pub fn summary_markdown(aggs: &[Aggregate]) -> String {
    let datasets = first_appearance(aggs.iter().map(|a| a.dataset.as_str()));
    let classifiers = first_appearance(aggs.iter().map(|a| a.classifier.as_str()));
    let lookup: HashMap<(&str, &str), &Aggregate> = aggs
        .iter()
        .map(|a| ((a.dataset.as_str(), a.classifier.as_str()), a))
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, "| Dataset | {} |", classifiers.join(" | "));
    let _ = writeln!(s, "|---|{}", "---:|".repeat(classifiers.len()));

    let mut block = |title: &str, get: &dyn Fn(&Aggregate) -> f64, lower: bool, fmt: &dyn Fn(f64) -> String| {
        let _ = writeln!(s, "| **{title}** |{}", " |".repeat(classifiers.len()));
        for ds in &datasets {
            let vals: Vec<Option<f64>> = classifiers
                .iter()
                .map(|c| lookup.get(&(ds.as_str(), c.as_str())).map(|a| get(a)))
                .collect();
            let best = vals.iter().flatten().copied().fold(None, |b: Option<f64>, v| match b {
                Some(b) if (lower && b <= v) || (!lower && b >= v) => Some(b),
                _ => Some(v),
            });
            let cells: Vec<String> = vals
                .iter()
                .map(|v| match v {
                    Some(v) if Some(*v) == best => format!("**{}**", fmt(*v)),
                    Some(v) => fmt(*v),
                    None => "-".into(),
                })
                .collect();
            let _ = writeln!(s, "| {ds} | {} |", cells.join(" | "));
        }
    };
    block("AMR (%)", &|a| a.amr, true, &|v| format!("{:.2}", 100.0 * v));
    block("AF1", &|a| a.af1, false, &|v| format!("{v:.4}"));
    s
}

/// AMR and AF1 matrices restricted to the classifiers present on every
/// dataset, with ranks recomputed over that common set.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub datasets: Vec<String>,
    pub classifiers: Vec<String>,
    pub amr: Vec<Vec<f64>>,
    pub af1: Vec<Vec<f64>>,
    pub rank_amr: Vec<Vec<f64>>,
    pub rank_af1: Vec<Vec<f64>>,
    /// Classifiers dropped because some dataset lacks them.
    pub dropped: Vec<String>,
}

impl RankTable {
    pub fn from_aggregates(aggs: &[Aggregate]) -> Result<Self> {
        let datasets = first_appearance(aggs.iter().map(|a| a.dataset.as_str()));
        let all = first_appearance(aggs.iter().map(|a| a.classifier.as_str()));
        let mut lookup: HashMap<(&str, &str), &Aggregate> = HashMap::new();
        for a in aggs {
            if lookup.insert((&a.dataset, &a.classifier), a).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate aggregate row for dataset `{}`, classifier `{}`",
                    a.dataset, a.classifier
                )));
            }
        }
        let (classifiers, dropped): (Vec<String>, Vec<String>) = all
            .into_iter()
            .partition(|c| datasets.iter().all(|d| lookup.contains_key(&(d.as_str(), c.as_str()))));
        if !dropped.is_empty() {
            log::warn!("classifiers missing on some dataset are ignored: {}", dropped.join(", "));
        }
        if classifiers.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 classifiers common to all datasets, found {}",
                classifiers.len()
            )));
        }
        let matrix = |get: fn(&Aggregate) -> f64| -> Vec<Vec<f64>> {
            datasets
                .iter()
                .map(|d| classifiers.iter().map(|c| get(lookup[&(d.as_str(), c.as_str())])).collect())
                .collect()
        };
        let amr = matrix(|a| a.amr);
        let af1 = matrix(|a| a.af1);
        Ok(Self {
            rank_amr: rank_matrix(&amr, true),
            rank_af1: rank_matrix(&af1, false),
            datasets,
            classifiers,
            amr,
            af1,
            dropped,
        })
    }

    pub fn classifier_index(&self, name: &str) -> Result<usize> {
        self.classifiers.iter().position(|c| c == name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "control classifier `{name}` not found; available: {}",
                self.classifiers.join(", ")
            ))
        })
    }

    /// `dataset,classifier,rank_amr,rank_af1`
    pub fn ranks_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["dataset", "classifier", "rank_amr", "rank_af1"])?;
        for (i, d) in self.datasets.iter().enumerate() {
            for (j, c) in self.classifiers.iter().enumerate() {
                wtr.write_record([d.clone(), c.clone(), f6(self.rank_amr[i][j]), f6(self.rank_af1[i][j])])?;
            }
        }
        into_string(wtr)
    }
}

fn into_string(wtr: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Friedman and Bonferroni-Dunn results for one metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTest {
    pub metric: &'static str,
    pub average_ranks: Vec<f64>,
    pub friedman: FriedmanResult,
    /// Upper 5% chi-square point for the Friedman df, when tabulated.
    pub critical_05: Option<f64>,
    pub bd: BonferroniDunn,
}

impl MetricTest {
    fn new(metric: &'static str, ranks: &[Vec<f64>], control: usize, alpha: f64) -> Result<Self> {
        let friedman = friedman_statistic(ranks)?;
        let average_ranks = average_ranks(ranks);
        let bd = bonferroni_dunn(&average_ranks, ranks.len(), control, alpha)?;
        Ok(Self {
            metric,
            critical_05: chi_square_critical_05(friedman.df),
            average_ranks,
            friedman,
            bd,
        })
    }

    pub fn rejects_null(&self) -> Option<bool> {
        self.critical_05.map(|c| self.friedman.statistic > c)
    }
}

/// Full statistical comparison against a control classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonStats {
    pub table: RankTable,
    pub control: usize,
    pub alpha: f64,
    pub amr: MetricTest,
    pub af1: MetricTest,
    pub robustness: RobustnessRatios,
    /// `[min, q1, median, q3, max]` of each classifier's ratios.
    pub robustness_summary: Vec<[f64; 5]>,
}

impl ComparisonStats {
    pub fn compute(table: RankTable, control: &str, alpha: f64) -> Result<Self> {
        let control = table.classifier_index(control)?;
        let amr = MetricTest::new("amr", &table.rank_amr, control, alpha)?;
        let af1 = MetricTest::new("af1", &table.rank_af1, control, alpha)?;
        let robustness = robustness_ratios(&table.amr)?;
        let robustness_summary = (0..table.classifiers.len())
            .map(|j| {
                let col: Vec<f64> = robustness.ratios.iter().map(|r| r[j]).collect();
                five_number_summary(&col).expect("at least one dataset")
            })
            .collect();
        Ok(Self {
            table,
            control,
            alpha,
            amr,
            af1,
            robustness,
            robustness_summary,
        })
    }

    /// `metric,n_datasets,n_classifiers,friedman,df,critical_05,reject,q_alpha,cd`
    pub fn tests_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record([
            "metric", "n_datasets", "n_classifiers", "friedman", "df", "critical_05", "reject", "q_alpha", "cd",
        ])?;
        for t in [&self.amr, &self.af1] {
            wtr.write_record([
                t.metric.to_string(),
                self.table.datasets.len().to_string(),
                self.table.classifiers.len().to_string(),
                f6(t.friedman.statistic),
                t.friedman.df.to_string(),
                t.critical_05.map(f6).unwrap_or_default(),
                t.rejects_null().map(|b| b.to_string()).unwrap_or_default(),
                f6(t.bd.q_alpha),
                f6(t.bd.critical_difference),
            ])?;
        }
        into_string(wtr)
    }

    /// `metric,classifier,avg_rank,diff_vs_control,significant`
    pub fn significance_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["metric", "classifier", "avg_rank", "diff_vs_control", "significant"])?;
        for t in [&self.amr, &self.af1] {
            let base = t.average_ranks[self.control];
            for (j, c) in self.table.classifiers.iter().enumerate() {
                wtr.write_record([
                    t.metric.to_string(),
                    c.clone(),
                    f6(t.average_ranks[j]),
                    f6(t.average_ranks[j] - base),
                    t.bd.significant[j].to_string(),
                ])?;
            }
        }
        into_string(wtr)
    }

    /// `classifier,min,q1,median,q3,max`
    pub fn robustness_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["classifier", "min", "q1", "median", "q3", "max"])?;
        for (c, s) in self.table.classifiers.iter().zip(&self.robustness_summary) {
            let mut row = vec![c.clone()];
            row.extend(s.iter().map(|v| f6(*v)));
            wtr.write_record(&row)?;
        }
        into_string(wtr)
    }

    pub fn to_markdown(&self) -> String {
        let t = &self.table;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# Classifier comparison\n\n{} datasets, {} classifiers, control `{}`, alpha {}.\n",
            t.datasets.len(),
            t.classifiers.len(),
            t.classifiers[self.control],
            self.alpha
        );
        if !t.dropped.is_empty() {
            let _ = writeln!(s, "Ignored (missing on some dataset): {}\n", t.dropped.join(", "));
        }
        let _ = writeln!(s, "## Friedman test\n\n| Metric | Statistic | df | Critical (0.05) | Reject H0 |\n|---|---:|---:|---:|---|");
        for m in [&self.amr, &self.af1] {
            let _ = writeln!(
                s,
                "| {} | {:.4} | {} | {} | {} |",
                m.metric.to_uppercase(),
                m.friedman.statistic,
                m.friedman.df,
                m.critical_05.map_or("-".into(), |c| format!("{c:.3}")),
                m.rejects_null().map_or("-".into(), |b| if b { "yes".into() } else { "no".to_string() }),
            );
        }
        let _ = writeln!(s, "\n## Bonferroni-Dunn vs `{}`\n", t.classifiers[self.control]);
        let _ = writeln!(
            s,
            "CD (AMR) = {:.4}, CD (AF1) = {:.4}\n",
            self.amr.bd.critical_difference, self.af1.bd.critical_difference
        );
        let _ = writeln!(s, "| Classifier | Avg rank AMR | Sig. | Avg rank AF1 | Sig. |\n|---|---:|---|---:|---|");
        let mark = |b: bool| if b { "*" } else { "" };
        for (j, c) in t.classifiers.iter().enumerate() {
            let _ = writeln!(
                s,
                "| {c} | {:.3} | {} | {:.3} | {} |",
                self.amr.average_ranks[j],
                mark(self.amr.bd.significant[j]),
                self.af1.average_ranks[j],
                mark(self.af1.bd.significant[j]),
            );
        }
        let _ = writeln!(s, "\n## Robustness ratio\n\n| Classifier | Min | Q1 | Median | Q3 | Max |\n|---|---:|---:|---:|---:|---:|");
        for (c, q) in t.classifiers.iter().zip(&self.robustness_summary) {
            let _ = writeln!(s, "| {c} | {:.3} | {:.3} | {:.3} | {:.3} | {:.3} |", q[0], q[1], q[2], q[3], q[4]);
        }
        if !self.robustness.floored_rows.is_empty() {
            let names: Vec<&str> = self.robustness.floored_rows.iter().map(|&i| t.datasets[i].as_str()).collect();
            let _ = writeln!(s, "\nZero best error, ratios floored: {}", names.join(", "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(ds: &str, c: &str, repeat: usize, mr: f64) -> RunRecord {
        RunRecord {
            dataset: ds.into(),
            classifier: c.into(),
            repeat,
            fold: 0,
            mr,
            f1: 1.0 - mr,
            kpc: 1,
            n_test: 10,
        }
    }

    #[test]
    fn aggregate_means_and_ranks() {
        let runs = vec![
            run("a", "x", 0, 0.1),
            run("a", "x", 1, 0.3),
            run("a", "y", 0, 0.2),
            run("a", "y", 1, 0.2),
            run("a", "z", 0, 0.5),
            run("a", "z", 1, 0.5),
        ];
        let aggs = aggregate(&runs);
        assert_eq!(aggs.len(), 3);
        assert!((aggs[0].amr - 0.2).abs() < 1e-15);
        assert_eq!(aggs[0].rank_amr, 1.5);
        assert_eq!(aggs[1].rank_amr, 1.5);
        assert_eq!(aggs[2].rank_amr, 3.0);
        assert_eq!(aggs[2].rank_af1, 3.0);
    }

    #[test]
    fn aggregate_csv_round_trip() {
        let aggs = aggregate(&[run("a", "x", 0, 0.125), run("a", "y", 0, 0.25)]);
        let mut buf = Vec::new();
        write_aggregate_csv(&aggs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dataset,classifier,amr,af1,rank_amr,rank_af1\na,x,0.125000,"));
        assert_eq!(read_aggregate_csv(&buf[..]).unwrap(), aggs);
    }

    #[test]
    fn runs_csv_format() {
        let mut buf = Vec::new();
        write_runs_csv(&[run("a", "x", 0, 1.0 / 3.0)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "dataset,classifier,repeat,fold,mr,f1\na,x,0,0,0.333333,0.666667\n"
        );
    }

    #[test]
    fn dominant_classifier_ranks_first() {
        let mut runs = Vec::new();
        for d in ["d1", "d2", "d3"] {
            runs.push(run(d, "good", 0, 0.05));
            runs.push(run(d, "mid", 0, 0.10));
            runs.push(run(d, "bad", 0, 0.20));
        }
        let table = RankTable::from_aggregates(&aggregate(&runs)).unwrap();
        assert!(table.rank_amr.iter().all(|r| r[0] == 1.0));
        let stats = ComparisonStats::compute(table, "good", 0.05).unwrap();
        assert!(stats.amr.friedman.statistic > 0.0);
        assert!(stats.robustness.ratios.iter().all(|r| r[0] == 1.0));
        assert!(stats.to_markdown().contains("Friedman"));
    }

    #[test]
    fn report_guards() {
        let runs = vec![run("d1", "x", 0, 0.1), run("d1", "y", 0, 0.2)];
        let table = RankTable::from_aggregates(&aggregate(&runs)).unwrap();
        assert_eq!(table.rank_amr, vec![vec![1.0, 2.0]]);
        let err = ComparisonStats::compute(table.clone(), "nope", 0.05).unwrap_err().to_string();
        assert!(err.contains("x, y"), "{err}");
        let err = ComparisonStats::compute(table, "x", 0.05).unwrap_err().to_string();
        assert!(err.contains("at least 2 datasets"), "{err}");
    }

    #[test]
    fn uncommon_classifiers_are_dropped() {
        let runs = vec![
            run("d1", "x", 0, 0.1),
            run("d1", "y", 0, 0.2),
            run("d1", "z", 0, 0.2),
            run("d2", "x", 0, 0.1),
            run("d2", "y", 0, 0.2),
        ];
        let table = RankTable::from_aggregates(&aggregate(&runs)).unwrap();
        assert_eq!(table.classifiers, ["x", "y"]);
        assert_eq!(table.dropped, ["z"]);
    }

    #[test]
    fn summary_table_layout() {
        let md = summary_markdown(&aggregate(&[run("Iris", "LD_GME", 0, 0.038), run("Iris", "V_KNN", 0, 0.04)]));
        assert!(md.contains("| Dataset | LD_GME | V_KNN |"));
        assert!(md.contains("| Iris | **3.80** | 4.00 |"));
        assert!(md.contains("| Iris | **0.9620** | 0.9600 |"));
    }
}
