use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ldknn::eval::report::read_aggregate_csv;
use ldknn::{eval::ComparisonStats, eval::RankTable};

pub fn cmd_report(inputs: &[PathBuf], control: &str, alpha: f64, out: &Path) -> Result<()> {
    let mut aggs = Vec::new();
    for path in inputs {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        aggs.extend(read_aggregate_csv(file).with_context(|| format!("reading {}", path.display()))?);
    }
    let table = RankTable::from_aggregates(&aggs)?;
    table.classifier_index(control)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let write = |name: &str, text: &str| {
        let path = out.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    };
    // ranks are meaningful even when the tests below are refused
    write("ranks.csv", &table.ranks_csv()?)?;

    let stats = ComparisonStats::compute(table, control, alpha)?;
    write("tests.csv", &stats.tests_csv()?)?;
    write("significance.csv", &stats.significance_csv()?)?;
    write("robustness.csv", &stats.robustness_csv()?)?;
    write("report.md", &stats.to_markdown())?;
    for t in [&stats.amr, &stats.af1] {
        println!(
            "{}: Friedman {:.4} (df {}), CD {:.4}",
            t.metric, t.friedman.statistic, t.friedman.df, t.bd.critical_difference
        );
    }
    Ok(())
}
