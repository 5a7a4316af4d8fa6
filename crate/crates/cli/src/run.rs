use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ldknn::eval::report::{summary_markdown, write_aggregate_csv, write_runs_csv};
use ldknn::{cross_validate, CvConfig, EvaluationReport};

use crate::config::ExperimentConfig;

pub const RUNS_FILE: &str = "runs.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const SUMMARY_FILE: &str = "summary.md";

pub fn cmd_run(config_path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config_path)?;
    let plans = cfg
        .classifiers
        .iter()
        .map(|c| c.plan())
        .collect::<Result<Vec<_>>>()?;
    let base_cv = cfg.cv_config();
    let master = cfg.master_seed();

    let mut runs = Vec::new();
    let mut errors: Vec<String> = Vec::new();
    let total = cfg.datasets.len() * plans.len();
    for (di, entry) in cfg.datasets.iter().enumerate() {
        let data = match cfg.load_dataset(di) {
            Ok(d) => d,
            Err(e) => {
                for p in &plans {
                    errors.push(format!("{} / {}: {e:#}", entry.name, p.name));
                }
                continue;
            }
        };
        log::info!(
            "dataset {}: n={} d={} classes={}",
            data.name(),
            data.len(),
            data.n_dims(),
            data.n_classes()
        );
        for plan in &plans {
            let cv = CvConfig {
                selection: plan.selection.clone(),
                ..base_cv.clone()
            };
            match cross_validate(&data, &plan.rule.with_seed(master), &cv) {
                Ok(rows) => runs.extend(rows.into_iter().map(|mut r| {
                    r.classifier = plan.name.clone();
                    r
                })),
                Err(e) => {
                    log::error!("{} / {}: {e}", entry.name, plan.name);
                    errors.push(format!("{} / {}: {e}", entry.name, plan.name));
                }
            }
        }
    }

    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let report = EvaluationReport::from_runs(runs);
    let write = |name: &str, bytes: &[u8]| {
        let path = cfg.output_dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    };
    let mut buf = Vec::new();
    write_runs_csv(&report.runs, &mut buf)?;
    write(RUNS_FILE, &buf)?;
    buf.clear();
    write_aggregate_csv(&report.aggregates, &mut buf)?;
    write(AGGREGATE_FILE, &buf)?;

    let mut md = summary_markdown(&report.aggregates);
    if !errors.is_empty() {
        let _ = writeln!(md, "\n## Errors\n");
        for e in &errors {
            let _ = writeln!(md, "- {e}");
        }
    }
    write(SUMMARY_FILE, md.as_bytes())?;

    println!(
        "{} of {total} cells completed; results in {}",
        total - errors.len(),
        cfg.output_dir.display()
    );
    if !errors.is_empty() {
        bail!("{} of {total} cells failed:\n  {}", errors.len(), errors.join("\n  "));
    }
    Ok(())
}
