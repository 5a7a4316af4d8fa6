//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ldknn::data::{load_csv, CsvSchema, LabelColumn};
use ldknn::{
    datasets, generate, seed, CvConfig, Dataset, DecisionRuleConfig, Family, KpcSelection,
    NeighborhoodMode, NormalizationMode, NormalizationScope, Rule, SyntheticSpec, TieBreak,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Relative paths are resolved against the config file's directory.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub normalization_scope: ScopeName,
    pub cv: CvSection,
    #[serde(default)]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub classifiers: Vec<ClassifierEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeName {
    #[default]
    Global,
    TrainFold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSection {
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default = "default_repeats")]
    pub n_repeats: usize,
    /// Required; there is no implicit entropy source.
    pub seed: Option<u64>,
}

fn default_folds() -> usize {
    5
}

fn default_repeats() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticEntry>,
    /// CSV only: zero-based label column, default last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
    /// CSV only: default is to detect a header row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub has_header: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticEntry {
    pub family: String,
    pub p: usize,
    pub n: usize,
    /// Default: derived from the master seed and the dataset's position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionName {
    #[default]
    Nested,
    Optimistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierEntry {
    pub rule: String,
    /// Label in reports; defaults to the rule name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kpc: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kpc_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_folds: Option<usize>,
    /// Monte Carlo samples for the local normalizer; omitted means none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhood: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_break: Option<String>,
}

/// A classifier ready to cross-validate.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierPlan {
    pub name: String,
    pub rule: DecisionRuleConfig,
    pub selection: KpcSelection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        for d in &mut cfg.datasets {
            if let Some(p) = d.csv.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cv.seed.is_none() {
            bail!("config field `cv.seed` is missing; a master seed is required");
        }
        if self.cv.n_folds < 2 {
            bail!("`cv.n_folds` must be at least 2");
        }
        if self.cv.n_repeats == 0 {
            bail!("`cv.n_repeats` must be positive");
        }
        if self.datasets.is_empty() {
            bail!("config needs at least one `[[datasets]]` entry");
        }
        if self.classifiers.is_empty() {
            bail!("config needs at least one `[[classifiers]]` entry");
        }
        for d in &self.datasets {
            let n = [d.csv.is_some(), d.builtin.is_some(), d.synthetic.is_some()]
                .iter()
                .filter(|b| **b)
                .count();
            if n != 1 {
                bail!(
                    "dataset `{}` must set exactly one of `csv`, `builtin`, `synthetic`",
                    d.name
                );
            }
        }
        let mut names = Vec::new();
        for c in &self.classifiers {
            let plan = c.plan().with_context(|| format!("classifier `{}`", c.rule))?;
            if names.contains(&plan.name) {
                bail!("classifier name `{}` is used twice; set `name`", plan.name);
            }
            names.push(plan.name);
        }
        Ok(())
    }

    pub fn master_seed(&self) -> u64 {
        self.cv.seed.expect("validated")
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            n_folds: self.cv.n_folds,
            n_repeats: self.cv.n_repeats,
            seed: self.master_seed(),
            scope: match self.normalization_scope {
                ScopeName::Global => NormalizationScope::Global,
                ScopeName::TrainFold => NormalizationScope::TrainFold,
            },
            selection: KpcSelection::Fixed,
            parallel: true,
        }
    }

    /// Load dataset `index`, renamed to its config name.
    pub fn load_dataset(&self, index: usize) -> Result<Dataset> {
        let entry = &self.datasets[index];
        let d = if let Some(path) = &entry.csv {
            let schema = CsvSchema {
                has_header: entry.has_header,
                label_column: entry.label_column.map_or(LabelColumn::Last, LabelColumn::Index),
            };
            load_csv(path, &schema)?
        } else if let Some(name) = &entry.builtin {
            datasets::builtin(name)?
        } else {
            let s = entry.synthetic.as_ref().expect("validated");
            let family: Family = s.family.parse()?;
            let seed = s
                .seed
                .unwrap_or_else(|| seed::derive(self.master_seed(), seed::DATASET, index as u64));
            generate(&SyntheticSpec::new(family, s.p, s.n, seed))?
        };
        Ok(d.with_name(entry.name.clone()))
    }
}

impl ClassifierEntry {
    pub fn plan(&self) -> Result<ClassifierPlan> {
        let rule: Rule = self.rule.parse()?;
        let selection = match (&self.kpc_grid, self.selection) {
            (Some(grid), sel) => {
                if grid.is_empty() || grid.contains(&0) {
                    bail!("`kpc_grid` must be non-empty with positive entries");
                }
                match sel.unwrap_or_default() {
                    SelectionName::Nested => KpcSelection::Nested {
                        grid: grid.clone(),
                        inner_folds: self.inner_folds.unwrap_or(5),
                    },
                    SelectionName::Optimistic => KpcSelection::Optimistic { grid: grid.clone() },
                }
            }
            (None, Some(_)) => bail!("`selection` needs a `kpc_grid`"),
            (None, None) => KpcSelection::Fixed,
        };
        let kpc = match (self.kpc, &selection) {
            (Some(k), KpcSelection::Fixed) if k > 0 => k,
            (Some(_), KpcSelection::Fixed) => bail!("`kpc` must be positive"),
            (Some(_), _) => bail!("set either `kpc` or `kpc_grid`, not both"),
            (None, KpcSelection::Fixed) if rule.uses_neighborhood() => {
                bail!("rule {rule} needs `kpc` or `kpc_grid`")
            }
            (None, KpcSelection::Fixed) => 1,
            (None, KpcSelection::Nested { grid, .. } | KpcSelection::Optimistic { grid }) => grid[0],
        };
        let mut cfg = DecisionRuleConfig::new(rule, kpc);
        if let Some(samples) = self.mc_samples {
            cfg = cfg.with_normalization(NormalizationMode::MonteCarlo { samples, seed: 0 });
            cfg.normalization.validate()?;
        }
        if let Some(n) = &self.neighborhood {
            cfg = cfg.with_neighborhood(match n.as_str() {
                "shared" => NeighborhoodMode::Shared,
                "balanced" => NeighborhoodMode::BalancedPerClass,
                other => bail!("unknown neighborhood `{other}`; expected shared or balanced"),
            });
        }
        if let Some(t) = &self.tie_break {
            cfg = cfg.with_tie_break(match t.as_str() {
                "local_evidence" => TieBreak::LocalEvidence,
                "class_order" => TieBreak::ClassOrder,
                other => bail!("unknown tie_break `{other}`; expected local_evidence or class_order"),
            });
        }
        Ok(ClassifierPlan {
            name: self.name.clone().unwrap_or_else(|| rule.to_string()),
            rule: cfg,
            selection,
        })
    }
}
