//! Repeated stratified cross-validation.
//!
//! Repeat `r` uses the fold plan seeded with `derive(seed, REPEAT, r)`. The
//! (repeat, fold) units are evaluated in parallel and collected in order, so
//! the output does not depend on thread scheduling.

use rayon::prelude::*;

use crate::classifiers::{Classifier, DecisionRuleConfig};
use crate::data::{fit_zscore, make_stratified_folds, Dataset};
use crate::error::{Error, Result};
use crate::eval::metrics::{macro_f1, misclassification_rate};
use crate::seed;

/// Where z-score statistics are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationScope {
    /// Once on the full dataset before splitting.
    #[default]
    Global,
    /// On each training split; the held-out fold reuses those statistics.
    TrainFold,
    /// Data is used as given.
    None,
}

/// How `kpc` is chosen for each training split.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum KpcSelection {
    /// Use the configured `kpc`.
    #[default]
    Fixed,
    /// Inner stratified CV on the training split only; lowest inner error
    /// wins, ties go to the smaller `kpc`.
    Nested { grid: Vec<usize>, inner_folds: usize },
    /// Run the full CV for every grid value and keep the value with the
    /// lowest mean error over the test folds. Optimistically biased.
    Optimistic { grid: Vec<usize> },
}

impl KpcSelection {
    pub const DEFAULT_GRID: [usize; 8] = [1, 2, 3, 5, 7, 10, 15, 20];

    pub fn nested_default() -> Self {
        KpcSelection::Nested {
            grid: Self::DEFAULT_GRID.to_vec(),
            inner_folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
    pub scope: NormalizationScope,
    pub selection: KpcSelection,
    /// Evaluate (repeat, fold) units on the rayon pool.
    pub parallel: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            n_folds: 5,
            n_repeats: 10,
            seed: 0,
            scope: NormalizationScope::Global,
            selection: KpcSelection::Fixed,
            parallel: true,
        }
    }
}

/// Metrics of one classifier on one held-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub classifier: String,
    pub repeat: usize,
    pub fold: usize,
    pub mr: f64,
    pub f1: f64,
    /// `kpc` used on this fold.
    pub kpc: usize,
    pub n_test: usize,
}

fn predict_split(train: &Dataset, test: &Dataset, cfg: DecisionRuleConfig) -> Result<Vec<usize>> {
    // units already run in parallel; predict sequentially inside one
    Classifier::fit(train, cfg)?.predict_dataset_sequential(test)
}

fn inner_select(
    train: &Dataset,
    cfg: &DecisionRuleConfig,
    grid: &[usize],
    inner_folds: usize,
    inner_seed: u64,
) -> Result<usize> {
    let plan = make_stratified_folds(train, inner_folds, inner_seed)?;
    let mut best: Option<(f64, usize)> = None;
    for &kpc in grid {
        let mut wrong = 0usize;
        let mut feasible = true;
        for fold in 0..inner_folds {
            let tr = train.select(&plan.train_indices(fold));
            let te = train.select(&plan.test_indices(fold));
            match predict_split(&tr, &te, DecisionRuleConfig { kpc, ..*cfg }) {
                Ok(pred) => wrong += pred.iter().zip(te.labels()).filter(|(p, a)| p != a).count(),
                Err(Error::KOutOfRange { .. } | Error::KExceedsClass { .. }) => {
                    feasible = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !feasible {
            continue;
        }
        let err = wrong as f64 / train.len() as f64;
        if best.is_none_or(|(b, _)| err < b) {
            best = Some((err, kpc));
        }
    }
    best.map(|(_, k)| k).ok_or_else(|| {
        Error::InvalidArgument(format!("no kpc in {grid:?} is feasible for this training split"))
    })
}

/// Cross-validate one rule on one dataset.
pub fn cross_validate(d: &Dataset, cfg: &DecisionRuleConfig, cv: &CvConfig) -> Result<Vec<RunRecord>> {
    if cv.n_repeats == 0 {
        return Err(Error::InvalidArgument("n_repeats must be positive".into()));
    }
    if let KpcSelection::Optimistic { grid } = &cv.selection {
        return optimistic(d, cfg, grid, cv);
    }
    let base = match cv.scope {
        NormalizationScope::Global => fit_zscore(d)?.apply(d)?,
        _ => d.clone(),
    };
    let plans = (0..cv.n_repeats)
        .map(|r| make_stratified_folds(&base, cv.n_folds, seed::derive(cv.seed, seed::REPEAT, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let units: Vec<(usize, usize)> = (0..cv.n_repeats)
        .flat_map(|r| (0..cv.n_folds).map(move |f| (r, f)))
        .collect();

    let run_unit = |&(repeat, fold): &(usize, usize)| -> Result<RunRecord> {
        let plan = &plans[repeat];
        let mut train = base.select(&plan.train_indices(fold));
        let mut test = base.select(&plan.test_indices(fold));
        if cv.scope == NormalizationScope::TrainFold {
            let params = fit_zscore(&train)?;
            train = params.apply(&train)?;
            test = params.apply(&test)?;
        }
        let kpc = match &cv.selection {
            KpcSelection::Nested { grid, inner_folds } if cfg.rule.uses_neighborhood() => {
                let inner_seed = seed::derive(plan.seed, seed::INNER, fold as u64);
                inner_select(&train, cfg, grid, *inner_folds, inner_seed)?
            }
            _ => cfg.kpc,
        };
        let predicted = predict_split(&train, &test, DecisionRuleConfig { kpc, ..*cfg })?;
        Ok(RunRecord {
            dataset: d.name().to_string(),
            classifier: cfg.rule.to_string(),
            repeat,
            fold,
            mr: misclassification_rate(&predicted, test.labels())?,
            f1: macro_f1(&predicted, test.labels(), test.n_classes())?,
            kpc,
            n_test: test.len(),
        })
    };
    let annotate = |unit: &(usize, usize), r: Result<RunRecord>| {
        r.map_err(|e| Error::Fold {
            repeat: unit.0,
            fold: unit.1,
            source: Box::new(e),
        })
    };

    if cv.parallel {
        units.par_iter().map(|u| annotate(u, run_unit(u))).collect()
    } else {
        units.iter().map(|u| annotate(u, run_unit(u))).collect()
    }
}

fn optimistic(d: &Dataset, cfg: &DecisionRuleConfig, grid: &[usize], cv: &CvConfig) -> Result<Vec<RunRecord>> {
    let fixed = CvConfig {
        selection: KpcSelection::Fixed,
        ..cv.clone()
    };
    let mut best: Option<(f64, Vec<RunRecord>)> = None;
    let candidates: &[usize] = if cfg.rule.uses_neighborhood() { grid } else { &[cfg.kpc] };
    for &kpc in candidates {
        let rows = match cross_validate(d, &DecisionRuleConfig { kpc, ..*cfg }, &fixed) {
            Ok(rows) => rows,
            Err(Error::Fold { source, .. })
                if matches!(*source, Error::KOutOfRange { .. } | Error::KExceedsClass { .. }) =>
            {
                continue
            }
            Err(e) => return Err(e),
        };
        let amr = rows.iter().map(|r| r.mr).sum::<f64>() / rows.len() as f64;
        if best.as_ref().is_none_or(|(b, _)| amr < *b) {
            best = Some((amr, rows));
        }
    }
    best.map(|(_, rows)| rows).ok_or_else(|| {
        Error::InvalidArgument(format!("no kpc in {grid:?} is feasible for {}", d.name()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::Rule;
    use crate::synthgen::{generate, Family, SyntheticSpec};

    fn small() -> Dataset {
        generate(&SyntheticSpec::new(Family::T2, 3, 40, 6)).unwrap()
    }

    #[test]
    fn every_sample_is_tested_once_per_repeat() {
        let d = small();
        let cv = CvConfig {
            n_repeats: 2,
            seed: 3,
            ..Default::default()
        };
        let rows = cross_validate(&d, &DecisionRuleConfig::new(Rule::VKnn, 3), &cv).unwrap();
        assert_eq!(rows.len(), 10);
        for r in 0..2 {
            let n: usize = rows.iter().filter(|x| x.repeat == r).map(|x| x.n_test).sum();
            assert_eq!(n, d.len());
        }
        for row in &rows {
            assert!((0.0..=1.0).contains(&row.mr) && (0.0..=1.0).contains(&row.f1));
        }
    }

    #[test]
    fn deterministic_and_parallel_equivalent() {
        let d = small();
        let cfg = DecisionRuleConfig::new(Rule::LdGme, 3);
        for scope in [NormalizationScope::Global, NormalizationScope::TrainFold] {
            let cv = CvConfig {
                n_repeats: 2,
                seed: 9,
                scope,
                selection: KpcSelection::nested_default(),
                ..Default::default()
            };
            let a = cross_validate(&d, &cfg, &cv).unwrap();
            let b = cross_validate(&d, &cfg, &cv).unwrap();
            let c = cross_validate(&d, &cfg, &CvConfig { parallel: false, ..cv.clone() }).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn errors_are_annotated_with_fold() {
        let d = small();
        let err = cross_validate(&d, &DecisionRuleConfig::new(Rule::VKnn, 1000), &CvConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::Fold { repeat: 0, fold: 0, .. }), "{err}");
    }

    #[test]
    fn optimistic_picks_a_grid_value() {
        let d = small();
        let cv = CvConfig {
            n_repeats: 1,
            selection: KpcSelection::Optimistic { grid: vec![1, 5, 1000] },
            ..Default::default()
        };
        let rows = cross_validate(&d, &DecisionRuleConfig::new(Rule::Dw1Knn, 1), &cv).unwrap();
        assert!(rows.iter().all(|r| r.kpc == 1 || r.kpc == 5));
    }
}
