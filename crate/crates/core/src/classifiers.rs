//! Decision rules behind one fit/classify interface.
//!
//! | rule | score of class `C` |
//! |------|--------------------|
//! | `LD_GME`, `LD_KDE` | `N_C * f(x | C) / Z_C`, local density fitted on the class's neighbors |
//! | `V_KNN` | `N_C` |
//! | `DW1_KNN`, `DW2_KNN` | sum of Dudani / dual distance weights |
//! | `CAP` | minus the distance to the centroid of the class's `kpc` nearest members |
//! | `NBC_GME`, `NBC_KDE` | `N_{C,T} * f(x | C)`, density fitted on the whole class |
//!
//! The neighborhood size is `k = kpc * n_classes`. Classes with no neighbors
//! score 0. Argmax ties are broken by [`TieBreak`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::localdist::{
    self, fit_gme, fit_kde, GmeModel, KdeModel, LocalDensity, NormalizationMode,
};
use crate::neighbors::{self, distance, NeighborhoodPartition};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    LdGme,
    LdKde,
    VKnn,
    Dw1Knn,
    Dw2Knn,
    Cap,
    NbcGme,
    NbcKde,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::LdGme,
        Rule::LdKde,
        Rule::VKnn,
        Rule::Dw1Knn,
        Rule::Dw2Knn,
        Rule::Cap,
        Rule::NbcGme,
        Rule::NbcKde,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::LdGme => "LD_GME",
            Rule::LdKde => "LD_KDE",
            Rule::VKnn => "V_KNN",
            Rule::Dw1Knn => "DW1_KNN",
            Rule::Dw2Knn => "DW2_KNN",
            Rule::Cap => "CAP",
            Rule::NbcGme => "NBC_GME",
            Rule::NbcKde => "NBC_KDE",
        }
    }

    /// Whether the rule uses `kpc`.
    pub fn uses_neighborhood(&self) -> bool {
        !matches!(self, Rule::NbcGme | Rule::NbcKde)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', ' '], "_");
        Rule::ALL
            .into_iter()
            .find(|r| r.as_str() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = Rule::ALL.iter().map(Rule::as_str).collect();
                Error::InvalidArgument(format!(
                    "unknown rule {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Argmax tie resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Larger neighbor count, then the class of the single nearest neighbor,
    /// then class order.
    #[default]
    LocalEvidence,
    /// First class in class order.
    ClassOrder,
}

/// Which neighborhood the LD rules fit their local densities on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborhoodMode {
    /// One neighborhood of `kpc * n_classes` samples shared by all classes.
    #[default]
    Shared,
    /// The `kpc` nearest members of each class.
    BalancedPerClass,
}

/// Replaces fitted local parameters, used to reduce LD rules to simpler ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LocalOverride {
    #[default]
    None,
    /// GME variances set to 1.
    UnitVariance,
    /// KDE bandwidths set to 1.
    UnitBandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionRuleConfig {
    pub rule: Rule,
    /// Average neighbors per class. Ignored by the NBC rules.
    pub kpc: usize,
    pub normalization: NormalizationMode,
    pub tie_break: TieBreak,
    pub neighborhood: NeighborhoodMode,
    pub local_override: LocalOverride,
    pub seed: u64,
}

impl DecisionRuleConfig {
    pub fn new(rule: Rule, kpc: usize) -> Self {
        Self {
            rule,
            kpc,
            normalization: NormalizationMode::Omit,
            tie_break: TieBreak::default(),
            neighborhood: NeighborhoodMode::default(),
            local_override: LocalOverride::default(),
            seed: 0,
        }
    }

    pub fn with_normalization(mut self, mode: NormalizationMode) -> Self {
        self.normalization = mode;
        self
    }

    pub fn with_tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn with_neighborhood(mut self, mode: NeighborhoodMode) -> Self {
        self.neighborhood = mode;
        self
    }

    pub fn with_override(mut self, o: LocalOverride) -> Self {
        self.local_override = o;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Total neighborhood size for a training set with `n_classes` classes.
    pub fn k(&self, n_classes: usize) -> usize {
        self.kpc * n_classes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub predicted: usize,
    /// Decision value per class.
    pub scores: Vec<f64>,
    /// Log of `scores` for the density rules, which decide in log space.
    pub log_scores: Option<Vec<f64>>,
}

/// Index of the maximum key. Keys compare exactly; `support` and `nearest`
/// feed the [`TieBreak::LocalEvidence`] cascade.
fn argmax(keys: &[f64], support: &[usize], nearest: Option<usize>, tie: TieBreak) -> usize {
    let best = keys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<usize> = (0..keys.len()).filter(|&c| keys[c] == best).collect();
    if candidates.len() > 1 && tie == TieBreak::LocalEvidence {
        let most = candidates.iter().map(|&c| support[c]).max().unwrap_or(0);
        candidates.retain(|&c| support[c] == most);
        if let Some(n) = nearest.filter(|n| candidates.contains(n)) {
            return n;
        }
    }
    candidates.first().copied().unwrap_or(0)
}

/// Dudani weight `(d_k - d_i) / (d_k - d_1)`, 1 when `d_k == d_1`.
pub fn dudani_weight(d_i: f64, d_1: f64, d_k: f64) -> Result<f64> {
    if !(0.0 <= d_1 && d_1 <= d_i && d_i <= d_k) {
        return Err(Error::InvalidArgument(format!(
            "weight needs 0 <= d_1 <= d_i <= d_k, got d_1={d_1}, d_i={d_i}, d_k={d_k}"
        )));
    }
    if d_k == d_1 {
        return Ok(1.0);
    }
    Ok((d_k - d_i) / (d_k - d_1))
}

/// Dual distance weight: the Dudani weight divided by the neighbor's rank,
/// 1 when `d_k == d_1`.
pub fn dual_weight(d_i: f64, d_1: f64, d_k: f64, rank: usize) -> Result<f64> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank starts at 1".into()));
    }
    let w = dudani_weight(d_i, d_1, d_k)?;
    if d_k == d_1 {
        return Ok(1.0);
    }
    Ok(w / rank as f64)
}

enum Fitted {
    Gme(GmeModel),
    Kde(KdeModel),
}

impl LocalDensity for Fitted {
    fn dim(&self) -> usize {
        match self {
            Fitted::Gme(m) => m.dim(),
            Fitted::Kde(m) => m.dim(),
        }
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            Fitted::Gme(m) => m.log_density(x),
            Fitted::Kde(m) => m.log_density(x),
        }
    }
}

fn fit_local(points: &[&[f64]], use_kde: bool, o: LocalOverride) -> Result<Fitted> {
    Ok(if use_kde {
        let m = fit_kde(points)?;
        Fitted::Kde(if o == LocalOverride::UnitBandwidth {
            m.with_unit_bandwidths()
        } else {
            m
        })
    } else {
        let m = fit_gme(points)?;
        Fitted::Gme(if o == LocalOverride::UnitVariance {
            m.with_unit_variance()
        } else {
            m
        })
    })
}

fn check_query(train: &Dataset, query: &[f64]) -> Result<()> {
    if query.len() != train.n_dims() {
        return Err(Error::DimensionMismatch {
            expected: train.n_dims(),
            got: query.len(),
        });
    }
    Ok(())
}

fn shared_neighborhood(
    train: &Dataset,
    query: &[f64],
    cfg: &DecisionRuleConfig,
) -> Result<NeighborhoodPartition> {
    if cfg.kpc == 0 {
        return Err(Error::InvalidArgument("kpc must be at least 1".into()));
    }
    neighbors::knn_partition(train, query, cfg.k(train.n_classes()))
}

fn result_from_logs(
    log_scores: Vec<f64>,
    support: &[usize],
    nearest: Option<usize>,
    tie: TieBreak,
) -> ClassificationResult {
    let predicted = argmax(&log_scores, support, nearest, tie);
    ClassificationResult {
        predicted,
        scores: log_scores.iter().map(|l| l.exp()).collect(),
        log_scores: Some(log_scores),
    }
}

/// Local-distribution rule: per class, fit a GME or KDE model on the class's
/// neighbors, evaluate it at the query, divide by its mass over the
/// neighborhood ball and multiply by the class's neighbor count.
pub fn classify_ld(
    train: &Dataset,
    query: &[f64],
    cfg: &DecisionRuleConfig,
) -> Result<ClassificationResult> {
    let use_kde = match cfg.rule {
        Rule::LdGme => false,
        Rule::LdKde => true,
        other => {
            return Err(Error::InvalidArgument(format!(
                "classify_ld called with rule {other}"
            )))
        }
    };
    check_query(train, query)?;
    cfg.normalization.validate()?;
    let partition = match cfg.neighborhood {
        NeighborhoodMode::Shared => shared_neighborhood(train, query, cfg)?,
        NeighborhoodMode::BalancedPerClass => neighbors::knn_per_class(train, query, cfg.kpc)?,
    };
    let support = partition.counts();
    let mut log_scores = vec![f64::NEG_INFINITY; train.n_classes()];
    for (class, &n_c) in support.iter().enumerate() {
        if n_c == 0 {
            continue;
        }
        let points = partition.points(train, class);
        let model = fit_local(&points, use_kde, cfg.local_override)?;
        let mode = match cfg.normalization {
            NormalizationMode::MonteCarlo { samples, seed: s } => NormalizationMode::MonteCarlo {
                samples,
                seed: seed::derive(cfg.seed ^ s, seed::NORMALIZER, class as u64),
            },
            NormalizationMode::Omit => NormalizationMode::Omit,
        };
        // a zero-radius ball has no volume to integrate over
        let log_z = if partition.radius > 0.0 {
            localdist::log_local_normalizer(&model, query, partition.radius, mode)?
        } else {
            0.0
        };
        log_scores[class] = (n_c as f64).ln() + model.log_density(query) - log_z;
    }
    Ok(result_from_logs(
        log_scores,
        &support,
        partition.nearest_class(),
        cfg.tie_break,
    ))
}

/// Majority vote over the shared neighborhood.
pub fn classify_vknn(
    train: &Dataset,
    query: &[f64],
    cfg: &DecisionRuleConfig,
) -> Result<ClassificationResult> {
    check_query(train, query)?;
    let partition = shared_neighborhood(train, query, cfg)?;
    let support = partition.counts();
    let scores: Vec<f64> = support.iter().map(|&n| n as f64).collect();
    let predicted = argmax(&scores, &support, partition.nearest_class(), cfg.tie_break);
    Ok(ClassificationResult {
        predicted,
        scores,
        log_scores: None,
    })
}

/// Distance-weighted vote. Ranks count from 1 over the tie-inclusive
/// neighbor list sorted by distance; equidistant neighbors share the lower
/// rank.
pub fn classify_dwknn(
    train: &Dataset,
    query: &[f64],
    cfg: &DecisionRuleConfig,
) -> Result<ClassificationResult> {
    let dual = match cfg.rule {
        Rule::Dw1Knn => false,
        Rule::Dw2Knn => true,
        other => {
            return Err(Error::InvalidArgument(format!(
                "classify_dwknn called with rule {other}"
            )))
        }
    };
    check_query(train, query)?;
    let partition = shared_neighborhood(train, query, cfg)?;
    let sorted = partition.sorted();
    let d_1 = sorted.first().map_or(0.0, |(_, n)| n.distance);
    let d_k = sorted.last().map_or(0.0, |(_, n)| n.distance);
    let mut scores = vec![0.0; train.n_classes()];
    let mut rank = 1;
    for (pos, (class, nb)) in sorted.iter().enumerate() {
        if pos > 0 && nb.distance > sorted[pos - 1].1.distance {
            rank = pos + 1;
        }
        scores[*class] += if dual {
            dual_weight(nb.distance, d_1, d_k, rank)?
        } else {
            dudani_weight(nb.distance, d_1, d_k)?
        };
    }
    let support = partition.counts();
    let predicted = argmax(&scores, &support, partition.nearest_class(), cfg.tie_break);
    Ok(ClassificationResult {
        predicted,
        scores,
        log_scores: None,
    })
}

/// Categorical average pattern: the class whose `kpc` nearest members have
/// the nearest centroid.
pub fn classify_cap(
    train: &Dataset,
    query: &[f64],
    cfg: &DecisionRuleConfig,
) -> Result<ClassificationResult> {
    check_query(train, query)?;
    let partition = neighbors::knn_per_class(train, query, cfg.kpc)?;
    let mut scores = Vec::with_capacity(train.n_classes());
    for class in 0..train.n_classes() {
        let centroid = localdist::column_means(&partition.points(train, class))?;
        scores.push(-distance(&centroid, query));
    }
    let support = partition.counts();
    let predicted = argmax(&scores, &support, partition.nearest_class(), cfg.tie_break);
    Ok(ClassificationResult {
        predicted,
        scores,
        log_scores: None,
    })
}

/// Global per-class density models for the naive Bayes rules.
#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    models: Vec<NbcClass>,
}

#[derive(Debug, Clone)]
enum NbcClass {
    Gme(GmeModel),
    Kde(KdeModel),
}

impl NaiveBayesModel {
    pub fn fit(train: &Dataset, use_kde: bool) -> Result<Self> {
        let members = train.class_members();
        let mut models = Vec::with_capacity(members.len());
        for (class, idx) in members.iter().enumerate() {
            if idx.is_empty() {
                return Err(Error::EmptyClass {
                    class: train.class_names()[class].clone(),
                });
            }
            let points: Vec<&[f64]> = idx.iter().map(|&i| train.row(i)).collect();
            models.push(if use_kde {
                NbcClass::Kde(fit_kde(&points)?)
            } else {
                NbcClass::Gme(fit_gme(&points)?)
            });
        }
        Ok(Self { models })
    }

    pub fn classify(&self, query: &[f64], tie: TieBreak) -> Result<ClassificationResult> {
        let mut support = Vec::with_capacity(self.models.len());
        let mut log_scores = Vec::with_capacity(self.models.len());
        for m in &self.models {
            let (n, l) = match m {
                NbcClass::Gme(g) => (g.n_support, g.log_density(query)),
                NbcClass::Kde(k) => (k.n_support, k.log_density(query)),
            };
            support.push(n);
            log_scores.push((n as f64).ln() + l);
        }
        // no neighborhood, so no nearest-neighbor step in the tie cascade
        Ok(result_from_logs(log_scores, &support, None, tie))
    }
}

/// Naive Bayes with global GME or KDE class densities, weighted by class size.
pub fn classify_nbc(
    train: &Dataset,
    query: &[f64],
    cfg: &DecisionRuleConfig,
) -> Result<ClassificationResult> {
    check_query(train, query)?;
    let use_kde = match cfg.rule {
        Rule::NbcGme => false,
        Rule::NbcKde => true,
        other => {
            return Err(Error::InvalidArgument(format!(
                "classify_nbc called with rule {other}"
            )))
        }
    };
    NaiveBayesModel::fit(train, use_kde)?.classify(query, cfg.tie_break)
}

/// A rule bound to its training set. Global models are fitted once.
pub struct Classifier<'a> {
    train: &'a Dataset,
    cfg: DecisionRuleConfig,
    nbc: Option<NaiveBayesModel>,
}

impl<'a> Classifier<'a> {
    pub fn fit(train: &'a Dataset, cfg: DecisionRuleConfig) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("training set is empty".into()));
        }
        cfg.normalization.validate()?;
        let mut nbc = None;
        match cfg.rule {
            Rule::NbcGme | Rule::NbcKde => {
                nbc = Some(NaiveBayesModel::fit(train, cfg.rule == Rule::NbcKde)?);
            }
            Rule::Cap => check_kpc_per_class(train, cfg.kpc)?,
            Rule::LdGme | Rule::LdKde if cfg.neighborhood == NeighborhoodMode::BalancedPerClass => {
                check_kpc_per_class(train, cfg.kpc)?
            }
            _ => {
                let k = cfg.k(train.n_classes());
                if cfg.kpc == 0 || k > train.len() {
                    return Err(Error::KOutOfRange {
                        k,
                        available: train.len(),
                    });
                }
            }
        }
        Ok(Self { train, cfg, nbc })
    }

    pub fn config(&self) -> &DecisionRuleConfig {
        &self.cfg
    }

    pub fn classify(&self, query: &[f64]) -> Result<ClassificationResult> {
        let (train, cfg) = (self.train, &self.cfg);
        match cfg.rule {
            Rule::LdGme | Rule::LdKde => classify_ld(train, query, cfg),
            Rule::VKnn => classify_vknn(train, query, cfg),
            Rule::Dw1Knn | Rule::Dw2Knn => classify_dwknn(train, query, cfg),
            Rule::Cap => classify_cap(train, query, cfg),
            Rule::NbcGme | Rule::NbcKde => {
                check_query(train, query)?;
                self.nbc
                    .as_ref()
                    .expect("NBC model fitted in Classifier::fit")
                    .classify(query, cfg.tie_break)
            }
        }
    }

    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        self.classify(query).map(|r| r.predicted)
    }

    /// Predicted class of every row of `test`, computed in parallel; the
    /// result equals a sequential loop.
    pub fn predict_dataset(&self, test: &Dataset) -> Result<Vec<usize>> {
        (0..test.len())
            .into_par_iter()
            .map(|i| self.predict(test.row(i)))
            .collect()
    }

    /// Sequential variant of [`Classifier::predict_dataset`].
    pub fn predict_dataset_sequential(&self, test: &Dataset) -> Result<Vec<usize>> {
        test.rows().map(|q| self.predict(q)).collect()
    }
}

fn check_kpc_per_class(train: &Dataset, kpc: usize) -> Result<()> {
    if kpc == 0 {
        return Err(Error::InvalidArgument("kpc must be at least 1".into()));
    }
    for (class, &size) in train.class_counts().iter().enumerate() {
        if size < kpc {
            return Err(Error::KExceedsClass {
                k: kpc,
                class: train.class_names()[class].clone(),
                size,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ds(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
        Dataset::new("c", rows, labels, vec!["A".into(), "B".into()]).unwrap()
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.as_str().parse::<Rule>().unwrap(), r);
        }
        assert_eq!("ld-gme".parse::<Rule>().unwrap(), Rule::LdGme);
        assert!("svm".parse::<Rule>().is_err());
    }

    #[test]
    fn dudani_examples() {
        assert_eq!(dudani_weight(2.0, 1.0, 3.0).unwrap(), 0.5);
        assert_eq!(dudani_weight(2.0, 2.0, 2.0).unwrap(), 1.0);
        assert_eq!(dudani_weight(1.0, 1.0, 3.0).unwrap(), 1.0);
        assert_eq!(dudani_weight(3.0, 1.0, 3.0).unwrap(), 0.0);
        assert!(dudani_weight(0.5, 1.0, 3.0).is_err());
        assert!(dudani_weight(4.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn dual_weight_examples() {
        assert_eq!(dual_weight(2.0, 1.0, 3.0, 2).unwrap(), 0.25);
        assert_eq!(dual_weight(1.0, 1.0, 3.0, 1).unwrap(), 1.0);
        assert_eq!(dual_weight(2.0, 2.0, 2.0, 7).unwrap(), 1.0);
        assert!(dual_weight(2.0, 1.0, 3.0, 0).is_err());
    }

    #[test]
    fn ld_zero_distance_dominates() {
        let train = ds(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0, 1]);
        for rule in [Rule::LdGme, Rule::LdKde] {
            let r = classify_ld(&train, &[0.0, 0.0], &DecisionRuleConfig::new(rule, 1)).unwrap();
            assert_eq!(r.predicted, 0);
        }
    }

    #[test]
    fn ld_absent_class_scores_zero() {
        let train = ds(
            vec![vec![0.0], vec![0.1], vec![0.2], vec![5.0]],
            vec![0, 0, 0, 1],
        );
        let r = classify_ld(&train, &[0.05], &DecisionRuleConfig::new(Rule::LdGme, 1)).unwrap();
        assert_eq!(r.predicted, 0);
        assert_eq!(r.scores[1], 0.0);
        assert_eq!(r.log_scores.unwrap()[1], f64::NEG_INFINITY);
    }

    #[test]
    fn ld_k_too_large_is_an_error() {
        let train = ds(vec![vec![0.0], vec![1.0]], vec![0, 1]);
        let err = classify_ld(&train, &[0.0], &DecisionRuleConfig::new(Rule::LdGme, 2)).unwrap_err();
        assert!(err.to_string().contains("smaller kpc"));
        assert!(Classifier::fit(&train, DecisionRuleConfig::new(Rule::VKnn, 2)).is_err());
    }

    #[test]
    fn vknn_votes_and_ties() {
        let unanimous = ds(vec![vec![0.0], vec![0.1], vec![9.0]], vec![1, 1, 0]);
        let r = classify_vknn(&unanimous, &[0.0], &DecisionRuleConfig::new(Rule::VKnn, 1)).unwrap();
        assert_eq!(r.predicted, 1);

        // 5 vs 5 with class B holding the single nearest point
        let mut rows = vec![vec![0.1]];
        let mut labels = vec![1];
        for i in 0..5 {
            rows.push(vec![1.0 + i as f64]);
            labels.push(0);
        }
        for i in 0..4 {
            rows.push(vec![-1.0 - i as f64]);
            labels.push(1);
        }
        let d = ds(rows, labels);
        let r = classify_vknn(&d, &[0.0], &DecisionRuleConfig::new(Rule::VKnn, 5)).unwrap();
        assert_eq!(r.scores, [5.0, 5.0]);
        assert_eq!(r.predicted, 1);
        let cfg = DecisionRuleConfig::new(Rule::VKnn, 5).with_tie_break(TieBreak::ClassOrder);
        assert_eq!(classify_vknn(&d, &[0.0], &cfg).unwrap().predicted, 0);
    }

    #[test]
    fn dwknn_equidistant_reduces_to_vote() {
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let d = ds(rows, vec![0, 1, 1, 1]);
        for rule in [Rule::Dw1Knn, Rule::Dw2Knn] {
            let r = classify_dwknn(&d, &[0.0, 0.0], &DecisionRuleConfig::new(rule, 2)).unwrap();
            assert_eq!(r.scores, [1.0, 3.0]);
            assert_eq!(r.predicted, 1);
        }
    }

    #[test]
    fn dwknn_single_class_neighborhood() {
        let d = ds(vec![vec![0.0], vec![0.5], vec![1.0], vec![10.0]], vec![1, 1, 1, 0]);
        let r = classify_dwknn(&d, &[0.2], &DecisionRuleConfig::new(Rule::Dw2Knn, 1)).unwrap();
        assert_eq!(r.predicted, 1);
    }

    #[test]
    fn dw2_ranks_follow_distance_order() {
        // neighbors at 1 (A), 2 (B), 3 (B): d_1 = 1, d_k = 3
        let d = ds(vec![vec![1.0], vec![2.0], vec![3.0], vec![-9.0]], vec![0, 1, 1, 0]);
        let cfg = DecisionRuleConfig::new(Rule::Dw2Knn, 1);
        // k = 2 -> neighbors at 1 and 2 only
        let r = classify_dwknn(&d, &[0.0], &cfg).unwrap();
        assert_eq!(r.scores, [1.0, 0.0]);
        let d3 = ds(vec![vec![1.0], vec![2.0], vec![3.0], vec![-3.5], vec![9.0], vec![9.5]], vec![0, 1, 1, 0, 0, 1]);
        let r = classify_dwknn(&d3, &[0.0], &DecisionRuleConfig::new(Rule::Dw2Knn, 2)).unwrap();
        // ranks 1..4 at distances 1, 2, 3, 3.5; weights 1, 0.6/2, 0.2/3, 0
        assert_relative_eq!(r.scores[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.scores[1], 0.3 + 0.2 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn cap_picks_nearest_centroid() {
        // class A centroid at distance 1, class B at distance 2
        let d = ds(
            vec![vec![0.5], vec![1.5], vec![-1.5], vec![-2.5], vec![40.0], vec![-40.0]],
            vec![0, 0, 1, 1, 0, 1],
        );
        let r = classify_cap(&d, &[0.0], &DecisionRuleConfig::new(Rule::Cap, 2)).unwrap();
        assert_eq!(r.predicted, 0);
        assert_relative_eq!(r.scores[0], -1.0);
        assert_relative_eq!(r.scores[1], -2.0);
        let r = classify_cap(&d, &[-2.0], &DecisionRuleConfig::new(Rule::Cap, 2)).unwrap();
        assert_eq!(r.predicted, 1);
        assert_eq!(r.scores[1], 0.0);
        assert!(classify_cap(&d, &[0.0], &DecisionRuleConfig::new(Rule::Cap, 4)).is_err());
    }

    #[test]
    fn nbc_examples() {
        let d = ds(vec![vec![-1.0], vec![1.0], vec![9.0], vec![11.0]], vec![0, 0, 1, 1]);
        for rule in [Rule::NbcGme, Rule::NbcKde] {
            let r = classify_nbc(&d, &[0.0], &DecisionRuleConfig::new(rule, 1)).unwrap();
            assert_eq!(r.predicted, 0);
        }
        // mirrored classes, query on the axis of symmetry
        let m = ds(vec![vec![-3.0], vec![-1.0], vec![1.0], vec![3.0]], vec![0, 0, 1, 1]);
        for tie in [TieBreak::LocalEvidence, TieBreak::ClassOrder] {
            let cfg = DecisionRuleConfig::new(Rule::NbcGme, 1).with_tie_break(tie);
            let r = classify_nbc(&m, &[0.0], &cfg).unwrap();
            assert_eq!(r.scores[0], r.scores[1]);
            assert_eq!(r.predicted, 0);
        }
    }

    #[test]
    fn nbc_rejects_empty_class() {
        let d = ds(vec![vec![0.0], vec![1.0]], vec![0, 0]);
        assert!(matches!(
            classify_nbc(&d, &[0.0], &DecisionRuleConfig::new(Rule::NbcGme, 1)),
            Err(Error::EmptyClass { .. })
        ));
    }

    #[test]
    fn wrong_rule_for_entry_point_is_rejected() {
        let d = ds(vec![vec![0.0], vec![1.0]], vec![0, 1]);
        let cfg = DecisionRuleConfig::new(Rule::VKnn, 1);
        assert!(classify_ld(&d, &[0.0], &cfg).is_err());
        assert!(classify_dwknn(&d, &[0.0], &cfg).is_err());
        assert!(classify_nbc(&d, &[0.0], &cfg).is_err());
    }

    #[test]
    fn monte_carlo_normalization_runs_and_is_deterministic() {
        let d = ds(
            vec![vec![0.0, 0.0], vec![0.3, 0.1], vec![0.2, -0.2], vec![1.0, 1.0], vec![0.9, 1.2], vec![1.1, 0.8]],
            vec![0, 0, 0, 1, 1, 1],
        );
        let cfg = DecisionRuleConfig::new(Rule::LdKde, 3)
            .with_normalization(NormalizationMode::MonteCarlo { samples: 500, seed: 4 });
        let a = classify_ld(&d, &[0.4, 0.4], &cfg).unwrap();
        let b = classify_ld(&d, &[0.4, 0.4], &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.scores.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn parallel_prediction_matches_sequential() {
        let spec = crate::synthgen::SyntheticSpec::new(crate::synthgen::Family::T3, 3, 60, 2);
        let d = crate::synthgen::generate(&spec).unwrap();
        let train = d.select(&(0..120).step_by(2).collect::<Vec<_>>());
        let test = d.select(&(1..120).step_by(2).collect::<Vec<_>>());
        for rule in Rule::ALL {
            let c = Classifier::fit(&train, DecisionRuleConfig::new(rule, 3)).unwrap();
            assert_eq!(
                c.predict_dataset(&test).unwrap(),
                c.predict_dataset_sequential(&test).unwrap()
            );
        }
    }
}
