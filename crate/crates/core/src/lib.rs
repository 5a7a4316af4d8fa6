//! Local-distribution k-nearest-neighbor classification.
//!
//! A query is assigned the class maximizing `N_C * f(x | C) / Z_C`, where
//! `N_C` is the number of class-`C` samples in its k-neighborhood, `f` is a
//! Gaussian (GME) or kernel (KDE) density fitted to those samples and `Z_C`
//! optionally normalizes `f` over the neighborhood ball. Classic kNN
//! variants, a centroid rule and naive Bayes are included as baselines,
//! along with synthetic data generators and a cross-validation and
//! statistics pipeline.
//!
//! ```
//! use ldknn::{datasets, Classifier, DecisionRuleConfig, Rule};
//!
//! let iris = datasets::iris();
//! let clf = Classifier::fit(&iris, DecisionRuleConfig::new(Rule::LdGme, 5)).unwrap();
//! let class = clf.predict(iris.row(0)).unwrap();
//! assert_eq!(iris.class_names()[class], "setosa");
//! ```

pub mod classifiers;
pub mod data;
pub mod datasets;
mod error;
pub mod eval;
pub mod localdist;
pub mod neighbors;
pub mod seed;
pub mod synthgen;

pub use classifiers::{
    ClassificationResult, Classifier, DecisionRuleConfig, LocalOverride, NeighborhoodMode, Rule,
    TieBreak,
};
pub use data::{
    fit_zscore, load_csv, make_stratified_folds, CsvSchema, Dataset, FoldPlan, LabelColumn,
    NormalizationParams,
};
pub use error::{Error, Result};
pub use eval::{cross_validate, CvConfig, EvaluationReport, KpcSelection, NormalizationScope, RunRecord};
pub use localdist::NormalizationMode;
pub use neighbors::{knn_partition, Neighbor, NeighborhoodPartition};
pub use synthgen::{generate, Family, SyntheticSpec};
