//! Rank-based comparison of several classifiers over several datasets.

use crate::error::{Error, Result};

/// Average (tie-adjusted) ranks of each row; rank 1 is the best entry.
pub fn rank_row(values: &[f64], lower_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if lower_is_better {
            o
        } else {
            o.reverse()
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end share the mean of ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn rank_matrix(matrix: &[Vec<f64>], lower_is_better: bool) -> Vec<Vec<f64>> {
    matrix.iter().map(|row| rank_row(row, lower_is_better)).collect()
}

/// Column means of a rank matrix.
pub fn average_ranks(ranks: &[Vec<f64>]) -> Vec<f64> {
    let n = ranks.len() as f64;
    let k = ranks.first().map_or(0, Vec::len);
    (0..k)
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub df: usize,
}

/// Friedman chi-square statistic over a datasets x classifiers rank table:
/// `12 N / (k (k + 1)) * (sum_j R_j^2 - k (k + 1)^2 / 4)` with `R_j` the
/// average rank of classifier `j`.
pub fn friedman_statistic(ranks: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = ranks.len();
    let k = ranks.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Friedman test needs at least 2 datasets, got {n}"
        )));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "Friedman test needs at least 2 classifiers, got {k}"
        )));
    }
    if ranks.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidArgument("rank table rows differ in length".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = average_ranks(ranks).iter().map(|r| r * r).sum();
    let statistic = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    Ok(FriedmanResult {
        statistic,
        df: k - 1,
    })
}

/// Upper 5% points of the chi-square distribution, df = 1..=30.
const CHI2_05: [f64; 30] = [
    3.841, 5.991, 7.815, 9.488, 11.070, 12.592, 14.067, 15.507, 16.919, 18.307, 19.675, 21.026,
    22.362, 23.685, 24.996, 26.296, 27.587, 28.869, 30.144, 31.410, 32.671, 33.924, 35.172,
    36.415, 37.652, 38.885, 40.113, 41.337, 42.557, 43.773,
];

/// Chi-square critical value at significance 0.05, for `1 <= df <= 30`.
pub fn chi_square_critical_05(df: usize) -> Option<f64> {
    df.checked_sub(1).and_then(|i| CHI2_05.get(i)).copied()
}

/// Two-tailed Bonferroni-Dunn critical values `z_{1 - alpha / (2 (k - 1))}`
/// for k = 2..=20 classifiers.
const BD_Q_05: [f64; 19] = [
    1.960, 2.241, 2.394, 2.498, 2.576, 2.638, 2.690, 2.734, 2.773, 2.807, 2.838, 2.865, 2.891,
    2.914, 2.935, 2.955, 2.974, 2.991, 3.008,
];
const BD_Q_10: [f64; 19] = [
    1.645, 1.960, 2.128, 2.241, 2.326, 2.394, 2.450, 2.498, 2.539, 2.576, 2.609, 2.638, 2.665,
    2.690, 2.713, 2.734, 2.754, 2.773, 2.790,
];

/// Critical value `q_alpha` for `k` classifiers; alpha must be 0.05 or 0.10.
pub fn bonferroni_dunn_q(k: usize, alpha: f64) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &BD_Q_05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &BD_Q_10
    } else {
        return Err(Error::InvalidArgument(format!(
            "Bonferroni-Dunn table covers alpha 0.05 and 0.10, got {alpha}"
        )));
    };
    k.checked_sub(2)
        .and_then(|i| table.get(i))
        .copied()
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "Bonferroni-Dunn table covers 2..=20 classifiers, got {k}"
            ))
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BonferroniDunn {
    pub q_alpha: f64,
    pub critical_difference: f64,
    pub control: usize,
    /// Whether each classifier's average rank differs from the control's by
    /// more than the critical difference. Always false for the control.
    pub significant: Vec<bool>,
}

/// Bonferroni-Dunn post-hoc comparison of every classifier against `control`,
/// with `CD = q_alpha * sqrt(k (k + 1) / (6 N))`.
pub fn bonferroni_dunn(
    avg_ranks: &[f64],
    n_datasets: usize,
    control: usize,
    alpha: f64,
) -> Result<BonferroniDunn> {
    let k = avg_ranks.len();
    if control >= k {
        return Err(Error::InvalidArgument(format!(
            "control index {control} out of range for {k} classifiers"
        )));
    }
    if n_datasets == 0 {
        return Err(Error::InvalidArgument("no datasets".into()));
    }
    let q_alpha = bonferroni_dunn_q(k, alpha)?;
    let kf = k as f64;
    let cd = q_alpha * (kf * (kf + 1.0) / (6.0 * n_datasets as f64)).sqrt();
    let significant = avg_ranks
        .iter()
        .map(|r| (r - avg_ranks[control]).abs() > cd)
        .collect();
    Ok(BonferroniDunn {
        q_alpha,
        critical_difference: cd,
        control,
        significant,
    })
}

/// Floor for the row minimum when the best error on a dataset is 0.
pub const ROBUSTNESS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRatios {
    /// `ratios[dataset][classifier] = e / min(e over the row)`.
    pub ratios: Vec<Vec<f64>>,
    /// Rows whose minimum error was 0; numerator and denominator are both
    /// floored at [`ROBUSTNESS_FLOOR`] there, so the row minima stay exactly 1.
    pub floored_rows: Vec<usize>,
}

/// Each error divided by the smallest error of its row.
pub fn robustness_ratios(errors: &[Vec<f64>]) -> Result<RobustnessRatios> {
    if errors.is_empty() || errors.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("error matrix is empty".into()));
    }
    let mut floored_rows = Vec::new();
    let ratios = errors
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let min = row.iter().copied().fold(f64::INFINITY, f64::min);
            if min > 0.0 {
                row.iter().map(|e| e / min).collect()
            } else {
                floored_rows.push(i);
                row.iter()
                    .map(|e| e.max(ROBUSTNESS_FLOOR) / ROBUSTNESS_FLOOR)
                    .collect()
            }
        })
        .collect();
    Ok(RobustnessRatios {
        ratios,
        floored_rows,
    })
}

/// Five-number summary `[min, q1, median, q3, max]` with linear
/// interpolation between order statistics.
pub fn five_number_summary(values: &[f64]) -> Option<[f64; 5]> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some([v[0], q(0.25), q(0.5), q(0.75), v[v.len() - 1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(rank_row(&[0.1, 0.3, 0.2], true), [1.0, 3.0, 2.0]);
        assert_eq!(rank_row(&[0.1, 0.3, 0.2], false), [3.0, 1.0, 2.0]);
        assert_eq!(rank_row(&[0.2, 0.1, 0.2, 0.2], true), [3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn friedman_boundaries() {
        // every classifier always holds the same rank: maximal statistic N (k - 1)
        let fixed = vec![vec![1.0, 2.0, 3.0, 4.0]; 6];
        let f = friedman_statistic(&fixed).unwrap();
        assert_relative_eq!(f.statistic, 6.0 * 3.0, epsilon = 1e-12);
        assert_eq!(f.df, 3);
        // fully tied
        let tied = vec![vec![2.5; 4]; 6];
        assert_relative_eq!(friedman_statistic(&tied).unwrap().statistic, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn friedman_shape_errors() {
        assert!(friedman_statistic(&[vec![1.0, 2.0]]).is_err());
        assert!(friedman_statistic(&[vec![1.0], vec![1.0]]).is_err());
        assert!(friedman_statistic(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn chi_square_table() {
        assert_eq!(chi_square_critical_05(11), Some(19.675));
        assert_eq!(chi_square_critical_05(0), None);
        assert_eq!(chi_square_critical_05(31), None);
    }

    #[test]
    fn bonferroni_dunn_examples() {
        let bd = bonferroni_dunn(&[2.0, 2.0, 2.0], 10, 0, 0.05).unwrap();
        assert!(bd.significant.iter().all(|&s| !s));
        let cd = bonferroni_dunn(&[1.0, 1.0], 10, 0, 0.05).unwrap().critical_difference;
        let bd = bonferroni_dunn(&[1.0, 1.0 + 10.0 * cd], 10, 0, 0.05).unwrap();
        assert_eq!(bd.significant, [false, true]);
        assert!(bonferroni_dunn(&[1.0; 21], 10, 0, 0.05).is_err());
        assert!(bonferroni_dunn(&[1.0; 3], 10, 0, 0.01).is_err());
        assert!(bonferroni_dunn(&[1.0; 3], 10, 5, 0.05).is_err());
    }

    #[test]
    fn robustness_examples() {
        let r = robustness_ratios(&[vec![0.1, 0.2]]).unwrap();
        assert_eq!(r.ratios[0], [1.0, 2.0]);
        assert!(r.floored_rows.is_empty());
        let r = robustness_ratios(&[vec![0.0, 0.05, 0.0]]).unwrap();
        assert_eq!(r.floored_rows, [0]);
        assert_eq!(r.ratios[0][0], 1.0);
        assert_eq!(r.ratios[0][2], 1.0);
        assert!(r.ratios[0][1] > 1.0);
        assert!(robustness_ratios(&[]).is_err());
    }

    #[test]
    fn five_numbers() {
        assert_eq!(five_number_summary(&[3.0, 1.0, 2.0, 5.0, 4.0]), Some([1.0, 2.0, 3.0, 4.0, 5.0]));
        assert_eq!(five_number_summary(&[]), None);
        assert_eq!(five_number_summary(&[1.0, 2.0]).unwrap()[2], 1.5);
    }
}
