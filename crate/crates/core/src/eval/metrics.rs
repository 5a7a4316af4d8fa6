use crate::error::{Error, Result};

fn check(predicted: &[usize], actual: &[usize]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    Ok(())
}

/// Fraction of mismatched labels.
pub fn misclassification_rate(predicted: &[usize], actual: &[usize]) -> Result<f64> {
    check(predicted, actual)?;
    let wrong = predicted.iter().zip(actual).filter(|(p, a)| p != a).count();
    Ok(wrong as f64 / actual.len() as f64)
}

/// Unweighted mean over all `n_classes` classes of the per-class F1 score.
/// A class with precision + recall = 0 (including a class absent from both
/// lists) contributes 0.
pub fn macro_f1(predicted: &[usize], actual: &[usize], n_classes: usize) -> Result<f64> {
    check(predicted, actual)?;
    if n_classes == 0 {
        return Err(Error::InvalidArgument("class set is empty".into()));
    }
    let mut tp = vec![0usize; n_classes];
    let mut pred_count = vec![0usize; n_classes];
    let mut true_count = vec![0usize; n_classes];
    for (&p, &a) in predicted.iter().zip(actual) {
        if p >= n_classes || a >= n_classes {
            return Err(Error::InvalidArgument(format!(
                "label outside class set of size {n_classes}"
            )));
        }
        pred_count[p] += 1;
        true_count[a] += 1;
        if p == a {
            tp[p] += 1;
        }
    }
    let total: f64 = (0..n_classes)
        .map(|c| {
            let precision = if pred_count[c] > 0 { tp[c] as f64 / pred_count[c] as f64 } else { 0.0 };
            let recall = if true_count[c] > 0 { tp[c] as f64 / true_count[c] as f64 } else { 0.0 };
            if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / n_classes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn misclassification_examples() {
        let a = [0, 1, 1, 0, 2, 2, 1, 0, 1, 2];
        assert_eq!(misclassification_rate(&a, &a).unwrap(), 0.0);
        let all_wrong: Vec<usize> = a.iter().map(|x| (x + 1) % 3).collect();
        assert_eq!(misclassification_rate(&all_wrong, &a).unwrap(), 1.0);
        let mut three = a;
        for x in three.iter_mut().take(3) {
            *x = (*x + 1) % 3;
        }
        assert_relative_eq!(misclassification_rate(&three, &a).unwrap(), 0.3);
        assert!(misclassification_rate(&[], &[]).is_err());
        assert!(misclassification_rate(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn macro_f1_examples() {
        let a = [0, 1, 0, 1];
        assert_eq!(macro_f1(&a, &a, 2).unwrap(), 1.0);
        // all predicted as class 0 on balanced truth: class 0 has P = 1/2,
        // R = 1, F1 = 2/3; class 1 has F1 = 0
        assert_relative_eq!(macro_f1(&[0, 0, 0, 0], &a, 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        // class 2 absent everywhere drags the mean down
        assert_relative_eq!(macro_f1(&a, &a, 3).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
    }
}
