//! Top-k error ratios.

use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{top_k_indices, Model};

/// Fraction of examples whose label is missing from the model's top-k
/// prediction, for each requested `k`. Labels of `data` must already be in
/// the model's class order (see [`Dataset::align_labels`]).
pub fn topk_error(model: &Model, data: &Dataset, ks: &[usize]) -> Result<BTreeMap<usize, f64>> {
    let m = model.classes();
    if let Some(&bad) = ks.iter().find(|&&k| k == 0 || k > m) {
        return Err(Error::InvalidConfig(format!("top-k size {bad} must lie in 1..={m}")));
    }
    if data.classes() != m {
        return Err(Error::Dimension {
            expected: m,
            actual: data.classes(),
        });
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let mut misses: BTreeMap<usize, usize> = ks.iter().map(|&k| (k, 0)).collect();
    for (x, y) in data.iter() {
        let top = top_k_indices(&model.scores(x)?, max_k);
        // Rank of the true label, or `max_k` if absent from the prefix.
        let rank = top.iter().position(|&j| j == y).unwrap_or(max_k);
        for (&k, count) in misses.iter_mut() {
            if rank >= k {
                *count += 1;
            }
        }
    }
    let n = data.len() as f64;
    Ok(misses.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossSpec;
    use crate::model::SparseVector;
    use ndarray::array;

    fn three_class_model() -> Model {
        // Scores for x = e_1 are the first row: [0.9, 0.1, 0.5].
        Model::new(
            array![[0.9, 0.1, 0.5], [0.0, 1.0, 0.0]],
            vec!["a".into(), "b".into(), "c".into()],
            LossSpec::max_hinge(3).unwrap(),
            1.0,
            0.0,
        )
        .unwrap()
    }

    fn data(labels: Vec<usize>) -> Dataset {
        let xs = labels
            .iter()
            .map(|_| SparseVector::new(vec![0], vec![1.0], 2).unwrap())
            .collect();
        Dataset::new(xs, labels, 2, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    #[test]
    fn hand_sorted_example() {
        let errors = topk_error(&three_class_model(), &data(vec![2]), &[1, 2, 3]).unwrap();
        assert_eq!(errors[&1], 1.0);
        assert_eq!(errors[&2], 0.0);
        assert_eq!(errors[&3], 0.0);
    }

    #[test]
    fn perfect_scorer() {
        let errors = topk_error(&three_class_model(), &data(vec![0, 0]), &[1, 2]).unwrap();
        assert!(errors.values().all(|&e| e == 0.0));
    }

    #[test]
    fn rejects_k_out_of_range() {
        assert!(topk_error(&three_class_model(), &data(vec![0]), &[4]).is_err());
        assert!(topk_error(&three_class_model(), &data(vec![0]), &[0]).is_err());
    }
}
