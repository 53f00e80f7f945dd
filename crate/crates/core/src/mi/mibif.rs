//! Mutual-information-based feature selection: rank features by the
//! histogram-estimated mutual information between their values (8 equal
//! frequency bins) and the class label.

use super::MiError;

const N_BINS: usize = 8;
const MIN_TRIALS: usize = 8;

/// Equal-frequency bin edges (7 interior edges for 8 bins).
fn quantile_edges(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (1..N_BINS)
        .map(|j| sorted[j * sorted.len() / N_BINS])
        .collect()
}

fn bin_of(v: f64, edges: &[f64]) -> usize {
    edges.partition_point(|e| *e <= v)
}

/// Mutual information (nats) between a binned feature column and the label.
fn column_mi(column: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    let n = column.len();
    let edges = quantile_edges(column);
    let mut joint = vec![vec![0usize; n_classes]; N_BINS];
    let mut bin_counts = vec![0usize; N_BINS];
    let mut class_counts = vec![0usize; n_classes];
    for (v, &y) in column.iter().zip(labels) {
        let b = bin_of(*v, &edges);
        joint[b][y] += 1;
        bin_counts[b] += 1;
        class_counts[y] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for b in 0..N_BINS {
        for y in 0..n_classes {
            let j = joint[b][y];
            if j == 0 {
                continue;
            }
            let p_joint = j as f64 / nf;
            let p_bin = bin_counts[b] as f64 / nf;
            let p_class = class_counts[y] as f64 / nf;
            mi += p_joint * (p_joint / (p_bin * p_class)).ln();
        }
    }
    mi
}

/// Indices of the `k` features with the highest estimated mutual information
/// with the label, in descending MI order; ties break toward the lower index.
pub fn select_features_mibif(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    k: usize,
) -> Result<Vec<usize>, MiError> {
    let n = features.len();
    if n < MIN_TRIALS {
        return Err(MiError::TooFewTrials {
            need: MIN_TRIALS,
            got: n,
        });
    }
    if labels.len() != n {
        return Err(MiError::ShapeMismatch(
            "label count differs from trial count".into(),
        ));
    }
    let d = features[0].len();
    if k > d {
        return Err(MiError::ShapeMismatch(format!(
            "k = {k} exceeds feature dimension {d}"
        )));
    }
    let mut scored: Vec<(usize, f64)> = (0..d)
        .map(|j| {
            let column: Vec<f64> = features.iter().map(|row| row[j]).collect();
            (j, column_mi(&column, labels, n_classes))
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(k).map(|(j, _)| j).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfectly_predictive_feature_ranks_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 80;
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let features: Vec<Vec<f64>> = labels
            .iter()
            .map(|&y| {
                let mut row: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                row[3] = y as f64 + 0.01 * rng.gen_range(-1.0..1.0);
                row
            })
            .collect();
        let sel = select_features_mibif(&features, &labels, 4, 3).unwrap();
        assert_eq!(sel[0], 3);
    }

    #[test]
    fn identical_columns_fall_back_to_index_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 40;
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let features: Vec<Vec<f64>> = noise.iter().map(|&v| vec![v; 5]).collect();
        let sel = select_features_mibif(&features, &labels, 4, 3).unwrap();
        assert_eq!(sel, vec![0, 1, 2]);
    }

    #[test]
    fn k_equal_d_returns_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let n = 32;
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let features: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut sel = select_features_mibif(&features, &labels, 4, 7).unwrap();
        sel.sort_unstable();
        assert_eq!(sel, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_trials_is_an_error() {
        let features = vec![vec![0.0; 3]; 4];
        let labels = vec![0, 1, 2, 3];
        assert!(matches!(
            select_features_mibif(&features, &labels, 4, 2),
            Err(MiError::TooFewTrials { .. })
        ));
    }
}
