//! Log-variance feature extraction: band-pass, project through each
//! (band, class) filter set, and take the log of each row's share of the
//! projected variance. Concatenation order is (band, class, filter row).

use super::{FilterBank, MiError, SpatialFilterSet};
use crate::signal::EegSegment;

fn row_variance(row: &[f64]) -> f64 {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Features from a trial that has already been filtered with every bank band
/// (`banded[b]` = trial through band `b`).
pub fn fbcsp_features_banded(
    banded: &[EegSegment],
    filters: &SpatialFilterSet,
) -> Result<Vec<f64>, MiError> {
    if banded.len() != filters.projections.len() {
        return Err(MiError::ShapeMismatch(format!(
            "{} banded trials vs {} filter bands",
            banded.len(),
            filters.projections.len()
        )));
    }
    let mut out = Vec::with_capacity(filters.feature_len());
    for (b, seg) in banded.iter().enumerate() {
        if seg.n_channels() != filters.n_channels {
            return Err(MiError::ShapeMismatch(format!(
                "trial has {} channels, filters expect {}",
                seg.n_channels(),
                filters.n_channels
            )));
        }
        let n = seg.n_samples();
        for proj in &filters.projections[b] {
            let rows = proj.nrows();
            let mut vars = Vec::with_capacity(rows);
            for r in 0..rows {
                let mut z = vec![0.0f64; n];
                for c in 0..filters.n_channels {
                    let w = proj[(r, c)];
                    if w != 0.0 {
                        let ch = seg.channel(c);
                        for (zi, xi) in z.iter_mut().zip(ch) {
                            *zi += w * xi;
                        }
                    }
                }
                vars.push(row_variance(&z));
            }
            let total: f64 = vars.iter().sum();
            if !(total > 0.0) {
                return Err(MiError::SingularCovariance(
                    "zero projected variance during feature normalization".into(),
                ));
            }
            for v in vars {
                out.push((v / total).max(1e-300).ln());
            }
        }
    }
    Ok(out)
}

/// Band-filter `trial` with every bank band, then extract features.
pub fn fbcsp_features(
    trial: &EegSegment,
    bank: &FilterBank,
    filters: &SpatialFilterSet,
) -> Result<Vec<f64>, MiError> {
    let banded = super::csp::band_filter_trials(std::slice::from_ref(trial), bank)?;
    fbcsp_features_banded(&banded[0], filters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mi::csp::{band_filter_trials, fit_spatial_filters};
    use crate::signal::{ChannelLayout, Region};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    fn layout(n: usize) -> Arc<ChannelLayout> {
        Arc::new(
            ChannelLayout::new((0..n).map(|i| (format!("c{i}"), Region::Other)).collect()).unwrap(),
        )
    }

    fn noise_trial(rng: &mut ChaCha8Rng, channels: usize, n: usize, gains: &[f64]) -> EegSegment {
        let norm: StandardNormal = StandardNormal;
        let data: Vec<Vec<f64>> = (0..channels)
            .map(|c| (0..n).map(|_| gains[c] * Distribution::<f64>::sample(&norm, rng)).collect())
            .collect();
        EegSegment::new(data, 250.0, layout(channels), 0.0).unwrap()
    }

    fn fitted(rng: &mut ChaCha8Rng) -> (FilterBank, SpatialFilterSet, Vec<EegSegment>) {
        let bank = FilterBank::default();
        let mut trials = Vec::new();
        let mut labels = Vec::new();
        for cls in 0..4usize {
            let mut gains = vec![1.0; 4];
            gains[cls] = 3.0;
            for _ in 0..4 {
                trials.push(noise_trial(rng, 4, 400, &gains));
                labels.push(cls);
            }
        }
        let banded = band_filter_trials(&trials, &bank).unwrap();
        let filters = fit_spatial_filters(&banded, &labels, &bank, 4, 2).unwrap();
        (bank, filters, trials)
    }

    #[test]
    fn feature_length_matches_band_class_filter_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (bank, filters, trials) = fitted(&mut rng);
        let f = fbcsp_features(&trials[0], &bank, &filters).unwrap();
        assert_eq!(f.len(), 5 * 4 * 4);
        assert_eq!(filters.feature_len(), 80);
    }

    #[test]
    fn features_are_invariant_to_trial_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (bank, filters, trials) = fitted(&mut rng);
        let base = fbcsp_features(&trials[0], &bank, &filters).unwrap();
        let scaled_data: Vec<Vec<f64>> = trials[0]
            .data()
            .iter()
            .map(|row| row.iter().map(|v| v * 10.0).collect())
            .collect();
        let scaled =
            EegSegment::new(scaled_data, trials[0].fs(), Arc::clone(trials[0].layout()), 0.0)
                .unwrap();
        let f = fbcsp_features(&scaled, &bank, &filters).unwrap();
        for (a, b) in base.iter().zip(&f) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_trial_fails_variance_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (bank, filters, trials) = fitted(&mut rng);
        let zeros =
            EegSegment::new(vec![vec![0.0; 400]; 4], trials[0].fs(), layout(4), 0.0).unwrap();
        assert!(matches!(
            fbcsp_features(&zeros, &bank, &filters),
            Err(MiError::SingularCovariance(_))
        ));
    }
}
