//! Calibration pipeline (band filter -> CSP -> log-variance features ->
//! mutual-information selection -> classifier) with stratified cross-validated
//! accuracy reporting, and the decode path for fitted models.

use super::csp::{band_filter_trials, fit_spatial_filters};
use super::features::fbcsp_features_banded;
use super::mibif::select_features_mibif;
use super::{
    classifier_fit, Classifier, ClassifierKind, FilterBank, MiClass, MiError, SpatialFilterSet,
};
use crate::signal::EegSegment;

/// Pipeline hyperparameters. The default is the full filter-bank SVM decoder;
/// [`MiConfig::baseline`] gives the single-band CSP+QDA configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MiConfig {
    pub bank: FilterBank,
    pub m_pairs: usize,
    pub k_features: usize,
    pub kind: ClassifierKind,
    pub min_trials_per_class: usize,
    pub cv_folds: usize,
}

impl Default for MiConfig {
    fn default() -> Self {
        MiConfig {
            bank: FilterBank::default(),
            m_pairs: 2,
            k_features: 16,
            kind: ClassifierKind::Svm,
            min_trials_per_class: 10,
            cv_folds: 5,
        }
    }
}

impl MiConfig {
    /// Single-band CSP+QDA pipeline.
    pub fn baseline() -> Self {
        MiConfig {
            bank: FilterBank::single_band(),
            kind: ClassifierKind::Qda,
            k_features: 16,
            ..MiConfig::default()
        }
    }
}

/// A fitted motor-imagery decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct MiDecoder {
    pub bank: FilterBank,
    pub filters: SpatialFilterSet,
    pub selected: Vec<usize>,
    pub classifier: Classifier,
    pub calib_accuracy: f64,
    pub trial_samples: usize,
    pub fs: f64,
}

struct FittedStage {
    filters: SpatialFilterSet,
    selected: Vec<usize>,
    classifier: Classifier,
}

fn fit_stage(
    banded: &[Vec<EegSegment>],
    labels: &[usize],
    cfg: &MiConfig,
) -> Result<FittedStage, MiError> {
    let filters = fit_spatial_filters(banded, labels, &cfg.bank, 4, cfg.m_pairs)?;
    let features: Vec<Vec<f64>> = banded
        .iter()
        .map(|b| fbcsp_features_banded(b, &filters))
        .collect::<Result<_, _>>()?;
    let k = cfg.k_features.min(filters.feature_len());
    let selected = select_features_mibif(&features, labels, 4, k)?;
    let reduced: Vec<Vec<f64>> = features
        .iter()
        .map(|row| selected.iter().map(|&j| row[j]).collect())
        .collect();
    let classifier = classifier_fit(&reduced, labels, 4, cfg.kind)?;
    Ok(FittedStage {
        filters,
        selected,
        classifier,
    })
}

fn predict_banded(stage: &FittedStage, banded: &[EegSegment]) -> Result<(usize, Vec<f64>), MiError> {
    let features = fbcsp_features_banded(banded, &stage.filters)?;
    let reduced: Vec<f64> = stage.selected.iter().map(|&j| features[j]).collect();
    Ok(stage.classifier.predict(&reduced))
}

/// Fit the full pipeline on a labeled calibration session and report the
/// stratified k-fold cross-validated accuracy alongside the final model.
pub fn calibrate_mi(
    session: &[(EegSegment, MiClass)],
    cfg: &MiConfig,
) -> Result<MiDecoder, MiError> {
    let mut counts = [0usize; 4];
    for (_, cls) in session {
        counts[cls.index()] += 1;
    }
    for (c, &n) in counts.iter().enumerate() {
        if n < cfg.min_trials_per_class {
            return Err(MiError::InsufficientTrials {
                class: c,
                need: cfg.min_trials_per_class,
                got: n,
            });
        }
    }
    let first = &session[0].0;
    let (trial_samples, fs) = (first.n_samples(), first.fs());
    for (seg, _) in session {
        if seg.n_samples() != trial_samples || seg.n_channels() != first.n_channels() {
            return Err(MiError::ShapeMismatch(
                "calibration trials differ in shape".into(),
            ));
        }
    }

    let trials: Vec<EegSegment> = session.iter().map(|(s, _)| s.clone()).collect();
    let labels: Vec<usize> = session.iter().map(|(_, c)| c.index()).collect();
    let banded = band_filter_trials(&trials, &cfg.bank)?;

    // stratified fold assignment: the k-th occurrence of a class lands in fold k % folds
    let folds = cfg.cv_folds.max(2);
    let mut seen = [0usize; 4];
    let fold_of: Vec<usize> = labels
        .iter()
        .map(|&y| {
            let f = seen[y] % folds;
            seen[y] += 1;
            f
        })
        .collect();

    let mut correct = 0usize;
    let mut total = 0usize;
    for f in 0..folds {
        let train_idx: Vec<usize> = (0..labels.len()).filter(|i| fold_of[*i] != f).collect();
        let test_idx: Vec<usize> = (0..labels.len()).filter(|i| fold_of[*i] == f).collect();
        if test_idx.is_empty() {
            continue;
        }
        let train_banded: Vec<Vec<EegSegment>> =
            train_idx.iter().map(|&i| banded[i].clone()).collect();
        let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
        let stage = fit_stage(&train_banded, &train_labels, cfg)?;
        for &i in &test_idx {
            let (pred, _) = predict_banded(&stage, &banded[i])?;
            if pred == labels[i] {
                correct += 1;
            }
            total += 1;
        }
    }
    let calib_accuracy = correct as f64 / total.max(1) as f64;

    let stage = fit_stage(&banded, &labels, cfg)?;
    Ok(MiDecoder {
        bank: cfg.bank.clone(),
        filters: stage.filters,
        selected: stage.selected,
        classifier: stage.classifier,
        calib_accuracy,
        trial_samples,
        fs,
    })
}

/// Decode one trial-length segment into a class decision plus per-class scores.
pub fn decode_mi(decoder: &MiDecoder, segment: &EegSegment) -> Result<(MiClass, Vec<f64>), MiError> {
    if segment.n_samples() != decoder.trial_samples {
        return Err(MiError::ShapeMismatch(format!(
            "segment has {} samples, decoder expects {}",
            segment.n_samples(),
            decoder.trial_samples
        )));
    }
    if segment.n_channels() != decoder.filters.n_channels {
        return Err(MiError::ShapeMismatch(format!(
            "segment has {} channels, decoder expects {}",
            segment.n_channels(),
            decoder.filters.n_channels
        )));
    }
    let banded = band_filter_trials(std::slice::from_ref(segment), &decoder.bank)?;
    let features = fbcsp_features_banded(&banded[0], &decoder.filters)?;
    let reduced: Vec<f64> = decoder.selected.iter().map(|&j| features[j]).collect();
    let (idx, scores) = decoder.classifier.predict(&reduced);
    Ok((MiClass::from_index(idx).unwrap(), scores))
}

/// Decode with the decision restricted to a subset of classes (k-way with
/// k <= 4); scores are still reported for all four classes.
pub fn decode_mi_restricted(
    decoder: &MiDecoder,
    segment: &EegSegment,
    allowed: &[MiClass],
) -> Result<(MiClass, Vec<f64>), MiError> {
    let (_, scores) = decode_mi(decoder, segment)?;
    let mut best = allowed[0];
    for &c in allowed {
        if scores[c.index()] > scores[best.index()] {
            best = c;
        }
    }
    Ok((best, scores))
}
