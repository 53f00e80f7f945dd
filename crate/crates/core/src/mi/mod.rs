//! Skill selection via motor imagery: 4-way classification with filter-bank
//! common spatial patterns, mutual-information feature selection, and a
//! maximum-margin classifier, plus the single-band CSP+QDA baseline pipeline.

mod calibrate;
mod classifier;
mod csp;
mod features;
mod mibif;
pub mod model_io;

pub use calibrate::{calibrate_mi, decode_mi, decode_mi_restricted, MiConfig, MiDecoder};
pub use classifier::{
    classifier_fit, Classifier, ClassifierKind, LinearSvm, QdaClassStats, QdaModel,
};
pub use csp::{
    band_filter_trials, csp_fit, csp_from_covariances, fit_spatial_filters, normalized_covariance,
};
pub use features::fbcsp_features;
pub use mibif::select_features_mibif;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::signal::SignalError;

/// The four imagined-movement classes with their fixed ordinal encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MiClass {
    LeftHand = 0,
    RightHand = 1,
    Legs = 2,
    Rest = 3,
}

pub const MI_CLASSES: [MiClass; 4] = [
    MiClass::LeftHand,
    MiClass::RightHand,
    MiClass::Legs,
    MiClass::Rest,
];

impl MiClass {
    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn from_index(i: usize) -> Option<MiClass> {
        MI_CLASSES.get(i).copied()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MiClass::LeftHand => "LeftHand",
            MiClass::RightHand => "RightHand",
            MiClass::Legs => "Legs",
            MiClass::Rest => "Rest",
        }
    }

    pub fn parse(s: &str) -> Option<MiClass> {
        match s {
            "LeftHand" => Some(MiClass::LeftHand),
            "RightHand" => Some(MiClass::RightHand),
            "Legs" => Some(MiClass::Legs),
            "Rest" => Some(MiClass::Rest),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum MiError {
    #[error("insufficient trials: need {need} per class, class {class} has {got}")]
    InsufficientTrials {
        class: usize,
        need: usize,
        got: usize,
    },
    #[error("singular covariance: {0}")]
    SingularCovariance(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("too few trials for feature selection: need {need}, got {got}")]
    TooFewTrials { need: usize, got: usize },
    #[error("degenerate class: {0}")]
    DegenerateClass(String),
    #[error("invalid filter bank: {0}")]
    InvalidBank(String),
    #[error("model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Ordered band-pass bands applied before spatial filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub bands: Vec<(f64, f64)>,
}

impl Default for FilterBank {
    fn default() -> Self {
        FilterBank {
            bands: vec![(8.0, 12.0), (12.0, 16.0), (16.0, 20.0), (20.0, 24.0), (24.0, 30.0)],
        }
    }
}

impl FilterBank {
    /// Single 8-30 Hz band, as used by the baseline pipeline.
    pub fn single_band() -> Self {
        FilterBank {
            bands: vec![(8.0, 30.0)],
        }
    }

    pub fn validate(&self) -> Result<(), MiError> {
        if self.bands.is_empty() {
            return Err(MiError::InvalidBank("empty filter bank".into()));
        }
        for &(lo, hi) in &self.bands {
            if !(lo < hi) {
                return Err(MiError::InvalidBank(format!("degenerate band {lo}-{hi}")));
            }
            if lo < 8.0 - 1e-9 || hi > 30.0 + 1e-9 {
                return Err(MiError::InvalidBank(format!(
                    "band {lo}-{hi} outside the 8-30 Hz envelope"
                )));
            }
        }
        Ok(())
    }
}

/// One-vs-rest CSP projections per (band, class): each entry is a
/// `2m x n_channels` matrix whose rows are generalized eigenvectors of
/// (class covariance, composite covariance), m top plus m bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFilterSet {
    pub n_channels: usize,
    pub m_pairs: usize,
    pub n_classes: usize,
    /// Indexed `[band][class]`.
    pub projections: Vec<Vec<DMatrix<f64>>>,
}

impl SpatialFilterSet {
    /// Feature vector length produced by these filters.
    pub fn feature_len(&self) -> usize {
        self.projections.len() * self.n_classes * 2 * self.m_pairs
    }
}
