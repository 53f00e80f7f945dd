//! Few-shot robot learning: retrieval of the next (object, skill) from a
//! single annotated demonstration, one-shot skill-parameter transfer via
//! patch-feature cosine matching, and pixel-to-world calibration.

mod calib;
mod demo_io;
mod feature;
mod image;
mod matching;
mod retrieval;

pub use calib::{CameraCalibration, Homography, SideMap};
pub use demo_io::{read_demo_bundle, read_feature_map, write_demo_bundle, write_feature_map};
pub use feature::{
    backend_from_spec, extract_feature_map, FeatureBackend, FeatureMap, FileBackend,
    ReferenceBackend,
};
pub use image::Image;
pub use matching::{cosine, match_parameter, predict_z, MatchResult};
pub use retrieval::{retrieve_next_state, DemoSequence, DemoState, RankedPrediction};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("unsupported image dims {width}x{height} for backend {backend}")]
    UnsupportedDims {
        width: usize,
        height: usize,
        backend: String,
    },
    #[error("unknown backend {0:?}")]
    UnknownBackend(String),
    #[error("backend mismatch: {0}")]
    BackendMismatch(String),
    #[error("projected line misses the image frame")]
    LineOutOfFrame,
    #[error("singular calibration: {0}")]
    SingularCalibration(String),
    #[error("query matched the terminal demo state; no next state exists")]
    TerminalState,
    #[error("demo sequence needs at least 2 states, got {0}")]
    TooFewStates(usize),
    #[error("point ({0}, {1}) outside the image")]
    PointOutsideImage(f64, f64),
    #[error("image dims differ from the demo images")]
    DimsMismatch,
    #[error("ppm: {0}")]
    PpmFormat(String),
    #[error("demo bundle: {0}")]
    BundleFormat(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
