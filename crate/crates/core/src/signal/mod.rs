//! Signal containers, channel layout with anatomical region tags, IIR filter
//! design/application, and sliding-window segmentation shared by all decoders.

mod filter;
pub(crate) mod io;

pub use filter::{
    apply_filter_zero_phase, design_filter, filtfilt, FilterCoefficients, FilterSpec, Sos,
};
pub use io::{read_eeg_text, write_eeg_text};

use std::sync::Arc;

use thiserror::Error;

/// Anatomical region tag used to route channels to the decoder stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Visual,
    MotorLeft,
    MotorRight,
    Frontal,
    Other,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Visual => "Visual",
            Region::MotorLeft => "MotorLeft",
            Region::MotorRight => "MotorRight",
            Region::Frontal => "Frontal",
            Region::Other => "Other",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        match s {
            "Visual" => Some(Region::Visual),
            "MotorLeft" => Some(Region::MotorLeft),
            "MotorRight" => Some(Region::MotorRight),
            "Frontal" => Some(Region::Frontal),
            "Other" => Some(Region::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("segment too short: {0}")]
    SegmentTooShort(String),
    #[error("stream too short: need {need_samples} samples, have {have_samples}")]
    StreamTooShort {
        need_samples: usize,
        have_samples: usize,
    },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("bad channel layout: {0}")]
    BadLayout(String),
    #[error("bad segment: {0}")]
    BadSegment(String),
    #[error("no channels tagged {0}")]
    EmptyRegion(String),
    #[error("eeg text format: {0}")]
    Format(String),
}

/// Ordered list of named channels with region tags. Channel names are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelLayout {
    channels: Vec<(String, Region)>,
}

impl ChannelLayout {
    pub fn new(channels: Vec<(String, Region)>) -> Result<Self, SignalError> {
        if channels.is_empty() {
            return Err(SignalError::BadLayout("layout has no channels".into()));
        }
        for i in 0..channels.len() {
            for j in (i + 1)..channels.len() {
                if channels[i].0 == channels[j].0 {
                    return Err(SignalError::BadLayout(format!(
                        "duplicate channel name {:?}",
                        channels[i].0
                    )));
                }
            }
        }
        Ok(ChannelLayout { channels })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.channels[idx].0
    }

    pub fn region(&self, idx: usize) -> Region {
        self.channels[idx].1
    }

    pub fn channels(&self) -> &[(String, Region)] {
        &self.channels
    }

    /// Indices of all channels tagged with any of the given regions, in layout order.
    pub fn indices_of(&self, regions: &[Region]) -> Vec<usize> {
        self.channels
            .iter()
            .enumerate()
            .filter(|(_, (_, r))| regions.contains(r))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A channels-by-samples block of real-valued signal with sampling rate and
/// channel layout. Immutable after construction; the universal container
/// shared by every decoder stage.
#[derive(Debug, Clone, PartialEq)]
pub struct EegSegment {
    data: Vec<Vec<f64>>,
    fs: f64,
    layout: Arc<ChannelLayout>,
    t0: f64,
}

impl EegSegment {
    pub fn new(
        data: Vec<Vec<f64>>,
        fs: f64,
        layout: Arc<ChannelLayout>,
        t0: f64,
    ) -> Result<Self, SignalError> {
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(SignalError::BadSegment(format!("fs must be > 0, got {fs}")));
        }
        if data.len() != layout.len() {
            return Err(SignalError::BadSegment(format!(
                "{} data rows vs {} layout channels",
                data.len(),
                layout.len()
            )));
        }
        let n = data.first().map(|r| r.len()).unwrap_or(0);
        if n == 0 {
            return Err(SignalError::BadSegment("segment has no samples".into()));
        }
        for (i, row) in data.iter().enumerate() {
            if row.len() != n {
                return Err(SignalError::BadSegment(format!(
                    "channel {i} has {} samples, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(SignalError::BadSegment(format!(
                    "channel {i} contains non-finite values"
                )));
            }
        }
        if !t0.is_finite() {
            return Err(SignalError::BadSegment("t0 must be finite".into()));
        }
        Ok(EegSegment {
            data,
            fs,
            layout,
            t0,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.data.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data[0].len()
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    pub fn layout(&self) -> &Arc<ChannelLayout> {
        &self.layout
    }

    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.data[idx]
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    /// New segment holding only the channels tagged with the given regions
    /// (layout order preserved, sample count unchanged).
    pub fn select_regions(&self, regions: &[Region]) -> Result<EegSegment, SignalError> {
        let idx = self.layout.indices_of(regions);
        if idx.is_empty() {
            let names: Vec<&str> = regions.iter().map(|r| r.as_str()).collect();
            return Err(SignalError::EmptyRegion(names.join("+")));
        }
        let data: Vec<Vec<f64>> = idx.iter().map(|&i| self.data[i].clone()).collect();
        let channels: Vec<(String, Region)> = idx
            .iter()
            .map(|&i| self.layout.channels()[i].clone())
            .collect();
        let layout = Arc::new(ChannelLayout::new(channels)?);
        EegSegment::new(data, self.fs, layout, self.t0)
    }

    /// Replace the sample matrix, keeping fs/layout/t0. Shapes must match.
    pub(crate) fn with_data(&self, data: Vec<Vec<f64>>) -> Result<EegSegment, SignalError> {
        EegSegment::new(data, self.fs, Arc::clone(&self.layout), self.t0)
    }
}

/// Slice `stream` into fixed-length windows advancing by `stride_s`.
///
/// Each window holds exactly `round(length_s*fs)` samples; the first starts at
/// the stream origin and `t0` advances by `stride_s` per window.
pub fn window_segments(
    stream: &EegSegment,
    length_s: f64,
    stride_s: f64,
) -> Result<Vec<EegSegment>, SignalError> {
    if !(length_s > 0.0) || !(stride_s > 0.0) {
        return Err(SignalError::InvalidWindow(format!(
            "length_s and stride_s must be > 0 (got {length_s}, {stride_s})"
        )));
    }
    let win = (length_s * stream.fs()).round() as usize;
    let hop = (stride_s * stream.fs()).round() as usize;
    if win == 0 || hop == 0 {
        return Err(SignalError::InvalidWindow(
            "window or stride rounds to zero samples".into(),
        ));
    }
    let n = stream.n_samples();
    if n < win {
        return Err(SignalError::StreamTooShort {
            need_samples: win,
            have_samples: n,
        });
    }
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut k = 0usize;
    while start + win <= n {
        let data: Vec<Vec<f64>> = stream
            .data()
            .iter()
            .map(|row| row[start..start + win].to_vec())
            .collect();
        out.push(EegSegment::new(
            data,
            stream.fs(),
            Arc::clone(stream.layout()),
            stream.t0() + k as f64 * stride_s,
        )?);
        start += hop;
        k += 1;
    }
    Ok(out)
}
