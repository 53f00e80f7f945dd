//! Object selection via steady-state visually evoked potentials: canonical
//! reference signals per flicker frequency and classification of a
//! visual-cortex EEG window by maximum canonical correlation.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::signal::{EegSegment, Region, SignalError};

#[derive(Debug, Error)]
pub enum SsvepError {
    #[error("harmonic {harmonic} of {freq} Hz aliases at fs {fs} Hz")]
    AliasedHarmonic { freq: f64, harmonic: usize, fs: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("too few samples: need more than {need}, have {have}")]
    TooFewSamples { need: usize, have: usize },
    #[error("segment has no visual-region channels")]
    NoVisualChannels,
    #[error("empty frequency bank")]
    EmptyBank,
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Flicker frequencies presented on screen plus the harmonic count used when
/// building reference signals.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBank {
    pub freqs: Vec<f64>,
    pub n_harmonics: usize,
}

impl Default for FrequencyBank {
    fn default() -> Self {
        FrequencyBank {
            freqs: vec![6.0, 7.5, 8.57, 10.0],
            n_harmonics: 2,
        }
    }
}

impl FrequencyBank {
    pub fn new(freqs: Vec<f64>, n_harmonics: usize) -> Self {
        FrequencyBank { freqs, n_harmonics }
    }

    /// Bank restricted to its first `k` frequencies.
    pub fn truncated(&self, k: usize) -> FrequencyBank {
        FrequencyBank {
            freqs: self.freqs[..k.min(self.freqs.len())].to_vec(),
            n_harmonics: self.n_harmonics,
        }
    }
}

/// Build the canonical reference signal for `freq`: a `2H x n_samples` matrix
/// whose row `2h-2` is the sine and row `2h-1` the cosine of harmonic `h`,
/// sampled at `k/fs`.
pub fn make_crs(
    freq: f64,
    n_harmonics: usize,
    fs: f64,
    n_samples: usize,
) -> Result<Vec<Vec<f64>>, SsvepError> {
    if freq * n_harmonics as f64 >= fs / 2.0 {
        return Err(SsvepError::AliasedHarmonic {
            freq,
            harmonic: n_harmonics,
            fs,
        });
    }
    if n_samples < 2 {
        return Err(SsvepError::TooFewSamples {
            need: 1,
            have: n_samples,
        });
    }
    let mut rows = Vec::with_capacity(2 * n_harmonics);
    for h in 1..=n_harmonics {
        let w = 2.0 * std::f64::consts::PI * freq * h as f64;
        let sin_row: Vec<f64> = (0..n_samples).map(|k| (w * k as f64 / fs).sin()).collect();
        let cos_row: Vec<f64> = (0..n_samples).map(|k| (w * k as f64 / fs).cos()).collect();
        rows.push(sin_row);
        rows.push(cos_row);
    }
    Ok(rows)
}

/// Ridge floor added to each auto-covariance, relative to its mean diagonal.
const CCA_RIDGE: f64 = 1e-6;
/// Eigenvalues of a regularized covariance below this share of the largest
/// are treated as numerically singular.
const CCA_SINGULAR_FLOOR: f64 = 1e-12;

fn center_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let n = rows[0].len();
    let mut m = DMatrix::zeros(r, n);
    for (i, row) in rows.iter().enumerate() {
        let mean = row.iter().sum::<f64>() / n as f64;
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = v - mean;
        }
    }
    m
}

/// Inverse square root of a symmetric positive-definite matrix, with the
/// ridge already applied by the caller. Errors when the spectrum collapses
/// below the singularity floor.
fn inv_sqrt_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>, SsvepError> {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let max_ev = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if !(max_ev > 0.0) {
        return Err(SsvepError::DegenerateInput(format!(
            "{what} covariance has no positive spectrum"
        )));
    }
    let floor = max_ev * CCA_SINGULAR_FLOOR;
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, ev) in eig.eigenvalues.iter().enumerate() {
        if *ev <= floor {
            return Err(SsvepError::DegenerateInput(format!(
                "{what} covariance singular beyond the regularization floor"
            )));
        }
        d[(i, i)] = 1.0 / ev.sqrt();
    }
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Largest canonical correlation between the row spaces of `x` and `y`.
///
/// Both auto-covariances are ridge-regularized, whitened, and the top singular
/// value of the whitened cross-covariance is returned, clamped to [0, 1].
pub fn cca_max_corr(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64, SsvepError> {
    if x.is_empty() || y.is_empty() {
        return Err(SsvepError::DegenerateInput("empty input matrix".into()));
    }
    let n = x[0].len();
    if y[0].len() != n {
        return Err(SsvepError::DegenerateInput(
            "sample counts differ between X and Y".into(),
        ));
    }
    let (cx, cy) = (x.len(), y.len());
    if n <= cx + cy {
        return Err(SsvepError::TooFewSamples {
            need: cx + cy,
            have: n,
        });
    }

    let xm = center_rows(x);
    let ym = center_rows(y);
    let nf = n as f64;
    let mut cxx = &xm * xm.transpose() / nf;
    let mut cyy = &ym * ym.transpose() / nf;
    let cxy = &xm * ym.transpose() / nf;

    for (c, dim) in [(&mut cxx, cx), (&mut cyy, cy)] {
        let ridge = CCA_RIDGE * c.trace() / dim as f64;
        for i in 0..dim {
            c[(i, i)] += ridge;
        }
    }

    let wx = inv_sqrt_spd(&cxx, "X")?;
    let wy = inv_sqrt_spd(&cyy, "Y")?;
    let m = wx * cxy * wy;
    let svd = nalgebra::SVD::new(m, false, false);
    let rho = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    Ok(rho.clamp(0.0, 1.0))
}

/// Result of one SSVEP classification round.
#[derive(Debug, Clone, PartialEq)]
pub struct SsvepDecision {
    /// Index of the winning frequency in the bank.
    pub index: usize,
    /// Per-frequency maximum canonical correlations, bank order.
    pub scores: Vec<f64>,
}

/// Classify a stimulation window by maximum canonical correlation against the
/// reference set of every bank frequency.
///
/// Visual-region channels are selected from `segment`; ties break toward the
/// lowest bank index.
pub fn classify_ssvep(
    segment: &EegSegment,
    bank: &FrequencyBank,
) -> Result<SsvepDecision, SsvepError> {
    if bank.freqs.is_empty() {
        return Err(SsvepError::EmptyBank);
    }
    let visual = segment
        .select_regions(&[Region::Visual])
        .map_err(|_| SsvepError::NoVisualChannels)?;
    let n = visual.n_samples();
    let fs = visual.fs();
    let mut scores = Vec::with_capacity(bank.freqs.len());
    for &f in &bank.freqs {
        let crs = make_crs(f, bank.n_harmonics, fs, n)?;
        scores.push(cca_max_corr(visual.data(), &crs)?);
    }
    let mut index = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[index] {
            index = i;
        }
    }
    Ok(SsvepDecision { index, scores })
}
