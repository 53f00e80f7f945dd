//! Confirmation/interruption gate: variance-threshold detection of muscle
//! tension in 500 ms windows, threshold calibration, and rejection of
//! non-brain EEG artifacts (blinks, lateral eye movement, slow drift) so
//! interruptions cannot be spoofed.

use thiserror::Error;

use crate::signal::{EegSegment, Region};

#[derive(Debug, Error)]
pub enum EmgError {
    #[error("calibration distributions overlap: rest {rest_mean:.3}±{rest_std:.3} vs clench {clench_mean:.3}±{clench_std:.3}")]
    Inseparable {
        rest_mean: f64,
        rest_std: f64,
        clench_mean: f64,
        clench_std: f64,
    },
    #[error("wrong window length: expected {expected} samples (500 ms), got {got}")]
    WrongWindowLength { expected: usize, got: usize },
    #[error("need at least {need} calibration windows, got {got}")]
    TooFewWindows { need: usize, got: usize },
    #[error("segment has no frontal-region channels")]
    MissingFrontal,
    #[error("segment shorter than 500 ms")]
    SegmentTooShort,
}

pub const EMG_WINDOW_S: f64 = 0.5;

/// Calibrated tension threshold in the log-variance domain, plus the rest and
/// clench statistics it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct TensionThreshold {
    pub log_variance_threshold: f64,
    /// (mean, std) of rest-window log-variances.
    pub calib_rest_stats: (f64, f64),
    /// (mean, std) of clench-window log-variances.
    pub calib_clench_stats: (f64, f64),
    /// Standard deviation of raw frontal-channel amplitude over rest windows;
    /// anchors the blink-amplitude check.
    pub rest_amplitude_std: f64,
}

fn emg_window_samples(fs: f64) -> usize {
    (EMG_WINDOW_S * fs).round() as usize
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Mean over frontal channels of per-channel log-variance.
fn frontal_log_variance(window: &EegSegment) -> Result<f64, EmgError> {
    let frontal = window
        .select_regions(&[Region::Frontal])
        .map_err(|_| EmgError::MissingFrontal)?;
    let mut acc = 0.0;
    for c in 0..frontal.n_channels() {
        acc += variance(frontal.channel(c)).max(1e-300).ln();
    }
    Ok(acc / frontal.n_channels() as f64)
}

fn check_window_len(window: &EegSegment) -> Result<(), EmgError> {
    let expected = emg_window_samples(window.fs());
    if window.n_samples() != expected {
        return Err(EmgError::WrongWindowLength {
            expected,
            got: window.n_samples(),
        });
    }
    Ok(())
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fit the tension threshold as the midpoint of the rest and clench mean
/// log-variances. Errors when the two calibration distributions overlap
/// beyond a two-sigma margin.
pub fn calibrate_threshold(
    rest_windows: &[EegSegment],
    clench_windows: &[EegSegment],
) -> Result<TensionThreshold, EmgError> {
    const MIN_WINDOWS: usize = 10;
    if rest_windows.len() < MIN_WINDOWS || clench_windows.len() < MIN_WINDOWS {
        return Err(EmgError::TooFewWindows {
            need: MIN_WINDOWS,
            got: rest_windows.len().min(clench_windows.len()),
        });
    }
    let mut rest_lv = Vec::with_capacity(rest_windows.len());
    let mut amp_acc = 0.0f64;
    let mut amp_sq = 0.0f64;
    let mut amp_n = 0usize;
    for w in rest_windows {
        check_window_len(w)?;
        rest_lv.push(frontal_log_variance(w)?);
        let frontal = w
            .select_regions(&[Region::Frontal])
            .map_err(|_| EmgError::MissingFrontal)?;
        for c in 0..frontal.n_channels() {
            for v in frontal.channel(c) {
                amp_acc += v;
                amp_sq += v * v;
                amp_n += 1;
            }
        }
    }
    let mut clench_lv = Vec::with_capacity(clench_windows.len());
    for w in clench_windows {
        check_window_len(w)?;
        clench_lv.push(frontal_log_variance(w)?);
    }

    let (rest_mean, rest_std) = mean_std(&rest_lv);
    let (clench_mean, clench_std) = mean_std(&clench_lv);
    if rest_mean + 2.0 * rest_std >= clench_mean - 2.0 * clench_std {
        return Err(EmgError::Inseparable {
            rest_mean,
            rest_std,
            clench_mean,
            clench_std,
        });
    }
    let amp_mean = amp_acc / amp_n as f64;
    let rest_amplitude_std = (amp_sq / amp_n as f64 - amp_mean * amp_mean).max(0.0).sqrt();
    Ok(TensionThreshold {
        log_variance_threshold: 0.5 * (rest_mean + clench_mean),
        calib_rest_stats: (rest_mean, rest_std),
        calib_clench_stats: (clench_mean, clench_std),
        rest_amplitude_std,
    })
}

/// True iff the mean frontal log-variance of a 500 ms window exceeds the
/// calibrated threshold.
pub fn detect_tension(window: &EegSegment, th: &TensionThreshold) -> Result<bool, EmgError> {
    check_window_len(window)?;
    Ok(frontal_log_variance(window)? > th.log_variance_threshold)
}

/// Artifact class detected in a segment. `Clean` iff no check fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Clean,
    Blink,
    LateralEyeMovement,
    LowFrequencyDrift,
}

impl ArtifactKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArtifactKind::Clean => "Clean",
            ArtifactKind::Blink => "Blink",
            ArtifactKind::LateralEyeMovement => "LateralEyeMovement",
            ArtifactKind::LowFrequencyDrift => "LowFrequencyDrift",
        }
    }
}

/// Verdict plus the per-check diagnostics it was based on.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactVerdict {
    pub kind: ArtifactKind,
    /// Largest centered frontal-channel amplitude.
    pub peak_amplitude: f64,
    /// Half-max duration of the peak event, when a peak crossed the blink bound.
    pub event_duration_ms: Option<f64>,
    /// Correlation of the slow components on the left/right frontal pair.
    pub lateral_correlation: f64,
    /// Fraction of total power below 1 Hz.
    pub drift_power_ratio: f64,
}

impl ArtifactVerdict {
    pub fn is_clean(&self) -> bool {
        self.kind == ArtifactKind::Clean
    }
}

/// Constants for the three artifact checks. All config-surfaced; the blink
/// amplitude is conventionally tied to the calibration rest level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtifactConfig {
    /// Absolute amplitude a frontal deflection must exceed to count as a blink.
    pub blink_amplitude: f64,
    /// Blink event half-max duration window, milliseconds.
    pub blink_duration_ms: (f64, f64),
    /// Anticorrelation bound for the lateral eye movement check.
    pub lateral_corr_max: f64,
    /// Sub-1 Hz power fraction above which the drift check fires.
    pub drift_ratio: f64,
}

impl ArtifactConfig {
    pub fn from_threshold(th: &TensionThreshold) -> Self {
        ArtifactConfig {
            blink_amplitude: 5.0 * th.rest_amplitude_std,
            blink_duration_ms: (50.0, 400.0),
            lateral_corr_max: -0.5,
            drift_ratio: 0.6,
        }
    }
}

fn centered(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Half-max event duration (ms) around the absolute peak of a centered trace.
fn peak_event_duration_ms(x: &[f64], fs: f64) -> (f64, f64) {
    let mut peak_idx = 0;
    let mut peak = 0.0f64;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > peak {
            peak = v.abs();
            peak_idx = i;
        }
    }
    let half = peak / 2.0;
    let mut lo = peak_idx;
    while lo > 0 && x[lo - 1].abs() > half {
        lo -= 1;
    }
    let mut hi = peak_idx;
    while hi + 1 < x.len() && x[hi + 1].abs() > half {
        hi += 1;
    }
    (peak, (hi - lo + 1) as f64 / fs * 1000.0)
}

fn moving_average(x: &[f64], half_width: usize) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width + 1).min(n);
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ac, bc) = (centered(a), centered(b));
    let num: f64 = ac.iter().zip(&bc).map(|(x, y)| x * y).sum();
    let da: f64 = ac.iter().map(|v| v * v).sum::<f64>().sqrt();
    let db: f64 = bc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if da * db == 0.0 {
        0.0
    } else {
        num / (da * db)
    }
}

/// Fraction of a channel's power that lies in DFT bins strictly below 1 Hz
/// (DC excluded), computed on the mean-removed signal.
fn low_freq_power_ratio(x: &[f64], fs: f64) -> f64 {
    let xc = centered(x);
    let n = xc.len();
    let total: f64 = xc.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    let kmax = ((1.0 * n as f64 / fs).ceil() as usize).min(n / 2);
    let mut low = 0.0;
    for k in 1..kmax {
        if k as f64 * fs / n as f64 >= 1.0 {
            break;
        }
        let w = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (j, v) in xc.iter().enumerate() {
            let ph = w * j as f64;
            re += v * ph.cos();
            im -= v * ph.sin();
        }
        low += 2.0 * (re * re + im * im) / n as f64;
    }
    low / total
}

/// Run the three artifact checks in order (blink, lateral eye movement, slow
/// drift) and return the first firing verdict, else `Clean`.
pub fn reject_artifacts(segment: &EegSegment, cfg: &ArtifactConfig) -> ArtifactVerdict {
    let fs = segment.fs();
    let frontal = match segment.select_regions(&[Region::Frontal]) {
        Ok(f) => f,
        Err(_) => {
            return ArtifactVerdict {
                kind: ArtifactKind::Clean,
                peak_amplitude: 0.0,
                event_duration_ms: None,
                lateral_correlation: 0.0,
                drift_power_ratio: 0.0,
            }
        }
    };

    // (a) blink: large frontal deflection with a 50-400 ms half-max event
    let mut peak_amplitude = 0.0f64;
    let mut event_duration_ms = None;
    let mut blink = false;
    for c in 0..frontal.n_channels() {
        let x = centered(frontal.channel(c));
        let (peak, dur) = peak_event_duration_ms(&x, fs);
        if peak > peak_amplitude {
            peak_amplitude = peak;
        }
        if peak > cfg.blink_amplitude {
            event_duration_ms = Some(dur);
            if dur >= cfg.blink_duration_ms.0 && dur <= cfg.blink_duration_ms.1 {
                blink = true;
                break;
            }
        }
    }

    // (b) lateral eye movement: opposite-polarity slow deflection on the
    // first/last frontal channels
    let half_width = (0.05 * fs).round() as usize; // 100 ms smoother
    let left = moving_average(frontal.channel(0), half_width);
    let right = moving_average(frontal.channel(frontal.n_channels() - 1), half_width);
    let lateral_correlation = pearson(&left, &right);
    let amp = |x: &[f64]| {
        let c = centered(x);
        c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let lateral = frontal.n_channels() >= 2
        && lateral_correlation < cfg.lateral_corr_max
        && amp(&left) > 0.5 * cfg.blink_amplitude
        && amp(&right) > 0.5 * cfg.blink_amplitude;

    // (c) drift: sub-1 Hz power dominating the spectrum, averaged over channels
    let mut ratio = 0.0;
    for c in 0..segment.n_channels() {
        ratio += low_freq_power_ratio(segment.channel(c), fs);
    }
    let drift_power_ratio = ratio / segment.n_channels() as f64;
    let drift = drift_power_ratio > cfg.drift_ratio;

    let kind = if blink {
        ArtifactKind::Blink
    } else if lateral {
        ArtifactKind::LateralEyeMovement
    } else if drift {
        ArtifactKind::LowFrequencyDrift
    } else {
        ArtifactKind::Clean
    };
    ArtifactVerdict {
        kind,
        peak_amplitude,
        event_duration_ms,
        lateral_correlation,
        drift_power_ratio,
    }
}
