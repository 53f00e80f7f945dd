//! The "noir-eeg v1" text recording format.
//!
//! Header lines are `#`-prefixed and carry the version, sampling rate, start
//! time, and the channel list as comma-separated `name:region` pairs. Body
//! rows hold one sample per line with comma-separated per-channel values at
//! nine significant digits.

use std::sync::Arc;

use super::{ChannelLayout, EegSegment, Region, SignalError};

pub(crate) const EEG_MAGIC: &str = "noir-eeg v1";

/// Render a value with nine significant digits.
pub(crate) fn fmt_g9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_eeg_text(seg: &EegSegment) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {EEG_MAGIC}\n"));
    out.push_str(&format!("# fs {}\n", seg.fs()));
    out.push_str(&format!("# t0 {}\n", seg.t0()));
    let chans: Vec<String> = seg
        .layout()
        .channels()
        .iter()
        .map(|(name, region)| format!("{name}:{}", region.as_str()))
        .collect();
    out.push_str(&format!("# channels {}\n", chans.join(",")));
    for s in 0..seg.n_samples() {
        let row: Vec<String> = (0..seg.n_channels())
            .map(|c| fmt_g9(seg.channel(c)[s]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn read_eeg_text(text: &str) -> Result<EegSegment, SignalError> {
    let mut fs: Option<f64> = None;
    let mut t0: f64 = 0.0;
    let mut layout: Option<ChannelLayout> = None;
    let mut saw_magic = false;
    let mut rows: Vec<Vec<f64>> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if rest == EEG_MAGIC {
                saw_magic = true;
            } else if let Some(v) = rest.strip_prefix("fs ") {
                fs = Some(v.trim().parse().map_err(|_| {
                    SignalError::Format(format!("line {}: bad fs {v:?}", lineno + 1))
                })?);
            } else if let Some(v) = rest.strip_prefix("t0 ") {
                t0 = v.trim().parse().map_err(|_| {
                    SignalError::Format(format!("line {}: bad t0 {v:?}", lineno + 1))
                })?;
            } else if let Some(v) = rest.strip_prefix("channels ") {
                let mut channels = Vec::new();
                for pair in v.split(',') {
                    let (name, region) = pair.split_once(':').ok_or_else(|| {
                        SignalError::Format(format!(
                            "line {}: channel entry {pair:?} is not name:region",
                            lineno + 1
                        ))
                    })?;
                    let region = Region::parse(region.trim()).ok_or_else(|| {
                        SignalError::Format(format!(
                            "line {}: unknown region {region:?}",
                            lineno + 1
                        ))
                    })?;
                    channels.push((name.trim().to_string(), region));
                }
                layout = Some(ChannelLayout::new(channels)?);
            }
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let vals = vals
            .map_err(|_| SignalError::Format(format!("line {}: bad sample row", lineno + 1)))?;
        rows.push(vals);
    }

    if !saw_magic {
        return Err(SignalError::Format(format!("missing '{EEG_MAGIC}' header")));
    }
    let fs = fs.ok_or_else(|| SignalError::Format("missing fs header".into()))?;
    let layout = layout.ok_or_else(|| SignalError::Format("missing channels header".into()))?;
    if rows.is_empty() {
        return Err(SignalError::Format("no sample rows".into()));
    }
    let n_ch = layout.len();
    let mut data = vec![Vec::with_capacity(rows.len()); n_ch];
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n_ch {
            return Err(SignalError::Format(format!(
                "sample row {} has {} values, expected {n_ch}",
                i + 1,
                row.len()
            )));
        }
        for (c, v) in row.iter().enumerate() {
            data[c].push(*v);
        }
    }
    EegSegment::new(data, fs, Arc::new(layout), t0)
}
