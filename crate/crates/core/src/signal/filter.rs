//! IIR filter design (Butterworth band-pass, biquad notch) realized as
//! cascaded second-order sections, and zero-phase forward-backward application.

use num_complex::Complex64;

use super::{EegSegment, SignalError};

/// Filter request. Band-pass order counts analog prototype poles, so the
/// realized digital filter has `2*order` poles (`order` sections); the notch
/// is a single biquad parameterized by center frequency and quality factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSpec {
    BandPass {
        f_lo: f64,
        f_hi: f64,
        order: usize,
        fs: f64,
    },
    Notch {
        f0: f64,
        q: f64,
        fs: f64,
    },
}

/// One second-order section. `a0` is normalized to 1 and omitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Sos {
    fn pole_magnitudes(&self) -> [f64; 2] {
        // roots of z^2 + a1 z + a2
        let a1 = self.a[0];
        let a2 = self.a[1];
        let disc = a1 * a1 - 4.0 * a2;
        if disc >= 0.0 {
            let s = disc.sqrt();
            [((-a1 + s) / 2.0).abs(), ((-a1 - s) / 2.0).abs()]
        } else {
            let m = a2.abs().sqrt();
            [m, m]
        }
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    sections: Vec<Sos>,
}

impl FilterCoefficients {
    pub fn sections(&self) -> &[Sos] {
        &self.sections
    }

    /// Total filter order (two poles per section).
    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    pub fn pole_magnitudes(&self) -> Vec<f64> {
        self.sections
            .iter()
            .flat_map(|s| s.pole_magnitudes())
            .collect()
    }

    pub fn is_stable(&self) -> bool {
        self.pole_magnitudes().iter().all(|m| *m < 1.0)
    }

    /// Magnitude response at frequency `f` (Hz) for sampling rate `fs`.
    pub fn magnitude_at(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * f / fs;
        let z_inv = Complex64::new(w.cos(), -w.sin());
        let z_inv2 = z_inv * z_inv;
        let mut h = Complex64::new(1.0, 0.0);
        for s in &self.sections {
            let num = Complex64::new(s.b[0], 0.0) + z_inv * s.b[1] + z_inv2 * s.b[2];
            let den = Complex64::new(1.0, 0.0) + z_inv * s.a[0] + z_inv2 * s.a[1];
            h *= num / den;
        }
        h.norm()
    }
}

/// Design second-order-section coefficients for the given spec.
///
/// Deterministic for identical specs; the returned cascade is checked stable
/// (all pole magnitudes strictly inside the unit circle).
pub fn design_filter(spec: &FilterSpec) -> Result<FilterCoefficients, SignalError> {
    let coeffs = match *spec {
        FilterSpec::BandPass {
            f_lo,
            f_hi,
            order,
            fs,
        } => design_butter_bandpass(f_lo, f_hi, order, fs)?,
        FilterSpec::Notch { f0, q, fs } => design_notch(f0, q, fs)?,
    };
    if !coeffs.is_stable() {
        return Err(SignalError::InvalidBand(format!(
            "designed filter is unstable for {spec:?}"
        )));
    }
    Ok(coeffs)
}

fn design_notch(f0: f64, q: f64, fs: f64) -> Result<FilterCoefficients, SignalError> {
    if !(fs > 0.0) {
        return Err(SignalError::InvalidBand(format!("fs must be > 0, got {fs}")));
    }
    if !(f0 > 0.0 && f0 < fs / 2.0) {
        return Err(SignalError::InvalidBand(format!(
            "notch center must satisfy 0 < f0 < fs/2 (f0={f0}, fs={fs})"
        )));
    }
    if !(q > 0.0) {
        return Err(SignalError::InvalidBand(format!("Q must be > 0, got {q}")));
    }
    let w0 = 2.0 * std::f64::consts::PI * f0 / fs;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    let cw = w0.cos();
    Ok(FilterCoefficients {
        sections: vec![Sos {
            b: [1.0 / a0, -2.0 * cw / a0, 1.0 / a0],
            a: [-2.0 * cw / a0, (1.0 - alpha) / a0],
        }],
    })
}

/// Butterworth band-pass by analog prototype, low-pass-to-band-pass pole
/// transform, and bilinear mapping; gain normalized at the band center.
fn design_butter_bandpass(
    f_lo: f64,
    f_hi: f64,
    order: usize,
    fs: f64,
) -> Result<FilterCoefficients, SignalError> {
    if !(fs > 0.0) {
        return Err(SignalError::InvalidBand(format!("fs must be > 0, got {fs}")));
    }
    if !(f_lo > 0.0 && f_lo < f_hi && f_hi < fs / 2.0) {
        return Err(SignalError::InvalidBand(format!(
            "band must satisfy 0 < f_lo < f_hi < fs/2 (f_lo={f_lo}, f_hi={f_hi}, fs={fs})"
        )));
    }
    if order == 0 {
        return Err(SignalError::InvalidBand("order must be >= 1".into()));
    }

    let pi = std::f64::consts::PI;
    // Pre-warped analog band edges for the bilinear transform.
    let warp = |f: f64| 2.0 * fs * (pi * f / fs).tan();
    let w1 = warp(f_lo);
    let w2 = warp(f_hi);
    let bw = w2 - w1;
    let w0 = (w1 * w2).sqrt();

    // Unit-cutoff Butterworth prototype poles (left half plane).
    let mut analog_poles: Vec<Complex64> = Vec::with_capacity(2 * order);
    for k in 0..order {
        let theta = pi / 2.0 + pi * (2.0 * k as f64 + 1.0) / (2.0 * order as f64);
        let p = Complex64::new(theta.cos(), theta.sin());
        // Low-pass to band-pass: s^2 - p*bw*s + w0^2 = 0.
        let pb = p * (bw / 2.0);
        let disc = (pb * pb - Complex64::new(w0 * w0, 0.0)).sqrt();
        analog_poles.push(pb + disc);
        analog_poles.push(pb - disc);
    }

    // Bilinear transform of poles; zeros land at z = +1 (n) and z = -1 (n).
    let fs2 = 2.0 * fs;
    let digital_poles: Vec<Complex64> = analog_poles
        .iter()
        .map(|s| (Complex64::new(fs2, 0.0) + s) / (Complex64::new(fs2, 0.0) - s))
        .collect();

    let sections = pair_poles_into_sections(&digital_poles, order)?;
    let mut coeffs = FilterCoefficients { sections };

    // Normalize gain to unity at the digital band center.
    let f_center = fs / pi * (w0 / fs2).atan();
    let g = coeffs.magnitude_at(f_center, fs);
    if !(g.is_finite() && g > 0.0) {
        return Err(SignalError::InvalidBand(
            "band-pass gain normalization failed".into(),
        ));
    }
    for v in coeffs.sections[0].b.iter_mut() {
        *v /= g;
    }
    Ok(coeffs)
}

/// Group 2n digital poles into n conjugate-pair (or real-pair) sections, each
/// with numerator (z-1)(z+1).
fn pair_poles_into_sections(
    poles: &[Complex64],
    order: usize,
) -> Result<Vec<Sos>, SignalError> {
    let tol = 1e-9;
    let mut complex_poles: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > tol).collect();
    let mut real_poles: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= tol)
        .map(|p| p.re)
        .collect();
    complex_poles.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    real_poles.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut sections = Vec::with_capacity(order);
    for p in &complex_poles {
        sections.push(Sos {
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * p.re, p.norm_sqr()],
        });
    }
    let mut it = real_poles.chunks_exact(2);
    for pair in &mut it {
        let (r1, r2) = (pair[0], pair[1]);
        sections.push(Sos {
            b: [1.0, 0.0, -1.0],
            a: [-(r1 + r2), r1 * r2],
        });
    }
    if !it.remainder().is_empty() || sections.len() != order {
        return Err(SignalError::InvalidBand(
            "pole pairing failed (unexpected pole multiset)".into(),
        ));
    }
    Ok(sections)
}

/// Steady-state direct-form-II-transposed state for a unit constant input.
fn section_zi(s: &Sos) -> (f64, f64) {
    let denom = 1.0 + s.a[0] + s.a[1];
    let k = if denom.abs() > 1e-300 {
        (s.b[0] + s.b[1] + s.b[2]) / denom
    } else {
        0.0
    };
    let z1 = (s.b[1] + s.b[2]) - (s.a[0] + s.a[1]) * k;
    let z2 = s.b[2] - s.a[1] * k;
    (z1, z2)
}

fn sosfilt_forward(coeffs: &FilterCoefficients, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in coeffs.sections() {
        let (b0, b1, b2) = (s.b[0], s.b[1], s.b[2]);
        let (a1, a2) = (s.a[0], s.a[1]);
        let (z1u, z2u) = section_zi(s);
        let x0 = y[0];
        let mut z1 = z1u * x0;
        let mut z2 = z2u * x0;
        for v in y.iter_mut() {
            let xin = *v;
            let out = b0 * xin + z1;
            z1 = b1 * xin - a1 * out + z2;
            z2 = b2 * xin - a2 * out;
            *v = out;
        }
    }
    y
}

/// Zero-phase filtering of one channel: odd-extension padding by three filter
/// orders, forward pass, reverse, forward pass, reverse, crop. Initial states
/// start each pass in steady state so constant signals produce no transient.
pub fn filtfilt(coeffs: &FilterCoefficients, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let pad = (3 * coeffs.order()).min(n.saturating_sub(1));
    let last = n - 1;
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[last] - x[last - i]);
    }
    let mut y = sosfilt_forward(coeffs, &ext);
    y.reverse();
    let mut y = sosfilt_forward(coeffs, &y);
    y.reverse();
    y[pad..pad + n].to_vec()
}

/// Apply `coeffs` to every channel of `segment` with zero net phase shift.
///
/// Requires `n_samples > 3 * order` as an edge-effect guard.
pub fn apply_filter_zero_phase(
    segment: &EegSegment,
    coeffs: &FilterCoefficients,
) -> Result<EegSegment, SignalError> {
    let min_len = 3 * coeffs.order();
    if segment.n_samples() <= min_len {
        return Err(SignalError::SegmentTooShort(format!(
            "need more than {min_len} samples for order {}, have {}",
            coeffs.order(),
            segment.n_samples()
        )));
    }
    let data: Vec<Vec<f64>> = segment
        .data()
        .iter()
        .map(|row| filtfilt(coeffs, row))
        .collect();
    segment.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ChannelLayout;
    use crate::signal::Region;
    use std::sync::Arc;

    fn sine(f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / fs).sin())
            .collect()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    /// Steady-state gain measured by sinusoid pass-through, ignoring edges.
    fn sine_gain(coeffs: &FilterCoefficients, f: f64, fs: f64) -> f64 {
        let n = 4096;
        let x = sine(f, fs, n);
        let y = filtfilt(coeffs, &x);
        let core = n / 4..3 * n / 4;
        rms(&y[core.clone()]) / rms(&x[core])
    }

    fn seg1(x: Vec<f64>, fs: f64) -> EegSegment {
        let layout = Arc::new(ChannelLayout::new(vec![("c".into(), Region::Other)]).unwrap());
        EegSegment::new(vec![x], fs, layout, 0.0).unwrap()
    }

    #[test]
    fn bandpass_design_is_stable_and_selective() {
        let spec = FilterSpec::BandPass {
            f_lo: 8.0,
            f_hi: 30.0,
            order: 4,
            fs: 250.0,
        };
        let c = design_filter(&spec).unwrap();
        assert!(c.is_stable());
        assert_eq!(c.order(), 8);
        assert!(sine_gain(&c, 19.0, 250.0) >= 0.9, "mid-band should pass");
        assert!(sine_gain(&c, 2.0, 250.0) <= 0.1, "stop-band should block");
    }

    #[test]
    fn notch_kills_center_and_passes_neighbors() {
        let c = design_filter(&FilterSpec::Notch {
            f0: 60.0,
            q: 30.0,
            fs: 250.0,
        })
        .unwrap();
        assert!(c.is_stable());
        assert!(sine_gain(&c, 60.0, 250.0) <= 0.05);
        assert!(sine_gain(&c, 30.0, 250.0) >= 0.95);
    }

    #[test]
    fn invalid_bands_are_rejected() {
        let bad = FilterSpec::BandPass {
            f_lo: 8.0,
            f_hi: 125.0,
            order: 4,
            fs: 250.0,
        };
        assert!(matches!(design_filter(&bad), Err(SignalError::InvalidBand(_))));
        let swapped = FilterSpec::BandPass {
            f_lo: 30.0,
            f_hi: 8.0,
            order: 4,
            fs: 250.0,
        };
        assert!(design_filter(&swapped).is_err());
        let notch_high = FilterSpec::Notch {
            f0: 130.0,
            q: 30.0,
            fs: 250.0,
        };
        assert!(design_filter(&notch_high).is_err());
    }

    #[test]
    fn stability_holds_across_spec_grid() {
        for order in 1..=6usize {
            for &(lo, hi) in &[(1.0, 4.0), (8.0, 12.0), (8.0, 30.0), (20.0, 24.0), (24.0, 30.0)] {
                let c = design_filter(&FilterSpec::BandPass {
                    f_lo: lo,
                    f_hi: hi,
                    order,
                    fs: 250.0,
                })
                .unwrap();
                for m in c.pole_magnitudes() {
                    assert!(m < 1.0, "pole magnitude {m} for order {order} band {lo}-{hi}");
                }
            }
        }
    }

    #[test]
    fn zero_phase_peak_correlation_at_zero_lag() {
        let fs = 250.0;
        let n = 2048;
        let x = sine(10.0, fs, n);
        let c = design_filter(&FilterSpec::BandPass {
            f_lo: 8.0,
            f_hi: 30.0,
            order: 4,
            fs,
        })
        .unwrap();
        let seg = seg1(x.clone(), fs);
        let y = apply_filter_zero_phase(&seg, &c).unwrap();
        let y = y.channel(0);
        // cross-correlation over lags -5..=5, interior windows only
        let mut best_lag = 0i64;
        let mut best = f64::MIN;
        for lag in -5i64..=5 {
            let mut acc = 0.0;
            for i in 100..(n as i64 - 100) {
                let j = i + lag;
                acc += x[i as usize] * y[j as usize];
            }
            if acc > best {
                best = acc;
                best_lag = lag;
            }
        }
        assert!(best_lag.abs() <= 1, "lag of max cross-correlation was {best_lag}");
    }

    #[test]
    fn zeros_map_to_zeros_and_dc_is_blocked() {
        let fs = 250.0;
        let c = design_filter(&FilterSpec::BandPass {
            f_lo: 8.0,
            f_hi: 30.0,
            order: 4,
            fs,
        })
        .unwrap();
        let zeros = seg1(vec![0.0; 1000], fs);
        let out = apply_filter_zero_phase(&zeros, &c).unwrap();
        assert!(out.channel(0).iter().all(|v| *v == 0.0));

        let dc = seg1(vec![1.0; 2500], fs);
        let out = apply_filter_zero_phase(&dc, &c).unwrap();
        assert!(rms(out.channel(0)) <= 0.01, "DC leak rms {}", rms(out.channel(0)));
    }

    #[test]
    fn short_segments_are_rejected() {
        let fs = 250.0;
        let c = design_filter(&FilterSpec::BandPass {
            f_lo: 8.0,
            f_hi: 30.0,
            order: 4,
            fs,
        })
        .unwrap();
        let seg = seg1(vec![0.0; 24], fs);
        assert!(matches!(
            apply_filter_zero_phase(&seg, &c),
            Err(SignalError::SegmentTooShort(_))
        ));
    }

    #[test]
    fn design_is_deterministic() {
        let spec = FilterSpec::BandPass {
            f_lo: 8.0,
            f_hi: 30.0,
            order: 4,
            fs: 250.0,
        };
        assert_eq!(design_filter(&spec).unwrap(), design_filter(&spec).unwrap());
    }
}
