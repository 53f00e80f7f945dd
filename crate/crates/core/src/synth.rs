//! Synthetic neurophysiology forward model and simulated user: seeded
//! generators for SSVEP, motor-imagery, EMG, and artifact signals with
//! controlled SNR and ground-truth labels, plus protocol-level intents read
//! off a task's scripted plan.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::emg::ArtifactKind;
use crate::mi::MiClass;
use crate::signal::{
    design_filter, filtfilt, ChannelLayout, EegSegment, FilterSpec, Region, SignalError,
};
use crate::world::{Skill, TaskDef, WorldError, WorldState};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("plan exhausted: queried past the terminal marker")]
    PlanExhausted,
    #[error("plan step {0} has no object operand")]
    PlanStepWithoutObject(usize),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// SplitMix64 hash, used to derive per-call seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed-splitting rule for independent trials/calls: the base seed XORed
/// with the hash of the call index.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    seed ^ splitmix64(index)
}

/// The 16-channel default layout: 4 visual, 4 left-motor, 4 right-motor,
/// 4 frontal.
pub fn default_layout() -> Arc<ChannelLayout> {
    let channels = vec![
        ("O1".to_string(), Region::Visual),
        ("O2".to_string(), Region::Visual),
        ("Oz".to_string(), Region::Visual),
        ("POz".to_string(), Region::Visual),
        ("C3".to_string(), Region::MotorLeft),
        ("C1".to_string(), Region::MotorLeft),
        ("CP3".to_string(), Region::MotorLeft),
        ("FC3".to_string(), Region::MotorLeft),
        ("C4".to_string(), Region::MotorRight),
        ("C2".to_string(), Region::MotorRight),
        ("CP4".to_string(), Region::MotorRight),
        ("FC4".to_string(), Region::MotorRight),
        ("Fp1".to_string(), Region::Frontal),
        ("Fp2".to_string(), Region::Frontal),
        ("F7".to_string(), Region::Frontal),
        ("F8".to_string(), Region::Frontal),
    ];
    Arc::new(ChannelLayout::new(channels).unwrap())
}

/// Per-class channels-by-sources mixing matrices for the MI generator.
/// Sources: 0 = left-motor mu, 1 = right-motor mu, 2 = central beta,
/// 3 = visual alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct MiMixing {
    pub per_class: Vec<DMatrix<f64>>,
}

const MI_BOOST: f64 = 3.0;

impl MiMixing {
    /// Class-dependent region gains: imagining a hand boosts the mu source
    /// over the contralateral motor region, legs boost central beta over both
    /// motor regions, and rest boosts visual alpha. Per-channel profiles
    /// differ per source so the columns stay linearly independent.
    pub fn default_for(layout: &ChannelLayout) -> MiMixing {
        let n = layout.len();
        let mut per_class = Vec::with_capacity(4);
        for cls in 0..4usize {
            let mut m = DMatrix::zeros(n, 4);
            let mut region_pos = std::collections::BTreeMap::new();
            for ch in 0..n {
                let region = layout.region(ch);
                let k = *region_pos
                    .entry(region)
                    .and_modify(|v| *v += 1)
                    .or_insert(0usize);
                let rising = 1.0 + 0.1 * k as f64;
                let falling = 1.3 - 0.1 * k as f64;
                match region {
                    Region::MotorLeft => {
                        let mu_gain = if cls == MiClass::RightHand.index() {
                            MI_BOOST
                        } else {
                            1.0
                        };
                        let beta_gain = if cls == MiClass::Legs.index() { MI_BOOST } else { 1.0 };
                        m[(ch, 0)] = mu_gain * rising;
                        m[(ch, 2)] = beta_gain * falling;
                    }
                    Region::MotorRight => {
                        let mu_gain = if cls == MiClass::LeftHand.index() {
                            MI_BOOST
                        } else {
                            1.0
                        };
                        let beta_gain = if cls == MiClass::Legs.index() { MI_BOOST } else { 1.0 };
                        m[(ch, 1)] = mu_gain * rising;
                        m[(ch, 2)] = beta_gain * falling;
                    }
                    Region::Visual => {
                        let alpha_gain = if cls == MiClass::Rest.index() { MI_BOOST } else { 1.0 };
                        m[(ch, 3)] = alpha_gain * rising;
                    }
                    Region::Frontal | Region::Other => {}
                }
            }
            per_class.push(m);
        }
        MiMixing { per_class }
    }
}

/// All knobs of the forward model. The seed fully determines every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub fs: f64,
    pub layout: Arc<ChannelLayout>,
    pub snr_db: f64,
    /// Per-visual-channel stimulus amplitude.
    pub ssvep_gain: Vec<f64>,
    pub mi_mixing: MiMixing,
    pub seed: u64,
    /// Optional SNR slope in dB per minute of protocol time.
    pub drift_db_per_min: Option<f64>,
    /// Clench burst RMS relative to the rest level.
    pub burst_gain: f64,
    /// Probability that the simulated user emits a wrong intent.
    pub wrong_intent_prob: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let layout = default_layout();
        let n_visual = layout.indices_of(&[Region::Visual]).len();
        SynthConfig {
            fs: 250.0,
            snr_db: 0.0,
            ssvep_gain: vec![1.0; n_visual],
            mi_mixing: MiMixing::default_for(&layout),
            layout,
            seed: 0,
            drift_db_per_min: None,
            burst_gain: 10.0,
            wrong_intent_prob: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn with_seed(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn with_snr(&self, snr_db: f64) -> SynthConfig {
        SynthConfig {
            snr_db,
            ..self.clone()
        }
    }

    /// Effective SNR after `minutes` of protocol time under the drift knob.
    pub fn snr_at(&self, minutes: f64) -> f64 {
        self.snr_db + self.drift_db_per_min.unwrap_or(0.0) * minutes
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let norm: StandardNormal = StandardNormal;
    (0..n).map(|_| Distribution::<f64>::sample(&norm, rng)).collect()
}

fn normalize_unit_var(x: &mut [f64]) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        let s = var.sqrt();
        for v in x.iter_mut() {
            *v = (*v - mean) / s;
        }
    }
}

/// Pink noise by the Kellet three-pole filter, unit variance.
fn pink_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let white = normal_vec(rng, n);
    let (mut b0, mut b1, mut b2) = (0.0f64, 0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for w in white {
        b0 = 0.99765 * b0 + w * 0.0990460;
        b1 = 0.96300 * b1 + w * 0.2965164;
        b2 = 0.57000 * b2 + w * 1.0526913;
        out.push(b0 + b1 + b2 + w * 0.1848);
    }
    normalize_unit_var(&mut out);
    out
}

/// Unit-variance EEG background: equal-power white plus pink mixture.
fn background_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let white = normal_vec(rng, n);
    let pink = pink_noise(rng, n);
    let mut out: Vec<f64> = white.iter().zip(&pink).map(|(w, p)| w + p).collect();
    normalize_unit_var(&mut out);
    out
}

/// Unit-variance narrow-band noise source.
fn band_source(rng: &mut ChaCha8Rng, n: usize, fs: f64, lo: f64, hi: f64) -> Vec<f64> {
    let coeffs = design_filter(&FilterSpec::BandPass {
        f_lo: lo,
        f_hi: hi,
        order: 4,
        fs,
    })
    .expect("band source band is valid");
    let mut x = filtfilt(&coeffs, &normal_vec(rng, n));
    normalize_unit_var(&mut x);
    x
}

fn channel_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Steady-state response to a flicker at `freq`: a sinusoid plus a half-gain
/// second harmonic on the visual channels, background noise everywhere,
/// scaled so in-band signal power over total noise power hits `snr_db`.
pub fn gen_ssvep(freq: f64, duration_s: f64, cfg: &SynthConfig) -> EegSegment {
    let n = (duration_s * cfg.fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phase: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
    let phase2: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));

    let visual = cfg.layout.indices_of(&[Region::Visual]);
    let w = 2.0 * std::f64::consts::PI * freq;
    let mut clean: Vec<Option<Vec<f64>>> = vec![None; cfg.layout.len()];
    for (vi, &ch) in visual.iter().enumerate() {
        let g = cfg.ssvep_gain.get(vi).copied().unwrap_or(1.0);
        clean[ch] = Some(
            (0..n)
                .map(|k| {
                    let t = k as f64 / cfg.fs;
                    g * ((w * t + phase).sin() + 0.5 * (2.0 * w * t + phase2).sin())
                })
                .collect(),
        );
    }
    let p_signal = {
        let vars: Vec<f64> = clean
            .iter()
            .flatten()
            .map(|c| channel_variance(c))
            .collect();
        vars.iter().sum::<f64>() / vars.len().max(1) as f64
    };
    let noise_var = p_signal / 10f64.powf(cfg.snr_db / 10.0);
    let sigma = noise_var.sqrt();

    let data: Vec<Vec<f64>> = (0..cfg.layout.len())
        .map(|ch| {
            let noise = background_noise(&mut rng, n);
            match &clean[ch] {
                Some(c) => c.iter().zip(&noise).map(|(s, v)| s + sigma * v).collect(),
                None => noise.iter().map(|v| sigma * v).collect(),
            }
        })
        .collect();
    EegSegment::new(data, cfg.fs, Arc::clone(&cfg.layout), 0.0).unwrap()
}

/// Class-conditional motor-imagery window: band-limited sources mixed through
/// the class mixing matrix plus 1/f background at the configured SNR.
pub fn gen_mi(cls: MiClass, duration_s: f64, cfg: &SynthConfig) -> EegSegment {
    let n = (duration_s * cfg.fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sources = [
        band_source(&mut rng, n, cfg.fs, 8.0, 12.0),  // left-motor mu
        band_source(&mut rng, n, cfg.fs, 8.0, 12.0),  // right-motor mu
        band_source(&mut rng, n, cfg.fs, 18.0, 26.0), // central beta
        band_source(&mut rng, n, cfg.fs, 8.0, 12.0),  // visual alpha
    ];
    let mixing = &cfg.mi_mixing.per_class[cls.index()];
    let n_ch = cfg.layout.len();

    let mut clean = vec![vec![0.0f64; n]; n_ch];
    for ch in 0..n_ch {
        for (j, src) in sources.iter().enumerate() {
            let g = mixing[(ch, j)];
            if g != 0.0 {
                for (c, s) in clean[ch].iter_mut().zip(src) {
                    *c += g * s;
                }
            }
        }
    }
    let p_signal =
        clean.iter().map(|c| channel_variance(c)).sum::<f64>() / n_ch as f64;
    let noise_var = p_signal / 10f64.powf(cfg.snr_db / 10.0);
    let sigma = noise_var.sqrt();

    let data: Vec<Vec<f64>> = clean
        .into_iter()
        .map(|c| {
            let noise = background_noise(&mut rng, n);
            c.iter().zip(&noise).map(|(s, v)| s + sigma * v).collect()
        })
        .collect();
    EegSegment::new(data, cfg.fs, Arc::clone(&cfg.layout), 0.0).unwrap()
}

/// One 500 ms confirmation window: rest-level noise everywhere, plus a
/// broadband 20-100 Hz burst on the frontal channels when clenching, scaled
/// so the clench RMS is `burst_gain` times the rest level.
pub fn gen_emg(clench: bool, cfg: &SynthConfig) -> EegSegment {
    let n = (crate::emg::EMG_WINDOW_S * cfg.fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let frontal = cfg.layout.indices_of(&[Region::Frontal]);
    let burst_var = (cfg.burst_gain * cfg.burst_gain - 1.0).max(0.0);

    let data: Vec<Vec<f64>> = (0..cfg.layout.len())
        .map(|ch| {
            let mut x = background_noise(&mut rng, n);
            if clench && frontal.contains(&ch) && burst_var > 0.0 {
                let burst = band_source(&mut rng, n, cfg.fs, 20.0, 100.0);
                let g = burst_var.sqrt();
                for (v, b) in x.iter_mut().zip(&burst) {
                    *v += g * b;
                }
            }
            x
        })
        .collect();
    EegSegment::new(data, cfg.fs, Arc::clone(&cfg.layout), 0.0).unwrap()
}

/// Labeled artifact segment for the rejection checks: a blink bump, an
/// opposite-polarity slow deflection on the outer frontal pair, a sub-1 Hz
/// drift, or clean in-band activity.
pub fn gen_artifact(kind: ArtifactKind, duration_s: f64, cfg: &SynthConfig) -> EegSegment {
    let n = (duration_s * cfg.fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let frontal = cfg.layout.indices_of(&[Region::Frontal]);

    let mut data: Vec<Vec<f64>> = match kind {
        ArtifactKind::Clean => (0..cfg.layout.len())
            .map(|_| band_source(&mut rng, n, cfg.fs, 8.0, 30.0))
            .collect(),
        _ => (0..cfg.layout.len())
            .map(|_| background_noise(&mut rng, n))
            .collect(),
    };
    match kind {
        ArtifactKind::Clean => {}
        ArtifactKind::Blink => {
            let center = n as f64 / 2.0;
            let sigma_t = 0.04 * cfg.fs;
            for &ch in &frontal {
                for (k, v) in data[ch].iter_mut().enumerate() {
                    let d = (k as f64 - center) / sigma_t;
                    *v += 8.0 * (-0.5 * d * d).exp();
                }
            }
        }
        ArtifactKind::LateralEyeMovement => {
            let (left, right) = (frontal[0], *frontal.last().unwrap());
            for k in 0..n {
                let ramp = 8.0 * (k as f64 / n as f64 - 0.5);
                data[left][k] += ramp;
                data[right][k] -= ramp;
            }
        }
        ArtifactKind::LowFrequencyDrift => {
            let w = 2.0 * std::f64::consts::PI * 0.3;
            for row in data.iter_mut() {
                for (k, v) in row.iter_mut().enumerate() {
                    *v += 5.0 * (w * k as f64 / cfg.fs).sin();
                }
            }
        }
    }
    EegSegment::new(data, cfg.fs, Arc::clone(&cfg.layout), 0.0).unwrap()
}

/// Decoding stage the simulated user is currently serving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntentStage {
    SelectObject,
    SelectSkill,
    SelectParam,
    Confirm,
}

/// The next (object, skill, parameter) step the simulated user wants.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedIntent {
    pub object_id: String,
    pub skill: Skill,
    pub param: Option<[f64; 3]>,
    pub stage: IntentStage,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntentOutcome {
    Step(SimulatedIntent),
    Terminal,
}

/// Read the next plan step as an intent. Returns `Terminal` once the goal
/// holds or the plan is consumed; querying past that point is an error.
pub fn next_intent(
    world: &WorldState,
    task: &TaskDef,
    plan_cursor: usize,
) -> Result<IntentOutcome, SynthError> {
    if plan_cursor > task.plan.len() {
        return Err(SynthError::PlanExhausted);
    }
    let cfg = crate::world::WorldCfg::default();
    if crate::world::check_goal(world, &task.goal, &cfg)? || plan_cursor == task.plan.len() {
        return Ok(IntentOutcome::Terminal);
    }
    let step = &task.plan[plan_cursor];
    let object_id = step
        .object
        .clone()
        .ok_or(SynthError::PlanStepWithoutObject(plan_cursor))?;
    world.object(&object_id)?;
    Ok(IntentOutcome::Step(SimulatedIntent {
        object_id,
        skill: step.skill,
        param: step.point,
        stage: IntentStage::SelectObject,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emg::{calibrate_threshold, detect_tension};
    use crate::ssvep::{classify_ssvep, FrequencyBank};
    use crate::world::load_builtin_task;

    #[test]
    fn generators_are_seed_deterministic() {
        let cfg = SynthConfig::default().with_seed(77);
        assert_eq!(gen_ssvep(7.5, 2.0, &cfg), gen_ssvep(7.5, 2.0, &cfg));
        assert_eq!(
            gen_mi(MiClass::Legs, 3.0, &cfg),
            gen_mi(MiClass::Legs, 3.0, &cfg)
        );
        assert_eq!(gen_emg(true, &cfg), gen_emg(true, &cfg));
        let other = cfg.with_seed(78);
        assert_ne!(gen_ssvep(7.5, 2.0, &cfg), gen_ssvep(7.5, 2.0, &other));
    }

    #[test]
    fn near_noiseless_ssvep_classifies_with_high_correlation() {
        let bank = FrequencyBank::default();
        let cfg = SynthConfig::default().with_snr(40.0).with_seed(1);
        let seg = gen_ssvep(7.5, 10.0, &cfg);
        let d = classify_ssvep(&seg, &bank).unwrap();
        assert_eq!(bank.freqs[d.index], 7.5);
        assert!(d.scores[d.index] >= 0.99, "rho {}", d.scores[d.index]);
    }

    #[test]
    fn deep_noise_ssvep_sits_at_chance() {
        let bank = FrequencyBank::default();
        let mut correct = 0usize;
        let trials = 400usize;
        for t in 0..trials {
            let cfg = SynthConfig::default()
                .with_snr(-60.0)
                .with_seed(split_seed(5, t as u64));
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(999, t as u64));
            let label = rng.gen_range(0..4usize);
            let seg = gen_ssvep(bank.freqs[label], 4.0, &cfg);
            if classify_ssvep(&seg, &bank).unwrap().index == label {
                correct += 1;
            }
        }
        let acc = correct as f64 / trials as f64;
        assert!((acc - 0.25).abs() <= 0.07, "chance-level accuracy {acc}");
    }

    /// Requested-vs-measured SNR oracle: least-squares fit of the known
    /// sin/cos basis per visual channel, signal power over residual power.
    #[test]
    fn ssvep_snr_matches_the_request_within_one_db() {
        let freq = 10.0;
        let requested = 0.0;
        let mut measured_lin = 0.0f64;
        let trials = 400;
        for t in 0..trials {
            let cfg = SynthConfig::default()
                .with_snr(requested)
                .with_seed(split_seed(31, t));
            let seg = gen_ssvep(freq, 2.0, &cfg);
            let vis = seg.select_regions(&[Region::Visual]).unwrap();
            let n = vis.n_samples();
            // basis: sin/cos at f and 2f
            let mut basis = Vec::new();
            for h in [1.0, 2.0] {
                let w = 2.0 * std::f64::consts::PI * freq * h;
                basis.push((0..n).map(|k| (w * k as f64 / vis.fs()).sin()).collect::<Vec<_>>());
                basis.push((0..n).map(|k| (w * k as f64 / vis.fs()).cos()).collect::<Vec<_>>());
            }
            let mut sig_pow = 0.0;
            let mut noise_pow = 0.0;
            for c in 0..vis.n_channels() {
                let x = vis.channel(c);
                let mut fit = vec![0.0f64; n];
                for b in &basis {
                    let bb: f64 = b.iter().map(|v| v * v).sum();
                    let xb: f64 = x.iter().zip(b).map(|(a, b)| a * b).sum();
                    let coef = xb / bb;
                    for (f, bv) in fit.iter_mut().zip(b) {
                        *f += coef * bv;
                    }
                }
                sig_pow += fit.iter().map(|v| v * v).sum::<f64>() / n as f64;
                noise_pow += x
                    .iter()
                    .zip(&fit)
                    .map(|(a, f)| (a - f) * (a - f))
                    .sum::<f64>()
                    / n as f64;
            }
            measured_lin += sig_pow / noise_pow;
        }
        let measured_db = 10.0 * (measured_lin / trials as f64).log10();
        assert!(
            (measured_db - requested).abs() <= 1.0,
            "measured {measured_db} dB vs requested {requested} dB"
        );
    }

    /// Band-power oracle built from the known generative asymmetries.
    fn band_power_oracle(seg: &EegSegment) -> MiClass {
        let fs = seg.fs();
        let power_in = |ch: &[f64], lo: f64, hi: f64| {
            let c = design_filter(&FilterSpec::BandPass {
                f_lo: lo,
                f_hi: hi,
                order: 4,
                fs,
            })
            .unwrap();
            let y = filtfilt(&c, ch);
            y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
        };
        let region_power = |region: Region, lo: f64, hi: f64| {
            let sub = seg.select_regions(&[region]).unwrap();
            (0..sub.n_channels())
                .map(|c| power_in(sub.channel(c), lo, hi))
                .sum::<f64>()
                / sub.n_channels() as f64
        };
        let scores = [
            region_power(Region::MotorRight, 8.0, 12.0), // LeftHand boost
            region_power(Region::MotorLeft, 8.0, 12.0),  // RightHand boost
            (region_power(Region::MotorLeft, 18.0, 26.0)
                + region_power(Region::MotorRight, 18.0, 26.0))
                / 2.0, // Legs boost
            region_power(Region::Visual, 8.0, 12.0),     // Rest boost
        ];
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        MiClass::from_index(best).unwrap()
    }

    #[test]
    fn band_power_oracle_recovers_classes_at_high_snr() {
        let mut correct = 0usize;
        let trials = 100usize;
        for t in 0..trials {
            let cfg = SynthConfig::default()
                .with_snr(40.0)
                .with_seed(split_seed(7, t as u64));
            let cls = MiClass::from_index(t % 4).unwrap();
            let seg = gen_mi(cls, 3.0, &cfg);
            if band_power_oracle(&seg) == cls {
                correct += 1;
            }
        }
        assert!(
            correct as f64 / trials as f64 >= 0.99,
            "{correct}/{trials}"
        );
    }

    #[test]
    fn clench_windows_separate_and_degenerate_gain_does_not() {
        let cfg = SynthConfig::default();
        let rest: Vec<EegSegment> = (0..20)
            .map(|t| gen_emg(false, &cfg.with_seed(split_seed(100, t))))
            .collect();
        let clench: Vec<EegSegment> = (0..20)
            .map(|t| gen_emg(true, &cfg.with_seed(split_seed(200, t))))
            .collect();
        let th = calibrate_threshold(&rest, &clench).unwrap();
        // clench log-variance exceeds the rest mean by at least ln(burst_gain)
        assert!(
            th.calib_clench_stats.0 - th.calib_rest_stats.0 >= cfg.burst_gain.ln(),
            "separation {}",
            th.calib_clench_stats.0 - th.calib_rest_stats.0
        );
        for t in 0..100 {
            let w = gen_emg(true, &cfg.with_seed(split_seed(300, t)));
            assert!(detect_tension(&w, &th).unwrap());
            let w = gen_emg(false, &cfg.with_seed(split_seed(400, t)));
            assert!(!detect_tension(&w, &th).unwrap());
        }

        let flat = SynthConfig {
            burst_gain: 1.0,
            ..SynthConfig::default()
        };
        let rest: Vec<EegSegment> = (0..15)
            .map(|t| gen_emg(false, &flat.with_seed(split_seed(500, t))))
            .collect();
        let clench: Vec<EegSegment> = (0..15)
            .map(|t| gen_emg(true, &flat.with_seed(split_seed(600, t))))
            .collect();
        assert!(calibrate_threshold(&rest, &clench).is_err());
    }

    #[test]
    fn intents_walk_the_scripted_plan() {
        let task = load_builtin_task("WipeSpill").unwrap();
        let world = task.initial_world();
        let step = match next_intent(&world, &task, 0).unwrap() {
            IntentOutcome::Step(s) => s,
            IntentOutcome::Terminal => panic!("fresh task reported terminal"),
        };
        assert_eq!(step.object_id, "towel");
        assert_eq!(step.skill, Skill::Pick);
        assert_eq!(step.param, Some([0.30, 0.40, 0.02]));

        // pure in (world, cursor)
        assert_eq!(
            next_intent(&world, &task, 0).unwrap(),
            next_intent(&world, &task, 0).unwrap()
        );

        assert_eq!(
            next_intent(&world, &task, task.plan.len()).unwrap(),
            IntentOutcome::Terminal
        );
        assert!(matches!(
            next_intent(&world, &task, task.plan.len() + 1),
            Err(SynthError::PlanExhausted)
        ));
    }

    #[test]
    fn goal_satisfaction_short_circuits_to_terminal() {
        let task = load_builtin_task("OpenBasket").unwrap();
        let mut world = task.initial_world();
        world
            .objects
            .get_mut("basket")
            .unwrap()
            .flags
            .insert("open".to_string());
        assert_eq!(
            next_intent(&world, &task, 1).unwrap(),
            IntentOutcome::Terminal
        );
    }
}
