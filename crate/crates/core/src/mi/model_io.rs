//! The "noir-midec v1" calibration model file: versioned structured text with
//! fixed field order carrying the filter bank, per-(band, class) spatial
//! filter matrices, selected feature indices, classifier parameters, the
//! cross-validated calibration accuracy, and the EMG threshold section.

use nalgebra::DMatrix;

use super::{
    Classifier, ClassifierKind, FilterBank, LinearSvm, MiDecoder, MiError, QdaClassStats,
    QdaModel, SpatialFilterSet,
};
use crate::emg::TensionThreshold;
use crate::signal::io::fmt_g9;

const MIDEC_MAGIC: &str = "noir-midec v1";

/// Everything one calibration run produces: the fitted MI decoder plus the
/// EMG tension threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationModel {
    pub decoder: MiDecoder,
    pub emg: TensionThreshold,
}

fn join_g9(vals: impl Iterator<Item = f64>) -> String {
    vals.map(fmt_g9).collect::<Vec<_>>().join(",")
}

pub fn write_midec(model: &CalibrationModel) -> String {
    let d = &model.decoder;
    let mut out = String::new();
    out.push_str(&format!("# {MIDEC_MAGIC}\n"));

    out.push_str("[meta]\n");
    out.push_str(&format!("fs {}\n", d.fs));
    out.push_str(&format!("trial_samples {}\n", d.trial_samples));
    out.push_str(&format!("calib_accuracy {}\n", fmt_g9(d.calib_accuracy)));
    out.push_str(&format!("n_channels {}\n", d.filters.n_channels));
    out.push_str(&format!("m_pairs {}\n", d.filters.m_pairs));
    out.push_str(&format!("n_classes {}\n", d.filters.n_classes));

    out.push_str("[bank]\n");
    for (lo, hi) in &d.bank.bands {
        out.push_str(&format!("band {lo} {hi}\n"));
    }

    out.push_str("[filters]\n");
    for (b, per_class) in d.filters.projections.iter().enumerate() {
        for (c, proj) in per_class.iter().enumerate() {
            out.push_str(&format!("filters {b} {c}\n"));
            for r in 0..proj.nrows() {
                out.push_str(&join_g9((0..proj.ncols()).map(|j| proj[(r, j)])));
                out.push('\n');
            }
        }
    }

    out.push_str("[selected]\n");
    out.push_str(
        &d.selected
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    );
    out.push('\n');

    out.push_str("[classifier]\n");
    out.push_str(&format!("kind {}\n", d.classifier.kind().as_str()));
    match &d.classifier {
        Classifier::Svm(svm) => {
            out.push_str(&format!("dim {}\n", svm.weights[0].len() - 1));
            for w in &svm.weights {
                out.push_str(&join_g9(w.iter().copied()));
                out.push('\n');
            }
        }
        Classifier::Qda(qda) => {
            let dim = qda.classes[0].mean.len();
            out.push_str(&format!("dim {dim}\n"));
            for s in &qda.classes {
                out.push_str(&format!("log_prior {}\n", fmt_g9(s.log_prior)));
                out.push_str(&join_g9(s.mean.iter().copied()));
                out.push('\n');
                for row in &s.covariance {
                    out.push_str(&join_g9(row.iter().copied()));
                    out.push('\n');
                }
            }
        }
    }

    out.push_str("[emg]\n");
    out.push_str(&format!(
        "threshold {}\n",
        fmt_g9(model.emg.log_variance_threshold)
    ));
    out.push_str(&format!("rest_mean {}\n", fmt_g9(model.emg.calib_rest_stats.0)));
    out.push_str(&format!("rest_std {}\n", fmt_g9(model.emg.calib_rest_stats.1)));
    out.push_str(&format!(
        "clench_mean {}\n",
        fmt_g9(model.emg.calib_clench_stats.0)
    ));
    out.push_str(&format!(
        "clench_std {}\n",
        fmt_g9(model.emg.calib_clench_stats.1)
    ));
    out.push_str(&format!(
        "rest_amp_std {}\n",
        fmt_g9(model.emg.rest_amplitude_std)
    ));
    out
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            lines: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect(),
            pos: 0,
        }
    }

    fn next(&mut self) -> Result<&'a str, MiError> {
        let l = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| MiError::ModelFormat("unexpected end of file".into()))?;
        self.pos += 1;
        Ok(l)
    }

    fn expect(&mut self, what: &str) -> Result<(), MiError> {
        let l = self.next()?;
        if l != what {
            return Err(MiError::ModelFormat(format!(
                "expected {what:?}, found {l:?}"
            )));
        }
        Ok(())
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str, MiError> {
        let l = self.next()?;
        l.strip_prefix(key)
            .map(str::trim)
            .ok_or_else(|| MiError::ModelFormat(format!("expected key {key:?}, found {l:?}")))
    }
}

fn parse_f64(s: &str) -> Result<f64, MiError> {
    s.parse()
        .map_err(|_| MiError::ModelFormat(format!("bad number {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize, MiError> {
    s.parse()
        .map_err(|_| MiError::ModelFormat(format!("bad integer {s:?}")))
}

fn parse_row(s: &str, expect_len: usize) -> Result<Vec<f64>, MiError> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|v| parse_f64(v.trim())).collect();
    let vals = vals?;
    if vals.len() != expect_len {
        return Err(MiError::ModelFormat(format!(
            "row has {} values, expected {expect_len}",
            vals.len()
        )));
    }
    Ok(vals)
}

pub fn read_midec(text: &str) -> Result<CalibrationModel, MiError> {
    let mut ln = Lines::new(text);
    ln.expect(&format!("# {MIDEC_MAGIC}"))?;

    ln.expect("[meta]")?;
    let fs = parse_f64(ln.keyed("fs")?)?;
    let trial_samples = parse_usize(ln.keyed("trial_samples")?)?;
    let calib_accuracy = parse_f64(ln.keyed("calib_accuracy")?)?;
    let n_channels = parse_usize(ln.keyed("n_channels")?)?;
    let m_pairs = parse_usize(ln.keyed("m_pairs")?)?;
    let n_classes = parse_usize(ln.keyed("n_classes")?)?;

    ln.expect("[bank]")?;
    let mut bands = Vec::new();
    while let Ok(l) = ln.next() {
        if l == "[filters]" {
            break;
        }
        let rest = l
            .strip_prefix("band ")
            .ok_or_else(|| MiError::ModelFormat(format!("expected band line, found {l:?}")))?;
        let mut it = rest.split_whitespace();
        let lo = parse_f64(it.next().unwrap_or(""))?;
        let hi = parse_f64(it.next().unwrap_or(""))?;
        bands.push((lo, hi));
    }
    let bank = FilterBank { bands };

    let mut projections = vec![vec![DMatrix::zeros(0, 0); n_classes]; bank.bands.len()];
    for b in 0..bank.bands.len() {
        for c in 0..n_classes {
            let header = ln.next()?;
            if header != format!("filters {b} {c}") {
                return Err(MiError::ModelFormat(format!(
                    "expected 'filters {b} {c}', found {header:?}"
                )));
            }
            let mut m = DMatrix::zeros(2 * m_pairs, n_channels);
            for r in 0..2 * m_pairs {
                let row = parse_row(ln.next()?, n_channels)?;
                for (j, v) in row.into_iter().enumerate() {
                    m[(r, j)] = v;
                }
            }
            projections[b][c] = m;
        }
    }
    let filters = SpatialFilterSet {
        n_channels,
        m_pairs,
        n_classes,
        projections,
    };

    ln.expect("[selected]")?;
    let selected: Result<Vec<usize>, _> = ln.next()?.split_whitespace().map(parse_usize).collect();
    let selected = selected?;

    ln.expect("[classifier]")?;
    let kind = ClassifierKind::parse(ln.keyed("kind")?)
        .ok_or_else(|| MiError::ModelFormat("unknown classifier kind".into()))?;
    let dim = parse_usize(ln.keyed("dim")?)?;
    let classifier = match kind {
        ClassifierKind::Svm => {
            let mut weights = Vec::with_capacity(n_classes);
            for _ in 0..n_classes {
                weights.push(parse_row(ln.next()?, dim + 1)?);
            }
            Classifier::Svm(LinearSvm { weights })
        }
        ClassifierKind::Qda => {
            let mut classes = Vec::with_capacity(n_classes);
            for _ in 0..n_classes {
                let log_prior = parse_f64(ln.keyed("log_prior")?)?;
                let mean = parse_row(ln.next()?, dim)?;
                let mut covariance = Vec::with_capacity(dim);
                for _ in 0..dim {
                    covariance.push(parse_row(ln.next()?, dim)?);
                }
                classes.push(QdaClassStats {
                    mean,
                    covariance,
                    log_prior,
                });
            }
            Classifier::Qda(QdaModel::from_stats(classes)?)
        }
    };

    ln.expect("[emg]")?;
    let threshold = parse_f64(ln.keyed("threshold")?)?;
    let rest_mean = parse_f64(ln.keyed("rest_mean")?)?;
    let rest_std = parse_f64(ln.keyed("rest_std")?)?;
    let clench_mean = parse_f64(ln.keyed("clench_mean")?)?;
    let clench_std = parse_f64(ln.keyed("clench_std")?)?;
    let rest_amp_std = parse_f64(ln.keyed("rest_amp_std")?)?;

    Ok(CalibrationModel {
        decoder: MiDecoder {
            bank,
            filters,
            selected,
            classifier,
            calib_accuracy,
            trial_samples,
            fs,
        },
        emg: TensionThreshold {
            log_variance_threshold: threshold,
            calib_rest_stats: (rest_mean, rest_std),
            calib_clench_stats: (clench_mean, clench_std),
            rest_amplitude_std: rest_amp_std,
        },
    })
}
