//! Classifiers for the decoder pipelines: a from-scratch linear one-vs-rest
//! SVM trained by dual coordinate ascent, and regularized quadratic
//! discriminant analysis for the baseline.

use nalgebra::{DMatrix, DVector};

use super::MiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Svm,
    Qda,
}

impl ClassifierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Qda => "qda",
        }
    }

    pub fn parse(s: &str) -> Option<ClassifierKind> {
        match s {
            "svm" => Some(ClassifierKind::Svm),
            "qda" => Some(ClassifierKind::Qda),
            _ => None,
        }
    }
}

/// Linear one-vs-rest maximum-margin model. `weights[c]` has `dim + 1`
/// entries, bias last; the decision is the arg max of the margins.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<Vec<f64>>,
}

/// Per-class Gaussian with regularized covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct QdaClassStats {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub log_prior: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdaModel {
    pub classes: Vec<QdaClassStats>,
    /// Cached per-class (precision matrix, log determinant).
    cached: Vec<(DMatrix<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Svm(LinearSvm),
    Qda(QdaModel),
}

const SVM_C: f64 = 1.0;
const SVM_TOL: f64 = 1e-4;
const SVM_MAX_EPOCHS: usize = 2000;
const QDA_RIDGE: f64 = 1e-3;

/// Train one binary max-margin separator (labels +-1) by dual coordinate
/// ascent on the L1-loss SVM dual; deterministic sequential sweep order.
fn svm_binary(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let dim = x[0].len() + 1; // bias folded in as a constant feature
    let mut w = vec![0.0f64; dim];
    let mut alpha = vec![0.0f64; n];
    let q_ii: Vec<f64> = x
        .iter()
        .map(|xi| xi.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();

    for _ in 0..SVM_MAX_EPOCHS {
        let mut max_pg = 0.0f64;
        for i in 0..n {
            let xi = &x[i];
            let mut margin = w[dim - 1];
            for (j, v) in xi.iter().enumerate() {
                margin += w[j] * v;
            }
            let g = y[i] * margin - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= SVM_C {
                g.max(0.0)
            } else {
                g
            };
            if pg.abs() > max_pg {
                max_pg = pg.abs();
            }
            if pg.abs() > 1e-14 {
                let new_alpha = (alpha[i] - g / q_ii[i]).clamp(0.0, SVM_C);
                let delta = (new_alpha - alpha[i]) * y[i];
                if delta != 0.0 {
                    for (j, v) in xi.iter().enumerate() {
                        w[j] += delta * v;
                    }
                    w[dim - 1] += delta;
                    alpha[i] = new_alpha;
                }
            }
        }
        if max_pg < SVM_TOL {
            break;
        }
    }
    w
}

fn qda_cache(stats: &[QdaClassStats]) -> Result<Vec<(DMatrix<f64>, f64)>, MiError> {
    stats
        .iter()
        .map(|s| {
            let d = s.mean.len();
            let cov = DMatrix::from_fn(d, d, |i, j| s.covariance[i][j]);
            let chol = cov.clone().cholesky().ok_or_else(|| {
                MiError::SingularCovariance("QDA class covariance not positive definite".into())
            })?;
            let log_det = 2.0 * (0..d).map(|i| chol.l()[(i, i)].ln()).sum::<f64>();
            let precision = chol.inverse();
            Ok((precision, log_det))
        })
        .collect()
}

/// Fit the requested classifier on feature rows with class-index labels.
///
/// `n_classes` fixes the score vector length; every class that appears needs
/// at least two samples, and at least two distinct classes must be present.
pub fn classifier_fit(
    features: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    kind: ClassifierKind,
) -> Result<Classifier, MiError> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(MiError::ShapeMismatch(
            "feature/label counts differ or are empty".into(),
        ));
    }
    for row in features {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(MiError::ShapeMismatch("non-finite feature value".into()));
        }
    }
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        if y >= n_classes {
            return Err(MiError::ShapeMismatch(format!(
                "label {y} out of range for {n_classes} classes"
            )));
        }
        counts[y] += 1;
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| counts[c] > 0).collect();
    if present.len() < 2 {
        return Err(MiError::DegenerateClass(
            "need at least two distinct classes".into(),
        ));
    }
    for &c in &present {
        if counts[c] < 2 {
            return Err(MiError::DegenerateClass(format!(
                "class {c} has fewer than 2 samples"
            )));
        }
    }

    match kind {
        ClassifierKind::Svm => {
            let dim = features[0].len();
            let mut weights = vec![vec![0.0; dim + 1]; n_classes];
            for &c in &present {
                let y: Vec<f64> = labels
                    .iter()
                    .map(|&l| if l == c { 1.0 } else { -1.0 })
                    .collect();
                weights[c] = svm_binary(features, &y);
            }
            // absent classes keep zero weights and a strongly negative bias
            for c in 0..n_classes {
                if counts[c] == 0 {
                    weights[c][dim] = f64::MIN / 2.0;
                }
            }
            Ok(Classifier::Svm(LinearSvm { weights }))
        }
        ClassifierKind::Qda => {
            let d = features[0].len();
            let n = labels.len() as f64;
            let mut stats = Vec::with_capacity(n_classes);
            for c in 0..n_classes {
                if counts[c] == 0 {
                    stats.push(QdaClassStats {
                        mean: vec![0.0; d],
                        covariance: identity_cov(d),
                        log_prior: f64::MIN / 2.0,
                    });
                    continue;
                }
                let rows: Vec<&Vec<f64>> = features
                    .iter()
                    .zip(labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(f, _)| f)
                    .collect();
                let nc = rows.len() as f64;
                let mean: Vec<f64> = (0..d)
                    .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nc)
                    .collect();
                let mut cov = vec![vec![0.0; d]; d];
                for r in &rows {
                    for i in 0..d {
                        let di = r[i] - mean[i];
                        for j in i..d {
                            cov[i][j] += di * (r[j] - mean[j]);
                        }
                    }
                }
                let denom = (nc - 1.0).max(1.0);
                let mut trace = 0.0;
                for i in 0..d {
                    for j in i..d {
                        cov[i][j] /= denom;
                        cov[j][i] = cov[i][j];
                    }
                    trace += cov[i][i];
                }
                let ridge = QDA_RIDGE * (trace / d as f64).max(1e-12);
                for i in 0..d {
                    cov[i][i] += ridge;
                }
                stats.push(QdaClassStats {
                    mean,
                    covariance: cov,
                    log_prior: (nc / n).ln(),
                });
            }
            let cached = qda_cache(&stats)?;
            Ok(Classifier::Qda(QdaModel {
                classes: stats,
                cached,
            }))
        }
    }
}

fn identity_cov(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

impl QdaModel {
    /// Rebuild the cached precision/determinant terms, e.g. after reading a
    /// model back from disk.
    pub fn from_stats(classes: Vec<QdaClassStats>) -> Result<QdaModel, MiError> {
        let cached = qda_cache(&classes)?;
        Ok(QdaModel { classes, cached })
    }
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Svm(_) => ClassifierKind::Svm,
            Classifier::Qda(_) => ClassifierKind::Qda,
        }
    }

    /// Per-class decision scores: SVM margins or Gaussian log-posteriors.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Classifier::Svm(m) => m
                .weights
                .iter()
                .map(|w| {
                    let mut s = w[w.len() - 1];
                    for (j, v) in x.iter().enumerate() {
                        s += w[j] * v;
                    }
                    s
                })
                .collect(),
            Classifier::Qda(m) => m
                .classes
                .iter()
                .zip(&m.cached)
                .map(|(s, (precision, log_det))| {
                    if s.log_prior <= f64::MIN / 4.0 {
                        return f64::MIN / 2.0;
                    }
                    let d = s.mean.len();
                    let delta = DVector::from_fn(d, |i, _| x[i] - s.mean[i]);
                    let mahal = (precision * &delta).dot(&delta);
                    -0.5 * log_det - 0.5 * mahal + s.log_prior
                })
                .collect(),
        }
    }

    /// Argmax class (ties toward the lowest index) plus the score vector.
    pub fn predict(&self, x: &[f64]) -> (usize, Vec<f64>) {
        let scores = self.scores(x);
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        (best, scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn accuracy(model: &Classifier, x: &[Vec<f64>], y: &[usize]) -> f64 {
        let hits = x
            .iter()
            .zip(y)
            .filter(|(xi, &yi)| model.predict(xi).0 == yi)
            .count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn separable_blobs_reach_perfect_training_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..60 {
            let c = i % 2;
            let center = if c == 0 { -3.0 } else { 3.0 };
            x.push(vec![
                center + rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            ]);
            y.push(c);
        }
        let m = classifier_fit(&x, &y, 2, ClassifierKind::Svm).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    /// Brute-force oracle: no line (any direction, any offset) classifies a
    /// balanced XOR layout above 3/4.
    fn best_linear_accuracy_xor(x: &[Vec<f64>], y: &[usize]) -> f64 {
        let mut best = 0.0f64;
        for k in 0..360 {
            let theta = k as f64 * std::f64::consts::PI / 180.0;
            let (wx, wy) = (theta.cos(), theta.sin());
            let mut projs: Vec<f64> = x.iter().map(|p| wx * p[0] + wy * p[1]).collect();
            projs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for b in projs.windows(2).map(|w| 0.5 * (w[0] + w[1])) {
                let acc = x
                    .iter()
                    .zip(y)
                    .filter(|(p, &yi)| ((wx * p[0] + wy * p[1] > b) as usize) == yi)
                    .count() as f64
                    / y.len() as f64;
                best = best.max(acc.max(1.0 - acc));
            }
        }
        best
    }

    #[test]
    fn xor_layout_caps_linear_accuracy_at_three_quarters() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let corners = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (i, &(cx, cy)) in corners.iter().enumerate() {
            for _ in 0..25 {
                x.push(vec![
                    cx + rng.gen_range(-0.05..0.05),
                    cy + rng.gen_range(-0.05..0.05),
                ]);
                y.push(if i < 2 { 0 } else { 1 });
            }
        }
        let cap = best_linear_accuracy_xor(&x, &y);
        assert!(cap <= 0.75 + 1e-9, "oracle cap {cap}");
        let m = classifier_fit(&x, &y, 2, ClassifierKind::Svm).unwrap();
        assert!(accuracy(&m, &x, &y) <= 0.75 + 1e-9);
    }

    #[test]
    fn qda_tracks_the_analytic_bayes_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let norm: StandardNormal = StandardNormal;
        // class 0: sigma = diag(1, 0.2); class 1: sigma = diag(0.2, 1); same mean
        let gen = |rng: &mut ChaCha8Rng, c: usize| -> Vec<f64> {
            let (s0, s1): (f64, f64) = if c == 0 { (1.0, 0.2) } else { (0.2, 1.0) };
            vec![
                s0.sqrt() * Distribution::<f64>::sample(&norm, rng),
                s1.sqrt() * Distribution::<f64>::sample(&norm, rng),
            ]
        };
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..2000 {
            let c = i % 2;
            x.push(gen(&mut rng, c));
            y.push(c);
        }
        let m = classifier_fit(&x, &y, 2, ClassifierKind::Qda).unwrap();

        // analytic Bayes rule from the true generative parameters
        let bayes = |p: &Vec<f64>| -> usize {
            let ll = |s0: f64, s1: f64| {
                -0.5 * ((s0.ln() + s1.ln()) + p[0] * p[0] / s0 + p[1] * p[1] / s1)
            };
            if ll(1.0, 0.2) >= ll(0.2, 1.0) {
                0
            } else {
                1
            }
        };
        let mut xt = Vec::new();
        let mut yt = Vec::new();
        for i in 0..2000 {
            let c = i % 2;
            xt.push(gen(&mut rng, c));
            yt.push(c);
        }
        let bayes_acc = xt
            .iter()
            .zip(&yt)
            .filter(|(p, &yi)| bayes(p) == yi)
            .count() as f64
            / yt.len() as f64;
        let qda_acc = accuracy(&m, &xt, &yt);
        assert!(
            (qda_acc - bayes_acc).abs() <= 0.03,
            "qda {qda_acc} vs bayes {bayes_acc}"
        );
    }

    #[test]
    fn degenerate_classes_are_rejected() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(
            classifier_fit(&x, &[0, 0, 1], 2, ClassifierKind::Svm),
            Err(MiError::DegenerateClass(_))
        ));
        assert!(matches!(
            classifier_fit(&x, &[0, 0, 0], 2, ClassifierKind::Qda),
            Err(MiError::DegenerateClass(_))
        ));
    }

    #[test]
    fn fitting_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let y: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let a = classifier_fit(&x, &y, 4, ClassifierKind::Svm).unwrap();
        let b = classifier_fit(&x, &y, 4, ClassifierKind::Svm).unwrap();
        assert_eq!(a, b);
    }
}
