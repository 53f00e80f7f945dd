//! Common spatial patterns: trace-normalized covariance estimation and the
//! one-vs-rest generalized eigensolve, per band of the filter bank.

use nalgebra::DMatrix;

use super::{FilterBank, MiError, SpatialFilterSet};
use crate::signal::{apply_filter_zero_phase, design_filter, EegSegment, FilterSpec};

const COV_RIDGE: f64 = 1e-6;

/// Trace-normalized sample covariance of one trial (channels x channels).
pub fn normalized_covariance(trial: &EegSegment) -> Result<DMatrix<f64>, MiError> {
    let c = trial.n_channels();
    let n = trial.n_samples();
    let mut cov = DMatrix::zeros(c, c);
    let means: Vec<f64> = (0..c)
        .map(|i| trial.channel(i).iter().sum::<f64>() / n as f64)
        .collect();
    for i in 0..c {
        for j in i..c {
            let mut acc = 0.0;
            let (xi, xj) = (trial.channel(i), trial.channel(j));
            for k in 0..n {
                acc += (xi[k] - means[i]) * (xj[k] - means[j]);
            }
            cov[(i, j)] = acc / n as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let tr = cov.trace();
    if !(tr > 0.0) {
        return Err(MiError::SingularCovariance(
            "trial covariance has zero trace".into(),
        ));
    }
    Ok(cov / tr)
}

fn add_ridge(cov: &mut DMatrix<f64>) {
    let n = cov.nrows();
    let ridge = COV_RIDGE * cov.trace() / n as f64;
    for i in 0..n {
        cov[(i, i)] += ridge;
    }
}

/// Solve the generalized eigenproblem (sigma_class, composite) for every
/// class from per-class mean covariances; the composite is the sum over all
/// classes. Returns per-class `2m x n_channels` projections (m top + m bottom
/// eigenvectors, ordered by descending eigenvalue).
pub fn csp_from_covariances(
    class_covs: &[DMatrix<f64>],
    m_pairs: usize,
) -> Result<Vec<DMatrix<f64>>, MiError> {
    let n = class_covs[0].nrows();
    if 2 * m_pairs > n {
        return Err(MiError::ShapeMismatch(format!(
            "2m = {} filters exceed {n} channels",
            2 * m_pairs
        )));
    }
    let mut composite = DMatrix::zeros(n, n);
    for c in class_covs {
        composite += c;
    }
    add_ridge(&mut composite);

    // Whiten the composite, then diagonalize each whitened class covariance.
    let eig = nalgebra::SymmetricEigen::new(composite);
    let max_ev = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if !(max_ev > 0.0) {
        return Err(MiError::SingularCovariance(
            "composite covariance has no positive spectrum".into(),
        ));
    }
    let mut d = DMatrix::zeros(n, n);
    for (i, ev) in eig.eigenvalues.iter().enumerate() {
        if *ev <= max_ev * 1e-12 {
            return Err(MiError::SingularCovariance(
                "composite covariance singular beyond the regularization floor".into(),
            ));
        }
        d[(i, i)] = 1.0 / ev.sqrt();
    }
    let whitener = d * eig.eigenvectors.transpose(); // W such that W B W^T = I

    let mut out = Vec::with_capacity(class_covs.len());
    for cov in class_covs {
        let s = &whitener * cov * whitener.transpose();
        let s = (&s + s.transpose()) * 0.5;
        let eig = nalgebra::SymmetricEigen::new(s);
        // order eigenvectors by descending eigenvalue
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let mut rows = DMatrix::zeros(2 * m_pairs, n);
        for (r, &oi) in order
            .iter()
            .take(m_pairs)
            .chain(order.iter().rev().take(m_pairs).rev())
            .enumerate()
        {
            // eigenvector in whitened space, mapped back: w = v^T W
            let v = eig.eigenvectors.column(oi);
            let w = v.transpose() * &whitener;
            for j in 0..n {
                rows[(r, j)] = w[(0, j)];
            }
        }
        out.push(rows);
    }
    Ok(out)
}

/// Fit one-vs-rest CSP filters for one (already band-filtered) set of trials.
///
/// `trials_by_class[c]` holds the trials of class `c`; every class needs at
/// least two. Covariances are trace-normalized per trial and averaged.
pub fn csp_fit(
    trials_by_class: &[Vec<EegSegment>],
    m_pairs: usize,
) -> Result<Vec<DMatrix<f64>>, MiError> {
    for (c, trials) in trials_by_class.iter().enumerate() {
        if trials.len() < 2 {
            return Err(MiError::InsufficientTrials {
                class: c,
                need: 2,
                got: trials.len(),
            });
        }
    }
    let mut class_covs = Vec::with_capacity(trials_by_class.len());
    for trials in trials_by_class {
        let n = trials[0].n_channels();
        let mut mean = DMatrix::zeros(n, n);
        for t in trials {
            if t.n_channels() != n {
                return Err(MiError::ShapeMismatch(
                    "trials differ in channel count".into(),
                ));
            }
            mean += normalized_covariance(t)?;
        }
        class_covs.push(mean / trials.len() as f64);
    }
    csp_from_covariances(&class_covs, m_pairs)
}

/// Band-filter every trial with each bank band (zero phase).
///
/// Returns `[trial][band]` so calibration can reuse the filtered trials for
/// both CSP fitting and feature extraction.
pub fn band_filter_trials(
    trials: &[EegSegment],
    bank: &FilterBank,
) -> Result<Vec<Vec<EegSegment>>, MiError> {
    bank.validate()?;
    let fs = trials
        .first()
        .map(|t| t.fs())
        .ok_or_else(|| MiError::ShapeMismatch("no trials".into()))?;
    let coeffs: Vec<_> = bank
        .bands
        .iter()
        .map(|&(f_lo, f_hi)| {
            design_filter(&FilterSpec::BandPass {
                f_lo,
                f_hi,
                order: 4,
                fs,
            })
        })
        .collect::<Result<_, _>>()?;
    trials
        .iter()
        .map(|t| {
            coeffs
                .iter()
                .map(|c| apply_filter_zero_phase(t, c).map_err(MiError::from))
                .collect()
        })
        .collect()
}

/// Fit the full per-(band, class) filter set from labeled trials.
///
/// `banded[i][b]` must hold trial `i` filtered with band `b` (see
/// [`band_filter_trials`]); `labels[i]` gives its class index.
pub fn fit_spatial_filters(
    banded: &[Vec<EegSegment>],
    labels: &[usize],
    bank: &FilterBank,
    n_classes: usize,
    m_pairs: usize,
) -> Result<SpatialFilterSet, MiError> {
    if banded.len() != labels.len() {
        return Err(MiError::ShapeMismatch(
            "label count differs from trial count".into(),
        ));
    }
    let n_channels = banded[0][0].n_channels();
    let mut projections = Vec::with_capacity(bank.bands.len());
    for b in 0..bank.bands.len() {
        let mut by_class: Vec<Vec<EegSegment>> = vec![Vec::new(); n_classes];
        for (i, &label) in labels.iter().enumerate() {
            by_class[label].push(banded[i][b].clone());
        }
        projections.push(csp_fit(&by_class, m_pairs)?);
    }
    Ok(SpatialFilterSet {
        n_channels,
        m_pairs,
        n_classes,
        projections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{ChannelLayout, Region};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::sync::Arc;

    fn layout2() -> Arc<ChannelLayout> {
        Arc::new(
            ChannelLayout::new(vec![
                ("a".to_string(), Region::Other),
                ("b".to_string(), Region::Other),
            ])
            .unwrap(),
        )
    }

    /// Gaussian trial with diagonal covariance diag(v0, v1).
    fn diag_trial(rng: &mut ChaCha8Rng, v0: f64, v1: f64, n: usize) -> EegSegment {
        let norm: StandardNormal = StandardNormal;
        let row0: Vec<f64> = (0..n).map(|_| v0.sqrt() * Distribution::<f64>::sample(&norm, rng)).collect();
        let row1: Vec<f64> = (0..n).map(|_| v1.sqrt() * Distribution::<f64>::sample(&norm, rng)).collect();
        EegSegment::new(vec![row0, row1], 250.0, layout2(), 0.0).unwrap()
    }

    /// Closed-form 2x2 generalized eigensolve oracle for (A, A+B) with
    /// diagonal matrices: eigenvalues a_i/(a_i+b_i) along the axes.
    #[test]
    fn analytic_covariances_recover_axis_aligned_filters() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0]));
        let filters = csp_from_covariances(&[a, b], 1).unwrap();
        // class A: lambda_1 = 4/5 (axis 0), lambda_2 = 1/5 (axis 1)
        let lead = filters[0].row(0);
        let norm = (lead[0] * lead[0] + lead[1] * lead[1]).sqrt();
        let cos = lead[0].abs() / norm;
        assert!(cos >= 0.99, "leading filter cosine with e1 = {cos}");
        // trailing filter aligns with axis 1
        let tail = filters[0].row(1);
        let norm = (tail[0] * tail[0] + tail[1] * tail[1]).sqrt();
        assert!(tail[1].abs() / norm >= 0.99);
    }

    #[test]
    fn sampled_trials_match_analytic_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a: Vec<EegSegment> = (0..40).map(|_| diag_trial(&mut rng, 4.0, 1.0, 500)).collect();
        let b: Vec<EegSegment> = (0..40).map(|_| diag_trial(&mut rng, 1.0, 4.0, 500)).collect();
        let filters = csp_fit(&[a, b], 1).unwrap();
        let lead = filters[0].row(0);
        let norm = (lead[0] * lead[0] + lead[1] * lead[1]).sqrt();
        assert!(lead[0].abs() / norm >= 0.99);
    }

    #[test]
    fn identical_class_covariances_give_uniform_eigenvalues() {
        // With K identical covariances, every generalized eigenvalue is 1/K:
        // project and verify W sigma W^T = (1/K) W composite W^T = (1/K) I.
        let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]));
        let covs = vec![cov.clone(), cov.clone(), cov.clone(), cov.clone()];
        let filters = csp_from_covariances(&covs, 1).unwrap();
        for f in &filters {
            let proj = f * &cov * f.transpose();
            for i in 0..proj.nrows() {
                assert!((proj[(i, i)] - 0.25).abs() < 1e-6, "eigenvalue {}", proj[(i, i)]);
            }
        }
    }

    #[test]
    fn projected_composite_covariance_is_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a: Vec<EegSegment> = (0..30).map(|_| diag_trial(&mut rng, 4.0, 1.0, 400)).collect();
        let b: Vec<EegSegment> = (0..30).map(|_| diag_trial(&mut rng, 1.0, 4.0, 400)).collect();
        // mean normalized covariances, as used by the fit
        let mean_cov = |trials: &[EegSegment]| {
            let mut m = DMatrix::zeros(2, 2);
            for t in trials {
                m += normalized_covariance(t).unwrap();
            }
            m / trials.len() as f64
        };
        let (ca, cb) = (mean_cov(&a), mean_cov(&b));
        let filters = csp_fit(&[a, b], 1).unwrap();
        let composite = &ca + &cb;
        for f in &filters {
            let proj = f * &composite * f.transpose();
            let mut off = 0.0;
            let mut diag = 0.0;
            for i in 0..proj.nrows() {
                for j in 0..proj.ncols() {
                    if i == j {
                        diag += proj[(i, j)].abs();
                    } else {
                        off += proj[(i, j)].abs();
                    }
                }
            }
            assert!(off < 1e-6 * diag, "off-diagonal mass {off} vs diagonal {diag}");
        }
    }

    #[test]
    fn too_few_trials_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = vec![diag_trial(&mut rng, 4.0, 1.0, 100)];
        let b: Vec<EegSegment> = (0..3).map(|_| diag_trial(&mut rng, 1.0, 4.0, 100)).collect();
        assert!(matches!(
            csp_fit(&[a, b], 1),
            Err(MiError::InsufficientTrials { class: 0, .. })
        ));
    }
}
