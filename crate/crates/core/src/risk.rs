//! Monte Carlo risk estimation under squared error loss, plus the
//! unbiased risk-difference statistic available when the scale is
//! estimated from a residual vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorSpec;
use crate::field::VectorField;
use crate::model::{ModelSpec, SampleBatch};
use crate::reduce::{mean_se, pairwise_channels, MeanSe};

/// Fraction of rows a run may skip before the estimate is rejected.
pub const MAX_SKIP_FRACTION: f64 = 1e-4;

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ai, bi)| (ai - bi) * (ai - bi))
        .sum()
}

pub(crate) fn check_skip_budget(skipped: u64, n: u64) -> Result<()> {
    if (skipped as f64) > MAX_SKIP_FRACTION * (n as f64) {
        return Err(Error::InvalidMonteCarlo(format!(
            "skipped {skipped} of {n} replicates, more than the {MAX_SKIP_FRACTION} budget"
        )));
    }
    Ok(())
}

/// Mean squared error loss of one estimator at one parameter point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean_loss: f64,
    pub std_error: f64,
    pub n: u64,
    pub skipped: u64,
    pub seed: u64,
    pub model: ModelSpec,
    pub estimator: EstimatorSpec,
}

/// Paired comparison of two estimators on common random numbers. The
/// difference is arm A minus arm B, so negative means A is better.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RiskDifferenceReport {
    pub mean_difference: f64,
    pub std_error: f64,
    pub arm_a: RiskEstimate,
    pub arm_b: RiskEstimate,
    pub crn: bool,
    pub n: u64,
    pub skipped: u64,
    pub seed: u64,
}

fn validate_pair(model: &ModelSpec, estimator: &EstimatorSpec) -> Result<()> {
    model.validate()?;
    estimator.validate(model.p, model.k)
}

/// Estimates E ||delta(X, U) - theta||^2 over `n` replicates.
///
/// Rows where the estimator is undefined (for example a shrinkage rule
/// evaluated at x = 0 with no limiting value) are skipped and counted;
/// the run fails if they exceed [`MAX_SKIP_FRACTION`] of `n`.
pub fn mc_risk(
    model: &ModelSpec,
    estimator: &EstimatorSpec,
    n: u64,
    seed: u64,
) -> Result<RiskEstimate> {
    validate_pair(model, estimator)?;
    let sums = pairwise_channels::<2, _>(n, &|i| {
        let (x, u) = model.draw_row(seed, i);
        let est = estimator.estimate(&x, Some(&u)).ok()?;
        let loss = squared_distance(&est.value, &model.theta);
        Some([loss, loss * loss])
    });
    check_skip_budget(sums.skipped, n)?;
    let MeanSe { mean, se, .. } = mean_se(sums.sums[0], sums.sums[1], sums.included);
    Ok(RiskEstimate {
        mean_loss: mean,
        std_error: se,
        n,
        skipped: sums.skipped,
        seed,
        model: model.clone(),
        estimator: estimator.clone(),
    })
}

/// Paired risk difference on shared draws. Because both arms see the
/// same replicates, comparing an estimator against itself yields a
/// difference of exactly zero with zero standard error, and the paired
/// standard error for genuinely different arms is typically far smaller
/// than the two marginal errors combined.
pub fn mc_risk_difference(
    model: &ModelSpec,
    est_a: &EstimatorSpec,
    est_b: &EstimatorSpec,
    n: u64,
    seed: u64,
) -> Result<RiskDifferenceReport> {
    validate_pair(model, est_a)?;
    est_b.validate(model.p, model.k)?;
    let sums = pairwise_channels::<6, _>(n, &|i| {
        let (x, u) = model.draw_row(seed, i);
        let a = est_a.estimate(&x, Some(&u)).ok()?;
        let b = est_b.estimate(&x, Some(&u)).ok()?;
        let la = squared_distance(&a.value, &model.theta);
        let lb = squared_distance(&b.value, &model.theta);
        let d = la - lb;
        Some([la, la * la, lb, lb * lb, d, d * d])
    });
    check_skip_budget(sums.skipped, n)?;
    let diff = mean_se(sums.sums[4], sums.sums[5], sums.included);
    let arm = |off: usize, est: &EstimatorSpec| {
        let m = mean_se(sums.sums[off], sums.sums[off + 1], sums.included);
        RiskEstimate {
            mean_loss: m.mean,
            std_error: m.se,
            n,
            skipped: sums.skipped,
            seed,
            model: model.clone(),
            estimator: est.clone(),
        }
    };
    Ok(RiskDifferenceReport {
        mean_difference: diff.mean,
        std_error: diff.se,
        arm_a: arm(0, est_a),
        arm_b: arm(2, est_b),
        crn: true,
        n,
        skipped: sums.skipped,
        seed,
    })
}

/// Exact risk of the linear rule (1 - a) x under a spherical law with
/// finite per-coordinate variance sigma^2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearRisk {
    pub risk: f64,
    pub optimal_a: f64,
}

/// R(a) = p (1 - a)^2 sigma^2 + a^2 ||theta||^2, minimized at
/// a* = p sigma^2 / (p sigma^2 + ||theta||^2). The optimum depends on
/// the unknown ||theta||, which is what adaptive shrinkage rules try to
/// approximate from the data.
pub fn linear_risk_closed_form(
    p: usize,
    sigma: f64,
    a: f64,
    theta_norm_sq: f64,
) -> Result<LinearRisk> {
    if p == 0 {
        return Err(Error::ParameterDomain("p must be positive".into()));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "sigma must be finite and positive, got {sigma}"
        )));
    }
    if !(theta_norm_sq >= 0.0) {
        return Err(Error::ParameterDomain(format!(
            "||theta||^2 must be nonnegative, got {theta_norm_sq}"
        )));
    }
    let pv = p as f64 * sigma * sigma;
    Ok(LinearRisk {
        risk: pv * (1.0 - a) * (1.0 - a) + a * a * theta_norm_sq,
        optimal_a: pv / (pv + theta_norm_sq),
    })
}

/// Sample estimate of the risk gap between x + g(X) and x itself, built
/// from the residual length alone:
///
///   mean of ||u||^4 / (k + 2)^2 * ( ||g(x)||^2 + 2 div g(x) )
///
/// Its expectation equals the risk difference for every spherical
/// generator, so the statistic needs no knowledge of the sampling law
/// beyond the batch itself. Only fields that ignore u qualify; the
/// cross-moments that make the identity work break otherwise.
pub fn unbiased_risk_difference(batch: &SampleBatch, field: &VectorField) -> Result<MeanSe> {
    if batch.k < 1 {
        return Err(Error::MissingResidual(
            "unbiased risk difference needs a residual vector (k >= 1)".into(),
        ));
    }
    if field.u_dependent() {
        return Err(Error::ParameterDomain(
            "unbiased risk difference is only valid for fields that ignore u".into(),
        ));
    }
    let scale = 1.0 / ((batch.k + 2) as f64);
    let sums = pairwise_channels::<2, _>(batch.n as u64, &|i| {
        let x = batch.row_x(i as usize);
        let usq: f64 = batch.row_u(i as usize).iter().map(|v| v * v).sum();
        let gsq = field.norm_sq_g(x, None).ok()?;
        let div = field.divergence_x(x, None).ok()?;
        let val = usq * usq * scale * scale * (gsq + 2.0 * div);
        Some([val, val * val])
    });
    check_skip_budget(sums.skipped, batch.n as u64)?;
    Ok(mean_se(sums.sums[0], sums.sums[1], sums.included))
}
