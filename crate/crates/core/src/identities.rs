//! Monte Carlo verification of the integration-by-parts identities that
//! drive every domination proof in the crate: the Gaussian cross-term
//! identity, its radial-law generalization, the sphere/ball average
//! identity, the unknown-scale residual identities, and the positive-part
//! sweep that exercises the orthant estimator against plain projection.
//!
//! Each check simulates both sides of an exact equality, so a correct
//! implementation fails a 3 standard error criterion only with the
//! probability of a three-sigma event, while a wrong divergence or a
//! wrong Q shows up as bias that no sample size can hide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{orthant_estimate, OrthantFamily, ScaleArg};
use crate::field::VectorField;
use crate::model::{Family, ModelSpec, RadialLaw};
use crate::reduce::{mean_se, pairwise_channels, ChannelSums};
use crate::rng::{replicate_stream, replicate_stream_alt, uniform_in_ball, uniform_on_sphere};
use crate::risk::{check_skip_budget, squared_distance};
use crate::vecops::norm_sq;

/// Two Monte Carlo averages that should estimate the same number.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub operation: String,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    pub difference: f64,
    pub std_error: f64,
    pub n: u64,
    pub skipped: u64,
    pub seed: u64,
    pub pass: bool,
}

impl DiscrepancyReport {
    /// Builds a report from [lhs, rhs, d, d^2] channel sums, where d is
    /// the per-replicate difference, so the standard error is the paired
    /// one and an identical-arms run comes out exactly zero.
    fn from_paired(
        operation: &str,
        sums: &ChannelSums<4>,
        n: u64,
        seed: u64,
    ) -> Result<DiscrepancyReport> {
        check_skip_budget(sums.skipped, n)?;
        let inc = sums.included as f64;
        let d = mean_se(sums.sums[2], sums.sums[3], sums.included);
        Ok(DiscrepancyReport {
            operation: operation.into(),
            lhs_mean: sums.sums[0] / inc,
            rhs_mean: sums.sums[1] / inc,
            difference: d.mean,
            std_error: d.se,
            n,
            skipped: sums.skipped,
            seed,
            pass: d.mean.abs() <= 3.0 * d.se,
        })
    }
}

fn residual_norm_sq(model: &ModelSpec, u: &[f64]) -> Option<f64> {
    if model.k > 0 {
        Some(norm_sq(u))
    } else {
        None
    }
}

/// The same simulation as the public check, with the divergence scaled
/// by an arbitrary factor. The factor-1 case is the identity; any other
/// factor is a deliberate corruption used to confirm the harness can
/// tell a true identity from a broken one.
fn stein_check_scaled(
    model: &ModelSpec,
    field: &VectorField,
    n: u64,
    seed: u64,
    div_scale: f64,
) -> Result<DiscrepancyReport> {
    if !matches!(model.family, Family::Normal) {
        return Err(Error::ParameterDomain(
            "the Gaussian cross-term identity requires a normal model".into(),
        ));
    }
    model.validate()?;
    let sigma2 = model.sigma * model.sigma;
    let sums = pairwise_channels::<4, _>(n, &|i| {
        let (x, u) = model.draw_row(seed, i);
        let usq = residual_norm_sq(model, &u);
        let g = field.eval(&x, usq).ok()?;
        let div = field.divergence_x(&x, usq).ok()?;
        let lhs = x
            .iter()
            .zip(&model.theta)
            .zip(&g)
            .map(|((xi, ti), gi)| (xi - ti) * gi)
            .sum::<f64>();
        let rhs = sigma2 * div * div_scale;
        let d = lhs - rhs;
        Some([lhs, rhs, d, d * d])
    });
    DiscrepancyReport::from_paired("stein_identity", &sums, n, seed)
}

/// E[(X - theta)' g(X)] = sigma^2 E[div g(X)] for a normal model.
pub fn stein_identity_check(
    model: &ModelSpec,
    field: &VectorField,
    n: u64,
    seed: u64,
) -> Result<DiscrepancyReport> {
    stein_check_scaled(model, field, n, seed, 1.0)
}

/// E[(X - theta)' g(X)] = E[Q(||X - theta||^2) div g(X)] for any model
/// with a computable radial Q. Requires k = 0 so that the sampled X
/// margin is the law Q belongs to; with a normal family Q is constant
/// sigma^2 and this reproduces the Gaussian check verbatim.
pub fn q_identity_check(
    model: &ModelSpec,
    field: &VectorField,
    n: u64,
    seed: u64,
) -> Result<DiscrepancyReport> {
    if model.k != 0 {
        return Err(Error::ParameterDomain(
            "the radial-Q identity addresses the X margin alone; use k = 0".into(),
        ));
    }
    model.validate()?;
    let radial = RadialLaw::new(model.family.clone(), model.sigma, model.p)?;
    let sums = pairwise_channels::<4, _>(n, &|i| {
        let (x, _) = model.draw_row(seed, i);
        let g = field.eval(&x, None).ok()?;
        let div = field.divergence_x(&x, None).ok()?;
        let t = squared_distance(&x, &model.theta);
        let q = radial.q(t).ok()?;
        let lhs = x
            .iter()
            .zip(&model.theta)
            .zip(&g)
            .map(|((xi, ti), gi)| (xi - ti) * gi)
            .sum::<f64>();
        let rhs = q * div;
        let d = lhs - rhs;
        Some([lhs, rhs, d, d * d])
    });
    DiscrepancyReport::from_paired("q_identity", &sums, n, seed)
}

/// E[(X - theta)' g(X)] over the sphere of radius `radius` about theta
/// equals (radius^2 / p) times the average divergence over the solid
/// ball. The two sides use independent streams, so the standard error
/// is the two arm errors combined, not a paired one.
pub fn sphere_ball_check(
    theta: &[f64],
    radius: f64,
    field: &VectorField,
    n: u64,
    seed: u64,
) -> Result<DiscrepancyReport> {
    if theta.is_empty() {
        return Err(Error::ParameterDomain("theta must be nonempty".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "radius must be finite and positive, got {radius}"
        )));
    }
    let p = theta.len();
    let factor = radius * radius / p as f64;
    let sums = pairwise_channels::<4, _>(n, &|i| {
        let mut sphere_rng = replicate_stream(seed, i);
        let x = uniform_on_sphere(&mut sphere_rng, theta, radius);
        let g = field.eval(&x, None).ok()?;
        let lhs = x
            .iter()
            .zip(theta)
            .zip(&g)
            .map(|((xi, ti), gi)| (xi - ti) * gi)
            .sum::<f64>();

        let mut ball_rng = replicate_stream_alt(seed, i);
        let w = uniform_in_ball(&mut ball_rng, theta, radius);
        let rhs = factor * field.divergence_x(&w, None).ok()?;
        Some([lhs, lhs * lhs, rhs, rhs * rhs])
    });
    check_skip_budget(sums.skipped, n)?;
    let lhs = mean_se(sums.sums[0], sums.sums[1], sums.included);
    let rhs = mean_se(sums.sums[2], sums.sums[3], sums.included);
    let se = lhs.se.hypot(rhs.se);
    let difference = lhs.mean - rhs.mean;
    Ok(DiscrepancyReport {
        operation: "sphere_ball".into(),
        lhs_mean: lhs.mean,
        rhs_mean: rhs.mean,
        difference,
        std_error: se,
        n,
        skipped: sums.skipped,
        seed,
        pass: difference.abs() <= 3.0 * se,
    })
}

/// The two residual identities behind unknown-scale domination, checked
/// together on shared draws.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnknownScaleReport {
    /// E[||U||^2 (X - theta)' g] vs E[||U||^2 div_x g Q(joint t)].
    pub cross_term: DiscrepancyReport,
    /// E[||U||^4 ||g||^2] vs E[Q ((k+2)||U||^2||g||^2 + 2||U||^4 d||g||^2/d||u||^2)].
    pub squared_norm: DiscrepancyReport,
    pub pass: bool,
}

/// Verifies both unknown-scale identities, with Q evaluated on the
/// joint radial law of (X - theta, U) at ||x - theta||^2 + ||u||^2.
pub fn unknown_scale_cross_term_check(
    model: &ModelSpec,
    field: &VectorField,
    n: u64,
    seed: u64,
) -> Result<UnknownScaleReport> {
    if model.k < 1 {
        return Err(Error::MissingResidual(
            "unknown-scale identities need a residual vector (k >= 1)".into(),
        ));
    }
    model.validate()?;
    let joint = model.joint_radial_law();
    let kf = (model.k + 2) as f64;
    let sums = pairwise_channels::<8, _>(n, &|i| {
        let (x, u) = model.draw_row(seed, i);
        let usq = norm_sq(&u);
        if usq == 0.0 {
            return None;
        }
        let g = field.eval(&x, Some(usq)).ok()?;
        let div = field.divergence_x(&x, Some(usq)).ok()?;
        let gsq = norm_sq(&g);
        let dgsq = field.d_dusq_norm_sq(&x, usq).ok()?;
        let t = squared_distance(&x, &model.theta);
        let q = joint.q(t + usq).ok()?;

        let cross = x
            .iter()
            .zip(&model.theta)
            .zip(&g)
            .map(|((xi, ti), gi)| (xi - ti) * gi)
            .sum::<f64>();
        let l1 = usq * cross;
        let r1 = usq * div * q;
        let d1 = l1 - r1;
        let l2 = usq * usq * gsq;
        let r2 = q * (kf * usq * gsq + 2.0 * usq * usq * dgsq);
        let d2 = l2 - r2;
        Some([l1, r1, d1, d1 * d1, l2, r2, d2, d2 * d2])
    });
    let split = |off: usize, name: &str| {
        let part = ChannelSums::<4> {
            sums: [
                sums.sums[off],
                sums.sums[off + 1],
                sums.sums[off + 2],
                sums.sums[off + 3],
            ],
            included: sums.included,
            skipped: sums.skipped,
        };
        DiscrepancyReport::from_paired(name, &part, n, seed)
    };
    let cross_term = split(0, "unknown_scale_cross_term")?;
    let squared_norm = split(4, "unknown_scale_squared_norm")?;
    let pass = cross_term.pass && squared_norm.pass;
    Ok(UnknownScaleReport {
        cross_term,
        squared_norm,
        pass,
    })
}

/// One grid point of the positive-orthant sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthantRow {
    pub theta: Vec<f64>,
    pub theta_norm: f64,
    pub mean_difference: f64,
    pub std_error: f64,
    pub risk_shrunk: f64,
    pub risk_projection: f64,
    /// Not significantly worse than plain projection at this point.
    pub pass: bool,
}

/// Paired comparison of the orthant shrinkage estimator against plain
/// coordinatewise projection over a grid of nonnegative means.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrthantSweepReport {
    pub family: OrthantFamily,
    pub n: u64,
    pub seed: u64,
    pub rows: Vec<OrthantRow>,
    pub pass: bool,
}

/// Runs the orthant estimator and plain projection on shared draws for
/// each theta in the grid. The scale channel follows the model: known
/// sigma when k = 0, the residual length otherwise. Every grid theta
/// must lie in the closed positive orthant; the model's own theta field
/// is ignored in favor of the grid.
pub fn orthant_domination_check(
    model: &ModelSpec,
    family: &OrthantFamily,
    n: u64,
    seed: u64,
    theta_grid: &[Vec<f64>],
) -> Result<OrthantSweepReport> {
    family.validate()?;
    if theta_grid.is_empty() {
        return Err(Error::ParameterDomain("theta grid is empty".into()));
    }
    let projection = OrthantFamily::ScaledJs { factor: 0.0 };
    let mut rows = Vec::with_capacity(theta_grid.len());
    for theta in theta_grid {
        if theta.len() != model.p {
            return Err(Error::DimensionMismatch(format!(
                "grid theta has dim {}, model has p = {}",
                theta.len(),
                model.p
            )));
        }
        if theta.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::ParameterDomain(
                "orthant sweep thetas must be componentwise nonnegative".into(),
            ));
        }
        let mut point = model.clone();
        point.theta = theta.clone();
        point.validate()?;
        let sums = pairwise_channels::<6, _>(n, &|i| {
            let (x, u) = point.draw_row(seed, i);
            let scale = if point.k == 0 {
                ScaleArg::Sigma(point.sigma)
            } else {
                ScaleArg::Residual(&u)
            };
            let shrunk = orthant_estimate(&x, scale, family).ok()?;
            let plain = orthant_estimate(&x, scale, &projection).ok()?;
            let la = squared_distance(&shrunk.value, theta);
            let lb = squared_distance(&plain.value, theta);
            let d = la - lb;
            Some([la, la * la, lb, lb * lb, d, d * d])
        });
        check_skip_budget(sums.skipped, n)?;
        let inc = sums.included as f64;
        let d = mean_se(sums.sums[4], sums.sums[5], sums.included);
        rows.push(OrthantRow {
            theta: theta.clone(),
            theta_norm: norm_sq(theta).sqrt(),
            mean_difference: d.mean,
            std_error: d.se,
            risk_shrunk: sums.sums[0] / inc,
            risk_projection: sums.sums[2] / inc,
            pass: d.mean <= 3.0 * d.se,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(OrthantSweepReport {
        family: family.clone(),
        n,
        seed,
        rows,
        pass,
    })
}

/// Ball average of h(x) = -1/||x||^2 scaled by the squared radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallAverageRow {
    pub radius: f64,
    pub value: f64,
    pub std_error: f64,
}

/// One consecutive step of the radius grid; pass means the value did
/// not increase by more than 3 paired standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallAverageStep {
    pub from_radius: f64,
    pub to_radius: f64,
    pub difference: f64,
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallAverageReport {
    pub theta: Vec<f64>,
    pub rows: Vec<BallAverageRow>,
    pub steps: Vec<BallAverageStep>,
    pub pass: bool,
}

/// Spot check that R^2 E[h(theta + R B)] is nonincreasing in R for
/// h(x) = -1/||x||^2, B uniform in the unit ball. This is the
/// superharmonic-average condition behind minimaxity of the
/// James-Stein class, checked on a coarse radius grid with common
/// random numbers so consecutive radii share every draw.
pub fn ball_average_monotonicity_check(
    theta: &[f64],
    radii: &[f64],
    n: u64,
    seed: u64,
) -> Result<BallAverageReport> {
    if theta.len() < 3 {
        return Err(Error::ParameterDomain(
            "the inverse-square average needs dimension at least 3".into(),
        ));
    }
    if radii.is_empty() {
        return Err(Error::ParameterDomain("radius grid is empty".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::ParameterDomain(
            "radii must be finite and positive".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ParameterDomain(
            "radii must be strictly increasing".into(),
        ));
    }

    let value_at = |b: &[f64], r: f64| -> Option<f64> {
        let t: f64 = theta
            .iter()
            .zip(b)
            .map(|(ti, bi)| {
                let xi = ti + r * bi;
                xi * xi
            })
            .sum();
        if t == 0.0 {
            return None;
        }
        Some(-(r * r) / t)
    };

    let mut rows: Vec<BallAverageRow> = Vec::with_capacity(radii.len());
    let mut steps = Vec::with_capacity(radii.len().saturating_sub(1));
    let origin = vec![0.0; theta.len()];
    if radii.len() == 1 {
        let r0 = radii[0];
        let sums = pairwise_channels::<2, _>(n, &|i| {
            let mut rng = replicate_stream(seed, i);
            let b = uniform_in_ball(&mut rng, &origin, 1.0);
            let v = value_at(&b, r0)?;
            Some([v, v * v])
        });
        check_skip_budget(sums.skipped, n)?;
        let m = mean_se(sums.sums[0], sums.sums[1], sums.included);
        rows.push(BallAverageRow {
            radius: r0,
            value: m.mean,
            std_error: m.se,
        });
    }
    for pair in radii.windows(2) {
        let (ra, rb) = (pair[0], pair[1]);
        let sums = pairwise_channels::<6, _>(n, &|i| {
            let mut rng = replicate_stream(seed, i);
            let b = uniform_in_ball(&mut rng, &origin, 1.0);
            let va = value_at(&b, ra)?;
            let vb = value_at(&b, rb)?;
            let d = vb - va;
            Some([va, va * va, vb, vb * vb, d, d * d])
        });
        check_skip_budget(sums.skipped, n)?;
        let a = mean_se(sums.sums[0], sums.sums[1], sums.included);
        let b = mean_se(sums.sums[2], sums.sums[3], sums.included);
        let d = mean_se(sums.sums[4], sums.sums[5], sums.included);
        if rows.is_empty() {
            rows.push(BallAverageRow {
                radius: ra,
                value: a.mean,
                std_error: a.se,
            });
        }
        rows.push(BallAverageRow {
            radius: rb,
            value: b.mean,
            std_error: b.se,
        });
        steps.push(BallAverageStep {
            from_radius: ra,
            to_radius: rb,
            difference: d.mean,
            std_error: d.se,
            pass: d.mean <= 3.0 * d.se,
        });
    }
    let pass = steps.iter().all(|s| s.pass);
    Ok(BallAverageReport {
        theta: theta.to_vec(),
        rows,
        steps,
        pass,
    })
}
