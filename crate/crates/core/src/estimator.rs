//! The shrinkage-estimator catalogue.
//!
//! Known-scale estimators have the form X + sigma^2 g(X); unknown-scale
//! estimators replace sigma^2 with the residual-based factor ||U||^2/(k+2),
//! whose multiplier is the one that makes the James-Stein constant a = p - 2
//! optimal simultaneously for every spherically symmetric distribution.
//! Shrink functions of Baranchik estimators are evaluated at dimensionless
//! arguments (||x||^2/sigma^2 known scale, w = ||x||^2/||u||^2 unknown
//! scale), which makes the estimators scale equivariant.
//!
//! At x = 0 the shrink factor is singular; estimators return x unchanged
//! and set a flag instead of erroring, since the event has probability zero
//! under any continuous model.

use crate::bayes::BayesPriorSpec;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::model::{Family, ModelSpec};
use crate::reduce::{mean_se, pairwise_channels};
use crate::shrink::ShrinkFn;
use crate::vecops::{norm_sq, positive_part, scale};
use serde::{Deserialize, Serialize};

/// Result of applying an estimator at one data point.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub value: Vec<f64>,
    /// Set when the shrink factor was undefined (x = 0, or an empty
    /// positive part for the orthant estimator) and the point was passed
    /// through unshrunk.
    pub at_origin: bool,
}

impl Estimate {
    pub(crate) fn plain(value: Vec<f64>) -> Self {
        Estimate {
            value,
            at_origin: false,
        }
    }
}

/// Per-face shrink family for the orthant estimator; s is the number of
/// positive components of x and t = ||x_+||^2 the raw squared norm of the
/// projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OrthantFamily {
    /// r_s(t) = factor * (s - 2)_+ ; factor = 1 is the James-Stein default,
    /// factor in [0, 2] is the domination range, factor = 0 is the plain
    /// projection.
    ScaledJs { factor: f64 },
    /// r_s(t) = factor * (s - 2)_+ * t/(1 + t); smooth, same bound.
    RationalPerFace { factor: f64 },
}

impl OrthantFamily {
    pub fn validate(&self) -> Result<()> {
        let f = match self {
            OrthantFamily::ScaledJs { factor } | OrthantFamily::RationalPerFace { factor } => {
                *factor
            }
        };
        if f >= 0.0 {
            Ok(())
        } else {
            Err(Error::ParameterDomain(format!(
                "orthant shrink factor must be nonnegative, got {f}"
            )))
        }
    }

    pub fn r(&self, s: usize, t: f64) -> f64 {
        let splus = (s as f64 - 2.0).max(0.0);
        match self {
            OrthantFamily::ScaledJs { factor } => factor * splus,
            OrthantFamily::RationalPerFace { factor } => factor * splus * t / (1.0 + t),
        }
    }

    /// Whether every face satisfies the domination bound r_s <= 2(s-2)_+.
    pub fn within_domination_bound(&self) -> bool {
        match self {
            OrthantFamily::ScaledJs { factor } | OrthantFamily::RationalPerFace { factor } => {
                *factor <= 2.0
            }
        }
    }
}

/// Scale information for estimators that can run in either regime.
#[derive(Clone, Copy, Debug)]
pub enum ScaleArg<'a> {
    /// Known scale sigma.
    Sigma(f64),
    /// Residual vector U (unknown scale).
    Residual(&'a [f64]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EstimatorKind {
    /// delta(x) = x.
    Identity,
    /// (1 - a sigma^2/||x||^2) x.
    JsKnown { a: f64 },
    /// (1 - a sigma^2 r(||x||^2/sigma^2)/||x||^2) x.
    BaranchikKnown { a: f64, shrink: ShrinkFn },
    /// (1 - a ||u||^2 / ((k+2) ||x||^2)) x.
    JsUnknown { a: f64 },
    /// (1 - ||u||^2 r(w)/||x||^2) x with w = ||x||^2/||u||^2.
    BaranchikUnknown { shrink: ShrinkFn },
    /// (1 - c r_s(||x_+||^2)/||x_+||^2) x_+ on the first orthant; c is
    /// sigma^2 (known scale) or ||u||^2/(k+2).
    Orthant {
        family: OrthantFamily,
        #[serde(default)]
        known_scale: bool,
    },
    /// Generalized Bayes under the prior eta^{a_prior} ||theta||^{-b_prior}.
    GeneralizedBayes { a_prior: f64, b_prior: f64 },
}

/// A fully specified estimator. `sigma` is consulted only by the
/// known-scale variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    #[serde(flatten)]
    pub kind: EstimatorKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_sigma() -> f64 {
    1.0
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorSpec { kind, sigma: 1.0 }
    }

    pub fn with_sigma(kind: EstimatorKind, sigma: f64) -> Self {
        EstimatorSpec { kind, sigma }
    }

    pub fn requires_residual(&self) -> bool {
        match &self.kind {
            EstimatorKind::JsUnknown { .. }
            | EstimatorKind::BaranchikUnknown { .. }
            | EstimatorKind::GeneralizedBayes { .. } => true,
            EstimatorKind::Orthant { known_scale, .. } => !known_scale,
            _ => false,
        }
    }

    /// Validity for a model of dimensions (p, k).
    pub fn validate(&self, p: usize, k: usize) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "estimator sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.requires_residual() && k == 0 {
            return Err(Error::MissingResidual(format!(
                "estimator {:?} needs a residual vector but the model has k = 0",
                self.kind
            )));
        }
        match &self.kind {
            EstimatorKind::Identity => Ok(()),
            EstimatorKind::JsKnown { a } | EstimatorKind::JsUnknown { a } => {
                if *a >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(format!(
                        "shrink constant a must be nonnegative, got {a}"
                    )))
                }
            }
            EstimatorKind::BaranchikKnown { a, shrink } => {
                if *a < 0.0 {
                    return Err(Error::ParameterDomain(format!(
                        "shrink constant a must be nonnegative, got {a}"
                    )));
                }
                shrink.validate()
            }
            EstimatorKind::BaranchikUnknown { shrink } => shrink.validate(),
            EstimatorKind::Orthant { family, .. } => family.validate(),
            EstimatorKind::GeneralizedBayes { a_prior, b_prior } => {
                BayesPriorSpec::new(*a_prior, *b_prior, p, k).map(|_| ())
            }
        }
    }

    /// Applies the estimator. `u` may be None for known-scale variants.
    pub fn estimate(&self, x: &[f64], u: Option<&[f64]>) -> Result<Estimate> {
        let need_u = |u| need_residual(u, &self.kind);
        let s2 = self.sigma * self.sigma;
        match &self.kind {
            EstimatorKind::Identity => Ok(Estimate::plain(x.to_vec())),
            EstimatorKind::JsKnown { a } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Ok(Estimate {
                        value: x.to_vec(),
                        at_origin: true,
                    });
                }
                Ok(Estimate::plain(scale(x, 1.0 - a * s2 / t)))
            }
            EstimatorKind::BaranchikKnown { a, shrink } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Ok(Estimate {
                        value: x.to_vec(),
                        at_origin: true,
                    });
                }
                let r = shrink.r(t / s2);
                Ok(Estimate::plain(scale(x, 1.0 - a * s2 * r / t)))
            }
            EstimatorKind::JsUnknown { a } => {
                let u = need_u(u)?;
                js_unknown_scale(x, u, *a)
            }
            EstimatorKind::BaranchikUnknown { shrink } => {
                let u = need_u(u)?;
                baranchik_unknown_scale(x, u, shrink)
            }
            EstimatorKind::Orthant {
                family,
                known_scale,
            } => {
                if *known_scale {
                    orthant_estimate(x, ScaleArg::Sigma(self.sigma), family)
                } else {
                    orthant_estimate(x, ScaleArg::Residual(need_u(u)?), family)
                }
            }
            EstimatorKind::GeneralizedBayes { a_prior, b_prior } => {
                let u = need_u(u)?;
                let prior = BayesPriorSpec::new(*a_prior, *b_prior, x.len(), u.len())?;
                crate::bayes::generalized_bayes_estimate(&prior, x, u)
            }
        }
    }

    /// The vector field g with delta = X + sigma^2 g (known scale, sigma = 1
    /// nondimensionalized) or delta = X + (||U||^2/(k+2)) g (unknown scale).
    /// Used to run identity checks against an estimator's own field.
    pub fn vector_field(&self, k: usize) -> Result<VectorField> {
        match &self.kind {
            EstimatorKind::JsKnown { a } | EstimatorKind::JsUnknown { a } => {
                Ok(VectorField::js(*a))
            }
            EstimatorKind::BaranchikKnown { a, shrink } => {
                Ok(VectorField::baranchik(shrink.scaled(*a)))
            }
            EstimatorKind::BaranchikUnknown { shrink } => {
                Ok(VectorField::residual_baranchik(shrink.clone(), k))
            }
            EstimatorKind::Identity => Ok(VectorField::constant(vec![])),
            _ => Err(Error::ParameterDomain(format!(
                "no closed-form vector field for {:?}",
                self.kind
            ))),
        }
    }
}

fn need_residual<'a>(u: Option<&'a [f64]>, kind: &EstimatorKind) -> Result<&'a [f64]> {
    u.filter(|u| !u.is_empty()).ok_or_else(|| {
        Error::MissingResidual(format!("estimator {kind:?} needs a residual vector"))
    })
}

/// (1 - a ||u||^2 / ((k+2)||x||^2)) x. a = p - 2 is the uniformly optimal
/// choice across all spherically symmetric distributions.
pub fn js_unknown_scale(x: &[f64], u: &[f64], a: f64) -> Result<Estimate> {
    if u.is_empty() {
        return Err(Error::MissingResidual(
            "js_unknown_scale needs a nonempty residual".into(),
        ));
    }
    let t = norm_sq(x);
    if t == 0.0 {
        return Ok(Estimate {
            value: x.to_vec(),
            at_origin: true,
        });
    }
    let usq = norm_sq(u);
    let k = u.len() as f64;
    Ok(Estimate::plain(scale(x, 1.0 - a * usq / ((k + 2.0) * t))))
}

/// (1 - ||u||^2 r(w) / ||x||^2) x with w = ||x||^2/||u||^2.
pub fn baranchik_unknown_scale(x: &[f64], u: &[f64], shrink: &ShrinkFn) -> Result<Estimate> {
    if u.is_empty() {
        return Err(Error::MissingResidual(
            "baranchik_unknown_scale needs a nonempty residual".into(),
        ));
    }
    let t = norm_sq(x);
    if t == 0.0 {
        return Ok(Estimate {
            value: x.to_vec(),
            at_origin: true,
        });
    }
    let usq = norm_sq(u);
    if usq == 0.0 {
        // No residual signal: w = inf, shrink factor vanishes.
        return Ok(Estimate::plain(x.to_vec()));
    }
    let r = shrink.r(t / usq);
    Ok(Estimate::plain(scale(x, 1.0 - usq * r / t)))
}

/// Shrinkage toward the first orthant: project, then shrink the projection
/// by (1 - c r_s(||x_+||^2)/||x_+||^2) where s is the number of positive
/// components. No shrinkage for s <= 2 or a zero projection.
pub fn orthant_estimate(x: &[f64], scale_arg: ScaleArg, family: &OrthantFamily) -> Result<Estimate> {
    family.validate()?;
    let proj = positive_part(x);
    let s = x.iter().filter(|&&xi| xi > 0.0).count();
    let psq = norm_sq(&proj);
    if psq == 0.0 {
        return Ok(Estimate {
            value: proj,
            at_origin: true,
        });
    }
    if s <= 2 {
        return Ok(Estimate::plain(proj));
    }
    let c = match scale_arg {
        ScaleArg::Sigma(sigma) => {
            if !(sigma > 0.0) {
                return Err(Error::ParameterDomain(format!(
                    "sigma must be positive, got {sigma}"
                )));
            }
            sigma * sigma
        }
        ScaleArg::Residual(u) => {
            if u.is_empty() {
                return Err(Error::MissingResidual(
                    "orthant_estimate in unknown-scale mode needs a residual".into(),
                ));
            }
            norm_sq(u) / (u.len() as f64 + 2.0)
        }
    };
    let r = family.r(s, psq);
    Ok(Estimate::plain(scale(&proj, 1.0 - c * r / psq)))
}

/// The upper end of the minimax range for the constant in spherical
/// shrinkage: 1 / (p E_0[1/||X||^2]), with the expectation taken at
/// theta = 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimaxBound {
    pub value: f64,
    /// Standard error of `value` (delta method), when Monte Carlo was used.
    pub se: Option<f64>,
    /// The estimated (or exact) expectation E_0[1/||X||^2].
    pub expectation: f64,
    pub analytic: bool,
    pub p: usize,
}

/// Computes the bound analytically for the normal family and by Monte Carlo
/// otherwise. E_0[1/||X||^2] is infinite for p < 3.
pub fn minimax_a_bound(model: &ModelSpec, n: usize, seed: u64) -> Result<MinimaxBound> {
    model.validate()?;
    if model.p < 3 {
        return Err(Error::ParameterDomain(format!(
            "E[1/||X||^2] is infinite for p = {} < 3",
            model.p
        )));
    }
    match &model.family {
        Family::Normal => {
            let p = model.p as f64;
            let e = 1.0 / (model.sigma * model.sigma * (p - 2.0));
            Ok(MinimaxBound {
                value: 1.0 / (p * e),
                se: None,
                expectation: e,
                analytic: true,
                p: model.p,
            })
        }
        _ => minimax_a_bound_mc(model, n, seed),
    }
}

/// Monte Carlo path, usable for any family (the analytic/MC agreement test
/// forces it for the normal family too).
pub fn minimax_a_bound_mc(model: &ModelSpec, n: usize, seed: u64) -> Result<MinimaxBound> {
    model.validate()?;
    if model.p < 3 {
        return Err(Error::ParameterDomain(format!(
            "E[1/||X||^2] is infinite for p = {} < 3",
            model.p
        )));
    }
    if n < 2 {
        return Err(Error::ParameterDomain("need n >= 2 draws".into()));
    }
    // The expectation is at theta = 0 and does not involve the residual.
    let centered = ModelSpec {
        family: model.family.clone(),
        theta: vec![0.0; model.p],
        sigma: model.sigma,
        p: model.p,
        k: 0,
    };
    let acc = pairwise_channels::<2, _>(n as u64, &|i| {
        let (x, _) = centered.draw_row(seed, i);
        let inv = 1.0 / norm_sq(&x);
        Some([inv, inv * inv])
    });
    let ms = mean_se(acc.sums[0], acc.sums[1], acc.included);
    let p = model.p as f64;
    let value = 1.0 / (p * ms.mean);
    Ok(MinimaxBound {
        value,
        // Delta method: d/dE [1/(pE)] = -1/(p E^2).
        se: Some(ms.se / (p * ms.mean * ms.mean)),
        expectation: ms.mean,
        analytic: false,
        p: model.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Family;
    use crate::rng::replicate_stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn js_known_collapses_to_zero_at_the_stein_radius() {
        // a = p - 2, ||x||^2 = p - 2, sigma = 1: the factor vanishes.
        let est = EstimatorSpec::new(EstimatorKind::JsKnown { a: 2.0 });
        let x = vec![1.0, -1.0, 0.0, 0.0];
        let e = est.estimate(&x, None).unwrap();
        assert_eq!(e.value, vec![0.0; 4]);
        assert!(!e.at_origin);
    }

    #[test]
    fn js_unknown_frozen_examples() {
        // p = 5, a = 3, x = (2,0,0,0,0), k = 3, ||u||^2 = k + 2 = 5:
        // factor = 1 - a ||u||^2 / ((k+2) ||x||^2) = 1 - 3/4 = 1/4.
        let x = vec![2.0, 0.0, 0.0, 0.0, 0.0];
        let u = vec![2.0, 1.0, 0.0];
        assert_eq!(crate::vecops::norm_sq(&u), 5.0);
        let e = js_unknown_scale(&x, &u, 3.0).unwrap();
        assert_eq!(e.value, vec![0.5, 0.0, 0.0, 0.0, 0.0]);

        // ||u||^2 = 6, k = 4, ||x||^2 = 3, a = 3: factor = 1 - 3*6/(6*3) = 0.
        let x = vec![1.0, 1.0, 1.0, 0.0, 0.0];
        let u = vec![1.0, 1.0, 2.0, 0.0];
        assert_eq!(crate::vecops::norm_sq(&u), 6.0);
        let e = js_unknown_scale(&x, &u, 3.0).unwrap();
        assert_eq!(e.value, vec![0.0; 5]);
    }

    #[test]
    fn orthant_frozen_example() {
        // x = (1,1,1,1,-1,-2): s = 4, ||x_+||^2 = 4, default r = (s-2) = 2,
        // known scale sigma = 1 gives c r/||x_+||^2 = 1/2.
        let x = vec![1.0, 1.0, 1.0, 1.0, -1.0, -2.0];
        let fam = OrthantFamily::ScaledJs { factor: 1.0 };
        let e = orthant_estimate(&x, ScaleArg::Sigma(1.0), &fam).unwrap();
        assert_eq!(e.value, vec![0.5, 0.5, 0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn orthant_small_faces_pass_through() {
        let fam = OrthantFamily::ScaledJs { factor: 1.0 };
        // s = 2: projection returned untouched.
        let x = vec![3.0, 1.0, -0.5, -2.0];
        let e = orthant_estimate(&x, ScaleArg::Sigma(1.0), &fam).unwrap();
        assert_eq!(e.value, vec![3.0, 1.0, 0.0, 0.0]);
        assert!(!e.at_origin);
        // All-negative x: zero projection, flagged.
        let x = vec![-1.0, -2.0, -0.1, -4.0];
        let e = orthant_estimate(&x, ScaleArg::Sigma(1.0), &fam).unwrap();
        assert_eq!(e.value, vec![0.0; 4]);
        assert!(e.at_origin);
    }

    #[test]
    fn orthant_zero_family_is_plain_projection() {
        let fam = OrthantFamily::ScaledJs { factor: 0.0 };
        let x = vec![1.0, 2.0, 3.0, 4.0, -1.0];
        let e = orthant_estimate(&x, ScaleArg::Sigma(1.0), &fam).unwrap();
        assert_eq!(e.value, vec![1.0, 2.0, 3.0, 4.0, 0.0]);
    }

    #[test]
    fn baranchik_unknown_uses_w_ratio() {
        // r(w) = min(w/(k+2), 2(p-2)/(k+2)), p = 5, k = 3:
        // x = (2,0,0,0,1): t = 5; u = (1,1,0): usq = 2; w = 2.5;
        // r = min(0.5, 1.2) = 0.5; factor = 1 - 2*0.5/5 = 0.8.
        let shrink = ShrinkFn::SaturatingLinear {
            slope: 1.0 / 5.0,
            bound: 2.0 * 3.0 / 5.0,
        };
        let x = vec![2.0, 0.0, 0.0, 0.0, 1.0];
        let u = vec![1.0, 1.0, 0.0];
        let e = baranchik_unknown_scale(&x, &u, &shrink).unwrap();
        for (got, want) in e.value.iter().zip(&[1.6, 0.0, 0.0, 0.0, 0.8]) {
            assert_relative_eq!(got, want, epsilon = 1e-14);
        }
        // Zero residual: pass-through.
        let e = baranchik_unknown_scale(&x, &[0.0, 0.0], &shrink).unwrap();
        assert_eq!(e.value, x);
    }

    #[test]
    fn origin_is_flagged_not_an_error() {
        let est = EstimatorSpec::new(EstimatorKind::JsKnown { a: 2.0 });
        let e = est.estimate(&[0.0, 0.0, 0.0, 0.0], None).unwrap();
        assert!(e.at_origin);
        assert_eq!(e.value, vec![0.0; 4]);
    }

    #[test]
    fn missing_residual_is_an_error() {
        let est = EstimatorSpec::new(EstimatorKind::JsUnknown { a: 2.0 });
        assert!(matches!(
            est.estimate(&[1.0, 1.0, 1.0], None),
            Err(Error::MissingResidual(_))
        ));
        assert!(est.validate(3, 0).is_err());
        assert!(est.validate(3, 2).is_ok());
    }

    #[test]
    fn minimax_bound_normal_closed_forms() {
        let m4 = ModelSpec::new(Family::Normal, vec![0.0; 4], 1.0, 0);
        let b = minimax_a_bound(&m4, 10, 0).unwrap();
        assert!(b.analytic);
        assert_relative_eq!(b.value, 0.5, epsilon = 1e-15);
        let m6 = ModelSpec::new(Family::Normal, vec![0.0; 6], 1.0, 0);
        let b = minimax_a_bound(&m6, 10, 0).unwrap();
        assert_relative_eq!(b.value, 2.0 / 3.0, epsilon = 1e-15);
        // sigma scales the bound by sigma^2.
        let ms = ModelSpec::new(Family::Normal, vec![0.0; 6], 2.0, 0);
        let b = minimax_a_bound(&ms, 10, 0).unwrap();
        assert_relative_eq!(b.value, 8.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn minimax_bound_mc_agrees_with_analytic() {
        let m = ModelSpec::new(Family::Normal, vec![0.0; 4], 1.0, 0);
        let mc = minimax_a_bound_mc(&m, 200_000, 5).unwrap();
        let se = mc.se.unwrap();
        assert!(
            (mc.value - 0.5).abs() <= 3.0 * se,
            "mc {} vs 0.5, se {se}",
            mc.value
        );
    }

    #[test]
    fn minimax_bound_rejects_small_p() {
        let m = ModelSpec::new(Family::Normal, vec![0.0; 2], 1.0, 0);
        assert!(matches!(
            minimax_a_bound(&m, 10, 0),
            Err(Error::ParameterDomain(_))
        ));
    }

    fn householder(v: &[f64], x: &[f64]) -> Vec<f64> {
        // O x with O = I - 2 v v'/||v||^2 (orthogonal, det -1).
        let c = 2.0 * crate::vecops::dot(v, x) / crate::vecops::norm_sq(v);
        x.iter().zip(v).map(|(xi, vi)| xi - c * vi).collect()
    }

    proptest! {
        #[test]
        fn known_scale_equivariance(seed in 0u64..500, lambda in 0.1..10.0f64) {
            let mut rng = replicate_stream(seed, 1);
            let p = 4;
            let x = crate::rng::standard_normal_vec(&mut rng, p);
            prop_assume!(crate::vecops::norm_sq(&x) > 1e-6);
            let sigma = 0.5 + 2.0 * (seed % 7) as f64 / 7.0;
            for kind in [
                EstimatorKind::JsKnown { a: 1.7 },
                EstimatorKind::BaranchikKnown {
                    a: 1.3,
                    shrink: ShrinkFn::Rational { bound: 2.0 },
                },
            ] {
                let base = EstimatorSpec::with_sigma(kind.clone(), sigma);
                let scaled = EstimatorSpec::with_sigma(kind, lambda * sigma);
                let ex = base.estimate(&x, None).unwrap().value;
                let sx: Vec<f64> = x.iter().map(|xi| lambda * xi).collect();
                let esx = scaled.estimate(&sx, None).unwrap().value;
                for (a, b) in esx.iter().zip(&ex) {
                    prop_assert!((a - lambda * b).abs() <= 1e-10 * (1.0 + b.abs()),
                        "scale equivariance broken: {a} vs {}", lambda * b);
                }
            }
        }

        #[test]
        fn unknown_scale_joint_equivariance(seed in 0u64..500, lambda in 0.1..10.0f64) {
            let mut rng = replicate_stream(seed, 2);
            let x = crate::rng::standard_normal_vec(&mut rng, 5);
            let u = crate::rng::standard_normal_vec(&mut rng, 3);
            prop_assume!(crate::vecops::norm_sq(&x) > 1e-6);
            prop_assume!(crate::vecops::norm_sq(&u) > 1e-6);
            for est in [
                EstimatorSpec::new(EstimatorKind::JsUnknown { a: 3.0 }),
                EstimatorSpec::new(EstimatorKind::BaranchikUnknown {
                    shrink: ShrinkFn::Rational { bound: 1.2 },
                }),
            ] {
                let e = est.estimate(&x, Some(&u)).unwrap().value;
                let sx: Vec<f64> = x.iter().map(|v| lambda * v).collect();
                let su: Vec<f64> = u.iter().map(|v| lambda * v).collect();
                let es = est.estimate(&sx, Some(&su)).unwrap().value;
                for (a, b) in es.iter().zip(&e) {
                    prop_assert!((a - lambda * b).abs() <= 1e-10 * (1.0 + b.abs()));
                }
            }
        }

        #[test]
        fn rotation_equivariance(seed in 0u64..500) {
            let mut rng = replicate_stream(seed, 3);
            let p = 6;
            let x = crate::rng::standard_normal_vec(&mut rng, p);
            let v = crate::rng::standard_normal_vec(&mut rng, p);
            prop_assume!(crate::vecops::norm_sq(&x) > 1e-6);
            prop_assume!(crate::vecops::norm_sq(&v) > 1e-6);
            let u = crate::rng::standard_normal_vec(&mut rng, 2);
            for est in [
                EstimatorSpec::new(EstimatorKind::JsKnown { a: 2.0 }),
                EstimatorSpec::new(EstimatorKind::JsUnknown { a: 4.0 }),
                EstimatorSpec::new(EstimatorKind::BaranchikUnknown {
                    shrink: ShrinkFn::Rational { bound: 2.0 },
                }),
            ] {
                let d = est.estimate(&x, Some(&u)).unwrap().value;
                let ox = householder(&v, &x);
                let dox = est.estimate(&ox, Some(&u)).unwrap().value;
                let od = householder(&v, &d);
                for (a, b) in dox.iter().zip(&od) {
                    prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()),
                        "rotation equivariance broken");
                }
            }
        }
    }
}
