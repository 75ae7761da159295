//! Spherically symmetric location models and their radial functions.
//!
//! A model is a pair (X, U), X in R^p and U in R^k, with joint density
//! (1/sigma^{p+k}) f((||x - theta||^2 + ||u||^2)/sigma^2). Three generator
//! families are catalogued, all representable as variance mixtures of
//! normals: given a mixing variable V, (X, U) | V is Gaussian with
//! covariance V sigma^2 I. Normal fixes V = 1; student_t(df) takes V
//! inverse-gamma(df/2, df/2); scale_mixture takes V from an explicit
//! [`MixingLaw`].
//!
//! The radial functions attached to a generator in dimension d are
//!
//! * F(t) = (1/2) * integral of f(u) du over (t, inf), and
//! * Q(t) = F(t) / f(t),
//!
//! which appear in the integration-by-parts risk identities. For variance
//! mixtures Q(t) equals sigma^2 times the posterior mean of V given squared
//! radius t, so Q is nondecreasing and Q(0) is the lower bound used by the
//! domination conditions.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre_256;
use crate::rng::replicate_stream;
use crate::special::ln_gamma;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// One atom of a finite scale-mixing law: variance `v` with weight `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub v: f64,
    pub w: f64,
}

/// Distribution of the variance multiplier V in a scale mixture of normals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MixingLaw {
    /// Finite support; weights need not be pre-normalized.
    Atoms { atoms: Vec<Atom> },
    /// Density proportional to v^{-shape-1} exp(-scale/v).
    InverseGamma { shape: f64, scale: f64 },
    /// ln V normal with the given location and spread.
    LogNormal { mu: f64, sigma: f64 },
}

impl MixingLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixingLaw::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::ParameterDomain("mixing law has no atoms".into()));
                }
                if atoms.iter().any(|a| !(a.v > 0.0) || !(a.w > 0.0)) {
                    return Err(Error::ParameterDomain(
                        "mixture atoms need positive variance and weight".into(),
                    ));
                }
                Ok(())
            }
            MixingLaw::InverseGamma { shape, scale } => {
                if *shape > 0.0 && *scale > 0.0 {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(
                        "inverse-gamma mixing needs positive shape and scale".into(),
                    ))
                }
            }
            MixingLaw::LogNormal { sigma, .. } => {
                if *sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(
                        "log-normal mixing needs positive sigma".into(),
                    ))
                }
            }
        }
    }

    /// E[V^s], when it exists.
    pub fn moment(&self, s: f64) -> Result<f64> {
        match self {
            MixingLaw::Atoms { atoms } => {
                let wsum: f64 = atoms.iter().map(|a| a.w).sum();
                Ok(atoms.iter().map(|a| a.w * a.v.powf(s)).sum::<f64>() / wsum)
            }
            MixingLaw::InverseGamma { shape, scale } => {
                if s >= *shape {
                    return Err(Error::ParameterDomain(format!(
                        "E[V^{s}] diverges for inverse-gamma shape {shape}"
                    )));
                }
                Ok((s * scale.ln() + ln_gamma(shape - s) - ln_gamma(*shape)).exp())
            }
            MixingLaw::LogNormal { mu, sigma } => Ok((s * mu + 0.5 * s * s * sigma * sigma).exp()),
        }
    }

    /// E[V | squared radius t] for a unit-scale mixture observed in
    /// dimension `dim`: the mean of V under the density proportional to
    /// v^{-dim/2} exp(-t/(2v)) g(v).
    pub fn posterior_mean_v(&self, dim: usize, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::ParameterDomain(format!(
                "squared radius must be nonnegative, got {t}"
            )));
        }
        let d = dim as f64;
        match self {
            MixingLaw::Atoms { atoms } => {
                // Work in logs: l_i = ln w_i - (d/2) ln v_i - t/(2 v_i).
                let logs: Vec<f64> = atoms
                    .iter()
                    .map(|a| a.w.ln() - 0.5 * d * a.v.ln() - t / (2.0 * a.v))
                    .collect();
                let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !m.is_finite() {
                    return Err(Error::DegenerateDensity(format!(
                        "all mixture atoms underflow at t = {t}"
                    )));
                }
                let mut num = 0.0;
                let mut den = 0.0;
                for (a, l) in atoms.iter().zip(&logs) {
                    let e = (l - m).exp();
                    num += a.v * e;
                    den += e;
                }
                Ok(num / den)
            }
            MixingLaw::InverseGamma { shape, scale } => {
                // Conjugate: V | t is inverse-gamma(shape + d/2, scale + t/2).
                let post_shape = shape + 0.5 * d;
                if post_shape <= 1.0 {
                    return Err(Error::ParameterDomain(
                        "posterior mean of V diverges: shape + dim/2 <= 1".into(),
                    ));
                }
                Ok((scale + 0.5 * t) / (post_shape - 1.0))
            }
            MixingLaw::LogNormal { mu, sigma } => {
                // Fixed 256-node Gauss-Legendre on y = ln v. The window covers
                // the prior's Gaussian mass; below ln(t/2) - 50 the factor
                // exp(-t/(2v)) is < exp(-e^50) and can be cut.
                let lo0 = mu - 45.0 * sigma;
                let hi = mu + 45.0 * sigma;
                let lo = if t > 0.0 {
                    lo0.max((0.5 * t).ln() - 50.0)
                } else {
                    lo0
                };
                if lo >= hi {
                    // Entire prior mass sits where exp(-t/(2v)) underflows;
                    // posterior concentrates at the top of the support.
                    return Ok((hi).exp());
                }
                let rule = gauss_legendre_256();
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                let mut log_vals = Vec::with_capacity(rule.len());
                for &(xi, _) in rule {
                    let y = mid + half * xi;
                    let z = (y - mu) / sigma;
                    let lf = -0.5 * d * y - 0.5 * z * z
                        - if t > 0.0 { t / (2.0 * y.exp()) } else { 0.0 };
                    log_vals.push((y, lf));
                }
                let m = log_vals
                    .iter()
                    .map(|&(_, l)| l)
                    .fold(f64::NEG_INFINITY, f64::max);
                if !m.is_finite() {
                    return Err(Error::DegenerateDensity(format!(
                        "log-normal mixture density underflows at t = {t}"
                    )));
                }
                let mut num = 0.0;
                let mut den = 0.0;
                for ((y, l), &(_, w)) in log_vals.iter().zip(rule) {
                    let e = w * (l - m).exp();
                    num += y.exp() * e;
                    den += e;
                }
                Ok(num / den)
            }
        }
    }

    /// Lower bound for the posterior mean of V over t >= 0 in dimension
    /// `dim`; attained at t = 0: E[V^{1 - dim/2}] / E[V^{-dim/2}].
    pub fn q_lower_bound(&self, dim: usize) -> Result<f64> {
        let d = dim as f64;
        Ok(self.moment(1.0 - 0.5 * d)? / self.moment(-0.5 * d)?)
    }

    fn draw_v(&self, rng: &mut impl rand::RngCore) -> f64 {
        match self {
            MixingLaw::Atoms { atoms } => {
                let wsum: f64 = atoms.iter().map(|a| a.w).sum();
                let mut u: f64 = rng.random::<f64>() * wsum;
                for a in atoms {
                    if u < a.w {
                        return a.v;
                    }
                    u -= a.w;
                }
                atoms.last().unwrap().v
            }
            MixingLaw::InverseGamma { shape, scale } => {
                // 1/V ~ gamma(shape, rate = scale).
                let g = Gamma::new(*shape, 1.0 / scale).unwrap();
                1.0 / g.sample(rng)
            }
            MixingLaw::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
        }
    }
}

/// Density generator family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Family {
    Normal,
    StudentT { df: f64 },
    ScaleMixture { mixing: MixingLaw },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::Normal => Ok(()),
            Family::StudentT { df } => {
                if *df > 0.0 {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(format!(
                        "student_t needs df > 0, got {df}"
                    )))
                }
            }
            Family::ScaleMixture { mixing } => mixing.validate(),
        }
    }

    /// E[V] for the variance-mixture representation, if finite.
    pub fn mean_v(&self) -> Option<f64> {
        match self {
            Family::Normal => Some(1.0),
            Family::StudentT { df } => {
                if *df > 2.0 {
                    Some(df / (df - 2.0))
                } else {
                    None
                }
            }
            Family::ScaleMixture { mixing } => mixing.moment(1.0).ok(),
        }
    }
}

/// Model specification: location theta in R^p, residual dimension k, scale
/// sigma, generator family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub theta: Vec<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub p: usize,
    #[serde(default)]
    pub k: usize,
}

fn default_sigma() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn new(family: Family, theta: Vec<f64>, sigma: f64, k: usize) -> Self {
        let p = theta.len();
        ModelSpec {
            family,
            theta,
            sigma,
            p,
            k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if !(self.sigma > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.p == 0 {
            return Err(Error::ParameterDomain("p must be at least 1".into()));
        }
        if self.p != self.theta.len() {
            return Err(Error::DimensionMismatch(format!(
                "p = {} but theta has length {}",
                self.p,
                self.theta.len()
            )));
        }
        Ok(())
    }

    /// Per-coordinate variance of X, when finite: sigma^2 E[V].
    pub fn coordinate_variance(&self) -> Option<f64> {
        self.family.mean_v().map(|ev| ev * self.sigma * self.sigma)
    }

    /// Radial law of the full (X - theta, U) vector, dimension p + k.
    pub fn joint_radial_law(&self) -> RadialLaw {
        RadialLaw {
            family: self.family.clone(),
            sigma: self.sigma,
            dim: self.p + self.k,
        }
    }

    /// One replicate, drawn from the (seed, index) stream. Consumption
    /// order within a stream is fixed: V first, then the p coordinates of
    /// X, then the k coordinates of U.
    pub fn draw_row(&self, seed: u64, index: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = replicate_stream(seed, index);
        let v = match &self.family {
            Family::Normal => 1.0,
            Family::StudentT { df } => MixingLaw::InverseGamma {
                shape: 0.5 * df,
                scale: 0.5 * df,
            }
            .draw_v(&mut rng),
            Family::ScaleMixture { mixing } => mixing.draw_v(&mut rng),
        };
        let sd = self.sigma * v.sqrt();
        let x: Vec<f64> = self
            .theta
            .iter()
            .map(|&th| {
                let z: f64 = StandardNormal.sample(&mut rng);
                th + sd * z
            })
            .collect();
        let u: Vec<f64> = (0..self.k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect();
        (x, u)
    }
}

/// A materialized batch of joint draws, row-major.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub seed: u64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl SampleBatch {
    pub fn row_x(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn row_u(&self, i: usize) -> &[f64] {
        &self.u[i * self.k..(i + 1) * self.k]
    }
}

/// Draws n independent replicates. Replicate i depends only on (seed, i),
/// so the batch is reproducible and insensitive to evaluation order.
pub fn sample_joint(model: &ModelSpec, n: usize, seed: u64) -> Result<SampleBatch> {
    model.validate()?;
    let mut x = vec![0.0; n * model.p];
    let mut u = vec![0.0; n * model.k];
    // Filled by index, not by iteration order.
    for i in 0..n {
        let (xi, ui) = model.draw_row(seed, i as u64);
        x[i * model.p..(i + 1) * model.p].copy_from_slice(&xi);
        u[i * model.k..(i + 1) * model.k].copy_from_slice(&ui);
    }
    Ok(SampleBatch {
        n,
        p: model.p,
        k: model.k,
        seed,
        x,
        u,
    })
}

/// Radial law of a spherically symmetric vector of dimension `dim` with
/// generator `family` and scale `sigma`.
#[derive(Clone, Debug)]
pub struct RadialLaw {
    pub family: Family,
    pub sigma: f64,
    pub dim: usize,
}

impl RadialLaw {
    pub fn new(family: Family, sigma: f64, dim: usize) -> Result<Self> {
        family.validate()?;
        if !(sigma > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if dim == 0 {
            return Err(Error::ParameterDomain("dimension must be positive".into()));
        }
        Ok(RadialLaw { family, sigma, dim })
    }

    /// Log of the density generator at squared radius t: the joint density
    /// of the vector at any point with squared norm t (about its center).
    pub fn log_f(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::ParameterDomain(format!(
                "squared radius must be nonnegative, got {t}"
            )));
        }
        let d = self.dim as f64;
        let s2 = self.sigma * self.sigma;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        match &self.family {
            Family::Normal => Ok(-0.5 * d * (ln_2pi + s2.ln()) - t / (2.0 * s2)),
            Family::StudentT { df } => {
                // Multivariate t normalization in dimension d.
                let c = ln_gamma(0.5 * (df + d))
                    - ln_gamma(0.5 * df)
                    - 0.5 * d * ((df * std::f64::consts::PI).ln() + s2.ln());
                Ok(c - 0.5 * (df + d) * (t / (df * s2)).ln_1p())
            }
            Family::ScaleMixture { mixing } => self.mixture_log_f(mixing, t),
        }
    }

    pub fn f(&self, t: f64) -> Result<f64> {
        Ok(self.log_f(t)?.exp())
    }

    /// F(t) = (1/2) * integral of f over (t, inf).
    pub fn tail_half(&self, t: f64) -> Result<f64> {
        Ok(self.f(t)? * self.q(t)?)
    }

    /// Q(t) = F(t)/f(t). Constant sigma^2 for the normal family, affine in
    /// t for student_t, and sigma^2 times the posterior mean of V for scale
    /// mixtures (hence nondecreasing).
    pub fn q(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::ParameterDomain(format!(
                "squared radius must be nonnegative, got {t}"
            )));
        }
        let d = self.dim as f64;
        let s2 = self.sigma * self.sigma;
        match &self.family {
            Family::Normal => Ok(s2),
            Family::StudentT { df } => {
                if df + d <= 2.0 {
                    return Err(Error::ParameterDomain(format!(
                        "F(t) diverges for student_t: df + dim = {} <= 2",
                        df + d
                    )));
                }
                Ok((df * s2 + t) / (df + d - 2.0))
            }
            Family::ScaleMixture { mixing } => {
                Ok(s2 * mixing.posterior_mean_v(self.dim, t / s2)?)
            }
        }
    }

    /// Greatest lower bound of Q over t >= 0 (equals Q(0) for mixtures).
    pub fn q_lower_bound(&self) -> Result<f64> {
        let s2 = self.sigma * self.sigma;
        match &self.family {
            Family::Normal => Ok(s2),
            Family::StudentT { df } => {
                let d = self.dim as f64;
                if df + d <= 2.0 {
                    return Err(Error::ParameterDomain(format!(
                        "F(t) diverges for student_t: df + dim = {} <= 2",
                        df + d
                    )));
                }
                Ok(df * s2 / (df + d - 2.0))
            }
            Family::ScaleMixture { mixing } => Ok(s2 * mixing.q_lower_bound(self.dim)?),
        }
    }

    fn mixture_log_f(&self, mixing: &MixingLaw, t: f64) -> Result<f64> {
        let d = self.dim as f64;
        let s2 = self.sigma * self.sigma;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        match mixing {
            MixingLaw::Atoms { atoms } => {
                let wsum: f64 = atoms.iter().map(|a| a.w).sum();
                let logs: Vec<f64> = atoms
                    .iter()
                    .map(|a| {
                        (a.w / wsum).ln() - 0.5 * d * (ln_2pi + (a.v * s2).ln())
                            - t / (2.0 * a.v * s2)
                    })
                    .collect();
                let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !m.is_finite() {
                    return Err(Error::DegenerateDensity(format!(
                        "mixture density underflows at t = {t}"
                    )));
                }
                let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
                Ok(m + s.ln())
            }
            MixingLaw::InverseGamma { shape, scale } => {
                // Integrates in closed form to a multivariate-t-type law:
                // f(t) = Gamma(shape + d/2) scale^shape /
                //        (Gamma(shape) (2 pi s2)^{d/2}) * (scale + t/(2 s2))^{-shape - d/2}
                let a = *shape;
                let b = *scale;
                Ok(ln_gamma(a + 0.5 * d) - ln_gamma(a) + a * b.ln()
                    - 0.5 * d * (ln_2pi + s2.ln())
                    - (a + 0.5 * d) * (b + t / (2.0 * s2)).ln())
            }
            MixingLaw::LogNormal { mu, sigma } => {
                // 256-node rule on y = ln v, same window as posterior_mean_v.
                let ts = t / s2;
                let lo0 = mu - 45.0 * sigma;
                let hi = mu + 45.0 * sigma;
                let lo = if ts > 0.0 {
                    lo0.max((0.5 * ts).ln() - 50.0)
                } else {
                    lo0
                };
                if lo >= hi {
                    return Err(Error::DegenerateDensity(format!(
                        "log-normal mixture density underflows at t = {t}"
                    )));
                }
                let rule = gauss_legendre_256();
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                let mut best = f64::NEG_INFINITY;
                let mut logs = Vec::with_capacity(rule.len());
                for &(xi, w) in rule {
                    let y = mid + half * xi;
                    let z = (y - mu) / sigma;
                    // Gaussian component density times log-normal prior in y.
                    let l = -0.5 * d * (ln_2pi + s2.ln()) - 0.5 * d * y - ts / (2.0 * y.exp())
                        - 0.5 * z * z
                        - 0.5 * ln_2pi
                        - sigma.ln();
                    logs.push((l, w));
                    best = best.max(l);
                }
                if !best.is_finite() {
                    return Err(Error::DegenerateDensity(format!(
                        "log-normal mixture density underflows at t = {t}"
                    )));
                }
                let s: f64 = logs.iter().map(|&(l, w)| w * (l - best).exp()).sum();
                Ok(best + (half * s).ln())
            }
        }
    }
}

/// Q(t) for a radial law; free-function form of [`RadialLaw::q`].
pub fn q_function(law: &RadialLaw, t: f64) -> Result<f64> {
    law.q(t)
}

/// The greatest lower bound c with Q(t) >= c sigma^2 for a unit-scale
/// mixture in dimension `dim`: E[V^{1 - dim/2}] / E[V^{-dim/2}].
pub fn mixture_q_lower_bound(mixing: &MixingLaw, dim: usize) -> Result<f64> {
    mixing.validate()?;
    mixing.q_lower_bound(dim)
}

/// Posterior mean of V given squared radius t for a unit-scale mixture in
/// dimension `dim`.
pub fn posterior_mean_v(mixing: &MixingLaw, dim: usize, t: f64) -> Result<f64> {
    mixing.validate()?;
    mixing.posterior_mean_v(dim, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops::norm_sq;
    use approx::assert_relative_eq;

    fn two_point() -> MixingLaw {
        MixingLaw::Atoms {
            atoms: vec![Atom { v: 1.0, w: 0.5 }, Atom { v: 2.0, w: 0.5 }],
        }
    }

    #[test]
    fn two_point_mixture_bound_is_exact_ratio() {
        // dim 4: E[V^{-1}] = 0.75, E[V^{-2}] = 0.625, ratio 1.2.
        let c = mixture_q_lower_bound(&two_point(), 4).unwrap();
        assert_relative_eq!(c, 1.2, epsilon = 1e-14);
        // Q at t = 0 attains it.
        let q0 = posterior_mean_v(&two_point(), 4, 0.0).unwrap();
        assert_relative_eq!(q0, 1.2, epsilon = 1e-14);
    }

    #[test]
    fn two_point_posterior_mean_grows() {
        // Direct arithmetic at t = 10, dim 4:
        // num = 1^{-1} e^{-5} + 2^{-1} e^{-2.5}, den = e^{-5} + 2^{-2} e^{-2.5}.
        let num = (-5.0f64).exp() + 0.5 * (-2.5f64).exp();
        let den = (-5.0f64).exp() + 0.25 * (-2.5f64).exp();
        let expect = num / den;
        let got = posterior_mean_v(&two_point(), 4, 10.0).unwrap();
        assert_relative_eq!(got, expect, epsilon = 1e-12);
        assert!(got >= 1.2);
        // Monotone on a grid, capped by the largest atom.
        let mut last = 0.0;
        for i in 0..60 {
            let t = 0.5 * i as f64;
            let e = posterior_mean_v(&two_point(), 4, t).unwrap();
            assert!(e >= last - 1e-12);
            assert!(e <= 2.0 + 1e-12);
            last = e;
        }
    }

    #[test]
    fn normal_q_is_sigma_squared() {
        let law = RadialLaw::new(Family::Normal, 2.0, 5).unwrap();
        for &t in &[0.0, 0.5, 3.0, 111.0, 1e6] {
            assert_relative_eq!(law.q(t).unwrap(), 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn student_t_q_matches_inverse_gamma_posterior() {
        // t-family Q should coincide with the conjugate posterior-mean form.
        let df = 5.0;
        let dim = 6;
        let law = RadialLaw::new(Family::StudentT { df }, 1.0, dim).unwrap();
        let ig = MixingLaw::InverseGamma {
            shape: 0.5 * df,
            scale: 0.5 * df,
        };
        for &t in &[0.0, 1.0, 7.5, 100.0] {
            assert_relative_eq!(
                law.q(t).unwrap(),
                ig.posterior_mean_v(dim, t).unwrap(),
                epsilon = 1e-12
            );
        }
        // And with the closed form (df sigma^2 + t)/(df + dim - 2).
        assert_relative_eq!(law.q(3.0).unwrap(), 8.0 / 9.0, epsilon = 1e-13);
    }

    #[test]
    fn q_scales_as_sigma_squared() {
        let mix = Family::ScaleMixture { mixing: two_point() };
        let unit = RadialLaw::new(mix.clone(), 1.0, 4).unwrap();
        let scaled = RadialLaw::new(mix, 3.0, 4).unwrap();
        for &t in &[0.0, 2.0, 9.0] {
            assert_relative_eq!(
                scaled.q(9.0 * t).unwrap(),
                9.0 * unit.q(t).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn tail_half_is_actual_tail_integral_of_f() {
        // Check F(t) = 0.5 int_t^inf f against quadrature for each family.
        let laws = [
            RadialLaw::new(Family::Normal, 1.3, 4).unwrap(),
            RadialLaw::new(Family::StudentT { df: 5.0 }, 1.0, 4).unwrap(),
            RadialLaw::new(
                Family::ScaleMixture {
                    mixing: two_point(),
                },
                1.0,
                4,
            )
            .unwrap(),
        ];
        for law in &laws {
            for &t in &[0.0, 1.5, 6.0] {
                let (num, _) = crate::quad::integrate(
                    |u| law.f(u).unwrap(),
                    t,
                    t + 4000.0,
                    &[t + 1.0, t + 10.0, t + 100.0, t + 1000.0],
                    &crate::quad::QuadOptions::default(),
                )
                .unwrap();
                assert_relative_eq!(law.tail_half(t).unwrap(), 0.5 * num, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn log_normal_mixture_posterior_mean_is_monotone_and_bounded() {
        let mix = MixingLaw::LogNormal {
            mu: 0.25,
            sigma: 0.5,
        };
        let c = mixture_q_lower_bound(&mix, 5).unwrap();
        let mut last = 0.0;
        for i in 0..40 {
            let t = (1.3f64).powi(i) - 1.0;
            let e = posterior_mean_v(&mix, 5, t).unwrap();
            assert!(e >= c - 1e-8, "t={t}: {e} < {c}");
            assert!(e >= last - 1e-9);
            last = e;
        }
    }

    #[test]
    fn inverse_gamma_density_matches_student_t() {
        // InverseGamma(df/2, df/2) mixing reproduces the student_t generator.
        let df = 7.0;
        let t_law = RadialLaw::new(Family::StudentT { df }, 1.2, 5).unwrap();
        let m_law = RadialLaw::new(
            Family::ScaleMixture {
                mixing: MixingLaw::InverseGamma {
                    shape: 0.5 * df,
                    scale: 0.5 * df,
                },
            },
            1.2,
            5,
        )
        .unwrap();
        for &t in &[0.0, 0.7, 4.0, 60.0] {
            assert_relative_eq!(
                t_law.log_f(t).unwrap(),
                m_law.log_f(t).unwrap(),
                epsilon = 1e-11
            );
            assert_relative_eq!(t_law.q(t).unwrap(), m_law.q(t).unwrap(), epsilon = 1e-11);
        }
    }

    #[test]
    fn normal_density_integrates_to_one() {
        // int f(||x||^2) dx over R^d via the radial shell formula.
        let law = RadialLaw::new(Family::Normal, 1.7, 3).unwrap();
        let d = 3.0;
        let shell = 2.0 * std::f64::consts::PI.powf(0.5 * d) / (ln_gamma(0.5 * d)).exp();
        let (v, _) = crate::quad::integrate(
            |r: f64| shell * r.powf(d - 1.0) * law.f(r * r).unwrap(),
            0.0,
            60.0,
            &[1.0, 5.0],
            &crate::quad::QuadOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn sampling_is_reproducible_and_order_free() {
        let model = ModelSpec::new(
            Family::Normal,
            vec![0.5, -1.0, 2.0, 0.0],
            1.0,
            2,
        );
        let a = sample_joint(&model, 3, 9).unwrap();
        let b = sample_joint(&model, 3, 9).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.u, b.u);
        // Row i of a longer batch equals row i of a shorter one.
        let c = sample_joint(&model, 64, 9).unwrap();
        assert_eq!(a.row_x(2), c.row_x(2));
        assert_eq!(a.row_u(2), c.row_u(2));
        // Different seeds decouple.
        let d = sample_joint(&model, 3, 10).unwrap();
        assert_ne!(a.x, d.x);
    }

    #[test]
    fn batch_moments_match_the_model() {
        // Mixture model: E||X - theta||^2 = p sigma^2 E[V].
        let model = ModelSpec::new(
            Family::ScaleMixture {
                mixing: two_point(),
            },
            vec![1.0; 4],
            2.0,
            3,
        );
        let n = 200_000;
        let batch = sample_joint(&model, n, 4).unwrap();
        let mut acc = 0.0;
        for i in 0..n {
            acc += norm_sq(&crate::vecops::sub(batch.row_x(i), &model.theta));
        }
        let mean = acc / n as f64;
        let expect = 4.0 * 4.0 * 1.5; // p sigma^2 E[V]
        assert_relative_eq!(mean, expect, max_relative = 0.02);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(ModelSpec::new(Family::Normal, vec![0.0; 3], 0.0, 0)
            .validate()
            .is_err());
        assert!(ModelSpec::new(Family::StudentT { df: -1.0 }, vec![0.0; 3], 1.0, 0)
            .validate()
            .is_err());
        assert!(ModelSpec::new(
            Family::ScaleMixture {
                mixing: MixingLaw::Atoms {
                    atoms: vec![Atom { v: 1.0, w: -0.5 }]
                }
            },
            vec![0.0; 3],
            1.0,
            0
        )
        .validate()
        .is_err());
        let mut m = ModelSpec::new(Family::Normal, vec![0.0; 3], 1.0, 0);
        m.p = 5; // out of sync with theta
        assert!(m.validate().is_err());
    }

    #[test]
    fn k_zero_batch_has_empty_u() {
        let model = ModelSpec::new(Family::Normal, vec![0.0; 2], 1.0, 0);
        let b = sample_joint(&model, 5, 1).unwrap();
        assert!(b.u.is_empty());
        assert_eq!(b.row_u(3), &[] as &[f64]);
    }

    #[test]
    fn q_rejects_negative_radius_and_low_df_tail() {
        let law = RadialLaw::new(Family::Normal, 1.0, 4).unwrap();
        assert!(law.q(-1.0).is_err());
        // df + dim <= 2: F diverges.
        let law = RadialLaw::new(Family::StudentT { df: 0.5 }, 1.0, 1).unwrap();
        assert!(law.q(1.0).is_err());
    }
}
