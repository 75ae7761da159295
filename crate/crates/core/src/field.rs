//! Shrinkage vector fields g and their divergence calculus.
//!
//! Estimators take the form X + sigma^2 g(X) (known scale) or
//! X + (||U||^2/(k+2)) g(X, ||U||^2) (unknown scale). The risk identities
//! exchange the cross term E[(X - theta)' g] for divergence terms, so every
//! catalogued field carries an analytic divergence in x and, for
//! residual-dependent fields, an analytic derivative of ||g||^2 in ||u||^2.
//! Finite-difference versions of both are provided as independent checks.
//!
//! For a spherical field g(x) = -r(t) x / t with t = ||x||^2, differentiation
//! gives div g = -((p-2) r(t)/t + 2 r'(t)); the sign of the r' term follows
//! from d t / d x_i = 2 x_i.

use crate::error::{Error, Result};
use crate::rng::replicate_stream;
use crate::shrink::ShrinkFn;
use crate::vecops::{dot, norm_sq};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldKind {
    /// g(x) = c.
    Constant { c: Vec<f64> },
    /// g(x) = A x for a square matrix A (row-major rows).
    Linear { a: Vec<Vec<f64>> },
    /// g(x) = -a x / ||x||^2: the James-Stein field.
    Js { a: f64 },
    /// g(x) = -r(||x||^2) x / ||x||^2.
    Baranchik { shrink: ShrinkFn },
    /// g(x, ||u||^2) = -(k+2) r(w) x / ||x||^2 with w = ||x||^2 / ||u||^2:
    /// the field whose unknown-scale estimator is
    /// (1 - ||u||^2 r(w)/||x||^2) x.
    ResidualBaranchik { shrink: ShrinkFn, k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    #[serde(flatten)]
    pub kind: FieldKind,
}

impl VectorField {
    pub fn constant(c: Vec<f64>) -> Self {
        VectorField {
            kind: FieldKind::Constant { c },
        }
    }

    pub fn linear(a: Vec<Vec<f64>>) -> Self {
        VectorField {
            kind: FieldKind::Linear { a },
        }
    }

    pub fn js(a: f64) -> Self {
        VectorField {
            kind: FieldKind::Js { a },
        }
    }

    pub fn baranchik(shrink: ShrinkFn) -> Self {
        VectorField {
            kind: FieldKind::Baranchik { shrink },
        }
    }

    pub fn residual_baranchik(shrink: ShrinkFn, k: usize) -> Self {
        VectorField {
            kind: FieldKind::ResidualBaranchik { shrink, k },
        }
    }

    pub fn u_dependent(&self) -> bool {
        matches!(self.kind, FieldKind::ResidualBaranchik { .. })
    }

    fn usq_for(&self, usq: Option<f64>) -> Result<f64> {
        match (self.u_dependent(), usq) {
            (true, Some(v)) if v > 0.0 => Ok(v),
            (true, _) => Err(Error::MissingResidual(
                "residual-dependent field needs ||u||^2 > 0".into(),
            )),
            (false, _) => Ok(f64::NAN), // unused
        }
    }

    /// g(x, ||u||^2).
    pub fn eval(&self, x: &[f64], usq: Option<f64>) -> Result<Vec<f64>> {
        match &self.kind {
            FieldKind::Constant { c } => {
                if c.len() != x.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "constant field has dim {}, x has dim {}",
                        c.len(),
                        x.len()
                    )));
                }
                Ok(c.clone())
            }
            FieldKind::Linear { a } => {
                if a.len() != x.len() || a.iter().any(|row| row.len() != x.len()) {
                    return Err(Error::DimensionMismatch(
                        "linear field matrix does not match x".into(),
                    ));
                }
                Ok(a.iter().map(|row| dot(row, x)).collect())
            }
            FieldKind::Js { a } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Err(Error::ParameterDomain(
                        "field is singular at x = 0".into(),
                    ));
                }
                Ok(x.iter().map(|xi| -a * xi / t).collect())
            }
            FieldKind::Baranchik { shrink } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Err(Error::ParameterDomain(
                        "field is singular at x = 0".into(),
                    ));
                }
                let f = -shrink.r(t) / t;
                Ok(x.iter().map(|xi| f * xi).collect())
            }
            FieldKind::ResidualBaranchik { shrink, k } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Err(Error::ParameterDomain(
                        "field is singular at x = 0".into(),
                    ));
                }
                let usq = self.usq_for(usq)?;
                let f = -((*k as f64) + 2.0) * shrink.r(t / usq) / t;
                Ok(x.iter().map(|xi| f * xi).collect())
            }
        }
    }

    /// Divergence of g in x at (x, ||u||^2).
    pub fn divergence_x(&self, x: &[f64], usq: Option<f64>) -> Result<f64> {
        let p = x.len() as f64;
        match &self.kind {
            FieldKind::Constant { .. } => Ok(0.0),
            FieldKind::Linear { a } => Ok((0..a.len()).map(|i| a[i][i]).sum()),
            FieldKind::Js { a } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Err(Error::ParameterDomain(
                        "divergence is singular at x = 0".into(),
                    ));
                }
                Ok(-a * (p - 2.0) / t)
            }
            FieldKind::Baranchik { shrink } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Err(Error::ParameterDomain(
                        "divergence is singular at x = 0".into(),
                    ));
                }
                Ok(-((p - 2.0) * shrink.r(t) / t + 2.0 * shrink.r_prime(t)))
            }
            FieldKind::ResidualBaranchik { shrink, k } => {
                let t = norm_sq(x);
                if t == 0.0 {
                    return Err(Error::ParameterDomain(
                        "divergence is singular at x = 0".into(),
                    ));
                }
                let usq = self.usq_for(usq)?;
                let w = t / usq;
                let kf = *k as f64 + 2.0;
                Ok(-kf * ((p - 2.0) * shrink.r(w) / t + 2.0 * shrink.r_prime(w) / usq))
            }
        }
    }

    pub fn norm_sq_g(&self, x: &[f64], usq: Option<f64>) -> Result<f64> {
        Ok(norm_sq(&self.eval(x, usq)?))
    }

    /// d ||g||^2 / d ||u||^2; zero for residual-free fields.
    pub fn d_dusq_norm_sq(&self, x: &[f64], usq: f64) -> Result<f64> {
        match &self.kind {
            FieldKind::ResidualBaranchik { shrink, k } => {
                let t = norm_sq(x);
                if t == 0.0 || usq <= 0.0 {
                    return Err(Error::ParameterDomain(
                        "derivative undefined at x = 0 or ||u||^2 = 0".into(),
                    ));
                }
                let w = t / usq;
                let kf = *k as f64 + 2.0;
                Ok(-2.0 * kf * kf * shrink.r(w) * shrink.r_prime(w) / (usq * usq))
            }
            _ => Ok(0.0),
        }
    }
}

/// Central-difference divergence, the independent oracle for
/// [`VectorField::divergence_x`].
pub fn divergence_fd(field: &VectorField, x: &[f64], usq: Option<f64>, h: f64) -> Result<f64> {
    let mut acc = 0.0;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = field.eval(&xp, usq)?[i];
        xp[i] = x[i] - h;
        let dn = field.eval(&xp, usq)?[i];
        xp[i] = x[i];
        acc += (up - dn) / (2.0 * h);
    }
    Ok(acc)
}

/// Central-difference d ||g||^2 / d ||u||^2.
pub fn d_dusq_norm_sq_fd(field: &VectorField, x: &[f64], usq: f64, h: f64) -> Result<f64> {
    let up = field.norm_sq_g(x, Some(usq + h))?;
    let dn = field.norm_sq_g(x, Some(usq - h))?;
    Ok((up - dn) / (2.0 * h))
}

/// Central-difference Laplacian of a scalar function.
pub fn laplacian_fd<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> f64 {
    let center = f(x);
    let mut acc = 0.0;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = f(&xp);
        xp[i] = x[i] - h;
        let dn = f(&xp);
        xp[i] = x[i];
        acc += (up + dn - 2.0 * center) / (h * h);
    }
    acc
}

/// Outcome of a pointwise domination-condition scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Largest value of the condition expression over the grid.
    pub max_value: f64,
    /// Point attaining it.
    pub argmax_x: Vec<f64>,
    pub argmax_usq: Option<f64>,
    pub n_points: usize,
    /// max_value <= tolerance (the condition asks for <= 0 everywhere).
    pub pass: bool,
}

/// Slack allowed when deciding `pass`: boundary cases (exactly zero) must
/// not fail on rounding.
pub const CONDITION_TOL: f64 = 1e-9;

/// Evaluates ||g||^2 + 2 c div g over a grid of x points; domination of X by
/// X + sigma^2 g under Q >= c needs this <= 0 everywhere.
pub fn check_domination_condition(
    field: &VectorField,
    c: f64,
    grid: &[Vec<f64>],
) -> Result<ConditionReport> {
    if !(c > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "lower bound c must be positive, got {c}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::ParameterDomain("empty condition grid".into()));
    }
    let mut max_value = f64::NEG_INFINITY;
    let mut argmax: &[f64] = &grid[0];
    for x in grid {
        let v = field.norm_sq_g(x, None)? + 2.0 * c * field.divergence_x(x, None)?;
        if v > max_value {
            max_value = v;
            argmax = x;
        }
    }
    Ok(ConditionReport {
        max_value,
        argmax_x: argmax.to_vec(),
        argmax_usq: None,
        n_points: grid.len(),
        pass: max_value <= CONDITION_TOL,
    })
}

/// Evaluates the unknown-scale condition
/// ||g||^2 + 2 div_x g + 2 (||u||^2/(k+2)) d ||g||^2 / d ||u||^2
/// over a grid of (x, ||u||^2) points.
pub fn check_residual_domination_condition(
    field: &VectorField,
    k: usize,
    grid: &[(Vec<f64>, f64)],
) -> Result<ConditionReport> {
    if grid.is_empty() {
        return Err(Error::ParameterDomain("empty condition grid".into()));
    }
    let mut max_value = f64::NEG_INFINITY;
    let mut arg: &(Vec<f64>, f64) = &grid[0];
    for pt in grid {
        let (x, usq) = pt;
        let v = field.norm_sq_g(x, Some(*usq))?
            + 2.0 * field.divergence_x(x, Some(*usq))?
            + 2.0 * usq / (k as f64 + 2.0) * field.d_dusq_norm_sq(x, *usq)?;
        if v > max_value {
            max_value = v;
            arg = pt;
        }
    }
    Ok(ConditionReport {
        max_value,
        argmax_x: arg.0.clone(),
        argmax_usq: Some(arg.1),
        n_points: grid.len(),
        pass: max_value <= CONDITION_TOL,
    })
}

/// Standard scan grid: radii log-spaced over [1e-2, 1e3] crossed with
/// `n_dirs` random directions (seeded, hence reproducible).
pub fn default_condition_grid(p: usize, n_dirs: usize, seed: u64) -> Vec<Vec<f64>> {
    let n_radii = 60;
    let mut out = Vec::with_capacity(n_radii * n_dirs);
    for d in 0..n_dirs {
        let mut rng = replicate_stream(seed, d as u64);
        let dir = loop {
            let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm_sq(&z).sqrt();
            if n > 0.0 {
                break z.iter().map(|zi| zi / n).collect::<Vec<f64>>();
            }
        };
        for i in 0..n_radii {
            let lr = -2.0 + 5.0 * i as f64 / (n_radii - 1) as f64;
            let r = 10f64.powf(lr);
            out.push(dir.iter().map(|di| r * di).collect());
        }
    }
    out
}

/// (x, ||u||^2) version of the scan grid for residual-dependent conditions.
pub fn default_residual_condition_grid(
    p: usize,
    n_dirs: usize,
    seed: u64,
) -> Vec<(Vec<f64>, f64)> {
    let base = default_condition_grid(p, n_dirs, seed);
    let usqs = [0.25, 1.0, 4.0, 25.0];
    let mut out = Vec::with_capacity(base.len() * usqs.len());
    for x in base {
        for &u in &usqs {
            out.push((x.clone(), u));
        }
    }
    out
}
