//! Shrink functions r(t) used by Baranchik-type estimators.
//!
//! The domination theory asks for r nondecreasing and bounded; every entry
//! in this catalogue satisfies both and carries an analytic derivative used
//! by the divergence formulas.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ShrinkFn {
    /// r(t) = a.
    Constant { a: f64 },
    /// r(t) = min(slope * t, bound).
    SaturatingLinear { slope: f64, bound: f64 },
    /// r(t) = bound * t / (1 + t).
    Rational { bound: f64 },
}

impl ShrinkFn {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ShrinkFn::Constant { a } => *a >= 0.0,
            ShrinkFn::SaturatingLinear { slope, bound } => *slope > 0.0 && *bound >= 0.0,
            ShrinkFn::Rational { bound } => *bound >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterDomain(format!(
                "shrink function parameters out of range: {self:?}"
            )))
        }
    }

    pub fn r(&self, t: f64) -> f64 {
        match self {
            ShrinkFn::Constant { a } => *a,
            ShrinkFn::SaturatingLinear { slope, bound } => (slope * t).min(*bound),
            ShrinkFn::Rational { bound } => {
                if t.is_infinite() {
                    *bound
                } else {
                    bound * t / (1.0 + t)
                }
            }
        }
    }

    pub fn r_prime(&self, t: f64) -> f64 {
        match self {
            ShrinkFn::Constant { .. } => 0.0,
            ShrinkFn::SaturatingLinear { slope, bound } => {
                if slope * t < *bound {
                    *slope
                } else {
                    0.0
                }
            }
            ShrinkFn::Rational { bound } => {
                if t.is_infinite() {
                    0.0
                } else {
                    bound / ((1.0 + t) * (1.0 + t))
                }
            }
        }
    }

    /// sup of r over t >= 0.
    pub fn upper_bound(&self) -> f64 {
        match self {
            ShrinkFn::Constant { a } => *a,
            ShrinkFn::SaturatingLinear { bound, .. } => *bound,
            ShrinkFn::Rational { bound } => *bound,
        }
    }

    /// Every catalogued shrink function is nondecreasing.
    pub fn monotone_nondecreasing(&self) -> bool {
        true
    }

    /// The function t -> c * r(t), expressed in the same catalogue.
    pub fn scaled(&self, c: f64) -> ShrinkFn {
        if c == 0.0 {
            return ShrinkFn::Constant { a: 0.0 };
        }
        match self {
            ShrinkFn::Constant { a } => ShrinkFn::Constant { a: c * a },
            ShrinkFn::SaturatingLinear { slope, bound } => ShrinkFn::SaturatingLinear {
                slope: c * slope,
                bound: c * bound,
            },
            ShrinkFn::Rational { bound } => ShrinkFn::Rational { bound: c * bound },
        }
    }
}
