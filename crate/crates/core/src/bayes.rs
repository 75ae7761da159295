//! Generalized Bayes shrinkage under priors eta^a ||theta||^{-b}.
//!
//! For the joint model (X, U) with location theta and scale eta^{-1/2},
//! the formal posterior mean of theta depends on the data only through
//! W = ||X||^2/||U||^2 and equals (1 - r(W)/W) X, the same for every
//! generating density in the spherical class. r(w) is w times a ratio of
//! two one-dimensional integrals over (0, 1):
//!
//!   N(w) = int_0^1 lambda^{b/2}   (1-lambda)^{(p-b)/2-1} (1+w lambda)^{-M} dlambda
//!   D(w) = int_0^1 lambda^{b/2-1} (1-lambda)^{(p-b)/2-1} (1+w lambda)^{-M} dlambda
//!
//! with M = k/2 + a + b/2 + 2. The integrable endpoint singularities
//! (lambda^{b/2-1} when b < 2, (1-lambda)^{(p-b)/2-1} when p - b < 2) are
//! removed by the substitutions lambda = s^{2/b} and 1 - lambda =
//! s^{2/(p-b)}, after which both integrands are smooth. Numerator and
//! denominator share quadrature nodes so their ratio is insensitive to
//! common scaling.
//!
//! r is nondecreasing with 0 < r <= b/(k+2a+2) whenever 0 < b <= p-2 and
//! k + 2a + 2 > 0; under the additional bound b/(k+2a+2) <= 2(p-2)/(k+2)
//! the estimator is minimax for the whole spherical class. The certificate
//! below checks those clauses one by one.

use crate::error::{Error, Result};
use crate::estimator::Estimate;
use crate::quad::{adaptive_gk, QuadOptions};
use crate::vecops::{norm_sq, scale};
use serde::{Deserialize, Serialize};

/// Below this w the exact r is replaced by its w -> 0 asymptote
/// r = w b/p (relative error O(w)).
const SMALL_W: f64 = 1e-12;

/// Contract on each lambda-integral: quadrature error estimate at most
/// this fraction of the value, else the evaluation is rejected.
const REL_CONTRACT: f64 = 1e-8;

/// Tolerance for the numeric monotonicity clause of the certificate.
pub const MONOTONE_TOL: f64 = 1e-10;

/// Prior specification: pi(theta, eta) proportional to
/// eta^{a_prior} ||theta||^{-b_prior} for a p-dimensional location and a
/// k-dimensional residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesPriorSpec {
    pub a_prior: f64,
    pub b_prior: f64,
    pub p: usize,
    pub k: usize,
}

impl BayesPriorSpec {
    pub fn new(a_prior: f64, b_prior: f64, p: usize, k: usize) -> Result<Self> {
        let spec = BayesPriorSpec {
            a_prior,
            b_prior,
            p,
            k,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Well-definedness of the r(w) integrals: 0 < b < p and a positive
    /// decay exponent M on the (1 + w lambda) factor.
    pub fn validate(&self) -> Result<()> {
        if !(self.b_prior > 0.0 && self.b_prior < self.p as f64) {
            return Err(Error::ParameterDomain(format!(
                "prior power b must satisfy 0 < b < p, got b = {}, p = {}",
                self.b_prior, self.p
            )));
        }
        if !self.a_prior.is_finite() {
            return Err(Error::ParameterDomain(format!(
                "prior exponent a must be finite, got {}",
                self.a_prior
            )));
        }
        if !(self.decay_exponent() > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "need k/2 + a + b/2 + 2 > 0, got {}",
                self.decay_exponent()
            )));
        }
        Ok(())
    }

    /// M = k/2 + a + b/2 + 2, the power on (1 + w lambda).
    pub fn decay_exponent(&self) -> f64 {
        0.5 * self.k as f64 + self.a_prior + 0.5 * self.b_prior + 2.0
    }

    /// sup_w r(w) = b/(k + 2a + 2), which is also lim_{w->inf} r(w).
    /// Undefined when the denominator is not positive.
    pub fn shrink_bound(&self) -> Result<f64> {
        let denom = self.k as f64 + 2.0 * self.a_prior + 2.0;
        if denom > 0.0 {
            Ok(self.b_prior / denom)
        } else {
            Err(Error::ParameterDomain(format!(
                "r(w) is unbounded: k + 2a + 2 = {denom} <= 0"
            )))
        }
    }

    /// lim_{w->0} (1 - r(w)/w) = 1 - b/p, the shrink factor at the origin.
    pub fn factor_limit_at_zero(&self) -> f64 {
        1.0 - self.b_prior / self.p as f64
    }

    /// The Baranchik-type threshold 2(p-2)/(k+2) that sup r must stay
    /// under for minimaxity.
    pub fn baranchik_threshold(&self) -> f64 {
        2.0 * (self.p as f64 - 2.0) / (self.k as f64 + 2.0)
    }
}

/// Evaluates (N(w), D(w)) with shared nodes; returns values and error
/// estimates per channel.
fn lambda_integrals(prior: &BayesPriorSpec, w: f64) -> Result<([f64; 2], [f64; 2])> {
    let b = prior.b_prior;
    let p = prior.p as f64;
    let m = prior.decay_exponent();
    // Power on (1 - lambda); nonnegative iff p - b >= 2.
    let ep = 0.5 * (p - b) - 1.0;
    let opts = QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 0.0,
        max_intervals: 20_000,
    };

    // (1-lambda)^ep (1+w lambda)^{-m}, stable for large w; the ep term is
    // dropped when ep = 0 to avoid 0 * ln(0) at lambda = 1.
    let tail = move |lam: f64| -> f64 {
        let e1 = if ep == 0.0 {
            0.0
        } else {
            ep * (-lam).ln_1p()
        };
        (e1 - m * (w * lam).ln_1p()).exp()
    };

    // The (1 + w lambda)^{-m} knee sits at lambda ~ 1/w; seed the adaptive
    // pass with cuts bracketing it when w is large.
    let knees: Vec<f64> = if w > 4.0 {
        [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|c| c / w)
            .filter(|l| *l < 0.5)
            .collect()
    } else {
        Vec::new()
    };

    // Left half, lambda in (0, 1/2].
    let left = if b < 2.0 {
        // lambda = s^{2/b}: the D channel's lambda^{b/2-1} dlambda becomes
        // the constant 2/b, and N picks up a factor lambda.
        let q = 2.0 / b;
        let s_hi = 0.5f64.powf(0.5 * b);
        let cuts: Vec<f64> = knees.iter().map(|l| l.powf(0.5 * b)).collect();
        adaptive_gk::<2, _>(
            &|s: f64| {
                let lam = s.powf(q).min(0.5);
                let g = q * tail(lam);
                [lam * g, g]
            },
            0.0,
            s_hi,
            &cuts,
            &opts,
        )?
    } else {
        adaptive_gk::<2, _>(
            &|lam: f64| {
                let g = tail(lam);
                [lam.powf(0.5 * b) * g, lam.powf(0.5 * b - 1.0) * g]
            },
            0.0,
            0.5,
            &knees,
            &opts,
        )?
    };

    // Right half, lambda in [1/2, 1).
    let right = if p - b < 2.0 {
        // 1 - lambda = s^{2/(p-b)} absorbs the (1-lambda)^ep singularity.
        let q = 2.0 / (p - b);
        let s_hi = 0.5f64.powf(0.5 * (p - b));
        adaptive_gk::<2, _>(
            &|s: f64| {
                let lam = (1.0 - s.powf(q)).max(0.5);
                let g = q * (-m * (w * lam).ln_1p()).exp();
                [lam.powf(0.5 * b) * g, lam.powf(0.5 * b - 1.0) * g]
            },
            0.0,
            s_hi,
            &[],
            &opts,
        )?
    } else {
        adaptive_gk::<2, _>(
            &|lam: f64| {
                let g = tail(lam);
                [lam.powf(0.5 * b) * g, lam.powf(0.5 * b - 1.0) * g]
            },
            0.5,
            1.0,
            &[],
            &opts,
        )?
    };

    let val = [
        left.value[0] + right.value[0],
        left.value[1] + right.value[1],
    ];
    let err = [
        left.error[0] + right.error[0],
        left.error[1] + right.error[1],
    ];
    for ch in 0..2 {
        if !val[ch].is_finite() || val[ch] <= 0.0 {
            return Err(Error::QuadratureFailure(format!(
                "lambda integral degenerate at w = {w}: value {}",
                val[ch]
            )));
        }
        if err[ch] > REL_CONTRACT * val[ch] {
            return Err(Error::QuadratureFailure(format!(
                "lambda integral at w = {w}: error estimate {} exceeds {} of value {}",
                err[ch], REL_CONTRACT, val[ch]
            )));
        }
    }
    Ok((val, err))
}

/// The shrink profile r(w) = w N(w)/D(w), with relative quadrature error
/// at most 1e-8 (enforced) and the exact asymptote used below w = 1e-12.
pub fn bayes_r(prior: &BayesPriorSpec, w: f64) -> Result<f64> {
    bayes_r_with_error(prior, w).map(|(r, _)| r)
}

/// As `bayes_r`, also returning a bound on the absolute quadrature error.
pub fn bayes_r_with_error(prior: &BayesPriorSpec, w: f64) -> Result<(f64, f64)> {
    prior.validate()?;
    if w.is_nan() || w < 0.0 {
        return Err(Error::ParameterDomain(format!(
            "w must be nonnegative, got {w}"
        )));
    }
    if w.is_infinite() {
        return Ok((prior.shrink_bound()?, 0.0));
    }
    if w < SMALL_W {
        // r(w)/w -> b/p as w -> 0 (ratio of Beta functions); the next-order
        // correction is O(w), far below the error contract here.
        return Ok((w * prior.b_prior / prior.p as f64, 0.0));
    }
    let (val, err) = lambda_integrals(prior, w)?;
    let r = w * val[0] / val[1];
    let bound = r * (err[0] / val[0] + err[1] / val[1]);
    Ok((r, bound))
}

/// Tabulated r(w) on a fixed grid, for inspection, certificates, and CSV
/// output. Immutable once built; interpolation is linear in ln w and may
/// stand in for `bayes_r` only after `verify_interpolation` reports an
/// acceptable error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RwTable {
    pub prior: BayesPriorSpec,
    pub w: Vec<f64>,
    pub r: Vec<f64>,
    pub error_estimate: Vec<f64>,
}

impl RwTable {
    /// Geometric grid of n points spanning [lo, hi].
    pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        assert!(lo > 0.0 && hi > lo && n >= 2);
        let ratio = (hi / lo).ln();
        (0..n)
            .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    pub fn build(prior: &BayesPriorSpec, grid: &[f64]) -> Result<RwTable> {
        prior.validate()?;
        if grid.is_empty() {
            return Err(Error::ParameterDomain("empty w grid".into()));
        }
        if grid.windows(2).any(|p| !(p[1] > p[0])) || grid[0] < 0.0 || !grid[0].is_finite() {
            return Err(Error::ParameterDomain(
                "w grid must be finite, nonnegative, strictly increasing".into(),
            ));
        }
        let mut r = Vec::with_capacity(grid.len());
        let mut error_estimate = Vec::with_capacity(grid.len());
        for &w in grid {
            let (rv, ev) = bayes_r_with_error(prior, w)?;
            r.push(rv);
            error_estimate.push(ev);
        }
        Ok(RwTable {
            prior: prior.clone(),
            w: grid.to_vec(),
            r,
            error_estimate,
        })
    }

    /// Linear interpolation in ln w. Below the grid the profile is
    /// extended proportionally (r = O(w) at the origin); above it the last
    /// value is held (r approaches its supremum from below).
    pub fn interp(&self, w: f64) -> f64 {
        let first = self.w[0];
        let last = *self.w.last().unwrap();
        if w <= 0.0 {
            return 0.0;
        }
        if w <= first {
            return if first > 0.0 {
                self.r[0] * w / first
            } else {
                self.r[0]
            };
        }
        if w >= last {
            return *self.r.last().unwrap();
        }
        let hi = self.w.partition_point(|&g| g < w).min(self.w.len() - 1);
        let lo = hi - 1;
        let t = (w.ln() - self.w[lo].ln()) / (self.w[hi].ln() - self.w[lo].ln());
        self.r[lo] + t * (self.r[hi] - self.r[lo])
    }

    /// Largest absolute interpolation error at the geometric midpoints of
    /// the grid, measured against direct quadrature. Gatekeeper for using
    /// `interp` inside hot loops.
    pub fn verify_interpolation(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for pair in self.w.windows(2) {
            if pair[0] <= 0.0 {
                continue;
            }
            let wm = (pair[0] * pair[1]).sqrt();
            let direct = bayes_r(&self.prior, wm)?;
            worst = worst.max((self.interp(wm) - direct).abs());
        }
        Ok(worst)
    }

    /// Largest decrease between consecutive grid values (0 when the table
    /// is nondecreasing).
    pub fn monotone_violation(&self) -> f64 {
        self.r
            .windows(2)
            .map(|p| p[0] - p[1])
            .fold(0.0, f64::max)
            .max(0.0)
    }

    pub fn max_r(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_r(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One clause of the minimaxity certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertClause {
    pub name: String,
    pub satisfied: bool,
    pub detail: String,
}

/// Clause-by-clause report on the sufficient conditions for the
/// generalized Bayes estimator to be minimax over the full spherical
/// class with unknown scale.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimaxCertificate {
    pub prior: BayesPriorSpec,
    /// sup r = b/(k+2a+2), when defined.
    pub shrink_limit: Option<f64>,
    /// The threshold 2(p-2)/(k+2) that sup r must not exceed.
    pub threshold: f64,
    pub clauses: Vec<CertClause>,
    pub certified: bool,
}

impl MinimaxCertificate {
    pub fn clause(&self, name: &str) -> Option<&CertClause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

/// Grid used for the numeric clauses: 200 points spanning [1e-4, 1e6].
pub fn certificate_grid() -> Vec<f64> {
    RwTable::log_grid(1e-4, 1e6, 200)
}

/// Checks the algebraic clauses (0 < b <= p-2, k+2a+2 > 0, sup r under the
/// Baranchik threshold) and the numeric ones (r nondecreasing and below
/// the threshold along a 200-point log grid).
pub fn minimaxity_certificate(prior: &BayesPriorSpec) -> Result<MinimaxCertificate> {
    prior.validate()?;
    let b = prior.b_prior;
    let p = prior.p as f64;
    let denom = prior.k as f64 + 2.0 * prior.a_prior + 2.0;
    let threshold = prior.baranchik_threshold();
    let limit = prior.shrink_bound().ok();
    let table = RwTable::build(prior, &certificate_grid())?;

    let mut clauses = Vec::new();
    clauses.push(CertClause {
        name: "residual_exponent_positive".into(),
        satisfied: denom > 0.0,
        detail: format!("k + 2a + 2 = {denom} must be > 0"),
    });
    clauses.push(CertClause {
        name: "prior_power_range".into(),
        satisfied: b > 0.0 && b <= p - 2.0,
        detail: format!("0 < b <= p - 2 required: b = {b}, p - 2 = {}", p - 2.0),
    });
    clauses.push(CertClause {
        name: "shrink_bound_under_threshold".into(),
        satisfied: matches!(limit, Some(l) if l <= threshold),
        detail: match limit {
            Some(l) => format!("sup r = b/(k+2a+2) = {l} vs 2(p-2)/(k+2) = {threshold}"),
            None => format!("sup r undefined (k + 2a + 2 = {denom} <= 0)"),
        },
    });
    let violation = table.monotone_violation();
    clauses.push(CertClause {
        name: "monotone_on_grid".into(),
        satisfied: violation <= MONOTONE_TOL,
        detail: format!(
            "largest decrease {violation:.3e} over {} grid points (tolerance {MONOTONE_TOL:.0e})",
            table.w.len()
        ),
    });
    let (max_r, min_r) = (table.max_r(), table.min_r());
    clauses.push(CertClause {
        name: "grid_values_in_range".into(),
        satisfied: min_r >= 0.0 && max_r <= threshold + 1e-8,
        detail: format!("grid r range [{min_r:.6}, {max_r:.6}] vs threshold {threshold:.6}"),
    });

    let certified = clauses.iter().all(|c| c.satisfied);
    Ok(MinimaxCertificate {
        prior: prior.clone(),
        shrink_limit: limit,
        threshold,
        clauses,
        certified,
    })
}

/// The estimator (1 - r(W)/W) X with W = ||x||^2/||u||^2. Errors on a zero
/// residual (W undefined); at x = 0 the factor extends continuously and
/// the zero vector is returned, flagged as an origin evaluation.
pub fn generalized_bayes_estimate(
    prior: &BayesPriorSpec,
    x: &[f64],
    u: &[f64],
) -> Result<Estimate> {
    prior.validate()?;
    if x.len() != prior.p {
        return Err(Error::DimensionMismatch(format!(
            "x has length {}, prior declares p = {}",
            x.len(),
            prior.p
        )));
    }
    if u.len() != prior.k {
        return Err(Error::DimensionMismatch(format!(
            "u has length {}, prior declares k = {}",
            u.len(),
            prior.k
        )));
    }
    let usq = norm_sq(u);
    if usq == 0.0 {
        return Err(Error::MissingResidual(
            "zero residual vector: W = ||x||^2/||u||^2 is undefined".into(),
        ));
    }
    let t = norm_sq(x);
    if t == 0.0 {
        return Ok(Estimate {
            value: vec![0.0; x.len()],
            at_origin: true,
        });
    }
    let w = t / usq;
    let factor = if w < SMALL_W {
        prior.factor_limit_at_zero()
    } else {
        1.0 - bayes_r(prior, w)? / w
    };
    Ok(Estimate::plain(scale(x, factor)))
}
