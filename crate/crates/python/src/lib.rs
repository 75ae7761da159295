//! Python bindings. Thin wrappers over the core types: every numeric
//! result is produced by the same code paths the Rust tests verify, and
//! core errors surface as ValueError with the original message.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use steinlab_core::bayes::{
    bayes_r as core_bayes_r, generalized_bayes_estimate, minimaxity_certificate, BayesPriorSpec,
    RwTable,
};
use steinlab_core::config::ExperimentConfig;
use steinlab_core::error::Error;
use steinlab_core::estimator::{
    minimax_a_bound, minimax_a_bound_mc, EstimatorKind, EstimatorSpec, OrthantFamily,
};
use steinlab_core::model::{sample_joint, Atom, Family, MixingLaw, ModelSpec};
use steinlab_core::risk::{mc_risk as core_mc_risk, mc_risk_difference as core_mc_risk_difference};
use steinlab_core::shrink::ShrinkFn;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Location model for (X, U): a spherically symmetric joint density in
/// p observation and k residual coordinates.
#[pyclass(frozen)]
struct Model {
    spec: ModelSpec,
}

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (theta, sigma = 1.0, k = 0))]
    fn normal(theta: Vec<f64>, sigma: f64, k: usize) -> PyResult<Self> {
        Self::build(Family::Normal, theta, sigma, k)
    }

    #[staticmethod]
    #[pyo3(signature = (df, theta, sigma = 1.0, k = 0))]
    fn student_t(df: f64, theta: Vec<f64>, sigma: f64, k: usize) -> PyResult<Self> {
        Self::build(Family::StudentT { df }, theta, sigma, k)
    }

    /// Finite variance mixture of normals; `atoms` is a list of
    /// (variance, weight) pairs.
    #[staticmethod]
    #[pyo3(signature = (atoms, theta, sigma = 1.0, k = 0))]
    fn scale_mixture(atoms: Vec<(f64, f64)>, theta: Vec<f64>, sigma: f64, k: usize) -> PyResult<Self> {
        let atoms = atoms.into_iter().map(|(v, w)| Atom { v, w }).collect();
        Self::build(
            Family::ScaleMixture {
                mixing: MixingLaw::Atoms { atoms },
            },
            theta,
            sigma,
            k,
        )
    }

    #[getter]
    fn p(&self) -> usize {
        self.spec.p
    }

    #[getter]
    fn k(&self) -> usize {
        self.spec.k
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.spec.sigma
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.spec.theta.clone()
    }

    /// Per-coordinate variance of X, when the family has one.
    fn coordinate_variance(&self) -> Option<f64> {
        self.spec.coordinate_variance()
    }

    /// Q(t) = F(t)/f(t) for the joint radial law in dimension p + k.
    fn q(&self, t: f64) -> PyResult<f64> {
        self.spec.joint_radial_law().q(t).map_err(err)
    }

    /// Draw n replicates; returns (x_rows, u_rows).
    fn sample(&self, n: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let batch = sample_joint(&self.spec, n, seed).map_err(err)?;
        let xs = (0..n).map(|i| batch.row_x(i).to_vec()).collect();
        let us = (0..n).map(|i| batch.row_u(i).to_vec()).collect();
        Ok((xs, us))
    }

    fn __repr__(&self) -> String {
        format!(
            "Model({:?}, p={}, k={}, sigma={})",
            self.spec.family, self.spec.p, self.spec.k, self.spec.sigma
        )
    }
}

impl Model {
    fn build(family: Family, theta: Vec<f64>, sigma: f64, k: usize) -> PyResult<Self> {
        let spec = ModelSpec::new(family, theta, sigma, k);
        spec.validate().map_err(err)?;
        Ok(Model { spec })
    }
}

/// Location estimator delta(x) or delta(x, u).
#[pyclass(frozen)]
struct Estimator {
    spec: EstimatorSpec,
}

#[pymethods]
impl Estimator {
    #[staticmethod]
    fn identity() -> Self {
        Self::of(EstimatorKind::Identity, 1.0)
    }

    /// (1 - a sigma^2 / ||x||^2) x.
    #[staticmethod]
    #[pyo3(signature = (a, sigma = 1.0))]
    fn js_known(a: f64, sigma: f64) -> Self {
        Self::of(EstimatorKind::JsKnown { a }, sigma)
    }

    /// (1 - a ||u||^2 / ((k + 2) ||x||^2)) x.
    #[staticmethod]
    fn js_unknown(a: f64) -> Self {
        Self::of(EstimatorKind::JsUnknown { a }, 1.0)
    }

    /// (1 - a r(||x||^2/sigma^2) sigma^2 / ||x||^2) x with the rational
    /// shrinker r(t) = bound t / (1 + t).
    #[staticmethod]
    #[pyo3(signature = (a, bound, sigma = 1.0))]
    fn baranchik_known(a: f64, bound: f64, sigma: f64) -> Self {
        Self::of(
            EstimatorKind::BaranchikKnown {
                a,
                shrink: ShrinkFn::Rational { bound },
            },
            sigma,
        )
    }

    /// Unknown-scale variant driven by ||x||^2/||u||^2.
    #[staticmethod]
    fn baranchik_unknown(bound: f64) -> Self {
        Self::of(
            EstimatorKind::BaranchikUnknown {
                shrink: ShrinkFn::Rational { bound },
            },
            1.0,
        )
    }

    /// Positive-part orthant projection with per-face shrinkage
    /// r_s(t) = factor (s - 2)+.
    #[staticmethod]
    #[pyo3(signature = (factor, known_scale = false, sigma = 1.0))]
    fn orthant(factor: f64, known_scale: bool, sigma: f64) -> Self {
        Self::of(
            EstimatorKind::Orthant {
                family: OrthantFamily::ScaledJs { factor },
                known_scale,
            },
            sigma,
        )
    }

    #[pyo3(signature = (x, u = None))]
    fn estimate(&self, x: Vec<f64>, u: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
        let e = self.spec.estimate(&x, u.as_deref()).map_err(err)?;
        Ok(e.value)
    }

    fn __repr__(&self) -> String {
        format!("Estimator({:?}, sigma={})", self.spec.kind, self.spec.sigma)
    }
}

impl Estimator {
    fn of(kind: EstimatorKind, sigma: f64) -> Self {
        Estimator {
            spec: EstimatorSpec::with_sigma(kind, sigma),
        }
    }
}

/// Monte Carlo estimate of E ||delta - theta||^2.
#[pyclass(frozen, get_all)]
struct RiskResult {
    mean_loss: f64,
    std_error: f64,
    n: u64,
    skipped: u64,
}

#[pymethods]
impl RiskResult {
    fn __repr__(&self) -> String {
        format!(
            "RiskResult(mean_loss={}, std_error={}, n={}, skipped={})",
            self.mean_loss, self.std_error, self.n, self.skipped
        )
    }
}

/// Paired difference of risks, estimated on common random numbers.
#[pyclass(frozen, get_all)]
struct DifferenceResult {
    mean_difference: f64,
    std_error: f64,
    risk_a: f64,
    risk_b: f64,
    n: u64,
}

#[pymethods]
impl DifferenceResult {
    fn __repr__(&self) -> String {
        format!(
            "DifferenceResult(mean_difference={}, std_error={}, n={})",
            self.mean_difference, self.std_error, self.n
        )
    }
}

/// Clause-by-clause minimaxity report for a shrinkage prior.
#[pyclass(frozen, get_all)]
struct Certificate {
    certified: bool,
    clauses: Vec<(String, bool, String)>,
    shrink_limit: Option<f64>,
    threshold: f64,
}

#[pymethods]
impl Certificate {
    fn __repr__(&self) -> String {
        format!(
            "Certificate(certified={}, clauses={})",
            self.certified,
            self.clauses.len()
        )
    }
}

#[pyfunction]
fn mc_risk(model: &Model, estimator: &Estimator, n: u64, seed: u64) -> PyResult<RiskResult> {
    let r = core_mc_risk(&model.spec, &estimator.spec, n, seed).map_err(err)?;
    Ok(RiskResult {
        mean_loss: r.mean_loss,
        std_error: r.std_error,
        n: r.n,
        skipped: r.skipped,
    })
}

#[pyfunction]
fn mc_risk_difference(
    model: &Model,
    estimator_a: &Estimator,
    estimator_b: &Estimator,
    n: u64,
    seed: u64,
) -> PyResult<DifferenceResult> {
    let d = core_mc_risk_difference(&model.spec, &estimator_a.spec, &estimator_b.spec, n, seed)
        .map_err(err)?;
    Ok(DifferenceResult {
        mean_difference: d.mean_difference,
        std_error: d.std_error,
        risk_a: d.arm_a.mean_loss,
        risk_b: d.arm_b.mean_loss,
        n: d.n,
    })
}

/// Shrinkage factor r(w) of the generalized Bayes estimator under the
/// prior pi(theta, eta) proportional to eta^a ||theta||^(-b), evaluated
/// at w = ||x||^2/||u||^2.
#[pyfunction]
fn bayes_r(a: f64, b: f64, p: usize, k: usize, w: f64) -> PyResult<f64> {
    let prior = BayesPriorSpec::new(a, b, p, k).map_err(err)?;
    core_bayes_r(&prior, w).map_err(err)
}

/// Tabulate r(w) on a log grid; returns a list of (w, r, error_estimate).
#[pyfunction]
#[pyo3(signature = (a, b, p, k, w_min = 1e-3, w_max = 1e6, points = 200))]
fn rw_table(
    a: f64,
    b: f64,
    p: usize,
    k: usize,
    w_min: f64,
    w_max: f64,
    points: usize,
) -> PyResult<Vec<(f64, f64, f64)>> {
    if !(w_min > 0.0) || !(w_max > w_min) || points < 2 {
        return Err(PyValueError::new_err(
            "need 0 < w_min < w_max and at least 2 points",
        ));
    }
    let prior = BayesPriorSpec::new(a, b, p, k).map_err(err)?;
    let grid = RwTable::log_grid(w_min, w_max, points);
    let table = RwTable::build(&prior, &grid).map_err(err)?;
    Ok((0..table.w.len())
        .map(|i| (table.w[i], table.r[i], table.error_estimate[i]))
        .collect())
}

/// The generalized Bayes point estimate (1 - r(W)/W) x with
/// W = ||x||^2/||u||^2.
#[pyfunction]
fn bayes_estimate(a: f64, b: f64, x: Vec<f64>, u: Vec<f64>) -> PyResult<Vec<f64>> {
    let prior = BayesPriorSpec::new(a, b, x.len(), u.len()).map_err(err)?;
    let e = generalized_bayes_estimate(&prior, &x, &u).map_err(err)?;
    Ok(e.value)
}

#[pyfunction]
fn certify_minimax(a: f64, b: f64, p: usize, k: usize) -> PyResult<Certificate> {
    let prior = BayesPriorSpec::new(a, b, p, k).map_err(err)?;
    let cert = minimaxity_certificate(&prior).map_err(err)?;
    Ok(Certificate {
        certified: cert.certified,
        clauses: cert
            .clauses
            .into_iter()
            .map(|c| (c.name, c.satisfied, c.detail))
            .collect(),
        shrink_limit: cert.shrink_limit,
        threshold: cert.threshold,
    })
}

/// Largest uniform shrinkage constant a with x(1 - a sigma^2/||x||^2)
/// minimax, i.e. 1/(p E_0[1/||X||^2]); exact for the normal family,
/// Monte Carlo otherwise. Returns (value, std_error_or_None).
#[pyfunction]
#[pyo3(signature = (model, n = 1_000_000, seed = 0, force_monte_carlo = false))]
fn minimax_bound(
    model: &Model,
    n: usize,
    seed: u64,
    force_monte_carlo: bool,
) -> PyResult<(f64, Option<f64>)> {
    let b = if force_monte_carlo {
        minimax_a_bound_mc(&model.spec, n, seed)
    } else {
        minimax_a_bound(&model.spec, n, seed)
    }
    .map_err(err)?;
    Ok((b.value, b.se))
}

/// Run a full experiment config (TOML text); returns (pass, failures).
/// Result tables land in the directory the config names.
#[pyfunction]
fn run_config(text: &str) -> PyResult<(bool, Vec<String>)> {
    let cfg = ExperimentConfig::from_toml_str(text).map_err(err)?;
    let manifest = steinlab_core::config::run(&cfg).map_err(err)?;
    Ok((manifest.pass, manifest.failures))
}

#[pymodule]
fn steinlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Estimator>()?;
    m.add_class::<RiskResult>()?;
    m.add_class::<DifferenceResult>()?;
    m.add_class::<Certificate>()?;
    m.add_function(wrap_pyfunction!(mc_risk, m)?)?;
    m.add_function(wrap_pyfunction!(mc_risk_difference, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_r, m)?)?;
    m.add_function(wrap_pyfunction!(rw_table, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(certify_minimax, m)?)?;
    m.add_function(wrap_pyfunction!(minimax_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
