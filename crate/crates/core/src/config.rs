//! Declarative experiment configs and the runner that executes them.
//!
//! A config names its models and estimators once, then lists checks that
//! reference them. The runner validates everything up front (reporting
//! every violation, not just the first), executes the checks inside one
//! thread pool, and persists flat result tables whose bytes depend only
//! on the config and seed, never on timing or thread count.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayes::{minimaxity_certificate, BayesPriorSpec, RwTable, MONOTONE_TOL};
use crate::error::{Error, Result};
use crate::estimator::{minimax_a_bound, minimax_a_bound_mc, EstimatorSpec, OrthantFamily};
use crate::f_independence::verify_f_independence;
use crate::field::{FieldKind, VectorField};
use crate::identities::{
    ball_average_monotonicity_check, orthant_domination_check, q_identity_check,
    sphere_ball_check, stein_identity_check, unknown_scale_cross_term_check,
};
use crate::model::{sample_joint, Family, ModelSpec};
use crate::report::{
    write_json, write_records_json, write_rows_csv, BallAveragePlotRow, CheckRecord,
    OrthantPlotRow, RiskSweepRow, RwTableRow,
};
use crate::risk::{mc_risk, mc_risk_difference, unbiased_risk_difference};
use crate::rng::{replicate_stream, uniform_on_sphere};
use crate::shrink::ShrinkFn;

/// A model with a config-local name that checks refer to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedModel {
    pub name: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
}

/// An estimator with a config-local name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimator {
    pub name: String,
    #[serde(flatten)]
    pub spec: EstimatorSpec,
}

/// Direction generator for norm-based theta grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DirectionSpec {
    /// A fixed direction drawn once from a reserved stream of this seed.
    Random {
        #[serde(default)]
        seed: u64,
    },
    /// The first coordinate axis.
    Axis,
    /// The diagonal direction (1, ..., 1)/sqrt(p).
    Ones,
    /// An explicit direction, normalized before use.
    Explicit { direction: Vec<f64> },
}

/// Theta grid given as norms along a single direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub norms: Vec<f64>,
    pub direction: DirectionSpec,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid {
            norms: vec![0.0, 1.0, 2.0, 5.0, 10.0, 100.0],
            direction: DirectionSpec::Random { seed: 0 },
        }
    }
}

impl ThetaGrid {
    /// Expands to (requested norm, theta vector) pairs in dimension p.
    pub fn materialize(&self, p: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        if p == 0 {
            return Err(Error::ParameterDomain("p must be positive".into()));
        }
        let direction = match &self.direction {
            DirectionSpec::Random { seed } => {
                // Stream index u64::MAX is reserved for grid directions;
                // replicate draws use indices 0..n.
                let mut rng = replicate_stream(*seed, u64::MAX);
                uniform_on_sphere(&mut rng, &vec![0.0; p], 1.0)
            }
            DirectionSpec::Axis => {
                let mut d = vec![0.0; p];
                d[0] = 1.0;
                d
            }
            DirectionSpec::Ones => vec![1.0 / (p as f64).sqrt(); p],
            DirectionSpec::Explicit { direction } => {
                if direction.len() != p {
                    return Err(Error::DimensionMismatch(format!(
                        "direction has dim {}, requested p = {p}",
                        direction.len()
                    )));
                }
                let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
                if !(norm > 0.0) || !norm.is_finite() {
                    return Err(Error::ParameterDomain(
                        "explicit direction must be nonzero and finite".into(),
                    ));
                }
                direction.iter().map(|d| d / norm).collect()
            }
        };
        Ok(self
            .norms
            .iter()
            .map(|&norm| (norm, direction.iter().map(|d| norm * d).collect()))
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub dir: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: "steinlab_out".into(),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
        }
    }
}

/// One named operation with its parameters. Model and estimator fields
/// are names declared in the config; vector fields, orthant families,
/// and priors are given inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", rename_all = "snake_case")]
pub enum CheckSpec {
    McRisk {
        model: String,
        estimator: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    McRiskDifference {
        model: String,
        estimator_a: String,
        estimator_b: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    /// Paired risk difference against a baseline over the theta grid.
    RiskSweep {
        model: String,
        estimator: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        baseline: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    UnbiasedRiskDifference {
        model: String,
        field: VectorField,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    SteinIdentity {
        model: String,
        field: VectorField,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    QIdentity {
        model: String,
        field: VectorField,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    SphereBall {
        theta: Vec<f64>,
        radius: f64,
        field: VectorField,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    UnknownScaleCrossTerm {
        model: String,
        field: VectorField,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    OrthantDomination {
        model: String,
        family: OrthantFamily,
        /// Grid points m * (1, ..., 1); the default is {0, 0.5, 2, 10}.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ones_multiples: Option<Vec<f64>>,
        /// Explicit grid points, overriding the multiples.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        thetas: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    BallAverage {
        theta: Vec<f64>,
        radii: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    BayesRTable {
        a_prior: f64,
        b_prior: f64,
        p: usize,
        k: usize,
        #[serde(default = "default_w_min")]
        w_min: f64,
        #[serde(default = "default_w_max")]
        w_max: f64,
        #[serde(default = "default_w_points")]
        points: usize,
    },
    CertifyMinimax {
        a_prior: f64,
        b_prior: f64,
        p: usize,
        k: usize,
    },
    MinimaxBound {
        model: String,
        /// Also run the Monte Carlo path and require 3 SE agreement.
        #[serde(default)]
        mc: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<u64>,
    },
    FIndependence {
        a_prior: f64,
        b_prior: f64,
        x: Vec<f64>,
        u: Vec<f64>,
        families: Vec<Family>,
    },
}

fn default_w_min() -> f64 {
    1e-3
}
fn default_w_max() -> f64 {
    1e6
}
fn default_w_points() -> usize {
    200
}

pub const DEFAULT_ORTHANT_MULTIPLES: [f64; 4] = [0.0, 0.5, 2.0, 10.0];

impl CheckSpec {
    pub fn operation(&self) -> &'static str {
        match self {
            CheckSpec::McRisk { .. } => "mc_risk",
            CheckSpec::McRiskDifference { .. } => "mc_risk_difference",
            CheckSpec::RiskSweep { .. } => "risk_sweep",
            CheckSpec::UnbiasedRiskDifference { .. } => "unbiased_risk_difference",
            CheckSpec::SteinIdentity { .. } => "stein_identity",
            CheckSpec::QIdentity { .. } => "q_identity",
            CheckSpec::SphereBall { .. } => "sphere_ball",
            CheckSpec::UnknownScaleCrossTerm { .. } => "unknown_scale_cross_term",
            CheckSpec::OrthantDomination { .. } => "orthant_domination",
            CheckSpec::BallAverage { .. } => "ball_average",
            CheckSpec::BayesRTable { .. } => "bayes_r_table",
            CheckSpec::CertifyMinimax { .. } => "certify_minimax",
            CheckSpec::MinimaxBound { .. } => "minimax_bound",
            CheckSpec::FIndependence { .. } => "f_independence",
        }
    }
}

/// A full experiment: shared replicate count and seed, named models and
/// estimators, the checks to run, and where results go.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub models: Vec<NamedModel>,
    #[serde(default)]
    pub estimators: Vec<NamedEstimator>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub theta_grid: ThetaGrid,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn find_model(&self, name: &str) -> Option<&NamedModel> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn find_estimator(&self, name: &str) -> Option<&NamedEstimator> {
        self.estimators.iter().find(|e| e.name == name)
    }

    /// Checks everything checkable without running: name resolution,
    /// uniqueness, model/estimator validity, dimension compatibility,
    /// and per-check parameter domains. All violations are reported.
    pub fn validate(&self) -> Result<()> {
        let mut v: Vec<String> = Vec::new();
        if self.n == 0 {
            v.push("n must be at least 1".into());
        }
        let mut seen = BTreeSet::new();
        for m in &self.models {
            if !seen.insert(m.name.clone()) {
                v.push(format!("duplicate model name '{}'", m.name));
            }
            if let Err(e) = m.spec.validate() {
                v.push(format!("model '{}': {e}", m.name));
            }
        }
        let mut seen = BTreeSet::new();
        for e in &self.estimators {
            if !seen.insert(e.name.clone()) {
                v.push(format!("duplicate estimator name '{}'", e.name));
            }
        }
        if self.theta_grid.norms.is_empty() {
            v.push("theta_grid.norms is empty".into());
        }
        if self
            .theta_grid
            .norms
            .iter()
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            v.push("theta_grid.norms must be finite and nonnegative".into());
        }
        if let DirectionSpec::Explicit { direction } = &self.theta_grid.direction {
            let norm = direction.iter().map(|d| d * d).sum::<f64>();
            if !(norm > 0.0) || !norm.is_finite() {
                v.push("theta_grid.direction must be nonzero and finite".into());
            }
        }
        if self.output.formats.is_empty() {
            v.push("output.formats is empty".into());
        }
        if self.output.dir.is_empty() {
            v.push("output.dir is empty".into());
        }

        for (idx, check) in self.checks.iter().enumerate() {
            let ctx = format!("check {} ({})", idx + 1, check.operation());
            let mut model_of = |name: &String| -> Option<&NamedModel> {
                let found = self.find_model(name);
                if found.is_none() {
                    v.push(format!("{ctx}: unknown model '{name}'"));
                }
                found
            };
            match check {
                CheckSpec::McRisk {
                    model, estimator, ..
                } => {
                    let m = model_of(model);
                    self.check_estimator_ref(&mut v, &ctx, estimator, m);
                }
                CheckSpec::McRiskDifference {
                    model,
                    estimator_a,
                    estimator_b,
                    ..
                } => {
                    let m = model_of(model);
                    self.check_estimator_ref(&mut v, &ctx, estimator_a, m);
                    self.check_estimator_ref(&mut v, &ctx, estimator_b, m);
                }
                CheckSpec::RiskSweep {
                    model,
                    estimator,
                    baseline,
                    ..
                } => {
                    let m = model_of(model);
                    self.check_estimator_ref(&mut v, &ctx, estimator, m);
                    if let Some(b) = baseline {
                        self.check_estimator_ref(&mut v, &ctx, b, m);
                    }
                }
                CheckSpec::UnbiasedRiskDifference { model, field, .. } => {
                    if let Some(m) = model_of(model) {
                        if m.spec.k < 1 {
                            v.push(format!("{ctx}: model '{model}' has no residual (k = 0)"));
                        }
                        if field.u_dependent() {
                            v.push(format!("{ctx}: field must not depend on the residual"));
                        }
                        probe_field(&mut v, &ctx, field, m.spec.p);
                    }
                }
                CheckSpec::SteinIdentity { model, field, .. } => {
                    if let Some(m) = model_of(model) {
                        if !matches!(m.spec.family, Family::Normal) {
                            v.push(format!("{ctx}: model '{model}' must be normal"));
                        }
                        probe_field(&mut v, &ctx, field, m.spec.p);
                    }
                }
                CheckSpec::QIdentity { model, field, .. } => {
                    if let Some(m) = model_of(model) {
                        if m.spec.k != 0 {
                            v.push(format!("{ctx}: model '{model}' must have k = 0"));
                        }
                        probe_field(&mut v, &ctx, field, m.spec.p);
                    }
                }
                CheckSpec::SphereBall {
                    theta,
                    radius,
                    field,
                    ..
                } => {
                    if theta.is_empty() {
                        v.push(format!("{ctx}: theta is empty"));
                    } else {
                        probe_field(&mut v, &ctx, field, theta.len());
                    }
                    if !(*radius > 0.0) || !radius.is_finite() {
                        v.push(format!("{ctx}: radius must be finite and positive"));
                    }
                }
                CheckSpec::UnknownScaleCrossTerm { model, field, .. } => {
                    if let Some(m) = model_of(model) {
                        if m.spec.k < 1 {
                            v.push(format!("{ctx}: model '{model}' has no residual (k = 0)"));
                        }
                        probe_field(&mut v, &ctx, field, m.spec.p);
                    }
                }
                CheckSpec::OrthantDomination {
                    model,
                    family,
                    ones_multiples,
                    thetas,
                    ..
                } => {
                    let m = model_of(model);
                    if let Err(e) = family.validate() {
                        v.push(format!("{ctx}: {e}"));
                    }
                    if let Some(ms) = ones_multiples {
                        if ms.iter().any(|x| !x.is_finite() || *x < 0.0) {
                            v.push(format!("{ctx}: ones_multiples must be nonnegative"));
                        }
                    }
                    if let (Some(m), Some(grid)) = (m, thetas) {
                        for t in grid {
                            if t.len() != m.spec.p {
                                v.push(format!(
                                    "{ctx}: grid theta has dim {}, model p = {}",
                                    t.len(),
                                    m.spec.p
                                ));
                            }
                            if t.iter().any(|x| !(*x >= 0.0)) {
                                v.push(format!("{ctx}: grid thetas must be nonnegative"));
                            }
                        }
                    }
                }
                CheckSpec::BallAverage { theta, radii, .. } => {
                    if theta.len() < 3 {
                        v.push(format!("{ctx}: theta needs dimension at least 3"));
                    }
                    if radii.is_empty()
                        || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite())
                        || radii.windows(2).any(|w| w[1] <= w[0])
                    {
                        v.push(format!(
                            "{ctx}: radii must be positive and strictly increasing"
                        ));
                    }
                }
                CheckSpec::BayesRTable {
                    a_prior,
                    b_prior,
                    p,
                    k,
                    w_min,
                    w_max,
                    points,
                } => {
                    if let Err(e) = BayesPriorSpec::new(*a_prior, *b_prior, *p, *k) {
                        v.push(format!("{ctx}: {e}"));
                    }
                    if !(*w_min > 0.0) || !(*w_max > *w_min) || *points < 2 {
                        v.push(format!(
                            "{ctx}: need 0 < w_min < w_max and at least 2 points"
                        ));
                    }
                }
                CheckSpec::CertifyMinimax {
                    a_prior,
                    b_prior,
                    p,
                    k,
                } => {
                    if let Err(e) = BayesPriorSpec::new(*a_prior, *b_prior, *p, *k) {
                        v.push(format!("{ctx}: {e}"));
                    }
                }
                CheckSpec::MinimaxBound { model, .. } => {
                    if let Some(m) = model_of(model) {
                        if m.spec.p < 3 {
                            v.push(format!("{ctx}: needs p >= 3"));
                        }
                    }
                }
                CheckSpec::FIndependence {
                    a_prior,
                    b_prior,
                    x,
                    u,
                    families,
                } => {
                    if !(1..=2).contains(&x.len()) || !(1..=2).contains(&u.len()) {
                        v.push(format!(
                            "{ctx}: direct posterior integration supports p, k in {{1, 2}}"
                        ));
                    } else if let Err(e) = BayesPriorSpec::new(*a_prior, *b_prior, x.len(), u.len())
                    {
                        v.push(format!("{ctx}: {e}"));
                    }
                    if families.is_empty() {
                        v.push(format!("{ctx}: families list is empty"));
                    }
                    for f in families {
                        if let Err(e) = f.validate() {
                            v.push(format!("{ctx}: {e}"));
                        }
                    }
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(v))
        }
    }

    fn check_estimator_ref(
        &self,
        v: &mut Vec<String>,
        ctx: &str,
        name: &str,
        model: Option<&NamedModel>,
    ) {
        match self.find_estimator(name) {
            None => v.push(format!("{ctx}: unknown estimator '{name}'")),
            Some(e) => {
                if let Some(m) = model {
                    if let Err(err) = e.spec.validate(m.spec.p, m.spec.k) {
                        v.push(format!(
                            "{ctx}: estimator '{name}' with model '{}': {err}",
                            m.name
                        ));
                    }
                }
            }
        }
    }
}

/// Evaluates the field once at a generic point to surface dimension
/// mismatches at validation time rather than as mass skips at run time.
fn probe_field(v: &mut Vec<String>, ctx: &str, field: &VectorField, p: usize) {
    let x = vec![1.0; p];
    if let Err(e) = field.eval(&x, Some(1.0)) {
        v.push(format!("{ctx}: field rejects dimension {p}: {e}"));
    }
}

fn shrink_label(s: &ShrinkFn) -> String {
    match s {
        ShrinkFn::Constant { a } => format!("r={a}"),
        ShrinkFn::SaturatingLinear { slope, bound } => {
            format!("saturating(slope={slope},bound={bound})")
        }
        ShrinkFn::Rational { bound } => format!("rational(bound={bound})"),
    }
}

fn field_label(f: &VectorField) -> String {
    match &f.kind {
        FieldKind::Constant { c } => format!("constant(dim={})", c.len()),
        FieldKind::Linear { a } => format!("linear(dim={})", a.len()),
        FieldKind::Js { a } => format!("js(a={a})"),
        FieldKind::Baranchik { shrink } => format!("baranchik({})", shrink_label(shrink)),
        FieldKind::ResidualBaranchik { shrink, k } => {
            format!("residual_baranchik({},k={k})", shrink_label(shrink))
        }
    }
}

fn family_label(f: &OrthantFamily) -> String {
    match f {
        OrthantFamily::ScaledJs { factor } => format!("scaled_js(factor={factor})"),
        OrthantFamily::RationalPerFace { factor } => {
            format!("rational_per_face(factor={factor})")
        }
    }
}

fn prior_label(p: &BayesPriorSpec) -> String {
    format!(
        "generalized_bayes(a={},b={},p={},k={})",
        p.a_prior, p.b_prior, p.p, p.k
    )
}

/// Wall-clock seconds for one check. Lives only in the manifest, which
/// is excluded from the byte-determinism guarantee.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckTiming {
    pub check: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// Files written under the output directory, results tables included.
    pub outputs: Vec<String>,
    pub timings: Vec<CheckTiming>,
    pub pass: bool,
    /// Human-readable descriptions of checks that errored at run time.
    pub failures: Vec<String>,
}

struct CheckOutput {
    records: Vec<CheckRecord>,
    files: Vec<String>,
}

/// Validates, executes every check, writes result tables and plot files,
/// and returns the manifest. Failing checks mark their records and the
/// manifest but do not abort the run.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    Ok(run_collect(config)?.0)
}

/// Like [`run`], but also hands back the individual check records for
/// callers that present them directly.
pub fn run_collect(config: &ExperimentConfig) -> Result<(RunManifest, Vec<CheckRecord>)> {
    config.validate()?;
    let canonical = config.to_toml_string()?;
    let digest = Sha256::digest(canonical.as_bytes());
    let config_hash: String = digest.iter().map(|b| format!("{b:02x}")).collect();

    let out_dir = match std::env::var_os("STEINLAB_OUTPUT_DIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(&config.output.dir),
    };
    std::fs::create_dir_all(&out_dir)?;

    let body = || execute_all(config, &out_dir);
    let (records, mut outputs, timings, failures) = match config.threads {
        Some(t) if t > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidMonteCarlo(e.to_string()))?;
            pool.install(body)?
        }
        _ => body()?,
    };

    if !records.is_empty() {
        if config.output.formats.contains(&OutputFormat::Csv) {
            write_rows_csv(&out_dir.join("results.csv"), &records)?;
            outputs.push("results.csv".into());
        }
        if config.output.formats.contains(&OutputFormat::Json) {
            write_records_json(&out_dir.join("results.json"), &records)?;
            outputs.push("results.json".into());
        }
    }

    let manifest = RunManifest {
        config_hash,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        outputs,
        timings,
        pass: records.iter().all(|r| r.pass),
        failures,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok((manifest, records))
}

type Executed = (Vec<CheckRecord>, Vec<String>, Vec<CheckTiming>, Vec<String>);

fn execute_all(config: &ExperimentConfig, out_dir: &Path) -> Result<Executed> {
    let mut records = Vec::new();
    let mut outputs = Vec::new();
    let mut timings = Vec::new();
    let mut failures = Vec::new();
    for (idx, check) in config.checks.iter().enumerate() {
        let tag = format!("{:02}_{}", idx + 1, check.operation());
        let start = Instant::now();
        match execute_check(config, check, &tag, out_dir) {
            Ok(out) => {
                records.extend(out.records);
                outputs.extend(out.files);
            }
            Err(e) => {
                failures.push(format!("{tag}: {e}"));
                records.push(CheckRecord {
                    operation: check.operation().into(),
                    model: "-".into(),
                    estimator: "-".into(),
                    n: 0,
                    seed: config.seed,
                    mean: None,
                    se: None,
                    pass: false,
                });
            }
        }
        timings.push(CheckTiming {
            check: tag,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((records, outputs, timings, failures))
}

fn execute_check(
    config: &ExperimentConfig,
    check: &CheckSpec,
    tag: &str,
    out_dir: &Path,
) -> Result<CheckOutput> {
    let seed = config.seed;
    let pick = |n: &Option<u64>| n.unwrap_or(config.n);
    // Validation guarantees these resolve.
    let model = |name: &str| &config.find_model(name).expect("validated").spec;
    let estimator = |name: &str| &config.find_estimator(name).expect("validated").spec;

    let mut records = Vec::new();
    let mut files = Vec::new();
    match check {
        CheckSpec::McRisk {
            model: m,
            estimator: e,
            n,
        } => {
            let n = pick(n);
            let r = mc_risk(model(m), estimator(e), n, seed)?;
            records.push(CheckRecord {
                operation: "mc_risk".into(),
                model: m.clone(),
                estimator: e.clone(),
                n,
                seed,
                mean: Some(r.mean_loss),
                se: Some(r.std_error),
                pass: true,
            });
        }
        CheckSpec::McRiskDifference {
            model: m,
            estimator_a,
            estimator_b,
            n,
        } => {
            let n = pick(n);
            let r = mc_risk_difference(model(m), estimator(estimator_a), estimator(estimator_b), n, seed)?;
            records.push(CheckRecord {
                operation: "mc_risk_difference".into(),
                model: m.clone(),
                estimator: format!("{estimator_a} vs {estimator_b}"),
                n,
                seed,
                mean: Some(r.mean_difference),
                se: Some(r.std_error),
                pass: true,
            });
        }
        CheckSpec::RiskSweep {
            model: m,
            estimator: e,
            baseline,
            n,
        } => {
            let n = pick(n);
            let spec = model(m);
            let est = estimator(e);
            let identity = EstimatorSpec::new(crate::estimator::EstimatorKind::Identity);
            let (base_name, base) = match baseline {
                Some(b) => (b.as_str(), estimator(b)),
                None => ("identity", &identity),
            };
            let grid = config.theta_grid.materialize(spec.p)?;
            let mut rows = Vec::with_capacity(grid.len());
            for (norm, theta) in grid {
                let mut point = spec.clone();
                point.theta = theta;
                let rep = mc_risk_difference(&point, est, base, n, seed)?;
                rows.push(RiskSweepRow {
                    theta_norm: norm,
                    risk_estimator: rep.arm_a.mean_loss,
                    risk_baseline: rep.arm_b.mean_loss,
                    mean_difference: rep.mean_difference,
                    std_error: rep.std_error,
                });
                records.push(CheckRecord {
                    operation: "risk_sweep".into(),
                    model: format!("{m}[|theta|={norm}]"),
                    estimator: format!("{e} vs {base_name}"),
                    n,
                    seed,
                    mean: Some(rep.mean_difference),
                    se: Some(rep.std_error),
                    pass: true,
                });
            }
            let file = format!("{tag}.csv");
            write_rows_csv(&out_dir.join(&file), &rows)?;
            files.push(file);
        }
        CheckSpec::UnbiasedRiskDifference {
            model: m,
            field,
            n,
        } => {
            let n = pick(n);
            let batch = sample_joint(model(m), n as usize, seed)?;
            let stat = unbiased_risk_difference(&batch, field)?;
            records.push(CheckRecord {
                operation: "unbiased_risk_difference".into(),
                model: m.clone(),
                estimator: field_label(field),
                n,
                seed,
                mean: Some(stat.mean),
                se: Some(stat.se),
                pass: true,
            });
        }
        CheckSpec::SteinIdentity { model: m, field, n } => {
            let n = pick(n);
            let rep = stein_identity_check(model(m), field, n, seed)?;
            records.push(discrepancy_record(&rep.operation, m, field, n, seed, rep.difference, rep.std_error, rep.pass));
        }
        CheckSpec::QIdentity { model: m, field, n } => {
            let n = pick(n);
            let rep = q_identity_check(model(m), field, n, seed)?;
            records.push(discrepancy_record(&rep.operation, m, field, n, seed, rep.difference, rep.std_error, rep.pass));
        }
        CheckSpec::SphereBall {
            theta,
            radius,
            field,
            n,
        } => {
            let n = pick(n);
            let rep = sphere_ball_check(theta, *radius, field, n, seed)?;
            let label = format!("p={},radius={radius}", theta.len());
            records.push(discrepancy_record(&rep.operation, &label, field, n, seed, rep.difference, rep.std_error, rep.pass));
        }
        CheckSpec::UnknownScaleCrossTerm { model: m, field, n } => {
            let n = pick(n);
            let rep = unknown_scale_cross_term_check(model(m), field, n, seed)?;
            for part in [&rep.cross_term, &rep.squared_norm] {
                records.push(discrepancy_record(&part.operation, m, field, n, seed, part.difference, part.std_error, part.pass));
            }
        }
        CheckSpec::OrthantDomination {
            model: m,
            family,
            ones_multiples,
            thetas,
            n,
        } => {
            let n = pick(n);
            let spec = model(m);
            let grid: Vec<Vec<f64>> = match (thetas, ones_multiples) {
                (Some(t), _) => t.clone(),
                (None, Some(ms)) => ms.iter().map(|&c| vec![c; spec.p]).collect(),
                (None, None) => DEFAULT_ORTHANT_MULTIPLES
                    .iter()
                    .map(|&c| vec![c; spec.p])
                    .collect(),
            };
            let rep = orthant_domination_check(spec, family, n, seed, &grid)?;
            let mut rows = Vec::with_capacity(rep.rows.len());
            for row in &rep.rows {
                rows.push(OrthantPlotRow {
                    theta_norm: row.theta_norm,
                    mean_difference: row.mean_difference,
                    std_error: row.std_error,
                    risk_shrunk: row.risk_shrunk,
                    risk_projection: row.risk_projection,
                    pass: row.pass,
                });
                records.push(CheckRecord {
                    operation: "orthant_domination".into(),
                    model: format!("{m}[|theta|={}]", row.theta_norm),
                    estimator: family_label(family),
                    n,
                    seed,
                    mean: Some(row.mean_difference),
                    se: Some(row.std_error),
                    pass: row.pass,
                });
            }
            let file = format!("{tag}.csv");
            write_rows_csv(&out_dir.join(&file), &rows)?;
            files.push(file);
        }
        CheckSpec::BallAverage { theta, radii, n } => {
            let n = pick(n);
            let rep = ball_average_monotonicity_check(theta, radii, n, seed)?;
            let rows: Vec<BallAveragePlotRow> = rep
                .rows
                .iter()
                .map(|r| BallAveragePlotRow {
                    radius: r.radius,
                    value: r.value,
                    std_error: r.std_error,
                })
                .collect();
            let worst = rep
                .steps
                .iter()
                .max_by(|a, b| a.difference.total_cmp(&b.difference));
            records.push(CheckRecord {
                operation: "ball_average".into(),
                model: format!("p={}", theta.len()),
                estimator: "inverse_square".into(),
                n,
                seed,
                mean: worst.map(|s| s.difference),
                se: worst.map(|s| s.std_error),
                pass: rep.pass,
            });
            let file = format!("{tag}.csv");
            write_rows_csv(&out_dir.join(&file), &rows)?;
            files.push(file);
        }
        CheckSpec::BayesRTable {
            a_prior,
            b_prior,
            p,
            k,
            w_min,
            w_max,
            points,
        } => {
            let prior = BayesPriorSpec::new(*a_prior, *b_prior, *p, *k)?;
            let grid = RwTable::log_grid(*w_min, *w_max, *points);
            let table = RwTable::build(&prior, &grid)?;
            let rows: Vec<RwTableRow> = (0..table.w.len())
                .map(|i| RwTableRow {
                    w: table.w[i],
                    r: table.r[i],
                    error_estimate: table.error_estimate[i],
                })
                .collect();
            let bound_ok = match prior.shrink_bound() {
                Ok(b) => table.max_r() <= b + 1e-8,
                Err(_) => false,
            };
            let pass = table.monotone_violation() <= MONOTONE_TOL && bound_ok;
            records.push(CheckRecord {
                operation: "bayes_r_table".into(),
                model: "-".into(),
                estimator: prior_label(&prior),
                n: *points as u64,
                seed,
                mean: Some(table.max_r()),
                se: table
                    .error_estimate
                    .iter()
                    .cloned()
                    .max_by(f64::total_cmp),
                pass,
            });
            let file = format!("{tag}.csv");
            write_rows_csv(&out_dir.join(&file), &rows)?;
            files.push(file);
        }
        CheckSpec::CertifyMinimax {
            a_prior,
            b_prior,
            p,
            k,
        } => {
            let prior = BayesPriorSpec::new(*a_prior, *b_prior, *p, *k)?;
            let cert = minimaxity_certificate(&prior)?;
            records.push(CheckRecord {
                operation: "certify_minimax".into(),
                model: "-".into(),
                estimator: prior_label(&prior),
                n: 0,
                seed,
                mean: cert.shrink_limit,
                se: None,
                pass: cert.certified,
            });
            let file = format!("{tag}.json");
            write_json(&out_dir.join(&file), &cert)?;
            files.push(file);
        }
        CheckSpec::MinimaxBound { model: m, mc, n } => {
            let n = pick(n);
            let bound = minimax_a_bound(model(m), n as usize, seed)?;
            let (pass, se) = if *mc && bound.analytic {
                let mc_bound = minimax_a_bound_mc(model(m), n as usize, seed)?;
                let se = mc_bound.se.unwrap_or(0.0);
                ((bound.value - mc_bound.value).abs() <= 3.0 * se, Some(se))
            } else {
                (true, bound.se)
            };
            records.push(CheckRecord {
                operation: "minimax_bound".into(),
                model: m.clone(),
                estimator: "-".into(),
                n,
                seed,
                mean: Some(bound.value),
                se,
                pass,
            });
        }
        CheckSpec::FIndependence {
            a_prior,
            b_prior,
            x,
            u,
            families,
        } => {
            let prior = BayesPriorSpec::new(*a_prior, *b_prior, x.len(), u.len())?;
            let rep = verify_f_independence(&prior, x, u, families)?;
            records.push(CheckRecord {
                operation: "f_independence".into(),
                model: format!("p={},k={}", x.len(), u.len()),
                estimator: prior_label(&prior),
                n: 0,
                seed,
                mean: Some(rep.max_cross_family.max(rep.max_vs_closed_form)),
                se: None,
                pass: rep.pass,
            });
            let file = format!("{tag}.json");
            write_json(&out_dir.join(&file), &rep)?;
            files.push(file);
        }
    }
    Ok(CheckOutput { records, files })
}

#[allow(clippy::too_many_arguments)]
fn discrepancy_record(
    operation: &str,
    model: &str,
    field: &VectorField,
    n: u64,
    seed: u64,
    difference: f64,
    std_error: f64,
    pass: bool,
) -> CheckRecord {
    CheckRecord {
        operation: operation.into(),
        model: model.into(),
        estimator: field_label(field),
        n,
        seed,
        mean: Some(difference),
        se: Some(std_error),
        pass,
    }
}
