//! Command-line front end. Every subcommand builds or rewrites an
//! experiment config and hands it to the library runner, so the CLI adds
//! orchestration and presentation only; all numerics live in the core
//! crate. Exit codes: 0 all checks passed, 1 a check failed its
//! criterion, 2 usage or config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steinlab_core::bayes::{minimaxity_certificate, BayesPriorSpec, RwTable, MONOTONE_TOL};
use steinlab_core::config::{run_collect, CheckSpec, ExperimentConfig};
use steinlab_core::error::{Error, Result};
use steinlab_core::estimator::OrthantFamily;
use steinlab_core::field::VectorField;
use steinlab_core::model::Family;
use steinlab_core::report::CheckRecord;
use steinlab_core::shrink::ShrinkFn;

#[derive(Parser)]
#[command(
    name = "steinlab",
    version,
    about = "Monte Carlo risk laboratory for spherical shrinkage estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replicate count.
    #[arg(long)]
    n: Option<u64>,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldChoice {
    /// g(x) = -a x / ||x||^2.
    Js,
    /// g(x) = -r(||x||^2) x / ||x||^2 with r(t) = bound * t / (1 + t).
    Baranchik,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check declared in a config file.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Estimate one estimator's risk under one model.
    SimulateRisk {
        #[command(flatten)]
        common: CommonArgs,
        /// Model name from the config.
        #[arg(long)]
        model: String,
        /// Estimator name from the config.
        #[arg(long)]
        estimator: String,
    },
    /// Paired risk comparison against a baseline across the theta grid.
    RiskSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: String,
        #[arg(long)]
        estimator: String,
        /// Baseline estimator name (default: the unshrunk estimator).
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Verify the cross-term identities for a model and vector field.
    VerifyIdentities {
        #[command(flatten)]
        common: CommonArgs,
        /// Model names to verify (default: every model in the config).
        #[arg(long)]
        model: Vec<String>,
        #[arg(long, value_enum, default_value = "js")]
        field: FieldChoice,
        /// Shrinkage constant for the js field (default p - 2).
        #[arg(long)]
        shrink_a: Option<f64>,
        /// Bound for the baranchik field's rational shrinker.
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
    },
    /// Tabulate the generalized Bayes shrinkage factor r(w).
    BayesRTable {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1e-3)]
        w_min: f64,
        #[arg(long, default_value_t = 1e6)]
        w_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Also write the table to this CSV file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the minimaxity clauses for a shrinkage prior.
    CertifyMinimax {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
    },
    /// Compare orthant shrinkage against plain positive-part projection.
    OrthantSweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: String,
        /// Shrinkage factor on the (s - 2)+ scale.
        #[arg(long, default_value_t = 1.0)]
        factor: f64,
        /// Use the rational per-face shrinker instead of the linear one.
        #[arg(long)]
        rational: bool,
        /// Grid points m * (1, ..., 1).
        #[arg(long, value_delimiter = ',')]
        multiples: Option<Vec<f64>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConfigValidation(_)
        | Error::ConfigParse(_)
        | Error::ParameterDomain(_)
        | Error::DimensionMismatch(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn load(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    if let Some(out) = &common.output {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> Result<bool> {
    let (manifest, records) = run_collect(cfg)?;
    print_records(&records);
    for failure in &manifest.failures {
        eprintln!("check error: {failure}");
    }
    eprintln!(
        "{} check record(s), outputs in place; overall: {}",
        records.len(),
        if manifest.pass { "pass" } else { "FAIL" }
    );
    Ok(manifest.pass)
}

fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Run { common } => execute(&load(&common)?),
        Command::SimulateRisk {
            common,
            model,
            estimator,
        } => {
            let mut cfg = load(&common)?;
            cfg.checks = vec![CheckSpec::McRisk {
                model,
                estimator,
                n: None,
            }];
            execute(&cfg)
        }
        Command::RiskSweep {
            common,
            model,
            estimator,
            baseline,
        } => {
            let mut cfg = load(&common)?;
            cfg.checks = vec![CheckSpec::RiskSweep {
                model,
                estimator,
                baseline,
                n: None,
            }];
            execute(&cfg)
        }
        Command::VerifyIdentities {
            common,
            model,
            field,
            shrink_a,
            bound,
        } => {
            let mut cfg = load(&common)?;
            let selected: Vec<String> = if model.is_empty() {
                cfg.models.iter().map(|m| m.name.clone()).collect()
            } else {
                model
            };
            let mut checks = Vec::new();
            for name in &selected {
                let Some(nm) = cfg.find_model(name) else {
                    return Err(Error::ConfigValidation(vec![format!(
                        "unknown model '{name}'"
                    )]));
                };
                let spec = &nm.spec;
                let fld = match field {
                    FieldChoice::Js => {
                        VectorField::js(shrink_a.unwrap_or((spec.p.max(3) - 2) as f64))
                    }
                    FieldChoice::Baranchik => {
                        VectorField::baranchik(ShrinkFn::Rational { bound })
                    }
                };
                if matches!(spec.family, Family::Normal) {
                    checks.push(CheckSpec::SteinIdentity {
                        model: name.clone(),
                        field: fld.clone(),
                        n: None,
                    });
                }
                if spec.k == 0 {
                    checks.push(CheckSpec::QIdentity {
                        model: name.clone(),
                        field: fld.clone(),
                        n: None,
                    });
                } else {
                    checks.push(CheckSpec::UnknownScaleCrossTerm {
                        model: name.clone(),
                        field: fld.clone(),
                        n: None,
                    });
                }
                checks.push(CheckSpec::SphereBall {
                    theta: spec.theta.clone(),
                    radius: 2.0 * spec.sigma,
                    field: fld,
                    n: None,
                });
            }
            cfg.checks = checks;
            execute(&cfg)
        }
        Command::BayesRTable {
            a,
            b,
            p,
            k,
            w_min,
            w_max,
            points,
            output,
        } => {
            if !(w_min > 0.0) || !(w_max > w_min) || points < 2 {
                return Err(Error::ParameterDomain(
                    "need 0 < w-min < w-max and at least 2 points".into(),
                ));
            }
            let prior = BayesPriorSpec::new(a, b, p, k)?;
            let grid = RwTable::log_grid(w_min, w_max, points);
            let table = RwTable::build(&prior, &grid)?;
            println!("w,r,error_estimate");
            for i in 0..table.w.len() {
                println!("{},{},{}", table.w[i], table.r[i], table.error_estimate[i]);
            }
            if let Some(path) = output {
                let rows: Vec<steinlab_core::report::RwTableRow> = (0..table.w.len())
                    .map(|i| steinlab_core::report::RwTableRow {
                        w: table.w[i],
                        r: table.r[i],
                        error_estimate: table.error_estimate[i],
                    })
                    .collect();
                steinlab_core::report::write_rows_csv(&path, &rows)?;
            }
            let bound_ok = match prior.shrink_bound() {
                Ok(b) => table.max_r() <= b + 1e-8,
                Err(_) => false,
            };
            let pass = table.monotone_violation() <= MONOTONE_TOL && bound_ok;
            eprintln!(
                "max r = {}, monotone violation = {}, {}",
                table.max_r(),
                table.monotone_violation(),
                if pass { "pass" } else { "FAIL" }
            );
            Ok(pass)
        }
        Command::CertifyMinimax { a, b, p, k } => {
            let prior = BayesPriorSpec::new(a, b, p, k)?;
            let cert = minimaxity_certificate(&prior)?;
            println!("{:<34} {:<6} detail", "clause", "status");
            for clause in &cert.clauses {
                println!(
                    "{:<34} {:<6} {}",
                    clause.name,
                    if clause.satisfied { "pass" } else { "FAIL" },
                    clause.detail
                );
            }
            match cert.shrink_limit {
                Some(limit) => println!(
                    "shrink limit {} against threshold {}",
                    limit, cert.threshold
                ),
                None => println!("shrink limit undefined; threshold {}", cert.threshold),
            }
            println!(
                "certificate: {}",
                if cert.certified { "pass" } else { "FAIL" }
            );
            Ok(cert.certified)
        }
        Command::OrthantSweep {
            common,
            model,
            factor,
            rational,
            multiples,
        } => {
            let mut cfg = load(&common)?;
            let family = if rational {
                OrthantFamily::RationalPerFace { factor }
            } else {
                OrthantFamily::ScaledJs { factor }
            };
            cfg.checks = vec![CheckSpec::OrthantDomination {
                model,
                family,
                ones_multiples: multiples,
                thetas: None,
                n: None,
            }];
            execute(&cfg)
        }
    }
}

fn fmt(x: Option<f64>) -> String {
    match x {
        None => "-".into(),
        Some(v) if v == 0.0 => "0".into(),
        Some(v) if v.abs() < 1e-3 || v.abs() >= 1e6 => format!("{v:.4e}"),
        Some(v) => format!("{v:.6}"),
    }
}

fn print_records(records: &[CheckRecord]) {
    if records.is_empty() {
        println!("no checks were run");
        return;
    }
    println!(
        "{:<26} {:<24} {:<36} {:>9} {:>13} {:>13}  pass",
        "operation", "model", "estimator", "n", "mean", "se"
    );
    for r in records {
        println!(
            "{:<26} {:<24} {:<36} {:>9} {:>13} {:>13}  {}",
            r.operation,
            r.model,
            r.estimator,
            r.n,
            fmt(r.mean),
            fmt(r.se),
            if r.pass { "pass" } else { "FAIL" }
        );
    }
}
