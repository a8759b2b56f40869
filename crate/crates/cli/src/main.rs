//! Command line front end: point classification, plan scans, local model
//! construction, projection regularity, and the bundled example scenarios.
//!
//! Exit codes: 0 on success, 1 on domain errors (bad point values, failed
//! validation, unknown built-ins, missing files), 2 on usage errors
//! (unparseable arguments, wrong point arity).

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use transversal::defect::{self, DefectReport};
use transversal::expr;
use transversal::genericity;
use transversal::geometry::{ParamFamily, PointXA};
use transversal::local_model;
use transversal::scenario::{self, LocalModelReport, RunRecord, Scenario};
use transversal::{ExactBackend, FloatBackend, Rat, ScalarBackend};

mod checks;

#[derive(Parser)]
#[command(
    name = "transversal",
    version,
    about = "Transversality defects of parametrized families of maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where the scenario comes from: a file or a bundled example.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Path to a scenario file
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Name of a built-in scenario (see `examples --list`)
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
}

#[derive(Args)]
struct Overrides {
    /// Override the plan seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the per-axis x sample count
    #[arg(long)]
    x_count: Option<usize>,
    /// Override the per-axis a sample count
    #[arg(long)]
    a_count: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print both transversality defects of the family at one point
    Delta {
        #[command(flatten)]
        source: Source,
        /// Point "v1,v2,..." with n + m rational or decimal coordinates
        #[arg(long)]
        point: String,
    },
    /// Classify one point into its stratum and print the full report
    Classify {
        #[command(flatten)]
        source: Source,
        /// Point "v1,v2,..." with n + m rational or decimal coordinates
        #[arg(long)]
        point: String,
    },
    /// Sample the plan and write a run directory with the reports
    Scan {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// Run output directory
        #[arg(long, env = "TRANSVERSAL_OUT_DIR", value_name = "DIR")]
        out: PathBuf,
    },
    /// Build the local model at a base point
    LocalModel {
        #[command(flatten)]
        source: Source,
        /// Point "v1,v2,..." with n + m rational or decimal coordinates
        #[arg(long)]
        point: String,
        /// Also verify the model's properties on a grid
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Build and verify the local model at a base point
    VerifyLocal {
        #[command(flatten)]
        source: Source,
        /// Point "v1,v2,..." with n + m rational or decimal coordinates
        #[arg(long)]
        point: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Report whether the parameter projection is regular or critical at a
    /// preimage point
    Regularity {
        #[command(flatten)]
        source: Source,
        /// Point "v1,v2,..." with n + m rational or decimal coordinates
        #[arg(long)]
        point: String,
    },
    /// List, print, or self-check the built-in scenarios
    Examples {
        /// Restrict to one built-in
        #[arg(long)]
        name: Option<String>,
        /// Run the built-in's acceptance assertions
        #[arg(long)]
        check: bool,
        /// List the built-in names
        #[arg(long)]
        list: bool,
    },
    /// Estimate the defect supremum over the sample plan
    Sup {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
    },
}

enum AppError {
    Domain(String),
    Usage(String),
}

fn domain(e: impl std::fmt::Display) -> AppError {
    AppError::Domain(e.to_string())
}

/// Run the body once with the scenario's backend instantiated.
macro_rules! with_backend {
    ($scenario:expr, |$b:ident| $body:expr) => {
        match $scenario.backend {
            ScalarBackend::ExactRational => {
                let $b = ExactBackend;
                $body
            }
            ScalarBackend::Float {
                rank_tol,
                membership_tol,
            } => {
                let $b = FloatBackend::new(rank_tol, membership_tol).map_err(domain)?;
                $body
            }
        }
    };
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(AppError::Domain(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(AppError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<String, AppError> {
    match command {
        Command::Delta { source, point } => {
            let s = load(&source)?;
            let p = parse_point(&point, &s.family)?;
            with_backend!(s, |b| {
                let report = defect::classify(&b, &s.family, &s.z, &p).map_err(domain)?;
                Ok(format!(
                    "point = {}\non_Z = {}\ndelta_family = {}\ndelta_slice = {}\n",
                    report.point, report.on_z, report.delta_family, report.delta_slice
                ))
            })
        }
        Command::Classify { source, point } => {
            let s = load(&source)?;
            let p = parse_point(&point, &s.family)?;
            with_backend!(s, |b| {
                let report = defect::classify(&b, &s.family, &s.z, &p).map_err(domain)?;
                Ok(render_defect_report(&report))
            })
        }
        Command::Scan {
            source,
            overrides,
            out,
        } => {
            let mut s = load(&source)?;
            overrides.apply(&mut s)?;
            with_backend!(s, |b| {
                let result = genericity::scan(&b, &s.family, &s.z, &s.plan).map_err(domain)?;
                let mut record = RunRecord::for_scenario(&s);
                record.genericity = Some(result.report.clone());
                record.defect_table = result.table;
                let manifest = scenario::write_run(&record, &out).map_err(domain)?;
                Ok(format!(
                    "{}manifest = {}\n",
                    scenario::render_genericity(&result.report),
                    manifest.display()
                ))
            })
        }
        Command::LocalModel {
            source,
            point,
            verify,
            overrides,
        } => {
            let mut s = load(&source)?;
            overrides.apply(&mut s)?;
            local_model_report(&s, &point, verify)
        }
        Command::VerifyLocal {
            source,
            point,
            overrides,
        } => {
            let mut s = load(&source)?;
            overrides.apply(&mut s)?;
            local_model_report(&s, &point, true)
        }
        Command::Regularity { source, point } => {
            let s = load(&source)?;
            let p = parse_point(&point, &s.family)?;
            with_backend!(s, |b| {
                let kernel =
                    genericity::preimage_tangent(&b, &s.family, &s.z, &p).map_err(domain)?;
                let regularity =
                    genericity::projection_regularity(&b, &s.family, &s.z, &p).map_err(domain)?;
                Ok(format!(
                    "point = {p}\nregularity = {regularity}\nkernel_dim = {}\n",
                    kernel.cols()
                ))
            })
        }
        Command::Examples { name, check, list } => examples(name, check, list),
        Command::Sup { source, overrides } => {
            let mut s = load(&source)?;
            overrides.apply(&mut s)?;
            with_backend!(s, |b| {
                let estimate =
                    defect::delta_sup_estimate(&b, &s.family, &s.z, &s.plan).map_err(domain)?;
                Ok(format!(
                    "delta_sup_estimate = {}\npoints_classified = {}\n",
                    estimate.value, estimate.points_classified
                ))
            })
        }
    }
}

fn load(source: &Source) -> Result<Scenario, AppError> {
    match (&source.builtin, &source.scenario) {
        (Some(name), _) => scenario::builtin(name).map_err(domain),
        (_, Some(path)) => scenario::load_scenario(path).map_err(domain),
        (None, None) => unreachable!("clap enforces the source group"),
    }
}

impl Overrides {
    fn apply(&self, s: &mut Scenario) -> Result<(), AppError> {
        if let Some(seed) = self.seed {
            s.plan.seed = seed;
        }
        if let Some(count) = self.x_count {
            s.plan.x_count = count;
        }
        if let Some(count) = self.a_count {
            s.plan.a_count = count;
        }
        s.plan
            .validate(&s.family)
            .map_err(|e| AppError::Domain(format!("plan.{}: {}", e.field, e.message)))
    }
}

fn parse_point(raw: &str, family: &ParamFamily) -> Result<PointXA, AppError> {
    let values = raw
        .split(',')
        .map(|t| expr::parse_rational(t.trim()))
        .collect::<Result<Vec<Rat>, _>>()
        .map_err(|e| AppError::Domain(format!("bad point {raw:?}: {e}")))?;
    let expected = family.n() + family.m();
    if values.len() != expected {
        return Err(AppError::Usage(format!(
            "point has {} coordinates, expected {expected} (n + m)",
            values.len()
        )));
    }
    let mut x = values;
    let a = x.split_off(family.n());
    Ok(PointXA::new(x, a))
}

fn render_defect_report(report: &DefectReport) -> String {
    format!(
        "point = {}\non_Z = {}\ndelta_family = {}\ndelta_slice = {}\nsum_dim_family = {}\nsum_dim_slice = {}\nstratum = {}\nmather_hypothesis = {}\n",
        report.point,
        report.on_z,
        report.delta_family,
        report.delta_slice,
        report.sum_dim_family,
        report.sum_dim_slice,
        report.stratum,
        report.mather_hypothesis
    )
}

fn local_model_report(s: &Scenario, point: &str, verify: bool) -> Result<String, AppError> {
    let p = parse_point(point, &s.family)?;
    with_backend!(s, |b| {
        let model = local_model::build_local_model(&b, &s.family, &s.z, &p).map_err(domain)?;
        let verification = if verify {
            Some(
                local_model::verify_local_model(&b, &model, &s.family, &s.z, &s.plan)
                    .map_err(domain)?,
            )
        } else {
            None
        };
        Ok(scenario::render_local_model(&LocalModelReport {
            model,
            verification,
        }))
    })
}

fn examples(name: Option<String>, check: bool, list: bool) -> Result<String, AppError> {
    if list || (!check && name.is_none()) {
        let mut out = String::new();
        for name in scenario::BUILTIN_NAMES {
            out.push_str(name);
            out.push('\n');
        }
        return Ok(out);
    }
    if check {
        let targets: Vec<&str> = match &name {
            Some(one) => {
                // fail early on unknown names
                scenario::builtin(one).map_err(domain)?;
                vec![one.as_str()]
            }
            None => scenario::BUILTIN_NAMES.to_vec(),
        };
        let mut out = String::new();
        for target in targets {
            checks::run_check(target)
                .map_err(|msg| AppError::Domain(format!("{target}: FAIL: {msg}")))?;
            out.push_str(target);
            out.push_str(": pass\n");
        }
        return Ok(out);
    }
    let name = name.expect("handled above");
    let s = scenario::builtin(&name).map_err(domain)?;
    Ok(scenario::serialize_scenario(&s))
}
