//! Command-line front end: loads bodies and regions, runs the classifiers and
//! writes JSON reports and SVG section plots.

pub mod files;
pub mod report;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kkit_core::banach::{banach_classify, BanachError, BanachOptions};
use kkit_core::bodies::Body;
use kkit_core::classifier::{classify, ClassifyOptions};
use kkit_core::contracting::{find_contracting_direction, is_contracting, ContractingOptions};
use kkit_core::quadform::section_quadric_fit;
use serde_json::{json, Value};

use report::Report;

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;

/// Residual below which the section plot overlays the fitted quadric.
pub const OVERLAY_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "kkit",
    version,
    about = "Local Blaschke–Kakutani and Banach classification of convex bodies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Body file (JSON).
    pub body: PathBuf,
    /// Tolerance on gauge violations and fit residuals.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Grid points per chart axis.
    #[arg(long, default_value_t = 9)]
    pub grid: usize,
    /// Cap on the number of grid planes.
    #[arg(long, default_value_t = 81)]
    pub max_planes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0: all cores).
    #[arg(long, env = "KKIT_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Record wall-clock timings (reports are then no longer reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a body near a region of planes.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        region: PathBuf,
    },
    /// Check pairwise linear equivalence of sections, then classify.
    Banach {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        region: PathBuf,
        /// Tolerance on the canonical radial mismatch of section pairs.
        #[arg(long, default_value_t = 1e-6)]
        equiv_tol: f64,
        /// Random plane pairs added to the base-versus-grid pairs.
        #[arg(long, default_value_t = 32)]
        pairs: usize,
    },
    /// Test a plane (and optionally a direction) for the contracting property.
    Contract {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plane: PathBuf,
        #[arg(long)]
        direction: Option<PathBuf>,
    },
    /// Plot the section by a 2-plane as SVG.
    Section {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plane: PathBuf,
        #[arg(long)]
        svg: PathBuf,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Classify { common, .. }
            | Command::Banach { common, .. }
            | Command::Contract { common, .. }
            | Command::Section { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Banach { .. } => "banach",
            Command::Contract { .. } => "contract",
            Command::Section { .. } => "section",
        }
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn config_echo(cmd: &Command) -> Value {
    let c = cmd.common();
    let mut echo = json!({
        "command": cmd.name(),
        "body": path_str(&c.body),
        "tol": c.tol,
        "grid": c.grid,
        "max_planes": c.max_planes,
        "seed": c.seed,
        "threads": c.threads,
    });
    let extra = match cmd {
        Command::Classify { region, .. } => json!({ "region": path_str(region) }),
        Command::Banach {
            region,
            equiv_tol,
            pairs,
            ..
        } => {
            json!({ "region": path_str(region), "equiv_tol": equiv_tol, "pairs": pairs })
        }
        Command::Contract { plane, direction, .. } => json!({
            "plane": path_str(plane),
            "direction": direction.as_deref().map(path_str),
        }),
        Command::Section { plane, svg, .. } => json!({ "plane": path_str(plane), "svg": path_str(svg) }),
    };
    if let (Value::Object(a), Value::Object(b)) = (&mut echo, extra) {
        a.extend(b);
    }
    echo
}

fn classify_options(c: &Common) -> ClassifyOptions {
    ClassifyOptions {
        tol: c.tol,
        grid_per_axis: c.grid,
        max_planes: c.max_planes,
        contracting: ContractingOptions {
            tol: c.tol,
            ..ContractingOptions::default()
        },
        ..ClassifyOptions::default()
    }
}

fn timing(c: &Common, start: Instant) -> Option<Value> {
    c.timings
        .then(|| json!({ "total_ms": start.elapsed().as_secs_f64() * 1e3 }))
}

fn run_classify(c: &Common, region: &Path, echo: Value) -> Result<(Report, i32)> {
    let start = Instant::now();
    let body = files::load_body(&c.body)?;
    let region = files::load_region(region)?;
    let rep = classify(&body, &region, &classify_options(c))?;
    let code = if rep.verdict.is_positive() {
        EXIT_POSITIVE
    } else {
        EXIT_NEGATIVE
    };
    Ok((report::classification(&rep, echo, timing(c, start)), code))
}

fn run_banach(c: &Common, region: &Path, equiv_tol: f64, pairs: usize, echo: Value) -> Result<(Report, i32)> {
    let start = Instant::now();
    let body = files::load_body(&c.body)?;
    let region = files::load_region(region)?;
    let opts = BanachOptions {
        tol: equiv_tol,
        random_pairs: pairs,
        seed: c.seed,
        classify: classify_options(c),
        ..BanachOptions::default()
    };
    match banach_classify(&body, &region, &opts) {
        Ok(rep) => {
            let code = if rep.classification.verdict.is_positive() {
                EXIT_POSITIVE
            } else {
                EXIT_NEGATIVE
            };
            let mut out = report::classification(&rep.classification, echo, timing(c, start));
            if let Value::Object(d) = &mut out.diagnostics {
                d.insert("hypothesis".into(), report::hypothesis_value(&rep.hypothesis));
            }
            Ok((out, code))
        }
        Err(BanachError::HypothesisFailed {
            plane_a,
            plane_b,
            residual,
            tol,
        }) => Ok((
            Report {
                verdict: "hypothesis_failed".into(),
                witness: json!({
                    "planes": [files::columns_of(&plane_a), files::columns_of(&plane_b)],
                    "residual": residual,
                    "tol": tol,
                }),
                diagnostics: Value::Null,
                timings: timing(c, start),
                config_echo: echo,
            },
            EXIT_ERROR,
        )),
        Err(e) => Err(e.into()),
    }
}

fn run_contract(c: &Common, plane: &Path, direction: Option<&Path>, echo: Value) -> Result<(Report, i32)> {
    let start = Instant::now();
    let body = files::load_body(&c.body)?;
    let plane = files::load_frame(plane)?;
    let opts = ContractingOptions {
        tol: c.tol,
        ..ContractingOptions::default()
    };
    let (holds, witness) = match direction {
        Some(path) => {
            let y = files::load_frame(path)?;
            let cert = is_contracting(&body, &plane, &y, &opts)?;
            (cert.holds(c.tol), report::certificate_value(&cert))
        }
        None => {
            let search = find_contracting_direction(&body, &plane, &opts)?;
            (search.direction().is_some(), report::search_value(&search))
        }
    };
    let (verdict, code) = if holds {
        ("contracting", EXIT_POSITIVE)
    } else {
        ("not_contracting", EXIT_NEGATIVE)
    };
    Ok((
        Report {
            verdict: verdict.into(),
            witness,
            diagnostics: Value::Null,
            timings: timing(c, start),
            config_echo: echo,
        },
        code,
    ))
}

fn run_section(c: &Common, plane: &Path, svg_path: &Path, echo: Value) -> Result<(Report, i32)> {
    let start = Instant::now();
    let body = files::load_body(&c.body)?;
    let plane = files::load_frame(plane)?;
    anyhow::ensure!(
        plane.dim() == 2,
        "section plots need a 2-plane, got dimension {}",
        plane.dim()
    );
    let outline = svg::section_outline(&body, &plane)?;
    let fit = section_quadric_fit(&body, &plane, svg::SEGMENTS)?;
    let accepted = fit.positive_definite && fit.residual <= OVERLAY_TOL;
    let overlay = accepted.then(|| svg::quadric_outline(&fit.form));
    fs::write(svg_path, svg::render(&outline, overlay.as_deref()))
        .with_context(|| format!("cannot write {}", svg_path.display()))?;
    Ok((
        Report {
            verdict: if accepted { "quadric" } else { "not_quadric" }.into(),
            witness: json!({
                "form": report::matrix_value(&fit.form.matrix()),
                "residual": fit.residual,
                "overlay": accepted,
            }),
            diagnostics: Value::Null,
            timings: timing(c, start),
            config_echo: echo,
        },
        EXIT_POSITIVE,
    ))
}

fn dispatch(cmd: &Command, echo: Value) -> Result<(Report, i32)> {
    match cmd {
        Command::Classify { common, region } => run_classify(common, region, echo),
        Command::Banach {
            common,
            region,
            equiv_tol,
            pairs,
        } => run_banach(common, region, *equiv_tol, *pairs, echo),
        Command::Contract {
            common,
            plane,
            direction,
        } => run_contract(common, plane, direction.as_deref(), echo),
        Command::Section { common, plane, svg } => run_section(common, plane, svg, echo),
    }
}

/// Runs a parsed command and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let common = cli.command.common();
    let echo = config_echo(&cli.command);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(common.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_ERROR;
        }
    };
    let (report, code) = match pool.install(|| dispatch(&cli.command, echo.clone())) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            (report::error_report("error", &format!("{e:#}"), echo), EXIT_ERROR)
        }
    };
    let text = report.to_json();
    match &common.report {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_ERROR;
            }
        }
        None => print!("{text}"),
    }
    code
}

/// Parses `args` (including the program name) and runs.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_POSITIVE
            }
        }
    }
}

/// Loads a body file; exposed for tests and tooling.
pub fn load_body(path: &Path) -> Result<Body> {
    files::load_body(path)
}
