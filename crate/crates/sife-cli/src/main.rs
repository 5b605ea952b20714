//! Command-line surface for the sharpening flows: `sharpen`, `blur`,
//! `morph` and `verify` over PGM images.
//!
//! Exit codes: 0 success, 1 usage or parameter error (including violated
//! stability bounds), 2 I/O or image parse error, 3 property-suite failure.
//! Set `SIFE_THREADS` to cap worker parallelism; results do not depend on
//! the worker count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use sife::flows::{gaussian_blur, run_flow_2d, FlowKind, FlowParams};
use sife::harness::{
    check_equivalence_1d, check_maxmin_1d, check_maxmin_2d, check_monotonicity,
    check_monotonicity_overdriven, text_table, PropertyResult,
};
use sife::io::{flow_report_csv, property_results_csv, write_pgm, PgmImage, PgmMode};
use sife::morphology::{self, StructuringRadius};
use sife::Image64;

#[derive(Parser)]
#[command(
    name = "sife",
    version,
    about = "Morphological image sharpening: stabilised inverse flowline evolution and baselines"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a sharpening flow on a PGM image.
    Sharpen(SharpenArgs),
    /// Gaussian-blur a PGM image (experiment setup).
    Blur(BlurArgs),
    /// Apply one full morphological dilation or erosion.
    Morph(MorphArgs),
    /// Run the seeded property suites and print the results table.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FlowArg {
    Sife,
    Sild,
    Shock,
}

impl From<FlowArg> for FlowKind {
    fn from(f: FlowArg) -> FlowKind {
        match f {
            FlowArg::Sife => FlowKind::Sife,
            FlowArg::Sild => FlowKind::Sild,
            FlowArg::Shock => FlowKind::Shock,
        }
    }
}

#[derive(clap::Args)]
struct SharpenArgs {
    /// Flow to run.
    #[arg(long, value_enum, default_value_t = FlowArg::Sife)]
    flow: FlowArg,
    /// Time step size; defaults to 0.2 (sife/sild) or 0.5 (shock).
    #[arg(long)]
    tau: Option<f64>,
    /// Structuring radius of the sharpening stencil (sife only).
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    /// Stop early once the largest per-pixel update falls below this.
    #[arg(long)]
    converge_eps: Option<f64>,
    /// Input PGM (P2 or P5).
    #[arg(long, short = 'i')]
    input: PathBuf,
    /// Output PGM; written in the input's encoding.
    #[arg(long, short = 'o')]
    output: PathBuf,
    /// Optional per-iteration CSV report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BlurArgs {
    /// Gaussian standard deviation in pixels; 0 copies the input.
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[arg(long, short = 'o')]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MorphOp {
    Dilate,
    Erode,
}

#[derive(clap::Args)]
struct MorphArgs {
    /// Operator to apply.
    #[arg(long, value_enum)]
    op: MorphOp,
    /// Structuring radius in grid units.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    /// Rouy-Tourin sweeps realising the radius; defaults to the smallest
    /// count within the 2-D stability limit.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, short = 'i')]
    input: PathBuf,
    #[arg(long, short = 'o')]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    /// 1-D range and monotonicity guarantees at tau = r^2.
    Theorem1,
    /// 2-D range guarantee at tau = r^2.
    Maxmin2d,
    /// SIFE(r = h) against SILD on monotone signals.
    Equivalence,
    /// Everything.
    All,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::All)]
    suite: SuiteArg,
    /// Seed for the trial batches.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Trials per property.
    #[arg(long, default_value_t = 100)]
    trials: u32,
    /// Also write the results as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum CliError {
    /// Bad parameters, including violated stability bounds.
    Usage(String),
    /// Unreadable, unwritable or unparsable files.
    Io(String),
    /// Guaranteed properties failed under `verify`.
    Properties(u32),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Properties(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Properties(n) => write!(f, "{n} guaranteed property check(s) failed"),
        }
    }
}

impl From<sife::Error> for CliError {
    fn from(e: sife::Error) -> CliError {
        CliError::Usage(e.to_string())
    }
}

fn read_image(path: &Path) -> Result<(Image64, PgmMode), CliError> {
    let data = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let pgm =
        PgmImage::parse(&data).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let img = pgm
        .to_image()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((img, pgm.mode))
}

fn write_image(path: &Path, img: &Image64, mode: PgmMode) -> Result<(), CliError> {
    fs::write(path, write_pgm(img, mode))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn sharpen(args: SharpenArgs) -> Result<(), CliError> {
    let (img, mode) = read_image(&args.input)?;
    let kind = FlowKind::from(args.flow);
    let tau = args.tau.unwrap_or_else(|| kind.default_tau());
    // One Rouy-Tourin sweep realises the default radius 0.5 exactly; larger
    // radii split into the fewest sweeps the 2-D limit allows.
    let sr = StructuringRadius::with_limit(args.r, std::f64::consts::FRAC_1_SQRT_2)?;
    let params = match kind {
        FlowKind::Sife => FlowParams::sife(tau, sr),
        FlowKind::Sild => FlowParams::sild(tau),
        FlowKind::Shock => FlowParams::shock(tau),
    }
    .with_iterations(args.iterations)
    .with_converge_eps(args.converge_eps);
    let (out, report) = run_flow_2d(&img, &params)?;
    write_image(&args.output, &out, mode)?;
    if let Some(path) = &args.report {
        write_text(path, &flow_report_csv(&report))?;
    }
    println!(
        "{}: {} iteration(s), {}converged, {:.3} s -> {}",
        kind,
        report.iterations_run(),
        if report.converged { "" } else { "not " },
        report.total_elapsed_secs,
        args.output.display()
    );
    Ok(())
}

fn blur(args: BlurArgs) -> Result<(), CliError> {
    let (img, mode) = read_image(&args.input)?;
    let out = gaussian_blur(&img, args.sigma)?;
    write_image(&args.output, &out, mode)?;
    println!("blur sigma {} -> {}", args.sigma, args.output.display());
    Ok(())
}

fn morph(args: MorphArgs) -> Result<(), CliError> {
    let (img, mode) = read_image(&args.input)?;
    let sr = match args.steps {
        Some(steps) => StructuringRadius::new(args.r, steps)?,
        None => StructuringRadius::with_limit(args.r, std::f64::consts::FRAC_1_SQRT_2)?,
    };
    let out = match args.op {
        MorphOp::Dilate => morphology::dilate(&img, &sr)?,
        MorphOp::Erode => morphology::erode(&img, &sr)?,
    };
    write_image(&args.output, &out, mode)?;
    println!(
        "{} r {} in {} sweep(s) -> {}",
        match args.op {
            MorphOp::Dilate => "dilate",
            MorphOp::Erode => "erode",
        },
        sr.r(),
        sr.rt_steps(),
        args.output.display()
    );
    Ok(())
}

/// Suite sizes follow the acceptance setup: signals of length 64, 64x64
/// images, 100 iterations per trial.
fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let mut gated: Vec<PropertyResult> = Vec::new();
    let mut informational: Vec<PropertyResult> = Vec::new();
    let (suite, seed, trials) = (args.suite, args.seed, args.trials);

    if matches!(suite, SuiteArg::Theorem1 | SuiteArg::All) {
        for r in [0.5, 1.0] {
            let sr = StructuringRadius::new(r, 1)?;
            let params = FlowParams::sife(r * r, sr).with_iterations(100);
            gated.push(check_maxmin_1d(&params, 64, trials, seed)?);
            gated.push(check_monotonicity(&params, 64, trials, seed)?);
        }
        informational.push(check_monotonicity_overdriven(64, trials, seed, 100)?);
    }
    if matches!(suite, SuiteArg::Maxmin2d | SuiteArg::All) {
        let sr = StructuringRadius::new(0.5, 1)?;
        let params = FlowParams::sife(0.25, sr).with_iterations(100);
        gated.push(check_maxmin_2d(&params, 64, 64, trials, seed)?);
    }
    if matches!(suite, SuiteArg::Equivalence | SuiteArg::All) {
        gated.push(check_equivalence_1d(64, trials, seed)?);
    }

    let mut all = gated.clone();
    all.extend(informational.iter().cloned());
    print!("{}", text_table(&all));
    if let Some(path) = &args.csv {
        write_text(path, &property_results_csv(&all))?;
    }

    let failed = gated.iter().filter(|r| !r.passed()).count() as u32;
    println!(
        "verify: {} gated propert{} checked, {failed} failed ({} informational row{} excluded)",
        gated.len(),
        if gated.len() == 1 { "y" } else { "ies" },
        informational.len(),
        if informational.len() == 1 { "" } else { "s" },
    );
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Properties(failed))
    }
}

/// `SIFE_THREADS` caps the worker pool; the kernels produce identical
/// results at any worker count.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SIFE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        CliError::Usage(format!(
            "SIFE_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let result = configure_threads().and_then(|()| match cli.cmd {
        Cmd::Sharpen(args) => sharpen(args),
        Cmd::Blur(args) => blur(args),
        Cmd::Morph(args) => morph(args),
        Cmd::Verify(args) => verify(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sife: {e}");
            ExitCode::from(e.code())
        }
    }
}
