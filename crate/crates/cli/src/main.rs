use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use etp_core::experiments::{
    compare_profiles, density_report, export_density, export_spectrum, run_spectrum_job, validate, JobStatus,
    OutputFormat, SpectrumJob, Status,
};
use etp_core::zerofind::Rect;
use etp_core::Error;

/// Exterior transmission eigenvalues of radial refractive-index perturbations.
#[derive(Parser)]
#[command(name = "etp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the zeros of the determinant for every order in the job.
    Run { job: PathBuf },
    /// Compute both spectra and report whether they differ.
    Compare { first: PathBuf, second: PathBuf },
    /// Indicator and near-real-axis zero density of the determinant.
    Density { job: PathBuf },
    /// Run the invariant suite.
    Validate { job: PathBuf },
}

/// Settings that override the job file.
#[derive(Args)]
struct Overrides {
    /// Target accuracy of the located zeros.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Highest order l.
    #[arg(long, global = true)]
    l_max: Option<u32>,
    /// Search rectangle as re0,re1,im0,im1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    rect: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Exit code 2: bad input or a failed invariant. Exit code 3: the
/// numerical machinery gave up.
enum Failure {
    Validation(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl Overrides {
    fn apply(&self, job: &mut SpectrumJob) -> Result<(), Failure> {
        if let Some(t) = self.tol {
            job.target_tol = t;
        }
        if let Some(l) = self.l_max {
            job.l_max = l;
        }
        if let Some(s) = &self.rect {
            let r = Rect::parse(s)?;
            job.rect = [r.re0, r.re1, r.im0, r.im1];
        }
        if let Some(o) = &self.out {
            job.out_dir = o.clone();
        }
        if let Some(f) = self.format {
            job.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        Ok(())
    }

    fn load(&self, path: &Path) -> Result<SpectrumJob, Failure> {
        let mut job = SpectrumJob::from_path(path)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        self.apply(&mut job)?;
        job.validate()?;
        Ok(job)
    }
}

fn run(job: &SpectrumJob) -> Result<(), Failure> {
    let report = run_spectrum_job(job)?;
    let files = export_spectrum(&report, &job.out_dir, job.format)?;
    if report.status == JobStatus::Degenerate {
        println!("DEGENERATE: the index equals 1 everywhere, so every k is a zero");
    }
    for o in &report.orders {
        match (&o.status, &o.zeros) {
            (Status::Ok, Some(z)) => println!(
                "l={:<2} {} zeros ({} with multiplicity){}",
                o.l,
                z.zeros.len(),
                z.total_multiplicity(),
                if z.is_complete() { "" } else { ", some cells unresolved" }
            ),
            (Status::Degenerate, _) => println!("l={:<2} DEGENERATE", o.l),
            _ => println!("l={:<2} FAILED: {}", o.l, o.error.as_deref().unwrap_or("")),
        }
    }
    println!("{} merged zeros; wrote {} files to {}", report.merged.len(), files.len(), job.out_dir.display());
    if report.status == JobStatus::Partial {
        return Err(Failure::Solver("some orders failed".into()));
    }
    Ok(())
}

fn compare(first: &SpectrumJob, second: &SpectrumJob) -> Result<(), Failure> {
    let rep = compare_profiles(first, second)?;
    fs::create_dir_all(&first.out_dir).map_err(Error::from)?;
    let path = first.out_dir.join("comparison.json");
    fs::write(&path, rep.to_json()?).map_err(Error::from)?;
    println!("{} ({} unmatched zeros)", rep.verdict, rep.symmetric_difference);
    for o in &rep.orders {
        println!(
            "l={:<2} matched {}, unmatched {} + {}, density gap {:.4} (predicted {:.4})",
            o.l, o.matched, o.unmatched_first, o.unmatched_second, o.density_gap, o.predicted_gap
        );
    }
    println!("wrote {}", path.display());
    if rep.orders.iter().any(|o| o.incomplete) {
        return Err(Failure::Solver("an order failed or is degenerate on one side".into()));
    }
    Ok(())
}

fn density(job: &SpectrumJob) -> Result<(), Failure> {
    let rep = density_report(job)?;
    let files = export_density(&rep, &job.out_dir, job.format)?;
    for o in &rep.orders {
        println!(
            "l={:<2} h(π/2) = {:.3}, h(−π/2) = {:.3}, d/(2π) = {:.4}, measured density {:.4}, (ξ(R0)+R0)/(2π) = {:.4}",
            o.l, o.width.h_up, o.width.h_down, o.width.prediction, o.density.slope, o.outer_prediction
        );
    }
    println!("wrote {} files to {}", files.len(), job.out_dir.display());
    Ok(())
}

fn validate_job(job: &SpectrumJob) -> Result<(), Failure> {
    let rep = validate(job)?;
    fs::create_dir_all(&job.out_dir).map_err(Error::from)?;
    let path = job.out_dir.join("validation.json");
    fs::write(&path, rep.to_json()?).map_err(Error::from)?;
    for c in &rep.checks {
        println!(
            "{} {}: {:.3e} (limit {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
    println!("wrote {}", path.display());
    if !rep.passed() {
        return Err(Failure::Validation("invariant checks failed".into()));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let o = &cli.overrides;
    match &cli.command {
        Command::Run { job } => run(&o.load(job)?),
        Command::Compare { first, second } => compare(&o.load(first)?, &o.load(second)?),
        Command::Density { job } => density(&o.load(job)?),
        Command::Validate { job } => validate_job(&o.load(job)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("etp: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("etp: solver failure: {m}");
            ExitCode::from(3)
        }
    }
}
