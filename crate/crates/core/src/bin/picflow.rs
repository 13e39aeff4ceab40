use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use picflow::flow;
use picflow::models::{self, ModelName};
use picflow::report::{SuiteConfig, SuiteReport};
use picflow::sampler::{sample_at, SampleClass, SampleSpec};
use picflow::suite::{self, Suite};
use picflow::{CurvatureOperator, Error};

#[derive(Parser)]
#[command(name = "picflow", version, about = "Verification suites for 4D curvature operators and PIC shrinking solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and emit a report.
    Verify(VerifyArgs),
    /// Integrate the reaction ODE and write the trajectory as JSON lines.
    Flow(FlowArgs),
    /// Inspect the soliton catalog.
    Models {
        #[command(subcommand)]
        command: ModelsCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Identities,
    Pfunc,
    Optim,
    Flow,
    Models,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Pfunc => Suite::Pfunc,
            SuiteArg::Optim => Suite::Optim,
            SuiteArg::Flow => Suite::Flow,
            SuiteArg::Models => Suite::Models,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum, required_unless_present = "replay")]
    suite: Option<SuiteArg>,
    /// Random cases per check (ten times as many for the sign checks).
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Base relative tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Operator JSON (or a report with a FAIL witness) to re-check.
    #[arg(long, conflicts_with = "suite")]
    replay: Option<PathBuf>,
    /// Random starts for the flow checks.
    #[arg(long, default_value_t = 100)]
    flow_starts: usize,
    /// Grid size for the simplex scans.
    #[arg(long, default_value_t = 300)]
    grid: usize,
    /// Record wall time in the report (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("start").required(true).args(["model", "seed"])))]
struct FlowArgs {
    /// Start from a catalog model.
    #[arg(long)]
    model: Option<String>,
    /// Start from PIC sample 0 of this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    t_end: f64,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ModelsCommand {
    /// One line per model.
    List,
    /// Model data with its operator in block form.
    Show { name: String },
}

fn writer(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_replay(path: &Path) -> Result<CurvatureOperator, Error> {
    let text = std::fs::read_to_string(path)?;
    if let Ok(report) = serde_json::from_str::<SuiteReport>(&text) {
        let witness = report
            .failures()
            .find_map(|c| c.witness.clone())
            .ok_or_else(|| Error::InvalidSpec("report has no FAIL witness".into()))?;
        return CurvatureOperator::from_json(&witness);
    }
    CurvatureOperator::from_json_str(&text)
}

fn verify(args: VerifyArgs) -> Result<bool, Error> {
    let mut config = SuiteConfig::new(args.seed, args.samples, args.tol);
    config.flow_starts = args.flow_starts;
    config.optim_grid = args.grid;
    config.max_sum_squares_grid = args.grid;
    config.validate()?;

    let start = Instant::now();
    let mut report = match (&args.replay, args.suite) {
        (Some(path), _) => suite::replay(&read_replay(path)?, &config)?,
        (None, Some(s)) => suite::run_suite(s.into(), &config)?,
        (None, None) => unreachable!("clap requires a suite or --replay"),
    };
    let elapsed = start.elapsed().as_secs_f64();
    if args.timing {
        report.wall_time_s = Some(elapsed);
    }
    eprintln!("{} {} in {elapsed:.2} s", report.suite, report.status.as_str());

    let mut w = writer(args.out.as_deref())?;
    match args.format {
        Format::Json => w.write_all(report.to_json().as_bytes())?,
        Format::Text => w.write_all(report.to_text().as_bytes())?,
    }
    w.flush()?;
    Ok(report.passed())
}

fn run_flow(args: FlowArgs) -> Result<bool, Error> {
    let r0 = match (&args.model, args.seed) {
        (Some(name), _) => models::model(name.parse::<ModelName>()?).operator,
        (None, Some(seed)) => sample_at(&SampleSpec::new(SampleClass::Pic, seed, 1), 0)?,
        (None, None) => unreachable!("clap requires a start"),
    };
    let traj = match flow::integrate(&r0, args.t_end, args.step) {
        Ok(t) => t,
        Err(Error::BlowupDetected { time, partial }) => {
            eprintln!("blow-up detected at t = {time}; writing {} samples", partial.len());
            *partial
        }
        Err(e) => return Err(e),
    };
    let mut w = writer(args.out.as_deref())?;
    traj.write_jsonl(&mut w)?;
    w.flush()?;
    Ok(true)
}

fn run_models(command: ModelsCommand) -> Result<bool, Error> {
    let mut w = writer(None)?;
    match command {
        ModelsCommand::List => {
            for m in models::all_models() {
                writeln!(
                    w,
                    "{:<11} S = {:<7.4} {:<9} flat dims {}",
                    m.name.as_str(),
                    m.scalar,
                    m.operator.pic_class().to_string(),
                    m.potential.flat_dims
                )?;
            }
        }
        ModelsCommand::Show { name } => {
            let m = models::model(name.parse::<ModelName>()?);
            let value = json!({
                "name": m.name,
                "S": m.scalar,
                "pic_class": m.operator.pic_class().to_string(),
                "flat_dims": m.potential.flat_dims,
                "potential": format!("|y|^2/4 + {}", m.potential.offset),
                "operator": m.operator.to_json(),
            });
            writeln!(w, "{}", serde_json::to_string_pretty(&value)?)?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Verify(args) => verify(args),
        Command::Flow(args) => run_flow(args),
        Command::Models { command } => run_models(command),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
