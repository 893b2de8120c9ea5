use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

mod commands;
mod output;

use commands::{Command, UsageError};

#[derive(Parser)]
#[command(
    name = "agenda",
    version,
    about = "Agenda-control simulations for two-round runoff elections"
)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand)]
enum Top {
    #[command(flatten)]
    Run(Command),
    /// Re-run the records of a JSON output file (`-` for stdin).
    Replay { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

fn configure_workers() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("AGENDA_WORKERS") else {
        return Ok(());
    };
    let workers: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| Failure::Usage(format!("AGENDA_WORKERS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn execute(mut command: Command) -> Result<Map<String, Value>, Failure> {
    command.resolve_seed();
    let started = Instant::now();
    let result = command.run()?;
    let elapsed_ms = started.elapsed().as_millis() as u64;
    let Value::Object(mut record) = serde_json::to_value(&command).map_err(|e| Failure::Usage(e.to_string()))? else {
        unreachable!("commands serialize to objects");
    };
    record.extend(result);
    record.insert("elapsed_ms".into(), elapsed_ms.into());
    Ok(record)
}

fn read_records(path: &PathBuf) -> Result<Vec<Command>, Failure> {
    let mut text = String::new();
    let read = if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text).map(drop)
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map(drop)
    };
    read.map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| Failure::Usage(format!("{}: not a run record: {e}", path.display()));
    serde_json::Deserializer::from_str(&text)
        .into_iter::<Value>()
        .map(|v| {
            let v = v.map_err(bad)?;
            match v {
                Value::Array(items) => items
                    .into_iter()
                    .map(|i| serde_json::from_value(i).map_err(bad))
                    .collect(),
                other => Ok(vec![serde_json::from_value(other).map_err(bad)?]),
            }
        })
        .collect::<Result<Vec<Vec<Command>>, Failure>>()
        .map(|v| v.into_iter().flatten().collect())
}

fn emit(cli: &Cli, records: &[Map<String, Value>]) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::Io(e.to_string());
    let sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match cli.format {
        Format::Json => output::write_json(&mut sink, records).map_err(io_err)?,
        Format::Csv => output::write_csv(&mut sink, records).map_err(io_err)?,
    }
    sink.flush().map_err(io_err)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_workers()?;
    let commands = match &cli.command {
        Top::Run(c) => vec![c.clone()],
        Top::Replay { path } => read_records(path)?,
    };
    let records = commands.into_iter().map(execute).collect::<Result<Vec<_>, _>>()?;
    emit(cli, &records)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
