use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nnhac::commands::{
    cmd_design_filters, cmd_personalize, cmd_process, cmd_train, resolve_config, Overrides,
};
use nnhac::config::EngineKind;

/// Neural-network hearing-aid core: filter design, processing, training and personalization.
#[derive(Parser)]
#[command(name = "nnhac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write filter taps and magnitude responses as CSV into --output.
    DesignFilters(Common),
    /// Process a mono WAV file (--input) into --output, with an optional gain trace.
    Process(Common),
    /// Train a prescription network on a dataset CSV (--input) or the rule oracle.
    Train(Common),
    /// Fine-tune --model towards the preferences in --input.
    Personalize(Common),
}

#[derive(Copy, Clone, ValueEnum)]
enum EngineArg {
    Neural,
    Baseline,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
}

impl Common {
    fn split(self) -> (Option<PathBuf>, Overrides) {
        let overrides = Overrides {
            input: self.input,
            output: self.output,
            trace: self.trace,
            model: self.model,
            seed: self.seed,
            engine: self.engine.map(|e| match e {
                EngineArg::Neural => EngineKind::Neural,
                EngineArg::Baseline => EngineKind::Baseline,
            }),
        };
        (self.config, overrides)
    }
}

fn print_report<T: Serialize>(report: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(report).expect("reports serialize")
    );
}

fn run(command: Command) -> nnhac::Result<()> {
    match command {
        Command::DesignFilters(args) => {
            let (path, ov) = args.split();
            let cfg = resolve_config(path.as_deref(), ov)?;
            print_report(&cmd_design_filters(&cfg)?);
        }
        Command::Process(args) => {
            let (path, ov) = args.split();
            let cfg = resolve_config(path.as_deref(), ov)?;
            print_report(&cmd_process(&cfg)?);
        }
        Command::Train(args) => {
            let (path, ov) = args.split();
            let cfg = resolve_config(path.as_deref(), ov)?;
            print_report(&cmd_train(&cfg)?);
        }
        Command::Personalize(args) => {
            let (path, ov) = args.split();
            let cfg = resolve_config(path.as_deref(), ov)?;
            print_report(&cmd_personalize(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
