use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thinfilm_cli::{execute, parse_config_with, Mode, EXIT_CONFIG};

#[derive(Parser)]
#[command(
    name = "thinfilm",
    version,
    about = "Thin-film simulations, steady states and a-priori bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the film and write series, profiles and a report.
    Run(Common),
    /// Compute one steady coating profile.
    Steady(Common),
    /// Continue steady profiles over a grid of (q, mu, chi).
    Sweep(Common),
    /// Evaluate the a-priori constants and check the bounds.
    Bounds(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Preset to layer the configuration over, overriding `preset`.
    #[arg(long)]
    preset: Option<String>,
    /// Only print errors.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Run(a) => (Mode::Run, a),
        Command::Steady(a) => (Mode::Steady, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Bounds(a) => (Mode::Bounds, a),
    };
    let level = if args.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    // the subcommand decides the mode, so validate with it in place
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let mut table: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: malformed configuration: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    table.insert("mode".into(), toml::Value::String(mode.as_str().into()));
    let text = toml::to_string(&table).expect("table serializes");
    let mut cfg = match parse_config_with(&text, args.preset.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    match execute(&cfg) {
        Ok(run) => {
            if !args.quiet {
                println!("{}", run.summary);
                for f in &run.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::from(run.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
