use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use ssabsorb_cli::{parse_config, run, validate, CliError, Command, Overrides};

/// Absorption-time laws of positive self-similar Markov processes.
#[derive(Parser)]
#[command(name = "ssabsorb", version)]
struct Args {
    command: Command,
    /// TOML run configuration (not needed for `validate`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; defaults to the config's [output] path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Run a single acceptance criterion (validate only).
    #[arg(long)]
    criterion: Option<u8>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(v) = std::env::var("SSABSORB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("config error: SSABSORB_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let ov = Overrides { seed: args.seed, paths: args.paths };
    if args.command == Command::Validate {
        let (ok, text) = validate(ov, args.criterion);
        emit(args.out.as_deref(), &text)?;
        return if ok { Ok(()) } else { Err(CliError::Validation("one or more criteria failed".into())) };
    }
    let path = args
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let cfg = parse_config(&text, base)?;
    let csv = run(args.command, &cfg, ov)?;
    emit(args.out.as_deref().or(cfg.output_path.as_deref()), &csv)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
