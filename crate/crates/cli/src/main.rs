use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hsa", about = "Harmonic state-space stability analysis of converter-dominated grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (config file or bundled scenario id).
    Run {
        config: String,
        /// Override a config value by dotted path, e.g. `analysis.schedule.steps=5`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled scenarios.
    Scenarios {
        /// Print the full config of one scenario.
        #[arg(long)]
        show: Option<String>,
    },
    /// Validate a config without computing anything.
    Validate {
        config: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, set, out } => hsa_cli::run(&config, &set, out.as_deref()).map(|(_, files)| {
            for f in files {
                println!("{}", f.display());
            }
        }),
        Command::Scenarios { show: Some(id) } => match hsa_cli::find(&id) {
            Some(c) => {
                println!("{}", c.to_json());
                Ok(())
            }
            None => Err(hsa_cli::CliError::Validation(format!("no bundled scenario {id}"))),
        },
        Command::Scenarios { show: None } => {
            for c in hsa_cli::catalogue() {
                println!("{:<24} {:<16} {}\n{:<24} {:<16} provenance: {}", c.id, c.analysis.name(), c.description, "", "", c.provenance);
            }
            Ok(())
        }
        Command::Validate { config, set } => hsa_cli::load_config(&config, &set).map(|c| println!("{}: ok", c.id)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hsa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
