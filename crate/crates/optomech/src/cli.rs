use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use optomech_core::calibration::CALIBRATION;

use crate::commands::{self, Document, TransferOverrides};
use crate::config::{self, InitialSpec, Scenario};
use crate::error::CliError;
use crate::output::{config_hash, json_document, write_atomic, Format, Metadata, TOOL, VERSION};

#[derive(Debug, Parser)]
#[command(name = "optomech", version, about = "Optically mediated multimode optomechanics")]
pub struct Cli {
    /// Seed for stochastic integration.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, env = "OPTOMECH_OUT_DIR", default_value = "out")]
    pub out_dir: PathBuf,

    /// Table format; reports are always JSON.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical steady states and their stability.
    Meanfield { config: PathBuf },
    /// Shifts and damping over a detuning range.
    Sweep { config: PathBuf },
    /// Detunings where two modes share an effective frequency.
    Match { config: PathBuf },
    /// Covariance evolution of the reduced model.
    Evolve { config: PathBuf },
    /// State transfer at a coherent match.
    Transfer {
        config: PathBuf,
        /// Sweep the squeezing phase with this many points.
        #[arg(long, num_args = 0..=1, default_missing_value = "65")]
        sweep_phase: Option<usize>,
        /// Squeezing strengths N (comma separated).
        #[arg(long = "squeeze-N", value_delimiter = ',')]
        squeeze_n: Vec<f64>,
        /// Initial states of both modes, e.g. "thermal:1,vacuum".
        #[arg(long)]
        initial: Option<String>,
    },
    /// Stochastic four-wave-mixing trajectories.
    Fwm {
        config: PathBuf,
        #[arg(long)]
        n_traj: Option<usize>,
    },
    /// Calibration and model checks, optionally for a scenario.
    Validate { config: Option<PathBuf> },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Meanfield { .. } => "meanfield",
            Command::Sweep { .. } => "sweep",
            Command::Match { .. } => "match",
            Command::Evolve { .. } => "evolve",
            Command::Transfer { .. } => "transfer",
            Command::Fwm { .. } => "fwm",
            Command::Validate { .. } => "validate",
        }
    }

    fn config(&self) -> Option<&Path> {
        match self {
            Command::Meanfield { config }
            | Command::Sweep { config }
            | Command::Match { config }
            | Command::Evolve { config }
            | Command::Transfer { config, .. }
            | Command::Fwm { config, .. } => Some(config),
            Command::Validate { config } => config.as_deref(),
        }
    }
}

fn parse_initial(s: &str) -> Result<[InitialSpec; 2], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::validation("--initial", "expected two states separated by a comma"));
    }
    let one = |p: &str| InitialSpec::parse(p.trim()).map_err(|r| CliError::validation("--initial", &r));
    let pair = [one(parts[0])?, one(parts[1])?];
    for s in pair {
        s.check("--initial")?;
    }
    Ok(pair)
}

/// Paths of everything written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let loaded = cli.command.config().map(config::load).transpose()?;
    let scenario: Option<&Scenario> = loaded.as_ref().map(|(_, s)| s);
    let stem = cli
        .command
        .config()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "optomech".into());

    let mut overrides: Vec<(&str, String)> = Vec::new();
    let mut stdout_text = None;
    let work = || -> Result<Vec<Document>, CliError> {
        let scn = || scenario.expect("command takes a config");
        match &cli.command {
            Command::Meanfield { .. } => commands::meanfield(scn()),
            Command::Sweep { .. } => commands::sweep(scn()),
            Command::Match { .. } => commands::matching(scn()).map(|(d, _)| d),
            Command::Evolve { .. } => commands::evolve(scn()),
            Command::Transfer { sweep_phase, squeeze_n, initial, .. } => {
                let ov = TransferOverrides {
                    sweep_phase: *sweep_phase,
                    squeeze_n: squeeze_n.clone(),
                    initial: initial.as_deref().map(parse_initial).transpose()?,
                };
                commands::transfer(scn(), &ov)
            }
            Command::Fwm { n_traj, .. } => commands::fwm(scn(), cli.seed, *n_traj),
            Command::Validate { .. } => commands::validate(scenario),
        }
    };
    let docs = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?
            .install(work)?,
        None => work()?,
    };

    match &cli.command {
        Command::Transfer { sweep_phase, squeeze_n, initial, .. } => {
            if let Some(p) = sweep_phase {
                overrides.push(("sweep_phase", p.to_string()));
            }
            if !squeeze_n.is_empty() {
                overrides.push(("squeeze_n", format!("{squeeze_n:?}")));
            }
            if let Some(i) = initial {
                overrides.push(("initial", i.clone()));
            }
        }
        Command::Fwm { n_traj, .. } => {
            overrides.push(("seed", cli.seed.to_string()));
            if let Some(n) = n_traj {
                overrides.push(("n_traj", n.to_string()));
            }
        }
        Command::Match { .. } => {
            if let Some(t) = docs.iter().find_map(|d| match d {
                Document::Table { suffix: "match", table } => Some(table.aligned()),
                _ => None,
            }) {
                stdout_text = Some(t);
            }
        }
        _ => {}
    }

    let meta = Metadata {
        tool: TOOL,
        version: VERSION,
        command: cli.command.name().to_string(),
        config_sha256: config_hash(&scenario, &overrides),
        seed: cli.seed,
        calibration: CALIBRATION.into(),
    };

    let mut written = Vec::new();
    for doc in docs {
        let (path, bytes) = match doc {
            Document::Table { suffix, table } => {
                let path = cli.out_dir.join(format!("{stem}_{suffix}.{}", cli.format.extension()));
                let bytes = match cli.format {
                    Format::Csv => table.to_csv(&meta),
                    Format::Json => json_document(&meta, table.to_json_value()),
                };
                (path, bytes)
            }
            Document::Report { suffix, value } => (cli.out_dir.join(format!("{stem}_{suffix}.json")), json_document(&meta, value)),
        };
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    if let Some(t) = stdout_text {
        print!("{t}");
    }
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(written)
}

/// Parses arguments and runs. Help and version requests succeed with no
/// output files.
pub fn main_with<I, T>(args: I) -> Result<Vec<PathBuf>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                let _ = e.print();
                Ok(Vec::new())
            }
            _ => Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squeeze_flag_splits_on_commas() {
        let cli = Cli::try_parse_from(["optomech", "transfer", "a.json", "--squeeze-N", "0,1,10", "--sweep-phase"]).unwrap();
        match cli.command {
            Command::Transfer { squeeze_n, sweep_phase, .. } => {
                assert_eq!(squeeze_n, vec![0.0, 1.0, 10.0]);
                assert_eq!(sweep_phase, Some(65));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn initial_pair_parsing() {
        assert_eq!(parse_initial("thermal:1, vacuum").unwrap(), [InitialSpec::Thermal { n: 1.0 }, InitialSpec::Vacuum]);
        assert!(parse_initial("vacuum").is_err());
        assert!(parse_initial("squeezed:0.1:0.1,vacuum").is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let e = main_with(["optomech", "sweep", "--bogus"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
