//! `jade` — configuration-driven experiment runner for the JADE MAC protocol
//! simulator: presets for the throughput/convergence scenarios, sweeps over
//! network size, attack demonstrations, and budget audits.
//!
//! Exit codes: 0 success, 1 config error, 2 audit failure, 3 I/O error.

pub mod commands;
pub mod presets;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::CmdError;
use jade_sim::NodeId;

#[derive(Parser)]
#[command(
    name = "jade",
    version,
    about = "Simulation lab for the JADE jamming-resistant MAC protocol"
)]
pub struct Cli {
    /// Override the master seed of the loaded config or preset.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run one experiment from a JSON config file or a named preset.
    Run {
        /// Path to a config JSON file, or a preset name.
        config: String,
        /// Parent directory for the experiment's output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overwrite an existing output directory.
        #[arg(long)]
        force: bool,
        /// Also emit sectors.csv for these center nodes.
        #[arg(long, value_delimiter = ',')]
        sectors: Vec<NodeId>,
    },
    /// Run the same experiment across network sizes and emit a CSV table.
    Sweep {
        config: String,
        /// Comma-separated node counts, e.g. 20,60,100,500.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<u32>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an attack preset plus its no-jamming control and report ratios.
    Attack {
        /// attack-split2u or attack-lowdensity.
        preset: String,
    },
    /// Audit a written trace directory against its jamming budget.
    Audit { dir: PathBuf },
    /// List the built-in presets.
    Presets,
}

/// Parse and dispatch; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("jade: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Run {
            config,
            out,
            force,
            sectors,
        } => {
            let config = commands::load_config(&config, cli.seed)?;
            let output = commands::cmd_run(&config, &out, force, &sectors)?;
            let s = &output.summary;
            println!(
                "{}: n={} rounds={} competitiveness={} mean_T(last 10%)={:.3} [{:.1} ms]",
                s.experiment,
                s.n,
                s.rounds,
                s.competitiveness
                    .map(|c| format!("{c:.4}"))
                    .unwrap_or_else(|| "n/a".into()),
                s.mean_t_last_decile,
                output.wall_ms,
            );
            println!("wrote {}", output.dir.display());
            Ok(())
        }
        Command::Sweep { config, ns, out } => {
            let base = commands::load_config(&config, cli.seed)?;
            let rows = commands::sweep_rows(&base, &ns)?;
            let csv = commands::sweep_csv(&rows);
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .map_err(|e| CmdError::Io(format!("writing {}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Attack { preset } => {
            let report = commands::cmd_attack(&preset, cli.seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .map_err(|e| CmdError::Io(format!("serializing report: {e}")))?
            );
            Ok(())
        }
        Command::Audit { dir } => {
            let outcome = commands::cmd_audit(&dir)?;
            let report = &outcome.report;
            println!("T={} epsilon={} jam_limit={}", report.t, report.epsilon, report.jam_limit);
            for node in &report.nodes {
                println!(
                    "node {}: worst_window={}/{} ({:.4}) open_fraction={:.4}",
                    node.node,
                    node.max_window_jammed,
                    report.t.min(report.rounds),
                    node.max_window_fraction,
                    node.open_fraction
                );
            }
            if report.ok() {
                println!("budget: OK ({} rounds audited)", report.rounds);
                Ok(())
            } else {
                Err(CmdError::Audit(format!(
                    "budget violated at node(s) {:?}: worst window above {} jammed rounds",
                    report.violations, report.jam_limit
                )))
            }
        }
        Command::Presets => {
            for preset in presets::all() {
                println!("{:24} {}", preset.name, preset.about);
            }
            Ok(())
        }
    }
}
