//! Command implementations shared by the binary and the test suites.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use jade_sim::adversary::{audit_masks, AuditReport, JamMask, StrategySpec};
use jade_sim::bits::BitRow;
use jade_sim::engine::rng::derive_seed;
use jade_sim::engine::{run, ExperimentConfig, TopologySpec};
use jade_sim::metrics::{competitiveness, interval_stats};
use jade_sim::{Error, NodeId};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::presets;
use crate::report::{self, RunSummary, StatsDocument};

/// Command failures carry the process exit code: 1 config, 2 audit, 3 I/O.
#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Audit(String),
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Config(_) => 1,
            CmdError::Audit(_) => 2,
            CmdError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Config(msg) => write!(f, "config error: {msg}"),
            CmdError::Audit(msg) => write!(f, "audit failure: {msg}"),
            CmdError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Config(e.to_string())
    }
}

fn io_err(context: &str, e: std::io::Error) -> CmdError {
    CmdError::Io(format!("{context}: {e}"))
}

/// Load a config from a named preset or a JSON file, applying an optional
/// seed override.
pub fn load_config(source: &str, seed: Option<u64>) -> Result<ExperimentConfig, CmdError> {
    let mut config = match presets::find(source) {
        Some(preset) => preset.config,
        None => {
            let text = std::fs::read_to_string(source)
                .map_err(|e| io_err(&format!("reading {source}"), e))?;
            serde_json::from_str(&text)
                .map_err(|e| CmdError::Config(format!("parsing {source}: {e}")))?
        }
    };
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub wall_ms: f64,
}

/// Execute one experiment and write its artifact directory.
///
/// Layout: `<out_parent>/<name>/{config.json, summary.json, stats.json,
/// metrics.csv, snapshots.csv, positions.csv, jammask.csv?, outcomes.csv?,
/// sectors.csv?, timing.json}`. Refuses an existing directory without
/// `force`.
pub fn cmd_run(
    config: &ExperimentConfig,
    out_parent: &Path,
    force: bool,
    sectors: &[NodeId],
) -> Result<RunOutput, CmdError> {
    config.validate()?;
    let dir = out_parent.join(&config.name);
    if dir.exists() {
        if !force {
            return Err(CmdError::Io(format!(
                "output directory {} exists; pass --force to overwrite",
                dir.display()
            )));
        }
        std::fs::remove_dir_all(&dir).map_err(|e| io_err("clearing output directory", e))?;
    }
    std::fs::create_dir_all(&dir).map_err(|e| io_err("creating output directory", e))?;

    let started = Instant::now();
    let trace = run(config)?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    let summary = report::summarize(&trace)?;
    let stats = interval_stats(&trace, 0..trace.rounds)?;

    let write = |name: &str, content: &str| -> Result<(), CmdError> {
        std::fs::write(dir.join(name), content).map_err(|e| io_err(&format!("writing {name}"), e))
    };

    write("config.json", &to_pretty_json(config)?)?;
    write("summary.json", &to_pretty_json(&summary)?)?;
    write(
        "stats.json",
        &to_pretty_json(&StatsDocument {
            competitiveness: competitiveness(&stats),
            interval: (0, trace.rounds),
            per_node: &stats,
        })?,
    )?;
    write("metrics.csv", &report::metrics_csv(&trace))?;
    write("snapshots.csv", &report::snapshots_csv(&trace))?;
    write("positions.csv", &trace.topology.positions().to_csv())?;
    if let Some(csv) = report::jammask_csv(&trace) {
        write("jammask.csv", &csv)?;
    }
    if let Some(csv) = report::outcomes_csv(&trace) {
        write("outcomes.csv", &csv)?;
    }
    if !sectors.is_empty() {
        write("sectors.csv", &report::sectors_csv(&trace, sectors)?)?;
    }
    write("timing.json", &format!("{{\n  \"wall_ms\": {wall_ms}\n}}\n"))?;

    Ok(RunOutput {
        dir,
        summary,
        wall_ms,
    })
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CmdError> {
    serde_json::to_string_pretty(value).map_err(|e| CmdError::Io(format!("serializing json: {e}")))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub competitiveness: Option<f64>,
    pub mean_t: f64,
    pub runtime_ms: f64,
}

/// One experiment per network size, with per-size derived seeds.
pub fn sweep_rows(base: &ExperimentConfig, ns: &[u32]) -> Result<Vec<SweepRow>, CmdError> {
    if ns.is_empty() {
        return Err(CmdError::Config("sweep: ns must be nonempty".into()));
    }
    base.validate()?;
    let run_one = |&n: &u32| -> Result<SweepRow, CmdError> {
        if n == 0 {
            return Err(CmdError::Config("sweep: n must be at least 1".into()));
        }
        let topology = match &base.topology {
            TopologySpec::Uniform { side, .. } => TopologySpec::Uniform { n, side: *side },
            TopologySpec::Gaussian { sigma, center, .. } => TopologySpec::Gaussian {
                n,
                sigma: *sigma,
                center: *center,
            },
            TopologySpec::Explicit { .. } => {
                return Err(CmdError::Config(
                    "sweep: requires a generated placement (uniform or gaussian)".into(),
                ))
            }
        };
        let config = ExperimentConfig {
            name: format!("{}-n{}", base.name, n),
            topology,
            master_seed: derive_seed(base.master_seed, n as u64),
            ..base.clone()
        };
        let started = Instant::now();
        let trace = run(&config)?;
        let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
        let summary = report::summarize(&trace)?;
        Ok(SweepRow {
            n,
            competitiveness: summary.competitiveness,
            mean_t: summary.mean_t_last_decile,
            runtime_ms,
        })
    };

    #[cfg(feature = "parallel")]
    let rows: Result<Vec<SweepRow>, CmdError> = ns.par_iter().map(run_one).collect();
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<SweepRow>, CmdError> = ns.iter().map(run_one).collect();
    rows
}

/// `n,competitiveness,mean_T,runtime_ms`. All columns except `runtime_ms`
/// are deterministic under a fixed master seed.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,competitiveness,mean_T,runtime_ms\n");
    for row in rows {
        let comp = row
            .competitiveness
            .map(|c| c.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.n, comp, row.mean_t, row.runtime_ms
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioSummary {
    pub received: u64,
    pub nonjammed: u64,
    pub ratio: Option<f64>,
}

fn ratio_over(stats: &jade_sim::metrics::IntervalStats, nodes: &[NodeId]) -> RatioSummary {
    let received: u64 = nodes.iter().map(|&v| stats.received[v as usize]).sum();
    let nonjammed: u64 = nodes.iter().map(|&v| stats.nonjammed[v as usize]).sum();
    RatioSummary {
        received,
        nonjammed,
        ratio: (nonjammed > 0).then(|| received as f64 / nonjammed as f64),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AttackSide {
    pub victim: RatioSummary,
    pub group: RatioSummary,
    pub network: RatioSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackReportDoc {
    pub preset: String,
    pub victim_node: NodeId,
    pub group_size: usize,
    pub rounds: u64,
    /// Ratios under the attack strategy.
    pub jammed: AttackSide,
    /// Ratios for the no-jamming control run of the same scenario.
    pub control: AttackSide,
}

/// Run an attack preset and its no-jamming control; report the victim's
/// personal `s_v/f_v` against the group and network ratios.
pub fn cmd_attack(preset_name: &str, seed: Option<u64>) -> Result<AttackReportDoc, CmdError> {
    let preset = presets::find(preset_name)
        .ok_or_else(|| CmdError::Config(format!("unknown preset {preset_name}")))?;
    let mut config = preset.config;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let (group, victim) = match &config.adversary.strategy {
        StrategySpec::Split2u { group, victim } | StrategySpec::LowDensity { group, victim } => {
            (group.clone(), *victim)
        }
        _ => {
            return Err(CmdError::Config(format!(
                "{preset_name} is not an attack preset"
            )))
        }
    };

    let side = |config: &ExperimentConfig| -> Result<(AttackSide, u64), CmdError> {
        let trace = run(config)?;
        let stats = interval_stats(&trace, 0..trace.rounds)?;
        let all: Vec<NodeId> = (0..trace.n() as NodeId).collect();
        Ok((
            AttackSide {
                victim: ratio_over(&stats, &[victim]),
                group: ratio_over(&stats, &group),
                network: ratio_over(&stats, &all),
            },
            trace.rounds,
        ))
    };

    let (jammed, rounds) = side(&config)?;
    let control_config = ExperimentConfig {
        name: format!("{}-control", config.name),
        adversary: jade_sim::engine::AdversarySpec {
            strategy: StrategySpec::NoJam,
            enforce: false,
        },
        ..config
    };
    let (control, _) = side(&control_config)?;

    Ok(AttackReportDoc {
        preset: preset_name.to_string(),
        victim_node: victim,
        group_size: group.len(),
        rounds,
        jammed,
        control,
    })
}

/// Outcome of auditing a trace directory.
pub struct AuditOutcome {
    pub report: AuditReport,
}

/// Re-check a written trace against its configured budget: rebuild the
/// topology from `config.json` (placement is seed-deterministic), load
/// `jammask.csv`, and run the exact sliding-window audit.
pub fn cmd_audit(dir: &Path) -> Result<AuditOutcome, CmdError> {
    let config_path = dir.join("config.json");
    let text = std::fs::read_to_string(&config_path)
        .map_err(|e| io_err(&format!("reading {}", config_path.display()), e))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CmdError::Config(format!("parsing config.json: {e}")))?;
    config.validate()?;
    let topology = config.topology.build(config.master_seed)?;
    let n = topology.n();

    let mask_path = dir.join("jammask.csv");
    let text = std::fs::read_to_string(&mask_path)
        .map_err(|e| io_err(&format!("reading {}", mask_path.display()), e))?;
    let mut cells: Vec<(u64, usize, bool)> = Vec::new();
    let mut max_round = 0u64;
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line != "round,node_id,jammed" {
                return Err(CmdError::Io(format!(
                    "jammask.csv: unexpected header {line:?}"
                )));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse_err =
            || CmdError::Io(format!("jammask.csv: malformed line {}: {line:?}", lineno + 1));
        let round: u64 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(parse_err)?;
        let node: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(parse_err)?;
        let jammed: u8 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(parse_err)?;
        if node >= n || jammed > 1 || fields.next().is_some() {
            return Err(parse_err());
        }
        max_round = max_round.max(round);
        cells.push((round, node, jammed == 1));
    }
    if cells.is_empty() {
        return Err(CmdError::Io("jammask.csv: no data rows".into()));
    }

    let rounds = (max_round + 1) as usize;
    let mut masks: Vec<JamMask> = vec![BitRow::zeros(n); rounds];
    for (round, node, jammed) in cells {
        if jammed {
            masks[round as usize].set(node, true);
        }
    }

    let report = audit_masks(&masks, &topology, &config.budget);
    Ok(AuditOutcome { report })
}
