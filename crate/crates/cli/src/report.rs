//! Output artifacts: summary/stat JSON documents and the plot-ready CSVs.
//!
//! Everything except `timing.json` is a pure function of the config and its
//! master seed, so re-running an experiment regenerates the files
//! byte-for-byte.

use serde::Serialize;

use jade_sim::adversary::AdversaryBudget;
use jade_sim::engine::{Trace, TraceDetail};
use jade_sim::metrics::{competitiveness, interval_stats, IntervalStats};
use jade_sim::protocol::Observation;
use jade_sim::topology::RegimeReport;
use jade_sim::{NodeId, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TotalsSummary {
    pub nonjammed: u64,
    pub received: u64,
    pub open: u64,
    pub jammed: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProtocolSummary {
    pub p_hat: f64,
    pub gamma: f64,
    pub t_cap: u32,
}

/// Deterministic run summary (`summary.json`). Wall-clock timing lives in the
/// separate `timing.json` so this file is reproducible bit-for-bit.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub master_seed: u64,
    pub n: usize,
    pub rounds: u64,
    pub competitiveness: Option<f64>,
    pub totals: TotalsSummary,
    pub mean_p_last_decile: f64,
    pub mean_t_last_decile: f64,
    /// Min/max of the strided mean-T rows over the last decile of rounds.
    pub mean_t_band: (f64, f64),
    pub final_mean_p: f64,
    pub final_mean_t: f64,
    pub regime: RegimeReport,
    pub protocol: ProtocolSummary,
    pub budget: AdversaryBudget,
    pub jam_limit: u64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0u64;
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

pub fn summarize(trace: &Trace) -> Result<RunSummary> {
    let stats = interval_stats(trace, 0..trace.rounds)?;
    let params = trace.params();
    let cutoff = trace.rounds - trace.rounds / 10;
    let tail: Vec<_> = trace
        .series
        .iter()
        .filter(|row| row.round >= cutoff)
        .collect();

    let final_mean_p = mean(trace.final_states.iter().map(|s| s.current_p(&params)));
    let final_mean_t = mean(trace.final_states.iter().map(|s| s.threshold() as f64));

    // Fall back to the end-of-run states when the stride leaves no rows in
    // the final decile.
    let (mean_p_last, mean_t_last, band) = if tail.is_empty() {
        (final_mean_p, final_mean_t, (final_mean_t, final_mean_t))
    } else {
        let lo = tail.iter().map(|r| r.mean_t).fold(f64::INFINITY, f64::min);
        let hi = tail.iter().map(|r| r.mean_t).fold(f64::NEG_INFINITY, f64::max);
        (
            mean(tail.iter().map(|r| r.mean_p)),
            mean(tail.iter().map(|r| r.mean_t)),
            (lo, hi),
        )
    };

    Ok(RunSummary {
        experiment: trace.config.name.clone(),
        master_seed: trace.config.master_seed,
        n: trace.n(),
        rounds: trace.rounds,
        competitiveness: competitiveness(&stats),
        totals: TotalsSummary {
            nonjammed: stats.total_nonjammed(),
            received: stats.total_received(),
            open: stats.total_open(),
            jammed: stats.jammed.iter().sum(),
        },
        mean_p_last_decile: mean_p_last,
        mean_t_last_decile: mean_t_last,
        mean_t_band: band,
        final_mean_p,
        final_mean_t,
        regime: trace.topology.validate_regime(trace.config.budget.epsilon),
        protocol: ProtocolSummary {
            p_hat: params.p_hat(),
            gamma: params.gamma(),
            t_cap: params.t_cap(),
        },
        budget: trace.config.budget,
        jam_limit: trace.config.budget.jam_limit(),
    })
}

/// Interval statistics document (`stats.json`).
#[derive(Debug, Serialize)]
pub struct StatsDocument<'a> {
    pub competitiveness: Option<f64>,
    pub interval: (u64, u64),
    pub per_node: &'a IntervalStats,
}

/// `metrics.csv`: `round,mean_p,mean_T,successes`, one row per snapshot round.
pub fn metrics_csv(trace: &Trace) -> String {
    let mut out = String::from("round,mean_p,mean_T,successes\n");
    for row in &trace.series {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.round, row.mean_p, row.mean_t, row.successes
        ));
    }
    out
}

/// `snapshots.csv`: `round,node_id,k,p_v,T_v,c_v`.
pub fn snapshots_csv(trace: &Trace) -> String {
    let params = trace.params();
    let mut out = String::from("round,node_id,k,p_v,T_v,c_v\n");
    for snapshot in &trace.snapshots {
        for (v, state) in snapshot.states.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                snapshot.round,
                v,
                state.k(),
                state.current_p(&params),
                state.threshold(),
                state.counter()
            ));
        }
    }
    out
}

/// `jammask.csv`: `round,node_id,jammed` (needs masks or full detail).
pub fn jammask_csv(trace: &Trace) -> Option<String> {
    if trace.records.is_empty() && trace.rounds > 0 {
        return None;
    }
    let mut out = String::from("round,node_id,jammed\n");
    for (round, record) in trace.records.iter().enumerate() {
        for v in 0..trace.n() {
            out.push_str(&format!("{},{},{}\n", round, v, record.jam.get(v) as u8));
        }
    }
    Some(out)
}

/// `outcomes.csv`: `round,node_id,event,peer` (full detail only).
pub fn outcomes_csv(trace: &Trace) -> Option<String> {
    if trace.detail != TraceDetail::Full {
        return None;
    }
    let mut out = String::from("round,node_id,event,peer\n");
    for (round, record) in trace.records.iter().enumerate() {
        for (v, obs) in record.observations.iter().enumerate() {
            let (event, peer) = match obs {
                Observation::Transmitted => ("transmit", String::new()),
                Observation::Idle => ("idle", String::new()),
                Observation::Busy => ("busy", String::new()),
                Observation::Received(s) => ("receive", s.to_string()),
            };
            out.push_str(&format!("{round},{v},{event},{peer}\n"));
        }
    }
    Some(out)
}

/// `sectors.csv` for chosen center nodes: `round,center_node,sector,p_S`.
pub fn sectors_csv(trace: &Trace, centers: &[NodeId]) -> Result<String> {
    let mut out = String::from("round,center_node,sector,p_S\n");
    for &u in centers {
        for sector in 0..6u8 {
            for (round, p_s) in jade_sim::metrics::sector_series(trace, u, sector)? {
                out.push_str(&format!("{round},{u},{sector},{p_s}\n"));
            }
        }
    }
    Ok(out)
}
