//! Trace persistence: CSV and JSON-lines, one row per (step, vehicle), plus a
//! CSV reader for verification tooling. Floats are written in shortest
//! round-trip form so export/import is lossless.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use cegt_core::TraceLog64;

use crate::config::TraceFormat;

pub const CSV_HEADER: &str = "step,sim_time_s,vehicle_id,x_m,y_m,lane,v_mps,r_safety,\
r_efficiency,r_cooperation,a_causal,r_total,causal_influence,collision_flag,ttc_front_s,\
ttc_front_signed_s,lane_change_active";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {reason}")]
    Malformed {
        path: String,
        line: usize,
        reason: String,
    },
}

/// One exported row. Infinite time-to-collision values round-trip as `None`
/// (an empty CSV cell / JSON `null`).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u32,
    pub sim_time_s: f64,
    pub vehicle_id: u32,
    pub x_m: f64,
    pub y_m: f64,
    pub lane: u32,
    pub v_mps: f64,
    pub r_safety: f64,
    pub r_efficiency: f64,
    pub r_cooperation: f64,
    pub a_causal: f64,
    pub r_total: f64,
    pub causal_influence: f64,
    pub collision_flag: bool,
    pub ttc_front_s: Option<f64>,
    pub ttc_front_signed_s: Option<f64>,
    pub lane_change_active: bool,
}

/// Flatten a trace into rows, in (step, vehicle) order.
pub fn trace_rows(trace: &TraceLog64) -> Vec<TraceRow> {
    let mut rows = Vec::with_capacity(trace.steps.len() * trace.meta.n_vehicles);
    for step in &trace.steps {
        for (i, veh) in step.vehicles.iter().enumerate() {
            let reward = &step.rewards[i];
            let collided = step
                .collisions
                .iter()
                .any(|e| e.pair.0 == veh.id || e.pair.1 == veh.id);
            let ttc = step.ttc.iter().find(|r| r.rear_id == veh.id);
            let finite = |v: f64| v.is_finite().then_some(v);
            rows.push(TraceRow {
                step: step.step,
                sim_time_s: step.sim_time,
                vehicle_id: veh.id,
                x_m: veh.x,
                y_m: veh.y,
                lane: veh.lane,
                v_mps: veh.v,
                r_safety: reward.breakdown.safety,
                r_efficiency: reward.breakdown.efficiency,
                r_cooperation: reward.breakdown.cooperation,
                a_causal: reward.breakdown.causal,
                r_total: reward.total,
                causal_influence: step.causal.influence[i],
                collision_flag: collided,
                ttc_front_s: ttc.and_then(|r| finite(r.value)),
                ttc_front_signed_s: ttc.and_then(|r| finite(r.signed_value)),
                lane_change_active: veh.lane_change_active,
            });
        }
    }
    rows
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render the trace as CSV text (header plus one row per step and vehicle).
pub fn trace_to_csv(trace: &TraceLog64) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in trace_rows(trace) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.sim_time_s,
            r.vehicle_id,
            r.x_m,
            r.y_m,
            r.lane,
            r.v_mps,
            r.r_safety,
            r.r_efficiency,
            r.r_cooperation,
            r.a_causal,
            r.r_total,
            r.causal_influence,
            r.collision_flag as u8,
            opt_cell(r.ttc_front_s),
            opt_cell(r.ttc_front_signed_s),
            r.lane_change_active as u8,
        ));
    }
    out
}

fn json_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "null".into())
}

/// Render the trace as JSON lines mirroring the CSV fields.
pub fn trace_to_jsonl(trace: &TraceLog64) -> String {
    let mut out = String::new();
    for r in trace_rows(trace) {
        out.push_str(&format!(
            "{{\"step\":{},\"sim_time_s\":{},\"vehicle_id\":{},\"x_m\":{},\"y_m\":{},\
             \"lane\":{},\"v_mps\":{},\"r_safety\":{},\"r_efficiency\":{},\
             \"r_cooperation\":{},\"a_causal\":{},\"r_total\":{},\"causal_influence\":{},\
             \"collision_flag\":{},\"ttc_front_s\":{},\"ttc_front_signed_s\":{},\
             \"lane_change_active\":{}}}\n",
            r.step,
            r.sim_time_s,
            r.vehicle_id,
            r.x_m,
            r.y_m,
            r.lane,
            r.v_mps,
            r.r_safety,
            r.r_efficiency,
            r.r_cooperation,
            r.a_causal,
            r.r_total,
            r.causal_influence,
            r.collision_flag,
            json_opt(r.ttc_front_s),
            json_opt(r.ttc_front_signed_s),
            r.lane_change_active,
        ));
    }
    out
}

/// Write a trace file in the requested format.
pub fn export_trace(
    trace: &TraceLog64,
    path: &Path,
    format: TraceFormat,
) -> Result<(), ExportError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let text = match format {
        TraceFormat::Csv => trace_to_csv(trace),
        TraceFormat::JsonLines => trace_to_jsonl(trace),
    };
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

/// Read back an exported CSV trace.
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, ExportError> {
    let text = fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        _ => {
            return Err(ExportError::Malformed {
                path: display,
                line: 1,
                reason: "missing or unexpected header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            return Err(ExportError::Malformed {
                path: display.clone(),
                line: idx + 1,
                reason: format!("expected 17 fields, got {}", fields.len()),
            });
        }
        let bad = |reason: String| ExportError::Malformed {
            path: display.clone(),
            line: idx + 1,
            reason,
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(e.to_string()));
        let int = |s: &str| s.parse::<u32>().map_err(|e| bad(e.to_string()));
        let opt = |s: &str| -> Result<Option<f64>, ExportError> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(num(s)?))
            }
        };
        rows.push(TraceRow {
            step: int(fields[0])?,
            sim_time_s: num(fields[1])?,
            vehicle_id: int(fields[2])?,
            x_m: num(fields[3])?,
            y_m: num(fields[4])?,
            lane: int(fields[5])?,
            v_mps: num(fields[6])?,
            r_safety: num(fields[7])?,
            r_efficiency: num(fields[8])?,
            r_cooperation: num(fields[9])?,
            a_causal: num(fields[10])?,
            r_total: num(fields[11])?,
            causal_influence: num(fields[12])?,
            collision_flag: fields[13] == "1",
            ttc_front_s: opt(fields[14])?,
            ttc_front_signed_s: opt(fields[15])?,
            lane_change_active: fields[16] == "1",
        });
    }
    Ok(rows)
}
