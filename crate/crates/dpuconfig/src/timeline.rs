//! Scenario input and timeline outputs.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use dpuconfig_core::controller::{Arrival, Scenario};
use dpuconfig_core::model::WorkloadState;

use crate::error::{io_err, Error, Result};

const SCENARIO_COLUMNS: [&str; 4] = ["time_ms", "model", "workload", "fps_constraint"];

pub fn read_scenario<R: Read>(input: R, path: &Path) -> Result<Vec<Arrival>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?
        .clone();
    let pos: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let missing: Vec<String> = SCENARIO_COLUMNS
        .iter()
        .filter(|c| !pos.contains_key(*c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns {
            path: path.into(),
            columns: missing,
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let fail = |message: String| Error::Row {
            path: path.into(),
            row: i + 1,
            message,
        };
        let row = row.map_err(|e| fail(e.to_string()))?;
        let get = |c: &str| row.get(pos[c]).unwrap_or("");
        let num = |c: &str| {
            get(c)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| fail(format!("column `{c}`: cannot parse `{}`", get(c))))
        };
        let workload: WorkloadState = get("workload")
            .parse()
            .map_err(|e| fail(format!("column `workload`: {e}")))?;
        out.push(Arrival {
            time_ms: num("time_ms")?,
            model: get("model").to_string(),
            workload,
            fps_constraint: num("fps_constraint")?,
        });
    }
    Ok(out)
}

pub fn load_scenario(path: &Path) -> Result<Vec<Arrival>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_scenario(std::io::BufReader::new(file), path)
}

pub fn write_timeline<W: Write>(out: W, scenario: &Scenario) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["start_ms", "duration_ms", "phase", "detail"])?;
    for e in &scenario.events {
        w.write_record([
            e.start_ms.to_string(),
            e.duration_ms.to_string(),
            e.phase.to_string(),
            e.detail.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())?.flush()?;
    Ok(())
}

pub fn write_decisions<W: Write>(out: W, scenario: &Scenario) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time_ms", "model", "workload", "config", "overhead_ms", "fps", "ppw", "oracle_ppw"])?;
    for d in &scenario.decisions {
        w.write_record([
            d.arrival.time_ms.to_string(),
            d.arrival.model.clone(),
            d.arrival.workload.to_string(),
            d.config.to_string(),
            d.overhead_ms.to_string(),
            d.fps.to_string(),
            d.ppw.to_string(),
            d.oracle_ppw.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error())?.flush()?;
    Ok(())
}

/// Shaded overhead spans plus a PPW step line for the inference segments.
pub fn timeline_plot_json(scenario: &Scenario) -> String {
    let spans: Vec<_> = scenario
        .events
        .iter()
        .filter(|e| e.phase.is_overhead())
        .map(|e| {
            serde_json::json!({
                "start_ms": e.start_ms,
                "end_ms": e.start_ms + e.duration_ms,
                "phase": e.phase,
            })
        })
        .collect();
    let inference: Vec<_> = scenario
        .events
        .iter()
        .filter(|e| !e.phase.is_overhead())
        .zip(&scenario.decisions)
        .map(|(e, d)| {
            serde_json::json!({
                "start_ms": e.start_ms,
                "end_ms": e.start_ms + e.duration_ms,
                "model": d.arrival.model,
                "config": d.config.to_string(),
                "ppw": d.ppw,
                "oracle_ppw": d.oracle_ppw,
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "overheads": spans,
        "inference": inference,
        "summary": scenario.summary,
    }))
    .expect("plot data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scenario() {
        let text = "time_ms,model,workload,fps_constraint\n0,InceptionV3,C,30\n60000,ResNeXt50_32x4d,C,30\n";
        let a = read_scenario(text.as_bytes(), Path::new("s.csv")).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[1].time_ms, 60000.0);
        assert_eq!(a[1].workload, WorkloadState::C);
    }

    #[test]
    fn bad_workload_reports_row() {
        let text = "time_ms,model,workload,fps_constraint\n0,InceptionV3,X,30\n";
        let err = read_scenario(text.as_bytes(), Path::new("s.csv")).unwrap_err().to_string();
        assert!(err.contains("row 1") && err.contains("workload"), "{err}");
    }

    #[test]
    fn missing_column_named() {
        let text = "time_ms,model,workload\n0,InceptionV3,C\n";
        match read_scenario(text.as_bytes(), Path::new("s.csv")) {
            Err(Error::MissingColumns { columns, .. }) => assert_eq!(columns, ["fps_constraint"]),
            other => panic!("{other:?}"),
        }
    }
}
