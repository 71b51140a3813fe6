//! Measurement corpus as CSV.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use dpuconfig_core::arch::{DpuArchitecture, DpuConfiguration};
use dpuconfig_core::corpus::{MeasurementRecord, CPU_CORES, MEMORY_PORTS};
use dpuconfig_core::model::WorkloadState;

use crate::error::{io_err, Error, Result};

pub fn header() -> Vec<String> {
    let mut h: Vec<String> = [
        "model",
        "pruning_ratio",
        "arch",
        "instances",
        "workload",
        "fps",
        "p_fpga_w",
        "p_arm_w",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((0..CPU_CORES).map(|i| format!("cpu{i}")));
    h.extend((0..MEMORY_PORTS).map(|i| format!("memr{i}")));
    h.extend((0..MEMORY_PORTS).map(|i| format!("memw{i}")));
    h
}

pub fn write_records<W: Write>(out: W, records: &[MeasurementRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for r in records {
        let mut row = vec![
            r.model.clone(),
            r.pruning_ratio.to_string(),
            r.config.arch.name().to_string(),
            r.config.instances.to_string(),
            r.workload.as_str().to_string(),
            r.fps.to_string(),
            r.p_fpga.to_string(),
            r.p_arm.to_string(),
        ];
        row.extend(r.cpu_util.iter().map(f64::to_string));
        row.extend(r.mem_read_bw.iter().map(f64::to_string));
        row.extend(r.mem_write_bw.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_file(path: &Path, records: &[MeasurementRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_records(std::io::BufWriter::new(file), records).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

/// Parses and validates records, preserving row order. `path` only labels
/// diagnostics. Rows are numbered from 1, excluding the header.
pub fn read_records<R: Read>(input: R, path: &Path) -> Result<Vec<MeasurementRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            path: path.into(),
            message: format!("cannot read header: {e}"),
        })?
        .clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let expected = header();
    let missing: Vec<String> = expected
        .iter()
        .filter(|c| !position.contains_key(c.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns {
            path: path.into(),
            columns: missing,
        });
    }
    let col: Vec<usize> = expected.iter().map(|c| position[c.as_str()]).collect();

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let fail = |message: String| Error::Row {
            path: path.into(),
            row: row_no,
            message,
        };
        let row = row.map_err(|e| fail(e.to_string()))?;
        let field = |k: usize| row.get(col[k]).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .map_err(|_| fail(format!("column `{}`: cannot parse `{}` as a number", expected[k], field(k))))
        };
        let arch: DpuArchitecture = field(2).parse().map_err(|e| fail(format!("column `arch`: {e}")))?;
        let instances: u32 = field(3)
            .parse()
            .map_err(|_| fail(format!("column `instances`: cannot parse `{}`", field(3))))?;
        let workload: WorkloadState = field(4).parse().map_err(|e| fail(format!("column `workload`: {e}")))?;
        let mut cpu_util = [0.0; CPU_CORES];
        let mut mem_read_bw = [0.0; MEMORY_PORTS];
        let mut mem_write_bw = [0.0; MEMORY_PORTS];
        for (j, c) in cpu_util.iter_mut().enumerate() {
            *c = num(8 + j)?;
        }
        for j in 0..MEMORY_PORTS {
            mem_read_bw[j] = num(8 + CPU_CORES + j)?;
            mem_write_bw[j] = num(8 + CPU_CORES + MEMORY_PORTS + j)?;
        }
        let record = MeasurementRecord {
            model: field(0).to_string(),
            pruning_ratio: num(1)?,
            config: DpuConfiguration::new(arch, instances),
            workload,
            fps: num(5)?,
            p_fpga: num(6)?,
            p_arm: num(7)?,
            cpu_util,
            mem_read_bw,
            mem_write_bw,
        };
        record.validate().map_err(|e| fail(e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

pub fn ingest_csv(path: &Path) -> Result<Vec<MeasurementRecord>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_records(std::io::BufReader::new(file), path)
}
