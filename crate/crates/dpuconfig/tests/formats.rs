use std::path::Path;

use dpuconfig::corpus_csv::{read_records, write_records};
use dpuconfig::manifest;
use dpuconfig_core::arch::action_space;
use dpuconfig_core::corpus::MeasurementRecord;
use dpuconfig_core::model::reference_variants;
use dpuconfig_core::WorkloadState;
use proptest::prelude::*;

fn positive() -> impl Strategy<Value = f64> {
    1e-6f64..1e6
}

fn record() -> impl Strategy<Value = MeasurementRecord> {
    (
        0usize..26,
        0usize..3,
        positive(),
        positive(),
        positive(),
        prop::array::uniform4(0.0f64..1.0),
        prop::array::uniform5(0.0f64..2e4),
        prop::array::uniform5(0.0f64..2e4),
    )
        .prop_map(|(a, w, fps, pf, pa, cpu, rd, wr)| MeasurementRecord {
            model: "ResNet18_PR25".into(),
            pruning_ratio: 0.25,
            config: action_space()[a],
            workload: WorkloadState::ALL[w],
            fps,
            p_fpga: pf,
            p_arm: pa,
            cpu_util: cpu,
            mem_read_bw: rd,
            mem_write_bw: wr,
        })
}

proptest! {
    #[test]
    fn csv_round_trip_is_bit_exact(records in prop::collection::vec(record(), 1..30)) {
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(buf.as_slice(), Path::new("mem.csv")).unwrap();
        prop_assert_eq!(back, records);
    }
}

#[test]
fn manifest_round_trip_of_reference_variants() {
    let models = reference_variants();
    let text = manifest::to_toml(&models);
    assert_eq!(manifest::from_toml(&text, Path::new("m.toml")).unwrap(), models);
}
