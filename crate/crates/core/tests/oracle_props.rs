use dpuconfig_core::arch::action_space;
use dpuconfig_core::corpus::MeasurementRecord;
use dpuconfig_core::evaluator::oracle_from_records;
use dpuconfig_core::WorkloadState;
use proptest::prelude::*;

/// Plain linear scan: strictly better PPW wins, ties go to fewer instances,
/// then to the smaller architecture.
fn rescan(records: &[MeasurementRecord], c: f64) -> (usize, bool) {
    let scan = |feasible_only: bool| {
        let mut best: Option<usize> = None;
        for (i, r) in records.iter().enumerate() {
            if feasible_only && r.fps < c {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let (rb, pb, pr) = (&records[b], records[b].fps / records[b].p_fpga, r.fps / r.p_fpga);
                    pr > pb
                        || (pr == pb
                            && (r.config.instances < rb.config.instances
                                || (r.config.instances == rb.config.instances && r.config.arch < rb.config.arch)))
                }
            };
            if better {
                best = Some(i);
            }
        }
        best
    };
    match scan(true) {
        Some(i) => (i, true),
        None => (scan(false).unwrap(), false),
    }
}

fn table_strategy() -> impl Strategy<Value = Vec<MeasurementRecord>> {
    // Small value grids make equal PPW across configurations common.
    prop::collection::vec((1u32..8, 1u32..5), 26).prop_map(|cells| {
        cells
            .into_iter()
            .zip(action_space())
            .map(|((f, p), cfg)| MeasurementRecord {
                model: "m".into(),
                pruning_ratio: 0.0,
                config: *cfg,
                workload: WorkloadState::N,
                fps: f64::from(f) * 10.0,
                p_fpga: f64::from(p),
                p_arm: 1.0,
                cpu_util: [0.0; 4],
                mem_read_bw: [0.0; 5],
                mem_write_bw: [0.0; 5],
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn oracle_matches_rescan(records in table_strategy(), c in prop::sample::select(vec![5.0, 30.0, 55.0, 75.0])) {
        let got = oracle_from_records(records.iter(), c).unwrap();
        let (i, feasible) = rescan(&records, c);
        prop_assert_eq!(got.config, records[i].config);
        prop_assert_eq!(got.feasible, feasible);
    }
}
