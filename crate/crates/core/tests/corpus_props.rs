use dpuconfig_core::arch::action_space;
use dpuconfig_core::corpus::{generate_corpus, simulate_latency, split_train_test, CalibrationParams};
use dpuconfig_core::model::{reference_models, reference_variants};
use dpuconfig_core::WorkloadState;
use proptest::prelude::*;

#[test]
fn full_corpus_shape() {
    let table = generate_corpus(&reference_variants(), &CalibrationParams::default()).unwrap();
    assert_eq!(table.len(), 33 * 26 * 3);
    for r in table.records() {
        r.validate().unwrap();
    }
}

#[test]
fn split_holds_out_three_families() {
    let s = split_train_test(&reference_variants()).unwrap();
    assert_eq!(s.test.len(), 9);
    assert_eq!(s.train.len(), 24);
    assert_eq!(s.representatives, ["RegNetX_400MF", "InceptionV3", "ResNet152"]);
}

#[test]
fn generation_is_deterministic() {
    let models = reference_models();
    let p = CalibrationParams::default();
    assert_eq!(generate_corpus(&models, &p).unwrap(), generate_corpus(&models, &p).unwrap());
}

proptest! {
    #[test]
    fn normal_workload_is_fastest(m in 0usize..11, a in 0usize..26) {
        let model = &reference_models()[m];
        let cfg = &action_space()[a];
        let p = CalibrationParams::default();
        let n = simulate_latency(model, cfg, WorkloadState::N, &p).unwrap();
        for w in [WorkloadState::C, WorkloadState::M] {
            prop_assert!(n <= simulate_latency(model, cfg, w, &p).unwrap());
        }
    }

    #[test]
    fn more_instances_never_lower_throughput(m in 0usize..11, w in 0usize..3) {
        let table = generate_corpus(&reference_models(), &CalibrationParams::default()).unwrap();
        let model = &reference_models()[m];
        let w = WorkloadState::ALL[w];
        for pair in action_space().windows(2) {
            if pair[0].arch == pair[1].arch {
                let a = table.get(&model.name, &pair[0], w).unwrap().fps;
                let b = table.get(&model.name, &pair[1], w).unwrap().fps;
                // Memory contention may cap scaling but noise aside never reverses it by much.
                prop_assert!(b >= 0.9 * a, "{} {}: {a} -> {b}", model.name, pair[1]);
            }
        }
    }
}
