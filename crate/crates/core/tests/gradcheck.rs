mod common;

use std::time::Instant;

#[test]
fn every_op_matches_central_differences() {
    let errors = common::per_op_errors();
    assert!(errors.len() >= 20);
    for (name, err) in errors {
        assert!(err < 1e-4, "{name}: relative error {err:e}");
    }
}

#[test]
fn full_model_matches_central_differences() {
    let start = Instant::now();
    for seed in [3, 17] {
        let err = common::full_model_error(seed);
        assert!(err < 1e-3, "seed {seed}: relative error {err:e}");
    }
    assert!(start.elapsed().as_secs() < 120);
}
