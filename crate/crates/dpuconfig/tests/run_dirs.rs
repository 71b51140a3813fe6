use dpuconfig::commands::create_run_dir;

#[test]
fn repeated_runs_get_distinct_directories() {
    let dir = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = (0..3).map(|_| create_run_dir(dir.path(), "train").unwrap()).collect();
    assert!(dirs.iter().all(|d| d.is_dir()));
    assert!(dirs[0] != dirs[1] && dirs[1] != dirs[2] && dirs[0] != dirs[2]);
    for d in &dirs {
        assert!(d.file_name().unwrap().to_string_lossy().starts_with("train-"));
    }
}
