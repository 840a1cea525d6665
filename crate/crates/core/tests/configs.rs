use std::path::PathBuf;

use pme_lab::config::ExperimentConfig;
use pme_lab::runner::run;

fn shipped(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn shipped_configs_run_and_pass() {
    for name in ["separable.toml", "asymptotics.toml", "regularity.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = shipped(name);
        cfg.output_dir = dir.path().join("out");
        let rec = run(&cfg).unwrap();
        let failed: Vec<_> = rec.checks.iter().filter(|c| !c.pass).collect();
        assert!(rec.passed(), "{name}: {failed:?}");
        assert!(dir.path().join("out/report.csv").exists());
    }
}
