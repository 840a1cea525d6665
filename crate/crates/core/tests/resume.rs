use pme_lab::config::ExperimentConfig;
use pme_lab::runner::run;

#[test]
fn asymptotics_rerun_from_persisted_trajectories_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let base = format!(
        "output_dir = {:?}\nm = 2.0\nn = 120\nexperiments = [\"asymptotics\"]\n\
         [domain]\nkind = \"interval\"\nlength = 1.0\n\
         [initial]\nkind = \"bump\"\ncenter = 0.4\nwidth = 0.15\nheight = 0.6\n\
         [schedule]\nkind = \"fixed\"\ndt = 1e-3\nt_end = 1.0\nstore_every = 100\n\
         [asymptotics]\ntau_end = 10.0\ndtau = 2e-3\nstore_every = 10\ntail_window = [7.0, 10.0]\nfit_window = [2.0, 8.0]\n",
        out.to_str().unwrap()
    );
    let first = run(&ExperimentConfig::from_toml(&base).unwrap()).unwrap();
    let csv = std::fs::read(out.join("asymptotics.csv")).unwrap();
    std::fs::remove_file(out.join("asymptotics.csv")).unwrap();

    let resumed_cfg = ExperimentConfig::from_toml(&base.replace("m = 2.0\n", "m = 2.0\nresume = true\n")).unwrap();
    let second = run(&resumed_cfg).unwrap();
    assert_eq!(std::fs::read(out.join("asymptotics.csv")).unwrap(), csv);
    assert_eq!(first.summary["tau_star"], second.summary["tau_star"]);
    assert!(second.stats.iter().all(|s| s.experiment != "evolve"));
}
