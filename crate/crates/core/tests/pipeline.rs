use symsynth::pipeline::{run_scenario, RunOptions};
use symsynth::reach::ReachDict;
use symsynth::scenario::Scenario;
use symsynth::synthesis::{Controller, Metrics, Strategy};

fn opts(dir: &std::path::Path, reuse: Option<std::path::PathBuf>) -> RunOptions {
    RunOptions { out_dir: dir.to_path_buf(), reuse_reachdict: reuse, validate: true, rollouts: 5, containment_samples: 200, seed: 4 }
}

#[test]
fn reused_reach_dict_gives_identical_results() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let mut sc = Scenario::toy();
    sc.strategy = Strategy::S5;
    let first = run_scenario(sc.clone(), &opts(&a, None)).unwrap();
    let second = run_scenario(sc, &opts(&b, Some(a.join("reachdict.json")))).unwrap();

    for f in ["reachdict.json", "controller.json", "abstraction.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    for i in 0..5 {
        let f = format!("rollouts/rollout_{i:04}.csv");
        assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap(), "{f}");
    }
    assert_eq!(first.metrics.n_ctr, second.metrics.n_ctr);
    assert_eq!(first.validation, second.validation);
    assert!(first.validation.unwrap().ok());

    let rd: ReachDict<f64> = ReachDict::load(&a.join("reachdict.json")).unwrap();
    assert_eq!(rd.num_controls(), 729);
    let ctl = Controller::load(&a.join("controller.json")).unwrap();
    assert_eq!(ctl.num_controlled(), first.metrics.n_ctr);
    let rows = Metrics::read_csv(&a.join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].strategy, "5");
    assert_eq!(rows[0].qx_counts, "5x5x4");
}

#[test]
fn mismatched_reach_dict_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    run_scenario(Scenario::toy(), &opts(&a, None)).unwrap();
    let mut other = Scenario::toy();
    other.tau = 2.0;
    let err = run_scenario(other, &opts(&tmp.path().join("b"), Some(a.join("reachdict.json"))));
    assert!(err.is_err());
}
