use std::path::Path;
use std::process::{Command, Output};

fn symsynth(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symsynth")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn malformed_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = symsynth(&["default-config", "--scene", "toy"], tmp.path());
    assert!(toy.status.success());
    let text = String::from_utf8(toy.stdout).unwrap();

    let cases = [
        (text.replace("tau = 3.0", "tau = -1.0"), "tau"),
        (text.replace("reach_box = [[3.0, 5.0]", "reach_box = [[5.0, 3.0]"), "reach_box[0]"),
        (text.replace("grid_counts = [5, 5, 4]", "grid_counts = [5, 0, 4]"), "grid_counts[1]"),
        (text.replace("strategy = \"0\"", "strategy = \"9\""), "strategy"),
        (format!("{text}\nbogus = 1\n"), "bogus"),
    ];
    for (i, (body, field)) in cases.iter().enumerate() {
        let path = tmp.path().join(format!("bad{i}.toml"));
        std::fs::write(&path, body).unwrap();
        let out = symsynth(&["run", "--config", path.to_str().unwrap()], tmp.path());
        assert_eq!(out.status.code(), Some(2), "case {i}");
        assert!(stderr(&out).contains(field), "case {i}: {}", stderr(&out));
    }
}

#[test]
fn unknown_scene_and_strategy_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(symsynth(&["run", "--scene", "lake"], tmp.path()).status.code(), Some(2));
    let out = symsynth(&["run", "--scene", "toy", "--strategy", "7"], tmp.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("unknown strategy"));
}

#[test]
fn run_writes_artifacts_and_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = symsynth(
        &["run", "--scene", "toy", "--strategy", "5", "--validate", "--rollouts", "20", "--tube-samples", "500", "--out-dir", "res"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let res = tmp.path().join("res");
    for f in ["reachdict.json", "abstraction.json", "controller.json", "metrics.csv", "run.json", "rollouts/rollout_0019.csv"] {
        assert!(res.join(f).exists(), "{f}");
    }
    let run: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(res.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["strategy"], "5");
    assert_eq!(run["validation"]["containment_violations"], 0);
    assert_eq!(run["validation"]["verdicts"]["Reached"], 20);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("strategy,qx_counts,n_grid_star,n_sym,n_cao,n_ctr,"));
    let rollout = std::fs::read_to_string(res.join("rollouts/rollout_0000.csv")).unwrap();
    assert!(rollout.starts_with("t,N,E,theta,control"));
}

#[test]
fn compare_on_a_finer_toy() {
    let tmp = tempfile::tempdir().unwrap();
    let out = symsynth(&["compare", "--scene", "toy", "--resolution", "10", "--strategies", "0,1,4", "--out-dir", "cmp"], tmp.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("exhaustive strategies agree: true"));
    let mut rdr = csv::Reader::from_path(tmp.path().join("cmp/metrics.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let n_ctr: Vec<&str> = rows.iter().map(|r| &r[5]).collect();
    assert!(n_ctr.iter().all(|&n| n == n_ctr[0]));
    assert_eq!(&rows[0][1], "10x10x10");

    // the saved reach dictionary is picked up again
    let again = symsynth(
        &["compare", "--scene", "toy", "--resolution", "10", "--strategies", "0", "--out-dir", "cmp2", "--reuse-reachdict", "cmp/reachdict.json"],
        tmp.path(),
    );
    assert!(again.status.success(), "{}", stderr(&again));
}

#[test]
fn mismatched_reach_dict_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(symsynth(&["compare", "--scene", "toy", "--strategies", "0", "--out-dir", "a"], tmp.path()).status.success());
    let out = symsynth(
        &["compare", "--scene", "corridor", "--strategies", "0", "--out-dir", "b", "--reuse-reachdict", "a/reachdict.json"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
