//! End-to-end tests of the `crg` binary: golden outputs, schemas, exit
//! codes, and file output.

use std::path::Path;
use std::process::{Command, Output};

fn crg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crg"))
        .args(args)
        .env_remove("CRG_BUDGET")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const MIRRORED_GAME: &str = "[game]\ncustomers = 3\nratio = 0.4\nsignal_p = 0.9\n";

#[test]
fn best_response_table_matches_published_resource_pool_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "game.toml", MIRRORED_GAME);
    let out = crg(&[
        "best-response-table",
        "--config",
        &config,
        "--p",
        "0.9,0.6",
        "--paper-row-order",
    ]);
    assert!(out.status.success());
    let expected = "\
p,s1,s2,s3,x1,x2,x3
0.900000000000,2,2,2,2,2,1
0.900000000000,1,2,2,1,2,2
0.900000000000,2,1,2,2,1,2
0.900000000000,1,1,2,1,1,2
0.900000000000,2,2,1,2,2,1
0.900000000000,1,2,1,1,2,1
0.900000000000,2,1,1,2,1,1
0.900000000000,1,1,1,1,1,2
0.600000000000,2,2,2,1,2,2
0.600000000000,1,2,2,2,1,2
0.600000000000,2,1,2,1,2,2
0.600000000000,1,1,2,2,1,1
0.600000000000,2,2,1,1,2,2
0.600000000000,1,2,1,2,1,1
0.600000000000,2,1,1,1,2,1
0.600000000000,1,1,1,2,1,1
";
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn best_response_table_matches_published_availability_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "game.toml",
        "[game]\ncustomers = 3\nratio = 0.0\nsignal_p = 0.9\n",
    );
    let out = crg(&[
        "best-response-table",
        "--config",
        &config,
        "--p",
        "0.9,0.7,0.55",
        "--paper-row-order",
    ]);
    assert!(out.status.success());
    let expected = "\
p,s1,s2,s3,x1,x2,x3
0.900000000000,2,2,2,2,2,2
0.900000000000,1,2,2,1,2,2
0.900000000000,2,1,2,2,1,2
0.900000000000,1,1,2,1,1,1
0.900000000000,2,2,1,2,2,2
0.900000000000,1,2,1,1,2,1
0.900000000000,2,1,1,2,1,1
0.900000000000,1,1,1,1,1,1
0.700000000000,2,2,2,2,2,2
0.700000000000,1,2,2,1,2,2
0.700000000000,2,1,2,2,1,2
0.700000000000,1,1,2,1,1,2
0.700000000000,2,2,1,2,2,1
0.700000000000,1,2,1,1,2,1
0.700000000000,2,1,1,2,1,1
0.700000000000,1,1,1,1,1,1
0.550000000000,2,2,2,1,2,2
0.550000000000,1,2,2,2,1,2
0.550000000000,2,1,2,1,2,2
0.550000000000,1,1,2,2,1,1
0.550000000000,2,2,1,1,2,2
0.550000000000,1,2,1,2,1,1
0.550000000000,2,1,1,1,2,1
0.550000000000,1,1,1,2,1,1
";
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn lexicographic_order_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "game.toml", MIRRORED_GAME);
    let out = crg(&["best-response-table", "--config", &config, "--p", "0.9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].starts_with("0.900000000000,1,1,1,"));
    assert!(rows[7].starts_with("0.900000000000,2,2,2,"));
}

#[test]
fn single_customer_table_has_one_row_per_signal() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "game.toml",
        "[game]\ncustomers = 1\nratio = 0.4\nsignal_p = 0.9\n",
    );
    let out = crg(&["best-response-table", "--config", &config]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3); // header + |S| rows
    assert!(text.contains("0.900000000000,1,1"));
    assert!(text.contains("0.900000000000,2,2"));
}

#[test]
fn solve_perfect_reports_grouping_actions_utilities() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "game.toml", MIRRORED_GAME);
    let out = crg(&["solve-perfect", "--config", &config, "--state", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("grouping,2,1"), "{text}");
    assert!(text.contains("actions,1,1,2"), "{text}");
    assert!(text.contains("utilities,50.0000000000,50.0000000000,40.0000000000"));

    // Mirrored state flips the grouping.
    let out = crg(&["solve-perfect", "--config", &config, "--state", "2"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("grouping,1,2"), "{text}");

    let out = crg(&["solve-perfect", "--config", &config, "--state", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_bayes_replays_one_profile_with_utilities() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "game.toml", MIRRORED_GAME);
    let out = crg(&[
        "solve-bayes",
        "--config",
        &config,
        "--signals",
        "2,2,2",
        "--state",
        "1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("actions,2,2,1"), "{text}");
    assert!(text.contains("grouping,1,2"), "{text}");
    assert!(text.contains("utilities,20.0000000000,20.0000000000,100.000000000"), "{text}");
}

#[test]
fn solve_bayes_emits_all_profiles_without_signals() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "game.toml", MIRRORED_GAME);
    let out = crg(&["solve-bayes", "--config", &config]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "s1,s2,s3,x1,x2,x3,n1,n2");
    assert_eq!(text.lines().count(), 9); // header + 8 profiles
    assert!(text.contains("2,2,2,2,2,1,1,2"), "{text}");
}

#[test]
fn malformed_configs_exit_2_and_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    // Type error with a line-numbered diagnostic.
    let config = write_config(dir.path(), "bad.toml", "[game]\ncustomers = \"three\"\n");
    let out = crg(&["solve-perfect", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 2"), "{stderr}");

    // Semantic error naming the offending field.
    let config = write_config(
        dir.path(),
        "bad2.toml",
        "[game]\ncustomers = 3\nratio = 0.4\nsignal_p = 1.4\n",
    );
    let out = crg(&["solve-perfect", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("signal_p"), "{stderr}");

    // Missing file.
    let out = crg(&["solve-perfect", "--config", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn profile_enumeration_is_budgeted() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "big.toml",
        "[game]\ncustomers = 30\nratio = 0.4\nsignal_p = 0.9\n",
    );
    for cmd in ["best-response-table", "solve-bayes"] {
        let out = crg(&[cmd, "--config", &config]);
        assert_eq!(out.status.code(), Some(3), "{cmd}");
    }
}

#[test]
fn budget_env_var_caps_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "game.toml", MIRRORED_GAME);
    let out = Command::new(env!("CARGO_BIN_EXE_crg"))
        .args(["solve-bayes", "--config", &config])
        .env("CRG_BUDGET", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let out = Command::new(env!("CARGO_BIN_EXE_crg"))
        .args(["solve-bayes", "--config", &config])
        .env("CRG_BUDGET", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "game.toml", MIRRORED_GAME);
    let target = dir.path().join("result.csv");
    let out = crg(&[
        "solve-perfect",
        "--config",
        &config,
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.contains("grouping,2,1"));
}

#[test]
fn experiment_schemas_match_documentation() {
    let dir = tempfile::tempdir().unwrap();
    let trials = write_config(
        dir.path(),
        "trials.toml",
        "[game]\ncustomers = 3\nratio = 0.4\nsignal_p = 0.9\n\n\
         [experiment]\nmode = \"trials\"\ntrials = 200\nseed = 1\n",
    );
    let out = crg(&["experiment", "--config", &trials]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "customer,mean,stderr");
    assert_eq!(text.lines().count(), 4);

    let deviation = write_config(
        dir.path(),
        "deviation.toml",
        "[game]\ncustomers = 3\nratio = 0.4\nsignal_p = 0.9\n\n\
         [experiment]\nmode = \"deviation\"\ntrials = 200\nseed = 1\n\
         miss_customer = 2\nmiss_probabilities = [0.0, 1.0]\n",
    );
    let out = crg(&["experiment", "--config", &deviation, "--p", "0.9,0.6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "p,p_mis,customer,mean,stderr");
    // 2 qualities x 2 miss rates x 3 customers.
    assert_eq!(text.lines().count(), 13);

    let sweep = write_config(
        dir.path(),
        "sweep.toml",
        "[game]\ncustomers = 3\nratio = 0.4\nsignal_p = 0.9\n\n\
         [experiment]\nmode = \"sweep\"\np_values = [0.55]\nr_values = [0.1, 0.9]\n",
    );
    let out = crg(&["experiment", "--config", &sweep]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "p,r,argmax_customer,mean_1,mean_2,mean_3");
    assert_eq!(text.lines().count(), 3);

    let exact = write_config(
        dir.path(),
        "exact.toml",
        "[game]\ncustomers = 3\nratio = 0.4\nsignal_p = 0.9\n\n\
         [experiment]\nmode = \"exact\"\n",
    );
    let out = crg(&["experiment", "--config", &exact]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "customer,mean");
}

#[test]
fn seed_and_trials_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "trials.toml",
        "[game]\ncustomers = 3\nratio = 0.4\nsignal_p = 0.9\n\n\
         [experiment]\nmode = \"trials\"\ntrials = 100\nseed = 1\n",
    );
    let base = crg(&["experiment", "--config", &config]);
    let reseeded = crg(&["experiment", "--config", &config, "--seed", "2"]);
    assert_ne!(base.stdout, reseeded.stdout);
    let same_seed = crg(&["experiment", "--config", &config, "--seed", "1"]);
    assert_eq!(base.stdout, same_seed.stdout);
}
