use std::process::Command;

use critflow_cli::{find, plan, select, CliError, ExperimentConfig, Overrides};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_critflow"))
}

#[test]
fn misaligned_step_is_a_config_error_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "\"flow.zero_drift:dt\" = 0.003\n").unwrap();
    let out = tmp.path().join("out");
    let status = bin()
        .args(["run", "flow.zero_drift", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(String::from_utf8_lossy(&status.stderr).contains("config error"));
    assert!(!out.exists());
}

#[test]
fn unknown_id_and_unknown_key_are_rejected() {
    assert!(matches!(select("no.such"), Err(CliError::UnknownId(_))));
    let o = Overrides::parse("nonsense_key = 1\n").unwrap();
    assert!(matches!(plan(&["flow.zero_drift"], &o, None), Err(CliError::Config(_))));
    let o = Overrides::parse("\"flow.zero_drift:paths\" = \"many\"\n").unwrap();
    assert!(matches!(plan(&["flow.zero_drift"], &o, None), Err(CliError::Config(_))));
    assert!(Overrides::parse("[table]\nx = 1\n").is_err());
    let status = bin().args(["run", "no.such"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn plain_keys_reach_every_declaring_experiment_and_targeted_keys_one() {
    let o = Overrides::parse("paths = 64\n\"flow.fourth_moment:dt\" = 0.005\nseed = 9\n").unwrap();
    let cfgs = plan(&["flow.zero_drift", "flow.fourth_moment"], &o, None).unwrap();
    assert!(cfgs.iter().all(|c| c.params.usize("paths") == 64 && c.seed == 9));
    assert_eq!(cfgs[0].params.f64("dt"), 1e-3);
    assert_eq!(cfgs[1].params.f64("dt"), 0.005);
    let cfgs = plan(&["flow.zero_drift"], &Overrides::default(), Some(4)).unwrap();
    assert_eq!(cfgs[0].seed, 4);
}

#[test]
fn config_echo_round_trips() {
    for id in ["norms.lps_index", "flow.linear_drift", "ns.taylor_green", "holder.zero_drift"] {
        let exp = find(id).unwrap();
        let mut cfg = ExperimentConfig::defaults(exp);
        cfg.seed = 123;
        let o = Overrides::parse(&cfg.to_toml()).unwrap();
        let back = plan(&[id], &o, None).unwrap().remove(0);
        assert_eq!(back, cfg, "{id}");
    }
}

#[test]
fn list_verb_filters_by_module() {
    let out = bin().args(["list", "--module", "flow_sim"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 3);
    assert!(text.lines().all(|l| l.contains("flow_sim")));
    let bad = bin().args(["list", "--module", "nope"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
