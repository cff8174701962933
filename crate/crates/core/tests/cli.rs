use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn povmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povmc")).args(args).output().unwrap()
}

fn data(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "povmc/1");
    v["data"].clone()
}

fn path(name: &str) -> String {
    fixture(name).to_string_lossy().into_owned()
}

#[test]
fn jm_on_commuting_pair_is_feasible() {
    let out = povmc(&["jm", "--input", &path("commuting_pair.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(data(&out)["status"], "feasible");
}

#[test]
fn noisy_pair_below_threshold_is_feasible() {
    let out = povmc(&["jm", "--input", &path("xz_pair_noisy_compatible.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(data(&out)["status"], "feasible");
}

#[test]
fn robustness_of_xz_fixture() {
    let out = povmc(&["robustness", "--input", &path("xz_pair.json"), "--noise", "depolarizing"]);
    assert_eq!(out.status.code(), Some(0));
    let eta = data(&out)["eta_star"].as_f64().unwrap();
    assert!((eta - 0.5f64.sqrt()).abs() < 1e-3, "{eta}");
}

#[test]
fn steer_accepts_sandwich_inputs() {
    let out = povmc(&["steer", "-i", &path("xz_pair.json"), "--sigma", &path("sigma_thermal_qubit.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(data(&out)["verdict"], "steerable");
}

#[test]
fn cvscan_default_is_a_csv_over_d_2_to_6() {
    let out = povmc(&["cvscan", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d,bins,eta_star,seesaw_n,visibility,cert_status"));
    let ds: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ds, ["2", "3", "4", "5", "6"]);
}

#[test]
fn heuristic_compression_exits_2_and_is_reproducible() {
    let args = ["compress", "-i", &path("xz_assemblage.json"), "--n", "1", "--seed", "3", "--restarts", "2"];
    let a = povmc(&args);
    let b = povmc(&args);
    assert_eq!(a.status.code(), Some(2));
    assert_eq!(a.stdout, b.stdout);
    let v = data(&a)["visibility"].as_f64().unwrap();
    assert!(v <= 0.5f64.sqrt() + 1e-6);
}

#[test]
fn exact_compression_exits_0() {
    let out = povmc(&["compress", "-i", &path("xz_assemblage.json"), "--n", "2", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(data(&out)["exact"], true);
}

#[test]
fn compress_requires_a_seed() {
    let out = povmc(&["compress", "-i", &path("xz_assemblage.json"), "--n", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn translate_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.json");
    let sigma = path("sigma_mixed_qubit.json");
    let out = povmc(&[
        "translate",
        "-i",
        &path("preparation_maxent_qubit.json"),
        "--direction",
        "prep-to-sim",
        "--sigma",
        &sigma,
        "-o",
        sim.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let back = povmc(&["translate", "-i", sim.to_str().unwrap(), "--direction", "sim-to-prep", "--sigma", &sigma]);
    assert_eq!(back.status.code(), Some(0));
    assert_eq!(data(&back)["rank_bound"], 2);
}

#[test]
fn choi_witness_bounds() {
    let id = povmc(&["choi", "-i", &path("identity_channel_qutrit.json"), "--direction", "kraus-to-witness"]);
    assert_eq!(data(&id)["schmidt_number_upper"], 3);
    let mp = povmc(&["choi", "-i", &path("measure_prepare_qubit.json"), "--direction", "kraus-to-witness"]);
    assert_eq!(data(&mp)["schmidt_number_upper"], 1);
}

#[test]
fn lhs_separable_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sep = dir.path().join("sep.json");
    let out = povmc(&["translate", "-i", &path("lhs_model_qubit.json"), "--direction", "lhs-to-sep", "-o", sep.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let back = povmc(&["translate", "-i", sep.to_str().unwrap(), "--direction", "sep-to-lhs"]);
    assert_eq!(back.status.code(), Some(0));
    assert_eq!(data(&back)["hidden_states"].as_array().unwrap().len(), 2);
}

#[test]
fn malformed_input_names_the_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema":"povmc/1","kind":"measurement_set","data":{"povms":[{"effects":[[[[1,0],[0,0]],[[0,0],"x"]]]}]}}"#)
        .unwrap();
    let out = povmc(&["jm", "-i", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("data.povms[0].effects[0][1][1]"), "{err}");
}

#[test]
fn every_fixture_validates() {
    for entry in std::fs::read_dir(fixture("")).unwrap() {
        let p = entry.unwrap().path();
        let out = povmc(&["validate", "-i", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", p.display());
    }
}

#[test]
fn thread_count_from_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_povmc"))
            .args(["cvscan", "-i", &path("scan_config_small.json")])
            .env("POVMC_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(1));
}
