//! Exit codes, file round trips and reproducibility of the `evosym` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evosym::matrix::seeded_rng;
use evosym::operations::{identity_channel, random_operation_rng, uniform_pauli_channel};
use evosym_cli::fixtures::corpus;
use evosym_cli::spec_file::{channel_file, parse_channel, to_pretty, MapData};
use proptest::prelude::*;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn evosym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evosym"))
        .args(args)
        .current_dir(root())
        .env_remove("EVOSYM_EQUALITY_TOL")
        .output()
        .unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn channel_files_round_trip_bit_for_bit(seed in any::<u64>(), d_in in 1usize..=3, d_out in 1usize..=3, r in 1usize..=3) {
        let q = random_operation_rng(d_in, d_out, r, &mut seeded_rng(seed));
        let text = to_pretty(&channel_file("q", d_in, d_out, &MapData::Choi(q.choi().clone()), BTreeMap::new()));
        let parsed = parse_channel("q.json", &text).unwrap();
        let choi = parsed.choi();
        prop_assert_eq!(choi.as_slice(), q.choi().as_slice());
        let again = to_pretty(&channel_file("q", d_in, d_out, &MapData::Choi(choi), BTreeMap::new()));
        prop_assert_eq!(again, text);
    }
}

#[test]
fn bundled_fixtures_match_the_generator() {
    for (name, text) in corpus() {
        let on_disk = std::fs::read_to_string(root().join("fixtures").join(&name)).unwrap();
        assert_eq!(on_disk, text, "fixtures/{name} is stale; regenerate with `evosym fixtures --out fixtures`");
    }
}

#[test]
fn commands_do_not_modify_inputs() {
    let inputs = ["fixtures/c0.json", "fixtures/state_mixed.json", "fixtures/supermap_identity.json"];
    let before: Vec<Vec<u8>> = inputs.iter().map(|p| std::fs::read(root().join(p)).unwrap()).collect();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    evosym(&["classify", inputs[0]]);
    evosym(&[
        "reverse",
        inputs[0],
        "--transform",
        "petz",
        "--omega-a",
        inputs[1],
        "--omega-b",
        inputs[1],
        "--out",
        out.to_str().unwrap(),
    ]);
    evosym(&["decompose", inputs[2]]);
    let after: Vec<Vec<u8>> = inputs.iter().map(|p| std::fs::read(root().join(p)).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn nogo_reports_replay_exactly() {
    let args = ["nogo", "--target", "dagger", "--samples", "10", "--restarts", "2", "--seed", "7", "--json"];
    let a = evosym(&args);
    let b = evosym(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(evosym(&["nogo", "--dim", "1"]).status.code(), Some(4));
}

#[test]
fn parse_failures_exit_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"format_version\": \"1\",\n  \"name\": \"x\"\n  \"d_in\": 2\n}\n").unwrap();
    let out = evosym(&["classify", broken.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = &json_of(&out)["error"];
    assert_eq!(err["line"], 4);
    assert!(err["column"].as_u64().is_some());

    let missing = evosym(&["classify", "fixtures/does_not_exist.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let malformed = evosym(&["classify", "fixtures/malformed_dims.json", "--json"]);
    assert_eq!(malformed.status.code(), Some(2));
    assert_eq!(json_of(&malformed)["error"]["field"], "data");
}

#[test]
fn equality_tolerance_comes_from_the_environment() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_evosym"))
            .args(["classify", "fixtures/c0.json", "--json"])
            .current_dir(root())
            .env("EVOSYM_EQUALITY_TOL", v)
            .output()
            .unwrap()
    };
    let ok = run("1e-6");
    assert!(ok.status.success());
    assert_eq!(
        json_of(&ok)["provenance"]["tolerances"]["equality_tol"],
        "9.9999999999999995e-7"
    );
    assert_eq!(run("not-a-number").status.code(), Some(2));
}

fn write_choi(dir: &Path, name: &str, choi: &evosym::ComplexMatrix) -> String {
    let path = dir.join(name);
    let file = channel_file(name, 2, 2, &MapData::Choi(choi.clone()), BTreeMap::new());
    std::fs::write(&path, to_pretty(&file)).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn crooks_operation_checks_the_complement() {
    let dir = tempfile::tempdir().unwrap();
    let c0 = uniform_pauli_channel();
    let half = write_choi(dir.path(), "half.json", &c0.choi().scale(0.5));
    let full = write_choi(dir.path(), "full.json", c0.choi());
    let ok = evosym(&[
        "reverse",
        &half,
        "--transform",
        "crooks-operation",
        "--complement",
        &full,
        "--rho0",
        "fixtures/state_thermal.json",
        "--json",
    ]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    // C0 gives the identity branch weight 1/4, so C0 - id/2 is not CP
    let half_id = write_choi(dir.path(), "half_id.json", &identity_channel(2).choi().scale(0.5));
    let bad = evosym(&[
        "reverse",
        &half_id,
        "--transform",
        "crooks-operation",
        "--complement",
        &full,
        "--rho0",
        "fixtures/state_thermal.json",
        "--json",
    ]);
    assert_eq!(bad.status.code(), Some(4));
    assert_eq!(json_of(&bad)["error"]["name"], "NotComplementary");
}

#[test]
fn reports_carry_the_schema_fields() {
    let v = json_of(&evosym(&["classify", "fixtures/identity.json", "--json"]));
    for key in ["schema_version", "command", "inputs", "flags", "defects", "outputs", "provenance"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["flags"].as_object().unwrap().values().all(|f| f == true));
}
