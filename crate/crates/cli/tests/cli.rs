use std::path::PathBuf;

use surveil_cli::{dispatch, CommandOutcome, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};

fn fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel).display().to_string()
}

fn surveil(args: &[&str]) -> CommandOutcome {
    dispatch(std::iter::once("surveil").chain(args.iter().copied()))
}

#[test]
fn validate() {
    let ok = surveil(&["validate", "--scheme", "NI", "--value", "AB123456C"]);
    assert_eq!((ok.code, ok.stdout.as_str()), (EXIT_OK, "valid AB123456C\n"));
    let nhs = surveil(&["validate", "--scheme", "nhs", "--value", "943 476 5919"]);
    assert_eq!(nhs.stdout, "valid 9434765919\n");
    let bad = surveil(&["validate", "--scheme", "NI", "--value", "AB12"]);
    assert_eq!(bad.code, EXIT_DOMAIN);
    assert!(bad.stderr.contains("FormatMismatch"));
    let unknown = surveil(&["validate", "--scheme", "ZIP", "--value", "1"]);
    assert_eq!(unknown.code, EXIT_DOMAIN);
    assert!(unknown.stderr.contains("UnknownName"));
    let custom = surveil(&["validate", "--scenario", &fixture("anpr/carpark.svl"), "--scheme", "REG", "--value", "ab12-cde"]);
    assert_eq!(custom.stdout, "valid AB12CDE\n");
}

#[test]
fn classify_keepers() {
    let out = surveil(&["classify", "--pairs", &fixture("keepers.csv")]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(out.stdout, "SharedEntityManyIds (case 1, many-one)\n");
}

#[test]
fn run_anpr_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = surveil(&[
        "run",
        "--scenario",
        &fixture("anpr/carpark.svl"),
        "--events",
        &fixture("anpr/events.jsonl"),
        "--out",
        report.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.contains("category {Overstay}: AB12CDE\n"));
    let golden = std::fs::read(fixture("anpr/report.golden.json")).unwrap();
    assert_eq!(std::fs::read(&report).unwrap(), golden);
}

#[test]
fn run_reports_malformed_events_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.jsonl");
    std::fs::write(&events, "{\"t\":1,\"loc\":\"x\",\"payload\":{\"plate\":\"AB12CDE\"}}\nnot json\n").unwrap();
    let out = surveil(&["run", "--scenario", &fixture("anpr/carpark.svl"), "--events", events.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_DOMAIN);
    assert!(out.stderr.contains("MalformedLine: line 2"), "{}", out.stderr);
}

#[test]
fn prov_queries() {
    let graph = fixture("identity_tree.json");
    let rel = surveil(&["prov", "--graph", &graph, "--node", "ID1", "--reliability"]);
    assert_eq!(rel.stdout, "0.63\n");
    let valid = surveil(&["prov", "--graph", &graph, "--node", "ID3", "--validity"]);
    assert_eq!(valid.stdout, "valid\n");
    let paths = surveil(&["prov", "--graph", &graph, "--node", "ID3", "--paths"]);
    assert_eq!(paths.stdout, "ID3 -> ID6\n");
    let missing = surveil(&["prov", "--graph", &graph, "--node", "ID9", "--paths"]);
    assert_eq!(missing.code, EXIT_DOMAIN);
    assert!(missing.stderr.contains("UnknownNode"));
    let two = surveil(&["prov", "--graph", &graph, "--node", "ID1", "--paths", "--validity"]);
    assert_eq!(two.code, EXIT_USAGE);
}

#[test]
fn translate_plate() {
    let scenario = fixture("anpr/carpark.svl");
    let out = surveil(&["translate", "--scenario", &scenario, "--table", &fixture("anpr/dvla.csv"), "--value", "AB12 CDE"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.ends_with("\nK0042\n"));
    let chained = surveil(&[
        "translate", "--scenario", &scenario, "--table", "plate_keeper", "--chain", "keeper_address", "--value", "AB12CDE",
    ]);
    assert!(chained.stdout.ends_with("\nSA28PP\n"));
    let unknown = surveil(&["translate", "--scenario", &scenario, "--table", "plate_keeper", "--value", "ZZ99ZZZ"]);
    assert_eq!(unknown.code, EXIT_DOMAIN);
    assert!(unknown.stderr.contains("NotFound"));
}

#[test]
fn snapshot_then_reduce() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("sys.snap");
    let snap = snap.to_str().unwrap();
    let made = surveil(&["snapshot", "--scenario", &fixture("reduction/systems.svl"), "--out", snap]);
    assert_eq!(made.code, EXIT_OK, "{}", made.stderr);
    let table = fixture("reduction/card_file.csv");
    let out = surveil(&[
        "reduce", "--from-snap", snap, "--to-snap", snap, "--table", &table, "--from-ims", "Council", "--to-ims", "Clinic",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout, "coverage: 0.75\nconflicts: 1\nmissing: A004\n");

    std::fs::write(dir.path().join("bad.snap"), "{\"version\": 2}").unwrap();
    let bad = dir.path().join("bad.snap");
    let out = surveil(&["reduce", "--from-snap", bad.to_str().unwrap(), "--to-snap", snap, "--table", &table]);
    assert_eq!(out.code, EXIT_DOMAIN);
    assert!(out.stderr.contains("VersionMismatch"));
}

#[test]
fn usage_errors() {
    assert_eq!(surveil(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(surveil(&["validate", "--scheme", "NI"]).code, EXIT_USAGE);
    assert_eq!(surveil(&["run", "--scenario", "x", "--events", "y", "--format", "xml"]).code, EXIT_USAGE);
    let help = surveil(&["--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("classify"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_surveil");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap();
    let ok = status(&["validate", "--scheme", "PASSPORT", "--value", "123456789"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8(ok.stdout).unwrap(), "valid 123456789\n");
    assert_eq!(status(&["validate", "--scheme", "PASSPORT", "--value", "12"]).status.code(), Some(1));
    assert_eq!(status(&["nope"]).status.code(), Some(2));
}
