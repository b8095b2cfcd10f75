//! Command-line behaviour: exit codes, witnesses, golden reports, determinism.

mod common;

use std::process::{Command as Process, Stdio};

use common::{args, examples, golden_mismatches};

use foliate::cli::job::{parse_job, parse_value, Payload};
use foliate::cli::wire::{read_form, read_poly, Node};
use foliate::cli::{run_path, Command, JobArgs, EXIT_MATHEMATICAL, EXIT_OK, EXIT_USAGE};
use foliate::forms::de_rham_d;
use foliate::poly::MultiPoly;
use serde_json::{json, Value};

#[test]
fn golden_reports_are_deterministic() {
    let bad = golden_mismatches();
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn contact_form_witness_reverifies() {
    let out = run_path(Command::Check, &args("pfaffian_contact.json"));
    assert_eq!(out.exit_code, EXIT_MATHEMATICAL);
    let err = &out.report["error"];
    assert_eq!(err["kind"], "NotDifferentialIdeal");
    let job = parse_job(&examples().join("pfaffian_contact.json")).unwrap();
    let names = job.variables.clone();
    let residual = read_form(Node::root(&err["witness"]["residual"]["terms"]), &names, 2).unwrap();
    assert!(!residual.is_zero());
    // With W = 0 the residual is dw itself.
    let Payload::Pfaffian { forms, .. } = &job.payload else {
        panic!("pfaffian expected")
    };
    assert_eq!(residual, de_rham_d(&forms[0]));
}

#[test]
fn curvature_witness_reverifies() {
    let out = run_path(Command::Check, &args("crystal_not_flat.json"));
    assert_eq!(out.exit_code, EXIT_MATHEMATICAL);
    let w = &out.report["error"]["witness"];
    assert_eq!(w["pair"], json!([0, 1]));
    let job = parse_job(&examples().join("crystal_not_flat.json")).unwrap();
    let Payload::Crystal { connection, rank, .. } = &job.payload else {
        panic!("crystal expected")
    };
    // Constant matrices: the curvature on (dx, dy) is the commutator [A_x, A_y].
    let r = *rank;
    let mut nonzero = false;
    for g in 0..r {
        for f in 0..r {
            let reported = read_poly(Node::root(&w["curvature"][g][f]["terms"]), 2).unwrap();
            let mut comm = MultiPoly::zero(2);
            for h in 0..r {
                comm = &comm + &(&connection[0][g][h] * &connection[1][h][f]);
                comm = &comm - &(&connection[1][g][h] * &connection[0][h][f]);
            }
            assert_eq!(reported.is_zero(), comm.is_zero());
            assert!(reported == comm || reported == -&comm);
            nonzero |= !reported.is_zero();
        }
    }
    assert!(nonzero);
}

#[test]
fn lie_algebroid_witness_is_nonzero() {
    let doc = json!({
        "schema_version": "1",
        "kind": "lie_algebroid",
        "variables": ["x"],
        "payload": {
            "anchor": [[[{ "exponents": [1], "numerator": 1 }]]],
            "brackets": [[[[{ "exponents": [0], "numerator": 1 }]]]]
        }
    });
    let job = parse_value(&doc).unwrap();
    let out = foliate::cli::run(Command::Check, &job, job.effective_cutoffs());
    assert_eq!(out.exit_code, EXIT_MATHEMATICAL);
    let defect = out.report["error"]["witness"]["defect"].as_array().unwrap();
    assert!(defect
        .iter()
        .any(|p| !read_poly(Node::root(&p["terms"]), 1).unwrap().is_zero()));
}

#[test]
fn spec_examples() {
    let out = run_path(Command::Singularity, &args("singularity_cusp.json"));
    assert_eq!(out.exit_code, EXIT_OK);
    assert_eq!(out.report["result"]["milnor_number"], 2);

    let out = run_path(Command::Classify, &args("integrable_x2y2.json"));
    assert_eq!(out.exit_code, EXIT_OK);
    let r = &out.report["result"];
    assert_eq!((&r["smooth"], &r["quasi_smooth"], &r["rigid"]), (&json!(false), &json!(true), &json!(true)));

    let out = run_path(Command::Cohomology, &args("lie_algebroid_sl2.json"));
    let dims: Vec<_> = out.report["result"]["degrees"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["dim"].as_u64().unwrap())
        .collect();
    assert_eq!(dims, [1, 0, 0, 1]);

    let out = run_path(Command::Singularity, &args("singularity_x2y.json"));
    assert_eq!(out.report["result"]["isolated"], false);
    assert_eq!(out.report["result"]["milnor_number"], Value::Null);
}

#[test]
fn flags_override_document_cutoffs() {
    let mut a = args("integrable_x2y2.json");
    a.cutoff_weight = Some(2);
    a.cutoff_degree = Some(3);
    let out = run_path(Command::Cohomology, &a);
    assert_eq!(out.report["cutoffs"], json!({ "weight": 2, "poly_degree": 3, "jet_bound": 12 }));
    assert_eq!(out.report["job"]["cutoffs"]["weight"], 4);
}

#[test]
fn every_example_round_trips() {
    for entry in std::fs::read_dir(examples()).unwrap() {
        let path = entry.unwrap().path();
        let job = parse_job(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let canon = job.to_json();
        let again = parse_value(&canon).unwrap();
        assert_eq!(again, job, "{}", path.display());
        assert_eq!(again.to_json(), canon);
    }
}

#[test]
fn schema_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(examples().join("pfaffian_xy.json")).unwrap()).unwrap();
    doc["payload"]["forms"][0][0]["coefficient"][0]["exponents"] = json!([1]);
    std::fs::write(&bad, doc.to_string()).unwrap();
    let out = run_path(Command::Check, &JobArgs { job: bad.clone(), ..JobArgs::default() });
    assert_eq!(out.exit_code, EXIT_USAGE);
    assert_eq!(out.report["error"]["kind"], "SchemaError");
    assert_eq!(out.report["error"]["witness"]["path"], "/payload/forms/0/0/coefficient/0/exponents");

    doc["kind"] = json!("mystery");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let out = run_path(Command::Check, &JobArgs { job: bad.clone(), ..JobArgs::default() });
    assert_eq!(out.report["error"]["witness"]["path"], "/kind");

    std::fs::write(&bad, "{ not json").unwrap();
    let out = run_path(Command::Check, &JobArgs { job: bad, ..JobArgs::default() });
    assert_eq!(out.report["error"]["kind"], "ParseError");
}

#[test]
fn binary_exit_codes_and_out_file() {
    let bin = env!("CARGO_BIN_EXE_foliate");
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let status = Process::new(bin)
        .args(["check", "--quiet", "--out"])
        .arg(&report)
        .arg(examples().join("pfaffian_contact.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_MATHEMATICAL));
    let written = std::fs::read(&report).unwrap();
    assert_eq!(written, run_path(Command::Check, &args("pfaffian_contact.json")).to_bytes());

    let out = Process::new(bin)
        .args(["singularity"])
        .arg(examples().join("singularity_cusp.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("milnor_number  2"), "{table}");

    let status = Process::new(bin).args(["frobnicate"]).stderr(Stdio::null()).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
    let status = Process::new(bin).args(["check"]).stderr(Stdio::null()).status().unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
}
