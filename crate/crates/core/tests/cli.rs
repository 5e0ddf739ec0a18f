//! End-to-end checks of the command-line surface: exit codes, formats, and
//! the find/verify round trip.

use std::process::Command;

use immersion::certify::{route_tt_in_f, write_certificate};
use immersion::graph::write_digraph;
use immersion::patterns::build_f;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_immersion"))
}

#[test]
fn stats_on_f32_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f32.dgr");
    std::fs::write(&path, write_digraph(&build_f(3, 2).unwrap().graph)).unwrap();
    let out = bin().arg("stats").arg("--input").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("n 3"));
    assert!(stdout.contains("m 4"));
    assert!(stdout.contains("max_multiplicity 2"));
    assert!(stdout.contains("simple false"));
}

#[test]
fn verify_accepts_shipped_tt3_routing() {
    let dir = tempfile::tempdir().unwrap();
    let (host, cert) = route_tt_in_f(3).unwrap();
    let gpath = dir.path().join("f33.dgr");
    let cpath = dir.path().join("tt3.cert");
    std::fs::write(&gpath, write_digraph(&host.graph)).unwrap();
    std::fs::write(&cpath, write_certificate(&cert)).unwrap();
    let out = bin()
        .arg("verify")
        .arg("--input")
        .arg(&gpath)
        .arg("--cert")
        .arg(&cpath)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn insufficient_outdegree_exits_2_naming_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let gpath = dir.path().join("small.dgr");
    let cpath = dir.path().join("never.cert");
    let gen = bin()
        .args(["gen", "--model", "regular", "--n", "20", "--d", "10", "--seed", "1"])
        .arg("--out")
        .arg(&gpath)
        .output()
        .unwrap();
    assert!(gen.status.success());
    let out = bin()
        .args(["find", "--pattern", "tt", "--k", "3"])
        .arg("--input")
        .arg(&gpath)
        .arg("--cert")
        .arg(&cpath)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("486"), "message must name the required bound: {stderr}");
    assert!(!cpath.exists());
}

#[test]
fn find_then_verify_round_trip_with_dot() {
    let dir = tempfile::tempdir().unwrap();
    let gpath = dir.path().join("host.dgr");
    let cpath = dir.path().join("found.cert");
    let dpath = dir.path().join("found.dot");
    // complete digraph on 66 vertices: outdegree 65 > f(2,2) = 64
    let mut text = String::from("p dgr 66 4290\n");
    for u in 0..66 {
        for v in 0..66 {
            if u != v {
                text.push_str(&format!("a {u} {v}\n"));
            }
        }
    }
    std::fs::write(&gpath, text).unwrap();
    let find = bin()
        .args(["find", "--pattern", "f", "--k", "2", "--l", "2"])
        .arg("--input")
        .arg(&gpath)
        .arg("--cert")
        .arg(&cpath)
        .arg("--dot")
        .arg(&dpath)
        .output()
        .unwrap();
    assert_eq!(find.status.code(), Some(0), "{find:?}");
    let verify_out = bin()
        .arg("verify")
        .arg("--input")
        .arg(&gpath)
        .arg("--cert")
        .arg(&cpath)
        .output()
        .unwrap();
    assert_eq!(verify_out.status.code(), Some(0));
    let dot = std::fs::read_to_string(&dpath).unwrap();
    assert!(dot.starts_with("digraph host {"));

    // tamper with the certificate: exit 1
    let cert_text = std::fs::read_to_string(&cpath).unwrap();
    let tampered = cert_text.replace("v 0 ", "v 0 9");
    std::fs::write(&cpath, tampered).unwrap();
    let bad = bin()
        .arg("verify")
        .arg("--input")
        .arg(&gpath)
        .arg("--cert")
        .arg(&cpath)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn oracle_not_present_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let gpath = dir.path().join("cycle.dgr");
    std::fs::write(&gpath, "p dgr 3 3\na 0 1\na 1 2\na 2 0\n").unwrap();
    let out = bin()
        .args(["oracle", "--pattern", "tt", "--k", "3"])
        .arg("--input")
        .arg(&gpath)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // and found prints a parseable certificate
    std::fs::write(&gpath, "p dgr 2 1\na 0 1\n").unwrap();
    let out = bin()
        .args(["oracle", "--pattern", "tt", "--k", "2"])
        .arg("--input")
        .arg(&gpath)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("c immersion tt 2 0"));
}

#[test]
fn gen_fixture_writes_graph_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fx");
    let out = bin()
        .args(["gen", "--model", "fixture", "--name", "bottleneck-1"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(out_dir.join("graph.dgr").exists());
    assert!(out_dir.join("planted.cert").exists());
    // unknown fixture: exit 2
    let bad = bin()
        .args(["gen", "--model", "fixture", "--name", "nope"])
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn malformed_input_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let gpath = dir.path().join("bad.dgr");
    std::fs::write(&gpath, "not a digraph\n").unwrap();
    let out = bin().arg("stats").arg("--input").arg(&gpath).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
