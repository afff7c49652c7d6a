use std::path::Path;
use std::process::{Command, Output};

use gw_core::verify::{bundled_fixture, parse_table};
use gw_core::derived::TableId;

fn gw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gw"))
        .args(args)
        .env_remove("GW_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = gw(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn single_invariants() {
    assert_eq!(ok(&["gw", "--r", "3", "--s", "2", "--beta", "5,-2,-2", "--classes", "pt^6"]), "1\n");
    assert_eq!(ok(&["gw", "--r", "2", "--s", "1", "--beta", "6,-4", "--classes", "pt^13"]), "3840\n");
    assert_eq!(ok(&["gw", "--r", "2", "--s", "0", "--beta", "1", "--classes", "pt^2"]), "1\n");
    assert_eq!(ok(&["gw", "--r", "3", "--s", "2", "--beta", "2,-2,-2"]), "1/8\n");
}

#[test]
fn divisor_and_exceptional_insertions() {
    // H·β = 3 and E1·β = 1 for β = 3H' - E'
    let plain = ok(&["gw", "--r", "2", "--s", "1", "--beta", "3,-1", "--classes", "pt^7"]);
    assert_eq!(plain, "12\n");
    assert_eq!(ok(&["gw", "--r", "2", "--s", "1", "--beta", "3,-1", "--classes", "pt^7,H,E1"]), "36\n");
}

#[test]
fn enumerative_reading_is_printed_when_known() {
    let out = ok(&["gw", "--r", "3", "--s", "1", "--beta", "5,-2", "--classes", "pt^8", "--enumerative"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("12"));
    assert!(lines.next().unwrap().contains("degree 5"));
    let out = ok(&["gw", "--r", "3", "--s", "2", "--beta", "2,-2,-2", "--enumerative"]);
    assert_eq!(out, "1/8\n");
}

#[test]
fn exit_codes() {
    assert_eq!(gw(&["gw", "--r", "2", "--s", "1", "--beta", "6,-4", "--classes", "Q^13"]).status.code(), Some(2));
    assert_eq!(gw(&["gw", "--r", "2", "--s", "1", "--beta", "6", "--classes", "pt"]).status.code(), Some(2));
    assert_eq!(gw(&["gw", "--r", "1", "--beta", "1"]).status.code(), Some(2));
    assert_eq!(gw(&["table", "--id", "p9-9"]).status.code(), Some(2));
    assert_eq!(gw(&["tangency", "--r", "2", "--k", "1", "--d", "3", "--pattern", "pt^5"]).status.code(), Some(2));
    let ring = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/curve_secant.ring");
    let ring = ring.to_str().unwrap();
    let unsupported = gw(&[
        "gw", "--ring", ring, "--param", "d=5", "--param", "g=1", "--param", "bound=5", "--beta", "2,-3",
        "--classes", "pt^2,H2",
    ]);
    assert_eq!(unsupported.status.code(), Some(3));
}

#[test]
fn loaded_ring_with_parameters() {
    let ring = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/curve_secant.ring");
    let ring = ring.to_str().unwrap();
    let t = ok(&[
        "gw", "--ring", ring, "--param", "d=6", "--param", "g=2", "--param", "bound=6", "--beta", "1,-3",
        "--classes", "H2",
    ]);
    assert_eq!(t, "12\n");
}

#[test]
fn derived_quantities() {
    assert_eq!(ok(&["secant", "--d", "3", "--g", "0"]), "t=0 q=0\n");
    assert_eq!(ok(&["secant", "--d", "6", "--g", "0"]), "t=20 q=6\n");
    assert_eq!(ok(&["abelian"]), "25\n");
    assert_eq!(ok(&["tangency", "--r", "2", "--k", "1", "--d", "4", "--pattern", "pt^9"]), "428\n");
    assert_eq!(ok(&["tangency", "--r", "3", "--k", "2", "--d", "5", "--pattern", "pt^8"]), "81\n");
}

#[test]
fn table_tsv_round_trips_and_matches_fixture() {
    let out = ok(&["table", "--id", "p3-1", "--dmax", "6"]);
    let t = parse_table(&out).unwrap();
    assert_eq!(t.to_tsv().trim_end(), out.trim_end());
    let fixture = bundled_fixture(TableId::P3One);
    for (row, cells) in t.rows.iter().zip(&t.cells) {
        for (&d, c) in t.degrees.iter().zip(cells) {
            assert_eq!(fixture.cell(row, d), Some(c));
        }
    }
    let md = ok(&["table", "--id", "p3-1", "--dmax", "6", "--format", "md"]);
    assert!(md.lines().nth(1).unwrap().starts_with("|---"));
}

#[test]
fn cached_and_parallel_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["table", "--id", "p3-2", "--dmax", "6"];
    let cold = ok(&args);
    let with = |extra: &[&str]| {
        let mut a: Vec<&str> = extra.to_vec();
        a.extend(args);
        ok(&a)
    };
    assert_eq!(with(&["--cache", cache, "--jobs", "3"]), cold);
    assert_eq!(with(&["--cache", cache, "--jobs", "1"]), cold);
    assert_eq!(with(&["--jobs", "1"]), cold);
    let info = ok(&["cache-info", "--cache", cache]);
    assert!(info.contains("1 memo table(s)"), "{info}");
    assert!(info.contains("P^3(2)") && info.contains("P^3(0)"), "{info}");

    let via_env = Command::new(env!("CARGO_BIN_EXE_gw"))
        .args(args)
        .env("GW_CACHE", cache)
        .output()
        .unwrap();
    assert_eq!(stdout(&via_env), cold);
}

#[test]
fn verify_suites() {
    let out = ok(&["verify", "--suite", "tables", "--id", "p2-1"]);
    assert!(out.contains("0 mismatches"), "{out}");
    for suite in ["residual", "ptexc", "vanishing", "divisor", "permutation", "descent"] {
        let out = ok(&["verify", "--suite", suite, "--samples", "15", "--r", "2", "--s", "2", "--dmax", "3"]);
        assert!(out.contains("0 failed"), "{suite}: {out}");
    }
    assert_eq!(gw(&["verify", "--suite", "permutation", "--s", "1"]).status.code(), Some(2));
}
