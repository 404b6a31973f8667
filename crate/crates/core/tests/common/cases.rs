//! Command lines covered by golden files.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub code: i32,
}

macro_rules! case {
    ($name:literal, $code:literal, [$($arg:expr),* $(,)?]) => {
        Case { name: $name, code: $code, args: &[$($arg),*] }
    };
}

const GRID_T: &str = "tests/fixtures/grid_topology.json";
const COMPLETE_T: &str = "tests/fixtures/complete_topology.json";
pub const FORK_T: &str = "tests/fixtures/fork_topology.json";
const CROSSED_P: &str = "tests/fixtures/crossed_paths.json";
const ALPHA_P: &str = "tests/fixtures/alpha_paths.json";
pub const FORK_P: &str = "tests/fixtures/fork_paths.json";
const FORK_CLOSURE_P: &str = "tests/fixtures/fork_closure_paths.json";

pub const CASES: &[Case] = &[
    case!(
        "validate_crossed",
        0,
        ["validate", "--topology", GRID_T, "--paths", CROSSED_P]
    ),
    case!(
        "validate_invalid",
        3,
        [
            "validate",
            "--topology",
            GRID_T,
            "--paths",
            "tests/fixtures/invalid_paths.json"
        ]
    ),
    case!(
        "validate_bad_topology",
        3,
        [
            "validate",
            "--topology",
            "tests/fixtures/bad_topology.json",
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "validate_unknown_key",
        3,
        [
            "validate",
            "--topology",
            "tests/fixtures/unknown_key_topology.json",
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "validate_summary",
        0,
        [
            "validate",
            "--format",
            "summary",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P,
            "--paths",
            ALPHA_P
        ]
    ),
    case!(
        "rules_crossed",
        0,
        ["rules", "--topology", GRID_T, "--paths", CROSSED_P]
    ),
    case!(
        "rules_summary",
        0,
        [
            "rules",
            "--format",
            "summary",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "rules_invalid",
        3,
        [
            "rules",
            "--topology",
            GRID_T,
            "--paths",
            "tests/fixtures/invalid_paths.json"
        ]
    ),
    case!(
        "check_crossed",
        2,
        ["check", "--topology", GRID_T, "--paths", CROSSED_P]
    ),
    case!(
        "check_crossed_dot",
        2,
        [
            "check",
            "--format",
            "dot",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "check_crossed_summary",
        2,
        [
            "check",
            "--format",
            "summary",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "check_alpha",
        0,
        ["check", "--topology", GRID_T, "--paths", ALPHA_P]
    ),
    case!(
        "check_fork",
        1,
        ["check", "--topology", FORK_T, "--paths", FORK_P]
    ),
    case!(
        "check_fork_dot",
        1,
        [
            "check",
            "--format",
            "dot",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "check_fork_summary",
        1,
        [
            "check",
            "--format",
            "summary",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "check_fork_budget",
        4,
        [
            "check",
            "--budget",
            "1",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "check_update_remove",
        1,
        [
            "check",
            "--topology",
            FORK_T,
            "--paths",
            FORK_CLOSURE_P,
            "--update",
            "tests/fixtures/fork_remove_update.json"
        ]
    ),
    case!(
        "check_update_add",
        2,
        [
            "check",
            "--topology",
            GRID_T,
            "--paths",
            ALPHA_P,
            "--update",
            "tests/fixtures/crossed_add_update.json"
        ]
    ),
    case!(
        "check_two_files",
        2,
        [
            "check",
            "--topology",
            GRID_T,
            "--paths",
            ALPHA_P,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "check_not_edge_simple",
        3,
        [
            "check",
            "--topology",
            GRID_T,
            "--paths",
            "tests/fixtures/nes_paths.json"
        ]
    ),
    case!(
        "check_not_edge_simple_allowed",
        2,
        [
            "check",
            "--allow-non-edge-simple",
            "--topology",
            GRID_T,
            "--paths",
            "tests/fixtures/nes_paths.json"
        ]
    ),
    case!(
        "check_not_json",
        3,
        [
            "check",
            "--topology",
            GRID_T,
            "--paths",
            "tests/fixtures/not_json.json"
        ]
    ),
    case!(
        "check_missing_file",
        3,
        [
            "check",
            "--topology",
            GRID_T,
            "--paths",
            "tests/fixtures/absent.json"
        ]
    ),
    case!(
        "closure_fork",
        0,
        ["closure", "--topology", FORK_T, "--paths", FORK_P]
    ),
    case!(
        "closure_crossed",
        2,
        ["closure", "--topology", GRID_T, "--paths", CROSSED_P]
    ),
    case!(
        "closure_fork_budget",
        4,
        [
            "closure",
            "--budget",
            "3",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "simulate_crossed",
        2,
        ["simulate", "--topology", GRID_T, "--paths", CROSSED_P]
    ),
    case!(
        "simulate_alpha",
        0,
        ["simulate", "--topology", GRID_T, "--paths", ALPHA_P]
    ),
    case!(
        "simulate_rules",
        2,
        [
            "simulate",
            "--format",
            "summary",
            "--topology",
            GRID_T,
            "--rules",
            "tests/fixtures/loop_rules.json"
        ]
    ),
    case!(
        "simulate_fork_host",
        0,
        [
            "simulate",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P,
            "--host",
            "h2"
        ]
    ),
    case!(
        "simulate_not_a_host",
        3,
        [
            "simulate",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P,
            "--host",
            "s1"
        ]
    ),
    case!(
        "simulate_budget",
        4,
        [
            "simulate",
            "--budget",
            "1",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "repair_reroute_complete",
        0,
        [
            "repair",
            "--strategy",
            "reroute",
            "--topology",
            COMPLETE_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "repair_reroute_crossed",
        2,
        [
            "repair",
            "--strategy",
            "reroute",
            "--try-rotations",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "repair_subset_crossed",
        0,
        [
            "repair",
            "--strategy",
            "subset",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "repair_subset_greedy",
        0,
        [
            "repair",
            "--strategy",
            "subset",
            "--exact-threshold",
            "0",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "repair_superset_fork",
        0,
        [
            "repair",
            "--strategy",
            "superset",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "repair_superset_crossed",
        2,
        [
            "repair",
            "--strategy",
            "superset",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "repair_superset_budget",
        4,
        [
            "repair",
            "--strategy",
            "superset",
            "--budget",
            "2",
            "--topology",
            FORK_T,
            "--paths",
            FORK_P
        ]
    ),
    case!(
        "repair_summary",
        0,
        [
            "repair",
            "--strategy",
            "reroute",
            "--format",
            "summary",
            "--topology",
            COMPLETE_T,
            "--paths",
            CROSSED_P
        ]
    ),
    case!(
        "export_dot_topology",
        0,
        ["export-dot", "--topology", GRID_T]
    ),
    case!(
        "export_dot_closure",
        0,
        ["export-dot", "--topology", GRID_T, "--paths", CROSSED_P]
    ),
    case!("usage_unknown_command", 3, ["frobnicate"]),
    case!(
        "usage_missing_strategy",
        3,
        ["repair", "--topology", GRID_T, "--paths", CROSSED_P]
    ),
    case!(
        "usage_dot_for_rules",
        3,
        [
            "rules",
            "--format",
            "dot",
            "--topology",
            GRID_T,
            "--paths",
            CROSSED_P
        ]
    ),
];

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn golden_dir() -> PathBuf {
    crate_dir().join("tests/golden")
}

/// Exit code, stdout and stderr of the binary run from the crate directory.
pub fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_arcverify"))
        .args(args)
        .current_dir(crate_dir())
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exited normally"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// Golden files for a case: stdout unless a failure left it empty, and
/// stderr when anything was written there.
pub fn expected(case: &Case) -> (Option<String>, Option<String>) {
    let read =
        |ext: &str| fs::read_to_string(golden_dir().join(format!("{}.{ext}", case.name))).ok();
    (read("out"), read("err"))
}
