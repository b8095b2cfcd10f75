//! Golden CLI cases shared by the CLI tests and the acceptance suite.
#![allow(dead_code)]

pub mod oracle;

use std::path::{Path, PathBuf};

use foliate::cli::{run_path, Command, JobArgs, EXIT_MATHEMATICAL, EXIT_OK, EXIT_USAGE};

pub fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn args(file: &str) -> JobArgs {
    JobArgs {
        job: examples().join(file),
        ..JobArgs::default()
    }
}

/// `(example, command, exit code)`; each has a frozen report in `tests/golden`.
pub const GOLDEN: &[(&str, Command, i32)] = &[
    ("pfaffian_xy.json", Command::Check, EXIT_OK),
    ("pfaffian_contact.json", Command::Check, EXIT_MATHEMATICAL),
    ("integrable_x2y2.json", Command::Classify, EXIT_OK),
    ("integrable_x2y2.json", Command::Truncate, EXIT_OK),
    ("integrable_x2y2.json", Command::Compare, EXIT_OK),
    ("integrable_x2y2z2.json", Command::Compare, EXIT_OK),
    ("lie_algebroid_sl2.json", Command::Cohomology, EXIT_OK),
    ("lie_algebroid_log.json", Command::Cohomology, EXIT_OK),
    ("de_rham_plane.json", Command::Cohomology, EXIT_OK),
    ("punctual_line.json", Command::Classify, EXIT_OK),
    ("crystal_exp.json", Command::CrystalCohomology, EXIT_OK),
    ("crystal_not_flat.json", Command::Check, EXIT_MATHEMATICAL),
    ("singularity_cusp.json", Command::Singularity, EXIT_OK),
    ("singularity_weighted_cusp.json", Command::Cohomology, EXIT_OK),
    ("singularity_x2y.json", Command::Singularity, EXIT_OK),
    ("singularity_cusp.json", Command::CrystalCohomology, EXIT_USAGE),
];

pub fn golden_name(file: &str, command: Command) -> String {
    format!("{}.{}.json", file.trim_end_matches(".json"), command.name())
}

/// Runs every golden case twice; returns the cases whose bytes differ
/// between runs or from the frozen report. `FOLIATE_BLESS=1` rewrites the
/// frozen reports.
pub fn golden_mismatches() -> Vec<String> {
    let bless = std::env::var_os("FOLIATE_BLESS").is_some();
    let mut bad = Vec::new();
    for &(file, command, code) in GOLDEN {
        let first = run_path(command, &args(file));
        let second = run_path(command, &args(file));
        let name = golden_name(file, command);
        if first.exit_code != code {
            bad.push(format!("{name}: exit {} != {code}", first.exit_code));
        }
        if first.to_bytes() != second.to_bytes() {
            bad.push(format!("{name}: runs differ"));
        }
        let path = golden_dir().join(&name);
        if bless {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, first.to_bytes()).unwrap();
        } else if std::fs::read(&path).ok().as_deref() != Some(&first.to_bytes()[..]) {
            bad.push(format!("{name}: differs from golden"));
        }
    }
    bad
}
