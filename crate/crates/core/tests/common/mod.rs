#![allow(dead_code)]

use std::path::PathBuf;

use vstate::cli::StateFile;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// All converged states, sorted by file name.
pub fn fixtures() -> Vec<(String, StateFile)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .expect("fixture directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let state = serde_json::from_str(&std::fs::read_to_string(&p).expect("read fixture")).expect("parse fixture");
            (name, state)
        })
        .collect()
}

pub fn fixture(name: &str) -> StateFile {
    let text = std::fs::read_to_string(fixture_dir().join(format!("{name}.json"))).expect("read fixture");
    serde_json::from_str(&text).expect("parse fixture")
}
