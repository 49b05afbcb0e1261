#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kbqa_core::synthetic::{assertion_dump, random_kb};

pub fn kbqa() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kbqa"));
    cmd.env_remove("KBQA_CACHE_DIR").env("RUST_LOG", "off");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    kbqa().args(args).output().expect("kbqa runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Writes a synthetic assertion dump and ingests it; returns the cache path.
pub fn ingest_random(dir: &Path, seed: u64, entities: usize, triples: usize) -> PathBuf {
    let dump = dir.join("assertions.csv");
    std::fs::write(
        &dump,
        assertion_dump(&random_kb(seed, entities, 6, triples)),
    )
    .unwrap();
    let cache = dir.join("kb.bin");
    let out = run(&["ingest", path_str(&dump), "--out", path_str(&cache)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    cache
}
