#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn dvlae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dvlae"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("run dvlae")
}

/// Run and require exit 0, returning stdout.
pub fn dvlae_ok(args: &[&str]) -> String {
    let out = dvlae(args);
    assert!(
        out.status.success(),
        "dvlae {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// `format = 1` config with the given manifests plus extra TOML.
pub fn write_config(dir: &Path, manifests: &[&Path], extra: &str) -> PathBuf {
    let list: Vec<String> = manifests
        .iter()
        .map(|m| format!("{:?}", m.file_name().unwrap().to_str().unwrap()))
        .collect();
    let text = format!("format = 1\n{extra}\n[data]\nmanifests = [{}]\n", list.join(", "));
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
