#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use series_unfold::GridHistogram;

pub const BIN: &str = env!("CARGO_BIN_EXE_series-unfold");

/// Runs the binary in `dir`, writing `config` to `dir/input.toml` first when
/// it is not empty.
pub fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(dir).args(args);
    if !config.is_empty() {
        std::fs::write(dir.join("input.toml"), config).unwrap();
        cmd.args(["--config", "input.toml"]);
    }
    cmd.output().expect("binary runs")
}

pub fn run_ok(dir: &Path, config: &str, args: &[&str]) -> Output {
    let out = run(dir, config, args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn read_hist(path: impl AsRef<Path>) -> GridHistogram {
    let f = std::fs::File::open(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()));
    GridHistogram::read_csv(std::io::BufReader::new(f)).unwrap()
}

pub fn read_json(path: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Every regular file under `dir`, sorted by relative path.
pub fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}
