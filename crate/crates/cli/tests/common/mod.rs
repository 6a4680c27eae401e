#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vgae::numerics::SeededRng;

pub fn vgae_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vgae"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("failed to launch vgae")
}

/// Planted-partition graph written as `edges.txt` and `features.txt` in
/// `dir`. Returns the two paths.
pub fn write_planted(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let classes = 3;
    let dim = 24;
    let mut rng = SeededRng::new(seed);
    let mut edges = String::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if i % classes == j % classes {
                0.3
            } else {
                0.02
            };
            if rng.next_f64() < p {
                writeln!(edges, "{i} {j}").unwrap();
            }
        }
    }
    let mut feats = format!("{n} {dim}\n");
    for i in 0..n {
        let row: Vec<&str> = (0..dim)
            .map(|f| {
                let p = if f % classes == i % classes {
                    0.4
                } else {
                    0.05
                };
                if rng.next_f64() < p {
                    "1"
                } else {
                    "0"
                }
            })
            .collect();
        feats.push_str(&row.join(" "));
        feats.push('\n');
    }
    let e = dir.join("edges.txt");
    let f = dir.join("features.txt");
    std::fs::write(&e, edges).unwrap();
    std::fs::write(&f, feats).unwrap();
    (e, f)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
