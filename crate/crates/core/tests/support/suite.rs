//! Benchmark models shipped with the crate and a shared runner.
#![allow(dead_code)]

use std::path::PathBuf;
use std::time::{Duration, Instant};

use quasiquad::diskquad::DiskTable;
use quasiquad::patterns::Catalogue;
use quasiquad::pipeline::{self, Config, Output};
use quasiquad::PlanarModel;

/// The five-domain benchmark suite.
pub const SUITE: [&str; 5] = ["square_with_hole", "l_shape", "disk", "rectangle_pair", "gap"];

/// Width of the slit in the gap model.
pub const GAP_WIDTH: f64 = 0.06;

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/models").join(format!("{name}.json"))
}

pub fn load(name: &str) -> PlanarModel {
    PlanarModel::from_json_file(model_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn single_thread(target_quads: usize) -> Config {
    Config { target_quads, jobs: Some(1), ..Config::default() }
}

pub fn run(model: &PlanarModel, config: &Config) -> (Output, Duration) {
    let t = Instant::now();
    let out = pipeline::run(model, config, &Catalogue::builtin(), DiskTable::builtin()).expect("pipeline");
    (out, t.elapsed())
}
