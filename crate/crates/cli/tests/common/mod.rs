#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use rand::Rng;
use skeleform_core::pose::{KeypointSet, Point, Topology, NUM_JOINTS};

pub const BIN: &str = env!("CARGO_BIN_EXE_skeleform");

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_clear().output().expect("binary runs")
}

/// A `skeleform serve` child bound to an ephemeral port; killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(models: &[(&str, &Path)]) -> Self {
        let mut cmd = Command::new(BIN);
        cmd.env_clear().args(["serve", "--port", "0"]);
        for (flag, path) in models {
            cmd.arg(flag).arg(path);
        }
        let mut child = cmd.stdout(Stdio::piped()).stderr(Stdio::inherit()).spawn().expect("server starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).expect("address line");
        let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("unexpected: {line:?}"));
        Server { child, base: format!("http://{addr}") }
    }

    pub fn post(&self, path: &str, body: impl Into<Vec<u8>>) -> (u16, String) {
        let client = reqwest::blocking::Client::new();
        let resp = client.post(format!("{}{path}", self.base)).body(body.into()).send().expect("request");
        (resp.status().as_u16(), resp.text().unwrap())
    }

    pub fn get(&self, path: &str) -> (u16, String) {
        let resp = reqwest::blocking::get(format!("{}{path}", self.base)).expect("request");
        (resp.status().as_u16(), resp.text().unwrap())
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Random full pose grown from the neck with segment lengths in [10, 100).
pub fn random_pose(r: &mut impl Rng, topo: &Topology) -> KeypointSet {
    let mut pts = [Point::new(0.0, 0.0); NUM_JOINTS];
    for &j in topo.order() {
        pts[j] = match topo.parent(j) {
            None => Point::new(r.random_range(100.0..400.0), r.random_range(100.0..400.0)),
            Some(p) => {
                let a: f64 = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let l: f64 = r.random_range(10.0..100.0);
                Point::new(pts[p].x + l * a.cos(), pts[p].y + l * a.sin())
            }
        };
    }
    KeypointSet::from_points(pts)
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}
