//! Writes a synthetic 13-vaccine experiment to a directory.
//!
//! ```text
//! cargo run -p uptake-core --example make_dataset -- demo 7
//! ```

use std::path::PathBuf;

use uptake_core::synthetic::{synthetic_suite, write_experiment};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "demo".into()));
    let seed = args.next().map_or(7, |s| s.parse().expect("seed must be an integer"));
    let suite = synthetic_suite(seed).expect("synthetic suite");
    let config = write_experiment(&dir, &suite).expect("write experiment files");
    println!("{}", config.display());
}
