//! Loads a scenario file, runs it and writes the CSV, metrics and plots to a
//! directory: the library path behind `softdock run`.
//!
//! cargo run --release --example config_run -- configs/reference.cfg out/

use std::path::PathBuf;

use softdock::config::{digest, load_scenario};
use softdock::metrics::compute_metrics;
use softdock::output::{trajectory_csv, write_file, write_json, write_plots};
use softdock::sim::run_closed_loop;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| "configs/reference.cfg".into()));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    std::fs::create_dir_all(&out)?;

    let loaded = load_scenario(&config)?;
    println!("config digest {}", digest(&loaded.scenario));
    let record = run_closed_loop(&loaded.scenario)?;
    write_file(&out.join("trajectory.csv"), &trajectory_csv(&record))?;
    write_json(&out.join("metrics.json"), &compute_metrics(&record, &loaded.metrics))?;
    for f in write_plots(&record, &out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
