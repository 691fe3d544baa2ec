//! Writes a sampled endpoint as a JITG grid plus one PGM per channel, then
//! reads the grid back.
//!
//! cargo run --example grid_files -- out_dir

use std::path::PathBuf;

use jit_core::io::config::RunConfig;
use jit_core::io::jitg::{read_grid, write_grid};
use jit_core::io::pgm::write_pgm_channel;
use jit_core::sampler::run;

fn main() -> jit_core::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("jit_grid_files"));
    std::fs::create_dir_all(&out)?;

    let mut cfg = RunConfig::for_preset("jit4x", [24, 24, 3], 11);
    cfg.field.kind = "smooth-gradient".into();
    cfg.field.sigma1 = 0.1;
    let report = run(
        &cfg.build_schedule()?,
        &cfg.build_field()?,
        cfg.shape()?,
        cfg.seed,
        &cfg.run_options(),
    )?;

    let grid_path = out.join("endpoint.jitg");
    write_grid(&grid_path, &report.endpoint)?;
    for c in 0..3 {
        write_pgm_channel(&out.join(format!("endpoint_c{c}.pgm")), &report.endpoint, c)?;
    }
    let back = read_grid(&grid_path)?;
    assert_eq!(back, report.endpoint);
    println!(
        "wrote {} ({} bytes) and 3 PGM channels",
        grid_path.display(),
        std::fs::metadata(&grid_path)?.len()
    );
    Ok(())
}
