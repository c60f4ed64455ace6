//! End-to-end pipeline driven by a `key = value` configuration file, using
//! the same entry points as the `iqauth` binary: synthesize, render images,
//! then run the multi-class experiment. Each step writes a `summary.txt`
//! echoing the merged configuration.
//!
//!     cargo run --release --example config_pipeline -- [work_dir]

use std::path::PathBuf;

use clap::Parser;
use iqauth::cli::{run, Cli};
use iqauth::config::KvConfig;

fn step(args: &[&str]) -> iqauth::Result<()> {
    println!("iqauth {}", args.join(" "));
    run(&Cli::parse_from(std::iter::once("iqauth").chain(args.iter().copied())))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let work = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/pipeline".into()));
    std::fs::create_dir_all(&work)?;

    let mut cfg = KvConfig::new();
    cfg.set("seed", 17)
        .set("sats", 4)
        .set("frames", 1500)
        .set("spread", 1.0)
        .set("channel.snr_db", 20)
        .set("side", 64)
        .set("samples_per_image", 10_000)
        .set("cnn.epochs", 5);
    let cfg_path = work.join("run.cfg");
    cfg.save(&cfg_path)?;
    print!("{}", cfg.render());

    let c = cfg_path.to_str().ok_or("non-UTF-8 path")?;
    let data = work.join("data");
    let images = work.join("images");
    let eval = work.join("eval");
    let (data, images, eval) = (data.to_str().unwrap(), images.to_str().unwrap(), eval.to_str().unwrap());
    step(&["synth", "--config", c, "--out", data])?;
    step(&["image", "--config", c, "--input", &format!("{data}/dataset.csv"), "--out", images])?;
    step(&["eval", "--config", c, "--images", &format!("{images}/images"), "--mode", "multiclass", "--out", eval])?;
    println!("{}", std::fs::read_to_string(format!("{eval}/summary.txt"))?);
    Ok(())
}
