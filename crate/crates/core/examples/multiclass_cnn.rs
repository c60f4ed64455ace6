//! Multi-class identification: trains the compact CNN on fingerprint images
//! of 8 transmitters, prints the confusion matrix and per-class hit rates,
//! then repeatedly drops the worst-recognized transmitter and retrains.
//!
//!     cargo run --release --example multiclass_cnn -- [out_dir] [images_per_sat] [epochs]

use std::path::PathBuf;

use iqauth::cnn::{write_trace, CnnSpec};
use iqauth::eval::{self, exclusion_sweep, hit_miss_rates, run_multiclass};
use iqauth::imaging::{group_into_images, ImagingSpec};
use iqauth::iqcore::SplitSpec;
use iqauth::synth::{synth_constellation, ChannelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().collect();
    let out = PathBuf::from(args.get(1).cloned().unwrap_or_else(|| "out/cnn".into()));
    let n_img: usize = args.get(2).map_or(Ok(40), |s| s.parse())?;
    let epochs: usize = args.get(3).map_or(Ok(8), |s| s.parse())?;
    std::fs::create_dir_all(&out)?;

    let chan = ChannelSpec::default().with_snr(Some(20.0));
    let d = synth_constellation(8, &chan, (n_img * 10_000).div_ceil(136), 1.0, 11)?;
    let set = group_into_images(&d, &ImagingSpec::new(64, 10_000))?;
    let spec = CnnSpec { epochs, seed: 1, ..CnnSpec::default() };
    let split = SplitSpec::with_seed(2);

    let run = run_multiclass(&set, &spec, &split)?;
    println!("best epoch {} (validation {:.3}), test accuracy {:.3}", run.fit.best_epoch, run.fit.best_val_accuracy, run.test_accuracy);
    let cm = &run.matrix;
    print!("{:>6}", "");
    for l in &cm.labels {
        print!("{:>5}", l.0);
    }
    println!();
    for r in 0..cm.n() {
        print!("{:>6}", cm.labels[r].0);
        for c in 0..cm.n() {
            print!("{:>5}", cm.get(r, c));
        }
        println!();
    }
    let rates = hit_miss_rates(cm)?;
    eval::write_confusion_csv(out.join("confusion.csv"), cm)?;
    eval::write_rates_csv(out.join("rates.csv"), &rates)?;
    write_trace(out.join("trace.csv"), &run.fit.trace)?;

    let steps = exclusion_sweep(&set.labels(), 2, |keep| Ok(run_multiclass(&set.restrict(keep), &spec, &split)?.matrix))?;
    for s in &steps {
        let next = s.removed_next.map_or_else(|| "-".to_string(), |x| x.to_string());
        println!("removed {}: accuracy {:.3}, next to drop {next}", s.n_removed, s.accuracy);
    }
    eval::write_exclusion_csv(out.join("exclusion.csv"), &steps)?;
    Ok(())
}
