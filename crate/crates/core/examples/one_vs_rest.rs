//! Authentication of one reference transmitter against the rest of the
//! constellation: a sparse autoencoder is trained on 80% of the reference
//! images and its reconstruction error is the score. Writes the ROC curve.
//!
//!     cargo run --release --example one_vs_rest -- [out_dir] [reference] [hidden] [max_epochs]

use std::path::PathBuf;

use iqauth::autoenc::AeHyperparams;
use iqauth::eval::{self, one_vs_rest, score_reference, AuthConfig};
use iqauth::imaging::{group_into_images, ImagingSpec};
use iqauth::synth::{synth_constellation, ChannelSpec};
use iqauth::SatId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().collect();
    let out = PathBuf::from(args.get(1).cloned().unwrap_or_else(|| "out/one_vs_rest".into()));
    let reference = SatId(args.get(2).map_or(Ok(1), |s| s.parse())?);
    let hidden: usize = args.get(3).map_or(Ok(256), |s| s.parse())?;
    let max_epochs: usize = args.get(4).map_or(Ok(100), |s| s.parse())?;
    std::fs::create_dir_all(&out)?;

    let chan = ChannelSpec::default().with_snr(Some(20.0));
    let d = synth_constellation(8, &chan, (50 * 10_000usize).div_ceil(136), 1.0, 7)?;
    let set = group_into_images(&d, &ImagingSpec::new(64, 10_000))?;
    let cfg = AuthConfig {
        hp: AeHyperparams { hidden_size: hidden, max_epochs, ..AeHyperparams::default() },
        seed: 3,
        ..AuthConfig::default()
    };

    let r = score_reference(&set, reference, &cfg)?;
    let roc = one_vs_rest(&r)?;
    println!(
        "{reference}: {} SCG epochs, objective {:.4} -> {:.4}",
        r.trace.objective.len() - 1,
        r.trace.initial(),
        r.trace.last()
    );
    println!(
        "AUC {:.4}, optimal point FPR {:.3} TPR {:.3} (threshold {:.5}, distance to (0,1) {:.3})",
        roc.auc,
        roc.optimal.fpr,
        roc.optimal.tpr,
        roc.optimal.threshold,
        roc.optimal_distance()
    );
    eval::write_roc_csv(out.join(format!("roc_{:03}.csv", reference.0)), &roc)?;
    r.model.save(out.join(format!("ae_{:03}.bin", reference.0)))?;
    Ok(())
}
