//! Trains one autoencoder per transmitter and scores it against every other
//! transmitter separately. Prints the pairwise AUC matrix and the 5/50/95%
//! quantiles per reference.
//!
//!     cargo run --release --example one_vs_one -- [out_dir] [n_sats] [hidden] [max_epochs]

use std::path::PathBuf;

use iqauth::autoenc::AeHyperparams;
use iqauth::eval::{self, one_vs_one, one_vs_rest, score_all_references, AuthConfig};
use iqauth::imaging::{group_into_images, ImagingSpec};
use iqauth::synth::{synth_constellation, ChannelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<String> = std::env::args().collect();
    let out = PathBuf::from(args.get(1).cloned().unwrap_or_else(|| "out/one_vs_one".into()));
    let n_sats: usize = args.get(2).map_or(Ok(5), |s| s.parse())?;
    let hidden: usize = args.get(3).map_or(Ok(128), |s| s.parse())?;
    let max_epochs: usize = args.get(4).map_or(Ok(60), |s| s.parse())?;
    std::fs::create_dir_all(&out)?;

    let chan = ChannelSpec::default().with_snr(Some(20.0));
    let d = synth_constellation(n_sats, &chan, (40 * 10_000usize).div_ceil(136), 1.0, 7)?;
    let set = group_into_images(&d, &ImagingSpec::new(64, 10_000))?;
    let cfg = AuthConfig {
        hp: AeHyperparams { hidden_size: hidden, max_epochs, ..AeHyperparams::default() },
        seed: 5,
        ..AuthConfig::default()
    };

    let refs = score_all_references(&set, &cfg)?;
    let mut rows = Vec::new();
    let mut aucs = Vec::new();
    for r in &refs {
        let ovo = one_vs_one(r)?;
        let cells: Vec<String> = ovo.opponents.iter().map(|(s, a)| format!("{}:{a:.3}", s.0)).collect();
        println!("{} vs  {}", r.sat_id, cells.join("  "));
        aucs.push((r.sat_id, one_vs_rest(r)?));
        rows.push(ovo);
    }
    for q in &rows {
        println!("{} quantiles 5/50/95%: {:.3} {:.3} {:.3}", q.sat_id, q.quantiles[0], q.quantiles[1], q.quantiles[2]);
    }
    eval::write_one_vs_one_csv(out.join("one_vs_one.csv"), &rows)?;
    eval::write_quantiles_csv(out.join("quantiles.csv"), &rows)?;
    eval::write_auc_table(out.join("one_vs_rest_auc.csv"), &aucs)?;
    Ok(())
}
