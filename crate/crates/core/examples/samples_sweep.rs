//! How many IQ samples should one image hold? Re-groups the same bursts at
//! several image sizes and reports CNN validation accuracy for each.
//!
//!     cargo run --release --example samples_sweep -- [epochs]

use iqauth::cnn::{sweep_samples_per_image, CnnSpec};
use iqauth::iqcore::SplitSpec;
use iqauth::synth::{synth_constellation, ChannelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs: usize = std::env::args().nth(1).map_or(Ok(5), |s| s.parse())?;
    let chan = ChannelSpec::default().with_snr(Some(20.0));
    // 300k samples per transmitter: 150 images of 2000 down to 15 of 20000.
    let d = synth_constellation(6, &chan, 300_000usize.div_ceil(136), 1.0, 21)?;
    let spec = CnnSpec { epochs, seed: 4, ..CnnSpec::default() };
    let sweep = sweep_samples_per_image(&d, &[2_000, 5_000, 10_000, 20_000], &spec, &SplitSpec::with_seed(9))?;
    println!("samples/image  validation accuracy");
    for (n, acc) in sweep {
        println!("{n:>13}  {acc:.3}");
    }
    Ok(())
}
