//! Synthesizes a small constellation, writes it as CSV and reads it back.
//!
//!     cargo run --release --example synth_dataset -- [out_dir]

use std::path::PathBuf;

use iqauth::iqcore::read_dataset;
use iqauth::synth::{draw_profiles, synth_dataset, ChannelSpec, FrameLayout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/synth".into()));
    std::fs::create_dir_all(&out)?;

    let profiles = draw_profiles(4, 1.0, 42)?;
    for p in &profiles {
        println!(
            "{}: gain {:+.4} skew {:+.4} dc ({:+.4}, {:+.4}) phase noise {:.4}",
            p.sat_id, p.gain_imbalance, p.quadrature_skew, p.dc_offset_i, p.dc_offset_q, p.phase_noise_std
        );
    }
    let chan = ChannelSpec::default().with_snr(Some(20.0));
    let d = synth_dataset(&profiles, &chan, &FrameLayout::default(), 200, 42)?;

    let path = out.join("dataset.csv");
    iqauth::iqcore::save_dataset(&d, &path)?;
    let back = read_dataset(&path)?;
    println!("wrote {} frames to {}", d.n_frames(), path.display());
    println!("read back {} frames, {} empty rows rejected", back.dataset.n_frames(), back.rejected_empty_rows);
    for (sat, n) in back.dataset.sample_counts() {
        println!("{sat}: {n} samples");
    }
    Ok(())
}
