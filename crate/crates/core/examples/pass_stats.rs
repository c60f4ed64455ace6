//! Simulates several passes per transmitter and reports the dataset
//! statistics: per-frame SNR, pass durations, waiting times between passes
//! and the samples-per-pass ICDF. Two-column CSV files land in `out_dir`.
//!
//!     cargo run --release --example pass_stats -- [out_dir]

use std::path::PathBuf;

use iqauth::iqcore::{Dataset, Provenance};
use iqauth::stats::{
    histogram, kernel_density, pass_segmentation, samples_per_pass_icdf, snr_of_frame, waiting_times_min,
    write_two_column, DEFAULT_GAP_S,
};
use iqauth::synth::{draw_profiles, synth_pass, synth_pass_trace, ChannelSpec, FrameLayout};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/stats".into()));
    std::fs::create_dir_all(&out)?;

    let chan = ChannelSpec::default();
    let layout = FrameLayout::default();
    let mut d = Dataset::new(Provenance::Synthetic);
    for (k, p) in draw_profiles(3, 1.0, 5)?.iter().enumerate() {
        d.register(p.sat_id);
        // Passes of 6 to 9 minutes, roughly 100 minutes apart.
        let mut start = 300 * k as i64;
        for pass in 0..4u64 {
            let minutes = 6.0 + pass as f64;
            let schedule = synth_pass_trace(minutes, 5_000 * (pass as usize + 1), &chan, &layout)?;
            for f in synth_pass(p, &chan, &layout, &schedule, start, pass)? {
                d.push(f);
            }
            start += 6_000 + 60 * pass as i64;
        }
    }

    let snr: Vec<f64> = d.iter_frames().map(|f| snr_of_frame(f).map(|e| e.snr_db)).collect::<Result<_, _>>()?;
    let mean = snr.iter().sum::<f64>() / snr.len() as f64;
    println!("{} frames, mean SNR {mean:.2} dB", snr.len());
    write_two_column(out.join("snr_hist.csv"), ("snr_db", "count"), &histogram(&snr, 0.0, 1.0))?;
    write_two_column(out.join("snr_kde.csv"), ("snr_db", "density"), &kernel_density(&snr, None, 200))?;

    let passes = pass_segmentation(&d, DEFAULT_GAP_S);
    for p in &passes {
        println!("{} pass at {:>6} s: {:.2} min, {} samples", p.sat_id, p.start_s, p.duration_min, p.n_iq_samples);
    }
    let waits = waiting_times_min(&passes);
    println!("waiting times (min): {waits:.1?}");
    let durations: Vec<(f64, usize)> = histogram(&passes.iter().map(|p| p.duration_min).collect::<Vec<_>>(), 0.0, 1.0);
    write_two_column(out.join("pass_duration_hist.csv"), ("minutes", "count"), &durations)?;
    write_two_column(out.join("samples_per_pass_icdf.csv"), ("samples", "fraction_at_least"), &samples_per_pass_icdf(&passes))?;
    println!("wrote statistics to {}", out.display());
    Ok(())
}
