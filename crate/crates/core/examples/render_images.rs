//! Groups synthetic bursts into fingerprint images and writes them as PGM
//! files plus a label index. Prints an ASCII preview of one image.
//!
//!     cargo run --release --example render_images -- [out_dir] [side] [samples_per_image]

use std::path::PathBuf;

use iqauth::imaging::{group_into_images, read_image_set, write_image_set, ImagingSpec};
use iqauth::synth::{synth_constellation, ChannelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let out = PathBuf::from(args.get(1).cloned().unwrap_or_else(|| "out/images".into()));
    let side: usize = args.get(2).map_or(Ok(64), |s| s.parse())?;
    let per_image: usize = args.get(3).map_or(Ok(10_000), |s| s.parse())?;
    let spec = ImagingSpec::new(side, per_image);

    let chan = ChannelSpec::default().with_snr(Some(20.0));
    let frames = (5 * per_image).div_ceil(136);
    let d = synth_constellation(4, &chan, frames, 1.0, 3)?;
    let set = group_into_images(&d, &spec)?;
    println!("{} images, satellites without a full image: {:?}", set.images.len(), set.excluded);

    let index = write_image_set(&out, &set)?;
    let back = read_image_set(&out)?;
    assert_eq!(back.images.len(), set.images.len());
    println!("wrote {} ({} images)", index.display(), back.images.len());

    let im = &set.images[0];
    let ramp = b" .:-=+*#%@";
    let step = (im.side / 32).max(1);
    for r in (0..im.side).step_by(step) {
        let line: String = (0..im.side)
            .step_by(step)
            .map(|c| ramp[im.pixel(r, c) as usize * (ramp.len() - 1) / 255] as char)
            .collect();
        println!("{line}");
    }
    Ok(())
}
