//! Bivariate-histogram images of IQ sample groups.
//!
//! The plane `[-1, 1] × [-1, 1]` is cut into `side × side` tiles. Columns
//! run along I (left to right), rows along Q (top row is `Q ≈ +1`). Tiles
//! are half-open with the far edges closed on the last tile; samples
//! outside the plane are clipped to the edge tiles. Each tile count maps
//! to `round(255 · count / max_count)`.

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::iqcore::{Dataset, IqSample, SatId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImagingSpec {
    pub side: usize,
    pub samples_per_image: usize,
}

impl Default for ImagingSpec {
    fn default() -> Self {
        ImagingSpec {
            side: 224,
            samples_per_image: 10_000,
        }
    }
}

impl ImagingSpec {
    pub fn new(side: usize, samples_per_image: usize) -> Self {
        ImagingSpec {
            side,
            samples_per_image,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side < 8 {
            return Err(Error::invalid(format!("image side must be >= 8, got {}", self.side)));
        }
        if self.samples_per_image == 0 {
            return Err(Error::invalid("samples_per_image must be >= 1"));
        }
        Ok(())
    }
}

/// Grayscale image of one sample group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FingerprintImage {
    pub side: usize,
    /// Row-major, `side * side` bytes.
    pub pixels: Vec<u8>,
    pub sat_id: SatId,
    /// Position of this group among the satellite's images.
    pub group_index: usize,
    /// Indices of the satellite's frames that contributed samples.
    pub frames: Range<usize>,
}

impl FingerprintImage {
    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.side + col]
    }

    /// Pixels scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p) / 255.0).collect()
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.side, self.side).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Scales the group by `1 / max(|i|, |q|)` so its extremal coordinate is ±1.
pub fn normalize_amplitude(samples: &[IqSample]) -> Result<Vec<IqSample>> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot normalize an empty sample group"));
    }
    let peak = samples
        .iter()
        .map(|s| s.i.abs().max(s.q.abs()))
        .fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::AllZeroSamples);
    }
    Ok(samples.iter().map(|s| IqSample::new(s.i / peak, s.q / peak)).collect())
}

fn tile_of(v: f64, side: usize) -> usize {
    let t = ((v + 1.0) * 0.5 * side as f64).floor();
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(side - 1)
    }
}

/// Raw per-tile counts, row-major.
pub fn tile_counts(samples: &[IqSample], side: usize) -> Vec<u32> {
    let mut counts = vec![0u32; side * side];
    for s in samples {
        let col = tile_of(s.i, side);
        let row = side - 1 - tile_of(s.q, side);
        counts[row * side + col] += 1;
    }
    counts
}

/// Maps raw counts to gray levels against the largest count.
pub fn counts_to_pixels(counts: &[u32]) -> Vec<u8> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0; counts.len()];
    }
    counts
        .iter()
        .map(|&c| (255.0 * f64::from(c) / f64::from(max)).round() as u8)
        .collect()
}

/// Histogram image of an (already normalized) sample group.
pub fn render_image(samples: &[IqSample], spec: &ImagingSpec, sat_id: SatId) -> Result<FingerprintImage> {
    spec.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("cannot render an empty sample group"));
    }
    Ok(FingerprintImage {
        side: spec.side,
        pixels: counts_to_pixels(&tile_counts(samples, spec.side)),
        sat_id,
        group_index: 0,
        frames: 0..0,
    })
}

/// Images grouped by satellite plus the satellites that had too few samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImageSet {
    pub images: Vec<FingerprintImage>,
    pub excluded: Vec<SatId>,
}

impl ImageSet {
    pub fn labels(&self) -> Vec<SatId> {
        let mut l: Vec<SatId> = self.images.iter().map(|im| im.sat_id).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    pub fn of(&self, sat: SatId) -> Vec<&FingerprintImage> {
        self.images.iter().filter(|im| im.sat_id == sat).collect()
    }

    pub fn restrict(&self, keep: &[SatId]) -> ImageSet {
        ImageSet {
            images: self
                .images
                .iter()
                .filter(|im| keep.contains(&im.sat_id))
                .cloned()
                .collect(),
            excluded: Vec::new(),
        }
    }
}

/// Cuts each satellite's sample stream (frames in acquisition order) into
/// consecutive, non-overlapping groups of `samples_per_image`, normalizes
/// each group and renders it. Remainders are dropped; satellites without a
/// full group are listed in [`ImageSet::excluded`].
pub fn group_into_images(d: &Dataset, spec: &ImagingSpec) -> Result<ImageSet> {
    spec.validate()?;
    let n = spec.samples_per_image;
    let mut out = ImageSet::default();
    for (sat, frames) in d.groups() {
        let total: usize = frames.iter().map(|f| f.samples.len()).sum();
        let n_images = total / n;
        if n_images == 0 {
            log::warn!("satellite {sat}: {total} samples, fewer than {n} per image; excluded");
            out.excluded.push(sat);
            continue;
        }
        // (frame index, sample) stream, truncated to whole groups
        let mut stream = Vec::with_capacity(n_images * n);
        let mut owner = Vec::with_capacity(n_images * n);
        'outer: for (fi, f) in frames.iter().enumerate() {
            for s in &f.samples {
                if stream.len() == n_images * n {
                    break 'outer;
                }
                stream.push(*s);
                owner.push(fi);
            }
        }
        let images: Vec<FingerprintImage> = (0..n_images)
            .into_par_iter()
            .map(|g| {
                let group = &stream[g * n..(g + 1) * n];
                let normalized = normalize_amplitude(group)?;
                let mut im = render_image(&normalized, spec, sat)?;
                im.group_index = g;
                im.frames = owner[g * n]..owner[(g + 1) * n - 1] + 1;
                Ok(im)
            })
            .collect::<Result<_>>()?;
        out.images.extend(images);
    }
    Ok(out)
}

pub const LABEL_INDEX: &str = "labels.csv";

/// File name used for an image inside an image directory.
pub fn image_file_name(im: &FingerprintImage) -> String {
    format!("sat{:03}_img{:05}.pgm", im.sat_id.0, im.group_index)
}

/// Writes every image as PGM plus the `image_path,sat_id,group_index`
/// label index.
pub fn write_image_set(dir: impl AsRef<Path>, set: &ImageSet) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut index = String::from("image_path,sat_id,group_index\n");
    for im in &set.images {
        let name = image_file_name(im);
        let path = dir.join(&name);
        fs::write(&path, im.to_pgm()).map_err(|e| Error::io(&path, e))?;
        let _ = writeln!(index, "{name},{},{}", im.sat_id, im.group_index);
    }
    let index_path = dir.join(LABEL_INDEX);
    fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))?;
    Ok(index_path)
}

/// Parses a binary PGM with maxval 255 into `(side, pixels)`. Only square
/// images are accepted.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, Vec<u8>)> {
    let bad = |m: &str| Error::invalid(format!("PGM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap"));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("width"))?;
    let h: usize = fields[2].parse().map_err(|_| bad("height"))?;
    if fields[3] != "255" {
        return Err(bad("maxval must be 255"));
    }
    if w != h {
        return Err(bad("image must be square"));
    }
    let payload = bytes.get(pos..).ok_or_else(|| bad("missing payload"))?;
    if payload.len() != w * h {
        return Err(bad("payload size mismatch"));
    }
    Ok((w, payload.to_vec()))
}

/// Reads an image directory written by [`write_image_set`].
pub fn read_image_set(dir: impl AsRef<Path>) -> Result<ImageSet> {
    let dir = dir.as_ref();
    let index_path = dir.join(LABEL_INDEX);
    let mut rdr = csv::Reader::from_path(&index_path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", index_path.display()),
    })?;
    let mut set = ImageSet::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |m: String| Error::Parse { line, message: m };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let path = dir.join(&rec[0]);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let (side, pixels) = parse_pgm(&bytes)?;
        set.images.push(FingerprintImage {
            side,
            pixels,
            sat_id: SatId(rec[1].trim().parse().map_err(|_| bad(format!("bad sat_id {:?}", &rec[1])))?),
            group_index: rec[2]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad group_index {:?}", &rec[2])))?,
            frames: 0..0,
        });
    }
    Ok(set)
}
