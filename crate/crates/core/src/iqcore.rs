//! Domain types, dataset ingestion and deterministic splitting.
//!
//! A dataset is a set of IRA bursts (one [`IqFrame`] per burst) grouped by
//! the transmitting satellite. On disk it is a CSV file with one frame per
//! row:
//!
//! ```text
//! time_s,time_ms,sat_id,beam_id,lat,lon,alt,iq_samples
//! 1580712040,000000739,115,0,?,?,?,"0.03+0.3j;0.02-0.4j"
//! ```
//!
//! Unknown positions are written as `?`. Samples are `a+bj` pairs separated
//! by `;` in a quoted final column.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Operational size of the IRIDIUM constellation.
pub const CONSTELLATION_SIZE: u16 = 66;

/// Satellite identifiers accepted by the parser. IRA bursts carry a 7-bit
/// satellite number, so real captures contain ids above 66 (e.g. 115).
pub const SAT_ID_RANGE: RangeInclusive<u16> = 1..=127;

/// Largest beam id; beam 0 is the satellite-identification antenna.
pub const MAX_BEAM_ID: u8 = 48;

/// Header row of the dataset CSV.
pub const CSV_HEADER: &str = "time_s,time_ms,sat_id,beam_id,lat,lon,alt,iq_samples";

/// Deterministic random stream `stream` derived from `seed`.
///
/// Every randomized step in the crate draws from one of these so that a
/// single master seed reproduces a whole pipeline.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mixes `index` into `seed` to obtain an independent child seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SatId(pub u16);

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One baseband sample: in-phase and quadrature amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct IqSample {
    pub i: f64,
    pub q: f64,
}

impl IqSample {
    pub const fn new(i: f64, q: f64) -> Self {
        IqSample { i, q }
    }

    pub fn try_new(i: f64, q: f64) -> Result<Self> {
        if i.is_finite() && q.is_finite() {
            Ok(IqSample { i, q })
        } else {
            Err(Error::invalid(format!("non-finite IQ sample ({i}, {q})")))
        }
    }

    /// Instantaneous power `I² + Q²`.
    pub fn power(&self) -> f64 {
        self.i * self.i + self.q * self.q
    }

    pub fn rotate(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        IqSample::new(self.i * c - self.q * s, self.i * s + self.q * c)
    }

    pub fn scale(&self, g: f64) -> Self {
        IqSample::new(self.i * g, self.q * g)
    }

    /// Parses `a+bj`, `a-bj` (optionally parenthesized, exponents allowed).
    pub fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        let t = t
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(t);
        let body = t.strip_suffix(['j', 'J', 'i'])?;
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
        let re: f64 = body[..split].trim().parse().ok()?;
        let im: f64 = body[split..].trim().parse().ok()?;
        IqSample::try_new(re, im).ok()
    }
}

impl fmt::Display for IqSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_sign_negative() {
            write!(f, "{}-{}j", self.i, -self.q)
        } else {
            write!(f, "{}+{}j", self.i, self.q)
        }
    }
}

/// One received or synthesized IRA burst.
#[derive(Clone, Debug, PartialEq)]
pub struct IqFrame {
    pub time_s: i64,
    /// Receiver millisecond tag; not a sub-second fraction of `time_s`.
    pub time_ms: u64,
    pub sat_id: SatId,
    pub beam_id: u8,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    /// Altitude in km.
    pub alt: Option<f64>,
    pub samples: Vec<IqSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Real,
    Synthetic,
}

/// Frames grouped by satellite, in acquisition order within each group.
///
/// A satellite may be registered with no frames; it still counts as a label.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub provenance: Provenance,
    groups: BTreeMap<SatId, Vec<IqFrame>>,
}

impl Dataset {
    pub fn new(provenance: Provenance) -> Self {
        Dataset {
            provenance,
            groups: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, sat: SatId) {
        self.groups.entry(sat).or_default();
    }

    pub fn push(&mut self, frame: IqFrame) {
        self.groups.entry(frame.sat_id).or_default().push(frame);
    }

    pub fn satellites(&self) -> impl Iterator<Item = SatId> + '_ {
        self.groups.keys().copied()
    }

    pub fn n_satellites(&self) -> usize {
        self.groups.len()
    }

    pub fn frames(&self, sat: SatId) -> &[IqFrame] {
        self.groups.get(&sat).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn groups(&self) -> impl Iterator<Item = (SatId, &[IqFrame])> {
        self.groups.iter().map(|(s, f)| (*s, f.as_slice()))
    }

    pub fn iter_frames(&self) -> impl Iterator<Item = &IqFrame> {
        self.groups.values().flatten()
    }

    pub fn n_frames(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn frame_counts(&self) -> BTreeMap<SatId, usize> {
        self.groups.iter().map(|(s, f)| (*s, f.len())).collect()
    }

    pub fn sample_counts(&self) -> BTreeMap<SatId, usize> {
        self.groups
            .iter()
            .map(|(s, f)| (*s, f.iter().map(|fr| fr.samples.len()).sum()))
            .collect()
    }

    /// Keeps only the listed satellites.
    pub fn restrict(&self, keep: &[SatId]) -> Dataset {
        Dataset {
            provenance: self.provenance,
            groups: self
                .groups
                .iter()
                .filter(|(s, _)| keep.contains(s))
                .map(|(s, f)| (*s, f.clone()))
                .collect(),
        }
    }
}

/// Result of reading a dataset file.
#[derive(Clone, Debug)]
pub struct ParsedDataset {
    pub dataset: Dataset,
    /// Rows dropped because their sample list was empty.
    pub rejected_empty_rows: usize,
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<ParsedDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(BufReader::new(file))
}

/// Parses the dataset CSV. The header row is required; an empty input is an
/// empty dataset.
pub fn parse_dataset<R: Read>(reader: R) -> Result<ParsedDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let mut dataset = Dataset::new(Provenance::Real);
    let mut rejected = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        match parse_row(&record, line)? {
            Some(frame) => dataset.push(frame),
            None => {
                log::warn!("line {line}: empty sample list, row rejected");
                rejected += 1;
            }
        }
    }
    Ok(ParsedDataset {
        dataset,
        rejected_empty_rows: rejected,
    })
}

fn parse_row(record: &csv::StringRecord, line: u64) -> Result<Option<IqFrame>> {
    let bad = |message: String| Error::Parse { line, message };
    if record.len() != 8 {
        return Err(bad(format!("expected 8 fields, found {}", record.len())));
    }
    let field = |k: usize| record[k].trim();
    let int = |k: usize, name: &str| -> Result<i64> {
        field(k)
            .parse::<i64>()
            .map_err(|_| bad(format!("invalid {name} {:?}", field(k))))
    };
    let opt_float = |k: usize, name: &str| -> Result<Option<f64>> {
        match field(k) {
            "?" | "" => Ok(None),
            s => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| bad(format!("invalid {name} {s:?}"))),
        }
    };

    let time_s = int(0, "time_s")?;
    let time_ms = field(1)
        .parse::<u64>()
        .map_err(|_| bad(format!("invalid time_ms {:?}", field(1))))?;
    let sat = int(2, "sat_id")?;
    if sat < i64::from(*SAT_ID_RANGE.start()) || sat > i64::from(*SAT_ID_RANGE.end()) {
        return Err(Error::UnknownSatellite { line, sat_id: sat });
    }
    let beam = int(3, "beam_id")?;
    if !(0..=i64::from(MAX_BEAM_ID)).contains(&beam) {
        return Err(bad(format!("beam_id {beam} outside 0..={MAX_BEAM_ID}")));
    }
    let lat = opt_float(4, "lat")?;
    let lon = opt_float(5, "lon")?;
    let alt = opt_float(6, "alt")?;

    let raw = field(7);
    if raw.is_empty() {
        return Ok(None);
    }
    let samples = raw
        .split(';')
        .map(|tok| IqSample::parse(tok).ok_or_else(|| bad(format!("invalid IQ sample {tok:?}"))))
        .collect::<Result<Vec<_>>>()?;

    Ok(Some(IqFrame {
        time_s,
        time_ms,
        sat_id: SatId(sat as u16),
        beam_id: beam as u8,
        lat,
        lon,
        alt,
        samples,
    }))
}

/// Writes the dataset in canonical form: satellites ascending, frames in
/// stored order, shortest round-trip float formatting.
pub fn write_dataset<W: Write>(d: &Dataset, mut w: W) -> std::io::Result<()> {
    fn opt(v: Option<f64>) -> String {
        v.map_or_else(|| "?".to_string(), |x| x.to_string())
    }
    writeln!(w, "{CSV_HEADER}")?;
    for f in d.iter_frames() {
        write!(
            w,
            "{},{:09},{},{},{},{},{},\"",
            f.time_s,
            f.time_ms,
            f.sat_id,
            f.beam_id,
            opt(f.lat),
            opt(f.lon),
            opt(f.alt)
        )?;
        for (k, s) in f.samples.iter().enumerate() {
            if k > 0 {
                w.write_all(b";")?;
            }
            write!(w, "{s}")?;
        }
        w.write_all(b"\"\n")?;
    }
    Ok(())
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_dataset(d, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Keeps only satellite-identification bursts (beam 0).
pub fn filter_beam_zero(d: &Dataset) -> Dataset {
    let mut out = Dataset::new(d.provenance);
    for (sat, frames) in d.groups() {
        out.register(sat);
        for f in frames.iter().filter(|f| f.beam_id == 0) {
            out.push(f.clone());
        }
    }
    out
}

/// Train/validation/test proportions and the shuffling seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.6,
            val_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_fraction, self.val_fraction, self.test_fraction];
        if fr.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::invalid(format!("split fractions must lie in (0,1): {fr:?}")));
        }
        if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions must sum to 1: {fr:?}")));
        }
        Ok(())
    }

    /// Subset sizes for `n` items; each is within one of its exact share.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let mut train = (n as f64 * self.train_fraction).round() as usize;
        let mut val = (n as f64 * self.val_fraction).round() as usize;
        train = train.min(n);
        val = val.min(n - train);
        (train, val, n - train - val)
    }
}

/// Minimum group size accepted by [`split`].
pub const MIN_SPLIT_ITEMS: usize = 5;

/// Three disjoint subsets of a group of items.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Shuffles `items` under (`spec.seed`, `stream`) and cuts them according to
/// `spec`. Each subset keeps the original relative order of its members.
pub fn partition<T: Clone>(items: &[T], spec: &SplitSpec, stream: u64) -> Partition<T> {
    let n = items.len();
    let (n_train, n_val, _) = spec.counts(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(spec.seed, stream));
    let pick = |range: &[usize]| {
        let mut sel = range.to_vec();
        sel.sort_unstable();
        sel.into_iter().map(|k| items[k].clone()).collect()
    };
    Partition {
        train: pick(&idx[..n_train]),
        val: pick(&idx[n_train..n_train + n_val]),
        test: pick(&idx[n_train + n_val..]),
    }
}

/// Two-way split keeping `round(n * train_fraction)` items for training.
pub fn holdout<T: Clone>(items: &[T], train_fraction: f64, seed: u64, stream: u64) -> (Vec<T>, Vec<T>) {
    let n = items.len();
    let n_train = ((n as f64 * train_fraction).round() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(seed, stream));
    let (a, b) = idx.split_at(n_train);
    let pick = |range: &[usize]| {
        let mut sel = range.to_vec();
        sel.sort_unstable();
        sel.into_iter().map(|k| items[k].clone()).collect::<Vec<_>>()
    };
    (pick(a), pick(b))
}

/// Splits every satellite's frames into train/validation/test subsets.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    let short: Vec<SatId> = d
        .groups()
        .filter(|(_, f)| f.len() < MIN_SPLIT_ITEMS)
        .map(|(s, _)| s)
        .collect();
    if !short.is_empty() {
        return Err(Error::InsufficientFrames {
            min: MIN_SPLIT_ITEMS,
            sat_ids: short,
        });
    }
    let mut out = [
        Dataset::new(d.provenance),
        Dataset::new(d.provenance),
        Dataset::new(d.provenance),
    ];
    for (sat, frames) in d.groups() {
        let p = partition(frames, spec, u64::from(sat.0));
        for (dst, part) in out.iter_mut().zip([p.train, p.val, p.test]) {
            dst.register(sat);
            part.into_iter().for_each(|f| dst.push(f));
        }
    }
    let [train, val, test] = out;
    Ok((train, val, test))
}
