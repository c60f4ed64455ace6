//! Synthetic IRA bursts with per-transmitter hardware impairments and LEO
//! channel effects.
//!
//! A burst is a 12-symbol BPSK unique word followed by a differentially
//! encoded QPSK body. The transmitter distorts the ideal constellation with
//! phase noise and an affine IQ imbalance; the channel applies a per-frame
//! carrier rotation, a residual Doppler ramp and an amplitude scale, then
//! additive white Gaussian noise calibrated against the frame SNR estimator
//! of [`crate::stats`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::iqcore::{derive_seed, seeded_rng, Dataset, IqFrame, IqSample, Provenance, SatId};

/// IRIDIUM downlink unique word, `0x789`, one BPSK symbol per bit.
pub const UNIQUE_WORD: [u8; 12] = [0, 1, 1, 1, 1, 0, 0, 0, 1, 0, 0, 1];

/// Trailer dibit, repeated for every trailing symbol.
pub const TRAILER_DIBIT: [u8; 2] = [1, 1];

/// Start of synthetic timestamps (first row of the reference capture).
pub const EPOCH_S: i64 = 1_580_712_040;

/// Spacing between consecutive synthetic bursts of one satellite.
pub const FRAME_INTERVAL_MS: u64 = 4_320;

/// Nominal orbit altitude reported for synthetic frames, km.
pub const ORBIT_ALTITUDE_KM: f64 = 780.0;

/// Longest visible pass, minutes.
pub const MAX_PASS_MINUTES: f64 = 9.0;

/// Unit-energy QPSK points `s0..s3`, counter-clockwise from the first
/// quadrant.
pub const QPSK_POINTS: [IqSample; 4] = [
    IqSample::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    IqSample::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    IqSample::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    IqSample::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Index of the QPSK point for a dibit: `{1,1}→s0, {0,1}→s1, {0,0}→s2, {1,0}→s3`.
pub fn dibit_symbol(b0: u8, b1: u8) -> usize {
    match (b0 & 1, b1 & 1) {
        (1, 1) => 0,
        (0, 1) => 1,
        (0, 0) => 2,
        _ => 3,
    }
}

/// Maps bit pairs onto QPSK symbols.
pub fn map_bits_qpsk(bits: &[u8]) -> Result<Vec<IqSample>> {
    if bits.len() % 2 != 0 {
        return Err(Error::OddBitCount(bits.len()));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|d| QPSK_POINTS[dibit_symbol(d[0], d[1])])
        .collect())
}

/// Quadrant (0..4, same numbering as [`QPSK_POINTS`]) a sample falls in.
pub fn quadrant(s: IqSample) -> usize {
    match (s.i >= 0.0, s.q >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

/// BPSK symbol of the unique word: 0 → s1, 1 → s3.
fn bpsk_symbol(bit: u8) -> usize {
    if bit & 1 == 0 {
        1
    } else {
        3
    }
}

/// Gray-coded phase increment (multiples of π/2) carried by a dibit.
fn dqpsk_increment(b0: u8, b1: u8) -> usize {
    match (b0 & 1, b1 & 1) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        _ => 3,
    }
}

fn increment_dibit(k: usize) -> [u8; 2] {
    [[0, 0], [0, 1], [1, 1], [1, 0]][k % 4]
}

/// Symbol counts of one burst.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameLayout {
    pub n_bpsk_preamble: usize,
    pub n_dqpsk_payload: usize,
    pub n_dqpsk_trailer: usize,
}

impl Default for FrameLayout {
    fn default() -> Self {
        FrameLayout {
            n_bpsk_preamble: 12,
            n_dqpsk_payload: 103,
            n_dqpsk_trailer: 21,
        }
    }
}

impl FrameLayout {
    pub fn total_symbols(&self) -> usize {
        self.n_bpsk_preamble + self.n_dqpsk_payload + self.n_dqpsk_trailer
    }
}

/// Source bits and ideal (undistorted) symbols of a burst.
#[derive(Clone, Debug, PartialEq)]
pub struct Burst {
    /// Preamble bits, then two bits per DQPSK symbol (payload and trailer).
    pub bits: Vec<u8>,
    pub symbols: Vec<IqSample>,
}

/// Builds the ideal burst: unique word (cycled if the preamble is longer),
/// random payload dibits, constant trailer dibits.
pub fn modulate_burst<R: Rng + ?Sized>(layout: &FrameLayout, rng: &mut R) -> Burst {
    let mut bits = Vec::with_capacity(layout.n_bpsk_preamble + 2 * (layout.total_symbols()));
    let mut idx = Vec::with_capacity(layout.total_symbols());
    for k in 0..layout.n_bpsk_preamble {
        let b = UNIQUE_WORD[k % UNIQUE_WORD.len()];
        bits.push(b);
        idx.push(bpsk_symbol(b));
    }
    let mut state = idx.last().copied().unwrap_or(0);
    let n_dq = layout.n_dqpsk_payload + layout.n_dqpsk_trailer;
    for k in 0..n_dq {
        let dibit = if k < layout.n_dqpsk_payload {
            [rng.random_range(0..2u8), rng.random_range(0..2u8)]
        } else {
            TRAILER_DIBIT
        };
        state = (state + dqpsk_increment(dibit[0], dibit[1])) % 4;
        bits.extend_from_slice(&dibit);
        idx.push(state);
    }
    Burst {
        bits,
        symbols: idx.into_iter().map(|m| QPSK_POINTS[m]).collect(),
    }
}

/// Hard-decision demodulation by quadrant, inverting [`modulate_burst`].
pub fn demodulate_burst(samples: &[IqSample], layout: &FrameLayout) -> Vec<u8> {
    let quads: Vec<usize> = samples.iter().map(|s| quadrant(*s)).collect();
    let mut bits = Vec::with_capacity(samples.len() * 2);
    let pre = layout.n_bpsk_preamble.min(quads.len());
    for s in &samples[..pre] {
        // antipodal pair s1/s3: decide on the s3 direction
        bits.push(u8::from(s.i - s.q > 0.0));
    }
    let mut prev = if pre > 0 { quads[pre - 1] } else { 0 };
    for &q in &quads[pre..] {
        let inc = (q + 4 - prev) % 4;
        bits.extend_from_slice(&increment_dibit(inc));
        prev = q;
    }
    bits
}

/// Affine IQ imbalance `i' = i + dc_i`,
/// `q' = (1+g)(q cos φ + i sin φ) + dc_q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IqImbalance {
    pub gain_imbalance: f64,
    pub quadrature_skew: f64,
    pub dc_offset_i: f64,
    pub dc_offset_q: f64,
}

impl IqImbalance {
    pub const IDENTITY: IqImbalance = IqImbalance {
        gain_imbalance: 0.0,
        quadrature_skew: 0.0,
        dc_offset_i: 0.0,
        dc_offset_q: 0.0,
    };

    /// Coefficients of `q'` on `i` and on `q`.
    fn q_row(&self) -> (f64, f64) {
        let (s, c) = self.quadrature_skew.sin_cos();
        let g = 1.0 + self.gain_imbalance;
        (g * s, g * c)
    }

    pub fn apply(&self, x: IqSample) -> IqSample {
        let (s, c) = self.quadrature_skew.sin_cos();
        IqSample::new(
            x.i + self.dc_offset_i,
            (1.0 + self.gain_imbalance) * (x.q * c + x.i * s) + self.dc_offset_q,
        )
    }

    /// The single imbalance equivalent to applying `inner` then `self`.
    pub fn compose(&self, inner: &IqImbalance) -> IqImbalance {
        let (c2, e2) = self.q_row();
        let (c1, e1) = inner.q_row();
        let c = c2 + e2 * c1;
        let e = e2 * e1;
        IqImbalance {
            gain_imbalance: c.hypot(e) - 1.0,
            quadrature_skew: c.atan2(e),
            dc_offset_i: inner.dc_offset_i + self.dc_offset_i,
            dc_offset_q: c2 * inner.dc_offset_i + e2 * inner.dc_offset_q + self.dc_offset_q,
        }
    }
}

/// Hardware signature of one transmitter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmitterProfile {
    pub sat_id: SatId,
    /// Relative Q-arm gain error (0.02 ⇒ +2%).
    pub gain_imbalance: f64,
    /// Radians.
    pub quadrature_skew: f64,
    pub dc_offset_i: f64,
    pub dc_offset_q: f64,
    /// Per-symbol phase jitter, radians.
    pub phase_noise_std: f64,
}

pub const MAX_GAIN_IMBALANCE: f64 = 0.2;
pub const MAX_QUADRATURE_SKEW: f64 = 0.2;
pub const MAX_DC_OFFSET: f64 = 0.1;

impl TransmitterProfile {
    pub fn ideal(sat_id: SatId) -> Self {
        TransmitterProfile {
            sat_id,
            gain_imbalance: 0.0,
            quadrature_skew: 0.0,
            dc_offset_i: 0.0,
            dc_offset_q: 0.0,
            phase_noise_std: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.gain_imbalance.abs() < MAX_GAIN_IMBALANCE
            && self.quadrature_skew.abs() < MAX_QUADRATURE_SKEW
            && self.dc_offset_i.abs() < MAX_DC_OFFSET
            && self.dc_offset_q.abs() < MAX_DC_OFFSET
            && self.phase_noise_std >= 0.0
            && self.phase_noise_std.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("transmitter profile out of range: {self:?}")))
        }
    }

    pub fn imbalance(&self) -> IqImbalance {
        IqImbalance {
            gain_imbalance: self.gain_imbalance,
            quadrature_skew: self.quadrature_skew,
            dc_offset_i: self.dc_offset_i,
            dc_offset_q: self.dc_offset_q,
        }
    }

    pub fn to_kv(&self, cfg: &mut KvConfig, prefix: &str) {
        cfg.set(format!("{prefix}sat_id"), self.sat_id)
            .set(format!("{prefix}gain_imbalance"), self.gain_imbalance)
            .set(format!("{prefix}quadrature_skew"), self.quadrature_skew)
            .set(format!("{prefix}dc_offset_i"), self.dc_offset_i)
            .set(format!("{prefix}dc_offset_q"), self.dc_offset_q)
            .set(format!("{prefix}phase_noise_std"), self.phase_noise_std);
    }

    pub fn from_kv(cfg: &KvConfig, prefix: &str) -> Result<Self> {
        let p = TransmitterProfile {
            sat_id: SatId(cfg.require(&format!("{prefix}sat_id"))?),
            gain_imbalance: cfg.require(&format!("{prefix}gain_imbalance"))?,
            quadrature_skew: cfg.require(&format!("{prefix}quadrature_skew"))?,
            dc_offset_i: cfg.require(&format!("{prefix}dc_offset_i"))?,
            dc_offset_q: cfg.require(&format!("{prefix}dc_offset_q"))?,
            phase_noise_std: cfg.require(&format!("{prefix}phase_noise_std"))?,
        };
        p.validate()?;
        Ok(p)
    }

    /// Static imbalance parameters scaled by their half-ranges in
    /// [`draw_profiles`]. Phase noise is left out: at moderate SNR it is
    /// buried under the additive noise and does not separate transmitters.
    fn normalized(&self) -> [f64; 4] {
        [
            self.gain_imbalance / PROFILE_RANGE_GAIN,
            self.quadrature_skew / PROFILE_RANGE_SKEW,
            self.dc_offset_i / PROFILE_RANGE_DC,
            self.dc_offset_q / PROFILE_RANGE_DC,
        ]
    }
}

// Half-widths of the profile draw at spread 1.
const PROFILE_RANGE_GAIN: f64 = 0.15;
const PROFILE_RANGE_SKEW: f64 = 0.15;
const PROFILE_RANGE_DC: f64 = 0.05;
const PROFILE_RANGE_PHASE_NOISE: f64 = 0.03;

/// Draws `n_sats` profiles (ids `1..=n_sats`) from `seed`. `spread` in
/// (0, 1] scales every impairment range; profiles are kept at least
/// `spread` apart in range-normalized imbalance space when the greedy draw
/// can manage it, otherwise as far apart as it found.
pub fn draw_profiles(n_sats: usize, spread: f64, seed: u64) -> Result<Vec<TransmitterProfile>> {
    if !(spread > 0.0 && spread <= 1.0) {
        return Err(Error::invalid(format!("profile spread must lie in (0,1], got {spread}")));
    }
    let mut rng = seeded_rng(seed, 0x7072_6f66);
    let min_dist = spread;
    let mut out: Vec<TransmitterProfile> = Vec::with_capacity(n_sats);
    for k in 0..n_sats {
        let sat_id = SatId(k as u16 + 1);
        let mut best: Option<(f64, TransmitterProfile)> = None;
        for _ in 0..10_000 {
            let mut u = |half: f64| rng.random_range(-half..half) * spread;
            let p = TransmitterProfile {
                sat_id,
                gain_imbalance: u(PROFILE_RANGE_GAIN),
                quadrature_skew: u(PROFILE_RANGE_SKEW),
                dc_offset_i: u(PROFILE_RANGE_DC),
                dc_offset_q: u(PROFILE_RANGE_DC),
                phase_noise_std: u(PROFILE_RANGE_PHASE_NOISE).abs(),
            };
            let nearest = out
                .iter()
                .map(|o| {
                    let (a, b) = (p.normalized(), o.normalized());
                    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(d, _)| nearest > d) {
                best = Some((nearest, p));
            }
            if nearest >= min_dist {
                break;
            }
        }
        out.push(best.expect("at least one draw").1);
    }
    Ok(out)
}

/// Per-frame propagation model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelSpec {
    /// Target frame SNR; `None` disables the noise.
    pub target_snr_db: Option<f64>,
    /// Uniform per-frame amplitude scale `[min, max]`.
    pub amplitude_range: (f64, f64),
    /// Uniform per-frame carrier phase `[lo, hi)`, radians. `(0, 2π)` models
    /// an unsynchronized receiver; the default is a small residual.
    pub carrier_phase_range: (f64, f64),
    /// Standard deviation of the residual Doppler phase ramp, rad/symbol.
    pub doppler_residual_std: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            target_snr_db: Some(45.0),
            amplitude_range: (0.4, 1.0),
            carrier_phase_range: (-0.05, 0.05),
            doppler_residual_std: 2e-4,
        }
    }
}

impl ChannelSpec {
    /// Unit amplitude, no rotation, no Doppler, no noise.
    pub fn identity() -> Self {
        ChannelSpec {
            target_snr_db: None,
            amplitude_range: (1.0, 1.0),
            carrier_phase_range: (0.0, 0.0),
            doppler_residual_std: 0.0,
        }
    }

    pub fn with_snr(mut self, snr_db: Option<f64>) -> Self {
        self.target_snr_db = snr_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.amplitude_range;
        let (p0, p1) = self.carrier_phase_range;
        let ok = self.target_snr_db.is_none_or(f64::is_finite)
            && lo > 0.0
            && lo <= hi
            && hi.is_finite()
            && p0.is_finite()
            && p1.is_finite()
            && p0 <= p1
            && self.doppler_residual_std >= 0.0
            && self.doppler_residual_std.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid channel spec: {self:?}")))
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> FrameConditions {
        let (lo, hi) = self.amplitude_range;
        let (p0, p1) = self.carrier_phase_range;
        let z: f64 = StandardNormal.sample(rng);
        FrameConditions {
            amplitude: lo + (hi - lo) * rng.random::<f64>(),
            carrier_phase: p0 + (p1 - p0) * rng.random::<f64>(),
            doppler_rad_per_symbol: z * self.doppler_residual_std,
            snr_db: self.target_snr_db,
        }
    }

    pub fn to_kv(&self, cfg: &mut KvConfig, prefix: &str) {
        cfg.set(
            format!("{prefix}snr_db"),
            self.target_snr_db.map_or("off".to_string(), |v| v.to_string()),
        )
        .set(format!("{prefix}amplitude_min"), self.amplitude_range.0)
        .set(format!("{prefix}amplitude_max"), self.amplitude_range.1)
        .set(format!("{prefix}carrier_phase_min"), self.carrier_phase_range.0)
        .set(format!("{prefix}carrier_phase_max"), self.carrier_phase_range.1)
        .set(format!("{prefix}doppler_residual_std"), self.doppler_residual_std);
    }

    /// Reads the keys written by [`ChannelSpec::to_kv`]; absent keys keep
    /// their values from `base`.
    pub fn from_kv(cfg: &KvConfig, prefix: &str, base: ChannelSpec) -> Result<Self> {
        let mut c = base;
        if let Some(v) = cfg.get_str(&format!("{prefix}snr_db")) {
            c.target_snr_db = match v {
                "off" | "inf" | "none" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| Error::invalid(format!("bad snr_db {s:?}")))?,
                ),
            };
        }
        if let Some(v) = cfg.get(&format!("{prefix}amplitude_min"))? {
            c.amplitude_range.0 = v;
        }
        if let Some(v) = cfg.get(&format!("{prefix}amplitude_max"))? {
            c.amplitude_range.1 = v;
        }
        if let Some(v) = cfg.get(&format!("{prefix}carrier_phase_min"))? {
            c.carrier_phase_range.0 = v;
        }
        if let Some(v) = cfg.get(&format!("{prefix}carrier_phase_max"))? {
            c.carrier_phase_range.1 = v;
        }
        if let Some(v) = cfg.get(&format!("{prefix}doppler_residual_std"))? {
            c.doppler_residual_std = v;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Channel state experienced by one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameConditions {
    pub amplitude: f64,
    pub carrier_phase: f64,
    pub doppler_rad_per_symbol: f64,
    pub snr_db: Option<f64>,
}

/// Per-component noise variance σ² that makes the expected frame SNR
/// estimate (mean power over power variance) equal `10^(snr_db/10)`.
///
/// With clean powers of mean `m` and variance `v`, complex AWGN of
/// per-component variance `x` gives `E[mean] = m + 2x` and
/// `E[var] = v + 4mx + 4x²`. Returns 0 when the clean frame alone is already
/// below the target.
pub fn calibrated_noise_variance(clean: &[IqSample], snr_db: f64) -> f64 {
    let n = clean.len();
    if n < 2 {
        return 0.0;
    }
    let powers: Vec<f64> = clean.iter().map(IqSample::power).collect();
    let m = powers.iter().sum::<f64>() / n as f64;
    let v = powers.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = 10f64.powf(snr_db / 10.0);
    let c = t * v - m;
    if c >= 0.0 {
        return 0.0;
    }
    let a = 4.0 * t;
    let b = 4.0 * t * m - 2.0;
    let disc = b * b - 4.0 * a * c;
    // c < 0 so the roots have opposite signs; take the positive one in a
    // cancellation-free form.
    (2.0 * -c) / (b + disc.sqrt())
}

/// Distorts an ideal burst through the transmitter and channel models.
pub fn impair_burst<R: Rng + ?Sized>(
    ideal: &[IqSample],
    profile: &TransmitterProfile,
    cond: &FrameConditions,
    rng: &mut R,
) -> Vec<IqSample> {
    let imb = profile.imbalance();
    let jitter = Normal::new(0.0, profile.phase_noise_std).expect("validated std");
    let mut clean: Vec<IqSample> = ideal
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let x = if profile.phase_noise_std > 0.0 {
                x.rotate(jitter.sample(rng))
            } else {
                *x
            };
            let theta = cond.carrier_phase + k as f64 * cond.doppler_rad_per_symbol;
            imb.apply(x).rotate(theta).scale(cond.amplitude)
        })
        .collect();
    if let Some(snr) = cond.snr_db {
        let sigma = calibrated_noise_variance(&clean, snr).sqrt();
        if sigma > 0.0 {
            for s in &mut clean {
                let ni: f64 = StandardNormal.sample(rng);
                let nq: f64 = StandardNormal.sample(rng);
                s.i += sigma * ni;
                s.q += sigma * nq;
            }
        }
    }
    clean
}

fn frame_from_samples(sat_id: SatId, index: u64, samples: Vec<IqSample>) -> IqFrame {
    let t_ms = index * FRAME_INTERVAL_MS;
    IqFrame {
        time_s: EPOCH_S + (t_ms / 1000) as i64,
        time_ms: t_ms,
        sat_id,
        beam_id: 0,
        lat: None,
        lon: None,
        alt: Some(ORBIT_ALTITUDE_KM),
        samples,
    }
}

/// One synthetic burst, deterministic in `seed`.
pub fn synth_frame(
    profile: &TransmitterProfile,
    chan: &ChannelSpec,
    layout: &FrameLayout,
    seed: u64,
) -> Result<IqFrame> {
    profile.validate()?;
    chan.validate()?;
    let mut rng = seeded_rng(seed, u64::from(profile.sat_id.0));
    let cond = chan.draw(&mut rng);
    let burst = modulate_burst(layout, &mut rng);
    let samples = impair_burst(&burst.symbols, profile, &cond, &mut rng);
    Ok(frame_from_samples(profile.sat_id, 0, samples))
}

/// `frames_per_sat` bursts for each profile. Frame `k` of satellite `s` is
/// seeded independently, so generation parallelizes without changing output.
pub fn synth_dataset(
    profiles: &[TransmitterProfile],
    chan: &ChannelSpec,
    layout: &FrameLayout,
    frames_per_sat: usize,
    seed: u64,
) -> Result<Dataset> {
    chan.validate()?;
    for p in profiles {
        p.validate()?;
    }
    let mut d = Dataset::new(Provenance::Synthetic);
    for p in profiles {
        d.register(p.sat_id);
        let sat_seed = derive_seed(seed, u64::from(p.sat_id.0));
        let frames: Vec<IqFrame> = (0..frames_per_sat as u64)
            .into_par_iter()
            .map(|k| {
                let mut rng = seeded_rng(derive_seed(sat_seed, k), 0);
                let cond = chan.draw(&mut rng);
                let burst = modulate_burst(layout, &mut rng);
                frame_from_samples(p.sat_id, k, impair_burst(&burst.symbols, p, &cond, &mut rng))
            })
            .collect();
        frames.into_iter().for_each(|f| d.push(f));
    }
    Ok(d)
}

/// Synthetic constellation of `n_sats` transmitters with ids `1..=n_sats`,
/// balanced at `frames_per_sat` bursts each.
pub fn synth_constellation(
    n_sats: usize,
    chan: &ChannelSpec,
    frames_per_sat: usize,
    profile_spread: f64,
    master_seed: u64,
) -> Result<Dataset> {
    if n_sats < 2 {
        return Err(Error::invalid(format!("need at least 2 satellites, got {n_sats}")));
    }
    let profiles = draw_profiles(n_sats, profile_spread, master_seed)?;
    synth_dataset(&profiles, chan, &FrameLayout::default(), frames_per_sat, master_seed)
}

/// Channel state of one frame within a pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduledFrame {
    /// Seconds since the start of the pass.
    pub offset_s: f64,
    pub amplitude: f64,
    pub doppler_rad_per_symbol: f64,
}

/// Time-varying channel over one pass: amplitude follows `sin(πu)` between
/// the channel's min (horizon) and max (zenith) amplitude, the Doppler
/// residual follows `cos(πu)` (largest at the horizons, zero at zenith),
/// for pass fraction `u` of each frame centre.
pub fn synth_pass_trace(
    pass_minutes: f64,
    samples_per_pass: usize,
    chan: &ChannelSpec,
    layout: &FrameLayout,
) -> Result<Vec<ScheduledFrame>> {
    if !(pass_minutes > 0.0 && pass_minutes <= MAX_PASS_MINUTES) {
        return Err(Error::invalid(format!(
            "pass duration must lie in (0, {MAX_PASS_MINUTES}] minutes, got {pass_minutes}"
        )));
    }
    chan.validate()?;
    let per_frame = layout.total_symbols();
    if per_frame == 0 {
        return Err(Error::invalid("frame layout has no symbols"));
    }
    let n = samples_per_pass.div_ceil(per_frame);
    let (lo, hi) = chan.amplitude_range;
    let duration_s = pass_minutes * 60.0;
    Ok((0..n)
        .map(|k| {
            let u = (k as f64 + 0.5) / n as f64;
            let elevation = (PI * u).sin();
            ScheduledFrame {
                offset_s: u * duration_s,
                amplitude: lo + (hi - lo) * elevation,
                doppler_rad_per_symbol: chan.doppler_residual_std * (PI * u).cos(),
            }
        })
        .collect())
}

/// Bursts of one pass following `schedule`, starting at `start_s`.
pub fn synth_pass(
    profile: &TransmitterProfile,
    chan: &ChannelSpec,
    layout: &FrameLayout,
    schedule: &[ScheduledFrame],
    start_s: i64,
    seed: u64,
) -> Result<Vec<IqFrame>> {
    profile.validate()?;
    chan.validate()?;
    let mut rng = seeded_rng(seed, u64::from(profile.sat_id.0));
    let (p0, p1) = chan.carrier_phase_range;
    Ok(schedule
        .iter()
        .map(|slot| {
            let cond = FrameConditions {
                amplitude: slot.amplitude,
                carrier_phase: p0 + (p1 - p0) * rng.random::<f64>(),
                doppler_rad_per_symbol: slot.doppler_rad_per_symbol,
                snr_db: chan.target_snr_db,
            };
            let burst = modulate_burst(layout, &mut rng);
            let samples = impair_burst(&burst.symbols, profile, &cond, &mut rng);
            let t_ms = (slot.offset_s * 1000.0).round() as u64;
            IqFrame {
                time_s: start_s + (t_ms / 1000) as i64,
                time_ms: t_ms,
                sat_id: profile.sat_id,
                beam_id: 0,
                lat: None,
                lon: None,
                alt: Some(ORBIT_ALTITUDE_KM),
                samples,
            }
        })
        .collect())
}
