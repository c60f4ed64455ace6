//! Signal statistics: per-frame SNR, pass segmentation, waiting times and
//! the samples-per-pass tail distribution.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::iqcore::{Dataset, IqFrame, IqSample, SatId};

/// Gap separating two passes of the same satellite.
pub const DEFAULT_GAP_S: i64 = 600;

/// Received power, noise power and their difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrEstimate {
    pub p_rx_dbm: f64,
    pub noise_dbm: f64,
    pub snr_db: f64,
}

/// `P = 10·log10(10·mean(I²+Q²))`, `N = 10·log10(10·var(I²+Q²))` with the
/// unbiased variance, `SNR = P − N`.
pub fn snr_of_samples(samples: &[IqSample]) -> Result<SnrEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::invalid(format!("SNR needs at least 2 samples, got {n}")));
    }
    let powers: Vec<f64> = samples.iter().map(IqSample::power).collect();
    let mean = powers.iter().sum::<f64>() / n as f64;
    let var = powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::DegenerateFrame);
    }
    let p_rx_dbm = 10.0 * (10.0 * mean).log10();
    let noise_dbm = 10.0 * (10.0 * var).log10();
    Ok(SnrEstimate {
        p_rx_dbm,
        noise_dbm,
        snr_db: p_rx_dbm - noise_dbm,
    })
}

pub fn snr_of_frame(f: &IqFrame) -> Result<SnrEstimate> {
    snr_of_samples(&f.samples)
}

/// One visibility window of a satellite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassRecord {
    pub sat_id: SatId,
    pub start_s: i64,
    pub end_s: i64,
    pub n_iq_samples: u64,
    pub duration_min: f64,
}

/// Cuts every satellite's frames into passes wherever consecutive frames are
/// more than `gap_threshold_s` apart. Frames must be time-sorted per
/// satellite.
pub fn pass_segmentation(d: &Dataset, gap_threshold_s: i64) -> Vec<PassRecord> {
    let mut out = Vec::new();
    for (sat, frames) in d.groups() {
        let mut current: Option<PassRecord> = None;
        for f in frames {
            match current.as_mut() {
                Some(p) if f.time_s - p.end_s <= gap_threshold_s => {
                    p.end_s = f.time_s;
                    p.n_iq_samples += f.samples.len() as u64;
                }
                _ => {
                    out.extend(current.take());
                    current = Some(PassRecord {
                        sat_id: sat,
                        start_s: f.time_s,
                        end_s: f.time_s,
                        n_iq_samples: f.samples.len() as u64,
                        duration_min: 0.0,
                    });
                }
            }
        }
        out.extend(current);
    }
    for p in &mut out {
        p.duration_min = (p.end_s - p.start_s) as f64 / 60.0;
    }
    out
}

/// Minutes between the end of a pass and the start of the next pass of the
/// same satellite. `passes` as produced by [`pass_segmentation`].
pub fn waiting_times_min(passes: &[PassRecord]) -> Vec<f64> {
    passes
        .windows(2)
        .filter(|w| w[0].sat_id == w[1].sat_id)
        .map(|w| (w[1].start_s - w[0].end_s) as f64 / 60.0)
        .collect()
}

/// `P(N > x)` evaluated at `x = 0` and at every distinct pass size, sorted
/// by `x`.
pub fn samples_per_pass_icdf(passes: &[PassRecord]) -> Vec<(u64, f64)> {
    if passes.is_empty() {
        return Vec::new();
    }
    let mut n: Vec<u64> = passes.iter().map(|p| p.n_iq_samples).collect();
    n.sort_unstable();
    let total = n.len() as f64;
    let mut xs: Vec<u64> = std::iter::once(0).chain(n.iter().copied()).collect();
    xs.dedup();
    xs.into_iter()
        .map(|x| {
            let above = n.len() - n.partition_point(|&v| v <= x);
            (x, above as f64 / total)
        })
        .collect()
}

/// Fixed-width histogram: `(bin_centre, count)` for bins of `width`
/// starting at `origin`, covering every value.
pub fn histogram(values: &[f64], origin: f64, width: f64) -> Vec<(f64, usize)> {
    if values.is_empty() || !(width > 0.0) {
        return Vec::new();
    }
    let bin = |v: f64| ((v - origin) / width).floor() as i64;
    let lo = values.iter().map(|v| bin(*v)).min().unwrap_or(0);
    let hi = values.iter().map(|v| bin(*v)).max().unwrap_or(0);
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for v in values {
        counts[(bin(*v) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (origin + (lo + k as i64) as f64 * width + width / 2.0, c))
        .collect()
}

/// Gaussian kernel density on `n_points` evenly spaced points spanning the
/// data ± 3 bandwidths. Bandwidth defaults to Silverman's rule.
pub fn kernel_density(values: &[f64], bandwidth: Option<f64>, n_points: usize) -> Vec<(f64, f64)> {
    let n = values.len();
    if n == 0 || n_points == 0 {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(2).saturating_sub(1) as f64).sqrt();
    let h = bandwidth
        .unwrap_or_else(|| 1.06 * sd * (n as f64).powf(-0.2))
        .max(1e-9);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min) - 3.0 * h;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
    let step = if n_points > 1 { (hi - lo) / (n_points - 1) as f64 } else { 0.0 };
    let norm = 1.0 / (n as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    (0..n_points)
        .map(|k| {
            let x = lo + k as f64 * step;
            let d: f64 = values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum();
            (x, d * norm)
        })
        .collect()
}

/// Plot-ready two-column CSV.
pub fn write_two_column<A: std::fmt::Display, B: std::fmt::Display>(
    path: impl AsRef<Path>,
    header: (&str, &str),
    rows: &[(A, B)],
) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    let io = |e| Error::io(path, e);
    writeln!(buf, "{},{}", header.0, header.1).map_err(io)?;
    for (a, b) in rows {
        writeln!(buf, "{a},{b}").map_err(io)?;
    }
    std::fs::write(path, buf).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iqcore::{seeded_rng, Provenance};
    use rand::Rng;

    fn frame_at(sat: u16, t: i64, n: usize) -> IqFrame {
        IqFrame {
            time_s: t,
            time_ms: 0,
            sat_id: SatId(sat),
            beam_id: 0,
            lat: None,
            lon: None,
            alt: None,
            samples: vec![IqSample::new(0.5, 0.5); n],
        }
    }

    #[test]
    fn constant_power_is_degenerate() {
        let s = [IqSample::new(1.0, 0.0), IqSample::new(0.0, 1.0)];
        assert!(matches!(snr_of_samples(&s), Err(Error::DegenerateFrame)));
        assert!(snr_of_samples(&s[..1]).is_err());
    }

    #[test]
    fn two_level_power_closed_form() {
        // powers {1, 3} alternating: mean 2, unbiased var over 4 samples = 4/3
        let s = [
            IqSample::new(1.0, 0.0),
            IqSample::new(3f64.sqrt(), 0.0),
            IqSample::new(0.0, 1.0),
            IqSample::new(0.0, -(3f64.sqrt())),
        ];
        let est = snr_of_samples(&s).unwrap();
        let mean = (1.0 + 3.0 + 1.0 + 3.0) / 4.0;
        let var = (4.0 * 1.0) / 3.0;
        assert!((est.p_rx_dbm - 10.0 * (10.0f64 * mean).log10()).abs() < 1e-12);
        assert!((est.noise_dbm - 10.0 * (10.0f64 * var).log10()).abs() < 1e-12);
        assert_eq!(est.snr_db, est.p_rx_dbm - est.noise_dbm);
    }

    #[test]
    fn two_sample_frame_is_zero_db() {
        // powers {1, 3}: mean 2, unbiased variance 2
        let s = [IqSample::new(1.0, 0.0), IqSample::new(0.0, 3f64.sqrt())];
        let est = snr_of_samples(&s).unwrap();
        assert!((est.p_rx_dbm - 13.010_299_956_639_812).abs() < 1e-9);
        assert!((est.noise_dbm - 13.010_299_956_639_812).abs() < 1e-9);
        assert!(est.snr_db.abs() < 1e-9);
    }

    #[test]
    fn segmentation_basics() {
        let mut d = Dataset::new(Provenance::Real);
        d.push(frame_at(1, 100, 10));
        let p = pass_segmentation(&d, DEFAULT_GAP_S);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].duration_min, 0.0);

        d.push(frame_at(1, 101, 10));
        let p = pass_segmentation(&d, DEFAULT_GAP_S);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].n_iq_samples, 20);
    }

    #[test]
    fn waiting_time_peaks() {
        // passes of 5 minutes separated by 90 or 560 minutes
        let mut d = Dataset::new(Provenance::Real);
        let mut t = 0i64;
        for gap in [90, 560, 90, 560, 90, 90, 560] {
            for k in 0..6 {
                d.push(frame_at(7, t + k * 60, 100));
            }
            t += 5 * 60 + gap * 60;
        }
        let passes = pass_segmentation(&d, DEFAULT_GAP_S);
        assert_eq!(passes.len(), 7);
        let waits = waiting_times_min(&passes);
        let h = histogram(&waits, 0.0, 10.0);
        let peaks: Vec<f64> = h.iter().filter(|(_, c)| *c > 0).map(|(x, _)| *x).collect();
        assert_eq!(peaks, vec![95.0, 565.0]);
    }

    #[test]
    fn segmentation_idempotent() {
        let mut d = Dataset::new(Provenance::Real);
        for t in [0, 30, 60, 5000, 5030, 20_000] {
            d.push(frame_at(3, t, 5));
        }
        let passes = pass_segmentation(&d, DEFAULT_GAP_S);
        for p in &passes {
            let mut sub = Dataset::new(Provenance::Real);
            for f in d.frames(SatId(3)).iter().filter(|f| f.time_s >= p.start_s && f.time_s <= p.end_s) {
                sub.push(f.clone());
            }
            assert_eq!(pass_segmentation(&sub, DEFAULT_GAP_S), vec![*p]);
        }
    }

    #[test]
    fn icdf_step_function() {
        let passes: Vec<PassRecord> = (0..5)
            .map(|k| PassRecord {
                sat_id: SatId(1),
                start_s: k,
                end_s: k,
                n_iq_samples: 700,
                duration_min: 0.0,
            })
            .collect();
        assert_eq!(samples_per_pass_icdf(&passes), vec![(0, 1.0), (700, 0.0)]);
        assert!(samples_per_pass_icdf(&[]).is_empty());
    }

    #[test]
    fn icdf_uniform_is_linear() {
        let mut rng = seeded_rng(8, 0);
        let passes: Vec<PassRecord> = (0..20_000)
            .map(|_| PassRecord {
                sat_id: SatId(1),
                start_s: 0,
                end_s: 0,
                n_iq_samples: rng.random_range(0..=50_000),
                duration_min: 0.0,
            })
            .collect();
        let icdf = samples_per_pass_icdf(&passes);
        assert!(icdf.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(icdf[0].1 <= 1.0);
        for (x, p) in icdf {
            let analytic = 1.0 - x as f64 / 50_000.0;
            assert!((p - analytic).abs() < 0.015, "x={x} p={p}");
        }
    }

    #[test]
    fn kde_peaks_at_mode() {
        let mut rng = seeded_rng(2, 0);
        let v: Vec<f64> = (0..2000).map(|_| 45.0 + rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0)).collect();
        let dens = kernel_density(&v, None, 200);
        let (peak, _) = dens.iter().copied().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        assert!((peak - 45.0).abs() < 0.5);
        let area: f64 = dens.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
        assert!((area - 1.0).abs() < 0.01);
    }
}
