//! Acceptance suite. Prints one line per criterion and exits non-zero when a
//! criterion fails that is not a known defect of its own target value.
//!
//! Criteria 6 to 9 share one synthetic constellation and train the full-size
//! models, so this binary takes several minutes in release mode.

use std::time::{Duration, Instant};

use iqauth::autoenc::{ae_gradient, ae_loss, kl_divergence, AeHyperparams, MseNorm, SparseAeModel};
use iqauth::cnn::{CnnArch, CnnSpec, CompactCnnModel};
use iqauth::eval::{
    exclusion_sweep, mann_whitney_auc, one_vs_one, one_vs_rest, roc_auc, run_multiclass, score_all_references,
    AuthConfig, ReferenceScores,
};
use iqauth::imaging::{group_into_images, normalize_amplitude, render_image, tile_counts, ImageSet, ImagingSpec};
use iqauth::iqcore::{seeded_rng, SplitSpec};
use iqauth::stats::snr_of_samples;
use iqauth::synth::{draw_profiles, synth_constellation, synth_frame, ChannelSpec, FrameLayout};
use iqauth::{IqSample, SatId};
use ndarray::Array2;
use rand::Rng;

const SEED: u64 = 2024;
const N_SATS: usize = 8;
const SNR_DB: f64 = 20.0;
const SAMPLES_PER_IMAGE: usize = 10_000;
const IMAGES_PER_SAT: usize = 100;
const SIDE: usize = 64;
const PROFILE_SPREAD: f64 = 1.0;

#[derive(Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    /// The target value itself is inconsistent; reported but not fatal.
    FailTarget,
    Skipped,
}

struct Report {
    fatal: usize,
}

impl Report {
    fn line(&mut self, id: &str, v: Verdict, what: &str, detail: String, took: Duration, budget: Option<Duration>) {
        let tag = match v {
            Verdict::Pass => "PASS",
            Verdict::Fail | Verdict::FailTarget => "FAIL",
            Verdict::Skipped => "SKIPPED",
        };
        let over = budget.is_some_and(|b| took > b);
        let time = match budget {
            Some(b) => format!("{:.1}s/{}s{}", took.as_secs_f64(), b.as_secs(), if over { " OVER BUDGET" } else { "" }),
            None => format!("{:.1}s", took.as_secs_f64()),
        };
        println!("criterion {id:<3} {tag:<7} {what}: {detail} [{time}]");
        if v == Verdict::Fail {
            self.fatal += 1;
        }
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn rel_err(fd: f64, an: f64, floor: f64) -> f64 {
    (fd - an).abs() / fd.abs().max(an.abs()).max(floor)
}

fn ae_gradient_check() -> f64 {
    let mut rng = seeded_rng(SEED, 1);
    let mut worst: f64 = 0.0;
    for m in 0..10 {
        let d = rng.random_range(3..9);
        let h = rng.random_range(2..6);
        let n = rng.random_range(2..8);
        let hp = AeHyperparams {
            hidden_size: h,
            l2_lambda: rng.random_range(1e-4..1e-1),
            sparsity_beta: rng.random_range(0.1..3.0),
            sparsity_rho: rng.random_range(0.02..0.3),
            mse_norm: if m % 2 == 0 { MseNorm::PerEntry } else { MseNorm::PerSample },
            ..AeHyperparams::default()
        };
        let x = Array2::from_shape_fn((n, d), |_| rng.random::<f64>());
        let model = SparseAeModel::init(d, h, rng.random());
        let (_, g) = ae_gradient(&model, &hp, x.view()).unwrap();
        let mut probe = model.clone();
        for k in 0..model.params.len() {
            let step = 1e-6;
            probe.params[k] = model.params[k] + step;
            let up = ae_loss(&probe, &hp, x.view()).unwrap().total;
            probe.params[k] = model.params[k] - step;
            let dn = ae_loss(&probe, &hp, x.view()).unwrap().total;
            probe.params[k] = model.params[k];
            worst = worst.max(rel_err((up - dn) / (2.0 * step), g[k], 1e-8));
        }
    }
    worst
}

fn cnn_gradient_check() -> f64 {
    let arch = CnnArch {
        input_side: 8,
        conv1_channels: 3,
        conv2_channels: 4,
        n_classes: 3,
    };
    let model = CompactCnnModel::init(arch, vec![SatId(1), SatId(2), SatId(3)], SEED).unwrap();
    let mut rng = seeded_rng(SEED, 2);
    let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..64).map(|_| rng.random::<f64>()).collect()).collect();
    let batch: Vec<(&[f64], usize)> = xs.iter().enumerate().map(|(k, x)| (x.as_slice(), k % 3)).collect();
    let (_, g) = model.loss_and_gradient(&batch).unwrap();
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for k in 0..model.params.len() {
        let step = 1e-6;
        probe.params[k] = model.params[k] + step;
        let up = probe.loss_and_gradient(&batch).unwrap().0;
        probe.params[k] = model.params[k] - step;
        let dn = probe.loss_and_gradient(&batch).unwrap().0;
        probe.params[k] = model.params[k];
        worst = worst.max(rel_err((up - dn) / (2.0 * step), g[k], 1e-7));
    }
    worst
}

fn auc_dual_check() -> f64 {
    let mut rng = seeded_rng(SEED, 3);
    let mut worst: f64 = 0.0;
    for set in 0..100 {
        let (n_in, n_out) = (rng.random_range(1..200), rng.random_range(1..200));
        // Every other set draws from a coarse grid so that ties are common.
        let mut draw = |shift: f64| {
            let v: f64 = rng.random::<f64>() + shift;
            if set % 2 == 0 { (v * 10.0).round() / 10.0 } else { v }
        };
        let a: Vec<f64> = (0..n_in).map(|_| draw(0.0)).collect();
        let b: Vec<f64> = (0..n_out).map(|_| draw(0.3)).collect();
        worst = worst.max((roc_auc(&a, &b).unwrap().auc - mann_whitney_auc(&a, &b)).abs());
    }
    worst
}

/// Returns (identical PGMs, counts conserved).
fn imaging_check() -> (usize, usize) {
    let mut rng = seeded_rng(SEED, 4);
    let (mut identical, mut conserved) = (0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(1..3000);
        let side = [8, 32, 64, 224][rng.random_range(0..4)];
        let scale = rng.random_range(0.01..100.0);
        let raw: Vec<IqSample> = (0..n)
            .map(|_| IqSample::new(scale * rng.random_range(-1.0..1.0), scale * rng.random_range(-1.0..1.0)))
            .collect();
        let spec = ImagingSpec::new(side, n);
        let norm = normalize_amplitude(&raw).unwrap();
        let a = render_image(&norm, &spec, SatId(1)).unwrap().to_pgm();
        let b = render_image(&normalize_amplitude(&raw).unwrap(), &spec, SatId(1)).unwrap().to_pgm();
        identical += usize::from(a == b);
        let in_extent = norm.iter().filter(|s| s.i.abs() <= 1.0 && s.q.abs() <= 1.0).count();
        let total: u64 = tile_counts(&norm, side).iter().map(|&c| u64::from(c)).sum();
        conserved += usize::from(total == in_extent as u64 && in_extent == n);
    }
    (identical, conserved)
}

/// Returns (max rotation drift, max power-shift error, max noise-shift error), all in dB.
fn snr_check() -> (f64, f64, f64) {
    let profiles = draw_profiles(4, 1.0, SEED).unwrap();
    let mut rng = seeded_rng(SEED, 5);
    let (mut rot, mut pwr, mut noise) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..100 {
        let chan = ChannelSpec::default().with_snr(Some(rng.random_range(5.0..50.0)));
        let f = synth_frame(&profiles[k % 4], &chan, &FrameLayout::default(), rng.random()).unwrap();
        let base = snr_of_samples(&f.samples).unwrap();
        let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let r = snr_of_samples(&f.samples.iter().map(|s| s.rotate(theta)).collect::<Vec<_>>()).unwrap();
        rot = rot.max((r.snr_db - base.snr_db).abs());
        let g = 10f64.powf(rng.random_range(-2.0..2.0));
        let s = snr_of_samples(&f.samples.iter().map(|x| x.scale(g)).collect::<Vec<_>>()).unwrap();
        pwr = pwr.max((s.p_rx_dbm - base.p_rx_dbm - 20.0 * g.log10()).abs());
        noise = noise.max((s.noise_dbm - base.noise_dbm - 40.0 * g.log10()).abs());
    }
    (rot, pwr, noise)
}

fn constellation() -> ImageSet {
    let frames = (IMAGES_PER_SAT * SAMPLES_PER_IMAGE).div_ceil(FrameLayout::default().total_symbols());
    let chan = ChannelSpec::default().with_snr(Some(SNR_DB));
    let d = synth_constellation(N_SATS, &chan, frames, PROFILE_SPREAD, SEED).unwrap();
    group_into_images(&d, &ImagingSpec::new(SIDE, SAMPLES_PER_IMAGE)).unwrap()
}

fn main() {
    let mut rep = Report { fatal: 0 };
    println!("acceptance suite, seed {SEED}");

    let t = Instant::now();
    let worst = ae_gradient_check();
    rep.line(
        "1a",
        verdict(worst < 1e-5),
        "autoencoder gradient vs central differences, 10 toy models",
        format!("max relative error {worst:.2e} (limit 1e-5)"),
        t.elapsed(),
        secs(10),
    );
    let t = Instant::now();
    let kl = kl_divergence(0.05, 0.5);
    let closed = 0.05 * 0.1f64.ln() + 0.95 * (0.95f64 / 0.5).ln();
    let pinned = 0.494_70;
    let pin_ok = (kl - pinned).abs() <= 1e-5;
    rep.line(
        "1b",
        if pin_ok { Verdict::Pass } else if (kl - closed).abs() < 1e-12 { Verdict::FailTarget } else { Verdict::Fail },
        "KL(0.05 || 0.5) against the pinned 0.49470 +- 1e-5",
        format!(
            "computed {kl:.7}, closed form of the same expression {closed:.7}, off by {:.1e}; target value inconsistent with its own formula",
            (kl - pinned).abs()
        ),
        t.elapsed(),
        None,
    );

    let t = Instant::now();
    let worst = cnn_gradient_check();
    rep.line(
        "2",
        verdict(worst < 1e-4),
        "CNN backprop vs central differences, 8x8 inputs",
        format!("max relative error {worst:.2e} (limit 1e-4)"),
        t.elapsed(),
        secs(60),
    );

    let t = Instant::now();
    let worst = auc_dual_check();
    rep.line(
        "3",
        verdict(worst <= 1e-9),
        "threshold-sweep AUC vs Mann-Whitney, 100 score sets",
        format!("max difference {worst:.1e} (limit 1e-9)"),
        t.elapsed(),
        secs(5),
    );

    let t = Instant::now();
    let (identical, conserved) = imaging_check();
    rep.line(
        "4",
        verdict(identical == 1000 && conserved == 1000),
        "imaging determinism and count conservation, 1000 groups",
        format!("{identical}/1000 byte-identical, {conserved}/1000 conserve counts"),
        t.elapsed(),
        secs(30),
    );

    let t = Instant::now();
    let (rot, pwr, noise) = snr_check();
    rep.line(
        "5",
        verdict(rot <= 1e-9 && pwr <= 1e-9 && noise <= 1e-9),
        "SNR rotation invariance and gain shifts, 100 frames",
        format!("rotation drift {rot:.1e} dB, 20log10 g error {pwr:.1e} dB, 40log10 g error {noise:.1e} dB (limit 1e-9)"),
        t.elapsed(),
        secs(5),
    );

    let t = Instant::now();
    let set = constellation();
    let synth_time = t.elapsed();
    println!(
        "constellation: {N_SATS} transmitters at {SNR_DB} dB, {} images of {SIDE}x{SIDE} from {SAMPLES_PER_IMAGE} samples, built in {:.1}s",
        set.images.len(),
        synth_time.as_secs_f64()
    );

    let t = Instant::now();
    let spec = CnnSpec { seed: SEED, ..CnnSpec::default() };
    let split = SplitSpec::with_seed(SEED);
    let base = run_multiclass(&set, &spec, &split).unwrap();
    let steps = exclusion_sweep(&set.labels(), 2, |keep| Ok(run_multiclass(&set.restrict(keep), &spec, &split)?.matrix)).unwrap();
    let accs: Vec<f64> = steps.iter().map(|s| s.accuracy).collect();
    let drop = accs.iter().map(|a| accs[0] - a).fold(f64::NEG_INFINITY, f64::max);
    let removed: Vec<String> = steps.iter().filter_map(|s| s.removed_next).map(|s| s.to_string()).collect();
    rep.line(
        "6",
        verdict(base.test_accuracy >= 0.90 && drop <= 0.02),
        "multi-class CNN, 8 transmitters, 60/20/20",
        format!(
            "test accuracy {:.4} (min 0.90); after dropping {} accuracies {:?}, largest drop {drop:.4} (max 0.02)",
            base.test_accuracy,
            removed.join(", "),
            accs.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
        t.elapsed() + synth_time,
        secs(15 * 60),
    );

    let t = Instant::now();
    let cfg = AuthConfig { seed: SEED, ..AuthConfig::default() };
    let refs: Vec<ReferenceScores> = score_all_references(&set, &cfg).unwrap();
    let ae_time = t.elapsed();
    let rocs: Vec<_> = refs.iter().map(|r| one_vs_rest(r).unwrap()).collect();
    let min_auc = rocs.iter().map(|r| r.auc).fold(f64::INFINITY, f64::min);
    let max_dist = rocs.iter().map(|r| r.optimal_distance()).fold(0.0, f64::max);
    let per_sat: Vec<String> = refs
        .iter()
        .zip(&rocs)
        .map(|(r, c)| format!("{}:{:.3}/{:.3}", r.sat_id.0, c.auc, c.optimal_distance()))
        .collect();
    rep.line(
        "7",
        verdict(min_auc >= 0.95 && max_dist <= 0.1),
        "one-vs-rest autoencoders, 80% training",
        format!(
            "min AUC {min_auc:.4} (min 0.95), max optimal-point distance {max_dist:.4} (max 0.1); per sat AUC/distance {}",
            per_sat.join(" ")
        ),
        ae_time + synth_time,
        secs(20 * 60),
    );

    let t = Instant::now();
    let mut pair_aucs: Vec<(SatId, SatId, f64)> = Vec::new();
    for r in &refs {
        for &(o, a) in &one_vs_one(r).unwrap().opponents {
            pair_aucs.push((r.sat_id, o, a));
        }
    }
    let mut sorted: Vec<f64> = pair_aucs.iter().map(|p| p.2).collect();
    sorted.sort_by(f64::total_cmp);
    let median = iqauth::eval::quantile(&sorted, 0.5);
    let worst_pair = pair_aucs.iter().min_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
    rep.line(
        "8",
        verdict(pair_aucs.len() == N_SATS * (N_SATS - 1) && median >= 0.98 && worst_pair.2 >= 0.95),
        "one-vs-one, all ordered pairs",
        format!(
            "{} pairs, median AUC {median:.4} (min 0.98), minimum {:.4} for {} vs {} (min 0.95)",
            pair_aucs.len(),
            worst_pair.2,
            worst_pair.0,
            worst_pair.1
        ),
        t.elapsed() + ae_time + synth_time,
        secs(30 * 60),
    );

    let t = Instant::now();
    let worst_rise = refs.iter().map(|r| r.trace.max_increase()).fold(0.0, f64::max);
    let all_down = refs.iter().all(|r| r.trace.last() <= r.trace.initial());
    let epochs: Vec<usize> = refs.iter().map(|r| r.trace.objective.len() - 1).collect();
    rep.line(
        "9",
        verdict(all_down && worst_rise <= 1e-9),
        "SCG objective monotone on every autoencoder run",
        format!(
            "{} runs, final <= initial on all: {all_down}, largest per-epoch rise {worst_rise:.1e} (max 1e-9), epochs {epochs:?}",
            refs.len()
        ),
        t.elapsed(),
        None,
    );

    rep.line(
        "10",
        Verdict::Skipped,
        "real-capture track",
        "no real IQ capture available in this environment".into(),
        Duration::ZERO,
        None,
    );

    if rep.fatal > 0 {
        println!("{} criteria failed", rep.fatal);
        std::process::exit(1);
    }
}
