//! Property tests over the public API.

use iqauth::config::KvConfig;
use iqauth::eval::{mann_whitney_auc, roc_auc};
use iqauth::imaging::{counts_to_pixels, render_image, tile_counts, ImagingSpec};
use iqauth::iqcore::{parse_dataset, partition, write_dataset, Dataset, IqFrame, Provenance, SplitSpec};
use iqauth::stats::snr_of_samples;
use iqauth::synth::IqImbalance;
use iqauth::{IqSample, SatId};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = IqSample> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(i, q)| IqSample::new(i, q))
}

fn imbalance() -> impl Strategy<Value = IqImbalance> {
    (-0.2f64..0.2, -0.2f64..0.2, -0.1f64..0.1, -0.1f64..0.1).prop_map(|(g, s, di, dq)| IqImbalance {
        gain_imbalance: g,
        quadrature_skew: s,
        dc_offset_i: di,
        dc_offset_q: dq,
    })
}

proptest! {
    #[test]
    fn partition_is_a_disjoint_cover(n in 0usize..300, seed: u64, stream in 0u64..100) {
        let items: Vec<usize> = (0..n).collect();
        let spec = SplitSpec::with_seed(seed);
        let p = partition(&items, &spec, stream);
        let (a, b, c) = spec.counts(n);
        prop_assert_eq!((p.train.len(), p.val.len(), p.test.len()), (a, b, c));
        let mut all: Vec<usize> = p.train.iter().chain(&p.val).chain(&p.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, items);
        prop_assert_eq!(partition(&(0..n).collect::<Vec<_>>(), &spec, stream), p);
    }

    #[test]
    fn tile_counts_conserve_samples(xs in prop::collection::vec(sample(), 0..500), side in 1usize..40) {
        let counts = tile_counts(&xs, side);
        prop_assert_eq!(counts.len(), side * side);
        prop_assert_eq!(counts.iter().map(|&c| c as usize).sum::<usize>(), xs.len());
    }

    #[test]
    fn rendering_ignores_sample_order(
        xs in prop::collection::vec(sample(), 1..400),
        shuffle_seed: u64,
        side in prop::sample::select(vec![8usize, 16, 32, 64]),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let spec = ImagingSpec::new(side, xs.len());
        let a = render_image(&xs, &spec, SatId(1)).unwrap();
        let mut ys = xs.clone();
        ys.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed));
        let b = render_image(&ys, &spec, SatId(1)).unwrap();
        prop_assert_eq!(a.to_pgm(), b.to_pgm());
    }

    #[test]
    fn pixels_peak_at_255(counts in prop::collection::vec(0u32..1000, 1..200)) {
        let px = counts_to_pixels(&counts);
        let max = counts.iter().copied().max().unwrap();
        if max > 0 {
            prop_assert_eq!(px.iter().copied().max(), Some(255));
            for (c, p) in counts.iter().zip(&px) {
                prop_assert!((f64::from(*p) - 255.0 * f64::from(*c) / f64::from(max)).abs() <= 0.5);
            }
        } else {
            prop_assert!(px.iter().all(|&p| p == 0));
        }
    }

    #[test]
    fn trapezoid_auc_matches_rank_statistic(
        a in prop::collection::vec(0u8..20, 1..60),
        b in prop::collection::vec(0u8..20, 1..60),
    ) {
        // Small integer scores force plenty of ties.
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let roc = roc_auc(&a, &b).unwrap();
        prop_assert!((roc.auc - mann_whitney_auc(&a, &b)).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&roc.auc));
        let (first, last) = (roc.points[0], *roc.points.last().unwrap());
        prop_assert_eq!((first.fpr, first.tpr, last.fpr, last.tpr), (0.0, 0.0, 1.0, 1.0));
        for w in roc.points.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
        }
    }

    #[test]
    fn snr_is_rotation_invariant(xs in prop::collection::vec(sample(), 8..200), theta in -10.0f64..10.0) {
        let Ok(base) = snr_of_samples(&xs) else { return Ok(()) };
        let rot: Vec<IqSample> = xs.iter().map(|s| s.rotate(theta)).collect();
        let r = snr_of_samples(&rot).unwrap();
        prop_assert!((r.snr_db - base.snr_db).abs() < 1e-6);
        prop_assert!((r.p_rx_dbm - base.p_rx_dbm).abs() < 1e-6);
    }

    #[test]
    fn snr_gain_shifts(xs in prop::collection::vec(sample(), 8..200), g in 0.01f64..100.0) {
        let Ok(base) = snr_of_samples(&xs) else { return Ok(()) };
        let scaled: Vec<IqSample> = xs.iter().map(|s| s.scale(g)).collect();
        let r = snr_of_samples(&scaled).unwrap();
        prop_assert!((r.p_rx_dbm - base.p_rx_dbm - 20.0 * g.log10()).abs() < 1e-6);
        prop_assert!((r.noise_dbm - base.noise_dbm - 40.0 * g.log10()).abs() < 1e-6);
    }

    #[test]
    fn imbalance_composition_matches_sequential_application(
        outer in imbalance(),
        inner in imbalance(),
        x in sample(),
    ) {
        let seq = outer.apply(inner.apply(x));
        let once = outer.compose(&inner).apply(x);
        prop_assert!((seq.i - once.i).abs() < 1e-12 && (seq.q - once.q).abs() < 1e-12);
    }

    #[test]
    fn dataset_csv_round_trip(
        frames in prop::collection::vec(
            (1u16..=127, 0u8..=48, 0i64..2_000_000_000, prop::option::of(-90.0f64..90.0),
             prop::collection::vec(sample(), 1..20)),
            0..20,
        )
    ) {
        let mut d = Dataset::new(Provenance::Real);
        for (k, (sat, beam, t, lat, samples)) in frames.into_iter().enumerate() {
            d.push(IqFrame {
                time_s: t,
                time_ms: k as u64,
                sat_id: SatId(sat),
                beam_id: beam,
                lat,
                lon: lat.map(|v| v * 2.0),
                alt: None,
                samples,
            });
        }
        let mut first = Vec::new();
        write_dataset(&d, &mut first).unwrap();
        let back = parse_dataset(first.as_slice()).unwrap().dataset;
        let mut second = Vec::new();
        write_dataset(&back, &mut second).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(back.n_frames(), d.n_frames());
        prop_assert_eq!(back.sample_counts(), d.sample_counts());
    }

    #[test]
    fn config_render_round_trip(
        entries in prop::collection::btree_map("[a-z][a-z0-9_.]{0,12}", "[A-Za-z0-9_.,+-][A-Za-z0-9_.,+ -]{0,15}[A-Za-z0-9_.,+-]", 0..10)
    ) {
        let mut cfg = KvConfig::new();
        for (k, v) in &entries {
            cfg.set(k.clone(), v);
        }
        let back = KvConfig::parse(&cfg.render()).unwrap();
        prop_assert_eq!(back.iter().collect::<Vec<_>>(), cfg.iter().collect::<Vec<_>>());
    }
}
