//! Command-line front end.
//!
//! Every option can come from a `key = value` file given with `--config`;
//! flags on the command line override the file. The merged configuration
//! is echoed into each run's `summary.txt`, so every output directory
//! records how to reproduce itself. A seed is always required.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::autoenc::{train_autoencoder, AeHyperparams};
use crate::cnn::{self, CnnSpec};
use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::eval::{self, AuthConfig};
use crate::imaging::{self, ImagingSpec};
use crate::iqcore::{self, derive_seed, holdout, SatId, SplitSpec};
use crate::stats;
use crate::synth::{self, ChannelSpec, FrameLayout};

#[derive(Debug, Parser)]
#[command(name = "iqauth", version, about = "Satellite transmitter authentication from IQ samples")]
pub struct Cli {
    /// key = value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (required here or in the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic constellation dataset.
    Synth(SynthArgs),
    /// Validate a capture CSV and write its canonical beam-0 form.
    Ingest(InputArgs),
    /// SNR and pass statistics of a dataset.
    Stats(StatsArgs),
    /// Render histogram images from a dataset.
    Image(ImageArgs),
    /// Train the multi-class CNN on an image directory.
    TrainCnn(CnnArgs),
    /// Train one satellite's autoencoder on an image directory.
    TrainAe(AeArgs),
    /// Run a multi-class or authenticator experiment.
    Eval(EvalArgs),
    /// Validation accuracy against samples per image.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub sats: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Target SNR in dB, or "off".
    #[arg(long)]
    pub snr: Option<String>,
    /// Impairment spread in (0, 1].
    #[arg(long)]
    pub spread: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Seconds separating two passes.
    #[arg(long)]
    pub gap: Option<i64>,
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CnnArgs {
    /// Image directory with labels.csv.
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AeArgs {
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// Reference satellite.
    #[arg(long = "ref")]
    pub reference: Option<u16>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Multiclass,
    OneVsRest,
    OneVsOne,
}

impl Mode {
    fn key(self) -> &'static str {
        match self {
            Mode::Multiclass => "multiclass",
            Mode::OneVsRest => "one-vs-rest",
            Mode::OneVsOne => "one-vs-one",
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Reference satellite; all satellites when omitted.
    #[arg(long = "ref")]
    pub reference: Option<u16>,
    /// Repetitions of the multi-class experiment.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Worst classes to drop one at a time after the baseline.
    #[arg(long)]
    pub exclude: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated samples-per-image candidates.
    #[arg(long)]
    pub counts: Option<String>,
}

/// Merged configuration of one invocation.
struct Ctx {
    cfg: KvConfig,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn path(&self, key: &str) -> Result<PathBuf> {
        self.cfg
            .get_str(key)
            .map(PathBuf::from)
            .ok_or_else(|| Error::invalid(format!("missing --{key}")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.cfg.get(key)?.unwrap_or(default))
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn summary(&self, results: &[(&str, String)]) -> Result<()> {
        eval::write_summary(self.out_file("summary.txt"), &self.cfg, results)
    }

    fn imaging(&self) -> Result<ImagingSpec> {
        let d = ImagingSpec::default();
        let spec = ImagingSpec::new(self.get("side", d.side)?, self.get("samples_per_image", d.samples_per_image)?);
        spec.validate()?;
        Ok(spec)
    }

    /// `cnn.input_side` falls back to the image `side`.
    fn cnn_spec(&self) -> Result<CnnSpec> {
        let d = CnnSpec::default();
        CnnSpec {
            input_side: self.get("side", d.input_side)?,
            seed: derive_seed(self.seed, 1),
            ..d
        }
        .from_kv(&self.cfg, "cnn.")
    }

    fn split(&self) -> Result<SplitSpec> {
        let d = SplitSpec::with_seed(derive_seed(self.seed, 2));
        let s = SplitSpec {
            train_fraction: self.get("split.train", d.train_fraction)?,
            val_fraction: self.get("split.val", d.val_fraction)?,
            test_fraction: self.get("split.test", d.test_fraction)?,
            seed: self.get("split.seed", d.seed)?,
        };
        s.validate()?;
        Ok(s)
    }

    fn auth(&self) -> Result<AuthConfig> {
        Ok(AuthConfig {
            hp: AeHyperparams::default().from_kv(&self.cfg, "ae.")?,
            train_fraction: self.get("ae.train_fraction", 0.8)?,
            seed: self.get("ae.seed", derive_seed(self.seed, 3))?,
        })
    }
}

fn set_opt<T: std::fmt::Display>(cfg: &mut KvConfig, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        cfg.set(key, v);
    }
}

fn set_path(cfg: &mut KvConfig, key: &str, v: &Option<PathBuf>) {
    if let Some(v) = v {
        cfg.set(key, v.display());
    }
}

/// Merges flags over the config file.
fn resolve(cli: &Cli) -> Result<Ctx> {
    let mut cfg = match &cli.config {
        Some(p) => KvConfig::load(p)?,
        None => KvConfig::new(),
    };
    set_opt(&mut cfg, "seed", &cli.seed);
    set_opt(&mut cfg, "jobs", &cli.jobs);
    set_path(&mut cfg, "out", &cli.out);
    let c = &mut cfg;
    match &cli.command {
        Command::Synth(a) => {
            set_opt(c, "sats", &a.sats);
            set_opt(c, "frames", &a.frames);
            set_opt(c, "channel.snr_db", &a.snr);
            set_opt(c, "spread", &a.spread);
        }
        Command::Ingest(a) => set_path(c, "input", &a.input),
        Command::Stats(a) => {
            set_path(c, "input", &a.input);
            set_opt(c, "gap_s", &a.gap);
        }
        Command::Image(a) => {
            set_path(c, "input", &a.input);
            set_opt(c, "side", &a.side);
            set_opt(c, "samples_per_image", &a.samples);
        }
        Command::TrainCnn(a) => {
            set_path(c, "images", &a.images);
            set_opt(c, "cnn.epochs", &a.epochs);
            set_opt(c, "cnn.lr_base", &a.lr);
        }
        Command::TrainAe(a) => {
            set_path(c, "images", &a.images);
            set_opt(c, "ref", &a.reference);
            set_opt(c, "ae.max_epochs", &a.epochs);
            set_opt(c, "ae.hidden_size", &a.hidden);
        }
        Command::Eval(a) => {
            set_path(c, "images", &a.images);
            set_opt(c, "mode", &a.mode.map(Mode::key));
            set_opt(c, "ref", &a.reference);
            set_opt(c, "runs", &a.runs);
            set_opt(c, "exclude", &a.exclude);
        }
        Command::Sweep(a) => {
            set_path(c, "input", &a.input);
            set_opt(c, "counts", &a.counts);
        }
    }
    let seed = cfg
        .get::<u64>("seed")?
        .ok_or_else(|| Error::invalid("a seed is required (--seed or `seed = ...` in the config file)"))?;
    let out = PathBuf::from(cfg.get_str("out").unwrap_or("out"));
    Ok(Ctx { cfg, seed, out })
}

fn create_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn cmd_synth(ctx: &Ctx) -> Result<()> {
    let n_sats = ctx.get("sats", 8usize)?;
    let frames = ctx.get("frames", 200usize)?;
    let spread = ctx.get("spread", 1.0)?;
    let chan = ChannelSpec::from_kv(&ctx.cfg, "channel.", ChannelSpec::default())?;
    let profiles = synth::draw_profiles(n_sats, spread, ctx.seed)?;
    let d = synth::synth_dataset(&profiles, &chan, &FrameLayout::default(), frames, ctx.seed)?;
    let mut pc = KvConfig::new();
    for p in &profiles {
        p.to_kv(&mut pc, &format!("sat{}.", p.sat_id));
    }
    pc.save(ctx.out_file("profiles.cfg"))?;
    iqcore::save_dataset(&d, ctx.out_file("dataset.csv"))?;
    for (s, n) in d.frame_counts() {
        println!("satellite {s}: {n} frames");
    }
    ctx.summary(&[("satellites", d.n_satellites().to_string()), ("frames", d.n_frames().to_string())])
}

fn cmd_ingest(ctx: &Ctx) -> Result<()> {
    let parsed = iqcore::read_dataset(ctx.path("input")?)?;
    let d = iqcore::filter_beam_zero(&parsed.dataset);
    iqcore::save_dataset(&d, ctx.out_file("dataset.csv"))?;
    let rows: Vec<(SatId, usize)> = d.frame_counts().into_iter().collect();
    stats::write_two_column(ctx.out_file("frame_counts.csv"), ("sat_id", "frames"), &rows)?;
    for (s, n) in &rows {
        println!("satellite {s}: {n} beam-0 frames");
    }
    println!("{} rows rejected for empty sample lists", parsed.rejected_empty_rows);
    ctx.summary(&[
        ("frames", d.n_frames().to_string()),
        ("rejected_empty_rows", parsed.rejected_empty_rows.to_string()),
    ])
}

fn cmd_stats(ctx: &Ctx) -> Result<()> {
    let d = iqcore::filter_beam_zero(&iqcore::read_dataset(ctx.path("input")?)?.dataset);
    let gap = ctx.get("gap_s", stats::DEFAULT_GAP_S)?;
    let snr: Vec<(SatId, f64)> = d
        .iter_frames()
        .filter_map(|f| stats::snr_of_frame(f).ok().map(|s| (f.sat_id, s.snr_db)))
        .collect();
    stats::write_two_column(ctx.out_file("snr.csv"), ("sat_id", "snr_db"), &snr)?;
    let values: Vec<f64> = snr.iter().map(|(_, v)| *v).collect();
    stats::write_two_column(ctx.out_file("snr_hist.csv"), ("snr_db", "count"), &stats::histogram(&values, 0.0, 1.0))?;
    let passes = stats::pass_segmentation(&d, gap);
    let mut text = String::from("sat_id,start_s,end_s,n_iq_samples,duration_min\n");
    for p in &passes {
        text.push_str(&format!("{},{},{},{},{}\n", p.sat_id, p.start_s, p.end_s, p.n_iq_samples, p.duration_min));
    }
    let path = ctx.out_file("passes.csv");
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    let waits: Vec<(usize, f64)> = stats::waiting_times_min(&passes).into_iter().enumerate().collect();
    stats::write_two_column(ctx.out_file("waiting_times.csv"), ("index", "minutes"), &waits)?;
    stats::write_two_column(
        ctx.out_file("samples_per_pass_icdf.csv"),
        ("n_samples", "p_greater"),
        &stats::samples_per_pass_icdf(&passes),
    )?;
    let median = if values.is_empty() { f64::NAN } else { eval::quantile(&values, 0.5) };
    println!("{} frames, median SNR {median:.2} dB, {} passes", values.len(), passes.len());
    ctx.summary(&[("median_snr_db", median.to_string()), ("passes", passes.len().to_string())])
}

fn cmd_image(ctx: &Ctx) -> Result<()> {
    let spec = ctx.imaging()?;
    let d = iqcore::filter_beam_zero(&iqcore::read_dataset(ctx.path("input")?)?.dataset);
    let set = imaging::group_into_images(&d, &spec)?;
    imaging::write_image_set(ctx.out_file("images"), &set)?;
    for s in set.labels() {
        println!("satellite {s}: {} images", set.of(s).len());
    }
    ctx.summary(&[
        ("images", set.images.len().to_string()),
        ("excluded", format!("{:?}", set.excluded.iter().map(|s| s.0).collect::<Vec<_>>())),
    ])
}

fn cmd_train_cnn(ctx: &Ctx) -> Result<()> {
    let set = imaging::read_image_set(ctx.path("images")?)?;
    let spec = ctx.cnn_spec()?;
    let run = eval::run_multiclass(&set, &spec, &ctx.split()?)?;
    run.fit.model.save(ctx.out_file("model.cnn"))?;
    cnn::write_trace(ctx.out_file("trace.csv"), &run.fit.trace)?;
    println!(
        "best validation accuracy {:.4} at epoch {}, test accuracy {:.4}",
        run.fit.best_val_accuracy, run.fit.best_epoch, run.test_accuracy
    );
    ctx.summary(&[
        ("best_epoch", run.fit.best_epoch.to_string()),
        ("val_accuracy", run.fit.best_val_accuracy.to_string()),
        ("test_accuracy", run.test_accuracy.to_string()),
    ])
}

fn cmd_train_ae(ctx: &Ctx) -> Result<()> {
    let set = imaging::read_image_set(ctx.path("images")?)?;
    let sat = SatId(ctx.cfg.require("ref")?);
    let auth = ctx.auth()?;
    let own = set.of(sat);
    if own.is_empty() {
        return Err(Error::MissingSatellite(sat));
    }
    let (train, _) = holdout(&own, auth.train_fraction, auth.seed, u64::from(sat.0));
    let rows: Vec<Vec<f64>> = train.iter().map(|im| im.to_unit()).collect();
    let fit = train_autoencoder(
        crate::autoenc::stack_rows(&rows)?.view(),
        &auth.hp,
        derive_seed(auth.seed, u64::from(sat.0)),
    )?;
    fit.model.save(ctx.out_file(&format!("sat{:03}.sae", sat.0)))?;
    let trace: Vec<(usize, f64)> = fit.trace.objective.iter().copied().enumerate().collect();
    stats::write_two_column(ctx.out_file("scg_trace.csv"), ("epoch", "objective"), &trace)?;
    println!("objective {:.6} -> {:.6}", fit.trace.initial(), fit.trace.last());
    ctx.summary(&[
        ("train_images", train.len().to_string()),
        ("initial_objective", fit.trace.initial().to_string()),
        ("final_objective", fit.trace.last().to_string()),
    ])
}

fn cmd_eval(ctx: &Ctx) -> Result<()> {
    let set = imaging::read_image_set(ctx.path("images")?)?;
    let mode = match ctx.cfg.get_str("mode").unwrap_or("multiclass") {
        "multiclass" => Mode::Multiclass,
        "one-vs-rest" => Mode::OneVsRest,
        "one-vs-one" => Mode::OneVsOne,
        m => return Err(Error::invalid(format!("unknown mode {m:?}"))),
    };
    if mode == Mode::Multiclass {
        return eval_multiclass(ctx, &set);
    }
    let auth = ctx.auth()?;
    let refs: Vec<SatId> = match ctx.cfg.get::<u16>("ref")? {
        Some(r) => vec![SatId(r)],
        None => set.labels(),
    };
    let scored: Vec<eval::ReferenceScores> = refs
        .iter()
        .map(|&s| eval::score_reference(&set, s, &auth))
        .collect::<Result<_>>()?;
    let mut results = Vec::new();
    if mode == Mode::OneVsRest {
        let mut table = Vec::new();
        for r in &scored {
            let roc = eval::one_vs_rest(r)?;
            eval::write_roc_csv(ctx.out_file(&format!("roc_sat{:03}.csv", r.sat_id.0)), &roc)?;
            println!(
                "satellite {}: AUC {:.4}, optimal point ({:.3}, {:.3})",
                r.sat_id, roc.auc, roc.optimal.fpr, roc.optimal.tpr
            );
            results.push((format!("auc.{}", r.sat_id), roc.auc.to_string()));
            table.push((r.sat_id, roc));
        }
        eval::write_auc_table(ctx.out_file("auc.csv"), &table)?;
    } else {
        let rows: Vec<eval::OneVsOne> = scored.iter().map(eval::one_vs_one).collect::<Result<_>>()?;
        eval::write_one_vs_one_csv(ctx.out_file("one_vs_one.csv"), &rows)?;
        eval::write_quantiles_csv(ctx.out_file("quantiles.csv"), &rows)?;
        for r in &rows {
            let [a, b, c] = r.quantiles;
            println!("satellite {}: AUC q05 {a:.4}, median {b:.4}, q95 {c:.4}", r.sat_id);
            results.push((format!("median_auc.{}", r.sat_id), b.to_string()));
        }
    }
    let results: Vec<(&str, String)> = results.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    ctx.summary(&results)
}

fn eval_multiclass(ctx: &Ctx, set: &imaging::ImageSet) -> Result<()> {
    let runs = ctx.get("runs", 1usize)?;
    let exclude = ctx.get("exclude", 0usize)?;
    let spec = ctx.cnn_spec()?;
    let split = ctx.split()?;
    let pipeline = |keep: &[SatId], run: usize, seed: u64| {
        let subset = set.restrict(keep);
        let s = CnnSpec { seed: derive_seed(seed, 1), ..spec.clone() };
        let sp = SplitSpec { seed: derive_seed(seed, 2), ..split };
        log::info!("run {run}: {} classes", keep.len());
        Ok(eval::run_multiclass(&subset, &s, &sp)?.matrix)
    };
    let all = set.labels();
    let cm = eval::repeated_runs(runs, ctx.seed, |run, seed| pipeline(&all, run, seed))?;
    let rates = eval::hit_miss_rates(&cm)?;
    eval::write_confusion_csv(ctx.out_file("confusion.csv"), &cm)?;
    eval::write_rates_csv(ctx.out_file("rates.csv"), &rates)?;
    println!("mean accuracy over {runs} run(s): {:.4}", cm.accuracy());
    let mut results = vec![("accuracy", cm.accuracy().to_string()), ("runs", runs.to_string())];
    if exclude > 0 {
        let steps = eval::exclusion_sweep(&all, exclude, |keep| {
            eval::repeated_runs(runs, ctx.seed, |run, seed| pipeline(keep, run, seed))
        })?;
        eval::write_exclusion_csv(ctx.out_file("exclusion.csv"), &steps)?;
        for s in &steps {
            println!("{} removed: accuracy {:.4}", s.n_removed, s.accuracy);
        }
        results.push(("exclusion_final_accuracy", steps.last().unwrap().accuracy.to_string()));
    }
    ctx.summary(&results)
}

fn cmd_sweep(ctx: &Ctx) -> Result<()> {
    let d = iqcore::filter_beam_zero(&iqcore::read_dataset(ctx.path("input")?)?.dataset);
    let text = ctx.cfg.get_str("counts").unwrap_or("100,1000,10000");
    let counts: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::invalid(format!("bad count {t:?}"))))
        .collect::<Result<_>>()?;
    let mut spec = ctx.cnn_spec()?;
    spec.input_side = ctx.get("side", spec.input_side)?;
    let rows = cnn::sweep_samples_per_image(&d, &counts, &spec, &ctx.split()?)?;
    stats::write_two_column(ctx.out_file("sweep.csv"), ("samples_per_image", "val_accuracy"), &rows)?;
    for (n, a) in &rows {
        println!("{n} samples/image: validation accuracy {a:.4}");
    }
    ctx.summary(&[("rows", rows.len().to_string())])
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let ctx = resolve(cli)?;
    if let Some(j) = ctx.cfg.get::<usize>("jobs")? {
        // a pool already set up by an earlier call in the same process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    create_dir(&ctx.out)?;
    match &cli.command {
        Command::Synth(_) => cmd_synth(&ctx),
        Command::Ingest(_) => cmd_ingest(&ctx),
        Command::Stats(_) => cmd_stats(&ctx),
        Command::Image(_) => cmd_image(&ctx),
        Command::TrainCnn(_) => cmd_train_cnn(&ctx),
        Command::TrainAe(_) => cmd_train_ae(&ctx),
        Command::Eval(_) => cmd_eval(&ctx),
        Command::Sweep(_) => cmd_sweep(&ctx),
    }
}

/// Process exit code for an error: 2 bad configuration, 3 I/O, 4 malformed
/// input file, 1 anything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) => 2,
        Error::Io { .. } => 3,
        Error::Parse { .. } | Error::UnknownSatellite { .. } | Error::ModelFormat(_) => 4,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("iqauth").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn seed_is_required() {
        let cli = parse(&["synth", "--sats", "2"]);
        assert!(matches!(resolve(&cli), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "seed = 3\nsats = 4\nframes = 10\n").unwrap();
        let cli = parse(&["--config", path.to_str().unwrap(), "synth", "--sats", "6"]);
        let ctx = resolve(&cli).unwrap();
        assert_eq!(ctx.seed, 3);
        assert_eq!(ctx.get("sats", 0usize).unwrap(), 6);
        assert_eq!(ctx.get("frames", 0usize).unwrap(), 10);
    }

    #[test]
    fn mode_names() {
        let cli = parse(&["eval", "--mode", "one-vs-rest", "--ref", "25", "--seed", "1"]);
        let ctx = resolve(&cli).unwrap();
        assert_eq!(ctx.cfg.get_str("mode"), Some("one-vs-rest"));
        assert_eq!(ctx.cfg.get::<u16>("ref").unwrap(), Some(25));
    }
}
