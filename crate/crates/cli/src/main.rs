use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use patchflag::cnn::PatchNetSize;
use patchflag::error::{Error, ExitKind};
use patchflag::model::ModelSpec;
use patchflag::pipeline::{self, RunConfig, Selection};
use patchflag::synth::synth_corpus;

#[derive(Parser, Debug)]
#[command(name = "patchflag", version, about = "Patch-level forger attribution: split, patch, train, evaluate, flag")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Every flag overrides the matching key of the config file.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML run config; unset keys take the defaults shown below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Input manifest CSV [default: synthetic/manifest.csv]
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output directory for all artifacts [default: run]
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Patch side in pixels [default: 256]
    #[arg(long, global = true)]
    patch_size: Option<u32>,
    /// Paintings narrower than this are dropped [default: 768]
    #[arg(long, global = true)]
    min_width: Option<u32>,
    /// Mean channel entropy a patch must exceed, or "none" [default: 2.5]
    #[arg(long, global = true, value_parser = parse_threshold)]
    entropy_threshold: Option<Threshold>,
    /// Gaussian blur sigma in pixels, 0 disables [default: 1.0]
    #[arg(long, global = true)]
    blur_sigma: Option<f64>,
    /// Number of splits [default: 10]
    #[arg(long, global = true)]
    n_splits: Option<usize>,
    /// Test fraction per split [default: 0.10]
    #[arg(long, global = true)]
    test_frac: Option<f64>,
    /// Validation fraction of the non-test rest [default: 0.20]
    #[arg(long, global = true)]
    val_frac: Option<f64>,
    /// Restrict to one model: kan or patchnet-S0/S1/S2 [default: all configured]
    #[arg(long, global = true)]
    model: Option<String>,
    /// KAN hidden and output widths, comma separated [default: 120,84,12]
    #[arg(long, global = true, value_delimiter = ',')]
    kan_widths: Option<Vec<usize>>,
    /// PatchNet preset [default: S0]
    #[arg(long, global = true)]
    patchnet_size: Option<PatchNetSize>,
    /// Epochs for both families [default: 100]
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Mini-batch size for both families [default: 64]
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    /// Early-stopping patience for both families [default: 10]
    #[arg(long, global = true)]
    patience: Option<usize>,
    /// Top-k patches kept per report [default: 20]
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Top-k patches needed to flag a painting [default: 2]
    #[arg(long, global = true)]
    min_patches: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restrict train/eval/flag to one split index [default: all]
    #[arg(long, global = true)]
    split: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Threshold(Option<f64>);

fn parse_threshold(s: &str) -> Result<Threshold, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(Threshold(None));
    }
    s.parse::<f64>()
        .map(|t| Threshold(Some(t)))
        .map_err(|_| format!("expected a number or \"none\", got \"{s}\""))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate the manifest and write the canonical corpus files
    Ingest,
    /// Generate the stratified split suite
    Split,
    /// Cut patches, record entropies and cache model inputs
    Patch,
    /// Train one checkpoint per model and split
    Train,
    /// Write test-set predictions for each checkpoint
    Eval,
    /// Rank forger-attributed patches and flag paintings
    Flag,
    /// Draw disputed patches onto flagged paintings
    Overlay,
    /// Run every stage and write the summaries
    Suite,
    /// Merge existing train and flag reports into the summaries
    Summarize,
    /// Write a synthetic corpus with a matching manifest
    Synth {
        /// Destination directory
        #[arg(long, default_value = "synthetic")]
        out: PathBuf,
        /// Number of classes including the forger class
        #[arg(long, default_value_t = 12)]
        n_classes: usize,
        /// Images per class
        #[arg(long, default_value_t = 10)]
        per_class: usize,
    },
    /// Compare entropy thresholds for one model over the stored splits
    Sweep {
        /// Thresholds to compare, comma separated
        #[arg(long, value_delimiter = ',', default_value = "none,2.5,3", value_parser = parse_threshold)]
        thresholds: Vec<Threshold>,
    },
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() {
                    cfg.$field = v;
                })*
            };
        }
        set!(manifest, output_dir, patch_size, min_width, blur_sigma, n_splits, test_frac, val_frac, k, min_patches, seed);
        if let Some(Threshold(t)) = self.entropy_threshold {
            cfg.entropy_threshold = t;
        }
        let preset = match (&self.model, self.patchnet_size) {
            (_, Some(s)) => Some(s),
            (Some(id), None) => id.strip_prefix("patchnet-").map(str::parse).transpose()?,
            _ => None,
        };
        for spec in &mut cfg.models {
            match spec {
                ModelSpec::Kan { widths, .. } => {
                    if let Some(w) = &self.kan_widths {
                        *widths = w.clone();
                    }
                }
                ModelSpec::Patchnet { size, .. } => {
                    if let Some(s) = preset {
                        *size = s;
                    }
                }
            }
        }
        for t in [&mut cfg.kan, &mut cfg.cnn] {
            if let Some(v) = self.epochs {
                t.epochs = v;
            }
            if let Some(v) = self.batch_size {
                t.batch_size = v;
            }
            if let Some(v) = self.patience {
                t.patience = v;
            }
        }
        if let Some(id) = &self.model {
            cfg.model(id)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn selection(&self) -> Selection {
        Selection {
            model: self.model.clone(),
            split: self.split,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Synth { out, n_classes, per_class } = &cli.command {
        let manifest = synth_corpus(out, *n_classes, *per_class, cli.opts.seed.unwrap_or(0))?;
        println!("wrote {} images and {}", manifest.artworks.len(), out.join("manifest.csv").display());
        return Ok(());
    }
    let cfg = cli.opts.resolve()?;
    let sel = cli.opts.selection();
    match &cli.command {
        Command::Synth { .. } => unreachable!(),
        Command::Ingest => {
            let m = pipeline::ingest(&cfg)?;
            println!("ingested {} artworks across {} classes", m.artworks.len(), m.classes.len());
        }
        Command::Split => {
            let plans = pipeline::split(&cfg)?;
            println!("wrote {} split plans", plans.len());
        }
        Command::Patch => {
            let s = pipeline::patch(&cfg)?;
            println!("{} patches, {} above the entropy threshold", s.patches, s.above_threshold);
        }
        Command::Train => {
            for r in pipeline::train_stage(&cfg, &sel)? {
                println!(
                    "{}: best epoch {}, min val loss {:.4}, val accuracy {:.4}",
                    r.model_id, r.best_epoch, r.min_val_loss, r.val_accuracy
                );
            }
        }
        Command::Eval => {
            for e in pipeline::eval_stage(&cfg, &sel)? {
                println!(
                    "{} split {:02}: {} test patches, accuracy {:.4}",
                    e.model_id, e.split, e.test_patches, e.accuracy
                );
            }
        }
        Command::Flag => {
            for r in pipeline::flag_stage(&cfg, &sel)? {
                println!(
                    "{} split {:02}: {} flagged, {} misattributed patches",
                    r.model_id,
                    r.split_id,
                    r.flagged.len(),
                    r.misattributed_patches
                );
            }
        }
        Command::Overlay => {
            let written = pipeline::overlay_stage(&cfg)?;
            println!("wrote {} overlays", written.len());
        }
        Command::Suite | Command::Summarize => {
            let summary = if matches!(cli.command, Command::Suite) {
                pipeline::suite(&cfg)?
            } else {
                pipeline::summarize(&cfg)?
            };
            for t in &summary.accuracy {
                println!(
                    "{}: val accuracy {:.4} ± {:.4} over {} splits",
                    t.model_id,
                    t.mean_val_accuracy,
                    t.std_val_accuracy,
                    t.splits.len()
                );
            }
            println!("summary: {}", cfg.layout().summary().display());
        }
        Command::Sweep { thresholds } => {
            let model = cli.opts.model.clone().unwrap_or_else(|| cfg.models[0].id());
            let ts: Vec<Option<f64>> = thresholds.iter().map(|t| t.0).collect();
            let rows = pipeline::entropy_sweep(&cfg, &model, &ts)
                .with_context(|| format!("entropy sweep for {model}"))?;
            println!("wrote {} rows to {}", rows.len(), cfg.layout().entropy_sweep().display());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map_or(ExitKind::Data, Error::exit_kind) as u8
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitKind::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
