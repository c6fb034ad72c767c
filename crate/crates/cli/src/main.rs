use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use degrade_forge::dataset::{
    generate_pairs, make_testset, psnr_dirs, DatasetJob, PatchSettings, TestsetKind,
    DEFAULT_LAPLACIAN_THRESHOLD,
};
use degrade_forge::image::{read_image, resize, write_png, ImageF, ResizeMethod};
use degrade_forge::isp::CalibrationPool;
use degrade_forge::pipeline::{degrade, DegradationConfig, Manifest};
use degrade_forge::Error;

/// Log level comes from this variable (default `info`).
const LOG_ENV: &str = "DEGRADE_FORGE_LOG";

#[derive(Parser)]
#[command(
    name = "degrade-forge",
    version,
    about = "Synthesize paired LR/HR super-resolution data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade every image of a folder into LR/HR pairs with manifests.
    Gen {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scale of the config file.
        #[arg(long, value_parser = parse_scale)]
        scale: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        variants: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Also crop this many 72x72 LR patch pairs per output.
        #[arg(long)]
        patches: Option<usize>,
        /// Minimum variance of the Laplacian of unit-range luma.
        #[arg(long, default_value_t = DEFAULT_LAPLACIAN_THRESHOLD)]
        blur_threshold: f64,
    },
    /// Regenerate one of the four x4 test-set degradations.
    Testset {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=4))]
        kind: u32,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Config for type 4.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Luma PSNR of every image in --dist against the same-named image in --ref.
    Psnr {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        dist: PathBuf,
    },
    /// Re-run a manifest on its source image.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        hr: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Calibration pool the manifest was sampled with; built-in if absent.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Write an HR / LR side-by-side sheet for one image.
    Preview {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to `<stem>_preview.png` next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_scale(s: &str) -> Result<u32, String> {
    match s {
        "2" => Ok(2),
        "4" => Ok(4),
        _ => Err(format!("scale must be 2 or 4, got {s}")),
    }
}

fn load_config(path: Option<&Path>) -> degrade_forge::Result<DegradationConfig> {
    match path {
        Some(p) => DegradationConfig::load(p),
        None => Ok(DegradationConfig::default()),
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Gen {
            input,
            out,
            scale,
            seed,
            variants,
            config,
            workers,
            patches,
            blur_threshold,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = scale {
                cfg.scale = s;
            }
            let mut job = DatasetJob::new(input, out, cfg, seed);
            job.variants = variants;
            job.workers = workers;
            job.patches = patches.map(|per_item| PatchSettings { per_item });
            job.laplacian_threshold = blur_threshold;
            let summary = generate_pairs(&job)?;
            if summary.has_warnings() {
                log::warn!(
                    "{} images processed, {} skipped",
                    summary.processed,
                    summary.skipped.len()
                );
            }
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Testset {
            kind,
            input,
            out,
            seed,
            config,
            workers,
        } => {
            let cfg = load_config(config.as_deref())?;
            let summary = make_testset(
                TestsetKind::from_number(kind)?,
                &input,
                &out,
                seed,
                &cfg,
                workers,
            )?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Psnr { reference, dist } => {
            let scores = psnr_dirs(&reference, &dist)?;
            for (name, db) in &scores {
                println!("{name}\t{db:.4}");
            }
            if !scores.is_empty() {
                let mean = scores.iter().map(|(_, db)| db).sum::<f64>() / scores.len() as f64;
                println!("mean\t{mean:.4}");
            }
        }
        Command::Replay {
            manifest,
            hr,
            out,
            pool,
        } => {
            let text = std::fs::read_to_string(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let m = Manifest::from_json(&text)?;
            let pool = match pool {
                Some(p) => CalibrationPool::load(&p)?,
                None => CalibrationPool::builtin(),
            };
            let result = m.replay(&read_image(&hr)?, &pool)?;
            if result.manifest.lr_sha256 != m.lr_sha256 {
                log::warn!("replayed LR differs from the recorded hash {}", m.lr_sha256);
            }
            std::fs::write(&out, &result.encoded)
                .map_err(|e| Error::Job(format!("cannot write {}: {e}", out.display())))?;
        }
        Command::Preview {
            input,
            seed,
            config,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let source = read_image(&input)?;
            let result = degrade(&source, &cfg, seed, &cfg.load_pool()?)?;
            let hr = result.manifest.prepare_input(&source)?;
            let sheet = side_by_side(
                &hr,
                &resize(
                    &result.lr,
                    hr.height(),
                    hr.width(),
                    ResizeMethod::Nearest,
                    false,
                )?,
            );
            let out = out.unwrap_or_else(|| {
                let stem = input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                input.with_file_name(format!("{stem}_preview.png"))
            });
            write_png(&out, &sheet)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn side_by_side(a: &ImageF, b: &ImageF) -> ImageF {
    let (h, w) = a.dims();
    ImageF::from_fn(h, 2 * w, 3, |r, c, ch| {
        if c < w {
            a.get(r, c, ch)
        } else {
            b.get(r, c - w, ch)
        }
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_) | Error::Config(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or(LOG_ENV, "info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
