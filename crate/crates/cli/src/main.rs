//! `isam-mbir`: simulate, reconstruct and score sub-sampled SD-OCT data.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use isam_mbir::evaluation::{
    BaselineKind, GoldenOptions, NoiseLevel, PhantomSpec, ReferenceMode, StudyConfig,
};
use isam_mbir::io::DEFAULT_DYNAMIC_RANGE_DB;
use isam_mbir::mask::MaskScheme;
use isam_mbir::regularize::RegKind;

use config::{
    sibling, CompareConfig, Method, ReconstructConfig, RunConfig, SimulateConfig, SweepConfig,
};

#[derive(Parser, Debug)]
#[command(name = "isam-mbir", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a point-scatterer phantom: spectra (.octs), truth image (.octi) and raster.
    Simulate(SimulateArgs),
    /// Reconstruct one B-scan into an image (.octi) and raster (.pgm).
    Reconstruct(ReconstructArgs),
    /// Print the normalized cross-correlation of two images' magnitudes.
    Evaluate(EvaluateArgs),
    /// Golden-section search for the regularization weight; writes the search trace.
    SweepLambda(SweepArgs),
    /// Run the sub-sampling study and write the comparison table.
    Compare(CompareArgs),
    /// Re-run a command from its config sidecar.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Image size in pixels (the spectra have twice as many samples).
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of scatterers [default: 40 at size 256, scaled by area]
    #[arg(long)]
    scatterers: Option<usize>,
    /// Measurement SNR in dB.
    #[arg(long, default_value_t = 25.0, conflicts_with = "sigma")]
    snr_db: f64,
    /// Absolute noise standard deviation instead of an SNR.
    #[arg(long)]
    sigma: Option<f64>,
    /// Focal plane row [default: middle row]
    #[arg(long)]
    focus_row: Option<f64>,
    /// Output spectra (.octs).
    #[arg(short, long)]
    output: PathBuf,
    /// Ground-truth image [default: <output>_truth.octi]
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Ground-truth raster [default: <output>_truth.pgm]
    #[arg(long)]
    raster: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DYNAMIC_RANGE_DB)]
    dynamic_range: f64,
}

#[derive(Args, Debug)]
struct SamplingArgs {
    /// Extra sub-sampling: full, random:P, equispaced:F or partial:FRACTION.
    #[arg(long)]
    mask: Option<MaskScheme>,
    #[arg(long, default_value_t = 0)]
    mask_seed: u64,
    /// B-scan index within the input volume.
    #[arg(long, default_value_t = 0)]
    bscan: usize,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Regularizer: tv, dtcwt or l1.
    #[arg(long, default_value = "tv")]
    reg: RegKind,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 20)]
    tv_inner_iters: usize,
    #[arg(long, default_value_t = 4)]
    dtcwt_levels: usize,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Input spectra (.octs).
    #[arg(short, long)]
    input: PathBuf,
    /// Output image (.octi).
    #[arg(short, long)]
    output: PathBuf,
    /// Output raster [default: <output>.pgm]
    #[arg(long)]
    raster: Option<PathBuf>,
    /// mbir, ifft, dispersion_ifft or interp_isam.
    #[arg(long, default_value = "mbir")]
    method: Method,
    #[arg(long, default_value_t = 1e-2)]
    lambda: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Override the stored second-order dispersion coefficient.
    #[arg(long, requires = "dispersion_b")]
    dispersion_a: Option<f64>,
    /// Override the stored third-order dispersion coefficient.
    #[arg(long, requires = "dispersion_a")]
    dispersion_b: Option<f64>,
    /// Subtract the smoothed mean spectrum before reconstructing.
    #[arg(long)]
    background_subtract: bool,
    #[arg(long, default_value_t = DEFAULT_DYNAMIC_RANGE_DB)]
    dynamic_range: f64,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Image to score (.octi).
    #[arg(short, long)]
    image: PathBuf,
    /// Reference image (.octi).
    #[arg(short, long)]
    reference: PathBuf,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Lower end of the search interval, log10 lambda.
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    log_lo: f64,
    /// Upper end of the search interval, log10 lambda.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    log_hi: f64,
    /// Stop once the bracket is narrower than this many decades.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

impl SearchArgs {
    fn options(&self) -> GoldenOptions {
        GoldenOptions {
            log_lo: self.log_lo,
            log_hi: self.log_hi,
            tol_decades: self.tol,
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Reference image the NCC is measured against (.octi).
    #[arg(short, long)]
    reference: PathBuf,
    /// Output search trace (.tsv).
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Phantom preset; only `standard` is defined.
    #[arg(long, default_value = "standard")]
    phantom: String,
    /// Image size, overriding the preset's 256.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    mask_seed: u64,
    /// Comma-separated mask schemes.
    #[arg(long, value_delimiter = ',', default_values_t = MaskScheme::half_rate())]
    schemes: Vec<MaskScheme>,
    /// Comma-separated regularizers.
    #[arg(long, value_delimiter = ',', default_values_t = [RegKind::TvIso, RegKind::DtcwtL1])]
    regs: Vec<RegKind>,
    /// Comma-separated baselines.
    #[arg(long, value_delimiter = ',', default_values_t = [BaselineKind::InterpIsam])]
    baselines: Vec<BaselineKind>,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Score against the true phantom (truth) or the fully sampled ISAM image (isam).
    #[arg(long, default_value = "truth")]
    reference: ReferenceMode,
    /// Add a wall-time column (the table is then not reproducible byte for byte).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    search: SearchArgs,
    /// Output table (.tsv).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Config sidecar written by a previous run.
    config: PathBuf,
}

fn resolve(command: Command) -> Result<Option<RunConfig>> {
    Ok(Some(match command {
        Command::Simulate(a) => {
            let mut phantom = PhantomSpec::with_size(a.size).with_seed(a.seed);
            if let Some(n) = a.scatterers {
                phantom.n_scatterers = n;
            }
            phantom.noise = match a.sigma {
                Some(s) => NoiseLevel::Sigma(s),
                None => NoiseLevel::SnrDb(a.snr_db),
            };
            phantom.focus_row = a.focus_row;
            RunConfig::Simulate(SimulateConfig {
                truth: a.truth.unwrap_or_else(|| sibling(&a.output, "_truth.octi")),
                raster: a.raster.unwrap_or_else(|| sibling(&a.output, "_truth.pgm")),
                output: a.output,
                phantom,
                dynamic_range_db: a.dynamic_range,
            })
        }
        Command::Reconstruct(a) => RunConfig::Reconstruct(ReconstructConfig {
            raster: a.raster.unwrap_or_else(|| a.output.with_extension("pgm")),
            input: a.input,
            output: a.output,
            bscan: a.sampling.bscan,
            method: a.method,
            reg: a.solver.reg,
            lambda: a.lambda,
            iters: a.solver.iters,
            mask: a.sampling.mask,
            mask_seed: a.sampling.mask_seed,
            dispersion: a.dispersion_a.zip(a.dispersion_b),
            background_subtract: a.background_subtract,
            tv_inner_iters: a.solver.tv_inner_iters,
            dtcwt_levels: a.solver.dtcwt_levels,
            dynamic_range_db: a.dynamic_range,
        }),
        Command::SweepLambda(a) => RunConfig::SweepLambda(SweepConfig {
            input: a.input,
            reference: a.reference,
            output: a.output,
            bscan: a.sampling.bscan,
            reg: a.solver.reg,
            iters: a.solver.iters,
            mask: a.sampling.mask,
            mask_seed: a.sampling.mask_seed,
            tv_inner_iters: a.solver.tv_inner_iters,
            dtcwt_levels: a.solver.dtcwt_levels,
            search: a.search.options(),
        }),
        Command::Compare(a) => {
            if a.phantom != "standard" {
                bail!("unknown phantom preset {:?} (only \"standard\" is defined)", a.phantom);
            }
            let phantom = PhantomSpec::with_size(a.size.unwrap_or(256)).with_seed(a.seed);
            let mut study = StudyConfig::standard(phantom);
            study.schemes = a.schemes;
            study.regularizers = a.regs;
            study.baselines = a.baselines;
            study.mask_seed = a.mask_seed;
            study.iterations = a.iters;
            study.reference = a.reference;
            study.record_timing = a.timing;
            study.search = a.search.options();
            RunConfig::Compare(CompareConfig {
                output: a.output,
                study,
            })
        }
        Command::Replay(a) => RunConfig::load(&a.config)?,
        Command::Evaluate(a) => {
            let score = commands::evaluate(&a.image, &a.reference)?;
            println!("{score:.6}");
            return Ok(None);
        }
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(cli.command).and_then(|run| match run {
        Some(config) => commands::run(&config).map(|paths| {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }),
        None => Ok(()),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
