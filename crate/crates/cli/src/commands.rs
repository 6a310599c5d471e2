//! Subcommand implementations. Every writer reloads what it wrote before reporting success.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use isam_mbir::evaluation::{
    golden_search_lambda, ncc, reconstruct_baseline, run_study, simulate_phantom, NoiseLevel,
};
use isam_mbir::image::{ComplexImage, Mask};
use isam_mbir::io::{
    load_image, load_spectrogram, read_pgm, save_image, save_spectrogram, write_raster,
    SpectralVolume, VolumeMetadata,
};
use isam_mbir::mask::{make_mask, MaskScheme};
use isam_mbir::model::{IsamOperator, ModelConfig};
use isam_mbir::preprocess::background_subtract;
use isam_mbir::regularize::{RegKind, RegSpec};
use isam_mbir::solver::{fista, SolverConfig};
use ndarray::Array2;
use num_complex::Complex;
use serde_json::Value;

use crate::config::{CompareConfig, Method, ReconstructConfig, RunConfig, SimulateConfig, SweepConfig};

pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = match config {
        RunConfig::Simulate(c) => simulate(c)?,
        RunConfig::Reconstruct(c) => reconstruct(c)?,
        RunConfig::SweepLambda(c) => sweep_lambda(c)?,
        RunConfig::Compare(c) => compare(c)?,
    };
    written.push(config.write_sidecar()?);
    Ok(written)
}

fn simulate(cfg: &SimulateConfig) -> Result<Vec<PathBuf>> {
    let model = cfg.phantom.model_config::<f64>()?;
    let phantom = simulate_phantom(&cfg.phantom, &model).context("simulating phantom")?;
    let mut meta = VolumeMetadata::from_config(&phantom.config);
    meta.extra.insert("phantom_seed".into(), Value::from(cfg.phantom.seed));
    meta.extra.insert("n_scatterers".into(), Value::from(cfg.phantom.n_scatterers));
    meta.extra.insert("noise_sigma".into(), Value::from(phantom.noise_sigma));
    if let NoiseLevel::SnrDb(db) = cfg.phantom.noise {
        meta.extra.insert("snr_db".into(), Value::from(db));
    }

    let volume = SpectralVolume::from_spectrogram(&phantom.measurements, meta.clone());
    save_spectrogram(&cfg.output, &volume)?;
    save_image(&cfg.truth, &phantom.truth, &meta)?;
    write_raster(&cfg.raster, &phantom.truth.data, cfg.dynamic_range_db)?;

    let back: SpectralVolume<f64> = load_spectrogram(&cfg.output)?;
    ensure!(
        back.bscans.len() == 1 && back.bscans[0] == as_stored(&phantom.measurements.data),
        "{} did not reload to the simulated spectra",
        cfg.output.display()
    );
    check_image(&cfg.truth, &phantom.truth.data)?;
    check_raster(&cfg.raster, phantom.truth.data.dim())?;
    Ok(vec![cfg.output.clone(), cfg.truth.clone(), cfg.raster.clone()])
}

/// Selected B-scan with the effective mask applied, plus the model it was acquired with.
struct Prepared {
    spectra: Array2<f64>,
    mask: Mask,
    model: ModelConfig<f64>,
}

fn prepare(
    input: &Path,
    bscan: usize,
    scheme: Option<MaskScheme>,
    seed: u64,
    dispersion: Option<(f64, f64)>,
    subtract_background: bool,
) -> Result<Prepared> {
    let volume: SpectralVolume<f64> = load_spectrogram(input)?;
    let mut spectra = volume
        .bscans
        .get(bscan)
        .with_context(|| {
            format!(
                "{} holds {} B-scans, index {bscan} requested",
                input.display(),
                volume.bscans.len()
            )
        })?
        .clone();
    if subtract_background {
        spectra = background_subtract(&spectra)?;
    }
    let n_axial = volume.grid.n_axial();
    let stored = volume
        .metadata
        .sampling_mask(n_axial)
        .with_context(|| format!("mask stored in {}", input.display()))?;
    let mask = match scheme {
        None => stored,
        Some(s) => {
            let extra = make_mask(n_axial, s, seed)?;
            Mask::from_bools(
                stored
                    .as_slice()
                    .iter()
                    .zip(extra.as_slice())
                    .map(|(a, b)| *a && *b)
                    .collect(),
            )
        }
    };
    mask.apply(&mut spectra);
    let mut model = volume.metadata.model_config(volume.grid.clone());
    if let Some((a, b)) = dispersion {
        model = model.with_dispersion(a, b);
    }
    Ok(Prepared {
        spectra,
        mask,
        model,
    })
}

fn reg_spec(kind: RegKind, lambda: f64, tv_iters: usize, levels: usize) -> RegSpec<f64> {
    let mut reg = RegSpec::new(kind, lambda);
    reg.tv_inner_iters = tv_iters;
    reg.dtcwt_levels = levels;
    reg
}

fn reconstruct(cfg: &ReconstructConfig) -> Result<Vec<PathBuf>> {
    let p = prepare(
        &cfg.input,
        cfg.bscan,
        cfg.mask,
        cfg.mask_seed,
        cfg.dispersion,
        cfg.background_subtract,
    )?;
    let image = match cfg.method {
        Method::Mbir => {
            let op = IsamOperator::new(p.model.clone(), p.mask.clone())?;
            let reg = reg_spec(cfg.reg, cfg.lambda, cfg.tv_inner_iters, cfg.dtcwt_levels);
            let solver = SolverConfig::default().with_iters(cfg.iters);
            fista(&op, &p.spectra, &reg, &solver)
                .context("iterative reconstruction")?
                .best_iterate
        }
        Method::Baseline(kind) => reconstruct_baseline(&p.spectra, &p.mask, &p.model, kind)?,
    };

    let mut meta = VolumeMetadata::from_config(&p.model);
    if !p.mask.is_full() {
        meta.mask = Some(p.mask.to_bits());
    }
    if let Some(s) = cfg.mask {
        meta.mask_scheme = Some(s.to_string());
        if matches!(s, MaskScheme::Random(_)) {
            meta.mask_seed = Some(cfg.mask_seed);
        }
    }
    meta.extra.insert("method".into(), Value::from(cfg.method.to_string()));
    if cfg.method == Method::Mbir {
        meta.extra.insert("regularizer".into(), Value::from(cfg.reg.name()));
        meta.extra.insert("lambda".into(), Value::from(cfg.lambda));
        meta.extra.insert("iterations".into(), Value::from(cfg.iters));
    }
    let image = ComplexImage::new(image, p.model.grid.clone())?;
    save_image(&cfg.output, &image, &meta)?;
    write_raster(&cfg.raster, &image.data, cfg.dynamic_range_db)?;
    check_image(&cfg.output, &image.data)?;
    check_raster(&cfg.raster, image.data.dim())?;
    Ok(vec![cfg.output.clone(), cfg.raster.clone()])
}

/// NCC of two stored images.
pub fn evaluate(image: &Path, reference: &Path) -> Result<f64> {
    let (x, _) = load_image::<f64>(image)?;
    let (z, _) = load_image::<f64>(reference)?;
    ncc(&x.data, &z.data).with_context(|| format!("comparing {} with {}", image.display(), reference.display()))
}

fn sweep_lambda(cfg: &SweepConfig) -> Result<Vec<PathBuf>> {
    let p = prepare(&cfg.input, cfg.bscan, cfg.mask, cfg.mask_seed, None, false)?;
    let (reference, _) = load_image::<f64>(&cfg.reference)?;
    let op = IsamOperator::new(p.model, p.mask)?;
    let reg = reg_spec(cfg.reg, 0.0, cfg.tv_inner_iters, cfg.dtcwt_levels);
    let solver = SolverConfig::default().with_iters(cfg.iters);
    let found = golden_search_lambda(&op, &p.spectra, &reg, &solver, &reference.data, &cfg.search)
        .context("lambda search")?;

    let best = found.outcome.best;
    let mut text = format!("# best lambda {:.6e} ncc {:.6}\nlambda\tncc\n", best.lambda, best.score);
    for point in &found.outcome.trace {
        let _ = writeln!(text, "{:.6e}\t{:.6}", point.lambda, point.score);
    }
    write_text(&cfg.output, &text)?;
    Ok(vec![cfg.output.clone()])
}

fn compare(cfg: &CompareConfig) -> Result<Vec<PathBuf>> {
    let report = run_study::<f64>(&cfg.study).context("running study")?;
    write_text(&cfg.output, &report.to_tsv())?;
    Ok(vec![cfg.output.clone()])
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    let back = fs::read_to_string(path).with_context(|| format!("reading back {}", path.display()))?;
    ensure!(back == text, "{} did not reload intact", path.display());
    Ok(())
}

fn as_stored(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| f64::from(v as f32))
}

fn check_image(path: &Path, expected: &Array2<Complex<f64>>) -> Result<()> {
    let (back, _) = load_image::<f64>(path)?;
    let rounded = expected.mapv(|z| Complex::new(f64::from(z.re as f32), f64::from(z.im as f32)));
    ensure!(back.data == rounded, "{} did not reload to the written image", path.display());
    Ok(())
}

fn check_raster(path: &Path, shape: (usize, usize)) -> Result<()> {
    let raster = read_pgm(path)?;
    ensure!(
        raster.dim() == shape,
        "{} has shape {:?}, expected {shape:?}",
        path.display(),
        raster.dim()
    );
    Ok(())
}

