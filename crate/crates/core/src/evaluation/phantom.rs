//! Synthetic point-scatterer phantoms.

use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::AcquisitionGrid;
use crate::image::{ComplexImage, Spectrogram};
use crate::model::{IsamOperator, ModelConfig};
use crate::image::Mask;
use crate::scalar::Real;

/// Lateral pitch of the standard phantom in micrometres.
pub const STANDARD_LATERAL_PITCH: f64 = 4000.0 / 1024.0;
/// Dispersion coefficients `(a, b)` of the standard phantom.
pub const STANDARD_DISPERSION: (f64, f64) = (150.0, 300.0);

/// Measurement noise, either as an absolute standard deviation or as an SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLevel {
    Sigma(f64),
    /// `10 log10(mean(y_clean^2) / sigma^2)`.
    SnrDb(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub n_axial: usize,
    pub n_lateral: usize,
    pub n_scatterers: usize,
    pub amplitude_range: (f64, f64),
    pub noise: NoiseLevel,
    pub seed: u64,
    /// Focal plane row; the middle row when absent.
    pub focus_row: Option<f64>,
    /// Scatterers keep at least this many pixels from every image edge.
    pub margin: usize,
}

impl PhantomSpec {
    /// 256 x 256 image, 40 scatterers, 25 dB SNR, focus on the middle row.
    pub fn standard() -> Self {
        Self::with_size(256)
    }

    /// The standard phantom on a `size x size` image (`n_axial = 2 size`), with the
    /// scatterer count scaled by area.
    pub fn with_size(size: usize) -> Self {
        let n_scatterers = ((40 * size * size) as f64 / (256.0 * 256.0)).round().max(1.0) as usize;
        Self {
            n_axial: 2 * size,
            n_lateral: size,
            n_scatterers,
            amplitude_range: (0.5, 1.0),
            noise: NoiseLevel::SnrDb(25.0),
            seed: 0,
            focus_row: None,
            margin: (size / 16).max(1),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise: NoiseLevel) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.amplitude_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "amplitude range must be a positive interval, got [{lo}, {hi}]"
            )));
        }
        match self.noise {
            NoiseLevel::Sigma(s) if !(s >= 0.0 && s.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "noise sigma must be finite and nonnegative, got {s}"
                )))
            }
            NoiseLevel::SnrDb(db) if !db.is_finite() => {
                return Err(Error::InvalidParameter(format!("SNR must be finite, got {db}")))
            }
            _ => {}
        }
        let n_depth = self.n_axial / 2;
        let free_rows = n_depth.saturating_sub(2 * self.margin);
        let free_cols = self.n_lateral.saturating_sub(2 * self.margin);
        if free_rows * free_cols < self.n_scatterers {
            return Err(Error::InvalidParameter(format!(
                "{} scatterers do not fit inside the {free_rows}x{free_cols} interior",
                self.n_scatterers
            )));
        }
        if let Some(f) = self.focus_row {
            if !(f >= 0.0 && f < n_depth as f64) {
                return Err(Error::InvalidParameter(format!(
                    "focus row {f} outside [0, {n_depth})"
                )));
            }
        }
        Ok(())
    }

    /// Standard acquisition model for this phantom: 830 nm spectrometer, fixed
    /// lateral pitch and dispersion, focus at `focus_row`.
    pub fn model_config<T: Real>(&self) -> Result<ModelConfig<T>> {
        let grid = AcquisitionGrid::sd_oct_830(
            self.n_axial,
            self.n_lateral,
            T::lit(STANDARD_LATERAL_PITCH),
        )?;
        let (a, b) = STANDARD_DISPERSION;
        let mut cfg = ModelConfig::new(grid).with_dispersion(T::lit(a), T::lit(b));
        if let Some(f) = self.focus_row {
            cfg = cfg.with_focal_depth(T::lit(f));
        }
        Ok(cfg)
    }
}

/// Ground truth, fully sampled noisy measurements and the model that produced them.
#[derive(Debug, Clone)]
pub struct Phantom<T: Real> {
    pub truth: ComplexImage<T>,
    pub measurements: Spectrogram<T>,
    pub config: ModelConfig<T>,
    pub noise_sigma: T,
}

/// Point scatterers with random positions, amplitudes and phases.
pub fn scatterer_image<T: Real>(spec: &PhantomSpec, rng: &mut ChaCha8Rng) -> Array2<Complex<T>> {
    let n_depth = spec.n_axial / 2;
    let mut x = Array2::<Complex<T>>::zeros((n_depth, spec.n_lateral));
    let (lo, hi) = spec.amplitude_range;
    let mut placed = 0;
    while placed < spec.n_scatterers {
        let row = rng.random_range(spec.margin..n_depth - spec.margin);
        let col = rng.random_range(spec.margin..spec.n_lateral - spec.margin);
        let amplitude = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        if x[[row, col]] != Complex::default() {
            continue;
        }
        x[[row, col]] = Complex::from_polar(T::lit(amplitude), T::lit(phase));
        placed += 1;
    }
    x
}

/// Draws a phantom and its fully sampled measurements `Phi(x) + noise`.
///
/// The phantom's focus row, when set, overrides the configuration's focal depth.
pub fn simulate_phantom<T: Real>(spec: &PhantomSpec, config: &ModelConfig<T>) -> Result<Phantom<T>> {
    spec.validate()?;
    let mut config = config.clone();
    if let Some(f) = spec.focus_row {
        config = config.with_focal_depth(T::lit(f));
    }
    let grid = config.grid.clone();
    if grid.spectrum_shape() != (spec.n_axial, spec.n_lateral) {
        return Err(Error::ShapeMismatch {
            context: "phantom grid",
            expected: (spec.n_axial, spec.n_lateral),
            found: grid.spectrum_shape(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x = scatterer_image::<T>(spec, &mut rng);
    let op = IsamOperator::new(config.clone(), Mask::full(spec.n_axial))?;
    let mut y = op.apply(&x)?;

    let sigma = match spec.noise {
        NoiseLevel::Sigma(s) => s,
        NoiseLevel::SnrDb(db) => {
            let power = y.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>() / y.len() as f64;
            (power / 10f64.powf(db / 10.0)).sqrt()
        }
    };
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
        for v in y.iter_mut() {
            *v = *v + T::lit(normal.sample(&mut rng));
        }
    }
    Ok(Phantom {
        truth: ComplexImage::new(x, grid.clone())?,
        measurements: Spectrogram::fully_sampled(y, grid)?,
        config,
        noise_sigma: T::lit(sigma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PhantomSpec {
        PhantomSpec::with_size(32).with_seed(5)
    }

    #[test]
    fn standard_parameters() {
        let s = PhantomSpec::standard();
        assert_eq!((s.n_axial, s.n_lateral, s.n_scatterers), (512, 256, 40));
        assert_eq!(s.noise, NoiseLevel::SnrDb(25.0));
        s.validate().unwrap();
    }

    #[test]
    fn scatterers_stay_inside() {
        let spec = small();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = scatterer_image::<f64>(&spec, &mut rng);
        let mut count = 0;
        for ((i, j), z) in x.indexed_iter() {
            if z.norm() > 0.0 {
                count += 1;
                assert!(i >= spec.margin && i < 32 - spec.margin);
                assert!(j >= spec.margin && j < 32 - spec.margin);
                assert!(z.norm() >= 0.5 - 1e-12 && z.norm() <= 1.0 + 1e-12);
            }
        }
        assert_eq!(count, spec.n_scatterers);
    }

    #[test]
    fn seeded_and_reproducible() {
        let spec = small();
        let cfg = spec.model_config::<f64>().unwrap();
        let a = simulate_phantom(&spec, &cfg).unwrap();
        let b = simulate_phantom(&spec, &cfg).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.measurements.data, b.measurements.data);
        let c = simulate_phantom(&spec.clone().with_seed(6), &cfg).unwrap();
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn snr_sets_sigma() {
        let spec = small().with_noise(NoiseLevel::SnrDb(20.0));
        let cfg = spec.model_config::<f64>().unwrap();
        let p = simulate_phantom(&spec, &cfg).unwrap();
        let clean = IsamOperator::new(cfg, Mask::full(64)).unwrap().apply(&p.truth.data).unwrap();
        let power = clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64;
        assert!((power / (p.noise_sigma * p.noise_sigma) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = small();
        s.amplitude_range = (0.0, 1.0);
        assert!(s.validate().is_err());
        let mut s = small();
        s.noise = NoiseLevel::Sigma(-1.0);
        assert!(s.validate().is_err());
        let mut s = small();
        s.n_scatterers = 10_000;
        assert!(s.validate().is_err());
        let s = small();
        let wrong = PhantomSpec::with_size(16).model_config::<f64>().unwrap();
        assert!(simulate_phantom(&s, &wrong).is_err());
    }
}
