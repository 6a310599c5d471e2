//! ISAM-with-dispersion measurement model.
//!
//! The operator maps a complex depth/lateral image to real, possibly sub-sampled
//! spectra: lateral FFT, nonuniform resampling onto the `beta(k, q)` nodes, focal
//! phase and optional filter, lateral IFFT, zero-padding onto the full spectral
//! axis, axial DFT, dispersion phase, real part and mask.

mod hilbert;
mod operator;

pub use hilbert::{analytic_conjugate, hilbert, AnalyticConjugate};
pub use operator::{IsamOperator, MeasurementOperator};

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::AcquisitionGrid;
use crate::image::{check_shape, ComplexImage, Mask, Spectrogram};
use crate::nufft::NufftOptions;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig<T> {
    pub grid: AcquisitionGrid<T>,
    /// Second-order dispersion coefficient (phase per k^2).
    pub dispersion_a: T,
    /// Third-order dispersion coefficient (phase per k^3).
    pub dispersion_b: T,
    /// Focal plane position in depth rows.
    pub focal_depth: T,
    /// Real gain per `(k, q)` pair, `n_axial x n_lateral` with lateral frequencies in FFT order.
    pub isam_filter: Option<Array2<T>>,
    pub nufft: NufftOptions,
}

impl<T: Real> ModelConfig<T> {
    /// Dispersion-free configuration focused at the middle depth row.
    pub fn new(grid: AcquisitionGrid<T>) -> Self {
        let focal_depth = T::from_count(grid.n_depth() / 2);
        Self {
            grid,
            dispersion_a: T::zero(),
            dispersion_b: T::zero(),
            focal_depth,
            isam_filter: None,
            nufft: NufftOptions::default(),
        }
    }

    pub fn with_dispersion(mut self, a: T, b: T) -> Self {
        self.dispersion_a = a;
        self.dispersion_b = b;
        self
    }

    pub fn with_focal_depth(mut self, row: T) -> Self {
        self.focal_depth = row;
        self
    }

    pub fn with_filter(mut self, filter: Array2<T>) -> Result<Self> {
        self.isam_filter = Some(filter);
        self.validate()?;
        Ok(self)
    }

    pub fn with_nufft(mut self, options: NufftOptions) -> Self {
        self.nufft = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dispersion_a", self.dispersion_a),
            ("dispersion_b", self.dispersion_b),
            ("focal_depth", self.focal_depth),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if let Some(f) = &self.isam_filter {
            check_shape("isam_filter", self.grid.spectrum_shape(), f.dim())?;
            if !f.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("isam_filter"));
            }
        }
        Ok(())
    }
}

/// Dispersion phase `a (k - k0)^2 + b (k - k0)^3` on every measured wavenumber.
pub fn dispersion_phase<T: Real>(config: &ModelConfig<T>) -> Vec<T> {
    let k0 = config.grid.k0();
    config
        .grid
        .k_axis()
        .into_iter()
        .map(|k| {
            let d = k - k0;
            config.dispersion_a * d * d + config.dispersion_b * d * d * d
        })
        .collect()
}

/// Simulates the spectra `mask . Re(exp(j Omega) D Q K x)` of an image.
pub fn forward<T: Real>(
    x: &ComplexImage<T>,
    mask: &Mask,
    config: &ModelConfig<T>,
) -> Result<Spectrogram<T>> {
    check_grid(&x.grid, &config.grid)?;
    let op = IsamOperator::new(config.clone(), mask.clone())?;
    let y = op.apply(&x.data)?;
    Spectrogram::new(y, mask.clone(), config.grid.clone())
}

/// Exact adjoint of [`forward`] for the spectrogram's own mask.
pub fn adjoint<T: Real>(y: &Spectrogram<T>, config: &ModelConfig<T>) -> Result<ComplexImage<T>> {
    check_grid(&y.grid, &config.grid)?;
    let op = IsamOperator::new(config.clone(), y.mask.clone())?;
    ComplexImage::new(op.apply_adjoint(&y.data)?, config.grid.clone())
}

/// `0.5 * ||forward(x) - y||^2` using the spectrogram's mask.
pub fn data_fidelity<T: Real>(
    x: &ComplexImage<T>,
    y: &Spectrogram<T>,
    config: &ModelConfig<T>,
) -> Result<T> {
    check_grid(&x.grid, &config.grid)?;
    check_grid(&y.grid, &config.grid)?;
    let op = IsamOperator::new(config.clone(), y.mask.clone())?;
    fidelity(&op, &x.data, &y.data)
}

/// `adjoint(forward(x) - y)` using the spectrogram's mask.
pub fn gradient<T: Real>(
    x: &ComplexImage<T>,
    y: &Spectrogram<T>,
    config: &ModelConfig<T>,
) -> Result<ComplexImage<T>> {
    check_grid(&x.grid, &config.grid)?;
    check_grid(&y.grid, &config.grid)?;
    let op = IsamOperator::new(config.clone(), y.mask.clone())?;
    ComplexImage::new(fidelity_gradient(&op, &x.data, &y.data)?, config.grid.clone())
}

/// Least-squares data term for any measurement operator.
pub fn fidelity<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    x: &Array2<Complex<T>>,
    y: &Array2<T>,
) -> Result<T> {
    let r = residual(op, x, y)?;
    Ok(T::lit(0.5) * r.iter().fold(T::zero(), |acc, &v| acc + v * v))
}

pub fn fidelity_gradient<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    x: &Array2<Complex<T>>,
    y: &Array2<T>,
) -> Result<Array2<Complex<T>>> {
    op.adjoint(&residual(op, x, y)?)
}

fn residual<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    x: &Array2<Complex<T>>,
    y: &Array2<T>,
) -> Result<Array2<T>> {
    check_shape("measurements", op.data_shape(), y.dim())?;
    let mut r = op.forward(x)?;
    r.zip_mut_with(y, |a, &b| *a = *a - b);
    Ok(r)
}

fn check_grid<T: Real>(found: &AcquisitionGrid<T>, expected: &AcquisitionGrid<T>) -> Result<()> {
    if found != expected {
        return Err(Error::InvalidParameter(
            "data grid differs from the model grid".into(),
        ));
    }
    Ok(())
}
