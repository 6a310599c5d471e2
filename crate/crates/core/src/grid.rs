//! Acquisition geometry for one B-scan and the ISAM wavenumber/axial-frequency map.
//!
//! The spectrometer samples `n_axial` wavenumbers uniformly between `k_min` and
//! `k_max`. A real spectrum of that length resolves `n_axial / 2` positive depths,
//! so reconstructed images have `n_depth = n_axial / 2` rows; the zero-padding step
//! of the forward model lifts them back onto the full spectral axis.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest accepted axial or lateral sample count.
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionGrid<T> {
    n_axial: usize,
    n_lateral: usize,
    k_min: T,
    k_max: T,
    k0: T,
    lateral_pitch: T,
}

impl<T: Real> AcquisitionGrid<T> {
    pub fn new(
        n_axial: usize,
        n_lateral: usize,
        k_min: T,
        k_max: T,
        k0: T,
        lateral_pitch: T,
    ) -> Result<Self> {
        let all_finite = [k_min, k_max, k0, lateral_pitch]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidGrid("non-finite grid parameter".into()));
        }
        if k_max <= k_min {
            return Err(Error::InvalidGrid(format!(
                "k_max ({k_max}) must exceed k_min ({k_min})"
            )));
        }
        if k_min <= T::zero() {
            return Err(Error::InvalidGrid(format!(
                "wavenumbers must be positive, got k_min = {k_min}"
            )));
        }
        if k0 < k_min || k0 > k_max {
            return Err(Error::InvalidGrid(format!(
                "central wavenumber {k0} outside [{k_min}, {k_max}]"
            )));
        }
        if lateral_pitch <= T::zero() {
            return Err(Error::InvalidGrid("lateral pitch must be positive".into()));
        }
        if n_axial < MIN_SAMPLES || n_lateral < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_SAMPLES} samples per axis, got {n_axial}x{n_lateral}"
            )));
        }
        if n_axial % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_axial must be even, got {n_axial}"
            )));
        }
        Ok(Self {
            n_axial,
            n_lateral,
            k_min,
            k_max,
            k0,
            lateral_pitch,
        })
    }

    /// Grid for an 830 nm spectrometer spanning 790-870 nm; lengths in micrometres.
    pub fn sd_oct_830(n_axial: usize, n_lateral: usize, lateral_pitch: T) -> Result<Self> {
        let two_pi = T::TAU();
        let k_min = two_pi / T::lit(0.870);
        let k_max = two_pi / T::lit(0.790);
        let k0 = two_pi / T::lit(0.830);
        Self::new(n_axial, n_lateral, k_min, k_max, k0, lateral_pitch)
    }

    pub fn n_axial(&self) -> usize {
        self.n_axial
    }

    pub fn n_lateral(&self) -> usize {
        self.n_lateral
    }

    /// Number of reconstructed depth rows.
    pub fn n_depth(&self) -> usize {
        self.n_axial / 2
    }

    /// Shape of reconstructed images, `(n_depth, n_lateral)`.
    pub fn image_shape(&self) -> (usize, usize) {
        (self.n_depth(), self.n_lateral)
    }

    /// Shape of measured spectrograms, `(n_axial, n_lateral)`.
    pub fn spectrum_shape(&self) -> (usize, usize) {
        (self.n_axial, self.n_lateral)
    }

    pub fn k_min(&self) -> T {
        self.k_min
    }

    pub fn k_max(&self) -> T {
        self.k_max
    }

    pub fn k0(&self) -> T {
        self.k0
    }

    pub fn lateral_pitch(&self) -> T {
        self.lateral_pitch
    }

    pub fn k_step(&self) -> T {
        (self.k_max - self.k_min) / T::from_count(self.n_axial - 1)
    }

    pub fn k(&self, i: usize) -> T {
        if i + 1 == self.n_axial {
            return self.k_max;
        }
        self.k_min + T::from_count(i) * self.k_step()
    }

    pub fn k_axis(&self) -> Vec<T> {
        (0..self.n_axial).map(|i| self.k(i)).collect()
    }

    /// Axial pixel size of the reconstructed image.
    ///
    /// Chosen so that an on-axis reflector at row `n` produces the fringe
    /// `exp(-2j k n dz)` whose phase advances by `2 pi n / n_axial` per spectral pixel.
    pub fn depth_pitch(&self) -> T {
        T::PI() / (T::from_count(self.n_axial) * self.k_step())
    }

    /// Lateral spatial frequencies (rad per unit length) in FFT order.
    ///
    /// Index `l` maps to `2 pi f_l / (n_lateral * pitch)` with `f_l` the signed DFT
    /// frequency, so the set is symmetric about zero.
    pub fn lateral_frequencies(&self) -> Vec<T> {
        let n = self.n_lateral;
        let scale = T::TAU() / (T::from_count(n) * self.lateral_pitch);
        (0..n)
            .map(|l| {
                let signed = if l < n.div_ceil(2) {
                    l as f64
                } else {
                    l as f64 - n as f64
                };
                T::lit(signed) * scale
            })
            .collect()
    }
}

/// Free-function constructor mirroring [`AcquisitionGrid::new`].
pub fn make_grid<T: Real>(
    n_axial: usize,
    n_lateral: usize,
    k_min: T,
    k_max: T,
    k0: T,
    lateral_pitch: T,
) -> Result<AcquisitionGrid<T>> {
    AcquisitionGrid::new(n_axial, n_lateral, k_min, k_max, k0, lateral_pitch)
}

/// Axial object frequency `beta(k, q) = sqrt(4k^2 - q^2)` on every `(k, q)` pair.
#[derive(Debug, Clone)]
pub struct ResampleNodes<T> {
    pub beta: Array2<T>,
    pub valid: Array2<bool>,
}

/// `beta` for a single pair; `None` for evanescent pairs (`4k^2 < q^2`).
#[inline]
pub fn axial_frequency<T: Real>(k: T, q: T) -> Option<T> {
    let disc = T::lit(4.0) * k * k - q * q;
    if disc < T::zero() {
        None
    } else {
        Some(disc.sqrt())
    }
}

pub fn resample_nodes<T: Real>(grid: &AcquisitionGrid<T>) -> ResampleNodes<T> {
    let ks = grid.k_axis();
    let qs = grid.lateral_frequencies();
    let shape = grid.spectrum_shape();
    let mut beta = Array2::zeros(shape);
    let mut valid = Array2::from_elem(shape, false);
    for (i, &k) in ks.iter().enumerate() {
        for (l, &q) in qs.iter().enumerate() {
            if let Some(b) = axial_frequency(k, q) {
                beta[[i, l]] = b;
                valid[[i, l]] = true;
            }
        }
    }
    ResampleNodes { beta, valid }
}
