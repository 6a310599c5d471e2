//! Containers for reconstructed images, measured spectrograms and sampling masks.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::AcquisitionGrid;
use crate::scalar::Real;

/// Complex reflectivity on the object grid, `n_depth x n_lateral`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage<T> {
    pub data: Array2<Complex<T>>,
    pub grid: AcquisitionGrid<T>,
}

impl<T: Real> ComplexImage<T> {
    pub fn new(data: Array2<Complex<T>>, grid: AcquisitionGrid<T>) -> Result<Self> {
        check_shape("ComplexImage", grid.image_shape(), data.dim())?;
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("ComplexImage"));
        }
        Ok(Self { data, grid })
    }

    pub fn zeros(grid: AcquisitionGrid<T>) -> Self {
        Self {
            data: Array2::zeros(grid.image_shape()),
            grid,
        }
    }

    pub fn magnitude(&self) -> Array2<T> {
        self.data.mapv(|z| z.norm())
    }
}

/// Spectral sampling pattern shared by every A-scan of a B-scan.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask(Vec<bool>);

impl Mask {
    pub fn full(n: usize) -> Self {
        Mask(vec![true; n])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Mask(bits)
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "mask entries must be 0 or 1, found {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Mask)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&b| u8::from(b)).collect()
    }

    pub fn kept(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn kept_fraction(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.kept() as f64 / self.0.len() as f64
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    /// Zeroes every row of `data` whose spectral sample is not kept.
    pub fn apply<T: Real>(&self, data: &mut Array2<T>) {
        for (mut row, &keep) in data.rows_mut().into_iter().zip(&self.0) {
            if !keep {
                row.fill(T::zero());
            }
        }
    }
}

/// Real spectrometer measurements, `n_axial x n_lateral`, one spectrum per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    pub data: Array2<T>,
    pub mask: Mask,
    pub grid: AcquisitionGrid<T>,
}

impl<T: Real> Spectrogram<T> {
    /// Builds a spectrogram and applies `mask`, so unsampled rows are exactly zero.
    pub fn new(mut data: Array2<T>, mask: Mask, grid: AcquisitionGrid<T>) -> Result<Self> {
        check_shape("Spectrogram", grid.spectrum_shape(), data.dim())?;
        if mask.len() != grid.n_axial() {
            return Err(Error::LengthMismatch {
                context: "Spectrogram mask",
                expected: grid.n_axial(),
                found: mask.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Spectrogram"));
        }
        mask.apply(&mut data);
        Ok(Self { data, mask, grid })
    }

    pub fn fully_sampled(data: Array2<T>, grid: AcquisitionGrid<T>) -> Result<Self> {
        let mask = Mask::full(grid.n_axial());
        Self::new(data, mask, grid)
    }

    /// Re-applies a (sub-)sampling mask to the stored data.
    pub fn with_mask(mut self, mask: Mask) -> Result<Self> {
        if mask.len() != self.grid.n_axial() {
            return Err(Error::LengthMismatch {
                context: "Spectrogram mask",
                expected: self.grid.n_axial(),
                found: mask.len(),
            });
        }
        mask.apply(&mut self.data);
        self.mask = mask;
        Ok(self)
    }
}

pub(crate) fn check_shape(
    context: &'static str,
    expected: (usize, usize),
    found: (usize, usize),
) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn grid() -> AcquisitionGrid<f64> {
        make_grid::<f64>(8, 8, 1.0, 2.0, 1.5, 1.0).unwrap()
    }

    #[test]
    fn masked_rows_are_zeroed() {
        let mask = Mask::from_bits(&[1, 0, 1, 0, 1, 0, 1, 0]).unwrap();
        let s = Spectrogram::new(Array2::from_elem((8, 8), 3.0), mask, grid()).unwrap();
        for i in 0..8 {
            let expect = if i % 2 == 0 { 3.0 } else { 0.0 };
            assert!(s.data.row(i).iter().all(|&v| v == expect));
        }
    }

    #[test]
    fn mask_application_is_idempotent() {
        let mask = Mask::from_bits(&[1, 1, 0, 1, 0, 0, 1, 1]).unwrap();
        let mut once = Array2::from_shape_fn((8, 3), |(i, j)| (i * 3 + j) as f64 + 0.5);
        mask.apply(&mut once);
        let mut twice = once.clone();
        mask.apply(&mut twice);
        assert_eq!(once, twice);
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Spectrogram::fully_sampled(Array2::zeros((8, 7)), grid()).is_err());
        let mut d = Array2::zeros((8, 8));
        d[[2, 2]] = f64::NAN;
        assert!(matches!(
            Spectrogram::fully_sampled(d, grid()),
            Err(Error::NonFinite(_))
        ));
        assert!(ComplexImage::new(Array2::zeros((8, 8)), grid()).is_err());
        assert!(ComplexImage::new(Array2::zeros((4, 8)), grid()).is_ok());
        assert!(Mask::from_bits(&[0, 2]).is_err());
    }
}
