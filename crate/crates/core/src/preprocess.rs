//! Background (source spectrum) removal.

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Width of the spectral moving average applied to the background estimate.
pub const BACKGROUND_WINDOW: usize = 15;

/// Subtracts the lateral mean spectrum, smoothed along k, from every A-scan.
///
/// `spectra` is `n_axial x n_lateral` with one A-scan per column.
pub fn background_subtract<T: Real>(spectra: &Array2<T>) -> Result<Array2<T>> {
    background_subtract_with(spectra, BACKGROUND_WINDOW)
}

pub fn background_subtract_with<T: Real>(spectra: &Array2<T>, window: usize) -> Result<Array2<T>> {
    let (n_axial, n_lateral) = spectra.dim();
    if n_lateral < 2 {
        return Err(Error::InvalidParameter(format!(
            "background estimation needs at least 2 A-scans, got {n_lateral}"
        )));
    }
    if window == 0 || n_axial == 0 {
        return Err(Error::InvalidParameter(
            "smoothing window and spectrum length must be positive".into(),
        ));
    }
    let mean = spectra
        .mean_axis(Axis(1))
        .expect("nonempty lateral axis");
    let background = moving_average(&mean, window);
    let mut out = spectra.to_owned();
    for mut col in out.columns_mut() {
        col.zip_mut_with(&background, |v, &b| *v = *v - b);
    }
    Ok(out)
}

/// Centered moving average with mirror-reflected ends (edge sample repeated).
pub fn moving_average<T: Real>(x: &Array1<T>, window: usize) -> Array1<T> {
    let n = x.len() as isize;
    let half_lo = (window as isize - 1) / 2;
    let half_hi = window as isize - 1 - half_lo;
    let reflect = |i: isize| -> usize {
        let period = 2 * n;
        let m = i.rem_euclid(period);
        (if m < n { m } else { period - 1 - m }) as usize
    };
    let scale = T::from_count(window).recip();
    Array1::from_shape_fn(x.len(), |i| {
        let i = i as isize;
        (i - half_lo..=i + half_hi).fold(T::zero(), |s, j| s + x[reflect(j)]) * scale
    })
}

/// Background removal applied to each B-scan of a volume independently.
pub fn background_subtract_volume<T: Real>(bscans: &[Array2<T>]) -> Result<Vec<Array2<T>>> {
    bscans.iter().map(background_subtract).collect()
}
