//! Normalized cross-correlation of magnitude images.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::image::check_shape;
use crate::scalar::Real;

/// Pearson correlation of `|x|` and `|z|`.
pub fn ncc<T: Real>(x: &Array2<Complex<T>>, z: &Array2<Complex<T>>) -> Result<T> {
    check_shape("ncc operands", x.dim(), z.dim())?;
    let a: Vec<T> = x.iter().map(|v| v.norm()).collect();
    let b: Vec<T> = z.iter().map(|v| v.norm()).collect();
    pearson(&a, &b)
}

/// Pearson correlation of two equally long real sequences.
pub fn pearson<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            context: "correlation operands",
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::ConstantMagnitude);
    }
    if !a.iter().chain(b).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("correlation operands"));
    }
    let n = T::from_count(a.len());
    let mean_a = a.iter().fold(T::zero(), |s, &v| s + v) / n;
    let mean_b = b.iter().fold(T::zero(), |s, &v| s + v) / n;
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&p, &q) in a.iter().zip(b) {
        let (dp, dq) = (p - mean_a, q - mean_b);
        sab = sab + dp * dq;
        saa = saa + dp * dp;
        sbb = sbb + dq * dq;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(Error::ConstantMagnitude);
    }
    let r = sab / (saa * sbb).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(values: &[f64], phase: f64) -> Array2<Complex<f64>> {
        Array2::from_shape_fn((1, values.len()), |(_, j)| Complex::from_polar(values[j], phase * j as f64))
    }

    #[test]
    fn reversal_is_anticorrelated() {
        let x = image(&[1.0, 2.0, 3.0, 4.0], 0.3);
        let z = image(&[4.0, 3.0, 2.0, 1.0], -1.1);
        assert!((ncc(&x, &z).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn self_and_scaled() {
        let x = image(&[0.1, 2.0, 0.7, 1.3, 0.0], 0.9);
        assert!((ncc(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let base = ncc(&x, &image(&[0.3, 1.0, 0.2, 2.0, 0.5], 0.0)).unwrap();
        let scaled = ncc(&x.mapv(|v| v * 4.0), &image(&[0.3, 1.0, 0.2, 2.0, 0.5], 0.0)).unwrap();
        assert_eq!(base, scaled);
    }

    #[test]
    fn constant_input_is_an_error() {
        let x = image(&[1.0, 1.0, 1.0], 0.5);
        let z = image(&[1.0, 2.0, 3.0], 0.0);
        assert!(matches!(ncc(&x, &z), Err(Error::ConstantMagnitude)));
        assert!(matches!(ncc(&z, &x), Err(Error::ConstantMagnitude)));
        assert!(ncc(&z, &image(&[1.0, 2.0], 0.0)).is_err());
    }
}
