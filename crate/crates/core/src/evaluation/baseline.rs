//! Conventional reconstructions the iterative method is compared against.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{check_shape, Mask};
use crate::model::{dispersion_phase, AnalyticConjugate, IsamOperator, ModelConfig};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Inverse DFT of each zero-filled A-scan, no dispersion correction.
    Ifft,
    /// Inverse DFT after removing the dispersion phase from the analytic signal.
    DispersionIfft,
    /// Linear interpolation of the missing samples, then the analytic-signal ISAM adjoint.
    InterpIsam,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::Ifft,
        BaselineKind::DispersionIfft,
        BaselineKind::InterpIsam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Ifft => "ifft",
            BaselineKind::DispersionIfft => "dispersion_ifft",
            BaselineKind::InterpIsam => "interp_isam",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ifft" => Ok(BaselineKind::Ifft),
            "dispersion_ifft" | "dispersion-ifft" => Ok(BaselineKind::DispersionIfft),
            "interp_isam" | "interp-isam" | "isam" => Ok(BaselineKind::InterpIsam),
            other => Err(Error::InvalidParameter(format!(
                "unknown baseline {other:?} (expected ifft, dispersion_ifft or interp_isam)"
            ))),
        }
    }
}

/// Reconstructs an image from masked spectra `y` (`n_axial x n_lateral`) without iterating.
pub fn reconstruct_baseline<T: Real>(
    y: &Array2<T>,
    mask: &Mask,
    config: &ModelConfig<T>,
    kind: BaselineKind,
) -> Result<Array2<Complex<T>>> {
    config.validate()?;
    let grid = &config.grid;
    check_shape("measurements", grid.spectrum_shape(), y.dim())?;
    if mask.len() != grid.n_axial() {
        return Err(Error::LengthMismatch {
            context: "baseline mask",
            expected: grid.n_axial(),
            found: mask.len(),
        });
    }
    match kind {
        BaselineKind::Ifft => axial_ifft(y, mask, config, false),
        BaselineKind::DispersionIfft => axial_ifft(y, mask, config, true),
        BaselineKind::InterpIsam => {
            let filled = interpolate_missing(y, mask)?;
            IsamOperator::new(config.clone(), Mask::full(grid.n_axial()))?
                .apply_adjoint_analytic(&filled)
        }
    }
}

fn axial_ifft<T: Real>(
    y: &Array2<T>,
    mask: &Mask,
    config: &ModelConfig<T>,
    compensate: bool,
) -> Result<Array2<Complex<T>>> {
    let (n_axial, n_lateral) = y.dim();
    let n_depth = n_axial / 2;
    let mut planner = FftPlanner::new();
    let inverse = planner.plan_fft_inverse(n_axial);
    let analytic = AnalyticConjugate::new(n_axial, &mut planner);
    let correction: Vec<Complex<T>> = if compensate {
        dispersion_phase(config)
            .into_iter()
            .map(|w| Complex::from_polar(T::one(), -w))
            .collect()
    } else {
        vec![Complex::new(T::one(), T::zero()); n_axial]
    };
    let scale = T::from_count(n_axial).recip();
    let mut out = Array2::zeros((n_depth, n_lateral));
    let mut buf = vec![Complex::default(); n_axial];
    for l in 0..n_lateral {
        for ((b, &v), &keep) in buf.iter_mut().zip(y.column(l)).zip(mask.as_slice()) {
            *b = Complex::new(if keep { v } else { T::zero() }, T::zero());
        }
        analytic.apply_in_place(&mut buf);
        for (b, c) in buf.iter_mut().zip(&correction) {
            *b = *b * c;
        }
        inverse.process(&mut buf);
        for (o, b) in out.column_mut(l).iter_mut().zip(&buf[..n_depth]) {
            *o = *b * scale;
        }
    }
    Ok(out)
}

/// Fills unsampled spectral rows by linear interpolation between the nearest kept
/// rows; rows outside the kept range copy the nearest kept row.
pub fn interpolate_missing<T: Real>(y: &Array2<T>, mask: &Mask) -> Result<Array2<T>> {
    let kept: Vec<usize> = (0..mask.len()).filter(|&i| mask.get(i)).collect();
    if kept.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot interpolate: the mask keeps no samples".into(),
        ));
    }
    if y.nrows() != mask.len() {
        return Err(Error::LengthMismatch {
            context: "interpolation mask",
            expected: y.nrows(),
            found: mask.len(),
        });
    }
    let mut out = y.clone();
    let first = kept[0];
    let last = *kept.last().expect("nonempty");
    for i in 0..first {
        out.row_mut(i).assign(&y.row(first));
    }
    for i in last + 1..mask.len() {
        out.row_mut(i).assign(&y.row(last));
    }
    for pair in kept.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let span = T::from_count(b - a);
        for i in a + 1..b {
            let w = T::from_count(i - a) / span;
            for l in 0..y.ncols() {
                out[[i, l]] = y[[a, l]] * (T::one() - w) + y[[b, l]] * w;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AcquisitionGrid;

    fn config(a: f64, b: f64) -> ModelConfig<f64> {
        let grid = AcquisitionGrid::sd_oct_830(64, 16, 2.0).unwrap();
        ModelConfig::new(grid).with_dispersion(a, b)
    }

    fn data() -> Array2<f64> {
        Array2::from_shape_fn((64, 16), |(i, l)| ((i * 7 + l * 3) as f64 * 0.37).sin())
    }

    #[test]
    fn interpolation_fills_linearly() {
        let y = Array2::from_shape_vec((6, 1), vec![9.0, 1.0, 9.0, 3.0, 9.0, 9.0]).unwrap();
        let mask = Mask::from_bits(&[0, 1, 0, 1, 0, 0]).unwrap();
        let f = interpolate_missing(&y, &mask).unwrap();
        assert_eq!(f.column(0).to_vec(), vec![1.0, 1.0, 2.0, 3.0, 3.0, 3.0]);
        assert!(interpolate_missing(&y, &Mask::from_bits(&[0; 6]).unwrap()).is_err());
    }

    #[test]
    fn ifft_variants_agree_without_dispersion() {
        let cfg = config(0.0, 0.0);
        let mask = Mask::full(64);
        let a = reconstruct_baseline(&data(), &mask, &cfg, BaselineKind::Ifft).unwrap();
        let b = reconstruct_baseline(&data(), &mask, &cfg, BaselineKind::DispersionIfft).unwrap();
        let diff = a.iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
        assert!(diff < 1e-10);
    }

    #[test]
    fn interp_isam_on_full_mask_is_the_adjoint() {
        let cfg = config(150.0, 300.0);
        let mask = Mask::full(64);
        let y = data();
        let a = reconstruct_baseline(&y, &mask, &cfg, BaselineKind::InterpIsam).unwrap();
        let b = IsamOperator::new(cfg, mask).unwrap().apply_adjoint_analytic(&y).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ifft_recovers_a_tone() {
        let cfg = config(0.0, 0.0);
        let y = Array2::from_shape_fn((64, 16), |(i, _)| {
            (std::f64::consts::TAU * 9.0 * i as f64 / 64.0).cos()
        });
        let x = reconstruct_baseline(&y, &Mask::full(64), &cfg, BaselineKind::Ifft).unwrap();
        for (r, v) in x.column(0).iter().enumerate() {
            let expect = if r == 9 { 1.0 } else { 0.0 };
            assert!((v.norm() - expect).abs() < 1e-12, "row {r}: {v}");
        }
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.name().parse::<BaselineKind>().unwrap(), k);
        }
        assert!("fbp".parse::<BaselineKind>().is_err());
    }
}
