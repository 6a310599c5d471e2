use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::hilbert::AnalyticConjugate;
use super::{dispersion_phase, ModelConfig};
use crate::error::{Error, Result};
use crate::grid::axial_frequency;
use crate::image::{check_shape, Mask};
use crate::nufft::NufftPlan;
use crate::scalar::Real;

/// Real-valued linear measurement operator on complex images.
///
/// `adjoint` must satisfy `<forward(x), y> = Re <x, adjoint(y)>`.
pub trait MeasurementOperator<T: Real>: Sync {
    fn image_shape(&self) -> (usize, usize);
    fn data_shape(&self) -> (usize, usize);
    fn forward(&self, x: &Array2<Complex<T>>) -> Result<Array2<T>>;
    fn adjoint(&self, y: &Array2<T>) -> Result<Array2<Complex<T>>>;
}

/// Resampling data for one lateral frequency.
struct Column<T: Real> {
    /// Coarse spectral rows with a propagating node.
    rows: Vec<usize>,
    plan: Option<NufftPlan<T>>,
    /// Focal phase times filter gain, one per entry of `rows`.
    gains: Vec<Complex<T>>,
}

/// Precomputed ISAM measurement operator for a fixed configuration and mask.
pub struct IsamOperator<T: Real> {
    config: ModelConfig<T>,
    mask: Mask,
    columns: Vec<Column<T>>,
    phase: Vec<Complex<T>>,
    lateral_fwd: Arc<dyn Fft<T>>,
    lateral_inv: Arc<dyn Fft<T>>,
    depth_fwd: Arc<dyn Fft<T>>,
    depth_inv: Arc<dyn Fft<T>>,
    axial_fwd: Arc<dyn Fft<T>>,
    axial_inv: Arc<dyn Fft<T>>,
    analytic: AnalyticConjugate<T>,
}

impl<T: Real> std::fmt::Debug for IsamOperator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IsamOperator")
            .field("image_shape", &self.config.grid.image_shape())
            .field("kept", &self.mask.kept())
            .finish_non_exhaustive()
    }
}

impl<T: Real> IsamOperator<T> {
    pub fn new(config: ModelConfig<T>, mask: Mask) -> Result<Self> {
        config.validate()?;
        let grid = &config.grid;
        let (n_axial, n_lateral, n_depth) = (grid.n_axial(), grid.n_lateral(), grid.n_depth());
        if mask.len() != n_axial {
            return Err(Error::LengthMismatch {
                context: "operator mask",
                expected: n_axial,
                found: mask.len(),
            });
        }

        let mut planner = FftPlanner::new();
        let dz = grid.depth_pitch();
        let z_focus = config.focal_depth * dz;
        let two = T::lit(2.0);
        let qs = grid.lateral_frequencies();
        let mut columns = Vec::with_capacity(n_lateral);
        for (l, &q) in qs.iter().enumerate() {
            let mut rows = Vec::with_capacity(n_depth);
            let mut nodes = Vec::with_capacity(n_depth);
            let mut gains = Vec::with_capacity(n_depth);
            for i in 0..n_depth {
                let k = grid.k(2 * i);
                let Some(beta) = axial_frequency(k, q) else {
                    continue;
                };
                // beta - 2k without cancellation
                let shift = -(q * q) / (beta + two * k);
                let gain = config.isam_filter.as_ref().map_or(T::one(), |f| f[[2 * i, l]]);
                rows.push(i);
                nodes.push(beta * dz);
                gains.push(Complex::from_polar(gain, shift * z_focus));
            }
            let plan = if nodes.is_empty() {
                None
            } else {
                Some(NufftPlan::new(&nodes, n_depth, config.nufft, &mut planner)?)
            };
            columns.push(Column { rows, plan, gains });
        }

        let phase = dispersion_phase(&config)
            .into_iter()
            .map(|w| Complex::from_polar(T::one(), w))
            .collect();

        Ok(Self {
            columns,
            phase,
            lateral_fwd: planner.plan_fft_forward(n_lateral),
            lateral_inv: planner.plan_fft_inverse(n_lateral),
            depth_fwd: planner.plan_fft_forward(n_depth),
            depth_inv: planner.plan_fft_inverse(n_depth),
            axial_fwd: planner.plan_fft_forward(n_axial),
            axial_inv: planner.plan_fft_inverse(n_axial),
            analytic: AnalyticConjugate::new(n_axial, &mut planner),
            config,
            mask,
        })
    }

    pub fn config(&self) -> &ModelConfig<T> {
        &self.config
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    /// Same operator with a different sampling mask; the resampling plans are reused.
    pub fn with_mask(&self, mask: Mask) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return Err(Error::LengthMismatch {
                context: "operator mask",
                expected: self.mask.len(),
                found: mask.len(),
            });
        }
        Ok(Self {
            config: self.config.clone(),
            mask,
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    rows: c.rows.clone(),
                    plan: c.plan.clone(),
                    gains: c.gains.clone(),
                })
                .collect(),
            phase: self.phase.clone(),
            lateral_fwd: Arc::clone(&self.lateral_fwd),
            lateral_inv: Arc::clone(&self.lateral_inv),
            depth_fwd: Arc::clone(&self.depth_fwd),
            depth_inv: Arc::clone(&self.depth_inv),
            axial_fwd: Arc::clone(&self.axial_fwd),
            axial_inv: Arc::clone(&self.axial_inv),
            analytic: self.analytic.clone(),
        })
    }

    /// ISAM resampling followed by the inverse axial DFT: the `n_depth x n_lateral`
    /// signal that is zero-padded onto the full spectral axis.
    pub fn resample(&self, x: &Array2<Complex<T>>) -> Result<Array2<Complex<T>>> {
        check_shape("image", self.config.grid.image_shape(), x.dim())?;
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("image"));
        }
        let (n_depth, n_lateral) = x.dim();
        let mut spec = x.as_standard_layout().into_owned();
        self.rows_fft(&mut spec, &self.lateral_fwd, T::one());

        let mut out = Array2::<Complex<T>>::zeros((n_depth, n_lateral));
        let mut col = vec![Complex::default(); n_depth];
        for (l, column) in self.columns.iter().enumerate() {
            let Some(plan) = &column.plan else { continue };
            for (c, v) in col.iter_mut().zip(spec.column(l)) {
                *c = *v;
            }
            let vals = plan.forward(&col)?;
            for ((&row, v), g) in column.rows.iter().zip(vals).zip(&column.gains) {
                out[[row, l]] = v * g;
            }
        }

        self.rows_fft(&mut out, &self.lateral_inv, T::from_count(n_lateral).recip());
        self.columns_fft(&mut out, &self.depth_inv, T::from_count(n_depth).recip());
        Ok(out)
    }

    /// Adjoint of [`Self::resample`].
    pub fn resample_adjoint(&self, u: &Array2<Complex<T>>) -> Result<Array2<Complex<T>>> {
        check_shape("resampled signal", self.config.grid.image_shape(), u.dim())?;
        let (n_depth, n_lateral) = u.dim();
        let mut v = u.as_standard_layout().into_owned();
        self.columns_fft(&mut v, &self.depth_fwd, T::from_count(n_depth).recip());
        self.rows_fft(&mut v, &self.lateral_fwd, T::from_count(n_lateral).recip());

        let mut out = Array2::<Complex<T>>::zeros((n_depth, n_lateral));
        let mut samples = Vec::with_capacity(n_depth);
        for (l, column) in self.columns.iter().enumerate() {
            let Some(plan) = &column.plan else { continue };
            samples.clear();
            samples.extend(
                column
                    .rows
                    .iter()
                    .zip(&column.gains)
                    .map(|(&row, g)| v[[row, l]] * g.conj()),
            );
            let back = plan.adjoint(&samples)?;
            for (o, b) in out.column_mut(l).iter_mut().zip(back) {
                *o = b;
            }
        }
        self.rows_fft(&mut out, &self.lateral_inv, T::one());
        Ok(out)
    }

    /// Complex spectra `exp(j Omega) D Q u` before the real part and mask.
    pub fn padded_spectrum(&self, u: &Array2<Complex<T>>) -> Result<Array2<Complex<T>>> {
        check_shape("resampled signal", self.config.grid.image_shape(), u.dim())?;
        let (n_depth, n_lateral) = u.dim();
        let n_axial = self.config.grid.n_axial();
        let mut out = Array2::<Complex<T>>::zeros((n_axial, n_lateral));
        let mut buf = vec![Complex::default(); n_axial];
        for l in 0..n_lateral {
            buf[..n_depth].copy_from_slice(&u.column(l).to_vec());
            buf[n_depth..].fill(Complex::default());
            self.axial_fwd.process(&mut buf);
            for ((o, b), p) in out.column_mut(l).iter_mut().zip(&buf).zip(&self.phase) {
                *o = b * p;
            }
        }
        Ok(out)
    }

    pub fn apply(&self, x: &Array2<Complex<T>>) -> Result<Array2<T>> {
        let w = self.padded_spectrum(&self.resample(x)?)?;
        let mut y = w.mapv(|z| z.re);
        self.mask.apply(&mut y);
        Ok(y)
    }

    /// Exact adjoint: `K^H Q^T D^H exp(-j Omega) (mask . y)`.
    pub fn apply_adjoint(&self, y: &Array2<T>) -> Result<Array2<Complex<T>>> {
        self.spectral_adjoint(y, false)
    }

    /// Adjoint variant that forms the conjugate analytic signal of the masked data
    /// before removing the dispersion phase.
    ///
    /// Matches twice [`Self::apply_adjoint`] (up to the DC row) only when the
    /// dispersion phase vanishes; kept for comparison and for the baselines.
    pub fn apply_adjoint_analytic(&self, y: &Array2<T>) -> Result<Array2<Complex<T>>> {
        self.spectral_adjoint(y, true)
    }

    fn spectral_adjoint(&self, y: &Array2<T>, analytic: bool) -> Result<Array2<Complex<T>>> {
        check_shape("measurements", self.config.grid.spectrum_shape(), y.dim())?;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("measurements"));
        }
        let (n_axial, n_lateral) = y.dim();
        let n_depth = n_axial / 2;
        let mut u = Array2::<Complex<T>>::zeros((n_depth, n_lateral));
        let mut buf = vec![Complex::default(); n_axial];
        for l in 0..n_lateral {
            for ((b, &v), &keep) in buf.iter_mut().zip(y.column(l)).zip(self.mask.as_slice()) {
                *b = if keep {
                    Complex::new(v, T::zero())
                } else {
                    Complex::default()
                };
            }
            if analytic {
                self.analytic.apply_in_place(&mut buf);
            }
            for (b, p) in buf.iter_mut().zip(&self.phase) {
                *b = *b * p.conj();
            }
            // D^H is the unnormalized inverse DFT
            self.axial_inv.process(&mut buf);
            for (o, b) in u.column_mut(l).iter_mut().zip(&buf[..n_depth]) {
                *o = *b;
            }
        }
        self.resample_adjoint(&u)
    }

    fn rows_fft(&self, a: &mut Array2<Complex<T>>, fft: &Arc<dyn Fft<T>>, scale: T) {
        for mut row in a.axis_iter_mut(Axis(0)) {
            let slice = row.as_slice_mut().expect("standard layout");
            fft.process(slice);
            if scale != T::one() {
                slice.iter_mut().for_each(|z| *z = *z * scale);
            }
        }
    }

    fn columns_fft(&self, a: &mut Array2<Complex<T>>, fft: &Arc<dyn Fft<T>>, scale: T) {
        let mut buf = vec![Complex::default(); a.nrows()];
        for mut col in a.axis_iter_mut(Axis(1)) {
            for (b, v) in buf.iter_mut().zip(col.iter()) {
                *b = *v;
            }
            fft.process(&mut buf);
            for (v, b) in col.iter_mut().zip(&buf) {
                *v = *b * scale;
            }
        }
    }
}

impl<T: Real> MeasurementOperator<T> for IsamOperator<T> {
    fn image_shape(&self) -> (usize, usize) {
        self.config.grid.image_shape()
    }

    fn data_shape(&self) -> (usize, usize) {
        self.config.grid.spectrum_shape()
    }

    fn forward(&self, x: &Array2<Complex<T>>) -> Result<Array2<T>> {
        self.apply(x)
    }

    fn adjoint(&self, y: &Array2<T>) -> Result<Array2<Complex<T>>> {
        self.apply_adjoint(y)
    }
}

/// Real inner product `Re <a, b>` of two complex arrays.
#[cfg(test)]
fn real_inner<T: Real>(a: ndarray::ArrayView2<Complex<T>>, b: ndarray::ArrayView2<Complex<T>>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + x.re * y.re + x.im * y.im)
}
