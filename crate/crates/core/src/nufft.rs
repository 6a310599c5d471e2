//! Type-2 nonuniform FFT with Kaiser-Bessel gridding and its exact adjoint.
//!
//! The forward transform evaluates `X(nu) = sum_n s[n] exp(-j nu n)` for
//! `n = 0..n_uniform` at arbitrary nodes `nu` in `[-pi, pi)`. The signal is
//! pre-scaled by the reciprocal of the kernel's continuous Fourier transform,
//! zero-padded onto an oversampled grid of length `M`, transformed with an FFT and
//! interpolated at each node with a `J`-tap Kaiser-Bessel window. The adjoint is
//! the literal transpose of those steps, so the pair passes the dot-product test
//! to rounding error regardless of the interpolation accuracy.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_OVERSAMPLING: f64 = 1.25;
pub const MAX_OVERSAMPLING: f64 = 4.0;
pub const MIN_KERNEL_WIDTH: usize = 2;
pub const MAX_KERNEL_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NufftOptions {
    pub oversampling: f64,
    pub kernel_width: usize,
}

impl Default for NufftOptions {
    fn default() -> Self {
        Self {
            oversampling: 2.0,
            kernel_width: 6,
        }
    }
}

/// Kaiser-Bessel shape parameter for a `width`-tap kernel on a grid oversampled by `alpha`.
///
/// Places the kernel's main lobe edge so that the first alias image falls on the
/// transition band (Beatty, Nishimura and Pauly's rule).
pub fn kaiser_bessel_shape(width: usize, alpha: f64) -> f64 {
    let j = width as f64;
    let arg = (j / alpha).powi(2) * (alpha - 0.5).powi(2) - 0.8;
    std::f64::consts::PI * arg.max(0.0).sqrt()
}

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0<T: Real>(x: T) -> T {
    let q = x * x * T::lit(0.25);
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = T::one();
    loop {
        term = term * q / (k * k);
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
        k = k + T::one();
    }
    sum
}

#[derive(Debug, Clone, Copy)]
struct Kernel<T> {
    width: usize,
    shape: T,
    norm: T,
}

impl<T: Real> Kernel<T> {
    fn new(width: usize, shape: T) -> Self {
        Self {
            width,
            shape,
            norm: bessel_i0(shape).recip(),
        }
    }

    /// Kernel value at offset `u` grid cells from its centre.
    fn eval(&self, u: T) -> T {
        let half = T::from_count(self.width) * T::lit(0.5);
        if u.abs() > half {
            return T::zero();
        }
        let r = u / half;
        let arg = (T::one() - r * r).max(T::zero()).sqrt();
        bessel_i0(self.shape * arg) * self.norm
    }

    /// Continuous transform `int psi(u) exp(j 2 pi f u) du` at `f` cycles per cell.
    fn transform(&self, f: T) -> T {
        let j = T::from_count(self.width);
        let w = T::PI() * j * f;
        let d = self.shape * self.shape - w * w;
        let core = if d > T::zero() {
            let z = d.sqrt();
            if z < T::lit(1e-6) {
                T::one() + z * z / T::lit(6.0)
            } else {
                z.sinh() / z
            }
        } else if d < T::zero() {
            let z = (-d).sqrt();
            if z < T::lit(1e-6) {
                T::one() - z * z / T::lit(6.0)
            } else {
                z.sin() / z
            }
        } else {
            T::one()
        };
        j * core * self.norm
    }
}

/// Precomputed interpolation geometry for a fixed node set.
#[derive(Clone)]
pub struct NufftPlan<T: Real> {
    nodes: Vec<T>,
    n_uniform: usize,
    grid_len: usize,
    centre: usize,
    kernel: Kernel<T>,
    deapodization: Vec<T>,
    /// First oversampled-grid index touched by each node.
    starts: Vec<usize>,
    /// `nodes.len() x kernel_width` interpolation weights, row-major.
    weights: Vec<T>,
    /// `exp(-j nu centre)` per node.
    phase: Vec<Complex<T>>,
    fft: Arc<dyn Fft<T>>,
    ifft: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for NufftPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NufftPlan")
            .field("n_nodes", &self.nodes.len())
            .field("n_uniform", &self.n_uniform)
            .field("grid_len", &self.grid_len)
            .field("kernel_width", &self.kernel.width)
            .field("kernel_shape", &self.kernel.shape)
            .finish()
    }
}

/// Wraps an angular frequency into `[-pi, pi)`.
pub fn wrap_to_pi<T: Real>(nu: T) -> T {
    let two_pi = T::TAU();
    let mut w = nu - two_pi * ((nu + T::PI()) / two_pi).floor();
    // floor can land exactly on +pi through rounding
    if w >= T::PI() {
        w = w - two_pi;
    }
    if w < -T::PI() {
        w = -T::PI();
    }
    w
}

pub fn nufft_plan<T: Real>(
    nodes: &[T],
    n_uniform: usize,
    options: NufftOptions,
) -> Result<NufftPlan<T>> {
    NufftPlan::new(nodes, n_uniform, options, &mut FftPlanner::new())
}

impl<T: Real> NufftPlan<T> {
    /// Builds a plan, drawing FFT kernels from `planner` so that plans of equal size share them.
    pub fn new(
        nodes: &[T],
        n_uniform: usize,
        options: NufftOptions,
        planner: &mut FftPlanner<T>,
    ) -> Result<Self> {
        let NufftOptions {
            oversampling,
            kernel_width,
        } = options;
        if n_uniform < 8 {
            return Err(Error::InvalidPlan(format!(
                "n_uniform must be at least 8, got {n_uniform}"
            )));
        }
        if !(MIN_OVERSAMPLING..=MAX_OVERSAMPLING).contains(&oversampling) {
            return Err(Error::InvalidPlan(format!(
                "oversampling {oversampling} outside [{MIN_OVERSAMPLING}, {MAX_OVERSAMPLING}]"
            )));
        }
        if !(MIN_KERNEL_WIDTH..=MAX_KERNEL_WIDTH).contains(&kernel_width) {
            return Err(Error::InvalidPlan(format!(
                "kernel width {kernel_width} outside [{MIN_KERNEL_WIDTH}, {MAX_KERNEL_WIDTH}]"
            )));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPlan("non-finite node".into()));
        }

        let mut grid_len = (oversampling * n_uniform as f64).ceil() as usize;
        grid_len += grid_len % 2;
        let centre = n_uniform / 2;
        let kernel = Kernel::new(
            kernel_width,
            T::lit(kaiser_bessel_shape(kernel_width, oversampling)),
        );

        let m = T::from_count(grid_len);
        let deapodization = (0..n_uniform)
            .map(|n| {
                let f = (T::from_count(n) - T::from_count(centre)) / m;
                kernel.transform(f).recip()
            })
            .collect::<Vec<_>>();
        if deapodization.iter().any(|d| !d.is_finite() || *d <= T::zero()) {
            return Err(Error::InvalidPlan(
                "kernel transform vanishes inside the signal band".into(),
            ));
        }

        let nodes: Vec<T> = nodes.iter().map(|&v| wrap_to_pi(v)).collect();
        let half = T::from_count(kernel_width) * T::lit(0.5);
        let cells_per_radian = m / T::TAU();
        let mut starts = Vec::with_capacity(nodes.len());
        let mut weights = Vec::with_capacity(nodes.len() * kernel_width);
        let mut phase = Vec::with_capacity(nodes.len());
        for &nu in &nodes {
            let t = nu * cells_per_radian;
            let first = (t - half).ceil();
            let first_i = first.to_i64().expect("grid coordinate fits i64");
            starts.push(first_i.rem_euclid(grid_len as i64) as usize);
            for j in 0..kernel_width {
                weights.push(kernel.eval(t - first - T::from_count(j)));
            }
            phase.push(Complex::from_polar(T::one(), -nu * T::from_count(centre)));
        }

        Ok(Self {
            nodes,
            n_uniform,
            grid_len,
            centre,
            kernel,
            deapodization,
            starts,
            weights,
            phase,
            fft: planner.plan_fft_forward(grid_len),
            ifft: planner.plan_fft_inverse(grid_len),
        })
    }

    /// Nodes after wrapping into `[-pi, pi)`.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn n_uniform(&self) -> usize {
        self.n_uniform
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn oversampled_len(&self) -> usize {
        self.grid_len
    }

    pub fn kernel_width(&self) -> usize {
        self.kernel.width
    }

    pub fn kernel_shape(&self) -> T {
        self.kernel.shape
    }

    pub fn deapodization(&self) -> &[T] {
        &self.deapodization
    }

    #[inline]
    fn grid_index(&self, n: usize) -> usize {
        (n + self.grid_len - self.centre) % self.grid_len
    }

    /// Evaluates the signal's spectrum at every node.
    pub fn forward(&self, signal: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let mut out = vec![Complex::default(); self.nodes.len()];
        self.forward_into(signal, &mut out)?;
        Ok(out)
    }

    pub fn forward_into(&self, signal: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        check_len("nufft forward input", self.n_uniform, signal.len())?;
        check_len("nufft forward output", self.nodes.len(), out.len())?;
        let mut grid = vec![Complex::default(); self.grid_len];
        for (n, (&s, &d)) in signal.iter().zip(&self.deapodization).enumerate() {
            grid[self.grid_index(n)] = s * d;
        }
        self.fft.process(&mut grid);

        let j = self.kernel.width;
        for (p, o) in out.iter_mut().enumerate() {
            let w = &self.weights[p * j..(p + 1) * j];
            let mut idx = self.starts[p];
            let mut acc = Complex::<T>::default();
            for &wk in w {
                acc = acc + grid[idx] * wk;
                idx += 1;
                if idx == self.grid_len {
                    idx = 0;
                }
            }
            *o = acc * self.phase[p];
        }
        Ok(())
    }

    /// Exact adjoint of [`forward`](Self::forward): spreads node samples back onto the
    /// uniform signal index.
    pub fn adjoint(&self, samples: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let mut out = vec![Complex::default(); self.n_uniform];
        self.adjoint_into(samples, &mut out)?;
        Ok(out)
    }

    pub fn adjoint_into(&self, samples: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        check_len("nufft adjoint input", self.nodes.len(), samples.len())?;
        check_len("nufft adjoint output", self.n_uniform, out.len())?;
        let mut grid = vec![Complex::default(); self.grid_len];
        let j = self.kernel.width;
        for (p, &s) in samples.iter().enumerate() {
            let v = s * self.phase[p].conj();
            let w = &self.weights[p * j..(p + 1) * j];
            let mut idx = self.starts[p];
            for &wk in w {
                grid[idx] = grid[idx] + v * wk;
                idx += 1;
                if idx == self.grid_len {
                    idx = 0;
                }
            }
        }
        self.ifft.process(&mut grid);
        for (n, (o, &d)) in out.iter_mut().zip(&self.deapodization).enumerate() {
            *o = grid[self.grid_index(n)] * d;
        }
        Ok(())
    }
}

pub fn nufft_forward<T: Real>(
    plan: &NufftPlan<T>,
    signal: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    plan.forward(signal)
}

pub fn nufft_adjoint<T: Real>(
    plan: &NufftPlan<T>,
    samples: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    plan.adjoint(samples)
}

/// Direct `O(MN)` evaluation of `sum_n s[n] exp(-j nu n)`; ground truth for the NUFFT.
pub fn ndft_direct<T: Real>(nodes: &[T], signal: &[Complex<T>]) -> Vec<Complex<T>> {
    nodes
        .iter()
        .map(|&nu| {
            signal
                .iter()
                .enumerate()
                .fold(Complex::default(), |acc, (n, &s)| {
                    acc + s * Complex::from_polar(T::one(), -nu * T::from_count(n))
                })
        })
        .collect()
}

/// Direct adjoint sum `sum_m c[m] exp(+j nu_m n)` for `n = 0..n_uniform`.
pub fn ndft_adjoint_direct<T: Real>(
    nodes: &[T],
    samples: &[Complex<T>],
    n_uniform: usize,
) -> Vec<Complex<T>> {
    (0..n_uniform)
        .map(|n| {
            nodes
                .iter()
                .zip(samples)
                .fold(Complex::default(), |acc, (&nu, &c)| {
                    acc + c * Complex::from_polar(T::one(), nu * T::from_count(n))
                })
        })
        .collect()
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::LengthMismatch {
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
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
        (0..n)
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn random_nodes(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        (0..m).map(|_| rng.random_range(-PI..PI)).collect()
    }

    fn max_rel_err(a: &[C], b: &[C]) -> f64 {
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    fn dot(a: &[C], b: &[C]) -> C {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn bessel_i0_reference_values() {
        // Abramowitz & Stegun table 9.8 scaled values
        assert!((bessel_i0(0.0f64) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0f64) - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i0(5.0f64) / 27.239_871_823_604_44 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn kernel_transform_matches_quadrature() {
        let k = Kernel::new(6, kaiser_bessel_shape(6, 2.0));
        for &f in &[0.0, 0.1, 0.25, 0.37] {
            // Simpson on [-3, 3]
            let n = 20_000;
            let h = 6.0 / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let u = -3.0 + i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                s += w * k.eval(u) * (2.0 * PI * f * u).cos();
            }
            s *= h / 3.0;
            assert!((s - k.transform(f)).abs() < 1e-10 * s.abs(), "f={f}");
        }
    }

    #[test]
    fn wraps_into_half_open_interval() {
        for &v in &[PI, -PI, 3.0 * PI, 7.5, -7.5, 0.0, 1e3] {
            let w = wrap_to_pi(v);
            assert!((-PI..PI).contains(&w), "{v} -> {w}");
            let turns = (v - w) / (2.0 * PI);
            assert!((turns - turns.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let nodes = [0.1, 0.2];
        let low = NufftOptions {
            oversampling: 1.0,
            kernel_width: 6,
        };
        assert!(matches!(
            nufft_plan(&nodes, 64, low),
            Err(Error::InvalidPlan(_))
        ));
        let wide = NufftOptions {
            oversampling: 2.0,
            kernel_width: 17,
        };
        assert!(nufft_plan(&nodes, 64, wide).is_err());
        assert!(nufft_plan(&nodes, 4, NufftOptions::default()).is_err());
        assert!(nufft_plan(&[f64::NAN], 64, NufftOptions::default()).is_err());
        let plan = nufft_plan(&nodes, 64, NufftOptions::default()).unwrap();
        assert!(plan.forward(&vec![C::default(); 63]).is_err());
        assert!(plan.adjoint(&vec![C::default(); 3]).is_err());
    }

    #[test]
    fn deapodization_is_positive() {
        for width in 2..=16 {
            for &alpha in &[1.25, 1.5, 2.0, 4.0] {
                let plan = nufft_plan(&[0.0], 64, NufftOptions {
                    oversampling: alpha,
                    kernel_width: width,
                })
                .unwrap();
                assert!(plan.deapodization().iter().all(|&d: &f64| d > 0.0 && d.is_finite()));
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let nodes = random_nodes(&mut rng, 50);
        let plan = nufft_plan(&nodes, 64, NufftOptions::default()).unwrap();
        let mut s = vec![C::default(); 64];
        s[0] = C::new(1.0, 0.0);
        for v in plan.forward(&s).unwrap() {
            // index 0 sits at the band edge, where the width-6 kernel is least accurate
            assert!((v - C::new(1.0, 0.0)).norm() < 2e-5);
        }
        let zero = plan.forward(&vec![C::default(); 64]).unwrap();
        assert!(zero.iter().all(|z| *z == C::default()));
        let zero = plan.adjoint(&vec![C::default(); 50]).unwrap();
        assert!(zero.iter().all(|z| *z == C::default()));
    }

    #[test]
    fn ndft_direct_closed_forms() {
        let n = 16;
        let nodes: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_signal(&mut rng, n);
        let mut dft = s.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut dft);
        assert!(max_rel_err(&ndft_direct(&nodes, &s), &dft) < 1e-12);

        let mut delta = vec![C::default(); n];
        delta[5] = C::new(1.0, 0.0);
        for (v, &nu) in ndft_direct(&nodes, &delta).iter().zip(&nodes) {
            assert!((v - C::from_polar(1.0, -5.0 * nu)).norm() < 1e-12);
        }
    }

    #[test]
    fn ndft_of_conjugate_symmetric_sequence_is_real() {
        // s[n] = conj(s[N-n]) with symmetric nodes gives a real spectrum at nu -> sum over
        // the centred index set; use the centred form via a phase-free construction.
        let n = 17;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let half = random_signal(&mut rng, n / 2 + 1);
        // centred index m = n - 8 in [-8, 8], s(m) = conj(s(-m))
        let mut s = vec![C::default(); n];
        for m in 0..=8 {
            let v = if m == 0 { C::new(half[0].re, 0.0) } else { half[m] };
            s[8 + m] = v;
            s[8 - m] = v.conj();
        }
        let nodes = random_nodes(&mut rng, 20);
        for (v, &nu) in ndft_direct(&nodes, &s).iter().zip(&nodes) {
            // remove the exp(-j nu 8) carrier from the centring shift
            let centred = v * C::from_polar(1.0, 8.0 * nu);
            assert!(centred.im.abs() < 1e-12, "{centred}");
        }
    }

    #[test]
    fn forward_matches_ndft() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let nodes = random_nodes(&mut rng, 100);
        let plan = nufft_plan(&nodes, 128, NufftOptions::default()).unwrap();
        let s = random_signal(&mut rng, 128);
        let err = max_rel_err(&plan.forward(&s).unwrap(), &ndft_direct(&nodes, &s));
        assert!(err < 1e-5, "max relative error {err:e}");
    }

    #[test]
    fn adjoint_matches_direct_gridding() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let nodes = random_nodes(&mut rng, 90);
        let plan = nufft_plan(&nodes, 96, NufftOptions::default()).unwrap();
        let c = random_signal(&mut rng, 90);
        let err = max_rel_err(
            &plan.adjoint(&c).unwrap(),
            &ndft_adjoint_direct(&nodes, &c, 96),
        );
        assert!(err < 1e-5, "max relative error {err:e}");
    }

    #[test]
    fn single_sample_adjoint_is_conjugate_exponential() {
        let nu = 0.731;
        let plan = nufft_plan(&[nu], 64, NufftOptions::default()).unwrap();
        let out = plan.adjoint(&[C::new(1.0, 0.0)]).unwrap();
        for (n, v) in out.iter().enumerate() {
            assert!((v - C::from_polar(1.0, nu * n as f64)).norm() < 2e-5);
        }
    }

    #[test]
    fn dot_product_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &(n, m, width) in &[(64, 40, 6), (128, 200, 4), (33, 77, 9)] {
            let nodes = random_nodes(&mut rng, m);
            let opts = NufftOptions {
                oversampling: 2.0,
                kernel_width: width,
            };
            let plan = nufft_plan(&nodes, n, opts).unwrap();
            let x = random_signal(&mut rng, n);
            let y = random_signal(&mut rng, m);
            let lhs = dot(&plan.forward(&x).unwrap(), &y);
            let rhs = dot(&x, &plan.adjoint(&y).unwrap());
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
                * y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!((lhs - rhs).norm() / norm < 1e-12);
        }
    }

    #[test]
    fn uniform_nodes_reduce_to_dft() {
        let n = 64;
        let nodes: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let plan = nufft_plan(&nodes, n, NufftOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_signal(&mut rng, n);
        let mut dft = s.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut dft);
        let err = max_rel_err(&plan.forward(&s).unwrap(), &dft);
        assert!(err < 1e-5, "{err:e}");
    }

    #[test]
    fn accuracy_improves_with_kernel_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let nodes = random_nodes(&mut rng, 150);
        let s = random_signal(&mut rng, 128);
        let exact = ndft_direct(&nodes, &s);
        let mut prev = f64::INFINITY;
        for width in 4..=10 {
            let plan = nufft_plan(&nodes, 128, NufftOptions {
                oversampling: 2.0,
                kernel_width: width,
            })
            .unwrap();
            let err = max_rel_err(&plan.forward(&s).unwrap(), &exact);
            assert!(err < prev, "width {width}: {err:e} >= {prev:e}");
            prev = err;
        }
    }

    #[test]
    fn single_precision_plan_works() {
        let nodes: Vec<f32> = vec![-3.0, -1.0, 0.5, 2.0, 3.1];
        let plan = nufft_plan(&nodes, 32, NufftOptions::default()).unwrap();
        let s: Vec<Complex<f32>> = (0..32).map(|n| Complex::new((n as f32).sin(), 0.0)).collect();
        let approx = plan.forward(&s).unwrap();
        let exact = ndft_direct(&nodes, &s);
        for (a, e) in approx.iter().zip(&exact) {
            assert!((a - e).norm() < 1e-3);
        }
    }
}
