//! Spectral Hilbert transform and the conjugate analytic signal.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Reusable FFT pair for computing `A(z) = Re(z) - j H(Re z)` on fixed-length vectors.
#[derive(Clone)]
pub struct AnalyticConjugate<T: Real> {
    len: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> AnalyticConjugate<T> {
    pub fn new(len: usize, planner: &mut FftPlanner<T>) -> Self {
        Self {
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Replaces `buf` with the conjugate analytic signal of its real part.
    ///
    /// DC and (for even lengths) Nyquist pass at unit weight, negative frequencies
    /// are doubled and positive frequencies removed, so `cos -> exp(-j theta)`.
    pub fn apply_in_place(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.len, "analytic signal length");
        let n = self.len;
        if n == 0 {
            return;
        }
        for z in buf.iter_mut() {
            *z = Complex::new(z.re, T::zero());
        }
        self.fwd.process(buf);
        let two = T::lit(2.0);
        let positive_end = n.div_ceil(2); // exclusive; bins 1..positive_end are positive
        for (f, z) in buf.iter_mut().enumerate() {
            if f == 0 || (n % 2 == 0 && f == n / 2) {
                continue;
            }
            if f < positive_end {
                *z = Complex::default();
            } else {
                *z = *z * two;
            }
        }
        self.inv.process(buf);
        let scale = T::from_count(n).recip();
        for z in buf.iter_mut() {
            *z = *z * scale;
        }
    }
}

/// Conjugate analytic signal `Re(z) - j H(Re z)` of a vector.
pub fn analytic_conjugate<T: Real>(z: &[Complex<T>]) -> Vec<Complex<T>> {
    let op = AnalyticConjugate::new(z.len(), &mut FftPlanner::new());
    let mut buf = z.to_vec();
    op.apply_in_place(&mut buf);
    buf
}

/// Discrete Hilbert transform of a real sequence (`cos -> sin`).
pub fn hilbert<T: Real>(x: &[T]) -> Vec<T> {
    let z: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
    analytic_conjugate(&z).into_iter().map(|a| -a.im).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cosine_maps_to_negative_exponential() {
        for &n in &[64usize, 63] {
            let theta: Vec<f64> = (0..n).map(|i| 2.0 * PI * 5.0 * i as f64 / n as f64).collect();
            let z: Vec<Complex<f64>> = theta.iter().map(|t| Complex::new(t.cos(), 0.0)).collect();
            let a = analytic_conjugate(&z);
            for (v, t) in a.iter().zip(&theta) {
                assert!((v - Complex::from_polar(1.0, -t)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_and_constant_inputs() {
        let zero = vec![Complex::<f64>::default(); 16];
        assert!(analytic_conjugate(&zero).iter().all(|v| v.norm() == 0.0));
        let c = vec![Complex::new(2.5, 0.0); 16];
        for v in analytic_conjugate(&c) {
            assert!((v - Complex::new(2.5, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn imaginary_input_is_ignored() {
        let z: Vec<Complex<f64>> = (0..32)
            .map(|i| Complex::new((i as f64 * 0.3).sin(), (i as f64).cos()))
            .collect();
        let re: Vec<Complex<f64>> = z.iter().map(|v| Complex::new(v.re, 0.0)).collect();
        let a = analytic_conjugate(&z);
        let b = analytic_conjugate(&re);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn real_part_is_preserved() {
        let z: Vec<Complex<f64>> = (0..40)
            .map(|i| Complex::new(((i * i) as f64 * 0.07).sin(), 0.0))
            .collect();
        for (a, v) in analytic_conjugate(&z).iter().zip(&z) {
            assert!((a.re - v.re).abs() < 1e-13);
        }
    }

    #[test]
    fn hilbert_of_sine_is_negative_cosine() {
        let x: Vec<f64> = (0..128).map(|i| (2.0 * PI * 3.0 * i as f64 / 128.0).sin()).collect();
        for (i, h) in hilbert(&x).iter().enumerate() {
            let expect = -(2.0 * PI * 3.0 * i as f64 / 128.0).cos();
            assert!((h - expect).abs() < 1e-12);
        }
    }
}
