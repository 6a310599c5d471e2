//! Accelerated proximal gradient (FISTA) for `0.5 ||Phi x - y||^2 + lambda R(x)`.

use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::check_shape;
use crate::model::MeasurementOperator;
use crate::regularize::RegSpec;
use crate::scalar::Real;

/// Starting point of the iteration.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Initialization<T> {
    /// `Phi^*(y)`.
    #[default]
    Adjoint,
    Zero,
    Given(Array2<Complex<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub max_iters: usize,
    /// Gradient step; estimated from the operator norm when absent.
    pub step_delta: Option<T>,
    pub power_iters: usize,
    /// Evaluate the full objective after every iteration (needed for best-iterate tracking).
    pub record_objective: bool,
    pub init: Initialization<T>,
    /// Seed of the power-iteration start vector.
    pub seed: u64,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            step_delta: None,
            power_iters: 15,
            record_objective: true,
            init: Initialization::Adjoint,
            seed: 0,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn with_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_step(mut self, step: T) -> Self {
        self.step_delta = Some(step);
        self
    }

    pub fn with_init(mut self, init: Initialization<T>) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if let Some(d) = self.step_delta {
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "step must be positive and finite, got {d}"
                )));
            }
        }
        if self.step_delta.is_none() && self.power_iters < 3 {
            return Err(Error::InvalidParameter(
                "power iteration needs at least 3 steps".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    /// Objective after each iteration (empty when recording is disabled).
    pub objective_trace: Vec<T>,
    pub final_iterate: Array2<Complex<T>>,
    /// Iterate with the lowest recorded objective (the final one when not recording).
    pub best_iterate: Array2<Complex<T>>,
    pub best_objective: Option<T>,
    pub step_used: T,
    pub iterations_run: usize,
}

/// `(1 + sqrt(1 + 4 t^2)) / 2`.
pub fn momentum_update<T: Real>(t: T) -> T {
    (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * T::lit(0.5)
}

/// Largest eigenvalue of `Phi^* Phi` by power iteration from a seeded random start.
pub fn estimate_lipschitz<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    power_iters: usize,
    seed: u64,
) -> Result<T> {
    if power_iters < 3 {
        return Err(Error::InvalidParameter(
            "power iteration needs at least 3 steps".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array2::from_shape_fn(op.image_shape(), |_| {
        Complex::new(
            T::lit(rng.random_range(-1.0..1.0)),
            T::lit(rng.random_range(-1.0..1.0)),
        )
    });
    let mut estimate = T::zero();
    for _ in 0..power_iters {
        let n = norm(&v);
        if !(n > T::zero()) {
            return Err(Error::ZeroOperator);
        }
        v.mapv_inplace(|z| z / n);
        let w = op.adjoint(&op.forward(&v)?)?;
        estimate = inner(&v, &w);
        v = w;
    }
    let tiny = T::epsilon() * T::epsilon();
    if !(estimate > tiny) || !estimate.is_finite() {
        return Err(Error::ZeroOperator);
    }
    Ok(estimate)
}

/// Step `0.9 / L` from the power-iteration estimate of the Lipschitz constant.
pub fn estimate_step<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    power_iters: usize,
    seed: u64,
) -> Result<T> {
    Ok(T::lit(0.9) / estimate_lipschitz(op, power_iters, seed)?)
}

/// FISTA with a fixed iteration count and no restart.
pub fn fista<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    y: &Array2<T>,
    reg: &RegSpec<T>,
    config: &SolverConfig<T>,
) -> Result<SolveReport<T>> {
    run(op, y, reg, config, true)
}

/// Unaccelerated proximal gradient (ISTA), for comparison.
pub fn proximal_gradient<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    y: &Array2<T>,
    reg: &RegSpec<T>,
    config: &SolverConfig<T>,
) -> Result<SolveReport<T>> {
    run(op, y, reg, config, false)
}

fn run<T: Real, Op: MeasurementOperator<T> + ?Sized>(
    op: &Op,
    y: &Array2<T>,
    reg: &RegSpec<T>,
    config: &SolverConfig<T>,
    accelerate: bool,
) -> Result<SolveReport<T>> {
    config.validate()?;
    reg.validate(op.image_shape())?;
    check_shape("measurements", op.data_shape(), y.dim())?;
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("measurements"));
    }
    let step = match config.step_delta {
        Some(d) => d,
        None => estimate_step(op, config.power_iters, config.seed)?,
    };

    let x0 = match &config.init {
        Initialization::Adjoint => op.adjoint(y)?,
        Initialization::Zero => Array2::zeros(op.image_shape()),
        Initialization::Given(x) => {
            check_shape("initial iterate", op.image_shape(), x.dim())?;
            x.clone()
        }
    };

    let half = T::lit(0.5);
    let objective = |phi_z: &Array2<T>, z: &Array2<Complex<T>>| -> Result<T> {
        let data = phi_z
            .iter()
            .zip(y.iter())
            .fold(T::zero(), |s, (a, b)| s + (*a - *b) * (*a - *b));
        Ok(half * data + reg.value(z)?)
    };

    // `point` is where the gradient is taken; `prev` is the previous prox output.
    let mut phi_prev = op.forward(&x0)?;
    let mut prev = x0.clone();
    let mut point = x0;
    let mut phi_point = phi_prev.clone();
    let mut t = T::one();
    let mut trace = Vec::with_capacity(if config.record_objective { config.max_iters } else { 0 });
    let mut best: Option<(T, Array2<Complex<T>>)> = None;
    let step_c = Complex::new(step, T::zero());

    for _ in 0..config.max_iters {
        let mut residual = phi_point;
        residual.zip_mut_with(y, |a, &b| *a = *a - b);
        let grad = op.adjoint(&residual)?;
        let mut descent = point;
        descent.zip_mut_with(&grad, |a, &g| *a = *a - g * step_c);
        let z = reg.prox(&descent, step)?;
        let phi_z = op.forward(&z)?;

        if config.record_objective {
            let f = objective(&phi_z, &z)?;
            if !f.is_finite() {
                return Err(Error::NonFinite("objective"));
            }
            trace.push(f);
            if best.as_ref().is_none_or(|(b, _)| f < *b) {
                best = Some((f, z.clone()));
            }
        }

        if accelerate {
            let t_next = momentum_update(t);
            let w = (t - T::one()) / t_next;
            let wc = Complex::new(w, T::zero());
            let mut next = z.clone();
            next.zip_mut_with(&prev, |a, &p| *a = *a + (*a - p) * wc);
            // Phi is linear, so the extrapolated image's measurements follow directly
            let mut phi_next = phi_z.clone();
            phi_next.zip_mut_with(&phi_prev, |a, &p| *a = *a + (*a - p) * w);
            point = next;
            phi_point = phi_next;
            t = t_next;
        } else {
            point = z.clone();
            phi_point = phi_z.clone();
        }
        prev = z;
        phi_prev = phi_z;
    }

    let (best_objective, best_iterate) = match best {
        Some((f, x)) => (Some(f), x),
        None => (None, prev.clone()),
    };
    Ok(SolveReport {
        objective_trace: trace,
        final_iterate: prev,
        best_iterate,
        best_objective,
        step_used: step,
        iterations_run: config.max_iters,
    })
}

/// Toy operator mapping a complex image to its stacked real and imaginary parts.
///
/// `Phi^* Phi` is the identity, which makes closed-form solutions available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealImagSplit {
    pub shape: (usize, usize),
}

impl<T: Real> MeasurementOperator<T> for RealImagSplit {
    fn image_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn data_shape(&self) -> (usize, usize) {
        (2 * self.shape.0, self.shape.1)
    }

    fn forward(&self, x: &Array2<Complex<T>>) -> Result<Array2<T>> {
        check_shape("image", self.shape, x.dim())?;
        let rows = self.shape.0;
        Ok(Array2::from_shape_fn((2 * rows, self.shape.1), |(i, j)| {
            if i < rows {
                x[[i, j]].re
            } else {
                x[[i - rows, j]].im
            }
        }))
    }

    fn adjoint(&self, y: &Array2<T>) -> Result<Array2<Complex<T>>> {
        check_shape("measurements", (2 * self.shape.0, self.shape.1), y.dim())?;
        let rows = self.shape.0;
        Ok(Array2::from_shape_fn(self.shape, |(i, j)| {
            Complex::new(y[[i, j]], y[[i + rows, j]])
        }))
    }
}

fn norm<T: Real>(a: &Array2<Complex<T>>) -> T {
    a.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

fn inner<T: Real>(a: &Array2<Complex<T>>, b: &Array2<Complex<T>>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |s, (x, y)| s + x.re * y.re + x.im * y.im)
}
