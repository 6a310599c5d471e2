//! Isotropic total variation and its proximal operator.

use ndarray::Array2;
use num_complex::Complex;

use super::BoxConstraint;
use crate::error::{Error, Result};
use crate::scalar::Real;

type Field<T> = Array2<Complex<T>>;

/// Inner-solver settings for [`prox_tv_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvProxOptions<T> {
    pub inner_iters: usize,
    /// Stop early once the duality gap falls below `gap_tol * (1 + primal)`,
    /// checked every [`GAP_CHECK_INTERVAL`] iterations.
    pub gap_tol: Option<T>,
}

impl<T: Real> Default for TvProxOptions<T> {
    fn default() -> Self {
        Self {
            inner_iters: 20,
            gap_tol: Some(T::lit(1e-4)),
        }
    }
}

/// Inner iterations between duality-gap evaluations.
pub const GAP_CHECK_INTERVAL: usize = 5;

/// Result of a TV prox evaluation.
#[derive(Debug, Clone)]
pub struct TvProxOutcome<T> {
    pub image: Field<T>,
    pub iterations: usize,
    pub gap: T,
}

/// Forward differences along rows and columns of a row-major `rows x cols` field,
/// zero at the last row/column.
fn gradient_into<T: Real>(x: &[Complex<T>], cols: usize, dr: &mut [Complex<T>], dc: &mut [Complex<T>]) {
    let n = x.len();
    for k in 0..n {
        let v = x[k];
        dr[k] = if k + cols < n { x[k + cols] - v } else { Complex::default() };
        dc[k] = if (k + 1) % cols != 0 { x[k + 1] - v } else { Complex::default() };
    }
}

/// Adjoint of [`gradient_into`] (negative divergence).
fn gradient_adjoint_into<T: Real>(pr: &[Complex<T>], pc: &[Complex<T>], cols: usize, out: &mut [Complex<T>]) {
    let n = pr.len();
    for k in 0..n {
        let j = k % cols;
        let mut acc = Complex::default();
        if k + cols < n {
            acc = acc - pr[k];
        }
        if k >= cols {
            acc = acc + pr[k - cols];
        }
        if j + 1 < cols {
            acc = acc - pc[k];
        }
        if j > 0 {
            acc = acc + pc[k - 1];
        }
        out[k] = acc;
    }
}

#[cfg(test)]
fn gradient<T: Real>(x: &Field<T>) -> (Field<T>, Field<T>) {
    let x = x.as_standard_layout();
    let (r, c) = x.dim();
    let mut dr = Array2::zeros((r, c));
    let mut dc = Array2::zeros((r, c));
    if c > 0 {
        gradient_into(
            x.as_slice().expect("standard layout"),
            c,
            dr.as_slice_mut().expect("fresh array"),
            dc.as_slice_mut().expect("fresh array"),
        );
    }
    (dr, dc)
}

#[cfg(test)]
fn gradient_adjoint<T: Real>(pr: &Field<T>, pc: &Field<T>) -> Field<T> {
    let (pr, pc) = (pr.as_standard_layout(), pc.as_standard_layout());
    let mut out = Array2::zeros(pr.dim());
    gradient_adjoint_into(
        pr.as_slice().expect("standard layout"),
        pc.as_slice().expect("standard layout"),
        pr.ncols(),
        out.as_slice_mut().expect("fresh array"),
    );
    out
}

fn tv_of_slice<T: Real>(x: &[Complex<T>], cols: usize) -> T {
    let n = x.len();
    let mut s = T::zero();
    for k in 0..n {
        let v = x[k];
        let dr = if k + cols < n { (x[k + cols] - v).norm_sqr() } else { T::zero() };
        let dc = if (k + 1) % cols != 0 { (x[k + 1] - v).norm_sqr() } else { T::zero() };
        s = s + (dr + dc).sqrt();
    }
    s
}

/// `sum sqrt(|dx|^2 + |dy|^2)` with complex moduli.
pub fn tv_value<T: Real>(x: &Field<T>) -> T {
    if x.is_empty() {
        return T::zero();
    }
    let x = x.as_standard_layout();
    tv_of_slice(x.as_slice().expect("standard layout"), x.ncols())
}

/// `argmin 0.5 ||x - v||^2 + tau TV(x)` by a fixed number of dual fast projected
/// gradient steps.
pub fn prox_tv<T: Real>(v: &Field<T>, tau: T, inner_iters: usize) -> Result<Field<T>> {
    let opts = TvProxOptions {
        inner_iters,
        gap_tol: None,
    };
    Ok(prox_tv_with(v, tau, &opts, None)?.image)
}

/// TV prox restricted to a box, with optional duality-gap stopping.
pub fn prox_tv_with<T: Real>(
    v: &Field<T>,
    tau: T,
    opts: &TvProxOptions<T>,
    bounds: Option<&BoxConstraint<T>>,
) -> Result<TvProxOutcome<T>> {
    if !(tau >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "TV weight must be nonnegative, got {tau}"
        )));
    }
    if opts.inner_iters == 0 {
        return Err(Error::InvalidParameter(
            "TV prox needs at least one inner iteration".into(),
        ));
    }
    if let Some(b) = bounds {
        b.validate()?;
    }
    if tau == T::zero() || v.is_empty() {
        let image = match bounds {
            Some(b) => b.project(v),
            None => v.clone(),
        };
        return Ok(TvProxOutcome {
            image,
            iterations: 0,
            gap: T::zero(),
        });
    }

    let shape = v.dim();
    let cols = shape.1;
    let v_std = v.as_standard_layout();
    let v = v_std.as_slice().expect("standard layout");
    let n = v.len();
    let half = T::lit(0.5);
    let step = (T::lit(8.0) * tau).recip();
    let sq = |a: &[Complex<T>]| a.iter().fold(T::zero(), |s, z| s + z.norm_sqr());

    // w = v - tau * div-adjoint(p); x = box projection of w, written into `x`
    let primal_into = |p_r: &[Complex<T>], p_c: &[Complex<T>], w: &mut [Complex<T>], x: &mut [Complex<T>]| {
        gradient_adjoint_into(p_r, p_c, cols, w);
        for (a, &b) in w.iter_mut().zip(v) {
            *a = b - *a * tau;
        }
        match bounds {
            Some(b) => {
                for (xi, &wi) in x.iter_mut().zip(w.iter()) {
                    *xi = b.project_value(wi);
                }
            }
            None => x.copy_from_slice(w),
        }
    };
    let gap_of = |w: &[Complex<T>], x: &[Complex<T>]| -> T {
        let (mut fit, mut off) = (T::zero(), T::zero());
        for ((&xi, &vi), &wi) in x.iter().zip(v).zip(w) {
            fit = fit + (xi - vi).norm_sqr();
            off = off + (xi - wi).norm_sqr();
        }
        let primal = half * fit + tau * tv_of_slice(x, cols);
        let dual = half * sq(v) - half * sq(w) + half * off;
        (primal - dual) / (T::one() + primal.abs())
    };

    let zero = Complex::default();
    let mut p_r = vec![zero; n];
    let mut p_c = vec![zero; n];
    let mut r_r = vec![zero; n];
    let mut r_c = vec![zero; n];
    let mut w = vec![zero; n];
    let mut x = vec![zero; n];
    let mut g_r = vec![zero; n];
    let mut g_c = vec![zero; n];
    let mut t = T::one();
    let mut iterations = 0;
    let mut gap = T::nan();
    for _ in 0..opts.inner_iters {
        iterations += 1;
        primal_into(&r_r, &r_c, &mut w, &mut x);
        gradient_into(&x, cols, &mut g_r, &mut g_c);
        let t_next = (T::one() + (T::one() + T::lit(4.0) * t * t).sqrt()) * half;
        let m = (t - T::one()) / t_next;
        for k in 0..n {
            let mut a = r_r[k] + g_r[k] * step;
            let mut b = r_c[k] + g_c[k] * step;
            // project each dual pair onto the unit ball
            let len = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if len > T::one() {
                a = a / len;
                b = b / len;
            }
            r_r[k] = a + (a - p_r[k]) * m;
            r_c[k] = b + (b - p_c[k]) * m;
            p_r[k] = a;
            p_c[k] = b;
        }
        t = t_next;
        let last = iterations == opts.inner_iters;
        if let (Some(tol), true) = (opts.gap_tol, iterations % GAP_CHECK_INTERVAL == 0 && !last) {
            primal_into(&p_r, &p_c, &mut w, &mut x);
            gap = gap_of(&w, &x);
            if gap <= tol {
                break;
            }
        }
    }
    primal_into(&p_r, &p_c, &mut w, &mut x);
    if opts.gap_tol.is_some() {
        gap = gap_of(&w, &x);
    }
    Ok(TvProxOutcome {
        image: Array2::from_shape_vec(shape, x).expect("length matches shape"),
        iterations,
        gap,
    })
}
