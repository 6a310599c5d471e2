#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;

pub fn random_complex(shape: (usize, usize), seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn(shape, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_real_image(shape: (usize, usize), seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn(shape, |_| C64::new(rng.random_range(-1.0..1.0), 0.0))
}

pub fn random_real(shape: (usize, usize), seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn(shape, |_| rng.random_range(-1.0..1.0))
}

pub fn norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_real(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn real_inner(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Brute-force isotropic TV written independently of the library.
pub fn tv_brute(x: &Array2<C64>) -> f64 {
    let (r, c) = x.dim();
    let mut s = 0.0;
    for i in 0..r {
        for j in 0..c {
            let dv = if i + 1 < r { x[[i + 1, j]] - x[[i, j]] } else { C64::new(0.0, 0.0) };
            let dh = if j + 1 < c { x[[i, j + 1]] - x[[i, j]] } else { C64::new(0.0, 0.0) };
            s += (dv.norm_sqr() + dh.norm_sqr()).sqrt();
        }
    }
    s
}

pub fn tv_objective(x: &Array2<C64>, v: &Array2<C64>, tau: f64) -> f64 {
    0.5 * x.iter().zip(v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() + tau * tv_brute(x)
}

/// Minimizes `0.5 ||x - v||^2 + tau sum sqrt(|dx|^2 + |dy|^2 + eps)` by plain gradient
/// descent, continuing the smoothing down to `eps_final`.
pub fn smoothed_tv_descent(v: &Array2<C64>, tau: f64, eps_final: f64) -> Array2<C64> {
    let (r, c) = v.dim();
    let mut x = v.clone();
    let mut eps = 1e-2;
    loop {
        let last = eps <= eps_final;
        let step = 1.0 / (1.0 + 8.0 * tau / eps.sqrt());
        let iters = if last { 400_000 } else { 40_000 };
        for _ in 0..iters {
            let mut g = &x - v;
            for i in 0..r {
                for j in 0..c {
                    let dv = if i + 1 < r { x[[i + 1, j]] - x[[i, j]] } else { C64::new(0.0, 0.0) };
                    let dh = if j + 1 < c { x[[i, j + 1]] - x[[i, j]] } else { C64::new(0.0, 0.0) };
                    let w = tau / (dv.norm_sqr() + dh.norm_sqr() + eps).sqrt();
                    g[[i, j]] -= (dv + dh) * w;
                    if i + 1 < r {
                        g[[i + 1, j]] += dv * w;
                    }
                    if j + 1 < c {
                        g[[i, j + 1]] += dh * w;
                    }
                }
            }
            x.zip_mut_with(&g, |a, b| *a -= b * step);
        }
        if last {
            return x;
        }
        eps = (eps * 0.1).max(eps_final);
    }
}

/// Direct-summation evaluation of the measurement model, no FFTs or gridding.
pub fn brute_force_forward(
    x: &Array2<C64>,
    config: &isam_mbir::model::ModelConfig<f64>,
    mask: &isam_mbir::image::Mask,
) -> Array2<f64> {
    use std::f64::consts::TAU;
    let g = &config.grid;
    let (n_depth, n_lat) = x.dim();
    let n_axial = g.n_axial();
    let dz = g.depth_pitch();
    let z_focus = config.focal_depth * dz;
    let qs = g.lateral_frequencies();
    let cis = |t: f64| C64::from_polar(1.0, t);

    // lateral DFT
    let xl = Array2::from_shape_fn((n_depth, n_lat), |(n, l)| {
        (0..n_lat).map(|m| x[[n, m]] * cis(-TAU * (l * m) as f64 / n_lat as f64)).sum::<C64>()
    });
    // resampling onto beta(k_2i, q_l)
    let mut v = Array2::<C64>::zeros((n_depth, n_lat));
    for l in 0..n_lat {
        for i in 0..n_depth {
            let k = g.k(2 * i);
            let disc = 4.0 * k * k - qs[l] * qs[l];
            if disc < 0.0 {
                continue;
            }
            let beta = disc.sqrt();
            let sum: C64 = (0..n_depth).map(|n| xl[[n, l]] * cis(-beta * dz * n as f64)).sum();
            v[[i, l]] = sum * cis((beta - 2.0 * k) * z_focus);
        }
    }
    // lateral inverse DFT, then depth inverse DFT
    let u_lat = Array2::from_shape_fn((n_depth, n_lat), |(i, m)| {
        (0..n_lat).map(|l| v[[i, l]] * cis(TAU * (l * m) as f64 / n_lat as f64)).sum::<C64>() / n_lat as f64
    });
    let u = Array2::from_shape_fn((n_depth, n_lat), |(n, m)| {
        (0..n_depth).map(|i| u_lat[[i, m]] * cis(TAU * (i * n) as f64 / n_depth as f64)).sum::<C64>()
            / n_depth as f64
    });
    let omega = isam_mbir::model::dispersion_phase(config);
    Array2::from_shape_fn((n_axial, n_lat), |(kk, m)| {
        if !mask.get(kk) {
            return 0.0;
        }
        let w: C64 = (0..n_depth).map(|n| u[[n, m]] * cis(-TAU * (kk * n) as f64 / n_axial as f64)).sum();
        (cis(omega[kk]) * w).re
    })
}
