mod common;

use common::*;
use isam_mbir::grid::AcquisitionGrid;
use isam_mbir::image::{ComplexImage, Mask, Spectrogram};
use isam_mbir::mask::{make_mask, MaskScheme};
use isam_mbir::model::{
    adjoint, data_fidelity, fidelity, fidelity_gradient, forward, gradient, IsamOperator,
    MeasurementOperator, ModelConfig,
};
use ndarray::Array2;
use num_complex::Complex;

fn config(size: usize) -> ModelConfig<f64> {
    let grid = AcquisitionGrid::sd_oct_830(2 * size, size, 3.0).unwrap();
    ModelConfig::new(grid).with_dispersion(150.0, 300.0)
}

fn schemes() -> [MaskScheme; 4] {
    [
        MaskScheme::Full,
        MaskScheme::Random(0.5),
        MaskScheme::Equispaced(2),
        MaskScheme::Partial(0.5),
    ]
}

#[test]
fn fidelity_matches_direct_summation() {
    let cfg = config(16);
    for (seed, scheme) in schemes().into_iter().enumerate() {
        let mask = make_mask(32, scheme, 9).unwrap();
        let x = random_complex((16, 16), seed as u64);
        let y = random_real((32, 16), 100 + seed as u64);
        let op = IsamOperator::new(cfg.clone(), mask.clone()).unwrap();
        let modeled = brute_force_forward(&x, &cfg, &mask);
        let fast = op.apply(&x).unwrap();
        let err = fast.iter().zip(&modeled).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = modeled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err / scale < 1e-5, "{scheme}: relative forward error {}", err / scale);

        let mut masked_y = y.clone();
        mask.apply(&mut masked_y);
        let oracle = 0.5 * modeled.iter().zip(&masked_y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let f = fidelity(&op, &x, &masked_y).unwrap();
        assert!((f - oracle).abs() / oracle < 1e-5, "{scheme}: {f} vs {oracle}");
    }
}

#[test]
fn gradient_matches_central_differences() {
    let cfg = config(16);
    let mask = make_mask(32, MaskScheme::Random(0.5), 4).unwrap();
    let op = IsamOperator::new(cfg, mask.clone()).unwrap();
    let x = random_complex((16, 16), 1);
    let mut y = random_real((32, 16), 2);
    mask.apply(&mut y);
    let g = fidelity_gradient(&op, &x, &y).unwrap();
    let h = 1e-4;
    for seed in 0..10 {
        let d = random_complex((16, 16), 50 + seed);
        let plus = &x + &d.mapv(|v| v * h);
        let minus = &x - &d.mapv(|v| v * h);
        let fd = (fidelity(&op, &plus, &y).unwrap() - fidelity(&op, &minus, &y).unwrap()) / (2.0 * h);
        let analytic = real_inner(&g, &d);
        let rel = (fd - analytic).abs() / analytic.abs().max(1e-300);
        assert!(rel < 1e-5, "direction {seed}: relative error {rel}");
    }
}

#[test]
fn fidelity_lies_below_its_chords() {
    let cfg = config(16);
    let op = IsamOperator::new(cfg, make_mask(32, MaskScheme::Equispaced(2), 0).unwrap()).unwrap();
    let y = random_real((32, 16), 8);
    for seed in 0..3 {
        let a = random_complex((16, 16), 10 + seed);
        let b = random_complex((16, 16), 20 + seed);
        let (fa, fb) = (fidelity(&op, &a, &y).unwrap(), fidelity(&op, &b, &y).unwrap());
        for s in 0..=10 {
            let t = s as f64 / 10.0;
            let p = a.mapv(|v| v * t) + b.mapv(|v| v * (1.0 - t));
            let f = fidelity(&op, &p, &y).unwrap();
            assert!(f <= t * fa + (1.0 - t) * fb + 1e-10 * (fa + fb), "t = {t}");
        }
    }
}

#[test]
fn one_pixel_minimizer_has_vanishing_gradient() {
    // model restricted to a single pixel value c: f(c) = 0.5 |c a - y|^2 with a = Phi(e)
    let cfg = config(8);
    let op = IsamOperator::new(cfg, Mask::full(16)).unwrap();
    let mut e = Array2::<Complex<f64>>::zeros((8, 8));
    e[[3, 4]] = Complex::new(1.0, 0.0);
    let a_re = op.apply(&e).unwrap();
    e[[3, 4]] = Complex::new(0.0, 1.0);
    let a_im = op.apply(&e).unwrap();
    let y = random_real((16, 8), 3);
    // normal equations of the 2x2 real least-squares problem
    let dot = |p: &Array2<f64>, q: &Array2<f64>| p.iter().zip(q).map(|(u, v)| u * v).sum::<f64>();
    let (m11, m12, m22) = (dot(&a_re, &a_re), dot(&a_re, &a_im), dot(&a_im, &a_im));
    let (b1, b2) = (dot(&a_re, &y), dot(&a_im, &y));
    let det = m11 * m22 - m12 * m12;
    let c = Complex::new((m22 * b1 - m12 * b2) / det, (m11 * b2 - m12 * b1) / det);
    let mut x = Array2::<Complex<f64>>::zeros((8, 8));
    x[[3, 4]] = c;
    let g = fidelity_gradient(&op, &x, &y).unwrap();
    assert!(g[[3, 4]].norm() < 1e-8, "{}", g[[3, 4]]);
}

#[test]
fn adjoint_identity_for_every_scheme() {
    let cfg = config(32);
    for (seed, scheme) in schemes().into_iter().enumerate() {
        let op = IsamOperator::new(cfg.clone(), make_mask(64, scheme, 3).unwrap()).unwrap();
        let x = random_complex((32, 32), seed as u64);
        let y = random_real((64, 32), 10 + seed as u64);
        let lhs: f64 = op.forward(&x).unwrap().iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs = real_inner(&x, &op.adjoint(&y).unwrap());
        let rel = (lhs - rhs).abs() / (norm(&x) * norm_real(&y));
        assert!(rel < 1e-12, "{scheme}: {rel}");
    }
}

#[test]
fn typed_wrappers_agree_with_the_operator() {
    let cfg = config(16);
    let grid = cfg.grid.clone();
    let mask = make_mask(32, MaskScheme::Partial(0.5), 0).unwrap();
    let x = ComplexImage::new(random_complex((16, 16), 4), grid.clone()).unwrap();
    let y = forward(&x, &mask, &cfg).unwrap();
    assert_eq!(y.mask, mask);
    assert!(data_fidelity(&x, &y, &cfg).unwrap() < 1e-20);
    let g = gradient(&x, &y, &cfg).unwrap();
    assert!(g.data.iter().all(|z| z.norm() < 1e-10));

    let zero = ComplexImage::zeros(grid.clone());
    let expected = 0.5 * y.data.iter().map(|v| v * v).sum::<f64>();
    assert!((data_fidelity(&zero, &y, &cfg).unwrap() - expected).abs() < 1e-12 * expected);

    let op = IsamOperator::new(cfg.clone(), mask).unwrap();
    assert_eq!(adjoint(&y, &cfg).unwrap().data, op.apply_adjoint(&y.data).unwrap());

    let other = AcquisitionGrid::sd_oct_830(32, 16, 5.0).unwrap();
    let foreign = Spectrogram::fully_sampled(y.data.clone(), other).unwrap();
    assert!(data_fidelity(&x, &foreign, &cfg).is_err());
}
