mod common;

use isam_mbir::evaluation::{simulate_phantom, NoiseLevel, PhantomSpec};
use isam_mbir::image::Mask;
use isam_mbir::mask::{make_mask, MaskScheme};
use isam_mbir::model::{fidelity, IsamOperator};
use isam_mbir::regularize::{RegKind, RegSpec};
use isam_mbir::solver::{
    estimate_lipschitz, estimate_step, fista, proximal_gradient, Initialization, SolverConfig,
};

fn phantom_op(size: usize, noise: NoiseLevel, scheme: MaskScheme) -> (IsamOperator<f64>, ndarray::Array2<f64>) {
    let spec = PhantomSpec::with_size(size).with_seed(11).with_noise(noise);
    let cfg = spec.model_config::<f64>().unwrap();
    let p = simulate_phantom(&spec, &cfg).unwrap();
    let mask = make_mask(2 * size, scheme, 1).unwrap();
    let mut y = p.measurements.data;
    mask.apply(&mut y);
    (IsamOperator::new(p.config, mask).unwrap(), y)
}

#[test]
fn accelerated_fidelity_tracks_long_gradient_run() {
    let (op, y) = phantom_op(64, NoiseLevel::SnrDb(25.0), MaskScheme::Random(0.5));
    let none = RegSpec::new(RegKind::IdentityL1, 0.0);
    let fast = fista(&op, &y, &none, &SolverConfig::default()).unwrap();
    let slow = proximal_gradient(&op, &y, &none, &SolverConfig::default().with_iters(1000)).unwrap();
    let best_fast = fast.best_objective.unwrap();
    let best_slow = slow.best_objective.unwrap();
    assert!(best_fast <= 1.01 * best_slow, "{best_fast} vs {best_slow}");
}

#[test]
fn acceleration_beats_plain_proximal_gradient() {
    let (op, y) = phantom_op(64, NoiseLevel::SnrDb(25.0), MaskScheme::Equispaced(2));
    for kind in [RegKind::TvIso, RegKind::DtcwtL1, RegKind::IdentityL1] {
        let reg = RegSpec::new(kind, 1e-2);
        let cfg = SolverConfig::default();
        let a = fista(&op, &y, &reg, &cfg).unwrap();
        let b = proximal_gradient(&op, &y, &reg, &cfg).unwrap();
        assert!(a.best_objective.unwrap() <= b.best_objective.unwrap(), "{kind}");
        assert_eq!(a.objective_trace.len(), a.iterations_run);
        assert!(a.objective_trace.iter().all(|f| f.is_finite()));
        assert!(a.objective_trace.last() <= a.objective_trace.first());
    }
}

#[test]
fn consistent_system_is_solved() {
    let (op, y) = phantom_op(32, NoiseLevel::Sigma(0.0), MaskScheme::Full);
    let none = RegSpec::new(RegKind::IdentityL1, 0.0);
    let report = fista(&op, &y, &none, &SolverConfig::default()).unwrap();
    let first = report.objective_trace[0];
    let best = report.best_objective.unwrap();
    assert!(best < 1e-6 * first, "{best} vs initial {first}");
}

#[test]
fn lipschitz_estimate_grows_with_the_mask() {
    let spec = PhantomSpec::with_size(32);
    let cfg = spec.model_config::<f64>().unwrap();
    let full = IsamOperator::new(cfg, Mask::full(64)).unwrap();
    let mut previous = 0.0;
    for keep in [4usize, 8, 16, 32, 64] {
        // nested masks: each keeps the previous one's samples
        let bits: Vec<u8> = (0..64).map(|i| u8::from(i % (64 / keep) == 0)).collect();
        let op = full.with_mask(Mask::from_bits(&bits).unwrap()).unwrap();
        let l = estimate_lipschitz(&op, 30, 0).unwrap();
        assert!(l >= previous * (1.0 - 1e-6), "keep {keep}: {l} < {previous}");
        previous = l;
    }
    let zero = full.with_mask(Mask::from_bits(&[0; 64]).unwrap()).unwrap();
    assert!(estimate_step(&zero, 15, 0).is_err());
}

#[test]
fn initialization_choices() {
    let (op, y) = phantom_op(32, NoiseLevel::SnrDb(25.0), MaskScheme::Partial(0.5));
    let reg = RegSpec::new(RegKind::TvIso, 1e-2);
    let zero = SolverConfig::default().with_iters(1).with_init(Initialization::Zero);
    let r = fista(&op, &y, &reg, &zero).unwrap();
    // one step from zero equals prox(delta * Phi^* y)
    let expected = reg
        .prox(&op_adjoint(&op, &y).mapv(|v| v * r.step_used), r.step_used)
        .unwrap();
    assert!(common::max_abs_diff(&r.final_iterate, &expected) < 1e-12);
    let given = SolverConfig::default()
        .with_iters(3)
        .with_init(Initialization::Given(r.final_iterate.clone()));
    assert!(fista(&op, &y, &reg, &given).is_ok());
    let bad = SolverConfig::default().with_init(Initialization::Given(ndarray::Array2::zeros((3, 3))));
    assert!(fista(&op, &y, &reg, &bad).is_err());
    assert!(fidelity(&op, &r.final_iterate, &y).unwrap().is_finite());
}

fn op_adjoint(op: &IsamOperator<f64>, y: &ndarray::Array2<f64>) -> ndarray::Array2<num_complex::Complex<f64>> {
    op.apply_adjoint(y).unwrap()
}
