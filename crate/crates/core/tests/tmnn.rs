use ccmap_core::tmnn::{self, CouplingMatrix, MomentumVector, TmnnParams, TrainingCorpus, TrajectoryPredictor};
use ccmap_core::{Error, Vec2};
use proptest::prelude::*;

/// Written out by hand rather than taken from the library.
fn companion(h: f64) -> [[f64; 3]; 3] {
    [[1.0, h, h * h / 2.0], [0.0, 1.0, h], [0.0, 0.0, 1.0]]
}

fn close(a: MomentumVector, b: MomentumVector) -> bool {
    (a.x - b.x).abs() < 1e-12 && (a.v - b.v).abs() < 1e-12 && (a.a - b.a).abs() < 1e-12
}

#[test]
fn momenta_from_three_samples() {
    let (mx, my) = tmnn::estimate_momenta(Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0), 0.1);
    assert!(close(mx, MomentumVector::new(1.0, 0.0, 0.0)) && close(my, mx));

    let (mx, _) = tmnn::estimate_momenta(Vec2::new(-2.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::ZERO, 1.0);
    assert!(close(mx, MomentumVector::new(0.0, 1.0, 0.0)));

    let (mx, _) = tmnn::estimate_momenta(Vec2::new(4.0, 0.0), Vec2::new(1.0, 0.0), Vec2::ZERO, 1.0);
    assert!(close(mx, MomentumVector::new(0.0, 0.0, 2.0)), "{mx:?}");
}

#[test]
fn zero_stream_leaves_couplings_alone() {
    let w0 = CouplingMatrix([[0.3, -1.0, 2.0], [0.5, 0.25, 0.0], [1.0, 0.0, -4.0]]);
    let stream = vec![MomentumVector::ZERO; 50];
    let w = tmnn::train(w0, stream, &TmnnParams::default()).unwrap();
    assert_eq!(w, w0);
}

#[test]
fn training_converges_to_the_integrator() {
    for h in [0.1, 0.05] {
        let corpus = TrainingCorpus { trajectories: 200, step: h, ..TrainingCorpus::default() };
        let w = corpus.train(CouplingMatrix::identity(), &TmnnParams::default()).unwrap();
        let err = w.max_abs_diff(&CouplingMatrix(companion(h)));
        assert!(err < 1e-3, "h {h}: {err}\n{w}");
    }
}

#[test]
fn large_learning_rate_diverges() {
    let params = TmnnParams { learning_rate: 10.0, ..TmnnParams::default() };
    let r =
        TrainingCorpus { trajectories: 100, ..TrainingCorpus::default() }.train(CouplingMatrix::identity(), &params);
    assert!(matches!(r, Err(Error::LearningDiverged { .. })), "{r:?}");
}

#[test]
fn prediction_examples() {
    let wc = CouplingMatrix(companion(0.1));
    assert!(tmnn::predict(&wc, MomentumVector::ZERO, 10).iter().all(|&x| x == 0.0));
    let walk = tmnn::predict(&wc, MomentumVector::new(0.0, 1.0, 0.0), 20);
    assert_eq!(walk.len(), 20);
    for (k, x) in walk.iter().enumerate() {
        assert!((x - 0.1 * (k + 1) as f64).abs() < 1e-12);
    }
    assert!(tmnn::predict(&wc, MomentumVector::new(1.0, 0.0, 0.0), 15).iter().all(|&x| (x - 1.0).abs() < 1e-15));
}

#[test]
fn trained_predictor_extrapolates_quadratics() {
    let h = 0.1;
    let pred = TrajectoryPredictor::trained(h, &TmnnParams::default()).unwrap();
    let traj = |t: f64| Vec2::new(2.0 + 0.8 * t - 0.15 * t * t, 5.0 - 0.3 * t + 0.2 * t * t);
    let out = pred.extrapolate([traj(-2.0 * h), traj(-h), traj(0.0)], 20);
    for (k, p) in out.iter().enumerate() {
        let truth = traj(k as f64 * h);
        let rel = p.distance(truth) / truth.norm();
        assert!(rel < 1e-3, "step {k}: {p:?} vs {truth:?}");
    }
}

proptest! {
    #[test]
    fn prediction_is_linear(x in -2.0..2.0f64, v in -2.0..2.0f64, a in -2.0..2.0f64, y in -2.0..2.0f64, u in -2.0..2.0f64, b in -2.0..2.0f64, s in -3.0..3.0f64) {
        let w = CouplingMatrix([[0.9, 0.2, 0.01], [0.05, 1.0, 0.1], [0.0, -0.02, 0.98]]);
        let p = MomentumVector::new(x, v, a);
        let q = MomentumVector::new(y, u, b);
        let sum = MomentumVector::new(x + s * y, v + s * u, a + s * b);
        let lhs = tmnn::predict(&w, sum, 12);
        let (pp, pq) = (tmnn::predict(&w, p, 12), tmnn::predict(&w, q, 12));
        for k in 0..12 {
            prop_assert!((lhs[k] - (pp[k] + s * pq[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn trained_error_stays_small(x in -1.0..1.0f64, v in -1.0..1.0f64, a in -1.0..1.0f64) {
        static W: std::sync::OnceLock<CouplingMatrix> = std::sync::OnceLock::new();
        let w = W.get_or_init(|| TrainingCorpus::default().train(CouplingMatrix::identity(), &TmnnParams::default()).unwrap());
        let h = 0.1;
        let out = tmnn::predict(w, MomentumVector::new(x, v, a), 20);
        for (k, p) in out.iter().enumerate() {
            let t = (k + 1) as f64 * h;
            prop_assert!((p - (x + v * t + 0.5 * a * t * t)).abs() < 1e-2);
        }
    }
}
