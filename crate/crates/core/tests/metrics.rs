use ccmap_core::metrics::{self, TTest};
use ccmap_core::{Error, Vec2};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn welch_by_hand(a: &[f64], b: &[f64]) -> (f64, f64) {
    let stats = |s: &[f64]| {
        let n = s.len() as f64;
        let m = s.iter().sum::<f64>() / n;
        let v = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let t = (ma - mb) / (va / na + vb / nb).sqrt();
    let nu = (va / na + vb / nb).powi(2) / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    (t, nu)
}

fn reference_p(t: f64, nu: f64) -> f64 {
    2.0 * StudentsT::new(0.0, 1.0, nu).unwrap().sf(t.abs())
}

const A: [f64; 10] = [19.8, 20.4, 19.6, 17.8, 18.5, 18.9, 18.3, 18.9, 19.5, 22.0];
const B: [f64; 12] = [28.2, 26.6, 20.1, 23.3, 25.2, 22.1, 17.7, 27.6, 20.6, 13.7, 23.2, 17.5];

#[test]
fn length_examples() {
    let (s, t) = (Vec2::ZERO, Vec2::new(3.0, 4.0));
    let l = metrics::trajectory_length(&[s, Vec2::new(3.0, 0.0), t], s, t, 0.1).unwrap();
    assert!((l - 1.4).abs() < 1e-12);
    let fine: Vec<Vec2> = (0..=37).map(|i| s.lerp(t, i as f64 / 37.0)).collect();
    assert!((metrics::trajectory_length(&fine, s, t, 0.1).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(metrics::trajectory_length(&[s, Vec2::new(1.0, 1.0)], s, t, 0.1), Err(Error::IncompleteRun));
}

#[test]
fn safety_examples() {
    let path: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64, 0.0)).collect();
    assert_eq!(metrics::trajectory_safety(&path, &[], 0.3).unwrap(), 1.0);
    let all: Vec<Vec2> = path.iter().map(|p| *p + Vec2::new(0.0, 0.1)).collect();
    assert_eq!(metrics::trajectory_safety(&path, &all, 0.3).unwrap(), 0.0);
    let half: Vec<Vec2> = path[..5].iter().map(|p| *p + Vec2::new(0.0, 0.1)).collect();
    assert_eq!(metrics::trajectory_safety(&path, &half, 0.3).unwrap(), 0.5);
    assert_eq!(metrics::trajectory_safety(&[], &half, 0.3), Err(Error::EmptyTrajectory));
}

#[test]
fn effort_examples() {
    assert_eq!(metrics::social_effort(&[1.0, 1.0, 1.0]), 0.0);
    assert!((metrics::social_effort(&[1.2, 1.0]) - 0.1).abs() < 1e-12);
    assert!((metrics::social_effort(&[1.3]) - 0.3).abs() < 1e-12);
}

#[test]
fn identical_samples_are_indistinguishable() {
    assert_eq!(metrics::compare(&[2.0, 2.0, 2.0], &[2.0, 2.0]).unwrap(), 1.0);
    assert_eq!(metrics::compare(&[2.0, 2.0, 2.0], &[3.0, 3.0]).unwrap(), 0.0);
    assert!((metrics::compare(&A, &A).unwrap() - 1.0).abs() < 1e-12);
    assert!(matches!(metrics::compare(&[1.0], &A), Err(Error::InsufficientSamples { .. })));
}

#[test]
fn separated_samples() {
    let p = metrics::compare(&[1.0, 1.1, 0.9, 1.0], &[5.0, 5.1, 4.9, 5.0]).unwrap();
    assert!(p < 1e-4, "{p}");
}

#[test]
fn welch_matches_hand_computation() {
    let (t, nu) = welch_by_hand(&A, &B);
    let (t2, nu2) = metrics::t_statistic(&A, &B, TTest::Welch).unwrap();
    assert!((t2.unwrap() - t).abs() < 1e-6);
    assert!((nu2 - nu).abs() < 1e-6);
    let p = metrics::compare(&A, &B).unwrap();
    assert!((p - reference_p(t, nu)).abs() < 1e-6, "{p} vs {}", reference_p(t, nu));
}

#[test]
fn pooled_variant() {
    let (na, nb) = (A.len() as f64, B.len() as f64);
    let m = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let ss = |s: &[f64]| s.iter().map(|x| (x - m(s)).powi(2)).sum::<f64>();
    let sp2 = (ss(&A) + ss(&B)) / (na + nb - 2.0);
    let t = (m(&A) - m(&B)) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
    let p = metrics::compare_with(&A, &B, TTest::Pooled).unwrap();
    assert!((p - reference_p(t, na + nb - 2.0)).abs() < 1e-6);
}

proptest! {
    #[test]
    fn length_ignores_scale(pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..20), k in 0.01..100.0f64) {
        let v: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
        let (s, t) = (v[0], *v.last().unwrap());
        prop_assume!(s.distance(t) > 1e-3);
        let scaled: Vec<Vec2> = v.iter().map(|p| *p * k).collect();
        let l = metrics::trajectory_length(&v, s, t, 1e-9).unwrap();
        let ls = metrics::trajectory_length(&scaled, s * k, t * k, 1e-9 * k).unwrap();
        prop_assert!((l - ls).abs() < 1e-9 * l);
    }

    #[test]
    fn midpoints_leave_length_alone(pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..12)) {
        let v: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
        let mut fine = vec![v[0]];
        for w in v.windows(2) {
            fine.push(w[0].lerp(w[1], 0.5));
            fine.push(w[1]);
        }
        prop_assert!((metrics::polyline_length(&v) - metrics::polyline_length(&fine)).abs() < 1e-9);
    }

    #[test]
    fn safety_never_grows_with_critical_distance(
        path in prop::collection::vec((0.0..8.0f64, 0.0..8.0f64), 1..30),
        omega in prop::collection::vec((0.0..8.0f64, 0.0..8.0f64), 0..30),
        d in 0.05..2.0f64,
        dd in 0.0..1.0f64,
    ) {
        let path: Vec<Vec2> = path.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let omega: Vec<Vec2> = omega.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let near = metrics::trajectory_safety(&path, &omega, d).unwrap();
        let far = metrics::trajectory_safety(&path, &omega, d + dd).unwrap();
        prop_assert!(far <= near);
    }

    #[test]
    fn effort_without_pedestrians_is_agent_elongation(l in 1.0..3.0f64) {
        prop_assert_eq!(metrics::social_effort(&[l]), l - 1.0);
    }

    #[test]
    fn effort_ignores_order(mut ls in prop::collection::vec(1.0..2.0f64, 2..10)) {
        let e = metrics::social_effort(&ls);
        ls.reverse();
        prop_assert!((metrics::social_effort(&ls) - e).abs() < 1e-12);
    }

    #[test]
    fn comparison_is_symmetric_and_agrees_with_reference(
        a in prop::collection::vec(-10.0..10.0f64, 2..25),
        b in prop::collection::vec(-10.0..10.0f64, 2..25),
    ) {
        let p = metrics::compare(&a, &b).unwrap();
        prop_assert_eq!(p, metrics::compare(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&p));
        let (t, nu) = welch_by_hand(&a, &b);
        if t.is_finite() {
            prop_assert!((p - reference_p(t, nu)).abs() < 1e-6);
        }
    }
}
