use std::collections::BTreeSet;
use std::f64::consts::PI;

use ccmap_core::social::{self, BranchPair, HumanModel, Side};
use ccmap_core::{Error, GridMapping, Pedestrian, Vec2};
use proptest::prelude::*;

const R_P: f64 = 0.4;
const R_A: f64 = 0.2;

fn branches(v: Vec2) -> BranchPair {
    BranchPair::new(0, Vec2::new(4.0, 4.0), v, R_P, &HumanModel::default()).unwrap()
}

fn cells_in_both(m: &GridMapping, a: Vec2, b: Vec2, r: f64) -> BTreeSet<usize> {
    (0..m.len()).filter(|&k| m.center(k).distance(a) < r && m.center(k).distance(b) < r).collect()
}

#[test]
fn crossing_angle_examples() {
    let h = Vec2::new(2.0, 2.0);
    let v = Vec2::new(1.0, 0.0);
    assert_eq!(social::crossing_angle(h, v, Vec2::new(5.0, 2.0)).unwrap(), 0.0);
    assert!((social::crossing_angle(h, v, Vec2::new(2.0, 3.0)).unwrap() - 90.0).abs() < 1e-12);
    assert!((social::crossing_angle(h, v, Vec2::new(1.0, 2.0)).unwrap().abs() - 180.0).abs() < 1e-12);
    assert!(matches!(social::crossing_angle(h, Vec2::ZERO, Vec2::new(3.0, 2.0)), Err(Error::NoVisualAxis)));
}

#[test]
fn eligibility_examples() {
    let model = HumanModel::default();
    let p = Pedestrian::heading_to(1, Vec2::new(6.0, 4.0), Vec2::new(0.5, 4.0), 1.0);
    assert!(social::cooperation_eligible(&p, Vec2::new(4.5, 4.0), 0.0, &model));
    let a = 10f64.to_radians();
    let off = Vec2::new(6.0 - 1.5 * a.cos(), 4.0 + 1.5 * a.sin());
    assert!(!social::cooperation_eligible(&p, off, 0.0, &model));
    assert!(!social::cooperation_eligible(&p, Vec2::new(3.5, 4.0), 0.0, &model));
    let standing = Pedestrian { velocity: Vec2::ZERO, ..p };
    assert!(!social::cooperation_eligible(&standing, Vec2::new(5.0, 4.0), 0.0, &model));
}

#[test]
fn velocity_examples() {
    let model = HumanModel::default();
    assert_eq!(social::cooperative_velocity(Vec2::new(1.0, 0.0), Side::Right, &model).unwrap(), Vec2::new(1.0, -0.5));
    assert_eq!(social::cooperative_velocity(Vec2::new(1.0, 0.0), Side::Left, &model).unwrap(), Vec2::new(1.0, 0.5));
    assert!(matches!(social::cooperative_velocity(Vec2::ZERO, Side::Left, &model), Err(Error::DegenerateVelocity)));
}

#[test]
fn coinciding_branches_give_the_whole_disc() {
    let m = GridMapping::default();
    let b = branches(Vec2::new(-1.0, 0.0));
    let got: BTreeSet<usize> = social::virtual_obstacle(&b, R_A, &m, 0.0).into_iter().collect();
    let disc: BTreeSet<usize> = m.disc_cells(b.origin, R_P + R_A).into_iter().collect();
    assert_eq!(got, disc);
}

#[test]
fn tangent_branches_leave_nothing() {
    let m = GridMapping::default();
    let b = branches(Vec2::new(-1.0, 0.0));
    let r = R_P + R_A;
    // lateral speeds of ±0.5 separate the centers at 1 m/s
    assert!((b.separation(2.0 * r) - 2.0 * r).abs() < 1e-12);
    assert!(social::virtual_obstacle(&b, R_A, &m, 2.0 * r).is_empty());
}

#[test]
fn half_separated_lens_matches_its_area() {
    let m = GridMapping::default();
    let r = R_P + R_A;
    for v in [Vec2::new(-1.0, 0.0), Vec2::new(0.6, 0.8), Vec2::new(0.0137, -1.3)] {
        let b = branches(v);
        let t = r / v.norm();
        let (l, rr) = b.centers(t);
        assert!((l.distance(rr) - r).abs() < 1e-12);
        let got: BTreeSet<usize> = social::virtual_obstacle(&b, R_A, &m, t).into_iter().collect();
        assert_eq!(got, cells_in_both(&m, l, rr, r));
        let area = 2.0 * r * r * (PI / 3.0 - 3f64.sqrt() / 4.0) / (m.cell_size() * m.cell_size());
        assert!((got.len() as f64 - area).abs() <= 4.0, "{} cells vs {area}", got.len());
    }
}

proptest! {
    #[test]
    fn forward_component_is_kept(x in -3.0..3.0f64, y in -3.0..3.0f64, left in any::<bool>()) {
        let v = Vec2::new(x, y);
        prop_assume!(v.norm() > 1e-3);
        let side = if left { Side::Left } else { Side::Right };
        let w = social::cooperative_velocity(v, side, &HumanModel::default()).unwrap();
        prop_assert!((w.dot(v) - v.norm_sq()).abs() < 1e-9 * v.norm_sq().max(1.0));
        prop_assert!((w.norm() - v.norm() * 1.25f64.sqrt()).abs() < 1e-9 * v.norm().max(1.0));
    }

    #[test]
    fn virtual_obstacle_shrinks_inside_both_discs(angle in 0.0..(2.0 * PI), speed in 0.3..1.5f64) {
        let m = GridMapping::default();
        let b = branches(Vec2::new(speed * angle.cos(), speed * angle.sin()));
        // the lens drifts forward with the walker, so its cell count jitters
        // by a few cells on top of the shrinking
        let mut last = usize::MAX;
        for k in 0..30 {
            let t = k as f64 * 0.05;
            let cells = social::virtual_obstacle(&b, R_A, &m, t);
            let (l, r) = b.centers(t);
            let dl: BTreeSet<usize> = m.disc_cells(l, R_P + R_A).into_iter().collect();
            let dr: BTreeSet<usize> = m.disc_cells(r, R_P + R_A).into_iter().collect();
            prop_assert!(cells.iter().all(|k| dl.contains(k) && dr.contains(k)));
            prop_assert!(cells.len() <= last.saturating_add(4), "{} after {last}", cells.len());
            last = last.min(cells.len());
        }
    }

    #[test]
    fn head_on_eligibility_lasts_until_zone_exit(d0 in 2.3..4.0f64) {
        // agent walking straight at the human along their axis
        let model = HumanModel::default();
        let p = Pedestrian::heading_to(1, Vec2::new(6.0, 4.0), Vec2::new(0.5, 4.0), 1.0);
        let mut was = false;
        let mut d = d0;
        while d > 0.05 {
            let now = social::cooperation_eligible(&p, Vec2::new(6.0 - d, 4.0), 0.0, &model);
            prop_assert!(!was || now);
            was = now;
            d -= 0.05;
        }
        prop_assert!(was);
    }
}
