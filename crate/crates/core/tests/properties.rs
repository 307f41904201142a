use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rigidchain_core::scene::{DEFAULT_ERROR_COEFFICIENT, DEFAULT_GIMBAL_CONE_HALF_ANGLE};
use rigidchain_core::trajectory::{plan_line_move, PlanError};
use rigidchain_core::*;

fn drive(anchor: Vec3) -> ChainDrive {
    ChainDrive {
        anchor,
        length_min: 0.0,
        length_max: 20.0,
        stored_length: 25.0,
        pitch: 0.05,
        resolution: 0.001,
        speed_max: 0.5,
        accel_max: 0.5,
        error_coefficient: DEFAULT_ERROR_COEFFICIENT,
        tension_limit: 1.0e6,
        compression_limit: 2.5e5,
        gimbal_cone_half_angle: DEFAULT_GIMBAL_CONE_HALF_ANGLE,
    }
}

fn description(room: Room, anchors: &[Vec3], offsets: &[Vec3], mass: f64) -> SceneDescription {
    SceneDescription {
        room,
        drives: anchors.iter().map(|a| drive(*a)).collect(),
        platform: Platform { attachment_offsets: offsets.to_vec(), mass, payload_mass: 0.0 },
        gravity: 9.80665,
        clearance: 0.0,
    }
}

fn unit_room() -> Room {
    Room::new(4.0, 3.0, 5.0)
}

fn unit_anchors() -> Vec<Vec3> {
    vec![Vec3::new(0.0, 0.0, 4.0), Vec3::new(4.0, 0.0, 4.0), Vec3::new(2.0, 3.0, 4.0)]
}

fn square_anchors() -> Vec<Vec3> {
    vec![Vec3::new(0.0, 0.0, 4.0), Vec3::new(4.0, 0.0, 4.0), Vec3::new(4.0, 4.0, 4.0), Vec3::new(0.0, 4.0, 4.0)]
}

fn unit_scene() -> Scene {
    description(unit_room(), &unit_anchors(), &[Vec3::ZERO; 3], 10.0).validate().unwrap()
}

fn square_scene() -> Scene {
    description(Room::new(4.0, 4.0, 5.0), &square_anchors(), &[Vec3::ZERO; 4], 90.0).validate().unwrap()
}

fn vec3(range: std::ops::Range<f64>) -> impl Strategy<Value = Vec3> {
    (range.clone(), range.clone(), range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Multiples of 1/16 in `[lo, hi]`: sums and differences stay exact.
fn dyadic(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
    (lo * 16..=hi * 16).prop_map(|k| k as f64 / 16.0)
}

fn dyadic_vec(lo: i32, hi: i32) -> impl Strategy<Value = Vec3> {
    (dyadic(lo, hi), dyadic(lo, hi), dyadic(lo, hi)).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Interior point of the unit-scene anchor triangle, below the anchors.
fn interior_pose() -> impl Strategy<Value = Pose> {
    (0.05f64..0.95, 0.05f64..0.95, 0.3f64..3.7).prop_map(|(u, v, z)| {
        let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
        let a = unit_anchors();
        let p = a[0] + (a[1] - a[0]) * u + (a[2] - a[0]) * v;
        Pose::new(p.x, p.y, z)
    })
}

fn assert_close(a: Vec3, b: Vec3, tol: f64) -> Result<(), TestCaseError> {
    prop_assert!(a.distance(b) <= tol, "{a:?} vs {b:?}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn validation_is_idempotent(
        anchors in proptest::collection::vec(vec3(0.0..6.0), 3..=8),
        offsets in proptest::collection::vec(vec3(-0.2..0.2), 8),
        mass in 0.0f64..500.0,
    ) {
        let n = anchors.len();
        let anchors: Vec<Vec3> = anchors.into_iter().map(|a| Vec3::new(a.x, a.y, 5.0)).collect();
        let desc = description(Room::new(6.0, 6.0, 5.0), &anchors, &offsets[..n], mass);
        let first = desc.clone().validate();
        prop_assume!(first.is_ok());
        let first = first.unwrap();
        prop_assert_eq!(first.description(), &desc);
        let again = first.description().clone().validate().unwrap();
        prop_assert_eq!(again.description(), first.description());
    }

    #[test]
    fn ik_is_translation_equivariant(p in dyadic_vec(0, 3), t in dyadic_vec(-8, 8), offset in dyadic_vec(-1, 1)) {
        let room = Room::new(40.0, 40.0, 40.0);
        let lift = Vec3::new(10.0, 10.0, 10.0);
        let base_anchors: Vec<Vec3> = unit_anchors().into_iter().map(|a| a + lift).collect();
        let moved_anchors: Vec<Vec3> = base_anchors.iter().map(|a| *a + t).collect();
        let offsets = [offset; 3];
        let base = description(room, &base_anchors, &offsets, 10.0).validate().unwrap();
        let moved = description(room, &moved_anchors, &offsets, 10.0).validate().unwrap();
        let p = p + lift;
        prop_assert_eq!(inverse_kinematics(&base, &p.into()), inverse_kinematics(&moved, &(p + t).into()));
    }

    #[test]
    fn fk3_round_trip_and_lower_branch(pose in interior_pose()) {
        let s = unit_scene();
        let l = inverse_kinematics(&s, &pose);
        let back = forward_kinematics_3(&s, &l).unwrap();
        assert_close(back.position, pose.position, 1e-9)?;
        prop_assert!(back.position.z <= 8.0 - pose.position.z);
        let lsq = forward_kinematics_lsq(&s, &l, &Pose::new(2.0, 1.0, 1.0)).unwrap();
        assert_close(lsq.position, back.position, 1e-7)?;
    }

    #[test]
    fn jacobian_rows_are_unit(pose in interior_pose()) {
        let j = jacobian(&unit_scene(), &pose).unwrap();
        for r in j.rows() {
            prop_assert!((r.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn statics_scale_with_weight(pose in interior_pose(), k in -3i32..6) {
        let c = 2f64.powi(k);
        let base = unit_scene();
        let mut desc = base.description().clone();
        desc.platform.mass *= c;
        let scaled = desc.validate().unwrap();
        let f0 = static_forces(&base, &pose).unwrap();
        let f1 = static_forces(&scaled, &pose).unwrap();
        for (a, b) in f0.axial_forces.iter().zip(&f1.axial_forces) {
            prop_assert_eq!(*a * c, *b);
        }
        prop_assert!(f1.residual < 1e-9 * scaled.weight().max(1.0));
    }

    #[test]
    fn statics_invariant_under_translation(pose in interior_pose(), t in vec3(-5.0..5.0)) {
        let room = Room::new(40.0, 40.0, 40.0);
        let lift = Vec3::new(10.0, 10.0, 10.0);
        let anchors: Vec<Vec3> = unit_anchors().into_iter().map(|a| a + lift).collect();
        let moved: Vec<Vec3> = anchors.iter().map(|a| *a + t).collect();
        let a = description(room, &anchors, &[Vec3::ZERO; 3], 50.0).validate().unwrap();
        let b = description(room, &moved, &[Vec3::ZERO; 3], 50.0).validate().unwrap();
        let p = pose.position + lift;
        let fa = static_forces(&a, &p.into()).unwrap();
        let fb = static_forces(&b, &(p + t).into()).unwrap();
        for (x, y) in fa.axial_forces.iter().zip(&fb.axial_forces) {
            prop_assert!((x - y).abs() <= 1e-9 * a.weight());
        }
    }

    #[test]
    fn four_chain_min_norm_is_optimal(x in 0.3f64..3.7, y in 0.3f64..3.7, z in 0.5f64..3.5) {
        let s = square_scene();
        let pose = Pose::new(x, y, z);
        let sol = static_forces(&s, &pose).unwrap();
        let norm = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>().sqrt();
        let best = norm(&sol.axial_forces);

        // Columns of U are the unit directions attachment → anchor.
        let u = DMatrix::from_fn(3, 4, |r, c| {
            let d = (s.drive(c).anchor - pose.position).normalized().unwrap();
            d[r]
        });
        let b = DVector::from_vec(vec![0.0, 0.0, s.weight()]);
        let f = DVector::from_vec(sol.axial_forces.clone());
        prop_assert!((&u * &f - &b).norm() < 1e-9 * s.weight());

        // Drop-one solutions embedded with a zero.
        for drop in 0..4 {
            let keep: Vec<usize> = (0..4).filter(|c| *c != drop).collect();
            let sub = DMatrix::from_fn(3, 3, |r, c| u[(r, keep[c])]);
            if let Some(g) = sub.clone().lu().solve(&b) {
                if sub.determinant().abs() > 1e-9 {
                    prop_assert!(best <= g.norm() * (1.0 + 1e-12));
                }
            }
        }

        // Null-space perturbations on a 1-D grid.
        // For a 3×4 matrix, signed 3×3 minors span the null space.
        let null = DVector::from_fn(4, |j, _| {
            let keep: Vec<usize> = (0..4).filter(|c| *c != j).collect();
            let minor = DMatrix::from_fn(3, 3, |r, c| u[(r, keep[c])]).determinant();
            if j % 2 == 0 { minor } else { -minor }
        });
        let null = &null / null.norm();
        prop_assert!((&u * &null).norm() < 1e-9);
        for k in -50..=50 {
            if k == 0 {
                continue;
            }
            let alt = &f + &null * (k as f64 * best / 25.0);
            prop_assert!(best <= alt.norm());
        }
    }

    #[test]
    fn error_propagation_is_linear(pose in interior_pose(), dl in proptest::array::uniform3(-1e-3f64..1e-3), k in -4i32..4) {
        let s = unit_scene();
        let c = 2f64.powi(k);
        let a = propagate_error(&s, &pose, &dl).unwrap();
        let b = propagate_error(&s, &pose, &dl.map(|v| v * c)).unwrap();
        prop_assert_eq!(a.position_error * c, b.position_error);
    }

    #[test]
    fn worst_case_is_permutation_invariant(x in 0.3f64..3.7, y in 0.3f64..3.7, z in 0.5f64..3.5, dl in proptest::array::uniform4(0.0f64..1e-3), rot in 0usize..4) {
        let anchors = square_anchors();
        let offsets = [Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.0, 0.1, 0.0), Vec3::new(-0.1, 0.0, 0.0), Vec3::new(0.0, -0.1, 0.0)];
        let perm: Vec<usize> = (0..4).map(|i| (i + rot) % 4).collect();
        let a = description(Room::new(4.0, 4.0, 5.0), &anchors, &offsets, 10.0).validate().unwrap();
        let b = description(
            Room::new(4.0, 4.0, 5.0),
            &perm.iter().map(|i| anchors[*i]).collect::<Vec<_>>(),
            &perm.iter().map(|i| offsets[*i]).collect::<Vec<_>>(),
            10.0,
        )
        .validate()
        .unwrap();
        let pose = Pose::new(x, y, z);
        let ea = propagate_error(&a, &pose, &dl).unwrap();
        let eb = propagate_error(&b, &pose, &perm.iter().map(|i| dl[*i]).collect::<Vec<_>>()).unwrap();
        prop_assert!((ea.worst_case_norm - eb.worst_case_norm).abs() <= 1e-12 * ea.worst_case_norm.max(1e-12));
    }

    #[test]
    fn segment_distance_is_symmetric(a0 in vec3(-2.0..2.0), a1 in vec3(-2.0..2.0), b0 in vec3(-2.0..2.0), b1 in vec3(-2.0..2.0)) {
        let d = segment_min_distance((a0, a1), (b0, b1));
        prop_assert_eq!(d, segment_min_distance((b0, b1), (a0, a1)));
        prop_assert!((d - segment_min_distance((a1, a0), (b0, b1))).abs() < 1e-12);
        prop_assert!((d - segment_min_distance((a0, a1), (b1, b0))).abs() < 1e-12);
        prop_assert!(d <= a0.distance(b0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coverage_grows_with_length_max(shorter in 2.0f64..5.0, extra in 0.0f64..3.0) {
        let mut desc = description(unit_room(), &unit_anchors(), &[Vec3::ZERO; 3], 10.0);
        desc.drives.iter_mut().for_each(|d| d.length_max = shorter);
        let small = workspace_volume(&desc.clone().validate().unwrap(), [8, 8, 8]).unwrap();
        desc.drives.iter_mut().for_each(|d| d.length_max = shorter + extra);
        let large = workspace_volume(&desc.validate().unwrap(), [8, 8, 8]).unwrap();
        prop_assert!(large.cells_reachable >= small.cells_reachable);
    }

    #[test]
    fn coverage_grows_as_clearance_shrinks(clearance in 0.0f64..0.6, less in 0.0f64..1.0) {
        let offsets = [Vec3::new(0.3, 0.0, 0.0), Vec3::new(-0.3, 0.0, 0.0), Vec3::new(0.0, -0.3, 0.0)];
        let mut desc = description(unit_room(), &unit_anchors(), &offsets, 10.0);
        desc.clearance = clearance;
        let tight = workspace_volume(&desc.clone().validate().unwrap(), [8, 8, 8]).unwrap();
        desc.clearance = clearance * less;
        let loose = workspace_volume(&desc.validate().unwrap(), [8, 8, 8]).unwrap();
        prop_assert!(loose.cells_reachable >= tight.cells_reachable);
    }

    #[test]
    fn faster_drives_never_slow_a_move(a in interior_pose(), b in interior_pose(), speed_gain in 1.0f64..3.0, accel_gain in 1.0f64..3.0, which in 0usize..3) {
        let s = unit_scene();
        let plan = match plan_line_move(&s, &a, &b) {
            Ok(p) => p,
            Err(PlanError::PathLeavesWorkspace { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let mut desc = s.description().clone();
        desc.drives[which].speed_max *= speed_gain;
        desc.drives[which].accel_max *= accel_gain;
        let faster = plan_line_move(&desc.validate().unwrap(), &a, &b).unwrap();
        prop_assert!(faster.duration <= plan.duration * (1.0 + 1e-12), "{} > {}", faster.duration, plan.duration);

        let back = plan_line_move(&s, &b, &a).unwrap();
        prop_assert!((back.duration - plan.duration).abs() <= 1e-12);
    }

    #[test]
    fn sampled_chain_rates_respect_limits(a in interior_pose(), b in interior_pose()) {
        let s = unit_scene();
        let Ok(plan) = plan_line_move(&s, &a, &b) else { return Ok(()) };
        for w in plan.samples.windows(2) {
            let dt = w[1].time - w[0].time;
            for i in 0..3 {
                prop_assert!((w[1].lengths[i] - w[0].lengths[i]).abs() / dt <= s.drive(i).speed_max + 1e-9);
            }
        }
        for w in plan.samples.windows(3) {
            let (h1, h2) = (w[1].time - w[0].time, w[2].time - w[1].time);
            for i in 0..3 {
                let v1 = (w[1].lengths[i] - w[0].lengths[i]) / h1;
                let v2 = (w[2].lengths[i] - w[1].lengths[i]) / h2;
                let acc = 2.0 * (v2 - v1) / (h1 + h2);
                prop_assert!(acc.abs() <= s.drive(i).accel_max + 1e-9, "drive {i}: {acc}");
            }
        }
    }
}
