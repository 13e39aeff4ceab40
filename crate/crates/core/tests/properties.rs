use proptest::prelude::*;

use picflow::flow;
use picflow::lambda2::{wedge_square, Mat3, Mat4, Mat6, DUALITY_FRAME};
use picflow::optim::{self, SimplexPoint};
use picflow::quadratic::{p_general, p_general_terms, pinch_data, sharp_op};
use picflow::sampler::{sample_at, sample_vec, SampleClass, SampleSpec};
use picflow::{CurvatureOperator, PicClass};

fn mat3(v: [f64; 9]) -> Mat3 {
    Mat3::from_row_slice(&v)
}

fn operator() -> impl Strategy<Value = CurvatureOperator> {
    (
        prop::array::uniform9(-1.0..1.0f64),
        prop::array::uniform9(-1.0..1.0f64),
        prop::array::uniform9(-1.0..1.0f64),
    )
        .prop_map(|(a, b, c)| {
            let a = mat3(a);
            let a = (a + a.transpose()) / 2.0;
            let c = mat3(c);
            let mut c = (c + c.transpose()) / 2.0;
            let shift = (a.trace() - c.trace()) / 3.0;
            for i in 0..3 {
                c[(i, i)] += shift;
            }
            CurvatureOperator::from_blocks(&a, &mat3(b), &c).unwrap()
        })
}

fn pic_operator() -> impl Strategy<Value = CurvatureOperator> {
    (any::<u64>(), 0u64..1000).prop_map(|(seed, i)| sample_at(&SampleSpec::new(SampleClass::Pic, seed, 1), i).unwrap())
}

fn unit_quaternion() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_filter("away from zero", |q| q.iter().map(|v| v * v).sum::<f64>() > 0.01)
        .prop_map(|q| {
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            q.map(|v| v / n)
        })
}

/// `x ↦ p x q` on quaternions, an arbitrary element of SO(4).
fn rotation() -> impl Strategy<Value = Mat4> {
    (unit_quaternion(), unit_quaternion()).prop_map(|([w, x, y, z], [a, b, c, d])| {
        let left = Mat4::new(w, -x, -y, -z, x, w, -z, y, y, z, w, -x, z, -y, x, w);
        let right = Mat4::new(a, -b, -c, -d, b, a, d, -c, c, -d, a, b, d, c, -b, a);
        left * right
    })
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(f64::MIN_POSITIVE)
}

fn adjugate(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| {
        let (r0, r1) = match j {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let (c0, c1) = match i {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let minor = m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
        if (i + j) % 2 == 0 {
            minor
        } else {
            -minor
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn blocks_round_trip(r in operator()) {
        let b = r.to_blocks();
        let back = CurvatureOperator::from_blocks(&b.a, &b.b, &b.c).unwrap();
        prop_assert!((back.matrix() - r.matrix()).norm() <= 1e-12 * (1.0 + r.norm()));
        let json = serde_json::to_string(&r.to_json()).unwrap();
        let back = CurvatureOperator::from_json_str(&json).unwrap();
        prop_assert!((back.matrix() - r.matrix()).norm() <= 1e-12 * (1.0 + r.norm()));
    }

    #[test]
    fn frame_changes_preserve_invariants(r in operator(), g in rotation()) {
        let w = wedge_square(&g);
        prop_assert!((w.transpose() * w - Mat6::identity()).norm() < 1e-12);
        let s = r.rotated(&g);
        let (e, f) = (r.eigen_data(), s.eigen_data());
        let n = r.norm();
        prop_assert!(close(e.scalar, f.scalar, 1e-9, n));
        for i in 0..3 {
            prop_assert!(close(e.a[i], f.a[i], 1e-9, n));
            prop_assert!(close(e.c[i], f.c[i], 1e-9, n));
            prop_assert!(close(e.b_singular[i], f.b_singular[i], 1e-9, n));
        }
        for i in 0..4 {
            prop_assert!(close(e.lambda[i], f.lambda[i], 1e-9, n));
        }
        prop_assert!(close(e.det_b, f.det_b, 1e-9, n.powi(3)));
        let (p, mag) = p_general_terms(&r);
        prop_assert!(close(p, p_general(&s), 1e-9, mag));
    }

    #[test]
    fn homogeneity(r in pic_operator(), t in 0.05..20.0f64) {
        let s = r.scaled(t);
        let (p, mag) = p_general_terms(&r);
        // S times a cubic pairing: degree four
        prop_assert!(close(p_general(&s), t.powi(4) * p, 1e-10, t.powi(4) * mag));
        let (a, b) = (pinch_data(&r), pinch_data(&s));
        // E blows up like 1/ψ near the PIC boundary, so compare relative to |E|
        let (ea, eb) = (a.e.unwrap(), b.e.unwrap());
        prop_assert!(close(eb, t * ea, 1e-10, t * ea.abs().max(r.norm())));
        prop_assert!(close(b.ratio.unwrap(), a.ratio.unwrap(), 1e-10, 1.0));
    }

    #[test]
    fn e_nonnegative_on_pic(r in pic_operator()) {
        prop_assert!(pinch_data(&r).e.unwrap() >= -1e-12 * r.norm());
    }

    #[test]
    fn sharp_is_adjugate_on_block_diagonal(seed in any::<u64>()) {
        let r = sample_at(&SampleSpec::new(SampleClass::BlockDiag, seed, 1), 0).unwrap();
        let b = r.to_blocks();
        let d = DUALITY_FRAME.transpose() * sharp_op(&r) * *DUALITY_FRAME;
        let n = r.norm().powi(2);
        let block = |i: usize, j: usize| d.fixed_view::<3, 3>(i, j).into_owned();
        prop_assert!((block(0, 0) - adjugate(&b.a) * 2.0).norm() <= 1e-10 * n);
        prop_assert!((block(3, 3) - adjugate(&b.c) * 2.0).norm() <= 1e-10 * n);
        prop_assert!(block(0, 3).norm() <= 1e-10 * n);
    }

    #[test]
    fn f_nonnegative_on_closed_simplex(u in 0.0..1.0f64, v in 0.0..1.0f64, s in 0.01..10.0f64) {
        // fold the unit square onto the triangle
        let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
        let x = [3.0 * u, 3.0 * v, 3.0 - 3.0 * u - 3.0 * v];
        let f = optim::objective_f(&SimplexPoint::new(x).unwrap(), s);
        prop_assert!(f >= -1e-12 * s.powi(3));
        let a = optim::x_to_a(x, s);
        prop_assert_eq!(optim::satisfies_pairwise_pic(a, s), optim::satisfies_minimal_pic(a, s));
    }
}

#[test]
fn einstein_starts_stay_einstein() {
    for scale in [0.1, 1.0, 5.0] {
        let r0 = CurvatureOperator::identity().scaled(scale);
        let t_end = 0.05 / scale;
        let traj = flow::integrate(&r0, t_end, t_end / 200.0).unwrap();
        for r in &traj.states {
            let b = r.to_blocks();
            let n = r.norm();
            let umbilic = |m: &Mat3| (m - Mat3::identity() * (m.trace() / 3.0)).norm();
            assert!(umbilic(&b.a) <= 1e-10 * n && umbilic(&b.c) <= 1e-10 * n);
            assert!(b.b.norm() <= 1e-10 * n);
        }
    }
}

#[test]
fn step_halving_is_fourth_order() {
    // sphere against its closed form
    let err = |h: f64| {
        let traj = flow::integrate(&CurvatureOperator::identity(), 0.1, h).unwrap();
        (traj.diagnostics.last().unwrap().scalar - 12.0 / (1.0 - 0.6)).abs()
    };
    let (e1, e2) = (err(0.005), err(0.0025));
    assert!(e1 / e2 >= 3.5, "sphere: {e1:e} / {e2:e}");

    // random PIC starts against successive refinements
    let starts = sample_vec(&SampleSpec::new(SampleClass::Pic, 11, 20)).unwrap();
    for r0 in &starts {
        let t_end = 0.1 / r0.norm();
        let end = |n: usize| *flow::integrate(r0, t_end, t_end / n as f64).unwrap().states.last().unwrap().matrix();
        let (m1, m2, m3) = (end(10), end(20), end(40));
        let (d1, d2) = ((m1 - m2).norm(), (m2 - m3).norm());
        assert!(d1 / d2 >= 3.5, "{d1:e} / {d2:e}");
    }
}

#[test]
fn bianchi_drift_stays_small() {
    let starts = sample_vec(&SampleSpec::new(SampleClass::Pic, 12, 20)).unwrap();
    for r0 in &starts {
        let t_end = 0.05 / r0.norm();
        let traj = flow::integrate(r0, t_end, t_end / 400.0).unwrap();
        for r in &traj.states {
            let b = r.to_blocks();
            assert!((b.a.trace() - b.c.trace()).abs() <= 1e-8 * (1.0 + r.scalar().abs()));
        }
    }
}

#[test]
fn sampler_class_contracts() {
    let eq = sample_vec(&SampleSpec::new(SampleClass::PicEqualB, 3, 1000)).unwrap();
    for r in &eq {
        let b = r.to_blocks().b;
        let e = r.eigen_data();
        let beta = e.b.expect("isotropic B");
        assert!((b * b.transpose() - Mat3::identity() * beta * beta).norm() < 1e-12);
        assert_eq!(r.pic_class(), PicClass::Pic);
    }
    let bi = sample_vec(&SampleSpec::new(SampleClass::Bianchi, 3, 1000)).unwrap();
    for r in &bi {
        let b = r.to_blocks();
        assert!((b.a.trace() - b.c.trace()).abs() < 1e-12);
    }
}

#[test]
fn pic_sampler_reaches_the_boundary() {
    let ops = sample_vec(&SampleSpec::new(SampleClass::Pic, 5, 10_000)).unwrap();
    let near = ops
        .iter()
        .filter(|r| {
            let (p1, p2) = r.pic_quantities();
            p1.min(p2) < 0.05
        })
        .count();
    assert!(near * 100 >= ops.len(), "{near} of {}", ops.len());
}
