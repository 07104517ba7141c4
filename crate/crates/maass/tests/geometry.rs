use maass::arithmetic::Matrix2;
use maass::geometry::{
    mobius, mobius_int, reduce_modular, sigma_cocycle_int, CuspPoint, GroupContext,
};
use maass::Complex64;
use proptest::prelude::*;

fn in_standard_domain(z: Complex64) -> bool {
    z.re.abs() <= 0.5 + 1e-12 && z.norm() >= 1.0 - 1e-12
}

#[test]
fn cusp_data() {
    let g = GroupContext::new(1).unwrap();
    assert_eq!(g.cusps.len(), 1);
    assert_eq!(g.coset_reps.len(), 1);
    let g = GroupContext::new(2).unwrap();
    assert_eq!(g.cusps.iter().map(|c| c.width).collect::<Vec<_>>(), [1, 2]);
    assert_eq!(g.coset_reps.len(), 3);
    let g = GroupContext::new(4).unwrap();
    assert_eq!(
        g.cusps.iter().map(|c| c.point).collect::<Vec<_>>(),
        [
            CuspPoint::Infinity,
            CuspPoint::Rational(0, 1),
            CuspPoint::Rational(-1, 2)
        ]
    );
    assert_eq!(
        g.cusps.iter().map(|c| c.width).collect::<Vec<_>>(),
        [1, 4, 1]
    );
    assert_eq!(g.coset_reps.len(), 6);
}

#[test]
fn sigma_maps_infinity_to_cusp_and_conjugates_translation() {
    for level in [2, 4] {
        let g = GroupContext::new(level).unwrap();
        for cusp in &g.cusps[1..] {
            let CuspPoint::Rational(p, q) = cusp.point else {
                unreachable!()
            };
            let big = mobius(&cusp.sigma, Complex64::new(0.0, 1e9));
            assert!((big - p as f64 / q as f64).norm() < 1e-8, "{}", cusp.point);
            // sigma T sigma^-1 = generator, so applying both to a point agrees
            let z = Complex64::new(0.13, 0.77);
            let w = mobius(&cusp.sigma, mobius(&cusp.sigma_inv, z) + 1.0);
            assert!((w - mobius_int(&cusp.generator, z)).norm() < 1e-12);
        }
    }
}

#[test]
fn y0_bounds_are_attained() {
    for level in [1u32, 2, 4] {
        let g = GroupContext::new(level).unwrap();
        let mut lowest = f64::INFINITY;
        for i in 0..4000 {
            let x = -0.5 + (i as f64 + 0.5) / 4000.0;
            for y in [1e-3, 0.02, 0.07, 0.2, 0.3] {
                let p = g.pullback(Complex64::new(x, y)).unwrap();
                lowest = lowest.min(p.w.im);
            }
        }
        assert!(
            lowest >= g.y0() * (1.0 - 1e-9),
            "N={level}: {lowest} < {}",
            g.y0()
        );
        assert!(
            lowest < g.y0() * 1.05,
            "N={level}: bound {} not sharp ({lowest})",
            g.y0()
        );
    }
}

#[test]
fn sigma_cocycle_trivial_for_positive_lower_left() {
    let a = Matrix2::from_i64(1, 1, 1, 2);
    let b = Matrix2::from_i64(2, 1, 1, 1);
    assert!((sigma_cocycle_int(&a, &b, 0.7).unwrap() - 1.0).norm() < 1e-13);
}

fn point() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -6.0f64..0.5).prop_map(|(x, ly)| Complex64::new(x, 10f64.powf(ly)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn modular_reduction_lands_in_domain(z in point()) {
        let (w, m) = reduce_modular(z).unwrap();
        prop_assert!(m.is_special_linear());
        prop_assert!(in_standard_domain(w), "{w}");
        prop_assert!((mobius_int(&m, z) - w).norm() < 1e-9 * (1.0 + w.norm()));
        prop_assert!(w.im >= z.im * (1.0 - 1e-12));
    }

    #[test]
    fn pullback_round_trip(z in point(), li in 0usize..3) {
        let level = [1u32, 2, 4][li];
        let g = GroupContext::new(level).unwrap();
        let p = g.pullback(z).unwrap();
        prop_assert!(g.contains(&p.word));
        if level == 1 {
            prop_assert!(p.z_star.im >= z.im * (1.0 - 1e-12));
        }
        let back = mobius_int(&p.word.inverse(), p.z_star);
        prop_assert!((back - z).norm() < 1e-9 * (1.0 + z.norm()));
        prop_assert!(p.w.im >= g.y0() * (1.0 - 1e-9));
        let w = mobius(&g.cusps[p.cusp].sigma_inv, p.z_star);
        prop_assert!((w - p.w).norm() < 1e-12 * (1.0 + w.norm()));
    }

    #[test]
    fn pullback_is_invariant(z in point(), t in -3i64..3) {
        // z and z + t pull back to the same point on every level
        let g = GroupContext::new(4).unwrap();
        let a = g.pullback(z).unwrap();
        let b = g.pullback(z + t as f64).unwrap();
        // relative error of (az + b)/(cz + d) is about eps (|c||z| + |d|) / |cz + d|
        let cond = |m: &Matrix2<i64>, z: Complex64| {
            let [_, _, c, d] = m.to_f64();
            (c.abs() * z.norm() + d.abs()) / (z * c + d).norm()
        };
        let k = cond(&a.word, z).max(cond(&b.word, z + t as f64));
        let tol = 64.0 * f64::EPSILON * (1.0 + a.z_star.norm()) * k;
        prop_assert!((a.z_star - b.z_star).norm() < tol, "{} vs {}", a.z_star, b.z_star);
    }
}
