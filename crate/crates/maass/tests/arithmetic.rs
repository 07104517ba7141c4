use maass::arithmetic::{
    complete_bottom_row, dedekind_sum, dedekind_sum_direct, dedekind_sum_fast, divisors, jacobi,
    kronecker, sawtooth, Matrix2,
};
use maass::{BigInt, Rational};
use num_integer::Integer;
use num_rational::Ratio;
use proptest::prelude::*;

#[test]
fn dedekind_fast_matches_direct_up_to_200() {
    for c in 1i64..=200 {
        for d in -c..=c {
            if d.gcd(&c) != 1 {
                continue;
            }
            let direct = dedekind_sum_direct(&d, &c).unwrap();
            assert_eq!(dedekind_sum_fast(&d, &c), direct, "s({d},{c})");
            assert_eq!(dedekind_sum(&d, &c).unwrap(), direct);
        }
    }
}

#[test]
fn dedekind_known_values() {
    assert_eq!(dedekind_sum(&1i64, &1).unwrap(), Ratio::from_integer(0));
    assert_eq!(dedekind_sum(&1i64, &3).unwrap(), Ratio::new(1, 18));
    assert_eq!(dedekind_sum(&2i64, &5).unwrap(), Ratio::new(0, 1));
    // s(1, c) = (c - 1)(c - 2) / (12 c)
    for c in [97i64, 1001, 65537] {
        assert_eq!(
            dedekind_sum(&1, &c).unwrap(),
            Ratio::new((c - 1) * (c - 2), 12 * c)
        );
    }
    assert!(dedekind_sum(&2i64, &4).is_err());
    assert!(dedekind_sum(&1i64, &0).is_err());
}

#[test]
fn dedekind_bigint_large() {
    let c: BigInt = "1000000000000000000000007".parse().unwrap();
    let one = BigInt::from(1);
    let s: Rational = dedekind_sum(&one, &c).unwrap();
    let expect = Rational::new((&c - 1u32) * (&c - 2u32), BigInt::from(12) * &c);
    assert_eq!(s, expect);
}

#[test]
fn sawtooth_is_odd_and_periodic() {
    for (n, d) in [(1i64, 3i64), (7, 5), (-2, 9), (4, 1)] {
        let x = Ratio::new(n, d);
        assert_eq!(sawtooth(&-x), -sawtooth(&x));
        assert_eq!(sawtooth(&(x + 3)), sawtooth(&x));
    }
}

#[test]
fn kronecker_table() {
    // (c/d) against hand values, including d even and negative entries
    let cases = [
        (2i64, 7i64, 1i8),
        (3, 7, -1),
        (5, 8, -1),
        (3, 8, -1),
        (7, 8, 1),
        (1, 2, 1),
        (3, 2, -1),
        (-1, 7, -1),
        (-1, -7, 1),
        (3, -7, -1),
        (0, 1, 1),
        (0, -1, 1),
        (0, 3, 0),
        (4, 6, 0),
    ];
    for (c, d, v) in cases {
        assert_eq!(kronecker(&c, &d), v, "({c}/{d})");
    }
}

proptest! {
    #[test]
    fn dedekind_is_odd(c in 1i64..5000, d in -5000i64..5000) {
        prop_assume!(d.gcd(&c) == 1);
        prop_assert_eq!(dedekind_sum(&-d, &c).unwrap(), -dedekind_sum(&d, &c).unwrap());
    }

    #[test]
    fn dedekind_depends_on_residue(c in 1i64..2000, d in -2000i64..2000, t in -5i64..5) {
        prop_assume!(d.gcd(&c) == 1);
        prop_assert_eq!(dedekind_sum(&(d + t * c), &c).unwrap(), dedekind_sum(&d, &c).unwrap());
    }

    #[test]
    fn dedekind_reciprocity(h in 1i64..100_000, k in 1i64..100_000) {
        prop_assume!(h.gcd(&k) == 1);
        let lhs = dedekind_sum(&h, &k).unwrap() + dedekind_sum(&k, &h).unwrap();
        let rhs = Ratio::new(h * h + k * k + 1, 12 * h * k) - Ratio::new(1, 4);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn jacobi_is_multiplicative(a in -500i64..500, b in -500i64..500, n in 0i64..400) {
        let n = 2 * n + 1;
        prop_assert_eq!(jacobi(&(a * b), &n), jacobi(&a, &n) * jacobi(&b, &n));
    }

    #[test]
    fn jacobi_matches_euler_for_primes(a in 0i64..1000, pi in 0usize..6) {
        let p = [3i64, 5, 7, 11, 101, 997][pi];
        let mut pow = 1i64;
        let base = a.rem_euclid(p);
        for _ in 0..(p - 1) / 2 {
            pow = pow * base % p;
        }
        let euler = if pow == p - 1 { -1 } else { pow as i8 };
        prop_assert_eq!(jacobi(&a, &p), euler);
    }

    #[test]
    fn kronecker_periodic_in_even_d(c in 1i64..200, d in 1i64..200) {
        // (c/d) = (c/d + 4c) for odd c > 0 (quadratic reciprocity consequence)
        prop_assume!(c % 2 == 1);
        prop_assert_eq!(kronecker(&d, &c), kronecker(&(d + c), &c));
    }

    #[test]
    fn completed_rows_are_special_linear(c in -10_000i64..10_000, d in -10_000i64..10_000) {
        prop_assume!(c.gcd(&d) == 1);
        let m = complete_bottom_row(&c, &d).unwrap();
        prop_assert!(m.is_special_linear());
        prop_assert_eq!((m.c, m.d), (c, d));
        prop_assert_eq!(&m * &m.inverse(), Matrix2::identity());
    }

    #[test]
    fn divisors_divide(n in 1u64..100_000) {
        let ds = divisors(n);
        prop_assert!(ds.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ds.iter().all(|d| n % d == 0));
        prop_assert_eq!(ds.len(), (1..=n).filter(|d| n % d == 0).count());
    }
}
