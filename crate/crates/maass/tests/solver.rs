use std::f64::consts::PI;

use maass::geometry::GroupContext;
use maass::multipliers::MultiplierSystem;
use maass::solver::{
    orthogonality_defect, sample_points, truncation_limit, HejhalSolver, LocatedForm,
    Normalization, SolverConfig,
};
use maass::special_functions::whittaker_w;

fn eta(k: f64) -> HejhalSolver {
    HejhalSolver::with_defaults(MultiplierSystem::eta(k).unwrap()).unwrap()
}

fn theta() -> HejhalSolver {
    HejhalSolver::with_defaults(MultiplierSystem::theta().unwrap()).unwrap()
}

fn locate(s: &HejhalSolver, r: f64, w: f64) -> LocatedForm {
    s.refine(r - w, r + w, 1e-12, &s.normalization()).unwrap()
}

fn cm_eigenvalue(k: f64) -> f64 {
    2.0 * PI * k / (7.0 + 2.0 * 12f64.sqrt()).ln()
}

#[test]
fn discrete_orthogonality() {
    for (m, alpha) in [(10, 0.0), (25, 1.0 / 12.0), (40, 0.25), (60, 5.0 / 12.0)] {
        let d = orthogonality_defect(m as usize + 16, m, alpha);
        assert!(d < 1e-13, "M={m} alpha={alpha}: {d:e}");
        // Q = M + 1 is the smallest admissible choice
        assert!(orthogonality_defect(m as usize + 1, m, alpha) < 1e-13);
    }
}

#[test]
fn sampling_grid() {
    let xs = sample_points(5);
    assert_eq!(xs.len(), 10);
    for (i, x) in xs.iter().enumerate() {
        assert!((x + xs[xs.len() - 1 - i]).abs() < 1e-15);
    }
}

#[test]
fn truncation_drops_only_small_terms() {
    let (y, r, k, eps) = (0.5, 9.5, 0.0, 1e-10);
    let m = truncation_limit(y, r, k, eps);
    assert!((8..60).contains(&m), "M = {m}");
    // relative to the hump of the n = 1 term at this R
    let first = (1..200)
        .map(|i| whittaker_w(0.0, r, i as f64 * 0.1).unwrap().abs())
        .fold(0.0, f64::max);
    let dropped = whittaker_w(0.0, r, 4.0 * PI * (m + 1) as f64 * y)
        .unwrap()
        .abs()
        / ((m + 1) as f64).sqrt();
    assert!(dropped / first < eps, "dropped {dropped:e} first {first:e}");
    assert!(truncation_limit(0.7, r, k, eps) < m);
    assert!(truncation_limit(y, r, k, 1e-12) > truncation_limit(y, r, k, 1e-6));
}

#[test]
fn matrix_entries_bounded() {
    let s = eta(1.0);
    let m = s
        .truncation(5.0)
        .max(truncation_limit(0.5, 5.0, 1.0, 1e-14));
    let sys = s.build_system(5.0, 0.5, m).unwrap();
    let big = sys.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(big.is_finite() && big < 1e3, "max |V| = {big}");
    assert_eq!(sys.matrix.nrows(), sys.index.len());
}

#[test]
fn config_validation() {
    let ctx = GroupContext::new(1).unwrap();
    let mut cfg = SolverConfig::for_group(&ctx);
    cfg.y2 = cfg.y1;
    assert!(HejhalSolver::new(ctx.clone(), MultiplierSystem::eta(1.0).unwrap(), cfg).is_err());
    let mut cfg = SolverConfig::for_group(&ctx);
    cfg.y1 = 0.9;
    assert!(HejhalSolver::new(ctx, MultiplierSystem::eta(1.0).unwrap(), cfg).is_err());
    assert!(HejhalSolver::new(
        GroupContext::new(4).unwrap(),
        MultiplierSystem::eta(1.0).unwrap(),
        SolverConfig::for_group(&GroupContext::new(4).unwrap())
    )
    .is_err());
    assert!(eta(1.0).locate_eigenvalues(3.0, 2.0, 0.1).is_err());
}

#[test]
fn weight_one_cm_form() {
    let s = eta(1.0);
    let exact = cm_eigenvalue(1.0);
    let f = locate(&s, exact, 2e-3);
    assert!(
        (f.point.r - exact).abs() < 1e-10,
        "R = {} vs {exact}",
        f.point.r
    );
    assert!(f.h < 1e-9, "H = {:e}", f.h);
    // Phase 1 leaves c(7) at the 1e-9 level; the Phase-2 value is clean
    let c7 = f.coefficients.c(0, 7).unwrap().norm();
    assert!(c7 < 1e-8, "Phase-1 c(7) = {c7:e}");
    let b = s.expand_coefficients(&f, 20).unwrap();
    let c7 = b.c(0, 7).unwrap().norm();
    assert!(c7 < 1e-9, "Phase-2 c(7) = {c7:e}");
    assert!(b.max_imag_at_infinity() < 10.0 * f.h);
}

#[test]
fn weight_one_non_cm_and_stability() {
    let s = eta(1.0);
    let f = locate(&s, 3.66240686698667, 2e-3);
    assert!((f.point.r - 3.66240686698667).abs() < 1e-9);
    let c2 = f.coefficients.re(2).unwrap();
    assert!((c2 - -1.697113317091).abs() < 1e-8, "c(2) = {c2}");
    // KJ reality, on the well-determined low Phase-1 indices and on Phase 2
    let low = (-6..=8)
        .filter_map(|n| f.coefficients.c(0, n))
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    assert!(low < 10.0 * f.h, "Phase-1 imag {low:e}");
    assert!(
        s.expand_coefficients(&f, 20)
            .unwrap()
            .max_imag_at_infinity()
            < 10.0 * f.h
    );
    // a third height reproduces the first
    let y3 = 0.5 * (s.config.y1 + s.config.y2);
    let m = s.truncation(f.point.r);
    let b3 = s
        .solve_at(f.point.r, &[y3], m, &s.normalization())
        .unwrap()
        .remove(0);
    let dev: f64 = (2..=4)
        .map(|n| (b3.c(0, n).unwrap() - f.coefficients.c(0, n).unwrap()).norm())
        .sum();
    assert!(dev < 10.0 * f.h, "Y3 deviation {dev:e} vs H {:e}", f.h);
    // a displaced R is clearly unstable
    let (h_off, _, _) = s.stability_residual(f.point.r + 0.01).unwrap();
    assert!(h_off > 1e-3, "H off-eigenvalue {h_off:e}");
}

#[test]
fn weight_zero_regression() {
    let s = HejhalSolver::with_defaults(MultiplierSystem::trivial(1).unwrap()).unwrap();
    let odd = locate(&s, 9.53369526135, 1e-3);
    assert!(
        (odd.point.r - 9.533695261353557).abs() < 1e-9,
        "{}",
        odd.point.r
    );
    assert!((odd.coefficients.re(-1).unwrap() + 1.0).abs() < 1e-8);
    let even = locate(&s, 13.779751351891, 1e-3);
    assert!(
        (even.point.r - 13.77975135189074).abs() < 1e-9,
        "{}",
        even.point.r
    );
    assert!((even.coefficients.re(-1).unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn scan_finds_first_weight_one_eigenvalues() {
    let s = eta(1.0);
    let found = s.locate_eigenvalues(2.0, 4.0, 0.02).unwrap();
    let rs: Vec<f64> = found.iter().map(|f| f.point.r).collect();
    assert_eq!(rs.len(), 2, "{rs:?}");
    assert!((rs[0] - 2.38549209578045).abs() < 1e-10);
    assert!((rs[1] - 3.66240686698667).abs() < 1e-10);
    assert!(s.locate_eigenvalues(2.45, 2.5, 0.01).unwrap().is_empty());
}

#[test]
fn phase_two_cm_coefficients() {
    const TABLE: [f64; 16] = [
        1.755930576575,
        1.0,
        -1.755930576574,
        1.571810322167,
        1.755930576575,
        -1.770268323978,
        -2.474798320759,
        0.0,
        0.346240855507,
        3.510179255561,
        1.116593241680,
        0.0,
        0.0,
        -3.019229958496,
        -1.186431979458,
        -3.079783541463,
    ];
    let s = eta(1.0);
    let f = locate(&s, 4.77098419156091, 2e-3);
    let b = s.expand_coefficients(&f, 40).unwrap();
    for (n, want) in TABLE.iter().enumerate() {
        let got = b.re(n as i64).unwrap();
        assert!((got - want).abs() < 1e-8, "c({n}) = {got} vs {want}");
    }
    let overlap = (b.c(0, 2).unwrap() - f.coefficients.c(0, 2).unwrap()).norm();
    assert!(
        overlap < 10.0 * f.h.max(1e-11),
        "overlap {overlap:e}, H {:e}",
        f.h
    );
}

#[test]
fn theta_phase_two_far_coefficient() {
    let s = theta();
    let norm = Normalization::new(vec![(0, 1, 0.0), (0, 2, 1.0)]);
    let f = s
        .refine(6.046497437542 - 1e-4, 6.046497437542 + 1e-4, 1e-12, &norm)
        .unwrap();
    assert!(f.h < 1e-8, "H = {:e}", f.h);
    let b = s.expand_coefficients(&f, 300).unwrap();
    let a288 = b.re(288).unwrap();
    assert!((a288 - -0.064322242377).abs() < 1e-7, "a(288) = {a288}");
    // coefficients at n = 1 mod 8 vanish for this form
    assert!(b.re(17).unwrap().abs() < 1e-9 && b.re(25).unwrap().abs() < 1e-9);
}

#[test]
fn theta_two_dimensional_space() {
    let s = theta();
    let r = 6.889875675945;
    let sv = s.singular_values(r).unwrap();
    let top = sv[0];
    let small: Vec<f64> = sv.iter().filter(|&&x| x < 1e-6 * top).cloned().collect();
    assert_eq!(
        small.len(),
        2,
        "singular values tail {:?}",
        &sv[sv.len() - 4..]
    );
    let basis = s.eigenspace(r, 1e-6).unwrap();
    assert_eq!(basis.len(), 2);
    for f in &basis {
        assert!(f.h < 1e-8, "H = {:e}", f.h);
    }
    assert!((basis[0].coefficients.re(4).unwrap() - 0.8421976967535).abs() < 1e-8);
    assert!((basis[1].coefficients.re(3).unwrap() - -0.725665465048).abs() < 1e-8);
    // away from the eigenvalue the system is nonsingular
    assert_eq!(s.nullity(r + 0.05, 1e-6).unwrap(), 0);
}
