//! Operators acting on finite blocks of Fourier coefficients: Hecke operators
//! for `v_eta^{2k}` on PSL(2,Z) and for the theta multiplier, the Kohnen
//! operator `L`, the involution `tau_N` and the Maass shift operators.
//!
//! Coefficients outside the supplied block are never guessed. A map whose
//! value needs an unknown coefficient returns `None` at that index.

use std::collections::BTreeMap;

use num_complex::Complex;
use thiserror::Error;

use crate::arithmetic::{divisors, gcd_u64, is_prime, jacobi};
use crate::scalar::Real;
use crate::solver::CoefficientBlock;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("weight {0} is not a positive integer prime to 12 in the required sense")]
    InvalidWeight(i64),
    #[error("m = {m} violates the congruence required at weight {k}")]
    Congruence { k: i64, m: i64 },
    #[error("coefficient {0} is needed but unavailable")]
    Missing(i64),
    #[error("coefficient {0} vanishes")]
    Vanishing(i64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("{0} is not square-free")]
    NotSquarefree(u64),
}

/// Coefficients `n -> c(n)` at one cusp.
pub type CoeffMap<T> = BTreeMap<i64, Complex<T>>;

/// Partial result of an operator: `None` marks indices that need unknowns.
pub type PartialMap<T> = BTreeMap<i64, Option<Complex<T>>>;

/// Real coefficients as a map.
pub fn real_map<T: Real>(pairs: impl IntoIterator<Item = (i64, T)>) -> CoeffMap<T> {
    pairs
        .into_iter()
        .map(|(n, x)| (n, Complex::new(x, T::zero())))
        .collect()
}

/// The coefficients of one cusp of a block.
pub fn cusp_map(block: &CoefficientBlock, cusp: usize) -> CoeffMap<f64> {
    let cc = &block.cusps[cusp];
    cc.indices()
        .filter_map(|n| cc.get(n).map(|c| (n, c)))
        .collect()
}

fn get<T: Real>(c: &CoeffMap<T>, n: i64) -> Result<Complex<T>, OperatorError> {
    c.get(&n).copied().ok_or(OperatorError::Missing(n))
}

fn real<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// `Lambda_{k,R}`, the constant with `Theta^2 = Lambda_{k,R}`.
pub fn lambda_kr<T: Real>(k: u32, r: T) -> T {
    let r2 = r * r;
    let l = k / 2;
    if k % 2 == 0 {
        (1..=l)
            .map(|j| {
                let j = T::from_u32(j).unwrap();
                let f = j * (j - T::one()) + real::<T>(0.25) + r2;
                f * f
            })
            .fold(T::one(), |a, b| a * b)
    } else {
        -r2 * (1..=l)
            .map(|j| {
                let j = T::from_u32(j).unwrap();
                let f = j * j + r2;
                f * f
            })
            .fold(T::one(), |a, b| a * b)
    }
}

/// Weight data for the Hecke operators on `v_eta^{2k}`, integer `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeckeContext {
    pub k: i64,
    /// `D = k / (12, k)`.
    pub d: i64,
}

impl HeckeContext {
    pub fn new(k: i64) -> Result<Self, OperatorError> {
        if k < 1 || k % 12 == 0 {
            return Err(OperatorError::InvalidWeight(k));
        }
        let g = gcd_u64(12, k as u64) as i64;
        Ok(Self { k, d: k / g })
    }

    /// `chi_k(d) = i^{k(d-1)}` as a number of quarter turns.
    pub fn chi_quarter_turns(&self, d: i64) -> u8 {
        (self.k * (d - 1)).rem_euclid(4) as u8
    }

    pub fn chi<T: Real>(&self, d: i64) -> Complex<T> {
        let (o, z) = (T::one(), T::zero());
        match self.chi_quarter_turns(d) {
            0 => Complex::new(o, z),
            1 => Complex::new(z, o),
            2 => Complex::new(-o, z),
            _ => Complex::new(z, -o),
        }
    }

    fn check(&self, m: i64, sign: i64) -> Result<(), OperatorError> {
        if m < 1 || (self.k * m - sign * self.k).rem_euclid(12) != 0 {
            return Err(OperatorError::Congruence { k: self.k, m });
        }
        Ok(())
    }

    /// `b(n)` of `T_m f` for every `n` in `ns`; requires `k m = k mod 12`.
    pub fn t_map<T: Real>(
        &self,
        m: i64,
        c: &CoeffMap<T>,
        ns: impl IntoIterator<Item = i64>,
    ) -> Result<PartialMap<T>, OperatorError> {
        self.check(m, 1)?;
        let shift = self.k * (m - 1) / 12;
        Ok(ns
            .into_iter()
            .map(|n| {
                let b = self.divisor_sum(m, n - shift, |d| {
                    let num = 12 * n * m + self.k * (m - d * d);
                    c.get(&(num / (12 * d * d))).copied()
                });
                (n, b)
            })
            .collect())
    }

    /// `d(n)` of `T^_m f` for every `n` in `ns`; requires `k m = -k mod 12`.
    /// The divisors run over `d | (m, n + k(m+1)/12)`, the condition under
    /// which the coefficient index is integral.
    pub fn t_hat_map<T: Real>(
        &self,
        m: i64,
        c: &CoeffMap<T>,
        r: T,
        ns: impl IntoIterator<Item = i64>,
    ) -> Result<PartialMap<T>, OperatorError> {
        self.check(m, -1)?;
        let lam = lambda_kr(self.k as u32, r);
        let shift = self.k * (m + 1) / 12;
        Ok(ns
            .into_iter()
            .map(|n| {
                let b = self.divisor_sum(m, n + shift, |d| {
                    let num = 12 * n * m + self.k * (m + d * d);
                    let j = num / (12 * d * d);
                    let v = c.get(&-j).copied()?;
                    Some(if j >= 1 { v } else { v * lam })
                });
                (n, b)
            })
            .collect())
    }

    fn divisor_sum<T: Real>(
        &self,
        m: i64,
        other: i64,
        term: impl Fn(i64) -> Option<Complex<T>>,
    ) -> Option<Complex<T>> {
        let g = gcd_u64(m as u64, other.unsigned_abs());
        let mut acc = Complex::new(T::zero(), T::zero());
        for d in divisors(g) {
            let d = d as i64;
            acc = acc + self.chi::<T>(d) * term(d)?;
        }
        Some(acc)
    }

    /// `lambda_m = b(0) / c(0)` for an eigenform of `T_m`.
    pub fn eigenvalue<T: Real>(
        &self,
        m: i64,
        c: &CoeffMap<T>,
    ) -> Result<Complex<T>, OperatorError> {
        let b0 = self.t_map(m, c, [0])?[&0].ok_or(OperatorError::Missing(0))?;
        let c0 = get(c, 0)?;
        if c0.norm() == T::zero() {
            return Err(OperatorError::Vanishing(0));
        }
        Ok(b0 / c0)
    }
}

/// One evaluated coefficient relation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationResidual {
    pub relation: &'static str,
    pub n: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// The proportionality relations between weight-1 coefficients (normalized
/// to `c(1) = 1` first) for `1 <= n <= n_max`, skipping relations that need
/// missing coefficients.
pub fn weight1_relations(
    c: &CoeffMap<f64>,
    r: f64,
    n_max: i64,
) -> Result<Vec<RelationResidual>, OperatorError> {
    let c1 = get(c, 1)?;
    if c1.norm() == 0.0 {
        return Err(OperatorError::Vanishing(1));
    }
    let v = |n: i64| c.get(&n).map(|z| (z / c1).re);
    let c0 = v(0).ok_or(OperatorError::Missing(0))?;
    let cm1 = v(-1).ok_or(OperatorError::Missing(-1))?;
    let mut out = Vec::new();
    let mut push = |relation, n, lhs: Option<f64>, rhs: Option<f64>| {
        if let (Some(lhs), Some(rhs)) = (lhs, rhs) {
            out.push(RelationResidual {
                relation,
                n,
                lhs,
                rhs,
                residual: (lhs - rhs).abs(),
            });
        }
    };
    for n in 1..=n_max {
        if (12 * n + 1) % 13 != 0 {
            push(
                "c(n) = c(0) c(13n+1)",
                n,
                v(n),
                v(13 * n + 1).map(|x| c0 * x),
            );
        } else {
            let rhs = match (v(13 * n + 1), v((n - 1) / 13)) {
                (Some(a), Some(b)) => Some(c0 * (a + b)),
                _ => None,
            };
            push("c(n) = c(0) (c(13n+1) + c((n-1)/13))", n, v(n), rhs);
            if ((12 * n + 1) / 13) % 13 != 0 {
                push(
                    "c(n) = c(0) c(13n+1) / (1 - c(0)^2)",
                    n,
                    v(n),
                    v(13 * n + 1).map(|x| c0 * x / (1.0 - c0 * c0)),
                );
            }
        }
        let f = -r * r * c0 / cm1;
        if (12 * n - 1) % 11 != 0 {
            push(
                "c(-n) = -R^2 c(0) c(11n-1) / c(-1)",
                -n,
                v(-n),
                v(11 * n - 1).map(|x| f * x),
            );
        } else {
            let rhs = match (v(11 * n - 1), v((n - 1) / 11)) {
                (Some(a), Some(b)) => Some(f * (a - b)),
                _ => None,
            };
            push(
                "c(-n) = -R^2 c(0) (c(11n-1) - c((n-1)/11)) / c(-1)",
                -n,
                v(-n),
                rhs,
            );
        }
    }
    Ok(out)
}

fn vanishing_guard<T: Real>(a: Complex<T>, t: i64) -> Result<(), OperatorError> {
    if a.norm() < real::<T>(1e-8) {
        Err(OperatorError::Vanishing(t))
    } else {
        Ok(())
    }
}

/// Hecke eigenvalue `lambda_p` of a theta-multiplier form read off from
/// `a(t) != 0`; `p = 2` gives the eigenvalue of `T_4`.
pub fn theta_hecke_eigenvalue<T: Real>(
    p: u64,
    t: i64,
    a: &CoeffMap<T>,
) -> Result<Complex<T>, OperatorError> {
    let at = get(a, t)?;
    vanishing_guard(at, t)?;
    if p == 2 {
        return Ok(get(a, 4 * t)? / at);
    }
    if !is_prime(p) {
        return Err(OperatorError::NotOddPrime(p));
    }
    let pi = p as i64;
    let sym = jacobi(&t, &pi) as f64;
    let pf = T::from_u64(p).unwrap();
    Ok(get(a, t * pi * pi)? / at + Complex::new(real::<T>(sym) / pf.sqrt(), T::zero()))
}

/// `T_{p^2}` (odd `p`) or the exceptional `T_4` (`p = 2`) on theta-form
/// coefficients.
pub fn theta_hecke_map<T: Real>(
    p: u64,
    a: &CoeffMap<T>,
    ns: impl IntoIterator<Item = i64>,
) -> Result<PartialMap<T>, OperatorError> {
    if p != 2 && !is_prime(p) {
        return Err(OperatorError::NotOddPrime(p));
    }
    let pi = p as i64;
    let p2 = pi * pi;
    let pf = T::from_u64(p).unwrap();
    Ok(ns
        .into_iter()
        .map(|n| {
            let b = if p == 2 {
                a.get(&(4 * n)).copied()
            } else {
                let low = if n % p2 == 0 {
                    a.get(&(n / p2)).copied()
                } else {
                    Some(Complex::new(T::zero(), T::zero()))
                };
                match (a.get(&(p2 * n)), low, a.get(&n)) {
                    (Some(&x), Some(y), Some(&z)) => {
                        let s = real::<T>(jacobi(&n, &pi) as f64) / pf.sqrt();
                        Some(x + y + z * s)
                    }
                    _ => None,
                }
            };
            (n, b)
        })
        .collect())
}

/// Coefficients at infinity of `L f` on Gamma0(4), weight 1/2, from the
/// expansions at infinity, 0 and -1/2.
pub fn operator_l<T: Real>(
    a1: &CoeffMap<T>,
    a2: &CoeffMap<T>,
    a3: &CoeffMap<T>,
    ns: impl IntoIterator<Item = i64>,
) -> PartialMap<T> {
    let half = real::<T>(0.5);
    let sqrt2 = real::<T>(2f64.sqrt());
    let one_i = Complex::new(T::one(), T::one());
    ns.into_iter()
        .map(|n| {
            let b = a1.get(&n).and_then(|&x| match n.rem_euclid(4) {
                0 => a2.get(&(n / 4)).map(|&y| (x + one_i * y) * half),
                1 => {
                    let j = (n - 1).div_euclid(4);
                    let s = if j.rem_euclid(2) == 0 { sqrt2 } else { -sqrt2 };
                    a3.get(&j).map(|&y| (x + y * s) * half)
                }
                _ => Some(-x * half),
            });
            (n, b)
        })
        .collect()
}

/// Classification with respect to the Kohnen plus space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum KohnenClass {
    Vplus,
    Vminus,
    Neither,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KohnenReport {
    pub class: KohnenClass,
    /// `max |a(n)|` over `n = 2, 3 mod 4`, relative to the largest `|a(n)|`.
    pub plus_defect: f64,
    /// `max |b(n) + a(n)/2|` relative to the largest `|a(n)|`, when all
    /// three cusps were supplied.
    pub minus_defect: Option<f64>,
}

/// Decides `V+` from the expansion at infinity (`n_max >= 20` required for
/// a meaningful answer) and `V-` from the `L = -1/2` relation when the other
/// two cusps are given.
pub fn classify_vplus(
    a1: &CoeffMap<f64>,
    others: Option<(&CoeffMap<f64>, &CoeffMap<f64>)>,
    n_max: i64,
    tol: f64,
) -> KohnenReport {
    let scale = (1..=n_max)
        .filter_map(|n| a1.get(&n))
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return KohnenReport {
            class: KohnenClass::Neither,
            plus_defect: f64::NAN,
            minus_defect: None,
        };
    }
    let plus_defect = (1..=n_max)
        .filter(|n| n % 4 == 2 || n % 4 == 3)
        .filter_map(|n| a1.get(&n))
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        / scale;
    let minus_defect = others.map(|(a2, a3)| {
        operator_l(a1, a2, a3, 1..=n_max)
            .into_iter()
            .filter_map(|(n, b)| Some((b? + a1.get(&n)? * 0.5).norm()))
            .fold(0.0, f64::max)
            / scale
    });
    let class = if plus_defect < tol {
        KohnenClass::Vplus
    } else if minus_defect.is_some_and(|d| d < tol) {
        KohnenClass::Vminus
    } else {
        KohnenClass::Neither
    };
    KohnenReport {
        class,
        plus_defect,
        minus_defect,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    Raise,
    Lower,
}

/// Factor applied to `c(n)` by `E_k^+` or `E_k^-` for a term with
/// `n_alpha = n + alpha` of the given sign.
pub fn maass_shift_factor<T: Real>(dir: Shift, k: T, r: T, positive: bool) -> T {
    let q = real::<T>(0.25) + r * r;
    let four = real::<T>(4.0);
    let two = real::<T>(2.0);
    match (dir, positive) {
        (Shift::Raise, true) => -T::one(),
        (Shift::Lower, true) => -(k * (k - two) / four + q),
        (Shift::Raise, false) => k * (k + two) / four + q,
        (Shift::Lower, false) => T::one(),
    }
}

/// Coefficients at weight `k +- 2` of `E_k^{+-} f`.
pub fn maass_shift_map<T: Real>(dir: Shift, k: T, r: T, alpha: T, c: &CoeffMap<T>) -> CoeffMap<T> {
    c.iter()
        .map(|(&n, &z)| {
            let positive = T::from_i64(n).unwrap() + alpha > T::zero();
            (n, z * maass_shift_factor(dir, k, r, positive))
        })
        .collect()
}

/// The constant by which `E_{k+-2}^{-+} E_k^{+-}` acts.
pub fn maass_composite_constant<T: Real>(first: Shift, k: T, r: T) -> T {
    let q = real::<T>(0.25) + r * r;
    let four = real::<T>(4.0);
    let two = real::<T>(2.0);
    match first {
        Shift::Raise => k * (k + two) / four + q,
        Shift::Lower => k * (k - two) / four + q,
    }
}

/// Best global sign `eps` in `c_2(n) = eps i^{-k} c_1(n)` with the largest
/// deviation over the common indices.
pub fn tau_n_check(c1: &CoeffMap<f64>, c2: &CoeffMap<f64>, k: f64) -> (i8, f64) {
    let phase = Complex::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * k);
    let dev = |s: f64| {
        c1.iter()
            .filter_map(|(n, &a)| c2.get(n).map(|&b| (b - a * phase * s).norm()))
            .fold(0.0, f64::max)
    };
    let (p, m) = (dev(1.0), dev(-1.0));
    if p <= m {
        (1, p)
    } else {
        (-1, m)
    }
}

/// `max(1e-8, 50 H)`.
pub fn relation_tolerance(h: f64) -> f64 {
    (50.0 * h).max(1e-8)
}
