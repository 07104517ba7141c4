//! The eta and theta multiplier systems and their cusp parameters.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{dedekind_sum, kronecker, ArithmeticError, Matrix2};
use crate::geometry::{sigma_winding, GeometryError, GroupContext};
use crate::scalar::Int;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MultiplierError {
    #[error(transparent)]
    Arithmetic(#[from] ArithmeticError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("Knopp's formula needs c > 0")]
    KnoppNeedsPositiveC,
    #[error("Knopp's formula fixes v_eta^(2k) only for 2k integral, got k = {0}")]
    KnoppWeight(f64),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierFamily {
    Eta,
    Theta,
    Trivial,
}

impl std::fmt::Display for MultiplierFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MultiplierFamily::Eta => "eta",
            MultiplierFamily::Theta => "theta",
            MultiplierFamily::Trivial => "trivial",
        })
    }
}

impl std::str::FromStr for MultiplierFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "eta" => Ok(Self::Eta),
            "theta" => Ok(Self::Theta),
            "trivial" => Ok(Self::Trivial),
            _ => Err(format!("unknown multiplier '{s}'")),
        }
    }
}

fn int<I: Int>(n: i64) -> I {
    I::from_i64(n).expect("small integer fits")
}

/// `e(x) = exp(2 pi i x)`, reducing `x` mod 1 first.
pub fn e(x: f64) -> Complex64 {
    let f = x - x.floor();
    Complex64::from_polar(1.0, 2.0 * PI * f)
}

fn ratio_to_f64<I: Int>(r: &Ratio<I>) -> f64 {
    // split off the integer part so the fraction keeps full precision
    let fl = r.floor();
    let frac = r - &fl;
    fl.to_integer().to_f64().unwrap_or(f64::NAN)
        + frac.numer().to_f64().unwrap_or(f64::NAN) / frac.denom().to_f64().unwrap_or(f64::NAN)
}

/// Rational phase `Phi(A)` with `v_eta^(2k)(A) = e(k Phi(A))`.
pub fn eta_phase<I: Int>(m: &Matrix2<I>) -> Result<Ratio<I>, MultiplierError> {
    m.check_special_linear()?;
    let twelve: I = int(12);
    if m.c.is_zero() {
        let base = Ratio::new(m.b.clone(), twelve);
        return Ok(if m.d.is_one() {
            base
        } else {
            -base - Ratio::new(I::one(), int(2))
        });
    }
    if m.c.is_negative() {
        return Ok(eta_phase(&m.neg())? + Ratio::new(I::one(), int(2)));
    }
    let c = m.c.clone();
    let head = Ratio::new(
        m.a.clone() + m.d.clone() - int::<I>(3) * c.clone(),
        twelve * c.clone(),
    );
    Ok(head - dedekind_sum(&m.d, &c)?)
}

pub fn eta_value<I: Int>(m: &Matrix2<I>, k: f64) -> Result<Complex64, MultiplierError> {
    Ok(e(k * ratio_to_f64(&eta_phase(m)?)))
}

/// Phase `psi` in `[0, 1)` with `v_eta(A) = e(psi)` from Knopp's closed form
/// (no Dedekind sums). Needs `c > 0`.
pub fn eta_knopp_phase<I: Int>(m: &Matrix2<I>) -> Result<Ratio<I>, MultiplierError> {
    m.check_special_linear()?;
    if !m.c.is_positive() {
        return Err(MultiplierError::KnoppNeedsPositiveC);
    }
    let (a, b, c, d) = (m.a.clone(), m.b.clone(), m.c.clone(), m.d.clone());
    let three: I = int(3);
    let core = (a + d.clone()) * c.clone() - b * d.clone() * (c.clone() * c.clone() - I::one());
    let (num, symbol) = if c.is_even() {
        (
            core + three.clone() * d.clone() - three.clone() - three * c.clone() * d.clone(),
            kronecker(&c, &d),
        )
    } else {
        (core - three * c.clone(), kronecker(&d, &c))
    };
    let mut psi = Ratio::new(num, int(24));
    if symbol < 0 {
        psi = psi + Ratio::new(I::one(), int(2));
    }
    Ok(psi.clone() - psi.floor())
}

/// `v_eta^(2k)(A)` via Knopp's formula, defined for `2k` integral and `c > 0`.
pub fn eta_value_knopp<I: Int>(m: &Matrix2<I>, k: f64) -> Result<Complex64, MultiplierError> {
    let two_k = 2.0 * k;
    if two_k.fract() != 0.0 {
        return Err(MultiplierError::KnoppWeight(k));
    }
    let psi = eta_knopp_phase(m)?;
    // e(2k psi) with 2k psi = (2k num) / den, reduced exactly
    let tk = I::from_f64(two_k).ok_or(MultiplierError::KnoppWeight(k))?;
    let scaled = Ratio::new(psi.numer().clone() * tk, psi.denom().clone());
    Ok(e(ratio_to_f64(&(scaled.clone() - scaled.floor()))))
}

/// `v_theta(A) = i^q` for `A` in Gamma0(4); returns `q` in `0..4`.
pub fn theta_quarter_turns<I: Int>(m: &Matrix2<I>) -> Result<u8, MultiplierError> {
    if !m.in_gamma0(4) {
        m.check_special_linear()?;
        return Err(ArithmeticError::NotInGamma0(4).into());
    }
    // conj(eps_d): 1 for d = 1 mod 4, -i for d = 3 mod 4
    let mut q = if m.d.mod_floor(&int(4)) == int(1) {
        0
    } else {
        3
    };
    if kronecker(&m.c, &m.d) < 0 {
        q += 2;
    }
    Ok(q % 4)
}

pub fn theta_value<I: Int>(m: &Matrix2<I>) -> Result<Complex64, MultiplierError> {
    Ok(match theta_quarter_turns(m)? {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    })
}

/// A multiplier system of weight `k` on Gamma0(N).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierSystem {
    pub family: MultiplierFamily,
    pub weight: f64,
    /// Eta family only: the system is `v_eta^(2(k + r))`, regarded as weight `k`.
    pub shift: u32,
    pub level: u32,
    /// Cusp parameters in `[0, 1)`, ordered like the group's cusps.
    pub alphas: Vec<f64>,
}

impl MultiplierSystem {
    pub fn new(family: MultiplierFamily, weight: f64, level: u32) -> Result<Self, MultiplierError> {
        Self::with_shift(family, weight, level, 0)
    }

    pub fn with_shift(
        family: MultiplierFamily,
        weight: f64,
        level: u32,
        shift: u32,
    ) -> Result<Self, MultiplierError> {
        if !weight.is_finite() {
            return Err(MultiplierError::Unsupported(format!("weight {weight}")));
        }
        match family {
            MultiplierFamily::Eta => {
                if shift % 2 != 0 || shift > 10 {
                    return Err(MultiplierError::Unsupported(format!(
                        "eta shift must be one of 0,2,...,10, got {shift}"
                    )));
                }
            }
            MultiplierFamily::Theta => {
                if level % 4 != 0 {
                    return Err(MultiplierError::Unsupported(
                        "theta multiplier needs 4 | N".into(),
                    ));
                }
                let t = (2.0 * weight - 1.0) / 4.0;
                if t.fract() != 0.0 {
                    return Err(MultiplierError::Unsupported(format!(
                        "theta multiplier has weight 1/2 mod 2, got {weight}"
                    )));
                }
            }
            MultiplierFamily::Trivial => {
                if (weight / 2.0).fract() != 0.0 {
                    return Err(MultiplierError::Unsupported(format!(
                        "trivial multiplier needs even integer weight, got {weight}"
                    )));
                }
            }
        }
        if family != MultiplierFamily::Eta && shift != 0 {
            return Err(MultiplierError::Unsupported(
                "shift applies to eta only".into(),
            ));
        }
        let mut v = Self {
            family,
            weight,
            shift,
            level,
            alphas: Vec::new(),
        };
        let ctx = GroupContext::new(level)?;
        v.alphas = cusp_parameters(&v, &ctx)?;
        Ok(v)
    }

    pub fn eta(weight: f64) -> Result<Self, MultiplierError> {
        Self::new(MultiplierFamily::Eta, weight, 1)
    }

    pub fn theta() -> Result<Self, MultiplierError> {
        Self::new(MultiplierFamily::Theta, 0.5, 4)
    }

    pub fn trivial(level: u32) -> Result<Self, MultiplierError> {
        Self::new(MultiplierFamily::Trivial, 0.0, level)
    }

    /// Unreduced real phase `t` with `v(A) = e(t)`.
    pub fn log_value(&self, m: &Matrix2<i64>) -> Result<f64, MultiplierError> {
        let big: Matrix2<BigInt> = m.convert().expect("i64 fits in BigInt");
        if !big.in_gamma0(self.level) {
            big.check_special_linear()?;
            return Err(ArithmeticError::NotInGamma0(self.level).into());
        }
        Ok(match self.family {
            MultiplierFamily::Eta => {
                (self.weight + self.shift as f64) * ratio_to_f64(&eta_phase(&big)?)
            }
            MultiplierFamily::Theta => theta_quarter_turns(&big)? as f64 / 4.0,
            MultiplierFamily::Trivial => 0.0,
        })
    }

    pub fn value(&self, m: &Matrix2<i64>) -> Result<Complex64, MultiplierError> {
        Ok(e(self.log_value(m)?))
    }

    /// `v*(A) = v(A*)` times `e^{pi i k (1 - sgn d)}` when `c = 0`.
    pub fn star_value(&self, m: &Matrix2<i64>) -> Result<Complex64, MultiplierError> {
        let mut t = self.log_value(&m.star())?;
        if m.c == 0 && m.d < 0 {
            t += self.weight;
        }
        Ok(e(t))
    }
}

/// Cusp parameters `alpha_j` with `v^{sigma_j}(S) = e(alpha_j)`.
pub fn cusp_parameters(
    v: &MultiplierSystem,
    ctx: &GroupContext,
) -> Result<Vec<f64>, MultiplierError> {
    if ctx.level != v.level {
        return Err(MultiplierError::Unsupported(format!(
            "multiplier level {} vs group level {}",
            v.level, ctx.level
        )));
    }
    ctx.cusps
        .iter()
        .map(|cusp| {
            let n = sigma_winding(&cusp.generator.to_f64(), &cusp.sigma)?;
            let t = v.log_value(&cusp.generator)? + v.weight * n as f64;
            let mut a = t - t.floor();
            if a > 1.0 - 1e-13 {
                a = 0.0;
            }
            Ok(a)
        })
        .collect()
}

/// `|v(AB) - sigma_k(A, B) v(A) v(B)|`.
pub fn cocycle_residual(
    v: &MultiplierSystem,
    a: &Matrix2<i64>,
    b: &Matrix2<i64>,
) -> Result<f64, MultiplierError> {
    let n = sigma_winding(&a.to_f64(), &b.to_f64())?;
    let lhs = v.value(&(a * b))?;
    let rhs = e(v.weight * n as f64 + v.log_value(a)? + v.log_value(b)?);
    Ok((lhs - rhs).norm())
}

pub fn cocycle_check(
    v: &MultiplierSystem,
    a: &Matrix2<i64>,
    b: &Matrix2<i64>,
) -> Result<bool, MultiplierError> {
    Ok(cocycle_residual(v, a, b)? < 1e-12)
}

/// `|conj(v*(A)) - v(A)|`, zero for systems compatible with the KJ involution.
pub fn star_residual(v: &MultiplierSystem, m: &Matrix2<i64>) -> Result<f64, MultiplierError> {
    Ok((v.star_value(m)?.conj() - v.value(m)?).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    #[test]
    fn eta_phase_examples() {
        assert_eq!(eta_phase(&Matrix2::<i64>::s()).unwrap(), r(1, 12));
        assert_eq!(eta_phase(&Matrix2::<i64>::t()).unwrap(), r(-1, 4));
        assert_eq!(eta_phase(&Matrix2::<i64>::identity()).unwrap(), r(0, 1));
        assert_eq!(
            eta_phase(&Matrix2::<i64>::identity().neg()).unwrap(),
            r(-1, 2)
        );
        assert!(eta_phase(&Matrix2::<i64>::from_i64(2, 0, 0, 1)).is_err());
    }

    #[test]
    fn eta_value_examples() {
        let s = Matrix2::<i64>::s();
        let t = Matrix2::<i64>::t();
        assert!((eta_value(&s, 0.5).unwrap() - e(1.0 / 24.0)).norm() < 1e-15);
        assert!(
            (eta_value(&t, 0.5).unwrap() - Complex64::from_polar(1.0, -PI / 4.0)).norm() < 1e-15
        );
        let a = Matrix2::<i64>::from_i64(7, 3, 9, 4);
        assert!((eta_value(&a, 12.0).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn knopp_examples() {
        for m in [
            Matrix2::<i64>::t(),
            Matrix2::from_i64(1, 0, 1, 1),
            Matrix2::from_i64(1, 0, 2, 1),
            Matrix2::from_i64(5, 2, 7, 3),
        ] {
            for k in [0.5, 1.0, 2.5] {
                let x = eta_value(&m, k).unwrap();
                let y = eta_value_knopp(&m, k).unwrap();
                assert!((x - y).norm() < 1e-13, "{m:?} {k}");
            }
        }
        assert!(eta_value_knopp(&Matrix2::<i64>::s(), 0.5).is_err());
        assert!(eta_value_knopp(&Matrix2::<i64>::t(), 0.3).is_err());
    }

    #[test]
    fn theta_examples() {
        assert_eq!(
            theta_value(&Matrix2::<i64>::s()).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            theta_value(&Matrix2::<i64>::from_i64(1, 0, 4, 1)).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            theta_value(&Matrix2::<i64>::from_i64(3, 1, 8, 3)).unwrap(),
            Complex64::new(0.0, 1.0)
        );
        assert_eq!(
            theta_value(&Matrix2::<i64>::identity().neg()).unwrap(),
            Complex64::new(0.0, -1.0)
        );
        assert!(theta_value(&Matrix2::<i64>::t()).is_err());
    }

    #[test]
    fn cusp_parameter_examples() {
        let v = MultiplierSystem::eta(1.0).unwrap();
        assert!((v.alphas[0] - 1.0 / 12.0).abs() < 1e-15);
        let v = MultiplierSystem::eta(12.0).unwrap();
        assert_eq!(v.alphas, vec![0.0]);
        let v = MultiplierSystem::eta(13.5).unwrap();
        assert!((v.alphas[0] - 0.125).abs() < 1e-14);
        let v = MultiplierSystem::theta().unwrap();
        assert_eq!(v.alphas[0], 0.0);
        assert_eq!(v.alphas[1], 0.0);
        assert!((v.alphas[2] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn minus_identity() {
        let m = Matrix2::<i64>::identity().neg();
        for k in [0.5, 1.0, 5.25] {
            let v = MultiplierSystem::eta(k).unwrap();
            assert!((v.value(&m).unwrap() - Complex64::from_polar(1.0, -PI * k)).norm() < 1e-13);
        }
    }
}
