//! Hecke congruence groups Gamma0(N), N in {1, 2, 4}: cusps, normalizers,
//! coset representatives and the pullback into a fundamental domain.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::Matrix2;

/// Real 2x2 matrix stored row-major `[a, b, c, d]`.
pub type RealMatrix = [f64; 4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("unsupported level {0}; expected 1, 2 or 4")]
    UnsupportedLevel(u32),
    #[error("point {0} is not in the upper half-plane")]
    NotInUpperHalfPlane(Complex64),
    #[error("cz + d vanishes")]
    Singular,
    #[error("reduction did not converge for {0}")]
    NoConvergence(Complex64),
    #[error("no coset representative matched (internal)")]
    CosetLookup,
}

/// Boundary point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CuspPoint {
    Infinity,
    Rational(i64, i64),
}

impl std::fmt::Display for CuspPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CuspPoint::Infinity => write!(f, "inf"),
            CuspPoint::Rational(p, 1) => write!(f, "{p}"),
            CuspPoint::Rational(p, q) => write!(f, "{p}/{q}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cusp {
    pub point: CuspPoint,
    pub width: u32,
    /// Normalizer with `sigma(inf) = point` and `sigma S sigma^-1 = generator`.
    pub sigma: RealMatrix,
    pub sigma_inv: RealMatrix,
    pub generator: Matrix2<i64>,
}

/// Fundamental-domain boundary point `q_i = R_i(inf)` with its vertex map.
#[derive(Debug, Clone)]
pub struct Vertex {
    pub point: CuspPoint,
    pub cusp: usize,
    pub u: Matrix2<i64>,
}

#[derive(Debug, Clone)]
pub struct GroupContext {
    pub level: u32,
    pub cusps: Vec<Cusp>,
    /// Right coset representatives of Gamma0(N) in SL(2,Z); the fundamental
    /// domain is the union of their images of the standard domain.
    pub coset_reps: Vec<Matrix2<i64>>,
    pub vertices: Vec<Vertex>,
}

#[derive(Debug, Clone)]
pub struct PullbackResult {
    /// Reduced point `z* = word * z`.
    pub z_star: Complex64,
    pub word: Matrix2<i64>,
    /// Index of the cusp closest to `z*`.
    pub cusp: usize,
    /// `sigma_cusp^-1 z*`, the point in the cusp's own coordinate.
    pub w: Complex64,
}

pub fn mobius(m: &RealMatrix, z: Complex64) -> Complex64 {
    (z * m[0] + m[1]) / (z * m[2] + m[3])
}

pub fn mobius_int(m: &Matrix2<i64>, z: Complex64) -> Complex64 {
    mobius(&m.to_f64(), z)
}

pub fn real_mul(x: &RealMatrix, y: &RealMatrix) -> RealMatrix {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

pub fn real_inverse(m: &RealMatrix) -> RealMatrix {
    let det = m[0] * m[3] - m[1] * m[2];
    [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det]
}

/// Principal argument in (-pi, pi]; a negative real gives exactly pi.
pub fn principal_arg(w: Complex64) -> f64 {
    if w.im == 0.0 {
        if w.re >= 0.0 {
            0.0
        } else {
            PI
        }
    } else {
        w.im.atan2(w.re)
    }
}

fn bottom_arg(m: &RealMatrix, z: Complex64) -> Result<f64, GeometryError> {
    let w = if m[2] == 0.0 {
        Complex64::new(m[3], 0.0)
    } else {
        z * m[2] + m[3]
    };
    if w.re == 0.0 && w.im == 0.0 {
        return Err(GeometryError::Singular);
    }
    Ok(principal_arg(w))
}

/// `j_A(z; k) = exp(i k Arg(cz + d))`.
pub fn automorphy_factor(m: &RealMatrix, z: Complex64, k: f64) -> Result<Complex64, GeometryError> {
    let arg = bottom_arg(m, z)?;
    Ok(Complex64::from_polar(1.0, k * arg))
}

pub fn automorphy_factor_int(
    m: &Matrix2<i64>,
    z: Complex64,
    k: f64,
) -> Result<Complex64, GeometryError> {
    automorphy_factor(&m.to_f64(), z, k)
}

/// Winding number `n` with `sigma_m(A, B) = e(m n)`, `n` in {-1, 0, 1}.
pub fn sigma_winding(a: &RealMatrix, b: &RealMatrix) -> Result<i32, GeometryError> {
    let ab = real_mul(a, b);
    let probe = |z: Complex64| -> Result<f64, GeometryError> {
        let s = bottom_arg(a, mobius(b, z))? + bottom_arg(b, z)? - bottom_arg(&ab, z)?;
        Ok(s / (2.0 * PI))
    };
    let n1 = probe(Complex64::new(0.0, 1.0))?;
    let n2 = probe(Complex64::new(0.37, 2.3))?;
    let r = n1.round();
    debug_assert!((n1 - r).abs() < 1e-9 && (n2 - r).abs() < 1e-9);
    Ok(r as i32)
}

/// `sigma_m(A, B) = j_A(Bz; m) j_B(z; m) / j_AB(z; m)`.
pub fn sigma_cocycle(a: &RealMatrix, b: &RealMatrix, m: f64) -> Result<Complex64, GeometryError> {
    let n = sigma_winding(a, b)?;
    Ok(Complex64::from_polar(1.0, 2.0 * PI * m * n as f64))
}

pub fn sigma_cocycle_int(
    a: &Matrix2<i64>,
    b: &Matrix2<i64>,
    m: f64,
) -> Result<Complex64, GeometryError> {
    sigma_cocycle(&a.to_f64(), &b.to_f64(), m)
}

/// Reduces `z` into the closed standard domain of SL(2,Z).
pub fn reduce_modular(z: Complex64) -> Result<(Complex64, Matrix2<i64>), GeometryError> {
    if !(z.im > 0.0) {
        return Err(GeometryError::NotInUpperHalfPlane(z));
    }
    let mut w = z;
    let mut word = Matrix2::<i64>::identity();
    for _ in 0..10_000 {
        let n = w.re.round();
        if n != 0.0 {
            w.re -= n;
            word = &Matrix2::translation(-(n as i64)) * &word;
        }
        if w.norm_sqr() < 1.0 - 1e-14 {
            w = -w.inv();
            word = &Matrix2::t() * &word;
        } else {
            let zs = mobius_int(&word, z);
            return Ok((zs, word));
        }
    }
    Err(GeometryError::NoConvergence(z))
}

impl GroupContext {
    pub fn new(level: u32) -> Result<Self, GeometryError> {
        let s2 = std::f64::consts::SQRT_2;
        let inf = Cusp {
            point: CuspPoint::Infinity,
            width: 1,
            sigma: [1.0, 0.0, 0.0, 1.0],
            sigma_inv: [1.0, 0.0, 0.0, 1.0],
            generator: Matrix2::s(),
        };
        let t = Matrix2::<i64>::t();
        let ts = |j: i64| &t * &Matrix2::translation(j);
        let (cusps, reps) = match level {
            1 => (vec![inf], vec![Matrix2::identity()]),
            2 => {
                let zero = Self::cusp(CuspPoint::Rational(0, 1), 2, [0.0, -1.0 / s2, s2, 0.0]);
                (vec![inf, zero], vec![Matrix2::identity(), ts(0), ts(1)])
            }
            4 => {
                let zero = Self::cusp(CuspPoint::Rational(0, 1), 4, [0.0, -0.5, 2.0, 0.0]);
                let half = Self::cusp(CuspPoint::Rational(-1, 2), 1, [1.0, 0.0, -2.0, 1.0]);
                (
                    vec![inf, zero, half],
                    vec![
                        Matrix2::identity(),
                        ts(0),
                        ts(1),
                        ts(2),
                        ts(3),
                        Matrix2::from_i64(1, 0, -2, 1),
                    ],
                )
            }
            _ => return Err(GeometryError::UnsupportedLevel(level)),
        };
        let mut vertices = Vec::new();
        for r in &reps {
            let point = if r.c == 0 {
                CuspPoint::Infinity
            } else {
                let g = num_integer::gcd(r.a, r.c);
                let (p, q) = (r.a / g, r.c / g);
                if q < 0 {
                    CuspPoint::Rational(-p, -q)
                } else {
                    CuspPoint::Rational(p, q)
                }
            };
            if vertices.iter().any(|v: &Vertex| v.point == point) {
                continue;
            }
            let cusp = cusps
                .iter()
                .position(|c| c.point == point)
                .expect("vertex coincides with a cusp");
            vertices.push(Vertex {
                point,
                cusp,
                u: Matrix2::identity(),
            });
        }
        Ok(Self {
            level,
            cusps,
            coset_reps: reps,
            vertices,
        })
    }

    fn cusp(point: CuspPoint, width: u32, sigma: RealMatrix) -> Cusp {
        let sigma_inv = real_inverse(&sigma);
        let g = real_mul(&real_mul(&sigma, &[1.0, 1.0, 0.0, 1.0]), &sigma_inv);
        let r = |x: f64| x.round() as i64;
        Cusp {
            point,
            width,
            sigma,
            sigma_inv,
            generator: Matrix2::from_i64(r(g[0]), r(g[1]), r(g[2]), r(g[3])),
        }
    }

    pub fn num_cusps(&self) -> usize {
        self.cusps.len()
    }

    pub fn max_width(&self) -> u32 {
        self.cusps.iter().map(|c| c.width).max().unwrap_or(1)
    }

    /// Smallest height `min over F of max_j Im(sigma_j^-1 z)` reached by
    /// pulled-back points: `sqrt(3)/2`, `sqrt(3)/4` and `1/(2 sqrt(3))` for
    /// N = 1, 2, 4. Sampling heights must stay below it.
    pub fn y0(&self) -> f64 {
        match self.level {
            1 => 3f64.sqrt() / 2.0,
            2 => 3f64.sqrt() / 4.0,
            _ => 0.5 / 3f64.sqrt(),
        }
    }

    pub fn contains(&self, m: &Matrix2<i64>) -> bool {
        m.in_gamma0(self.level)
    }

    /// Index of the cusp whose horocycle height `Im(sigma_j^-1 w)` is largest.
    pub fn closest_vertex(&self, w: Complex64) -> usize {
        let mut best = 0;
        let mut best_h = f64::NEG_INFINITY;
        for (j, c) in self.cusps.iter().enumerate() {
            let h = mobius(&c.sigma_inv, w).im;
            if h > best_h * (1.0 + 1e-13) {
                best = j;
                best_h = h;
            }
        }
        best
    }

    /// Pulls `z` back into the fundamental domain of Gamma0(N).
    pub fn pullback(&self, z: Complex64) -> Result<PullbackResult, GeometryError> {
        let (_, w) = reduce_modular(z)?;
        let word = self
            .coset_reps
            .iter()
            .map(|r| r * &w)
            .find(|g| self.contains(g))
            .ok_or(GeometryError::CosetLookup)?;
        let z_star = mobius_int(&word, z);
        let cusp = self.closest_vertex(z_star);
        let w = mobius(&self.cusps[cusp].sigma_inv, z_star);
        Ok(PullbackResult {
            z_star,
            word,
            cusp,
            w,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn pullback_examples_level1() {
        let g = GroupContext::new(1).unwrap();
        let p = g.pullback(c(0.3, 2.0)).unwrap();
        assert_eq!(p.word, Matrix2::identity());
        assert!((p.z_star - c(0.3, 2.0)).norm() < 1e-14);
        let p = g.pullback(c(0.0, 0.5)).unwrap();
        assert_eq!(p.word, Matrix2::t());
        assert!((p.z_star - c(0.0, 2.0)).norm() < 1e-14);
        let p = g.pullback(c(1.3, 2.0)).unwrap();
        assert_eq!(p.word, Matrix2::translation(-1));
        assert!((p.z_star - c(0.3, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn generators_and_vertices() {
        let g = GroupContext::new(4).unwrap();
        assert_eq!(g.cusps[1].generator, Matrix2::from_i64(1, 0, -4, 1));
        assert_eq!(g.cusps[2].generator, Matrix2::from_i64(3, 1, -4, -1));
        assert_eq!(g.vertices.len(), 3);
        assert_eq!(
            GroupContext::new(2).unwrap().cusps[1].generator,
            Matrix2::from_i64(1, 0, -2, 1)
        );
        assert!(GroupContext::new(3).is_err());
    }

    #[test]
    fn closest_vertex_examples() {
        let g1 = GroupContext::new(1).unwrap();
        assert_eq!(g1.closest_vertex(c(0.0, 10.0)), 0);
        let g = GroupContext::new(4).unwrap();
        assert_eq!(g.closest_vertex(c(0.01, 0.01)), 1);
        assert_eq!(g.closest_vertex(c(-0.5, 0.01)), 2);
    }

    #[test]
    fn automorphy_examples() {
        let k = 0.37;
        let id = [1.0, 0.0, 0.0, 1.0];
        assert!((automorphy_factor(&id, c(0.2, 0.9), k).unwrap() - 1.0).norm() < 1e-15);
        let t = [0.0, -1.0, 1.0, 0.0];
        let v = automorphy_factor(&t, c(0.0, 1.0), k).unwrap();
        assert!((v - Complex64::from_polar(1.0, k * PI / 2.0)).norm() < 1e-15);
        let m = [-1.0, 0.0, 0.0, -1.0];
        let v = automorphy_factor(&m, c(0.3, 0.4), k).unwrap();
        assert!((v - Complex64::from_polar(1.0, k * PI)).norm() < 1e-15);
        assert!(automorphy_factor(&[1.0, 0.0, 1.0, 0.0], c(0.0, 0.0), k).is_err());
    }

    #[test]
    fn sigma_examples() {
        let t = Matrix2::<i64>::t();
        let id = Matrix2::<i64>::identity();
        assert!((sigma_cocycle_int(&id, &t, 0.3).unwrap() - 1.0).norm() < 1e-15);
        assert!((sigma_cocycle_int(&t, &t, 0.3).unwrap() - 1.0).norm() < 1e-15);
        let a = Matrix2::from_i64(2, 1, 1, 1);
        let b = Matrix2::from_i64(1, 0, -3, 1);
        assert!((sigma_cocycle_int(&a, &b, 2.0).unwrap() - 1.0).norm() < 1e-12);
    }
}
