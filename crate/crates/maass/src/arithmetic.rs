//! Exact number theory: saw-tooth, Dedekind sums, the extended Kronecker
//! symbol and integer 2x2 matrices.

use std::fmt;
use std::ops::Mul;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithmeticError {
    #[error("gcd({d}, {c}) is not 1")]
    NotCoprime { d: String, c: String },
    #[error("modulus must be positive, got {0}")]
    NonPositiveModulus(String),
    #[error("determinant is {0}, expected 1")]
    NotSpecialLinear(String),
    #[error("matrix is not in Gamma0({0})")]
    NotInGamma0(u32),
}

/// Cutoff above which the reciprocity recursion replaces the direct sum.
pub const DEDEKIND_DIRECT_MAX: i64 = 64;

fn int<I: Int>(n: i64) -> I {
    I::from_i64(n).expect("small integer fits")
}

/// `((x))`: `x - floor(x) - 1/2` off the integers and `0` on them.
pub fn sawtooth<I: Int>(x: &Ratio<I>) -> Ratio<I> {
    if x.is_integer() {
        return Ratio::zero();
    }
    x - x.floor() - Ratio::new(I::one(), int(2))
}

fn check_coprime<I: Int>(d: &I, c: &I) -> Result<(), ArithmeticError> {
    if !c.is_positive() {
        return Err(ArithmeticError::NonPositiveModulus(c.to_string()));
    }
    if !d.gcd(c).is_one() {
        return Err(ArithmeticError::NotCoprime {
            d: d.to_string(),
            c: c.to_string(),
        });
    }
    Ok(())
}

/// Defining O(c) sum for `s(d, c)`.
pub fn dedekind_sum_direct<I: Int>(d: &I, c: &I) -> Result<Ratio<I>, ArithmeticError> {
    check_coprime(d, c)?;
    // sum over n of n * (2r - c) with r = dn mod c, divided by 2c^2
    let mut acc = I::zero();
    let mut n = I::one();
    while &n < c {
        let r = (d.clone() * n.clone()).mod_floor(c);
        if !r.is_zero() {
            acc = acc + n.clone() * (r * int::<I>(2) - c.clone());
        }
        n = n + I::one();
    }
    Ok(Ratio::new(acc, int::<I>(2) * c.clone() * c.clone()))
}

/// `s(d, c)` by the reciprocity (Euclid) recursion; assumes `c > 0` and
/// `gcd(d, c) = 1`.
pub fn dedekind_sum_fast<I: Int>(d: &I, c: &I) -> Ratio<I> {
    let quarter = Ratio::new(I::one(), int(4));
    let mut acc = Ratio::<I>::zero();
    let mut positive = true;
    let mut h = d.mod_floor(c);
    let mut k = c.clone();
    while !h.is_zero() {
        // s(h,k) + s(k,h) = -1/4 + (h/k + k/h + 1/(hk)) / 12
        let num = h.clone() * h.clone() + k.clone() * k.clone() + I::one();
        let den = int::<I>(12) * h.clone() * k.clone();
        let term = Ratio::new(num, den) - quarter.clone();
        acc = if positive { acc + term } else { acc - term };
        positive = !positive;
        let next = k.mod_floor(&h);
        k = h;
        h = next;
    }
    acc
}

/// Dedekind sum `s(d, c)` for `c > 0`, `gcd(d, c) = 1`.
pub fn dedekind_sum<I: Int>(d: &I, c: &I) -> Result<Ratio<I>, ArithmeticError> {
    check_coprime(d, c)?;
    if c <= &int(DEDEKIND_DIRECT_MAX) {
        dedekind_sum_direct(d, c)
    } else {
        Ok(dedekind_sum_fast(d, c))
    }
}

/// Jacobi symbol `(a/n)` for odd `n > 0`.
pub fn jacobi<I: Int>(a: &I, n: &I) -> i8 {
    debug_assert!(n.is_positive() && n.is_odd());
    let eight = int::<I>(8);
    let four = int::<I>(4);
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut result = 1i8;
    while !a.is_zero() {
        while a.is_even() {
            a = a / int::<I>(2);
            let r = n.mod_floor(&eight);
            if r == int(3) || r == int(5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.mod_floor(&four) == int(3) && n.mod_floor(&four) == int(3) {
            result = -result;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        result
    } else {
        0
    }
}

/// Extended quadratic residue symbol `(c/d)`.
///
/// Jacobi symbol for odd `d > 0`, `(c/d) = sgn(c) (c/-d)` for `d < 0`,
/// `(0/d) = 1` iff `d = ±1`, and `(c/2) = (2/c)`.
pub fn kronecker<I: Int>(c: &I, d: &I) -> i8 {
    if d.is_zero() {
        return if c.abs().is_one() { 1 } else { 0 };
    }
    if c.is_zero() {
        return if d.abs().is_one() { 1 } else { 0 };
    }
    if d.is_negative() {
        let s = if c.is_negative() { -1 } else { 1 };
        return s * kronecker(c, &-d.clone());
    }
    let mut dd = d.clone();
    let mut result = 1i8;
    let two = int::<I>(2);
    while dd.is_even() {
        if c.is_even() {
            return 0;
        }
        result *= jacobi(&two, &c.abs());
        dd = dd / two.clone();
    }
    if dd.is_one() {
        result
    } else {
        result * jacobi(c, &dd)
    }
}

/// Integer 2x2 matrix `(a b; c d)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix2<I> {
    pub a: I,
    pub b: I,
    pub c: I,
    pub d: I,
}

impl<I: Int> Matrix2<I> {
    pub fn new(a: I, b: I, c: I, d: I) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Self {
        Self::new(int(a), int(b), int(c), int(d))
    }

    pub fn identity() -> Self {
        Self::from_i64(1, 0, 0, 1)
    }

    /// Translation `S = (1 1; 0 1)`.
    pub fn s() -> Self {
        Self::from_i64(1, 1, 0, 1)
    }

    /// Inversion `T = (0 -1; 1 0)`.
    pub fn t() -> Self {
        Self::from_i64(0, -1, 1, 0)
    }

    pub fn translation(n: I) -> Self {
        Self::new(I::one(), n, I::zero(), I::one())
    }

    pub fn det(&self) -> I {
        self.a.clone() * self.d.clone() - self.b.clone() * self.c.clone()
    }

    pub fn is_special_linear(&self) -> bool {
        self.det().is_one()
    }

    pub fn check_special_linear(&self) -> Result<(), ArithmeticError> {
        if self.is_special_linear() {
            Ok(())
        } else {
            Err(ArithmeticError::NotSpecialLinear(self.det().to_string()))
        }
    }

    pub fn in_gamma0(&self, level: u32) -> bool {
        self.is_special_linear() && self.c.mod_floor(&int(level as i64)).is_zero()
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse(&self) -> Self {
        Self::new(
            self.d.clone(),
            -self.b.clone(),
            -self.c.clone(),
            self.a.clone(),
        )
    }

    pub fn neg(&self) -> Self {
        Self::new(
            -self.a.clone(),
            -self.b.clone(),
            -self.c.clone(),
            -self.d.clone(),
        )
    }

    /// `A* = (a -b; -c d)`, conjugation by `J = diag(1, -1)`.
    pub fn star(&self) -> Self {
        Self::new(
            self.a.clone(),
            -self.b.clone(),
            -self.c.clone(),
            self.d.clone(),
        )
    }

    pub fn to_f64(&self) -> [f64; 4] {
        let f = |x: &I| x.to_f64().unwrap_or(f64::NAN);
        [f(&self.a), f(&self.b), f(&self.c), f(&self.d)]
    }

    pub fn convert<J: Int>(&self) -> Option<Matrix2<J>> {
        let f = |x: &I| J::from_i64(x.to_i64()?);
        Some(Matrix2::new(
            f(&self.a)?,
            f(&self.b)?,
            f(&self.c)?,
            f(&self.d)?,
        ))
    }
}

impl<I: Int> Mul for &Matrix2<I> {
    type Output = Matrix2<I>;
    fn mul(self, o: &Matrix2<I>) -> Matrix2<I> {
        Matrix2::new(
            self.a.clone() * o.a.clone() + self.b.clone() * o.c.clone(),
            self.a.clone() * o.b.clone() + self.b.clone() * o.d.clone(),
            self.c.clone() * o.a.clone() + self.d.clone() * o.c.clone(),
            self.c.clone() * o.b.clone() + self.d.clone() * o.d.clone(),
        )
    }
}

impl<I: Int> Mul for Matrix2<I> {
    type Output = Matrix2<I>;
    fn mul(self, o: Matrix2<I>) -> Matrix2<I> {
        &self * &o
    }
}

impl<I: fmt::Display> fmt::Debug for Matrix2<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

/// Extended gcd: returns `(g, x, y)` with `ax + by = g >= 0`.
pub fn ext_gcd<I: Int>(a: &I, b: &I) -> (I, I, I) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Completes a coprime bottom row `(c, d)` to a matrix in SL(2,Z).
pub fn complete_bottom_row<I: Int>(c: &I, d: &I) -> Option<Matrix2<I>> {
    let (g, x, y) = ext_gcd(d, c);
    if !g.is_one() {
        return None;
    }
    // a d - b c = 1 with a = x, b = -y
    Some(Matrix2::new(x, -y, c.clone(), d.clone()))
}

/// Divisors of `n > 0` in increasing order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1u64;
    while i * i <= n {
        if n % i == 0 {
            small.push(i);
            if i * i != n {
                large.push(n / i);
            }
        }
        i += 1;
    }
    large.reverse();
    small.extend(large);
    small
}

pub fn gcd_u64(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut i = 2u64;
    while i * i <= n {
        if n % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

pub fn is_squarefree(n: u64) -> bool {
    let mut i = 2u64;
    while i * i <= n {
        if n % (i * i) == 0 {
            return false;
        }
        i += 1;
    }
    n > 0
}
