//! Whittaker functions `W_{kappa, iR}(x)` and K-Bessel functions `K_{iR}(x)`
//! for real `kappa`, `R` and positive `x`.
//!
//! `W` is tabulated per `(kappa, R)`: the asymptotic series fixes `W` and `W'`
//! at a large abscissa, and the Whittaker equation
//! `x^2 W'' = (x^2/4 - kappa x - 1/4 - R^2) W` is then integrated towards zero
//! with high-order Taylor steps. Every Taylor expansion is kept, so evaluating
//! the table is a single polynomial evaluation.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFunctionError {
    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("x = {x} is below the tabulated range (x_min = {x_min})")]
    BelowRange { x: f64, x_min: f64 },
    #[error("accuracy target missed: estimate {estimate}, error bound {bound}")]
    AccuracyFailure { estimate: f64, bound: f64 },
    #[error("parameters out of the supported range: {0}")]
    Unsupported(String),
}

const TAYLOR_ORDER: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhittakerConfig {
    /// Relative accuracy target.
    pub eps: f64,
    /// Smallest abscissa tabulated by default.
    pub x_min: f64,
}

impl Default for WhittakerConfig {
    fn default() -> Self {
        Self {
            eps: 1e-11,
            x_min: 1e-3,
        }
    }
}

fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `q(x)` in `W'' = q W`.
fn potential<T: Real>(kappa: T, r: T, x: T) -> T {
    T::lit(0.25) - kappa / x - (T::lit(0.25) + r * r) / (x * x)
}

/// Asymptotic expansion at large `x`: returns `(W, W', bound)` where the
/// bound is the first omitted term relative to the sum.
fn asymptotic<T: Real>(kappa: T, r: T, x: T) -> Option<(T, T, T)> {
    let tol = T::epsilon() * T::lit(0.05);
    let half = T::lit(0.5);
    let mut term = T::one();
    let mut s = T::one();
    let mut ds = T::zero();
    let mut biggest = T::one();
    for n in 0..2000usize {
        let nf = T::from_usize(n).unwrap();
        let a = nf + half - kappa;
        let next = -term * (a * a + r * r) / ((nf + T::one()) * x);
        if next.abs() >= term.abs() && n > 0 {
            return None;
        }
        let dnext = -(nf + T::one()) * next / x;
        s += next;
        ds += dnext;
        biggest = biggest.max(next.abs());
        term = next;
        if term.abs() < tol * s.abs() {
            if biggest > T::lit(1e3) {
                return None;
            }
            let pre = (-half * x).exp() * x.powf(kappa);
            let w = pre * s;
            let dw = pre * (s * (-half + kappa / x) + ds);
            return Some((w, dw, term.abs() / s.abs()));
        }
    }
    None
}

/// Taylor table for one `(kappa, R)`.
#[derive(Debug, Clone)]
pub struct WhittakerTable<T> {
    pub kappa: T,
    pub r: T,
    /// Above this abscissa the asymptotic series is summed directly.
    pub x_asym: T,
    pub x_min: T,
    centers: Vec<T>,
    coeffs: Vec<[T; TAYLOR_ORDER + 1]>,
    /// Largest local truncation estimate, relative to the local amplitude.
    pub error_bound: T,
}

impl<T: Real> WhittakerTable<T> {
    pub fn new(kappa: T, r: T, x_min: T) -> Result<Self, SpecialFunctionError> {
        if !(x_min > T::zero()) {
            return Err(SpecialFunctionError::NonPositiveArgument(f64_of(x_min)));
        }
        if !(kappa.abs() <= T::lit(50.0) && r.abs() <= T::lit(200.0)) {
            return Err(SpecialFunctionError::Unsupported(format!(
                "kappa = {kappa}, R = {r}"
            )));
        }
        let r = r.abs();
        let mut x0 = (T::lit(30.0) + kappa.abs() * T::lit(4.0)).max(r * r * T::lit(1.2));
        let (mut w, mut dw) = loop {
            if let Some((w, dw, _)) = asymptotic(kappa, r, x0) {
                break (w, dw);
            }
            x0 *= T::lit(1.25);
            if x0 > T::lit(1e6) {
                return Err(SpecialFunctionError::Unsupported("asymptotic start".into()));
            }
        };
        let mut centers = Vec::new();
        let mut coeffs = Vec::new();
        let mut error_bound = T::zero();
        let mut c = x0;
        loop {
            let a = taylor_coefficients(kappa, r, c, w, dw);
            let q = potential(kappa, r, c);
            let omega = q.abs().sqrt();
            let h = (c / T::lit(4.0)).min(T::lit(3.0)).min(T::lit(1.5) / omega);
            let amp = (w * w + dw * dw / q.abs().max(T::lit(1e-300))).sqrt();
            let s = h * T::lit(0.6);
            let t = s / c;
            let tail = (a[TAYLOR_ORDER] * t.powi(TAYLOR_ORDER as i32)).abs()
                + (a[TAYLOR_ORDER - 1] * t.powi(TAYLOR_ORDER as i32 - 1)).abs();
            if amp > T::zero() {
                error_bound = error_bound.max(tail / amp);
            }
            centers.push(c);
            coeffs.push(a);
            if c <= x_min {
                break;
            }
            let (nw, ndw) = horner(&a, -h / c);
            w = nw;
            dw = ndw / c;
            c -= h;
        }
        Ok(Self {
            kappa,
            r,
            x_asym: x0,
            x_min: *centers.last().unwrap(),
            centers,
            coeffs,
            error_bound,
        })
    }

    pub fn num_centers(&self) -> usize {
        self.centers.len()
    }

    /// `(W(x), W'(x))`.
    pub fn eval_with_derivative(&self, x: T) -> Result<(T, T), SpecialFunctionError> {
        if !(x > T::zero()) {
            return Err(SpecialFunctionError::NonPositiveArgument(f64_of(x)));
        }
        if x >= self.x_asym {
            if let Some((w, dw, _)) = asymptotic(self.kappa, self.r, x) {
                return Ok((w, dw));
            }
        }
        if x < self.x_min {
            return Err(SpecialFunctionError::BelowRange {
                x: f64_of(x),
                x_min: f64_of(self.x_min),
            });
        }
        // centers decrease; find the first center below x
        let i = self.centers.partition_point(|&c| c > x);
        let j = if i == 0 {
            0
        } else if i >= self.centers.len() {
            self.centers.len() - 1
        } else if self.centers[i - 1] - x < x - self.centers[i] {
            i - 1
        } else {
            i
        };
        let c = self.centers[j];
        let (w, dw) = horner(&self.coeffs[j], (x - c) / c);
        Ok((w, dw / c))
    }

    pub fn eval(&self, x: T) -> Result<T, SpecialFunctionError> {
        Ok(self.eval_with_derivative(x)?.0)
    }
}

/// Taylor coefficients of `W(c (1 + t))` in `t`; the scaling keeps them
/// bounded when `c` is tiny.
fn taylor_coefficients<T: Real>(kappa: T, r: T, c: T, w: T, dw: T) -> [T; TAYLOR_ORDER + 1] {
    let q0 = c * c / T::lit(4.0) - kappa * c - T::lit(0.25) - r * r;
    let q1 = c * (c / T::lit(2.0) - kappa);
    let q2 = c * c * T::lit(0.25);
    let mut a = [T::zero(); TAYLOR_ORDER + 1];
    a[0] = w;
    a[1] = dw * c;
    for m in 0..TAYLOR_ORDER - 1 {
        let mf = T::from_usize(m).unwrap();
        let mut rhs = q0 * a[m];
        if m >= 1 {
            rhs += q1 * a[m - 1];
        }
        if m >= 2 {
            rhs += q2 * a[m - 2];
        }
        rhs -= T::lit(2.0) * (mf + T::one()) * mf * a[m + 1];
        rhs -= mf * (mf - T::one()) * a[m];
        a[m + 2] = rhs / ((mf + T::lit(2.0)) * (mf + T::one()));
    }
    a
}

fn horner<T: Real>(a: &[T; TAYLOR_ORDER + 1], s: T) -> (T, T) {
    let mut p = T::zero();
    let mut dp = T::zero();
    for m in (0..=TAYLOR_ORDER).rev() {
        dp = dp * s + p;
        p = p * s + a[m];
    }
    (p, dp)
}

/// Cached Whittaker evaluator; tables are built on first use per `(kappa, R)`.
#[derive(Debug)]
pub struct WhittakerEvaluator<T> {
    pub config: WhittakerConfig,
    cache: RwLock<HashMap<(u64, u64), Arc<WhittakerTable<T>>>>,
}

impl<T: Real> Default for WhittakerEvaluator<T> {
    fn default() -> Self {
        Self::new(WhittakerConfig::default())
    }
}

impl<T: Real> WhittakerEvaluator<T> {
    pub fn new(config: WhittakerConfig) -> Self {
        Self {
            config,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Table covering `[x_min, inf)`. The centers do not depend on `x_min`,
    /// so rebuilding for a wider range never changes previously returned values.
    pub fn table(
        &self,
        kappa: T,
        r: T,
        x_min: T,
    ) -> Result<Arc<WhittakerTable<T>>, SpecialFunctionError> {
        let key = (f64_of(kappa).to_bits(), f64_of(r.abs()).to_bits());
        if let Some(t) = self.cache.read().unwrap().get(&key) {
            if t.x_min <= x_min {
                return Ok(t.clone());
            }
        }
        let lo = x_min.min(T::lit(self.config.x_min));
        let t = Arc::new(WhittakerTable::new(kappa, r, lo)?);
        if f64_of(t.error_bound) > self.config.eps {
            return Err(SpecialFunctionError::AccuracyFailure {
                estimate: f64::NAN,
                bound: f64_of(t.error_bound),
            });
        }
        self.cache.write().unwrap().insert(key, t.clone());
        Ok(t)
    }

    pub fn eval(&self, kappa: T, r: T, x: T) -> Result<T, SpecialFunctionError> {
        if !(x > T::zero()) {
            return Err(SpecialFunctionError::NonPositiveArgument(f64_of(x)));
        }
        self.table(kappa, r, x)?.eval(x)
    }

    pub fn clear(&self) {
        self.cache.write().unwrap().clear();
    }
}

/// One-off `W_{kappa, iR}(x)`.
pub fn whittaker_w<T: Real>(kappa: T, r: T, x: T) -> Result<T, SpecialFunctionError> {
    if !(x > T::zero()) {
        return Err(SpecialFunctionError::NonPositiveArgument(f64_of(x)));
    }
    WhittakerTable::new(kappa, r, x.min(T::one()))?.eval(x)
}

/// `K_{iR}(x)` by the trapezoid rule on `(1/2) int exp(-x cosh u + i R u) du`
/// along the horizontal line `Im u = theta` through (or near) the saddle point,
/// which keeps the integrand free of cancellation.
pub fn kbessel<T: Real>(r: T, x: T) -> Result<T, SpecialFunctionError> {
    if !(x > T::zero()) {
        return Err(SpecialFunctionError::NonPositiveArgument(f64_of(x)));
    }
    let r = r.abs();
    let half_pi = T::FRAC_PI_2();
    let delta = if r > T::zero() {
        half_pi.min(T::one() / r)
    } else {
        half_pi
    };
    let theta = if r < x {
        (r / x).asin().min(half_pi - delta)
    } else {
        half_pi - delta
    };
    let (st, ct) = theta.sin_cos();
    let tail = T::lit(-f64_of(T::epsilon()).ln() + 5.0);
    let t_max = (T::one() + tail / (x * ct)).acosh();
    let f = |t: T| -> Complex<T> {
        let re = -x * t.cosh() * ct - r * theta;
        let im = -x * t.sinh() * st + r * t;
        Complex::from_polar(re.exp(), im)
    };
    let mut h = T::lit(0.5);
    let mut sum = f(T::zero());
    let mut abs_sum = sum.norm();
    let n = (t_max / h).ceil().to_i64().unwrap();
    for j in 1..=n {
        let t = T::from_i64(j).unwrap() * h;
        let (a, b) = (f(t), f(-t));
        sum = sum + a + b;
        abs_sum += a.norm() + b.norm();
    }
    let mut est = sum.re * h * T::lit(0.5);
    for _ in 0..24 {
        h = h * T::lit(0.5);
        let n = (t_max / h).ceil().to_i64().unwrap();
        let mut j = 1;
        while j <= n {
            let t = T::from_i64(j).unwrap() * h;
            let (a, b) = (f(t), f(-t));
            sum = sum + a + b;
            abs_sum += a.norm() + b.norm();
            j += 2;
        }
        let next = sum.re * h * T::lit(0.5);
        let scale = abs_sum * h * T::lit(0.5);
        if (next - est).abs() <= T::epsilon() * T::lit(8.0) * scale && h < T::lit(0.26) {
            return Ok(next);
        }
        est = next;
    }
    Err(SpecialFunctionError::AccuracyFailure {
        estimate: f64_of(est),
        bound: f64::NAN,
    })
}

/// WKB-style local amplitude `sqrt(W^2 + W'^2/|q|)`, the natural scale for
/// relative errors of an oscillating solution.
pub fn local_amplitude<T: Real>(kappa: T, r: T, x: T, w: T, dw: T) -> T {
    let q = potential(kappa, r, x).abs();
    (w * w + dw * dw / q).sqrt()
}
