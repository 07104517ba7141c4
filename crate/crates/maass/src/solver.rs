//! Hejhal's method for Maass waveforms of weight `k` with multiplier `v`.
//!
//! At height `Y` the truncated expansions at all cusps are sampled on a
//! horocycle, each sample is pulled back into the fundamental domain and the
//! automorphy relation turns the inverse DFT into a linear system for the
//! coefficients. Eigenvalues are the `R` at which the solutions for two
//! different heights agree.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{automorphy_factor, mobius, GeometryError, GroupContext};
use crate::multipliers::{e, MultiplierError, MultiplierSystem};
use crate::special_functions::{SpecialFunctionError, WhittakerTable};

/// Default scan step in R. Minima at moderate weights can be narrower than 0.01.
pub const DEFAULT_STEP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Multiplier(#[from] MultiplierError),
    #[error(transparent)]
    SpecialFunction(#[from] SpecialFunctionError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("linear system is numerically singular at R = {0}")]
    Singular(f64),
    #[error("normalization index ({cusp}, {n}) is not part of the system")]
    BadNormalization { cusp: usize, n: i64 },
}

/// `(k, R)` with `lambda = 1/4 + R^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub k: f64,
    pub r: f64,
}

impl SpectralPoint {
    pub fn new(k: f64, r: f64) -> Result<Self, SolverError> {
        if !(r > 0.0) || !r.is_finite() || !k.is_finite() {
            return Err(SolverError::InvalidConfig(format!("need R > 0, got {r}")));
        }
        Ok(Self { k, r })
    }

    pub fn lambda(&self) -> f64 {
        0.25 + self.r * self.r
    }
}

/// Fixed coefficient values `c_cusp(n) = value`; their rows are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub entries: Vec<(usize, i64, f64)>,
}

impl Normalization {
    pub fn single(n: i64) -> Self {
        Self {
            entries: vec![(0, n, 1.0)],
        }
    }

    pub fn new(entries: Vec<(usize, i64, f64)>) -> Self {
        Self { entries }
    }

    /// Largest normalized index at the cusp at infinity.
    pub fn top_index(&self) -> i64 {
        self.entries
            .iter()
            .filter(|e| e.0 == 0)
            .map(|e| e.1)
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub y1: f64,
    pub y2: f64,
    /// Truncation override; computed from the heights when `None`.
    pub m: Option<usize>,
    /// Number of horocycle points is `2Q`; `M + 16` when `None`.
    pub q: Option<usize>,
    pub eps: f64,
    /// Default: `c(n) = 1` at the index of the cusp at infinity nearest 1.
    pub normalization: Option<Normalization>,
    /// Indices at infinity compared by `H`; default: three above the normalization.
    pub compare: Option<Vec<i64>>,
    /// A refined minimum counts as an eigenvalue when `H` is below this.
    pub accept: f64,
    /// Grid minima of `H` above this are not refined.
    pub refine_below: f64,
}

impl SolverConfig {
    pub fn for_group(ctx: &GroupContext) -> Self {
        let y0 = ctx.y0();
        let (f1, f2) = default_height_fractions(ctx.level);
        Self {
            y1: f1 * y0,
            y2: f2 * y0,
            m: None,
            q: None,
            eps: 1e-14,
            normalization: None,
            compare: None,
            accept: 1e-5,
            refine_below: 1e6,
        }
    }
}

/// Default `(Y1, Y2)` as fractions of `Y0`. On PSL(2,Z) the samples must
/// sit well below `Y0` for the system to be well conditioned.
pub fn default_height_fractions(level: u32) -> (f64, f64) {
    match level {
        1 => (0.35, 0.30),
        2 => (0.6, 0.5),
        _ => (0.85, 0.75),
    }
}

/// Fourier coefficients of one cusp for `n` in `[-m, m]`; `None` marks the
/// excluded index `n + alpha = 0` (or, after Phase 2, a failed extraction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspCoefficients {
    pub alpha: f64,
    pub m: i64,
    pub values: Vec<Option<Complex64>>,
}

impl CuspCoefficients {
    pub fn get(&self, n: i64) -> Option<Complex64> {
        if n.abs() > self.m {
            return None;
        }
        self.values[(n + self.m) as usize]
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (-self.m..=self.m).filter(move |&n| self.get(n).is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBlock {
    pub level: u32,
    pub k: f64,
    pub r: f64,
    pub cusps: Vec<CuspCoefficients>,
    pub normalization: Normalization,
    /// Height the block was solved at (Phase 2: the largest height used).
    pub y: f64,
    /// Stability residual, when known.
    pub h: Option<f64>,
}

impl CoefficientBlock {
    /// `c_cusp(n)`.
    pub fn c(&self, cusp: usize, n: i64) -> Option<Complex64> {
        self.cusps.get(cusp)?.get(n)
    }

    /// Real part of `c_0(n)` (the coefficients at infinity are real for the
    /// systems treated here).
    pub fn re(&self, n: i64) -> Option<f64> {
        self.c(0, n).map(|z| z.re)
    }

    pub fn max_imag_at_infinity(&self) -> f64 {
        self.cusps[0]
            .values
            .iter()
            .flatten()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

/// Smallest `M` such that terms beyond `M` at height `Y` are below `eps`
/// relative to the first term, plus a margin of 8.
pub fn truncation_limit(y: f64, r: f64, k: f64, eps: f64) -> usize {
    let kappa = k.abs() / 2.0;
    let turn = 2.0 * kappa + 2.0 * (kappa * kappa + 0.25 + r * r).sqrt();
    let log_eps = eps.ln();
    let mut m = 1usize;
    loop {
        let x = 4.0 * PI * m as f64 * y;
        if x > turn && -x / 2.0 + (kappa + 1.0) * x.ln() + PI * r / 2.0 < log_eps {
            return m + 8;
        }
        m += 1;
        if m > 1_000_000 {
            return m;
        }
    }
}

/// Horocycle abscissae `x_m = (1/2 - m)/(2Q)`, `1 - Q <= m <= Q`.
pub fn sample_points(q: usize) -> Vec<f64> {
    let q = q as i64;
    (1 - q..=q)
        .map(|m| (0.5 - m as f64) / (2 * q) as f64)
        .collect()
}

#[derive(Debug, Clone)]
struct Sample {
    x: f64,
    target: usize,
    w_star: Complex64,
    chi: Complex64,
}

/// Pulled-back horocycle samples for every cusp at one height.
#[derive(Debug)]
struct Sampling {
    q: usize,
    per_cusp: Vec<Vec<Sample>>,
    min_y_star: f64,
}

/// Index set of the unknowns: `(cusp, n)` with `n + alpha_cusp != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    pub m: i64,
    pub entries: Vec<(usize, i64)>,
    lookup: HashMap<(usize, i64), usize>,
}

impl IndexMap {
    fn new(alphas: &[f64], m: i64) -> Self {
        let mut entries = Vec::new();
        for (j, &a) in alphas.iter().enumerate() {
            for n in -m..=m {
                if n as f64 + a != 0.0 {
                    entries.push((j, n));
                }
            }
        }
        let lookup = entries.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Self { m, entries, lookup }
    }

    pub fn position(&self, cusp: usize, n: i64) -> Option<usize> {
        self.lookup.get(&(cusp, n)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The matrix `V~` at one `(R, Y)`; rows and columns share `index`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<Complex64>,
    pub index: IndexMap,
    pub r: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocatedForm {
    pub point: SpectralPoint,
    pub h: f64,
    pub coefficients: CoefficientBlock,
}

struct Tables {
    plus: WhittakerTable<f64>,
    minus: WhittakerTable<f64>,
}

impl Tables {
    fn new(k: f64, r: f64, x_min: f64) -> Result<Self, SolverError> {
        let plus = WhittakerTable::new(k / 2.0, r, x_min)?;
        let minus = if k == 0.0 {
            plus.clone()
        } else {
            WhittakerTable::new(-k / 2.0, r, x_min)?
        };
        Ok(Self { plus, minus })
    }

    /// `W_{sgn(l) k/2, iR}(4 pi |l| y) / sqrt|l|`.
    fn term(&self, l: f64, y: f64) -> Result<f64, SolverError> {
        let t = if l > 0.0 { &self.plus } else { &self.minus };
        let a = l.abs();
        Ok(t.eval(4.0 * PI * a * y)? / a.sqrt())
    }
}

/// Hejhal solver for a fixed group, multiplier and configuration.
pub struct HejhalSolver {
    pub ctx: GroupContext,
    pub v: MultiplierSystem,
    pub config: SolverConfig,
    samplings: Mutex<HashMap<(u64, usize), Arc<Sampling>>>,
}

impl std::fmt::Debug for HejhalSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HejhalSolver")
            .field("level", &self.ctx.level)
            .field("v", &self.v)
            .field("config", &self.config)
            .finish()
    }
}

impl HejhalSolver {
    pub fn new(
        ctx: GroupContext,
        v: MultiplierSystem,
        config: SolverConfig,
    ) -> Result<Self, SolverError> {
        if ctx.level != v.level {
            return Err(SolverError::InvalidConfig(format!(
                "group level {} but multiplier level {}",
                ctx.level, v.level
            )));
        }
        let y0 = ctx.y0();
        for y in [config.y1, config.y2] {
            if !(y > 0.0 && y < y0) {
                return Err(SolverError::InvalidConfig(format!(
                    "heights must lie in (0, {y0}); got {y}"
                )));
            }
        }
        if config.y1 == config.y2 {
            return Err(SolverError::InvalidConfig("Y1 = Y2".into()));
        }
        if let (Some(m), Some(q)) = (config.m, config.q) {
            if q <= m {
                return Err(SolverError::InvalidConfig(format!(
                    "need Q > M, got Q={q}, M={m}"
                )));
            }
        }
        Ok(Self {
            ctx,
            v,
            config,
            samplings: Mutex::new(HashMap::new()),
        })
    }

    /// Solver with the default configuration for the group.
    pub fn with_defaults(v: MultiplierSystem) -> Result<Self, SolverError> {
        let ctx = GroupContext::new(v.level)?;
        let config = SolverConfig::for_group(&ctx);
        Self::new(ctx, v, config)
    }

    pub fn weight(&self) -> f64 {
        self.v.weight
    }

    pub fn alphas(&self) -> &[f64] {
        &self.v.alphas
    }

    /// Default normalization: `c(n0) = 1` with `n0 + alpha` nearest 1.
    pub fn normalization(&self) -> Normalization {
        self.config.normalization.clone().unwrap_or_else(|| {
            let a = self.v.alphas[0];
            let n0 = (1.0 - a).round() as i64;
            Normalization::single(n0)
        })
    }

    pub fn compare_indices(&self, norm: &Normalization) -> Vec<i64> {
        self.config.compare.clone().unwrap_or_else(|| {
            let top = norm.top_index();
            (top + 1..=top + 3).collect()
        })
    }

    pub fn truncation(&self, r: f64) -> usize {
        let y = self.config.y1.min(self.config.y2);
        self.config
            .m
            .unwrap_or_else(|| truncation_limit(y, r, self.v.weight, self.config.eps))
    }

    fn q_for(&self, m: usize) -> usize {
        self.config.q.unwrap_or(m + 16).max(m + 1)
    }

    fn sampling(&self, y: f64, q: usize) -> Result<Arc<Sampling>, SolverError> {
        let key = (y.to_bits(), q);
        if let Some(s) = self.samplings.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.build_sampling(y, q)?);
        let mut cache = self.samplings.lock().unwrap();
        if cache.len() > 64 {
            cache.clear();
        }
        cache.insert(key, s.clone());
        Ok(s)
    }

    fn build_sampling(&self, y: f64, q: usize) -> Result<Sampling, SolverError> {
        let k = self.v.weight;
        let xs = sample_points(q);
        let mut per_cusp = Vec::with_capacity(self.ctx.num_cusps());
        let mut min_y_star = f64::INFINITY;
        for cusp in &self.ctx.cusps {
            let mut samples = Vec::with_capacity(xs.len());
            for &x in &xs {
                let zm = Complex64::new(x, y);
                let samp = self.pulled_sample(zm, &cusp.sigma, k)?;
                min_y_star = min_y_star.min(samp.w_star.im);
                samples.push(samp);
            }
            per_cusp.push(samples);
        }
        Ok(Sampling {
            q,
            per_cusp,
            min_y_star,
        })
    }

    /// Pulls `sigma z` back and returns `chi` with `f_i(z) = chi f_I(w*)`.
    fn pulled_sample(
        &self,
        zm: Complex64,
        sigma: &[f64; 4],
        k: f64,
    ) -> Result<Sample, SolverError> {
        let z = mobius(sigma, zm);
        let pb = self.ctx.pullback(z)?;
        let a = pb.word.inverse();
        let target = &self.ctx.cusps[pb.cusp];
        let chi = automorphy_factor(sigma, zm, k)?.conj()
            * self.v.value(&a)?
            * automorphy_factor(&a.to_f64(), pb.z_star, k)?
            * automorphy_factor(&target.sigma, pb.w, k)?;
        Ok(Sample {
            x: zm.re,
            target: pb.cusp,
            w_star: pb.w,
            chi,
        })
    }

    fn x_min(&self, m: usize, ys: &[f64], min_y_star: f64) -> f64 {
        let mut lo = f64::INFINITY;
        for &a in &self.v.alphas {
            for n in -(m as i64)..=(m as i64) {
                let l = (n as f64 + a).abs();
                if l > 0.0 {
                    lo = lo.min(l);
                }
            }
        }
        let y = ys.iter().cloned().fold(min_y_star, f64::min);
        (4.0 * PI * lo * y * 0.5).min(1e-3)
    }

    /// Assembles `V~` at `(R, Y)` with truncation `m`.
    pub fn build_system(&self, r: f64, y: f64, m: usize) -> Result<LinearSystem, SolverError> {
        let q = self.q_for(m);
        let samp = self.sampling(y, q)?;
        let tables = Tables::new(self.v.weight, r, self.x_min(m, &[y], samp.min_y_star))?;
        self.assemble(&tables, &samp, r, y, m)
    }

    fn assemble(
        &self,
        tables: &Tables,
        samp: &Sampling,
        r: f64,
        y: f64,
        m: usize,
    ) -> Result<LinearSystem, SolverError> {
        let index = IndexMap::new(&self.v.alphas, m as i64);
        let size = index.len();
        let two_q = 2 * samp.q;
        let mut v = DMatrix::<Complex64>::zeros(size, size);
        // columns of one cusp block: (cusp j, l)
        let col_ranges: Vec<Vec<(usize, f64)>> = (0..self.ctx.num_cusps())
            .map(|j| {
                index
                    .entries
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.0 == j)
                    .map(|(c, e)| (c, e.1 as f64 + self.v.alphas[j]))
                    .collect()
            })
            .collect();
        for (i, samples) in samp.per_cusp.iter().enumerate() {
            let rows: Vec<(usize, f64)> = col_ranges[i].clone();
            // B: samples x columns, E: rows x samples
            let mut b = DMatrix::<Complex64>::zeros(two_q, size);
            for (s_idx, s) in samples.iter().enumerate() {
                for &(col, l) in &col_ranges[s.target] {
                    let w = tables.term(l, s.w_star.im)?;
                    b[(s_idx, col)] = s.chi * e(l * s.w_star.re) * w;
                }
            }
            let mut emat = DMatrix::<Complex64>::zeros(rows.len(), two_q);
            for (ri, &(_, n)) in rows.iter().enumerate() {
                for (s_idx, s) in samples.iter().enumerate() {
                    emat[(ri, s_idx)] = e(-n * s.x) / two_q as f64;
                }
            }
            let block = emat * b;
            for (ri, &(row, n)) in rows.iter().enumerate() {
                for c in 0..size {
                    v[(row, c)] = block[(ri, c)];
                }
                v[(row, row)] -= Complex64::new(tables.term(n, y)?, 0.0);
            }
        }
        Ok(LinearSystem {
            matrix: v,
            index,
            r,
            y,
        })
    }

    /// Solves `V~ C = 0` under a normalization.
    pub fn solve_system(
        &self,
        sys: &LinearSystem,
        norm: &Normalization,
    ) -> Result<CoefficientBlock, SolverError> {
        let size = sys.index.len();
        let mut fixed = vec![None; size];
        for &(cusp, n, val) in &norm.entries {
            let p = sys
                .index
                .position(cusp, n)
                .ok_or(SolverError::BadNormalization { cusp, n })?;
            fixed[p] = Some(val);
        }
        let free: Vec<usize> = (0..size).filter(|&p| fixed[p].is_none()).collect();
        let nf = free.len();
        let mut a = DMatrix::<Complex64>::zeros(nf, nf);
        let mut rhs = nalgebra::DVector::<Complex64>::zeros(nf);
        for (ri, &row) in free.iter().enumerate() {
            for (ci, &col) in free.iter().enumerate() {
                a[(ri, ci)] = sys.matrix[(row, col)];
            }
            for (p, f) in fixed.iter().enumerate() {
                if let Some(val) = f {
                    rhs[ri] -= sys.matrix[(row, p)] * *val;
                }
            }
        }
        // column equilibration
        let mut scale = vec![1.0; nf];
        for (ci, s) in scale.iter_mut().enumerate() {
            let mx = a.column(ci).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if mx > 0.0 {
                *s = 1.0 / mx;
                for ri in 0..nf {
                    a[(ri, ci)] *= *s;
                }
            }
        }
        let sol = a.lu().solve(&rhs).ok_or(SolverError::Singular(sys.r))?;
        let mut values = vec![Complex64::new(0.0, 0.0); size];
        for (p, f) in fixed.iter().enumerate() {
            if let Some(val) = f {
                values[p] = Complex64::new(*val, 0.0);
            }
        }
        for (ci, &p) in free.iter().enumerate() {
            let z = sol[ci] * scale[ci];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(SolverError::Singular(sys.r));
            }
            values[p] = z;
        }
        Ok(self.block_from(&sys.index, &values, sys.r, sys.y, norm.clone()))
    }

    fn block_from(
        &self,
        index: &IndexMap,
        values: &[Complex64],
        r: f64,
        y: f64,
        norm: Normalization,
    ) -> CoefficientBlock {
        let m = index.m;
        let cusps = self
            .v
            .alphas
            .iter()
            .enumerate()
            .map(|(j, &alpha)| CuspCoefficients {
                alpha,
                m,
                values: (-m..=m)
                    .map(|n| index.position(j, n).map(|p| values[p]))
                    .collect(),
            })
            .collect();
        CoefficientBlock {
            level: self.ctx.level,
            k: self.v.weight,
            r,
            cusps,
            normalization: norm,
            y,
            h: None,
        }
    }

    /// Coefficients at `R` for each height in `ys`, sharing one truncation.
    pub fn solve_at(
        &self,
        r: f64,
        ys: &[f64],
        m: usize,
        norm: &Normalization,
    ) -> Result<Vec<CoefficientBlock>, SolverError> {
        let q = self.q_for(m);
        let samps = ys
            .iter()
            .map(|&y| self.sampling(y, q))
            .collect::<Result<Vec<_>, _>>()?;
        let min_star = samps
            .iter()
            .map(|s| s.min_y_star)
            .fold(f64::INFINITY, f64::min);
        let tables = Tables::new(self.v.weight, r, self.x_min(m, ys, min_star))?;
        ys.iter()
            .zip(&samps)
            .map(|(&y, s)| {
                let sys = self.assemble(&tables, s, r, y, m)?;
                self.solve_system(&sys, norm)
            })
            .collect()
    }

    /// Solves with the default normalization, falling back to the largest
    /// low-index coefficient if `c(n0)` turns out negligible.
    pub fn solve_coefficients(&self, r: f64, y: f64) -> Result<CoefficientBlock, SolverError> {
        let m = self.truncation(r);
        let norm = self.normalization();
        let block = self.solve_at(r, &[y], m, &norm)?.remove(0);
        match self.fallback_normalization(&block, &norm) {
            Some(alt) => Ok(self.solve_at(r, &[y], m, &alt)?.remove(0)),
            None => Ok(block),
        }
    }

    fn fallback_normalization(
        &self,
        block: &CoefficientBlock,
        norm: &Normalization,
    ) -> Option<Normalization> {
        if norm.entries.len() != 1 || self.config.normalization.is_some() {
            return None;
        }
        let big = block.cusps[0]
            .values
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if big * 1e-4 < 1.0 {
            return None;
        }
        // |c(n0)| = 1 is tiny relative to the rest: renormalize
        let n = (1..=block.cusps[0].m.min(12))
            .max_by(|&a, &b| {
                let fa = block.c(0, a).map(|z| z.norm()).unwrap_or(0.0);
                let fb = block.c(0, b).map(|z| z.norm()).unwrap_or(0.0);
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap_or(1);
        Some(Normalization::single(n))
    }

    /// `H(Y1, Y2)` together with both solutions.
    pub fn stability_residual(
        &self,
        r: f64,
    ) -> Result<(f64, CoefficientBlock, CoefficientBlock), SolverError> {
        let m = self.truncation(r);
        self.stability_residual_with(r, m, &self.normalization())
    }

    pub fn stability_residual_with(
        &self,
        r: f64,
        m: usize,
        norm: &Normalization,
    ) -> Result<(f64, CoefficientBlock, CoefficientBlock), SolverError> {
        let mut blocks = self.solve_at(r, &[self.config.y1, self.config.y2], m, norm)?;
        let b2 = blocks.pop().unwrap();
        let b1 = blocks.pop().unwrap();
        let h = self
            .compare_indices(norm)
            .iter()
            .filter_map(|&n| Some((b1.c(0, n)? - b2.c(0, n)?).norm()))
            .sum();
        Ok((h, b1, b2))
    }

    fn h_value(&self, r: f64, m: usize, norm: &Normalization) -> f64 {
        match self.stability_residual_with(r, m, norm) {
            Ok((h, _, _)) if h.is_finite() => h,
            _ => f64::INFINITY,
        }
    }

    /// Golden-section minimization of `H` on `[a, b]` down to width `tol`.
    pub fn refine(
        &self,
        a: f64,
        b: f64,
        tol: f64,
        norm: &Normalization,
    ) -> Result<LocatedForm, SolverError> {
        let m = self.truncation(b);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (a, b);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = self.h_value(x1, m, norm);
        let mut f2 = self.h_value(x2, m, norm);
        let mut checked = false;
        while hi - lo > tol {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = self.h_value(x1, m, norm);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = self.h_value(x2, m, norm);
            }
            // abandon hopeless brackets early
            if !checked && hi - lo < 1e-5 {
                checked = true;
                if f1.min(f2) > 1e3 * self.config.accept {
                    break;
                }
            }
        }
        let r = if f1 < f2 { x1 } else { x2 };
        let (h, mut b1, _) = self.stability_residual_with(r, m, norm)?;
        b1.h = Some(h);
        Ok(LocatedForm {
            point: SpectralPoint::new(self.v.weight, r)?,
            h,
            coefficients: b1,
        })
    }

    /// `H` on a grid (evaluated in parallel; the result does not depend on
    /// the schedule).
    pub fn scan(&self, rmin: f64, rmax: f64, step: f64) -> Vec<(f64, f64)> {
        let n = ((rmax - rmin) / step).round().max(0.0) as usize;
        let m = self.truncation(rmax);
        let norm = self.normalization();
        (0..=n)
            .into_par_iter()
            .map(|i| {
                let r = rmin + (rmax - rmin) * i as f64 / n.max(1) as f64;
                (r, self.h_value(r, m, &norm))
            })
            .collect()
    }

    /// Normalizations used by [`Self::locate_eigenvalues`]. Near weight zero
    /// (0 < alpha < 0.1 at infinity) forms close to the Eisenstein series
    /// have a large `c(0)` passing through poles of the `c(1) = 1` solution,
    /// so the scan is repeated with `c(0) = 1`.
    pub fn scan_normalizations(&self) -> Vec<Normalization> {
        let mut out = vec![self.normalization()];
        let a = self.v.alphas[0];
        if self.config.normalization.is_none() && a > 0.0 && a < 0.1 {
            out.push(Normalization::single(0));
        }
        out
    }

    /// Grid scan (see [`DEFAULT_STEP`]) followed by refinement of every local minimum of `H`.
    pub fn locate_eigenvalues(
        &self,
        rmin: f64,
        rmax: f64,
        step: f64,
    ) -> Result<Vec<LocatedForm>, SolverError> {
        if !(rmin > 0.0 && rmax > rmin && step > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "bad interval [{rmin}, {rmax}] with step {step}"
            )));
        }
        let n = ((rmax - rmin) / step).round().max(1.0) as usize;
        let m = self.truncation(rmax);
        let grid: Vec<f64> = (0..=n)
            .map(|i| rmin + (rmax - rmin) * i as f64 / n as f64)
            .collect();
        let mut brackets = Vec::new();
        for norm in self.scan_normalizations() {
            let hs: Vec<f64> = grid
                .par_iter()
                .map(|&r| self.h_value(r, m, &norm))
                .collect();
            for i in 1..grid.len().saturating_sub(1) {
                let (h0, h1, h2) = (hs[i - 1], hs[i], hs[i + 1]);
                if h1 <= h0 && h1 < h2 && h1 < self.config.refine_below {
                    brackets.push((grid[i - 1], grid[i + 1], norm.clone()));
                }
            }
        }
        let found: Vec<LocatedForm> = brackets
            .into_par_iter()
            .filter_map(|(a, b, norm)| self.refine(a, b, 1e-12, &norm).ok())
            .filter(|f| f.h < self.config.accept)
            .collect();
        let mut out: Vec<LocatedForm> = Vec::new();
        for f in found {
            match out
                .iter_mut()
                .find(|g| (g.point.r - f.point.r).abs() < 1e-6)
            {
                Some(g) => {
                    if f.h < g.h {
                        *g = f;
                    }
                }
                None => out.push(f),
            }
        }
        out.sort_by(|a, b| a.point.r.partial_cmp(&b.point.r).unwrap());
        Ok(out)
    }

    /// Singular values of the column-equilibrated `V~` at `(R, Y1)`, largest
    /// first.
    pub fn singular_values(&self, r: f64) -> Result<Vec<f64>, SolverError> {
        let m = self.truncation(r);
        let mut a = self.build_system(r, self.config.y1, m)?.matrix;
        for mut col in a.column_iter_mut() {
            let mx = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if mx > 0.0 {
                col /= Complex64::new(mx, 0.0);
            }
        }
        let mut s: Vec<f64> = a.singular_values().iter().cloned().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(s)
    }

    /// Number of singular values below `rel * sigma_max`.
    pub fn nullity(&self, r: f64, rel: f64) -> Result<usize, SolverError> {
        let s = self.singular_values(r)?;
        let top = s[0];
        Ok(s.iter().filter(|&&x| x < rel * top).count())
    }

    /// Basis of the eigenspace at `R`: one form per null vector of `V~`
    /// (relative threshold `rel`), normalized by `c(n_i) = delta_ij` over the
    /// first positive indices at infinity.
    pub fn eigenspace(&self, r: f64, rel: f64) -> Result<Vec<LocatedForm>, SolverError> {
        let d = self.nullity(r, rel)?.max(1);
        let first = self.normalization().top_index();
        let idx: Vec<i64> = (first..).take(d).collect();
        let m = self.truncation(r);
        (0..d)
            .map(|i| {
                let norm = Normalization::new(
                    idx.iter()
                        .enumerate()
                        .map(|(j, &n)| (0, n, if i == j { 1.0 } else { 0.0 }))
                        .collect(),
                );
                let (h, mut b1, _) = self.stability_residual_with(r, m, &norm)?;
                b1.h = Some(h);
                Ok(LocatedForm {
                    point: SpectralPoint::new(self.v.weight, r)?,
                    h,
                    coefficients: b1,
                })
            })
            .collect()
    }

    /// Evaluates the expansion at cusp `j` at the point `w` (cusp coordinates).
    fn eval_cusp(
        &self,
        tables: &Tables,
        block: &CoefficientBlock,
        j: usize,
        w: Complex64,
    ) -> Result<Complex64, SolverError> {
        let cc = &block.cusps[j];
        let mut acc = Complex64::new(0.0, 0.0);
        for n in -cc.m..=cc.m {
            if let Some(c) = cc.get(n) {
                let l = n as f64 + cc.alpha;
                acc += c * tables.term(l, w.im)? * e(l * w.re);
            }
        }
        Ok(acc)
    }

    /// Phase 2: coefficients `c_0(n)`, `|n| <= n_max`, at the cusp at
    /// infinity from a located form. For each `n` a height is picked from a
    /// geometric ladder so that the `n`-th Whittaker factor sits near its
    /// largest hump; the samples are evaluated with the Phase-1 expansions at
    /// their pulled-back points and inverted by a DFT.
    pub fn expand_coefficients(
        &self,
        form: &LocatedForm,
        n_max: i64,
    ) -> Result<CoefficientBlock, SolverError> {
        let base = &form.coefficients;
        let r = form.point.r;
        let k = self.v.weight;
        let alpha = self.v.alphas[0];
        let y_top = self.config.y1;
        let ladder: Vec<f64> = (0..200)
            .map(|s| y_top * 0.85f64.powi(s))
            .take_while(|&y| y > 1e-6)
            .collect();
        let lo_x = {
            let mut lo = f64::INFINITY;
            for n in -n_max..=n_max {
                let l = (n as f64 + alpha).abs();
                if l > 0.0 {
                    lo = lo.min(l);
                }
            }
            4.0 * PI * lo * ladder.last().copied().unwrap_or(y_top) * 0.5
        };
        let tables = Tables::new(k, r, lo_x.min(1e-3).min(4.0 * PI * 1e-9))?;
        let ctx_y0 = self.ctx.y0();
        // choose the ladder height per n
        let mut assignment: HashMap<usize, Vec<i64>> = HashMap::new();
        for n in -n_max..=n_max {
            let l = n as f64 + alpha;
            if l == 0.0 {
                continue;
            }
            let mut best = (0usize, -1.0f64);
            for (s, &y) in ladder.iter().enumerate() {
                let w = tables.term(l, y)?.abs() * l.abs().sqrt();
                if w > best.1 {
                    best = (s, w);
                }
            }
            assignment.entry(best.0).or_default().push(n);
        }
        let mut jobs: Vec<(usize, Vec<i64>)> = assignment.into_iter().collect();
        jobs.sort_by_key(|j| j.0);
        let results: Vec<Result<Vec<(i64, Option<Complex64>)>, SolverError>> = jobs
            .par_iter()
            .map(|(s, ns)| {
                let y = ladder[*s];
                let mq = truncation_limit(y, r, k, self.config.eps);
                let top = ns
                    .iter()
                    .map(|n| n.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0);
                let q = mq.max(top) + 16;
                let xs = sample_points(q);
                let ident = [1.0, 0.0, 0.0, 1.0];
                let mut fvals = Vec::with_capacity(xs.len());
                for &x in &xs {
                    let zm = Complex64::new(x, y);
                    let smp = self.pulled_sample(zm, &ident, k)?;
                    if smp.w_star.im < 0.99 * ctx_y0 {
                        return Err(SolverError::InvalidConfig("pullback below Y0".into()));
                    }
                    let f = self.eval_cusp(&tables, base, smp.target, smp.w_star)?;
                    fvals.push(smp.chi * f);
                }
                let two_q = (2 * q) as f64;
                ns.iter()
                    .map(|&n| {
                        let l = n as f64 + alpha;
                        let mut acc = Complex64::new(0.0, 0.0);
                        for (f, &x) in fvals.iter().zip(&xs) {
                            acc += f * e(-l * x);
                        }
                        let w = tables.term(l, y)?;
                        let c = acc / two_q / w;
                        let ok = c.re.is_finite() && c.im.is_finite();
                        Ok((n, ok.then_some(c)))
                    })
                    .collect()
            })
            .collect();
        let mut values = vec![None; (2 * n_max + 1) as usize];
        for res in results {
            for (n, c) in res? {
                values[(n + n_max) as usize] = c;
            }
        }
        // normalized entries are exact by definition
        for &(cusp, n, val) in &base.normalization.entries {
            if cusp == 0 && n.abs() <= n_max {
                values[(n + n_max) as usize] = Some(Complex64::new(val, 0.0));
            }
        }
        let mut cusps = vec![CuspCoefficients {
            alpha,
            m: n_max,
            values,
        }];
        cusps.extend(base.cusps.iter().skip(1).cloned());
        Ok(CoefficientBlock {
            level: base.level,
            k: base.k,
            r,
            cusps,
            normalization: base.normalization.clone(),
            y: y_top,
            h: base.h,
        })
    }
}

/// Convenience wrapper: default solver for `(N, v)` and a grid scan.
pub fn locate_eigenvalues(
    v: &MultiplierSystem,
    rmin: f64,
    rmax: f64,
    step: f64,
) -> Result<Vec<LocatedForm>, SolverError> {
    HejhalSolver::with_defaults(v.clone())?.locate_eigenvalues(rmin, rmax, step)
}

/// `max |(1/2Q) sum_m e((l - n) x_m) - delta_{nl}|` over `|l|, |n| <= m`.
pub fn orthogonality_defect(q: usize, m: i64, alpha: f64) -> f64 {
    let xs = sample_points(q);
    let mut worst = 0.0f64;
    for n in -m..=m {
        for l in -m..=m {
            let mut acc = Complex64::new(0.0, 0.0);
            for &x in &xs {
                acc += e((l as f64 + alpha) * x - (n as f64 + alpha) * x);
            }
            acc /= (2 * q) as f64;
            let target = if n == l { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_points_q1() {
        assert_eq!(sample_points(1), vec![0.25, -0.25]);
        let xs = sample_points(7);
        assert_eq!(xs.len(), 14);
        assert!(xs.iter().all(|&x| x > -0.5 && x <= 0.5));
    }

    #[test]
    fn truncation_monotone() {
        let a = truncation_limit(0.5, 9.5, 0.0, 1e-10);
        let b = truncation_limit(0.3, 9.5, 0.0, 1e-10);
        assert!(b > a);
        assert!(truncation_limit(0.5, 9.5, 0.0, 1e-12) > truncation_limit(0.5, 9.5, 0.0, 1e-6));
    }

    #[test]
    fn spectral_point_rejects_nonpositive() {
        assert!(SpectralPoint::new(1.0, 0.0).is_err());
        assert!((SpectralPoint::new(0.0, 2.0).unwrap().lambda() - 4.25).abs() < 1e-15);
    }
}
