//! Spectral statistics: Eisenstein coefficient targets, the small-weight
//! Weyl law, cusp-form/Eisenstein family labels and their tracking in `k`,
//! and the Shimura lift of theta-multiplier forms.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::{divisors, gcd_u64, is_squarefree, jacobi};
use crate::operators::CoeffMap;
use crate::scalar::Real;
use crate::solver::{CoefficientBlock, HejhalSolver, SolverError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error("a({0}) vanishes")]
    Vanishing(u64),
    #[error("coefficient a({0}) is not available")]
    Missing(u64),
    #[error("{0} is not square-free")]
    NotSquarefree(u64),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `|n|^{iR} sigma_{-2iR}(|n|)`, i.e. the Eisenstein coefficient with the
/// constant `K(R)` divided out. Real because the divisors pair up.
pub fn eisenstein_coeff_ratio<T: Real>(n: u64, r: T) -> T {
    let nf = T::from_u64(n).unwrap();
    divisors(n)
        .into_iter()
        .map(|d| {
            let d = T::from_u64(d).unwrap();
            (r * (nf / (d * d)).ln()).cos()
        })
        .sum()
}

/// `R_k = 2 pi k / ln(7 + 2 sqrt 12)`, the spectral parameters of the
/// weight-1 CM forms.
pub fn cm_eigenvalue(k: u32) -> f64 {
    2.0 * std::f64::consts::PI * k as f64 / (7.0 + 2.0 * 12f64.sqrt()).ln()
}

/// A weight-0 cusp form with `c(1) = 1` and its coefficients `c(2..=6)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub level: u32,
    pub r: f64,
    pub label: &'static str,
    pub coeffs: [f64; 5],
}

pub const WEIGHT0_CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        level: 1,
        r: 13.77975135189074,
        label: "even",
        coeffs: [
            1.54930447794069,
            0.24689977245411,
            1.40034436536841,
            0.73706038534787,
            0.38252292306557,
        ],
    },
    CatalogEntry {
        level: 2,
        r: 8.92287648699174,
        label: "new, omega_2 = +1",
        coeffs: [
            -0.70710678118654,
            1.10378899562734,
            0.49999999999993,
            0.90417459283958,
            -0.78049668380711,
        ],
    },
    CatalogEntry {
        level: 2,
        r: 12.0929948750786,
        label: "new, omega_2 = -1",
        coeffs: [
            0.70710678118655,
            -0.70599475399569,
            0.49999999999999,
            -0.79974825694039,
            -0.49921367803249,
        ],
    },
    CatalogEntry {
        level: 2,
        r: 13.77975135189073,
        label: "old, even",
        coeffs: [
            2.96351804031448,
            0.24689977245401,
            3.59139177031902,
            0.73706038534834,
            0.73169192981688,
        ],
    },
    CatalogEntry {
        level: 2,
        r: 13.77975135189073,
        label: "old, odd",
        coeffs: [
            0.13509091556820,
            0.24689977245398,
            -0.79070303958101,
            0.73706038534830,
            0.03335391631439,
        ],
    },
];

pub fn catalog_for_level(level: u32) -> Vec<CatalogEntry> {
    WEIGHT0_CATALOG
        .iter()
        .filter(|e| e.level == level)
        .copied()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyLabel {
    C,
    E,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormClassification {
    pub label: FamilyLabel,
    pub eisenstein_distance: f64,
    pub cusp_distance: Option<f64>,
    /// Index into the catalog of the closest cusp form.
    pub nearest: Option<usize>,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Labels a form by the l1 distance of `c(2..=6)` to the Eisenstein ratios
/// at `R` and to the nearest catalog cusp form.
pub fn classify_form(coeffs: &[f64; 5], r: f64, catalog: &[CatalogEntry]) -> FormClassification {
    let eis: Vec<f64> = (2..=6).map(|n| eisenstein_coeff_ratio(n, r)).collect();
    let de = l1(coeffs, &eis);
    let best = catalog
        .iter()
        .enumerate()
        .map(|(i, e)| (i, l1(coeffs, &e.coeffs)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let norm: f64 = coeffs.iter().map(|x| x.abs()).sum();
    let dc = best.map(|b| b.1);
    let label = if de > 0.5 * norm && dc.is_none_or(|d| d > 0.5 * norm) {
        FamilyLabel::Mixed
    } else if dc.is_some_and(|d| d < de) {
        FamilyLabel::C
    } else {
        FamilyLabel::E
    };
    FormClassification {
        label,
        eisenstein_distance: de,
        cusp_distance: dc,
        nearest: best.map(|b| b.0),
    }
}

/// `c(2..=6) / c(1)` at infinity, if available.
pub fn low_coefficients(block: &CoefficientBlock) -> Option<[f64; 5]> {
    let c1 = block.c(0, 1)?;
    if c1.norm() == 0.0 {
        return None;
    }
    let mut out = [0.0; 5];
    for (i, n) in (2..=6).enumerate() {
        out[i] = (block.c(0, n)? / c1).re;
    }
    Some(out)
}

fn check_weyl_domain(t: f64, k: f64) -> Result<(), SpectraError> {
    if !(t >= 2.0 && k > 0.0 && k < 12.0) {
        return Err(SpectraError::Domain(format!("T = {t}, k = {k}")));
    }
    Ok(())
}

/// `ln|1 - e^{i k pi / 6}|`.
fn log_gap_factor(k: f64) -> f64 {
    (2.0 * (k * std::f64::consts::PI / 12.0).sin()).ln()
}

/// Main terms `T^2/12 - (T/pi) ln|1 - e^{i k pi/6}|` of the counting
/// function.
pub fn weyl_prediction(t: f64, k: f64) -> Result<f64, SpectraError> {
    check_weyl_domain(t, k)?;
    Ok(t * t / 12.0 - t / std::f64::consts::PI * log_gap_factor(k))
}

/// Local mean spacing `1 / N_k'(T)` from the main terms.
pub fn weyl_mean_gap(t: f64, k: f64) -> Result<f64, SpectraError> {
    check_weyl_domain(t, k)?;
    Ok(1.0 / (t / 6.0 - log_gap_factor(k) / std::f64::consts::PI))
}

/// The `k -> 0` limit `pi / |ln(k pi / 6)|` of the spacing.
pub fn asymptotic_mean_gap(k: f64) -> f64 {
    std::f64::consts::PI / (k * std::f64::consts::PI / 6.0).ln().abs()
}

/// Mean spacing of a sorted list.
pub fn mean_gap(rs: &[f64]) -> Option<f64> {
    if rs.len() < 2 {
        return None;
    }
    Some((rs[rs.len() - 1] - rs[0]) / (rs.len() - 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylCount {
    pub t: f64,
    pub count: usize,
    pub prediction: f64,
    pub difference: f64,
}

pub fn count_eigenvalues(rs: &[f64], t: f64, k: f64) -> Result<WeylCount, SpectraError> {
    let count = rs.iter().filter(|&&r| r <= t).count();
    let prediction = weyl_prediction(t, k)?;
    Ok(WeylCount {
        t,
        count,
        prediction,
        difference: count as f64 - prediction,
    })
}

/// Counts at each `T` and whether the difference drifted by more than
/// `budget` from its first value (a hint that eigenvalues were missed).
pub fn weyl_series(
    rs: &[f64],
    ts: &[f64],
    k: f64,
    budget: f64,
) -> Result<(Vec<WeylCount>, bool), SpectraError> {
    let out = ts
        .iter()
        .map(|&t| count_eigenvalues(rs, t, k))
        .collect::<Result<Vec<_>, _>>()?;
    let flagged = match out.first() {
        Some(first) => out
            .iter()
            .any(|w| (w.difference - first.difference).abs() > budget),
        None => false,
    };
    Ok((out, flagged))
}

/// Shimura lift `A(n)`, `1 <= n <= n_max`, from theta-form coefficients
/// `a` at infinity with `a(t) != 0`, `t` square-free. The character is
/// `(t/k)` on `k` prime to `level` and zero otherwise.
pub fn shimura_lift(
    a: &CoeffMap<f64>,
    t: u64,
    level: u64,
    n_max: u64,
) -> Result<BTreeMap<u64, Option<f64>>, SpectraError> {
    if t == 0 || !is_squarefree(t) {
        return Err(SpectraError::NotSquarefree(t));
    }
    let at = a.get(&(t as i64)).ok_or(SpectraError::Missing(t))?.re;
    if at.abs() < 1e-8 {
        return Err(SpectraError::Vanishing(t));
    }
    let ti = t as i64;
    Ok((1..=n_max)
        .map(|n| {
            let mut acc = Some(0.0);
            for k in divisors(n) {
                if gcd_u64(k, level) != 1 {
                    continue;
                }
                let d = (n / k) as i64;
                let chi = jacobi(&ti, &(k as i64)) as f64;
                if chi == 0.0 {
                    continue;
                }
                acc = match (acc, a.get(&(ti * d * d))) {
                    (Some(s), Some(x)) => Some(s + chi / (k as f64).sqrt() * x.re / at),
                    _ => None,
                };
            }
            (n, acc)
        })
        .collect())
}

/// `A(m) A(n) - sum_{d | (m, n), (d, level) = 1} A(mn/d^2)`.
pub fn hecke_multiplicativity_residual(
    a: &BTreeMap<u64, Option<f64>>,
    m: u64,
    n: u64,
    level: u64,
) -> Option<f64> {
    let get = |j: u64| {
        if j == 1 {
            Some(1.0)
        } else {
            a.get(&j).copied().flatten()
        }
    };
    let mut rhs = 0.0;
    for d in divisors(gcd_u64(m, n)) {
        if gcd_u64(d, level) == 1 {
            rhs += get(m * n / (d * d))?;
        }
    }
    Some((get(m)? * get(n)? - rhs).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub k: f64,
    pub r: f64,
    pub h: f64,
    pub coeffs: [f64; 5],
    pub label: FamilyLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// Index into the weight grid of the first point.
    pub start: usize,
    pub points: Vec<TracePoint>,
}

impl Trace {
    fn at(&self, level: usize) -> Option<&TracePoint> {
        level
            .checked_sub(self.start)
            .and_then(|i| self.points.get(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub traces: (usize, usize),
    /// Weight-grid indices where the two traces are within the window.
    pub levels: (usize, usize),
    pub r: f64,
    pub swapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTrace {
    pub weights: Vec<f64>,
    pub traces: Vec<Trace>,
    pub crossings: Vec<AvoidedCrossing>,
    pub warnings: Vec<String>,
}

/// Links the located forms of consecutive weights into traces. Candidates
/// are ranked by `|dR|`, with the coefficient distance breaking near ties
/// (within `resolution`); jumps above `max_jump` end a trace. Two traces
/// closer than `5 * resolution` form an avoided-crossing window.
pub fn assemble_traces(
    weights: &[f64],
    levels: Vec<Vec<TracePoint>>,
    max_jump: f64,
    resolution: f64,
) -> Result<FamilyTrace, SpectraError> {
    if weights.len() != levels.len() || weights.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SpectraError::Domain(
            "weight grid must be strictly decreasing".into(),
        ));
    }
    let mut traces: Vec<Trace> = Vec::new();
    let mut warnings = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    for (li, points) in levels.into_iter().enumerate() {
        let mut pairs = Vec::new();
        for &ti in &active {
            let last = traces[ti].points.last().unwrap();
            let mut cands: Vec<(usize, f64)> = points
                .iter()
                .enumerate()
                .map(|(pi, p)| (pi, (p.r - last.r).abs()))
                .filter(|c| c.1 < max_jump)
                .collect();
            cands.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let best = cands.first().map(|c| c.1).unwrap_or(0.0);
            let ambiguous = cands.len() > 1 && cands[1].1 - best < resolution;
            for (pi, dr) in cands {
                let cost = if ambiguous && dr - best < resolution {
                    best + resolution * l1(&points[pi].coeffs, &last.coeffs)
                        / (1.0 + l1(&last.coeffs, &[0.0; 5]))
                } else {
                    dr
                };
                pairs.push((cost, ti, pi));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut used_t = vec![false; traces.len()];
        let mut used_p = vec![false; points.len()];
        let mut next_active = Vec::new();
        let mut assigned: Vec<Option<usize>> = vec![None; points.len()];
        for (_, ti, pi) in pairs {
            if !used_t[ti] && !used_p[pi] {
                used_t[ti] = true;
                used_p[pi] = true;
                assigned[pi] = Some(ti);
            }
        }
        for &ti in &active {
            if !used_t[ti] {
                let r = traces[ti].points.last().unwrap().r;
                warnings.push(format!(
                    "trace {ti} near R = {r:.6} ends at weight {}",
                    weights[li]
                ));
            }
        }
        for (pi, p) in points.into_iter().enumerate() {
            let ti = match assigned[pi] {
                Some(ti) => ti,
                None => {
                    if li > 0 {
                        warnings.push(format!(
                            "new trace at R = {:.6}, weight {}",
                            p.r, weights[li]
                        ));
                    }
                    traces.push(Trace {
                        start: li,
                        points: Vec::new(),
                    });
                    traces.len() - 1
                }
            };
            traces[ti].points.push(p);
            next_active.push(ti);
        }
        active = next_active;
    }
    let crossings = find_crossings(&traces, weights.len(), 5.0 * resolution);
    Ok(FamilyTrace {
        weights: weights.to_vec(),
        traces,
        crossings,
        warnings,
    })
}

fn find_crossings(traces: &[Trace], n_levels: usize, window: f64) -> Vec<AvoidedCrossing> {
    let mut out = Vec::new();
    for i in 0..traces.len() {
        for j in i + 1..traces.len() {
            let close: Vec<usize> = (0..n_levels)
                .filter(|&l| match (traces[i].at(l), traces[j].at(l)) {
                    (Some(a), Some(b)) => (a.r - b.r).abs() < window,
                    _ => false,
                })
                .collect();
            let (Some(&lo), Some(&hi)) = (close.first(), close.last()) else {
                continue;
            };
            let before = lo
                .checked_sub(1)
                .and_then(|l| Some((traces[i].at(l)?, traces[j].at(l)?)));
            let after = Some(hi + 1).and_then(|l| Some((traces[i].at(l)?, traces[j].at(l)?)));
            let swapped = match (before, after) {
                (Some((a0, b0)), Some((a1, b1))) => {
                    a0.label != b0.label && a0.label == b1.label && b0.label == a1.label
                }
                _ => false,
            };
            let r = 0.5 * (traces[i].at(lo).unwrap().r + traces[j].at(lo).unwrap().r);
            out.push(AvoidedCrossing {
                traces: (i, j),
                levels: (lo, hi),
                r,
                swapped,
            });
        }
    }
    out
}

/// Locates eigenvalues in `[rmin, rmax]` at every weight of the grid (in
/// parallel) and assembles the traces.
pub fn trace_families<F>(
    weights: &[f64],
    rmin: f64,
    rmax: f64,
    step: f64,
    catalog: &[CatalogEntry],
    make_solver: F,
) -> Result<FamilyTrace, SpectraError>
where
    F: Fn(f64) -> Result<HejhalSolver, SolverError> + Sync,
{
    let levels = weights
        .par_iter()
        .map(|&k| -> Result<Vec<TracePoint>, SpectraError> {
            let solver = make_solver(k)?;
            let found = solver.locate_eigenvalues(rmin, rmax, step)?;
            Ok(found
                .into_iter()
                .filter_map(|f| {
                    let coeffs = low_coefficients(&f.coefficients)?;
                    let label = classify_form(&coeffs, f.point.r, catalog).label;
                    Some(TracePoint {
                        k,
                        r: f.point.r,
                        h: f.h,
                        coeffs,
                        label,
                    })
                })
                .collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    assemble_traces(weights, levels, 10.0 * step, step)
}
