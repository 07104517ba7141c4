use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use maass::multipliers::MultiplierFamily;
use maass::operators::{
    classify_vplus, cusp_map, tau_n_check, theta_hecke_eigenvalue, theta_hecke_map,
    weight1_relations, CoeffMap, KohnenClass,
};
use maass::solver::CoefficientBlock;
use maass::spectra::{
    catalog_for_level, mean_gap, shimura_lift, trace_families, weyl_mean_gap, weyl_series,
};

use crate::record::{float17, write_atomic, CheckSummary, CoefficientTable, RunRecord};
use crate::{
    ExpandArgs, GroupArgs, ScanArgs, Setup, ShimuraArgs, TrackArgs, UsageError, VerifyArgs,
    WeylArgs,
};

fn check_window(rmin: f64, rmax: f64, step: f64) -> Result<()> {
    if !(rmin > 0.0 && rmax > rmin && step > 0.0) {
        return Err(UsageError(format!(
            "need 0 < --rmin < --rmax and --step > 0, got [{rmin}, {rmax}] step {step}"
        ))
        .into());
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner()?)
}

/// Writes atomically to `out`, or to stdout.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => {
            print!("{}", String::from_utf8_lossy(bytes));
            Ok(())
        }
    }
}

fn opt17(v: Option<f64>) -> String {
    v.map(float17).unwrap_or_default()
}

fn setup_of(rec: &RunRecord) -> Result<Setup> {
    let g = GroupArgs {
        level: rec.level,
        multiplier: rec.multiplier,
        weight: Some(rec.weight),
        config: None,
    };
    let mut s = Setup::from_args(&g)?;
    s.config = rec.config.clone();
    Ok(s)
}

/// Locates eigenvalues and writes `eig-XXX.json` records plus `summary.csv`
/// to the output directory. Returns the record paths.
pub fn scan(a: &ScanArgs) -> Result<Vec<PathBuf>> {
    let setup = Setup::from_args(&a.group)?;
    check_window(a.rmin, a.rmax, a.step)?;
    let solver = setup.solver()?;
    let found = solver.locate_eigenvalues(a.rmin, a.rmax, a.step)?;
    // ratios are reported against the default normalization index
    let n0 = solver.normalization().top_index();
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut rows = Vec::new();
    let mut paths = Vec::new();
    for (i, f) in found.iter().enumerate() {
        let name = format!("eig-{i:03}.json");
        let path = a.out.join(&name);
        RunRecord::new(setup.family, setup.level, setup.config.clone(), f).write(&path)?;
        let c0 = f.coefficients.c(0, n0);
        let mut row = vec![
            i.to_string(),
            float17(f.point.k),
            float17(f.point.r),
            float17(f.h),
        ];
        row.extend(
            (1..=3).map(|d| opt17(c0.and_then(|c0| Some((f.coefficients.c(0, n0 + d)? / c0).re)))),
        );
        row.push(name);
        rows.push(row);
        paths.push(path);
    }
    let bytes = csv_bytes(
        &[
            "index",
            "weight",
            "R",
            "H",
            "c(n0+1)/c(n0)",
            "c(n0+2)/c(n0)",
            "c(n0+3)/c(n0)",
            "file",
        ],
        &rows,
    )?;
    write_atomic(&a.out.join("summary.csv"), &bytes)?;
    println!("{} eigenvalue(s) in [{}, {}]", found.len(), a.rmin, a.rmax);
    for f in &found {
        println!("  R = {:.12}  H = {:.1e}", f.point.r, f.h);
    }
    Ok(paths)
}

pub fn expand(a: &ExpandArgs) -> Result<()> {
    let mut rec = RunRecord::read(&a.record)?;
    let solver = setup_of(&rec)?.solver()?;
    let b = solver.expand_coefficients(&rec.located_form(), a.n_max)?;
    rec.expansion = Some(CoefficientTable::from_block(&b));
    rec.write(a.out.as_deref().unwrap_or(&a.record))
}

fn expansion_or_hint(rec: &RunRecord, path: &Path, what: &str) -> Result<CoefficientBlock> {
    rec.expansion_block().with_context(|| {
        format!(
            "{what} needs Phase-2 coefficients, missing in {p}; run `maass expand --record {p}` first",
            p = path.display()
        )
    })
}

pub struct Row {
    pub check: String,
    pub n: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Residual rows for every relation that applies to the record's form.
pub fn verification_rows(
    rec: &RunRecord,
    b: &CoefficientBlock,
) -> Result<(Vec<Row>, Vec<CheckSummary>)> {
    let mut rows = Vec::new();
    let mut notes: BTreeMap<String, String> = BTreeMap::new();
    let a = cusp_map(b, 0);
    let scale = a
        .values()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let n_top = b.cusps[0].m;

    for n in 1..=n_top.min(20) {
        if let Some(z) = a.get(&n) {
            rows.push(Row {
                check: "kj_reality".into(),
                n,
                lhs: z.im,
                rhs: 0.0,
                residual: z.im.abs() / scale,
            });
        }
    }
    notes.insert(
        "kj_reality".into(),
        format!("expect below 10 H = {:.1e}", 10.0 * rec.h),
    );

    if rec.multiplier == MultiplierFamily::Eta && rec.weight == 1.0 {
        for x in weight1_relations(&a, rec.r, n_top.min(15))? {
            rows.push(Row {
                check: format!("hecke_w1:{}", x.relation),
                n: x.n,
                lhs: x.lhs,
                rhs: x.rhs,
                residual: x.residual,
            });
        }
        notes.insert("hecke_w1".into(), "expect below 5e-7".into());
    }

    if rec.multiplier == MultiplierFamily::Theta {
        let t = (1..=8i64).find(|&t| a.get(&t).is_some_and(|z| z.norm() > 1e-6 * scale));
        if let Some(t) = t {
            for p in [3u64, 5] {
                let Ok(lam) = theta_hecke_eigenvalue(p, t, &a) else {
                    continue;
                };
                for (n, img) in theta_hecke_map(p, &a, 1..=8)? {
                    if let (Some(img), Some(&an)) = (img, a.get(&n)) {
                        rows.push(Row {
                            check: format!("theta_hecke:p={p}"),
                            n,
                            lhs: img.re,
                            rhs: (an * lam).re,
                            residual: (img - an * lam).norm() / scale,
                        });
                    }
                }
            }
            notes.insert(
                "theta_hecke".into(),
                format!("eigenvalues read off at t = {t}"),
            );
        }
        let phase1 = rec.located_form().coefficients;
        let low = |j: usize| -> CoeffMap<f64> {
            cusp_map(&phase1, j)
                .into_iter()
                .filter(|(n, _)| n.abs() <= 8)
                .collect()
        };
        let (sign, dev) = tau_n_check(&low(0), &low(1), rec.weight);
        rows.push(Row {
            check: "tau_4".into(),
            n: 0,
            lhs: sign as f64,
            rhs: 0.0,
            residual: dev,
        });
        notes.insert("tau_4".into(), format!("sign {sign:+}; expect below 1e-6"));
        let rep = classify_vplus(
            &a,
            Some((&cusp_map(&phase1, 1), &cusp_map(&phase1, 2))),
            n_top.min(32),
            1e-8,
        );
        let residual = match rep.class {
            KohnenClass::Vplus => rep.plus_defect,
            KohnenClass::Vminus => rep.minus_defect.unwrap_or(f64::NAN),
            KohnenClass::Neither => rep
                .plus_defect
                .min(rep.minus_defect.unwrap_or(f64::INFINITY)),
        };
        rows.push(Row {
            check: "kohnen".into(),
            n: 0,
            lhs: rep.plus_defect,
            rhs: rep.minus_defect.unwrap_or(f64::NAN),
            residual,
        });
        notes.insert("kohnen".into(), format!("{:?}", rep.class));
    }

    let mut summary: BTreeMap<String, CheckSummary> = BTreeMap::new();
    for r in &rows {
        let family = r.check.split(':').next().unwrap_or(&r.check).to_string();
        let e = summary
            .entry(family.clone())
            .or_insert_with(|| CheckSummary {
                check: family.clone(),
                count: 0,
                worst: 0.0,
                note: notes.get(&family).cloned().unwrap_or_default(),
            });
        e.count += 1;
        e.worst = e.worst.max(r.residual);
    }
    Ok((rows, summary.into_values().collect()))
}

pub fn verify(a: &VerifyArgs) -> Result<()> {
    let mut rec = RunRecord::read(&a.record)?;
    let b = expansion_or_hint(&rec, &a.record, "verify")?;
    let (rows, summary) = verification_rows(&rec, &b)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.check.clone(),
                r.n.to_string(),
                float17(r.lhs),
                float17(r.rhs),
                float17(r.residual),
            ]
        })
        .collect();
    emit(
        a.out.as_deref(),
        &csv_bytes(&["check", "n", "lhs", "rhs", "residual"], &table)?,
    )?;
    for s in &summary {
        eprintln!(
            "{}: {} row(s), worst {:.1e} ({})",
            s.check, s.count, s.worst, s.note
        );
    }
    if !a.no_update {
        rec.verification = summary;
        rec.write(&a.record)?;
    }
    Ok(())
}

fn read_reference(path: &Path) -> Result<BTreeMap<u64, f64>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for row in r.records() {
        let row = row?;
        let n: u64 = row.get(0).context("missing n")?.trim().parse()?;
        let v: f64 = row.get(1).context("missing value")?.trim().parse()?;
        out.insert(n, v);
    }
    Ok(out)
}

pub fn shimura(a: &ShimuraArgs) -> Result<()> {
    let rec = RunRecord::read(&a.record)?;
    if rec.multiplier != MultiplierFamily::Theta {
        return Err(UsageError(format!(
            "shimura needs a theta record, {} has {}",
            a.record.display(),
            rec.multiplier
        ))
        .into());
    }
    let b = expansion_or_hint(&rec, &a.record, "shimura")?;
    let lift = shimura_lift(&cusp_map(&b, 0), a.t, rec.level as u64, a.n_max)?;
    let reference = a.reference.as_deref().map(read_reference).transpose()?;
    let rows: Vec<Vec<String>> = lift
        .iter()
        .map(|(&n, &v)| {
            let want = reference.as_ref().and_then(|m| m.get(&n).copied());
            let diff = v.zip(want).map(|(x, y)| x - y);
            vec![n.to_string(), opt17(v), opt17(want), opt17(diff)]
        })
        .collect();
    if lift.values().any(|v| v.is_none()) {
        eprintln!(
            "some A(n) need coefficients beyond the expansion; rerun expand with a larger --n-max"
        );
    }
    emit(
        a.out.as_deref(),
        &csv_bytes(&["n", "A(n)", "reference", "difference"], &rows)?,
    )
}

fn read_summary(path: &Path) -> Result<Vec<f64>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let col = r
        .headers()?
        .iter()
        .position(|h| h == "R")
        .context("summary has no R column")?;
    let mut out = Vec::new();
    for row in r.records() {
        out.push(row?.get(col).context("short row")?.parse()?);
    }
    out.sort_by(|x: &f64, y| x.partial_cmp(y).unwrap());
    Ok(out)
}

pub fn weyl(a: &WeylArgs) -> Result<()> {
    if !(a.tstep > 0.0 && a.tmax >= a.tmin) {
        return Err(UsageError("need --tmax >= --tmin and --tstep > 0".into()).into());
    }
    let n = ((a.tmax - a.tmin) / a.tstep + 1e-9).floor() as usize;
    let ts: Vec<f64> = (0..=n).map(|i| a.tmin + a.tstep * i as f64).collect();
    let rs = a.summary.as_deref().map(read_summary).transpose()?;
    let counts = match &rs {
        Some(rs) => {
            let (series, flagged) = weyl_series(rs, &ts, a.weight, 3.0)?;
            if flagged {
                eprintln!(
                    "warning: count - prediction drifts by more than 3; eigenvalues may be missing"
                );
            }
            Some(series)
        }
        None => None,
    };
    let mut rows = Vec::new();
    for (i, &t) in ts.iter().enumerate() {
        let prediction = maass::spectra::weyl_prediction(t, a.weight)?;
        let gap = weyl_mean_gap(t, a.weight)?;
        let (count, diff, observed) = match (&counts, &rs) {
            (Some(c), Some(rs)) => {
                let below: Vec<f64> = rs.iter().copied().filter(|&r| r <= t).collect();
                (
                    c[i].count.to_string(),
                    float17(c[i].difference),
                    opt17(mean_gap(&below)),
                )
            }
            _ => Default::default(),
        };
        rows.push(vec![
            float17(t),
            count,
            float17(prediction),
            diff,
            float17(gap),
            observed,
        ]);
    }
    emit(
        a.out.as_deref(),
        &csv_bytes(
            &[
                "T",
                "count",
                "prediction",
                "difference",
                "mean_gap_predicted",
                "mean_gap_observed",
            ],
            &rows,
        )?,
    )
}

fn crossings_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}-crossings.csv"))
}

pub fn track(a: &TrackArgs) -> Result<()> {
    // the weight grid stands in for --weight
    let mut group = a.group.clone();
    group.weight = group.weight.or(a.weights.first().copied());
    let setup = Setup::from_args(&group)?;
    check_window(a.rmin, a.rmax, a.step)?;
    if a.weights.windows(2).any(|w| w[1] >= w[0]) {
        return Err(UsageError("--weights must be strictly decreasing".into()).into());
    }
    let ft = trace_families(
        &a.weights,
        a.rmin,
        a.rmax,
        a.step,
        &catalog_for_level(setup.level),
        |k| setup.build_solver(k),
    )?;
    let mut rows = Vec::new();
    for (i, t) in ft.traces.iter().enumerate() {
        for p in &t.points {
            let mut row = vec![
                i.to_string(),
                float17(p.k),
                float17(p.r),
                float17(p.h),
                format!("{:?}", p.label),
            ];
            row.extend(p.coeffs.iter().map(|&c| float17(c)));
            rows.push(row);
        }
    }
    write_atomic(
        &a.out,
        &csv_bytes(
            &[
                "trace", "k", "R", "H", "label", "c2", "c3", "c4", "c5", "c6",
            ],
            &rows,
        )?,
    )?;
    let xs: Vec<Vec<String>> = ft
        .crossings
        .iter()
        .map(|x| {
            vec![
                x.traces.0.to_string(),
                x.traces.1.to_string(),
                float17(ft.weights[x.levels.0]),
                float17(ft.weights[x.levels.1]),
                float17(x.r),
                x.swapped.to_string(),
            ]
        })
        .collect();
    write_atomic(
        &crossings_path(&a.out),
        &csv_bytes(
            &["trace_a", "trace_b", "k_from", "k_to", "R", "swapped"],
            &xs,
        )?,
    )?;
    for w in &ft.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{} trace(s), {} avoided crossing(s)",
        ft.traces.len(),
        ft.crossings.len()
    );
    for x in &ft.crossings {
        println!(
            "  R = {:.4} traces {}/{} swapped: {}",
            x.r, x.traces.0, x.traces.1, x.swapped
        );
    }
    Ok(())
}
