use std::path::Path;
use std::process::Command;

use clap::Parser;
use maass::geometry::GroupContext;
use maass::solver::SolverConfig;
use maass_cli::config::{apply, parse_normalization};
use maass_cli::record::{float17, to_json, RunRecord};
use maass_cli::{run, Cli, Setup, UsageError};

fn cli(args: &[&str]) -> anyhow::Result<()> {
    let mut full = vec!["maass"];
    full.extend_from_slice(args);
    run(Cli::try_parse_from(full)?)
}

fn without_timestamp(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"created_unix\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|x| x.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn usage_errors() {
    for args in [
        &[
            "scan",
            "--level",
            "1",
            "--multiplier",
            "theta",
            "--rmin",
            "2",
            "--rmax",
            "3",
        ][..],
        &[
            "scan",
            "--level",
            "4",
            "--multiplier",
            "eta",
            "--weight",
            "1",
            "--rmin",
            "2",
            "--rmax",
            "3",
        ],
        &[
            "scan",
            "--level",
            "1",
            "--multiplier",
            "eta",
            "--rmin",
            "2",
            "--rmax",
            "3",
        ],
        &[
            "scan",
            "--level",
            "3",
            "--multiplier",
            "trivial",
            "--rmin",
            "2",
            "--rmax",
            "3",
        ],
        &[
            "scan",
            "--level",
            "1",
            "--multiplier",
            "eta",
            "--weight",
            "1",
            "--rmin",
            "3",
            "--rmax",
            "2",
        ],
    ] {
        let e = cli(args).unwrap_err();
        assert!(e.downcast_ref::<UsageError>().is_some(), "{args:?}: {e:#}");
    }
    let status = Command::new(env!("CARGO_BIN_EXE_maass"))
        .args([
            "scan",
            "--level",
            "2",
            "--multiplier",
            "theta",
            "--rmin",
            "2",
            "--rmax",
            "3",
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("level 4"));
}

#[test]
fn empty_window_is_a_success() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let args = [
        "scan", "--weight", "1", "--rmin", "2.45", "--rmax", "2.5", "--step", "0.01", "--out",
        out_s,
    ];
    cli(&args).unwrap();
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("index,weight,R,H"));
}

#[test]
fn records_are_deterministic_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let args = [
            "scan", "--weight", "1", "--rmin", "2.3", "--rmax", "2.46", "--step", "0.02", "--out",
        ];
        cli(&[&args[..], &[out.to_str().unwrap()]].concat()).unwrap();
    }
    for name in ["eig-000.json", "summary.csv"] {
        assert_eq!(
            without_timestamp(&a.join(name)),
            without_timestamp(&b.join(name)),
            "{name}"
        );
    }
    let rec = RunRecord::read(&a.join("eig-000.json")).unwrap();
    assert!((rec.r - 2.38549209578045).abs() < 1e-10);
    let copy = dir.path().join("copy.json");
    rec.write(&copy).unwrap();
    assert_eq!(RunRecord::read(&copy).unwrap(), rec);
    assert_eq!(
        std::fs::read(&copy).unwrap(),
        std::fs::read(a.join("eig-000.json")).unwrap()
    );
    // the located form survives the table form exactly
    let f = rec.located_form();
    assert_eq!(
        maass_cli::record::CoefficientTable::from_block(&f.coefficients),
        rec.phase1
    );
    // re-solving with the stored config reproduces R
    let setup = Setup {
        family: rec.multiplier,
        level: rec.level,
        weight: rec.weight,
        config: rec.config.clone(),
    };
    let s = setup.solver().unwrap();
    let again = s
        .refine(
            rec.r - 1e-3,
            rec.r + 1e-3,
            1e-12,
            &f.coefficients.normalization,
        )
        .unwrap();
    assert!(
        (again.point.r - rec.r).abs() <= 10.0 * rec.h.max(1e-13),
        "{} vs {}",
        again.point.r,
        rec.r
    );
}

#[test]
fn expand_then_verify_weight_one_cm_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cm");
    let o = out.to_str().unwrap();
    cli(&[
        "scan", "--weight", "1", "--rmin", "4.7", "--rmax", "4.85", "--step", "0.01", "--out", o,
    ])
    .unwrap();
    let rec = out.join("eig-000.json");
    let r = rec.to_str().unwrap();
    let e = cli(&["verify", "--record", r]).unwrap_err();
    assert!(format!("{e:#}").contains("maass expand"), "{e:#}");
    cli(&["expand", "--record", r]).unwrap();
    let table = out.join("verify.csv");
    cli(&["verify", "--record", r, "--out", table.to_str().unwrap()]).unwrap();
    let rows = csv_rows(&table);
    let hecke: Vec<f64> = rows
        .iter()
        .filter(|row| row[0].starts_with("hecke_w1"))
        .map(|row| row[4].parse().unwrap())
        .collect();
    assert!(hecke.len() >= 28, "{} relation rows", hecke.len());
    assert!(hecke.iter().all(|&x| x < 5e-7));
    let stored = RunRecord::read(&rec).unwrap();
    let checks: Vec<&str> = stored
        .verification
        .iter()
        .map(|c| c.check.as_str())
        .collect();
    assert_eq!(checks, ["hecke_w1", "kj_reality"]);
    assert!(stored.verification.iter().all(|c| c.worst < 5e-7));
    // shimura only applies to theta records
    assert!(cli(&["shimura", "--record", r])
        .unwrap_err()
        .downcast_ref::<UsageError>()
        .is_some());
}

#[test]
fn weyl_series_against_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.csv");
    std::fs::write(
        &summary,
        "index,R\n0,2.38549209578045\n1,3.66240686698667\n2,4.77098419156091\n",
    )
    .unwrap();
    let out = dir.path().join("weyl.csv");
    cli(&[
        "weyl",
        "--weight",
        "1",
        "--tmin",
        "3",
        "--tmax",
        "5",
        "--summary",
        summary.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    assert_eq!(
        rows.iter().map(|r| r[1].as_str()).collect::<Vec<_>>(),
        ["1", "2", "3"]
    );
    let p: f64 = rows[2][2].parse().unwrap();
    assert!((p - maass::spectra::weyl_prediction(5.0, 1.0).unwrap()).abs() < 1e-15);
    // observed spacing below T = 5
    let g: f64 = rows[2][5].parse().unwrap();
    assert!((g - (4.77098419156091 - 2.38549209578045) / 2.0).abs() < 1e-14);
}

#[test]
fn track_writes_plot_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tr.csv");
    cli(&[
        "track",
        "--weights",
        "1e-7,9.0446058240e-8",
        "--rmin",
        "13.5",
        "--rmax",
        "13.8",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let rows = csv_rows(&out);
    // the Eisenstein-like form at R = 13.62697 for the second weight
    assert!(rows.iter().any(|r| r[4] == "E" && (r[2].parse::<f64>().unwrap() - 13.62696884857618).abs() < 1e-9), "{rows:?}");
    assert!(dir.path().join("tr-crossings.csv").exists());
    let e = cli(&[
        "track",
        "--weights",
        "1e-8,1e-7",
        "--rmin",
        "13.6",
        "--rmax",
        "13.66",
    ])
    .unwrap_err();
    assert!(e.downcast_ref::<UsageError>().is_some());
}

#[test]
fn config_file_overrides() {
    let ctx = GroupContext::new(1).unwrap();
    let mut cfg = SolverConfig::for_group(&ctx);
    apply(
        &mut cfg,
        "# heights\ny1 = 0.3\ny2=0.25\n\nm = 30\nnormalization = 0:1=1, 0:2=0\ncompare = 3,4,5\n",
    )
    .unwrap();
    assert_eq!((cfg.y1, cfg.y2, cfg.m), (0.3, 0.25, Some(30)));
    assert_eq!(
        cfg.normalization.unwrap().entries,
        vec![(0, 1, 1.0), (0, 2, 0.0)]
    );
    assert_eq!(cfg.compare, Some(vec![3, 4, 5]));
    assert!(apply(&mut SolverConfig::for_group(&ctx), "y3 = 1").is_err());
    assert!(apply(&mut SolverConfig::for_group(&ctx), "y1 = abc").is_err());
    assert_eq!(
        parse_normalization("2=1").unwrap().entries,
        vec![(0, 2, 1.0)]
    );
}

#[test]
fn floats_carry_seventeen_digits() {
    assert_eq!(float17(0.1), "1.0000000000000001e-1");
    assert_eq!(float17(-2.5e-300), "-2.5000000000000000e-300");
    for v in [0.1, 1.0 / 3.0, 4.461438243496, 1e-300, -7.0e22] {
        assert_eq!(float17(v).parse::<f64>().unwrap(), v);
    }
    let json = to_json(&vec![1.0f64, f64::NAN]).unwrap();
    assert!(json.contains("1.0000000000000000e0") && json.contains("null"));
}
