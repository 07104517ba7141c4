//! Result records and their on-disk form. See `docs/result-schema.md`.

use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use maass::multipliers::MultiplierFamily;
use maass::solver::{
    CoefficientBlock, CuspCoefficients, LocatedForm, Normalization, SolverConfig, SpectralPoint,
};
use maass::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

/// Coefficients of one cusp. Indices without a value (the excluded
/// `n + alpha = 0`, failed Phase-2 extractions) are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspTable {
    pub cusp: usize,
    pub alpha: f64,
    pub m: i64,
    pub coefficients: Vec<Coefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub y: f64,
    pub h: Option<f64>,
    pub normalization: Normalization,
    pub cusps: Vec<CuspTable>,
}

impl CoefficientTable {
    pub fn from_block(b: &CoefficientBlock) -> Self {
        let cusps = b
            .cusps
            .iter()
            .enumerate()
            .map(|(j, c)| CuspTable {
                cusp: j,
                alpha: c.alpha,
                m: c.m,
                coefficients: (-c.m..=c.m)
                    .filter_map(|n| {
                        c.get(n).map(|z| Coefficient {
                            n,
                            re: z.re,
                            im: z.im,
                        })
                    })
                    .collect(),
            })
            .collect();
        Self {
            y: b.y,
            h: b.h,
            normalization: b.normalization.clone(),
            cusps,
        }
    }

    pub fn to_block(&self, level: u32, k: f64, r: f64) -> CoefficientBlock {
        let cusps = self
            .cusps
            .iter()
            .map(|c| {
                let mut values = vec![None; (2 * c.m + 1) as usize];
                for x in &c.coefficients {
                    if x.n.abs() <= c.m {
                        values[(x.n + c.m) as usize] = Some(Complex64::new(x.re, x.im));
                    }
                }
                CuspCoefficients {
                    alpha: c.alpha,
                    m: c.m,
                    values,
                }
            })
            .collect();
        CoefficientBlock {
            level,
            k,
            r,
            cusps,
            normalization: self.normalization.clone(),
            y: self.y,
            h: self.h,
        }
    }
}

/// Worst residual of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub count: usize,
    pub worst: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub software_version: String,
    /// Seconds since the Unix epoch (`SOURCE_DATE_EPOCH` when set).
    pub created_unix: u64,
    pub level: u32,
    pub multiplier: MultiplierFamily,
    pub weight: f64,
    pub config: SolverConfig,
    pub r: f64,
    pub h: f64,
    /// Phase-1 solution at `config.y1`, all cusps.
    pub phase1: CoefficientTable,
    /// Phase-2 coefficients, filled by `expand`.
    pub expansion: Option<CoefficientTable>,
    pub verification: Vec<CheckSummary>,
}

impl RunRecord {
    pub fn new(
        multiplier: MultiplierFamily,
        level: u32,
        config: SolverConfig,
        f: &LocatedForm,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: timestamp(),
            level,
            multiplier,
            weight: f.point.k,
            config,
            r: f.point.r,
            h: f.h,
            phase1: CoefficientTable::from_block(&f.coefficients),
            expansion: None,
            verification: Vec::new(),
        }
    }

    pub fn located_form(&self) -> LocatedForm {
        LocatedForm {
            point: SpectralPoint {
                k: self.weight,
                r: self.r,
            },
            h: self.h,
            coefficients: self.phase1.to_block(self.level, self.weight, self.r),
        }
    }

    pub fn expansion_block(&self) -> Option<CoefficientBlock> {
        self.expansion
            .as_ref()
            .map(|t| t.to_block(self.level, self.weight, self.r))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading record {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing record {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, to_json(self)?.as_bytes())
    }
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
    {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Pretty JSON with every float at 17 significant digits.
struct SeventeenDigits(PrettyFormatter<'static>);

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", float17(v))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write!(w, "{}", float17(v as f64))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `d.dddddddddddddddde±x`, 17 significant digits.
pub fn float17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits(Default::default()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf)?)
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .context("output path has no file name")?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
