//! Whitespace-separated tables with a `# qvic <kind>` banner, `# key: value`
//! metadata and one header line whose tokens read `name[unit]`.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back gives bit-identical values.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use num_complex::Complex64;

use crate::fdtd::{BlockIndex, Region, VoxelGeometry};
use crate::optimizer::{Scenario, TraceRecord};
use crate::units::zeta;
use crate::validation::{BenchmarkRow, ErrorBudget, VacuumReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// 1-based source line of each row, for diagnostics.
    pub lines: Vec<usize>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn meta(mut self, key: &str, value: impl Display) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# qvic {}\n", self.kind);
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.columns.join(" "));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses `text`, requiring the banner kind and exact header tokens.
    pub fn parse(text: &str, kind: &str, columns: &[&str]) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (n, banner) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty file"))?;
        let want = format!("# qvic {kind}");
        if banner != want {
            return Err(Error::parse(n, format!("expected '{want}', found '{banner}'")));
        }
        let mut table = Table::new(kind, columns);
        let mut header_seen = false;
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if header_seen {
                    return Err(Error::parse(n, "metadata after the column header"));
                }
                let (k, v) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::parse(n, "metadata must read '# key: value'"))?;
                table.meta.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if !header_seen {
                if tokens != table.columns {
                    return Err(Error::parse(
                        n,
                        format!("expected header '{}'", table.columns.join(" ")),
                    ));
                }
                header_seen = true;
                continue;
            }
            if tokens.len() != columns.len() {
                return Err(Error::parse(
                    n,
                    format!("expected {} fields, found {}", columns.len(), tokens.len()),
                ));
            }
            table.rows.push(tokens);
            table.lines.push(n);
        }
        if !header_seen {
            return Err(Error::parse(1, "missing column header"));
        }
        Ok(table)
    }

    pub fn get_meta<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self
            .meta
            .get(key)
            .ok_or_else(|| Error::parse(1, format!("missing metadata '{key}'")))?;
        v.parse()
            .map_err(|_| Error::parse(1, format!("bad value '{v}' for '{key}'")))
    }

    /// Field `col` of row `row`.
    pub fn field<T: FromStr>(&self, row: usize, col: usize) -> Result<T> {
        let v = &self.rows[row][col];
        v.parse().map_err(|_| {
            Error::parse(
                self.lines[row],
                format!("bad value '{v}' in column '{}'", self.columns[col]),
            )
        })
    }
}

fn s(v: impl Display) -> String {
    v.to_string()
}

const GEOMETRY_COLUMNS: [&str; 6] = [
    "ix[-]",
    "iy[-]",
    "iz[-]",
    "zeta_x[2z/lambda0]",
    "zeta_y[2z/lambda0]",
    "zeta_z[2z/lambda0]",
];

/// One row per block in placement order, with the block centre in ζ.
pub fn write_geometry(g: &VoxelGeometry, scenario: Option<Scenario>) -> String {
    let mut t = Table::new("geometry", &GEOMETRY_COLUMNS)
        .meta("footprint", g.region.footprint)
        .meta("block_size", g.region.block_size)
        .meta("depth_blocks", g.region.depth_blocks)
        .meta("backplate", g.backplate)
        .meta("atom_zeta", g.atom_zeta)
        .meta("blocks", g.len())
        .meta("hash", g.hash());
    if let Some(sc) = scenario {
        t = t.meta("scenario", sc);
    }
    for &b in g.blocks() {
        let c = g.region.block_centre(b);
        t.push(vec![
            s(b.ix),
            s(b.iy),
            s(b.iz),
            s(zeta(c[0])),
            s(zeta(c[1])),
            s(zeta(c[2])),
        ]);
    }
    t.render()
}

pub fn read_geometry(text: &str) -> Result<(VoxelGeometry, Option<Scenario>)> {
    let t = Table::parse(text, "geometry", &GEOMETRY_COLUMNS)?;
    let region = Region {
        footprint: t.get_meta("footprint")?,
        block_size: t.get_meta("block_size")?,
        depth_blocks: t.get_meta("depth_blocks")?,
    };
    let mut g = VoxelGeometry::new(region, t.get_meta("backplate")?, t.get_meta("atom_zeta")?)
        .map_err(|e| Error::parse(1, e.to_string()))?;
    for r in 0..t.rows.len() {
        let b = BlockIndex::new(t.field(r, 0)?, t.field(r, 1)?, t.field(r, 2)?);
        g.place(b).map_err(|e| Error::parse(t.lines[r], e.to_string()))?;
    }
    let count: usize = t.get_meta("blocks")?;
    if count != g.len() {
        return Err(Error::parse(1, format!("header says {count} blocks, found {}", g.len())));
    }
    let hash: String = t.get_meta("hash")?;
    if hash != g.hash() {
        return Err(Error::parse(1, "geometry hash does not match its blocks"));
    }
    let scenario = match t.meta.get("scenario") {
        Some(v) => Some(v.parse().map_err(|e: Error| Error::parse(1, e.to_string()))?),
        None => None,
    };
    Ok((g, scenario))
}

const TRACE_COLUMNS: [&str; 15] = [
    "iteration[-]",
    "ix[-]",
    "iy[-]",
    "iz[-]",
    "merit_max[arb]",
    "rho_re[-]",
    "rho_im[-]",
    "rho_abs[-]",
    "gamma1[reduced]",
    "gamma2[reduced]",
    "kappa12_abs[reduced]",
    "kappa12_re[reduced]",
    "kappa12_im[reduced]",
    "wall_time[s]",
    "best[-]",
];

/// One row per iteration; `best` marks the iteration with the largest
/// |ρ₁₂| so far in the file.
pub fn write_trace(records: &[TraceRecord], scenario: Scenario, atom_zeta: f64) -> String {
    let best = records
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (i, r)| match acc {
            Some((_, v)) if r.rho.norm() <= v => acc,
            _ => Some((i, r.rho.norm())),
        })
        .map(|(i, _)| i);
    let mut t = Table::new("trace", &TRACE_COLUMNS)
        .meta("scenario", scenario)
        .meta("atom_zeta", atom_zeta);
    for (i, r) in records.iter().enumerate() {
        t.push(vec![
            s(r.iteration),
            s(r.block.ix),
            s(r.block.iy),
            s(r.block.iz),
            s(r.merit_max),
            s(r.rho.re),
            s(r.rho.im),
            s(r.rho.norm()),
            s(r.gamma1),
            s(r.gamma2),
            s(r.kappa12.norm()),
            s(r.kappa12.re),
            s(r.kappa12.im),
            s(r.wall_time),
            s(u8::from(best == Some(i))),
        ]);
    }
    t.render()
}

pub fn read_trace(text: &str) -> Result<(Vec<TraceRecord>, Scenario, f64)> {
    let t = Table::parse(text, "trace", &TRACE_COLUMNS)?;
    let scenario: String = t.get_meta("scenario")?;
    let scenario = scenario
        .parse()
        .map_err(|e: Error| Error::parse(1, e.to_string()))?;
    let mut out = Vec::with_capacity(t.rows.len());
    for r in 0..t.rows.len() {
        let rec = TraceRecord {
            iteration: t.field(r, 0)?,
            block: BlockIndex::new(t.field(r, 1)?, t.field(r, 2)?, t.field(r, 3)?),
            merit_max: t.field(r, 4)?,
            rho: Complex64::new(t.field(r, 5)?, t.field(r, 6)?),
            gamma1: t.field(r, 8)?,
            gamma2: t.field(r, 9)?,
            kappa12: Complex64::new(t.field(r, 11)?, t.field(r, 12)?),
            wall_time: t.field(r, 13)?,
        };
        if rec.iteration != r + 1 {
            return Err(Error::parse(
                t.lines[r],
                format!("expected iteration {}, found {}", r + 1, rec.iteration),
            ));
        }
        out.push(rec);
    }
    Ok((out, scenario, t.get_meta("atom_zeta")?))
}

const BUDGET_COLUMNS: [&str; 5] = [
    "resolution[ppw]",
    "systematic[-]",
    "random[-]",
    "total[-]",
    "n_samples[-]",
];

pub fn write_budgets(budgets: &[ErrorBudget]) -> String {
    let mut t = Table::new("budget", &BUDGET_COLUMNS);
    for b in budgets {
        t.push(vec![
            s(b.resolution),
            s(b.systematic),
            s(b.random),
            s(b.total),
            s(b.n_samples),
        ]);
    }
    t.render()
}

pub fn read_budgets(text: &str) -> Result<Vec<ErrorBudget>> {
    let t = Table::parse(text, "budget", &BUDGET_COLUMNS)?;
    (0..t.rows.len())
        .map(|r| {
            let b = ErrorBudget {
                resolution: t.field(r, 0)?,
                systematic: t.field(r, 1)?,
                random: t.field(r, 2)?,
                total: t.field(r, 3)?,
                n_samples: t.field(r, 4)?,
            };
            let q = (b.systematic.powi(2) + b.random.powi(2)).sqrt();
            if b.systematic < 0.0 || b.random < 0.0 || (b.total - q).abs() > 1e-12 * q.max(1e-300) {
                return Err(Error::parse(t.lines[r], "total is not the quadrature sum"));
            }
            Ok(b)
        })
        .collect()
}

const SAMPLE_COLUMNS: [&str; 7] = [
    "index[-]",
    "x[lambda0]",
    "y[lambda0]",
    "z[lambda0]",
    "rho_abs[-]",
    "running_total[-]",
    "status[-]",
];

/// Per-sample |ρ₁₂| with the running total error; failed samples carry
/// `nan` and status `failed`.
pub fn write_samples(report: &VacuumReport) -> String {
    let mut t = Table::new("samples", &SAMPLE_COLUMNS)
        .meta("resolution", report.budget.resolution)
        .meta("failures", report.failures());
    let mut ok = 0;
    for smp in &report.samples {
        let (rho, running, status) = match &smp.outcome {
            Ok(v) => {
                ok += 1;
                let running = report
                    .running_total
                    .iter()
                    .find(|(n, _)| *n == ok)
                    .map_or(f64::NAN, |(_, t)| *t);
                (*v, running, "ok")
            }
            Err(_) => (f64::NAN, f64::NAN, "failed"),
        };
        t.push(vec![
            s(smp.index),
            s(smp.position[0]),
            s(smp.position[1]),
            s(smp.position[2]),
            s(rho),
            s(running),
            status.to_string(),
        ]);
    }
    t.render()
}

const BENCHMARK_COLUMNS: [&str; 7] = [
    "resolution[ppw]",
    "zeta[2z/lambda0]",
    "fdtd_rho_abs[-]",
    "analytic_rho_abs[-]",
    "difference[-]",
    "total_error[-]",
    "flagged[-]",
];

pub fn write_benchmark(rows: &[BenchmarkRow]) -> String {
    let mut t = Table::new("benchmark", &BENCHMARK_COLUMNS)
        .meta("flagged", rows.iter().filter(|r| r.flagged).count());
    for r in rows {
        t.push(vec![
            s(r.resolution),
            s(r.zeta),
            s(r.fdtd),
            s(r.analytic),
            s(r.difference),
            s(r.total_error),
            s(u8::from(r.flagged)),
        ]);
    }
    t.render()
}

pub fn read_benchmark(text: &str) -> Result<Vec<BenchmarkRow>> {
    let t = Table::parse(text, "benchmark", &BENCHMARK_COLUMNS)?;
    (0..t.rows.len())
        .map(|r| {
            let flag: u8 = t.field(r, 6)?;
            if flag > 1 {
                return Err(Error::parse(t.lines[r], "flagged must be 0 or 1"));
            }
            Ok(BenchmarkRow {
                resolution: t.field(r, 0)?,
                zeta: t.field(r, 1)?,
                fdtd: t.field(r, 2)?,
                analytic: t.field(r, 3)?,
                difference: t.field(r, 4)?,
                total_error: t.field(r, 5)?,
                flagged: flag == 1,
            })
        })
        .collect()
}

const MERIT_COLUMNS: [&str; 4] = ["ix[-]", "iy[-]", "iz[-]", "merit[arb]"];

pub fn write_merit(field: &crate::adjoint::MeritField) -> String {
    let mut t = Table::new("merit", &MERIT_COLUMNS);
    for (b, v) in field.candidates.iter().zip(&field.values) {
        t.push(vec![s(b.ix), s(b.iy), s(b.iz), s(v)]);
    }
    t.render()
}
