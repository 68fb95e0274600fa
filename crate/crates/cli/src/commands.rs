use std::fs;
use std::path::{Path, PathBuf};

use qvic::adjoint::vacuum_merit_density;
use qvic::coherence::{antinodes as antinode_positions, reflector_coherence};
use qvic::fdtd::{greens_field_in, rasterize, GreensOptions};
use qvic::io::{self, Table};
use qvic::optimizer::{run_optimization_from, single_pass, OptimizationConfig, OptimizationState};
use qvic::validation::{reflector_benchmark_at, vacuum_error_protocol, MIN_SAMPLES};

use crate::config::RunConfig;
use crate::{AnalyticArgs, AntinodeArgs, CliError, Curve, GreensArgs, OptimizeArgs, Plane, ValidateArgs};

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    // Write-then-rename so an interrupted run never leaves a torn checkpoint.
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Points start + k·step for k = 1..=n with start + n·step ≤ stop.
fn open_closed_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(CliError::Usage("range bounds must be finite".into()));
    }
    if !(step > 0.0) || !(stop > start) {
        return Err(CliError::Usage(format!(
            "empty range: start {start}, stop {stop}, step {step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n == 0 {
        return Err(CliError::Usage("range contains no points".into()));
    }
    Ok((1..=n).map(|k| start + k as f64 * step).collect())
}

/// Points start + k·step for k = 0..=n with start + n·step ≤ stop.
fn closed_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    let n = open_closed_range(start, stop, step)?.len();
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad number '{s}' in grid '{spec}'")))
    };
    match parts.as_slice() {
        [a, b, c] => closed_range(num(a)?, num(b)?, num(c)?),
        _ => spec.split(',').map(num).collect(),
    }
}

pub fn analytic(a: &AnalyticArgs) -> Result<(), CliError> {
    let text = match a.curve {
        Curve::Reflector => {
            if a.start < 0.0 {
                return Err(CliError::Usage("reflector range must start at ζ ≥ 0".into()));
            }
            let mut t = Table::new("reflector", &["zeta[2z/lambda0]", "rho_abs[-]"]);
            for z in open_closed_range(a.start, a.stop, a.step)? {
                let r = reflector_coherence(z, 1.0, 1.0)?;
                t.push(vec![z.to_string(), r.abs().to_string()]);
            }
            t.render()
        }
        Curve::Merit => {
            if !(a.extent > 0.0) {
                return Err(CliError::Usage("merit extent must be positive".into()));
            }
            let axis = closed_range(-a.extent, a.extent, a.step)?;
            let mut t = Table::new(
                "merit-slices",
                &["plane[-]", "zeta_x[-]", "zeta_y[-]", "zeta_z[-]", "merit[arb]"],
            )
            .meta("rotation", "perpendicular");
            for plane in &a.planes {
                let (fixed, name) = match plane {
                    Plane::X => (0, "x"),
                    Plane::Y => (1, "y"),
                    Plane::Z => (2, "z"),
                };
                let free: Vec<usize> = (0..3).filter(|&i| i != fixed).collect();
                for &u in &axis {
                    for &v in &axis {
                        let mut p = [0.0; 3];
                        p[free[0]] = u;
                        p[free[1]] = v;
                        // The density is singular at the atom itself.
                        let m = vacuum_merit_density(p).unwrap_or(f64::NAN);
                        t.push(vec![
                            name.to_string(),
                            p[0].to_string(),
                            p[1].to_string(),
                            p[2].to_string(),
                            m.to_string(),
                        ]);
                    }
                }
            }
            t.render()
        }
    };
    emit(a.out.as_deref(), &text)
}

fn out_dir(cfg: &RunConfig, flag: &Option<PathBuf>) -> PathBuf {
    flag.clone().unwrap_or_else(|| cfg.output_dir())
}

pub fn optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_deref())?;
    let mut oc = cfg.optimization()?;
    if let Some(n) = a.iterations {
        if n == 0 {
            return Err(CliError::Usage("--iterations must be at least 1".into()));
        }
        oc.max_iterations = n;
    }
    let dir = out_dir(&cfg, &a.out);
    if a.single_pass || cfg.optimization.single_pass.unwrap_or(false) {
        return run_single_pass(&oc, &dir);
    }
    let every = cfg.optimization.checkpoint_every.unwrap_or(0);
    run_iterative(&oc, &dir, a.resume, every)
}

fn run_single_pass(oc: &OptimizationConfig, dir: &Path) -> Result<(), CliError> {
    let (geometry, result) = single_pass(oc)?;
    write_file(
        &dir.join("single_pass_geometry.tsv"),
        &io::write_geometry(&geometry, Some(oc.scenario)),
    )?;
    let mut t = Table::new(
        "single-pass",
        &[
            "blocks[-]",
            "rho_re[-]",
            "rho_im[-]",
            "rho_abs[-]",
            "gamma1[reduced]",
            "gamma2[reduced]",
            "kappa12_abs[reduced]",
        ],
    )
    .meta("scenario", oc.scenario)
    .meta("atom_zeta", oc.atom_zeta);
    t.push(
        [
            geometry.len() as f64,
            result.rho.re,
            result.rho.im,
            result.rho.norm(),
            result.rates.gamma1,
            result.rates.gamma2,
            result.rates.kappa12.norm(),
        ]
        .iter()
        .map(|v| v.to_string())
        .collect(),
    );
    write_file(&dir.join("single_pass.tsv"), &t.render())?;
    println!(
        "single pass: {} blocks, |rho12| {:.6}",
        geometry.len(),
        result.rho.norm()
    );
    Ok(())
}

fn run_iterative(
    oc: &OptimizationConfig,
    dir: &Path,
    resume: bool,
    every: usize,
) -> Result<(), CliError> {
    let trace_path = dir.join("trace.tsv");
    let geom_path = dir.join("geometry.tsv");
    let state = if resume {
        let load = |p: &Path| {
            fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot resume from {}: {e}", p.display())))
        };
        let (records, scenario, zeta) = io::read_trace(&load(&trace_path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", trace_path.display())))?;
        let (geometry, _) = io::read_geometry(&load(&geom_path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", geom_path.display())))?;
        if scenario != oc.scenario || zeta != oc.atom_zeta {
            return Err(CliError::Usage(
                "checkpoint was written for a different scenario or atom height".into(),
            ));
        }
        let state = OptimizationState { geometry, records };
        state
            .validate(oc)
            .map_err(|e| CliError::Usage(format!("inconsistent checkpoint: {e}")))?;
        println!("resuming after iteration {}", state.records.len());
        state
    } else {
        OptimizationState::new(oc)?
    };
    fs::create_dir_all(dir)?;
    let scenario = oc.scenario;
    let trace = run_optimization_from(oc, state, |s| {
        let r = s.records.last().expect("called after a placement");
        println!(
            "iter {:>4}  block {}  dF_max {:+.4e}  |rho12| {:.6}  ({:.1} s)",
            r.iteration,
            r.block,
            r.merit_max,
            r.rho.norm(),
            r.wall_time
        );
        let persist = || -> Result<(), CliError> {
            write_file(&trace_path, &io::write_trace(&s.records, scenario, oc.atom_zeta))?;
            write_file(&geom_path, &io::write_geometry(&s.geometry, Some(scenario)))?;
            if every > 0 && r.iteration % every == 0 {
                let snap = dir.join(format!("geometry_{:04}.tsv", r.iteration));
                write_file(&snap, &io::write_geometry(&s.geometry, Some(scenario)))?;
            }
            Ok(())
        };
        persist().map_err(|e| match e {
            CliError::Usage(m) | CliError::Runtime(m) => qvic::Error::Io(std::io::Error::other(m)),
        })
    })?;
    write_file(
        &dir.join("best_geometry.tsv"),
        &io::write_geometry(&trace.best_geometry, Some(scenario)),
    )?;
    println!(
        "best |rho12| {:.6} at iteration {}",
        trace.peak_rho(),
        trace.best().iteration
    );
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Result<(), CliError> {
    if a.samples < MIN_SAMPLES {
        return Err(CliError::Usage(format!(
            "validation needs at least {MIN_SAMPLES} samples, got {}",
            a.samples
        )));
    }
    if a.resolutions.is_empty() {
        return Err(CliError::Usage("no resolutions given".into()));
    }
    let cfg = RunConfig::load(a.config.as_deref())?;
    let zetas = parse_grid(&a.zeta)?;
    let base = cfg.fdtd();
    let headline = if a.resolutions.contains(&base.resolution) {
        base.resolution
    } else {
        a.resolutions[0]
    };
    let dir = out_dir(&cfg, &a.out);
    let mut budgets = Vec::new();
    let mut rows = Vec::new();
    for &res in &a.resolutions {
        let config = qvic::fdtd::FdtdConfig {
            resolution: res,
            ..base
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(format!("{res} ppw: {e}")))?;
        let report = vacuum_error_protocol(&config, a.samples, a.seed)?;
        let b = report.budget;
        println!(
            "{res:>3} ppw  systematic {:.3e}  random {:.3e}  total {:.3e}  ({} samples, {} failed)",
            b.systematic,
            b.random,
            b.total,
            b.n_samples,
            report.failures()
        );
        write_file(&dir.join(format!("samples_{res}.tsv")), &io::write_samples(&report))?;
        let r = reflector_benchmark_at(&config, &b, &zetas)?;
        for row in &r {
            println!(
                "{res:>3} ppw  zeta {:.3}  fdtd {:.5}  analytic {:.5}  diff {:+.2e}{}",
                row.zeta,
                row.fdtd,
                row.analytic,
                row.difference,
                if row.flagged { "  FLAGGED" } else { "" }
            );
        }
        budgets.push(b);
        rows.extend(r);
    }
    write_file(&dir.join("budget.tsv"), &io::write_budgets(&budgets))?;
    write_file(&dir.join("benchmark.tsv"), &io::write_benchmark(&rows))?;
    let flagged = rows
        .iter()
        .filter(|r| r.resolution == headline && r.flagged)
        .count();
    if flagged > 0 {
        return Err(CliError::Runtime(format!(
            "{flagged} benchmark points at {headline} ppw differ from the analytic curve by more than the error budget"
        )));
    }
    Ok(())
}

pub fn antinodes(a: &AntinodeArgs) -> Result<(), CliError> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let zs = antinode_positions(a.count)?;
    let mut t = Table::new(
        "antinodes",
        &["n[-]", "zeta_n[2z/lambda0]", "approx[2z/lambda0]", "rho_abs[-]"],
    );
    for (i, &z) in zs.iter().enumerate() {
        let n = (i + 1) as f64;
        t.push(vec![
            (i + 1).to_string(),
            z.to_string(),
            (0.5 * (n + 0.5)).to_string(),
            reflector_coherence(z, 1.0, 1.0)?.abs().to_string(),
        ]);
    }
    if !a.optimize {
        return emit(a.out.as_deref().map(|d| d.join("antinodes.tsv")).as_deref(), &t.render());
    }
    let cfg = RunConfig::load(a.config.as_deref())?;
    let base = cfg.optimization()?;
    let dir = out_dir(&cfg, &a.out);
    write_file(&dir.join("antinodes.tsv"), &t.render())?;
    for (i, &z) in zs.iter().enumerate() {
        let sub = dir.join(format!("antinode_{}", i + 1));
        let oc = OptimizationConfig {
            atom_zeta: z,
            ..base.clone()
        };
        let mut run_cfg = cfg.clone();
        run_cfg.optimization.atom_zeta = Some(z);
        run_cfg.output.directory = Some(sub.clone());
        write_file(&sub.join("config.toml"), &render_config(&run_cfg, &oc))?;
        println!("scheduled antinode {} at zeta {z:.6} -> {}", i + 1, sub.display());
        if !a.dry_run {
            run_iterative(&oc, &sub, false, 0)?;
        }
    }
    Ok(())
}

/// Fully explicit configuration file for `oc`, written in the same format
/// [`RunConfig`] reads.
fn render_config(cfg: &RunConfig, oc: &OptimizationConfig) -> String {
    let f = &oc.fdtd;
    let mut s = String::new();
    s.push_str("[optimization]\n");
    s.push_str(&format!("scenario = \"{}\"\n", oc.scenario));
    s.push_str(&format!("atom_zeta = {:?}\n", oc.atom_zeta));
    s.push_str(&format!("max_iterations = {}\n", oc.max_iterations));
    s.push_str("\n[region]\n");
    s.push_str(&format!("footprint = {:?}\n", oc.region.footprint));
    s.push_str(&format!("block_size = {:?}\n", oc.region.block_size));
    s.push_str(&format!("depth_blocks = {}\n", oc.region.depth_blocks));
    s.push_str("\n[fdtd]\n");
    s.push_str(&format!("resolution = {}\n", f.resolution));
    s.push_str(&format!("box_half_extent = {:?}\n", f.box_half_extent));
    s.push_str(&format!("pml_thickness = {:?}\n", f.pml_thickness));
    s.push_str(&format!("courant_factor = {:?}\n", f.courant_factor));
    s.push_str(&format!(
        "source_fractional_bandwidth = {:?}\n",
        f.source_fractional_bandwidth
    ));
    s.push_str(&format!("decay_threshold = {:?}\n", f.decay_threshold));
    s.push_str(&format!("max_steps = {}\n", f.max_steps));
    s.push_str(&format!(
        "dispersion_compensation = {}\n",
        f.dispersion_compensation
    ));
    if let Some(d) = &cfg.output.directory {
        s.push_str("\n[output]\n");
        s.push_str(&format!("directory = {:?}\n", d.display().to_string()));
    }
    s
}

pub fn greens(a: &GreensArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(a.config.as_deref())?;
    let oc = cfg.optimization()?;
    let geometry = match &a.geometry {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            io::read_geometry(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
                .0
        }
        None => oc.initial_geometry()?,
    };
    let medium = rasterize(&geometry, &oc.fdtd)?;
    let cells = if a.full {
        medium.lattice.interior()
    } else {
        geometry.region.cells(&medium.lattice)?
    };
    let options = GreensOptions {
        cells: Some(cells),
        ..GreensOptions::default()
    };
    let field = greens_field_in(&medium, geometry.atom_position(), &oc.fdtd, &options)?;
    let mut columns = vec![
        "i[cell]".to_string(),
        "j[cell]".to_string(),
        "k[cell]".to_string(),
        "x[lambda0]".to_string(),
        "y[lambda0]".to_string(),
        "z[lambda0]".to_string(),
    ];
    for r in ["x", "y", "z"] {
        for c in ["x", "y", "z"] {
            columns.push(format!("g{r}{c}_re[omega0/c]"));
            columns.push(format!("g{r}{c}_im[omega0/c]"));
        }
    }
    let col_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let at = field.atom;
    let mut t = Table::new("greens", &col_refs)
        .meta("geometry_hash", geometry.hash())
        .meta("atom", format!("{} {} {}", at[0], at[1], at[2]))
        .meta("calibration", field.calibration);
    let mut row = |cell: [usize; 3], pos: [f64; 3], g: &qvic::ComplexMatrix3| {
        let mut r: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        r.extend(pos.iter().map(|v| v.to_string()));
        for i in 0..3 {
            for j in 0..3 {
                r.push(g[(i, j)].re.to_string());
                r.push(g[(i, j)].im.to_string());
            }
        }
        t.push(r);
    };
    for (cell, g) in cells.iter().zip(&field.values) {
        row(cell, medium.lattice.cell_centre(cell), g);
    }
    let mut text = t.render();
    text.insert_str(
        text.find('\n').map_or(0, |i| i + 1),
        &format!("# at_atom: {}\n", flat(&field.at_atom)),
    );
    let default = out_dir(&cfg, &None).join("greens.tsv");
    let path = a.out.clone().unwrap_or(default);
    write_file(&path, &text)?;
    println!("wrote {} cells to {}", field.values.len(), path.display());
    Ok(())
}

fn flat(g: &qvic::ComplexMatrix3) -> String {
    let mut v = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            v.push(format!("{} {}", g[(i, j)].re, g[(i, j)].im));
        }
    }
    v.join(" ")
}
