//! Text outputs: diagnostics and sweep tables as CSV, field snapshots as
//! self-describing grid-csv or legacy VTK. Floats are written in the
//! shortest form that parses back to the same double.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::experiments::{ConvergenceReport, SweepResult, SweepRow};
use crate::grid::{Grid, ScalarField, VectorField};
use crate::levelset::LevelSetField;
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    GridCsv,
    VtkLegacy,
}

impl FieldFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FieldFormat::GridCsv => "csv",
            FieldFormat::VtkLegacy => "vtk",
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn parse_num(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {line}: bad number `{s}`: {e}")),
        )
    })
}

fn invalid_data(path: &Path, msg: impl Into<String>) -> Error {
    Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into()))
}

/// Writes `contents` to a sibling temporary file, then renames it over
/// `path`, so a failed write never leaves a truncated file behind.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp: PathBuf = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn csv_table<const N: usize>(header: &[&str; N], rows: impl Iterator<Item = [f64; N]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    csv_table(&DiagnosticsRecord::COLUMNS, records.iter().map(|r| r.values()))
}

pub fn write_diagnostics(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    atomic_write(path, &diagnostics_csv(records))
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == DiagnosticsRecord::COLUMNS.join(",") => {}
        _ => return Err(invalid_data(path, "missing or unexpected diagnostics header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != DiagnosticsRecord::COLUMNS.len() {
            return Err(invalid_data(path, format!("line {}: expected 19 columns", i + 1)));
        }
        let mut vals = [0.0; 19];
        for (v, s) in vals.iter_mut().zip(&cells) {
            *v = parse_num(s, path, i + 1)?;
        }
        out.push(DiagnosticsRecord::from_values(vals));
    }
    Ok(out)
}

pub fn write_sweep_table(result: &SweepResult, path: &Path) -> Result<()> {
    let mut text = format!("# param = {}\n# slip_slope = {}\n", result.param, num(result.slip_slope));
    text.push_str(&csv_table(&SweepRow::COLUMNS, result.rows.iter().map(|r| r.values())));
    atomic_write(path, &text)
}

pub fn write_convergence_table(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let mut text = format!("# case = {}\nresolution,error_l1,error_l2,order_l1,order_l2\n", report.case);
    for (k, &n) in report.resolutions.iter().enumerate() {
        let order = |o: &[f64]| if k == 0 { String::new() } else { num(o[k - 1]) };
        let _ = writeln!(
            text,
            "{n},{},{},{},{}",
            num(report.errors_l1[k]),
            num(report.errors_l2[k]),
            order(&report.orders_l1),
            order(&report.orders_l2)
        );
    }
    atomic_write(path, &text)
}

fn field_columns(dim: usize) -> Vec<String> {
    let axes = ["x", "y", "z"];
    let mut cols: Vec<String> = ["P", "Q", "D", "C", "phi"].iter().map(|s| s.to_string()).collect();
    cols.extend(axes[..dim].iter().map(|a| format!("v_{a}")));
    cols.extend(axes[..dim].iter().map(|a| format!("m_{a}")));
    cols
}

fn grid_csv(state: &State) -> String {
    let g = *state.grid();
    let dim = g.dim();
    let cols = field_columns(dim);
    let mut out = String::new();
    let _ = writeln!(out, "# tumorsim grid-csv");
    let _ = writeln!(out, "# dimension = {dim}");
    let _ = writeln!(out, "# cells_per_axis = {}", g.cells_per_axis());
    let _ = writeln!(out, "# radius = {}", num(g.radius()));
    let _ = writeln!(out, "# spacing = {}", num(g.spacing()));
    let _ = writeln!(out, "# time = {}", num(state.t));
    let _ = writeln!(out, "# fields = {}", cols.join(","));
    out.push_str(&cols.join(","));
    out.push('\n');
    let scalars = [&state.p, &state.q, &state.d, &state.c, state.phi.field()];
    for c in 0..g.cell_count() {
        let mut row: Vec<String> = scalars.iter().map(|f| num(f.values()[c])).collect();
        row.extend((0..dim).map(|a| num(state.v.component(a)[c])));
        row.extend((0..dim).map(|a| num(state.m.component(a)[c])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn vtk_legacy(state: &State) -> String {
    let g = *state.grid();
    let n = g.cells_per_axis();
    let h = g.spacing();
    let lo = g.axis_center(0);
    let (nz, oz) = if g.dim() == 3 { (n, lo) } else { (1, 0.0) };
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "tumorsim snapshot t={}", num(state.t));
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {n} {n} {nz}");
    let _ = writeln!(out, "ORIGIN {} {} {}", num(lo), num(lo), num(oz));
    let _ = writeln!(out, "SPACING {} {} {}", num(h), num(h), num(h));
    let _ = writeln!(out, "POINT_DATA {}", g.cell_count());
    let scalars = [("P", &state.p), ("Q", &state.q), ("D", &state.d), ("C", &state.c), ("phi", state.phi.field())];
    for (name, f) in scalars {
        let _ = writeln!(out, "SCALARS {name} double 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for &x in f.values() {
            let _ = writeln!(out, "{}", num(x));
        }
    }
    for (name, f) in [("v", &state.v), ("m", &state.m)] {
        let _ = writeln!(out, "VECTORS {name} double");
        for c in 0..g.cell_count() {
            let p = f.at(c);
            let _ = writeln!(out, "{} {} {}", num(p[0]), num(p[1]), num(p[2]));
        }
    }
    out
}

pub fn write_field_snapshot(state: &State, path: &Path, format: FieldFormat) -> Result<()> {
    let text = match format {
        FieldFormat::GridCsv => grid_csv(state),
        FieldFormat::VtkLegacy => vtk_legacy(state),
    };
    atomic_write(path, &text)
}

/// Reads a grid-csv snapshot back into a state.
pub fn read_grid_csv(path: &Path) -> Result<State> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut header = std::collections::BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.split_once('=') {
            header.insert(k.trim().to_string(), v.trim().to_string());
        }
        lines.next();
    }
    let get = |k: &str| header.get(k).ok_or_else(|| invalid_data(path, format!("missing header `{k}`")));
    let dim: usize = get("dimension")?.parse().map_err(|_| invalid_data(path, "bad dimension"))?;
    let n: usize = get("cells_per_axis")?.parse().map_err(|_| invalid_data(path, "bad cells_per_axis"))?;
    let radius = parse_num(get("radius")?, path, 0)?;
    let t = parse_num(get("time")?, path, 0)?;
    let grid = Grid::new(radius, n, dim)?;
    if parse_num(get("spacing")?, path, 0)? != grid.spacing() {
        return Err(invalid_data(path, "spacing does not match radius and cells_per_axis"));
    }
    let cols = field_columns(dim);
    match lines.next() {
        Some((_, l)) if l == cols.join(",") => {}
        _ => return Err(invalid_data(path, "unexpected column header")),
    }
    let mut data = vec![Vec::with_capacity(grid.cell_count()); cols.len()];
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(invalid_data(path, format!("line {}: expected {} columns", i + 1, cols.len())));
        }
        for (col, s) in data.iter_mut().zip(&cells) {
            col.push(parse_num(s, path, i + 1)?);
        }
    }
    if data[0].len() != grid.cell_count() {
        return Err(invalid_data(path, format!("expected {} rows, got {}", grid.cell_count(), data[0].len())));
    }
    let mut it = data.into_iter();
    let mut scalar = || ScalarField::from_values(grid, it.next().expect("column"));
    let (p, q, d, c, phi) = (scalar()?, scalar()?, scalar()?, scalar()?, scalar()?);
    let v = VectorField::from_components(grid, it.by_ref().take(dim).collect())?;
    let m = VectorField::from_components(grid, it.take(dim).collect())?;
    Ok(State { t, p, q, d, c, v, m, phi: LevelSetField::new(phi) })
}
