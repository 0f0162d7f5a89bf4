//! Field container files: a `key = value` text header, a blank line, then
//! CSV records `sheet, i_r, i_theta, i_y..., value...` in row-major order.
//! Floats are written with 17 significant digits so files round-trip
//! bit-exactly.
//!
//! `representation` distinguishes the three container payloads:
//! absent/`sheeted` (default), `unfolded` (sheet column 0; `i_r = 0` rows
//! carry the axis values, one per y node), and `trace` (boundary ring,
//! `i_r` column 0). `N_theta` is the per-sheet angular count for sheeted
//! and trace payloads and the total count for unfolded ones.

use crate::error::{Error, Result};
use crate::field::{SheetedField, Trace, UnfoldedField};
use crate::grid::Grid;
use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldFile<T: Scalar> {
    Sheeted(SheetedField<T>),
    Unfolded(UnfoldedField<T>),
    Trace(Trace<T>),
}

fn write_header<T: Scalar, W: Write>(
    w: &mut W,
    grid: &Grid<T>,
    ncomp: usize,
    representation: Option<&str>,
) -> Result<()> {
    if let Some(rep) = representation {
        writeln!(w, "representation = {rep}")?;
    }
    writeln!(w, "q = {}", grid.q())?;
    writeln!(w, "k = {}", grid.k())?;
    writeln!(w, "n = {}", grid.n())?;
    writeln!(w, "m = {ncomp}")?;
    writeln!(w, "N_r = {}", grid.nr())?;
    let ntheta = if representation == Some("unfolded") {
        grid.ntheta_hat()
    } else {
        grid.ntheta()
    };
    writeln!(w, "N_theta = {ntheta}")?;
    for (d, (ny, rho)) in grid.ny().iter().zip(grid.rho().iter()).enumerate() {
        writeln!(w, "N_y_{} = {}", d + 1, ny)?;
        writeln!(w, "rho_{} = {:.16e}", d + 1, rho)?;
    }
    writeln!(w)?;
    Ok(())
}

fn write_values<T: Scalar, W: Write>(w: &mut W, vals: impl Iterator<Item = T>) -> Result<()> {
    for v in vals {
        write!(w, ",{:.16e}", v)?;
    }
    writeln!(w)?;
    Ok(())
}

fn y_columns<T: Scalar>(grid: &Grid<T>, t: usize) -> String {
    let dims = grid.ny().len();
    let mut idx = [0usize; 2];
    grid.y_indices(t, &mut idx[..dims]);
    idx[..dims]
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_sheeted<T: Scalar, W: Write>(w: &mut W, f: &SheetedField<T>) -> Result<()> {
    let g = f.grid();
    write_header(w, g, f.ncomp(), None)?;
    for l in 0..g.q() {
        for i in 0..g.nr() {
            for j in 0..g.ntheta() {
                for t in 0..g.ny_total() {
                    write!(w, "{l},{i},{j},{}", y_columns(g, t))?;
                    write_values(w, (0..f.ncomp()).map(|c| f.at(l, i, j, t, c)))?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_unfolded<T: Scalar, W: Write>(w: &mut W, f: &UnfoldedField<T>) -> Result<()> {
    let g = f.grid();
    write_header(w, g, f.ncomp(), Some("unfolded"))?;
    if f.axis().is_some() {
        for t in 0..g.ny_total() {
            write!(w, "0,0,0,{}", y_columns(g, t))?;
            write_values(w, (0..f.ncomp()).map(|c| f.axis_value(t, c).unwrap()))?;
        }
    }
    for a in 1..g.nr_hat() {
        for b in 0..g.ntheta_hat() {
            for t in 0..g.ny_total() {
                write!(w, "0,{a},{b},{}", y_columns(g, t))?;
                write_values(w, (0..f.ncomp()).map(|c| f.at(a, b, t, c)))?;
            }
        }
    }
    Ok(())
}

pub fn write_trace<T: Scalar, W: Write>(w: &mut W, f: &Trace<T>) -> Result<()> {
    let g = f.grid();
    write_header(w, g, f.ncomp(), Some("trace"))?;
    for l in 0..g.q() {
        for j in 0..g.ntheta() {
            for t in 0..g.ny_total() {
                write!(w, "{l},0,{j},{}", y_columns(g, t))?;
                write_values(w, (0..f.ncomp()).map(|c| f.at(l, j, t, c)))?;
            }
        }
    }
    Ok(())
}

pub fn write_field<T: Scalar, W: Write>(w: &mut W, f: &FieldFile<T>) -> Result<()> {
    match f {
        FieldFile::Sheeted(s) => write_sheeted(w, s),
        FieldFile::Unfolded(u) => write_unfolded(w, u),
        FieldFile::Trace(t) => write_trace(w, t),
    }
}

fn parse_usize(map: &BTreeMap<String, String>, key: &str) -> Result<usize> {
    map.get(key)
        .ok_or_else(|| Error::Parse(format!("missing header key {key}")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad {key}: {e}")))
}

fn parse_scalar<T: Scalar>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse::<T>()
        .map_err(|e| Error::Parse(format!("bad {what} '{s}': {e}")))
}

/// Reads any of the three container payloads.
pub fn read_field<T: Scalar, R: BufRead>(r: &mut R) -> Result<FieldFile<T>> {
    let mut header = BTreeMap::new();
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Parse("missing blank line after header".into()));
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header line '{trimmed}'")))?;
        header.insert(key.trim().to_string(), value.trim().to_string());
    }
    let rep = header
        .get("representation")
        .map(|s| s.as_str())
        .unwrap_or("sheeted")
        .to_string();
    let q = parse_usize(&header, "q")?;
    let k = parse_usize(&header, "k")?;
    let n = parse_usize(&header, "n")?;
    let ncomp = parse_usize(&header, "m")?;
    let nr = parse_usize(&header, "N_r")?;
    let ntheta = parse_usize(&header, "N_theta")?;
    if n < 3 {
        return Err(Error::Parse(format!("unsupported ambient dimension {n}")));
    }
    let dims = n - 2;
    let mut ny = Vec::new();
    let mut rho = Vec::new();
    for d in 1..=dims {
        ny.push(parse_usize(&header, &format!("N_y_{d}"))?);
        rho.push(parse_scalar::<T>(
            header
                .get(&format!("rho_{d}"))
                .ok_or_else(|| Error::Parse(format!("missing rho_{d}")))?,
            "rho",
        )?);
    }
    let ntheta_hat = if rep == "unfolded" { ntheta } else { ntheta * q };
    let grid = Grid::new(q, k, nr + 1, ntheta_hat, ny, rho)?;

    let mut records: Vec<(Vec<usize>, Vec<T>)> = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cols: Vec<&str> = trimmed.split(',').collect();
        let index_cols = 3 + dims;
        if cols.len() != index_cols + ncomp {
            return Err(Error::Parse(format!(
                "record has {} columns, expected {}",
                cols.len(),
                index_cols + ncomp
            )));
        }
        let idx: Vec<usize> = cols[..index_cols]
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad index '{s}': {e}")))
            })
            .collect::<Result<_>>()?;
        let vals: Vec<T> = cols[index_cols..]
            .iter()
            .map(|s| parse_scalar(s, "value"))
            .collect::<Result<_>>()?;
        records.push((idx, vals));
    }

    match rep.as_str() {
        "sheeted" => {
            let mut f = SheetedField::zeros(grid.clone(), ncomp);
            let mut seen = 0usize;
            for (idx, vals) in records {
                let (l, i, j) = (idx[0], idx[1], idx[2]);
                let t = grid.y_flat(&idx[3..]);
                if l >= q || i >= grid.nr() || j >= grid.ntheta() {
                    return Err(Error::Parse("record index out of range".into()));
                }
                for (c, v) in vals.into_iter().enumerate() {
                    *f.at_mut(l, i, j, t, c) = v;
                }
                seen += 1;
            }
            let expected = q * grid.nr() * grid.ntheta() * grid.ny_total();
            if seen != expected {
                return Err(Error::Parse(format!(
                    "expected {expected} records, found {seen}"
                )));
            }
            Ok(FieldFile::Sheeted(f))
        }
        "unfolded" => {
            let mut f = UnfoldedField::zeros(grid.clone(), ncomp);
            let mut axis: Option<Vec<T>> = None;
            let mut seen = 0usize;
            for (idx, vals) in records {
                let (a, b) = (idx[1], idx[2]);
                let t = grid.y_flat(&idx[3..]);
                if a == 0 {
                    let ax = axis.get_or_insert_with(|| vec![T::zero(); grid.ny_total() * ncomp]);
                    for (c, v) in vals.into_iter().enumerate() {
                        ax[t * ncomp + c] = v;
                    }
                } else {
                    if a >= grid.nr_hat() || b >= grid.ntheta_hat() {
                        return Err(Error::Parse("record index out of range".into()));
                    }
                    for (c, v) in vals.into_iter().enumerate() {
                        *f.at_mut(a, b, t, c) = v;
                    }
                    seen += 1;
                }
            }
            let expected = (grid.nr_hat() - 1) * grid.ntheta_hat() * grid.ny_total();
            if seen != expected {
                return Err(Error::Parse(format!(
                    "expected {expected} records, found {seen}"
                )));
            }
            f.set_axis(axis);
            Ok(FieldFile::Unfolded(f))
        }
        "trace" => {
            let mut f = Trace::zeros(grid.clone(), ncomp);
            let mut seen = 0usize;
            for (idx, vals) in records {
                let (l, j) = (idx[0], idx[2]);
                let t = grid.y_flat(&idx[3..]);
                if l >= q || j >= grid.ntheta() {
                    return Err(Error::Parse("record index out of range".into()));
                }
                for (c, v) in vals.into_iter().enumerate() {
                    *f.at_mut(l, j, t, c) = v;
                }
                seen += 1;
            }
            let expected = q * grid.ntheta() * grid.ny_total();
            if seen != expected {
                return Err(Error::Parse(format!(
                    "expected {expected} records, found {seen}"
                )));
            }
            Ok(FieldFile::Trace(f))
        }
        other => Err(Error::Parse(format!("unknown representation '{other}'"))),
    }
}

pub fn write_field_to_path<T: Scalar>(path: &std::path::Path, f: &FieldFile<T>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut w, f)
}

pub fn read_field_from_path<T: Scalar>(path: &std::path::Path) -> Result<FieldFile<T>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_field(&mut r)
}
