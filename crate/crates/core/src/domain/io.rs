//! GridFunction files.
//!
//! CSV: the first line is `n,d,side,periodic[,lower_0,..,lower_{d-1}]`
//! with `periodic` written as `0` or `1` and the lower corner defaulting to
//! the origin. Every further line is `i[,j[,k]],value`, one per cell, in
//! any order. Values are written in shortest round-trip form.
//!
//! Binary (little endian): magic `OSCG`, `u32` format version 1, `u32` n,
//! `u32` d, `u8` periodic, `f64` side, three `f64` lower coordinates, then
//! `n^d` `f64` values with the first axis fastest.

use std::io::{BufRead, Read, Write};

use super::function::GridFunction;
use super::grid::{Grid, Window};
use crate::error::{Result, SpecError};

const MAGIC: &[u8; 4] = b"OSCG";

pub fn write_csv<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    let g = f.grid();
    let d = g.dim();
    let mut header = format!(
        "{},{},{},{}",
        g.n,
        d,
        g.window.side,
        u8::from(g.window.periodic)
    );
    for a in 0..d {
        header.push_str(&format!(",{}", g.window.lower[a]));
    }
    writeln!(w, "{header}")?;
    for (idx, v) in f.values().iter().enumerate() {
        let c = g.coords(idx);
        match d {
            1 => writeln!(w, "{},{v}", c[0])?,
            2 => writeln!(w, "{},{},{v}", c[0], c[1])?,
            _ => writeln!(w, "{},{},{},{v}", c[0], c[1], c[2])?,
        }
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| SpecError::new(field, format!("cannot parse `{s}`")).into())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<GridFunction> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| SpecError::new("header", "empty file"))??;
    let parts: Vec<&str> = header.split(',').collect();
    if parts.len() < 4 {
        return Err(SpecError::new("header", "expected n,d,side,periodic").into());
    }
    let n: usize = parse("n", parts[0])?;
    let d: usize = parse("d", parts[1])?;
    let side: f64 = parse("side", parts[2])?;
    let periodic = match parts[3].trim() {
        "0" | "false" => false,
        "1" | "true" => true,
        other => return Err(SpecError::new("periodic", format!("`{other}` is not 0/1")).into()),
    };
    let mut lower = [0.0; 3];
    if parts.len() > 4 {
        if parts.len() != 4 + d {
            return Err(SpecError::new("lower", format!("expected {d} coordinates")).into());
        }
        for a in 0..d {
            lower[a] = parse("lower", parts[4 + a])?;
        }
    }
    let grid = Grid::new(Window::new(d, lower, side, periodic)?, n)?;
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != d + 1 {
            return Err(SpecError::new(
                format!("line {}", lineno + 2),
                format!("expected {} columns", d + 1),
            )
            .into());
        }
        let mut ijk = [0usize; 3];
        for a in 0..d {
            ijk[a] = parse("index", cols[a])?;
            if ijk[a] >= n {
                return Err(SpecError::new("index", format!("{} out of range", ijk[a])).into());
            }
        }
        let idx = grid.index(ijk);
        if values[idx].is_nan() {
            seen += 1;
        }
        values[idx] = parse("value", cols[d])?;
    }
    if seen != grid.len() {
        return Err(SpecError::new(
            "values",
            format!("{} of {} cells present", seen, grid.len()),
        )
        .into());
    }
    GridFunction::new(grid, values)
}

pub fn write_binary<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    w.write_all(&(g.n as u32).to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&[u8::from(g.window.periodic)])?;
    w.write_all(&g.window.side.to_le_bytes())?;
    for x in g.window.lower {
        w.write_all(&x.to_le_bytes())?;
    }
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<GridFunction> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SpecError::new("magic", "not a grid function file").into());
    }
    let mut u4 = [0u8; 4];
    let mut f8 = [0u8; 8];
    r.read_exact(&mut u4)?;
    if u32::from_le_bytes(u4) != 1 {
        return Err(SpecError::new("version", "unsupported").into());
    }
    r.read_exact(&mut u4)?;
    let n = u32::from_le_bytes(u4) as usize;
    r.read_exact(&mut u4)?;
    let d = u32::from_le_bytes(u4) as usize;
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    r.read_exact(&mut f8)?;
    let side = f64::from_le_bytes(f8);
    let mut lower = [0.0; 3];
    for x in &mut lower {
        r.read_exact(&mut f8)?;
        *x = f64::from_le_bytes(f8);
    }
    let grid = Grid::new(Window::new(d, lower, side, b[0] != 0)?, n)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut f8)?;
        values.push(f64::from_le_bytes(f8));
    }
    GridFunction::new(grid, values)
}

/// Reads either format, choosing by the magic bytes.
pub fn read_path(path: &std::path::Path) -> Result<GridFunction> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&bytes[..])
    } else {
        read_csv(&bytes[..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn sample() -> GridFunction {
        let g = Grid::new(Window::centered(2, 2.0, false).unwrap(), 16).unwrap();
        GridFunction::from_fn(g, |p| (p[0] * 3.1).sin() + p[1] / 7.0).unwrap()
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("16,2,2,0,-1,-1\n"));
        assert_eq!(read_csv(&buf[..]).unwrap(), f);
    }

    #[test]
    fn binary_roundtrip_is_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_binary(&f, &mut buf).unwrap();
        assert_eq!(read_binary(&buf[..]).unwrap(), f);
    }

    #[test]
    fn csv_missing_cells_rejected() {
        let text = "8,1,1,1\n0,1.0\n1,2.0\n";
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::Spec(_))));
    }

    #[test]
    fn csv_defaults_lower_corner() {
        let mut text = String::from("8,1,1,1\n");
        for i in 0..8 {
            text.push_str(&format!("{i},{i}\n"));
        }
        let f = read_csv(text.as_bytes()).unwrap();
        assert_eq!(f.grid().window.lower, [0.0; 3]);
        assert!(f.grid().window.periodic);
        assert_eq!(f.values()[3], 3.0);
    }
}
