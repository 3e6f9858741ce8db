//! Peak-coordinate list input: `x,y` integer pairs (x = column, y = row,
//! 0-based), one per line after the header, converted to a binary grid.
//! Three-column `x,y,z` lists are projected to a slice by keeping peaks
//! within a slab around a center coordinate.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::PeakField;
use crate::grid::LatticeGrid;

/// Slab projection for 3-D peak lists: keep rows with
/// `|z - center| <= halfwidth` and drop the z coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabFilter {
    pub center: f64,
    pub halfwidth: f64,
}

/// Parse a peak list. Returns `(x, y)` pairs of the retained peaks.
///
/// The header must be `x,y` (slab filter not allowed) or `x,y,z` (slab
/// filter required).
pub fn parse_peak_list(
    bytes: &[u8],
    slab: Option<SlabFilter>,
    origin: &str,
) -> Result<Vec<(u32, u32)>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(origin, 0, 0, format!("not UTF-8: {e}")))?;
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((ln, l)) => {
                let t = l.trim().trim_end_matches('\r');
                if !t.is_empty() {
                    break (ln, t.to_ascii_lowercase());
                }
            }
            None => return Err(Error::parse(origin, 1, 1, "empty peak list")),
        }
    };
    let has_z = match header.1.replace(' ', "").as_str() {
        "x,y" => false,
        "x,y,z" => true,
        other => {
            return Err(Error::parse(
                origin,
                header.0 + 1,
                1,
                format!("expected header 'x,y' or 'x,y,z', got {other:?}"),
            ));
        }
    };
    if has_z && slab.is_none() {
        return Err(Error::Config(
            "3-D peak list needs a slab filter (center and halfwidth)".into(),
        ));
    }
    if !has_z && slab.is_some() {
        return Err(Error::Config("slab filter given but peak list has no z column".into()));
    }

    let mut out = Vec::new();
    for (ln, line) in lines {
        let line = line.trim().trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let want = if has_z { 3 } else { 2 };
        if cells.len() != want {
            return Err(Error::parse(
                origin,
                ln + 1,
                cells.len(),
                format!("expected {want} columns"),
            ));
        }
        let x: u32 = cells[0]
            .parse()
            .map_err(|_| Error::parse(origin, ln + 1, 1, format!("bad x: {:?}", cells[0])))?;
        let y: u32 = cells[1]
            .parse()
            .map_err(|_| Error::parse(origin, ln + 1, 2, format!("bad y: {:?}", cells[1])))?;
        if has_z {
            let z: f64 = cells[2]
                .parse()
                .map_err(|_| Error::parse(origin, ln + 1, 3, format!("bad z: {:?}", cells[2])))?;
            let s = slab.unwrap();
            if (z - s.center).abs() > s.halfwidth {
                continue;
            }
        }
        out.push((x, y));
    }
    Ok(out)
}

/// Convert a parsed peak list to a binary field on `grid`. Duplicate
/// coordinates collapse; out-of-range coordinates are an error.
pub fn peak_field_from_list(grid: &LatticeGrid, peaks: &[(u32, u32)]) -> Result<PeakField> {
    let mut field = PeakField::zeros(*grid);
    for &(x, y) in peaks {
        if (y as usize) >= grid.n1() || (x as usize) >= grid.n2() {
            return Err(Error::Domain(format!(
                "peak ({x}, {y}) outside the {}x{} lattice",
                grid.n1(),
                grid.n2()
            )));
        }
        field.y[grid.index(y as usize, x as usize)] = 1;
    }
    Ok(field)
}

pub fn read_peak_list(path: &Path, slab: Option<SlabFilter>) -> Result<Vec<(u32, u32)>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_peak_list(&bytes, slab, &path.display().to_string())
}
