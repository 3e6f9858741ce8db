//! Plain CSV lattice grids: comma-separated numeric rows, no header,
//! file row 1 = lattice row 1.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::PeakField;
use crate::grid::LatticeGrid;

/// Decimal with six significant digits; small magnitudes switch to
/// scientific notation so nothing rounds to zero.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        let digits_before = a.log10().floor() as i32 + 1;
        let decimals = (6 - digits_before).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Write a row-major grid as CSV with the given cell formatter.
pub fn write_grid_csv<F: Fn(f64) -> String>(
    path: &Path,
    grid: &LatticeGrid,
    data: &[f64],
    fmt: F,
) -> Result<()> {
    debug_assert_eq!(data.len(), grid.len());
    let mut out = String::new();
    for j in 0..grid.n1() {
        for k in 0..grid.n2() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&fmt(data[grid.index(j, k)]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse CSV bytes into `(rows, cols, values)`. Rectangularity and
/// finiteness are enforced; positions in errors are 1-based.
pub fn parse_grid_csv(bytes: &[u8], origin: &str) -> Result<(usize, usize, Vec<f64>)> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(origin, 0, 0, format!("not UTF-8: {e}")))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut this_cols = 0usize;
        for (ci, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(origin, ln + 1, ci + 1, format!("not a number: {:?}", cell.trim()))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(origin, ln + 1, ci + 1, "non-finite value"));
            }
            values.push(v);
            this_cols += 1;
        }
        match cols {
            None => cols = Some(this_cols),
            Some(c) if c != this_cols => {
                return Err(Error::parse(
                    origin,
                    ln + 1,
                    this_cols,
                    format!("ragged row: {this_cols} cells, expected {c}"),
                ));
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::parse(origin, 1, 1, "empty grid"))?;
    Ok((rows, cols, values))
}

/// Parse CSV bytes as a binary 0/1 grid.
pub fn parse_binary_grid(bytes: &[u8], origin: &str) -> Result<PeakField> {
    let (rows, cols, values) = parse_grid_csv(bytes, origin)?;
    let grid = LatticeGrid::new(rows, cols)?;
    let mut y = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        if *v == 0.0 {
            y.push(0u8);
        } else if *v == 1.0 {
            y.push(1u8);
        } else {
            return Err(Error::parse(
                origin,
                i / cols + 1,
                i % cols + 1,
                format!("binary grid cell is {v}, must be 0 or 1"),
            ));
        }
    }
    PeakField::new(grid, y)
}

pub fn read_grid_csv(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_grid_csv(&bytes, &path.display().to_string())
}

pub fn read_binary_grid(path: &Path) -> Result<PeakField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_binary_grid(&bytes, &path.display().to_string())
}

/// Two-column CSV with a header line, for traces and ACFs.
pub fn write_xy_csv<I>(path: &Path, header: (&str, &str), rows: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut out = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        out.push_str(&a);
        out.push(',');
        out.push_str(&b);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(0.5), "0.500000");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(0.0123456789), "0.0123457");
        assert_eq!(format_sig6(0.999999), "0.999999");
        // tiny values keep significance in scientific notation
        assert_eq!(format_sig6(1.234567e-7), "1.23457e-7");
        // round-trip is idempotent after one write
        for &x in &[0.3333333333f64, 1.0 / 7.0, 2.5e-9, 0.95] {
            let s1 = format_sig6(x);
            let v: f64 = s1.parse().unwrap();
            assert_eq!(format_sig6(v), s1);
            assert!((v - x).abs() <= 1e-6 * x.abs().max(1e-4));
        }
    }

    #[test]
    fn parse_rejects_ragged_and_junk() {
        assert!(parse_grid_csv(b"1,2\n3\n", "t").is_err());
        assert!(parse_grid_csv(b"1,x\n", "t").is_err());
        assert!(parse_grid_csv(b"", "t").is_err());
        assert!(parse_grid_csv(b"1,inf\n", "t").is_err());
        let (r, c, v) = parse_grid_csv(b"1,2\r\n3,4\n\n", "t").unwrap();
        assert_eq!((r, c), (2, 2));
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn parse_error_positions() {
        match parse_grid_csv(b"1,2,3\n4,bad,6\n", "t") {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!((line, col), (2, 2));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn binary_grid_validates_cells() {
        let five = b"0,1,0,1,0\n1,0,1,0,1\n0,0,0,0,0\n1,1,1,1,1\n0,1,0,1,0\n";
        let f = parse_binary_grid(five, "t").unwrap();
        assert_eq!(f.grid.n1(), 5);
        assert_eq!(f.count_ones(), 12);
        let bad = b"0,1,0,1,0\n1,0,2,0,1\n0,0,0,0,0\n1,1,1,1,1\n0,1,0,1,0\n";
        match parse_binary_grid(bad, "t") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (2, 3)),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn write_read_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let grid = LatticeGrid::new(5, 7).unwrap();
        let data: Vec<f64> = (0..grid.len()).map(|i| i as f64 / 34.0).collect();
        write_grid_csv(&path, &grid, &data, format_sig6).unwrap();
        let (r, c, v) = read_grid_csv(&path).unwrap();
        assert_eq!((r, c), (5, 7));
        for (a, b) in v.iter().zip(&data) {
            assert!((a - b).abs() < 1e-6);
        }
        // second write of the parsed values is byte-identical
        let path2 = dir.path().join("g2.csv");
        write_grid_csv(&path2, &grid, &v, format_sig6).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }
}
