//! Plain-text output: CSV tables with pinned number formatting.

use std::fmt::Write as _;
use std::path::Path;

use crate::contour::{FourierContour, SpectralGrid};
use crate::Result;

/// Reals are written with 17 significant digits in scientific notation,
/// which round-trips every `f64` and does not depend on locale.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_reals(&mut self, row: &[f64]) {
        self.push(row.iter().copied().map(fmt_real).collect());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Boundary samples `theta,x,y` on the grid nodes.
pub fn boundary_table(c: &FourierContour, grid: &SpectralGrid) -> CsvTable {
    let mut t = CsvTable::new(["theta", "x", "y"]);
    for i in 0..grid.len() {
        let z = c.eval(grid.theta(i));
        t.push_reals(&[grid.theta(i), z.re, z.im]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0] {
            let s = fmt_real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_real(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn table_layout() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push_reals(&[1.0, 2.0]);
        t.push(vec!["3".into(), "x".into()]);
        assert_eq!(t.render(), "a,b\n1.0000000000000000e0,2.0000000000000000e0\n3,x\n");
    }

    #[test]
    fn circle_boundary_rows() {
        let g = SpectralGrid::new(8).unwrap();
        let c = FourierContour::circle(0.5, 1, 1).unwrap();
        let t = boundary_table(&c, &g);
        assert_eq!(t.rows.len(), 8);
        let y: f64 = t.rows[2][2].parse().unwrap();
        assert!((y - 0.5).abs() < 1e-15);
    }
}
