use std::fmt::Write as _;
use std::path::Path;

use crate::conservation::ConservationReport;
use crate::error::{MimeticError, Result};

/// Scientific notation with six significant digits and a two-digit signed exponent.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    let s = format!("{x:.5E}");
    let (mant, exp) = s.split_once('E').expect("exponent");
    let e: i32 = exp.parse().expect("exponent digits");
    format!("{mant}E{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

pub fn diagnostics_csv(reports: &[ConservationReport], comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    s.push_str("t,energy,energy_rate,mass,gauss_residual\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            sci(r.t),
            sci(r.energy),
            sci(r.energy_rate),
            sci(r.mass),
            sci(r.gauss_residual)
        );
    }
    s
}

/// Legacy ASCII structured-grid file with point data.
pub fn structured_grid_text(dims: &[usize; 3], points: &[[f64; 3]], fields: &[(&str, &[f64])]) -> Result<String> {
    let n = dims.iter().product::<usize>();
    if points.len() != n {
        return Err(MimeticError::ShapeMismatch { expected: n, found: points.len(), what: "grid points" });
    }
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nmimetic-curv field snapshot\nASCII\nDATASET STRUCTURED_GRID\n");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    let _ = writeln!(s, "POINTS {n} double");
    for p in points {
        let _ = writeln!(s, "{:.10e} {:.10e} {:.10e}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    for (name, values) in fields {
        if values.len() != n {
            return Err(MimeticError::ShapeMismatch { expected: n, found: values.len(), what: "field values" });
        }
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values.iter() {
            let _ = writeln!(s, "{v:.10e}");
        }
    }
    Ok(s)
}

pub fn write_structured_grid(path: &Path, dims: &[usize], points: &[[f64; 3]], fields: &[(&str, &[f64])]) -> Result<()> {
    let mut d = [1usize; 3];
    d[..dims.len()].copy_from_slice(dims);
    std::fs::write(path, structured_grid_text(&d, points, fields)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format() {
        assert_eq!(sci(4.9121e-6), "4.91210E-06");
        assert_eq!(sci(-123456.0), "-1.23456E+05");
        assert_eq!(sci(0.0), "0.00000E+00");
        assert_eq!(sci(1e-300), "1.00000E-300");
    }

    #[test]
    fn vtk_header_and_counts() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let s = structured_grid_text(&[2, 1, 1], &pts, &[("p", &[1.0, 2.0])]).unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0"));
        assert!(s.contains("DIMENSIONS 2 1 1"));
        assert!(s.contains("POINT_DATA 2"));
        assert!(structured_grid_text(&[3, 1, 1], &pts, &[]).is_err());
    }
}
