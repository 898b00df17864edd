//! Landmark text files: one `id, x, y, z` record per line, `#` starts a comment line.
//! Coordinates are written with 9 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{RegError, Result};
use crate::grids::{Landmark, LandmarkSet};

const SIGNIFICANT_DIGITS: usize = 9;

/// Fixed-point text with `SIGNIFICANT_DIGITS` significant digits.
pub fn format_coordinate(v: f64) -> String {
    let v = v + 0.0; // folds -0.0
    if v == 0.0 {
        return format!("{:.*}", SIGNIFICANT_DIGITS - 1, 0.0);
    }
    // exponent after rounding, so 9.999999999 picks the decimals for 10
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn parse_landmarks(text: &str, path: &Path) -> Result<LandmarkSet> {
    let mut points = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| RegError::format(path, format!("line {}: {msg}", n + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let id: i64 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad id {:?}", fields[0])))?;
        let mut coord = [0.0; 3];
        for (c, s) in coord.iter_mut().zip(&fields[1..]) {
            *c = s
                .parse::<f64>()
                .map_err(|_| err(format!("bad coordinate {s:?}")))?;
            if !c.is_finite() {
                return Err(err(format!("non-finite coordinate {s:?}")));
            }
        }
        points.push(Landmark { id, coord });
    }
    LandmarkSet::new(points).map_err(|e| RegError::format(path, e.to_string()))
}

pub fn format_landmarks(set: &LandmarkSet) -> String {
    let mut out = String::from("# id, x, y, z\n");
    for p in set.points() {
        let [x, y, z] = p.coord.map(format_coordinate);
        let _ = writeln!(out, "{}, {x}, {y}, {z}", p.id);
    }
    out
}

pub fn read_landmarks(path: &Path) -> Result<LandmarkSet> {
    let text = fs::read_to_string(path).map_err(|e| RegError::io(path, e))?;
    parse_landmarks(&text, path)
}

pub fn write_landmarks(path: &Path, set: &LandmarkSet) -> Result<()> {
    fs::write(path, format_landmarks(set)).map_err(|e| RegError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_digits() {
        assert_eq!(format_coordinate(12.3456789123), "12.3456789");
        assert_eq!(format_coordinate(0.5), "0.500000000");
        assert_eq!(format_coordinate(-0.0), "0.00000000");
        assert_eq!(format_coordinate(9.9999999996), "10.0000000");
        assert_eq!(format_coordinate(1.0e-3), "0.00100000000");
        assert_eq!(format_coordinate(123456789012.4), "123456789012");
    }

    #[test]
    fn parses_comments_and_spacing() {
        let text = "# header\n\n 3 , 1.5, 2, -4e-1\n7,0,0,0\n";
        let set = parse_landmarks(text, Path::new("t")).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.points()[0].id, 3);
        assert_eq!(set.points()[0].coord, [1.5, 2.0, -0.4]);
    }

    #[test]
    fn rejects_bad_records() {
        let p = Path::new("t");
        assert!(parse_landmarks("1, 2, 3\n", p).is_err());
        assert!(parse_landmarks("a, 1, 2, 3\n", p).is_err());
        assert!(parse_landmarks("1, 1, 2, nan\n", p).is_err());
        assert!(parse_landmarks("1, 1, 2, 3\n1, 0, 0, 0\n", p).is_err());
    }
}
