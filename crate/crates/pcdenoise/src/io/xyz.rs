//! Whitespace-separated `x y z` lines; `#` starts a comment.

use std::io::{BufRead, Write};

use pcdenoise_core::{Point3, PointCloud};

use super::{next_data_line, FormatError};

pub fn read(mut reader: impl BufRead) -> Result<PointCloud, FormatError> {
    let mut points = Vec::new();
    let mut line = String::new();
    let mut lineno = 0;
    while next_data_line(&mut reader, &mut line, &mut lineno)? {
        let mut c = [0.0; 3];
        let mut tok = line.split_whitespace();
        for v in &mut c {
            *v = tok
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| FormatError::parse(lineno, format!("expected 'x y z', got '{line}'")))?;
        }
        points.push(Point3::from_array(c));
    }
    Ok(PointCloud::new(points))
}

/// Writes with shortest round-trip formatting, so reading back is exact.
pub fn write(mut w: impl Write, points: &[Point3]) -> std::io::Result<()> {
    for p in points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}
