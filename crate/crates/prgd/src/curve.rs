//! δ-curve grids and the `d,delta_x,delta` CSV format.

use std::io::{self, BufRead, Write};

use anyhow::{anyhow, bail, Context, Result};
use prgd_core::accountant::CurveRow;

pub const HEADER: &str = "d,delta_x,delta";

/// Parses a comma-separated list of dimensions, e.g. `1,3,7`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let d: usize = t.parse().with_context(|| format!("bad dimension {t:?}"))?;
            if d == 0 {
                bail!("dimensions must be at least 1");
            }
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.is_empty() {
        bail!("empty dimension list");
    }
    Ok(dims)
}

/// Parses `start:stop:step` (inclusive of `stop` when it lies on the grid)
/// or a single value.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |t: &str| -> Result<f64> {
        let v: f64 = t.parse().with_context(|| format!("bad number {t:?} in range"))?;
        if !v.is_finite() {
            bail!("range values must be finite");
        }
        Ok(v)
    };
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) {
                bail!("range step must be positive");
            }
            if stop < start {
                bail!("range stop must not be below start");
            }
            let span = (stop - start) / step;
            let whole = span.round();
            let count = if (span - whole).abs() <= 1e-9 * whole.max(1.0) {
                whole as usize
            } else {
                span.floor() as usize
            };
            let mut grid: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
            if (span - whole).abs() <= 1e-9 * whole.max(1.0) {
                *grid.last_mut().unwrap() = stop;
            }
            Ok(grid)
        }
        _ => Err(anyhow!("range must be `start:stop:step` or a single value")),
    }
}

/// Formats `v` with 12 significant digits in plain decimal notation,
/// falling back to scientific notation outside `[1e-5, 1e12)`.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let mag = v.abs();
    if !(1e-5..1e12).contains(&mag) {
        return format!("{v:.11e}");
    }
    let exponent = mag.log10().floor() as i32;
    let decimals = (11 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn write_csv<W: Write>(mut w: W, rows: &[CurveRow]) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.d, sig12(r.delta_x), sig12(r.delta))?;
    }
    w.flush()
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<CurveRow>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty curve file"))??;
    if header != HEADER {
        bail!("unexpected header {header:?}");
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let line = line?;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                bail!("line {}: expected 3 fields", i + 2);
            }
            Ok(CurveRow {
                d: f[0].parse().with_context(|| format!("line {}", i + 2))?,
                delta_x: f[1].parse().with_context(|| format!("line {}", i + 2))?,
                delta: f[2].parse().with_context(|| format!("line {}", i + 2))?,
            })
        })
        .collect()
}
