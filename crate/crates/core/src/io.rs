//! Initial-condition files, snapshot CSV and the binary state checkpoint.
//!
//! Checkpoint layout, all little-endian:
//!
//! | bytes        | content               |
//! |--------------|-----------------------|
//! | 4            | magic `GCH1`          |
//! | 8            | `n` as `u64`          |
//! | 8            | `L` as `f64`          |
//! | 8            | `t` as `f64`          |
//! | 8·n          | samples as `f64`      |

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::{interpolate_onto, make_grid, Field, Grid};
use crate::integrator::Trajectory;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"GCH1";

/// Parses two whitespace-separated columns `x value`; `#` starts a comment.
pub fn parse_initial_condition(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line: i + 1, message: format!("not a finite number: {s:?}") })
        };
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 2 columns, found {}", cols.len()),
            });
        }
        xs.push(parse(cols[0])?);
        vs.push(parse(cols[1])?);
    }
    if xs.is_empty() {
        return Err(Error::Parse { line: 0, message: "no data rows".into() });
    }
    Ok((xs, vs))
}

/// Reads an initial-condition file and interpolates it onto `grid`.
pub fn load_initial_condition(path: &std::path::Path, grid: &Grid) -> Result<Field> {
    let text = std::fs::read_to_string(path)?;
    let (xs, vs) = parse_initial_condition(&text)?;
    interpolate_onto(&xs, &vs, grid)
}

/// Long-format `t,x,u` rows for every snapshot, preceded by the header.
pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &Trajectory) -> Result<()> {
    writeln!(out, "t,x,u")?;
    let x = traj.grid().x();
    for (t, snap) in traj.times().iter().zip(traj.snapshots()) {
        for (xj, uj) in x.iter().zip(snap.values()) {
            writeln!(out, "{t},{xj},{uj}")?;
        }
    }
    Ok(())
}

pub fn write_checkpoint<W: Write>(out: &mut W, u: &Field, t: f64) -> Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(u.grid().n() as u64).to_le_bytes())?;
    out.write_all(&u.grid().half_width().to_le_bytes())?;
    out.write_all(&t.to_le_bytes())?;
    for v in u.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a checkpoint back into a field on a freshly built grid and its time.
pub fn read_checkpoint<R: Read>(input: &mut R) -> Result<(Field, f64)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Io(format!("bad checkpoint magic {magic:?}")));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let half_width = f64::from_le_bytes(word);
    input.read_exact(&mut word)?;
    let t = f64::from_le_bytes(word);
    let grid = make_grid(n, half_width)?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        input.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    Ok((Field::new(&grid, values)?, t))
}
