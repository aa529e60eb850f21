//! Binary dump of a [`DpSolution`]: magic `DPV1`, then little-endian
//! fields. Counts are `u32`, reals `f64`:
//!
//! ```text
//! magic | n_state_axes | (len, nodes..)* | n_control_axes | (len, nodes..)*
//!       | n_stages | values (n_stages+1 layers) | policy (n_stages layers, u32)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::grid::Grid;
use super::solver::DpSolution;
use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 4] = b"DPV1";

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("value cache: {e}"))
}

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::InvalidArgument("cache field too large".into()))?;
    w.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn put_f64s(w: &mut impl Write, vs: &[f64]) -> Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b).map_err(io_err)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

fn put_grid(w: &mut impl Write, g: &Grid) -> Result<()> {
    put_u32(w, g.dims())?;
    for a in g.axes() {
        put_u32(w, a.len())?;
        put_f64s(w, a)?;
    }
    Ok(())
}

fn get_grid(r: &mut impl Read) -> Result<Grid> {
    let dims = get_u32(r)? as usize;
    if dims == 0 || dims > super::MAX_DIMS {
        return Err(Error::Parse(format!("value cache: bad axis count {dims}")));
    }
    let mut axes = Vec::with_capacity(dims);
    for _ in 0..dims {
        let n = get_u32(r)? as usize;
        axes.push(get_f64s(r, n)?);
    }
    Grid::new(axes).map_err(|e| Error::Parse(format!("value cache: {e}")))
}

pub fn write_solution(sol: &DpSolution, mut w: impl Write) -> Result<()> {
    w.write_all(CACHE_MAGIC).map_err(io_err)?;
    put_grid(&mut w, &sol.state_grid)?;
    put_grid(&mut w, &sol.control_grid)?;
    put_u32(&mut w, sol.stages())?;
    for layer in &sol.values {
        put_f64s(&mut w, layer)?;
    }
    for layer in &sol.policy {
        for p in layer {
            w.write_all(&p.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn read_solution(mut r: impl Read) -> Result<DpSolution> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Parse("value cache: bad magic".into()));
    }
    let state_grid = get_grid(&mut r)?;
    let control_grid = get_grid(&mut r)?;
    let stages = get_u32(&mut r)? as usize;
    let n = state_grid.len();
    let mut values = Vec::with_capacity(stages + 1);
    for _ in 0..=stages {
        values.push(get_f64s(&mut r, n)?);
    }
    let mut policy = Vec::with_capacity(stages);
    let mut b = [0u8; 4];
    for _ in 0..stages {
        let mut layer = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b).map_err(io_err)?;
            layer.push(u32::from_le_bytes(b));
        }
        policy.push(layer);
    }
    Ok(DpSolution { state_grid, control_grid, values, policy })
}

pub fn save_solution(sol: &DpSolution, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_solution(sol, BufWriter::new(f))
}

pub fn load_solution(path: impl AsRef<Path>) -> Result<DpSolution> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_solution(BufReader::new(f))
}
