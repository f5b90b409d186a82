//! Configuration files: one JSON header line, then the coefficients of
//! `A^{(0,1)}` and `Φ^{(1,0)}` as little-endian `f64` pairs.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::flow::FlowState;
use crate::hitchin::Configuration;
use crate::surface::{Degree, LatticeForm, SurfaceGrid};

const MAGIC: &str = "hitchin-lab-configuration";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationHeader {
    pub format: String,
    pub version: u32,
    pub sides: usize,
    pub length: f64,
    pub rank: usize,
    pub iteration: u64,
    pub flow_step: f64,
    pub seed: u64,
}

/// Writes `c` with the flow state needed to resume a run bit-exactly.
pub fn write_configuration(out: &mut impl Write, c: &Configuration, state: FlowState, seed: u64) -> Result<()> {
    let g = c.grid();
    let header = ConfigurationHeader {
        format: MAGIC.into(),
        version: 1,
        sides: g.sides(),
        length: g.length(),
        rank: c.rank(),
        iteration: state.iteration,
        flow_step: state.step,
        seed,
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for z in c.a01().coeffs().iter().chain(c.phi10().coeffs()) {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_configuration(input: impl Read) -> Result<(Configuration, FlowState, ConfigurationHeader)> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: ConfigurationHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| LabError::Format(format!("configuration header: {e}")))?;
    if header.format != MAGIC || header.version != 1 {
        return Err(LabError::Format(format!("unsupported configuration format {} v{}", header.format, header.version)));
    }
    let grid = SurfaceGrid::torus(header.sides, header.length)?;
    let count = grid.site_count() * header.rank * header.rank;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != 2 * count * 16 {
        return Err(LabError::Format(format!(
            "configuration payload has {} bytes, expected {}",
            payload.len(),
            2 * count * 16
        )));
    }
    let mut values = payload.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
    let mut take = || -> Vec<C> { (0..count).map(|_| C::new(values.next().unwrap(), values.next().unwrap())).collect() };
    let a01 = LatticeForm::from_coeffs(grid, Degree::ZeroOne, header.rank, take())?;
    let phi10 = LatticeForm::from_coeffs(grid, Degree::OneZero, header.rank, take())?;
    let state = FlowState { iteration: header.iteration, step: header.flow_step };
    Ok((Configuration::new(a01, phi10)?, state, header))
}

pub fn save_configuration(path: &Path, c: &Configuration, state: FlowState, seed: u64) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_configuration(&mut f, c, state, seed)?;
    f.flush()?;
    Ok(())
}

pub fn load_configuration(path: &Path) -> Result<(Configuration, FlowState, ConfigurationHeader)> {
    read_configuration(std::fs::File::open(path)?)
}
