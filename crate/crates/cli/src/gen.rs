//! The `gen` command.

use std::path::Path;

use pmm_core::problems::{gen_lmi, gen_socp, uniform_cones, Instance};

use crate::output::write_atomic;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Socp,
    Lmi,
}

#[derive(Debug, Clone, Copy)]
pub struct Dims {
    pub n: usize,
    pub p: usize,
    pub cones: usize,
    pub q: usize,
    pub k: usize,
}

pub fn generate(kind: Kind, seed: u64, dims: Dims) -> Result<Instance, CliError> {
    let usage = |e: pmm_core::problems::ProblemError| CliError::Usage(e.to_string());
    Ok(match kind {
        Kind::Socp => {
            let cones = uniform_cones(dims.n, dims.cones).map_err(usage)?;
            Instance::Socp(gen_socp(seed, dims.n, dims.p, &cones).map_err(usage)?)
        }
        Kind::Lmi => Instance::Lmi(gen_lmi(seed, dims.q, dims.k).map_err(usage)?),
    })
}

pub fn write_instance(inst: &Instance, out: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string(inst).map_err(|e| CliError::Io(e.to_string()))?;
    write_atomic(out, json.as_bytes())?;
    Ok(())
}
