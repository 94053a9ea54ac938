//! Binary cache of assembled forms and eigenpairs.
//!
//! Layout (all little endian): magic `SGFCACHE`, `u32` version, `u32` kind
//! (1 = form, 2 = eigenpair), `f64` s, `f64` x_left, `f64` x_right,
//! `f64` c_gagliardo, `u64` n, `u64` mask hash (0 for forms), then the payload
//! as `f64`: the row-major `n × n` matrix for a form; `lambda`,
//! `residual_norm`, `iterations`, `converged` and the `n` values of `phi` for
//! an eigenpair. Files are named `<kind>-<key>.bin` with `key` the FNV-1a hash
//! of the header.

use std::path::{Path, PathBuf};

use super::{assemble_form, EigenResult, StiffnessForm};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::io::write_atomic;
use crate::params::FracParams;
use crate::scalar::Real;

const MAGIC: &[u8; 8] = b"SGFCACHE";
const VERSION: u32 = 1;
const KIND_FORM: u32 = 1;
const KIND_EIGEN: u32 = 2;
const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 4 + 8 + 8;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

pub fn mask_hash(mask: &[bool]) -> u64 {
    let bytes: Vec<u8> = mask.iter().map(|&m| m as u8).collect();
    fnv1a(&bytes) | 1
}

fn header<T: Real>(kind: u32, grid: &Grid1D<T>, params: &FracParams<T>, mask: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&kind.to_le_bytes());
    for v in [params.s().as_f64(), grid.x_left().as_f64(), grid.x_right().as_f64(), params.c_gagliardo().as_f64()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    out.extend_from_slice(&mask.to_le_bytes());
    out
}

fn path_for(dir: &Path, kind: u32, header: &[u8]) -> PathBuf {
    let name = if kind == KIND_FORM { "form" } else { "eigen" };
    dir.join(format!("{name}-{:016x}.bin", fnv1a(header)))
}

fn read_payload(path: &Path, expected_header: &[u8]) -> Result<Option<Vec<f64>>> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    if bytes.len() < HEADER_LEN || &bytes[..HEADER_LEN] != expected_header {
        return Err(Error::format(path, "cache header does not match the requested key"));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() % 8 != 0 {
        return Err(Error::format(path, "truncated cache payload"));
    }
    Ok(Some(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()))
}

fn write_payload(path: &Path, header: &[u8], values: impl Iterator<Item = f64>) -> Result<()> {
    let mut bytes = header.to_vec();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &bytes)
}

/// Path of the cached form for this key.
pub fn form_path<T: Real>(dir: &Path, grid: &Grid1D<T>, params: &FracParams<T>) -> PathBuf {
    let h = header(KIND_FORM, grid, params, 0);
    path_for(dir, KIND_FORM, &h)
}

pub fn store_form<T: Real>(dir: &Path, form: &StiffnessForm<T>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let h = header(KIND_FORM, form.grid(), form.params(), 0);
    let path = path_for(dir, KIND_FORM, &h);
    write_payload(&path, &h, form.matrix().iter().map(|v| v.as_f64()))?;
    Ok(path)
}

pub fn load_form<T: Real>(dir: &Path, grid: &Grid1D<T>, params: &FracParams<T>) -> Result<Option<StiffnessForm<T>>> {
    let h = header(KIND_FORM, grid, params, 0);
    let path = path_for(dir, KIND_FORM, &h);
    let Some(values) = read_payload(&path, &h)? else {
        return Ok(None);
    };
    if values.len() != grid.len() * grid.len() {
        return Err(Error::format(&path, "matrix payload has the wrong size"));
    }
    StiffnessForm::from_parts(*grid, *params, values.into_iter().map(T::lit).collect()).map(Some)
}

/// Loads the form from `dir` when cached, otherwise assembles and stores it.
pub fn load_or_assemble<T: Real>(dir: Option<&Path>, grid: &Grid1D<T>, params: &FracParams<T>) -> Result<StiffnessForm<T>> {
    let Some(dir) = dir else {
        return Ok(assemble_form(grid, params));
    };
    if let Some(form) = load_form(dir, grid, params)? {
        return Ok(form);
    }
    let form = assemble_form(grid, params);
    store_form(dir, &form)?;
    Ok(form)
}

pub fn store_eigen<T: Real>(dir: &Path, form: &StiffnessForm<T>, mask: &[bool], eig: &EigenResult<T>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let h = header(KIND_EIGEN, form.grid(), form.params(), mask_hash(mask));
    let path = path_for(dir, KIND_EIGEN, &h);
    let head = [eig.lambda.as_f64(), eig.residual_norm.as_f64(), eig.iterations as f64, if eig.converged { 1.0 } else { 0.0 }];
    write_payload(&path, &h, head.into_iter().chain(eig.phi.iter().map(|v| v.as_f64())))?;
    Ok(path)
}

pub fn load_eigen<T: Real>(dir: &Path, form: &StiffnessForm<T>, mask: &[bool]) -> Result<Option<EigenResult<T>>> {
    let h = header(KIND_EIGEN, form.grid(), form.params(), mask_hash(mask));
    let path = path_for(dir, KIND_EIGEN, &h);
    let Some(values) = read_payload(&path, &h)? else {
        return Ok(None);
    };
    if values.len() != 4 + form.dim() {
        return Err(Error::format(&path, "eigenpair payload has the wrong size"));
    }
    Ok(Some(EigenResult {
        lambda: T::lit(values[0]),
        residual_norm: T::lit(values[1]),
        iterations: values[2] as usize,
        converged: values[3] != 0.0,
        phi: values[4..].iter().map(|&v| T::lit(v)).collect(),
    }))
}
