//! CSV writers for the tabular outputs (vertex values, coefficients, Gram
//! matrices, decomposition diagnostics, piecewise-constant functions).

use crate::approx::PiecewiseConstantFn;
use crate::multiscale::Diagnostics;
use crate::harmonic::SymmetryIndex;
use crate::scalar::{C, Real};
use crate::trace::TraceCoefficients;
use crate::tree_function::to_f64;
use serde::Serialize;
use std::io::Write;

pub type CsvResult = std::result::Result<(), csv::Error>;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(true).from_writer(w)
}

/// Rows `N,K,re,im` for the generation-`N` vertex values.
pub fn write_vertex_values<W: Write, T: Real>(w: W, n: usize, values: &[C<T>]) -> CsvResult {
    let mut out = writer(w);
    out.write_record(["N", "K", "re", "im"])?;
    for (k, v) in values.iter().enumerate() {
        out.serialize((n, k, to_f64(v.re), to_f64(v.im)))?;
    }
    out.flush()?;
    Ok(())
}

/// Rows `z,nu,re,im`.
pub fn write_coefficients<W: Write, T: Real>(w: W, coeffs: &TraceCoefficients<T>) -> CsvResult {
    let mut out = writer(w);
    out.write_record(["z", "nu", "re", "im"])?;
    for (z, a) in &coeffs.entries {
        out.serialize((z.to_string(), z.nu(), to_f64(a.re), to_f64(a.im)))?;
    }
    out.flush()?;
    Ok(())
}

/// Rows `row,col,re,im` of a Gram matrix indexed by `zs`.
pub fn write_gram<W: Write, T: Real>(w: W, zs: &[SymmetryIndex], gram: &[Vec<C<T>>]) -> CsvResult {
    let mut out = writer(w);
    out.write_record(["row", "col", "re", "im"])?;
    for (a, row) in zs.iter().zip(gram) {
        for (b, v) in zs.iter().zip(row) {
            out.serialize((a.to_string(), b.to_string(), to_f64(v.re), to_f64(v.im)))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One row per generation.
pub fn write_diagnostics<W: Write>(w: W, diag: &Diagnostics) -> CsvResult {
    let mut out = writer(w);
    for g in &diag.per_generation {
        out.serialize(g)?;
    }
    out.flush()?;
    Ok(())
}

/// Rows `level,k,re,im`.
pub fn write_piecewise_constant<W: Write, T: Real>(w: W, f: &PiecewiseConstantFn<'_, T>) -> CsvResult {
    let mut out = writer(w);
    out.write_record(["level", "k", "re", "im"])?;
    for (k, v) in f.values().iter().enumerate() {
        out.serialize((f.level(), k, to_f64(v.re), to_f64(v.im)))?;
    }
    out.flush()?;
    Ok(())
}

/// Any sequence of serializable records with a header row.
pub fn write_rows<W: Write, R: Serialize>(w: W, rows: &[R]) -> CsvResult {
    let mut out = writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
