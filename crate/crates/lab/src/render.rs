//! Row-parallel grid evaluation. Rows are computed independently and
//! assembled by index, so results do not depend on the worker count.

use henon_lab_core::classify::classify_row;
use henon_lab_core::currents::sample_green_row;
use henon_lab_core::{Classification, GeneratorSet, GreenParams, Result, Sign, SliceGrid, SliceSpec};
use rayon::prelude::*;

pub fn thread_pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Maps every row through `f` in parallel and concatenates in row order.
pub fn par_rows<T: Send>(ny: usize, f: impl Fn(usize) -> Result<Vec<T>> + Sync) -> Result<Vec<T>> {
    let rows: Vec<Vec<T>> = (0..ny).into_par_iter().map(&f).collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn green_grid(gs: &GeneratorSet, spec: &SliceSpec, sign: Sign, params: &GreenParams) -> Result<SliceGrid> {
    let all = par_rows(spec.ny, |row| sample_green_row(gs, spec, sign, params, row))?;
    SliceGrid::from_estimates(*spec, &all)
}

pub fn classification_grid(gs: &GeneratorSet, spec: &SliceSpec, sign: Sign, depth: u32) -> Result<Vec<Classification>> {
    par_rows(spec.ny, |row| classify_row(gs, spec, sign, depth, row))
}
