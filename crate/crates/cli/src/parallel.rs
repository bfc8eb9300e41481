//! Parallel drivers over the core's independent work units.
//!
//! Work is split into units whose boundaries do not depend on the thread
//! count; partial results are collected in unit order and reduced
//! sequentially, so output is bit-identical for any pool size.

use diagdesign::ensembles::{
    block_count, construction_block, finish_construction, finish_moment, moment_block, EnsembleSpec, SampledMoment,
    SampledProbes,
};
use diagdesign::maps::{column_difference, MomentMap, UnitBasis, MOMENT_MATRIX_MAX_D};
use diagdesign::metrics::frame_potential_row;
use diagdesign::{Error, Result};
use rayon::prelude::*;

/// Run `f` on a pool with `threads` workers (0 = all cores).
pub fn with_threads<T: Send>(
    threads: usize,
    f: impl FnOnce() -> T + Send,
) -> std::result::Result<T, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

fn check_envelope(map: &MomentMap) -> Result<()> {
    let d = map.dim().d();
    if d > MOMENT_MATRIX_MAX_D {
        return Err(Error::SizeLimit {
            what: "moment matrix d",
            requested: d as u128,
            limit: MOMENT_MATRIX_MAX_D as u128,
        });
    }
    Ok(())
}

/// Largest entry difference between the superoperator matrices of two maps.
pub fn max_map_difference(a: &MomentMap, b: &MomentMap, basis: UnitBasis) -> Result<f64> {
    check_envelope(a)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim().d(),
            found: b.dim().d(),
        });
    }
    let n = a.dim().pair_dim() * a.dim().pair_dim();
    let cols: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|c| column_difference(a, b, basis, c))
        .collect::<Result<_>>()?;
    Ok(cols.into_iter().fold(0.0, f64::max))
}

/// Frame potential with rows summed in index order.
pub fn frame_potential(map: &MomentMap) -> Result<f64> {
    check_envelope(map)?;
    let rows: Vec<f64> = (0..map.dim().pair_dim())
        .into_par_iter()
        .map(|a| frame_potential_row(map, a))
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().sum())
}

pub fn ensemble_moment_mc(spec: &EnsembleSpec) -> Result<SampledMoment> {
    let blocks = (0..block_count(spec.samples))
        .into_par_iter()
        .map(|b| moment_block(spec, b))
        .collect::<Result<Vec<_>>>()?;
    finish_moment(spec, &blocks)
}

pub fn construction_twirl_mc(spec: &EnsembleSpec, probes: &[(usize, usize)]) -> Result<SampledProbes> {
    let blocks = (0..block_count(spec.samples))
        .into_par_iter()
        .map(|b| construction_block(spec, probes, b))
        .collect::<Result<Vec<_>>>()?;
    finish_construction(spec, probes, &blocks)
}
